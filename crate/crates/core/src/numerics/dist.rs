//! Distribution kernels built on the error function.

use statrs::function::erf::{erf, erf_inv, erfc};

use crate::params::{DistributionKind, DistributionSpec};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[inline]
fn z(spec: &DistributionSpec, x: f64) -> f64 {
    (x - spec.mean) / (SQRT_2 * spec.stddev)
}

/// `erf(zb) - erf(za)` without cancellation in either tail.
pub fn erf_diff(za: f64, zb: f64) -> f64 {
    if za >= 0.0 {
        erfc(za) - erfc(zb)
    } else if zb <= 0.0 {
        erfc(-zb) - erfc(-za)
    } else {
        erf(zb) - erf(za)
    }
}

/// Normalizer of a truncated normal on `[lo, hi]` in erf units:
/// `erf(z(hi)) - erf(z(lo))`. For the unit interval this is
/// `erf((1-mu)/(sqrt2 sigma)) + erf(mu/(sqrt2 sigma))`.
pub fn sigma_normalizer(spec: &DistributionSpec) -> f64 {
    erf_diff(z(spec, spec.lo), z(spec, spec.hi))
}

/// Joint normalizer for the two content valuations, `Sigma1 * Sigma2 / 2`.
pub fn phi_normalizer(r1: &DistributionSpec, r2: &DistributionSpec) -> f64 {
    0.5 * sigma_normalizer(r1) * sigma_normalizer(r2)
}

/// Probability of `[a, b]` under the law, clamped to the support.
pub fn truncnorm_cdf_mass(spec: &DistributionSpec, a: f64, b: f64) -> f64 {
    let a = a.max(spec.lo);
    let b = b.min(spec.hi);
    if !(b > a) {
        return 0.0;
    }
    match spec.kind {
        DistributionKind::Uniform => (b - a) / (spec.hi - spec.lo),
        DistributionKind::TruncatedNormal => {
            let m = erf_diff(z(spec, a), z(spec, b)) / sigma_normalizer(spec);
            m.clamp(0.0, 1.0)
        }
    }
}

/// `P(X <= x)`.
pub fn cdf(spec: &DistributionSpec, x: f64) -> f64 {
    if x <= spec.lo {
        0.0
    } else if x >= spec.hi {
        1.0
    } else {
        truncnorm_cdf_mass(spec, spec.lo, x)
    }
}

/// `P(X >= x)`, computed directly so upper tails keep their precision.
pub fn survival(spec: &DistributionSpec, x: f64) -> f64 {
    if x <= spec.lo {
        1.0
    } else if x >= spec.hi {
        0.0
    } else {
        truncnorm_cdf_mass(spec, x, spec.hi)
    }
}

/// Density on the support.
pub fn pdf(spec: &DistributionSpec, x: f64) -> f64 {
    if x < spec.lo || x > spec.hi {
        return 0.0;
    }
    match spec.kind {
        DistributionKind::Uniform => 1.0 / (spec.hi - spec.lo),
        DistributionKind::TruncatedNormal => {
            let t = z(spec, x);
            let raw = (-t * t).exp() / (std::f64::consts::PI.sqrt() * SQRT_2 * spec.stddev);
            2.0 * raw / sigma_normalizer(spec)
        }
    }
}

/// CDF formula continued above `hi` without clamping (linear for the
/// uniform law). Lets a threshold map keep its algebraic shape past the
/// support so interior fixed points are visible as crossings.
pub fn extended_cdf(spec: &DistributionSpec, x: f64) -> f64 {
    if x <= spec.lo {
        return 0.0;
    }
    match spec.kind {
        DistributionKind::Uniform => (x - spec.lo) / (spec.hi - spec.lo),
        DistributionKind::TruncatedNormal => {
            if x.is_infinite() {
                return erf_diff(z(spec, spec.lo), f64::INFINITY) / sigma_normalizer(spec);
            }
            erf_diff(z(spec, spec.lo), z(spec, x)) / sigma_normalizer(spec)
        }
    }
}

/// Inverse CDF for `u` in `[0, 1]`.
pub fn quantile(spec: &DistributionSpec, u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    match spec.kind {
        DistributionKind::Uniform => spec.lo + u * (spec.hi - spec.lo),
        DistributionKind::TruncatedNormal => {
            let e_lo = erf(z(spec, spec.lo));
            let e = e_lo + u * sigma_normalizer(spec);
            let x = spec.mean + SQRT_2 * spec.stddev * erf_inv(e.clamp(-1.0, 1.0));
            x.clamp(spec.lo, spec.hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(mu: f64, sd: f64) -> DistributionSpec {
        DistributionSpec::truncated_normal(0.0, 1.0, mu, sd)
    }

    #[test]
    fn uniform_mass_is_length() {
        let u = DistributionSpec::uniform(0.0, 1.0);
        assert!((truncnorm_cdf_mass(&u, 0.2, 0.7) - 0.5).abs() < 1e-15);
        assert_eq!(truncnorm_cdf_mass(&u, -1.0, 2.0), 1.0);
    }

    #[test]
    fn truncnorm_full_and_half() {
        let s = n(0.5, 0.2);
        assert!((truncnorm_cdf_mass(&s, 0.0, 1.0) - 1.0).abs() < 1e-12);
        assert!((truncnorm_cdf_mass(&s, 0.0, 0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn full_mass_is_one_for_skewed_specs() {
        for &(mu, sd) in &[(0.05, 0.01), (0.95, 0.02), (0.3, 3.0), (0.7, 0.1)] {
            let s = n(mu, sd);
            assert!((truncnorm_cdf_mass(&s, 0.0, 1.0) - 1.0).abs() < 1e-12);
            assert!(sigma_normalizer(&s) > 0.0);
        }
    }

    #[test]
    fn sigma_matches_two_term_form() {
        let s = n(0.3, 0.2);
        let t = (2.0f64).sqrt() * 0.2;
        let direct = erf(0.7 / t) + erf(0.3 / t);
        assert!((sigma_normalizer(&s) - direct).abs() < 1e-14);
    }

    #[test]
    fn tail_mass_keeps_precision() {
        // 0.5 + 5 sd: the right tail is ~2.9e-7 of the mass; naive erf subtraction
        // would lose about half the digits.
        let s = n(0.5, 0.1);
        let m = truncnorm_cdf_mass(&s, 0.99, 1.0);
        let naive_ok = m > 0.0 && m < 1e-6;
        assert!(naive_ok);
        // midpoint-rule oracle on the density
        let k = 200_000;
        let h = 0.01 / k as f64;
        let mut acc = 0.0;
        for i in 0..k {
            acc += pdf(&s, 0.99 + (i as f64 + 0.5) * h) * h;
        }
        assert!((m - acc).abs() / acc < 1e-8, "{m} vs {acc}");
    }

    #[test]
    fn quantile_inverts_cdf() {
        for s in [n(0.5, 0.2), n(0.3, 0.1), DistributionSpec::uniform(0.0, 1.5)] {
            for i in 1..20 {
                let u = i as f64 / 20.0;
                let x = quantile(&s, u);
                assert!((cdf(&s, x) - u).abs() < 1e-9, "{u} -> {x}");
            }
        }
    }

    #[test]
    fn pdf_integrates_to_one() {
        let s = n(0.7, 0.3);
        let k = 100_000;
        let acc: f64 = (0..k).map(|i| pdf(&s, (i as f64 + 0.5) / k as f64) / k as f64).sum();
        assert!((acc - 1.0).abs() < 1e-8);
    }

    #[test]
    fn extended_cdf_continues_past_support() {
        let u = DistributionSpec::uniform(0.0, 1.0);
        assert_eq!(extended_cdf(&u, 2.5), 2.5);
        let s = n(0.5, 0.2);
        assert!(extended_cdf(&s, 2.0) > 1.0);
        assert!((extended_cdf(&s, 0.6) - cdf(&s, 0.6)).abs() < 1e-15);
    }
}
