//! Exact demand masses for the content model.
//!
//! For a fixed service valuation `u`, the device valuations that pick each
//! option form an interval whose ends are linear in `u`. The masses are
//! integrals over `u` of interval probabilities; splitting `u` at every
//! crossing of those lines leaves pieces on which the integrand is smooth
//! (linear when both laws are uniform, so the trapezoid rule is exact).

use crate::error::NumericsError;
use crate::numerics::{
    fixed_points_piecewise_quadratic, integrate_1d, pdf, scan_fixed_points, truncnorm_cdf_mass, FixedPointResult,
};
use crate::params::ContentParams;

/// Offered menu: the device alone is optional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Menu {
    pub p1: Option<f64>,
    pub p12: f64,
}

#[derive(Clone, Copy, Debug)]
struct Line {
    k: f64,
    m: f64,
}

impl Line {
    fn at(&self, u: f64) -> f64 {
        self.k + self.m * u
    }
}

/// Intersection abscissa of two lines, if they are not parallel.
fn cross(a: Line, b: Line) -> Option<f64> {
    let dm = a.m - b.m;
    (dm != 0.0).then(|| (b.k - a.k) / dm)
}

struct Geometry {
    /// Bundle participation: `R1 >= p12/omega - q - u`.
    part: Line,
    /// Device/bundle indifference in `R1` (only for `omega != 1`).
    indiff: Option<Line>,
    omega: f64,
    menu: Menu,
    q: f64,
}

impl Geometry {
    fn new(params: &ContentParams, menu: Menu, q: f64) -> Self {
        let w = params.omega;
        let part = Line { k: menu.p12 / w - q, m: -1.0 };
        let indiff = match menu.p1 {
            Some(p1) if w != 1.0 => {
                let s = menu.p12 - p1;
                Some(Line { k: (s - w * q) / (w - 1.0), m: -w / (w - 1.0) })
            }
            _ => None,
        };
        Geometry { part, indiff, omega: w, menu, q }
    }

    /// Every abscissa where the integrand can change form, at this `q`.
    fn kinks(&self, params: &ContentParams) -> Vec<f64> {
        let mut lines = vec![self.part, Line { k: params.r1_dist.lo, m: 0.0 }, Line { k: params.r1_dist.hi, m: 0.0 }];
        if let Some(p1) = self.menu.p1 {
            lines.push(Line { k: p1, m: 0.0 });
        }
        if let Some(b) = self.indiff {
            lines.push(b);
        }
        let mut out = Vec::new();
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                if let Some(u) = cross(lines[i], lines[j]) {
                    out.push(u);
                }
            }
        }
        if let (Some(p1), 1.0) = (self.menu.p1, self.omega) {
            out.push(self.menu.p12 - p1 - self.q);
        }
        out
    }

    /// With `omega == 1` the device/bundle choice depends on `u` alone.
    fn prefers_bundle_flat(&self, u: f64) -> bool {
        match self.menu.p1 {
            Some(p1) if self.omega == 1.0 => u + self.q >= self.menu.p12 - p1,
            _ => true,
        }
    }

    /// Device-valuation intervals (bundle, device) at service value `u`.
    /// `flat` fixes the `omega == 1` indicator for the whole piece.
    fn intervals(&self, u: f64, flat: bool) -> ((f64, f64), (f64, f64)) {
        let mut b_lo = self.part.at(u);
        let mut b_hi = f64::INFINITY;
        let mut d_lo = self.menu.p1.unwrap_or(f64::INFINITY);
        let mut d_hi = f64::INFINITY;
        if self.menu.p1.is_some() {
            if let Some(ind) = self.indiff {
                let t = ind.at(u);
                if self.omega > 1.0 {
                    // high device valuations see the bundle as superadditive
                    b_lo = b_lo.max(t);
                    d_hi = t;
                } else {
                    b_hi = t;
                    d_lo = d_lo.max(t);
                }
            } else if flat {
                d_hi = f64::NEG_INFINITY;
            } else {
                b_hi = f64::NEG_INFINITY;
            }
        }
        ((b_lo, b_hi), (d_lo, d_hi))
    }
}

/// `(d1, d12)` at externality value `q = lambda * D^gamma`.
pub(crate) fn masses(params: &ContentParams, menu: Menu, q: f64, tol: f64) -> Result<(f64, f64), NumericsError> {
    let geo = Geometry::new(params, menu, q);
    let (lo2, hi2) = (params.r2_dist.lo, params.r2_dist.hi);
    let mut cuts: Vec<f64> = geo.kinks(params).into_iter().filter(|&u| u > lo2 && u < hi2).collect();
    cuts.push(lo2);
    cuts.push(hi2);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let r1 = &params.r1_dist;
    let exact = params.is_uniform();
    let (mut d1, mut d12) = (0.0, 0.0);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let flat = geo.prefers_bundle_flat(0.5 * (a + b));
        let point = |u: f64| {
            let ((bl, bh), (dl, dh)) = geo.intervals(u, flat);
            let f2 = pdf(&params.r2_dist, u);
            (f2 * truncnorm_cdf_mass(r1, bl, bh), f2 * truncnorm_cdf_mass(r1, dl, dh))
        };
        if exact {
            let (ba, da) = point(a);
            let (bb, db) = point(b);
            d12 += 0.5 * (ba + bb) * (b - a);
            d1 += 0.5 * (da + db) * (b - a);
        } else {
            d12 += integrate_1d(|u| point(u).0, a, b, tol)?;
            if menu.p1.is_some() {
                d1 += integrate_1d(|u| point(u).1, a, b, tol)?;
            }
        }
    }
    Ok((d1.clamp(0.0, 1.0), d12.clamp(0.0, 1.0)))
}

/// Externality value produced by `d` contributors.
pub(crate) fn externality(params: &ContentParams, d: f64) -> f64 {
    if d <= 0.0 {
        0.0
    } else if params.gamma == 1.0 {
        params.lambda * d
    } else {
        params.lambda * d.powf(params.gamma)
    }
}

/// Abscissas in `D` where the bundle-demand map switches quadratic piece.
/// All kinks move as `kappa - q`, so the pieces end where a kink crosses
/// either end of the service-valuation support.
fn demand_breaks(params: &ContentParams, menu: Menu) -> Vec<f64> {
    let lam = params.lambda;
    let geo = Geometry::new(params, menu, 0.0);
    let (lo2, hi2) = (params.r2_dist.lo, params.r2_dist.hi);
    let mut out = Vec::new();
    for k in geo.kinks(params) {
        for end in [lo2, hi2] {
            out.push((k - end) / lam);
        }
    }
    out
}

/// All fixed points of `D -> d12(lambda D^gamma)` on `[0, 1]`.
pub(crate) fn bundle_fixed_points(
    params: &ContentParams,
    menu: Menu,
    grid: usize,
    tol: f64,
) -> Result<FixedPointResult, NumericsError> {
    let mut err = None;
    let mut g = |d: f64| match masses(params, menu, externality(params, d), tol) {
        Ok((_, d12)) => d12,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    if params.lambda == 0.0 {
        // no feedback: one equilibrium
        let v = g(0.0);
        return match err {
            Some(e) => Err(e),
            None => Ok(FixedPointResult { value: v, residual: 0.0, iterations: 1, all_roots: vec![v] }),
        };
    }
    let res = if params.has_regimes() {
        let breaks = demand_breaks(params, menu);
        fixed_points_piecewise_quadratic(&mut g, &breaks, 0.0, 1.0)
    } else {
        scan_fixed_points(&mut g, 0.0, 1.0, grid)
    };
    match err {
        Some(e) => Err(e),
        None => Ok(res),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DistributionSpec;

    /// Brute-force midpoint count over a fine (R1, R2) lattice.
    fn lattice_masses(params: &ContentParams, menu: Menu, q: f64, n: usize) -> (f64, f64) {
        let (mut d1, mut d12) = (0.0, 0.0);
        let tb = params.theta_bar;
        for i in 0..n {
            let r1 = (i as f64 + 0.5) / n as f64 * tb;
            for j in 0..n {
                let r2 = (j as f64 + 0.5) / n as f64;
                let u12 = params.omega * (r1 + r2 + q) - menu.p12;
                let u1 = menu.p1.map(|p| r1 - p).unwrap_or(f64::NEG_INFINITY);
                if u12 >= 0.0 && u12 >= u1 {
                    d12 += 1.0;
                } else if u1 >= 0.0 {
                    d1 += 1.0;
                }
            }
        }
        let w = (n * n) as f64;
        (d1 / w, d12 / w)
    }

    /// Piecewise closed form for uniform laws and omega = 1.
    fn closed_form(p1: f64, p12: f64, q: f64, tb: f64) -> (f64, f64) {
        let c = |y: f64| {
            if y <= 0.0 {
                0.0
            } else if y <= tb {
                0.5 * y * y
            } else {
                0.5 * tb * tb + tb * (y - tb)
            }
        };
        let x = p12 - q;
        let l = (p12 - p1 - q).clamp(0.0, 1.0);
        let d12 = (1.0 - l) - (c(x - l) - c(x - 1.0)) / tb;
        let d1 = (tb - p1).max(0.0) / tb * l;
        (d1, d12)
    }

    #[test]
    fn worked_low_regime_point() {
        let p = ContentParams::new(0.1, 0.1, 0.0, 1.5);
        let (d1, d12) = masses(&p, Menu { p1: Some(0.5), p12: 1.0 }, 0.0, 1e-10).unwrap();
        assert!((d12 - (0.5 - 0.125 / 1.5)).abs() < 1e-15, "{d12}");
        assert!((d1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn matches_closed_form_across_prices() {
        let p = ContentParams::new(0.1, 0.1, 0.7, 1.5);
        for &(p1, p12, q) in &[(0.5, 1.2, 0.3), (0.2, 0.4, 0.1), (1.4, 2.6, 0.05), (0.9, 1.1, 0.6), (0.0, 2.0, 0.0)] {
            let (d1, d12) = masses(&p, Menu { p1: Some(p1), p12 }, q, 1e-10).unwrap();
            let (e1, e12) = closed_form(p1, p12, q, 1.5);
            assert!((d1 - e1).abs() < 1e-14 && (d12 - e12).abs() < 1e-14, "{p1} {p12} {q}");
        }
    }

    #[test]
    fn matches_lattice_count_for_correlated_valuations() {
        for &w in &[0.8, 0.9, 1.1, 1.3] {
            let p = ContentParams::new(0.3, 0.3, 0.95, 1.5).with_omega(w);
            let menu = Menu { p1: Some(0.5), p12: 1.2 };
            let (d1, d12) = masses(&p, menu, 0.4, 1e-10).unwrap();
            let (l1, l12) = lattice_masses(&p, menu, 0.4, 1500);
            assert!((d1 - l1).abs() < 2e-3 && (d12 - l12).abs() < 2e-3, "w={w}: {d1} {l1} {d12} {l12}");
        }
    }

    #[test]
    fn bundle_only_menu() {
        let p = ContentParams::new(0.2, 0.2, 0.2, 1.5);
        let menu = Menu { p1: None, p12: 1.2 };
        let (d1, d12) = masses(&p, menu, 0.2 * 0.6153846153846154, 1e-10).unwrap();
        assert_eq!(d1, 0.0);
        assert!((d12 - 1.6 / 2.6).abs() < 1e-12);
    }

    #[test]
    fn normal_laws_match_lattice_quadrature() {
        let r1 = DistributionSpec::truncated_normal(0.0, 1.5, 0.75, 0.3);
        let r2 = DistributionSpec::truncated_normal(0.0, 1.0, 0.5, 0.2);
        let p = ContentParams::new(0.2, 0.2, 0.5, 1.5).with_dists(r1, r2);
        let menu = Menu { p1: Some(0.6), p12: 1.2 };
        let (d1, d12) = masses(&p, menu, 0.3, 1e-11).unwrap();
        // tensor midpoint rule with density weights
        let n = 2000;
        let (mut e1, mut e12) = (0.0, 0.0);
        for i in 0..n {
            let x = (i as f64 + 0.5) / n as f64 * 1.5;
            let fx = pdf(&r1, x) * 1.5 / n as f64;
            for j in 0..n {
                let y = (j as f64 + 0.5) / n as f64;
                let w = fx * pdf(&r2, y) / n as f64;
                let u12 = x + y + 0.3 - 1.2;
                let u1 = x - 0.6;
                if u12 >= 0.0 && u12 >= u1 {
                    e12 += w;
                } else if u1 >= 0.0 {
                    e1 += w;
                }
            }
        }
        assert!((d1 - e1).abs() < 2e-3 && (d12 - e12).abs() < 2e-3, "{d1} {e1} {d12} {e12}");
    }

    #[test]
    fn piecewise_fixed_points_agree_with_dense_scan() {
        for &(lam, p12, w) in &[(0.95, 1.2, 1.0), (2.0, 1.4, 1.0), (1.0, 1.0, 1.2), (0.5, 2.0, 0.9)] {
            let p = ContentParams::new(0.1, 0.1, lam, 1.5).with_omega(w);
            for menu in [Menu { p1: None, p12 }, Menu { p1: Some(0.6), p12 }] {
                let a = bundle_fixed_points(&p, menu, 0, 1e-10).unwrap();
                let g = |d: f64| masses(&p, menu, lam * d, 1e-10).unwrap().1;
                let b = scan_fixed_points(g, 0.0, 1.0, 20_000);
                assert_eq!(a.all_roots.len(), b.all_roots.len(), "{lam} {p12} {w} {menu:?}");
                for (x, y) in a.all_roots.iter().zip(&b.all_roots) {
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }
}
