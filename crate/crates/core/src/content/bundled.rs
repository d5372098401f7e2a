use serde::{Deserialize, Serialize};

use super::demand::{bundle_fixed_points, externality, masses, Menu};
use super::{ContentSolution, CONTENT_QUAD_TOL};
use crate::error::{check_price, check_valid, SolveError};
use crate::exec::{maximize_1d, SearchConfig};
use crate::numerics::find_root_bracketed;
use crate::params::{ContentParams, PriceProfile, Strategy};
use crate::solution::DemandEquilibrium;

/// Price regime of the pure bundle with uniform valuations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleRegime {
    High,
    Medium,
    Low,
}

/// Regime label plus both sides of the two classifying inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeClassification {
    pub regime: BundleRegime,
    pub high_lhs: f64,
    pub high_rhs: f64,
    pub low_lhs: f64,
    pub low_rhs: f64,
}

pub fn bundled_regime(params: &ContentParams) -> Result<RegimeClassification, SolveError> {
    check_valid(params)?;
    if !params.has_regimes() {
        return Err(SolveError::UnsupportedConfiguration(
            "price regimes need uniform valuations and gamma = 1".into(),
        ));
    }
    let tb = params.theta_bar;
    let lam = params.lambda;
    let c = params.cost() / params.omega;
    let high_lhs = 2.0 * tb * c + tb;
    let high_rhs = 2.0 * (tb * tb + lam);
    let low_lhs = 2.0 * (tb * tb + tb * c + lam);
    let low_rhs = 3.0 * tb + 4.0 * tb * lam;
    let regime = if high_lhs > high_rhs {
        BundleRegime::High
    } else if low_lhs < low_rhs {
        BundleRegime::Low
    } else {
        BundleRegime::Medium
    };
    Ok(RegimeClassification { regime, high_lhs, high_rhs, low_lhs, low_rhs })
}

/// Demand interval a regime's equilibrium must fall in.
pub fn regime_interval(regime: BundleRegime, theta_bar: f64) -> (f64, f64) {
    let e = 0.5 / theta_bar;
    match regime {
        BundleRegime::High => (0.0, e),
        BundleRegime::Medium => (e, 1.0 - e),
        BundleRegime::Low => (1.0 - e, 1.0),
    }
}

fn regime_of(d: f64, theta_bar: f64) -> BundleRegime {
    let e = 0.5 / theta_bar;
    if d < e {
        BundleRegime::High
    } else if d <= 1.0 - e {
        BundleRegime::Medium
    } else {
        BundleRegime::Low
    }
}

/// Price (per unit of `omega`) that sustains demand `d` in `regime`.
pub fn regime_price(regime: BundleRegime, d: f64, theta_bar: f64, lambda: f64) -> f64 {
    match regime {
        BundleRegime::High => theta_bar + 1.0 + lambda * d - (2.0 * theta_bar * d).sqrt(),
        BundleRegime::Medium => theta_bar + 0.5 - (theta_bar - lambda) * d,
        BundleRegime::Low => (2.0 * theta_bar * (1.0 - d)).sqrt() + lambda * d,
    }
}

/// First-order condition of the low-price regime; its root in
/// `(1 - 1/(2 theta_bar), 1]` is the optimal demand.
pub fn low_regime_condition(d: f64, theta_bar: f64, lambda: f64, cost: f64) -> f64 {
    let y = 1.0 - d;
    let r = (2.0 * theta_bar).sqrt();
    2.0 * r * lambda * y.powf(1.5) - (2.0 * lambda - cost) * r * y.sqrt() - 3.0 * theta_bar * y + theta_bar
}

/// Optimal demand of the high-price regime.
pub fn high_regime_demand(theta_bar: f64, lambda: f64, cost: f64) -> Option<f64> {
    let m = theta_bar + 1.0 - cost;
    let disc = 9.0 * theta_bar - 16.0 * lambda * m;
    if m <= 0.0 || disc < 0.0 {
        return None;
    }
    Some(8.0 * m * m / (3.0 * theta_bar.sqrt() + disc.sqrt()).powi(2))
}

/// Optimal demand of the medium-price regime.
pub fn medium_regime_demand(theta_bar: f64, lambda: f64, cost: f64) -> Option<f64> {
    (theta_bar > lambda).then(|| (theta_bar - cost + 0.5) / (2.0 * (theta_bar - lambda)))
}

fn low_regime_demand(theta_bar: f64, lambda: f64, cost: f64) -> Option<f64> {
    let lo = 1.0 - 0.5 / theta_bar;
    find_root_bracketed(|d| low_regime_condition(d, theta_bar, lambda, cost), lo, 1.0, 1e-13).ok()
}

/// Candidate demands in normalized units, with the regime each lives in.
fn candidates(theta_bar: f64, lambda: f64, cost: f64) -> Vec<(BundleRegime, f64)> {
    let mut out = Vec::new();
    let inside = |r: BundleRegime, d: f64| {
        let (lo, hi) = regime_interval(r, theta_bar);
        d >= lo && d <= hi
    };
    if let Some(d) = high_regime_demand(theta_bar, lambda, cost) {
        if inside(BundleRegime::High, d) {
            out.push((BundleRegime::High, d));
        }
    }
    if let Some(d) = medium_regime_demand(theta_bar, lambda, cost) {
        if inside(BundleRegime::Medium, d) {
            out.push((BundleRegime::Medium, d));
        }
    }
    if let Some(d) = low_regime_demand(theta_bar, lambda, cost) {
        out.push((BundleRegime::Low, d));
    }
    // piece ends guard against boundary optima
    let e = 0.5 / theta_bar;
    out.push((BundleRegime::Medium, e));
    out.push((BundleRegime::Medium, 1.0 - e));
    out.push((BundleRegime::Low, 1.0));
    out
}

pub fn bundled_optimal_content(params: &ContentParams) -> Result<ContentSolution, SolveError> {
    bundled_optimal_content_with(params, &SearchConfig::default())
}

pub fn bundled_optimal_content_with(params: &ContentParams, cfg: &SearchConfig) -> Result<ContentSolution, SolveError> {
    check_valid(params)?;
    let (tb, lam, w) = (params.theta_bar, params.lambda, params.omega);
    let cost = params.cost();
    if cost >= w * (tb + 1.0 + lam) {
        return Err(SolveError::NotOffered);
    }
    if !params.has_regimes() {
        return numeric_bundled(params, cfg);
    }
    let ct = cost / w;
    let classified = bundled_regime(params)?.regime;
    let best = candidates(tb, lam, ct)
        .into_iter()
        .map(|(r, d)| {
            let p = regime_price(r, d, tb, lam);
            (r, d, p, (p - ct) * d)
        })
        // the classified regime wins exact ties
        .fold(None::<(BundleRegime, f64, f64, f64)>, |acc, c| match acc {
            Some(a) if a.3 > c.3 || (a.3 == c.3 && a.0 == classified) => Some(a),
            _ => Some(c),
        })
        .expect("candidate list is never empty");
    let (_, d, p, v) = best;
    if !(v > 0.0) {
        return Err(SolveError::NotOffered);
    }
    let p12 = w * p;
    let regime = regime_of(d, tb);
    let g = masses(params, Menu { p1: None, p12 }, externality(params, d), CONTENT_QUAD_TOL)?.1;
    let demands = DemandEquilibrium { d1: 0.0, d2: 0.0, d12: d, d_s: d, residual: (d - g).abs() };
    Ok(ContentSolution::new(Strategy::Bundled, Some(regime), PriceProfile::bundled(p12), demands, params))
}

/// Largest demand equilibrium of the pure bundle at `p12`.
pub fn bundle_demand_content(p12: f64, params: &ContentParams) -> Result<DemandEquilibrium, SolveError> {
    check_valid(params)?;
    check_price("p12", p12, 0.0, f64::INFINITY)?;
    bundle_demand_at(p12, params, SearchConfig::default().fixed_point_grid)
}

pub(crate) fn bundle_demand_at(p12: f64, params: &ContentParams, grid: usize) -> Result<DemandEquilibrium, SolveError> {
    let fp = bundle_fixed_points(params, Menu { p1: None, p12 }, grid, CONTENT_QUAD_TOL)?;
    let d = fp.value;
    Ok(DemandEquilibrium { d1: 0.0, d2: 0.0, d12: d, d_s: d, residual: fp.residual })
}

fn numeric_bundled(params: &ContentParams, cfg: &SearchConfig) -> Result<ContentSolution, SolveError> {
    let top = params.omega * (params.theta_bar + 1.0 + params.lambda);
    let cost = params.cost();
    let grid = cfg.fixed_point_grid.min(super::CONTENT_SCAN_GRID);
    let p = *params;
    let step = cfg.coarse_step * top;
    let (p12, v) = maximize_1d(cfg.exec, 0.0, top, step, cfg.fine_step * top, |x| {
        bundle_demand_at(x, &p, grid).ok().map(|d| (x - cost) * d.d12)
    })
    .ok_or(SolveError::NotOffered)?;
    if !(v > 0.0) {
        return Err(SolveError::NotOffered);
    }
    let demands = bundle_demand_at(p12, params, grid)?;
    Ok(ContentSolution::new(Strategy::Bundled, None, PriceProfile::bundled(p12), demands, params))
}
