use serde::{Deserialize, Serialize};

use super::bundled::bundled_optimal_content_with;
use super::demand::{bundle_fixed_points, externality, masses, Menu};
use super::{ContentSolution, CONTENT_QUAD_TOL, CONTENT_SCAN_GRID};
use crate::error::{check_price, check_valid, SolveError};
use crate::exec::{best_on_line, best_on_plane, linspace, maximize_1d, SearchConfig};
use crate::numerics::survival;
use crate::params::{ContentParams, PriceProfile, Strategy};
use crate::solution::{profit_of, DemandEquilibrium};

/// Whether the bundle price sits below the top service valuation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceRegime {
    Low,
    High,
}

/// How one demand equilibrium was picked among several.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootSelection {
    /// Larger root iff `p12 - c1 - c2 > lambda (p1 - c1)(tb - p1) / tb`,
    /// else the smaller; used where the regime algebra holds.
    ProfitThreshold,
    /// Largest bundle demand; used elsewhere.
    MaxDemand,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridContentDemand {
    pub equilibrium: DemandEquilibrium,
    pub regime: PriceRegime,
    /// Every bundle-demand fixed point at these prices.
    pub roots: Vec<f64>,
    pub selection: RootSelection,
}

fn selection_rule(params: &ContentParams) -> RootSelection {
    if params.has_regimes() && params.omega == 1.0 {
        RootSelection::ProfitThreshold
    } else {
        RootSelection::MaxDemand
    }
}

fn solve(p1: f64, p12: f64, params: &ContentParams, grid: usize) -> Result<HybridContentDemand, SolveError> {
    let menu = Menu { p1: Some(p1), p12 };
    let fp = bundle_fixed_points(params, menu, grid, CONTENT_QUAD_TOL)?;
    let selection = selection_rule(params);
    let mut roots = fp.all_roots.clone();
    if roots.is_empty() {
        roots.push(fp.value);
    }
    let chosen = match selection {
        RootSelection::ProfitThreshold if roots.len() > 1 => {
            let (c1, tb) = (params.c1, params.theta_bar);
            if p12 - c1 - params.c2 > params.lambda * (p1 - c1) * (tb - p1) / tb {
                roots[roots.len() - 1]
            } else {
                roots[0]
            }
        }
        _ => fp.value,
    };
    let (d1, g) = masses(params, menu, externality(params, chosen), CONTENT_QUAD_TOL)?;
    let equilibrium = DemandEquilibrium { d1, d2: 0.0, d12: chosen, d_s: chosen, residual: (chosen - g).abs() };
    let regime = if p12 / params.omega <= 1.0 + externality(params, equilibrium.d12) {
        PriceRegime::Low
    } else {
        PriceRegime::High
    };
    Ok(HybridContentDemand { equilibrium, regime, roots: fp.all_roots, selection })
}

fn check_prices(p1: f64, p12: f64) -> Result<(), SolveError> {
    check_price("p1", p1, 0.0, f64::INFINITY)?;
    check_price("p12", p12, p1, f64::INFINITY)
}

pub fn hybrid_demand_detail(p1: f64, p12: f64, params: &ContentParams) -> Result<HybridContentDemand, SolveError> {
    check_valid(params)?;
    check_prices(p1, p12)?;
    solve(p1, p12, params, SearchConfig::default().fixed_point_grid)
}

/// Demands when the device is sold alone at `p1` and bundled at `p12`.
pub fn hybrid_demands_content(p1: f64, p12: f64, params: &ContentParams) -> Result<DemandEquilibrium, SolveError> {
    hybrid_demand_detail(p1, p12, params).map(|d| d.equilibrium)
}

/// Bundle price from the low-regime first-order condition in `p12`.
pub fn low_regime_bundle_price(p1: f64, params: &ContentParams) -> f64 {
    let tb = params.theta_bar;
    0.5 * (1.0 + params.c2) + p1 + (2.0 * params.c1 - 3.0 * p1) * p1 / (4.0 * tb)
}

/// Device-only menu: the bundle is priced out.
pub fn device_only_content(params: &ContentParams, cfg: &SearchConfig) -> ContentSolution {
    let (c1, r1) = (params.c1, params.r1_dist);
    let p1 = if r1.is_uniform() {
        0.5 * (r1.hi + c1).min(2.0 * r1.hi)
    } else {
        maximize_1d(cfg.exec, 0.0, r1.hi, cfg.coarse_step * r1.hi, cfg.fine_step * r1.hi, |p| {
            Some((p - c1) * survival(&r1, p))
        })
        .map(|b| b.0)
        .unwrap_or(r1.hi)
    };
    let d1 = survival(&r1, p1);
    let demands = DemandEquilibrium { d1, d2: 0.0, d12: 0.0, d_s: 0.0, residual: 0.0 };
    ContentSolution::new(Strategy::DeviceOnly, None, PriceProfile::device_only(p1), demands, params)
}

pub fn hybrid_optimal_content(params: &ContentParams) -> Result<ContentSolution, SolveError> {
    hybrid_optimal_content_with(params, &SearchConfig::default())
}

/// Best hybrid menu. Candidates: the low-regime line search, a full grid
/// over `(p1, p12)`, the device-only menu and the pure bundle embedded as
/// `p1 = p12`. The embedded bundle wins unless beaten by more than a
/// relative 1e-9, so degenerate optima are reported as such.
pub fn hybrid_optimal_content_with(params: &ContentParams, cfg: &SearchConfig) -> Result<ContentSolution, SolveError> {
    check_valid(params)?;
    let p = *params;
    let grid = if params.has_regimes() { 0 } else { cfg.fixed_point_grid.min(CONTENT_SCAN_GRID) };
    let (c1, c2) = (params.c1, params.c2);
    let tb = params.theta_bar;
    let top = params.omega * (tb + 1.0 + params.lambda);
    let value = |p1: f64, p12: f64| -> Option<f64> {
        let d = solve(p1, p12, &p, grid).ok()?;
        Some(profit_of(&PriceProfile::hybrid(p1, p12), &d.equilibrium, c1, c2))
    };

    let mut cands: Vec<(f64, f64, f64)> = Vec::new();

    if params.has_regimes() && params.omega == 1.0 {
        let lam = params.lambda;
        let line = |p1: f64| -> Option<f64> {
            let p12 = low_regime_bundle_price(p1, &p);
            if p12 < p1 {
                return None;
            }
            let d = solve(p1, p12, &p, grid).ok()?.equilibrium;
            // stay inside the low regime with a live device-only segment
            if p12 > 1.0 + lam * d.d12 || p12 - p1 - lam * d.d12 < 0.0 {
                return None;
            }
            Some(profit_of(&PriceProfile::hybrid(p1, p12), &d, c1, c2))
        };
        let n = cfg.line_points.max(2);
        if let Some((x, _)) = best_on_line(cfg.exec, &linspace(0.0, tb, n), &line) {
            let h = tb / (n - 1) as f64;
            let fine = linspace((x - h).max(0.0), (x + h).min(tb), 2 * cfg.line_refine + 1);
            if let Some((x, v)) = best_on_line(cfg.exec, &fine, &line) {
                cands.push((x, low_regime_bundle_price(x, &p), v));
            }
        }
    }

    // p12 = p1 + t (top - p1) keeps the grid inside p12 >= p1
    let n = cfg.plane_points.max(2);
    let lift = |p1: f64, t: f64| p1 + t * (top - p1);
    let plane = |p1: f64, t: f64| value(p1, lift(p1, t));
    let xs = linspace(0.0, tb, n);
    let ts = linspace(0.0, 1.0, n);
    if let Some(((x, t), _)) = best_on_plane(cfg.exec, &xs, &ts, plane) {
        let hx = tb / (n - 1) as f64;
        let ht = 1.0 / (n - 1) as f64;
        let m = 2 * cfg.plane_refine + 1;
        let xs = linspace((x - hx).max(0.0), (x + hx).min(tb), m);
        let ts = linspace((t - ht).max(0.0), (t + ht).min(1.0), m);
        if let Some(((x, t), v)) = best_on_plane(cfg.exec, &xs, &ts, plane) {
            cands.push((x, lift(x, t), v));
        }
    }

    let device = device_only_content(params, cfg);
    let embedded = match bundled_optimal_content_with(params, cfg) {
        Ok(b) => {
            let pb = b.prices.p12.expect("bundle price");
            let mut d = solve(pb, pb, params, grid)?.equilibrium;
            if d.d1 == 0.0 {
                // nobody takes the device alone: this is the bundle itself
                d = b.demands;
            }
            Some(ContentSolution::new(Strategy::Hybrid, b.regime, PriceProfile::hybrid(pb, pb), d, params))
        }
        Err(SolveError::NotOffered) => None,
        Err(e) => return Err(e),
    };

    let mut best: Option<ContentSolution> = None;
    for (p1, p12, _) in cands {
        let d = solve(p1, p12, params, grid)?.equilibrium;
        let s = ContentSolution::new(Strategy::Hybrid, None, PriceProfile::hybrid(p1, p12), d, params);
        if best.as_ref().map_or(true, |b| s.profit > b.profit) {
            best = Some(s);
        }
    }
    if best.as_ref().map_or(true, |b| device.profit > b.profit) {
        best = Some(device);
    }
    if let Some(e) = embedded {
        let beaten = best.as_ref().is_some_and(|b| b.profit > e.profit + 1e-9 * (1.0 + e.profit.abs()));
        if !beaten {
            best = Some(e);
        }
    }
    let mut out = best.expect("device-only candidate always exists");
    if out.strategy == Strategy::Hybrid && out.demands.d1 <= 1e-9 {
        out.degenerate_to_bundle = true;
    }
    Ok(out)
}

/// Sufficient condition for the hybrid optimum to collapse to the bundle
/// (uniform valuations, `omega = 1`). Not tight; false outside its domain.
pub fn degenerates_to_bundle(params: &ContentParams) -> bool {
    params.has_regimes() && params.omega == 1.0 && params.lambda > 1.5 && 4.0 * params.c1 + params.c2 < 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::content::bundled_optimal_content;

    fn cfg() -> SearchConfig {
        SearchConfig::sweep()
    }

    #[test]
    fn low_regime_demand_without_externality() {
        let p = ContentParams::new(0.1, 0.1, 0.0, 1.5);
        let d = hybrid_demands_content(0.5, 1.0, &p).unwrap();
        assert!((d.d12 - 0.416_666_666_666_666_7).abs() < 1e-12);
        assert!((d.d1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unreachable_bundle_leaves_device_only() {
        let p = ContentParams::new(0.1, 0.1, 0.3, 1.5);
        // gap 1.5 > 1 + 0.3 for every demand level
        let d = hybrid_demands_content(0.5, 2.0, &p).unwrap();
        assert_eq!(d.d12, 0.0);
        assert!((d.d1 - 1.0 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn superadditive_valuations_starve_device_only() {
        let mut last = f64::INFINITY;
        for i in 0..30 {
            let w = 1.0 + 0.1 * i as f64;
            let p = ContentParams::new(0.3, 0.3, 0.95, 1.5).with_omega(w);
            let d = hybrid_demands_content(0.5, 1.2, &p).unwrap();
            assert!(d.d1 <= last + 1e-12);
            last = d.d1;
        }
        assert_eq!(last, 0.0);
    }

    #[test]
    fn price_ordering_enforced() {
        let p = ContentParams::new(0.1, 0.1, 0.3, 1.5);
        assert!(matches!(hybrid_demands_content(0.9, 0.5, &p), Err(SolveError::PriceOutOfRange { .. })));
    }

    #[test]
    fn threshold_rule_picks_root() {
        // two equilibria in the high price regime
        let p = ContentParams::new(0.2, 0.3, 2.0, 1.5);
        let mut seen_two = false;
        for i in 0..40 {
            let p12 = 1.0 + i as f64 * 0.05;
            for p1 in [0.3, 0.6, 0.9, 1.2].into_iter().filter(|&p1| p1 <= p12) {
                let det = hybrid_demand_detail(p1, p12, &p).unwrap();
                if det.roots.len() == 2 {
                    seen_two = true;
                    let larger = p12 - 0.5 > 2.0 * (p1 - 0.2) * (1.5 - p1) / 1.5;
                    let want = if larger { det.roots[1] } else { det.roots[0] };
                    assert!((det.equilibrium.d12 - want).abs() < 1e-12, "{p1} {p12}");
                    // interior high-regime roots solve the trapezoid quadratic
                    for &r in &det.roots {
                        let h = 1.0 + 2.0 * r - p12 + p1;
                        if r > 0.0 && r < 1.0 && p12 > 1.0 + 2.0 * r && h <= 1.0 {
                            let area = ((1.5 - p1) + (1.5 - p12 + 1.0 + 2.0 * r)) * h / 3.0;
                            assert!((area - r).abs() < 1e-8, "{p1} {p12} {r}");
                        }
                    }
                }
            }
        }
        assert!(seen_two);
    }

    #[test]
    fn prop_five_point_degenerates() {
        let p = ContentParams::new(0.1, 0.2, 1.6, 1.5);
        assert!(degenerates_to_bundle(&p));
        let h = hybrid_optimal_content_with(&p, &cfg()).unwrap();
        let b = bundled_optimal_content(&p).unwrap();
        assert!(h.degenerate_to_bundle);
        assert!((h.profit - b.profit).abs() <= 1e-6 * (1.0 + b.profit.abs()));
        assert!(h.demands.d1 <= 1e-6);
    }

    #[test]
    fn high_costs_favor_hybrid() {
        let p = ContentParams::new(0.8, 0.8, 0.95, 1.5);
        let h = hybrid_optimal_content_with(&p, &cfg()).unwrap();
        let b = bundled_optimal_content(&p).unwrap();
        assert!(h.profit > b.profit + 1e-4, "{} vs {}", h.profit, b.profit);
        assert!(!h.degenerate_to_bundle);
    }

    #[test]
    fn worthless_service_goes_device_only() {
        let p = ContentParams::new(0.2, 1.1, 0.0, 1.5);
        let h = hybrid_optimal_content_with(&p, &cfg()).unwrap();
        assert_eq!(h.strategy, Strategy::DeviceOnly);
        assert!((h.prices.p1.unwrap() - 0.85).abs() < 1e-12);
        assert!((h.profit - 1.3f64.powi(2) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn condition_flags() {
        assert!(degenerates_to_bundle(&ContentParams::new(0.1, 0.2, 1.6, 1.5)));
        assert!(!degenerates_to_bundle(&ContentParams::new(0.1, 0.2, 1.4, 1.5)));
        assert!(!degenerates_to_bundle(&ContentParams::new(0.3, 0.1, 2.0, 1.5)));
    }
}
