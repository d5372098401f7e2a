//! Connectivity-sharing model: a user with mobility `alpha` values the
//! device at `1 - alpha` and the shared service at `alpha * D_s^gamma`.

use serde::{Deserialize, Serialize};

use crate::error::{check_price, check_valid, SolveError};
use crate::exec::{maximize_1d, maximize_2d, SearchConfig};
use crate::numerics::{
    cdf, extended_cdf, find_root_bracketed, scan_fixed_points, survival, truncnorm_cdf_mass, FixedPointResult,
};
use crate::params::{ConnectivityParams, CubicDiagnostics, PriceProfile, Strategy};
use crate::solution::{profit_of, DemandEquilibrium, StrategySolution};

/// Scan resolution for the separate-pricing first-order condition.
const FOC_GRID: usize = 1_000;
/// Relative tolerance under which two profits count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[inline]
fn quality(d: f64, gamma: f64) -> f64 {
    if d <= 0.0 {
        0.0
    } else if gamma == 1.0 {
        d
    } else {
        d.powf(gamma)
    }
}

// ---------------------------------------------------------------- separate

/// Demands under separate pricing. The device carries no externality, so
/// the split is explicit: device buyers are `alpha <= 1 - p1`, and the
/// service sells to `alpha >= p2 / D1^gamma`.
pub fn sep_demands(p1: f64, p2: f64, params: &ConnectivityParams) -> Result<DemandEquilibrium, SolveError> {
    check_valid(params)?;
    check_price("p1", p1, 0.0, 1.0)?;
    check_price("p2", p2, 0.0, 1.0)?;
    Ok(sep_demands_unchecked(p1, p2, params))
}

fn sep_demands_unchecked(p1: f64, p2: f64, params: &ConnectivityParams) -> DemandEquilibrium {
    let d1 = cdf(&params.alpha_dist, 1.0 - p1);
    // no devices means no coverage and no service value
    let d2 = if d1 <= 0.0 { 0.0 } else { survival(&params.alpha_dist, p2 / quality(d1, params.gamma)) };
    DemandEquilibrium { d1, d2, d12: 0.0, d_s: d1, residual: 0.0 }
}

/// Sufficient condition for the separate optimum to sell the service.
pub fn service_provided_separate(c1: f64, c2: f64) -> bool {
    c1 + 2.0 * c2 <= 1.0
}

/// First-order condition in `p1` after substituting the optimal service price.
pub fn separate_foc(p1: f64, c1: f64, c2: f64) -> f64 {
    let tail = if c2 == 0.0 { 0.0 } else { c2 * c2 / (4.0 * (1.0 - p1).powi(2)) };
    0.75 - 2.0 * p1 + c1 + tail
}

/// Profit along the service-price best response `p2 = (1 + c2 - p1) / 2`.
pub fn separate_reduced_profit(p1: f64, c1: f64, c2: f64) -> f64 {
    let u = 1.0 - p1;
    (p1 - c1) * u + (u - c2).powi(2) / (4.0 * u)
}

/// Discriminant quantities of the cubic behind [`separate_foc`].
pub fn cubic_discriminant(c1: f64, c2: f64) -> (f64, f64) {
    let a = 19.0 + 4.0 * c1;
    let b = 14.0 + 8.0 * c1;
    let q = b / 24.0 - a * a / 576.0;
    let kappa = -a * b / 384.0 + (a / 24.0).powi(3) + (c2 * c2 + 4.0 * c1 + 3.0) / 16.0;
    (kappa * kappa + q.powi(3), kappa)
}

/// All roots of the first-order condition on `[0, 1 - c2]`, ascending.
pub fn separate_foc_roots(c1: f64, c2: f64) -> Vec<f64> {
    let hi = 1.0 - c2;
    let f = |p: f64| separate_foc(p, c1, c2);
    let mut roots: Vec<f64> = Vec::new();
    let push = |r: f64, roots: &mut Vec<f64>| {
        if !roots.iter().any(|&q| (q - r).abs() < 1e-12) {
            roots.push(r);
        }
    };
    let mut x0 = 0.0;
    let mut f0 = f(x0);
    if f0 == 0.0 {
        push(x0, &mut roots);
    }
    for i in 1..=FOC_GRID {
        let x1 = if i == FOC_GRID { hi } else { hi * i as f64 / FOC_GRID as f64 };
        let f1 = f(x1);
        if f1 == 0.0 {
            push(x1, &mut roots);
        } else if f0 != 0.0 && (f0 > 0.0) != (f1 > 0.0) {
            if let Ok(r) = find_root_bracketed(f, x0, x1, 1e-13) {
                push(r, &mut roots);
            }
        }
        x0 = x1;
        f0 = f1;
    }
    roots.sort_by(f64::total_cmp);
    roots
}

fn device_only_uniform(c1: f64) -> StrategySolution {
    let p1 = 0.5 * (1.0 + c1);
    let d = DemandEquilibrium { d1: 1.0 - p1, d2: 0.0, d12: 0.0, d_s: 1.0 - p1, residual: 0.0 };
    StrategySolution::new(Strategy::DeviceOnly, PriceProfile::device_only(p1), d, c1, 0.0)
}

/// Best device-only menu for any mobility law.
pub fn device_only_optimal(params: &ConnectivityParams, cfg: &SearchConfig) -> StrategySolution {
    if params.alpha_dist.is_uniform_on(0.0, 1.0) {
        return device_only_uniform(params.c1);
    }
    let a = params.alpha_dist;
    let c1 = params.c1;
    let (p1, _) = maximize_1d(cfg.exec, 0.0, 1.0, cfg.coarse_step, cfg.fine_step, |p| {
        Some((p - c1) * cdf(&a, 1.0 - p))
    })
    .expect("non-empty grid");
    let d1 = cdf(&a, 1.0 - p1);
    let d = DemandEquilibrium { d1, d2: 0.0, d12: 0.0, d_s: d1, residual: 0.0 };
    StrategySolution::new(Strategy::DeviceOnly, PriceProfile::device_only(p1), d, c1, 0.0)
}

pub fn sep_optimal(params: &ConnectivityParams) -> Result<StrategySolution, SolveError> {
    sep_optimal_with(params, &SearchConfig::default())
}

pub fn sep_optimal_with(params: &ConnectivityParams, cfg: &SearchConfig) -> Result<StrategySolution, SolveError> {
    check_valid(params)?;
    let (c1, c2) = (params.c1, params.c2);
    let device = device_only_optimal(params, cfg);

    if !params.is_baseline() {
        let p = *params;
        let best = maximize_2d(cfg.exec, (0.0, 1.0), (0.0, 1.0), cfg.coarse_step, cfg.fine_step, |p1, p2| {
            let d = sep_demands_unchecked(p1, p2, &p);
            Some((p1 - c1) * d.d1 + (p2 - c2) * d.d2)
        });
        if let Some(((p1, p2), v)) = best {
            let d = sep_demands_unchecked(p1, p2, params);
            if d.d2 > 0.0 && v > device.profit {
                return Ok(StrategySolution::new(Strategy::Separate, PriceProfile::separate(p1, p2), d, c1, c2));
            }
        }
        return Ok(device);
    }

    let roots = separate_foc_roots(c1, c2);
    let (mu, kappa) = cubic_discriminant(c1, c2);
    let diagnostics = CubicDiagnostics { mu, kappa, root_count_in_feasible: roots.len() as u32 };
    // smallest root that is a local maximum of the reduced profit
    let h = 1e-5;
    let p1 = roots.iter().copied().find(|&r| {
        let lo = (r - h).max(0.0);
        let hi = (r + h).min(1.0 - c2);
        let mid = 0.5 * (lo + hi);
        let second = separate_reduced_profit(hi, c1, c2) - 2.0 * separate_reduced_profit(mid, c1, c2)
            + separate_reduced_profit(lo, c1, c2);
        second <= 0.0 && r < 1.0 - c2
    });
    let mut out = device;
    if let Some(p1) = p1 {
        let p2 = 0.5 * (1.0 + c2 - p1);
        let d = sep_demands_unchecked(p1, p2, params);
        let sol = StrategySolution::new(Strategy::Separate, PriceProfile::separate(p1, p2), d, c1, c2);
        if sol.profit > out.profit {
            out = sol;
        }
    }
    out.diagnostics = Some(diagnostics);
    Ok(out)
}

// ----------------------------------------------------------------- bundled

/// Threshold the bundle map sends `D` to: the highest mobility that still
/// buys, `(1 - p12) / (1 - D^gamma)`. At full quality the bundle is free of
/// mobility risk, and a zero surplus counts as buying.
fn bundle_threshold(p12: f64, d: f64, gamma: f64) -> f64 {
    let denom = 1.0 - quality(d, gamma);
    if denom > 0.0 {
        (1.0 - p12) / denom
    } else if p12 <= 1.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

/// The bundle demand map with its algebraic form continued past the
/// support, so the interior fixed points of the continuum model show up
/// as crossings of the diagonal.
fn bundle_map(p12: f64, params: &ConnectivityParams) -> impl Fn(f64) -> f64 + '_ {
    move |d: f64| {
        let t = bundle_threshold(p12, d, params.gamma);
        if t == f64::INFINITY && p12 == 1.0 {
            // nobody gains or loses: everyone is indifferent and buys
            return 1.0;
        }
        extended_cdf(&params.alpha_dist, t)
    }
}

/// Every fixed point of the bundle demand map at `p12`.
pub fn bundle_fixed_points(p12: f64, params: &ConnectivityParams, grid: usize) -> FixedPointResult {
    scan_fixed_points(bundle_map(p12, params), 0.0, 1.0, grid)
}

pub fn bundle_demand(p12: f64, params: &ConnectivityParams) -> Result<DemandEquilibrium, SolveError> {
    check_valid(params)?;
    check_price("p12", p12, 0.0, 1.0)?;
    Ok(bundle_demand_unchecked(p12, params, crate::numerics::DEFAULT_GRID))
}

fn bundle_demand_unchecked(p12: f64, params: &ConnectivityParams, grid: usize) -> DemandEquilibrium {
    let d12 = if params.is_baseline() {
        if p12 >= 0.75 {
            0.5 * (1.0 + (4.0 * p12 - 3.0).sqrt())
        } else {
            1.0
        }
    } else {
        bundle_fixed_points(p12, params, grid).value
    };
    let g = bundle_map(p12, params)(d12);
    let residual = if g.is_finite() { (d12 - g).abs() } else { 0.0 };
    DemandEquilibrium { d1: 0.0, d2: 0.0, d12, d_s: d12, residual }
}

pub fn bundle_optimal(params: &ConnectivityParams) -> Result<StrategySolution, SolveError> {
    bundle_optimal_with(params, &SearchConfig::default())
}

pub fn bundle_optimal_with(params: &ConnectivityParams, cfg: &SearchConfig) -> Result<StrategySolution, SolveError> {
    check_valid(params)?;
    let (c1, c2) = (params.c1, params.c2);
    if c1 + c2 > 1.0 {
        return Ok(StrategySolution::not_offered(Strategy::Bundled));
    }
    let p12 = if params.is_baseline() {
        1.0
    } else {
        let p = *params;
        let grid = cfg.fixed_point_grid;
        maximize_1d(cfg.exec, 0.0, 1.0, cfg.coarse_step, cfg.fine_step, |x| {
            Some((x - c1 - c2) * bundle_demand_unchecked(x, &p, grid).d12)
        })
        .expect("non-empty grid")
        .0
    };
    let d = bundle_demand_unchecked(p12, params, cfg.fixed_point_grid);
    Ok(StrategySolution::new(Strategy::Bundled, PriceProfile::bundled(p12), d, c1, c2))
}

// ------------------------------------------------------------------ hybrid

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeviceBound {
    /// Device-only buyers stop where the device surplus hits zero.
    Reservation,
    /// They stop where the bundle becomes at least as attractive.
    Indifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BundleBound {
    /// Bundle buyers extend to the top of the support.
    Support,
    /// They stop where the bundle surplus hits zero.
    Participation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridBranch {
    pub device: DeviceBound,
    pub bundle: BundleBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridCandidate {
    pub branch: HybridBranch,
    pub d1: f64,
    pub d12: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridDemandReport {
    pub equilibrium: DemandEquilibrium,
    pub branch: HybridBranch,
    /// Every branch-consistent fixed point, selected one included.
    pub candidates: Vec<HybridCandidate>,
}

struct HybridThresholds {
    /// Device vs bundle indifference.
    a: f64,
    /// Bundle participation.
    b: f64,
}

fn hybrid_thresholds(p1: f64, p12: f64, s: f64, gamma: f64) -> HybridThresholds {
    let q = quality(s, gamma);
    let gap = p12 - p1;
    let a = if gap <= 0.0 {
        0.0
    } else if q > 0.0 {
        gap / q
    } else {
        f64::INFINITY
    };
    let b = if q < 1.0 {
        (1.0 - p12) / (1.0 - q)
    } else if p12 <= 1.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    HybridThresholds { a, b }
}

fn hybrid_split(p1: f64, p12: f64, s: f64, params: &ConnectivityParams, branch: HybridBranch) -> (f64, f64) {
    let t = hybrid_thresholds(p1, p12, s, params.gamma);
    let dev_hi = match branch.device {
        DeviceBound::Reservation => 1.0 - p1,
        DeviceBound::Indifference => t.a,
    };
    let bun_hi = match branch.bundle {
        BundleBound::Support => 1.0,
        BundleBound::Participation => t.b,
    };
    let d1 = cdf(&params.alpha_dist, dev_hi);
    let d12 = if bun_hi > t.a { truncnorm_cdf_mass(&params.alpha_dist, t.a, bun_hi) } else { 0.0 };
    (d1, d12)
}

fn consistent(p1: f64, p12: f64, s: f64, params: &ConnectivityParams, branch: HybridBranch) -> bool {
    let t = hybrid_thresholds(p1, p12, s, params.gamma);
    let eps = 1e-12;
    let dev_ok = match branch.device {
        DeviceBound::Reservation => 1.0 - p1 <= t.a + eps,
        DeviceBound::Indifference => t.a <= 1.0 - p1 + eps,
    };
    let bun_ok = match branch.bundle {
        BundleBound::Support => t.b >= 1.0 - eps,
        BundleBound::Participation => t.b <= 1.0 + eps,
    };
    dev_ok && bun_ok
}

fn natural_branch(p1: f64, p12: f64, s: f64, gamma: f64) -> HybridBranch {
    let t = hybrid_thresholds(p1, p12, s, gamma);
    HybridBranch {
        device: if t.a < 1.0 - p1 { DeviceBound::Indifference } else { DeviceBound::Reservation },
        bundle: if t.b < 1.0 { BundleBound::Participation } else { BundleBound::Support },
    }
}

const BRANCHES: [HybridBranch; 4] = [
    HybridBranch { device: DeviceBound::Reservation, bundle: BundleBound::Support },
    HybridBranch { device: DeviceBound::Reservation, bundle: BundleBound::Participation },
    HybridBranch { device: DeviceBound::Indifference, bundle: BundleBound::Support },
    HybridBranch { device: DeviceBound::Indifference, bundle: BundleBound::Participation },
];

/// Full branch enumeration: each of the four threshold combinations is
/// solved as its own fixed point in `D_s = D1 + D12`, and only the
/// solutions whose thresholds actually bind the way the branch assumes are
/// kept. The largest total adoption is selected.
pub fn hybrid_branch_report(p1: f64, p12: f64, params: &ConnectivityParams) -> Result<HybridDemandReport, SolveError> {
    check_valid(params)?;
    check_hybrid_prices(p1, p12)?;
    let mut candidates = Vec::new();
    let mut raw = Vec::new();
    for branch in BRANCHES {
        let map = |s: f64| {
            let (d1, d12) = hybrid_split(p1, p12, s, params, branch);
            d1 + d12
        };
        let fp = scan_fixed_points(map, 0.0, 1.0, 2_000);
        for s in fp.all_roots {
            raw.push(s);
            if consistent(p1, p12, s, params, branch) {
                let (d1, d12) = hybrid_split(p1, p12, s, params, branch);
                candidates.push(HybridCandidate { branch, d1, d12 });
            }
        }
    }
    let best = candidates
        .iter()
        .copied()
        .fold(None::<HybridCandidate>, |acc, c| match acc {
            Some(b) if b.d1 + b.d12 >= c.d1 + c.d12 => Some(b),
            _ => Some(c),
        })
        .ok_or(SolveError::NoConsistentBranch { candidates: raw })?;
    let s = best.d1 + best.d12;
    let (g1, g12) = hybrid_split(p1, p12, s, params, best.branch);
    let equilibrium =
        DemandEquilibrium { d1: best.d1, d2: 0.0, d12: best.d12, d_s: s, residual: (s - g1 - g12).abs() };
    Ok(HybridDemandReport { equilibrium, branch: best.branch, candidates })
}

fn check_hybrid_prices(p1: f64, p12: f64) -> Result<(), SolveError> {
    check_price("p12", p12, 0.0, 1.0)?;
    check_price("p1", p1, 0.0, p12)
}

/// Demands under hybrid pricing. Full adoption is the largest conceivable
/// equilibrium, so it is tried first; when it is consistent (always, for
/// `p12 <= 1`) the branch scan is skipped.
pub fn hybrid_demands(p1: f64, p12: f64, params: &ConnectivityParams) -> Result<DemandEquilibrium, SolveError> {
    check_valid(params)?;
    check_hybrid_prices(p1, p12)?;
    match hybrid_full_coverage(p1, p12, params) {
        Some(d) => Ok(d),
        None => hybrid_branch_report(p1, p12, params).map(|r| r.equilibrium),
    }
}

fn hybrid_full_coverage(p1: f64, p12: f64, params: &ConnectivityParams) -> Option<DemandEquilibrium> {
    let branch = natural_branch(p1, p12, 1.0, params.gamma);
    let (d1, d12) = hybrid_split(p1, p12, 1.0, params, branch);
    let residual = (1.0 - d1 - d12).abs();
    (residual <= 1e-12).then_some(DemandEquilibrium { d1, d2: 0.0, d12, d_s: d1 + d12, residual })
}

pub fn hybrid_optimal(params: &ConnectivityParams) -> Result<StrategySolution, SolveError> {
    hybrid_optimal_with(params, &SearchConfig::default())
}

pub fn hybrid_optimal_with(params: &ConnectivityParams, cfg: &SearchConfig) -> Result<StrategySolution, SolveError> {
    check_valid(params)?;
    let (c1, c2) = (params.c1, params.c2);
    let device = device_only_optimal(params, cfg);
    if params.is_baseline() {
        if c1 + c2 > 1.0 {
            return Ok(device);
        }
        let p1 = 1.0 - 0.5 * c2;
        let d = DemandEquilibrium { d1: 0.5 * c2, d2: 0.0, d12: 1.0 - 0.5 * c2, d_s: 1.0, residual: 0.0 };
        let mut s = StrategySolution::new(Strategy::Hybrid, PriceProfile::hybrid(p1, 1.0), d, c1, c2);
        s.profit = 1.0 - c1 - c2 + c2 * c2 / 4.0;
        return Ok(s);
    }
    let p = *params;
    let eval = |p1: f64, p12: f64| -> Option<f64> {
        if p12 < p1 {
            return None;
        }
        let d = hybrid_full_coverage(p1, p12, &p)
            .or_else(|| hybrid_branch_report(p1, p12, &p).ok().map(|r| r.equilibrium))?;
        Some(profit_of(&PriceProfile::hybrid(p1, p12), &d, c1, c2))
    };
    let best = maximize_2d(cfg.exec, (0.0, 1.0), (0.0, 1.0), cfg.coarse_step, cfg.fine_step, eval);
    if let Some(((p1, p12), v)) = best {
        if v > device.profit {
            let d = hybrid_demands(p1, p12, params)?;
            return Ok(StrategySolution::new(Strategy::Hybrid, PriceProfile::hybrid(p1, p12), d, c1, c2));
        }
    }
    Ok(device)
}

// ----------------------------------------------------------------- compare

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityComparison {
    pub separate: StrategySolution,
    pub bundled: StrategySolution,
    pub hybrid: StrategySolution,
    /// Winning menu. Its solution may still be device-only.
    pub winner: Strategy,
    pub bundled_beats_separate: bool,
    /// Service cost below which bundling beats separate selling, `(1-c1)(3+c1)/4`.
    pub bundling_threshold: f64,
    /// `c1 + c2`; hybrid is preferred while this is at most one.
    pub cost_sum: f64,
    /// Service cost below the range where the bundling threshold is claimed.
    pub low_service_cost: bool,
}

impl ConnectivityComparison {
    pub fn winning_solution(&self) -> &StrategySolution {
        match self.winner {
            Strategy::Bundled => &self.bundled,
            Strategy::Hybrid => &self.hybrid,
            _ => &self.separate,
        }
    }

    /// Winner label with device-only outcomes called out.
    pub fn winner_label(&self) -> Strategy {
        match self.winning_solution().strategy {
            Strategy::DeviceOnly => Strategy::DeviceOnly,
            _ => self.winner,
        }
    }
}

pub fn bundling_threshold(c1: f64) -> f64 {
    (1.0 - c1) * (3.0 + c1) / 4.0
}

/// Tie rank: a hybrid menu that really sells both products first, then the
/// pure bundle, then separate selling, then hybrid menus that collapsed to
/// one product.
pub(crate) fn tie_rank(menu: Strategy, sol: &StrategySolution) -> u8 {
    match menu {
        Strategy::Hybrid if sol.strategy == Strategy::Hybrid && sol.demands.d1 > 1e-9 => 0,
        Strategy::Bundled => 1,
        Strategy::Separate => 2,
        _ => 3,
    }
}

/// Winner among `(menu, solution)` pairs: highest profit, ties by rank.
pub(crate) fn pick_winner<'a, I>(entries: I, rank: impl Fn(Strategy, &StrategySolution) -> u8) -> Strategy
where
    I: IntoIterator<Item = (Strategy, &'a StrategySolution)> + Clone,
{
    let max = entries.clone().into_iter().map(|(_, s)| s.profit).fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOL * (1.0 + max.abs());
    entries
        .into_iter()
        .filter(|(_, s)| s.profit >= max - tol)
        .min_by_key(|(m, s)| rank(*m, s))
        .map(|(m, _)| m)
        .expect("at least one strategy")
}

pub fn compare_connectivity(params: &ConnectivityParams) -> Result<ConnectivityComparison, SolveError> {
    compare_connectivity_with(params, &SearchConfig::default())
}

pub fn compare_connectivity_with(
    params: &ConnectivityParams,
    cfg: &SearchConfig,
) -> Result<ConnectivityComparison, SolveError> {
    let separate = sep_optimal_with(params, cfg)?;
    let bundled = bundle_optimal_with(params, cfg)?;
    let hybrid = hybrid_optimal_with(params, cfg)?;
    let entries = [(Strategy::Separate, &separate), (Strategy::Bundled, &bundled), (Strategy::Hybrid, &hybrid)];
    let winner = pick_winner(entries, tie_rank);
    Ok(ConnectivityComparison {
        bundled_beats_separate: bundled.profit > separate.profit,
        bundling_threshold: bundling_threshold(params.c1),
        cost_sum: params.c1 + params.c2,
        low_service_cost: params.c2 < 0.05,
        winner,
        separate,
        bundled,
        hybrid,
    })
}
