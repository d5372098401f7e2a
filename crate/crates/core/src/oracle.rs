//! Brute-force ground truth: a discretized population that best-responds
//! to the current externality level until nobody wants to switch.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::SolveError;
use crate::exec::{best_on_line, best_on_plane, stepped, Execution};
use crate::numerics::quantile;
use crate::params::{ConnectivityParams, ContentParams, ModelKind, ModelParams, PriceProfile, Strategy};
use crate::solution::{profit_of, DemandEquilibrium, StrategySolution};

pub const CONVERGENCE_TOL: f64 = 1e-9;
pub const ITERATION_CAP: usize = 100_000;
/// Two demand vectors closer than this count as the same state.
const CYCLE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum UserRecord {
    Connectivity { alpha: f64, weight: f64 },
    Content { r1: f64, r2: f64, weight: f64 },
}

impl UserRecord {
    pub fn weight(&self) -> f64 {
        match *self {
            UserRecord::Connectivity { weight, .. } | UserRecord::Content { weight, .. } => weight,
        }
    }
}

/// Equal-weight users placed at quantile midpoints. Connectivity users are
/// sorted by `alpha`, so every purchase set is a contiguous run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PopulationGrid {
    pub model: ModelKind,
    pub users: Vec<UserRecord>,
    #[serde(skip)]
    alpha: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    FromZero,
    FromFull,
    /// Initial contributor share.
    Seed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestResponseTrace {
    pub iterations: usize,
    pub demand_path: Vec<DemandEquilibrium>,
    pub converged: bool,
    pub final_demand: DemandEquilibrium,
    /// A period-two cycle was seen and damped.
    pub oscillation: bool,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("best response did not converge after {} iterations", .0.iterations)]
    NotConverged(Box<BestResponseTrace>),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

fn midpoints(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| (i as f64 + 0.5) / n as f64)
}

/// Connectivity: `n_users` points. Content: the largest square lattice with
/// at most `n_users` points, device valuation outer.
pub fn build_population(params: &ModelParams, n_users: usize) -> PopulationGrid {
    let n = n_users.max(1);
    match params {
        ModelParams::Connectivity(p) => {
            let w = 1.0 / n as f64;
            let alpha: Vec<f64> = midpoints(n).map(|u| quantile(&p.alpha_dist, u)).collect();
            let users = alpha.iter().map(|&a| UserRecord::Connectivity { alpha: a, weight: w }).collect();
            PopulationGrid { model: ModelKind::Connectivity, users, alpha }
        }
        ModelParams::Content(p) => {
            let k = ((n as f64).sqrt().floor() as usize).max(1);
            let w = 1.0 / (k * k) as f64;
            let r2: Vec<f64> = midpoints(k).map(|u| quantile(&p.r2_dist, u)).collect();
            let users = midpoints(k)
                .map(|u| quantile(&p.r1_dist, u))
                .flat_map(|r1| r2.iter().map(move |&r2| UserRecord::Content { r1, r2, weight: w }))
                .collect();
            PopulationGrid { model: ModelKind::Content, users, alpha: Vec::new() }
        }
    }
}

impl PopulationGrid {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    fn share(&self, count: usize) -> f64 {
        count as f64 / self.users.len() as f64
    }

    /// Users with index below the first failure of a predicate that holds on
    /// a prefix of the sorted `alpha`.
    fn prefix(&self, pred: impl Fn(f64) -> bool) -> usize {
        self.alpha.partition_point(|&a| pred(a))
    }
}

fn quality(s: f64, gamma: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        s.powf(gamma)
    }
}

/// One round of purchase decisions at contributor share `s`.
fn respond(
    pop: &PopulationGrid,
    strategy: Strategy,
    prices: &PriceProfile,
    params: &ModelParams,
    s: f64,
) -> DemandEquilibrium {
    match params {
        ModelParams::Connectivity(p) => respond_connectivity(pop, strategy, prices, p, s),
        ModelParams::Content(p) => respond_content(pop, strategy, prices, p, s),
    }
}

// Utility comparisons are written so each predicate is monotone in alpha
// under floating-point rounding; the naive per-user loop in the tests uses
// the same forms.
fn respond_connectivity(
    pop: &PopulationGrid,
    strategy: Strategy,
    prices: &PriceProfile,
    p: &ConnectivityParams,
    s: f64,
) -> DemandEquilibrium {
    let q = quality(s, p.gamma);
    let n = pop.len();
    let p1 = prices.p1.unwrap_or(f64::INFINITY);
    let p12 = prices.p12.unwrap_or(f64::INFINITY);
    let device = pop.prefix(|a| a <= 1.0 - p1);
    let (d1, d2, d12, d_s) = match strategy {
        Strategy::Separate => {
            let p2 = prices.p2.unwrap_or(f64::INFINITY);
            let d1 = pop.share(device);
            let d2 = pop.share(n - pop.prefix(|a| a * q < p2));
            (d1, d2, 0.0, d1)
        }
        Strategy::Bundled => {
            let d12 = pop.share(pop.prefix(|a| (1.0 - q) * a <= 1.0 - p12));
            (0.0, 0.0, d12, d12)
        }
        Strategy::Hybrid => {
            let gap = p12 - p1;
            let upgrade = pop.prefix(|a| a * q < gap);
            let stays = pop.prefix(|a| (1.0 - q) * a <= 1.0 - p12);
            let d1 = pop.share(device.min(upgrade));
            let d12 = pop.share(stays.saturating_sub(upgrade));
            (d1, 0.0, d12, d1 + d12)
        }
        Strategy::DeviceOnly => {
            let d1 = pop.share(device);
            (d1, 0.0, 0.0, d1)
        }
    };
    DemandEquilibrium { d1, d2, d12, d_s, residual: 0.0 }
}

fn respond_content(
    pop: &PopulationGrid,
    strategy: Strategy,
    prices: &PriceProfile,
    p: &ContentParams,
    s: f64,
) -> DemandEquilibrium {
    let q = p.lambda * quality(s, p.gamma);
    let w = p.omega;
    let p1 = prices.p1.unwrap_or(f64::INFINITY);
    let p12 = prices.p12.unwrap_or(f64::INFINITY);
    let (mut n1, mut n12) = (0usize, 0usize);
    for u in &pop.users {
        let UserRecord::Content { r1, r2, .. } = *u else { continue };
        let u1 = r1 - p1;
        let u12 = w * (r1 + r2 + q) - p12;
        let bundle = strategy != Strategy::DeviceOnly && u12 >= 0.0 && (strategy == Strategy::Bundled || u12 >= u1);
        if bundle {
            n12 += 1;
        } else if strategy != Strategy::Bundled && u1 >= 0.0 {
            n1 += 1;
        }
    }
    let (d1, d12) = (pop.share(n1), pop.share(n12));
    DemandEquilibrium { d1, d2: 0.0, d12, d_s: d12, residual: 0.0 }
}

fn gap(a: &DemandEquilibrium, b: &DemandEquilibrium) -> f64 {
    (a.d1 - b.d1).abs() + (a.d2 - b.d2).abs() + (a.d12 - b.d12).abs()
}

fn check_inputs(pop: &PopulationGrid, strategy: Strategy, params: &ModelParams) -> Result<(), SolveError> {
    if pop.model != params.kind() {
        return Err(SolveError::UnsupportedConfiguration(format!(
            "{} population with {} parameters",
            pop.model,
            params.kind()
        )));
    }
    if params.kind() == ModelKind::Content && strategy == Strategy::Separate {
        return Err(SolveError::UnsupportedConfiguration("separate pricing in the content model".into()));
    }
    let report = params.validate();
    if !report.is_ok() {
        return Err(SolveError::InvalidParams(report));
    }
    Ok(())
}

fn prices_present(strategy: Strategy, prices: &PriceProfile) -> bool {
    match strategy {
        Strategy::Separate => prices.p1.is_some() && prices.p2.is_some(),
        Strategy::Bundled => prices.p12.is_some(),
        Strategy::Hybrid => prices.p1.is_some() && prices.p12.is_some(),
        Strategy::DeviceOnly => prices.p1.is_some(),
    }
}

/// Iterates best responses. A repeated period-two state switches to
/// averaging the contributor share with weight 0.5.
fn iterate(
    pop: &PopulationGrid,
    strategy: Strategy,
    prices: &PriceProfile,
    params: &ModelParams,
    start: Start,
    record: bool,
) -> BestResponseTrace {
    let mut s = match start {
        Start::FromZero => 0.0,
        Start::FromFull => 1.0,
        Start::Seed(x) => x.clamp(0.0, 1.0),
    };
    let mut path = Vec::new();
    let mut prev: Option<DemandEquilibrium> = None;
    let mut prev2: Option<DemandEquilibrium> = None;
    let mut damp = false;
    let mut oscillation = false;
    for it in 1..=ITERATION_CAP {
        let mut d = respond(pop, strategy, prices, params, s);
        d.residual = (d.d_s - s).abs();
        if record {
            path.push(d);
        }
        if prev.as_ref().is_some_and(|p| gap(p, &d) < CONVERGENCE_TOL) {
            return BestResponseTrace { iterations: it, demand_path: path, converged: true, final_demand: d, oscillation };
        }
        if !damp && prev2.as_ref().is_some_and(|p| gap(p, &d) < CYCLE_TOL) {
            damp = true;
            oscillation = true;
        }
        s = if damp { 0.5 * (s + d.d_s) } else { d.d_s };
        prev2 = prev.replace(d);
    }
    let last = prev.unwrap_or_default();
    BestResponseTrace { iterations: ITERATION_CAP, demand_path: path, converged: false, final_demand: last, oscillation }
}

pub fn best_response_equilibrium(
    pop: &PopulationGrid,
    strategy: Strategy,
    prices: &PriceProfile,
    params: &ModelParams,
    start: Start,
) -> Result<BestResponseTrace, OracleError> {
    check_inputs(pop, strategy, params)?;
    if !prices_present(strategy, prices) {
        return Err(SolveError::UnsupportedConfiguration(format!("missing prices for {}", strategy.name())).into());
    }
    let trace = iterate(pop, strategy, prices, params, start, true);
    if trace.converged {
        Ok(trace)
    } else {
        Err(OracleError::NotConverged(Box::new(trace)))
    }
}

fn costs(params: &ModelParams) -> (f64, f64) {
    match params {
        ModelParams::Connectivity(p) => (p.c1, p.c2),
        ModelParams::Content(p) => (p.c1, p.c2),
    }
}

/// Price ranges that cover every valuation in the population.
fn price_caps(params: &ModelParams) -> (f64, f64) {
    match params {
        ModelParams::Connectivity(_) => (1.0, 1.0),
        ModelParams::Content(p) => (p.r1_dist.hi, p.omega * (p.r1_dist.hi + p.r2_dist.hi + p.lambda)),
    }
}

/// Exhaustive price lattice at `price_step`, demand from a full start at
/// every point, lexicographically smallest prices on ties.
pub fn grid_search_optimal(
    pop: &PopulationGrid,
    strategy: Strategy,
    params: &ModelParams,
    price_step: f64,
    exec: Execution,
) -> Result<StrategySolution, OracleError> {
    check_inputs(pop, strategy, params)?;
    let (c1, c2) = costs(params);
    let (cap1, cap12) = price_caps(params);
    let eval = |prices: PriceProfile| -> Option<(DemandEquilibrium, f64)> {
        let t = iterate(pop, strategy, &prices, params, Start::FromFull, false);
        t.converged.then(|| (t.final_demand, profit_of(&prices, &t.final_demand, c1, c2)))
    };
    let profit = |prices: PriceProfile| eval(prices).map(|r| r.1);
    let prices = match strategy {
        Strategy::Bundled => {
            best_on_line(exec, &stepped(0.0, cap12, price_step), |x| profit(PriceProfile::bundled(x)))
                .map(|(x, _)| PriceProfile::bundled(x))
        }
        Strategy::DeviceOnly => {
            best_on_line(exec, &stepped(0.0, cap1, price_step), |x| profit(PriceProfile::device_only(x)))
                .map(|(x, _)| PriceProfile::device_only(x))
        }
        Strategy::Separate => {
            let g = stepped(0.0, 1.0, price_step);
            best_on_plane(exec, &g, &g, |x, y| profit(PriceProfile::separate(x, y)))
                .map(|((x, y), _)| PriceProfile::separate(x, y))
        }
        Strategy::Hybrid => best_on_plane(
            exec,
            &stepped(0.0, cap1, price_step),
            &stepped(0.0, cap12, price_step),
            |x, y| if y < x { None } else { profit(PriceProfile::hybrid(x, y)) },
        )
        .map(|((x, y), _)| PriceProfile::hybrid(x, y)),
    };
    let prices = prices.ok_or_else(|| SolveError::UnsupportedConfiguration("no convergent lattice point".into()))?;
    let (demands, _) = eval(prices).expect("winning point converged");
    Ok(StrategySolution::new(strategy, prices, demands, c1, c2))
}
