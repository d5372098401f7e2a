//! Content-sharing model: service value grows with the number of bundle
//! subscribers, valuations are two-dimensional.

pub mod bundled;
mod demand;
pub mod hybrid;

use serde::{Deserialize, Serialize};

pub use bundled::{
    bundle_demand_content, bundled_optimal_content, bundled_optimal_content_with, bundled_regime, high_regime_demand,
    low_regime_condition, medium_regime_demand, regime_interval, regime_price, BundleRegime, RegimeClassification,
};
pub use hybrid::{
    degenerates_to_bundle, device_only_content, hybrid_demand_detail, hybrid_demands_content,
    hybrid_optimal_content, hybrid_optimal_content_with, low_regime_bundle_price, HybridContentDemand, PriceRegime,
    RootSelection,
};

use crate::error::{check_valid, SolveError};
use crate::exec::SearchConfig;
use crate::params::{ContentParams, PriceProfile, Strategy};
use crate::solution::{profit_of, DemandEquilibrium};

pub(crate) const CONTENT_QUAD_TOL: f64 = 1e-10;
/// Fixed-point scan resolution for laws without the piecewise shortcut.
pub(crate) const CONTENT_SCAN_GRID: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContentSolution {
    pub strategy: Strategy,
    pub regime: Option<BundleRegime>,
    pub prices: PriceProfile,
    pub demands: DemandEquilibrium,
    pub profit: f64,
    /// Hybrid optimum that sells nothing device-only.
    pub degenerate_to_bundle: bool,
}

impl ContentSolution {
    pub fn new(
        strategy: Strategy,
        regime: Option<BundleRegime>,
        prices: PriceProfile,
        demands: DemandEquilibrium,
        params: &ContentParams,
    ) -> Self {
        let profit = profit_of(&prices, &demands, params.c1, params.c2);
        let degenerate_to_bundle = strategy == Strategy::Hybrid && demands.d1 <= 1e-9;
        ContentSolution { strategy, regime, prices, demands, profit, degenerate_to_bundle }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContentComparison {
    /// `None` when the bundle cannot be sold at a profit.
    pub bundled: Option<ContentSolution>,
    pub hybrid: ContentSolution,
    pub winner: Strategy,
    pub degeneration_condition: bool,
}

impl ContentComparison {
    pub fn winning_solution(&self) -> &ContentSolution {
        match (&self.bundled, self.winner) {
            (Some(b), Strategy::Bundled) => b,
            _ => &self.hybrid,
        }
    }

    pub fn winner_label(&self) -> &'static str {
        self.winning_solution().strategy.name()
    }
}

pub fn compare_content(params: &ContentParams) -> Result<ContentComparison, SolveError> {
    compare_content_with(params, &SearchConfig::default())
}

/// Bundle against hybrid. Ties within a relative 1e-9 go to the bundle.
pub fn compare_content_with(params: &ContentParams, cfg: &SearchConfig) -> Result<ContentComparison, SolveError> {
    check_valid(params)?;
    let bundled = match bundled_optimal_content_with(params, cfg) {
        Ok(b) => Some(b),
        Err(SolveError::NotOffered) => None,
        Err(e) => return Err(e),
    };
    let hybrid = hybrid_optimal_content_with(params, cfg)?;
    let winner = match &bundled {
        Some(b) if b.profit + 1e-9 * (1.0 + b.profit.abs()) >= hybrid.profit => Strategy::Bundled,
        _ => Strategy::Hybrid,
    };
    Ok(ContentComparison { bundled, hybrid, winner, degeneration_condition: degenerates_to_bundle(params) })
}
