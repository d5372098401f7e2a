use serde::{Deserialize, Serialize};

use crate::params::{CubicDiagnostics, PriceProfile, Strategy};

/// Stage-II demand split at fixed prices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DemandEquilibrium {
    pub d1: f64,
    pub d2: f64,
    pub d12: f64,
    /// Population that feeds the externality.
    pub d_s: f64,
    pub residual: f64,
}

impl DemandEquilibrium {
    pub fn none() -> Self {
        DemandEquilibrium::default()
    }
}

/// Provider profit for the populated price fields.
pub fn profit_of(prices: &PriceProfile, d: &DemandEquilibrium, c1: f64, c2: f64) -> f64 {
    let mut pi = 0.0;
    if let Some(p1) = prices.p1 {
        pi += (p1 - c1) * d.d1;
    }
    if let Some(p2) = prices.p2 {
        pi += (p2 - c2) * d.d2;
    }
    if let Some(p12) = prices.p12 {
        pi += (p12 - c1 - c2) * d.d12;
    }
    pi
}

/// Optimal prices, demands and profit for one strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategySolution {
    pub strategy: Strategy,
    pub prices: PriceProfile,
    pub demands: DemandEquilibrium,
    pub profit: f64,
    pub service_offered: bool,
    pub diagnostics: Option<CubicDiagnostics>,
}

impl StrategySolution {
    pub fn new(strategy: Strategy, prices: PriceProfile, demands: DemandEquilibrium, c1: f64, c2: f64) -> Self {
        let profit = profit_of(&prices, &demands, c1, c2);
        let service_offered = demands.d2 > 0.0 || demands.d12 > 0.0;
        StrategySolution { strategy, prices, demands, profit, service_offered, diagnostics: None }
    }

    /// A strategy the provider declines: nothing sold, zero profit.
    pub fn not_offered(strategy: Strategy) -> Self {
        StrategySolution {
            strategy,
            prices: PriceProfile::default(),
            demands: DemandEquilibrium::none(),
            profit: 0.0,
            service_offered: false,
            diagnostics: None,
        }
    }

    pub fn is_offered(&self) -> bool {
        self.prices != PriceProfile::default()
    }
}
