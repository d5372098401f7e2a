//! Demand equilibria and optimal prices for a device sold alongside a
//! network-externality service.

pub mod connectivity;
pub mod content;
pub mod error;
pub mod exec;
pub mod fmt;
pub mod numerics;
pub mod oracle;
pub mod params;
pub mod regime;
pub mod solution;

pub use error::{NumericsError, SolveError};
pub use exec::{Execution, SearchConfig};
pub use params::*;
pub use solution::{profit_of, DemandEquilibrium, StrategySolution};
