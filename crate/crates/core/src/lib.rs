//! Cost-form model of international trade as an exchange economy.
//!
//! Bilateral flows are aggregated into a demand matrix `C` (goods × countries,
//! what each country imports) and a supply matrix `B` (what each country
//! exports). The crate finds relative prices at which no good is in excess
//! demand, measures how many goods are priced at zero (degeneracy), and
//! derives market-share decompositions and their year-over-year changes.
//!
//! ```
//! use tradeq::equilibrium::{solve_relative_prices, SolverConfig};
//! use tradeq::model::{DemandMatrix, SupplyMatrix};
//!
//! let c = DemandMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
//! let b = SupplyMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
//! let r = solve_relative_prices(&c, &b, &SolverConfig::default()).unwrap();
//! assert_eq!(r.degeneracy, 1);
//! assert!((r.recession_level - 0.5).abs() < 1e-9);
//! ```

pub mod analytics;
pub mod cli;
pub mod equilibrium;
pub mod ingest;
pub mod model;
pub mod report;

pub use analytics::{AnalyticsError, DynamicsReport, ShareMetric, ShareReport};
pub use equilibrium::{EquilibriumError, EquilibriumResult, SolverConfig};
pub use ingest::IngestError;
pub use model::{
    CountrySet, DemandMatrix, GoodsSet, ModelError, PriceVector, SupplyMatrix, SupplyVector,
    TradeTensors,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Arguments that parse but cannot be combined.
    #[error("{0}")]
    Usage(String),
}
