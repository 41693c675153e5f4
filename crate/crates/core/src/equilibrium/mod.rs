//! Cost-form equilibrium system.
//!
//! For relative prices `p ≥ 0`, country `k` earns `D_k(p) = Σ_s p_s b_sk`
//! and its import basket costs `E_k(p) = Σ_s p_s c_sk`. Demand for goods `s`
//! is `Σ_k c_sk · D_k / E_k` and the exchange is in equilibrium when that
//! demand never exceeds `psi_s = Σ_k b_sk`. Excess demand is homogeneous of
//! degree zero in `p` and satisfies the Walras identity `Σ_s p_s d_s = 0`.
//!
//! A country whose demand column is identically zero imports nothing and
//! contributes no demand. A country with a nonzero demand column whose
//! basket costs nothing at `p` while it still earns income has unbounded
//! demand; that is reported as [`EquilibriumError::UndefinedDemand`].

mod oracle;
mod solver;

pub use oracle::{brute_force_oracle, OracleResult, ORACLE_FEASIBILITY_TOL};
pub use solver::solve_relative_prices;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    expenditures, incomes, supply_vector, DemandMatrix, ModelError, PriceVector, SupplyMatrix,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(
        "demand undefined: country {country} has income {income} but expenditure {expenditure} at these prices"
    )]
    UndefinedDemand {
        country: usize,
        income: f64,
        expenditure: f64,
    },
    #[error("total supply is zero")]
    ZeroSupply,
    #[error(
        "no residual decrease within {window} iterations (best residual {})",
        .best.complementarity_residual
    )]
    NoProgress {
        window: usize,
        best: Box<EquilibriumResult>,
    },
    #[error("brute-force oracle supports at most {max} goods, got {goods}")]
    DimensionTooLarge { goods: usize, max: usize },
    #[error("grid step {0} must divide the unit interval into a whole number of cells")]
    InvalidGridStep(f64),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// Tunables for [`solve_relative_prices`].
///
/// Tolerances are relative: the residual tolerance is scaled by total supply
/// value, the zero-price threshold by the largest price, and the expenditure
/// guard by total supply value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Exponent of the multiplicative price update, in (0, 1].
    pub damping: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub zero_price_threshold: f64,
    pub expenditure_guard: f64,
    /// Attempt a support-restricted Newton polish every this many iterations.
    pub polish_interval: usize,
    /// Give up with `NoProgress` after this many iterations without a new best residual.
    pub stall_window: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iterations: 100_000,
            tolerance: 1e-10,
            zero_price_threshold: 1e-9,
            expenditure_guard: 1e-12,
            polish_interval: 50,
            stall_window: 10_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), EquilibriumError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(EquilibriumError::InvalidConfig(format!(
                    "{name} must be finite and > 0, got {v}"
                )))
            }
        };
        positive("damping", self.damping)?;
        positive("tolerance", self.tolerance)?;
        positive("zero_price_threshold", self.zero_price_threshold)?;
        positive("expenditure_guard", self.expenditure_guard)?;
        if self.damping > 1.0 {
            return Err(EquilibriumError::InvalidConfig(format!(
                "damping must be <= 1, got {}",
                self.damping
            )));
        }
        if self.zero_price_threshold >= 1.0 {
            return Err(EquilibriumError::InvalidConfig(
                "zero_price_threshold must be < 1".into(),
            ));
        }
        for (name, v) in [
            ("max_iterations", self.max_iterations),
            ("polish_interval", self.polish_interval),
            ("stall_window", self.stall_window),
        ] {
            if v == 0 {
                return Err(EquilibriumError::InvalidConfig(format!(
                    "{name} must be >= 1"
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of an equilibrium solve. Goods and country indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub p0: Vec<f64>,
    pub excess: Vec<f64>,
    pub binding_set: Vec<usize>,
    pub slack_set: Vec<usize>,
    pub degeneracy: usize,
    /// Unsold share of total supply value at `p0`.
    #[serde(rename = "recession_level_proxy")]
    pub recession_level: f64,
    pub balance_ratios: Vec<f64>,
    pub incomes: Vec<f64>,
    pub expenditures: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub complementarity_residual: f64,
}

impl EquilibriumResult {
    pub fn prices(&self) -> PriceVector {
        PriceVector::new(self.p0.clone()).expect("solver prices are valid")
    }
}

/// Intermediate quantities of one evaluation of the equilibrium system.
#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    pub demand: Vec<f64>,
    pub excess: Vec<f64>,
    pub incomes: Vec<f64>,
    pub expenditures: Vec<f64>,
    /// Countries whose ratio `D_k / E_k` enters demand.
    pub active: Vec<bool>,
}

fn check_dims(demand: &DemandMatrix, supply: &SupplyMatrix) -> Result<(), ModelError> {
    if demand.goods() != supply.goods() {
        return Err(ModelError::DimensionMismatch {
            what: "goods count of supply matrix",
            expected: demand.goods(),
            got: supply.goods(),
        });
    }
    if demand.countries() != supply.countries() {
        return Err(ModelError::DimensionMismatch {
            what: "country count of supply matrix",
            expected: demand.countries(),
            got: supply.countries(),
        });
    }
    Ok(())
}

pub(crate) fn evaluate(
    demand: &DemandMatrix,
    supply: &SupplyMatrix,
    psi: &[f64],
    p: &[f64],
    guard: f64,
) -> Result<Evaluation, EquilibriumError> {
    let d = supply.weighted_column_sums(p);
    let e = demand.weighted_column_sums(p);
    let n = demand.goods();
    let mut dem = vec![0.0; n];
    let mut active = vec![false; demand.countries()];
    for k in 0..demand.countries() {
        if demand.column_is_zero(k) {
            continue;
        }
        if e[k] <= guard {
            if d[k] > guard {
                return Err(EquilibriumError::UndefinedDemand {
                    country: k,
                    income: d[k],
                    expenditure: e[k],
                });
            }
            continue;
        }
        active[k] = true;
        let ratio = d[k] / e[k];
        for (s, out) in dem.iter_mut().enumerate() {
            *out += demand.get(s, k) * ratio;
        }
    }
    let excess = dem.iter().zip(psi).map(|(x, y)| x - y).collect();
    Ok(Evaluation {
        demand: dem,
        excess,
        incomes: d,
        expenditures: e,
        active,
    })
}

/// Excess demand `d[s] = Σ_k c[s][k]·D_k/E_k − psi[s]`; `guard` is the
/// absolute expenditure level at or below which a country counts as spending
/// nothing.
pub fn excess_demand(
    demand: &DemandMatrix,
    supply: &SupplyMatrix,
    p: &PriceVector,
    guard: f64,
) -> Result<Vec<f64>, EquilibriumError> {
    check_dims(demand, supply)?;
    if p.len() != demand.goods() {
        return Err(ModelError::DimensionMismatch {
            what: "price vector",
            expected: demand.goods(),
            got: p.len(),
        }
        .into());
    }
    let psi = supply_vector(supply);
    evaluate(demand, supply, psi.as_slice(), p.as_slice(), guard).map(|ev| ev.excess)
}

/// Default absolute expenditure guard for a supply matrix.
pub fn default_guard(supply: &SupplyMatrix) -> f64 {
    SolverConfig::default().expenditure_guard * supply.total()
}

/// True when no good is over-demanded: `d[s] ≤ tol·max(1, psi[s])`.
pub fn is_equilibrium(
    demand: &DemandMatrix,
    supply: &SupplyMatrix,
    p: &PriceVector,
    tol: f64,
) -> Result<bool, EquilibriumError> {
    let d = excess_demand(demand, supply, p, default_guard(supply))?;
    let psi = supply_vector(supply);
    Ok(d.iter()
        .zip(psi.as_slice())
        .all(|(d, psi)| *d <= tol * psi.max(1.0)))
}

/// Number of goods priced at zero in the max-normalized vector.
pub fn degeneracy_multiplicity(p0: &PriceVector, zero_threshold: f64) -> usize {
    let max = p0.max();
    p0.as_slice()
        .iter()
        .filter(|&&p| p / max <= zero_threshold)
        .count()
}

pub(crate) fn unsold_fraction(excess: &[f64], total_supply: f64) -> f64 {
    let unsold: f64 = excess.iter().map(|d| (-d).max(0.0)).sum();
    (unsold / total_supply).clamp(0.0, 1.0)
}

/// Recession level proxy: unsold fraction of total supply value at `p0`,
/// `Σ_s max(0, −d_s) / Σ_s psi_s`.
pub fn recession_level(
    demand: &DemandMatrix,
    supply: &SupplyMatrix,
    p0: &PriceVector,
) -> Result<f64, EquilibriumError> {
    let total = supply.total();
    if total <= 0.0 {
        return Err(EquilibriumError::ZeroSupply);
    }
    let d = excess_demand(demand, supply, p0, default_guard(supply))?;
    Ok(unsold_fraction(&d, total))
}

pub(crate) fn ratios(inc: &[f64], exp: &[f64], guard: f64) -> Result<Vec<f64>, EquilibriumError> {
    inc.iter()
        .zip(exp)
        .enumerate()
        .map(|(k, (&d, &e))| {
            if e > guard {
                Ok(d / e)
            } else if d <= guard {
                // no trade at these prices: balanced
                Ok(1.0)
            } else {
                Err(EquilibriumError::UndefinedDemand {
                    country: k,
                    income: d,
                    expenditure: e,
                })
            }
        })
        .collect()
}

/// Income-to-expenditure ratio `D_k/E_k` of each country at `p0`.
/// Countries that neither earn nor spend report 1.
pub fn balance_ratios(
    demand: &DemandMatrix,
    supply: &SupplyMatrix,
    p0: &PriceVector,
) -> Result<Vec<f64>, EquilibriumError> {
    check_dims(demand, supply)?;
    let inc = incomes(supply, p0)?;
    let exp = expenditures(demand, p0)?;
    ratios(&inc, &exp, default_guard(supply))
}

pub(crate) fn residual_of(p: &[f64], excess: &[f64]) -> f64 {
    let max = p.iter().copied().fold(0.0, f64::max);
    p.iter()
        .zip(excess)
        .map(|(p, d)| (p / max) * (-d).max(0.0) + d.max(0.0))
        .sum()
}

/// `Σ_s p̂_s·max(0, −d_s) + Σ_s max(0, d_s)` with `p̂ = p / max(p)`: zero
/// exactly at equilibrium vectors satisfying complementary slackness.
pub fn complementarity_residual(
    demand: &DemandMatrix,
    supply: &SupplyMatrix,
    p: &PriceVector,
) -> Result<f64, EquilibriumError> {
    let d = excess_demand(demand, supply, p, default_guard(supply))?;
    Ok(residual_of(p.as_slice(), &d))
}
