//! Multiplicative tâtonnement with a support-restricted Newton polish.
//!
//! Each step raises the price of over-demanded goods and lowers the price of
//! over-supplied ones:
//!
//! ```text
//! p[s] <- p[s] * ((demand[s] + kappa) / (psi[s] + kappa))^damping
//! ```
//!
//! followed by max-renormalization. Goods whose relative price falls below
//! the zero threshold while in excess supply are pinned to zero; a pinned
//! good that becomes over-demanded is re-seeded at the threshold.
//!
//! Boundary equilibria, where a good has zero price and zero excess, are
//! approached only sublinearly by the plain iteration. Every
//! `polish_interval` steps the solver therefore guesses the positive support
//! from the current iterate and runs Gauss-Newton on the equalities
//! `d[s] = 0` over that support, keeping the largest price fixed.

use nalgebra::{DMatrix, DVector};

use super::{
    evaluate, ratios, residual_of, unsold_fraction, EquilibriumError, EquilibriumResult,
    Evaluation, SolverConfig,
};
use crate::model::{supply_vector, DemandMatrix, ModelError, SupplyMatrix};

const SUPPORT_THRESHOLDS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 0.0];
const NEWTON_STEPS: usize = 40;
const MIN_STEP: f64 = 1e-6;

struct Problem<'a> {
    demand: &'a DemandMatrix,
    supply: &'a SupplyMatrix,
    psi: Vec<f64>,
    guard: f64,
    tol: f64,
    tau_scale: f64,
}

impl Problem<'_> {
    fn eval(&self, p: &[f64]) -> Result<Evaluation, EquilibriumError> {
        evaluate(self.demand, self.supply, &self.psi, p, self.guard)
    }

    fn feasible(&self, excess: &[f64]) -> bool {
        excess
            .iter()
            .zip(&self.psi)
            .all(|(d, psi)| *d <= self.tol * psi.max(1.0))
    }

    fn converged(&self, p: &[f64], ev: &Evaluation) -> bool {
        self.feasible(&ev.excess) && residual_of(p, &ev.excess) <= self.tau_scale
    }

    /// `∂d_s/∂p_t = Σ_k c_sk (b_tk E_k − D_k c_tk) / E_k²` over active countries.
    fn jacobian(&self, ev: &Evaluation, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            let (s, t) = (rows[i], cols[j]);
            (0..self.demand.countries())
                .filter(|&k| ev.active[k])
                .map(|k| {
                    let e = ev.expenditures[k];
                    self.demand.get(s, k)
                        * (self.supply.get(t, k) * e - ev.incomes[k] * self.demand.get(t, k))
                        / (e * e)
                })
                .sum()
        })
    }

    fn support_norm(ev: &Evaluation, support: &[usize]) -> f64 {
        support.iter().map(|&s| ev.excess[s] * ev.excess[s]).sum()
    }

    /// Gauss-Newton on `d[s] = 0, s ∈ support(p)` with the largest price held.
    fn newton(&self, mut p: Vec<f64>) -> Option<Vec<f64>> {
        let mut ev = self.eval(&p).ok()?;
        if self.converged(&p, &ev) {
            return Some(p);
        }
        for _ in 0..NEWTON_STEPS {
            let support: Vec<usize> = (0..p.len()).filter(|&s| p[s] > 0.0).collect();
            let fixed = argmax(&p);
            let free: Vec<usize> = support.iter().copied().filter(|&s| s != fixed).collect();
            if free.is_empty() {
                return None;
            }
            let jac = self.jacobian(&ev, &support, &free);
            let rhs = DVector::from_iterator(support.len(), support.iter().map(|&s| -ev.excess[s]));
            let step = jac.svd(true, true).solve(&rhs, 1e-14).ok()?;
            let current = Self::support_norm(&ev, &support);

            let mut t = 1.0;
            let accepted = loop {
                if t < MIN_STEP {
                    break None;
                }
                let mut trial = p.clone();
                for (i, &s) in free.iter().enumerate() {
                    trial[s] += t * step[i];
                }
                if free.iter().all(|&s| trial[s] > 0.0 && trial[s].is_finite()) {
                    if let Ok(tev) = self.eval(&trial) {
                        if Self::support_norm(&tev, &support) < current {
                            break Some((trial, tev));
                        }
                    }
                }
                t *= 0.5;
            };
            let (trial, tev) = accepted?;
            let max = trial.iter().copied().fold(0.0, f64::max);
            p = trial.into_iter().map(|v| v / max).collect();
            ev = if max == 1.0 { tev } else { self.eval(&p).ok()? };
            if self.converged(&p, &ev) {
                return Some(p);
            }
        }
        None
    }

    fn polish(&self, p: &[f64]) -> Option<Vec<f64>> {
        let mut tried: Vec<Vec<bool>> = Vec::new();
        for th in SUPPORT_THRESHOLDS {
            let q: Vec<f64> = p.iter().map(|&v| if v <= th { 0.0 } else { v }).collect();
            let pattern: Vec<bool> = q.iter().map(|&v| v > 0.0).collect();
            if !pattern.iter().any(|&b| b) || tried.contains(&pattern) {
                continue;
            }
            tried.push(pattern);
            if let Some(found) = self.newton(q) {
                return Some(found);
            }
        }
        None
    }

    /// Zero prices of goods in strict excess supply, keeping the change only
    /// if the vector stays converged.
    fn clean(&self, p: Vec<f64>, ev: Evaluation, zero_threshold: f64) -> (Vec<f64>, Evaluation) {
        let cleaned: Vec<f64> = p
            .iter()
            .zip(&ev.excess)
            .map(|(&v, &d)| {
                if v <= zero_threshold || d < -self.tau_scale {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        if cleaned == p || cleaned.iter().all(|&v| v == 0.0) {
            return (p, ev);
        }
        let max = cleaned.iter().copied().fold(0.0, f64::max);
        let cleaned: Vec<f64> = cleaned.into_iter().map(|v| v / max).collect();
        match self.eval(&cleaned) {
            Ok(cev) if self.converged(&cleaned, &cev) => (cleaned, cev),
            _ => (p, ev),
        }
    }

    fn result(
        &self,
        p: Vec<f64>,
        ev: Evaluation,
        iterations: usize,
        config: &SolverConfig,
    ) -> Result<EquilibriumResult, EquilibriumError> {
        let converged = self.converged(&p, &ev);
        let (p, ev) = if converged {
            self.clean(p, ev, config.zero_price_threshold)
        } else {
            (p, ev)
        };
        let binding_set = (0..p.len())
            .filter(|&s| ev.excess[s].abs() <= self.tau_scale)
            .collect();
        let slack_set = (0..p.len())
            .filter(|&s| ev.excess[s] < -self.tau_scale)
            .collect();
        let degeneracy = p
            .iter()
            .filter(|&&v| v <= config.zero_price_threshold)
            .count();
        let balance_ratios = ratios(&ev.incomes, &ev.expenditures, self.guard)?;
        Ok(EquilibriumResult {
            complementarity_residual: residual_of(&p, &ev.excess),
            recession_level: unsold_fraction(&ev.excess, self.psi.iter().sum()),
            p0: p,
            excess: ev.excess,
            binding_set,
            slack_set,
            degeneracy,
            balance_ratios,
            incomes: ev.incomes,
            expenditures: ev.expenditures,
            iterations,
            converged,
        })
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Solves for the relative equilibrium price vector, starting from all ones.
///
/// Returns `converged = false` with the best iterate when `max_iterations`
/// is exhausted, and [`EquilibriumError::NoProgress`] when the residual has
/// not improved for `stall_window` consecutive iterations.
pub fn solve_relative_prices(
    demand: &DemandMatrix,
    supply: &SupplyMatrix,
    config: &SolverConfig,
) -> Result<EquilibriumResult, EquilibriumError> {
    config.validate()?;
    if demand.goods() != supply.goods() || demand.countries() != supply.countries() {
        return Err(ModelError::DimensionMismatch {
            what: "supply matrix shape",
            expected: demand.goods() * demand.countries(),
            got: supply.goods() * supply.countries(),
        }
        .into());
    }
    let psi = supply_vector(supply).0;
    let total: f64 = psi.iter().sum();
    if total <= 0.0 {
        return Err(EquilibriumError::ZeroSupply);
    }
    // A country that imports nothing but exports something can never spend
    // its income; no price vector removes that.
    for k in 0..demand.countries() {
        if demand.column_is_zero(k) && !supply.column_is_zero(k) {
            let income: f64 = (0..supply.goods()).map(|s| supply.get(s, k)).sum();
            return Err(EquilibriumError::UndefinedDemand {
                country: k,
                income,
                expenditure: 0.0,
            });
        }
    }

    let guard = config.expenditure_guard * total;
    let problem = Problem {
        demand,
        supply,
        psi,
        guard,
        tol: config.tolerance,
        tau_scale: config.tolerance * total.max(1.0),
    };
    let kappa = guard;
    let zero = config.zero_price_threshold;

    let mut p = vec![1.0; demand.goods()];
    let mut best: Option<(f64, Vec<f64>, Evaluation, usize)> = None;
    let mut since_best = 0usize;

    for it in 0..config.max_iterations {
        let ev = problem.eval(&p)?;
        if problem.converged(&p, &ev) {
            return problem.result(p, ev, it, config);
        }
        let res = residual_of(&p, &ev.excess);
        if best.as_ref().is_none_or(|(r, ..)| res < *r) {
            best = Some((res, p.clone(), ev.clone(), it));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.stall_window {
                let (_, bp, bev, _) = best.expect("best iterate recorded");
                let best = problem.result(bp, bev, it, config)?;
                return Err(EquilibriumError::NoProgress {
                    window: config.stall_window,
                    best: Box::new(best),
                });
            }
        }
        if (it + 1) % config.polish_interval == 0 {
            if let Some(q) = problem.polish(&p) {
                let qev = problem.eval(&q)?;
                return problem.result(q, qev, it + 1, config);
            }
        }

        for (s, v) in p.iter_mut().enumerate() {
            *v *= ((ev.demand[s] + kappa) / (problem.psi[s] + kappa)).powf(config.damping);
        }
        let max = p.iter().copied().fold(0.0, f64::max);
        for (s, v) in p.iter_mut().enumerate() {
            *v /= max;
            let d = ev.excess[s];
            if *v < zero && d < 0.0 {
                *v = 0.0;
            } else if *v == 0.0 && d > problem.tol * problem.psi[s].max(1.0) {
                *v = zero;
            }
        }
    }

    let (_, bp, bev, _) = best.expect("at least one iteration");
    problem.result(bp, bev, config.max_iterations, config)
}
