//! Exhaustive search over a regular grid on the price simplex.
//!
//! Used to cross-check the solver on small instances. The evaluation of the
//! inequality system here is written out independently of [`super::evaluate`].

use super::EquilibriumError;
use crate::model::{DemandMatrix, SupplyMatrix};

pub const ORACLE_MAX_GOODS: usize = 3;

/// Grid nodes whose excess demand is at most this fraction of
/// `max(1, psi[s])` for every good count as feasible.
pub const ORACLE_FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub grid_step: f64,
    pub goods: usize,
    /// Residual-minimizing node in simplex coordinates (sums to one).
    pub best: Vec<f64>,
    pub best_residual: f64,
    pub nodes_evaluated: usize,
    feasible: Vec<f64>,
}

impl OracleResult {
    pub fn feasible_count(&self) -> usize {
        self.feasible.len() / self.goods
    }

    pub fn feasible_nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.feasible.chunks_exact(self.goods)
    }

    /// Components of the best node that sit on the zero face of the grid.
    pub fn best_degeneracy(&self) -> usize {
        self.best
            .iter()
            .filter(|&&v| v < self.grid_step / 2.0)
            .count()
    }
}

/// `None` where some country's demand is unbounded at `p`.
fn node_excess(
    c: &DemandMatrix,
    b: &SupplyMatrix,
    psi: &[f64],
    p: &[f64],
    guard: f64,
) -> Option<Vec<f64>> {
    let mut out: Vec<f64> = psi.iter().map(|v| -v).collect();
    for k in 0..c.countries() {
        let mut income = 0.0;
        let mut spend = 0.0;
        let mut imports_anything = false;
        for (s, &ps) in p.iter().enumerate() {
            income += ps * b.get(s, k);
            spend += ps * c.get(s, k);
            imports_anything |= c.get(s, k) != 0.0;
        }
        if !imports_anything {
            continue;
        }
        if spend <= guard {
            if income > guard {
                return None;
            }
            continue;
        }
        for (s, o) in out.iter_mut().enumerate() {
            *o += c.get(s, k) * income / spend;
        }
    }
    Some(out)
}

/// Visits the compositions of `total` into `parts` nonnegative integers in
/// lexicographic order.
fn for_each_composition(parts: usize, total: usize, mut f: impl FnMut(&[usize])) {
    let mut cur = vec![0usize; parts];
    fn rec(cur: &mut Vec<usize>, idx: usize, left: usize, f: &mut dyn FnMut(&[usize])) {
        if idx + 1 == cur.len() {
            cur[idx] = left;
            f(cur);
            return;
        }
        for v in 0..=left {
            cur[idx] = v;
            rec(cur, idx + 1, left - v, f);
        }
    }
    rec(&mut cur, 0, total, &mut f);
}

/// Enumerates the unit price simplex at resolution `grid_step` (n ≤ 3).
///
/// Each node is scored by the complementarity residual of its max-normalized
/// form; nodes where demand is undefined score infinity. Among nodes tied
/// with the minimum residual the one with fewest zero components wins, then
/// the first in enumeration order.
pub fn brute_force_oracle(
    demand: &DemandMatrix,
    supply: &SupplyMatrix,
    grid_step: f64,
) -> Result<OracleResult, EquilibriumError> {
    let n = demand.goods();
    if n > ORACLE_MAX_GOODS {
        return Err(EquilibriumError::DimensionTooLarge {
            goods: n,
            max: ORACLE_MAX_GOODS,
        });
    }
    if n == 0 || supply.goods() != n || supply.countries() != demand.countries() {
        return Err(crate::model::ModelError::DimensionMismatch {
            what: "oracle instance shape",
            expected: n,
            got: supply.goods(),
        }
        .into());
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(EquilibriumError::InvalidGridStep(grid_step));
    }
    let cells = (1.0 / grid_step).round();
    if (cells * grid_step - 1.0).abs() > 1e-9 {
        return Err(EquilibriumError::InvalidGridStep(grid_step));
    }
    let cells = cells as usize;

    let psi: Vec<f64> = (0..n).map(|s| supply.row(s).iter().sum()).collect();
    let total: f64 = psi.iter().sum();
    if total <= 0.0 {
        return Err(EquilibriumError::ZeroSupply);
    }
    let guard = 1e-12 * total;
    let tie = 1e-12 * total.max(1.0);

    let mut nodes: Vec<f64> = Vec::new();
    let mut residuals: Vec<f64> = Vec::new();
    let mut feasible: Vec<f64> = Vec::new();
    let mut p = vec![0.0; n];
    for_each_composition(n, cells, |counts| {
        for (v, &c) in p.iter_mut().zip(counts) {
            *v = c as f64 / cells as f64;
        }
        let residual = match node_excess(demand, supply, &psi, &p, guard) {
            None => f64::INFINITY,
            Some(d) => {
                if d.iter()
                    .zip(&psi)
                    .all(|(d, psi)| *d <= ORACLE_FEASIBILITY_TOL * psi.max(1.0))
                {
                    feasible.extend_from_slice(&p);
                }
                let max = p.iter().copied().fold(0.0, f64::max);
                p.iter()
                    .zip(&d)
                    .map(|(p, d)| (p / max) * (-d).max(0.0) + d.max(0.0))
                    .sum()
            }
        };
        nodes.extend_from_slice(&p);
        residuals.push(residual);
    });

    let min = residuals.iter().copied().fold(f64::INFINITY, f64::min);
    let zero_count = |i: usize| {
        nodes[i * n..(i + 1) * n]
            .iter()
            .filter(|&&v| v == 0.0)
            .count()
    };
    let mut best = 0;
    let mut best_zeros = usize::MAX;
    for (i, &r) in residuals.iter().enumerate() {
        if r <= min + tie {
            let z = zero_count(i);
            if z < best_zeros {
                best = i;
                best_zeros = z;
            }
        }
    }

    Ok(OracleResult {
        grid_step,
        goods: n,
        best: nodes[best * n..(best + 1) * n].to_vec(),
        best_residual: residuals[best],
        nodes_evaluated: residuals.len(),
        feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::{degenerate, ideal};
    use super::*;

    #[test]
    fn ideal_instance_best_node_is_barycenter() {
        let (c, b) = ideal();
        let r = brute_force_oracle(&c, &b, 1e-3).unwrap();
        assert_eq!(r.nodes_evaluated, 1001);
        assert_eq!(r.best, vec![0.5, 0.5]);
        assert_eq!(r.best_residual, 0.0);
        for node in r.feasible_nodes() {
            assert!((node[0] - node[1]).abs() < 1e-2, "{node:?}");
        }
        assert!(r.feasible_count() >= 1);
    }

    #[test]
    fn degenerate_instance_best_node_is_vertex() {
        let (c, b) = degenerate();
        let r = brute_force_oracle(&c, &b, 1e-3).unwrap();
        assert_eq!(r.best, vec![1.0, 0.0]);
        assert_eq!(r.best_residual, 0.0);
        assert_eq!(r.best_degeneracy(), 1);
        assert_eq!(r.feasible_count(), 1);
    }

    #[test]
    fn off_grid_equilibrium_leaves_feasible_set_empty() {
        // unique equilibrium ray p1 = 2 p2, i.e. (2/3, 1/3); both vertices undefined
        let c = DemandMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let b = SupplyMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        let r = brute_force_oracle(&c, &b, 1e-3).unwrap();
        assert_eq!(r.feasible_count(), 0);
        assert!((r.best[0] - 2.0 / 3.0).abs() < 2e-3);
    }

    #[test]
    fn three_goods_grid_size() {
        let c = DemandMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let b = SupplyMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let r = brute_force_oracle(&c, &b, 0.1).unwrap();
        assert_eq!(r.nodes_evaluated, 66);
        // every node is an equilibrium; the barycentric-most tie wins
        assert_eq!(r.best_degeneracy(), 0);
    }

    #[test]
    fn rejects_large_dimension_and_bad_grid() {
        let c = DemandMatrix::from_rows(&vec![vec![1.0]; 4]).unwrap();
        let b = SupplyMatrix::from_rows(&vec![vec![1.0]; 4]).unwrap();
        assert!(matches!(
            brute_force_oracle(&c, &b, 1e-3),
            Err(EquilibriumError::DimensionTooLarge { goods: 4, max: 3 })
        ));
        let (c, b) = ideal();
        assert!(matches!(
            brute_force_oracle(&c, &b, 0.3),
            Err(EquilibriumError::InvalidGridStep(_))
        ));
    }
}
