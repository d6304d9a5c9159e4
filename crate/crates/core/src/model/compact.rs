//! LP relaxation of the compact robust model, where the inner worst-case
//! maximization is replaced by its LP dual (`p_ij`, `q_i`).

use super::Instance;
use crate::lp::{LpColumn, LpProblem, LpStatus, Row, RowSense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompactLpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompactLpResult {
    pub objective: f64,
    pub status: CompactLpStatus,
}

/// Optimal value of the compact LP relaxation:
///
/// ```text
/// min  Σ c_ij x_ij + Σ f_i y_i
/// s.t. Σ_i x_ij = 1                                    ∀ j
///      y_i - x_ij >= 0                                 ∀ i, j
///      s_i y_i - Σ_j d_j x_ij - Σ_j p_ij - Γ_i q_i >= 0  ∀ i
///      q_i + p_ij - b_j x_ij >= 0                      ∀ i, j
///      0 <= x, y <= 1;  p, q >= 0
/// ```
///
/// Dual variables are omitted for facilities with `Γ_i = 0` and customers
/// with `b_j = 0`, where they are identically zero at some optimum.
pub fn compact_lp_bound(inst: &Instance) -> CompactLpResult {
    let (m, n) = (inst.m(), inst.n());
    let robust = |i: usize, j: usize| inst.gamma(i) > 0 && inst.deviation(j) > 0;

    let mut rows = Vec::new();
    let assign_row = |j: usize| j;
    rows.extend((0..n).map(|_| Row { sense: RowSense::Eq, rhs: 1.0 }));
    let link_base = rows.len();
    let link_row = |i: usize, j: usize| link_base + i * n + j;
    rows.extend((0..m * n).map(|_| Row { sense: RowSense::Ge, rhs: 0.0 }));
    let cap_base = rows.len();
    rows.extend((0..m).map(|_| Row { sense: RowSense::Ge, rhs: 0.0 }));
    let mut dev_row = vec![vec![None; n]; m];
    for i in 0..m {
        for j in 0..n {
            if robust(i, j) {
                dev_row[i][j] = Some(rows.len());
                rows.push(Row { sense: RowSense::Ge, rhs: 0.0 });
            }
        }
    }

    let mut lp = LpProblem::new(rows);
    let mut add = |cost: f64, entries: Vec<(usize, f64)>, upper: f64| {
        lp.add_column(LpColumn { cost, entries, lower: 0.0, upper })
            .expect("compact LP columns reference existing rows");
    };
    for i in 0..m {
        for j in 0..n {
            let mut e = vec![
                (assign_row(j), 1.0),
                (link_row(i, j), -1.0),
                (cap_base + i, -(inst.demand(j) as f64)),
            ];
            if let Some(k) = dev_row[i][j] {
                e.push((k, -(inst.deviation(j) as f64)));
            }
            add(inst.assign_cost(i, j) as f64, e, 1.0);
        }
        let mut e: Vec<(usize, f64)> = (0..n).map(|j| (link_row(i, j), 1.0)).collect();
        e.push((cap_base + i, inst.capacity(i) as f64));
        add(inst.fixed_cost(i) as f64, e, 1.0);
        if inst.gamma(i) > 0 && dev_row[i].iter().any(Option::is_some) {
            let mut q: Vec<(usize, f64)> = vec![(cap_base + i, -(inst.gamma(i) as f64))];
            q.extend(dev_row[i].iter().flatten().map(|&k| (k, 1.0)));
            add(0.0, q, f64::INFINITY);
            for &k in dev_row[i].iter().flatten() {
                add(0.0, vec![(cap_base + i, -1.0), (k, 1.0)], f64::INFINITY);
            }
        }
    }

    let sol = lp.solve();
    match sol.status {
        LpStatus::Optimal => CompactLpResult {
            objective: sol.objective,
            status: CompactLpStatus::Optimal,
        },
        _ => CompactLpResult {
            objective: f64::INFINITY,
            status: CompactLpStatus::Infeasible,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_facility_bound_is_exact() {
        let inst = Instance::new(vec![5], vec![10], vec![1], vec![3, 4], vec![1, 2], vec![vec![1, 2]]).unwrap();
        let res = compact_lp_bound(&inst);
        assert_eq!(res.status, CompactLpStatus::Optimal);
        assert!((res.objective - 8.0).abs() < 1e-9);
    }

    #[test]
    fn robust_terms_tighten_the_relaxation() {
        // Two facilities; the cheap one cannot absorb the worst case.
        let base = Instance::new(
            vec![10, 10],
            vec![7, 100],
            vec![0, 0],
            vec![3, 4],
            vec![2, 2],
            vec![vec![0, 0], vec![50, 50]],
        )
        .unwrap();
        let nominal = compact_lp_bound(&base).objective;
        let robust = compact_lp_bound(&base.with_uniform_gamma(2)).objective;
        assert!(robust > nominal + 1.0);
    }

    #[test]
    fn infeasible_when_capacity_short() {
        let inst = Instance::new(vec![1], vec![2], vec![0], vec![3], vec![0], vec![vec![1]]).unwrap();
        assert_eq!(compact_lp_bound(&inst).status, CompactLpStatus::Infeasible);
    }
}
