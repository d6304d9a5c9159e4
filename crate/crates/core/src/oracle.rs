//! Exhaustive reference solvers for small instances.

use crate::error::{Error, Result};
use crate::lp::{LpColumn, LpProblem, LpStatus, Row, RowSense};
use crate::model::{Assignment, Instance};

/// Largest `m^n` the brute-force solver accepts.
pub const MAX_ASSIGNMENTS: f64 = 2e7;
/// Largest `n` for full column enumeration.
pub const MAX_ENUM_CUSTOMERS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    /// `None` when no robust-feasible assignment exists.
    pub objective: Option<i64>,
    pub assignment: Option<Assignment>,
}

struct Dfs<'a> {
    inst: &'a Instance,
    members: Vec<Vec<usize>>,
    facility_of: Vec<usize>,
    /// Cheapest assignment cost of each customer over all facilities.
    min_cost: Vec<i64>,
    best: Option<(i64, Vec<usize>)>,
}

impl Dfs<'_> {
    fn go(&mut self, j: usize, cost: i64) {
        let rest: i64 = self.min_cost[j..].iter().sum();
        if self.best.as_ref().is_some_and(|(b, _)| cost + rest >= *b) {
            return;
        }
        if j == self.inst.n() {
            self.best = Some((cost, self.facility_of.clone()));
            return;
        }
        for i in 0..self.inst.m() {
            let opening = if self.members[i].is_empty() { self.inst.fixed_cost(i) } else { 0 };
            self.members[i].push(j);
            if self.inst.worst_case_load(i, &self.members[i]) <= self.inst.capacity(i) {
                self.facility_of[j] = i;
                self.go(j + 1, cost + opening + self.inst.assign_cost(i, j));
            }
            self.members[i].pop();
        }
    }
}

/// Exact optimum by depth-first enumeration of customer assignments, pruned
/// by running worst-case loads and a cost bound. Only facilities that serve
/// someone are opened.
pub fn brute_force_optimal(inst: &Instance) -> Result<OracleResult> {
    let (m, n) = (inst.m(), inst.n());
    if (m as f64).powi(n as i32) > MAX_ASSIGNMENTS {
        return Err(Error::TooLarge(format!("{m}^{n} assignments exceed the enumeration guard")));
    }
    let min_cost = (0..n).map(|j| (0..m).map(|i| inst.assign_cost(i, j)).min().unwrap()).collect();
    let mut dfs = Dfs {
        inst,
        members: vec![Vec::new(); m],
        facility_of: vec![0; n],
        min_cost,
        best: None,
    };
    dfs.go(0, 0);
    Ok(match dfs.best {
        Some((z, fo)) => OracleResult {
            objective: Some(z),
            assignment: Some(Assignment::from_facility_of(m, fo)),
        },
        None => OracleResult { objective: None, assignment: None },
    })
}

/// Every robust-feasible nonempty allocation of facility `i`.
pub fn enumerate_columns(inst: &Instance, i: usize) -> Result<Vec<Vec<usize>>> {
    let n = inst.n();
    if n > MAX_ENUM_CUSTOMERS {
        return Err(Error::TooLarge(format!("{n} customers exceed the column enumeration guard")));
    }
    Ok((1u32..1 << n)
        .map(|mask| (0..n).filter(|j| mask >> j & 1 == 1).collect::<Vec<_>>())
        .filter(|r| inst.is_feasible_column(i, r))
        .collect())
}

/// LP value of the allocation master with every column present and no
/// dummy; `None` when even the relaxation is infeasible.
pub fn full_master_lp(inst: &Instance) -> Result<Option<f64>> {
    let (m, n) = (inst.m(), inst.n());
    let mut rows: Vec<Row> = (0..n).map(|_| Row { sense: RowSense::Ge, rhs: 1.0 }).collect();
    rows.extend((0..m).map(|_| Row { sense: RowSense::Ge, rhs: -1.0 }));
    let mut lp = LpProblem::new(rows);
    for i in 0..m {
        for r in enumerate_columns(inst, i)? {
            let mut entries: Vec<(usize, f64)> = r.iter().map(|&j| (j, 1.0)).collect();
            entries.push((n + i, -1.0));
            lp.add_column(LpColumn {
                cost: inst.column_cost(i, &r) as f64,
                entries,
                lower: 0.0,
                upper: f64::INFINITY,
            })?;
        }
    }
    let sol = lp.solve();
    match sol.status {
        LpStatus::Optimal => Ok(Some(sol.objective)),
        LpStatus::Infeasible => Ok(None),
        other => Err(Error::Lp(format!("full master ended with {other:?}"))),
    }
}
