//! Restricted master problem over allocation columns.
//!
//! Rows `0..n` are customer covering rows `Σ z >= 1`; rows `n..n+m` are
//! facility convexity rows `-Σ z >= -1`, switched to `=` while the facility
//! is fixed open. LP column 0 is the dummy facility that covers every
//! customer at twice the total cost of the instance and keeps the LP
//! feasible. The column pool is shared by all nodes of the search tree;
//! node fixes are applied as zero upper bounds.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lp::{LpColumn, LpProblem, LpStatus, Row, RowSense};
use crate::model::Instance;

/// Dummy value above which a converged node is declared infeasible.
pub const DUMMY_TOL: f64 = 1e-6;

/// An allocation: facility `i` serving exactly `customers`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub facility: usize,
    /// Ascending customer indices.
    pub customers: Vec<usize>,
    /// Fixed cost plus assignment costs.
    pub cost: i64,
    pub lp_index: usize,
}

/// A branching or reduced-cost fixing decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fix {
    /// `y_i = 0`.
    Close { facility: usize },
    /// `y_i = 1`.
    Open { facility: usize },
    /// `x_ij = 0`.
    Forbid { facility: usize, customer: usize },
}

/// The accumulated fixes of a search node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeFixes {
    closed: Vec<bool>,
    opened: Vec<bool>,
    forbidden: Vec<Vec<bool>>,
}

impl NodeFixes {
    pub fn new(m: usize, n: usize) -> Self {
        Self {
            closed: vec![false; m],
            opened: vec![false; m],
            forbidden: vec![vec![false; n]; m],
        }
    }

    /// Adds `fix`. Returns false if it contradicts an existing fix.
    pub fn insert(&mut self, fix: Fix) -> bool {
        match fix {
            Fix::Close { facility } => {
                if self.opened[facility] {
                    return false;
                }
                self.closed[facility] = true;
            }
            Fix::Open { facility } => {
                if self.closed[facility] {
                    return false;
                }
                self.opened[facility] = true;
            }
            Fix::Forbid { facility, customer } => self.forbidden[facility][customer] = true,
        }
        true
    }

    pub fn is_closed(&self, i: usize) -> bool {
        self.closed[i]
    }

    pub fn is_opened(&self, i: usize) -> bool {
        self.opened[i]
    }

    pub fn is_forbidden(&self, i: usize, j: usize) -> bool {
        self.forbidden[i][j]
    }

    /// Per-customer mask of forbidden assignments to facility `i`.
    pub fn forbidden_mask(&self, i: usize) -> &[bool] {
        &self.forbidden[i]
    }

    /// Whether an allocation column survives these fixes.
    pub fn admits(&self, facility: usize, customers: &[usize]) -> bool {
        !self.closed[facility] && customers.iter().all(|&j| !self.forbidden[facility][j])
    }

    /// Whether `facility_of` (with its implied open set) satisfies every fix.
    pub fn admits_assignment(&self, facility_of: &[usize], open: &[bool]) -> bool {
        let closed_ok = (0..open.len()).all(|i| !(self.closed[i] && open[i]));
        let opened_ok = (0..open.len()).all(|i| !self.opened[i] || open[i]);
        let forbid_ok = facility_of
            .iter()
            .enumerate()
            .all(|(j, &i)| !self.forbidden[i][j]);
        closed_ok && opened_ok && forbid_ok
    }

    /// All fixes as a sorted list.
    pub fn to_list(&self) -> Vec<Fix> {
        let mut out = Vec::new();
        for i in 0..self.closed.len() {
            if self.closed[i] {
                out.push(Fix::Close { facility: i });
            }
            if self.opened[i] {
                out.push(Fix::Open { facility: i });
            }
            for (j, &f) in self.forbidden[i].iter().enumerate() {
                if f {
                    out.push(Fix::Forbid { facility: i, customer: j });
                }
            }
        }
        out
    }
}

/// Duals of the covering (`lambda`) and convexity (`mu`) rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPrices {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmpSolution {
    pub objective: f64,
    pub duals: DualPrices,
    /// Value per pool column, aligned with [`MasterState::columns`].
    pub z: Vec<f64>,
    pub dummy: f64,
}

/// How the column pool is seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPool {
    /// Dummy column only.
    DummyOnly,
    /// Dummy plus every admissible single-customer column.
    #[default]
    Singletons,
}

#[derive(Debug, Clone)]
pub struct MasterState<'a> {
    inst: &'a Instance,
    lp: LpProblem,
    columns: Vec<Column>,
    index: HashMap<(usize, Vec<usize>), usize>,
    fixes: NodeFixes,
    dummy_cost: i64,
}

impl<'a> MasterState<'a> {
    pub fn new(inst: &'a Instance, pool: InitialPool) -> Self {
        let (m, n) = (inst.m(), inst.n());
        let mut rows: Vec<Row> = (0..n).map(|_| Row { sense: RowSense::Ge, rhs: 1.0 }).collect();
        rows.extend((0..m).map(|_| Row { sense: RowSense::Ge, rhs: -1.0 }));
        let mut lp = LpProblem::new(rows);
        let dummy_cost = 2 * inst.total_cost();
        lp.add_column(LpColumn {
            cost: dummy_cost as f64,
            entries: (0..n).map(|j| (j, 1.0)).collect(),
            lower: 0.0,
            upper: f64::INFINITY,
        })
        .expect("dummy column fits the row set");
        let mut state = Self {
            inst,
            lp,
            columns: Vec::new(),
            index: HashMap::new(),
            fixes: NodeFixes::new(m, n),
            dummy_cost,
        };
        if pool == InitialPool::Singletons {
            for i in 0..m {
                for j in 0..n {
                    if inst.is_feasible_column(i, &[j]) {
                        state.add_column(i, vec![j]);
                    }
                }
            }
        }
        state
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn dummy_cost(&self) -> i64 {
        self.dummy_cost
    }

    pub fn fixes(&self) -> &NodeFixes {
        &self.fixes
    }

    pub fn lp(&self) -> &LpProblem {
        &self.lp
    }

    /// Adds the allocation `(facility, customers)` unless already pooled.
    /// Returns the pool position of a new column.
    pub fn add_column(&mut self, facility: usize, mut customers: Vec<usize>) -> Option<usize> {
        customers.sort_unstable();
        customers.dedup();
        let key = (facility, customers);
        if self.index.contains_key(&key) {
            return None;
        }
        let customers = key.1.clone();
        debug_assert!(self.inst.is_feasible_column(facility, &customers));
        let n = self.inst.n();
        let cost = self.inst.column_cost(facility, &customers);
        let mut entries: Vec<(usize, f64)> = customers.iter().map(|&j| (j, 1.0)).collect();
        entries.push((n + facility, -1.0));
        let upper = if self.fixes.admits(facility, &customers) {
            f64::INFINITY
        } else {
            0.0
        };
        let lp_index = self
            .lp
            .add_column(LpColumn { cost: cost as f64, entries, lower: 0.0, upper })
            .expect("allocation column fits the row set");
        let pos = self.columns.len();
        self.columns.push(Column { facility, customers, cost, lp_index });
        self.index.insert(key, pos);
        Some(pos)
    }

    /// Replaces the active node fixes, updating column bounds and row senses.
    pub fn set_fixes(&mut self, fixes: &NodeFixes) -> Result<()> {
        let (m, n) = (self.inst.m(), self.inst.n());
        if (0..m).any(|i| fixes.is_closed(i) && fixes.is_opened(i)) {
            return Err(Error::Dimension("facility fixed both open and closed".into()));
        }
        self.fixes = fixes.clone();
        for i in 0..m {
            let sense = if fixes.is_opened(i) { RowSense::Eq } else { RowSense::Ge };
            self.lp.set_row_sense(n + i, sense);
            if fixes.is_opened(i) {
                // An open facility may serve nobody; keep that allocation
                // available so the equality row stays satisfiable.
                self.add_column(i, Vec::new());
            }
        }
        for col in &self.columns {
            let upper = if fixes.admits(col.facility, &col.customers) {
                f64::INFINITY
            } else {
                0.0
            };
            self.lp.set_column_upper(col.lp_index, upper);
        }
        Ok(())
    }

    /// Adds one fix to the active node.
    pub fn apply_fix(&mut self, fix: Fix) -> Result<()> {
        let mut fixes = self.fixes.clone();
        if !fixes.insert(fix) {
            return Err(Error::Dimension(format!("fix {fix:?} contradicts the node")));
        }
        self.set_fixes(&fixes)
    }

    /// Solves the restricted master LP.
    pub fn solve(&mut self) -> Result<RmpSolution> {
        let sol = self.lp.solve();
        if sol.status != LpStatus::Optimal {
            return Err(Error::Lp(format!("restricted master ended with {:?}", sol.status)));
        }
        let (m, n) = (self.inst.m(), self.inst.n());
        let lambda = sol.dual[..n].to_vec();
        let mu = sol.dual[n..n + m].to_vec();
        let z = self.columns.iter().map(|c| sol.primal[c.lp_index]).collect();
        Ok(RmpSolution {
            objective: sol.objective,
            duals: DualPrices { lambda, mu },
            z,
            dummy: sol.primal[0],
        })
    }

    /// Maps column values to assignment (`x`) and opening (`y`) values.
    pub fn project(&self, z: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let (m, n) = (self.inst.m(), self.inst.n());
        let mut x = vec![vec![0.0; n]; m];
        let mut y = vec![0.0; m];
        for (col, &v) in self.columns.iter().zip(z) {
            if v == 0.0 {
                continue;
            }
            y[col.facility] += v;
            for &j in &col.customers {
                x[col.facility][j] += v;
            }
        }
        (x, y)
    }

    /// Dummy still in use after convergence: no feasible completion exists.
    pub fn detect_infeasible(&self, sol: &RmpSolution) -> bool {
        sol.dummy > DUMMY_TOL
    }

    /// Pool as CSV `facility,customers,cost` with customers `;`-separated.
    pub fn pool_csv(&self) -> String {
        let mut out = String::from("facility,customers,cost\n");
        let _ = writeln!(out, "dummy,all,{}", self.dummy_cost);
        for c in &self.columns {
            let r: Vec<String> = c.customers.iter().map(|j| j.to_string()).collect();
            let _ = writeln!(out, "{},{},{}", c.facility, r.join(";"), c.cost);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Instance {
        // Σc = 6, Σf = 4 -> dummy cost 20.
        Instance::new(
            vec![1, 3],
            vec![10, 10],
            vec![1, 1],
            vec![2, 3],
            vec![1, 1],
            vec![vec![1, 2], vec![2, 1]],
        )
        .unwrap()
    }

    #[test]
    fn dummy_cost_is_twice_total_cost() {
        let inst = Instance::new(
            vec![1, 3],
            vec![10, 10],
            vec![0, 0],
            vec![1, 1],
            vec![0, 0],
            vec![vec![2, 3], vec![1, 4]],
        )
        .unwrap();
        assert_eq!(MasterState::new(&inst, InitialPool::DummyOnly).dummy_cost(), 28);
    }

    #[test]
    fn dummy_only_pool_uses_dummy() {
        let inst = toy();
        let mut master = MasterState::new(&inst, InitialPool::DummyOnly);
        let sol = master.solve().unwrap();
        assert!((sol.objective - 20.0).abs() < 1e-9);
        assert!((sol.dummy - 1.0).abs() < 1e-9);
        assert!(master.detect_infeasible(&sol));
        let (x, y) = master.project(&sol.z);
        assert!(x.iter().flatten().all(|&v| v == 0.0));
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn no_singletons_when_nothing_fits() {
        let inst = Instance::new(vec![1], vec![3], vec![1], vec![2, 2], vec![2, 2], vec![vec![0, 0]]).unwrap();
        assert!(MasterState::new(&inst, InitialPool::Singletons).columns().is_empty());
    }

    #[test]
    fn pool_is_content_addressed() {
        let inst = toy();
        let mut master = MasterState::new(&inst, InitialPool::Singletons);
        let before = master.columns().len();
        assert_eq!(before, 4);
        assert!(master.add_column(0, vec![0]).is_none());
        assert!(master.add_column(0, vec![1, 0]).is_some());
        assert!(master.add_column(0, vec![0, 1]).is_none());
        assert_eq!(master.columns()[before].cost, 1 + 1 + 2);
    }

    #[test]
    fn closing_a_facility_bounds_its_columns() {
        let inst = toy();
        let mut master = MasterState::new(&inst, InitialPool::Singletons);
        master.add_column(0, vec![0, 1]);
        master.add_column(1, vec![0, 1]);
        master.apply_fix(Fix::Close { facility: 0 }).unwrap();
        let sol = master.solve().unwrap();
        let (_, y) = master.project(&sol.z);
        assert!(y[0].abs() < 1e-9);
        // Facility 1 serves both customers at 3 + 2 + 1 in the LP.
        assert!((sol.objective - 6.0).abs() < 1e-9, "{}", sol.objective);
    }

    #[test]
    fn forbidding_the_only_cover_activates_dummy() {
        let inst = Instance::new(vec![1], vec![5], vec![0], vec![1], vec![0], vec![vec![1]]).unwrap();
        let mut master = MasterState::new(&inst, InitialPool::Singletons);
        let sol = master.solve().unwrap();
        assert!(!master.detect_infeasible(&sol));
        master.apply_fix(Fix::Forbid { facility: 0, customer: 0 }).unwrap();
        let sol = master.solve().unwrap();
        assert!(master.detect_infeasible(&sol));
        let (x, _) = master.project(&sol.z);
        assert_eq!(x[0][0], 0.0);
    }

    #[test]
    fn half_columns_project_by_membership() {
        let inst = toy();
        let mut master = MasterState::new(&inst, InitialPool::DummyOnly);
        master.add_column(0, vec![0, 1]);
        master.add_column(0, vec![0]);
        let (x, y) = master.project(&[0.5, 0.5]);
        assert_eq!(x[0], vec![1.0, 0.5]);
        assert_eq!(y[0], 1.0);
    }

    #[test]
    fn contradictory_fix_is_rejected() {
        let inst = toy();
        let mut master = MasterState::new(&inst, InitialPool::DummyOnly);
        master.apply_fix(Fix::Open { facility: 1 }).unwrap();
        assert!(master.apply_fix(Fix::Close { facility: 1 }).is_err());
    }

    #[test]
    fn opening_a_subsidised_facility_gives_negative_mu() {
        // Facility 0 is expensive to open; forcing it open with only its
        // empty allocation priced makes the equality row's dual negative.
        let inst = Instance::new(
            vec![100, 1],
            vec![10, 10],
            vec![0, 0],
            vec![1],
            vec![0],
            vec![vec![0], vec![1]],
        )
        .unwrap();
        let mut master = MasterState::new(&inst, InitialPool::Singletons);
        master.solve().unwrap();
        master.apply_fix(Fix::Open { facility: 0 }).unwrap();
        let sol = master.solve().unwrap();
        assert!(sol.duals.mu[0] < 0.0, "{:?}", sol.duals);
        assert!(sol.duals.lambda.iter().all(|&l| l >= -1e-9));
    }
}
