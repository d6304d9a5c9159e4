//! Bounded-variable primal simplex with a dense explicit basis inverse.
//!
//! Every row `k` owns a logical variable `r_k = a_k·x` whose bounds encode the
//! row sense: `[rhs, +inf)` for `>=` rows and `[rhs, rhs]` for `=` rows. The
//! constraint system is then `A x - r = 0` and all row data lives in bounds,
//! so switching a row from `>=` to `=` only tightens one upper bound.
//!
//! The basis is kept across solves. Column additions leave it primal
//! feasible; bound or sense changes may not, in which case the next solve
//! starts with a composite phase 1 that minimizes the sum of infeasibilities
//! from the current basis.
//!
//! Pricing uses Devex reference weights. Master LPs are heavily degenerate, so
//! a stalled objective triggers a small random outward shift of the basic
//! variables' bounds; the shift is removed once optimal and the basis is
//! re-optimized against the true bounds.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMAL_TOL: f64 = 1e-7;
const DUAL_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_PERIOD: usize = 100;
/// Iterations without measurable objective progress before the bounds of the
/// basic variables are perturbed.
const PERTURB_AFTER: usize = 30;
const MAX_PERTURB_ROUNDS: u64 = 8;
/// Stall length under perturbation after which Bland's rule takes over.
const BLAND_AFTER: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpColumn {
    pub cost: f64,
    /// `(row, coefficient)` pairs.
    pub entries: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Value per structural column.
    pub primal: Vec<f64>,
    /// Dual per row: `>= 0` for `>=` rows, free for `=` rows.
    pub dual: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

/// Minimization LP `min c·x` over `>=`/`=` rows and bounded columns.
#[derive(Debug, Clone)]
pub struct LpProblem {
    rows: Vec<Row>,
    cols: Vec<LpColumn>,
    /// Variable index per basis position; `< rows.len()` means a logical.
    basis: Vec<usize>,
    status: Vec<VarStatus>,
    /// Row-major `r x r` inverse of the basis matrix.
    binv: Vec<f64>,
    fresh_factor: bool,
    /// Outward `(lower, upper)` bound shifts while perturbed, else empty.
    shift: Vec<(f64, f64)>,
}

impl LpProblem {
    /// Problem with the given rows and no columns; the initial basis is all
    /// logicals.
    pub fn new(rows: Vec<Row>) -> Self {
        let r = rows.len();
        let mut lp = Self {
            rows,
            cols: Vec::new(),
            basis: (0..r).collect(),
            status: vec![VarStatus::Basic; r],
            binv: Vec::new(),
            fresh_factor: false,
            shift: Vec::new(),
        };
        lp.reset_to_logical_basis();
        lp
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, k: usize) -> Row {
        self.rows[k]
    }

    pub fn column(&self, j: usize) -> &LpColumn {
        &self.cols[j]
    }

    /// Appends a column, nonbasic at its lower bound. Returns its index.
    pub fn add_column(&mut self, column: LpColumn) -> crate::Result<usize> {
        if let Some(&(k, _)) = column.entries.iter().find(|(k, _)| *k >= self.rows.len()) {
            return Err(crate::Error::Dimension(format!(
                "column references row {k} but the problem has {} rows",
                self.rows.len()
            )));
        }
        if !(column.lower.is_finite() && column.lower <= column.upper) {
            return Err(crate::Error::Dimension(format!(
                "invalid bounds [{}, {}]",
                column.lower, column.upper
            )));
        }
        self.cols.push(column);
        self.status.push(VarStatus::AtLower);
        Ok(self.cols.len() - 1)
    }

    pub fn add_columns(&mut self, columns: impl IntoIterator<Item = LpColumn>) -> crate::Result<Vec<usize>> {
        columns.into_iter().map(|c| self.add_column(c)).collect()
    }

    pub fn set_column_upper(&mut self, j: usize, upper: f64) {
        self.cols[j].upper = upper.max(self.cols[j].lower);
        let var = self.rows.len() + j;
        if self.status[var] == VarStatus::AtUpper && !self.cols[j].upper.is_finite() {
            self.status[var] = VarStatus::AtLower;
        }
    }

    pub fn set_row_sense(&mut self, k: usize, sense: RowSense) {
        self.rows[k].sense = sense;
        if sense == RowSense::Ge && self.status[k] == VarStatus::AtUpper {
            self.status[k] = VarStatus::AtLower;
        }
    }

    /// Basis as variable indices (logicals first, then `rows + column`).
    pub fn basis(&self) -> Vec<usize> {
        self.basis.clone()
    }

    /// Installs a basis; nonbasic variables go to their lower bound. An
    /// invalid or singular basis falls back to the logical basis on the next
    /// solve.
    pub fn set_basis(&mut self, basis: &[usize]) {
        let nvars = self.rows.len() + self.cols.len();
        if basis.len() != self.rows.len() || basis.iter().any(|&v| v >= nvars) {
            self.reset_to_logical_basis();
            return;
        }
        for s in self.status.iter_mut() {
            *s = VarStatus::AtLower;
        }
        for &v in basis {
            self.status[v] = VarStatus::Basic;
        }
        self.basis = basis.to_vec();
        self.fresh_factor = false;
    }

    fn reset_to_logical_basis(&mut self) {
        let r = self.rows.len();
        self.basis = (0..r).collect();
        for (v, s) in self.status.iter_mut().enumerate() {
            *s = if v < r { VarStatus::Basic } else { VarStatus::AtLower };
        }
        // B = -I, so B^{-1} = -I.
        self.binv = vec![0.0; r * r];
        for k in 0..r {
            self.binv[k * r + k] = -1.0;
        }
        self.fresh_factor = true;
    }

    fn bounds(&self, var: usize) -> (f64, f64) {
        let (lo, up) = self.raw_bounds(var);
        match self.shift.get(var) {
            Some(&(dl, du)) => (lo - dl, up + du),
            None => (lo, up),
        }
    }

    fn raw_bounds(&self, var: usize) -> (f64, f64) {
        let r = self.rows.len();
        if var < r {
            let row = self.rows[var];
            match row.sense {
                RowSense::Ge => (row.rhs, f64::INFINITY),
                RowSense::Eq => (row.rhs, row.rhs),
            }
        } else {
            let c = &self.cols[var - r];
            (c.lower, c.upper)
        }
    }

    /// Relaxes the bounds of basic variables by small random amounts so that
    /// degenerate vertices separate. Basic values do not move, so feasibility
    /// is kept.
    fn perturb(&mut self, round: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(round);
        let nvars = self.rows.len() + self.cols.len();
        let mut shift = vec![(0.0, 0.0); nvars];
        for (var, s) in shift.iter_mut().enumerate() {
            let (lo, up) = self.raw_bounds(var);
            if self.status[var] != VarStatus::Basic || (var >= self.rows.len() && up <= lo) {
                continue;
            }
            if lo.is_finite() {
                s.0 = (1.0 + lo.abs()) * rng.random_range(1e-6..1e-5);
            }
            if up.is_finite() {
                s.1 = (1.0 + up.abs()) * rng.random_range(1e-6..1e-5);
            }
        }
        self.shift = shift;
    }

    fn cost(&self, var: usize) -> f64 {
        let r = self.rows.len();
        if var < r {
            0.0
        } else {
            self.cols[var - r].cost
        }
    }

    fn nonbasic_value(&self, var: usize) -> f64 {
        let (lo, up) = self.bounds(var);
        match self.status[var] {
            VarStatus::AtUpper => up,
            _ => lo,
        }
    }

    /// `y · M_var` where `M = [-I | A]`.
    fn dot_column(&self, y: &[f64], var: usize) -> f64 {
        let r = self.rows.len();
        if var < r {
            -y[var]
        } else {
            self.cols[var - r].entries.iter().map(|&(k, a)| y[k] * a).sum()
        }
    }

    /// Dense `M_var`.
    fn dense_column(&self, var: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let r = self.rows.len();
        if var < r {
            out[var] = -1.0;
        } else {
            for &(k, a) in &self.cols[var - r].entries {
                out[k] += a;
            }
        }
    }

    /// Recomputes `B^{-1}` by Gauss-Jordan elimination with partial pivoting.
    /// Returns false if the basis is numerically singular.
    fn refactor(&mut self) -> bool {
        let r = self.rows.len();
        let mut b = vec![0.0; r * r];
        let mut col = vec![0.0; r];
        for (pos, &var) in self.basis.iter().enumerate() {
            self.dense_column(var, &mut col);
            for k in 0..r {
                b[k * r + pos] = col[k];
            }
        }
        let mut inv = vec![0.0; r * r];
        for k in 0..r {
            inv[k * r + k] = 1.0;
        }
        for c in 0..r {
            let pivot_row = (c..r)
                .max_by(|&a, &bb| b[a * r + c].abs().total_cmp(&b[bb * r + c].abs()))
                .unwrap();
            if b[pivot_row * r + c].abs() < 1e-11 {
                return false;
            }
            if pivot_row != c {
                for k in 0..r {
                    b.swap(pivot_row * r + k, c * r + k);
                    inv.swap(pivot_row * r + k, c * r + k);
                }
            }
            let p = b[c * r + c];
            for k in 0..r {
                b[c * r + k] /= p;
                inv[c * r + k] /= p;
            }
            for i in 0..r {
                if i == c {
                    continue;
                }
                let f = b[i * r + c];
                if f == 0.0 {
                    continue;
                }
                for k in 0..r {
                    b[i * r + k] -= f * b[c * r + k];
                    inv[i * r + k] -= f * inv[c * r + k];
                }
            }
        }
        self.binv = inv;
        self.fresh_factor = true;
        true
    }

    /// Product-form update after `alpha = B^{-1} M_q` enters at position `p`.
    fn update_inverse(&mut self, p: usize, alpha: &[f64]) {
        let r = self.rows.len();
        let ap = alpha[p];
        for k in 0..r {
            self.binv[p * r + k] /= ap;
        }
        let (before, rest) = self.binv.split_at_mut(p * r);
        let (prow, after) = rest.split_at_mut(r);
        for (i, row) in before.chunks_mut(r).chain(after.chunks_mut(r)).enumerate() {
            let i = if i < p { i } else { i + 1 };
            let f = alpha[i];
            if f == 0.0 {
                continue;
            }
            for k in 0..r {
                row[k] -= f * prow[k];
            }
        }
        self.fresh_factor = false;
    }

    /// Devex weight update for `q` entering at position `p` in place of `out`.
    fn update_devex(&self, weight: &mut [f64], p: usize, q: usize, out: usize, pivot: f64) {
        let r = self.rows.len();
        let rho = &self.binv[p * r..(p + 1) * r];
        let wq = weight[q];
        let mut largest: f64 = 0.0;
        for var in 0..weight.len() {
            if self.status[var] == VarStatus::Basic || var == q {
                continue;
            }
            let ratio = self.dot_column(rho, var) / pivot;
            if ratio != 0.0 {
                weight[var] = weight[var].max(ratio * ratio * wq);
                largest = largest.max(weight[var]);
            }
        }
        weight[out] = (wq / (pivot * pivot)).max(1.0);
        if largest.max(weight[out]) > 1e6 {
            weight.iter_mut().for_each(|w| *w = 1.0);
        }
    }

    fn basic_values(&self) -> Vec<f64> {
        let r = self.rows.len();
        let mut v = vec![0.0; r];
        let nvars = r + self.cols.len();
        for var in 0..nvars {
            if self.status[var] == VarStatus::Basic {
                continue;
            }
            let x = self.nonbasic_value(var);
            if x == 0.0 {
                continue;
            }
            if var < r {
                v[var] -= x;
            } else {
                for &(k, a) in &self.cols[var - r].entries {
                    v[k] += a * x;
                }
            }
        }
        // B x_B + N x_N = 0.
        (0..r)
            .map(|i| -(0..r).map(|k| self.binv[i * r + k] * v[k]).sum::<f64>())
            .collect()
    }

    /// Solves from the current basis.
    pub fn solve(&mut self) -> LpSolution {
        let r = self.rows.len();
        let nvars = r + self.cols.len();
        if !self.fresh_factor && !self.refactor() {
            self.reset_to_logical_basis();
        }
        let max_iter = 20_000 + 50 * nvars;
        let mut pivots_since_refactor = 0;
        // Iterations since the phase objective last improved measurably.
        let mut stalled = 0;
        let mut perturb_rounds = 0;
        let mut best_obj = (true, f64::INFINITY);
        let mut iterations = 0;
        let mut alpha = vec![0.0; r];
        let mut column = vec![0.0; r];
        // Devex reference weights, one per variable.
        let mut weight = vec![1.0; nvars];
        loop {
            if iterations >= max_iter {
                return self.finish(LpStatus::IterationLimit, iterations);
            }
            let x_b = self.basic_values();
            let mut c_b = vec![0.0; r];
            let mut infeasible = false;
            for (i, &var) in self.basis.iter().enumerate() {
                let (lo, up) = self.bounds(var);
                if x_b[i] < lo - PRIMAL_TOL {
                    c_b[i] = -1.0;
                    infeasible = true;
                } else if x_b[i] > up + PRIMAL_TOL {
                    c_b[i] = 1.0;
                    infeasible = true;
                }
            }
            let phase_one = infeasible;
            if !phase_one {
                for (i, &var) in self.basis.iter().enumerate() {
                    c_b[i] = self.cost(var);
                }
            }
            let obj = if phase_one {
                self.basis
                    .iter()
                    .zip(&x_b)
                    .map(|(&var, &x)| {
                        let (lo, up) = self.bounds(var);
                        (lo - x).max(0.0) + (x - up).max(0.0)
                    })
                    .sum::<f64>()
            } else {
                c_b.iter().zip(&x_b).map(|(c, x)| c * x).sum::<f64>()
                    + (r..nvars)
                        .filter(|&v| self.status[v] != VarStatus::Basic)
                        .map(|v| self.cost(v) * self.nonbasic_value(v))
                        .sum::<f64>()
            };
            if phase_one != best_obj.0 || obj < best_obj.1 - 1e-9 * (1.0 + obj.abs()) {
                best_obj = (phase_one, obj);
                stalled = 0;
            } else {
                stalled += 1;
            }
            if self.shift.is_empty() && stalled >= PERTURB_AFTER && perturb_rounds < MAX_PERTURB_ROUNDS {
                self.perturb(perturb_rounds);
                perturb_rounds += 1;
                stalled = 0;
                best_obj = (true, f64::INFINITY);
                continue;
            }
            let y: Vec<f64> = (0..r)
                .map(|k| (0..r).map(|i| c_b[i] * self.binv[i * r + k]).sum())
                .collect();

            let bland = stalled >= BLAND_AFTER;
            let mut entering: Option<(usize, f64)> = None;
            for var in 0..nvars {
                let st = self.status[var];
                if st == VarStatus::Basic {
                    continue;
                }
                let (lo, up) = self.bounds(var);
                if up - lo <= 0.0 {
                    continue;
                }
                let c = if phase_one { 0.0 } else { self.cost(var) };
                let d = c - self.dot_column(&y, var);
                let attractive = match st {
                    VarStatus::AtLower => d < -DUAL_TOL,
                    VarStatus::AtUpper => d > DUAL_TOL,
                    VarStatus::Basic => false,
                };
                if !attractive {
                    continue;
                }
                let score = d * d / weight[var];
                match entering {
                    None => entering = Some((var, score)),
                    Some((_, best)) if !bland && score > best => entering = Some((var, score)),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some((q, _)) = entering else {
                if !self.shift.is_empty() {
                    // Re-optimize against the true bounds from this basis.
                    self.shift.clear();
                    stalled = 0;
                    best_obj = (true, f64::INFINITY);
                    continue;
                }
                let status = if phase_one {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                };
                return self.finish(status, iterations);
            };
            iterations += 1;

            let dir = if self.status[q] == VarStatus::AtLower { 1.0 } else { -1.0 };
            self.dense_column(q, &mut column);
            for i in 0..r {
                alpha[i] = (0..r).map(|k| self.binv[i * r + k] * column[k]).sum();
            }
            let (q_lo, q_up) = self.bounds(q);
            let mut step = q_up - q_lo;
            let mut leaving: Option<(usize, VarStatus)> = None;
            let mut best_pivot = 0.0;
            for i in 0..r {
                let rate = -dir * alpha[i];
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let var = self.basis[i];
                let (lo, up) = self.bounds(var);
                let x = x_b[i];
                let (limit, to) = if rate > 0.0 {
                    if x < lo - PRIMAL_TOL {
                        ((lo - x) / rate, VarStatus::AtLower)
                    } else if x > up + PRIMAL_TOL || !up.is_finite() {
                        continue;
                    } else {
                        ((up - x) / rate, VarStatus::AtUpper)
                    }
                } else if x > up + PRIMAL_TOL {
                    ((x - up) / -rate, VarStatus::AtUpper)
                } else if x < lo - PRIMAL_TOL || !lo.is_finite() {
                    continue;
                } else {
                    ((x - lo) / -rate, VarStatus::AtLower)
                };
                let limit = limit.max(0.0);
                let better = match leaving {
                    None => limit < step,
                    Some((p, _)) => {
                        if limit < step - 1e-12 {
                            true
                        } else if limit <= step + 1e-12 {
                            if bland {
                                var < self.basis[p]
                            } else {
                                rate.abs() > best_pivot
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = limit;
                    leaving = Some((i, to));
                    best_pivot = rate.abs();
                }
            }

            match leaving {
                None if !step.is_finite() => {
                    if phase_one {
                        return self.finish(LpStatus::Infeasible, iterations);
                    }
                    return self.finish(LpStatus::Unbounded, iterations);
                }
                None => {
                    self.status[q] = if dir > 0.0 {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                }
                Some((p, to)) => {
                    let out = self.basis[p];
                    self.update_devex(&mut weight, p, q, out, alpha[p]);
                    self.status[out] = to;
                    self.status[q] = VarStatus::Basic;
                    self.basis[p] = q;
                    self.update_inverse(p, &alpha);
                    pivots_since_refactor += 1;
                    if pivots_since_refactor >= REFACTOR_PERIOD {
                        pivots_since_refactor = 0;
                        if !self.refactor() {
                            self.reset_to_logical_basis();
                        }
                    }
                }
            }
        }
    }

    fn finish(&mut self, status: LpStatus, iterations: usize) -> LpSolution {
        self.shift.clear();
        self.report(status, iterations)
    }

    fn report(&self, status: LpStatus, iterations: usize) -> LpSolution {
        let r = self.rows.len();
        let x_b = self.basic_values();
        let mut values: Vec<f64> = (0..r + self.cols.len())
            .map(|v| if self.status[v] == VarStatus::Basic { 0.0 } else { self.nonbasic_value(v) })
            .collect();
        for (i, &var) in self.basis.iter().enumerate() {
            values[var] = x_b[i];
        }
        let primal: Vec<f64> = values[r..].to_vec();
        let objective = self.cols.iter().zip(&primal).map(|(c, x)| c.cost * x).sum();
        let dual = if status == LpStatus::Optimal {
            (0..r)
                .map(|k| (0..r).map(|i| self.cost(self.basis[i]) * self.binv[i * r + k]).sum())
                .collect()
        } else {
            vec![0.0; r]
        };
        LpSolution {
            status,
            primal,
            dual,
            objective,
            iterations,
        }
    }

    /// Plain-text dump of rows, columns and the current basis.
    pub fn dump(&self) -> String {
        let r = self.rows.len();
        let mut out = String::new();
        let _ = writeln!(out, "rows {} cols {}", r, self.cols.len());
        for (k, row) in self.rows.iter().enumerate() {
            let sense = match row.sense {
                RowSense::Ge => ">=",
                RowSense::Eq => "=",
            };
            let _ = writeln!(out, "row {k} {sense} {}", row.rhs);
        }
        for (j, c) in self.cols.iter().enumerate() {
            let st = match self.status[r + j] {
                VarStatus::Basic => "B",
                VarStatus::AtLower => "L",
                VarStatus::AtUpper => "U",
            };
            let entries: Vec<String> = c.entries.iter().map(|(k, a)| format!("{k}:{a}")).collect();
            let _ = writeln!(
                out,
                "col {j} [{st}] cost {} bounds [{}, {}] {}",
                c.cost,
                c.lower,
                c.upper,
                entries.join(" ")
            );
        }
        let basis: Vec<String> = self
            .basis
            .iter()
            .map(|&v| if v < r { format!("r{v}") } else { format!("x{}", v - r) })
            .collect();
        let _ = writeln!(out, "basis {}", basis.join(" "));
        out
    }
}
