//! Problem data, robust capacity semantics and solution evaluation.
//!
//! Every facility `i` carries a budget `gamma[i]`: at most that many of the
//! customers served by `i` may simultaneously take their worst-case demand
//! `demand[j] + deviation[j]`. A customer set is admissible for a facility
//! when its worst-case load fits the capacity.

mod compact;

pub use compact::{compact_lp_bound, CompactLpResult, CompactLpStatus};

use crate::error::{Error, Result};

/// A robust single-source capacitated facility location instance.
///
/// All parameters are nonnegative integers. Budgets larger than the number
/// of customers are clamped to `n` on construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    fixed_cost: Vec<i64>,
    capacity: Vec<i64>,
    gamma: Vec<usize>,
    demand: Vec<i64>,
    deviation: Vec<i64>,
    assign_cost: Vec<Vec<i64>>,
}

impl Instance {
    pub fn new(
        fixed_cost: Vec<i64>,
        capacity: Vec<i64>,
        gamma: Vec<usize>,
        demand: Vec<i64>,
        deviation: Vec<i64>,
        assign_cost: Vec<Vec<i64>>,
    ) -> Result<Self> {
        let m = fixed_cost.len();
        let n = demand.len();
        if m == 0 || n == 0 {
            return Err(Error::InvalidInstance(format!(
                "need at least one facility and one customer (m={m}, n={n})"
            )));
        }
        if capacity.len() != m || gamma.len() != m {
            return Err(Error::InvalidInstance(
                "facility vectors have different lengths".into(),
            ));
        }
        if deviation.len() != n {
            return Err(Error::InvalidInstance(
                "customer vectors have different lengths".into(),
            ));
        }
        if assign_cost.len() != m || assign_cost.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInstance(format!(
                "assignment cost matrix must be {m} x {n}"
            )));
        }
        let negative = fixed_cost
            .iter()
            .chain(&capacity)
            .chain(&demand)
            .chain(&deviation)
            .chain(assign_cost.iter().flatten())
            .any(|&v| v < 0);
        if negative {
            return Err(Error::InvalidInstance(
                "all parameters must be nonnegative".into(),
            ));
        }
        let gamma = gamma.into_iter().map(|g| g.min(n)).collect();
        Ok(Self {
            fixed_cost,
            capacity,
            gamma,
            demand,
            deviation,
            assign_cost,
        })
    }

    /// Number of candidate facilities.
    pub fn m(&self) -> usize {
        self.fixed_cost.len()
    }

    /// Number of customers.
    pub fn n(&self) -> usize {
        self.demand.len()
    }

    pub fn fixed_cost(&self, i: usize) -> i64 {
        self.fixed_cost[i]
    }

    pub fn capacity(&self, i: usize) -> i64 {
        self.capacity[i]
    }

    pub fn gamma(&self, i: usize) -> usize {
        self.gamma[i]
    }

    pub fn demand(&self, j: usize) -> i64 {
        self.demand[j]
    }

    pub fn deviation(&self, j: usize) -> i64 {
        self.deviation[j]
    }

    pub fn assign_cost(&self, i: usize, j: usize) -> i64 {
        self.assign_cost[i][j]
    }

    pub fn fixed_costs(&self) -> &[i64] {
        &self.fixed_cost
    }

    pub fn capacities(&self) -> &[i64] {
        &self.capacity
    }

    pub fn gammas(&self) -> &[usize] {
        &self.gamma
    }

    pub fn demands(&self) -> &[i64] {
        &self.demand
    }

    pub fn deviations(&self) -> &[i64] {
        &self.deviation
    }

    pub fn assign_costs(&self) -> &[Vec<i64>] {
        &self.assign_cost
    }

    /// Same instance with every deviation replaced.
    pub fn with_deviations(&self, deviation: Vec<i64>) -> Result<Self> {
        Self::new(
            self.fixed_cost.clone(),
            self.capacity.clone(),
            self.gamma.clone(),
            self.demand.clone(),
            deviation,
            self.assign_cost.clone(),
        )
    }

    /// Same instance with every facility budget set to `gamma`.
    pub fn with_uniform_gamma(&self, gamma: usize) -> Self {
        let n = self.n();
        Self {
            gamma: vec![gamma.min(n); self.m()],
            ..self.clone()
        }
    }

    /// Sum of every assignment and fixed cost.
    pub fn total_cost(&self) -> i64 {
        self.assign_cost.iter().flatten().sum::<i64>() + self.fixed_cost.iter().sum::<i64>()
    }

    /// Nominal demand plus the `gamma[i]` largest deviations over `customers`.
    pub fn worst_case_load(&self, i: usize, customers: &[usize]) -> i64 {
        let nominal: i64 = customers.iter().map(|&j| self.demand[j]).sum();
        let budget = self.gamma[i].min(customers.len());
        if budget == 0 {
            return nominal;
        }
        let mut devs: Vec<i64> = customers.iter().map(|&j| self.deviation[j]).collect();
        if budget < devs.len() {
            devs.select_nth_unstable_by(budget - 1, |a, b| b.cmp(a));
        }
        nominal + devs[..budget].iter().sum::<i64>()
    }

    /// Whether `customers` is an admissible allocation for facility `i`.
    pub fn is_feasible_column(&self, i: usize, customers: &[usize]) -> bool {
        self.worst_case_load(i, customers) <= self.capacity[i]
    }

    /// Cost of serving `customers` from facility `i`, including its fixed cost.
    pub fn column_cost(&self, i: usize, customers: &[usize]) -> i64 {
        self.fixed_cost[i] + customers.iter().map(|&j| self.assign_cost[i][j]).sum::<i64>()
    }

    /// Objective value of `assignment` if it respects every robust capacity,
    /// otherwise the list of overloaded facilities.
    pub fn evaluate(&self, assignment: &Assignment) -> Result<Evaluation> {
        assignment.check_shape(self)?;
        let mut served: Vec<Vec<usize>> = vec![Vec::new(); self.m()];
        for (j, &i) in assignment.facility_of.iter().enumerate() {
            if !assignment.open[i] {
                return Err(Error::ClosedFacility {
                    customer: j,
                    facility: i,
                });
            }
            served[i].push(j);
        }
        let mut violations = Vec::new();
        let mut objective = 0;
        for (i, customers) in served.iter().enumerate() {
            if !assignment.open[i] {
                continue;
            }
            let load = self.worst_case_load(i, customers);
            if load > self.capacity[i] {
                violations.push(Violation {
                    facility: i,
                    worst_case_load: load,
                    capacity: self.capacity[i],
                });
            }
            objective += self.column_cost(i, customers);
        }
        if violations.is_empty() {
            Ok(Evaluation::Feasible(objective))
        } else {
            Ok(Evaluation::Infeasible(violations))
        }
    }
}

/// Single-source assignment of customers to open facilities.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Assignment {
    pub facility_of: Vec<usize>,
    pub open: Vec<bool>,
}

impl Assignment {
    /// Opens exactly the facilities that serve at least one customer.
    pub fn from_facility_of(m: usize, facility_of: Vec<usize>) -> Self {
        let mut open = vec![false; m];
        for &i in &facility_of {
            if i < m {
                open[i] = true;
            }
        }
        Self { facility_of, open }
    }

    pub fn open_facilities(&self) -> Vec<usize> {
        (0..self.open.len()).filter(|&i| self.open[i]).collect()
    }

    /// Customers served by facility `i`, in increasing order.
    pub fn customers_of(&self, i: usize) -> Vec<usize> {
        (0..self.facility_of.len())
            .filter(|&j| self.facility_of[j] == i)
            .collect()
    }

    /// Sum of capacities over open facilities.
    pub fn open_capacity(&self, inst: &Instance) -> i64 {
        self.open_facilities().iter().map(|&i| inst.capacity(i)).sum()
    }

    fn check_shape(&self, inst: &Instance) -> Result<()> {
        if self.facility_of.len() != inst.n() || self.open.len() != inst.m() {
            return Err(Error::MalformedAssignment(format!(
                "expected {} customers and {} facilities, got {} and {}",
                inst.n(),
                inst.m(),
                self.facility_of.len(),
                self.open.len()
            )));
        }
        if let Some(&i) = self.facility_of.iter().find(|&&i| i >= inst.m()) {
            return Err(Error::MalformedAssignment(format!(
                "facility index {i} out of range"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub facility: usize,
    pub worst_case_load: i64,
    pub capacity: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Evaluation {
    Feasible(i64),
    Infeasible(Vec<Violation>),
}

impl Evaluation {
    pub fn objective(&self) -> Option<i64> {
        match self {
            Evaluation::Feasible(v) => Some(*v),
            Evaluation::Infeasible(_) => None,
        }
    }
}
