//! Per-facility pricing: a robust knapsack over customer profits
//! `lambda_j - c_ij` whose optimum `xi` gives the minimum reduced cost
//! `f_i + mu_i - xi` of any allocation column of facility `i`.

use crate::knapsack::{solve_rbkp, solve_rbkp_forced_all, RbkpItem, RbkpProblem};
use crate::master::{DualPrices, NodeFixes};
use crate::model::Instance;
use crate::parallel;

/// Reduced cost below which a column is worth adding.
pub const RC_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PricingResult {
    pub facility: usize,
    pub xi: f64,
    /// Ascending customers of the best allocation.
    pub best_set: Vec<usize>,
    pub reduced_cost: f64,
}

impl PricingResult {
    pub fn improves(&self) -> bool {
        self.reduced_cost < -RC_TOL
    }
}

fn items(inst: &Instance, i: usize, duals: &DualPrices, forbidden: &[bool]) -> Vec<RbkpItem> {
    (0..inst.n())
        .filter(|&j| !forbidden[j])
        .map(|j| RbkpItem {
            profit: duals.lambda[j] - inst.assign_cost(i, j) as f64,
            demand: inst.demand(j),
            deviation: inst.deviation(j),
            id: j,
        })
        .collect()
}

/// Reduced cost of the allocation `(i, customers)`, recomputed from scratch.
pub fn reduced_cost(inst: &Instance, i: usize, customers: &[usize], duals: &DualPrices) -> f64 {
    customers
        .iter()
        .map(|&j| inst.assign_cost(i, j) as f64 - duals.lambda[j])
        .sum::<f64>()
        + inst.fixed_cost(i) as f64
        + duals.mu[i]
}

/// Solves the pricing problem of facility `i`; customers with
/// `forbidden[j]` are not offered as items.
pub fn price_facility(inst: &Instance, i: usize, duals: &DualPrices, forbidden: &[bool]) -> PricingResult {
    let sol = solve_rbkp(&RbkpProblem {
        items: items(inst, i, duals, forbidden),
        capacity: inst.capacity(i),
        budget: inst.gamma(i),
        forced_in: None,
    });
    PricingResult {
        facility: i,
        xi: sol.value,
        reduced_cost: -sol.value + inst.fixed_cost(i) as f64 + duals.mu[i],
        best_set: sol.chosen,
    }
}

/// Prices every facility not fixed closed, in facility order.
pub fn price_all(inst: &Instance, duals: &DualPrices, fixes: &NodeFixes) -> Vec<PricingResult> {
    let open: Vec<usize> = (0..inst.m()).filter(|&i| !fixes.is_closed(i)).collect();
    parallel::map_slice(&open, |&i| price_facility(inst, i, duals, fixes.forbidden_mask(i)))
}

/// Columns with negative reduced cost among `results`.
pub fn improving_columns(results: &[PricingResult]) -> Vec<(usize, Vec<usize>)> {
    results
        .iter()
        .filter(|r| r.improves())
        .map(|r| (r.facility, r.best_set.clone()))
        .collect()
}

/// Pricing optimum of facility `i` with customer `j` forced into the set;
/// `-inf` when `j` alone exceeds the robust capacity.
pub fn xi_forced(inst: &Instance, i: usize, j: usize, duals: &DualPrices, forbidden: &[bool]) -> f64 {
    solve_rbkp(&RbkpProblem {
        items: items(inst, i, duals, forbidden),
        capacity: inst.capacity(i),
        budget: inst.gamma(i),
        forced_in: Some(j),
    })
    .value
}

/// [`xi_forced`] for every customer at once; `None` for forbidden ones.
pub fn xi_forced_all(inst: &Instance, i: usize, duals: &DualPrices, forbidden: &[bool]) -> Vec<Option<f64>> {
    let its = items(inst, i, duals, forbidden);
    let values = solve_rbkp_forced_all(&its, inst.capacity(i), inst.gamma(i));
    let mut out = vec![None; inst.n()];
    for (it, v) in its.iter().zip(values) {
        out[it.id] = Some(v);
    }
    out
}
