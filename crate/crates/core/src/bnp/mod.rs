//! Depth-first branch-and-price over the allocation master.

mod branch;
mod fixing;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use branch::{is_integral, select_branch, split_support, BranchDecision, INT_TOL};
pub use fixing::{fix_variables, FIX_TOL};

use crate::error::Result;
use crate::master::{DualPrices, Fix, InitialPool, MasterState, NodeFixes, RmpSolution};
use crate::model::{Assignment, Evaluation, Instance};
use crate::pricing::{improving_columns, price_all, PricingResult};

/// Which child of a dichotomy is explored first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChildOrder {
    /// `y_i = 1`, or the GUB side that keeps the larger fractional share.
    #[default]
    OpenFirst,
    CloseFirst,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    #[serde(serialize_with = "secs")]
    pub time_limit: Duration,
    pub fixing: bool,
    /// Fixing also runs at every node whose depth is a multiple of this
    /// value; 0 restricts it to the root and to incumbent improvements.
    pub fixing_period: usize,
    pub early_termination: bool,
    pub child_order: ChildOrder,
    pub initial_pool: InitialPool,
    #[serde(skip)]
    pub initial_incumbent: Option<Assignment>,
    /// Record per-node and per-iteration events in the report.
    pub trace: bool,
    /// Keep the final column pool and master LP as text in the report.
    pub keep_dumps: bool,
}

fn secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(3600),
            fixing: true,
            fixing_period: 1,
            early_termination: true,
            child_order: ChildOrder::default(),
            initial_pool: InitialPool::default(),
            initial_incumbent: None,
            trace: false,
            keep_dumps: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeAction {
    /// Lagrangian bound reached the incumbent before convergence.
    EarlyTerminated,
    /// Converged bound cannot beat the incumbent.
    Pruned,
    Infeasible,
    Integral,
    Branched,
    /// Left unexplored when the time limit hit.
    Interrupted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Iteration {
        node: usize,
        iteration: usize,
        master_objective: f64,
        lagrangian_bound: f64,
        columns_added: usize,
    },
    Fixing {
        node: usize,
        lower: f64,
        incumbent: i64,
        /// Fixes in force when the duals were computed.
        inherited: Vec<Fix>,
        added: Vec<Fix>,
    },
    Node {
        node: usize,
        depth: usize,
        bound: f64,
        action: NodeAction,
        columns_added: usize,
        branch: Option<BranchDecision>,
    },
    Incumbent {
        node: usize,
        objective: i64,
    },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveStats {
    pub nodes: usize,
    pub columns: usize,
    pub pricing_rounds: usize,
    pub max_depth: usize,
    pub fixed_closed: usize,
    pub fixed_open: usize,
    pub fixed_assignments: usize,
    pub early_terminations: usize,
    /// Converged master value at the root, when reached.
    pub root_bound: Option<f64>,
    #[serde(skip)]
    pub time_master: Duration,
    #[serde(skip)]
    pub time_pricing: Duration,
    #[serde(skip)]
    pub time_total: Duration,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub incumbent: Option<Assignment>,
    pub objective: Option<i64>,
    /// Valid lower bound on the optimum; `+inf` when infeasible.
    pub bound: f64,
    /// `(objective - bound) / objective * 100`, when an incumbent exists.
    pub gap: Option<f64>,
    pub stats: SolveStats,
    #[serde(skip)]
    pub trace: Vec<TraceEvent>,
    #[serde(skip)]
    pub pool_csv: Option<String>,
    #[serde(skip)]
    pub lp_dump: Option<String>,
}

/// Objective values are integers, so a bound within the tolerance of the
/// incumbent rounds up to it.
fn cannot_improve(bound: f64, incumbent: Option<i64>) -> bool {
    incumbent.is_some_and(|z| (bound - 1e-6).ceil() >= z as f64)
}

/// Lagrangian lower bound on the node master value from the current
/// restricted duals and pricing optima; also returns `Σ ν_i`.
pub fn lagrangian_bound(
    inst: &Instance,
    sol: &RmpSolution,
    pricing: &[PricingResult],
    fixes: &NodeFixes,
) -> (f64, f64) {
    let mut nu = sol.duals.mu.clone();
    for r in pricing {
        let i = r.facility;
        let slack = inst.fixed_cost(i) as f64 - r.xi;
        nu[i] += if fixes.is_opened(i) { slack } else { slack.min(0.0) };
    }
    let total: f64 = nu.iter().sum();
    (sol.objective + total, total)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColgenOutcome {
    Converged {
        solution: RmpSolution,
        pricing: Vec<PricingResult>,
        nu_sum: f64,
    },
    /// The Lagrangian bound proved the node cannot beat the incumbent.
    EarlyTerminated { bound: f64 },
    TimeLimit { bound: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColgenIteration {
    pub master_objective: f64,
    pub lagrangian_bound: f64,
    pub columns_added: usize,
}

#[derive(Debug, Default)]
struct Clock {
    master: Duration,
    pricing: Duration,
}

/// Column generation on the master's active fixes until no column prices
/// negatively.
fn column_generation(
    master: &mut MasterState<'_>,
    incumbent: Option<i64>,
    early_termination: bool,
    deadline: Instant,
    clock: &mut Clock,
    history: &mut Vec<ColgenIteration>,
) -> Result<ColgenOutcome> {
    let inst = master.instance();
    let mut best_lb = f64::NEG_INFINITY;
    loop {
        let t = Instant::now();
        let solution = master.solve()?;
        clock.master += t.elapsed();
        let t = Instant::now();
        let pricing = price_all(inst, &solution.duals, master.fixes());
        clock.pricing += t.elapsed();
        let (lb, nu_sum) = lagrangian_bound(inst, &solution, &pricing, master.fixes());
        best_lb = best_lb.max(lb);
        let fresh = improving_columns(&pricing);
        let stop_early = early_termination && cannot_improve(lb, incumbent);
        let mut added = 0;
        if !fresh.is_empty() && !stop_early {
            for (i, r) in fresh.iter().cloned() {
                added += usize::from(master.add_column(i, r).is_some());
            }
        }
        history.push(ColgenIteration {
            master_objective: solution.objective,
            lagrangian_bound: lb,
            columns_added: added,
        });
        if fresh.is_empty() {
            return Ok(ColgenOutcome::Converged { solution, pricing, nu_sum });
        }
        if stop_early {
            return Ok(ColgenOutcome::EarlyTerminated { bound: lb });
        }
        if added == 0 {
            // Every improving column is already pooled: the LP is optimal up
            // to the pricing tolerance.
            return Ok(ColgenOutcome::Converged { solution, pricing, nu_sum });
        }
        if Instant::now() >= deadline {
            return Ok(ColgenOutcome::TimeLimit { bound: best_lb });
        }
    }
}

/// Result of column generation at the root without branching.
#[derive(Debug, Clone)]
pub struct RootReport {
    /// Converged master value; the dummy may be in use when infeasible.
    pub bound: f64,
    pub infeasible: bool,
    pub duals: DualPrices,
    pub nu_sum: f64,
    pub columns: usize,
    pub history: Vec<ColgenIteration>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

/// Solves the root master to optimality by column generation.
pub fn root_column_generation(inst: &Instance, pool: InitialPool) -> Result<RootReport> {
    let mut master = MasterState::new(inst, pool);
    let mut history = Vec::new();
    let far = Instant::now() + Duration::from_secs(365 * 24 * 3600);
    let outcome = column_generation(&mut master, None, false, far, &mut Clock::default(), &mut history)?;
    let ColgenOutcome::Converged { solution, nu_sum, .. } = outcome else {
        unreachable!("no incumbent and no deadline at the root");
    };
    let (x, y) = master.project(&solution.z);
    Ok(RootReport {
        bound: solution.objective,
        infeasible: master.detect_infeasible(&solution),
        duals: solution.duals,
        nu_sum,
        columns: master.columns().len(),
        history,
        x,
        y,
    })
}

struct Node {
    id: usize,
    fixes: NodeFixes,
    depth: usize,
    bound: f64,
    /// Incumbent value when the node was created.
    incumbent_at_creation: Option<i64>,
}

/// Rounds an integral master point to an assignment: every customer goes to
/// the cheapest open facility that covers it.
fn integral_assignment(inst: &Instance, x: &[Vec<f64>], y: &[f64]) -> Assignment {
    let open: Vec<bool> = y.iter().map(|&v| v > 0.5).collect();
    let facility_of = (0..inst.n())
        .map(|j| {
            (0..inst.m())
                .filter(|&i| x[i][j] > 0.5)
                .min_by_key(|&i| (inst.assign_cost(i, j), i))
                .expect("integral point covers every customer")
        })
        .collect();
    Assignment { facility_of, open }
}

struct Search<'a> {
    inst: &'a Instance,
    config: &'a SolverConfig,
    master: MasterState<'a>,
    incumbent: Option<(Assignment, i64)>,
    stats: SolveStats,
    trace: Vec<TraceEvent>,
    clock: Clock,
    next_id: usize,
}

impl<'a> Search<'a> {
    fn value(&self) -> Option<i64> {
        self.incumbent.as_ref().map(|(_, z)| *z)
    }

    fn emit(&mut self, event: TraceEvent) {
        if self.config.trace {
            self.trace.push(event);
        }
    }

    fn offer(&mut self, node: usize, assignment: Assignment) {
        // Only robust-feasible assignments may become incumbents.
        if let Ok(Evaluation::Feasible(z)) = self.inst.evaluate(&assignment) {
            if self.value().is_none_or(|best| z < best) {
                log::debug!("node {node}: incumbent {z}");
                self.incumbent = Some((assignment, z));
                self.emit(TraceEvent::Incumbent { node, objective: z });
            }
        }
    }

    fn child(&mut self, parent: &Node, extra: &[Fix]) -> Option<Node> {
        let mut fixes = parent.fixes.clone();
        for &f in extra {
            if !fixes.insert(f) {
                return None;
            }
        }
        self.next_id += 1;
        Some(Node {
            id: self.next_id,
            fixes,
            depth: parent.depth + 1,
            bound: parent.bound,
            incumbent_at_creation: self.value(),
        })
    }

    fn should_fix(&self, node: &Node) -> bool {
        if !self.config.fixing || self.incumbent.is_none() {
            return false;
        }
        node.depth == 0
            || node.incumbent_at_creation != self.value()
            || self.config.fixing_period > 0 && node.depth % self.config.fixing_period == 0
    }

    /// Processes one node; returns its children in exploration order, or
    /// `Err(bound)` on a time-out with the best bound known for the node.
    fn process(&mut self, mut node: Node, deadline: Instant) -> Result<std::result::Result<Vec<Node>, f64>> {
        self.stats.nodes += 1;
        self.stats.max_depth = self.stats.max_depth.max(node.depth);
        self.master.set_fixes(&node.fixes)?;
        let before = self.master.columns().len();
        let mut history = Vec::new();
        let incumbent = self.value();
        let outcome = column_generation(
            &mut self.master,
            incumbent,
            self.config.early_termination,
            deadline,
            &mut self.clock,
            &mut history,
        )?;
        self.stats.pricing_rounds += history.len();
        for (k, it) in history.iter().enumerate() {
            self.emit(TraceEvent::Iteration {
                node: node.id,
                iteration: k,
                master_objective: it.master_objective,
                lagrangian_bound: it.lagrangian_bound,
                columns_added: it.columns_added,
            });
        }
        let added = self.master.columns().len() - before;
        let finish = |s: &mut Self, bound: f64, action: NodeAction, branch: Option<BranchDecision>| {
            s.emit(TraceEvent::Node {
                node: node.id,
                depth: node.depth,
                bound,
                action,
                columns_added: added,
                branch,
            });
        };

        let (solution, pricing) = match outcome {
            ColgenOutcome::EarlyTerminated { bound } => {
                self.stats.early_terminations += 1;
                finish(self, bound, NodeAction::EarlyTerminated, None);
                return Ok(Ok(Vec::new()));
            }
            ColgenOutcome::TimeLimit { bound } => {
                let bound = bound.max(node.bound);
                finish(self, bound, NodeAction::Interrupted, None);
                return Ok(Err(bound));
            }
            ColgenOutcome::Converged { solution, pricing, .. } => (solution, pricing),
        };
        if node.depth == 0 {
            self.stats.root_bound = Some(solution.objective);
        }
        if self.master.detect_infeasible(&solution) {
            finish(self, f64::INFINITY, NodeAction::Infeasible, None);
            return Ok(Ok(Vec::new()));
        }
        node.bound = node.bound.max(solution.objective);
        if cannot_improve(node.bound, self.value()) {
            finish(self, node.bound, NodeAction::Pruned, None);
            return Ok(Ok(Vec::new()));
        }
        let (x, y) = self.master.project(&solution.z);
        if is_integral(&x, &y) {
            let assignment = integral_assignment(self.inst, &x, &y);
            self.offer(node.id, assignment);
            finish(self, node.bound, NodeAction::Integral, None);
            return Ok(Ok(Vec::new()));
        }

        if self.should_fix(&node) {
            let z = self.value().expect("fixing needs an incumbent");
            let added_fixes =
                fix_variables(self.inst, &node.fixes, &solution.duals, &pricing, &x, &y, solution.objective, z as f64);
            if !added_fixes.is_empty() {
                self.emit(TraceEvent::Fixing {
                    node: node.id,
                    lower: solution.objective,
                    incumbent: z,
                    inherited: node.fixes.to_list(),
                    added: added_fixes.clone(),
                });
            }
            for f in added_fixes {
                let fresh = !node.fixes.to_list().contains(&f);
                if !node.fixes.insert(f) {
                    // The node holds no solution better than the incumbent.
                    finish(self, f64::INFINITY, NodeAction::Pruned, None);
                    return Ok(Ok(Vec::new()));
                }
                if fresh {
                    match f {
                        Fix::Close { .. } => self.stats.fixed_closed += 1,
                        Fix::Open { .. } => self.stats.fixed_open += 1,
                        Fix::Forbid { .. } => self.stats.fixed_assignments += 1,
                    }
                }
            }
        }

        let decision = select_branch(&x, &y).expect("fractional point has a branching candidate");
        let (keep, drop): (Vec<Fix>, Vec<Fix>) = match &decision {
            BranchDecision::Facility { facility } => {
                (vec![Fix::Open { facility: *facility }], vec![Fix::Close { facility: *facility }])
            }
            BranchDecision::Gub { customer, first, second } => {
                let forbid = |set: &[usize]| {
                    set.iter()
                        .map(|&i| Fix::Forbid { facility: i, customer: *customer })
                        .collect::<Vec<_>>()
                };
                (forbid(first), forbid(second))
            }
        };
        finish(self, node.bound, NodeAction::Branched, Some(decision));
        let (a, b) = match self.config.child_order {
            ChildOrder::OpenFirst => (keep, drop),
            ChildOrder::CloseFirst => (drop, keep),
        };
        let children = [a, b].iter().filter_map(|fx| self.child(&node, fx)).collect();
        Ok(Ok(children))
    }
}

/// Solves the robust single-source problem to optimality or until the time
/// limit.
pub fn solve(inst: &Instance, config: &SolverConfig) -> Result<SolveReport> {
    let start = Instant::now();
    let deadline = start + config.time_limit;
    let mut search = Search {
        inst,
        config,
        master: MasterState::new(inst, config.initial_pool),
        incumbent: None,
        stats: SolveStats::default(),
        trace: Vec::new(),
        clock: Clock::default(),
        next_id: 0,
    };
    if let Some(a) = &config.initial_incumbent {
        search.offer(0, a.clone());
    }
    let mut stack = vec![Node {
        id: 0,
        fixes: NodeFixes::new(inst.m(), inst.n()),
        depth: 0,
        bound: f64::NEG_INFINITY,
        incumbent_at_creation: search.value(),
    }];
    // Bounds of nodes left open by the time limit.
    let mut open_bounds: Vec<f64> = Vec::new();
    while let Some(node) = stack.pop() {
        if cannot_improve(node.bound, search.value()) {
            continue;
        }
        if Instant::now() >= deadline {
            open_bounds.push(node.bound);
            open_bounds.extend(stack.drain(..).map(|n| n.bound));
            break;
        }
        match search.process(node, deadline)? {
            Ok(children) => stack.extend(children.into_iter().rev()),
            Err(bound) => {
                open_bounds.push(bound);
                open_bounds.extend(stack.drain(..).map(|n| n.bound));
                break;
            }
        }
    }

    let objective = search.value();
    let (status, bound) = if open_bounds.is_empty() {
        match objective {
            Some(z) => (SolveStatus::Optimal, z as f64),
            None => (SolveStatus::Infeasible, f64::INFINITY),
        }
    } else {
        let open = open_bounds.iter().copied().fold(f64::INFINITY, f64::min);
        let bound = objective.map_or(open, |z| open.min(z as f64));
        (SolveStatus::TimeLimit, bound)
    };
    let gap = objective.map(|z| {
        if z == 0 {
            0.0
        } else {
            ((z as f64 - bound) / z as f64 * 100.0).max(0.0)
        }
    });
    let mut stats = search.stats;
    stats.columns = search.master.columns().len();
    stats.time_master = search.clock.master;
    stats.time_pricing = search.clock.pricing;
    stats.time_total = start.elapsed();
    Ok(SolveReport {
        status,
        incumbent: search.incumbent.map(|(a, _)| a),
        objective,
        bound,
        gap,
        stats,
        trace: search.trace,
        pool_csv: config.keep_dumps.then(|| search.master.pool_csv()),
        lp_dump: config.keep_dumps.then(|| search.master.lp().dump()),
    })
}
