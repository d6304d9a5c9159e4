//! Exact 0/1 knapsack by dynamic programming over integer weights, and the
//! robust knapsack with cardinality-constrained weight uncertainty.
//!
//! The robust solver sorts the items by nonincreasing deviation `b` (with a
//! trailing `b = 0` sentinel) and, for each pivot position `l` in
//! `{Γ, …, n-1, n+1}`, solves a nominal knapsack whose first `l` items weigh
//! `d + b - b_l` and whose capacity is `s - Γ·b_l`. The union of these
//! nominal feasible sets is exactly the robust feasible set, so the best of
//! the `n - Γ + 1` nominal optima is the robust optimum.

/// Item of a nominal knapsack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BkpItem {
    pub profit: f64,
    pub weight: i64,
    pub id: usize,
}

/// Item of a robust knapsack: nominal weight plus maximal deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbkpItem {
    pub profit: f64,
    pub demand: i64,
    pub deviation: i64,
    pub id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbkpProblem {
    pub items: Vec<RbkpItem>,
    pub capacity: i64,
    pub budget: usize,
    /// Item id that must be packed regardless of its profit.
    pub forced_in: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackSolution {
    /// Total profit of `chosen`; `-inf` when a forced item cannot be packed.
    pub value: f64,
    /// Ids of the packed items, ascending.
    pub chosen: Vec<usize>,
}

impl KnapsackSolution {
    fn empty() -> Self {
        Self {
            value: 0.0,
            chosen: Vec::new(),
        }
    }

    fn infeasible() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            chosen: Vec::new(),
        }
    }

    pub fn is_infeasible(&self) -> bool {
        self.value == f64::NEG_INFINITY
    }
}

/// Reusable DP buffers.
#[derive(Debug, Default)]
struct Scratch {
    dp: Vec<f64>,
    keep: Vec<bool>,
}

impl Scratch {
    /// Profit-over-capacity DP. Items with nonpositive profit or weight above
    /// the capacity are ignored. Returns positions into `items`.
    fn solve(&mut self, items: &[BkpItem], capacity: i64) -> (f64, Vec<usize>) {
        if capacity < 0 {
            return (0.0, Vec::new());
        }
        let cap = capacity as usize;
        let width = cap + 1;
        self.dp.clear();
        self.dp.resize(width, 0.0);
        self.keep.clear();
        self.keep.resize(items.len() * width, false);
        for (k, item) in items.iter().enumerate() {
            if item.profit <= 0.0 || item.weight > capacity {
                continue;
            }
            let w = item.weight as usize;
            let row = &mut self.keep[k * width..(k + 1) * width];
            for c in (w..=cap).rev() {
                let candidate = self.dp[c - w] + item.profit;
                if candidate > self.dp[c] {
                    self.dp[c] = candidate;
                    row[c] = true;
                }
            }
        }
        let mut chosen = Vec::new();
        let mut c = cap;
        for k in (0..items.len()).rev() {
            if self.keep[k * width + c] {
                chosen.push(k);
                c -= items[k].weight as usize;
            }
        }
        chosen.reverse();
        let value = chosen.iter().map(|&k| items[k].profit).sum();
        (value, chosen)
    }
}

/// Maximizes total profit subject to total weight at most `capacity`.
///
/// A negative capacity yields the empty solution with value 0.
pub fn solve_bkp(items: &[BkpItem], capacity: i64) -> KnapsackSolution {
    let (value, picked) = Scratch::default().solve(items, capacity);
    let mut chosen: Vec<usize> = picked.into_iter().map(|k| items[k].id).collect();
    chosen.sort_unstable();
    KnapsackSolution { value, chosen }
}

/// Items sorted by nonincreasing deviation, ties by id.
fn sorted_by_deviation(items: impl IntoIterator<Item = RbkpItem>) -> Vec<RbkpItem> {
    let mut sorted: Vec<RbkpItem> = items.into_iter().collect();
    sorted.sort_by(|a, b| b.deviation.cmp(&a.deviation).then(a.id.cmp(&b.id)));
    sorted
}

/// Pivot positions (1-based) and the deviation at each pivot. A zero budget
/// yields the single nominal problem at pivot 0.
fn pivots(sorted: &[RbkpItem], budget: usize) -> Vec<(usize, i64)> {
    let n = sorted.len();
    if budget == 0 {
        return vec![(0, 0)];
    }
    let mut out: Vec<(usize, i64)> = (budget..n).map(|l| (l, sorted[l - 1].deviation)).collect();
    out.push((n + 1, 0));
    out
}

/// Weight of the item at 0-based sorted position `k` in the pivot-`l` problem.
fn pivot_weight(item: &RbkpItem, k: usize, l: usize, pivot_dev: i64) -> i64 {
    if k < l {
        item.demand + item.deviation - pivot_dev
    } else {
        item.demand
    }
}

/// Exact robust knapsack optimum over every pivot subproblem.
pub fn solve_rbkp(problem: &RbkpProblem) -> KnapsackSolution {
    let forced = problem.forced_in;
    let candidates = problem
        .items
        .iter()
        .copied()
        .filter(|it| it.profit > 0.0 || Some(it.id) == forced);
    let sorted = sorted_by_deviation(candidates);
    if let Some(f) = forced {
        if !sorted.iter().any(|it| it.id == f) {
            return KnapsackSolution::infeasible();
        }
    }
    if sorted.is_empty() {
        return KnapsackSolution::empty();
    }
    let budget = problem.budget.min(sorted.len());
    let forced_pos = forced.and_then(|f| sorted.iter().position(|it| it.id == f));

    let mut scratch = Scratch::default();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut bkp = Vec::with_capacity(sorted.len());
    for (l, pivot_dev) in pivots(&sorted, budget) {
        let mut capacity = problem.capacity - budget as i64 * pivot_dev;
        if capacity < 0 {
            continue;
        }
        let mut base = 0.0;
        if let Some(fp) = forced_pos {
            capacity -= pivot_weight(&sorted[fp], fp, l, pivot_dev);
            if capacity < 0 {
                continue;
            }
            base = sorted[fp].profit;
        }
        bkp.clear();
        bkp.extend(
            sorted
                .iter()
                .enumerate()
                .filter(|&(k, _)| Some(k) != forced_pos)
                .map(|(k, it)| BkpItem {
                    profit: it.profit,
                    weight: pivot_weight(it, k, l, pivot_dev),
                    id: it.id,
                }),
        );
        let (value, picked) = scratch.solve(&bkp, capacity);
        let value = base + value;
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            let mut ids: Vec<usize> = picked.into_iter().map(|k| bkp[k].id).collect();
            ids.extend(forced);
            best = Some((value, ids));
        }
    }
    match best {
        Some((_, mut chosen)) => {
            chosen.sort_unstable();
            let value = chosen
                .iter()
                .map(|id| problem.items.iter().find(|it| it.id == *id).unwrap().profit)
                .sum();
            KnapsackSolution { value, chosen }
        }
        None if forced.is_some() => KnapsackSolution::infeasible(),
        None => KnapsackSolution::empty(),
    }
}

/// For every item `k`, the robust knapsack optimum among sets that contain
/// `k` (`-inf` where `k` cannot be packed at all). Output is aligned with
/// `items`.
///
/// Per pivot, prefix and suffix DP tables over the positive-profit items are
/// merged around each forced item, so the whole vector costs about as much
/// as one unforced solve.
pub fn solve_rbkp_forced_all(items: &[RbkpItem], capacity: i64, budget: usize) -> Vec<f64> {
    let sorted = sorted_by_deviation(items.iter().copied());
    let n = sorted.len();
    let mut best_sorted = vec![f64::NEG_INFINITY; n];
    if n == 0 {
        return Vec::new();
    }
    let budget = budget.min(n);
    for (l, pivot_dev) in pivots(&sorted, budget) {
        let cap = capacity - budget as i64 * pivot_dev;
        if cap < 0 {
            continue;
        }
        let width = cap as usize + 1;
        let weights: Vec<i64> = sorted
            .iter()
            .enumerate()
            .map(|(k, it)| pivot_weight(it, k, l, pivot_dev))
            .collect();
        // prefix[k] covers items before position k, suffix[k] items after k.
        let mut prefix = vec![0.0; (n + 1) * width];
        for k in 0..n {
            let (done, rest) = prefix.split_at_mut((k + 1) * width);
            let prev = &done[k * width..];
            let next = &mut rest[..width];
            next.copy_from_slice(prev);
            push_item(next, prev, sorted[k].profit, weights[k]);
        }
        let mut suffix = vec![0.0; (n + 1) * width];
        for k in (0..n).rev() {
            let (head, tail) = suffix.split_at_mut((k + 1) * width);
            let prev = &tail[..width];
            let next = &mut head[k * width..];
            next.copy_from_slice(prev);
            push_item(next, prev, sorted[k].profit, weights[k]);
        }
        for k in 0..n {
            let residual = cap - weights[k];
            if residual < 0 {
                continue;
            }
            let residual = residual as usize;
            let before = &prefix[k * width..(k + 1) * width];
            let after = &suffix[(k + 1) * width..(k + 2) * width];
            let merged = (0..=residual)
                .map(|c| before[c] + after[residual - c])
                .fold(f64::NEG_INFINITY, f64::max);
            let value = sorted[k].profit + merged;
            if value > best_sorted[k] {
                best_sorted[k] = value;
            }
        }
    }
    items
        .iter()
        .map(|it| {
            let k = sorted.iter().position(|s| s.id == it.id).unwrap();
            best_sorted[k]
        })
        .collect()
}

/// `next[c] = max(prev[c], prev[c - w] + profit)` for a positive-profit item.
fn push_item(next: &mut [f64], prev: &[f64], profit: f64, weight: i64) {
    if profit <= 0.0 || weight as usize >= next.len() {
        return;
    }
    let w = weight as usize;
    for c in w..next.len() {
        let candidate = prev[c - w] + profit;
        if candidate > next[c] {
            next[c] = candidate;
        }
    }
}
