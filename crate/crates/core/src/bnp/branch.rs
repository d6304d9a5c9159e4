use serde::Serialize;

/// Values within this distance of 0 or 1 count as integral.
pub const INT_TOL: f64 = 1e-6;

/// Largest facility support enumerated exactly when splitting a customer.
const EXACT_SPLIT_LIMIT: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BranchDecision {
    /// `y_i = 1` on one child, `y_i = 0` on the other.
    Facility { facility: usize },
    /// `x_ij = 0` for every `i` in `first` on one child and for every `i` in
    /// `second` on the other.
    Gub {
        customer: usize,
        first: Vec<usize>,
        second: Vec<usize>,
    },
}

fn is_fractional(v: f64) -> bool {
    (v - v.round()).abs() > INT_TOL
}

pub fn is_integral(x: &[Vec<f64>], y: &[f64]) -> bool {
    !y.iter().any(|&v| is_fractional(v)) && !x.iter().flatten().any(|&v| is_fractional(v))
}

/// Subset of `values` with the largest sum not above one half; the subset is
/// nonempty and proper. When every value exceeds one half the smallest one
/// is taken. Returns positions into `values` and their sum.
pub fn split_support(values: &[f64]) -> (Vec<usize>, f64) {
    let k = values.len();
    debug_assert!(k >= 2);
    let mut best: Option<(u64, f64)> = None;
    if k <= EXACT_SPLIT_LIMIT {
        let full = (1u64 << k) - 1;
        for mask in 1..full {
            let sum: f64 = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| values[b]).sum();
            if sum <= 0.5 + 1e-12 && best.is_none_or(|(_, s)| sum > s) {
                best = Some((mask, sum));
            }
        }
        if let Some((mask, sum)) = best {
            return ((0..k).filter(|b| mask >> b & 1 == 1).collect(), sum);
        }
    } else {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let mut picked = Vec::new();
        let mut sum = 0.0;
        for &p in &order[..k - 1] {
            if sum + values[p] <= 0.5 + 1e-12 {
                sum += values[p];
                picked.push(p);
            }
        }
        if !picked.is_empty() {
            picked.sort_unstable();
            return (picked, sum);
        }
    }
    let smallest = (0..k)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .unwrap();
    (vec![smallest], values[smallest])
}

/// Chooses a branching decision for a fractional projected point, or `None`
/// when `(x, y)` is integral.
///
/// Fractional openings come first: the facility whose `y` is closest to one
/// half. Otherwise the customer whose split of positive assignments can be
/// balanced closest to one half is branched with a GUB dichotomy; facilities
/// with zero assignment are divided evenly between the two sides.
pub fn select_branch(x: &[Vec<f64>], y: &[f64]) -> Option<BranchDecision> {
    let facility = (0..y.len())
        .filter(|&i| is_fractional(y[i]))
        .min_by(|&a, &b| (y[a] - 0.5).abs().total_cmp(&(y[b] - 0.5).abs()).then(a.cmp(&b)));
    if let Some(facility) = facility {
        return Some(BranchDecision::Facility { facility });
    }

    let m = y.len();
    let n = x.first().map_or(0, Vec::len);
    let mut best: Option<(f64, usize, Vec<usize>, Vec<usize>)> = None;
    for j in 0..n {
        let support: Vec<usize> = (0..m).filter(|&i| x[i][j] > INT_TOL).collect();
        if support.len() < 2 {
            continue;
        }
        let values: Vec<f64> = support.iter().map(|&i| x[i][j]).collect();
        let (picked, kappa) = split_support(&values);
        let score = (kappa - 0.5).abs();
        if best.as_ref().is_none_or(|(s, ..)| score < *s) {
            best = Some((score, j, support, picked));
        }
    }
    if let Some((_, customer, support, picked)) = best {
        let low: Vec<usize> = picked.iter().map(|&p| support[p]).collect();
        let high: Vec<usize> = support.iter().copied().filter(|i| !low.contains(i)).collect();
        let rest: Vec<usize> = (0..m).filter(|i| !support.contains(i)).collect();
        let half = rest.len() / 2;
        let mut first = low;
        first.extend_from_slice(&rest[..half]);
        first.sort_unstable();
        let mut second = high;
        second.extend_from_slice(&rest[half..]);
        second.sort_unstable();
        return Some(BranchDecision::Gub { customer, first, second });
    }
    if is_integral(x, y) {
        None
    } else {
        // A lone fractional assignment with integral openings cannot occur at
        // a feasible master optimum; fall back to its facility.
        let (i, _) = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| is_fractional(x[i][j]))?;
        Some(BranchDecision::Facility { facility: i })
    }
}
