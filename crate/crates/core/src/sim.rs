//! Monte Carlo check of a fixed assignment against random demand.
//!
//! Scenario demands are `d_j (1 + Δ z)` with `z` standard normal, redrawn
//! until `z >= -2`: a normal with mean `d_j` and standard deviation `Δ d_j`
//! conditioned on lying above `d_j (1 - 2Δ)`. Each scenario has its own
//! ChaCha8 stream, so results do not depend on thread count, and the same
//! seed reuses the same `z` draws for every `Δ`.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bnp::{solve, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{Assignment, Instance};
use crate::parallel;

/// Truncation point in standard deviations below the mean.
pub const TRUNCATION: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub delta: f64,
    pub scenarios: usize,
    pub seed: u64,
    /// Reuse one normal stream for all `Δ`; otherwise `Δ` perturbs the seed.
    pub common_random_numbers: bool,
}

impl SimSpec {
    pub fn new(delta: f64, seed: u64) -> Self {
        Self {
            delta,
            scenarios: 5000,
            seed,
            common_random_numbers: true,
        }
    }

    fn stream_seed(&self) -> u64 {
        if self.common_random_numbers {
            self.seed
        } else {
            self.seed ^ self.delta.to_bits().rotate_left(17)
        }
    }
}

/// Generator of scenario `k` for a base seed.
pub fn scenario_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

pub fn sample_scenario<R: rand::Rng + ?Sized>(inst: &Instance, delta: f64, rng: &mut R) -> Vec<f64> {
    inst.demands()
        .iter()
        .map(|&d| {
            let z: f64 = loop {
                let z: f64 = StandardNormal.sample(rng);
                if z >= -TRUNCATION {
                    break z;
                }
            };
            if delta == 0.0 {
                d as f64
            } else {
                d as f64 * (1.0 + delta * z)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub delta: f64,
    pub scenarios: usize,
    pub infeasible: usize,
    pub infeasibility_pct: f64,
    /// Scenarios in which each facility is overloaded.
    pub violations: Vec<usize>,
}

/// Fraction of scenarios in which some open facility receives more sampled
/// nominal demand than its capacity.
pub fn evaluate_robustness(inst: &Instance, assignment: &Assignment, spec: &SimSpec) -> Result<SimResult> {
    if !(spec.delta >= 0.0 && spec.delta.is_finite()) {
        return Err(Error::InvalidInstance(format!("invalid delta {}", spec.delta)));
    }
    inst.evaluate(assignment)?;
    let m = inst.m();
    let seed = spec.stream_seed();
    let overloaded = parallel::map_indexed(spec.scenarios, |k| {
        let demand = sample_scenario(inst, spec.delta, &mut scenario_rng(seed, k));
        let mut load = vec![0.0; m];
        for (j, &i) in assignment.facility_of.iter().enumerate() {
            load[i] += demand[j];
        }
        (0..m)
            .filter(|&i| assignment.open[i] && load[i] > inst.capacity(i) as f64)
            .collect::<Vec<_>>()
    });
    let mut violations = vec![0; m];
    let mut infeasible = 0;
    for over in &overloaded {
        infeasible += usize::from(!over.is_empty());
        for &i in over {
            violations[i] += 1;
        }
    }
    let pct = if spec.scenarios == 0 {
        0.0
    } else {
        100.0 * infeasible as f64 / spec.scenarios as f64
    };
    Ok(SimResult {
        delta: spec.delta,
        scenarios: spec.scenarios,
        infeasible,
        infeasibility_pct: pct,
        violations,
    })
}

/// Relative increase of `value` over `base`, in percent.
pub fn relative_pct(value: i64, base: i64) -> f64 {
    if base == 0 {
        0.0
    } else {
        100.0 * (value - base) as f64 / base as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regression {
    pub slope: f64,
    /// Uncentered: `1 - Σ(y - a x)² / Σ y²`.
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares line through the origin.
pub fn regression_through_origin(points: &[(f64, f64)]) -> Option<Regression> {
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let syy: f64 = points.iter().map(|p| p.1 * p.1).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let slope = points.iter().map(|p| p.0 * p.1).sum::<f64>() / sxx;
    let sse: f64 = points.iter().map(|p| (p.1 - slope * p.0).powi(2)).sum();
    Some(Regression {
        slope,
        r_squared: 1.0 - sse / syy,
        points: points.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub sigma_permille: u32,
    pub gamma: usize,
    pub delta: f64,
    /// `None` when the cell has no robust-feasible solution.
    pub objective: Option<i64>,
    pub infeasibility_pct: Option<f64>,
    pub penalty_cost_pct: Option<f64>,
    pub additional_capacity_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffTable {
    pub rows: Vec<TradeoffRow>,
    /// Additional capacity against penalty cost over cells with `σ > 0` and
    /// `Γ > 0`.
    pub regression: Option<Regression>,
}

impl TradeoffTable {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::from("infeasible"), |x| format!("{x:.6}"));
        let mut out =
            String::from("sigma,gamma,delta,objective,infeasibility_pct,penalty_cost_pct,additional_capacity_pct\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.3},{},{:.6},{},{},{},{}",
                f64::from(r.sigma_permille) / 1000.0,
                r.gamma,
                r.delta,
                r.objective.map_or(String::from("infeasible"), |z| z.to_string()),
                opt(r.infeasibility_pct),
                opt(r.penalty_cost_pct),
                opt(r.additional_capacity_pct),
            );
        }
        out
    }
}

/// Instance with `b_j = ⌊d_j σ⌋` for one uniform rate `σ` (thousandths) and
/// every budget set to `gamma`.
pub fn uniform_uncertainty(base: &Instance, sigma_permille: u32, gamma: usize) -> Result<Instance> {
    let b = base.demands().iter().map(|&d| d * i64::from(sigma_permille) / 1000).collect();
    Ok(base.with_deviations(b)?.with_uniform_gamma(gamma))
}

/// Solves `base` for every `(σ, Γ)` pair and simulates each solution at
/// every `Δ`, comparing against the solution with `σ = 0, Γ = 0`.
pub fn tradeoff_grid(
    base: &Instance,
    sigmas: &[u32],
    gammas: &[usize],
    deltas: &[f64],
    spec: &SimSpec,
    config: &SolverConfig,
) -> Result<TradeoffTable> {
    let solve_cell = |sigma: u32, gamma: usize| -> Result<Option<(Assignment, i64)>> {
        let inst = uniform_uncertainty(base, sigma, gamma)?;
        let report = solve(&inst, config)?;
        if report.status == SolveStatus::TimeLimit {
            log::warn!("sigma {sigma} gamma {gamma}: time limit, using incumbent");
        }
        Ok(report.incumbent.zip(report.objective))
    };
    let baseline = solve_cell(0, 0)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &sigma in sigmas {
        for &gamma in gammas {
            let cell = if sigma == 0 && gamma == 0 {
                baseline.clone()
            } else {
                solve_cell(sigma, gamma)?
            };
            let compare = match (&cell, &baseline) {
                (Some((a, z)), Some((b, z0))) => Some((
                    relative_pct(*z, *z0),
                    relative_pct(a.open_capacity(base), b.open_capacity(base)),
                )),
                _ => None,
            };
            if let Some(p) = compare.filter(|_| sigma > 0 && gamma > 0) {
                points.push(p);
            }
            for &delta in deltas {
                let infeasibility = match &cell {
                    Some((a, _)) => {
                        let s = SimSpec { delta, ..*spec };
                        Some(evaluate_robustness(base, a, &s)?.infeasibility_pct)
                    }
                    None => None,
                };
                rows.push(TradeoffRow {
                    sigma_permille: sigma,
                    gamma,
                    delta,
                    objective: cell.as_ref().map(|c| c.1),
                    infeasibility_pct: infeasibility,
                    penalty_cost_pct: compare.map(|c| c.0),
                    additional_capacity_pct: compare.map(|c| c.1),
                });
            }
        }
    }
    Ok(TradeoffTable {
        rows,
        regression: regression_through_origin(&points),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{Continuous, ContinuousCDF, Normal};

    fn single(d: i64, s: i64) -> Instance {
        Instance::new(vec![1], vec![s], vec![0], vec![d], vec![0], vec![vec![0]]).unwrap()
    }

    #[test]
    fn zero_delta_is_nominal() {
        let inst = single(100, 100);
        let mut rng = scenario_rng(3, 0);
        assert_eq!(sample_scenario(&inst, 0.0, &mut rng), vec![100.0]);
        let a = Assignment::from_facility_of(1, vec![0]);
        let r = evaluate_robustness(&inst, &a, &SimSpec::new(0.0, 3)).unwrap();
        assert_eq!(r.infeasible, 0);
    }

    /// Mean of a normal(μ, σ) truncated below at μ - 2σ, by numerical
    /// integration of the density.
    fn truncated_mean(mu: f64, sd: f64) -> f64 {
        let dist = Normal::new(mu, sd).unwrap();
        let (lo, hi) = (mu - 2.0 * sd, mu + 12.0 * sd);
        let steps = 200_000;
        let h = (hi - lo) / steps as f64;
        let mut num = 0.0;
        for k in 0..=steps {
            let x = lo + k as f64 * h;
            let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
            num += w * x * dist.pdf(x);
        }
        num * h / (1.0 - dist.cdf(lo))
    }

    #[test]
    fn truncated_samples_and_mean() {
        let inst = single(100, 1000);
        let draws: Vec<f64> = (0..5000)
            .map(|k| sample_scenario(&inst, 0.2, &mut scenario_rng(7, k))[0])
            .collect();
        assert!(draws.iter().all(|&x| x >= 60.0));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let expected = truncated_mean(100.0, 20.0);
        assert!((expected - 101.1).abs() < 0.01, "{expected}");
        let slack = 3.0 * 20.0 / 5000f64.sqrt() * 1.2;
        assert!((mean - expected).abs() <= slack, "{mean} vs {expected}");
    }

    #[test]
    fn tight_facility_overloads_sometimes() {
        let inst = single(100, 100);
        let a = Assignment::from_facility_of(1, vec![0]);
        let r = evaluate_robustness(&inst, &a, &SimSpec::new(0.2, 5)).unwrap();
        assert!(r.infeasible >= 1);
        assert_eq!(r.violations, vec![r.infeasible]);
    }

    #[test]
    fn same_seed_same_result_and_monotone_in_delta() {
        let inst = Instance::new(vec![1, 1], vec![60, 50], vec![0, 0], vec![20, 25, 30], vec![0; 3], vec![vec![0; 3]; 2])
            .unwrap();
        let a = Assignment::from_facility_of(2, vec![0, 0, 1]);
        let mut prev = 0.0;
        for k in 0..=8 {
            let spec = SimSpec::new(0.05 * k as f64, 11);
            let r = evaluate_robustness(&inst, &a, &spec).unwrap();
            assert_eq!(r, evaluate_robustness(&inst, &a, &spec).unwrap());
            assert!(r.infeasibility_pct + 1.0 >= prev);
            prev = r.infeasibility_pct;
        }
    }

    #[test]
    fn regression_on_exact_line() {
        let pts: Vec<(f64, f64)> = (1..6).map(|x| (x as f64, 2.0 * x as f64)).collect();
        let r = regression_through_origin(&pts).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-12);
        assert!((r.r_squared - 1.0).abs() < 1e-12);
        assert!(regression_through_origin(&[]).is_none());
    }

    #[test]
    fn baseline_cell_compares_to_itself() {
        let inst = Instance::new(
            vec![10, 12],
            vec![40, 50],
            vec![0, 0],
            vec![10, 12, 9],
            vec![0; 3],
            vec![vec![1, 5, 3], vec![4, 2, 2]],
        )
        .unwrap();
        let spec = SimSpec { scenarios: 200, ..SimSpec::new(0.0, 1) };
        let table = tradeoff_grid(&inst, &[0, 300], &[0, 2], &[0.0, 0.2], &spec, &SolverConfig::default()).unwrap();
        assert_eq!(table.rows.len(), 8);
        let base = &table.rows[0];
        assert_eq!(base.penalty_cost_pct, Some(0.0));
        assert_eq!(base.additional_capacity_pct, Some(0.0));
        assert_eq!(base.infeasibility_pct, Some(0.0));
        assert!(table.to_csv().lines().count() == 9);
    }
}
