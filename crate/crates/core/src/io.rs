//! JSON files for instances and solutions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bnp::{SolveReport, SolveStats, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::instgen::GenSpec;
use crate::model::{Assignment, Instance};

pub const INSTANCE_FORMAT: &str = "rsscflp-instance-1";
pub const SOLUTION_FORMAT: &str = "rsscflp-solution-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub format: String,
    /// Generator settings, when the instance was generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GenSpec>,
    pub fixed_cost: Vec<i64>,
    pub capacity: Vec<i64>,
    pub gamma: Vec<usize>,
    pub demand: Vec<i64>,
    pub deviation: Vec<i64>,
    pub assign_cost: Vec<Vec<i64>>,
}

impl InstanceFile {
    pub fn new(inst: &Instance, generator: Option<GenSpec>) -> Self {
        Self {
            format: INSTANCE_FORMAT.into(),
            generator,
            fixed_cost: inst.fixed_costs().to_vec(),
            capacity: inst.capacities().to_vec(),
            gamma: inst.gammas().to_vec(),
            demand: inst.demands().to_vec(),
            deviation: inst.deviations().to_vec(),
            assign_cost: inst.assign_costs().to_vec(),
        }
    }

    pub fn to_instance(&self) -> Result<Instance> {
        if self.format != INSTANCE_FORMAT {
            return Err(Error::Format(format!("expected format {INSTANCE_FORMAT:?}, got {:?}", self.format)));
        }
        Instance::new(
            self.fixed_cost.clone(),
            self.capacity.clone(),
            self.gamma.clone(),
            self.demand.clone(),
            self.deviation.clone(),
            self.assign_cost.clone(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub master_secs: f64,
    pub pricing_secs: f64,
    pub total_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format: String,
    pub status: SolveStatus,
    pub objective: Option<i64>,
    pub bound: Option<f64>,
    pub gap_pct: Option<f64>,
    pub open: Option<Vec<bool>>,
    pub facility_of: Option<Vec<usize>>,
    #[serde(default)]
    pub config: serde_json::Value,
    #[serde(default)]
    pub stats: serde_json::Value,
    /// Wall-clock times; omitted unless requested so that files are
    /// reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl SolutionFile {
    pub fn from_report(report: &SolveReport, config: &SolverConfig, timings: bool) -> Result<Self> {
        let stats: &SolveStats = &report.stats;
        Ok(Self {
            format: SOLUTION_FORMAT.into(),
            status: report.status,
            objective: report.objective,
            bound: report.bound.is_finite().then_some(report.bound),
            gap_pct: report.gap,
            open: report.incumbent.as_ref().map(|a| a.open.clone()),
            facility_of: report.incumbent.as_ref().map(|a| a.facility_of.clone()),
            config: serde_json::to_value(config)?,
            stats: serde_json::to_value(stats)?,
            timings: timings.then(|| Timings {
                master_secs: stats.time_master.as_secs_f64(),
                pricing_secs: stats.time_pricing.as_secs_f64(),
                total_secs: stats.time_total.as_secs_f64(),
            }),
        })
    }

    pub fn assignment(&self) -> Result<Assignment> {
        if self.format != SOLUTION_FORMAT {
            return Err(Error::Format(format!("expected format {SOLUTION_FORMAT:?}, got {:?}", self.format)));
        }
        match (&self.open, &self.facility_of) {
            (Some(open), Some(fo)) => Ok(Assignment {
                facility_of: fo.clone(),
                open: open.clone(),
            }),
            _ => Err(Error::MalformedAssignment("solution carries no assignment".into())),
        }
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    file.to_instance()
}

pub fn write_instance(path: &Path, inst: &Instance, generator: Option<GenSpec>) -> Result<()> {
    std::fs::write(path, to_json_pretty(&InstanceFile::new(inst, generator))?)?;
    Ok(())
}

pub fn read_solution(path: &Path) -> Result<SolutionFile> {
    let file: SolutionFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if file.format != SOLUTION_FORMAT {
        return Err(Error::Format(format!("expected format {SOLUTION_FORMAT:?}, got {:?}", file.format)));
    }
    Ok(file)
}
