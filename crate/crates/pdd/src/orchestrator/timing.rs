//! Wall-clock accounting and the idealized parallel-scaling model.
//!
//! The interesting scaling claim is about *structure*: the interface stage
//! costs the same no matter how many subdomains the box is cut into
//! (more cuts, but proportionally fewer samples of work per worker when the
//! worker count matches), while the subdomain stage splits into fully
//! independent solves and should scale like `T1 / p`. Measuring that claim
//! with real threads is hostage to the machine the suite runs on, so in
//! addition to raw wall times the orchestrator records per-unit costs and
//! derives *idealized* stage times by round-robin assignment of unit costs
//! to `p` workers, taking the most loaded worker as the stage makespan. That
//! model is exact for perfectly parallel stages and deterministic on any
//! host.

use crate::error::{PddError, Result};

/// Timing breakdown of one orchestrated run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StageTimings {
    /// Worker count the run was configured with.
    pub workers: usize,
    /// Measured wall time of the interface (sampling) stage.
    pub stage1_wall_seconds: f64,
    /// Measured wall time of the subdomain (deterministic) stage.
    pub stage2_wall_seconds: f64,
    /// Measured cost of each interface work unit.
    pub stage1_unit_seconds: Vec<f64>,
    /// Measured cost of each subdomain solve.
    pub stage2_unit_seconds: Vec<f64>,
    /// Makespan of the interface stage under the idealized model.
    pub stage1_ideal_seconds: f64,
    /// Makespan of the subdomain stage under the idealized model.
    pub stage2_ideal_seconds: f64,
}

impl StageTimings {
    pub fn from_units(
        workers: usize,
        stage1_wall_seconds: f64,
        stage2_wall_seconds: f64,
        stage1_unit_seconds: Vec<f64>,
        stage2_unit_seconds: Vec<f64>,
    ) -> Self {
        let stage1_ideal_seconds = idealized_stage_seconds(&stage1_unit_seconds, workers);
        let stage2_ideal_seconds = idealized_stage_seconds(&stage2_unit_seconds, workers);
        Self {
            workers,
            stage1_wall_seconds,
            stage2_wall_seconds,
            stage1_unit_seconds,
            stage2_unit_seconds,
            stage1_ideal_seconds,
            stage2_ideal_seconds,
        }
    }

    /// Total idealized makespan (the two stages are sequential).
    pub fn total_ideal_seconds(&self) -> f64 {
        self.stage1_ideal_seconds + self.stage2_ideal_seconds
    }
}

/// Makespan of `units` under round-robin assignment to `workers` workers.
///
/// Unit `i` goes to worker `i % workers`; the stage finishes when the most
/// loaded worker does. With one worker this is the plain sum.
pub fn idealized_stage_seconds(units: &[f64], workers: usize) -> f64 {
    let workers = workers.max(1);
    let mut loads = vec![0.0_f64; workers.min(units.len().max(1))];
    for (i, &u) in units.iter().enumerate() {
        let w = i % loads.len();
        loads[w] += u;
    }
    loads.into_iter().fold(0.0, f64::max)
}

/// Speedup of `candidate` relative to `baseline` (`baseline / candidate`).
pub fn measure_speedup(baseline_seconds: f64, candidate_seconds: f64) -> Result<f64> {
    if !(baseline_seconds.is_finite() && candidate_seconds.is_finite())
        || baseline_seconds <= 0.0
        || candidate_seconds <= 0.0
    {
        return Err(PddError::InvalidMeasurement(format!(
            "speedup needs positive finite stage times, got baseline {baseline_seconds} \
             and candidate {candidate_seconds}"
        )));
    }
    Ok(baseline_seconds / candidate_seconds)
}
