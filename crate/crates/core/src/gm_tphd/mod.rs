//! Gaussian-mixture trajectory PHD filter with the L-scan approximation.
//!
//! The filter state is a Gaussian mixture over alive trajectories. Each scan runs
//! prediction, L-scan truncation, update, estimation, then pruning/absorption.
//! Components for trajectories that have ended are not retained: their weight
//! is multiplied by `1 − p_S` at the next prediction and they carry no useful
//! information about the present.

mod component;
mod estimate;
mod gmphd;
mod predict;
mod prune;
mod update;

pub use component::{current_state_marginal, lscan_truncate, TrajectoryComponent};
pub use estimate::{estimate, estimated_count, TrajectoryEstimate, TrajectoryEstimateSet};
pub use gmphd::{gmphd_reference_step, GaussianTerm, GmphdStep};
pub use predict::predict;
pub use prune::prune_absorb;
pub use update::update;

use nalgebra::DVector;

use crate::error::Result;
use crate::models::{Lscan, ScenarioConfig};

/// Filter state at scan `time` (0 before the first scan).
#[derive(Debug, Clone)]
pub struct TphdState {
    pub time: usize,
    pub lscan: Lscan,
    pub components: Vec<TrajectoryComponent>,
}

impl TphdState {
    pub fn new(lscan: Lscan) -> Self {
        TphdState {
            time: 0,
            lscan,
            components: Vec::new(),
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    /// Apply the L-scan truncation to every component.
    pub fn truncated(mut self) -> Self {
        let (lscan, time) = (self.lscan, self.time);
        for c in &mut self.components {
            *c = lscan_truncate(c, lscan, time);
        }
        self
    }
}

/// Everything produced by one filter cycle, for callers that need the
/// intermediate mixtures.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub updated: TphdState,
    pub estimate: TrajectoryEstimateSet,
    pub pruned: TphdState,
}

/// One filter cycle on the measurements of scan `state.time + 1`.
pub fn step_detailed(state: &TphdState, measurements: &[DVector<f64>], config: &ScenarioConfig) -> Result<StepOutput> {
    let scan = state.time + 1;
    let run = || -> Result<StepOutput> {
        let predicted = predict(state, &config.motion, &config.birth)?.truncated();
        let updated = update(&predicted, measurements, &config.measurement, &config.clutter)?;
        let estimate = estimate(&updated);
        let pruned = prune_absorb(
            &updated,
            config.prune_threshold,
            config.absorb_threshold,
            config.max_components,
        )?;
        Ok(StepOutput {
            updated,
            estimate,
            pruned,
        })
    };
    run().map_err(|e| e.at_scan(scan))
}

/// One filter cycle: predict, L-scan truncation, update, estimate, prune/absorb.
/// Returns the pruned state and the estimate taken before pruning.
pub fn step(
    state: &TphdState,
    measurements: &[DVector<f64>],
    config: &ScenarioConfig,
) -> Result<(TphdState, TrajectoryEstimateSet)> {
    let out = step_detailed(state, measurements, config)?;
    Ok((out.pruned, out.estimate))
}
