use nalgebra::DVector;

use super::TphdState;

/// One estimated trajectory: start scan and state sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEstimate {
    pub start: usize,
    pub states: Vec<DVector<f64>>,
}

impl TrajectoryEstimate {
    pub fn end(&self) -> usize {
        self.start + self.states.len() - 1
    }

    /// State at absolute scan `k`, if covered.
    pub fn state_at(&self, k: usize) -> Option<&DVector<f64>> {
        if k < self.start {
            return None;
        }
        self.states.get(k - self.start)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryEstimateSet {
    pub time: usize,
    pub estimates: Vec<TrajectoryEstimate>,
}

impl TrajectoryEstimateSet {
    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }
}

/// `round(Σ w)` with ties rounded away from zero.
pub fn estimated_count(state: &TphdState) -> usize {
    let total: f64 = state.components.iter().map(|c| c.weight).sum();
    total.round().max(0.0) as usize
}

/// Report the `N̂ = round(Σ w)` heaviest components as trajectories (ties broken
/// by lower index, output ordered by decreasing weight). When `N̂` exceeds the
/// number of components every component is reported. Components whose start
/// and mean duplicate an already reported trajectory are skipped.
pub fn estimate(state: &TphdState) -> TrajectoryEstimateSet {
    let wanted = estimated_count(state);
    let weights: Vec<f64> = state.components.iter().map(|c| c.weight).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));

    let mut estimates: Vec<TrajectoryEstimate> = Vec::with_capacity(wanted);
    for j in order {
        if estimates.len() == wanted {
            break;
        }
        let c = &state.components[j];
        let candidate = TrajectoryEstimate {
            start: c.start(),
            states: c.states(),
        };
        if !estimates.contains(&candidate) {
            estimates.push(candidate);
        }
    }
    TrajectoryEstimateSet {
        time: state.time,
        estimates,
    }
}
