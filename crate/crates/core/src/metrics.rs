//! OSPA distance between finite point sets and the time-averaged trajectory
//! cost used to score the filter.

use nalgebra::{DMatrix, DVector};

use crate::assignment::optimal_assignment;
use crate::gm_tphd::{TrajectoryEstimate, TrajectoryEstimateSet};
use crate::poisson::TrajectorySample;
use crate::simulator::GroundTruthTrajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OspaParams {
    /// Cutoff `c > 0`.
    pub cutoff: f64,
    /// Order `p >= 1`.
    pub order: f64,
}

impl Default for OspaParams {
    fn default() -> Self {
        OspaParams {
            cutoff: 10.0,
            order: 2.0,
        }
    }
}

/// Anything with a start scan and a consecutive state sequence.
pub trait TrajectoryLike {
    fn start(&self) -> usize;
    fn states(&self) -> &[DVector<f64>];

    fn state_at(&self, k: usize) -> Option<&DVector<f64>> {
        k.checked_sub(self.start()).and_then(|i| self.states().get(i))
    }
}

impl TrajectoryLike for GroundTruthTrajectory {
    fn start(&self) -> usize {
        self.birth
    }
    fn states(&self) -> &[DVector<f64>] {
        &self.states
    }
}

impl TrajectoryLike for TrajectoryEstimate {
    fn start(&self) -> usize {
        self.start
    }
    fn states(&self) -> &[DVector<f64>] {
        &self.states
    }
}

impl TrajectoryLike for TrajectorySample {
    fn start(&self) -> usize {
        self.start
    }
    fn states(&self) -> &[DVector<f64>] {
        &self.states
    }
}

/// Set of single-scan states at scan `k`: one per trajectory covering `k`.
pub fn tau_at_time<T: TrajectoryLike>(trajectories: &[T], k: usize) -> Vec<DVector<f64>> {
    trajectories
        .iter()
        .filter_map(|t| t.state_at(k).cloned())
        .collect()
}

/// OSPA distance with Euclidean base metric.
pub fn ospa(x: &[DVector<f64>], y: &[DVector<f64>], params: &OspaParams) -> f64 {
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let (n, m) = (small.len(), large.len());
    if m == 0 {
        return 0.0;
    }
    let c = params.cutoff;
    let p = params.order;
    let cost = DMatrix::from_fn(n, m, |i, j| (&small[i] - &large[j]).norm().min(c).powf(p));
    let matched = optimal_assignment(&cost).total_cost;
    let penalty = c.powf(p) * (m - n) as f64;
    ((matched + penalty) / m as f64).powf(1.0 / p)
}

fn project(points: Vec<DVector<f64>>, projection: &DMatrix<f64>) -> Vec<DVector<f64>> {
    points.into_iter().map(|x| projection * x).collect()
}

/// Mean over scans `1..=k` of the OSPA distance between the true alive
/// trajectories and the estimated ones at each scan. Distances are computed on
/// `projection · x` (positions, for the benchmark scenario).
pub fn trajectory_cost(
    truth_alive: &[GroundTruthTrajectory],
    estimates: &TrajectoryEstimateSet,
    k: usize,
    params: &OspaParams,
    projection: &DMatrix<f64>,
) -> f64 {
    assert!(k >= 1, "trajectory cost needs k >= 1");
    let total: f64 = (1..=k)
        .map(|j| {
            let truth = project(tau_at_time(truth_alive, j), projection);
            let est = project(tau_at_time(&estimates.estimates, j), projection);
            ospa(&truth, &est, params)
        })
        .sum();
    total / k as f64
}
