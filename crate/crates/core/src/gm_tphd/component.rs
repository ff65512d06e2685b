//! Weighted trajectory Gaussians stored in L-scan form.
//!
//! A component's stacked covariance is kept as two parts: a joint covariance over
//! the most recent `window_len()` states and, for every earlier state, an
//! independent marginal block. Earlier states are never touched again by the
//! filter, so they live in a shared persistent list and cloning a component only
//! copies the window. With `Lscan::Full` the window always spans the whole
//! trajectory and the representation is exactly the dense stacked Gaussian.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, TphdError};
use crate::linalg;
use crate::models::Lscan;

#[derive(Debug)]
struct FrozenBlock {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    prev: Option<Arc<FrozenBlock>>,
}

/// Persistent list of decorrelated early states; the head is the most recent.
#[derive(Debug, Clone, Default)]
struct FrozenHistory {
    head: Option<Arc<FrozenBlock>>,
    len: usize,
}

impl FrozenHistory {
    fn push(&self, mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        FrozenHistory {
            head: Some(Arc::new(FrozenBlock {
                mean,
                cov,
                prev: self.head.clone(),
            })),
            len: self.len + 1,
        }
    }

    /// Blocks in chronological order.
    fn chronological(&self) -> Vec<&FrozenBlock> {
        let mut blocks = Vec::with_capacity(self.len);
        let mut cursor = self.head.as_deref();
        while let Some(block) = cursor {
            blocks.push(block);
            cursor = block.prev.as_deref();
        }
        blocks.reverse();
        blocks
    }
}

/// One term `w · N(t, x^{1:i}; t, m, P)` of a Gaussian-mixture trajectory PHD.
#[derive(Debug, Clone)]
pub struct TrajectoryComponent {
    pub weight: f64,
    start: usize,
    n_x: usize,
    history: FrozenHistory,
    window_mean: DVector<f64>,
    window_cov: Arc<DMatrix<f64>>,
}

impl TrajectoryComponent {
    /// Build a component from a dense stacked mean (chronological `x^1..x^i`) and
    /// covariance. The whole trajectory is treated as one joint window.
    pub fn new(
        weight: f64,
        start: usize,
        mean: DVector<f64>,
        cov: DMatrix<f64>,
        n_x: usize,
    ) -> Result<Self> {
        if n_x == 0 || mean.is_empty() || !mean.len().is_multiple_of(n_x) {
            return Err(TphdError::DimensionMismatch(format!(
                "mean length {} is not a positive multiple of n_x = {n_x}",
                mean.len()
            )));
        }
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(TphdError::DimensionMismatch(format!(
                "covariance is {}x{}, expected {}x{}",
                cov.nrows(),
                cov.ncols(),
                mean.len(),
                mean.len()
            )));
        }
        if start == 0 {
            return Err(TphdError::InvalidParameter("start scan must be >= 1".into()));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(TphdError::NonFiniteWeight {
                component: 0,
                weight,
            });
        }
        Ok(Self::from_parts(weight, start, n_x, mean, Arc::new(cov)))
    }

    pub(crate) fn from_parts(
        weight: f64,
        start: usize,
        n_x: usize,
        window_mean: DVector<f64>,
        window_cov: Arc<DMatrix<f64>>,
    ) -> Self {
        TrajectoryComponent {
            weight,
            start,
            n_x,
            history: FrozenHistory::default(),
            window_mean,
            window_cov,
        }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    /// Number of states `i` in the trajectory.
    pub fn len(&self) -> usize {
        self.history.len + self.window_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Last scan covered, `t + i − 1`.
    pub fn end(&self) -> usize {
        self.start + self.len() - 1
    }

    pub fn covers(&self, k: usize) -> bool {
        k >= self.start && k <= self.end()
    }

    /// Number of trailing states held in the joint window.
    pub fn window_len(&self) -> usize {
        self.window_mean.len() / self.n_x
    }

    pub(crate) fn window_mean(&self) -> &DVector<f64> {
        &self.window_mean
    }

    pub(crate) fn window_cov(&self) -> &Arc<DMatrix<f64>> {
        &self.window_cov
    }

    /// Same trajectory with a new window (history and start kept).
    pub(crate) fn with_window(
        &self,
        weight: f64,
        window_mean: DVector<f64>,
        window_cov: Arc<DMatrix<f64>>,
    ) -> Self {
        TrajectoryComponent {
            weight,
            start: self.start,
            n_x: self.n_x,
            history: self.history.clone(),
            window_mean,
            window_cov,
        }
    }

    /// Dense stacked mean `m` of length `i · n_x`.
    pub fn mean(&self) -> DVector<f64> {
        let n = self.n_x;
        let mut out = DVector::zeros(self.len() * n);
        for (b, block) in self.history.chronological().into_iter().enumerate() {
            out.rows_mut(b * n, n).copy_from(&block.mean);
        }
        let offset = self.history.len * n;
        out.rows_mut(offset, self.window_mean.len())
            .copy_from(&self.window_mean);
        out
    }

    /// Dense stacked covariance `P`; cross-blocks outside the window are zero.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.n_x;
        let dim = self.len() * n;
        let mut out = DMatrix::zeros(dim, dim);
        for (b, block) in self.history.chronological().into_iter().enumerate() {
            out.view_mut((b * n, b * n), (n, n)).copy_from(&block.cov);
        }
        let offset = self.history.len * n;
        let w = self.window_mean.len();
        out.view_mut((offset, offset), (w, w))
            .copy_from(self.window_cov.as_ref());
        out
    }

    /// State sequence `x^1..x^i` of the mean.
    pub fn states(&self) -> Vec<DVector<f64>> {
        let n = self.n_x;
        let mut states: Vec<DVector<f64>> = self
            .history
            .chronological()
            .into_iter()
            .map(|b| b.mean.clone())
            .collect();
        states.extend((0..self.window_len()).map(|b| linalg::vec_block(&self.window_mean, b, n)));
        states
    }

    /// Marginal mean and covariance of the state at absolute scan `k`.
    pub fn marginal_at(&self, k: usize) -> Option<(DVector<f64>, DMatrix<f64>)> {
        if !self.covers(k) {
            return None;
        }
        let idx = k - self.start;
        let n = self.n_x;
        if idx < self.history.len {
            let block = self.history.chronological()[idx];
            Some((block.mean.clone(), block.cov.clone()))
        } else {
            let b = idx - self.history.len;
            Some((
                linalg::vec_block(&self.window_mean, b, n),
                linalg::diag_block(&self.window_cov, b, n),
            ))
        }
    }

    /// Mean and covariance of the most recent state.
    pub fn current_state_marginal(&self) -> (DVector<f64>, DMatrix<f64>) {
        let last = self.window_len() - 1;
        (
            linalg::vec_block(&self.window_mean, last, self.n_x),
            linalg::diag_block(&self.window_cov, last, self.n_x),
        )
    }

    /// Move the oldest window states into the independent history until at most
    /// `limit` states remain jointly correlated.
    pub(crate) fn truncate_window(&mut self, limit: usize) {
        let n = self.n_x;
        let excess = self.window_len().saturating_sub(limit.max(1));
        if excess == 0 {
            return;
        }
        let mut history = self.history.clone();
        for b in 0..excess {
            history = history.push(
                linalg::vec_block(&self.window_mean, b, n),
                linalg::diag_block(&self.window_cov, b, n),
            );
        }
        let keep = self.window_mean.len() - excess * n;
        let off = excess * n;
        self.window_mean = self.window_mean.rows(off, keep).into_owned();
        self.window_cov = Arc::new(self.window_cov.view((off, off), (keep, keep)).into_owned());
        self.history = history;
    }
}

/// Last `n_x` block of the mean and the matching diagonal covariance block.
pub fn current_state_marginal(component: &TrajectoryComponent) -> (DVector<f64>, DMatrix<f64>) {
    component.current_state_marginal()
}

/// L-scan form of a component alive at scan `k`: the joint covariance over scans
/// `k−L+1..k` is kept, each earlier scan keeps only its own marginal block, and
/// every other cross-covariance is zeroed. Weight, start and mean are unchanged.
pub fn lscan_truncate(component: &TrajectoryComponent, lscan: Lscan, k: usize) -> TrajectoryComponent {
    debug_assert_eq!(component.end(), k, "component must be alive at scan {k}");
    let mut out = component.clone();
    if let Some(limit) = lscan.limit() {
        out.truncate_window(limit);
    }
    out
}
