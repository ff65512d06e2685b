use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{TphdState, TrajectoryComponent};
use crate::error::{Result, TphdError};
use crate::linalg;
use crate::models::{BirthModel, MotionModel};

/// Prediction from scan `k` to `k + 1`.
///
/// Output order: one fresh length-1 component per birth term, then every input
/// component extended by one predicted state with weight `p_S · w`. Trajectories
/// that die are not retained, so the result only contains alive components.
pub fn predict(state: &TphdState, motion: &MotionModel, birth: &BirthModel) -> Result<TphdState> {
    let next = state.time + 1;
    let n_x = motion.transition_matrix.nrows();
    let mut components = Vec::with_capacity(birth.components.len() + state.components.len());

    for b in &birth.components {
        if b.mean.len() != n_x || b.cov.nrows() != n_x || b.cov.ncols() != n_x {
            return Err(TphdError::DimensionMismatch(format!(
                "birth component has dimension {} but the motion model has {n_x}",
                b.mean.len()
            )));
        }
        components.push(TrajectoryComponent::from_parts(
            b.weight,
            next,
            n_x,
            b.mean.clone(),
            Arc::new(b.cov.clone()),
        ));
    }

    for (j, c) in state.components.iter().enumerate() {
        if c.n_x() != n_x {
            return Err(TphdError::DimensionMismatch(format!(
                "component {j} has n_x = {} but the motion model has {n_x}",
                c.n_x()
            )));
        }
        components.push(extend(c, motion));
    }

    Ok(TphdState {
        time: next,
        lscan: state.lscan,
        components,
    })
}

/// Append `x^{i+1} ~ N(F x^i, Q)` to the stacked Gaussian. Only the last window
/// block enters the new moments; `F` is never expanded to the stacked dimension.
fn extend(c: &TrajectoryComponent, motion: &MotionModel) -> TrajectoryComponent {
    let f = &motion.transition_matrix;
    let n = c.n_x();
    let m_w = c.window_mean();
    let p_w = c.window_cov();
    let w = m_w.len();
    let last = w - n;

    let m_last = m_w.rows(last, n);
    let p_last = linalg::diag_block(p_w, c.window_len() - 1, n);

    let mut mean = DVector::zeros(w + n);
    mean.rows_mut(0, w).copy_from(m_w);
    mean.rows_mut(w, n).copy_from(&(f * m_last));

    // Cov(x_window, x_new) = P_w[:, last] Fᵀ
    let cross = p_w.columns(last, n) * f.transpose();
    let mut p_new = f * &p_last * f.transpose() + &motion.process_noise;
    linalg::symmetrize_in_place(&mut p_new);

    let mut cov = DMatrix::zeros(w + n, w + n);
    cov.view_mut((0, 0), (w, w)).copy_from(p_w.as_ref());
    cov.view_mut((0, w), (w, n)).copy_from(&cross);
    cov.view_mut((w, 0), (n, w)).copy_from(&cross.transpose());
    cov.view_mut((w, w), (n, n)).copy_from(&p_new);

    c.with_window(motion.survival_prob * c.weight, mean, Arc::new(cov))
}
