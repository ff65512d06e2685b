use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{TphdState, TrajectoryComponent};
use crate::error::{Result, TphdError};
use crate::linalg;
use crate::models::{clutter_density, ClutterModel, MeasurementModel};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Per-component quantities shared by every measurement.
struct Innovation {
    predicted_z: DVector<f64>,
    chol_l: DMatrix<f64>,
    log_norm: f64,
    gain: DMatrix<f64>,
    posterior_cov: Arc<DMatrix<f64>>,
}

impl Innovation {
    fn log_likelihood(&self, z: &DVector<f64>) -> f64 {
        let r = z - &self.predicted_z;
        let white = self
            .chol_l
            .solve_lower_triangular(&r)
            .expect("Cholesky factor has a nonzero diagonal");
        -0.5 * white.norm_squared() - self.log_norm
    }
}

fn innovation(c: &TrajectoryComponent, meas: &MeasurementModel, index: usize) -> Result<Innovation> {
    let h = &meas.observation_matrix;
    let n = c.n_x();
    let n_z = h.nrows();
    let m_w = c.window_mean();
    let p_w = c.window_cov();
    let last = m_w.len() - n;

    let predicted_z = h * m_w.rows(last, n);
    let p_last = linalg::diag_block(p_w, c.window_len() - 1, n);
    let mut s = h * &p_last * h.transpose() + &meas.noise_cov;
    linalg::symmetrize_in_place(&mut s);
    let chol = s
        .cholesky()
        .ok_or(TphdError::SingularInnovation { component: index })?;
    let chol_l = chol.l();
    let log_det: f64 = 2.0 * chol_l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    if !log_det.is_finite() {
        return Err(TphdError::SingularInnovation { component: index });
    }

    // P Ḣᵀ only involves the last block column of the window covariance; rows
    // outside the window have zero cross-covariance and zero gain.
    let pht = p_w.columns(last, n) * h.transpose();
    let gain = chol.solve(&pht.transpose()).transpose();

    let mut posterior = p_w.as_ref() - &gain * pht.transpose();
    if linalg::asymmetry(&posterior) > linalg::SYMMETRY_TOL {
        if linalg::restore_psd(&mut posterior) {
            log::warn!("component {index}: clipped negative eigenvalues of the updated covariance");
        }
    } else {
        linalg::symmetrize_in_place(&mut posterior);
    }

    Ok(Innovation {
        predicted_z,
        chol_l,
        log_norm: 0.5 * (log_det + n_z as f64 * LN_2PI),
        gain,
        posterior_cov: Arc::new(posterior),
    })
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Measurement update for scan `state.time`.
///
/// Output order: the missed-detection copies (weight `(1 − p_D) w`) in input
/// order, followed by, for each measurement in turn, one detected component per
/// input component. Detected weights are normalised against
/// `λ_c c̆(z) + p_D Σ_l w_l q_l(z)` in log space.
pub fn update(
    state: &TphdState,
    measurements: &[DVector<f64>],
    meas: &MeasurementModel,
    clutter: &ClutterModel,
) -> Result<TphdState> {
    let p_d = meas.detection_prob;
    let n_z = meas.observation_matrix.nrows();
    for z in measurements {
        if z.len() != n_z {
            return Err(TphdError::DimensionMismatch(format!(
                "measurement has dimension {}, expected {n_z}",
                z.len()
            )));
        }
    }
    for (j, c) in state.components.iter().enumerate() {
        if c.n_x() != meas.observation_matrix.ncols() {
            return Err(TphdError::DimensionMismatch(format!(
                "component {j} has n_x = {} but H has {} columns",
                c.n_x(),
                meas.observation_matrix.ncols()
            )));
        }
    }

    let innovations = state
        .components
        .iter()
        .enumerate()
        .map(|(j, c)| innovation(c, meas, j))
        .collect::<Result<Vec<_>>>()?;

    let j_count = state.components.len();
    let mut components = Vec::with_capacity(j_count * (1 + measurements.len()));
    components.extend(
        state
            .components
            .iter()
            .map(|c| c.with_window((1.0 - p_d) * c.weight, c.window_mean().clone(), c.window_cov().clone())),
    );

    let log_pd = p_d.ln();
    let mut log_terms = vec![0.0; j_count];
    for z in measurements {
        for (j, (c, inn)) in state.components.iter().zip(&innovations).enumerate() {
            log_terms[j] = log_pd + c.weight.ln() + inn.log_likelihood(z);
        }
        let log_clutter = (clutter.rate * clutter_density(z, clutter)).ln();
        let log_denominator = log_sum_exp(std::iter::once(log_clutter).chain(log_terms.iter().copied()));

        for (j, (c, inn)) in state.components.iter().zip(&innovations).enumerate() {
            let weight = if log_denominator == f64::NEG_INFINITY {
                0.0
            } else {
                (log_terms[j] - log_denominator).exp()
            };
            let mean = c.window_mean() + &inn.gain * (z - &inn.predicted_z);
            components.push(c.with_window(weight, mean, inn.posterior_cov.clone()));
        }
    }

    Ok(TphdState {
        time: state.time,
        lscan: state.lscan,
        components,
    })
}
