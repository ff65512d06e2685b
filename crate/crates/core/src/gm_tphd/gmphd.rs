//! Plain Gaussian-mixture PHD recursion on single-scan target states.
//!
//! Used as a reference: the current-time marginals of the trajectory filter must
//! coincide with this recursion for every L. Pruning here uses absorption (the
//! heaviest term keeps its own moments) rather than moment-matched merging, so
//! the two recursions stay component-for-component comparable.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, TphdError};
use crate::models::{clutter_density, ScenarioConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTerm {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct GmphdStep {
    /// Posterior mixture before pruning.
    pub updated: Vec<GaussianTerm>,
    /// Posterior mixture after pruning and absorption.
    pub pruned: Vec<GaussianTerm>,
}

fn gaussian_density(residual: &DVector<f64>, cov: &DMatrix<f64>, inv: &DMatrix<f64>) -> f64 {
    let n = residual.len() as i32;
    let quad = residual.dot(&(inv * residual));
    (-0.5 * quad).exp() / ((2.0 * std::f64::consts::PI).powi(n) * cov.determinant()).sqrt()
}

/// One predict / update / prune cycle of the reference GMPHD filter.
pub fn gmphd_reference_step(
    gm: &[GaussianTerm],
    measurements: &[DVector<f64>],
    config: &ScenarioConfig,
) -> Result<GmphdStep> {
    let f = &config.motion.transition_matrix;
    let q = &config.motion.process_noise;
    let h = &config.measurement.observation_matrix;
    let r = &config.measurement.noise_cov;
    let p_s = config.motion.survival_prob;
    let p_d = config.measurement.detection_prob;

    let mut predicted: Vec<GaussianTerm> = config
        .birth
        .components
        .iter()
        .map(|b| GaussianTerm {
            weight: b.weight,
            mean: b.mean.clone(),
            cov: b.cov.clone(),
        })
        .collect();
    for t in gm {
        let cov = f * &t.cov * f.transpose() + q;
        predicted.push(GaussianTerm {
            weight: p_s * t.weight,
            mean: f * &t.mean,
            cov: (&cov + cov.transpose()) * 0.5,
        });
    }

    struct Moments {
        z_hat: DVector<f64>,
        s: DMatrix<f64>,
        s_inv: DMatrix<f64>,
        gain: DMatrix<f64>,
        cov: DMatrix<f64>,
    }
    let mut moments = Vec::with_capacity(predicted.len());
    for (j, t) in predicted.iter().enumerate() {
        let s = h * &t.cov * h.transpose() + r;
        let s = (&s + s.transpose()) * 0.5;
        let s_inv = s
            .clone()
            .try_inverse()
            .ok_or(TphdError::SingularInnovation { component: j })?;
        let gain = &t.cov * h.transpose() * &s_inv;
        let cov = &t.cov - &gain * h * &t.cov;
        moments.push(Moments {
            z_hat: h * &t.mean,
            s,
            s_inv,
            gain,
            cov: (&cov + cov.transpose()) * 0.5,
        });
    }

    let mut updated: Vec<GaussianTerm> = predicted
        .iter()
        .map(|t| GaussianTerm {
            weight: (1.0 - p_d) * t.weight,
            mean: t.mean.clone(),
            cov: t.cov.clone(),
        })
        .collect();
    for z in measurements {
        let raw: Vec<f64> = predicted
            .iter()
            .zip(&moments)
            .map(|(t, mo)| p_d * t.weight * gaussian_density(&(z - &mo.z_hat), &mo.s, &mo.s_inv))
            .collect();
        let denom = config.clutter.rate * clutter_density(z, &config.clutter) + raw.iter().sum::<f64>();
        for ((t, mo), w) in predicted.iter().zip(&moments).zip(raw) {
            updated.push(GaussianTerm {
                weight: if denom > 0.0 { w / denom } else { 0.0 },
                mean: &t.mean + &mo.gain * (z - &mo.z_hat),
                cov: mo.cov.clone(),
            });
        }
    }

    let pruned = absorb(&updated, config.prune_threshold, config.absorb_threshold, config.max_components)?;
    Ok(GmphdStep { updated, pruned })
}

fn absorb(terms: &[GaussianTerm], gamma_p: f64, gamma_a: f64, j_max: usize) -> Result<Vec<GaussianTerm>> {
    let mut alive: Vec<usize> = (0..terms.len()).filter(|&i| terms[i].weight > gamma_p).collect();
    let mut out: Vec<GaussianTerm> = Vec::new();
    while !alive.is_empty() {
        // heaviest, lowest index on ties
        let mut j = alive[0];
        for &i in &alive {
            if terms[i].weight > terms[j].weight {
                j = i;
            }
        }
        let inv = terms[j]
            .cov
            .clone()
            .try_inverse()
            .ok_or(TphdError::SingularStateCovariance { component: j })?;
        let mut total = 0.0;
        let mut rest = Vec::with_capacity(alive.len());
        for &i in &alive {
            let d = &terms[i].mean - &terms[j].mean;
            if i == j || d.dot(&(&inv * &d)) < gamma_a {
                total += terms[i].weight;
            } else {
                rest.push(i);
            }
        }
        alive = rest;
        out.push(GaussianTerm {
            weight: total,
            ..terms[j].clone()
        });
    }
    if out.len() > j_max {
        let mut idx: Vec<usize> = (0..out.len()).collect();
        idx.sort_by(|&a, &b| out[b].weight.partial_cmp(&out[a].weight).unwrap().then(a.cmp(&b)));
        idx.truncate(j_max);
        idx.sort_unstable();
        out = idx.into_iter().map(|i| out[i].clone()).collect();
    }
    Ok(out)
}
