//! Ground-truth trajectories and per-scan measurement sets under the standard
//! point-target model: independent detections with probability `p_D`, Gaussian
//! measurement noise, and Poisson clutter uniform over the surveillance region.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TphdError};
use crate::linalg;
use crate::models::{ClutterModel, MeasurementModel, ScenarioConfig, TruthMode, TruthOrigin};
use crate::poisson::sample_cardinality;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthTrajectory {
    pub birth: usize,
    /// Inclusive.
    pub death: usize,
    #[serde(with = "serde_states")]
    pub states: Vec<DVector<f64>>,
}

impl GroundTruthTrajectory {
    pub fn is_alive_at(&self, k: usize) -> bool {
        self.birth <= k && k <= self.death
    }

    pub fn state_at(&self, k: usize) -> Option<&DVector<f64>> {
        if self.is_alive_at(k) {
            self.states.get(k - self.birth)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanMeasurements {
    pub scan: usize,
    pub points: Vec<DVector<f64>>,
}

/// Simulate every truth entry of `config`: the initial state at the birth scan,
/// then `x^{j+1} ~ N(F x^j, Q)` up to the death scan.
pub fn generate_truth<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
    mode: TruthMode,
) -> Result<Vec<GroundTruthTrajectory>> {
    let f = &config.motion.transition_matrix;
    let q_factor = linalg::sqrt_factor(&config.motion.process_noise);
    let n_x = config.n_x();

    let mut truth = Vec::with_capacity(config.ground_truth_spec.len());
    for (index, entry) in config.ground_truth_spec.iter().enumerate() {
        let initial = match &entry.origin {
            TruthOrigin::InitialState { initial_state } => initial_state.clone(),
            TruthOrigin::BirthComponent { birth_component } => {
                let component = config.birth.components.get(*birth_component).ok_or(
                    TphdError::UnknownBirthComponent {
                        index,
                        component: *birth_component,
                        available: config.birth.components.len(),
                    },
                )?;
                match mode {
                    TruthMode::Fixed => component.mean.clone(),
                    TruthMode::Sampled => linalg::sample_gaussian(&component.mean, &component.cov, rng),
                }
            }
        };
        if initial.len() != n_x {
            return Err(TphdError::DimensionMismatch(format!(
                "truth entry {index} initial state has length {}, expected {n_x}",
                initial.len()
            )));
        }
        let length = entry.death + 1 - entry.birth;
        let mut states = Vec::with_capacity(length);
        states.push(initial);
        for _ in 1..length {
            let prev = states.last().expect("non-empty");
            let next = f * prev + &q_factor * linalg::standard_normal_vector(n_x, rng);
            states.push(next);
        }
        truth.push(GroundTruthTrajectory {
            birth: entry.birth,
            death: entry.death,
            states,
        });
    }
    Ok(truth)
}

/// Measurements of scan `k`: detections of alive targets and uniform clutter,
/// returned in random order.
pub fn generate_scan<R: Rng + ?Sized>(
    truth: &[GroundTruthTrajectory],
    k: usize,
    meas: &MeasurementModel,
    clutter: &ClutterModel,
    rng: &mut R,
) -> ScanMeasurements {
    let h = &meas.observation_matrix;
    let r_factor = linalg::sqrt_factor(&meas.noise_cov);
    let n_z = h.nrows();

    let mut points = Vec::new();
    for x in truth.iter().filter_map(|t| t.state_at(k)) {
        if rng.random_bool(meas.detection_prob) {
            points.push(h * x + &r_factor * linalg::standard_normal_vector(n_z, rng));
        }
    }
    let count = sample_cardinality(clutter.rate, rng).expect("validated clutter rate");
    let region = &clutter.region;
    for _ in 0..count {
        points.push(DVector::from_iterator(
            n_z,
            region
                .lower
                .iter()
                .zip(&region.upper)
                .map(|(lo, hi)| rng.random_range(*lo..*hi)),
        ));
    }
    points.shuffle(rng);
    ScanMeasurements { scan: k, points }
}

/// Scans `1..=config.horizon`.
pub fn generate_scans<R: Rng + ?Sized>(
    truth: &[GroundTruthTrajectory],
    config: &ScenarioConfig,
    rng: &mut R,
) -> Vec<ScanMeasurements> {
    (1..=config.horizon)
        .map(|k| generate_scan(truth, k, &config.measurement, &config.clutter, rng))
        .collect()
}

/// Trajectories alive at `k`, truncated to scans `<= k`.
pub fn alive_set(truth: &[GroundTruthTrajectory], k: usize) -> Vec<GroundTruthTrajectory> {
    truth
        .iter()
        .filter(|t| t.is_alive_at(k))
        .map(|t| GroundTruthTrajectory {
            birth: t.birth,
            death: k,
            states: t.states[..=k - t.birth].to_vec(),
        })
        .collect()
}

/// Number of targets alive at scan `k`.
pub fn true_cardinality(truth: &[GroundTruthTrajectory], k: usize) -> usize {
    truth.iter().filter(|t| t.is_alive_at(k)).count()
}

pub fn save_truth(truth: &[GroundTruthTrajectory], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(truth)?)?;
    Ok(())
}

pub fn load_truth(path: impl AsRef<Path>) -> Result<Vec<GroundTruthTrajectory>> {
    let truth: Vec<GroundTruthTrajectory> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    for (i, t) in truth.iter().enumerate() {
        if t.birth > t.death || t.states.len() != t.death + 1 - t.birth {
            return Err(TphdError::InvalidParameter(format!(
                "truth trajectory {i}: {} states for lifetime [{}, {}]",
                t.states.len(),
                t.birth,
                t.death
            )));
        }
    }
    Ok(truth)
}

/// Sample covariance of the rows of `samples`.
#[doc(hidden)]
pub fn sample_covariance(samples: &[DVector<f64>]) -> DMatrix<f64> {
    let n = samples.len() as f64;
    let dim = samples[0].len();
    let mean = samples.iter().fold(DVector::zeros(dim), |acc, s| acc + s) / n;
    samples
        .iter()
        .fold(DMatrix::zeros(dim, dim), |acc, s| {
            let d = s - &mean;
            acc + &d * d.transpose()
        })
        / (n - 1.0)
}

mod serde_states {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(states: &[DVector<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = states.iter().map(|v| v.as_slice()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DVector<f64>>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        Ok(rows.into_iter().map(DVector::from_vec).collect())
    }
}
