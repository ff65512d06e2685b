//! Linear-Gaussian motion, measurement, clutter and birth models, plus the
//! benchmark scenario used by the simulation study.
//!
//! State vectors are ordered `[p_x, v_x, p_y, v_y]` throughout.

use std::fmt;
use std::num::NonZeroUsize;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, TphdError};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    #[serde(with = "serde_matrix")]
    pub transition_matrix: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub process_noise: DMatrix<f64>,
    pub survival_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    #[serde(with = "serde_matrix")]
    pub observation_matrix: DMatrix<f64>,
    #[serde(with = "serde_matrix")]
    pub noise_cov: DMatrix<f64>,
    pub detection_prob: f64,
}

/// Axis-aligned box in measurement space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Region {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    /// Closed-box membership.
    pub fn contains(&self, z: &DVector<f64>) -> bool {
        z.len() == self.dim()
            && z
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterModel {
    /// Mean number of clutter points per scan.
    pub rate: f64,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthComponent {
    pub weight: f64,
    #[serde(with = "serde_vector")]
    pub mean: DVector<f64>,
    #[serde(with = "serde_matrix")]
    pub cov: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BirthModel {
    pub components: Vec<BirthComponent>,
}

impl BirthModel {
    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }
}

/// Length of the L-scan window: a positive number of scans, or the whole trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lscan {
    Window(NonZeroUsize),
    Full,
}

impl Lscan {
    pub fn window(l: usize) -> Result<Self> {
        NonZeroUsize::new(l)
            .map(Lscan::Window)
            .ok_or_else(|| TphdError::InvalidParameter("lscan must be positive".into()))
    }

    /// Maximum number of jointly-correlated scans, `None` for unbounded.
    pub fn limit(&self) -> Option<usize> {
        match self {
            Lscan::Window(l) => Some(l.get()),
            Lscan::Full => None,
        }
    }
}

impl fmt::Display for Lscan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lscan::Window(l) => write!(f, "{l}"),
            Lscan::Full => f.write_str("full"),
        }
    }
}

impl std::str::FromStr for Lscan {
    type Err = TphdError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") {
            return Ok(Lscan::Full);
        }
        let l: usize = s
            .parse()
            .map_err(|_| TphdError::InvalidParameter(format!("invalid lscan value '{s}'")))?;
        Lscan::window(l)
    }
}

impl Serialize for Lscan {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Lscan::Window(l) => serializer.serialize_u64(l.get() as u64),
            Lscan::Full => serializer.serialize_str("full"),
        }
    }
}

impl<'de> Deserialize<'de> for Lscan {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(l) => Lscan::window(l as usize).map_err(serde::de::Error::custom),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// How a ground-truth trajectory obtains its initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruthOrigin {
    /// Zero-based index into the birth model's components.
    BirthComponent { birth_component: usize },
    InitialState {
        #[serde(with = "serde_vector")]
        initial_state: DVector<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub birth: usize,
    /// Inclusive.
    pub death: usize,
    #[serde(flatten)]
    pub origin: TruthOrigin,
}

/// Initial-state convention for truth entries attached to a birth component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthMode {
    /// Start exactly at the birth-component mean.
    #[default]
    Fixed,
    /// Draw the initial state from the birth component.
    Sampled,
}

impl std::str::FromStr for TruthMode {
    type Err = TphdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" => Ok(TruthMode::Fixed),
            "sampled" => Ok(TruthMode::Sampled),
            other => Err(TphdError::InvalidParameter(format!(
                "unknown truth mode '{other}' (expected fixed|sampled)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub motion: MotionModel,
    pub measurement: MeasurementModel,
    pub clutter: ClutterModel,
    pub birth: BirthModel,
    pub horizon: usize,
    pub lscan: Lscan,
    pub prune_threshold: f64,
    pub absorb_threshold: f64,
    pub max_components: usize,
    pub ground_truth_spec: Vec<TruthEntry>,
    pub runs: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub truth_mode: TruthMode,
}

impl ScenarioConfig {
    pub fn n_x(&self) -> usize {
        self.motion.transition_matrix.nrows()
    }

    pub fn n_z(&self) -> usize {
        self.measurement.observation_matrix.nrows()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ScenarioConfig = serde_json::from_str(&text)?;
        validate(config)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Apply a `name=value` override. Recognised names: `sigma2` (isotropic
    /// measurement noise variance), `lambda_c`, `p_D`, `p_S`, `q` is not
    /// supported because the process-noise structure is scenario specific.
    pub fn with_override(mut self, assignment: &str) -> Result<Self> {
        let (name, value) = assignment.split_once('=').ok_or_else(|| {
            TphdError::InvalidParameter(format!("override '{assignment}' is not name=value"))
        })?;
        let value: f64 = value.trim().parse().map_err(|_| {
            TphdError::InvalidParameter(format!("override '{assignment}' has a non-numeric value"))
        })?;
        match name.trim() {
            "sigma2" | "sigma^2" => {
                let n_z = self.n_z();
                self.measurement.noise_cov = DMatrix::identity(n_z, n_z) * value;
            }
            "lambda_c" | "clutter_rate" => self.clutter.rate = value,
            "p_D" | "p_d" | "pd" => self.measurement.detection_prob = value,
            "p_S" | "p_s" | "ps" => self.motion.survival_prob = value,
            other => {
                return Err(TphdError::InvalidParameter(format!(
                    "unknown override '{other}' (expected sigma2, lambda_c, p_D or p_S)"
                )))
            }
        }
        validate(self)
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(TphdError::ProbabilityOutOfRange { name, value })
    }
}

fn check_shape(name: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(TphdError::DimensionMismatch(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(TphdError::InvalidParameter(format!("{name} has non-finite entries")));
    }
    Ok(())
}

fn check_nonnegative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(TphdError::InvalidParameter(format!("{name} must be a nonnegative finite number, got {value}")))
    }
}

pub fn validate_motion(motion: &MotionModel) -> Result<usize> {
    let n_x = motion.transition_matrix.nrows();
    if n_x == 0 {
        return Err(TphdError::DimensionMismatch("state dimension is zero".into()));
    }
    check_shape("transition_matrix", &motion.transition_matrix, n_x, n_x)?;
    check_shape("process_noise", &motion.process_noise, n_x, n_x)?;
    if !linalg::is_psd(&motion.process_noise) {
        return Err(TphdError::NonPsd("process_noise".into()));
    }
    check_probability("survival_prob", motion.survival_prob)?;
    Ok(n_x)
}

pub fn validate_measurement(meas: &MeasurementModel, n_x: usize) -> Result<usize> {
    let n_z = meas.observation_matrix.nrows();
    if n_z == 0 {
        return Err(TphdError::DimensionMismatch("measurement dimension is zero".into()));
    }
    check_shape("observation_matrix", &meas.observation_matrix, n_z, n_x)?;
    check_shape("noise_cov", &meas.noise_cov, n_z, n_z)?;
    if !linalg::is_pd(&meas.noise_cov) {
        return Err(TphdError::NonPsd("noise_cov must be positive definite".into()));
    }
    check_probability("detection_prob", meas.detection_prob)?;
    Ok(n_z)
}

pub fn validate_clutter(clutter: &ClutterModel, n_z: usize) -> Result<()> {
    check_nonnegative("clutter rate", clutter.rate)?;
    let region = &clutter.region;
    if region.lower.len() != n_z || region.upper.len() != n_z {
        return Err(TphdError::DimensionMismatch(format!(
            "clutter region has dimension {}/{}, expected {n_z}",
            region.lower.len(),
            region.upper.len()
        )));
    }
    let positive = region
        .lower
        .iter()
        .zip(&region.upper)
        .all(|(lo, hi)| lo.is_finite() && hi.is_finite() && hi > lo);
    if !positive {
        return Err(TphdError::InvalidParameter("clutter region must have positive volume".into()));
    }
    Ok(())
}

pub fn validate_birth(birth: &BirthModel, n_x: usize) -> Result<()> {
    for (j, c) in birth.components.iter().enumerate() {
        check_nonnegative(&format!("birth weight {j}"), c.weight)?;
        if c.mean.len() != n_x {
            return Err(TphdError::DimensionMismatch(format!(
                "birth mean {j} has length {}, expected {n_x}",
                c.mean.len()
            )));
        }
        check_shape(&format!("birth cov {j}"), &c.cov, n_x, n_x)?;
        if !linalg::is_psd(&c.cov) {
            return Err(TphdError::NonPsd(format!("birth cov {j}")));
        }
    }
    Ok(())
}

/// Check every model invariant. The configuration is returned unchanged; the
/// symmetrization applied before PSD checks is not written back.
pub fn validate(config: ScenarioConfig) -> Result<ScenarioConfig> {
    let n_x = validate_motion(&config.motion)?;
    let n_z = validate_measurement(&config.measurement, n_x)?;
    validate_clutter(&config.clutter, n_z)?;
    validate_birth(&config.birth, n_x)?;
    if config.horizon == 0 {
        return Err(TphdError::InvalidParameter("horizon must be at least 1".into()));
    }
    check_nonnegative("prune_threshold", config.prune_threshold)?;
    check_nonnegative("absorb_threshold", config.absorb_threshold)?;
    if config.max_components == 0 {
        return Err(TphdError::InvalidParameter("max_components must be positive".into()));
    }
    if config.runs == 0 {
        return Err(TphdError::InvalidParameter("runs must be positive".into()));
    }
    for (index, entry) in config.ground_truth_spec.iter().enumerate() {
        if entry.birth < 1 || entry.birth > entry.death || entry.death > config.horizon {
            return Err(TphdError::TruthOutOfHorizon {
                index,
                reason: format!(
                    "need 1 <= birth ({}) <= death ({}) <= horizon ({})",
                    entry.birth, entry.death, config.horizon
                ),
            });
        }
        match &entry.origin {
            TruthOrigin::BirthComponent { birth_component } => {
                if *birth_component >= config.birth.components.len() {
                    return Err(TphdError::UnknownBirthComponent {
                        index,
                        component: *birth_component,
                        available: config.birth.components.len(),
                    });
                }
            }
            TruthOrigin::InitialState { initial_state } => {
                if initial_state.len() != n_x {
                    return Err(TphdError::DimensionMismatch(format!(
                        "truth entry {index} initial state has length {}, expected {n_x}",
                        initial_state.len()
                    )));
                }
            }
        }
    }
    Ok(config)
}

/// Nearly-constant-velocity model in two dimensions with sampling time `tau`
/// and process-noise intensity `q`.
pub fn constant_velocity_motion(tau: f64, q: f64, survival_prob: f64) -> MotionModel {
    let f1 = DMatrix::from_row_slice(2, 2, &[1.0, tau, 0.0, 1.0]);
    let q1 = DMatrix::from_row_slice(
        2,
        2,
        &[tau.powi(3) / 3.0, tau.powi(2) / 2.0, tau.powi(2) / 2.0, tau],
    );
    let i2 = DMatrix::<f64>::identity(2, 2);
    MotionModel {
        transition_matrix: i2.kronecker(&f1),
        process_noise: i2.kronecker(&q1) * q,
        survival_prob,
    }
}

/// Position-only measurements `[p_x, p_y]` with isotropic noise variance `sigma2`.
pub fn position_measurement(sigma2: f64, detection_prob: f64) -> MeasurementModel {
    MeasurementModel {
        observation_matrix: DMatrix::from_row_slice(
            2,
            4,
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        ),
        noise_cov: DMatrix::identity(2, 2) * sigma2,
        detection_prob,
    }
}

/// The benchmark scenario: three birth locations, three targets alive over
/// scans [1,80], [5,70] and [10,95] of a 100-scan horizon. Initial truth states
/// are drawn from the attached birth components.
pub fn benchmark_scenario() -> ScenarioConfig {
    let birth_cov = DMatrix::from_diagonal_element(4, 4, 100.0);
    let birth_means = [
        [85.0, 0.0, 140.0, 0.0],
        [-5.0, 0.0, 220.0, 0.0],
        [7.0, 0.0, 50.0, 0.0],
    ];
    let birth = BirthModel {
        components: birth_means
            .iter()
            .map(|m| BirthComponent {
                weight: 0.1,
                mean: DVector::from_row_slice(m),
                cov: birth_cov.clone(),
            })
            .collect(),
    };
    let ground_truth_spec = [(1, 80, 0), (5, 70, 1), (10, 95, 2)]
        .into_iter()
        .map(|(birth, death, component)| TruthEntry {
            birth,
            death,
            origin: TruthOrigin::BirthComponent {
                birth_component: component,
            },
        })
        .collect();
    ScenarioConfig {
        motion: constant_velocity_motion(0.5, 3.24, 0.99),
        measurement: position_measurement(16.0, 0.9),
        clutter: ClutterModel {
            rate: 50.0,
            region: Region::new(vec![0.0, 0.0], vec![2000.0, 2000.0]),
        },
        birth,
        horizon: 100,
        lscan: Lscan::Window(NonZeroUsize::new(10).unwrap()),
        prune_threshold: 1e-4,
        absorb_threshold: 0.1,
        max_components: 30,
        ground_truth_spec,
        runs: 500,
        base_seed: 0,
        truth_mode: TruthMode::Sampled,
    }
}

/// Uniform clutter spatial density: `1 / volume` inside the region, zero outside.
pub fn clutter_density(z: &DVector<f64>, clutter: &ClutterModel) -> f64 {
    if clutter.region.contains(z) {
        1.0 / clutter.region.volume()
    } else {
        0.0
    }
}

/// Row-major nested-array (de)serialization for dense matrices.
pub mod serde_matrix {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_row_iterator(
            nrows,
            ncols,
            rows.into_iter().flatten(),
        ))
    }
}

/// Plain-array (de)serialization for dense vectors.
pub mod serde_vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::deserialize(d)?))
    }
}
