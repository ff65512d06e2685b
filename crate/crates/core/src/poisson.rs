//! Poisson point processes over trajectories with Gaussian-mixture intensity:
//! sampling, marginalisation to single-scan target intensities, and expected
//! trajectory counts.

use nalgebra::DVector;
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Result, TphdError};
use crate::gm_tphd::{GaussianTerm, TrajectoryComponent};
use crate::linalg;

/// Gaussian-mixture trajectory PHD; its total weight is the Poisson rate.
#[derive(Debug, Clone, Default)]
pub struct GmTrajectoryPhd {
    pub components: Vec<TrajectoryComponent>,
}

impl GmTrajectoryPhd {
    pub fn new(components: Vec<TrajectoryComponent>) -> Self {
        Self { components }
    }

    pub fn total_mass(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }
}

/// A realised trajectory `(t, x^{1:i})`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub start: usize,
    pub states: Vec<DVector<f64>>,
}

/// Region of trajectory space selected by start scan and length.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryWindow {
    pub starts: Vec<usize>,
    pub lengths: Vec<usize>,
}

impl TrajectoryWindow {
    pub fn contains(&self, start: usize, length: usize) -> bool {
        self.starts.contains(&start) && self.lengths.contains(&length)
    }
}

pub fn sample_cardinality<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<u64> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(TphdError::InvalidParameter(format!(
            "Poisson rate must be nonnegative and finite, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(lambda).map_err(|e| TphdError::InvalidParameter(e.to_string()))?;
    Ok(dist.sample(rng) as u64)
}

/// Draw a set of trajectories: a Poisson number of i.i.d. elements, each from
/// the normalised intensity. Picking a component with probability `w_j / Σw`
/// fixes `(t, i)`; the states are then drawn from that component's Gaussian.
pub fn sample_set<R: Rng + ?Sized>(phd: &GmTrajectoryPhd, rng: &mut R) -> Result<Vec<TrajectorySample>> {
    for (j, c) in phd.components.iter().enumerate() {
        if !c.weight.is_finite() || c.weight < 0.0 {
            return Err(TphdError::NonFiniteWeight {
                component: j,
                weight: c.weight,
            });
        }
    }
    let n = sample_cardinality(phd.total_mass(), rng)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let picker = WeightedIndex::new(phd.components.iter().map(|c| c.weight))
        .map_err(|e| TphdError::InvalidParameter(e.to_string()))?;

    let mut factors: Vec<Option<(DVector<f64>, nalgebra::DMatrix<f64>)>> = vec![None; phd.components.len()];
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let j = picker.sample(rng);
        let c = &phd.components[j];
        let (mean, factor) = factors[j].get_or_insert_with(|| (c.mean(), linalg::sqrt_factor(&c.covariance())));
        let x = &*mean + &*factor * linalg::standard_normal_vector(mean.len(), rng);
        let n_x = c.n_x();
        out.push(TrajectorySample {
            start: c.start(),
            states: (0..c.len()).map(|b| linalg::vec_block(&x, b, n_x)).collect(),
        });
    }
    Ok(out)
}

/// Intensity of the set of targets at scan `k`: for every component covering
/// `k`, the marginal Gaussian of its state at `k` with the same weight.
pub fn marginal_target_phd(phd: &GmTrajectoryPhd, k: usize) -> Vec<GaussianTerm> {
    phd.components
        .iter()
        .filter_map(|c| {
            c.marginal_at(k).map(|(mean, cov)| GaussianTerm {
                weight: c.weight,
                mean,
                cov,
            })
        })
        .collect()
}

/// Expected number of trajectories whose `(start, length)` lies in `window`
/// (all trajectories when `None`).
pub fn expected_count(phd: &GmTrajectoryPhd, window: Option<&TrajectoryWindow>) -> f64 {
    phd.components
        .iter()
        .filter(|c| window.is_none_or(|w| w.contains(c.start(), c.len())))
        .map(|c| c.weight)
        .sum()
}
