use nalgebra::DMatrix;

use super::TphdState;
use crate::error::{Result, TphdError};

/// Index of the largest weight among `candidates`; ties go to the lowest index.
pub(crate) fn argmax_weight(candidates: &[usize], weights: &[f64]) -> usize {
    let mut best = candidates[0];
    for &i in &candidates[1..] {
        if weights[i] > weights[best] || (weights[i] == weights[best] && i < best) {
            best = i;
        }
    }
    best
}

/// Positions of the `keep` largest weights (stable for ties), in ascending position order.
pub(crate) fn top_by_weight(weights: &[f64], keep: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    order.truncate(keep);
    order.sort_unstable();
    order
}

/// Pruning and absorption.
///
/// Components with weight `<= gamma_p` are dropped. Then, repeatedly, the
/// heaviest remaining component absorbs every remaining component whose
/// current-state mean lies within squared Mahalanobis distance `gamma_a` (under
/// the heavy component's current-state covariance); the survivor keeps its own
/// trajectory and receives the summed weight. At most `j_max` survivors are kept,
/// choosing the heaviest.
pub fn prune_absorb(state: &TphdState, gamma_p: f64, gamma_a: f64, j_max: usize) -> Result<TphdState> {
    let weights: Vec<f64> = state.components.iter().map(|c| c.weight).collect();
    let mut remaining: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > gamma_p).collect();
    let currents: Vec<_> = state
        .components
        .iter()
        .map(|c| c.current_state_marginal())
        .collect();

    let mut survivors = Vec::new();
    let mut survivor_weights = Vec::new();
    while !remaining.is_empty() {
        let j = argmax_weight(&remaining, &weights);
        let (m_j, p_j): &(_, DMatrix<f64>) = &currents[j];
        let chol = p_j
            .clone()
            .cholesky()
            .ok_or(TphdError::SingularStateCovariance { component: j })?;

        let mut absorbed = 0.0;
        remaining.retain(|&i| {
            let close = i == j || {
                let d = &currents[i].0 - m_j;
                d.dot(&chol.solve(&d)) < gamma_a
            };
            if close {
                absorbed += weights[i];
            }
            !close
        });

        let mut survivor = state.components[j].clone();
        survivor.weight = absorbed;
        survivor_weights.push(absorbed);
        survivors.push(survivor);
    }

    if survivors.len() > j_max {
        let keep = top_by_weight(&survivor_weights, j_max);
        survivors = keep.into_iter().map(|i| survivors[i].clone()).collect();
    }

    Ok(TphdState {
        time: state.time,
        lscan: state.lscan,
        components: survivors,
    })
}
