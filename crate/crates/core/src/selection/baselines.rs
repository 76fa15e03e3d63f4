//! Baseline query strategies.

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::kmedoids::kmedoids;
use super::{ALState, SelectionScore, Strategy};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{substream, Stream};

/// Uniform draw from the unlabeled pool. The stream depends on `seed` and the
/// current round, so repeated calls in one round agree.
pub fn random_select(state: &ALState, seed: u64) -> Result<SelectionScore> {
    state.require_unlabeled()?;
    let mut rng = substream(
        seed,
        Stream::Selection {
            round: state.round() as u32,
        },
    );
    let k = rng.random_range(0..state.unlabeled_count());
    let node = state.unlabeled().nth(k).expect("index within pool");
    Ok(SelectionScore {
        node,
        score: 0.0,
        strategy: Strategy::Random,
    })
}

/// Highest-degree unlabeled node, smallest id on ties.
pub fn degree_select(g: &Graph, state: &ALState) -> Result<SelectionScore> {
    state.require_unlabeled()?;
    let mut best = None;
    for v in state.unlabeled() {
        let d = g.degree(v);
        if best.is_none_or(|(_, b)| d > b) {
            best = Some((v, d));
        }
    }
    let (node, degree) = best.expect("pool is non-empty");
    Ok(SelectionScore {
        node,
        score: degree as f64,
        strategy: Strategy::Degree,
    })
}

/// Shannon entropy in nats with `0 · ln 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Unlabeled node whose predicted class distribution has maximum entropy.
pub fn entropy_select(state: &ALState, probs: ArrayView2<'_, f64>) -> Result<SelectionScore> {
    state.require_unlabeled()?;
    for (i, row) in probs.rows().into_iter().enumerate() {
        let total: f64 = row.sum();
        if (total - 1.0).abs() > 1e-6 || row.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p)) {
            return Err(Error::invalid_argument(format!("probability row {i} sums to {total}")));
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for v in state.unlabeled() {
        if v >= probs.nrows() {
            return Err(Error::invalid_argument(format!("no prediction row for node {v}")));
        }
        let h = entropy(&probs.row(v).to_vec());
        if best.is_none_or(|(_, b)| h > b) {
            best = Some((v, h));
        }
    }
    let (node, score) = best.expect("pool is non-empty");
    Ok(SelectionScore {
        node,
        score,
        strategy: Strategy::Entropy,
    })
}

/// Clusters the unlabeled pool on raw features with k-medoids
/// (`k = remaining`) and returns the medoids, largest cluster first.
pub fn featprop_select(g: &Graph, state: &ALState, remaining: usize, seed: u64) -> Result<Vec<usize>> {
    state.require_unlabeled()?;
    if remaining == 0 {
        return Err(Error::invalid_argument("remaining budget must be at least 1"));
    }
    let candidates: Vec<usize> = state.unlabeled().collect();
    if remaining > candidates.len() {
        return Err(Error::invalid_argument(format!(
            "cannot pick {remaining} medoids from {} unlabeled nodes",
            candidates.len()
        )));
    }
    let m = g.feature_dim();
    let mut points = Array2::zeros((candidates.len(), m));
    for (row, &v) in candidates.iter().enumerate() {
        points.row_mut(row).assign(&g.features().row(v));
    }
    let mut rng = substream(seed, Stream::FeatProp);
    let fit = kmedoids(points.view(), remaining, &mut rng)?;
    let mut sizes = vec![0usize; remaining];
    for &c in &fit.assignment {
        sizes[c] += 1;
    }
    let mut order: Vec<(usize, usize)> = fit
        .medoids
        .iter()
        .enumerate()
        .map(|(c, &row)| (candidates[row], sizes[c]))
        .collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(order
        .into_iter()
        .map(|(v, _)| v)
        .filter(|&v| state.is_unlabeled(v))
        .collect())
}
