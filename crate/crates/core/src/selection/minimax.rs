use ndarray::ArrayView2;

use super::{random_select, ALState, SelectionScore, Strategy};
use crate::error::{Error, Result};
use crate::graph::{k_hop_unchecked, Graph};

fn squared_distance(h: ArrayView2<'_, f64>, a: usize, b: usize) -> f64 {
    h.row(a)
        .iter()
        .zip(h.row(b).iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// For every unlabeled node (ascending), the largest squared embedding
/// distance to any node within `k` hops. `None` marks nodes with no neighbors.
pub fn minimax_scores(
    g: &Graph,
    h: ArrayView2<'_, f64>,
    state: &ALState,
    k: usize,
) -> Result<Vec<(usize, Option<f64>)>> {
    if h.nrows() != g.node_count() {
        return Err(Error::invalid_argument(format!(
            "{} embedding rows for {} nodes",
            h.nrows(),
            g.node_count()
        )));
    }
    if k == 0 {
        return Err(Error::invalid_argument("hop count must be at least 1"));
    }
    Ok(state
        .unlabeled()
        .map(|v| {
            let worst = k_hop_unchecked(g.adjacency(), v, k)
                .into_iter()
                .map(|u| squared_distance(h, v, u))
                .reduce(f64::max);
            (v, worst)
        })
        .collect())
}

/// The unlabeled node whose farthest `k`-hop neighbor is closest in
/// embedding space. Ties go to the smaller id. Isolated nodes are skipped;
/// if every candidate is isolated, a node is drawn uniformly with
/// `fallback_seed` and reported with an infinite score.
pub fn minimax_select(
    g: &Graph,
    h: ArrayView2<'_, f64>,
    state: &ALState,
    k: usize,
    fallback_seed: u64,
) -> Result<SelectionScore> {
    state.require_unlabeled()?;
    let mut best: Option<(usize, f64)> = None;
    for (v, score) in minimax_scores(g, h, state, k)? {
        let Some(score) = score else { continue };
        if score.is_nan() {
            return Err(Error::numeric(format!("distance score of node {v} is NaN")));
        }
        if best.is_none_or(|(_, b)| score < b) {
            best = Some((v, score));
        }
    }
    match best {
        Some((node, score)) => Ok(SelectionScore {
            node,
            score,
            strategy: Strategy::Minimax,
        }),
        None => {
            let node = random_select(state, fallback_seed)?.node;
            Ok(SelectionScore {
                node,
                score: f64::INFINITY,
                strategy: Strategy::Minimax,
            })
        }
    }
}
