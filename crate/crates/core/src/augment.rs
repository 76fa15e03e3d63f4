//! Stochastic graph views: edge removal and feature-dimension masking.

use ndarray::{Array2, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Csr, Graph, NormalizedAdjacency};
use crate::rng::split_seed;

const EDGE_LANE: u64 = 10;
const MASK_LANE: u64 = 11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Probability that an undirected edge is removed.
    pub p_edge: f64,
    /// Probability that a feature dimension is zeroed.
    pub p_feature: f64,
    /// Draw an independent mask per node instead of one shared mask.
    pub per_node_mask: bool,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            p_edge: 0.2,
            p_feature: 0.2,
            per_node_mask: false,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        AugmentConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p_edge", self.p_edge)?;
        check_probability("p_feature", self.p_feature)
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid_argument(format!("{name} must lie in [0, 1], got {p}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMask {
    /// One keep-flag per feature dimension, applied to every row.
    Shared(Vec<bool>),
    PerNode(Array2<bool>),
}

impl FeatureMask {
    pub fn kept(&self, node: usize, dim: usize) -> bool {
        match self {
            FeatureMask::Shared(m) => m[dim],
            FeatureMask::PerNode(m) => m[[node, dim]],
        }
    }
}

/// An augmented copy of a graph. The node set is never changed.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphView {
    pub edges: Csr,
    pub features: Array2<f64>,
    pub mask: FeatureMask,
    pub seed: u64,
}

impl GraphView {
    pub fn normalized(&self) -> NormalizedAdjacency {
        NormalizedAdjacency::from_structure(&self.edges)
    }
}

/// Keeps each undirected edge with probability `1 - p_edge`, one draw per edge
/// so both arcs share a fate.
pub fn drop_edges(g: &Graph, p_edge: f64, seed: u64) -> Result<Csr> {
    check_probability("p_edge", p_edge)?;
    let mut rng = split_seed(seed, EDGE_LANE);
    let keep = 1.0 - p_edge;
    let kept: Vec<(usize, usize)> = g
        .adjacency()
        .undirected_edges()
        .filter(|_| rng.random_bool(keep))
        .collect();
    Csr::from_undirected(g.node_count(), &kept)
}

/// Zeroes whole feature columns. One keep-vector of length `m` is drawn and
/// shared by all rows.
pub fn mask_features(x: &Array2<f64>, p_feature: f64, seed: u64) -> Result<(Array2<f64>, Vec<bool>)> {
    check_probability("p_feature", p_feature)?;
    let mut rng = split_seed(seed, MASK_LANE);
    let keep = 1.0 - p_feature;
    let mask: Vec<bool> = (0..x.ncols()).map(|_| rng.random_bool(keep)).collect();
    let mut out = x.clone();
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        if !mask[j] {
            col.fill(0.0);
        }
    }
    Ok((out, mask))
}

fn mask_features_per_node(x: &Array2<f64>, p_feature: f64, seed: u64) -> Result<(Array2<f64>, Array2<bool>)> {
    check_probability("p_feature", p_feature)?;
    let mut rng = split_seed(seed, MASK_LANE);
    let keep = 1.0 - p_feature;
    let mask = Array2::from_shape_simple_fn(x.raw_dim(), || rng.random_bool(keep));
    let mut out = x.clone();
    Zip::from(&mut out).and(&mask).for_each(|v, &k| {
        if !k {
            *v = 0.0;
        }
    });
    Ok((out, mask))
}

pub fn make_view(g: &Graph, cfg: &AugmentConfig) -> Result<GraphView> {
    cfg.validate()?;
    let edges = drop_edges(g, cfg.p_edge, cfg.seed)?;
    let (features, mask) = if cfg.per_node_mask {
        let (f, m) = mask_features_per_node(g.features(), cfg.p_feature, cfg.seed)?;
        (f, FeatureMask::PerNode(m))
    } else {
        let (f, m) = mask_features(g.features(), cfg.p_feature, cfg.seed)?;
        (f, FeatureMask::Shared(m))
    };
    Ok(GraphView {
        edges,
        features,
        mask,
        seed: cfg.seed,
    })
}
