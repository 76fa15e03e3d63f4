//! Contrastive objectives over two views of projected embeddings.
//!
//! Two routes compute the same unified objective:
//!
//! * [`pairwise_loss`], [`supervised_pairwise_loss`] and [`total_objective`]
//!   evaluate each anchor term directly from [`critic`] calls.
//! * [`objective_with_gradient`] evaluates all anchors at once from
//!   similarity matrices and also returns the gradient with respect to both
//!   views' projected embeddings. This is the route used for training.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Added to every norm before dividing, so all-zero rows have cosine 0.
pub const NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PositiveViews {
    /// Positives are taken from the anchor's own view.
    Anchor,
    /// Positives from both views (each labeled peer contributes two terms).
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub tau: f64,
    pub lambda: f64,
    pub positive_views: PositiveViews,
    /// Drop supervised positives from the negative sum of their anchor.
    pub exclude_positives_from_negatives: bool,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            tau: 0.5,
            lambda: 1.0,
            positive_views: PositiveViews::Anchor,
            exclude_positives_from_negatives: false,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid_argument(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid_argument(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Per-node sets of labeled peers sharing the node's label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PositiveSets {
    sets: Vec<Vec<usize>>,
    labeled: Vec<(usize, usize)>,
    cap: Option<usize>,
}

impl PositiveSets {
    /// Empty sets for `n` nodes. With a `cap`, each set keeps only its first
    /// `cap` peers in labeling order.
    pub fn new(n: usize, cap: Option<usize>) -> Self {
        PositiveSets {
            sets: vec![Vec::new(); n],
            labeled: Vec::new(),
            cap,
        }
    }

    pub fn from_labeled(n: usize, labeled: &[(usize, usize)], cap: Option<usize>) -> Result<Self> {
        let mut sets = PositiveSets::new(n, cap);
        for &(node, label) in labeled {
            sets.insert(node, label)?;
        }
        Ok(sets)
    }

    /// Registers a newly labeled node and links it with every labeled peer of the same class.
    pub fn insert(&mut self, node: usize, label: usize) -> Result<()> {
        if node >= self.sets.len() {
            return Err(Error::invalid_argument(format!(
                "node {node} outside 0..{}",
                self.sets.len()
            )));
        }
        if self.labeled.iter().any(|&(v, _)| v == node) {
            return Err(Error::invalid_state(format!("node {node} is already labeled")));
        }
        let cap = self.cap.unwrap_or(usize::MAX);
        for &(peer, peer_label) in &self.labeled {
            if peer_label != label {
                continue;
            }
            if self.sets[node].len() < cap {
                self.sets[node].push(peer);
            }
            if self.sets[peer].len() < cap {
                self.sets[peer].push(node);
            }
        }
        self.labeled.push((node, label));
        Ok(())
    }

    pub fn get(&self, node: usize) -> &[usize] {
        &self.sets[node]
    }

    pub fn node_count(&self) -> usize {
        self.sets.len()
    }

    pub fn labeled(&self) -> &[(usize, usize)] {
        &self.labeled
    }

    pub fn is_empty(&self) -> bool {
        self.sets.iter().all(Vec::is_empty)
    }
}

fn norm(u: ArrayView1<'_, f64>) -> f64 {
    u.dot(&u).sqrt()
}

/// Cosine similarity with the additive norm floor.
pub fn cosine(u: ArrayView1<'_, f64>, v: ArrayView1<'_, f64>) -> f64 {
    u.dot(&v) / ((norm(u) + NORM_FLOOR) * (norm(v) + NORM_FLOOR))
}

/// `exp(cos(u, v) / tau)`.
pub fn critic(u: ArrayView1<'_, f64>, v: ArrayView1<'_, f64>, tau: f64) -> f64 {
    (cosine(u, v) / tau).exp()
}

fn check_views(anchor: ArrayView2<'_, f64>, other: ArrayView2<'_, f64>) -> Result<usize> {
    if anchor.dim() != other.dim() {
        return Err(Error::invalid_argument(format!(
            "view shapes differ: {:?} vs {:?}",
            anchor.dim(),
            other.dim()
        )));
    }
    let n = anchor.nrows();
    if n < 2 {
        return Err(Error::invalid_argument("contrastive loss needs at least two nodes"));
    }
    Ok(n)
}

/// NT-Xent loss of anchor row `i` of `anchor` against its positive row `i`
/// of `other`, with every other node of both views as negatives.
pub fn pairwise_loss(
    i: usize,
    anchor: ArrayView2<'_, f64>,
    other: ArrayView2<'_, f64>,
    cfg: &ObjectiveConfig,
) -> Result<f64> {
    supervised_pairwise_loss(i, anchor, other, &[], cfg)
}

/// NT-Xent loss with labeled peers `positives` added to the numerator with
/// weight `lambda`. Unless configured otherwise, the peers also stay in the
/// negative sum.
pub fn supervised_pairwise_loss(
    i: usize,
    anchor: ArrayView2<'_, f64>,
    other: ArrayView2<'_, f64>,
    positives: &[usize],
    cfg: &ObjectiveConfig,
) -> Result<f64> {
    let n = check_views(anchor, other)?;
    if i >= n {
        return Err(Error::invalid_argument(format!("anchor {i} outside 0..{n}")));
    }
    let positives = effective_positives(positives, cfg);
    let tau = cfg.tau;
    let a = anchor.row(i);
    let mut numerator = critic(a, other.row(i), tau);
    let mut supervised = 0.0;
    for &p in positives {
        supervised += critic(a, anchor.row(p), tau);
        if cfg.positive_views == PositiveViews::Both {
            supervised += critic(a, other.row(p), tau);
        }
    }
    numerator += cfg.lambda * supervised;
    let mut negatives = 0.0;
    for j in (0..n).filter(|&j| j != i) {
        if cfg.exclude_positives_from_negatives && positives.contains(&j) {
            continue;
        }
        negatives += critic(a, anchor.row(j), tau) + critic(a, other.row(j), tau);
    }
    Ok(-(numerator / (numerator + negatives)).ln())
}

/// With `lambda = 0` the supervised term is switched off entirely.
fn effective_positives<'a>(positives: &'a [usize], cfg: &ObjectiveConfig) -> &'a [usize] {
    if cfg.lambda > 0.0 {
        positives
    } else {
        &[]
    }
}

/// The unsupervised two-view objective: mean of both anchor orders over all nodes.
pub fn contrastive_objective(
    first: ArrayView2<'_, f64>,
    second: ArrayView2<'_, f64>,
    cfg: &ObjectiveConfig,
) -> Result<f64> {
    let n = check_views(first, second)?;
    let mut total = 0.0;
    for i in 0..n {
        total += pairwise_loss(i, first, second, cfg)? + pairwise_loss(i, second, first, cfg)?;
    }
    Ok(total / (2 * n) as f64)
}

/// The unified objective: both anchor orders per node, each node weighted by
/// `1 / (|P(i)| + 1)`, averaged over `2n`.
pub fn total_objective(
    first: ArrayView2<'_, f64>,
    second: ArrayView2<'_, f64>,
    positives: &PositiveSets,
    cfg: &ObjectiveConfig,
) -> Result<f64> {
    let n = check_views(first, second)?;
    check_positive_sets(positives, n)?;
    let mut total = 0.0;
    for i in 0..n {
        let p = positives.get(i);
        let weight = 1.0 / (effective_positives(p, cfg).len() + 1) as f64;
        total += weight
            * (supervised_pairwise_loss(i, first, second, p, cfg)?
                + supervised_pairwise_loss(i, second, first, p, cfg)?);
    }
    Ok(total / (2 * n) as f64)
}

fn check_positive_sets(positives: &PositiveSets, n: usize) -> Result<()> {
    if positives.node_count() != n {
        return Err(Error::invalid_argument(format!(
            "positive sets cover {} nodes, embeddings {n}",
            positives.node_count()
        )));
    }
    Ok(())
}

/// Objective value and its gradient with respect to both views.
#[derive(Debug, Clone)]
pub struct ObjectiveGradient {
    pub value: f64,
    pub d_first: Array2<f64>,
    pub d_second: Array2<f64>,
}

fn unit_rows(z: &Array2<f64>) -> (Array2<f64>, Vec<f64>) {
    let norms: Vec<f64> = z.rows().into_iter().map(norm).collect();
    let mut unit = z.clone();
    for (mut row, &r) in unit.rows_mut().into_iter().zip(&norms) {
        row.mapv_inplace(|x| x / (r + NORM_FLOOR));
    }
    (unit, norms)
}

/// Pulls a gradient on `z / (|z| + floor)` back to `z`.
fn unit_rows_backward(z: &Array2<f64>, norms: &[f64], d_unit: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(z.raw_dim());
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let r = norms[i];
        let scale = r + NORM_FLOOR;
        let zi = z.row(i);
        let di = d_unit.row(i);
        row.assign(&(&di / scale));
        if r > 0.0 {
            let radial = zi.dot(&di) / (r * scale * scale);
            row.scaled_add(-radial, &zi);
        }
    }
    out
}

/// Adds one anchor order's loss terms. `anchor` and `other` are unit rows;
/// gradients are accumulated into `d_anchor` / `d_other` (w.r.t. unit rows).
fn accumulate_order(
    anchor: &Array2<f64>,
    other: &Array2<f64>,
    positives: &PositiveSets,
    cfg: &ObjectiveConfig,
    d_anchor: &mut Array2<f64>,
    d_other: &mut Array2<f64>,
) -> f64 {
    let n = anchor.nrows();
    let tau = cfg.tau;
    let lambda = cfg.lambda;
    let both = cfg.positive_views == PositiveViews::Both;
    let same = anchor.dot(&anchor.t()).mapv(|s| (s / tau).exp());
    let cross = anchor.dot(&other.t()).mapv(|s| (s / tau).exp());
    let mut g_same = Array2::<f64>::zeros((n, n));
    let mut g_cross = Array2::<f64>::zeros((n, n));
    let mut in_positives = vec![false; n];
    let mut loss = 0.0;

    for i in 0..n {
        let pos = effective_positives(positives.get(i), cfg);
        let weight = 1.0 / ((2 * n) as f64 * (pos.len() + 1) as f64);
        let mut supervised = 0.0;
        for &p in pos {
            in_positives[p] = true;
            supervised += same[[i, p]];
            if both {
                supervised += cross[[i, p]];
            }
        }
        let numerator = cross[[i, i]] + lambda * supervised;
        let excluded = |j: usize| cfg.exclude_positives_from_negatives && in_positives[j];
        let mut negatives = 0.0;
        for j in 0..n {
            if j != i && !excluded(j) {
                negatives += same[[i, j]] + cross[[i, j]];
            }
        }
        let denominator = numerator + negatives;
        loss += weight * (denominator.ln() - numerator.ln());

        // d/ds of ln(den) - ln(num) for a term exp(s) with coefficient c:
        // c·exp(s)·(1/den - 1/num) inside the numerator, exp(s)/den in the negatives.
        let in_numerator = weight * (1.0 / denominator - 1.0 / numerator);
        let in_negatives = weight / denominator;
        g_cross[[i, i]] += in_numerator * cross[[i, i]];
        for &p in pos {
            g_same[[i, p]] += lambda * in_numerator * same[[i, p]];
            if both {
                g_cross[[i, p]] += lambda * in_numerator * cross[[i, p]];
            }
        }
        for j in 0..n {
            if j != i && !excluded(j) {
                g_same[[i, j]] += in_negatives * same[[i, j]];
                g_cross[[i, j]] += in_negatives * cross[[i, j]];
            }
        }
        for &p in pos {
            in_positives[p] = false;
        }
    }

    // s_same[i][j] = a_i·a_j / tau, s_cross[i][j] = a_i·o_j / tau
    let g_same_sym = &g_same + &g_same.t();
    *d_anchor += &(g_same_sym.dot(anchor) / tau);
    *d_anchor += &(g_cross.dot(other) / tau);
    *d_other += &(g_cross.t().dot(anchor) / tau);
    loss
}

/// Value of [`total_objective`] and its gradient, computed from similarity matrices.
pub fn objective_with_gradient(
    first: &Array2<f64>,
    second: &Array2<f64>,
    positives: &PositiveSets,
    cfg: &ObjectiveConfig,
) -> Result<ObjectiveGradient> {
    let n = check_views(first.view(), second.view())?;
    check_positive_sets(positives, n)?;
    let (u1, norms1) = unit_rows(first);
    let (u2, norms2) = unit_rows(second);
    let mut d_u1 = Array2::zeros(u1.raw_dim());
    let mut d_u2 = Array2::zeros(u2.raw_dim());
    let mut value = accumulate_order(&u1, &u2, positives, cfg, &mut d_u1, &mut d_u2);
    value += accumulate_order(&u2, &u1, positives, cfg, &mut d_u2, &mut d_u1);
    if !value.is_finite() {
        return Err(Error::numeric(format!("objective evaluated to {value}")));
    }
    Ok(ObjectiveGradient {
        value,
        d_first: unit_rows_backward(first, &norms1, &d_u1),
        d_second: unit_rows_backward(second, &norms2, &d_u2),
    })
}
