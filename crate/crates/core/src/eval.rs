//! Linear probe, F1 metrics and homophily reporting.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ego_homophily, mean_graph_homophily, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub lr: f64,
    pub max_iter: usize,
    /// Training stops once the loss changes by less than this between iterations.
    pub tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            lr: 0.01,
            max_iter: 2000,
            tol: 1e-7,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid_argument(format!(
                "probe lr must be positive, got {}",
                self.lr
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid_argument("probe max_iter must be at least 1"));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::invalid_argument("probe tol must be non-negative"));
        }
        Ok(())
    }
}

/// Softmax regression on unit-normalized embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    /// `d × C`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    /// Mean cross-entropy before each gradient step.
    pub losses: Vec<f64>,
}

impl ProbeModel {
    pub fn class_count(&self) -> usize {
        self.bias.len()
    }

    pub fn iterations(&self) -> usize {
        self.losses.len()
    }
}

/// Rows scaled to unit Euclidean norm; zero rows stay zero.
pub fn unit_rows(h: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = h.to_owned();
    for mut row in out.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|x| (x - max).exp());
        let total = row.sum();
        row /= total;
    }
}

fn probabilities(x: &Array2<f64>, weights: &Array2<f64>, bias: &Array1<f64>) -> Array2<f64> {
    let mut logits = x.dot(weights) + bias;
    softmax_rows(&mut logits);
    logits
}

/// Fits the probe by full-batch gradient descent on the mean cross-entropy of
/// `labeled` (node, class) pairs, starting from zero weights.
pub fn train_probe(
    h: ArrayView2<'_, f64>,
    labeled: &[(usize, usize)],
    classes: usize,
    cfg: &ProbeConfig,
) -> Result<ProbeModel> {
    cfg.validate()?;
    if labeled.is_empty() {
        return Err(Error::invalid_state("probe needs at least one labeled node"));
    }
    if classes == 0 {
        return Err(Error::invalid_argument("probe needs at least one class"));
    }
    for &(v, y) in labeled {
        if v >= h.nrows() {
            return Err(Error::invalid_argument(format!(
                "labeled node {v} has no embedding row"
            )));
        }
        if y >= classes {
            return Err(Error::invalid_argument(format!("label {y} outside [0, {classes})")));
        }
    }
    let d = h.ncols();
    let x = unit_rows(
        h.select(Axis(0), &labeled.iter().map(|&(v, _)| v).collect::<Vec<_>>())
            .view(),
    );
    let mut target = Array2::zeros((labeled.len(), classes));
    for (i, &(_, y)) in labeled.iter().enumerate() {
        target[[i, y]] = 1.0;
    }
    let scale = 1.0 / labeled.len() as f64;
    let mut weights = Array2::zeros((d, classes));
    let mut bias = Array1::zeros(classes);
    let mut losses = Vec::new();
    for _ in 0..cfg.max_iter {
        let p = probabilities(&x, &weights, &bias);
        let loss = -scale
            * labeled
                .iter()
                .enumerate()
                .map(|(i, &(_, y))| p[[i, y]].max(f64::MIN_POSITIVE).ln())
                .sum::<f64>();
        if !loss.is_finite() {
            return Err(Error::numeric(format!("probe loss became {loss}")));
        }
        let converged = losses.last().is_some_and(|&prev: &f64| (prev - loss).abs() < cfg.tol);
        losses.push(loss);
        if converged {
            break;
        }
        let residual = (p - &target) * scale;
        weights.scaled_add(-cfg.lr, &x.t().dot(&residual));
        bias.scaled_add(-cfg.lr, &residual.sum_axis(Axis(0)));
    }
    Ok(ProbeModel { weights, bias, losses })
}

/// Class probabilities for every row of `h`.
pub fn predict_proba(model: &ProbeModel, h: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if h.ncols() != model.weights.nrows() {
        return Err(Error::invalid_argument(format!(
            "embeddings have {} columns, probe expects {}",
            h.ncols(),
            model.weights.nrows()
        )));
    }
    Ok(probabilities(&unit_rows(h), &model.weights, &model.bias))
}

/// Most probable class per row, smallest class on ties.
pub fn predict(model: &ProbeModel, h: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    let p = predict_proba(model, h)?;
    Ok(p.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &x) in row.iter().enumerate() {
                if x > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

fn check_labels(pred: &[usize], truth: &[usize], classes: usize) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::invalid_argument(format!(
            "{} predictions for {} targets",
            pred.len(),
            truth.len()
        )));
    }
    if let Some(&y) = pred.iter().chain(truth).find(|&&y| y >= classes) {
        return Err(Error::invalid_argument(format!("label {y} outside [0, {classes})")));
    }
    Ok(())
}

/// Per-class precision, recall and F1. Classes never predicted and never
/// present score 0.
pub fn class_scores(pred: &[usize], truth: &[usize], classes: usize) -> Result<Vec<ClassScore>> {
    check_labels(pred, truth, classes)?;
    let mut tp = vec![0usize; classes];
    let mut predicted = vec![0usize; classes];
    let mut actual = vec![0usize; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        predicted[p] += 1;
        actual[t] += 1;
        if p == t {
            tp[p] += 1;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok((0..classes)
        .map(|c| {
            let denom = predicted[c] + actual[c];
            ClassScore {
                precision: ratio(tp[c], predicted[c]),
                recall: ratio(tp[c], actual[c]),
                f1: ratio(2 * tp[c], denom),
                support: actual[c],
            }
        })
        .collect())
}

/// Micro- and macro-averaged F1.
pub fn f1_scores(pred: &[usize], truth: &[usize], classes: usize) -> Result<(f64, f64)> {
    let per_class = class_scores(pred, truth, classes)?;
    let correct = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    let micro = if pred.is_empty() {
        0.0
    } else {
        correct as f64 / pred.len() as f64
    };
    let macro_f1 = per_class.iter().map(|s| s.f1).sum::<f64>() / classes as f64;
    Ok((micro, macro_f1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomophilyReport {
    pub selected_mean: f64,
    pub graph_mean: f64,
    /// Relative change of the selected mean over the graph mean, in percent.
    pub improvement_pct: f64,
}

/// Mean ego homophily of `selected` against the graph-wide mean. Fails on
/// isolated selected nodes.
pub fn homophily_report(g: &Graph, selected: &[usize]) -> Result<HomophilyReport> {
    if selected.is_empty() {
        return Err(Error::invalid_argument("no selected nodes"));
    }
    let mut sum = 0.0;
    for &v in selected {
        sum += ego_homophily(g, v)?;
    }
    let selected_mean = sum / selected.len() as f64;
    let graph_mean = mean_graph_homophily(g)?;
    Ok(HomophilyReport {
        selected_mean,
        graph_mean,
        improvement_pct: 100.0 * (selected_mean - graph_mean) / graph_mean,
    })
}

/// Mean ego homophily over the non-isolated nodes of `nodes`, or `None` if
/// there are none.
pub fn mean_ego_homophily(g: &Graph, nodes: &[usize]) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for &v in nodes {
        if v < g.node_count() && g.degree(v) == 0 {
            continue;
        }
        sum += ego_homophily(g, v)?;
        count += 1;
    }
    Ok((count > 0).then(|| sum / count as f64))
}

/// Evaluation of one (seed, round).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub round: usize,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassScore>,
    pub selected_homophily: Option<f64>,
    pub graph_homophily: Option<f64>,
}

/// Trains a probe on `labeled`, scores it on `test` against the graph's labels.
pub fn evaluate_probe(
    g: &Graph,
    h: ArrayView2<'_, f64>,
    labeled: &[(usize, usize)],
    test: &[usize],
    cfg: &ProbeConfig,
) -> Result<(f64, f64, Vec<ClassScore>)> {
    let labels = g.labels().ok_or_else(|| Error::invalid_state("graph has no labels"))?;
    let model = train_probe(h, labeled, g.class_count(), cfg)?;
    let pred = predict(&model, h.select(Axis(0), test).view())?;
    let truth: Vec<usize> = test.iter().map(|&v| labels[v]).collect();
    let (micro, macro_f1) = f1_scores(&pred, &truth, g.class_count())?;
    Ok((micro, macro_f1, class_scores(&pred, &truth, g.class_count())?))
}
