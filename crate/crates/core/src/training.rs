//! Joint loss and gradients over two augmented views, and the epoch loop.

use ndarray::Array2;

use crate::augment::GraphView;
use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, Graph, NormalizedAdjacency};
use crate::model::{
    adam_step, encode_propagated, gcn_forward, project_rows, AdamState, Embeddings, Gradients, ModelParams,
};
use crate::objective::{objective_with_gradient, total_objective, ObjectiveConfig, PositiveSets};

/// A view with its normalized adjacency and propagated input `Â · X̃`, both
/// fixed while the view is trained on.
#[derive(Debug, Clone)]
pub struct PreparedView {
    pub adjacency: NormalizedAdjacency,
    pub propagated: Array2<f64>,
}

impl PreparedView {
    pub fn new(view: &GraphView) -> Self {
        let adjacency = view.normalized();
        let propagated = adjacency.matmul(view.features.view());
        PreparedView { adjacency, propagated }
    }

    /// The unaugmented graph as a view.
    pub fn identity(g: &Graph) -> Self {
        let adjacency = normalize_adjacency(g);
        let propagated = adjacency.matmul(g.features().view());
        PreparedView { adjacency, propagated }
    }
}

/// Projected embeddings of a view, without caches.
pub fn project_view(view: &PreparedView, params: &ModelParams) -> Result<Array2<f64>> {
    let enc = encode_propagated(&view.adjacency, view.propagated.clone(), params)?;
    Ok(project_rows(enc.output, params).output)
}

/// The unified objective evaluated through the direct per-anchor route.
pub fn objective_value(
    views: [&PreparedView; 2],
    params: &ModelParams,
    positives: &PositiveSets,
    cfg: &ObjectiveConfig,
) -> Result<f64> {
    let z1 = project_view(views[0], params)?;
    let z2 = project_view(views[1], params)?;
    total_objective(z1.view(), z2.view(), positives, cfg)
}

/// Objective value and exact gradients with respect to every parameter.
pub fn loss_and_gradients(
    views: [&PreparedView; 2],
    params: &ModelParams,
    positives: &PositiveSets,
    cfg: &ObjectiveConfig,
) -> Result<(f64, Gradients)> {
    let enc1 = encode_propagated(&views[0].adjacency, views[0].propagated.clone(), params)?;
    let enc2 = encode_propagated(&views[1].adjacency, views[1].propagated.clone(), params)?;
    let proj1 = project_rows(enc1.output.clone(), params);
    let proj2 = project_rows(enc2.output.clone(), params);
    let objective = objective_with_gradient(&proj1.output, &proj2.output, positives, cfg)?;

    let mut grads = params.zeros_like();
    let d_h1 = proj1.backward(params, &objective.d_first, &mut grads);
    enc1.backward(&views[0].adjacency, params, &d_h1, &mut grads);
    let d_h2 = proj2.backward(params, &objective.d_second, &mut grads);
    enc2.backward(&views[1].adjacency, params, &d_h2, &mut grads);
    if let Some((name, k, value)) = grads.first_non_finite() {
        return Err(Error::numeric(format!("gradient of {name}[{k}] is {value}")));
    }
    Ok((objective.value, grads))
}

/// Runs `epochs` Adam steps on a fixed pair of views and returns the loss of the last step.
pub fn train_epochs(
    views: [&PreparedView; 2],
    params: &mut ModelParams,
    adam: &mut AdamState,
    positives: &PositiveSets,
    cfg: &ObjectiveConfig,
    epochs: usize,
) -> Result<Option<f64>> {
    let mut last = None;
    for _ in 0..epochs {
        let (loss, grads) = loss_and_gradients(views, params, positives, cfg)?;
        adam_step(params, &grads, adam);
        params.check_finite()?;
        last = Some(loss);
    }
    Ok(last)
}

/// Encoder output on the unaugmented graph.
pub fn embed(g: &Graph, params: &ModelParams) -> Result<Embeddings> {
    gcn_forward(&normalize_adjacency(g), g.features().view(), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{make_view, AugmentConfig};
    use crate::dataset::{generate_sbm, SbmSpec};
    use crate::model::{AdamConfig, ModelDims};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (Graph, ModelParams, PreparedView, PreparedView) {
        let spec = SbmSpec {
            blocks: vec![5, 5],
            p_in: 0.6,
            p_out: 0.1,
            feat_dim: 4,
            feat_noise: 0.3,
        };
        let g = generate_sbm(&spec, seed).unwrap();
        let params = ModelParams::init(ModelDims::new(4, 6, 3), &mut ChaCha8Rng::seed_from_u64(seed));
        let cfg = AugmentConfig::default();
        let v1 = PreparedView::new(&make_view(&g, &cfg.with_seed(seed * 2)).unwrap());
        let v2 = PreparedView::new(&make_view(&g, &cfg.with_seed(seed * 2 + 1)).unwrap());
        (g, params, v1, v2)
    }

    #[test]
    fn both_routes_agree_on_the_value() {
        let (_, params, v1, v2) = setup(3);
        let pos = PositiveSets::from_labeled(10, &[(0, 0), (1, 0), (7, 1)], None).unwrap();
        let cfg = ObjectiveConfig::default();
        let direct = objective_value([&v1, &v2], &params, &pos, &cfg).unwrap();
        let (fast, _) = loss_and_gradients([&v1, &v2], &params, &pos, &cfg).unwrap();
        assert!((direct - fast).abs() < 1e-12);
    }

    #[test]
    fn masked_feature_rows_of_w1_get_zero_gradient() {
        let (g, params, _, _) = setup(5);
        let cfg = AugmentConfig {
            p_edge: 0.2,
            p_feature: 0.5,
            per_node_mask: false,
            seed: 0,
        };
        // find a seed whose shared mask hides some column in both views
        let mut found = false;
        for s in 0..64u64 {
            let a = make_view(&g, &cfg.with_seed(s)).unwrap();
            let b = make_view(&g, &cfg.with_seed(s + 1000)).unwrap();
            let hidden: Vec<usize> = (0..4).filter(|&j| !a.mask.kept(0, j) && !b.mask.kept(0, j)).collect();
            if hidden.is_empty() {
                continue;
            }
            let (pa, pb) = (PreparedView::new(&a), PreparedView::new(&b));
            let (_, grads) = loss_and_gradients(
                [&pa, &pb],
                &params,
                &PositiveSets::new(10, None),
                &ObjectiveConfig::default(),
            )
            .unwrap();
            for j in hidden {
                assert!(grads.w1.row(j).iter().all(|&x| x == 0.0));
            }
            found = true;
            break;
        }
        assert!(found);
    }

    #[test]
    fn training_reduces_the_objective() {
        let (_, mut params, v1, v2) = setup(6);
        let pos = PositiveSets::from_labeled(10, &[(0, 0), (2, 0), (8, 1), (9, 1)], None).unwrap();
        let cfg = ObjectiveConfig::default();
        let before = objective_value([&v1, &v2], &params, &pos, &cfg).unwrap();
        let mut adam = AdamState::new(
            &params,
            AdamConfig {
                lr: 0.01,
                ..AdamConfig::default()
            },
        );
        train_epochs([&v1, &v2], &mut params, &mut adam, &pos, &cfg, 50).unwrap();
        let after = objective_value([&v1, &v2], &params, &pos, &cfg).unwrap();
        assert!(after < before, "{after} >= {before}");
        assert_eq!(adam.step, 50);
    }
}
