use std::collections::VecDeque;
use std::path::PathBuf;

use rand::RngCore;
use rayon::prelude::*;

use super::config::{DataSource, ExperimentConfig};
use super::report::{Phase, Record};
use crate::augment::make_view;
use crate::dataset::{generate_sbm, load_bundle, make_split, Split};
use crate::error::{Error, Result};
use crate::eval::{evaluate_probe, mean_ego_homophily, predict_proba, train_probe};
use crate::graph::{mean_graph_homophily, Graph};
use crate::model::{write_checkpoint, AdamState, ModelDims, ModelParams};
use crate::rng::{substream, Stream};
use crate::selection::{
    degree_select, entropy_select, featprop_select, minimax_select, random_select, ALState, SelectionScore, Strategy,
};
use crate::training::{embed, train_epochs, PreparedView};

/// Loads or generates the configured graph for `seed`.
pub fn load_graph(cfg: &ExperimentConfig, seed: u64) -> Result<Graph> {
    let g = match &cfg.data {
        Some(DataSource::Bundle(dir)) => load_bundle(dir)?.1,
        Some(DataSource::Sbm { spec, seed: fixed }) => generate_sbm(spec, fixed.unwrap_or(seed))?,
        None => return Err(Error::Config("no data source configured".into())),
    };
    if g.labels().is_none() {
        return Err(Error::invalid_state("graph has no labels to query"));
    }
    Ok(if cfg.row_normalize {
        g.with_row_normalized_features()
    } else {
        g
    })
}

fn prepared_pair(g: &Graph, cfg: &ExperimentConfig, seed: u64, round: u32) -> Result<[PreparedView; 2]> {
    let view = |v: u8| -> Result<PreparedView> {
        let s = substream(seed, Stream::View { round, view: v }).next_u64();
        Ok(PreparedView::new(&make_view(g, &cfg.augment.with_seed(s))?))
    };
    Ok([view(0)?, view(1)?])
}

struct Trainer<'a> {
    g: &'a Graph,
    cfg: &'a ExperimentConfig,
    seed: u64,
    params: ModelParams,
    adam: AdamState,
    epochs: usize,
}

impl Trainer<'_> {
    /// Trains up to `epochs` more epochs on the views of `round`, respecting
    /// the total cap. Returns the last loss if any epoch ran.
    fn train(&mut self, round: u32, epochs: usize, state: &ALState) -> Result<Option<f64>> {
        let epochs = epochs.min(self.cfg.max_epochs - self.epochs);
        if epochs == 0 {
            return Ok(None);
        }
        let [a, b] = prepared_pair(self.g, self.cfg, self.seed, round)?;
        let loss = train_epochs(
            [&a, &b],
            &mut self.params,
            &mut self.adam,
            state.positives(),
            &self.cfg.objective,
            epochs,
        )?;
        self.epochs += epochs;
        Ok(loss)
    }
}

fn select(
    g: &Graph,
    cfg: &ExperimentConfig,
    seed: u64,
    state: &ALState,
    h: ndarray::ArrayView2<'_, f64>,
    featprop_queue: &mut VecDeque<usize>,
) -> Result<SelectionScore> {
    match cfg.strategy {
        Strategy::Minimax => minimax_select(g, h, state, cfg.hops, seed),
        Strategy::Random => random_select(state, seed),
        Strategy::Degree => degree_select(g, state),
        Strategy::Entropy => {
            if state.labeled().is_empty() {
                let pick = random_select(state, seed)?;
                return Ok(SelectionScore {
                    strategy: Strategy::Entropy,
                    ..pick
                });
            }
            let probe = train_probe(h, state.labeled(), g.class_count(), &cfg.probe)?;
            entropy_select(state, predict_proba(&probe, h)?.view())
        }
        Strategy::FeatProp => {
            if cfg.featprop_recluster || featprop_queue.is_empty() {
                *featprop_queue = featprop_select(g, state, state.remaining(), seed)?.into();
            }
            let node = featprop_queue
                .pop_front()
                .ok_or_else(|| Error::invalid_state("feature-propagation queue is empty"))?;
            Ok(SelectionScore {
                node,
                score: 0.0,
                strategy: Strategy::FeatProp,
            })
        }
    }
}

/// Runs one seed of the active-learning loop and returns its records in order.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Record>> {
    cfg.validate()?;
    let g = load_graph(cfg, seed)?;
    let labels = g.labels().expect("checked in load_graph").to_vec();
    let split: Split = make_split(&g, seed);
    let budget = cfg.budget.resolve(g.class_count());
    if budget > split.pool.len() {
        return Err(Error::Config(format!(
            "budget {budget} exceeds the pool of {} nodes",
            split.pool.len()
        )));
    }
    let mut state = ALState::new(g.node_count(), &split.pool, budget, cfg.max_positives)?;
    let graph_homophily = mean_graph_homophily(&g).ok();

    let dims = ModelDims::new(g.feature_dim(), cfg.hidden, cfg.output);
    let params = ModelParams::init(dims, &mut substream(seed, Stream::Init));
    let adam = AdamState::new(&params, cfg.adam);
    let mut trainer = Trainer {
        g: &g,
        cfg,
        seed,
        params,
        adam,
        epochs: 0,
    };

    let abort = |trainer: &Trainer, round: usize, e: Error| -> Error {
        let Error::Numeric(msg) = e else { return e };
        let saved = cfg.out.as_ref().and_then(|dir| {
            let path: PathBuf = dir.join(format!("checkpoint-seed{seed}-round{round}.bin"));
            std::fs::create_dir_all(dir).ok()?;
            write_checkpoint(&trainer.params, &path).ok().map(|_| path)
        });
        match saved {
            Some(path) => Error::numeric(format!(
                "seed {seed} round {round}: {msg} (checkpoint {})",
                path.display()
            )),
            None => Error::numeric(format!("seed {seed} round {round}: {msg}")),
        }
    };

    let mut loss = trainer
        .train(0, cfg.warmup_epochs, &state)
        .map_err(|e| abort(&trainer, 0, e))?;
    let mut records = Vec::with_capacity(budget + 1);
    let mut featprop_queue = VecDeque::new();
    let base = |round: usize, phase: Phase| Record {
        seed,
        round,
        phase,
        strategy: cfg.strategy,
        budget,
        lambda: cfg.objective.lambda,
        hops: cfg.hops,
        selected: None,
        label: None,
        score: None,
        labeled: 0,
        epochs: 0,
        loss: None,
        micro_f1: None,
        macro_f1: None,
        val_micro_f1: None,
        selected_homophily: None,
        graph_homophily,
    };

    for round in 0..budget {
        let step = (|| -> Result<Record> {
            if let Some(l) = trainer.train(round as u32 + 1, cfg.epochs_per_round, &state)? {
                loss = Some(l);
            }
            let h = embed(&g, &trainer.params)?;
            let pick = select(&g, cfg, seed, &state, h.view(), &mut featprop_queue)?;
            let label = labels[pick.node];
            state.label(pick.node, label)?;
            let labeled_nodes: Vec<usize> = state.labeled_nodes().collect();
            let mut rec = Record {
                selected: Some(pick.node),
                label: Some(label),
                score: Some(pick.score),
                labeled: state.labeled().len(),
                epochs: trainer.epochs,
                loss,
                selected_homophily: mean_ego_homophily(&g, &labeled_nodes)?,
                ..base(round, Phase::Select)
            };
            if cfg.eval_rounds {
                let (micro, macro_f1, _) = evaluate_probe(&g, h.view(), state.labeled(), &split.test, &cfg.probe)?;
                rec.micro_f1 = Some(micro);
                rec.macro_f1 = Some(macro_f1);
            }
            Ok(rec)
        })();
        records.push(step.map_err(|e| abort(&trainer, round, e))?);
    }

    let final_row = (|| -> Result<Record> {
        if let Some(l) = trainer.train(budget as u32 + 1, cfg.epochs_per_round, &state)? {
            loss = Some(l);
        }
        let h = embed(&g, &trainer.params)?;
        let (micro, macro_f1, _) = evaluate_probe(&g, h.view(), state.labeled(), &split.test, &cfg.probe)?;
        let val_micro = if split.validation.is_empty() {
            None
        } else {
            Some(evaluate_probe(&g, h.view(), state.labeled(), &split.validation, &cfg.probe)?.0)
        };
        let labeled_nodes: Vec<usize> = state.labeled_nodes().collect();
        Ok(Record {
            labeled: state.labeled().len(),
            epochs: trainer.epochs,
            loss,
            micro_f1: Some(micro),
            macro_f1: Some(macro_f1),
            val_micro_f1: val_micro,
            selected_homophily: mean_ego_homophily(&g, &labeled_nodes)?,
            ..base(budget, Phase::Final)
        })
    })();
    records.push(final_row.map_err(|e| abort(&trainer, budget, e))?);
    Ok(records)
}

/// Runs every configured seed in parallel; records come back in seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<Record>> {
    cfg.validate()?;
    let per_seed: Vec<Result<Vec<Record>>> = cfg.seeds.par_iter().map(|&s| run_seed(cfg, s)).collect();
    let mut records = Vec::new();
    for r in per_seed {
        records.extend(r?);
    }
    Ok(records)
}
