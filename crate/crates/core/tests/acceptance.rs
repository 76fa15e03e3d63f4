//! End-to-end acceptance checks. Prints one PASS/FAIL/SKIP line per check
//! followed by a tally.

use std::collections::HashSet;
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use gcal::augment::{drop_edges, make_view, mask_features, AugmentConfig};
use gcal::eval::homophily_report;
use gcal::experiment::{load_graph, run_experiment, write_records, ExperimentConfig, Phase, Record};
use gcal::model::{ModelDims, ModelParams};
use gcal::objective::{
    contrastive_objective, pairwise_loss, supervised_pairwise_loss, total_objective, ObjectiveConfig, PositiveSets,
};
use gcal::selection::{minimax_select, ALState};
use gcal::training::{loss_and_gradients, objective_value, PreparedView};
use gcal::Graph;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || normal(rng))
}

fn random_graph(n: usize, p: f64, m: usize, classes: usize, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
    Graph::from_edges(n, &edges, random_matrix(n, m, rng), Some(labels), classes).unwrap()
}

fn random_positives(n: usize, labeled: usize, classes: usize, rng: &mut ChaCha8Rng) -> PositiveSets {
    let mut nodes: Vec<usize> = (0..n).collect();
    for i in 0..labeled {
        let j = rng.random_range(i..n);
        nodes.swap(i, j);
    }
    let pairs: Vec<(usize, usize)> = nodes[..labeled]
        .iter()
        .map(|&v| (v, rng.random_range(0..classes)))
        .collect();
    PositiveSets::from_labeled(n, &pairs, None).unwrap()
}

// Central differences of the objective against the hand-written backward pass.
fn gradient_check() -> Outcome {
    let start = Instant::now();
    let (n, m, hidden, out) = (12, 5, 4, 3);
    let step = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    let mut resampled = 0;
    while instances < 50 {
        let g = random_graph(n, 0.3, m, 3, &mut rng);
        let mut params = ModelParams::init(ModelDims::new(m, hidden, out), &mut rng);
        params.b1 = ndarray::Array1::from_shape_simple_fn(out, || 0.3 * normal(&mut rng));
        params.b2 = ndarray::Array1::from_shape_simple_fn(out, || 0.3 * normal(&mut rng));
        let aug = AugmentConfig::default();
        let v1 = PreparedView::new(&make_view(&g, &aug.with_seed(rng.random())).unwrap());
        let v2 = PreparedView::new(&make_view(&g, &aug.with_seed(rng.random())).unwrap());
        let near_kink = [&v1, &v2]
            .iter()
            .any(|v| v.propagated.dot(&params.w1).iter().any(|x| x.abs() < 1e-3));
        if near_kink {
            resampled += 1;
            continue;
        }
        let positives = random_positives(n, 5, 3, &mut rng);
        let cfg = ObjectiveConfig {
            lambda: rng.random_range(0.1..2.0),
            tau: rng.random_range(0.3..1.0),
            ..ObjectiveConfig::default()
        };
        let (_, grads) = loss_and_gradients([&v1, &v2], &params, &positives, &cfg).unwrap();
        let analytic = grads.tensors();
        for (t, tensor) in analytic.iter().enumerate() {
            for (k, &a) in tensor.iter().enumerate() {
                let eval = |delta: f64| {
                    let mut p = params.clone();
                    p.tensors_mut()[t][k] += delta;
                    objective_value([&v1, &v2], &p, &positives, &cfg).unwrap()
                };
                let fd = (eval(step) - eval(-step)) / (2.0 * step);
                let rel = (a - fd).abs() / (a.abs() + fd.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        instances += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 1e-4 && secs < 60.0,
        format!("50 instances, max relative error {worst:.2e}, {resampled} resampled near ReLU kinks, {secs:.1}s"),
    )
}

fn oracle_critic(u: &[f64], v: &[f64], tau: f64) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt() + 1e-12;
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt() + 1e-12;
    (dot / (nu * nv) / tau).exp()
}

// Unsupervised two-view objective written directly from its definition.
fn oracle_unsupervised(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, tau: f64) -> f64 {
    let n = a.nrows();
    let rows = |x: ArrayView2<'_, f64>| -> Vec<Vec<f64>> { x.rows().into_iter().map(|r| r.to_vec()).collect() };
    let (a, b) = (rows(a), rows(b));
    let term = |anchor: &Vec<Vec<f64>>, other: &Vec<Vec<f64>>, i: usize| {
        let pos = oracle_critic(&anchor[i], &other[i], tau);
        let mut denom = pos;
        for k in (0..n).filter(|&k| k != i) {
            denom += oracle_critic(&anchor[i], &other[k], tau) + oracle_critic(&anchor[i], &anchor[k], tau);
        }
        -(pos / denom).ln()
    };
    (0..n).map(|i| term(&a, &b, i) + term(&b, &a, i)).sum::<f64>() / (2 * n) as f64
}

fn objective_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..20);
        let d = rng.random_range(1..8);
        let a = random_matrix(n, d, &mut rng);
        let b = random_matrix(n, d, &mut rng);
        let tau = rng.random_range(0.1..2.0);
        let expected = oracle_unsupervised(a.view(), b.view(), tau);
        let labeled = rng.random_range(1..=n);
        let positives = random_positives(n, labeled, 2, &mut rng);
        let lambda_zero = ObjectiveConfig {
            tau,
            lambda: 0.0,
            ..ObjectiveConfig::default()
        };
        let no_labels = ObjectiveConfig {
            tau,
            lambda: rng.random_range(0.1..3.0),
            ..ObjectiveConfig::default()
        };
        for value in [
            total_objective(a.view(), b.view(), &positives, &lambda_zero).unwrap(),
            total_objective(a.view(), b.view(), &PositiveSets::new(n, None), &no_labels).unwrap(),
            contrastive_objective(a.view(), b.view(), &no_labels).unwrap(),
        ] {
            worst = worst.max((value - expected).abs());
        }
    }
    check(worst <= 1e-12, format!("100 instances, max deviation {worst:.2e}"))
}

// Shortest-path distances by Floyd-Warshall, independent of the library's BFS.
fn hop_distances(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (u, row) in d.iter_mut().enumerate() {
        row[u] = 0;
        for &v in g.neighbors(u) {
            row[v] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn brute_force_minimax(g: &Graph, h: &Array2<f64>, unlabeled: &[usize], k: usize) -> Option<(usize, f64)> {
    let d = hop_distances(g);
    let mut best: Option<(usize, f64)> = None;
    for &v in unlabeled {
        let mut worst: Option<f64> = None;
        for u in 0..g.node_count() {
            if u != v && d[v][u] <= k {
                let dist: f64 = (0..h.ncols()).map(|c| (h[[v, c]] - h[[u, c]]).powi(2)).sum();
                worst = Some(worst.map_or(dist, |w: f64| w.max(dist)));
            }
        }
        if let Some(w) = worst {
            match best {
                Some((bv, bw)) if bw < w || (bw == w && bv < v) => {}
                _ => best = Some((v, w)),
            }
        }
    }
    best
}

fn minimax_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut ties, mut isolated, mut fallbacks) = (0, 0, 0);
    for case in 0..200 {
        let n = rng.random_range(2..=50);
        let p = [0.02, 0.05, 0.1, 0.3][case % 4];
        let g = random_graph(n, p, 1, 2, &mut rng);
        let dims = rng.random_range(1..4);
        // coarse integer grids make ties common
        let h = if case % 2 == 0 {
            Array2::from_shape_simple_fn((n, dims), || rng.random_range(0..3) as f64)
        } else {
            random_matrix(n, dims, &mut rng)
        };
        let k = rng.random_range(1..=3);
        let pool: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.8)).collect();
        if pool.is_empty() {
            continue;
        }
        let mut state = ALState::new(n, &pool, pool.len(), None).unwrap();
        for &v in &pool {
            if rng.random_bool(0.2) && state.unlabeled_count() > 1 {
                state.label(v, 0).unwrap();
            }
        }
        let unlabeled: Vec<usize> = state.unlabeled().collect();
        isolated += unlabeled.iter().filter(|&&v| g.degree(v) == 0).count();
        let got = minimax_select(&g, h.view(), &state, k, case as u64).unwrap();
        match brute_force_minimax(&g, &h, &unlabeled, k) {
            Some((v, w)) => {
                let d = hop_distances(&g);
                let tied = unlabeled
                    .iter()
                    .filter(|&&u| {
                        let s = (0..n)
                            .filter(|&x| x != u && d[u][x] <= k)
                            .map(|x| (0..dims).map(|c| (h[[u, c]] - h[[x, c]]).powi(2)).sum::<f64>())
                            .reduce(f64::max);
                        s == Some(w)
                    })
                    .count();
                if tied > 1 {
                    ties += 1;
                }
                if got.node != v || got.score != w {
                    return Outcome::Fail(format!(
                        "case {case}: got ({}, {}), oracle ({v}, {w})",
                        got.node, got.score
                    ));
                }
            }
            None => {
                fallbacks += 1;
                if !unlabeled.contains(&got.node) || got.score.is_finite() {
                    return Outcome::Fail(format!(
                        "case {case}: fallback picked {} with score {}",
                        got.node, got.score
                    ));
                }
            }
        }
    }
    check(
        ties > 0 && isolated > 0 && fallbacks > 0,
        format!("200 graphs agree; {ties} with ties, {isolated} isolated candidates, {fallbacks} all-isolated pools"),
    )
}

fn scalar_losses() -> Outcome {
    let log3 = 3f64.ln();
    let same2 = Array2::from_elem((2, 4), 0.7);
    let cfg = ObjectiveConfig::default();
    let pair = pairwise_loss(0, same2.view(), same2.view(), &cfg).unwrap();
    let total = total_objective(same2.view(), same2.view(), &PositiveSets::new(2, None), &cfg).unwrap();
    let same3 = Array2::from_elem((3, 4), -1.3);
    let sup_cfg = ObjectiveConfig {
        tau: 1.0,
        lambda: 1.0,
        ..ObjectiveConfig::default()
    };
    let sup = supervised_pairwise_loss(0, same3.view(), same3.view(), &[1], &sup_cfg).unwrap();
    let err = [pair, total, sup].iter().map(|v| (v - log3).abs()).fold(0.0, f64::max);
    check(
        err < 1e-9,
        format!("pairwise {pair:.9}, objective {total:.9}, supervised {sup:.9}, max error {err:.1e}"),
    )
}

fn augmentation_statistics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 3000;
    let mut set = HashSet::new();
    while set.len() < 10_000 {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        if u != v {
            set.insert((u.min(v), u.max(v)));
        }
    }
    let mut edges: Vec<(usize, usize)> = set.into_iter().collect();
    edges.sort_unstable();
    let g = Graph::from_edges(n, &edges, Array2::zeros((n, 1)), None, 1).unwrap();
    assert_eq!(g.edge_count(), 10_000);
    let x = Array2::from_elem((4, 1000), 1.0);
    let edge_sigma = (10_000.0f64 * 0.2 * 0.8).sqrt();
    let mask_sigma = (1000.0f64 * 0.3 * 0.7).sqrt();
    let mut worst_edge: f64 = 0.0;
    let mut worst_mask: f64 = 0.0;
    for seed in 0..20 {
        let kept = drop_edges(&g, 0.2, seed).unwrap().edge_count() as f64;
        worst_edge = worst_edge.max((kept - 8000.0).abs() / edge_sigma);
        let (_, mask) = mask_features(&x, 0.3, seed).unwrap();
        let masked = mask.iter().filter(|k| !**k).count() as f64;
        worst_mask = worst_mask.max((masked - 300.0).abs() / mask_sigma);
    }
    check(
        worst_edge <= 4.0 && worst_mask <= 4.0,
        format!("20 seeds, worst deviation {worst_edge:.2} sigma (edges), {worst_mask:.2} sigma (masked dims)"),
    )
}

const SBM: &str = "sbm.blocks = 60,60,60\nsbm.p_in = 0.25\nsbm.p_out = 0.02\nseeds = 0,1,2,3,4,5,6,7,8,9\n";

fn sbm_config(extra: &str) -> ExperimentConfig {
    format!("{SBM}{extra}").parse().unwrap()
}

fn homophily_direction() -> Outcome {
    let start = Instant::now();
    let cfg = sbm_config("strategy = minimax\nbudget = 12\neval_rounds = false\n");
    let records = run_experiment(&cfg).unwrap();
    let mut wins = 0;
    let mut lines = Vec::new();
    for &seed in &cfg.seeds {
        let g = load_graph(&cfg, seed).unwrap();
        let picked: Vec<usize> = records
            .iter()
            .filter(|r| r.seed == seed)
            .filter_map(|r| r.selected)
            .collect();
        match homophily_report(&g, &picked) {
            Ok(r) => {
                if r.selected_mean > r.graph_mean {
                    wins += 1;
                }
                lines.push(format!("{:.3}/{:.3}", r.selected_mean, r.graph_mean));
            }
            Err(e) => lines.push(format!("error {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        wins >= 9 && secs < 300.0,
        format!(
            "{wins}/10 seeds above graph mean (selected/graph: {}), {secs:.0}s",
            lines.join(" ")
        ),
    )
}

fn final_micro(records: &[Record]) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.phase == Phase::Final)
        .map(|r| r.micro_f1.unwrap())
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn strategy_ordering(minimax: &[Record], minimax_secs: f64) -> Outcome {
    let start = Instant::now();
    let random = run_experiment(&sbm_config("strategy = random\nbudget = 20C\neval_rounds = false\n")).unwrap();
    let (mm, rd) = (100.0 * mean(&final_micro(minimax)), 100.0 * mean(&final_micro(&random)));
    let secs = minimax_secs + start.elapsed().as_secs_f64();
    check(
        mm - rd >= 3.0 && secs < 900.0,
        format!(
            "Micro-F1 minimax {mm:.2} vs random {rd:.2} (gap {:.2} points), {secs:.0}s",
            mm - rd
        ),
    )
}

fn lambda_trend(full: &[Record]) -> Outcome {
    let weak = run_experiment(&sbm_config(
        "strategy = minimax\nbudget = 20C\nlambda = 0.2\neval_rounds = false\n",
    ))
    .unwrap();
    let (hi, lo) = (100.0 * mean(&final_micro(full)), 100.0 * mean(&final_micro(&weak)));
    check(
        hi >= lo,
        format!("Micro-F1 at lambda 1.0: {hi:.2}, at lambda 0.2: {lo:.2}"),
    )
}

fn cora_reproduction() -> Outcome {
    let Ok(dir) = std::env::var("GCAL_CORA_DIR") else {
        return Outcome::Skip("set GCAL_CORA_DIR to a converted Cora bundle to run".into());
    };
    let cfg: ExperimentConfig = format!(
        "dataset = {dir}\nrow_normalize = true\nstrategy = minimax\nbudget = 20C\nlambda = 1.0\n\
         eval_rounds = false\nseeds = 0,1,2,3,4,5,6,7,8,9\n"
    )
    .parse()
    .unwrap();
    match run_experiment(&cfg) {
        Ok(records) => {
            let micro = 100.0 * mean(&final_micro(&records));
            check(
                (micro - 85.35).abs() <= 3.0,
                format!("Micro-F1 {micro:.2} (reference 85.35 ± 3.0)"),
            )
        }
        Err(e) => Outcome::Fail(format!("run failed: {e}")),
    }
}

fn determinism() -> Outcome {
    let cfg = sbm_config("strategy = entropy\nbudget = 6\nseeds = 3,4\nmax_epochs = 60\n");
    let csv = || {
        let mut buf = Vec::new();
        write_records(&run_experiment(&cfg).unwrap(), &mut buf).unwrap();
        buf
    };
    let (a, b) = (csv(), csv());
    check(
        a == b,
        format!("two runs, {} bytes each, identical: {}", a.len(), a == b),
    )
}

fn main() {
    let total = Instant::now();
    let mut tally = [0usize; 3];
    let mut report = |name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => {
                tally[0] += 1;
                ("PASS", d)
            }
            Outcome::Fail(d) => {
                tally[1] += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => {
                tally[2] += 1;
                ("SKIP", d)
            }
        };
        println!("{tag} {name}: {detail}");
    };
    report("gradient_correctness", gradient_check());
    report("objective_reduction", objective_reduction());
    report("minimax_oracle_equivalence", minimax_oracle());
    report("scalar_loss_values", scalar_losses());
    report("augmentation_statistics", augmentation_statistics());
    report("homophily_direction", homophily_direction());
    let start = Instant::now();
    let minimax = run_experiment(&sbm_config("strategy = minimax\nbudget = 20C\neval_rounds = false\n")).unwrap();
    report(
        "strategy_ordering",
        strategy_ordering(&minimax, start.elapsed().as_secs_f64()),
    );
    report("cora_reproduction", cora_reproduction());
    report("lambda_trend", lambda_trend(&minimax));
    report("determinism", determinism());
    println!(
        "acceptance: {} passed, {} failed, {} skipped in {:.0}s",
        tally[0],
        tally[1],
        tally[2],
        total.elapsed().as_secs_f64()
    );
}
