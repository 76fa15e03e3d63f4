//! Dataset bundles on disk, the stochastic block model generator, and
//! validation/test/pool splits.
//!
//! A bundle is a directory with four UTF-8 files:
//!
//! * `meta.json`: `{"name": .., "n": .., "m": .., "C": .., "directed": false}`
//! * `edges.tsv`: one `u<TAB>v` pair of 0-based ids per line, no header
//! * `features.csv`: `n` lines of `m` comma-separated reals
//! * `labels.txt`: `n` lines, one class id each

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{split_seed, substream, Stream};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub name: String,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "C")]
    pub classes: usize,
    #[serde(default)]
    pub directed: bool,
}

fn read_required(dir: &Path, file: &str) -> Result<String> {
    let path = dir.join(file);
    if !path.is_file() {
        return Err(Error::MissingFile(path));
    }
    Ok(fs::read_to_string(path)?)
}

/// Non-empty lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub fn read_meta(dir: &Path) -> Result<BundleMeta> {
    Ok(serde_json::from_str(&read_required(dir, "meta.json")?)?)
}

/// Loads a bundle directory into a [`Graph`]. Edges are symmetrized and deduplicated.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<(BundleMeta, Graph)> {
    let dir = dir.as_ref();
    let meta = read_meta(dir)?;
    // read everything first so a missing file is reported before content errors
    let edges_text = read_required(dir, "edges.tsv")?;
    let features_text = read_required(dir, "features.csv")?;
    let labels_text = read_required(dir, "labels.txt")?;

    let mut edges = Vec::new();
    for (line, text) in content_lines(&edges_text) {
        let malformed = |msg: String| Error::Malformed {
            file: "edges.tsv".into(),
            line,
            msg,
        };
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 2 {
            return Err(malformed(format!("expected 2 tab-separated ids, got {}", fields.len())));
        }
        let mut ids = [0usize; 2];
        for (slot, field) in ids.iter_mut().zip(&fields) {
            *slot = field
                .trim()
                .parse()
                .map_err(|_| malformed(format!("bad node id {field:?}")))?;
            if *slot >= meta.n {
                return Err(malformed(format!("node id {slot} outside 0..{}", meta.n)));
            }
        }
        edges.push((ids[0], ids[1]));
    }

    let mut features = Array2::zeros((meta.n, meta.m));
    let mut rows = 0;
    for (line, text) in content_lines(&features_text) {
        if rows == meta.n {
            return Err(Error::CountMismatch {
                file: "features.csv".into(),
                what: "rows".into(),
                declared: meta.n,
                found: content_lines(&features_text).count(),
            });
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != meta.m {
            return Err(Error::CountMismatch {
                file: "features.csv".into(),
                what: format!("columns on line {line}"),
                declared: meta.m,
                found: fields.len(),
            });
        }
        for (j, field) in fields.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| Error::Malformed {
                file: "features.csv".into(),
                line,
                msg: format!("bad number {field:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    file: "features.csv".into(),
                    line,
                    value: field.trim().to_string(),
                });
            }
            features[[rows, j]] = value;
        }
        rows += 1;
    }
    if rows != meta.n {
        return Err(Error::CountMismatch {
            file: "features.csv".into(),
            what: "rows".into(),
            declared: meta.n,
            found: rows,
        });
    }

    let mut labels = Vec::with_capacity(meta.n);
    for (line, text) in content_lines(&labels_text) {
        let label: i64 = text.trim().parse().map_err(|_| Error::Malformed {
            file: "labels.txt".into(),
            line,
            msg: format!("bad class id {text:?}"),
        })?;
        if label < 0 || label as usize >= meta.classes {
            return Err(Error::LabelRange {
                file: "labels.txt".into(),
                line,
                label,
                classes: meta.classes,
            });
        }
        labels.push(label as usize);
    }
    if labels.len() != meta.n {
        return Err(Error::CountMismatch {
            file: "labels.txt".into(),
            what: "rows".into(),
            declared: meta.n,
            found: labels.len(),
        });
    }

    let graph = Graph::from_edges(meta.n, &edges, features, Some(labels), meta.classes)?;
    Ok((meta, graph))
}

/// Writes `g` as a bundle. Reals use the shortest representation that parses
/// back to the identical `f64`.
pub fn write_bundle(g: &Graph, name: &str, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let labels = g
        .labels()
        .ok_or_else(|| Error::invalid_state("bundles require labels"))?;
    fs::create_dir_all(dir)?;
    let meta = BundleMeta {
        name: name.to_string(),
        n: g.node_count(),
        m: g.feature_dim(),
        classes: g.class_count(),
        directed: false,
    };
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;

    let mut edges = Vec::new();
    for (u, v) in g.adjacency().undirected_edges() {
        writeln!(edges, "{u}\t{v}")?;
    }
    fs::write(dir.join("edges.tsv"), edges)?;

    let mut features = Vec::new();
    for row in g.features().rows() {
        let mut first = true;
        for x in row {
            if !first {
                features.push(b',');
            }
            first = false;
            write!(features, "{x}")?;
        }
        features.push(b'\n');
    }
    fs::write(dir.join("features.csv"), features)?;

    let mut text = Vec::new();
    for y in labels {
        writeln!(text, "{y}")?;
    }
    fs::write(dir.join("labels.txt"), text)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub blocks: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub feat_dim: usize,
    pub feat_noise: f64,
}

impl SbmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.blocks.len() < 2 {
            return Err(Error::invalid_argument("SBM needs at least 2 blocks"));
        }
        if self.blocks.contains(&0) {
            return Err(Error::invalid_argument("SBM block sizes must be positive"));
        }
        if !(0.0..=1.0).contains(&self.p_out) || !(0.0..=1.0).contains(&self.p_in) || self.p_out > self.p_in {
            return Err(Error::invalid_argument(format!(
                "need 0 <= p_out <= p_in <= 1, got p_in={} p_out={}",
                self.p_in, self.p_out
            )));
        }
        if self.feat_dim < self.blocks.len() {
            return Err(Error::invalid_argument(format!(
                "feature dimension {} cannot hold {} block centroids",
                self.feat_dim,
                self.blocks.len()
            )));
        }
        if !(self.feat_noise >= 0.0 && self.feat_noise.is_finite()) {
            return Err(Error::invalid_argument("feature noise must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Samples a stochastic block model graph. Node ids are assigned block by
/// block; features are the one-hot block indicator plus isotropic Gaussian
/// noise of standard deviation `feat_noise`.
pub fn generate_sbm(spec: &SbmSpec, seed: u64) -> Result<Graph> {
    spec.validate()?;
    let labels: Vec<usize> = spec
        .blocks
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = labels.len();

    let mut rng = substream(seed, Stream::Sbm);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { spec.p_in } else { spec.p_out };
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }

    let mut noise = split_seed(seed, 1);
    let mut features = Array2::zeros((n, spec.feat_dim));
    for (u, mut row) in features.rows_mut().into_iter().enumerate() {
        for x in row.iter_mut() {
            let z: f64 = noise.sample(StandardNormal);
            *x = spec.feat_noise * z;
        }
        row[labels[u]] += 1.0;
    }
    Graph::from_edges(n, &edges, features, Some(labels), spec.blocks.len())
}

/// Disjoint validation / test / pool node sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub pool: Vec<usize>,
    pub seed: u64,
    /// True when the graph was too small for 500/1000 and 10%/20% was used.
    pub fallback: bool,
}

pub const VALIDATION_SIZE: usize = 500;
pub const TEST_SIZE: usize = 1000;

pub fn make_split(g: &Graph, seed: u64) -> Split {
    let n = g.node_count();
    let fallback = n <= VALIDATION_SIZE + TEST_SIZE;
    let (n_val, n_test) = if fallback {
        ((0.1 * n as f64).round() as usize, (0.2 * n as f64).round() as usize)
    } else {
        (VALIDATION_SIZE, TEST_SIZE)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, Stream::Split));
    let mut validation = order[..n_val].to_vec();
    let mut test = order[n_val..n_val + n_test].to_vec();
    let mut pool = order[n_val + n_test..].to_vec();
    validation.sort_unstable();
    test.sort_unstable();
    pool.sort_unstable();
    Split {
        validation,
        test,
        pool,
        seed,
        fallback,
    }
}
