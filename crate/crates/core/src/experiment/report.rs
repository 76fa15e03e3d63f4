//! Per-round CSV records and the aggregated JSON summary.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selection::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Select,
    Final,
}

/// One CSV row. `select` rows describe a single query; the `final` row holds
/// the evaluation after the last query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub seed: u64,
    pub round: usize,
    pub phase: Phase,
    pub strategy: Strategy,
    pub budget: usize,
    pub lambda: f64,
    pub hops: usize,
    pub selected: Option<usize>,
    pub label: Option<usize>,
    pub score: Option<f64>,
    pub labeled: usize,
    pub epochs: usize,
    pub loss: Option<f64>,
    pub micro_f1: Option<f64>,
    pub macro_f1: Option<f64>,
    pub val_micro_f1: Option<f64>,
    pub selected_homophily: Option<f64>,
    pub graph_homophily: Option<f64>,
}

pub const CSV_HEADER: &str = "seed,round,phase,strategy,budget,lambda,hops,selected,label,score,labeled,epochs,loss,micro_f1,macro_f1,val_micro_f1,selected_homophily,graph_homophily";

pub fn write_records<W: Write>(records: &[Record], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(',')).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<Record>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Malformed {
                file: "records.csv".into(),
                line: i + 2,
                msg: e.to_string(),
            })
        })
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid_argument(format!("{other:?}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<MeanStd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(MeanStd { mean, std: var.sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomophilyRow {
    pub original: f64,
    pub selected: f64,
    pub improvement_pct: f64,
}

/// Aggregate over seeds for one (strategy, budget, lambda, hops) setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub strategy: Strategy,
    pub budget: usize,
    pub lambda: f64,
    pub hops: usize,
    pub seeds: usize,
    pub micro_f1: Option<MeanStd>,
    pub macro_f1: Option<MeanStd>,
    pub val_micro_f1: Option<MeanStd>,
    pub homophily: Option<HomophilyRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub configs: Vec<ConfigSummary>,
}

/// Groups the `final` rows by setting and averages over seeds.
pub fn summarize(records: &[Record]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::invalid_argument("no records to summarize"));
    }
    let mut groups: BTreeMap<(String, usize, u64, usize), Vec<&Record>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.phase == Phase::Final) {
        groups
            .entry((r.strategy.to_string(), r.budget, r.lambda.to_bits(), r.hops))
            .or_default()
            .push(r);
    }
    if groups.is_empty() {
        return Err(Error::invalid_argument("no final rows among the records"));
    }
    let configs = groups
        .into_values()
        .map(|rows| {
            let stat =
                |f: fn(&Record) -> Option<f64>| MeanStd::of(&rows.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
            let original = stat(|r| r.graph_homophily);
            let selected = stat(|r| r.selected_homophily);
            let homophily = original.zip(selected).map(|(o, s)| HomophilyRow {
                original: o.mean,
                selected: s.mean,
                improvement_pct: 100.0 * (s.mean - o.mean) / o.mean,
            });
            let first = rows[0];
            ConfigSummary {
                strategy: first.strategy,
                budget: first.budget,
                lambda: first.lambda,
                hops: first.hops,
                seeds: rows.len(),
                micro_f1: stat(|r| r.micro_f1),
                macro_f1: stat(|r| r.macro_f1),
                val_micro_f1: stat(|r| r.val_micro_f1),
                homophily,
            }
        })
        .collect();
    Ok(Summary { configs })
}

/// Table-shaped text rendering of a summary, F1 in percent.
pub fn render_table(summary: &Summary) -> String {
    let pct = |m: Option<MeanStd>| match m {
        Some(m) => format!("{:.2} ± {:.2}", 100.0 * m.mean, 100.0 * m.std),
        None => "-".into(),
    };
    let mut out = String::from("strategy,budget,lambda,hops,seeds,micro_f1,macro_f1,original,selected,improv_pct\n");
    for c in &summary.configs {
        let (o, s, i) = match &c.homophily {
            Some(h) => (
                format!("{:.3}", h.original),
                format!("{:.3}", h.selected),
                format!("{:.1}", h.improvement_pct),
            ),
            None => ("-".into(), "-".into(), "-".into()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{o},{s},{i}\n",
            c.strategy,
            c.budget,
            c.lambda,
            c.hops,
            c.seeds,
            pct(c.micro_f1),
            pct(c.macro_f1)
        ));
    }
    out
}

pub fn write_outputs(records: &[Record], dir: &Path) -> Result<Summary> {
    std::fs::create_dir_all(dir)?;
    write_records(records, std::fs::File::create(dir.join("records.csv"))?)?;
    let summary = summarize(records)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}
