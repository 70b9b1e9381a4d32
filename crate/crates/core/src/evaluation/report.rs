use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stats::paired_ttest;
use crate::budget::CostRow;
use crate::datamodel::{write_text, QueryId};
use crate::error::{Error, Result};

/// Evaluation and cost of one iteration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: usize,
    /// Triplets in the annotated set.
    pub train_size: usize,
    pub ndcg10: f64,
    pub per_query: BTreeMap<QueryId, f64>,
    pub cost: CostRow,
}

/// One strategy under one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub strategy: String,
    pub seed: u64,
    pub iterations: Vec<IterationSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariabilityRecord {
    pub strategy: String,
    pub size: usize,
    pub seed: u64,
    pub ndcg10: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub results: PathBuf,
    pub variability: PathBuf,
    pub cost_stacked: PathBuf,
    pub ndcg_vs_assessments: PathBuf,
    pub significance: PathBuf,
    pub summary: PathBuf,
}

const BASELINE: &str = "random";
const ORDER: [&str; 4] = ["random", "uncertainty", "qbc", "diversity"];

fn strategy_rank(s: &str) -> (usize, &str) {
    (ORDER.iter().position(|o| *o == s).unwrap_or(ORDER.len()), s)
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Iterations of every seed of one strategy, grouped by iteration index.
type Grouped<'a> = BTreeMap<(usize, &'a str), BTreeMap<usize, Vec<&'a IterationSummary>>>;

fn group(runs: &[RunSummary]) -> Grouped<'_> {
    let mut g: Grouped<'_> = BTreeMap::new();
    for r in runs {
        for it in &r.iterations {
            g.entry(strategy_rank(&r.strategy)).or_default().entry(it.iteration).or_default().push(it);
        }
    }
    g
}

/// Per-query nDCG averaged over seeds.
fn seed_averaged(its: &[&IterationSummary]) -> BTreeMap<QueryId, f64> {
    let mut acc: BTreeMap<QueryId, (f64, usize)> = BTreeMap::new();
    for it in its {
        for (q, v) in &it.per_query {
            let e = acc.entry(q.clone()).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(q, (s, n))| (q, s / n as f64)).collect()
}

#[derive(Debug, Clone)]
struct TableCell {
    train_size: f64,
    ndcg10: f64,
    t: Option<f64>,
    p: Option<f64>,
    significant: bool,
}

fn table(runs: &[RunSummary], alpha: f64) -> Result<BTreeMap<(usize, String), BTreeMap<usize, TableCell>>> {
    let grouped = group(runs);
    let comparisons = grouped.keys().filter(|(_, s)| *s != BASELINE).count().max(1);
    let baseline = grouped.iter().find(|((_, s), _)| *s == BASELINE).map(|(_, v)| v);
    let mut out = BTreeMap::new();
    for ((rank, strategy), iterations) in &grouped {
        let mut row = BTreeMap::new();
        for (&i, its) in iterations {
            let mut cell = TableCell {
                train_size: mean(its.iter().map(|it| it.train_size as f64)),
                ndcg10: mean(its.iter().map(|it| it.ndcg10)),
                t: None,
                p: None,
                significant: false,
            };
            if *strategy != BASELINE {
                if let Some(base_its) = baseline.and_then(|b| b.get(&i)) {
                    let ours = seed_averaged(its);
                    let theirs = seed_averaged(base_its);
                    let (a, b): (Vec<f64>, Vec<f64>) =
                        ours.iter().filter_map(|(q, v)| theirs.get(q).map(|w| (*v, *w))).unzip();
                    if a.len() >= 2 {
                        let sig = paired_ttest(&a, &b, alpha, comparisons)?;
                        cell.t = Some(sig.t);
                        cell.p = Some(sig.p);
                        cell.significant = sig.significant;
                    }
                }
            }
            row.insert(i, cell);
        }
        out.insert((*rank, strategy.to_string()), row);
    }
    Ok(out)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes every report file into `out_dir`. Identical inputs give
/// byte-identical files.
pub fn emit_reports(
    runs: &[RunSummary],
    variability: &[VariabilityRecord],
    alpha: f64,
    out_dir: &Path,
) -> Result<ReportFiles> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = ReportFiles {
        results: out_dir.join("results.csv"),
        variability: out_dir.join("variability.csv"),
        cost_stacked: out_dir.join("cost_stacked.csv"),
        ndcg_vs_assessments: out_dir.join("ndcg_vs_assessments.csv"),
        significance: out_dir.join("significance.csv"),
        summary: out_dir.join("summary.txt"),
    };

    let mut sorted: Vec<&RunSummary> = runs.iter().collect();
    sorted.sort_by(|a, b| strategy_rank(&a.strategy).cmp(&strategy_rank(&b.strategy)).then(a.seed.cmp(&b.seed)));

    let mut rows = Vec::new();
    let mut curve = Vec::new();
    for r in &sorted {
        for it in &r.iterations {
            rows.push(vec![
                r.strategy.clone(),
                r.seed.to_string(),
                it.iteration.to_string(),
                it.train_size.to_string(),
                it.ndcg10.to_string(),
                it.cost.assessments.to_string(),
                it.cost.annotation_cost.to_string(),
                it.cost.compute_cost.to_string(),
                it.cost.total_cost.to_string(),
            ]);
            curve.push(vec![
                r.strategy.clone(),
                r.seed.to_string(),
                it.iteration.to_string(),
                it.cost.assessments.to_string(),
                it.ndcg10.to_string(),
            ]);
        }
    }
    write_text(
        &files.results,
        &csv_string(
            &["strategy", "seed", "iteration", "train_size", "ndcg10", "assessments", "C_A", "C_C", "C_total"],
            rows,
        )?,
    )?;
    write_text(
        &files.ndcg_vs_assessments,
        &csv_string(&["strategy", "seed", "iteration", "assessments", "ndcg10"], curve)?,
    )?;

    let mut var: Vec<&VariabilityRecord> = variability.iter().collect();
    var.sort_by(|a, b| (a.size, a.seed, &a.strategy).cmp(&(b.size, b.seed, &b.strategy)));
    write_text(
        &files.variability,
        &csv_string(
            &["strategy", "size", "seed", "ndcg10"],
            var.iter()
                .map(|v| vec![v.strategy.clone(), v.size.to_string(), v.seed.to_string(), v.ndcg10.to_string()])
                .collect(),
        )?,
    )?;

    let mut stacked = Vec::new();
    for ((_, strategy), iterations) in group(runs) {
        for (i, its) in iterations {
            stacked.push(vec![
                strategy.to_string(),
                i.to_string(),
                its.len().to_string(),
                mean(its.iter().map(|it| it.train_size as f64)).to_string(),
                mean(its.iter().map(|it| it.ndcg10)).to_string(),
                mean(its.iter().map(|it| it.cost.annotation_cost)).to_string(),
                mean(its.iter().map(|it| it.cost.compute_cost)).to_string(),
                mean(its.iter().map(|it| it.cost.total_cost)).to_string(),
            ]);
        }
    }
    write_text(
        &files.cost_stacked,
        &csv_string(
            &["strategy", "iteration", "seeds", "train_size", "ndcg10", "C_A", "C_C", "C_total"],
            stacked,
        )?,
    )?;

    let table = table(runs, alpha)?;
    let mut sig_rows = Vec::new();
    for ((_, strategy), row) in &table {
        for (i, c) in row {
            sig_rows.push(vec![
                strategy.clone(),
                i.to_string(),
                c.train_size.to_string(),
                c.ndcg10.to_string(),
                fmt_opt(c.t),
                fmt_opt(c.p),
                c.significant.to_string(),
            ]);
        }
    }
    write_text(
        &files.significance,
        &csv_string(&["strategy", "iteration", "train_size", "ndcg10", "t", "p", "significant"], sig_rows)?,
    )?;
    write_text(&files.summary, &summary_text(&table, alpha))?;
    Ok(files)
}

fn summary_text(table: &BTreeMap<(usize, String), BTreeMap<usize, TableCell>>, alpha: f64) -> String {
    let iterations: Vec<usize> = {
        let mut v: Vec<usize> = table.values().flat_map(|r| r.keys().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let comparisons = table.keys().filter(|(_, s)| s != BASELINE).count().max(1);
    let mut out = String::new();
    let _ = writeln!(out, "nDCG@10 by iteration (mean over seeds; training triplets in brackets)");
    let _ = writeln!(
        out,
        "* significant vs {BASELINE}: paired t-test over queries, p < {alpha}/{comparisons}\n"
    );
    let _ = write!(out, "{:<12}", "strategy");
    for i in &iterations {
        let _ = write!(out, " {:>16}", format!("i={i}"));
    }
    out.push('\n');
    for ((_, strategy), row) in table {
        let _ = write!(out, "{strategy:<12}");
        for i in &iterations {
            let cell = match row.get(i) {
                Some(c) => format!(
                    "{:.4}{} [{:.0}]",
                    c.ndcg10,
                    if c.significant { "*" } else { " " },
                    c.train_size
                ),
                None => "-".to_string(),
            };
            let _ = write!(out, " {cell:>16}");
        }
        out.push('\n');
    }
    out
}
