//! Rendering of experiment results: mean ± std tables, gap tables and
//! bar-plot data, each as CSV plus a plain-text rendering.

use crate::experiment::{read_csv, write_csv, FailureRow, ResultRow};
use crate::evaluator::percentage_gap;
use crate::Error;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCsvRow {
    pub cell: String,
    pub policy: String,
    pub reference: String,
    pub mean_cost: f64,
    pub reference_cost: f64,
    pub gap_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub cell: String,
    pub policy: String,
    pub component: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub table_txt: PathBuf,
    pub gaps_csv: PathBuf,
    pub gaps_txt: PathBuf,
    pub plot_csv: PathBuf,
}

/// Rows grouped by cell, cells in first-appearance order.
fn group(rows: &[ResultRow]) -> Vec<(String, Vec<&ResultRow>)> {
    let mut order: Vec<String> = Vec::new();
    let mut by: BTreeMap<String, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let id = r.cell().id();
        if !by.contains_key(&id) {
            order.push(id.clone());
        }
        by.entry(id).or_default().push(r);
    }
    order
        .into_iter()
        .map(|id| {
            let v = by.remove(&id).unwrap_or_default();
            (id, v)
        })
        .collect()
}

fn policies_in(rows: &[ResultRow]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in rows {
        if !out.contains(&r.policy) {
            out.push(r.policy.clone());
        }
    }
    out
}

/// Mean ± std per cell and policy, with the tuned parameter in brackets.
pub fn render_table(rows: &[ResultRow], failures: &[FailureRow]) -> String {
    let policies = policies_in(rows);
    let groups = group(rows);
    let id_w = groups.iter().map(|(id, _)| id.len()).max().unwrap_or(4).max(4);
    let col_w = 26;
    let mut s = String::new();
    let _ = write!(s, "{:<id_w$}", "cell");
    for p in &policies {
        let _ = write!(s, " | {p:>col_w$}");
    }
    s.push('\n');
    s.push_str(&"-".repeat(id_w + policies.len() * (col_w + 3)));
    s.push('\n');
    for (id, cell_rows) in &groups {
        let _ = write!(s, "{id:<id_w$}");
        for p in &policies {
            let cellv = match cell_rows.iter().find(|r| &r.policy == p) {
                Some(r) => {
                    let mut v = format!("{:.1} ± {:.1}", r.mean_cost, r.std_cost);
                    if let Some(x) = r.param_value {
                        let _ = write!(v, " [{x}]");
                    }
                    v
                }
                None => "-".to_string(),
            };
            let _ = write!(s, " | {cellv:>col_w$}");
        }
        s.push('\n');
    }
    for f in failures {
        let _ = writeln!(s, "{:<id_w$} | FAILED: {}", f.cell, f.error);
    }
    s
}

/// Gaps of every policy to `reference` in each cell that has it.
pub fn gap_rows(rows: &[ResultRow], reference: &str) -> Vec<GapCsvRow> {
    let mut out = Vec::new();
    for (id, cell_rows) in group(rows) {
        let Some(base) = cell_rows.iter().find(|r| r.policy == reference) else {
            continue;
        };
        for r in cell_rows.iter().filter(|r| r.policy != reference) {
            out.push(GapCsvRow {
                cell: id.clone(),
                policy: r.policy.clone(),
                reference: reference.to_string(),
                mean_cost: r.mean_cost,
                reference_cost: base.mean_cost,
                gap_pct: percentage_gap(r.mean_cost, base.mean_cost).ok(),
            });
        }
    }
    out
}

pub fn render_gaps(gaps: &[GapCsvRow]) -> String {
    let mut s = String::new();
    let id_w = gaps.iter().map(|g| g.cell.len()).max().unwrap_or(4).max(4);
    let _ = writeln!(s, "{:<id_w$} | {:>8} | {:>10} | {:>12}", "cell", "policy", "vs", "gap %");
    for g in gaps {
        let gap = g
            .gap_pct
            .map(|x| format!("{x:.1}"))
            .unwrap_or_else(|| "n/a".into());
        let _ = writeln!(
            s,
            "{:<id_w$} | {:>8} | {:>10} | {:>12}",
            g.cell, g.policy, g.reference, gap
        );
    }
    s
}

/// Long-form cost components for stacked bar plots.
pub fn plot_rows(rows: &[ResultRow]) -> Vec<PlotRow> {
    let mut out = Vec::new();
    for r in rows {
        for (component, value) in [
            ("holding", r.holding),
            ("lost_sales", r.lost_sales),
            ("expiration", r.expiration),
            ("fixed_order", r.fixed_order),
        ] {
            out.push(PlotRow {
                cell: r.cell().id(),
                policy: r.policy.clone(),
                component: component.to_string(),
                value,
            });
        }
    }
    out
}

/// Render everything under `dir` from its `results.csv`. The gap reference
/// defaults to the first policy in the results.
pub fn render_dir(dir: &Path, reference: Option<&str>) -> Result<ReportFiles, Error> {
    let results = dir.join("results.csv");
    if !results.is_file() {
        return Err(Error::Input(format!(
            "{}: no results found (expected {})",
            dir.display(),
            results.display()
        )));
    }
    let rows: Vec<ResultRow> = read_csv(&results)?;
    let failures_path = dir.join("failures.csv");
    let failures: Vec<FailureRow> = if failures_path.is_file() {
        read_csv(&failures_path)?
    } else {
        Vec::new()
    };
    let policies = policies_in(&rows);
    let reference = match reference {
        Some(r) if !policies.iter().any(|p| p == r) => {
            return Err(Error::Input(format!(
                "reference policy `{r}` not in results (have: {})",
                policies.join(", ")
            )))
        }
        Some(r) => r.to_string(),
        None => policies.first().cloned().unwrap_or_default(),
    };
    let files = ReportFiles {
        table_txt: dir.join("table.txt"),
        gaps_csv: dir.join("gaps.csv"),
        gaps_txt: dir.join("gaps.txt"),
        plot_csv: dir.join("plot.csv"),
    };
    let w = |p: &Path, text: String| {
        fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    w(&files.table_txt, render_table(&rows, &failures))?;
    let gaps = gap_rows(&rows, &reference);
    write_csv(&files.gaps_csv, &gaps)?;
    w(&files.gaps_txt, render_gaps(&gaps))?;
    write_csv(&files.plot_csv, &plot_rows(&rows))?;
    Ok(files)
}
