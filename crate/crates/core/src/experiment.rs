//! Grid experiments: per cell, tune OUT and PIL and evaluate every other
//! configured policy on the same episodes.
//!
//! Layout of the output directory:
//!
//! * `cells/<id>.csv`: one result row per policy, written when the cell is done
//! * `cells/<id>.error`: the failure message of a cell that could not run
//! * `episodes/<id>.csv`: per-episode costs of every policy in the cell
//! * `curves/<id>.csv`: mean cost of every search candidate
//! * `results.csv`, `failures.csv` and the rendered report, rebuilt at the end
//!
//! A rerun skips cells whose result file already exists.

use crate::config::{Cell, Config};
use crate::demand::NoiseKind;
use crate::evaluator::{evaluate, optimize_parameter, EvalResult};
use crate::report;
use crate::Error;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// One policy in one cell. Cost columns are transformed per-episode means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub noise: NoiseKind,
    #[serde(rename = "L")]
    pub lead_time: usize,
    pub z: f64,
    pub m: usize,
    pub w: f64,
    pub b: f64,
    pub policy: String,
    pub param_value: Option<f64>,
    pub mean_cost: f64,
    pub std_cost: f64,
    pub se_cost: f64,
    pub holding: f64,
    pub lost_sales: f64,
    pub expiration: f64,
    pub fixed_order: f64,
    pub service_level: f64,
}

impl ResultRow {
    pub fn new(cell: &Cell, r: &EvalResult, param_value: Option<f64>) -> Self {
        ResultRow {
            noise: cell.noise,
            lead_time: cell.lead_time,
            z: cell.yield_loss_max,
            m: cell.lifetime,
            w: cell.expiration,
            b: cell.lost_sales,
            policy: r.policy.clone(),
            param_value,
            mean_cost: r.mean_cost,
            std_cost: r.std_cost,
            se_cost: r.se_cost,
            holding: r.breakdown.holding,
            lost_sales: r.breakdown.lost_sales,
            expiration: r.breakdown.expiration,
            fixed_order: r.breakdown.fixed_order,
            service_level: r.service_level,
        }
    }

    pub fn cell(&self) -> Cell {
        Cell {
            noise: self.noise,
            lead_time: self.lead_time,
            yield_loss_max: self.z,
            lifetime: self.m,
            expiration: self.w,
            lost_sales: self.b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub policy: String,
    pub episode: usize,
    pub seed: u64,
    pub cost: f64,
    pub raw_cost: f64,
    pub holding: f64,
    pub lost_sales: f64,
    pub expiration: f64,
    pub fixed_order: f64,
    pub window_demand: f64,
    pub window_sales: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub policy: String,
    pub param_value: f64,
    pub mean_cost: f64,
    pub se_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub cell: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentSummary {
    pub cells: usize,
    pub ran: usize,
    pub resumed: usize,
    pub failed: usize,
}

struct CellOutput {
    rows: Vec<ResultRow>,
    episodes: Vec<EpisodeRow>,
    curves: Vec<CurveRow>,
}

fn run_cell(cfg: &Config, cell: &Cell) -> Result<CellOutput, Error> {
    let cell_cfg = cfg.for_cell(cell);
    let built = cell_cfg.build()?;
    let mut out = CellOutput {
        rows: Vec::new(),
        episodes: Vec::new(),
        curves: Vec::new(),
    };
    for spec in &cfg.policies {
        let (result, param) = if spec.parameter().is_some() {
            let iv = cell_cfg.interval_for(spec, &built)?;
            let search = optimize_parameter(spec, iv, &built.system, &built.scenario, &cfg.eval)?;
            for (v, r) in search.candidates.iter().zip(&search.results) {
                out.curves.push(CurveRow {
                    policy: spec.label().to_string(),
                    param_value: *v,
                    mean_cost: r.mean_cost,
                    se_cost: r.se_cost,
                });
            }
            let best = search.best().clone();
            (best, Some(search.best_value))
        } else {
            (evaluate(&built.system, &built.scenario, spec, &cfg.eval)?, None)
        };
        let mut result = result;
        result.policy = spec.label().to_string();
        out.episodes.extend(result.episodes.iter().map(|e| EpisodeRow {
            policy: result.policy.clone(),
            episode: e.index,
            seed: e.seed,
            cost: e.cost,
            raw_cost: e.raw_cost,
            holding: e.breakdown.holding,
            lost_sales: e.breakdown.lost_sales,
            expiration: e.breakdown.expiration,
            fixed_order: e.breakdown.fixed_order,
            window_demand: e.window_demand,
            window_sales: e.window_sales,
        }));
        out.rows.push(ResultRow::new(cell, &result, param));
    }
    Ok(out)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write rows to `path` through a temporary file so a crash never leaves a
/// half-written file that a resume would trust.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), Error> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, Error> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Input(format!("{}: cannot read results file", path.display())),
        _ => Error::Csv(e),
    })?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| Error::Input(format!("{}: corrupt results file: {e}", path.display())))
}

pub fn cell_paths(out: &Path, cell: &Cell) -> (PathBuf, PathBuf, PathBuf, PathBuf) {
    let id = cell.id();
    (
        out.join("cells").join(format!("{id}.csv")),
        out.join("cells").join(format!("{id}.error")),
        out.join("episodes").join(format!("{id}.csv")),
        out.join("curves").join(format!("{id}.csv")),
    )
}

/// Run every cell of the grid, skipping finished ones, then rebuild the
/// aggregate files and the report.
pub fn run_experiment(
    cfg: &Config,
    out: &Path,
    mut progress: impl FnMut(&Cell, &str),
) -> Result<ExperimentSummary, Error> {
    if cfg.policies.is_empty() {
        return Err(Error::Config("policies: at least one policy is required".into()));
    }
    for sub in ["cells", "episodes", "curves"] {
        let d = out.join(sub);
        fs::create_dir_all(&d).map_err(io_err(&d))?;
    }
    let cells = cfg.cells();
    let mut summary = ExperimentSummary {
        cells: cells.len(),
        ..Default::default()
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for cell in &cells {
        let (res, err, eps, curve) = cell_paths(out, cell);
        if res.exists() {
            rows.extend(read_csv::<ResultRow>(&res)?);
            summary.resumed += 1;
            progress(cell, "resumed");
            continue;
        }
        match run_cell(cfg, cell) {
            Ok(o) => {
                write_csv(&eps, &o.episodes)?;
                write_csv(&curve, &o.curves)?;
                write_csv(&res, &o.rows)?;
                if err.exists() {
                    fs::remove_file(&err).map_err(io_err(&err))?;
                }
                rows.extend(o.rows);
                summary.ran += 1;
                progress(cell, "done");
            }
            Err(e) => {
                let msg = e.to_string();
                fs::write(&err, format!("{msg}\n")).map_err(io_err(&err))?;
                failures.push(FailureRow {
                    cell: cell.id(),
                    error: msg,
                });
                summary.failed += 1;
                progress(cell, "failed");
            }
        }
    }
    write_csv(&out.join("results.csv"), &rows)?;
    write_csv(&out.join("failures.csv"), &failures)?;
    report::render_dir(out, None)?;
    Ok(summary)
}
