//! Command-line interface. `main` only maps the result to an exit code.

use crate::bounds::{lb_argmin, ub_argmin, PolicyKind};
use crate::bridge::{derive_action_cap, serve_lines, serve_tcp, Session};
use crate::config::{Built, Config};
use crate::evaluator::{evaluate, optimize_parameter};
use crate::experiment::{run_experiment, write_csv, CurveRow, EpisodeRow, ResultRow};
use crate::report::render_dir;
use crate::Error;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "perishable", version, about = "Perishable inventory simulation, bounds and policy search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// TOML config file.
    #[arg(long, conflicts_with = "profile")]
    pub config: Option<PathBuf>,
    /// Built-in profile: bms-base, scenario1-worst, scenario1-balanced, scenario2.
    #[arg(long)]
    pub profile: Option<String>,
    /// Master seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Episodes per evaluation (overrides the config).
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Accept configs outside the assumptions of the analytic bounds.
    #[arg(long)]
    pub advisory: bool,
    /// Run episodes in parallel (true/false, overrides the config).
    #[arg(long)]
    pub parallel: Option<bool>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the configured policies as given.
    Simulate(Common),
    /// Print bound argmins and search intervals per grid cell.
    Bounds(Common),
    /// Tune the OUT and PIL parameters of the configured policies.
    Optimize(Common),
    /// Run a grid experiment into --out.
    Experiment(Common),
    /// Render tables from an experiment directory.
    Report {
        /// Experiment directory.
        dir: PathBuf,
        /// Policy the gaps are measured against.
        #[arg(long)]
        reference: Option<String>,
    },
    /// Serve the environment over the line protocol.
    ServeEnv {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "port")]
        stdio: bool,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

impl Common {
    pub fn load(&self) -> Result<Config, Error> {
        let mut cfg = match (&self.config, &self.profile) {
            (Some(p), _) => Config::load(p)?,
            (None, Some(name)) => Config::profile(name)?,
            (None, None) => return Err(Error::Input("one of --config or --profile is required".into())),
        };
        if let Some(s) = self.seed {
            cfg.eval.master_seed = s;
        }
        if let Some(n) = self.episodes {
            cfg.eval.n_episodes = n;
        }
        if let Some(p) = self.parallel {
            cfg.eval.parallel = p;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self) -> Result<Option<&Path>, Error> {
        if let Some(d) = &self.out {
            std::fs::create_dir_all(d).map_err(|source| Error::Io {
                path: d.clone(),
                source,
            })?;
        }
        Ok(self.out.as_deref())
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(c) => simulate(&c, out),
        Command::Bounds(c) => bounds(&c, out),
        Command::Optimize(c) => optimize(&c, out),
        Command::Experiment(c) => experiment(&c, out),
        Command::Report { dir, reference } => {
            let files = render_dir(&dir, reference.as_deref())?;
            let text = std::fs::read_to_string(&files.table_txt).map_err(|source| Error::Io {
                path: files.table_txt.clone(),
                source,
            })?;
            write_out(out, &text)
        }
        Command::ServeEnv {
            common,
            stdio,
            port,
            host,
        } => serve(&common, stdio, port, &host),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Error> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::Runtime(format!("writing output: {e}")))
}

fn base_cell(cfg: &Config) -> crate::config::Cell {
    crate::config::Cell {
        noise: cfg.demand.noise,
        lead_time: cfg.env.lead_time,
        yield_loss_max: cfg.env.yield_loss_max,
        lifetime: cfg.env.lifetime,
        expiration: cfg.costs.expiration,
        lost_sales: cfg.costs.lost_sales,
    }
}

fn summary_line(r: &ResultRow) -> String {
    let param = r.param_value.map(|v| format!(" param={v}")).unwrap_or_default();
    format!(
        "{:<6}{} mean={:.3} std={:.3} se={:.3} holding={:.3} lost_sales={:.3} expiration={:.3} fixed_order={:.3} service={:.5}\n",
        r.policy, param, r.mean_cost, r.std_cost, r.se_cost, r.holding, r.lost_sales, r.expiration, r.fixed_order, r.service_level
    )
}

fn simulate(c: &Common, out: &mut dyn Write) -> Result<(), Error> {
    let cfg = c.load()?;
    if cfg.policies.is_empty() {
        return Err(Error::Config("policies: at least one policy is required".into()));
    }
    let built = cfg.build()?;
    let cell = base_cell(&cfg);
    let mut rows = Vec::new();
    let mut episodes = Vec::new();
    for spec in &cfg.policies {
        let mut r = evaluate(&built.system, &built.scenario, spec, &cfg.eval)?;
        r.policy = spec.label().to_string();
        episodes.extend(r.episodes.iter().map(|e| EpisodeRow {
            policy: r.policy.clone(),
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
        rows.push(ResultRow::new(&cell, &r, spec.parameter()));
    }
    let text: String = rows.iter().map(summary_line).collect();
    write_out(out, &format!("episodes={} seed={}\n{text}", cfg.eval.n_episodes, cfg.eval.master_seed))?;
    if let Some(dir) = c.out_dir()? {
        write_csv(&dir.join("simulate.csv"), &rows)?;
        write_csv(&dir.join("episodes.csv"), &episodes)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct BoundsCsvRow {
    cell: String,
    m: usize,
    w: f64,
    b: f64,
    sigma: f64,
    lb_argmin: f64,
    out_ub_argmin: f64,
    pil_ub_argmin: f64,
    out_lo: i64,
    out_hi: i64,
    pil_lo: i64,
    pil_hi: i64,
    caveats: String,
}

fn bounds(c: &Common, out: &mut dyn Write) -> Result<(), Error> {
    let cfg = c.load()?;
    let mut rows = Vec::new();
    for cell in cfg.cells() {
        let cc = cfg.for_cell(&cell);
        let built = cc.build()?;
        let caveats = cc.bound_caveats(&built);
        if !caveats.is_empty() && !c.advisory {
            return Err(Error::Input(format!(
                "cell {cell}: bounds assume no fixed batch cost, no yield loss and stationary noise; found {}; pass --advisory to print them anyway",
                caveats.join(", ")
            )));
        }
        let ctx = cc.bound_context(&built);
        let out_iv = cc.interval_for(&crate::policies::PolicySpec::Out { s: 0.0 }, &built)?;
        let pil_iv = cc.interval_for(&crate::policies::PolicySpec::Pil { u: 0.0, n_paths: 1 }, &built)?;
        rows.push(BoundsCsvRow {
            cell: cell.id(),
            m: cell.lifetime,
            w: cell.expiration,
            b: cell.lost_sales,
            sigma: ctx.sigma,
            lb_argmin: lb_argmin(&ctx),
            out_ub_argmin: ub_argmin(PolicyKind::Out, &ctx)?,
            pil_ub_argmin: ub_argmin(PolicyKind::Pil, &ctx)?,
            out_lo: out_iv.0,
            out_hi: out_iv.1,
            pil_lo: pil_iv.0,
            pil_hi: pil_iv.1,
            caveats: caveats.join("; "),
        });
    }
    let id_w = rows.iter().map(|r| r.cell.len()).max().unwrap_or(4).max(4);
    let mut text = format!(
        "{:<id_w$} | {:>3} | {:>5} | {:>6} | {:>8} | {:>8} | {:>8} | {:>12} | {:>12}\n",
        "cell", "m", "w", "b", "LB", "OUT UB", "PIL UB", "OUT search", "PIL search"
    );
    for r in &rows {
        text += &format!(
            "{:<id_w$} | {:>3} | {:>5} | {:>6} | {:>8.2} | {:>8.2} | {:>8.2} | {:>12} | {:>12}\n",
            r.cell,
            r.m,
            r.w,
            r.b,
            r.lb_argmin,
            r.out_ub_argmin,
            r.pil_ub_argmin,
            format!("[{}, {}]", r.out_lo, r.out_hi),
            format!("[{}, {}]", r.pil_lo, r.pil_hi)
        );
    }
    write_out(out, &text)?;
    if let Some(dir) = c.out_dir()? {
        write_csv(&dir.join("bounds.csv"), &rows)?;
    }
    Ok(())
}

fn tuned(cfg: &Config, built: &Built) -> Result<(Vec<ResultRow>, Vec<CurveRow>), Error> {
    let cell = base_cell(cfg);
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for spec in cfg.policies.iter().filter(|p| p.parameter().is_some()) {
        let iv = cfg.interval_for(spec, built)?;
        let search = optimize_parameter(spec, iv, &built.system, &built.scenario, &cfg.eval)?;
        for (v, r) in search.candidates.iter().zip(&search.results) {
            curves.push(CurveRow {
                policy: spec.label().to_string(),
                param_value: *v,
                mean_cost: r.mean_cost,
                se_cost: r.se_cost,
            });
        }
        let mut best = search.best().clone();
        best.policy = spec.label().to_string();
        rows.push(ResultRow::new(&cell, &best, Some(search.best_value)));
    }
    Ok((rows, curves))
}

fn optimize(c: &Common, out: &mut dyn Write) -> Result<(), Error> {
    let cfg = c.load()?;
    if !cfg.policies.iter().any(|p| p.parameter().is_some()) {
        return Err(Error::Config("policies: no OUT or PIL policy to tune".into()));
    }
    let built = cfg.build()?;
    let (rows, curves) = tuned(&cfg, &built)?;
    let mut text = String::new();
    for r in &rows {
        text += "curve:";
        for cr in curves.iter().filter(|x| x.policy == r.policy) {
            text += &format!(" {}={:.2}", cr.param_value, cr.mean_cost);
        }
        text += "\n";
        text += &summary_line(r);
    }
    write_out(out, &text)?;
    if let Some(dir) = c.out_dir()? {
        write_csv(&dir.join("optimize.csv"), &rows)?;
        write_csv(&dir.join("curves.csv"), &curves)?;
    }
    Ok(())
}

fn experiment(c: &Common, out: &mut dyn Write) -> Result<(), Error> {
    let cfg = c.load()?;
    let dir = c
        .out_dir()?
        .ok_or_else(|| Error::Input("experiment needs --out".into()))?
        .to_path_buf();
    let total = cfg.cells().len();
    let mut k = 0;
    let summary = run_experiment(&cfg, &dir, |cell, status| {
        k += 1;
        eprintln!("[{k}/{total}] {cell}: {status}");
    })?;
    write_out(
        out,
        &format!(
            "cells={} ran={} resumed={} failed={} out={}\n",
            summary.cells,
            summary.ran,
            summary.resumed,
            summary.failed,
            dir.display()
        ),
    )
}

fn make_session(cfg: &Config) -> Result<Session, Error> {
    let built = cfg.build()?;
    let cap = derive_action_cap(&built.system, &built.scenario, &cfg.bound_context(&built));
    Ok(Session::new(built.system, built.scenario, cfg.bridge, cap))
}

fn serve(c: &Common, stdio: bool, port: Option<u16>, host: &str) -> Result<(), Error> {
    let cfg = c.load()?;
    let mut probe = make_session(&cfg)?;
    let io_err = |e: io::Error| Error::Runtime(format!("serve-env: {e}"));
    match (stdio, port) {
        (true, _) | (false, None) => {
            let stdin = io::stdin();
            serve_lines(&mut probe, stdin.lock(), io::stdout().lock()).map_err(io_err)
        }
        (false, Some(p)) => serve_tcp(
            (host, p),
            move || make_session(&cfg).expect("config was already built once"),
            |addr| eprintln!("listening on {addr}"),
        )
        .map_err(io_err),
    }
}
