//! Command implementations behind the `tailwright` binary.

pub mod args;
mod points;
pub mod report;

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tailwright::dist::{fit_powerlaw_with, ModelFamily, ModelRegistry};
use tailwright::elfarol::{self, GameConfig, SweepResult, KL_WINDOW};
use tailwright::gof::{
    cross_validated_bic, kl_divergence_tail, with_pvalue, EmpiricalDist, BIC_PENALTY_N, MIN_N_BOOT,
};
use tailwright::ingest::{self, PairData};
use tailwright::json_float;

use args::{
    Cli, Command, CompareArgs, FitArgs, GameArgs, InputArgs, ModelArgs, PowerlawArgs, ReportArgs,
    SeedArgs, SimulateArgs, SweepArgs, TailArgs,
};
use report::{
    build_tables, write_table3, write_tables, Metadata, PowerLawReport, Report, ReportKind,
    SeedSource, SeriesReport, Table3Row, SCHEMA_VERSION,
};

pub const SEED_ENV: &str = "TAILWRIGHT_SEED";
pub const DEFAULT_SEED: u64 = 0;
const KL_BINNING: &str = "unit bins centred on integer waiting times, base 2";

/// Bad flags or configuration; the binary exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Whether `err` stems from bad flags or configuration rather than from the data.
pub fn is_usage_error(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<UsageError>() || matches!(e.downcast_ref::<tailwright::Error>(), Some(tailwright::Error::Config(_)))
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Powerlaw(a) => cmd_powerlaw(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Report(a) => cmd_report(&a),
    }
}

/// `--seed`, else `TAILWRIGHT_SEED`, else [`DEFAULT_SEED`].
pub fn resolve_seed(flag: &SeedArgs) -> Result<(u64, SeedSource)> {
    if let Some(s) = flag.seed {
        return Ok((s, SeedSource::Flag));
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(|s| (s, SeedSource::Env))
            .map_err(|_| usage(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok((DEFAULT_SEED, SeedSource::Default)),
    }
}

fn select_models(m: &ModelArgs) -> Result<Vec<Arc<dyn ModelFamily>>> {
    if m.folds < 2 {
        return Err(usage(format!("--folds must be at least 2, got {}", m.folds)));
    }
    let registry = ModelRegistry::with_defaults();
    registry.select(&m.models).map_err(|e| usage(e.to_string()))
}

fn check_tail(t: &TailArgs) -> Result<()> {
    if t.n_boot < MIN_N_BOOT {
        return Err(usage(format!("--n-boot must be at least {MIN_N_BOOT}, got {}", t.n_boot)));
    }
    Ok(())
}

fn load_pairs(input: &InputArgs) -> Result<Vec<PairData>> {
    let series = ingest::parse_events(&input.input, input.session_length)
        .with_context(|| format!("reading events from {}", input.input.display()))?;
    Ok(ingest::group_by_pair(&series))
}

/// What to compute for each series.
struct Plan {
    families: Vec<Arc<dyn ModelFamily>>,
    folds: usize,
    tail: Option<TailArgs>,
    seed: u64,
}

fn powerlaw_report(values: &[u64], tail: &TailArgs, seed: u64) -> tailwright::Result<PowerLawReport> {
    let fit = fit_powerlaw_with(values, tail.tail_statistic)?;
    let fit = with_pvalue(values, fit, tail.n_boot, seed)?;
    let emp = EmpiricalDist::from_values(values)?;
    let tail_kl = kl_divergence_tail(&emp, &fit.model()?, fit.tau_min)?;
    Ok(PowerLawReport { fit, tail_kl })
}

fn analyse(pair: &PairData, plan: &Plan) -> SeriesReport {
    let mut warnings = Vec::new();
    let w = &pair.waiting;
    let comparison = if plan.families.is_empty() {
        None
    } else {
        cross_validated_bic(w, &plan.families, plan.folds, plan.seed)
            .map_err(|e| warnings.push(format!("model comparison skipped: {e}")))
            .ok()
    };
    let powerlaw = plan.tail.as_ref().and_then(|t| {
        powerlaw_report(&w.values, t, plan.seed)
            .map_err(|e| warnings.push(format!("power-law test skipped: {e}")))
            .ok()
    });
    for msg in &warnings {
        log::warn!("{}: {msg}", pair.pair_side);
    }
    SeriesReport {
        pair_side: pair.pair_side.clone(),
        n_events: pair.n_events,
        n_sessions: pair.n_sessions,
        n_waiting_times: w.len(),
        n_zero_collapsed: w.n_zero_collapsed,
        mean_interval: pair.mean_interval().ok(),
        comparison,
        powerlaw,
        warnings,
    }
}

/// Independent series run concurrently; results keep input order.
fn analyse_all(pairs: &[PairData], plan: &Plan) -> Vec<SeriesReport> {
    pairs.par_iter().map(|p| analyse(p, plan)).collect()
}

fn metadata(command: &str, input: &InputArgs, seed: (u64, SeedSource)) -> Metadata {
    Metadata {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        input: input.input.display().to_string(),
        session_length: input.session_length,
        seed: seed.0,
        seed_source: seed.1,
        models: Vec::new(),
        folds: None,
        bic_penalty_n: None,
        n_boot: None,
        selection_statistic: None,
        kl_binning: KL_BINNING.into(),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let families = select_models(&a.models)?;
    check_tail(&a.tail)?;
    let seed = resolve_seed(&a.seed)?;
    let pairs = load_pairs(&a.input)?;
    let plan = Plan {
        families,
        folds: a.models.folds,
        tail: Some(a.tail.clone()),
        seed: seed.0,
    };
    let series = analyse_all(&pairs, &plan);

    let mut meta = metadata("fit", &a.input, seed);
    meta.models = plan.families.iter().map(|f| f.name().to_string()).collect();
    meta.folds = Some(plan.folds);
    meta.bic_penalty_n = Some(BIC_PENALTY_N.into());
    meta.n_boot = Some(a.tail.n_boot);
    meta.selection_statistic = Some(a.tail.tail_statistic);
    let report = Report {
        schema_version: SCHEMA_VERSION,
        kind: ReportKind::Fit,
        metadata: meta,
        series,
    };

    std::fs::create_dir_all(&a.output).with_context(|| format!("creating {}", a.output.display()))?;
    write_text(&a.output.join("fit_report.json"), &report.to_json()?)?;
    for (pair, s) in pairs.iter().zip(&report.series) {
        points::write_point_files(&a.output.join("points"), pair, s)?;
    }
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let families = select_models(&a.models)?;
    let seed = resolve_seed(&a.seed)?;
    let pairs = load_pairs(&a.input)?;
    let plan = Plan {
        families,
        folds: a.models.folds,
        tail: None,
        seed: seed.0,
    };
    let series = analyse_all(&pairs, &plan);
    let mut meta = metadata("compare", &a.input, seed);
    meta.models = plan.families.iter().map(|f| f.name().to_string()).collect();
    meta.folds = Some(plan.folds);
    meta.bic_penalty_n = Some(BIC_PENALTY_N.into());
    let report = Report {
        schema_version: SCHEMA_VERSION,
        kind: ReportKind::Compare,
        metadata: meta,
        series,
    };
    write_text(&a.output, &report.to_json()?)
}

/// `dir/name.csv` becomes `dir/name.json`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("json")
}

fn cmd_powerlaw(a: &PowerlawArgs) -> Result<()> {
    check_tail(&a.tail)?;
    let seed = resolve_seed(&a.seed)?;
    let pairs = load_pairs(&a.input)?;
    let plan = Plan {
        families: Vec::new(),
        folds: 0,
        tail: Some(a.tail.clone()),
        seed: seed.0,
    };
    let series = analyse_all(&pairs, &plan);
    let mut meta = metadata("powerlaw", &a.input, seed);
    meta.n_boot = Some(a.tail.n_boot);
    meta.selection_statistic = Some(a.tail.tail_statistic);
    let report = Report {
        schema_version: SCHEMA_VERSION,
        kind: ReportKind::Powerlaw,
        metadata: meta,
        series,
    };
    let rows: Vec<Table3Row> = report.series.iter().map(Table3Row::from_series).collect();
    if let Some(dir) = a.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_table3(&rows, &a.output)?;
    write_text(&sidecar_path(&a.output), &report.to_json()?)
}

/// Game settings as they may appear in a `--config` file; all optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    n_agents: Option<usize>,
    memory: Option<u32>,
    n_strategies: Option<usize>,
    offer_size: Option<usize>,
    n_steps: Option<u64>,
    burn_in: Option<u64>,
    seed: Option<u64>,
    // Written into simulate sidecars; accepted and ignored so a sidecar can
    // be passed back as `--config`.
    #[serde(default, rename = "tool")]
    _tool: Option<String>,
    #[serde(default, rename = "version")]
    _version: Option<String>,
    #[serde(default, rename = "seed_source")]
    _seed_source: Option<SeedSource>,
    #[serde(default, rename = "pair_side")]
    _pair_side: Option<String>,
    #[serde(default, rename = "session_length")]
    _session_length: Option<u64>,
    #[serde(default, rename = "n_events")]
    _n_events: Option<usize>,
}

/// Defaults: N=10, m=2, s=7, L=3, 10^5 steps.
pub fn game_config(a: &GameArgs) -> Result<(GameConfig, SeedSource)> {
    let file = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<GameFile>(&text)
                .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => GameFile::default(),
    };
    let seed = match (a.seed.seed, file.seed) {
        (Some(s), _) => (s, SeedSource::Flag),
        (None, Some(s)) => (s, SeedSource::Config),
        (None, None) => resolve_seed(&a.seed)?,
    };
    let mut cfg = GameConfig::new(
        a.agents.or(file.n_agents).unwrap_or(10),
        a.memory.or(file.memory).unwrap_or(2),
        a.strategies.or(file.n_strategies).unwrap_or(7),
        a.offer.or(file.offer_size).unwrap_or(3),
        a.steps.or(file.n_steps).unwrap_or(100_000),
        seed.0,
    );
    if let Some(b) = a.burn_in.or(file.burn_in) {
        cfg.burn_in = b;
    }
    cfg.validate()?;
    Ok((cfg, seed.1))
}

#[derive(Debug, Serialize)]
struct SimulationSidecar<'a> {
    tool: &'static str,
    version: &'static str,
    #[serde(flatten)]
    config: &'a GameConfig,
    seed_source: SeedSource,
    pair_side: &'a str,
    session_length: u64,
    n_events: usize,
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let (cfg, seed_source) = game_config(&a.game)?;
    if a.session_length == 0 {
        return Err(usage("--session-length must be positive"));
    }
    if a.pair_side.is_empty() {
        return Err(usage("--pair-side must be non-empty"));
    }
    let mut series = elfarol::run_game(&cfg)?;
    series.pair_side = a.pair_side.clone();
    let days = ingest::split_sessions(&series, a.session_length)?;
    if let Some(dir) = a.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    ingest::write_events_file(&a.output, &days)
        .with_context(|| format!("writing {}", a.output.display()))?;
    let sidecar = SimulationSidecar {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: &cfg,
        seed_source,
        pair_side: &a.pair_side,
        session_length: a.session_length,
        n_events: series.len(),
    };
    write_text(&sidecar_path(&a.output), &(serde_json::to_string_pretty(&sidecar)? + "\n"))
}

#[derive(Debug, Serialize)]
struct SweepEntry {
    #[serde(flatten)]
    result: SweepResult,
    #[serde(with = "json_float")]
    kl: f64,
}

#[derive(Debug, Serialize)]
struct SweepBest {
    n_agents: usize,
    offer_size: usize,
    #[serde(with = "json_float")]
    kl: f64,
}

#[derive(Debug, Serialize)]
struct SweepTarget {
    pair_side: String,
    n_waiting_times: usize,
    /// Counts of waiting times 1..=11.
    histogram: Vec<u64>,
}

#[derive(Debug, Serialize)]
struct SweepOutput {
    schema_version: u32,
    kind: &'static str,
    tool: &'static str,
    version: &'static str,
    input: String,
    seed: u64,
    seed_source: SeedSource,
    kl_window: [u64; 2],
    target: SweepTarget,
    results: Vec<SweepEntry>,
    best: Option<SweepBest>,
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    if a.agents_grid.is_empty() || a.offer_grid.is_empty() {
        return Err(usage("--agents-grid and --offer-grid must be non-empty"));
    }
    let (base, seed_source) = game_config(&a.game)?;
    let input = InputArgs {
        input: a.input.clone(),
        session_length: a.session_length,
    };
    let pairs = load_pairs(&input)?;
    let target = match &a.pair_side {
        Some(p) => pairs
            .iter()
            .find(|d| &d.pair_side == p)
            .ok_or_else(|| usage(format!("pair_side {p} not found in {}", a.input.display())))?,
        None => pairs.first().context("input has no series")?,
    };
    let configs = elfarol::grid(&base, &a.agents_grid, &a.offer_grid);
    let results = elfarol::sweep(&configs)?;
    let kls: Vec<f64> = results.iter().map(|r| elfarol::window_kl(&target.waiting, r)).collect();
    let best = elfarol::best_by_kl(&target.waiting, &results).map(|(i, kl)| SweepBest {
        n_agents: results[i].config.n_agents,
        offer_size: results[i].config.offer_size,
        kl,
    });
    if let Some(b) = &best {
        log::info!("best match: N = {}, L = {} (K-L {:.4} bits)", b.n_agents, b.offer_size, b.kl);
    }
    let mut histogram = vec![0u64; *KL_WINDOW.end() as usize];
    for &v in &target.waiting.values {
        if KL_WINDOW.contains(&v) {
            histogram[v as usize - 1] += 1;
        }
    }
    let out = SweepOutput {
        schema_version: SCHEMA_VERSION,
        kind: "sweep",
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        input: a.input.display().to_string(),
        seed: base.seed,
        seed_source,
        kl_window: [*KL_WINDOW.start(), *KL_WINDOW.end()],
        target: SweepTarget {
            pair_side: target.pair_side.clone(),
            n_waiting_times: target.waiting.len(),
            histogram,
        },
        results: results
            .into_iter()
            .zip(kls)
            .map(|(result, kl)| SweepEntry { result, kl })
            .collect(),
        best,
    };
    write_text(&a.output, &(serde_json::to_string_pretty(&out)? + "\n"))
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let reports = a
        .inputs
        .iter()
        .map(|p| Report::read(p))
        .collect::<Result<Vec<_>>>()?;
    let tables = build_tables(&reports);
    write_tables(&tables, &a.output)
}
