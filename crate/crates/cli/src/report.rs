//! JSON report schema shared by `fit`, `compare` and `powerlaw`, and the
//! table layouts produced from it.
//!
//! Table column orders are fixed:
//!
//! - `table1.csv`: `pair_side, mean_interval, kl_<model>..., winner_by_kl`
//! - `table2.csv`: `pair_side, model, bic_fold_1..bic_fold_k, bic_cv`
//! - `table3.csv`: `pair_side, alpha, tau_min, p_value, dstar,
//!   tail_fraction, tail_kl, mean_interval, status`
//!
//! Rows are ordered by ascending mean interval (series without one last),
//! ties keeping input order. Numbers are rounded to 4 significant figures;
//! `tables.json` carries the same rows at full precision.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tailwright::dist::TailStatistic;
use tailwright::gof::{ModelComparison, PowerLawFit};
use tailwright::json_float;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Fit,
    Compare,
    Powerlaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedSource {
    Flag,
    Config,
    Env,
    Default,
}

/// Everything needed to reproduce a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input: String,
    pub session_length: u64,
    pub seed: u64,
    pub seed_source: SeedSource,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bic_penalty_n: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_boot: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection_statistic: Option<TailStatistic>,
    /// How K-L divergences were binned.
    pub kl_binning: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawReport {
    pub fit: PowerLawFit,
    /// K-L divergence (bits) of the tail sample from the fitted power law.
    #[serde(with = "json_float")]
    pub tail_kl: f64,
}

/// Results for one pair/side, all days pooled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub pair_side: String,
    pub n_events: usize,
    pub n_sessions: usize,
    pub n_waiting_times: usize,
    pub n_zero_collapsed: usize,
    /// Session seconds per price change.
    #[serde(with = "json_float::option")]
    pub mean_interval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ModelComparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powerlaw: Option<PowerLawReport>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub kind: ReportKind,
    pub metadata: Metadata,
    pub series: Vec<SeriesReport>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Read a report, refusing any schema version other than this one.
    pub fn read(path: &Path) -> Result<Report> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Report::parse(&text).with_context(|| format!("in report {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Report> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("schema_version").map(|v| v.as_u64()) {
            Some(Some(v)) if v == SCHEMA_VERSION as u64 => {}
            Some(Some(v)) => bail!(
                "schema version mismatch: report has version {v}, this tool reads version {SCHEMA_VERSION}"
            ),
            _ => bail!("not a report: missing schema_version (expected version {SCHEMA_VERSION})"),
        }
        Ok(serde_json::from_value(value)?)
    }
}

/// Round to 4 significant figures for table output. Non-finite values
/// print as `inf`, `-inf` or `NaN`.
pub fn sig4(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return json_float_name(x).into();
    }
    let rounded: f64 = format!("{x:.3e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn json_float_name(x: f64) -> &'static str {
    if x.is_nan() {
        "NaN"
    } else if x > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

fn opt4(x: Option<f64>) -> String {
    x.map(sig4).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub pair_side: String,
    #[serde(with = "json_float::option")]
    pub mean_interval: Option<f64>,
    /// K-L divergence per model, in table column order.
    #[serde(with = "json_float::vec")]
    pub kl: Vec<f64>,
    pub winner_by_kl: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Row {
    pub pair_side: String,
    pub model: String,
    #[serde(with = "json_float::vec")]
    pub bic_folds: Vec<f64>,
    #[serde(with = "json_float")]
    pub bic_cv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table3Row {
    pub pair_side: String,
    pub alpha: Option<f64>,
    pub tau_min: Option<u64>,
    pub p_value: Option<f64>,
    pub dstar: Option<f64>,
    pub tail_fraction: Option<f64>,
    #[serde(with = "json_float::option")]
    pub tail_kl: Option<f64>,
    #[serde(with = "json_float::option")]
    pub mean_interval: Option<f64>,
    /// `ok`, or why the row is empty.
    pub status: String,
}

impl Table3Row {
    pub fn from_series(s: &SeriesReport) -> Self {
        let pl = s.powerlaw.as_ref();
        let status = match pl {
            Some(_) => "ok".to_string(),
            None => s
                .warnings
                .iter()
                .find(|w| w.starts_with("power-law"))
                .cloned()
                .unwrap_or_else(|| "power-law test not run".into()),
        };
        Table3Row {
            pair_side: s.pair_side.clone(),
            alpha: pl.map(|p| p.fit.alpha),
            tau_min: pl.map(|p| p.fit.tau_min),
            p_value: pl.and_then(|p| p.fit.p_value),
            dstar: pl.map(|p| p.fit.dstar),
            tail_fraction: pl.map(|p| p.fit.tail_fraction),
            tail_kl: pl.map(|p| p.tail_kl),
            mean_interval: s.mean_interval,
            status,
        }
    }

    pub const HEADER: [&'static str; 9] = [
        "pair_side",
        "alpha",
        "tau_min",
        "p_value",
        "dstar",
        "tail_fraction",
        "tail_kl",
        "mean_interval",
        "status",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.pair_side.clone(),
            opt4(self.alpha),
            self.tau_min.map(|t| t.to_string()).unwrap_or_default(),
            opt4(self.p_value),
            opt4(self.dstar),
            opt4(self.tail_fraction),
            opt4(self.tail_kl),
            opt4(self.mean_interval),
            self.status.clone(),
        ]
    }
}

/// The three tables built from one or more reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tables {
    pub models: Vec<String>,
    pub table1: Vec<Table1Row>,
    pub table2: Vec<Table2Row>,
    pub table3: Vec<Table3Row>,
}

/// Merge the series of several reports. A pair/side appearing in more than
/// one report keeps its first entry, with missing sections filled in from
/// later ones.
pub fn merge_series(reports: &[Report]) -> Vec<SeriesReport> {
    let mut merged: Vec<SeriesReport> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for s in reports.iter().flat_map(|r| &r.series) {
        match index.get(&s.pair_side) {
            Some(&i) => {
                let m = &mut merged[i];
                if m.comparison.is_none() {
                    m.comparison = s.comparison.clone();
                }
                if m.powerlaw.is_none() {
                    m.powerlaw = s.powerlaw.clone();
                }
                if m.mean_interval.is_none() {
                    m.mean_interval = s.mean_interval;
                }
                for w in &s.warnings {
                    if !m.warnings.contains(w) {
                        m.warnings.push(w.clone());
                    }
                }
            }
            None => {
                index.insert(s.pair_side.clone(), merged.len());
                merged.push(s.clone());
            }
        }
    }
    merged
}

pub fn build_tables(reports: &[Report]) -> Tables {
    let mut series = merge_series(reports);
    // Stable: equal (or missing) intervals keep input order.
    series.sort_by(|a, b| {
        let key = |s: &SeriesReport| s.mean_interval.filter(|m| m.is_finite()).unwrap_or(f64::INFINITY);
        key(a).total_cmp(&key(b))
    });

    let mut models: Vec<String> = Vec::new();
    for s in &series {
        for m in s.comparison.iter().flat_map(|c| &c.models) {
            if !models.contains(&m.model) {
                models.push(m.model.clone());
            }
        }
    }

    let mut table1 = Vec::new();
    let mut table2 = Vec::new();
    for s in &series {
        let Some(c) = &s.comparison else { continue };
        table1.push(Table1Row {
            pair_side: s.pair_side.clone(),
            mean_interval: s.mean_interval,
            kl: models
                .iter()
                .map(|name| c.score(name).map_or(f64::NAN, |m| m.kl_divergence))
                .collect(),
            winner_by_kl: c.winner_by_kl.clone(),
        });
        for m in &c.models {
            table2.push(Table2Row {
                pair_side: s.pair_side.clone(),
                model: m.model.clone(),
                bic_folds: m.bic_folds.clone(),
                bic_cv: m.bic_cv,
            });
        }
    }
    let table3 = series.iter().map(Table3Row::from_series).collect();
    Tables {
        models,
        table1,
        table2,
        table3,
    }
}

/// Write table1.csv, table2.csv, table3.csv and tables.json into `dir`.
pub fn write_tables(tables: &Tables, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut w = csv::Writer::from_path(dir.join("table1.csv"))?;
    let mut header = vec!["pair_side".to_string(), "mean_interval".to_string()];
    header.extend(tables.models.iter().map(|m| format!("kl_{m}")));
    header.push("winner_by_kl".into());
    w.write_record(&header)?;
    for r in &tables.table1 {
        let mut rec = vec![r.pair_side.clone(), opt4(r.mean_interval)];
        rec.extend(r.kl.iter().map(|&x| sig4(x)));
        rec.push(r.winner_by_kl.clone());
        w.write_record(&rec)?;
    }
    w.flush()?;

    let folds = tables.table2.iter().map(|r| r.bic_folds.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_path(dir.join("table2.csv"))?;
    let mut header = vec!["pair_side".to_string(), "model".to_string()];
    header.extend((1..=folds).map(|f| format!("bic_fold_{f}")));
    header.push("bic_cv".into());
    w.write_record(&header)?;
    for r in &tables.table2 {
        let mut rec = vec![r.pair_side.clone(), r.model.clone()];
        rec.extend((0..folds).map(|f| r.bic_folds.get(f).map(|&x| sig4(x)).unwrap_or_default()));
        rec.push(sig4(r.bic_cv));
        w.write_record(&rec)?;
    }
    w.flush()?;

    write_table3(&tables.table3, &dir.join("table3.csv"))?;

    std::fs::write(dir.join("tables.json"), serde_json::to_string_pretty(tables)? + "\n")?;
    Ok(())
}

pub fn write_table3(rows: &[Table3Row], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(Table3Row::HEADER)?;
    for r in rows {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}
