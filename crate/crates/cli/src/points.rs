//! Diagnostic point files written by `fit`: two numeric columns per file,
//! finite values only, ready for any plotting tool.
//!
//! Per series, under `points/<pair_side>/`:
//!
//! - `ccdf_semilog.csv` (`tau,ln_ccdf`): a straight line means exponential.
//! - `weibull_plot.csv` (`ln_tau,y`) with `y = ln(-ln(1 - P(tau)))`: a
//!   straight line of slope `k` means Weibull with shape `k`.
//! - `ccdf_loglog.csv` (`ln_tau,ln_ccdf`): a straight tail means power law.
//! - `fit_<model>.csv` (`tau,ln_ccdf`): each fitted model's reverse
//!   cumulative at the observed waiting times. The power law's is scaled by
//!   its tail fraction so it overlays the empirical curve.
//!
//! The reverse cumulative is `P(tau' >= tau)`.

use std::path::Path;

use anyhow::{Context, Result};
use tailwright::dist::{DistModel, WaitingTimeDistribution};
use tailwright::gof::EmpiricalDist;
use tailwright::ingest::PairData;

use crate::report::SeriesReport;

/// Keep file names portable.
fn safe_name(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_xy(path: &Path, header: [&str; 2], points: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for (x, y) in points {
        if x.is_finite() && y.is_finite() {
            w.write_record([x.to_string(), y.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Model `P(tau' >= tau)` on the same unit bins the K-L divergence uses.
fn model_ccdf(model: &DistModel, tau: u64) -> f64 {
    match model {
        DistModel::PowerLaw(m) => m.survival_from(tau),
        m => m.sf((tau as f64 - 0.5).max(0.5)).unwrap_or(f64::NAN),
    }
}

pub fn write_point_files(root: &Path, pair: &PairData, report: &SeriesReport) -> Result<()> {
    let Ok(emp) = EmpiricalDist::from_values(&pair.waiting.values) else {
        return Ok(());
    };
    let dir = root.join(safe_name(&pair.pair_side));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let ccdf = emp.ccdf();
    let n = emp.n as f64;
    write_xy(
        &dir.join("ccdf_semilog.csv"),
        ["tau", "ln_ccdf"],
        emp.support.iter().zip(&ccdf).map(|(&t, &p)| (t as f64, p.ln())),
    )?;
    write_xy(
        &dir.join("ccdf_loglog.csv"),
        ["ln_tau", "ln_ccdf"],
        emp.support.iter().zip(&ccdf).map(|(&t, &p)| ((t as f64).ln(), p.ln())),
    )?;
    // 1 - P(tau) is the count strictly above tau, kept exact as a ratio of counts.
    let mut above = emp.n as u64;
    let weibull = emp.support.iter().zip(&emp.counts).map(|(&t, &c)| {
        above -= c;
        let survival = above as f64 / n;
        ((t as f64).ln(), (-survival.ln()).ln())
    });
    write_xy(&dir.join("weibull_plot.csv"), ["ln_tau", "y"], weibull.collect::<Vec<_>>())?;

    let mut fits: Vec<(String, DistModel, f64)> = Vec::new();
    if let Some(c) = &report.comparison {
        for m in &c.models {
            let scale = match &m.fit.model {
                DistModel::PowerLaw(p) => {
                    emp.counts[emp.lower_bound(p.tau_min)..].iter().sum::<u64>() as f64 / n
                }
                _ => 1.0,
            };
            fits.push((m.model.clone(), m.fit.model.clone(), scale));
        }
    }
    if let Some(p) = &report.powerlaw {
        if !fits.iter().any(|(name, _, _)| name == "powerlaw") {
            if let Ok(m) = p.fit.model() {
                fits.push(("powerlaw".into(), DistModel::PowerLaw(m), p.fit.tail_fraction));
            }
        }
    }
    for (name, model, scale) in &fits {
        let lower = match model {
            DistModel::PowerLaw(m) => m.tau_min,
            _ => 0,
        };
        write_xy(
            &dir.join(format!("fit_{}.csv", safe_name(name))),
            ["tau", "ln_ccdf"],
            emp.support
                .iter()
                .filter(|&&t| t >= lower)
                .map(|&t| (t as f64, (scale * model_ccdf(model, t)).ln())),
        )?;
    }
    Ok(())
}
