use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_game, GameConfig};
use crate::error::{Error, Result};
use crate::ingest::{waiting_times, WaitingTimes};

/// Waiting times compared against a target when searching parameters.
pub const KL_WINDOW: RangeInclusive<u64> = 1..=11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: GameConfig,
    /// `histogram[i]` counts waiting times equal to `i + 1`, for `i + 1` in
    /// [`KL_WINDOW`].
    pub histogram: Vec<u64>,
    /// Waiting times beyond the window.
    pub n_longer: u64,
    pub n_events: usize,
    #[serde(with = "crate::json_float")]
    pub mean_waiting_time: f64,
}

fn window_histogram(values: &[u64]) -> (Vec<u64>, u64) {
    let mut hist = vec![0u64; *KL_WINDOW.end() as usize];
    let mut longer = 0;
    for &v in values {
        if KL_WINDOW.contains(&v) {
            hist[v as usize - 1] += 1;
        } else {
            longer += 1;
        }
    }
    (hist, longer)
}

fn summarize(config: &GameConfig) -> Result<SweepResult> {
    let events = run_game(config)?;
    let n_events = events.len();
    let values = if n_events >= 2 {
        waiting_times(&events)?.values
    } else {
        Vec::new()
    };
    let (histogram, n_longer) = window_histogram(&values);
    let mean_waiting_time = if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<u64>() as f64 / values.len() as f64
    };
    Ok(SweepResult {
        config: config.clone(),
        histogram,
        n_longer,
        n_events,
        mean_waiting_time,
    })
}

/// Run every configuration (in parallel) and summarise its waiting times.
/// Results come back in input order.
pub fn sweep(configs: &[GameConfig]) -> Result<Vec<SweepResult>> {
    if configs.is_empty() {
        return Err(Error::Config("sweep needs at least one configuration".into()));
    }
    configs.par_iter().map(summarize).collect()
}

/// Every `(N, L)` combination on top of `base`, `N` varying slowest.
pub fn grid(base: &GameConfig, agents: &[usize], offers: &[usize]) -> Vec<GameConfig> {
    agents
        .iter()
        .flat_map(|&n| {
            offers.iter().map(move |&l| GameConfig {
                n_agents: n,
                offer_size: l,
                ..base.clone()
            })
        })
        .collect()
}

/// K-L divergence (bits) of the simulated window distribution from the
/// target's, both renormalised to [`KL_WINDOW`]. Infinite when the
/// simulation misses a waiting time the target has, or has no waiting times
/// in the window at all.
pub fn window_kl(target: &WaitingTimes, result: &SweepResult) -> f64 {
    let (p, _) = window_histogram(&target.values);
    let p_total: u64 = p.iter().sum();
    let q_total: u64 = result.histogram.iter().sum();
    if p_total == 0 || q_total == 0 {
        return f64::INFINITY;
    }
    let mut kl = 0.0;
    for (&pc, &qc) in p.iter().zip(&result.histogram) {
        if pc == 0 {
            continue;
        }
        if qc == 0 {
            return f64::INFINITY;
        }
        let pi = pc as f64 / p_total as f64;
        let qi = qc as f64 / q_total as f64;
        kl += pi * (pi / qi).log2();
    }
    kl
}

/// Index and divergence of the result closest to `target`; ties go to the
/// earlier result.
pub fn best_by_kl(target: &WaitingTimes, results: &[SweepResult]) -> Option<(usize, f64)> {
    results
        .iter()
        .map(|r| window_kl(target, r))
        .enumerate()
        .fold(None, |best, (i, kl)| match best {
            Some((_, b)) if !(kl < b) => best,
            _ => Some((i, kl)),
        })
}
