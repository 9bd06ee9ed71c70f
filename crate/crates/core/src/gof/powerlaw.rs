//! Semi-parametric bootstrap p-value for a discrete power-law tail.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::powerlaw::{scan_cutoffs, TailStatistic, MIN_SCAN_SIZE};
use crate::dist::{DiscretePowerLawModel, PowerLawSampler};
use crate::error::{Error, Result};
use crate::ingest::WaitingTimes;

pub const DEFAULT_N_BOOT: usize = 1000;
pub const MIN_N_BOOT: usize = 100;

/// Values below this are histogrammed densely in each replicate.
const DENSE_SPAN: u64 = 1 << 16;

/// A fitted power-law tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub tau_min: u64,
    /// Tail KS distance.
    #[serde(with = "crate::json_float")]
    pub ks_distance: f64,
    /// Weighted KS distance on the tail.
    #[serde(with = "crate::json_float")]
    pub dstar: f64,
    pub p_value: Option<f64>,
    /// Half-width of the 95% binomial interval on `p_value`.
    pub p_value_stderr: Option<f64>,
    /// Replicates that produced a statistic.
    pub n_boot: Option<usize>,
    pub tail_fraction: f64,
    pub n_tail: usize,
    pub n: usize,
    /// Tail log-likelihood at the fitted exponent.
    #[serde(with = "crate::json_float")]
    pub loglik: f64,
    /// Which distance chose `tau_min` and drives the bootstrap.
    pub selection_statistic: TailStatistic,
}

impl PowerLawFit {
    pub fn model(&self) -> Result<DiscretePowerLawModel> {
        DiscretePowerLawModel::new(self.alpha, self.tau_min)
    }

    /// Observed value of the selection statistic.
    pub fn selected_distance(&self) -> f64 {
        match self.selection_statistic {
            TailStatistic::Ks => self.ks_distance,
            TailStatistic::Dstar => self.dstar,
        }
    }

    /// The conventional reading: `p > 0.1` means the power law is not rejected.
    pub fn plausible(&self) -> Option<bool> {
        self.p_value.map(|p| p > 0.1)
    }
}

/// Bootstrap p-value of `fit` on `data`, which must be the sample `fit` was
/// obtained from.
pub fn powerlaw_pvalue(data: &WaitingTimes, fit: &PowerLawFit, n_boot: usize, seed: u64) -> Result<f64> {
    let stats = bootstrap_statistics(&data.values, fit, n_boot, seed)?;
    pvalue_from_statistics(&stats, fit.selected_distance())
}

/// `fit` with its p-value fields filled in.
pub fn with_pvalue(data: &[u64], fit: PowerLawFit, n_boot: usize, seed: u64) -> Result<PowerLawFit> {
    let stats = bootstrap_statistics(data, &fit, n_boot, seed)?;
    let p = pvalue_from_statistics(&stats, fit.selected_distance())?;
    let valid = stats.iter().flatten().count();
    Ok(PowerLawFit {
        p_value: Some(p),
        p_value_stderr: Some(1.96 * (p * (1.0 - p) / valid as f64).sqrt()),
        n_boot: Some(valid),
        ..fit
    })
}

/// Selection statistic (the one `fit` used) of each bootstrap replicate; `None` where the
/// replicate's refit failed.
///
/// Each replicate draws `n` points: with probability `n_tail / n` from the
/// fitted power law, otherwise uniformly from the observed values below
/// `tau_min`. It is then refitted with the full cutoff scan. Replicate `r`
/// uses stream `r` of a ChaCha8 generator seeded with `seed`, so the result
/// does not depend on how replicates are scheduled across threads.
pub fn bootstrap_statistics(
    data: &[u64],
    fit: &PowerLawFit,
    n_boot: usize,
    seed: u64,
) -> Result<Vec<Option<f64>>> {
    if n_boot < MIN_N_BOOT {
        return Err(Error::Config(format!(
            "n_boot must be at least {MIN_N_BOOT}, got {n_boot}"
        )));
    }
    if data.len() < MIN_SCAN_SIZE {
        return Err(Error::InsufficientData {
            needed: MIN_SCAN_SIZE,
            got: data.len(),
        });
    }
    let model = fit.model()?;
    let sampler = PowerLawSampler::new(&model);
    let body: Vec<u64> = data.iter().copied().filter(|&x| x < fit.tau_min).collect();
    let n = data.len();
    let p_tail = (n - body.len()) as f64 / n as f64;
    let dense_len = (fit.tau_min + DENSE_SPAN) as usize;
    let statistic = fit.selection_statistic;

    let stats = (0..n_boot)
        .into_par_iter()
        .map_init(
            || Replicate::new(dense_len),
            |rep, r| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r as u64);
                rep.clear();
                for _ in 0..n {
                    let x = if body.is_empty() || rng.random::<f64>() < p_tail {
                        sampler.sample(&mut rng)
                    } else {
                        body[rng.random_range(0..body.len())]
                    };
                    rep.push(x);
                }
                rep.statistic(statistic)
            },
        )
        .collect();
    Ok(stats)
}

/// Fraction of valid replicate statistics at or above `observed`.
pub fn pvalue_from_statistics(stats: &[Option<f64>], observed: f64) -> Result<f64> {
    let valid: Vec<f64> = stats.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(Error::Degenerate("every bootstrap replicate failed to fit".into()));
    }
    let above = valid.iter().filter(|&&s| s >= observed).count();
    Ok(above as f64 / valid.len() as f64)
}

/// Reusable histogram for one replicate.
struct Replicate {
    dense: Vec<u64>,
    overflow: Vec<u64>,
    support: Vec<u64>,
    counts: Vec<u64>,
}

impl Replicate {
    fn new(dense_len: usize) -> Self {
        Replicate {
            dense: vec![0; dense_len],
            overflow: Vec::new(),
            support: Vec::new(),
            counts: Vec::new(),
        }
    }

    fn clear(&mut self) {
        self.dense.fill(0);
        self.overflow.clear();
    }

    #[inline]
    fn push(&mut self, x: u64) {
        match self.dense.get_mut(x as usize) {
            Some(c) => *c += 1,
            None => self.overflow.push(x),
        }
    }

    fn statistic(&mut self, statistic: TailStatistic) -> Option<f64> {
        self.support.clear();
        self.counts.clear();
        for (x, &c) in self.dense.iter().enumerate() {
            if c > 0 {
                self.support.push(x as u64);
                self.counts.push(c);
            }
        }
        self.overflow.sort_unstable();
        for &x in &self.overflow {
            if self.support.last() == Some(&x) {
                *self.counts.last_mut().unwrap() += 1;
            } else {
                self.support.push(x);
                self.counts.push(1);
            }
        }
        scan_cutoffs(&self.support, &self.counts, statistic)
            .ok()
            .map(|s| s.distance)
    }
}
