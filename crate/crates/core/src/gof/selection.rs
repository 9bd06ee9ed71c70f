//! BIC and k-fold cross-validated model comparison.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{kl_divergence, kl_divergence_tail, kolmogorov_pvalue, ks_statistic, EmpiricalDist};
use crate::dist::{log_likelihood, DistModel, FittedModel, ModelFamily};
use crate::error::{Error, Result};
use crate::ingest::WaitingTimes;

pub const DEFAULT_FOLDS: usize = 5;

/// Which sample size enters the BIC penalty inside cross-validation.
pub const BIC_PENALTY_N: &str = "test_fold_size";

/// `-2 ln L + k ln n`.
pub fn bic(loglik: f64, k_params: usize, n: usize) -> f64 {
    -2.0 * loglik + k_params as f64 * (n as f64).ln()
}

/// Shuffle `0..n` with `seed` and cut it into `folds` contiguous parts whose
/// sizes differ by at most one. Returns the test indices of each fold.
pub fn fold_partition(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::Config(format!(
            "cannot split {n} points into {folds} folds"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((0..folds)
        .map(|f| idx[f * n / folds..(f + 1) * n / folds].to_vec())
        .collect())
}

/// Scores of one model family on one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: String,
    /// Fit on the full series.
    pub fit: FittedModel,
    #[serde(with = "crate::json_float")]
    pub kl_divergence: f64,
    #[serde(with = "crate::json_float")]
    pub ks_distance: f64,
    /// Asymptotic Kolmogorov p-value of `ks_distance`.
    #[serde(with = "crate::json_float")]
    pub ks_p_value: f64,
    /// Mean of `bic_folds`.
    #[serde(with = "crate::json_float")]
    pub bic_cv: f64,
    #[serde(with = "crate::json_float::vec")]
    pub bic_folds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub models: Vec<ModelScore>,
    pub winner_by_kl: String,
    pub winner_by_bic: String,
    /// BIC winner within each fold.
    pub fold_winners: Vec<String>,
    pub folds: usize,
    pub seed: u64,
    pub bic_penalty_n: String,
}

impl ModelComparison {
    pub fn score(&self, model: &str) -> Option<&ModelScore> {
        self.models.iter().find(|m| m.model == model)
    }
}

/// Index of the smallest value; ties and NaN go to the earlier entry.
fn argmin(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NAN;
    for (i, v) in values.into_iter().enumerate() {
        if best_v.is_nan() || v < best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Divergence and KS distance of a full-series fit. A power law is scored on
/// its own tail, where it is defined.
fn full_series_scores(emp: &EmpiricalDist, fit: &FittedModel) -> Result<(f64, f64, usize)> {
    match &fit.model {
        DistModel::PowerLaw(m) => {
            let start = emp.lower_bound(m.tau_min);
            let n_tail = emp.counts[start..].iter().sum::<u64>() as usize;
            Ok((
                kl_divergence_tail(emp, m, m.tau_min)?,
                ks_statistic(emp, m, Some(m.tau_min))?,
                n_tail,
            ))
        }
        model => Ok((
            kl_divergence(emp, model),
            ks_statistic(emp, model, None)?,
            emp.n,
        )),
    }
}

/// Fit every family to the whole series (for K-L and K-S) and score it by
/// `folds`-fold cross-validated BIC.
///
/// In each fold the model is fitted on the remaining folds and its
/// log-likelihood evaluated on the held-out fold; the penalty uses the
/// held-out size. A held-out point with zero density gives `+inf`.
pub fn cross_validated_bic(
    data: &WaitingTimes,
    families: &[Arc<dyn ModelFamily>],
    folds: usize,
    seed: u64,
) -> Result<ModelComparison> {
    if families.is_empty() {
        return Err(Error::Config("no models requested".into()));
    }
    let parts = fold_partition(data.len(), folds, seed)?;
    let values = data.as_f64();
    let emp = EmpiricalDist::from_values(&data.values)?;

    let mut in_fold = vec![0usize; values.len()];
    for (f, part) in parts.iter().enumerate() {
        for &i in part {
            in_fold[i] = f;
        }
    }
    let splits: Vec<(Vec<f64>, Vec<f64>)> = (0..folds)
        .map(|f| {
            let (test, train): (Vec<_>, Vec<_>) =
                values.iter().zip(&in_fold).partition(|(_, &g)| g == f);
            (
                train.into_iter().map(|(v, _)| *v).collect(),
                test.into_iter().map(|(v, _)| *v).collect(),
            )
        })
        .collect();

    let mut models = Vec::with_capacity(families.len());
    for family in families {
        let fit = family.fit(&values)?;
        let (kl, ks, ks_n) = full_series_scores(&emp, &fit)?;
        let mut bic_folds = Vec::with_capacity(folds);
        for (train, test) in &splits {
            let fold_fit = family.fit(train)?;
            let ll = log_likelihood(&fold_fit.model, test);
            bic_folds.push(if ll.is_finite() {
                bic(ll, family.n_params(), test.len())
            } else {
                f64::INFINITY
            });
        }
        let bic_cv = bic_folds.iter().sum::<f64>() / folds as f64;
        models.push(ModelScore {
            model: family.name().to_string(),
            fit,
            kl_divergence: kl,
            ks_distance: ks,
            ks_p_value: kolmogorov_pvalue(ks, ks_n),
            bic_cv,
            bic_folds,
        });
    }

    let winner_by_kl = models[argmin(models.iter().map(|m| m.kl_divergence))].model.clone();
    let winner_by_bic = models[argmin(models.iter().map(|m| m.bic_cv))].model.clone();
    let fold_winners = (0..folds)
        .map(|f| models[argmin(models.iter().map(|m| m.bic_folds[f]))].model.clone())
        .collect();
    Ok(ModelComparison {
        models,
        winner_by_kl,
        winner_by_bic,
        fold_winners,
        folds,
        seed,
        bic_penalty_n: BIC_PENALTY_N.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{sample, LognormalModel, ModelRegistry};

    #[test]
    fn bic_arithmetic() {
        assert_eq!(bic(0.0, 2, 1), 0.0);
        assert_eq!(bic(-80_850.0, 2, 1), 161_700.0);
        assert!((bic(-80_850.0, 2, 3) - (161_700.0 + 2.0 * 3f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn partition_is_exact() {
        let parts = fold_partition(103, 5, 9).unwrap();
        let mut seen = vec![0; 103];
        for p in &parts {
            assert!(p.len() == 20 || p.len() == 21);
            for &i in p {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(parts, fold_partition(103, 5, 9).unwrap());
        assert!(fold_partition(4, 5, 0).is_err());
        assert!(fold_partition(10, 1, 0).is_err());
    }

    #[test]
    fn leave_one_out_boundary() {
        let reg = ModelRegistry::with_defaults();
        let data = WaitingTimes::new("X", vec![1, 2, 2, 3, 5, 8, 13, 4, 6, 7]).unwrap();
        let cmp = cross_validated_bic(&data, &reg.select(&["lognormal"]).unwrap(), 10, 1).unwrap();
        assert!(cmp.models[0].bic_cv.is_finite());
        assert!(cross_validated_bic(&data, &reg.select(&["lognormal"]).unwrap(), 11, 1).is_err());
    }

    #[test]
    fn power_law_scores_infinite_bic_on_body() {
        let truth = LognormalModel::new(1.5, 1.0).unwrap();
        let values: Vec<u64> = sample(&truth, 2_000, 4)
            .unwrap()
            .into_iter()
            .map(|x| x.round().max(1.0) as u64)
            .collect();
        let data = WaitingTimes::new("X", values).unwrap();
        let reg = ModelRegistry::with_defaults();
        let cmp = cross_validated_bic(&data, &reg.select(&["lognormal", "powerlaw"]).unwrap(), 5, 3)
            .unwrap();
        let pl = cmp.score("powerlaw").unwrap();
        if let DistModel::PowerLaw(m) = &pl.fit.model {
            if m.tau_min > 1 {
                assert_eq!(pl.bic_cv, f64::INFINITY);
            }
        }
        assert_eq!(cmp.winner_by_bic, "lognormal");
    }
}
