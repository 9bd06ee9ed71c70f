use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::WaitingTimes;

/// Sample distribution of integer waiting times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDist {
    /// Sorted distinct values.
    pub support: Vec<u64>,
    pub counts: Vec<u64>,
    pub pmf: Vec<f64>,
    /// `cdf[j] = P(X <= support[j])`; the last entry is exactly 1.
    pub cdf: Vec<f64>,
    pub n: usize,
}

impl EmpiricalDist {
    pub fn from_values(values: &[u64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if values.contains(&0) {
            return Err(Error::Domain("waiting times must be >= 1".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let mut support = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for x in sorted {
            if support.last() == Some(&x) {
                *counts.last_mut().unwrap() += 1;
            } else {
                support.push(x);
                counts.push(1);
            }
        }
        Self::from_counts(support, counts)
    }

    /// From a strictly increasing support with positive counts.
    pub fn from_counts(support: Vec<u64>, counts: Vec<u64>) -> Result<Self> {
        if support.len() != counts.len() {
            return Err(Error::Config("support and counts differ in length".into()));
        }
        if support.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if support.windows(2).any(|w| w[0] >= w[1]) || counts.contains(&0) || support[0] == 0 {
            return Err(Error::Domain(
                "support must be strictly increasing positive integers with positive counts".into(),
            ));
        }
        let total: u64 = counts.iter().sum();
        let n = total as f64;
        let pmf = counts.iter().map(|&c| c as f64 / n).collect();
        let mut cum = 0u64;
        let cdf = counts
            .iter()
            .map(|&c| {
                cum += c;
                cum as f64 / n
            })
            .collect();
        Ok(EmpiricalDist {
            support,
            counts,
            pmf,
            cdf,
            n: total as usize,
        })
    }

    /// Index of the first support point `>= tau`.
    pub fn lower_bound(&self, tau: u64) -> usize {
        self.support.partition_point(|&x| x < tau)
    }

    /// Reverse cumulative `P(X >= support[j])` for every support point.
    pub fn ccdf(&self) -> Vec<f64> {
        let n = self.n as f64;
        let mut above = self.n as u64;
        self.counts
            .iter()
            .map(|&c| {
                let p = above as f64 / n;
                above -= c;
                p
            })
            .collect()
    }
}

/// Empirical distribution of a waiting-time series.
pub fn empirical(data: &WaitingTimes) -> Result<EmpiricalDist> {
    EmpiricalDist::from_values(&data.values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_samples() {
        let e = EmpiricalDist::from_values(&[1, 1, 2]).unwrap();
        assert_eq!(e.support, [1, 2]);
        assert!((e.pmf[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.pmf[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.cdf[1], 1.0);
        assert_eq!(e.ccdf(), [1.0, 1.0 / 3.0]);

        let e = EmpiricalDist::from_values(&[5]).unwrap();
        assert_eq!((e.support.as_slice(), e.pmf.as_slice()), ([5u64].as_slice(), [1.0].as_slice()));

        assert!(matches!(
            EmpiricalDist::from_values(&[]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn lower_bound() {
        let e = EmpiricalDist::from_values(&[3, 7, 7, 9]).unwrap();
        assert_eq!(e.lower_bound(1), 0);
        assert_eq!(e.lower_bound(7), 1);
        assert_eq!(e.lower_bound(8), 2);
        assert_eq!(e.lower_bound(10), 3);
    }
}
