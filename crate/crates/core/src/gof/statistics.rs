use std::f64::consts::PI;

use super::EmpiricalDist;
use crate::dist::WaitingTimeDistribution;
use crate::error::{Error, Result};

/// Kullback-Leibler divergence `sum p log2(p / q)` in bits.
///
/// `q` is the model probability of each integer bin (see
/// [`WaitingTimeDistribution::bin_mass`]). A support point the model gives
/// no mass makes the divergence `+inf`.
pub fn kl_divergence(sample: &EmpiricalDist, model: &dyn WaitingTimeDistribution) -> f64 {
    kl_sum(&sample.support, &sample.pmf, |t| model.bin_mass(t))
}

/// Divergence of the sample tail `tau >= tau_min` (renormalised) from a
/// model restricted to the same tail.
pub fn kl_divergence_tail(
    sample: &EmpiricalDist,
    model: &dyn WaitingTimeDistribution,
    tau_min: u64,
) -> Result<f64> {
    let start = sample.lower_bound(tau_min);
    let n_tail: u64 = sample.counts[start..].iter().sum();
    if n_tail == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let p: Vec<f64> = sample.counts[start..]
        .iter()
        .map(|&c| c as f64 / n_tail as f64)
        .collect();
    let mass = 1.0 - model.cdf_below(tau_min as f64);
    Ok(kl_sum(&sample.support[start..], &p, |t| {
        model.bin_mass(t) / mass
    }))
}

fn kl_sum(support: &[u64], p: &[f64], q: impl Fn(u64) -> f64) -> f64 {
    let mut total = 0.0;
    for (&t, &pt) in support.iter().zip(p) {
        let qt = q(t);
        if !(qt > 0.0) {
            return f64::INFINITY;
        }
        total += pt * (pt / qt).log2();
    }
    total
}

/// Tail CDF values `(P(x-), P(x), Q(x-), Q(x))` at each tail support point,
/// with the model renormalised to `tau >= tau_min`.
fn tail_steps<'a>(
    sample: &'a EmpiricalDist,
    model: &'a dyn WaitingTimeDistribution,
    tau_min: Option<u64>,
) -> Result<impl Iterator<Item = Result<[f64; 4]>> + 'a> {
    let start = tau_min.map_or(0, |t| sample.lower_bound(t));
    let n_tail: u64 = sample.counts[start..].iter().sum();
    if n_tail == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let base = tau_min.map_or(0.0, |t| model.cdf_below(t as f64));
    let scale = 1.0 - base;
    if !(scale > 0.0) {
        return Err(Error::Degenerate(
            "model assigns no probability to the tail".into(),
        ));
    }
    let mut cum = 0u64;
    Ok(sample.support[start..]
        .iter()
        .zip(&sample.counts[start..])
        .map(move |(&x, &c)| {
            let p_left = cum as f64 / n_tail as f64;
            cum += c;
            let p = cum as f64 / n_tail as f64;
            let q_left = (model.cdf_below(x as f64) - base) / scale;
            let q = (model.cdf(x as f64)? - base) / scale;
            Ok([p_left, p, q_left, q])
        }))
}

/// Kolmogorov-Smirnov distance `sup |P - Q|`, optionally on the tail
/// `tau >= tau_min` with the model renormalised to that tail.
///
/// Both one-sided gaps are checked at every step of the empirical CDF, so
/// the result is the exact supremum for discrete and continuous models.
pub fn ks_statistic(
    sample: &EmpiricalDist,
    model: &dyn WaitingTimeDistribution,
    tau_min: Option<u64>,
) -> Result<f64> {
    let mut d = 0.0f64;
    for step in tail_steps(sample, model, tau_min)? {
        let [p_left, p, q_left, q] = step?;
        d = d.max((p_left - q_left).abs()).max((p - q).abs());
    }
    Ok(d)
}

/// Weighted distance `max |P - Q| / sqrt(P (1 - P))` over the tail support,
/// skipping points where `P` is 0 or 1.
pub fn dstar_statistic(
    sample: &EmpiricalDist,
    model: &dyn WaitingTimeDistribution,
    tau_min: u64,
) -> Result<f64> {
    let mut d: Option<f64> = None;
    for step in tail_steps(sample, model, Some(tau_min))? {
        let [_, p, _, q] = step?;
        if p > 0.0 && p < 1.0 {
            let w = (p - q).abs() / (p * (1.0 - p)).sqrt();
            d = Some(d.map_or(w, |d| d.max(w)));
        }
    }
    d.ok_or_else(|| {
        Error::Degenerate("every tail point has empirical CDF 0 or 1; D* is undefined".into())
    })
}

/// Asymptotic Kolmogorov p-value for distance `d` on `n` points.
///
/// Uses the effective-size correction `(sqrt(n) + 0.12 + 0.11/sqrt(n)) d`.
/// With fitted parameters the true null distribution is narrower, so this
/// overstates significance.
pub fn kolmogorov_pvalue(d: f64, n: usize) -> f64 {
    if n == 0 || d.is_nan() {
        return f64::NAN;
    }
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    kolmogorov_survival(lambda).clamp(0.0, 1.0)
}

/// `P(K > lambda)` for the Kolmogorov distribution.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // CDF = sqrt(2 pi)/lambda sum exp(-(2k-1)^2 pi^2 / (8 lambda^2))
        let c = -PI * PI / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            let t = (c * m * m).exp();
            s += t;
            if t < 1e-17 * s {
                break;
            }
        }
        1.0 - (2.0 * PI).sqrt() / lambda * s
    } else {
        let c = -2.0 * lambda * lambda;
        let mut s = 0.0;
        let mut sign = 1.0;
        for k in 1..=100 {
            let kf = k as f64;
            let t = (c * kf * kf).exp();
            s += sign * t;
            if t < 1e-17 {
                break;
            }
            sign = -sign;
        }
        2.0 * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{DiscretePowerLawModel, ExponentialModel, PowerLawSampler};

    /// Discrete test model given by explicit masses on 1..=len.
    #[derive(Debug)]
    struct Table(Vec<f64>);

    impl WaitingTimeDistribution for Table {
        fn name(&self) -> &'static str {
            "table"
        }
        fn n_params(&self) -> usize {
            0
        }
        fn is_discrete(&self) -> bool {
            true
        }
        fn ln_pdf(&self, tau: f64) -> Result<f64> {
            Ok(self.bin_mass(tau as u64).ln())
        }
        fn cdf(&self, tau: f64) -> Result<f64> {
            Ok(self.0.iter().take(tau.floor() as usize).sum())
        }
        fn cdf_below(&self, tau: f64) -> f64 {
            self.0.iter().take(tau.ceil() as usize - 1).sum()
        }
        fn bin_mass(&self, tau: u64) -> f64 {
            self.0.get(tau as usize - 1).copied().unwrap_or(0.0)
        }
        fn sample_with(&self, _: usize, _: &mut dyn rand::RngCore) -> Vec<f64> {
            unimplemented!()
        }
    }

    #[test]
    fn kl_hand_example() {
        let e = EmpiricalDist::from_values(&[1, 1, 2]).unwrap();
        let d = kl_divergence(&e, &Table(vec![0.5, 0.5]));
        let expect = (2.0 / 3.0) * (4.0f64 / 3.0).log2() + (1.0 / 3.0) * (2.0f64 / 3.0).log2();
        assert!((d - expect).abs() < 1e-15);
        assert_eq!(format!("{d:.4}"), "0.0817");
    }

    #[test]
    fn kl_zero_and_infinite() {
        let e = EmpiricalDist::from_counts(vec![1, 2, 3], vec![1, 2, 5]).unwrap();
        assert!(kl_divergence(&e, &Table(vec![0.125, 0.25, 0.625])).abs() < 1e-12);
        assert_eq!(kl_divergence(&e, &Table(vec![0.5, 0.5])), f64::INFINITY);
    }

    #[test]
    fn ks_single_point_jump() {
        let e = EmpiricalDist::from_values(&[1]).unwrap();
        let d = ks_statistic(&e, &Table(vec![0.3, 0.7]), None).unwrap();
        assert!((d - 0.7).abs() < 1e-15);
        assert!(ks_statistic(&e, &Table(vec![0.3, 0.7]), Some(2)).is_err());
    }

    #[test]
    fn ks_at_quantiles_is_small() {
        let m = DiscretePowerLawModel::new(2.5, 3).unwrap();
        let s = PowerLawSampler::new(&m);
        let n = 1_000_000;
        let xs: Vec<u64> = (0..n).map(|i| s.quantile((i as f64 + 0.5) / n as f64)).collect();
        let e = EmpiricalDist::from_values(&xs).unwrap();
        assert!(ks_statistic(&e, &m, None).unwrap() < 0.005);
        assert!(ks_statistic(&e, &m, Some(3)).unwrap() < 0.005);
    }

    #[test]
    fn dstar_hand_example() {
        // tail support {2, 3}: P = {0.5, 1}, Q = {0.4, 1}
        let e = EmpiricalDist::from_values(&[1, 2, 3]).unwrap();
        let model = Table(vec![0.5, 0.2, 0.3]);
        let d = dstar_statistic(&e, &model, 2).unwrap();
        assert!((d - 0.2).abs() < 1e-12, "{d}");
        let single = EmpiricalDist::from_values(&[1, 3, 3]).unwrap();
        assert!(matches!(
            dstar_statistic(&single, &model, 2),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn dstar_zero_when_matching() {
        let e = EmpiricalDist::from_counts(vec![1, 2, 3], vec![1, 2, 5]).unwrap();
        let d = dstar_statistic(&e, &Table(vec![0.125, 0.25, 0.625]), 1).unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn kolmogorov_reference_values() {
        // classical critical values of the limiting distribution
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.2238) - 0.10).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_survival(0.8276) - 0.50).abs() < 1e-3);
        // the two series agree where they meet
        let lo = 1.0 - (2.0 * PI).sqrt() / 1.18
            * (1..20)
                .map(|k| (-((2 * k - 1) as f64).powi(2) * PI * PI / (8.0 * 1.18 * 1.18)).exp())
                .sum::<f64>();
        assert!((lo - kolmogorov_survival(1.18 + 1e-12)).abs() < 1e-12);
        assert_eq!(kolmogorov_pvalue(0.0, 100), 1.0);
        assert!(kolmogorov_pvalue(0.5, 10_000) < 1e-100);
    }

    #[test]
    fn continuous_model_ks() {
        let m = ExponentialModel::new(1.0).unwrap();
        let e = EmpiricalDist::from_values(&[1, 2]).unwrap();
        // P jumps 0 -> 0.5 -> 1, Q(1) = 0.632, Q(2) = 0.865
        let d = ks_statistic(&e, &m, None).unwrap();
        assert!((d - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    }
}
