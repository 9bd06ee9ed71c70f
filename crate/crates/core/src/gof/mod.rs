//! Goodness of fit: K-L divergence, K-S and weighted K-S distances, the
//! power-law bootstrap p-value, and cross-validated BIC.

mod empirical;
mod powerlaw;
mod selection;
mod statistics;

pub use empirical::{empirical, EmpiricalDist};
pub use powerlaw::{
    bootstrap_statistics, powerlaw_pvalue, pvalue_from_statistics, with_pvalue, PowerLawFit,
    DEFAULT_N_BOOT, MIN_N_BOOT,
};
pub use selection::{
    bic, cross_validated_bic, fold_partition, ModelComparison, ModelScore, BIC_PENALTY_N,
    DEFAULT_FOLDS,
};
pub use statistics::{dstar_statistic, kl_divergence, kl_divergence_tail, kolmogorov_pvalue, ks_statistic};
