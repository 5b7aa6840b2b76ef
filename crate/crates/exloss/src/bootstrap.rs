//! Stationary bootstrap (Politis-Romano) and the re-centered bootstrap test.
//!
//! Resampling is joint across columns: one index vector per replicate is
//! applied to every forecast series and the realized values, preserving the
//! cross-sectional dependence the test statistic needs. Each replicate's
//! statistic is re-centered at the full-sample curve, so the bootstrap
//! distribution approximates the null even when the observed curves do not
//! satisfy it.

use crate::engine::{PairEvents, SupStatistic, ThetaGrid};
use crate::error::{Error, Result};
use crate::loss::{Alpha, Functional};
use crate::panel::{ForecastPanel, PanelSlice};
use crate::rng::stream_rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const REPLICATE_STREAM_TAG: u64 = 0x626f_6f74; // "boot"

/// Mean block length control for the stationary bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "block", rename_all = "kebab-case")]
pub enum BlockLength {
    /// `p = T^(-1/3)`, satisfying the `p -> 0`, `T*p -> inf` rate.
    Auto,
    /// Reciprocal mean block length, in `(0, 1]`; `p = 1` is iid resampling.
    Probability { p: f64 },
}

impl BlockLength {
    /// Resolve to a concrete probability for a panel of length `t_len`.
    pub fn resolve(self, t_len: usize) -> Result<f64> {
        let p = match self {
            BlockLength::Auto => (t_len as f64).powf(-1.0 / 3.0),
            BlockLength::Probability { p } => p,
        };
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "block probability must lie in (0, 1], got {p}"
            )));
        }
        Ok(p)
    }

    /// From a mean block length `len >= 1` (`p = 1/len`).
    pub fn from_mean_length(len: f64) -> Result<Self> {
        if !len.is_finite() || len < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "mean block length must be at least 1, got {len}"
            )));
        }
        Ok(BlockLength::Probability { p: 1.0 / len })
    }
}

/// Configuration of the re-centered bootstrap test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of bootstrap replications `M`.
    pub replications: usize,
    pub block: BlockLength,
    pub seed: u64,
    /// Significance levels for critical values, each strictly in (0, 1).
    pub significance_levels: Vec<f64>,
}

impl BootstrapConfig {
    pub fn new(
        replications: usize,
        block: BlockLength,
        seed: u64,
        significance_levels: Vec<f64>,
    ) -> Result<Self> {
        if replications == 0 {
            return Err(Error::InvalidArgument(
                "bootstrap requires at least one replication".into(),
            ));
        }
        for &level in &significance_levels {
            if !(level > 0.0 && level < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "significance level must lie in (0, 1), got {level}"
                )));
            }
        }
        Ok(BootstrapConfig {
            replications,
            block,
            seed,
            significance_levels,
        })
    }

    pub fn default_levels() -> Vec<f64> {
        vec![0.01, 0.05, 0.1]
    }
}

/// One geometric block length with mean `1/p`; `p = 1` degenerates to
/// single-observation blocks.
pub fn geometric_block_length<R: Rng + ?Sized>(p: f64, rng: &mut R) -> usize {
    if p >= 1.0 {
        return 1;
    }
    let u: f64 = rng.random();
    // inversion of P(L = m) = (1-p)^(m-1) p over m = 1, 2, ...
    let len = ((1.0 - u).ln() / (1.0 - p).ln()).floor();
    if len.is_finite() {
        len as usize + 1
    } else {
        1
    }
}

/// Draw one stationary-bootstrap index vector of length exactly `t_len`.
///
/// Blocks start uniformly on `{0, .., t_len - 1}`, have geometric(`p`)
/// lengths, wrap circularly, and the final block is truncated so the output
/// length is exactly `t_len`.
pub fn stationary_resample_indices<R: Rng + ?Sized>(
    t_len: usize,
    p: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if t_len == 0 {
        return Err(Error::EmptyInput("cannot resample a length-0 series".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "block probability must lie in (0, 1], got {p}"
        )));
    }
    let mut indices = Vec::with_capacity(t_len);
    while indices.len() < t_len {
        let start = rng.random_range(0..t_len);
        let len = geometric_block_length(p, rng);
        for offset in 0..len {
            if indices.len() == t_len {
                break;
            }
            indices.push((start + offset) % t_len);
        }
    }
    Ok(indices)
}

/// Sorted bootstrap statistics together with the observed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDistribution {
    /// Re-centered bootstrap statistics, ascending.
    pub statistics: Vec<f64>,
    pub observed: f64,
}

impl BootstrapDistribution {
    pub fn new(mut statistics: Vec<f64>, observed: f64) -> Result<Self> {
        if statistics.is_empty() {
            return Err(Error::EmptyInput("bootstrap distribution is empty".into()));
        }
        if statistics.iter().any(|s| !s.is_finite()) || !observed.is_finite() {
            return Err(Error::NonFinite("bootstrap statistic".into()));
        }
        statistics.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(BootstrapDistribution {
            statistics,
            observed,
        })
    }

    /// Share of bootstrap statistics at or above the observed one; ties count
    /// as rejections, matching the decision rule `S >= h(1 - gamma)`.
    pub fn p_value(&self) -> f64 {
        let below = self.statistics.partition_point(|&s| s < self.observed);
        (self.statistics.len() - below) as f64 / self.statistics.len() as f64
    }
}

/// Inf-type empirical quantile: the smallest order statistic whose ECDF
/// reaches `q`.
pub fn empirical_quantile(dist: &BootstrapDistribution, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile level must lie in (0, 1), got {q}"
        )));
    }
    let m = dist.statistics.len() as f64;
    let rank = (q * m).ceil() as usize;
    Ok(dist.statistics[rank.saturating_sub(1)])
}

/// A critical value at one significance level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub level: f64,
    pub value: f64,
}

/// Named benchmark/competitor pair as reported to users.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportPair {
    pub benchmark: String,
    pub competitor: String,
}

/// Configuration echo embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfigEcho {
    pub kind: Functional,
    pub alpha: f64,
    pub rows: usize,
    pub grid_points: usize,
    pub block_p: f64,
    pub seed: u64,
}

/// Result of the re-centered bootstrap test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    /// Observed `max over pairs, sup over theta of sqrt(T) * D(theta)`.
    pub statistic: f64,
    pub argmax_theta: f64,
    pub argmax_pair: ReportPair,
    pub pairs: Vec<ReportPair>,
    pub p_value: f64,
    /// `h(1 - gamma)` per requested level, ascending in `level`.
    pub critical_values: Vec<CriticalValue>,
    pub bootstrap_m: usize,
    pub config: TestConfigEcho,
}

impl TestReport {
    /// Critical value at `level`, if it was requested.
    pub fn critical_value(&self, level: f64) -> Option<f64> {
        self.critical_values
            .iter()
            .find(|cv| cv.level == level)
            .map(|cv| cv.value)
    }

    /// Decision rule: reject when the observed statistic reaches the
    /// bootstrap critical value.
    pub fn rejects_at(&self, level: f64) -> Option<bool> {
        self.critical_value(level).map(|h| self.statistic >= h)
    }
}

/// Run the re-centered bootstrap test of the null that the benchmark of
/// every pair performs at least as well as its competitor at every `theta`.
///
/// For each replicate, one stationary-bootstrap index vector is applied
/// jointly to all series, and the replicate statistic is
/// `max over pairs, sup over theta of sqrt(T) * (D*(theta) - D(theta))`
/// with `D` the full-sample curve. The `theta` grid is built from the
/// original sample and held fixed across replicates.
pub fn recentered_bootstrap_test(
    panel: &ForecastPanel,
    pairs: &[PanelSlice],
    kind: Functional,
    alpha: Alpha,
    grid: &ThetaGrid,
    config: &BootstrapConfig,
) -> Result<TestReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("at least one pair is required".into()));
    }
    if grid.is_empty() {
        return Err(Error::EmptyInput("theta grid has no points".into()));
    }
    if config.replications == 0 {
        return Err(Error::InvalidArgument("bootstrap replications must be positive".into()));
    }
    let t_len = panel.len();
    let p = config.block.resolve(t_len)?;
    let scale = (t_len as f64).sqrt();

    let events: Vec<PairEvents> = pairs
        .iter()
        .map(|&pair| PairEvents::build(panel, pair, kind, alpha))
        .collect::<Result<_>>()?;

    // observed statistic, ties broken by pair order then smallest theta
    let mut observed: Option<SupStatistic> = None;
    for (&pair, ev) in pairs.iter().zip(&events) {
        let values = ev.sweep(grid.points(), None);
        for (&theta, &v) in grid.points().iter().zip(&values) {
            let scaled = scale * v;
            if observed.map_or(true, |b| scaled > b.value) {
                observed = Some(SupStatistic {
                    value: scaled,
                    pair,
                    theta,
                });
            }
        }
    }
    let observed = observed.expect("non-empty pairs and grid");

    // Re-centered replicate statistics. With row multiplicities mu from the
    // resample, sum_t (mu_t - 1) d_t(theta) = T * (D*(theta) - D(theta)), so
    // a single weighted sweep yields the re-centered curve directly.
    let replicate_stat = |rep: usize| -> Result<f64> {
        let mut rng = stream_rng(config.seed, &[REPLICATE_STREAM_TAG, rep as u64]);
        let indices = stationary_resample_indices(t_len, p, &mut rng)?;
        let mut weights = vec![-1.0; t_len];
        for &i in &indices {
            weights[i] += 1.0;
        }
        let mut best = f64::NEG_INFINITY;
        for ev in &events {
            let values = ev.sweep(grid.points(), Some(&weights));
            for &v in &values {
                let scaled = scale * v;
                if scaled > best {
                    best = scaled;
                }
            }
        }
        Ok(best)
    };
    let statistics: Vec<f64> = (0..config.replications)
        .into_par_iter()
        .map(replicate_stat)
        .collect::<Result<_>>()?;

    let dist = BootstrapDistribution::new(statistics, observed.value)?;
    let p_value = dist.p_value();
    let mut levels = config.significance_levels.clone();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let critical_values = levels
        .iter()
        .map(|&level| {
            Ok(CriticalValue {
                level,
                value: empirical_quantile(&dist, 1.0 - level)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let name_pair = |pair: &PanelSlice| ReportPair {
        benchmark: panel.name(pair.benchmark).to_string(),
        competitor: panel.name(pair.competitor).to_string(),
    };
    Ok(TestReport {
        statistic: observed.value,
        argmax_theta: observed.theta,
        argmax_pair: name_pair(&observed.pair),
        pairs: pairs.iter().map(|p| name_pair(p)).collect(),
        p_value,
        critical_values,
        bootstrap_m: config.replications,
        config: TestConfigEcho {
            kind,
            alpha: alpha.value(),
            rows: t_len,
            grid_points: grid.len(),
            block_p: p,
            seed: config.seed,
        },
    })
}
