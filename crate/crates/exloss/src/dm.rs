//! Diebold-Mariano comparison with Newey-West HAC standard errors.
//!
//! This is the single-loss baseline the uniform test is compared against:
//! it fixes one consistent loss (squared error or tick), averages the loss
//! differential, and studentizes with a Bartlett-kernel long-run variance.

use crate::error::{Error, Result};
use crate::loss::{consistent_loss, Alpha, LossFamily, LossSpec};
use crate::normal;
use crate::panel::{ForecastPanel, PanelSlice};
use serde::{Deserialize, Serialize};

/// Loss functions supported by the DM baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DmLoss {
    /// Squared error (expectile-consistent).
    Squared,
    /// Tick / lin-lin loss (quantile-consistent).
    Tick,
}

impl DmLoss {
    fn family(self) -> LossFamily {
        match self {
            DmLoss::Squared => LossFamily::SquaredError,
            DmLoss::Tick => LossFamily::LinLin,
        }
    }
}

/// Bartlett lag choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DmLag {
    /// `floor(4 * (T/100)^(2/9))`, the standard Newey-West rule.
    Auto,
    Fixed(usize),
}

impl DmLag {
    pub fn resolve(self, t_len: usize) -> usize {
        match self {
            DmLag::Auto => (4.0 * (t_len as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize,
            DmLag::Fixed(lag) => lag,
        }
    }
}

/// Result of a one-sided DM comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmReport {
    /// `mean(d) / sqrt(NW(d) / T)` with `d_t = L(benchmark) - L(competitor)`.
    pub statistic: f64,
    /// One-sided `1 - Phi(statistic)`: small values favor the competitor.
    pub p_value: f64,
    pub nw_lag: usize,
    pub mean_diff: f64,
    /// `100 * (RMSE(benchmark) - RMSE(competitor))`; only for squared loss.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drmse_x100: Option<f64>,
}

/// Bartlett-kernel long-run variance with `1/T` autocovariances:
/// `g0 + 2 * sum_{j=1..lag} (1 - j/(lag+1)) * g_j`.
///
/// The formula does not guarantee a nonnegative result for `lag > 0`; a
/// negative value is reported as a degeneracy rather than returned.
pub fn newey_west_variance(series: &[f64], lag: usize) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptyInput("variance of an empty series".into()));
    }
    let t_len = series.len();
    if t_len < lag + 1 {
        return Err(Error::InvalidArgument(format!(
            "series length {t_len} is too short for lag {lag}"
        )));
    }
    let mean = series.iter().sum::<f64>() / t_len as f64;
    let autocov = |j: usize| -> f64 {
        let mut acc = 0.0;
        for t in j..t_len {
            acc += (series[t] - mean) * (series[t - j] - mean);
        }
        acc / t_len as f64
    };
    let mut variance = autocov(0);
    for j in 1..=lag {
        let weight = 1.0 - j as f64 / (lag as f64 + 1.0);
        variance += 2.0 * weight * autocov(j);
    }
    if variance < 0.0 {
        return Err(Error::DegenerateVariance(format!(
            "Bartlett long-run variance is negative ({variance:.3e}) at lag {lag}"
        )));
    }
    Ok(variance)
}

/// One-sided Diebold-Mariano test of the benchmark against the competitor.
///
/// `d_t = L(benchmark_t, y_t) - L(competitor_t, y_t)`; positive means the
/// competitor is doing better, so small p-values indicate the competitor
/// outperforms the benchmark under the chosen loss.
pub fn dm_test(
    panel: &ForecastPanel,
    pair: PanelSlice,
    loss: DmLoss,
    alpha: Alpha,
    lag: DmLag,
) -> Result<DmReport> {
    pair.validate_against(panel)?;
    let t_len = panel.len();
    if t_len < 8 {
        return Err(Error::InvalidArgument(format!(
            "DM test requires at least 8 rows, got {t_len}"
        )));
    }
    let spec = LossSpec::new(loss.family(), alpha)?;
    let bench = panel.series(pair.benchmark);
    let comp = panel.series(pair.competitor);
    let ys = panel.realized();
    let mut diffs = Vec::with_capacity(t_len);
    for t in 0..t_len {
        diffs.push(consistent_loss(&spec, bench[t], ys[t])? - consistent_loss(&spec, comp[t], ys[t])?);
    }
    let lag = lag.resolve(t_len).min(t_len - 1);
    let variance = newey_west_variance(&diffs, lag)?;
    if variance == 0.0 {
        return Err(Error::DegenerateVariance(
            "loss differential has zero long-run variance".into(),
        ));
    }
    let mean_diff = diffs.iter().sum::<f64>() / t_len as f64;
    let statistic = mean_diff / (variance / t_len as f64).sqrt();
    let p_value = 1.0 - normal::cdf(statistic);
    let drmse_x100 = match loss {
        DmLoss::Squared => {
            let rmse = |xs: &[f64]| {
                (xs.iter()
                    .zip(ys)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    / t_len as f64)
                    .sqrt()
            };
            Some(100.0 * (rmse(bench) - rmse(comp)))
        }
        DmLoss::Tick => None,
    };
    Ok(DmReport {
        statistic,
        p_value,
        nw_lag: lag,
        mean_diff,
        drmse_x100,
    })
}
