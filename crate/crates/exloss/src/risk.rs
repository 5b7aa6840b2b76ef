//! VaR forecasting methods and supporting estimators: sample quantiles and
//! expectiles, OLS, Gaussian-QML GARCH, and CAViaR recursions estimated by
//! minimizing average tick loss (Engle and Manganelli, 2004).

use crate::error::{Error, Result};
use crate::normal;
use crate::rng::stream_rng;
use crate::simplex::{nelder_mead, NelderMeadConfig};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const CAVIAR_STREAM_TAG: u64 = 0x6376_6172; // "cvar"

/// Inf-type sample quantile: the smallest order statistic whose ECDF
/// reaches `alpha`.
pub fn sample_quantile(xs: &[f64], alpha: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("quantile of an empty sample".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile level must lie in (0, 1), got {alpha}"
        )));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = (alpha * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.saturating_sub(1)])
}

/// Sample alpha-expectile: the root of
/// `alpha * mean((x - t)_+) = (1 - alpha) * mean((t - x)_+)`,
/// found by bisection on `[min, max]` to 1e-12.
pub fn sample_expectile(xs: &[f64], alpha: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("expectile of an empty sample".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "expectile level must lie in (0, 1), got {alpha}"
        )));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in xs {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if lo == hi {
        return Ok(lo);
    }
    // decreasing in t: positive at min, negative at max
    let balance = |t: f64| -> f64 {
        let mut above = 0.0;
        let mut below = 0.0;
        for &x in xs {
            above += (x - t).max(0.0);
            below += (t - x).max(0.0);
        }
        alpha * above - (1.0 - alpha) * below
    };
    let mut a = lo;
    let mut b = hi;
    for _ in 0..200 {
        if b - a <= 1e-12 {
            break;
        }
        let mid = 0.5 * (a + b);
        if balance(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Ordinary least squares of `response` on an intercept plus the given
/// columns; coefficients are returned intercept first.
pub fn ols_fit(columns: &[&[f64]], response: &[f64]) -> Result<Vec<f64>> {
    let rows = response.len();
    let dim = columns.len() + 1;
    if rows == 0 {
        return Err(Error::EmptyInput("regression with no rows".into()));
    }
    if rows <= dim {
        return Err(Error::InvalidArgument(format!(
            "need more than {dim} rows for {dim} coefficients, got {rows}"
        )));
    }
    for col in columns {
        if col.len() != rows {
            return Err(Error::InvalidArgument(
                "design columns and response differ in length".into(),
            ));
        }
    }
    let x = |row: usize, j: usize| -> f64 {
        if j == 0 {
            1.0
        } else {
            columns[j - 1][row]
        }
    };
    // normal equations; dimensions here are tiny
    let mut xtx = vec![vec![0.0; dim]; dim];
    let mut xty = vec![0.0; dim];
    for row in 0..rows {
        for i in 0..dim {
            let xi = x(row, i);
            xty[i] += xi * response[row];
            for j in i..dim {
                xtx[i][j] += xi * x(row, j);
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            xtx[i][j] = xtx[j][i];
        }
    }
    solve_spd(xtx, xty)
}

/// Gaussian elimination with partial pivoting; tiny pivots are reported as a
/// singular design.
fn solve_spd(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot_row][col].abs() <= 1e-12 * scale.max(1.0) {
            return Err(Error::SingularDesign(
                "design matrix is rank deficient".into(),
            ));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut solution = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * solution[k];
        }
        solution[col] = acc / a[col][col];
    }
    Ok(solution)
}

/// CAViaR recursion coefficients.
///
/// No sign constraints are imposed: fitted slopes on `|R|` are typically
/// negative so that VaR paths stay negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "spec", rename_all = "kebab-case")]
pub enum CaviarParams {
    /// `VaR_{t+1} = a + b VaR_t + c |R_t|` ("symmetric absolute value").
    Symmetric { a: f64, b: f64, c: f64 },
    /// `VaR_{t+1} = a + b VaR_t + c1 |R_t| 1{R_t > 0} + c2 |R_t| 1{R_t <= 0}`
    /// ("asymmetric slope").
    Asymmetric { a: f64, b: f64, c1: f64, c2: f64 },
}

/// Which CAViaR recursion to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaviarKind {
    Symmetric,
    Asymmetric,
}

impl CaviarParams {
    fn from_vector(kind: CaviarKind, v: &[f64]) -> CaviarParams {
        match kind {
            CaviarKind::Symmetric => CaviarParams::Symmetric {
                a: v[0],
                b: v[1],
                c: v[2],
            },
            CaviarKind::Asymmetric => CaviarParams::Asymmetric {
                a: v[0],
                b: v[1],
                c1: v[2],
                c2: v[3],
            },
        }
    }

    fn dim(kind: CaviarKind) -> usize {
        match kind {
            CaviarKind::Symmetric => 3,
            CaviarKind::Asymmetric => 4,
        }
    }
}

/// Run the CAViaR recursion over `returns` starting from `var_init`.
///
/// `output[t]` is the VaR forecast for period `t + 1` issued at `t` (it uses
/// `returns[t]` and the previous VaR).
pub fn caviar_path(params: &CaviarParams, returns: &[f64], var_init: f64) -> Result<Vec<f64>> {
    if returns.is_empty() {
        return Err(Error::EmptyInput("CAViaR path over no returns".into()));
    }
    if !var_init.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "var_init must be finite, got {var_init}"
        )));
    }
    let mut path = Vec::with_capacity(returns.len());
    let mut prev = var_init;
    for (t, &r) in returns.iter().enumerate() {
        let next = match *params {
            CaviarParams::Symmetric { a, b, c } => a + b * prev + c * r.abs(),
            CaviarParams::Asymmetric { a, b, c1, c2 } => {
                let slope = if r > 0.0 { c1 } else { c2 };
                a + b * prev + slope * r.abs()
            }
        };
        if !next.is_finite() {
            return Err(Error::Overflow(format!(
                "CAViaR recursion produced a non-finite value at step {t}"
            )));
        }
        path.push(next);
        prev = next;
    }
    Ok(path)
}

fn tick(alpha: f64, var: f64, ret: f64) -> f64 {
    ((if ret < var { 1.0 } else { 0.0 }) - alpha) * (var - ret)
}

/// Allocation-free tick-loss objective used inside the estimator's hot loop;
/// returns +inf on overflow so the optimizer backs away.
fn tick_loss_inline(params: &CaviarParams, returns: &[f64], alpha: f64, var_init: f64) -> f64 {
    let mut prev = var_init;
    let mut acc = 0.0;
    for t in 0..returns.len() - 1 {
        let r = returns[t];
        let var = match *params {
            CaviarParams::Symmetric { a, b, c } => a + b * prev + c * r.abs(),
            CaviarParams::Asymmetric { a, b, c1, c2 } => {
                let slope = if r > 0.0 { c1 } else { c2 };
                a + b * prev + slope * r.abs()
            }
        };
        acc += tick(alpha, var, returns[t + 1]);
        prev = var;
    }
    if acc.is_finite() {
        acc / (returns.len() - 1) as f64
    } else {
        f64::INFINITY
    }
}

/// Average one-step-ahead tick loss of the CAViaR path: `output[t]` is
/// scored against `returns[t + 1]`.
pub fn tick_loss_objective(
    params: &CaviarParams,
    returns: &[f64],
    alpha: f64,
    var_init: f64,
) -> Result<f64> {
    if returns.len() < 2 {
        return Err(Error::InvalidArgument(
            "tick loss needs at least two returns".into(),
        ));
    }
    let path = caviar_path(params, returns, var_init)?;
    let mut acc = 0.0;
    for t in 0..returns.len() - 1 {
        acc += tick(alpha, path[t], returns[t + 1]);
    }
    Ok(acc / (returns.len() - 1) as f64)
}

/// Multi-start configuration for [`estimate_caviar`].
#[derive(Debug, Clone, PartialEq)]
pub struct CaviarFitConfig {
    pub seed: u64,
    /// Uniform candidates drawn before refinement.
    pub candidates: usize,
    /// Best candidates refined with Nelder-Mead.
    pub refined: usize,
    pub simplex: NelderMeadConfig,
}

impl Default for CaviarFitConfig {
    fn default() -> Self {
        CaviarFitConfig {
            seed: 0,
            candidates: 1000,
            refined: 5,
            simplex: NelderMeadConfig {
                max_iterations: 250,
                tolerance: 1e-9,
                // the multi-start already diversifies; one restart per
                // refinement is enough
                restarts: 1,
                ..NelderMeadConfig::default()
            },
        }
    }
}

/// Estimate CAViaR coefficients by minimizing average tick loss.
///
/// The recursion starts at the empirical alpha-quantile of the sample.
/// Candidates are uniform on `[-1, 1]` per coordinate, with the intercept
/// and slope coordinates scaled by the quantile magnitude so the search
/// covers the data's scale; the best few are refined by Nelder-Mead. The
/// surface is non-smooth, and a single simplex start routinely stalls.
pub fn estimate_caviar(
    returns: &[f64],
    alpha: f64,
    kind: CaviarKind,
    config: &CaviarFitConfig,
) -> Result<CaviarParams> {
    if returns.len() < 100 {
        return Err(Error::InvalidArgument(format!(
            "CAViaR estimation needs at least 100 returns, got {}",
            returns.len()
        )));
    }
    if config.candidates == 0 || config.refined == 0 {
        return Err(Error::InvalidArgument(
            "candidate and refinement counts must be positive".into(),
        ));
    }
    let var_init = sample_quantile(returns, alpha)?;
    let scale = var_init.abs().max(1.0);
    let dim = CaviarParams::dim(kind);
    let objective = |v: &[f64]| -> f64 {
        let params = CaviarParams::from_vector(kind, v);
        tick_loss_inline(&params, returns, alpha, var_init)
    };

    let mut rng = stream_rng(config.seed, &[CAVIAR_STREAM_TAG]);
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::with_capacity(config.candidates);
    for _ in 0..config.candidates {
        let mut v = Vec::with_capacity(dim);
        for coord in 0..dim {
            let raw: f64 = rng.random_range(-1.0..1.0);
            // coordinate 1 is the autoregressive weight; the rest live on
            // the scale of the VaR level
            v.push(if coord == 1 { raw } else { raw * scale });
        }
        candidates.push((objective(&v), v));
    }
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut best: Option<(f64, Vec<f64>)> = None;
    for (value, start) in candidates.into_iter().take(config.refined) {
        if !value.is_finite() {
            continue;
        }
        let outcome = nelder_mead(&objective, &start, &config.simplex)?;
        if best.as_ref().map_or(true, |(bv, _)| outcome.value < *bv) {
            best = Some((outcome.value, outcome.argmin));
        }
    }
    let (_, argmin) = best.ok_or_else(|| {
        Error::OptimizationFailed("no finite tick-loss candidate found".into())
    })?;
    Ok(CaviarParams::from_vector(kind, &argmin))
}

/// Gaussian-QML GARCH(1,1) fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Garch11Fit {
    pub omega: f64,
    /// Coefficient on the lagged conditional variance.
    pub beta: f64,
    /// Coefficient on the lagged squared return.
    pub arch: f64,
    /// One-step-ahead conditional variance forecast.
    pub next_variance: f64,
}

/// Internal GARCH(p, q) fit used by the rolling simulations.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GarchFit {
    pub omega: f64,
    pub betas: Vec<f64>,
    pub archs: Vec<f64>,
    pub next_variance: f64,
    pub nll: f64,
    /// Unconstrained parameters, reusable as a warm start.
    pub raw: Vec<f64>,
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Map unconstrained parameters to `(omega, betas, archs)` with
/// `omega > 0`, nonnegative coefficients, and persistence below 1.
fn garch_coefficients(raw: &[f64], p: usize, q: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let omega = raw[0].exp();
    let persistence = sigmoid(raw[1]) * 0.9999;
    // softmax shares across the p + q coefficients, last logit pinned at 0
    let k = p + q;
    let mut weights = Vec::with_capacity(k);
    let mut total = 0.0;
    for i in 0..k {
        let logit = if i + 1 < k { raw[2 + i] } else { 0.0 };
        let w = logit.exp();
        weights.push(w);
        total += w;
    }
    let coefs: Vec<f64> = weights.iter().map(|w| persistence * w / total).collect();
    (omega, coefs[..p].to_vec(), coefs[p..].to_vec())
}

fn garch_nll(returns: &[f64], omega: f64, betas: &[f64], archs: &[f64]) -> (f64, f64) {
    let p = betas.len();
    let q = archs.len();
    let start = p.max(q).max(1);
    let n = returns.len();
    let sample_var = {
        let mean = returns.iter().sum::<f64>() / n as f64;
        (returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n as f64).max(1e-12)
    };
    let mut sigma2 = vec![sample_var; n + 1];
    let mut nll = 0.0;
    for t in start..=n {
        let mut s2 = omega;
        for (i, &b) in betas.iter().enumerate() {
            s2 += b * sigma2[t - 1 - i];
        }
        for (j, &g) in archs.iter().enumerate() {
            s2 += g * returns[t - 1 - j] * returns[t - 1 - j];
        }
        sigma2[t] = s2.max(1e-12);
        if t < n {
            nll += sigma2[t].ln() + returns[t] * returns[t] / sigma2[t];
        }
    }
    (nll, sigma2[n])
}

pub(crate) fn garch_fit(
    returns: &[f64],
    p: usize,
    q: usize,
    warm_start: Option<&[f64]>,
) -> Result<GarchFit> {
    if returns.len() < 3 * (p.max(q) + 1) {
        return Err(Error::InvalidArgument(format!(
            "GARCH({p},{q}) fit needs more than {} returns",
            3 * (p.max(q) + 1)
        )));
    }
    if q == 0 {
        return Err(Error::InvalidArgument("GARCH needs at least one ARCH lag".into()));
    }
    let n_params = 2 + (p + q - 1);
    let sample_var = {
        let n = returns.len() as f64;
        let mean = returns.iter().sum::<f64>() / n;
        (returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n).max(1e-12)
    };
    let objective = |raw: &[f64]| -> f64 {
        let (omega, betas, archs) = garch_coefficients(raw, p, q);
        garch_nll(returns, omega, &betas, &archs).0
    };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(w) = warm_start {
        if w.len() == n_params {
            starts.push(w.to_vec());
        }
    }
    // persistent start (persistence 0.95) and a low-persistence one
    let mut canonical = vec![(0.05 * sample_var).max(1e-10).ln(), 2.9444];
    canonical.resize(n_params, 0.0);
    starts.push(canonical);
    let mut flat = vec![sample_var.max(1e-10).ln(), -2.1972];
    flat.resize(n_params, 0.0);
    starts.push(flat);

    let nm = NelderMeadConfig {
        max_iterations: 600,
        tolerance: 1e-9,
        ..NelderMeadConfig::default()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let outcome = nelder_mead(&objective, &start, &nm)?;
        if best.as_ref().map_or(true, |(bv, _)| outcome.value < *bv) {
            best = Some((outcome.value, outcome.argmin));
        }
    }
    let (nll, raw) = best.expect("at least one start");
    let (omega, betas, archs) = garch_coefficients(&raw, p, q);
    let (_, next_variance) = garch_nll(returns, omega, &betas, &archs);
    Ok(GarchFit {
        omega,
        betas,
        archs,
        next_variance,
        nll,
        raw,
    })
}

/// Fit a GARCH(1,1) by Gaussian quasi-maximum-likelihood over transformed
/// parameters enforcing `omega > 0`, `beta, arch >= 0`, `beta + arch < 1`,
/// and return the one-step variance forecast.
pub fn garch11_fit(returns: &[f64]) -> Result<Garch11Fit> {
    if returns.len() < 200 {
        return Err(Error::InvalidArgument(format!(
            "GARCH(1,1) estimation needs at least 200 returns, got {}",
            returns.len()
        )));
    }
    let fit = garch_fit(returns, 1, 1, None)?;
    Ok(Garch11Fit {
        omega: fit.omega,
        beta: fit.betas[0],
        arch: fit.archs[0],
        next_variance: fit.next_variance,
    })
}

/// VaR forecasting method for the rolling backtest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarMethod {
    /// Empirical alpha-quantile of the window.
    SampleQuantile,
    /// `mean + std * z_alpha` with the unbiased window standard deviation.
    NormalFit,
    CaviarSy,
    CaviarAsy,
}

impl VarMethod {
    pub fn name(&self) -> &'static str {
        match self {
            VarMethod::SampleQuantile => "sample-quantile",
            VarMethod::NormalFit => "normal",
            VarMethod::CaviarSy => "caviar-sy",
            VarMethod::CaviarAsy => "caviar-asy",
        }
    }
}

/// Rolling VaR backtest results over the forecast period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub method: VarMethod,
    pub alpha: f64,
    pub window: usize,
    /// One-step VaR forecasts, aligned with `returns[window..]`.
    pub var_series: Vec<f64>,
    /// Share of periods with `return <= VaR` ("no greater than" convention).
    pub hit_proportion: f64,
    pub avg_tick_loss: f64,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Backtest a VaR method with a rolling estimation window.
///
/// For each `t >= window` the method is fitted on `returns[t-window..t]` and
/// emits the one-step forecast scored against `returns[t]`. CAViaR refits
/// are independent across `t` (multi-start RNG derived from `(seed, t)`) and
/// run in parallel.
pub fn rolling_var_backtest(
    returns: &[f64],
    method: VarMethod,
    alpha: f64,
    window: usize,
    seed: u64,
) -> Result<BacktestReport> {
    if window < 10 {
        return Err(Error::InvalidArgument(format!(
            "window must be at least 10, got {window}"
        )));
    }
    if returns.len() <= window {
        return Err(Error::InvalidArgument(format!(
            "need more than {window} returns, got {}",
            returns.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidArgument("returns must be finite".into()));
    }

    let forecast_at = |t: usize| -> Result<f64> {
        let fit_window = &returns[t - window..t];
        match method {
            VarMethod::SampleQuantile => sample_quantile(fit_window, alpha),
            VarMethod::NormalFit => {
                let n = fit_window.len() as f64;
                let mean = fit_window.iter().sum::<f64>() / n;
                let var =
                    fit_window.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0);
                Ok(mean + var.sqrt() * normal::inverse_cdf(alpha))
            }
            VarMethod::CaviarSy | VarMethod::CaviarAsy => {
                let kind = if method == VarMethod::CaviarSy {
                    CaviarKind::Symmetric
                } else {
                    CaviarKind::Asymmetric
                };
                let config = CaviarFitConfig {
                    seed: stream_rng(seed, &[t as u64]).random(),
                    ..CaviarFitConfig::default()
                };
                let params = estimate_caviar(fit_window, alpha, kind, &config)?;
                let var_init = sample_quantile(fit_window, alpha)?;
                let path = caviar_path(&params, fit_window, var_init)?;
                Ok(path[window - 1])
            }
        }
    };
    let var_series: Vec<f64> = (window..returns.len())
        .into_par_iter()
        .map(forecast_at)
        .collect::<Result<_>>()?;

    let scored = &returns[window..];
    let n = scored.len() as f64;
    let hit_proportion = scored
        .iter()
        .zip(&var_series)
        .filter(|(r, v)| *r <= *v)
        .count() as f64
        / n;
    let avg_tick_loss = scored
        .iter()
        .zip(&var_series)
        .map(|(&r, &v)| tick(alpha, v, r))
        .sum::<f64>()
        / n;
    let mean = var_series.iter().sum::<f64>() / n;
    let std = (var_series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let min = var_series.iter().copied().fold(f64::INFINITY, f64::min);
    let max = var_series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(BacktestReport {
        method,
        alpha,
        window,
        var_series,
        hit_proportion,
        avg_tick_loss,
        mean,
        std,
        min,
        max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn quantile_is_inf_type() {
        assert_eq!(sample_quantile(&[4.0, 1.0, 3.0, 2.0], 0.5).unwrap(), 2.0);
        assert_eq!(sample_quantile(&[4.0, 1.0, 3.0, 2.0], 0.75).unwrap(), 3.0);
        assert_eq!(sample_quantile(&[5.0], 0.3).unwrap(), 5.0);
        assert!(sample_quantile(&[], 0.5).is_err());
    }

    #[test]
    fn expectile_at_half_is_the_mean() {
        let xs = [1.0, 2.0, 7.0, -3.0, 0.5];
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert_abs_diff_eq!(sample_expectile(&xs, 0.5).unwrap(), mean, epsilon = 1e-9);
    }

    #[test]
    fn expectile_tends_to_extremes() {
        let xs = [0.0, 1.0];
        assert!(sample_expectile(&xs, 0.999).unwrap() > 0.95);
        assert!(sample_expectile(&xs, 0.001).unwrap() < 0.05);
        assert_eq!(sample_expectile(&[2.0, 2.0], 0.9).unwrap(), 2.0);
    }

    #[test]
    fn expectile_minimizes_asymmetric_squared_loss() {
        let mut rng = stream_rng(4, &[0]);
        let xs: Vec<f64> = (0..200)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        for alpha in [0.1, 0.3, 0.7] {
            let e = sample_expectile(&xs, alpha).unwrap();
            let loss = |t: f64| -> f64 {
                xs.iter()
                    .map(|&x| {
                        let w = if x < t { 1.0 - alpha } else { alpha };
                        w * (x - t) * (x - t)
                    })
                    .sum()
            };
            let at = loss(e);
            assert!(at <= loss(e + 1e-4) + 1e-12);
            assert!(at <= loss(e - 1e-4) + 1e-12);
        }
    }

    #[test]
    fn ols_exact_and_hand_solves() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 3.0 * v).collect();
        let coef = ols_fit(&[&x], &y).unwrap();
        assert_abs_diff_eq!(coef[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(coef[1], 3.0, epsilon = 1e-9);

        let x2 = [0.0, 1.0, 0.5];
        let y2 = [1.0, 3.0, 2.0];
        let coef2 = ols_fit(&[&x2], &y2).unwrap();
        assert_abs_diff_eq!(coef2[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(coef2[1], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn ols_residuals_orthogonal_to_design() {
        let mut rng = stream_rng(8, &[0]);
        let n = 60;
        let x1: Vec<f64> = (0..n)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let x2: Vec<f64> = (0..n)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                1.0 + 0.5 * x1[i] - 2.0 * x2[i]
                    + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            })
            .collect();
        let coef = ols_fit(&[&x1, &x2], &y).unwrap();
        let resid: Vec<f64> = (0..n)
            .map(|i| y[i] - coef[0] - coef[1] * x1[i] - coef[2] * x2[i])
            .collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        assert!(resid.iter().sum::<f64>().abs() < 1e-8);
        assert!(dot(&resid, &x1).abs() < 1e-8);
        assert!(dot(&resid, &x2).abs() < 1e-8);
    }

    #[test]
    fn ols_detects_duplicate_column() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = x.clone();
        let err = ols_fit(&[&x, &x], &y).unwrap_err();
        assert!(matches!(err, Error::SingularDesign(_)), "{err}");
    }

    #[test]
    fn caviar_path_reference_steps() {
        let params = CaviarParams::Symmetric {
            a: -0.1,
            b: 0.5,
            c: -0.2,
        };
        let path = caviar_path(&params, &[2.0], -1.0).unwrap();
        assert_abs_diff_eq!(path[0], -1.0, epsilon = 1e-12);

        let persistence = CaviarParams::Symmetric { a: 0.0, b: 1.0, c: 0.0 };
        let path = caviar_path(&persistence, &[0.3, -0.8, 2.0], -1.7).unwrap();
        assert!(path.iter().all(|&v| v == -1.7));
    }

    #[test]
    fn asymmetric_with_equal_slopes_matches_symmetric() {
        let returns = [0.5, -1.2, 0.0, 2.3, -0.4];
        let sym = CaviarParams::Symmetric { a: -0.05, b: 0.8, c: -0.3 };
        let asy = CaviarParams::Asymmetric { a: -0.05, b: 0.8, c1: -0.3, c2: -0.3 };
        assert_eq!(
            caviar_path(&sym, &returns, -1.0).unwrap(),
            caviar_path(&asy, &returns, -1.0).unwrap()
        );
    }

    #[test]
    fn caviar_path_is_linear_in_intercept_and_init() {
        let returns = [0.5, -1.2, 0.7, -0.3];
        let base = CaviarParams::Symmetric { a: 0.1, b: 0.6, c: -0.2 };
        let bumped_a = CaviarParams::Symmetric { a: 0.1 + 1.0, b: 0.6, c: -0.2 };
        let p0 = caviar_path(&base, &returns, -1.0).unwrap();
        let pa = caviar_path(&bumped_a, &returns, -1.0).unwrap();
        let pi = caviar_path(&base, &returns, -1.0 + 1.0).unwrap();
        // superposition: bump responses are geometric in b
        let mut b_pow = 1.0;
        for t in 0..returns.len() {
            let da: f64 = (0..=t).map(|k| 0.6_f64.powi(k as i32)).sum();
            assert_abs_diff_eq!(pa[t] - p0[t], da, epsilon = 1e-10);
            b_pow *= 0.6;
            assert_abs_diff_eq!(pi[t] - p0[t], b_pow, epsilon = 1e-10);
        }
    }

    #[test]
    fn caviar_overflow_is_reported() {
        let explosive = CaviarParams::Symmetric { a: 1e300, b: 2.0, c: 0.0 };
        let err = caviar_path(&explosive, &[1.0; 2000], 1e300).unwrap_err();
        assert!(matches!(err, Error::Overflow(_)), "{err}");
    }

    #[test]
    fn tick_loss_reference_value() {
        let zero_path = CaviarParams::Symmetric { a: 0.0, b: 0.0, c: 0.0 };
        let value = tick_loss_objective(&zero_path, &[1.0, -1.0], 0.5, 0.0).unwrap();
        assert_abs_diff_eq!(value, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn tick_loss_small_alpha_never_hit() {
        // constant path far below the data: loss ~ alpha * mean(r - var)
        let constant = CaviarParams::Symmetric { a: -100.0, b: 0.0, c: 0.0 };
        let returns = [0.5, 1.0, -0.5, 0.3];
        let alpha = 0.01;
        let value = tick_loss_objective(&constant, &returns, alpha, -100.0).unwrap();
        let expect = alpha * returns[1..].iter().map(|r| r + 100.0).sum::<f64>() / 3.0;
        assert_abs_diff_eq!(value, expect, epsilon = 1e-12);
    }

    #[test]
    fn constant_path_tick_loss_minimized_at_sample_quantile() {
        let mut rng = stream_rng(21, &[0]);
        let returns: Vec<f64> = (0..300)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let alpha = 0.1;
        let scored = &returns[1..];
        let avg_tick = |v: f64| -> f64 {
            scored.iter().map(|&r| tick(alpha, v, r)).sum::<f64>() / scored.len() as f64
        };
        let q = sample_quantile(scored, alpha).unwrap();
        let at_quantile = avg_tick(q);
        let grid_best = (0..2000)
            .map(|i| -4.0 + 8.0 * i as f64 / 1999.0)
            .map(avg_tick)
            .fold(f64::INFINITY, f64::min);
        assert!(at_quantile <= grid_best + 1e-3, "{at_quantile} vs {grid_best}");
    }

    #[test]
    fn estimate_caviar_is_deterministic_and_dominates_truth() {
        // simulate from a symmetric CAViaR truth via sigma_t = VaR_t / z_alpha
        let alpha = 0.05;
        let z = normal::inverse_cdf(alpha);
        let truth = CaviarParams::Symmetric { a: -0.04, b: 0.85, c: -0.15 };
        let mut rng = stream_rng(31, &[0]);
        let mut returns = Vec::with_capacity(2000);
        let mut var = -1.0;
        let mut r_prev = 0.0f64;
        for _ in 0..2000 {
            let (a, b, c) = match truth {
                CaviarParams::Symmetric { a, b, c } => (a, b, c),
                _ => unreachable!(),
            };
            var = a + b * var + c * r_prev.abs();
            let sigma = var / z;
            let shock: f64 =
                <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
            r_prev = sigma.abs() * shock;
            returns.push(r_prev);
        }
        let config = CaviarFitConfig { seed: 5, candidates: 400, ..Default::default() };
        let fitted = estimate_caviar(&returns, alpha, CaviarKind::Symmetric, &config).unwrap();
        let fitted_again =
            estimate_caviar(&returns, alpha, CaviarKind::Symmetric, &config).unwrap();
        assert_eq!(fitted, fitted_again);

        let var_init = sample_quantile(&returns, alpha).unwrap();
        let fitted_loss = tick_loss_objective(&fitted, &returns, alpha, var_init).unwrap();
        let truth_loss = tick_loss_objective(&truth, &returns, alpha, var_init).unwrap();
        assert!(
            fitted_loss <= truth_loss + 1e-3,
            "fitted {fitted_loss} vs truth {truth_loss}"
        );
    }

    #[test]
    fn garch_recovers_simulated_parameters() {
        // median over a few seeds to keep the check stable
        let truth = (0.05, 0.75, 0.2);
        let mut errs = Vec::new();
        for seed in 0..5 {
            let mut rng = stream_rng(seed, &[7]);
            let n = 4000;
            let mut sigma2: f64 = truth.0 / (1.0 - truth.1 - truth.2);
            let mut returns = Vec::with_capacity(n);
            let mut prev_r2 = sigma2;
            for _ in 0..n {
                sigma2 = truth.0 + truth.1 * sigma2 + truth.2 * prev_r2;
                let shock: f64 =
                    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                let r = sigma2.sqrt() * shock;
                prev_r2 = r * r;
                returns.push(r);
            }
            let fit = garch11_fit(&returns).unwrap();
            errs.push([
                (fit.omega - truth.0).abs(),
                (fit.beta - truth.1).abs(),
                (fit.arch - truth.2).abs(),
            ]);
        }
        for coord in 0..3 {
            let mut e: Vec<f64> = errs.iter().map(|v| v[coord]).collect();
            e.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!(e[2] < 0.1, "median abs error {} for coord {coord}", e[2]);
        }
    }

    #[test]
    fn garch_on_iid_data_has_low_persistence_sum_effect() {
        let mut rng = stream_rng(3, &[9]);
        let returns: Vec<f64> = (0..3000)
            .map(|_| {
                1.5 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            })
            .collect();
        let fit = garch11_fit(&returns).unwrap();
        let sample_var = returns.iter().map(|r| r * r).sum::<f64>() / returns.len() as f64;
        let implied = fit.omega / (1.0 - fit.beta - fit.arch);
        assert!((implied - sample_var).abs() / sample_var < 0.2);
        assert!((fit.next_variance - sample_var).abs() / sample_var < 0.3);
    }

    #[test]
    fn garch_short_sample_rejected() {
        assert!(garch11_fit(&[0.1; 50]).is_err());
    }

    #[test]
    fn backtest_window_validation() {
        assert!(rolling_var_backtest(&[0.0; 100], VarMethod::NormalFit, 0.05, 5, 0).is_err());
        assert!(rolling_var_backtest(&[0.0; 10], VarMethod::NormalFit, 0.05, 10, 0).is_err());
    }

    #[test]
    fn constant_returns_hit_with_equality() {
        let report =
            rolling_var_backtest(&[1.0; 40], VarMethod::SampleQuantile, 0.1, 20, 0).unwrap();
        assert!(report.var_series.iter().all(|&v| v == 1.0));
        assert_eq!(report.hit_proportion, 1.0);
    }

    #[test]
    fn normal_fit_calibrated_on_gaussian_data() {
        let mut rng = stream_rng(44, &[0]);
        let returns: Vec<f64> = (0..1500)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let report =
            rolling_var_backtest(&returns, VarMethod::NormalFit, 0.05, 250, 0).unwrap();
        assert!(
            (report.hit_proportion - 0.05).abs() < 0.02,
            "hit {}",
            report.hit_proportion
        );
        assert!(report.mean < 0.0);
    }
}
