//! Forecast-accuracy tests for expectiles and quantiles that hold uniformly
//! over all consistent scoring functions.
//!
//! A Diebold-Mariano style comparison commits to one loss function; two
//! forecasts can swap ranks when the loss changes. The tests in this crate
//! compare a benchmark against competitors under the *extremal* consistent
//! losses of Ehm, Gneiting, Jordan and Krüger (2016), whose nonnegative
//! mixtures span every consistent loss for the target expectile or quantile.
//! Rejecting the null that the benchmark performs at least as well at every
//! extremal parameter `theta` means some consistent loss prefers the
//! competitor; failing to reject means no consistent loss does.
//!
//! The main entry points:
//!
//! - [`loss`] — consistent and extremal loss functions and their Choquet
//!   mixture representations.
//! - [`panel`] — the aligned forecast/realization data model and CSV/JSON IO.
//! - [`engine`] — loss-difference curves over a `theta` grid, Murphy curves,
//!   and the sup-type test statistic.
//! - [`bootstrap`] — stationary (Politis-Romano) resampling and the
//!   re-centered bootstrap test.
//! - [`dm`] — Diebold-Mariano baseline with Newey-West standard errors.
//! - [`risk`] — VaR forecasting methods (sample quantile, normal, CAViaR)
//!   with rolling backtests.
//! - [`sim`] — simulation designs, analytic expected-loss oracles, and
//!   rejection-frequency studies.

pub mod bootstrap;
pub mod dm;
pub mod engine;
pub mod error;
pub mod loss;
pub mod normal;
pub mod panel;
pub mod risk;
pub mod rng;
pub mod sim;
pub mod simplex;

pub use bootstrap::{
    empirical_quantile, recentered_bootstrap_test, stationary_resample_indices, BlockLength,
    BootstrapConfig, BootstrapDistribution, TestReport,
};
pub use dm::{dm_test, newey_west_variance, DmLag, DmLoss, DmReport};
pub use engine::{
    build_theta_grid, loss_diff_curve, murphy_curve, sup_statistic, DiffCurve, GridMode,
    MurphyCurve, SupStatistic, ThetaGrid,
};
pub use error::{Error, Result};
pub use loss::{
    consistent_loss, extremal_expectile_loss, extremal_quantile_loss, mixture_loss, Alpha,
    Functional, LossFamily, LossSpec, MixtureSpec,
};
pub use panel::{read_panel_csv, report_to_json, ForecastPanel, PanelSlice};
pub use risk::{
    caviar_path, estimate_caviar, garch11_fit, ols_fit, rolling_var_backtest, sample_expectile,
    sample_quantile, tick_loss_objective, BacktestReport, CaviarParams, Garch11Fit, VarMethod,
};
pub use sim::{
    analytic_loss_diff, generate_scenario, normal_expectile, normal_expectile_scale,
    normal_quantile_scale, run_rejection_study, size_power_curve, AnalyticLoss, ScenarioSpec,
    SizePowerCurve, StudyResult, StudySpec,
};
pub use simplex::{nelder_mead, NelderMeadConfig, NelderMeadOutcome};
