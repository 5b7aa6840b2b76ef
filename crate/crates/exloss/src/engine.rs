//! Loss-difference curves over a `theta` grid, Murphy curves, and the
//! sup-type test statistic.
//!
//! For a fixed observation the extremal loss, as a function of `theta`, is
//! supported on `[min(x,y), max(x,y))` and linear there (constant for the
//! quantile loss). A curve over the whole grid is therefore evaluated by an
//! event sweep: activate each observation's linear piece at the support
//! start, deactivate it at the end, and read off the running affine function
//! at every grid point. That is O((T + G) log) per curve instead of O(T*G),
//! which is what makes the bootstrap studies affordable.

use crate::error::{Error, Result};
use crate::loss::{Alpha, Functional};
use crate::panel::{ForecastPanel, PanelSlice};
use crate::rng::stream_rng;
use serde::{Deserialize, Serialize};

const GRID_STREAM_TAG: u64 = 0x6772_6964; // "grid"

/// How a `theta` grid was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum GridMode {
    /// All distinct sample points of the involved series.
    AllSamplePoints,
    /// A deterministic uniform subsample (without replacement) of the
    /// distinct sample points.
    Subsample { n: usize, seed: u64 },
    /// Equally spaced points with inclusive endpoints.
    Linspace { lo: f64, hi: f64, n: usize },
    /// Points supplied directly by the caller.
    Explicit,
}

/// Sorted, distinct evaluation points for the sup statistic.
///
/// The extremal expectile loss jumps at `theta = x` (the indicator
/// `1{theta<x}` is right-continuous), so a supremum can be attained only as
/// a left limit. Augmented grids therefore carry, for each point `p`, the
/// companion `p - max(|p|, 1) * 2^-40`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    points: Vec<f64>,
    provenance: GridMode,
    left_limit_augmented: bool,
}

impl ThetaGrid {
    /// Grid from caller-supplied points; sorted and deduplicated here.
    pub fn from_points(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("theta grid has no points".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("theta grid points must be finite".into()));
        }
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup();
        Ok(ThetaGrid {
            points,
            provenance: GridMode::Explicit,
            left_limit_augmented: false,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn provenance(&self) -> GridMode {
        self.provenance
    }

    pub fn is_left_limit_augmented(&self) -> bool {
        self.left_limit_augmented
    }

    /// Add, for each point `p`, the left-limit companion
    /// `p - max(|p|, 1) * 2^-40`.
    pub fn with_left_limits(mut self) -> Self {
        if self.left_limit_augmented {
            return self;
        }
        let mut augmented = Vec::with_capacity(2 * self.points.len());
        for &p in &self.points {
            augmented.push(p - p.abs().max(1.0) * 2f64.powi(-40));
            augmented.push(p);
        }
        augmented.sort_by(|a, b| a.partial_cmp(b).unwrap());
        augmented.dedup();
        self.points = augmented;
        self.left_limit_augmented = true;
        self
    }
}

fn involved_values(panel: &ForecastPanel, pairs: &[PanelSlice]) -> Result<Vec<f64>> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("at least one pair is required".into()));
    }
    let mut series: Vec<usize> = Vec::new();
    for pair in pairs {
        pair.validate_against(panel)?;
        for idx in [pair.benchmark, pair.competitor] {
            if !series.contains(&idx) {
                series.push(idx);
            }
        }
    }
    let mut values: Vec<f64> = panel.realized().to_vec();
    for idx in series {
        values.extend_from_slice(panel.series(idx));
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    Ok(values)
}

/// Build the `theta` evaluation grid for a panel and pair set.
///
/// `AllSamplePoints` and `Subsample` grids are left-limit augmented;
/// `Linspace` and `Explicit` grids are not.
pub fn build_theta_grid(
    panel: &ForecastPanel,
    pairs: &[PanelSlice],
    mode: GridMode,
) -> Result<ThetaGrid> {
    match mode {
        GridMode::AllSamplePoints => {
            let points = involved_values(panel, pairs)?;
            Ok(ThetaGrid {
                points,
                provenance: GridMode::AllSamplePoints,
                left_limit_augmented: false,
            }
            .with_left_limits())
        }
        GridMode::Subsample { n, seed } => {
            let distinct = involved_values(panel, pairs)?;
            if n < 2 {
                return Err(Error::InvalidArgument(format!(
                    "subsample size must be at least 2, got {n}"
                )));
            }
            if n > distinct.len() {
                return Err(Error::InvalidArgument(format!(
                    "subsample size {n} exceeds {} distinct sample points",
                    distinct.len()
                )));
            }
            let mut rng = stream_rng(seed, &[GRID_STREAM_TAG]);
            let chosen = rand::seq::index::sample(&mut rng, distinct.len(), n);
            let mut points: Vec<f64> = chosen.iter().map(|i| distinct[i]).collect();
            points.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Ok(ThetaGrid {
                points,
                provenance: mode,
                left_limit_augmented: false,
            }
            .with_left_limits())
        }
        GridMode::Linspace { lo, hi, n } => {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidArgument(format!(
                    "linspace requires finite lo < hi, got [{lo}, {hi}]"
                )));
            }
            if n < 2 {
                return Err(Error::InvalidArgument(format!(
                    "linspace requires n >= 2, got {n}"
                )));
            }
            let step = (hi - lo) / (n - 1) as f64;
            let points: Vec<f64> = (0..n)
                .map(|i| if i + 1 == n { hi } else { lo + i as f64 * step })
                .collect();
            Ok(ThetaGrid {
                points,
                provenance: mode,
                left_limit_augmented: false,
            })
        }
        GridMode::Explicit => Err(Error::InvalidArgument(
            "explicit grids are built with ThetaGrid::from_points".into(),
        )),
    }
}

/// Grid points above which the default grid falls back to a subsample.
pub const GRID_SUBSAMPLE_LIMIT: usize = 10_000;

/// The default grid: all sample points with left-limit augmentation, or a
/// seeded subsample of [`GRID_SUBSAMPLE_LIMIT`] points when the panel is
/// large enough that the full grid would exceed the limit.
pub fn build_default_theta_grid(
    panel: &ForecastPanel,
    pairs: &[PanelSlice],
    seed: u64,
) -> Result<ThetaGrid> {
    let distinct = involved_values(panel, pairs)?.len();
    if distinct > GRID_SUBSAMPLE_LIMIT {
        build_theta_grid(
            panel,
            pairs,
            GridMode::Subsample {
                n: GRID_SUBSAMPLE_LIMIT,
                seed,
            },
        )
    } else {
        build_theta_grid(panel, pairs, GridMode::AllSamplePoints)
    }
}

/// The linear piece contributed by one observation: the extremal loss equals
/// `a + b*theta` on `[start, end)` and 0 elsewhere.
#[inline]
fn interval_piece(kind: Functional, alpha: f64, x: f64, y: f64) -> Option<(f64, f64, f64, f64)> {
    if x == y {
        return None;
    }
    let w = (if y < x { 1.0 } else { 0.0 } - alpha).abs();
    let (start, end) = (x.min(y), x.max(y));
    match kind {
        Functional::Expectile => {
            // on the support the loss is w*|y - theta|
            if y > x {
                Some((start, end, w * y, -w))
            } else {
                Some((start, end, -w * y, w))
            }
        }
        Functional::Quantile => Some((start, end, w, 0.0)),
    }
}

/// Event-sweep representation of one pair's summed loss difference
/// `sum_t [L(x_k, y) - L(x_l, y)]` as a piecewise linear function of theta.
#[derive(Debug, Clone)]
pub(crate) struct PairEvents {
    /// Event locations, ascending.
    locs: Vec<f64>,
    /// Change to the constant term at each event.
    consts: Vec<f64>,
    /// Change to the slope at each event.
    slopes: Vec<f64>,
    /// Originating panel row of each event, for resample weighting.
    rows: Vec<u32>,
    /// Panel length used for normalization.
    t_len: usize,
}

impl PairEvents {
    pub(crate) fn build(
        panel: &ForecastPanel,
        pair: PanelSlice,
        kind: Functional,
        alpha: Alpha,
    ) -> Result<Self> {
        pair.validate_against(panel)?;
        let a = alpha.value();
        let xk = panel.series(pair.benchmark);
        let xl = panel.series(pair.competitor);
        let ys = panel.realized();
        let t_len = panel.len();
        let mut events: Vec<(f64, f64, f64, u32)> = Vec::with_capacity(4 * t_len);
        for t in 0..t_len {
            // identical forecasts contribute exactly zero; skipping them keeps
            // the all-zero case free of rounding residue
            if xk[t] == xl[t] {
                continue;
            }
            let row = t as u32;
            if let Some((start, end, c, s)) = interval_piece(kind, a, xk[t], ys[t]) {
                events.push((start, c, s, row));
                events.push((end, -c, -s, row));
            }
            if let Some((start, end, c, s)) = interval_piece(kind, a, xl[t], ys[t]) {
                events.push((start, -c, -s, row));
                events.push((end, c, s, row));
            }
        }
        events.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        let mut out = PairEvents {
            locs: Vec::with_capacity(events.len()),
            consts: Vec::with_capacity(events.len()),
            slopes: Vec::with_capacity(events.len()),
            rows: Vec::with_capacity(events.len()),
            t_len,
        };
        for (loc, c, s, row) in events {
            out.locs.push(loc);
            out.consts.push(c);
            out.slopes.push(s);
            out.rows.push(row);
        }
        Ok(out)
    }

    /// Mean loss difference at every grid point:
    /// `(1/T) sum_t w_t [L(x_k, y_t) - L(x_l, y_t)](theta)`.
    ///
    /// `row_weights`, when given, weights each observation (used with
    /// resample multiplicities); otherwise every row has weight 1.
    pub(crate) fn sweep(&self, grid: &[f64], row_weights: Option<&[f64]>) -> Vec<f64> {
        let inv_t = 1.0 / self.t_len as f64;
        let mut values = Vec::with_capacity(grid.len());
        let mut constant = 0.0;
        let mut slope = 0.0;
        let mut next = 0usize;
        for &theta in grid {
            while next < self.locs.len() && self.locs[next] <= theta {
                let w = row_weights.map_or(1.0, |m| m[self.rows[next] as usize]);
                constant += w * self.consts[next];
                slope += w * self.slopes[next];
                next += 1;
            }
            values.push((constant + slope * theta) * inv_t);
        }
        values
    }
}

/// Sampled loss-difference curve `theta -> D(theta)` for one pair.
#[derive(Debug, Clone)]
pub struct DiffCurve {
    pub theta: ThetaGrid,
    pub values: Vec<f64>,
    pub pair: PanelSlice,
    pub alpha: Alpha,
    pub kind: Functional,
}

impl DiffCurve {
    /// Largest value and the theta attaining it (first occurrence).
    pub fn max(&self) -> (f64, f64) {
        let mut best = f64::NEG_INFINITY;
        let mut best_theta = self.theta.points()[0];
        for (&theta, &v) in self.theta.points().iter().zip(&self.values) {
            if v > best {
                best = v;
                best_theta = theta;
            }
        }
        (best, best_theta)
    }
}

/// Sample analogue of the expected extremal-loss difference
/// `(1/T) sum_t [L_theta(x_benchmark, y) - L_theta(x_competitor, y)]`
/// at every grid point.
pub fn loss_diff_curve(
    panel: &ForecastPanel,
    pair: PanelSlice,
    kind: Functional,
    alpha: Alpha,
    grid: &ThetaGrid,
) -> Result<DiffCurve> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("theta grid has no points".into()));
    }
    let events = PairEvents::build(panel, pair, kind, alpha)?;
    let values = events.sweep(grid.points(), None);
    Ok(DiffCurve {
        theta: grid.clone(),
        values,
        pair,
        alpha,
        kind,
    })
}

/// Per-series mean extremal loss at every grid point, the data behind a
/// Murphy diagram.
#[derive(Debug, Clone)]
pub struct MurphyCurve {
    pub theta: ThetaGrid,
    /// `losses[k][j]` is the mean extremal loss of series `k` at grid point `j`.
    pub losses: Vec<Vec<f64>>,
    pub alpha: Alpha,
    pub kind: Functional,
}

/// Mean extremal loss of every forecast series at every grid point.
pub fn murphy_curve(
    panel: &ForecastPanel,
    kind: Functional,
    alpha: Alpha,
    grid: &ThetaGrid,
) -> Result<MurphyCurve> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("theta grid has no points".into()));
    }
    if panel.is_empty() {
        return Err(Error::EmptyInput("panel has no rows".into()));
    }
    let a = alpha.value();
    let inv_t = 1.0 / panel.len() as f64;
    let mut losses = Vec::with_capacity(panel.series_count());
    for k in 0..panel.series_count() {
        let xs = panel.series(k);
        let ys = panel.realized();
        let mut events: Vec<(f64, f64, f64)> = Vec::with_capacity(2 * panel.len());
        for t in 0..panel.len() {
            if let Some((start, end, c, s)) = interval_piece(kind, a, xs[t], ys[t]) {
                events.push((start, c, s));
                events.push((end, -c, -s));
            }
        }
        events.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        let mut constant = 0.0;
        let mut slope = 0.0;
        let mut next = 0usize;
        let mut column = Vec::with_capacity(grid.len());
        for &theta in grid.points() {
            while next < events.len() && events[next].0 <= theta {
                constant += events[next].1;
                slope += events[next].2;
                next += 1;
            }
            column.push((constant + slope * theta) * inv_t);
        }
        losses.push(column);
    }
    Ok(MurphyCurve {
        theta: grid.clone(),
        losses,
        alpha,
        kind,
    })
}

/// The sup statistic and where it was attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupStatistic {
    /// `max over pairs, sup over theta of sqrt(T) * D(theta)`.
    pub value: f64,
    pub pair: PanelSlice,
    pub theta: f64,
}

/// Sup-type test statistic over a list of benchmark/competitor pairs.
///
/// Ties are broken by pair order, then by the smallest theta.
pub fn sup_statistic(
    panel: &ForecastPanel,
    pairs: &[PanelSlice],
    kind: Functional,
    alpha: Alpha,
    grid: &ThetaGrid,
) -> Result<SupStatistic> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("at least one pair is required".into()));
    }
    if grid.is_empty() {
        return Err(Error::EmptyInput("theta grid has no points".into()));
    }
    let scale = (panel.len() as f64).sqrt();
    let mut best: Option<SupStatistic> = None;
    for &pair in pairs {
        let events = PairEvents::build(panel, pair, kind, alpha)?;
        let values = events.sweep(grid.points(), None);
        for (&theta, &v) in grid.points().iter().zip(&values) {
            let scaled = scale * v;
            if best.map_or(true, |b| scaled > b.value) {
                best = Some(SupStatistic {
                    value: scaled,
                    pair,
                    theta,
                });
            }
        }
    }
    Ok(best.expect("pairs and grid are non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{extremal_expectile_loss, extremal_quantile_loss};
    use approx::assert_abs_diff_eq;

    fn alpha(a: f64) -> Alpha {
        Alpha::new(a).unwrap()
    }

    fn panel_2x2() -> ForecastPanel {
        // rows: y = (1, -1); benchmark (0, 0); competitor (2, -2)
        ForecastPanel::new(
            vec![1.0, -1.0],
            vec!["xk".into(), "xl".into()],
            vec![vec![0.0, 0.0], vec![2.0, -2.0]],
        )
        .unwrap()
    }

    /// Direct per-(t, theta) evaluation used as the oracle for the sweep.
    fn naive_curve(
        panel: &ForecastPanel,
        pair: PanelSlice,
        kind: Functional,
        alpha: Alpha,
        grid: &ThetaGrid,
    ) -> Vec<f64> {
        let eval = |theta: f64, x: f64, y: f64| match kind {
            Functional::Expectile => extremal_expectile_loss(theta, alpha, x, y).unwrap(),
            Functional::Quantile => extremal_quantile_loss(theta, alpha, x, y).unwrap(),
        };
        grid.points()
            .iter()
            .map(|&theta| {
                let mut acc = 0.0;
                for t in 0..panel.len() {
                    let y = panel.realized()[t];
                    acc += eval(theta, panel.series(pair.benchmark)[t], y)
                        - eval(theta, panel.series(pair.competitor)[t], y);
                }
                acc / panel.len() as f64
            })
            .collect()
    }

    #[test]
    fn grid_from_sample_points() {
        let panel = ForecastPanel::new(
            vec![1.0, 0.0],
            vec!["a".into(), "b".into()],
            vec![vec![2.0, -1.0], vec![0.0, -2.0]],
        )
        .unwrap();
        let pairs = [PanelSlice::new(0, 1).unwrap()];
        let grid = build_theta_grid(&panel, &pairs, GridMode::AllSamplePoints).unwrap();
        assert!(grid.is_left_limit_augmented());
        // distinct sample values -2, -1, 0, 1, 2 plus a left companion each
        assert_eq!(grid.len(), 10);
        let plain: Vec<f64> = grid
            .points()
            .iter()
            .copied()
            .filter(|p| p.fract() == 0.0)
            .collect();
        assert_eq!(plain, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn linspace_grid_has_inclusive_endpoints() {
        let panel = panel_2x2();
        let pairs = [PanelSlice::new(0, 1).unwrap()];
        let grid = build_theta_grid(
            &panel,
            &pairs,
            GridMode::Linspace {
                lo: 0.0,
                hi: 1.0,
                n: 3,
            },
        )
        .unwrap();
        assert_eq!(grid.points(), &[0.0, 0.5, 1.0]);
        assert!(!grid.is_left_limit_augmented());
    }

    #[test]
    fn subsample_grid_is_deterministic() {
        let panel = panel_2x2();
        let pairs = [PanelSlice::new(0, 1).unwrap()];
        let mode = GridMode::Subsample { n: 3, seed: 7 };
        let g1 = build_theta_grid(&panel, &pairs, mode).unwrap();
        let g2 = build_theta_grid(&panel, &pairs, mode).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(g1.len(), 6); // 3 points, left-limit augmented

        let too_many = GridMode::Subsample { n: 100, seed: 7 };
        assert!(build_theta_grid(&panel, &pairs, too_many).is_err());
    }

    #[test]
    fn diff_curve_hand_example() {
        let panel = panel_2x2();
        let pair = PanelSlice::new(0, 1).unwrap();
        let grid = ThetaGrid::from_points(vec![0.0]).unwrap();
        let curve =
            loss_diff_curve(&panel, pair, Functional::Expectile, alpha(0.5), &grid).unwrap();
        assert_abs_diff_eq!(curve.values[0], 0.25, epsilon = 1e-15);

        let sup = sup_statistic(&panel, &[pair], Functional::Expectile, alpha(0.5), &grid)
            .unwrap();
        assert_abs_diff_eq!(sup.value, 2.0_f64.sqrt() * 0.25, epsilon = 1e-15);
    }

    #[test]
    fn identical_forecasts_give_exact_zero() {
        let panel = ForecastPanel::new(
            vec![1.0, -1.0, 0.5],
            vec!["a".into(), "b".into()],
            vec![vec![0.3, -0.4, 2.0], vec![0.3, -0.4, 2.0]],
        )
        .unwrap();
        let pair = PanelSlice::new(0, 1).unwrap();
        let grid = build_theta_grid(&panel, &[pair], GridMode::AllSamplePoints).unwrap();
        for kind in [Functional::Expectile, Functional::Quantile] {
            let curve = loss_diff_curve(&panel, pair, kind, alpha(0.3), &grid).unwrap();
            assert!(curve.values.iter().all(|&v| v == 0.0));
            let sup = sup_statistic(&panel, &[pair], kind, alpha(0.3), &grid).unwrap();
            assert_eq!(sup.value, 0.0);
        }
    }

    #[test]
    fn sweep_matches_naive_evaluation() {
        let mut rng = stream_rng(11, &[1]);
        use rand::Rng;
        for _ in 0..25 {
            let t = rng.random_range(1..40);
            let realized: Vec<f64> = (0..t).map(|_| rng.random_range(-3.0..3.0)).collect();
            let f1: Vec<f64> = (0..t).map(|_| rng.random_range(-3.0..3.0)).collect();
            let f2: Vec<f64> = (0..t).map(|_| rng.random_range(-3.0..3.0)).collect();
            let panel = ForecastPanel::new(
                realized,
                vec!["f1".into(), "f2".into()],
                vec![f1, f2],
            )
            .unwrap();
            let pair = PanelSlice::new(0, 1).unwrap();
            let grid = build_theta_grid(&panel, &[pair], GridMode::AllSamplePoints).unwrap();
            let a = alpha(rng.random_range(0.05..0.95));
            for kind in [Functional::Expectile, Functional::Quantile] {
                let fast = loss_diff_curve(&panel, pair, kind, a, &grid).unwrap();
                let slow = naive_curve(&panel, pair, kind, a, &grid);
                for (u, v) in fast.values.iter().zip(&slow) {
                    assert_abs_diff_eq!(u, v, epsilon = 1e-11);
                }
            }
        }
    }

    #[test]
    fn antisymmetry_is_exact() {
        let panel = panel_2x2();
        let pair = PanelSlice::new(0, 1).unwrap();
        let grid = build_theta_grid(&panel, &[pair], GridMode::AllSamplePoints).unwrap();
        for kind in [Functional::Expectile, Functional::Quantile] {
            let fwd = loss_diff_curve(&panel, pair, kind, alpha(0.4), &grid).unwrap();
            let rev = loss_diff_curve(&panel, pair.reversed(), kind, alpha(0.4), &grid).unwrap();
            for (u, v) in fwd.values.iter().zip(&rev.values) {
                assert_eq!(*u, -*v);
            }
        }
    }

    #[test]
    fn grid_refinement_is_monotone() {
        let panel = panel_2x2();
        let pair = PanelSlice::new(0, 1).unwrap();
        let coarse = ThetaGrid::from_points(vec![-1.0, 1.0]).unwrap();
        let fine = ThetaGrid::from_points(vec![-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap();
        for kind in [Functional::Expectile, Functional::Quantile] {
            let s_coarse =
                sup_statistic(&panel, &[pair], kind, alpha(0.3), &coarse).unwrap();
            let s_fine = sup_statistic(&panel, &[pair], kind, alpha(0.3), &fine).unwrap();
            assert!(s_fine.value >= s_coarse.value);
        }
    }

    #[test]
    fn quantile_sup_on_augmented_sample_grid_attains_dense_supremum() {
        let mut rng = stream_rng(5, &[2]);
        use rand::Rng;
        for _ in 0..10 {
            let t = rng.random_range(2..25);
            let realized: Vec<f64> = (0..t).map(|_| rng.random_range(-2.0..2.0)).collect();
            let f1: Vec<f64> = (0..t).map(|_| rng.random_range(-2.0..2.0)).collect();
            let f2: Vec<f64> = (0..t).map(|_| rng.random_range(-2.0..2.0)).collect();
            let panel = ForecastPanel::new(
                realized,
                vec!["f1".into(), "f2".into()],
                vec![f1, f2],
            )
            .unwrap();
            let pair = PanelSlice::new(0, 1).unwrap();
            let grid = build_theta_grid(&panel, &[pair], GridMode::AllSamplePoints).unwrap();
            let a = alpha(0.25);
            let sup =
                sup_statistic(&panel, &[pair], Functional::Quantile, a, &grid).unwrap();

            let dense = ThetaGrid::from_points(
                (0..10_000).map(|i| -3.0 + 6.0 * i as f64 / 9_999.0).collect(),
            )
            .unwrap();
            let dense_sup =
                sup_statistic(&panel, &[pair], Functional::Quantile, a, &dense).unwrap();
            assert!(
                sup.value >= dense_sup.value - 1e-12,
                "sample grid {} < dense {}",
                sup.value,
                dense_sup.value
            );
        }
    }

    #[test]
    fn argmax_prefers_first_pair_and_smallest_theta() {
        // competitor series shifted down, so pair (0, 1) dominates everywhere
        let panel = ForecastPanel::new(
            vec![0.0, 0.0, 0.0],
            vec!["far".into(), "near".into(), "mid".into()],
            vec![
                vec![3.0, 3.0, 3.0],
                vec![0.5, 0.5, 0.5],
                vec![1.5, 1.5, 1.5],
            ],
        )
        .unwrap();
        let pairs = [
            PanelSlice::new(0, 1).unwrap(),
            PanelSlice::new(2, 1).unwrap(),
        ];
        let grid = build_theta_grid(&panel, &pairs, GridMode::AllSamplePoints).unwrap();
        let sup =
            sup_statistic(&panel, &pairs, Functional::Quantile, alpha(0.5), &grid).unwrap();
        assert_eq!(sup.pair, pairs[0]);
    }

    #[test]
    fn murphy_curve_perfect_forecast_column_is_zero() {
        let realized = vec![1.0, -1.0, 0.25];
        let panel = ForecastPanel::new(
            realized.clone(),
            vec!["perfect".into(), "other".into()],
            vec![realized, vec![0.0, 0.0, 0.0]],
        )
        .unwrap();
        let pairs = [PanelSlice::new(0, 1).unwrap()];
        let grid = build_theta_grid(&panel, &pairs, GridMode::AllSamplePoints).unwrap();
        let murphy = murphy_curve(&panel, Functional::Quantile, alpha(0.1), &grid).unwrap();
        assert!(murphy.losses[0].iter().all(|&v| v == 0.0));
        assert!(murphy.losses[1].iter().any(|&v| v > 0.0));
    }

    #[test]
    fn murphy_single_row_equals_scalar_loss() {
        let panel = ForecastPanel::new(
            vec![1.0],
            vec!["f".into()],
            vec![vec![0.0]],
        )
        .unwrap();
        let grid = ThetaGrid::from_points(vec![0.5]).unwrap();
        let murphy = murphy_curve(&panel, Functional::Expectile, alpha(0.5), &grid).unwrap();
        let expected = extremal_expectile_loss(0.5, alpha(0.5), 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(murphy.losses[0][0], expected, epsilon = 1e-15);
    }

    #[test]
    fn murphy_difference_matches_diff_curve() {
        let panel = panel_2x2();
        let grid = ThetaGrid::from_points(vec![0.0]).unwrap();
        let murphy = murphy_curve(&panel, Functional::Expectile, alpha(0.5), &grid).unwrap();
        assert_abs_diff_eq!(
            murphy.losses[0][0] - murphy.losses[1][0],
            0.25,
            epsilon = 1e-15
        );
    }
}
