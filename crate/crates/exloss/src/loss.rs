//! Consistent and extremal loss functions for expectile and quantile
//! forecasts, and their Choquet mixture representations.
//!
//! Every consistent loss for an alpha-expectile is a nonnegative mixture of
//! the one-parameter extremal losses `L_theta` (Ehm et al. 2016); likewise
//! for quantiles. [`consistent_loss`] evaluates the named families directly,
//! [`mixture_loss`] reconstructs them by integrating extremal losses against
//! the family's mixing density, and the two must agree to integration
//! tolerance.
//!
//! Indicator conventions are strict throughout: `1{y<x}` and `1{theta<x}`,
//! with ties taking the value 0, so losses are right-continuous in `theta`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Functional targeted by a forecast: an expectile or a quantile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Functional {
    Expectile,
    Quantile,
}

impl std::fmt::Display for Functional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Functional::Expectile => write!(f, "expectile"),
            Functional::Quantile => write!(f, "quantile"),
        }
    }
}

/// Level of the target functional, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie strictly in (0, 1), got {alpha}"
            )));
        }
        Ok(Alpha(alpha))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// The loss families of the consistent-scoring catalogue.
///
/// Expectile-consistent families are Bregman losses `phi(y) - phi(x) -
/// phi'(x)(y - x)`; quantile-consistent families are generalized piecewise
/// linear losses `zeta(x) - zeta(y)`, both multiplied by the alpha weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum LossFamily {
    /// `phi(t) = t^2`.
    SquaredError,
    /// `phi(t) = exp(a t) / a^2`, `a != 0`.
    ExponentialBregman { a: f64 },
    /// `phi(t) = |t|^b`, `b > 1`.
    HomogeneousBregman { b: f64 },
    /// `phi(t) = -log t` on `t > 0`; the loss `y/x - log(y/x) - 1`.
    Qlike,
    /// `phi(t) = t^c / (c^2 - c)` on `t > 0`, `c` outside `{0, 1}`.
    HomogeneousPatton { c: f64 },
    /// `phi(t) = t log t + (1-t) log(1-t)` on `[0, 1]`; for binary outcomes
    /// this is proportional to the logistic negative log-likelihood.
    LogisticBregman,
    /// `zeta(t) = t`; the tick loss of quantile regression.
    LinLin,
    /// `zeta(t) = t / alpha`; its minimized expectation recovers expected
    /// shortfall.
    ScaledLinLin,
    /// `zeta(t) = t^c / c` on `t > 0`, `c != 0`.
    HomogeneousPower { c: f64 },
    /// `zeta(t) = log t` on `t > 0` (the power family at `c = 0`).
    LogPower,
    /// `phi(t) = (t - theta)_+`: the elementary expectile loss.
    ExtremalExpectile { theta: f64 },
    /// `zeta(t) = 1{theta < t}`: the elementary quantile loss.
    ExtremalQuantile { theta: f64 },
}

impl LossFamily {
    /// The functional this family is consistent for.
    pub fn functional(&self) -> Functional {
        match self {
            LossFamily::SquaredError
            | LossFamily::ExponentialBregman { .. }
            | LossFamily::HomogeneousBregman { .. }
            | LossFamily::Qlike
            | LossFamily::HomogeneousPatton { .. }
            | LossFamily::LogisticBregman
            | LossFamily::ExtremalExpectile { .. } => Functional::Expectile,
            LossFamily::LinLin
            | LossFamily::ScaledLinLin
            | LossFamily::HomogeneousPower { .. }
            | LossFamily::LogPower
            | LossFamily::ExtremalQuantile { .. } => Functional::Quantile,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossFamily::SquaredError => "squared-error",
            LossFamily::ExponentialBregman { .. } => "exponential-bregman",
            LossFamily::HomogeneousBregman { .. } => "homogeneous-bregman",
            LossFamily::Qlike => "qlike",
            LossFamily::HomogeneousPatton { .. } => "homogeneous-patton",
            LossFamily::LogisticBregman => "logistic-bregman",
            LossFamily::LinLin => "lin-lin",
            LossFamily::ScaledLinLin => "scaled-lin-lin",
            LossFamily::HomogeneousPower { .. } => "homogeneous-power",
            LossFamily::LogPower => "log-power",
            LossFamily::ExtremalExpectile { .. } => "extremal-expectile",
            LossFamily::ExtremalQuantile { .. } => "extremal-quantile",
        }
    }

    /// Check the family's parameter restrictions.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match *self {
            LossFamily::ExponentialBregman { a } if !a.is_finite() || a == 0.0 => {
                bad(format!("exponential-bregman requires finite a != 0, got {a}"))
            }
            LossFamily::HomogeneousBregman { b } if !b.is_finite() || b <= 1.0 => {
                bad(format!("homogeneous-bregman requires b > 1, got {b}"))
            }
            LossFamily::HomogeneousPatton { c } if !c.is_finite() || c == 0.0 || c == 1.0 => {
                bad(format!("homogeneous-patton requires c outside {{0, 1}}, got {c}"))
            }
            LossFamily::HomogeneousPower { c } if !c.is_finite() || c == 0.0 => {
                bad(format!("homogeneous-power requires c != 0, got {c}"))
            }
            LossFamily::ExtremalExpectile { theta } | LossFamily::ExtremalQuantile { theta }
                if !theta.is_finite() =>
            {
                bad(format!("extremal loss requires finite theta, got {theta}"))
            }
            _ => Ok(()),
        }
    }

    fn domain_check(&self, x: f64, y: f64) -> Result<()> {
        let err = |message: String| {
            Err(Error::Domain {
                family: self.name(),
                message,
            })
        };
        match self {
            LossFamily::Qlike
            | LossFamily::HomogeneousPatton { .. }
            | LossFamily::HomogeneousPower { .. }
            | LossFamily::LogPower => {
                if x <= 0.0 || y <= 0.0 {
                    return err(format!("requires x > 0 and y > 0, got x={x}, y={y}"));
                }
            }
            LossFamily::LogisticBregman => {
                if !(0.0..=1.0).contains(&x) {
                    return err(format!("requires x in [0, 1], got {x}"));
                }
                if y != 0.0 && y != 1.0 {
                    return err(format!("requires y in {{0, 1}}, got {y}"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// A loss family together with the functional level it scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub family: LossFamily,
    pub alpha: Alpha,
}

impl LossSpec {
    pub fn new(family: LossFamily, alpha: Alpha) -> Result<Self> {
        family.validate()?;
        Ok(LossSpec { family, alpha })
    }

    /// Evaluate the consistent loss of this spec at forecast `x` and
    /// realization `y`. See [`consistent_loss`].
    pub fn evaluate(&self, x: f64, y: f64) -> Result<f64> {
        consistent_loss(self, x, y)
    }
}

fn check_finite(what: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!("{what} must be finite, got {v}")));
    }
    Ok(())
}

#[inline]
fn indicator(cond: bool) -> f64 {
    if cond {
        1.0
    } else {
        0.0
    }
}

#[inline]
fn pos_part(v: f64) -> f64 {
    v.max(0.0)
}

/// Extremal consistent loss for the alpha-expectile:
/// `|1{y<x} - alpha| * [(y-theta)_+ - (x-theta)_+ - 1{theta<x}(y-x)]`.
///
/// Bounded by `max(alpha, 1-alpha) * |y - x|` and supported, as a function
/// of `theta`, on `[min(x,y), max(x,y))`.
pub fn extremal_expectile_loss(theta: f64, alpha: Alpha, x: f64, y: f64) -> Result<f64> {
    check_finite("theta", theta)?;
    check_finite("forecast x", x)?;
    check_finite("realization y", y)?;
    let w = (indicator(y < x) - alpha.value()).abs();
    let bracket = pos_part(y - theta) - pos_part(x - theta) - indicator(theta < x) * (y - x);
    Ok(w * bracket)
}

/// Extremal consistent loss for the alpha-quantile:
/// `(1{y<x} - alpha) * (1{theta<x} - 1{theta<y})`.
///
/// Bounded by `max(alpha, 1-alpha)`.
pub fn extremal_quantile_loss(theta: f64, alpha: Alpha, x: f64, y: f64) -> Result<f64> {
    check_finite("theta", theta)?;
    check_finite("forecast x", x)?;
    check_finite("realization y", y)?;
    let lhs = indicator(y < x) - alpha.value();
    let rhs = indicator(theta < x) - indicator(theta < y);
    Ok(lhs * rhs)
}

/// Evaluate the consistent loss `spec` at forecast `x` and realization `y`.
///
/// Expectile families return `|1{y<x} - alpha| * L_E(x, y)`; quantile
/// families return `(1{y<x} - alpha) * (zeta(x) - zeta(y))`. Inputs outside
/// a family's domain are a hard error, not a NaN.
pub fn consistent_loss(spec: &LossSpec, x: f64, y: f64) -> Result<f64> {
    check_finite("forecast x", x)?;
    check_finite("realization y", y)?;
    spec.family.validate()?;
    spec.family.domain_check(x, y)?;
    let alpha = spec.alpha.value();
    let expectile_weight = (indicator(y < x) - alpha).abs();
    let quantile_weight = indicator(y < x) - alpha;

    let value = match spec.family {
        LossFamily::SquaredError => expectile_weight * (x - y) * (x - y),
        LossFamily::ExponentialBregman { a } => {
            let base = ((a * y).exp() - (a * x).exp()) / (a * a) - (a * x).exp() * (y - x) / a;
            expectile_weight * base
        }
        LossFamily::HomogeneousBregman { b } => {
            let base = y.abs().powf(b) - x.abs().powf(b)
                - b * x.signum() * x.abs().powf(b - 1.0) * (y - x);
            // signum(0) is +-1 in IEEE; the factor |x|^{b-1} is 0 there anyway
            expectile_weight * base
        }
        LossFamily::Qlike => expectile_weight * (y / x - (y / x).ln() - 1.0),
        LossFamily::HomogeneousPatton { c } => {
            let base = (y.powf(c) - x.powf(c)) / (c * c - c) - x.powf(c - 1.0) * (y - x) / (c - 1.0);
            expectile_weight * base
        }
        LossFamily::LogisticBregman => {
            // phi(y) = 0 for y in {0, 1}; the loss reduces to -log x (y = 1)
            // or -log(1 - x) (y = 0), times the alpha weight.
            let base = if y == 1.0 { -x.ln() } else { -(1.0 - x).ln() };
            let base = if x == y { 0.0 } else { base };
            expectile_weight * base
        }
        LossFamily::LinLin => quantile_weight * (x - y),
        LossFamily::ScaledLinLin => quantile_weight * (x - y) / alpha,
        LossFamily::HomogeneousPower { c } => quantile_weight * (x.powf(c) - y.powf(c)) / c,
        LossFamily::LogPower => quantile_weight * (x.ln() - y.ln()),
        LossFamily::ExtremalExpectile { theta } => {
            return extremal_expectile_loss(theta, spec.alpha, x, y)
        }
        LossFamily::ExtremalQuantile { theta } => {
            return extremal_quantile_loss(theta, spec.alpha, x, y)
        }
    };
    if !value.is_finite() {
        return Err(Error::Domain {
            family: spec.family.name(),
            message: format!("loss is not finite at x={x}, y={y}"),
        });
    }
    Ok(value)
}

/// Default node count for mixture quadrature.
pub const DEFAULT_MIXTURE_NODES: usize = 2001;

/// An atom of a mixing measure: `weight * L_{location,alpha}(x, y)` is added
/// to the integral exactly, never smeared onto the quadrature grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    pub location: f64,
    pub weight: f64,
}

/// Numerical reconstruction of a consistent loss from its extremal-loss
/// mixture representation.
///
/// The mixing density `dH/dtheta` (expectile families) or `dG/dtheta`
/// (quantile families) is the derivative of `phi'` or `zeta`; integrating
/// the extremal loss against it over a range covering `[min(x,y), max(x,y)]`
/// recovers the consistent loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub family: LossFamily,
    pub lo: f64,
    pub hi: f64,
    pub node_count: usize,
    pub point_masses: Vec<PointMass>,
}

impl MixtureSpec {
    pub fn new(family: LossFamily, lo: f64, hi: f64, node_count: usize) -> Result<Self> {
        family.validate()?;
        if matches!(
            family,
            LossFamily::ExtremalExpectile { .. } | LossFamily::ExtremalQuantile { .. }
        ) {
            return Err(Error::InvalidArgument(
                "extremal losses are the mixture components, not mixture targets".into(),
            ));
        }
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "mixture range must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        if node_count < 3 {
            return Err(Error::InvalidArgument(format!(
                "mixture node_count must be at least 3, got {node_count}"
            )));
        }
        Ok(MixtureSpec {
            family,
            lo,
            hi,
            node_count,
            point_masses: Vec::new(),
        })
    }

    /// Range `[min - 1, max + 1]` over the given sample values, with the
    /// default node count.
    pub fn with_auto_range(family: LossFamily, values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("mixture auto range needs sample values".into()));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in values {
            check_finite("sample value", v)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        MixtureSpec::new(family, lo - 1.0, hi + 1.0, DEFAULT_MIXTURE_NODES)
    }

    pub fn with_point_masses(mut self, masses: Vec<PointMass>) -> Result<Self> {
        for m in &masses {
            if !m.location.is_finite() || !m.weight.is_finite() {
                return Err(Error::InvalidArgument("point mass must be finite".into()));
            }
            if m.weight < 0.0 {
                return Err(Error::Density(format!(
                    "negative point mass {} at {}",
                    m.weight, m.location
                )));
            }
        }
        self.point_masses = masses;
        Ok(self)
    }

    /// Mixing density at `theta`; the scaled lin-lin measure depends on the
    /// level, so `alpha` is threaded through.
    fn density(&self, theta: f64, alpha: f64) -> f64 {
        match self.family {
            LossFamily::SquaredError => 2.0,
            LossFamily::ExponentialBregman { a } => (a * theta).exp(),
            LossFamily::HomogeneousBregman { b } => b * (b - 1.0) * theta.abs().powf(b - 2.0),
            LossFamily::Qlike => theta.powi(-2),
            LossFamily::HomogeneousPatton { c } => theta.powf(c - 2.0),
            LossFamily::LogisticBregman => 1.0 / (theta * (1.0 - theta)),
            LossFamily::LinLin => 1.0,
            LossFamily::ScaledLinLin => 1.0 / alpha,
            LossFamily::HomogeneousPower { c } => theta.powf(c - 1.0),
            LossFamily::LogPower => 1.0 / theta,
            LossFamily::ExtremalExpectile { .. } | LossFamily::ExtremalQuantile { .. } => {
                unreachable!("rejected at construction")
            }
        }
    }
}

/// Evaluate the mixture representation of `mix.family` at `(x, y)`.
///
/// The integrand is supported on `[min(x,y), max(x,y))` and linear in
/// `theta` there, so integration runs over the support only: trapezoid on
/// the nodes of the `[lo, hi]` lattice that fall inside, with the support
/// endpoints added exactly. The homogeneous Bregman density
/// `b(b-1)|theta|^{b-2}` is unbounded at 0 for `b < 2`; that family is
/// integrated in closed form against the linear integrand instead.
pub fn mixture_loss(mix: &MixtureSpec, alpha: Alpha, x: f64, y: f64) -> Result<f64> {
    check_finite("forecast x", x)?;
    check_finite("realization y", y)?;
    mix.family.domain_check(x, y)?;
    let (support_lo, support_hi) = (x.min(y), x.max(y));
    if support_lo < mix.lo || support_hi > mix.hi {
        return Err(Error::Range(format!(
            "integration range [{}, {}] does not cover [{support_lo}, {support_hi}]",
            mix.lo, mix.hi
        )));
    }

    let mut total = 0.0;
    for m in &mix.point_masses {
        let spec_alpha = alpha;
        let atom_loss = match mix.family.functional() {
            Functional::Expectile => extremal_expectile_loss(m.location, spec_alpha, x, y)?,
            Functional::Quantile => extremal_quantile_loss(m.location, spec_alpha, x, y)?,
        };
        total += m.weight * atom_loss;
    }
    if x == y {
        return Ok(total);
    }

    let a = alpha.value();
    // On the support the extremal loss equals w*|y - theta| (expectile) or w
    // (quantile); both are linear in theta.
    let w = (indicator(y < x) - a).abs();
    let (f_const, f_slope) = match mix.family.functional() {
        Functional::Expectile => {
            if y > x {
                (w * y, -w)
            } else {
                (-w * y, w)
            }
        }
        Functional::Quantile => (w, 0.0),
    };

    // The integrand is exactly linear on the support, so the homogeneous
    // Bregman family (whose density |theta|^{b-2} is unbounded at 0 for
    // b < 2 and sharply curved nearby) integrates in closed form; trapezoid
    // nodes would need to resolve the singularity.
    if let LossFamily::HomogeneousBregman { b } = mix.family {
        return Ok(total + bregman_cell_exact(b, f_const, f_slope, support_lo, support_hi));
    }

    // Lattice nodes of [lo, hi] strictly inside the support, plus the exact
    // support endpoints: the extremal loss jumps at the support edge, and a
    // trapezoid cell across the jump would cost an order of accuracy.
    let h = (mix.hi - mix.lo) / (mix.node_count - 1) as f64;
    let mut nodes = Vec::with_capacity(((support_hi - support_lo) / h) as usize + 4);
    nodes.push(support_lo);
    let first = ((support_lo - mix.lo) / h).ceil() as i64;
    let last = ((support_hi - mix.lo) / h).floor() as i64;
    for k in first..=last {
        let t = mix.lo + k as f64 * h;
        if t > support_lo && t < support_hi {
            nodes.push(t);
        }
    }
    nodes.push(support_hi);

    let density = |theta: f64| -> Result<f64> {
        let d = mix.density(theta, a);
        if d < 0.0 {
            return Err(Error::Density(format!("density is negative at theta={theta}")));
        }
        Ok(d)
    };
    // Product of the linear integrand and the density, with the removable
    // logistic singularity at theta = y cancelled analytically.
    let integrand = |theta: f64| -> Result<f64> {
        if mix.family == LossFamily::LogisticBregman {
            let g = if y == 1.0 { w / theta } else { w / (1.0 - theta) };
            return Ok(g);
        }
        Ok((f_const + f_slope * theta) * density(theta)?)
    };

    let mut integral = 0.0;
    for cell in nodes.windows(2) {
        let (t0, t1) = (cell[0], cell[1]);
        if t1 <= t0 {
            continue;
        }
        integral += 0.5 * (t1 - t0) * (integrand(t0)? + integrand(t1)?);
    }
    Ok(total + integral)
}

/// Exact integral of `(f_const + f_slope*theta) * b(b-1)|theta|^{b-2}` over
/// `[t0, t1]`, splitting cells that straddle 0.
fn bregman_cell_exact(b: f64, f_const: f64, f_slope: f64, t0: f64, t1: f64) -> f64 {
    if t0 < 0.0 && t1 > 0.0 {
        return bregman_cell_exact(b, f_const, f_slope, t0, 0.0)
            + bregman_cell_exact(b, f_const, f_slope, 0.0, t1);
    }
    // Antiderivatives of |theta|^{b-2} and theta*|theta|^{b-2} on a
    // half-line; both vanish at 0 for b > 1.
    let i0 = |t: f64| t.signum() * t.abs().powf(b - 1.0) / (b - 1.0);
    let i1 = |t: f64| t.abs().powf(b) / b;
    b * (b - 1.0) * (f_const * (i0(t1) - i0(t0)) + f_slope * (i1(t1) - i1(t0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn alpha(a: f64) -> Alpha {
        Alpha::new(a).unwrap()
    }

    #[test]
    fn alpha_rejects_boundaries() {
        assert!(Alpha::new(0.0).is_err());
        assert!(Alpha::new(1.0).is_err());
        assert!(Alpha::new(-0.1).is_err());
        assert!(Alpha::new(f64::NAN).is_err());
        assert!(Alpha::new(0.5).is_ok());
    }

    #[test]
    fn extremal_expectile_reference_values() {
        assert_abs_diff_eq!(
            extremal_expectile_loss(0.0, alpha(0.5), 1.0, -1.0).unwrap(),
            0.5
        );
        assert_eq!(extremal_expectile_loss(3.0, alpha(0.25), 1.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            extremal_expectile_loss(0.0, alpha(0.25), -1.0, 1.0).unwrap(),
            0.25
        );
    }

    #[test]
    fn extremal_quantile_reference_values() {
        assert_abs_diff_eq!(
            extremal_quantile_loss(0.5, alpha(0.05), 1.0, 0.0).unwrap(),
            0.95
        );
        assert_abs_diff_eq!(
            extremal_quantile_loss(0.5, alpha(0.05), 0.0, 1.0).unwrap(),
            0.05
        );
        assert_eq!(extremal_quantile_loss(2.0, alpha(0.3), 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn extremal_rejects_non_finite() {
        assert!(extremal_expectile_loss(f64::NAN, alpha(0.5), 1.0, 0.0).is_err());
        assert!(extremal_quantile_loss(0.0, alpha(0.5), f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn consistent_loss_reference_values() {
        let sq = LossSpec::new(LossFamily::SquaredError, alpha(0.5)).unwrap();
        assert_abs_diff_eq!(consistent_loss(&sq, 2.0, 0.0).unwrap(), 2.0);

        let qlike = LossSpec::new(LossFamily::Qlike, alpha(0.5)).unwrap();
        assert_abs_diff_eq!(
            consistent_loss(&qlike, 1.0, 2.0).unwrap(),
            0.5 * (2.0 - 2.0_f64.ln() - 1.0),
            epsilon = 1e-12
        );

        let linlin = LossSpec::new(LossFamily::LinLin, alpha(0.05)).unwrap();
        assert_abs_diff_eq!(consistent_loss(&linlin, 1.0, 0.0).unwrap(), 0.95);
    }

    #[test]
    fn loss_vanishes_at_coincidence() {
        let specs = [
            LossSpec::new(LossFamily::SquaredError, alpha(0.3)).unwrap(),
            LossSpec::new(LossFamily::ExponentialBregman { a: 0.7 }, alpha(0.3)).unwrap(),
            LossSpec::new(LossFamily::HomogeneousBregman { b: 2.5 }, alpha(0.3)).unwrap(),
            LossSpec::new(LossFamily::Qlike, alpha(0.3)).unwrap(),
            LossSpec::new(LossFamily::HomogeneousPatton { c: 3.0 }, alpha(0.3)).unwrap(),
            LossSpec::new(LossFamily::LinLin, alpha(0.3)).unwrap(),
            LossSpec::new(LossFamily::ScaledLinLin, alpha(0.3)).unwrap(),
            LossSpec::new(LossFamily::HomogeneousPower { c: 2.0 }, alpha(0.3)).unwrap(),
            LossSpec::new(LossFamily::LogPower, alpha(0.3)).unwrap(),
        ];
        for spec in specs {
            assert_eq!(consistent_loss(&spec, 1.5, 1.5).unwrap(), 0.0, "{:?}", spec.family);
        }
        let logistic = LossSpec::new(LossFamily::LogisticBregman, alpha(0.3)).unwrap();
        assert_eq!(consistent_loss(&logistic, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(consistent_loss(&logistic, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors_name_the_family() {
        let qlike = LossSpec::new(LossFamily::Qlike, alpha(0.5)).unwrap();
        let err = consistent_loss(&qlike, -1.0, 2.0).unwrap_err();
        assert!(err.to_string().contains("qlike"), "{err}");

        let logistic = LossSpec::new(LossFamily::LogisticBregman, alpha(0.5)).unwrap();
        assert!(consistent_loss(&logistic, 0.5, 0.25).is_err());
        // infinite loss at the boundary is a domain error, not a NaN
        assert!(consistent_loss(&logistic, 0.0, 1.0).is_err());
    }

    #[test]
    fn invalid_family_parameters_rejected() {
        assert!(LossSpec::new(LossFamily::ExponentialBregman { a: 0.0 }, alpha(0.5)).is_err());
        assert!(LossSpec::new(LossFamily::HomogeneousBregman { b: 1.0 }, alpha(0.5)).is_err());
        assert!(LossSpec::new(LossFamily::HomogeneousPatton { c: 1.0 }, alpha(0.5)).is_err());
        assert!(LossSpec::new(LossFamily::HomogeneousPower { c: 0.0 }, alpha(0.5)).is_err());
    }

    #[test]
    fn logistic_bregman_matches_log_score() {
        // at alpha = 1/2 the loss is (1/2) * (-log x) for y = 1 and
        // (1/2) * (-log(1-x)) for y = 0
        let spec = LossSpec::new(LossFamily::LogisticBregman, alpha(0.5)).unwrap();
        for i in 1..100 {
            let x = i as f64 / 100.0;
            assert_abs_diff_eq!(
                consistent_loss(&spec, x, 1.0).unwrap(),
                0.5 * -(x.ln()),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                consistent_loss(&spec, x, 0.0).unwrap(),
                0.5 * -((1.0 - x).ln()),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn exponential_bregman_mixture_desk_check() {
        let mix = MixtureSpec::new(
            LossFamily::ExponentialBregman { a: 1.0 },
            -5.0,
            5.0,
            2001,
        )
        .unwrap();
        let got = mixture_loss(&mix, alpha(0.5), 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(got, 0.5, epsilon = 1e-4);
    }

    #[test]
    fn linlin_mixture_is_exact() {
        let mix = MixtureSpec::new(LossFamily::LinLin, -4.0, 4.0, 11).unwrap();
        for (x, y, a) in [(1.0, 0.0, 0.05), (-2.0, 3.0, 0.3), (0.7, 0.7, 0.5)] {
            let spec = LossSpec::new(LossFamily::LinLin, alpha(a)).unwrap();
            let want = consistent_loss(&spec, x, y).unwrap();
            let got = mixture_loss(&mix, alpha(a), x, y).unwrap();
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn homogeneous_bregman_mixture_handles_singularity() {
        for b in [1.5, 2.0, 3.0] {
            let mix =
                MixtureSpec::new(LossFamily::HomogeneousBregman { b }, -6.0, 6.0, 2001).unwrap();
            let spec = LossSpec::new(LossFamily::HomogeneousBregman { b }, alpha(0.5)).unwrap();
            for (x, y) in [(-1.0, 1.0), (0.4, -0.3), (2.0, 0.5), (-2.0, -0.1)] {
                let want = consistent_loss(&spec, x, y).unwrap();
                let got = mixture_loss(&mix, alpha(0.5), x, y).unwrap();
                assert_abs_diff_eq!(got, want, epsilon = 1e-10 * (1.0 + want));
            }
        }
    }

    #[test]
    fn mixture_range_must_cover_support() {
        let mix = MixtureSpec::new(LossFamily::LinLin, 0.0, 1.0, 11).unwrap();
        assert!(matches!(
            mixture_loss(&mix, alpha(0.5), -1.0, 0.5),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn mixture_zero_at_coincidence() {
        let mix = MixtureSpec::new(LossFamily::ExponentialBregman { a: -1.0 }, -5.0, 5.0, 101)
            .unwrap();
        assert_eq!(mixture_loss(&mix, alpha(0.25), 0.3, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn mixture_rejects_extremal_target() {
        assert!(MixtureSpec::new(
            LossFamily::ExtremalExpectile { theta: 0.0 },
            -1.0,
            1.0,
            11
        )
        .is_err());
    }
}
