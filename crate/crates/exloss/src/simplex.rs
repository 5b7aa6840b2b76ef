//! Derivative-free minimization with the Nelder-Mead simplex.
//!
//! Used for tick-loss CAViaR estimation and GARCH quasi-likelihoods, both of
//! which are non-smooth or awkward to differentiate. Restarts rebuild the
//! simplex around the incumbent best point, which is enough to walk the
//! Rosenbrock valley and to escape the flat regions of empirical tick loss.

use crate::error::{Error, Result};

/// Simplex coefficients and stopping rules.
#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadConfig {
    pub max_iterations: usize,
    /// Convergence threshold on both the function-value spread and the
    /// coordinate spread of the simplex.
    pub tolerance: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Extra rounds restarted from the incumbent best point.
    pub restarts: usize,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig {
            max_iterations: 2000,
            tolerance: 1e-10,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            restarts: 3,
        }
    }
}

impl NelderMeadConfig {
    fn validate(&self) -> Result<()> {
        if self.reflection <= 0.0
            || self.expansion <= 1.0
            || !(0.0..1.0).contains(&self.contraction)
            || !(0.0..1.0).contains(&self.shrink)
        {
            return Err(Error::InvalidArgument(
                "simplex coefficients outside admissible ranges".into(),
            ));
        }
        if self.tolerance < 0.0 || self.max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "tolerance must be nonnegative and max_iterations positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a Nelder-Mead run.
#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOutcome {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn sanitize(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Minimize `objective` from `x0`.
///
/// Non-finite objective values are treated as `+inf` so the simplex backs
/// away from them; if every trial point is non-finite the run fails. The
/// returned value never exceeds `objective(x0)`.
pub fn nelder_mead<F>(objective: F, x0: &[f64], config: &NelderMeadConfig) -> Result<NelderMeadOutcome>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    if x0.is_empty() {
        return Err(Error::InvalidArgument("empty starting point".into()));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("starting point must be finite".into()));
    }
    let f0 = sanitize(objective(x0));
    if !f0.is_finite() {
        return Err(Error::OptimizationFailed(
            "objective is not finite at the starting point".into(),
        ));
    }

    let mut best_x = x0.to_vec();
    let mut best_f = f0;
    let mut iterations = 0usize;
    for round in 0..=config.restarts {
        let (x, f, used) = single_run(&objective, &best_x, best_f, config)?;
        iterations += used;
        let improved = f < best_f - config.tolerance * (1.0 + best_f.abs());
        if f < best_f {
            best_x = x;
            best_f = f;
        }
        if round > 0 && !improved {
            break;
        }
    }
    Ok(NelderMeadOutcome {
        argmin: best_x,
        value: best_f,
        iterations,
    })
}

fn single_run<F>(
    objective: &F,
    x0: &[f64],
    f0: f64,
    config: &NelderMeadConfig,
) -> Result<(Vec<f64>, f64, usize)>
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut values: Vec<f64> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    values.push(f0);
    for i in 0..dim {
        let mut vertex = x0.to_vec();
        let step = if vertex[i] != 0.0 { 0.05 * vertex[i].abs() } else { 0.00025 };
        vertex[i] += step;
        values.push(sanitize(objective(&vertex)));
        simplex.push(vertex);
    }
    if values.iter().all(|v| !v.is_finite()) {
        return Err(Error::OptimizationFailed(
            "objective is not finite at any simplex vertex".into(),
        ));
    }

    let order = |simplex: &mut Vec<Vec<f64>>, values: &mut Vec<f64>| {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        *simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        *values = idx.iter().map(|&i| values[i]).collect();
    };
    order(&mut simplex, &mut values);

    let mut iterations = 0usize;
    while iterations < config.max_iterations {
        iterations += 1;

        let spread_f = values[dim] - values[0];
        let spread_x = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread_f.is_finite()
            && spread_f <= config.tolerance * (1.0 + values[0].abs())
            && spread_x <= config.tolerance * (1.0 + simplex[0].iter().fold(0.0f64, |m, v| m.max(v.abs())))
        {
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; dim];
        for vertex in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(vertex) {
                *c += v / dim as f64;
            }
        }
        let blend = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = blend(config.reflection);
        let f_reflected = sanitize(objective(&reflected));
        if f_reflected < values[0] {
            let expanded = blend(config.reflection * config.expansion);
            let f_expanded = sanitize(objective(&expanded));
            if f_expanded < f_reflected {
                simplex[dim] = expanded;
                values[dim] = f_expanded;
            } else {
                simplex[dim] = reflected;
                values[dim] = f_reflected;
            }
        } else if f_reflected < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = f_reflected;
        } else {
            // contract toward the better of worst/reflected
            let contracted = if f_reflected < values[dim] {
                blend(config.reflection * config.contraction)
            } else {
                blend(-config.contraction)
            };
            let f_contracted = sanitize(objective(&contracted));
            if f_contracted < values[dim].min(f_reflected) {
                simplex[dim] = contracted;
                values[dim] = f_contracted;
            } else {
                for i in 1..=dim {
                    let shrunk: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&simplex[0])
                        .map(|(v, b)| b + config.shrink * (v - b))
                        .collect();
                    values[i] = sanitize(objective(&shrunk));
                    simplex[i] = shrunk;
                }
            }
        }
        order(&mut simplex, &mut values);
    }
    Ok((simplex[0].clone(), values[0], iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn scalar_quadratic() {
        let out = nelder_mead(|x| (x[0] - 2.0) * (x[0] - 2.0), &[0.0], &NelderMeadConfig::default())
            .unwrap();
        assert_abs_diff_eq!(out.argmin[0], 2.0, epsilon = 1e-6);
        assert!(out.value <= 4.0);
    }

    #[test]
    fn two_dimensional_bowl() {
        let out = nelder_mead(
            |x| x[0] * x[0] + x[1] * x[1],
            &[3.0, 4.0],
            &NelderMeadConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(out.argmin[0], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(out.argmin[1], 0.0, epsilon = 1e-6);
        assert!(out.value <= 1e-10);
    }

    #[test]
    fn rosenbrock_with_restarts() {
        let rosenbrock =
            |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let out = nelder_mead(rosenbrock, &[-1.2, 1.0], &NelderMeadConfig::default()).unwrap();
        assert_abs_diff_eq!(out.argmin[0], 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(out.argmin[1], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn non_smooth_objective() {
        let out = nelder_mead(
            |x| (x[0] - 1.5).abs() + 0.5 * (x[1] + 0.5).abs(),
            &[5.0, 5.0],
            &NelderMeadConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(out.argmin[0], 1.5, epsilon = 1e-4);
        assert_abs_diff_eq!(out.argmin[1], -0.5, epsilon = 1e-4);
    }

    #[test]
    fn value_never_exceeds_start() {
        let out = nelder_mead(
            |x| x[0].sin() + x[0] * x[0] * 0.01,
            &[2.0],
            &NelderMeadConfig::default(),
        )
        .unwrap();
        assert!(out.value <= 2.0_f64.sin() + 0.04);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        assert!(nelder_mead(|_| f64::NAN, &[1.0], &NelderMeadConfig::default()).is_err());
    }

    #[test]
    fn partial_non_finite_region_is_tolerated() {
        let out = nelder_mead(
            |x| {
                if x[0] < 0.0 {
                    f64::NAN
                } else {
                    (x[0] - 0.5) * (x[0] - 0.5)
                }
            },
            &[2.0],
            &NelderMeadConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(out.argmin[0], 0.5, epsilon = 1e-5);
    }
}
