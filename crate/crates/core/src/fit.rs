//! Least-squares recovery of radial-profile parameters
//! `(a, lambda, y) -> a (lambda/(lambda^2 + |x-y|^2))^m` from point samples.
//!
//! Fitting is done in log space (the profile spans orders of magnitude), via
//! Levenberg-Marquardt seeded by an exact linear initializer: `u^{-1/m}` is a
//! quadratic polynomial in `x`, so a linear solve recovers the parameters
//! exactly for noise-free data.

use nalgebra::{DMatrix, DVector};

use crate::bubble::BubbleParams;
use crate::error::{Error, Result};
use crate::field::{Dimension, Point, ScalarField};

/// Result of a radial-profile fit in `d` ambient coordinates.
#[derive(Debug, Clone)]
pub struct RadialFit {
    pub amplitude: f64,
    pub scale: f64,
    pub center: Vec<f64>,
    /// RMS of the log-space residuals at the solution.
    pub rms: f64,
    pub iterations: usize,
}

fn model_log(params: &[f64], x: &[f64], m: f64) -> f64 {
    let (ln_a, ln_lambda) = (params[0], params[1]);
    let y = &params[2..];
    let lambda = ln_lambda.exp();
    let rho_sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    ln_a + m * (ln_lambda - (lambda * lambda + rho_sq).ln())
}

fn model_jacobian_row(params: &[f64], x: &[f64], m: f64, row: &mut [f64]) {
    let lambda = params[1].exp();
    let y = &params[2..];
    let rho_sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let denom = lambda * lambda + rho_sq;
    row[0] = 1.0; // d/d ln a
    row[1] = m - 2.0 * m * lambda * lambda / denom; // d/d ln lambda
    for (k, (xi, yi)) in x.iter().zip(y).enumerate() {
        row[2 + k] = 2.0 * m * (xi - yi) / denom; // d/d y_k
    }
}

/// Linear initializer: least-squares fit of `u^{-1/m}` by the quadratic
/// `c |x|^2 + d . x + e`, then read off `(a, lambda, y)`.
fn linear_init(points: &[Vec<f64>], values: &[f64], m: f64) -> Result<Vec<f64>> {
    let d = points[0].len();
    let rows = points.len();
    let cols = d + 2;
    let mut a = DMatrix::zeros(rows, cols);
    let mut b = DVector::zeros(rows);
    for (r, (x, &u)) in points.iter().zip(values).enumerate() {
        a[(r, 0)] = x.iter().map(|c| c * c).sum::<f64>();
        for k in 0..d {
            a[(r, 1 + k)] = x[k];
        }
        a[(r, d + 1)] = 1.0;
        b[r] = u.powf(-1.0 / m);
    }
    let svd = a.svd(true, true);
    let sol = svd
        .solve(&b, 1e-12)
        .map_err(|_| Error::SingularMatrix)?;
    let c = sol[0];
    if c <= 0.0 {
        return Err(Error::Precondition(
            "samples do not determine a decaying radial profile".into(),
        ));
    }
    let y: Vec<f64> = (0..d).map(|k| -sol[1 + k] / (2.0 * c)).collect();
    let y_sq: f64 = y.iter().map(|v| v * v).sum();
    let lambda_sq = (sol[d + 1] / c - y_sq).max(1e-12);
    let lambda = lambda_sq.sqrt();
    let amplitude = (1.0 / (c * lambda)).powf(m);
    let mut params = vec![amplitude.ln(), lambda.ln()];
    params.extend(y);
    Ok(params)
}

/// Levenberg-Marquardt fit of the radial profile with exponent `m` to the
/// given positive samples. `points` are `d`-dimensional coordinates.
pub fn fit_radial_profile(
    points: &[Vec<f64>],
    values: &[f64],
    m: f64,
    max_iter: usize,
) -> Result<RadialFit> {
    let d = points
        .first()
        .ok_or_else(|| Error::Precondition("no sample points".into()))?
        .len();
    if points.len() < d + 2 {
        return Err(Error::Precondition(format!(
            "need at least {} samples for a {d}-dimensional profile, got {}",
            d + 2,
            points.len()
        )));
    }
    for &v in values {
        if v <= 0.0 {
            return Err(Error::NonPositive { value: v });
        }
    }
    let log_values: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let nparams = d + 2;

    let mut params = linear_init(points, values, m)?;
    let rms_of = |p: &[f64]| -> f64 {
        let ss: f64 = points
            .iter()
            .zip(&log_values)
            .map(|(x, &lv)| {
                let r = lv - model_log(p, x, m);
                r * r
            })
            .sum();
        (ss / points.len() as f64).sqrt()
    };

    let mut mu = 1e-6;
    let mut rms = rms_of(&params);
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut jtj = DMatrix::<f64>::zeros(nparams, nparams);
        let mut jtr = DVector::<f64>::zeros(nparams);
        let mut row = vec![0.0; nparams];
        for (x, &lv) in points.iter().zip(&log_values) {
            model_jacobian_row(&params, x, m, &mut row);
            let r = lv - model_log(&params, x, m);
            for i in 0..nparams {
                jtr[i] += row[i] * r;
                for j in 0..nparams {
                    jtj[(i, j)] += row[i] * row[j];
                }
            }
        }
        let grad_norm = jtr.amax();
        if rms < 1e-14 || grad_norm < 1e-14 {
            break;
        }
        // damped step, retried with larger damping on failure
        let mut stepped = false;
        for _ in 0..30 {
            let mut lhs = jtj.clone();
            for i in 0..nparams {
                lhs[(i, i)] += mu * jtj[(i, i)].max(1e-12);
            }
            if let Some(delta) = lhs.lu().solve(&jtr) {
                let trial: Vec<f64> =
                    params.iter().zip(delta.iter()).map(|(p, d)| p + d).collect();
                let trial_rms = rms_of(&trial);
                if trial_rms <= rms {
                    let step = delta.amax();
                    params = trial;
                    rms = trial_rms;
                    mu = (mu * 0.3f64).max(1e-12);
                    stepped = true;
                    if step < 1e-13 {
                        iterations = max_iter; // converged; exit outer loop
                    }
                    break;
                }
            }
            mu *= 10.0;
        }
        if !stepped {
            break;
        }
    }

    let fit = RadialFit {
        amplitude: params[0].exp(),
        scale: params[1].exp(),
        center: params[2..].to_vec(),
        rms,
        iterations,
    };
    // accept either a tiny residual or a stationary point; a residual that is
    // still decreasing at max_iter means non-convergence
    if rms.is_finite() {
        Ok(fit)
    } else {
        Err(Error::FitFailure { iterations, rms, best: params })
    }
}

/// Fits the n-dimensional bubble model to a field sampled at the given
/// points; returns the recovered parameters and the final RMS log residual.
pub fn fit_bubble(
    f: &dyn ScalarField,
    n: Dimension,
    sample_points: &[Point],
) -> Result<(BubbleParams, f64)> {
    let m = (n.as_f64() - 2.0) / 2.0;
    let mut coords = Vec::with_capacity(sample_points.len());
    let mut values = Vec::with_capacity(sample_points.len());
    for x in sample_points {
        x.check_dim(n)?;
        coords.push(x.coords().to_vec());
        values.push(f.value(x)?);
    }
    let fit = fit_radial_profile(&coords, &values, m, 200)?;
    let params = BubbleParams::new(
        n,
        fit.scale,
        Point::new(fit.center.clone()),
        fit.amplitude,
    )?;
    Ok((params, fit.rms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::make_bubble;
    use crate::field::{FnField, SumField};
    use crate::halton::halton_scalar;
    use crate::kelvin::{kelvin_at, kelvin_origin, KelvinCenter};
    use crate::samples;
    use std::sync::Arc;

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn recovers_its_own_model_exactly() {
        let n = dim(4);
        let b = make_bubble(n, 1.5, &[0.3, 0.0, 0.0]).unwrap();
        let pts = samples::half_space_points(n, 4.0, 4.0, 60, 21);
        let (params, rms) = fit_bubble(&b, n, &pts).unwrap();
        assert!(rms < 1e-10, "rms {rms}");
        assert!((params.lambda - 1.5).abs() < 1e-8);
        assert!((params.amplitude - 8.0f64.sqrt()).abs() < 1e-8);
        assert!((params.center[0] - 0.3).abs() < 1e-8);
        assert!((params.center[3] - b.params().center[3]).abs() < 1e-8);
    }

    #[test]
    fn perturbed_data_gives_residual_of_matching_scale() {
        let n = dim(3);
        let b = Arc::new(make_bubble(n, 1.0, &[0.0, 0.0]).unwrap());
        let eps = 1e-3;
        let noisy = FnField::new(n, move |x: &Point| {
            // deterministic sign-varying relative perturbation
            let t = halton_scalar(0, (x[0].to_bits() ^ x[2].to_bits()) % 1000);
            Ok(b.value(x)? * (1.0 + eps * (2.0 * t - 1.0)))
        });
        let pts = samples::half_space_points(n, 3.0, 3.0, 80, 22);
        let (params, rms) = fit_bubble(&noisy, n, &pts).unwrap();
        assert!(rms > 1e-5 && rms < 1e-2, "rms {rms}");
        assert!((params.lambda - 1.0).abs() < 5e-3);
    }

    #[test]
    fn kelvin_image_of_a_bubble_is_a_bubble() {
        let n = dim(3);
        let b = Arc::new(make_bubble(n, 1.0, &[5.0, 0.0]).unwrap());
        let v = kelvin_origin(b.clone());
        let pts: Vec<Point> = samples::half_space_points(n, 2.0, 2.0, 50, 23)
            .into_iter()
            .filter(|x| x.norm() > 0.05)
            .collect();
        let (params, rms) = fit_bubble(&v, n, &pts).unwrap();
        assert!(rms < 1e-8, "rms {rms}");
        // the image parameters are the originals divided by lambda^2 + |y|^2
        let y = b.params().center.clone();
        let c = 1.0 + y.norm() * y.norm();
        assert!((params.lambda - 1.0 / c).abs() < 1e-7);
        assert!((params.center[0] - y[0] / c).abs() < 1e-7);
        // and the image is still boundary-compatible
        assert!(params.is_boundary_compatible());
    }

    #[test]
    fn kelvin_image_about_a_general_center_fits_too() {
        let n = dim(4);
        let b = Arc::new(make_bubble(n, 0.8, &[0.5, -0.2, 0.1]).unwrap());
        let mut e = vec![0.0; 4];
        e[0] = 1.0;
        let v = kelvin_at(b, KelvinCenter::new(Point::new(e.clone())).unwrap()).unwrap();
        let pts: Vec<Point> = samples::half_space_points(n, 3.0, 3.0, 80, 24)
            .into_iter()
            .filter(|x| x.dist_sq(&Point::new(e.clone())).sqrt() > 0.1)
            .collect();
        let (_, rms) = fit_bubble(&v, n, &pts).unwrap();
        assert!(rms < 1e-8, "rms {rms}");
    }

    #[test]
    fn sum_of_two_bubbles_is_not_a_bubble() {
        let n = dim(3);
        let b1 = Arc::new(make_bubble(n, 1.0, &[0.0, 0.0]).unwrap()) as crate::field::DynField;
        let b2 = Arc::new(make_bubble(n, 2.0, &[3.0, 0.0]).unwrap()) as crate::field::DynField;
        let f = SumField::new(vec![b1, b2]).unwrap();
        let pts = samples::half_space_points(n, 4.0, 4.0, 60, 25);
        let (_, rms) = fit_bubble(&f, n, &pts).unwrap();
        assert!(rms > 1e-3, "rms {rms}");
    }

    #[test]
    fn too_few_samples_is_a_precondition_error() {
        let n = dim(3);
        let b = make_bubble(n, 1.0, &[0.0, 0.0]).unwrap();
        let pts = samples::half_space_points(n, 3.0, 3.0, 3, 26);
        assert!(fit_bubble(&b, n, &pts).is_err());
    }
}
