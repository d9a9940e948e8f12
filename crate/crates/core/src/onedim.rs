//! One-dimensional traces along the x_1-axis: the scale-derivative
//! `g_s'(0.5)` identity, the search for the scale that centers the inverted
//! field's symmetry axis at 0.5, the boundary-profile fit, and the
//! nonexistence shooter for the one-dimensional reduction.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Dimension, DynField, Point};
use crate::fit::fit_radial_profile;
use crate::kelvin::{kelvin_at, KelvinCenter};
use crate::moving_plane::{detect_axis, AxisDetectConfig, AxisDetection};
use crate::samples;

/// Restriction of a field to the x_1-axis: `f(t) = u(t, 0, ..., 0)`.
pub struct TraceFunction {
    source: DynField,
}

impl TraceFunction {
    pub fn new(source: DynField) -> Self {
        TraceFunction { source }
    }

    fn axis_point(&self, t: f64) -> Point {
        let mut c = vec![0.0; self.source.dim().get()];
        c[0] = t;
        Point::new(c)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.source.value(&self.axis_point(t))
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        Ok(self.source.gradient(&self.axis_point(t))?[0])
    }

    /// Checks `f(-t) = f(t)`, the evenness the symmetric-scale identity
    /// relies on (it holds for fields symmetric about the x_n-axis).
    pub fn check_even(&self, t: f64) -> Result<()> {
        let a = self.eval(t)?;
        let b = self.eval(-t)?;
        if (a - b).abs() > 1e-8 * a.abs().max(1.0) {
            return Err(Error::Precondition(format!(
                "trace is not even at t = {t}: f(t) = {a}, f(-t) = {b}"
            )));
        }
        Ok(())
    }
}

/// `g_s'(0.5) = 2^n s^{(n-2)/2} ((n-2)/2 f(s) + s f'(s))`.
///
/// Both printed forms (the `f(-s)` one and the `f(s)` one) are evaluated and
/// cross-checked; they coincide exactly when the trace is even.
pub fn g_s_prime_half(trace: &TraceFunction, n: Dimension, s: f64) -> Result<f64> {
    if s <= 0.0 {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {s}")));
    }
    trace.check_even(s)?;
    let m = (n.as_f64() - 2.0) / 2.0;
    let factor = 2f64.powi(n.get() as i32) * s.powf(m);
    let form_minus = factor * (m * trace.eval(-s)? - s * trace.derivative(-s)?);
    let form_plus = factor * (m * trace.eval(s)? + s * trace.derivative(s)?);
    if (form_minus - form_plus).abs() > 1e-10 * form_plus.abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "the two scale-derivative forms disagree: {form_minus} vs {form_plus}"
        )));
    }
    Ok(form_plus)
}

/// Outcome of the symmetric-scale search.
#[derive(Debug, Clone)]
pub struct ScaleSearchResult {
    pub s_star: f64,
    /// Residual `g_s'(0.5)` at the returned scale.
    pub gprime_at_half: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Finds the scale with `g_s'(0.5) = 0` by bisection plus a Newton polish.
pub fn find_symmetric_scale(
    trace: &TraceFunction,
    n: Dimension,
    s_lo: f64,
    s_hi: f64,
) -> Result<ScaleSearchResult> {
    let g_lo = g_s_prime_half(trace, n, s_lo)?;
    let g_hi = g_s_prime_half(trace, n, s_hi)?;
    if g_lo == 0.0 {
        return Ok(ScaleSearchResult {
            s_star: s_lo,
            gprime_at_half: 0.0,
            bracket: (s_lo, s_hi),
            iterations: 0,
        });
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::BadBracket);
    }
    let (mut lo, mut hi) = (s_lo, s_hi);
    let mut g_lo = g_lo;
    let mut iterations = 0;
    while hi - lo > 1e-13 * hi && iterations < 200 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let g_mid = g_s_prime_half(trace, n, mid)?;
        if g_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish with a finite-difference slope
    let mut s = 0.5 * (lo + hi);
    let mut g = g_s_prime_half(trace, n, s)?;
    for _ in 0..20 {
        if g.abs() < 1e-12 {
            break;
        }
        iterations += 1;
        let h = 1e-7 * s;
        let slope = (g_s_prime_half(trace, n, s + h)? - g_s_prime_half(trace, n, s - h)?)
            / (2.0 * h);
        if slope == 0.0 {
            break;
        }
        let next = s - g / slope;
        if !(next > 0.0) || !next.is_finite() {
            break;
        }
        s = next;
        g = g_s_prime_half(trace, n, s)?;
    }
    Ok(ScaleSearchResult {
        s_star: s,
        gprime_at_half: g,
        bracket: (s_lo, s_hi),
        iterations,
    })
}

/// Default search bracket derived from the far-field coefficient: the decay
/// report's mu gives a scale guess `lambda = (mu / a(n))^{2/(n-2)}`, and the
/// sign change is guaranteed between much smaller and much larger scales.
pub fn default_scale_bracket(u: &dyn crate::field::ScalarField, n: Dimension) -> Result<(f64, f64)> {
    let radii = [1e2, 1e3, 1e4];
    let dirs = samples::admissible_directions(n, 6, 0);
    let rep = crate::moving_plane::decay_report(u, &radii, &dirs)?;
    if rep.mu_estimate <= 0.0 {
        return Err(Error::Precondition("decay coefficient is not positive".into()));
    }
    let lambda_guess =
        (rep.mu_estimate / crate::bubble::derive_amplitude(n)).powf(2.0 / (n.as_f64() - 2.0));
    Ok((1e-3 * lambda_guess, 1e3 * lambda_guess))
}

/// End-to-end symmetry check: builds
/// `v_s = kelvin(scale(u, s_star))` about `e = (1, 0, ..., 0)` and locates
/// its symmetry axis, which should pass through `(0.5, 0, ..., 0)`.
#[derive(Debug, Clone)]
pub struct Lemma32Report {
    pub detection: AxisDetection,
    /// Euclidean distance of the detected axis point from (0.5, 0, ..., 0).
    pub distance_from_half: f64,
}

pub fn verify_lemma32_symmetry(
    u: DynField,
    n: Dimension,
    s_star: f64,
    cfg: &AxisDetectConfig,
) -> Result<Lemma32Report> {
    let scaled = Arc::new(crate::bubble::scale_field(u, s_star)?) as DynField;
    let mut e = vec![0.0; n.get()];
    e[0] = 1.0;
    let center = KelvinCenter::new(Point::new(e))?;
    let v_s = Arc::new(kelvin_at(scaled, center)?) as DynField;
    let detection = detect_axis(&v_s, cfg)?;
    let mut dist_sq = (detection.axis_point[0] - 0.5).powi(2);
    for a in &detection.axis_point[1..] {
        dist_sq += a * a;
    }
    Ok(Lemma32Report { detection, distance_from_half: dist_sq.sqrt() })
}

/// Fit of the boundary trace `u(x', 0)` by the (n-1)-dimensional profile
/// `a (lambda/(lambda^2 + |x' - x0'|^2))^{(n-2)/2}`.
#[derive(Debug, Clone)]
pub struct BoundaryProfileFit {
    pub amplitude: f64,
    pub scale: f64,
    pub center: Vec<f64>,
    /// sup-norm deviation of the fitted profile over the sample set
    pub max_deviation: f64,
}

pub fn boundary_profile_check(
    u: &dyn crate::field::ScalarField,
    n: Dimension,
    extent: f64,
    sample_count: usize,
    seed: u64,
) -> Result<BoundaryProfileFit> {
    let m = (n.as_f64() - 2.0) / 2.0;
    let pts = samples::boundary_points(n, extent, sample_count, seed);
    let mut coords = Vec::with_capacity(pts.len());
    let mut values = Vec::with_capacity(pts.len());
    for x in &pts {
        coords.push(x.coords()[..n.get() - 1].to_vec());
        let v = u.value(x)?;
        if v <= 0.0 {
            return Err(Error::NonPositive { value: v });
        }
        values.push(v);
    }
    let fit = fit_radial_profile(&coords, &values, m, 200)?;
    let mut max_dev: f64 = 0.0;
    for (x, &v) in coords.iter().zip(&values) {
        let rho_sq: f64 = x
            .iter()
            .zip(&fit.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let model =
            fit.amplitude * (fit.scale / (fit.scale * fit.scale + rho_sq)).powf(m);
        max_dev = max_dev.max((v - model).abs());
    }
    Ok(BoundaryProfileFit {
        amplitude: fit.amplitude,
        scale: fit.scale,
        center: fit.center,
        max_deviation: max_dev,
    })
}

/// Outcome of the one-dimensional shooting integration.
#[derive(Debug, Clone)]
pub struct ShootingResult {
    pub initial_value: f64,
    /// Location where the integrated profile crosses zero, if reached.
    pub zero_crossing_t: Option<f64>,
    /// `(u, u')` at the end of integration.
    pub final_state: (f64, f64),
    pub step_count: usize,
}

const OVERFLOW_GUARD: f64 = 1e8;

/// Integrates `-u'' = u^q`, `u(0) = c`, `u'(0) = -c^p` with classical RK4
/// and reports the forced zero crossing (concavity makes one unavoidable for
/// every positive initial height, which is how the one-dimensional case of
/// the classification is ruled out).
pub fn shoot_case1(
    n: Dimension,
    c: f64,
    p: f64,
    q: f64,
    step: f64,
    t_max: f64,
) -> Result<ShootingResult> {
    let _ = n; // dimension enters only through the caller's default exponents
    if c <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "initial height must be positive, got {c}"
        )));
    }
    if step <= 0.0 || t_max <= 0.0 {
        return Err(Error::InvalidParameter("step and t_max must be positive".into()));
    }
    // odd extension keeps the right side real once u dips below zero mid-step
    let accel = |u: f64| -> f64 { -u.signum() * u.abs().powf(q) };
    let rk4 = |u: f64, w: f64, h: f64| -> (f64, f64) {
        let (k1u, k1w) = (w, accel(u));
        let (k2u, k2w) = (w + 0.5 * h * k1w, accel(u + 0.5 * h * k1u));
        let (k3u, k3w) = (w + 0.5 * h * k2w, accel(u + 0.5 * h * k2u));
        let (k4u, k4w) = (w + h * k3w, accel(u + h * k3u));
        (
            u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
        )
    };

    let mut u = c;
    let mut w = -c.powf(p);
    let mut t = 0.0;
    let mut steps = 0usize;
    while t < t_max {
        let (u_next, w_next) = rk4(u, w, step);
        steps += 1;
        if !u_next.is_finite() || u_next.abs() > OVERFLOW_GUARD {
            return Err(Error::Integration(format!(
                "state exceeded the overflow guard at t = {t}"
            )));
        }
        if u_next <= 0.0 {
            // bisect the crossing on the cubic Hermite interpolant of the step
            let hermite = |theta: f64| -> f64 {
                let h00 = 2.0 * theta.powi(3) - 3.0 * theta.powi(2) + 1.0;
                let h10 = theta.powi(3) - 2.0 * theta.powi(2) + theta;
                let h01 = -2.0 * theta.powi(3) + 3.0 * theta.powi(2);
                let h11 = theta.powi(3) - theta.powi(2);
                h00 * u + h10 * step * w + h01 * u_next + h11 * step * w_next
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if hermite(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let crossing = t + 0.5 * (lo + hi) * step;
            return Ok(ShootingResult {
                initial_value: c,
                zero_crossing_t: Some(crossing),
                final_state: (u_next, w_next),
                step_count: steps,
            });
        }
        u = u_next;
        w = w_next;
        t += step;
    }
    Ok(ShootingResult {
        initial_value: c,
        zero_crossing_t: None,
        final_state: (u, w),
        step_count: steps,
    })
}
