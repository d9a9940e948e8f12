//! Reflections about planes `x_1 = lambda`, the comparison region
//! `Sigma_lambda = {x : x_1 >= lambda, x_n >= 0, x != 0}`, numerical
//! verification of the moving-plane inequality `v >= v_lambda`, symmetry
//! plane and axis detection, and far-field decay reports.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Dimension, DynField, Point, Provenance, ScalarField};
use crate::halton::halton_points;

/// Position of the comparison plane `x_1 = lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneParams {
    pub lambda_plane: f64,
}

impl PlaneParams {
    pub fn new(lambda_plane: f64) -> Self {
        PlaneParams { lambda_plane }
    }

    /// `x^lambda = (2 lambda - x_1, x_2, ..., x_n)`.
    pub fn reflect(&self, x: &Point) -> Point {
        let mut c = x.coords().to_vec();
        c[0] = 2.0 * self.lambda_plane - c[0];
        Point::new(c)
    }
}

/// The reflected field `v_lambda(x) = v(x^lambda)`.
pub struct ReflectedField {
    inner: DynField,
    plane: PlaneParams,
}

pub fn reflect_field(f: DynField, plane: PlaneParams) -> ReflectedField {
    ReflectedField { inner: f, plane }
}

impl ScalarField for ReflectedField {
    fn dim(&self) -> Dimension {
        self.inner.dim()
    }

    fn value(&self, x: &Point) -> Result<f64> {
        self.inner.value(&self.plane.reflect(x))
    }

    fn gradient(&self, x: &Point) -> Result<Vec<f64>> {
        let mut g = self.inner.gradient(&self.plane.reflect(x))?;
        g[0] = -g[0];
        Ok(g)
    }

    fn laplacian(&self, x: &Point) -> Result<f64> {
        self.inner.laplacian(&self.plane.reflect(x))
    }

    fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }
}

/// View of a field with tangential coordinate `k` swapped into slot 1, so the
/// plane sweep machinery (which always moves planes `x_1 = lambda`) can scan
/// any tangential direction.
pub struct PermutedField {
    inner: DynField,
    k: usize,
}

impl PermutedField {
    pub fn new(inner: DynField, k: usize) -> Result<Self> {
        if k >= inner.dim().get() - 1 {
            return Err(Error::InvalidParameter(format!(
                "permutation index {k} is not a tangential coordinate"
            )));
        }
        Ok(PermutedField { inner, k })
    }

    fn swap(&self, x: &Point) -> Point {
        let mut c = x.coords().to_vec();
        c.swap(0, self.k);
        Point::new(c)
    }
}

impl ScalarField for PermutedField {
    fn dim(&self) -> Dimension {
        self.inner.dim()
    }

    fn value(&self, x: &Point) -> Result<f64> {
        self.inner.value(&self.swap(x))
    }

    fn gradient(&self, x: &Point) -> Result<Vec<f64>> {
        let mut g = self.inner.gradient(&self.swap(x))?;
        g.swap(0, self.k);
        Ok(g)
    }

    fn laplacian(&self, x: &Point) -> Result<f64> {
        self.inner.laplacian(&self.swap(x))
    }

    fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }
}

/// Deterministic sampling of `Sigma_lambda`: Halton points in the slab
/// `{lambda <= x_1 <= lambda + R, |x_i| <= R, 0 <= x_n <= R}`, excluding a
/// small ball around the origin.
#[derive(Debug, Clone)]
pub struct SigmaSampling {
    pub points: Vec<Point>,
    pub radius_cap: f64,
}

/// Sampling parameters shared by the sweep operations.
#[derive(Debug, Clone, Copy)]
pub struct SigmaConfig {
    pub sample_count: usize,
    pub radius_cap: f64,
    /// Points with `|x|` below this are excluded (the `x != 0` clause).
    pub exclusion_radius: f64,
    pub seed: u64,
    /// Differences below `-tol` count as violations.
    pub tol: f64,
}

impl Default for SigmaConfig {
    fn default() -> Self {
        SigmaConfig {
            sample_count: 2000,
            radius_cap: 50.0,
            exclusion_radius: 1e-6,
            seed: 0,
            tol: 1e-9,
        }
    }
}

impl SigmaSampling {
    pub fn halton(n: Dimension, plane: PlaneParams, cfg: &SigmaConfig) -> Self {
        let d = n.get();
        let r = cfg.radius_cap;
        let mut points = Vec::with_capacity(cfg.sample_count);
        let mut index = cfg.seed;
        while points.len() < cfg.sample_count {
            let batch = halton_points(d, cfg.sample_count - points.len(), index);
            index += batch.len() as u64;
            for u in batch {
                let mut c = vec![0.0; d];
                c[0] = plane.lambda_plane + u[0] * r;
                for i in 1..d - 1 {
                    c[i] = -r + 2.0 * r * u[i];
                }
                c[d - 1] = u[d - 1] * r;
                let p = Point::new(c);
                if p.norm() > cfg.exclusion_radius {
                    points.push(p);
                }
            }
        }
        SigmaSampling { points, radius_cap: r }
    }

    /// Membership predicate for `Sigma_lambda`.
    pub fn is_valid_for(&self, plane: PlaneParams) -> bool {
        self.points
            .iter()
            .all(|p| p[0] >= plane.lambda_plane && p.is_admissible() && p.norm() > 0.0)
    }
}

/// Per-plane comparison of `v` with its reflection over the sample set.
#[derive(Debug, Clone)]
pub struct MovingPlaneReport {
    pub lambda_plane: f64,
    /// min over samples of `v(x) - v_lambda(x)`
    pub min_difference: f64,
    /// samples with `v - v_lambda < -tol`
    pub violation_count: usize,
    pub argmin: Point,
    /// samples skipped because an evaluation hit a singular point
    pub skipped: usize,
}

pub fn compare_on_sigma(
    v: &dyn ScalarField,
    plane: PlaneParams,
    sampling: &SigmaSampling,
    tol: f64,
) -> Result<MovingPlaneReport> {
    let mut min_diff = f64::INFINITY;
    let mut argmin = Point::zeros(v.dim().get());
    let mut violations = 0;
    let mut skipped = 0;
    for x in &sampling.points {
        let reflected = plane.reflect(x);
        let diff = match (v.value(x), v.value(&reflected)) {
            (Ok(a), Ok(b)) => a - b,
            (Err(Error::Singularity), _) | (_, Err(Error::Singularity)) => {
                skipped += 1;
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        if diff < min_diff {
            min_diff = diff;
            argmin = x.clone();
        }
        if diff < -tol {
            violations += 1;
        }
    }
    Ok(MovingPlaneReport {
        lambda_plane: plane.lambda_plane,
        min_difference: min_diff,
        violation_count: violations,
        argmin,
        skipped,
    })
}

/// Outcome of a plane sweep.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub reports: Vec<MovingPlaneReport>,
    /// Largest violation-free plane position, bisection-refined to width 1e-6
    /// (returned from the violation-free side of the final bracket).
    pub lambda0_estimate: f64,
}

const BISECTION_WIDTH: f64 = 1e-6;

fn violation_free(v: &dyn ScalarField, lambda: f64, cfg: &SigmaConfig) -> Result<bool> {
    let plane = PlaneParams::new(lambda);
    let sampling = SigmaSampling::halton(v.dim(), plane, cfg);
    Ok(compare_on_sigma(v, plane, &sampling, cfg.tol)?.violation_count == 0)
}

pub fn sweep_planes(
    v: &dyn ScalarField,
    lambda_grid: &[f64],
    cfg: &SigmaConfig,
) -> Result<SweepOutcome> {
    if lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("lambda grid must be sorted ascending".into()));
    }
    let mut reports = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let plane = PlaneParams::new(lambda);
        let sampling = SigmaSampling::halton(v.dim(), plane, cfg);
        reports.push(compare_on_sigma(v, plane, &sampling, cfg.tol)?);
    }
    let last_free = reports
        .iter()
        .rposition(|r| r.violation_count == 0)
        .ok_or(Error::SweepFailure)?;
    let mut lo = lambda_grid[last_free];
    if last_free + 1 < lambda_grid.len() {
        let mut hi = lambda_grid[last_free + 1];
        while hi - lo > BISECTION_WIDTH {
            let mid = 0.5 * (lo + hi);
            if violation_free(v, mid, cfg)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Ok(SweepOutcome { reports, lambda0_estimate: lo })
}

/// Result of axis detection.
#[derive(Debug, Clone)]
pub struct AxisDetection {
    /// Detected symmetry-plane position per tangential coordinate.
    pub axis_point: Vec<f64>,
    /// Max over directions of the residual symmetry deviation
    /// `max_x |v(x) - v(x^lambda)|` at the detected plane.
    pub asymmetry_score: f64,
}

/// Configuration for [`detect_axis`]: the lambda grid scanned per tangential
/// direction plus the shared sampling parameters.
#[derive(Debug, Clone, Copy)]
pub struct AxisDetectConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_step: f64,
    pub sigma: SigmaConfig,
}

impl Default for AxisDetectConfig {
    fn default() -> Self {
        AxisDetectConfig {
            lambda_min: -5.0,
            lambda_max: 5.0,
            lambda_step: 1.0,
            sigma: SigmaConfig::default(),
        }
    }
}

fn lambda_grid(cfg: &AxisDetectConfig) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut l = cfg.lambda_min;
    while l <= cfg.lambda_max + 1e-12 {
        grid.push(l);
        l += cfg.lambda_step;
    }
    grid
}

/// Symmetry deviation `max_x |w(x) - w(x^lambda)|` over a fixed sample set,
/// skipping singular evaluations.
fn symmetry_deviation(w: &dyn ScalarField, lambda: f64, points: &[Point]) -> Result<f64> {
    let plane = PlaneParams::new(lambda);
    let mut max_dev: f64 = 0.0;
    for x in points {
        let reflected = plane.reflect(x);
        match (w.value(x), w.value(&reflected)) {
            (Ok(a), Ok(b)) => max_dev = max_dev.max((a - b).abs()),
            (Err(Error::Singularity), _) | (_, Err(Error::Singularity)) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    Ok(max_dev)
}

/// Golden-section refinement of the symmetry plane: for a field symmetric
/// about `x_1 = b` the deviation is V-shaped in lambda with minimum ~0 at b,
/// so the minimizer locates b to near machine precision. For a genuinely
/// asymmetric field the minimum stays bounded away from zero and becomes the
/// asymmetry score.
fn refine_plane(
    w: &dyn ScalarField,
    lambda_hat: f64,
    points: &[Point],
) -> Result<(f64, f64)> {
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut a = lambda_hat - 1e-3;
    let mut b = lambda_hat + 1e-3;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = symmetry_deviation(w, c, points)?;
    let mut fd = symmetry_deviation(w, d, points)?;
    for _ in 0..70 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = symmetry_deviation(w, c, points)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = symmetry_deviation(w, d, points)?;
        }
    }
    let best = 0.5 * (a + b);
    Ok((best, symmetry_deviation(w, best, points)?))
}

/// Detects the axis parallel to `x_n` about which `f` is symmetric, by
/// sweeping planes along each tangential coordinate direction.
pub fn detect_axis(f: &DynField, cfg: &AxisDetectConfig) -> Result<AxisDetection> {
    let n = f.dim();
    let grid = lambda_grid(cfg);
    let mut axis_point = Vec::with_capacity(n.get() - 1);
    let mut score: f64 = 0.0;
    for k in 0..n.get() - 1 {
        let view: DynField = if k == 0 {
            f.clone()
        } else {
            Arc::new(PermutedField::new(f.clone(), k)?)
        };
        let sweep = sweep_planes(view.as_ref(), &grid, &cfg.sigma)?;
        // fixed sample set anchored just left of the estimate
        let sampling = SigmaSampling::halton(
            n,
            PlaneParams::new(sweep.lambda0_estimate - 0.5 * cfg.sigma.radius_cap),
            &cfg.sigma,
        );
        let refine_points = &sampling.points[..sampling.points.len().min(500)];
        let (lambda_star, dev) =
            refine_plane(view.as_ref(), sweep.lambda0_estimate, refine_points)?;
        axis_point.push(lambda_star);
        score = score.max(dev);
    }
    Ok(AxisDetection { axis_point, asymmetry_score: score })
}

/// Far-field limits `|x|^{n-2} u -> mu`, `|x|^{n-2} grad u -> 0`,
/// `|x|^{n-2} x.grad u -> -(n-2) mu`, estimated by Richardson extrapolation
/// along rays.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub mu_estimate: f64,
    /// Largest magnitude across directions of `|x|^{n-2} D_i u` at the
    /// outermost radius, per component.
    pub grad_limit_estimates: Vec<f64>,
    pub radial_limit_estimate: f64,
    pub radii_used: Vec<f64>,
}

/// Successive Richardson extrapolation eliminating 1/r, 1/r^2, ... terms.
fn richardson(radii: &[f64], values: &[f64]) -> f64 {
    let mut vals = values.to_vec();
    let mut rads = radii.to_vec();
    let mut order = 1;
    while vals.len() > 1 {
        let mut next_v = Vec::with_capacity(vals.len() - 1);
        let mut next_r = Vec::with_capacity(vals.len() - 1);
        for k in 0..vals.len() - 1 {
            let (r1, r2) = (rads[k].powi(order), rads[k + 1].powi(order));
            next_v.push((vals[k + 1] * r2 - vals[k] * r1) / (r2 - r1));
            next_r.push(rads[k + 1]);
        }
        vals = next_v;
        rads = next_r;
        order += 1;
    }
    vals[0]
}

pub fn decay_report(
    f: &dyn ScalarField,
    radii: &[f64],
    directions: &[Vec<f64>],
) -> Result<DecayReport> {
    let n = f.dim();
    let d = n.get();
    if radii.windows(2).any(|w| w[0] >= w[1]) || radii.is_empty() {
        return Err(Error::Precondition("radii must be increasing and nonempty".into()));
    }
    for dir in directions {
        if dir.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: dir.len() });
        }
        if dir[d - 1] < 0.0 {
            return Err(Error::Precondition(
                "directions must point into the closed half-space".into(),
            ));
        }
    }
    let power = n.as_f64() - 2.0;
    let mut mu_sum = 0.0;
    let mut radial_sum = 0.0;
    let mut grad_max = vec![0.0f64; d];
    for dir in directions {
        let mut mu_vals = Vec::with_capacity(radii.len());
        let mut radial_vals = Vec::with_capacity(radii.len());
        for &r in radii {
            let x = Point::new(dir.iter().map(|c| c * r).collect());
            let w = r.powf(power);
            mu_vals.push(w * f.value(&x)?);
            let g = f.gradient(&x)?;
            let xg: f64 = x.coords().iter().zip(&g).map(|(a, b)| a * b).sum();
            radial_vals.push(w * xg);
        }
        mu_sum += richardson(radii, &mu_vals);
        radial_sum += richardson(radii, &radial_vals);
        let r_max = *radii.last().unwrap();
        let x = Point::new(dir.iter().map(|c| c * r_max).collect());
        let g = f.gradient(&x)?;
        for (gm, gi) in grad_max.iter_mut().zip(&g) {
            let scaled = r_max.powf(power) * gi;
            if scaled.abs() > gm.abs() {
                *gm = scaled;
            }
        }
    }
    let count = directions.len().max(1) as f64;
    Ok(DecayReport {
        mu_estimate: mu_sum / count,
        grad_limit_estimates: grad_max,
        radial_limit_estimate: radial_sum / count,
        radii_used: radii.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::{make_bubble, scale_field};
    use crate::field::FnField;
    use crate::kelvin::kelvin_origin;
    use crate::samples;

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn reflection_is_an_involution_and_isometry() {
        let plane = PlaneParams::new(-1.3);
        let x = Point::new(vec![0.7, -0.2, 1.1]);
        let y = Point::new(vec![-2.0, 0.5, 0.3]);
        let twice = plane.reflect(&plane.reflect(&x));
        for (a, b) in twice.coords().iter().zip(x.coords()) {
            assert!((a - b).abs() < 1e-15);
        }
        let dist = x.dist_sq(&y);
        let dist_reflected = plane.reflect(&x).dist_sq(&plane.reflect(&y));
        assert!((dist - dist_reflected).abs() < 1e-14);
    }

    #[test]
    fn even_field_is_fixed_by_reflection_about_zero() {
        let f = Arc::new(make_bubble(dim(3), 1.0, &[0.0, 0.0]).unwrap()) as DynField;
        let reflected = reflect_field(f.clone(), PlaneParams::new(0.0));
        for x in samples::half_space_points(dim(3), 3.0, 3.0, 100, 31) {
            assert!(
                (reflected.value(&x).unwrap() - f.value(&x).unwrap()).abs() < 1e-15
            );
        }
    }

    #[test]
    fn bubble_is_fixed_by_reflection_about_its_center_plane() {
        let f = Arc::new(make_bubble(dim(3), 1.0, &[2.0, 0.0]).unwrap()) as DynField;
        let reflected = reflect_field(f.clone(), PlaneParams::new(2.0));
        for x in samples::half_space_points(dim(3), 4.0, 4.0, 100, 32) {
            let a = f.value(&x).unwrap();
            let b = reflected.value(&x).unwrap();
            assert!((a - b).abs() < 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn no_violations_left_of_the_center() {
        let b = Arc::new(make_bubble(dim(3), 1.0, &[0.0, 0.0]).unwrap()) as DynField;
        let v = kelvin_origin(b);
        // image of this bubble is centered on the x_n-axis; any lambda < 0 is
        // left of the symmetry plane
        let cfg = SigmaConfig { sample_count: 2000, ..Default::default() };
        let plane = PlaneParams::new(-20.0);
        let sampling = SigmaSampling::halton(dim(3), plane, &cfg);
        assert!(sampling.is_valid_for(plane));
        let rep = compare_on_sigma(&v, plane, &sampling, cfg.tol).unwrap();
        assert_eq!(rep.violation_count, 0, "min diff {}", rep.min_difference);
    }

    #[test]
    fn equality_case_at_the_symmetry_plane() {
        let f = Arc::new(make_bubble(dim(3), 1.0, &[1.5, 0.0]).unwrap()) as DynField;
        let plane = PlaneParams::new(1.5);
        let cfg = SigmaConfig { radius_cap: 10.0, ..Default::default() };
        let sampling = SigmaSampling::halton(dim(3), plane, &cfg);
        let rep = compare_on_sigma(f.as_ref(), plane, &sampling, cfg.tol).unwrap();
        assert!(rep.min_difference.abs() < 1e-10);
        assert_eq!(rep.violation_count, 0);
    }

    #[test]
    fn monotone_field_has_no_violations() {
        // strictly increasing in x_1: reflections from the left never dominate
        let f = FnField::new(dim(3), |x: &Point| Ok(x[0].exp() + 1.0)).closed_form();
        let plane = PlaneParams::new(1.0);
        let cfg = SigmaConfig { radius_cap: 5.0, ..Default::default() };
        let sampling = SigmaSampling::halton(dim(3), plane, &cfg);
        let rep = compare_on_sigma(&f, plane, &sampling, cfg.tol).unwrap();
        assert_eq!(rep.violation_count, 0);
    }

    #[test]
    fn sweep_recovers_a_planted_plane() {
        let f = Arc::new(make_bubble(dim(3), 1.0, &[-2.0, 0.0]).unwrap()) as DynField;
        let grid: Vec<f64> = (-6..=2).map(|k| k as f64).collect();
        let cfg = SigmaConfig { radius_cap: 10.0, ..Default::default() };
        let sweep = sweep_planes(f.as_ref(), &grid, &cfg).unwrap();
        assert!(
            (sweep.lambda0_estimate + 2.0).abs() < 1e-5,
            "lambda0 {}",
            sweep.lambda0_estimate
        );
    }

    #[test]
    fn sweep_on_axis_centered_bubble_finds_zero() {
        let f = Arc::new(make_bubble(dim(3), 1.0, &[0.0, 0.0]).unwrap()) as DynField;
        let grid: Vec<f64> = (-4..=2).map(|k| k as f64).collect();
        let cfg = SigmaConfig { radius_cap: 10.0, ..Default::default() };
        let sweep = sweep_planes(f.as_ref(), &grid, &cfg).unwrap();
        assert!(sweep.lambda0_estimate.abs() < 1e-5);
    }

    #[test]
    fn sweep_cross_checks_against_the_fitted_kelvin_center() {
        let n = dim(3);
        let b = Arc::new(make_bubble(n, 1.0, &[3.0, 0.0]).unwrap()) as DynField;
        let v = Arc::new(kelvin_origin(b.clone())) as DynField;
        let pts: Vec<Point> = samples::half_space_points(n, 2.0, 2.0, 60, 33)
            .into_iter()
            .filter(|x| x.norm() > 0.05)
            .collect();
        let (params, rms) = crate::fit::fit_bubble(v.as_ref(), n, &pts).unwrap();
        assert!(rms < 1e-8);
        let grid: Vec<f64> = (-4..=4).map(|k| 0.25 * k as f64).collect();
        let cfg = SigmaConfig { radius_cap: 10.0, ..Default::default() };
        let sweep = sweep_planes(v.as_ref(), &grid, &cfg).unwrap();
        assert!(
            (sweep.lambda0_estimate - params.center[0]).abs() < 1e-5,
            "sweep {} vs fit {}",
            sweep.lambda0_estimate,
            params.center[0]
        );
    }

    #[test]
    fn sweep_fails_when_no_plane_is_violation_free() {
        // decreasing in x_1: every reflection from the left dominates
        let f = FnField::new(dim(3), |x: &Point| Ok((-x[0]).exp() + 1.0)).closed_form();
        let grid = vec![-2.0, -1.0, 0.0];
        let cfg = SigmaConfig { radius_cap: 3.0, ..Default::default() };
        assert!(matches!(
            sweep_planes(&f, &grid, &cfg),
            Err(Error::SweepFailure)
        ));
    }

    #[test]
    fn detect_axis_recovers_a_planted_axis() {
        let n = dim(5);
        let f = Arc::new(make_bubble(n, 1.0, &[1.5, -0.7, 0.0, 0.0]).unwrap()) as DynField;
        let cfg = AxisDetectConfig {
            lambda_min: -3.0,
            lambda_max: 3.0,
            lambda_step: 0.5,
            sigma: SigmaConfig { radius_cap: 8.0, ..Default::default() },
        };
        let det = detect_axis(&f, &cfg).unwrap();
        let expected = [1.5, -0.7, 0.0, 0.0];
        for (a, e) in det.axis_point.iter().zip(expected) {
            assert!((a - e).abs() < 1e-5, "axis {:?}", det.axis_point);
        }
        assert!(det.asymmetry_score < 1e-8, "score {}", det.asymmetry_score);
    }

    #[test]
    fn detect_axis_flags_an_asymmetric_field() {
        let n = dim(3);
        let b = Arc::new(make_bubble(n, 1.0, &[0.0, 0.0]).unwrap());
        let f = Arc::new(FnField::new(n, move |x: &Point| {
            // positive perturbation that breaks x_1 symmetry
            Ok(b.value(x)? + 0.1 / (1.0 + (x[0] - 1.0) * (x[0] - 1.0) + x[1] * x[1] + x.last() * x.last()))
        })) as DynField;
        let cfg = AxisDetectConfig {
            lambda_min: -3.0,
            lambda_max: 3.0,
            lambda_step: 0.5,
            sigma: SigmaConfig { radius_cap: 8.0, ..Default::default() },
        };
        let det = detect_axis(&f, &cfg).unwrap();
        assert!(det.asymmetry_score > 1e-3, "score {}", det.asymmetry_score);
    }

    #[test]
    fn detected_axis_moves_with_scaling() {
        let n = dim(3);
        let b = Arc::new(make_bubble(n, 1.0, &[2.0, 0.0]).unwrap()) as DynField;
        let scaled = Arc::new(scale_field(b, 2.0).unwrap()) as DynField;
        let cfg = AxisDetectConfig {
            lambda_min: -2.0,
            lambda_max: 2.0,
            lambda_step: 0.5,
            sigma: SigmaConfig { radius_cap: 8.0, ..Default::default() },
        };
        let det = detect_axis(&scaled, &cfg).unwrap();
        // planted axis at 2.0 moves to 2.0 / 2
        assert!((det.axis_point[0] - 1.0).abs() < 1e-5, "axis {:?}", det.axis_point);
    }

    #[test]
    fn decay_report_matches_the_bubble_far_field() {
        let n = dim(3);
        let b = make_bubble(n, 1.0, &[0.0, 0.0]).unwrap();
        let mu_exact = b.params().decay_coefficient(); // 3^{1/4}
        let radii = vec![1e2, 1e3, 1e4];
        let dirs = samples::admissible_directions(n, 10, 41);
        let rep = decay_report(&b, &radii, &dirs).unwrap();
        assert!((rep.mu_estimate - mu_exact).abs() < 1e-4, "mu {}", rep.mu_estimate);
        assert!(
            (rep.radial_limit_estimate + mu_exact).abs() < 1e-3,
            "radial {}",
            rep.radial_limit_estimate
        );
        for g in &rep.grad_limit_estimates {
            assert!(g.abs() < 1e-3);
        }
    }

    #[test]
    fn decay_mu_is_direction_independent() {
        let n = dim(3);
        let b = make_bubble(n, 1.0, &[0.4, -0.3]).unwrap();
        let radii = vec![1e4];
        let dirs = samples::admissible_directions(n, 10, 42);
        let mut mus = Vec::new();
        for d in &dirs {
            let rep = decay_report(&b, &radii, std::slice::from_ref(d)).unwrap();
            mus.push(rep.mu_estimate);
        }
        let spread = mus.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - mus.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-3, "spread {spread}");
    }

    #[test]
    fn decay_rejects_bad_inputs() {
        let b = make_bubble(dim(3), 1.0, &[0.0, 0.0]).unwrap();
        assert!(decay_report(&b, &[10.0, 5.0], &[vec![0.0, 0.0, 1.0]]).is_err());
        assert!(decay_report(&b, &[10.0], &[vec![0.0, 0.0, -1.0]]).is_err());
    }
}
