//! Kelvin transforms `v(x) = |x - e|^{2-n} f(e + (x-e)/|x-e|^2)` about a
//! boundary point `e` (the origin as the default center), and verification
//! that transformed fields satisfy the transformed system with its weighted
//! boundary condition `D_{x_n} v = -|x|^{-(n - p(n-2))} v^p`.

use crate::bubble::ResidualReport;
use crate::error::{Error, Result};
use crate::field::{
    fd_gradient, fd_laplacian, Dimension, DynField, Point, Provenance, ScalarField,
    DEFAULT_FD_STEP,
};

/// Evaluations closer than this to the inversion center raise
/// [`Error::Singularity`] instead of returning huge values.
pub const SINGULARITY_GUARD: f64 = 1e-8;

/// Boundary point of inversion (`e_n = 0` exactly).
#[derive(Debug, Clone)]
pub struct KelvinCenter {
    point: Point,
}

impl KelvinCenter {
    pub fn new(point: Point) -> Result<Self> {
        if point.last() != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "inversion center must lie on the boundary, got e_n = {}",
                point.last()
            )));
        }
        Ok(KelvinCenter { point })
    }

    pub fn origin(n: Dimension) -> Self {
        KelvinCenter { point: Point::zeros(n.get()) }
    }

    pub fn point(&self) -> &Point {
        &self.point
    }

    /// The inversion `x -> e + (x-e)/|x-e|^2`; an involution away from `e`.
    pub fn invert(&self, x: &Point) -> Result<Point> {
        let rho_sq = x.dist_sq(&self.point);
        if rho_sq < SINGULARITY_GUARD * SINGULARITY_GUARD {
            return Err(Error::Singularity);
        }
        Ok(Point::new(
            x.coords()
                .iter()
                .zip(self.point.coords())
                .map(|(xi, ei)| ei + (xi - ei) / rho_sq)
                .collect(),
        ))
    }
}

/// The Kelvin transform of a field; singular set is the center point.
pub struct KelvinField {
    inner: DynField,
    center: KelvinCenter,
}

/// Kelvin transform about the origin.
pub fn kelvin_origin(f: DynField) -> KelvinField {
    let n = f.dim();
    KelvinField { inner: f, center: KelvinCenter::origin(n) }
}

/// Kelvin transform about a general boundary point.
pub fn kelvin_at(f: DynField, center: KelvinCenter) -> Result<KelvinField> {
    center.point.check_dim(f.dim())?;
    Ok(KelvinField { inner: f, center })
}

impl KelvinField {
    pub fn center(&self) -> &KelvinCenter {
        &self.center
    }

    fn offset(&self, x: &Point) -> Result<(Vec<f64>, f64)> {
        x.check_dim(self.dim())?;
        let w: Vec<f64> = x
            .coords()
            .iter()
            .zip(self.center.point.coords())
            .map(|(xi, ei)| xi - ei)
            .collect();
        let rho = w.iter().map(|c| c * c).sum::<f64>().sqrt();
        if rho < SINGULARITY_GUARD {
            return Err(Error::Singularity);
        }
        Ok((w, rho))
    }
}

impl ScalarField for KelvinField {
    fn dim(&self) -> Dimension {
        self.inner.dim()
    }

    fn value(&self, x: &Point) -> Result<f64> {
        let (_, rho) = self.offset(x)?;
        let xi = self.center.invert(x)?;
        let nf = self.dim().as_f64();
        Ok(rho.powf(2.0 - nf) * self.inner.value(&xi)?)
    }

    fn gradient(&self, x: &Point) -> Result<Vec<f64>> {
        let (w, rho) = self.offset(x)?;
        if self.inner.provenance() != Provenance::ClosedForm {
            // finite differences with the step shrunk near the center to
            // respect the inversion's distortion
            let h = DEFAULT_FD_STEP * (rho * rho).min(1.0);
            return fd_gradient(self, x, h);
        }
        let xi = self.center.invert(x)?;
        let nf = self.dim().as_f64();
        let fval = self.inner.value(&xi)?;
        let g = self.inner.gradient(&xi)?;
        let rho_n = rho.powf(nf);
        let what: Vec<f64> = w.iter().map(|c| c / rho).collect();
        let wg: f64 = what.iter().zip(&g).map(|(a, b)| a * b).sum();
        Ok((0..w.len())
            .map(|i| ((2.0 - nf) * w[i] * fval + g[i] - 2.0 * wg * what[i]) / rho_n)
            .collect())
    }

    fn laplacian(&self, x: &Point) -> Result<f64> {
        let (_, rho) = self.offset(x)?;
        if self.inner.provenance() != Provenance::ClosedForm {
            let h = DEFAULT_FD_STEP * (rho * rho).min(1.0);
            return fd_laplacian(self, x, h);
        }
        // the transform intertwines the Laplacian:
        // Δv(x) = |x-e|^{-(n+2)} (Δf)(e + (x-e)/|x-e|^2)
        let xi = self.center.invert(x)?;
        let nf = self.dim().as_f64();
        Ok(rho.powf(-(nf + 2.0)) * self.inner.laplacian(&xi)?)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Transformed
    }
}

/// Weight exponent `n - p(n-2)` of the transformed boundary condition.
/// Snapped to exactly zero at the critical `p = n/(n-2)`, where the weight
/// collapses to 1 and the check reduces to the untransformed one.
pub fn boundary_weight_exponent(n: Dimension, p: f64) -> f64 {
    let nf = n.as_f64();
    let w = nf - p * (nf - 2.0);
    if w.abs() < 1e-10 {
        0.0
    } else {
        w
    }
}

/// Checks `-Δv = v^q` at interior samples and the weighted boundary
/// condition at boundary samples (split by `x_n = 0`); distances in the
/// weight are taken from `center`.
pub fn verify_transformed_system(
    v: &dyn ScalarField,
    center: &KelvinCenter,
    p: f64,
    q: f64,
    samples: &[Point],
) -> Result<ResidualReport> {
    let n = v.dim();
    let w_exp = boundary_weight_exponent(n, p);
    let mut max_interior: f64 = 0.0;
    let mut max_boundary: f64 = 0.0;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max = f64::NEG_INFINITY;
    let mut interior_seen = false;
    for x in samples {
        x.check_admissible()?;
        let val = v.value(x)?;
        if val <= 0.0 {
            return Err(Error::NonPositive { value: val });
        }
        if x.last() == 0.0 {
            let normal = v.gradient(x)?[x.dim() - 1];
            let dist = x.dist_sq(center.point()).sqrt();
            let weight = if w_exp == 0.0 { 1.0 } else { dist.powf(-w_exp) };
            max_boundary = max_boundary.max((normal + weight * val.powf(p)).abs());
        } else {
            let neg_lap = -v.laplacian(x)?;
            let power = val.powf(q);
            max_interior = max_interior.max((neg_lap - power).abs());
            let ratio = neg_lap / power;
            ratio_min = ratio_min.min(ratio);
            ratio_max = ratio_max.max(ratio);
            interior_seen = true;
        }
    }
    Ok(ResidualReport {
        interior_exponent_used: q,
        max_interior_residual: max_interior,
        max_boundary_residual: max_boundary,
        sample_count: samples.len(),
        proportionality_defect: if interior_seen { ratio_max - ratio_min } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::{make_bubble, verify_boundary};
    use crate::field::FnField;
    use crate::samples;
    use std::sync::Arc;

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn transform_of_constant_is_inverse_distance_power() {
        let c = 2.0;
        let f = FnField::new(dim(3), move |_: &Point| Ok(c))
            .with_gradient(|_| Ok(vec![0.0; 3]))
            .with_laplacian(|_| Ok(0.0))
            .closed_form();
        let v = kelvin_origin(Arc::new(f));
        let x = Point::new(vec![1.0, 2.0, 2.0]); // |x| = 3
        assert!((v.value(&x).unwrap() - c / 3.0).abs() < 1e-14);
    }

    #[test]
    fn transform_is_an_involution() {
        let b = Arc::new(make_bubble(dim(3), 1.0, &[0.5, -0.3]).unwrap());
        let v = Arc::new(kelvin_origin(b.clone())) as DynField;
        let vv = kelvin_origin(v);
        for x in samples::half_space_points(dim(3), 3.0, 3.0, 100, 11) {
            if x.norm() < 0.05 {
                continue;
            }
            let a = vv.value(&x).unwrap();
            let e = b.value(&x).unwrap();
            assert!((a - e).abs() < 1e-10 * e.abs().max(1.0));
        }
    }

    #[test]
    fn general_center_reduces_to_origin_at_e_zero() {
        let b = Arc::new(make_bubble(dim(3), 1.0, &[0.0, 0.0]).unwrap());
        let v0 = kelvin_origin(b.clone());
        let ve = kelvin_at(b, KelvinCenter::origin(dim(3))).unwrap();
        let x = Point::new(vec![0.7, -0.2, 1.4]);
        assert_eq!(v0.value(&x).unwrap(), ve.value(&x).unwrap());
    }

    #[test]
    fn inversion_fixes_the_unit_sphere_slice() {
        // |e + (x-e)/|x-e|^2| = 1 for x = (0.5, x_2, ..., x_{n-1}, 0), e = (1,0,...,0)
        let mut e = vec![0.0; 4];
        e[0] = 1.0;
        let center = KelvinCenter::new(Point::new(e)).unwrap();
        for k in 0..20 {
            let t2 = -3.0 + 6.0 * crate::halton::halton_scalar(0, k);
            let t3 = -3.0 + 6.0 * crate::halton::halton_scalar(1, k);
            let x = Point::new(vec![0.5, t2, t3, 0.0]);
            let img = center.invert(&x).unwrap();
            assert!((img.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transform_center_evaluation_is_singular() {
        let b = Arc::new(make_bubble(dim(3), 1.0, &[0.0, 0.0]).unwrap());
        let v = kelvin_origin(b);
        assert!(matches!(v.value(&Point::zeros(3)), Err(Error::Singularity)));
    }

    #[test]
    fn chain_rule_derivatives_match_finite_differences() {
        let b = Arc::new(make_bubble(dim(3), 1.0, &[0.5, 0.0]).unwrap());
        let v = kelvin_origin(b);
        for x in [
            Point::new(vec![0.8, -0.4, 0.6]),
            Point::new(vec![2.0, 1.0, 0.1]),
            Point::new(vec![-1.5, 0.3, 2.0]),
        ] {
            let g = v.gradient(&x).unwrap();
            let gfd = fd_gradient(&v, &x, 1e-5).unwrap();
            for (a, b) in g.iter().zip(&gfd) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
            let l = v.laplacian(&x).unwrap();
            let lfd = fd_laplacian(&v, &x, 1e-4).unwrap();
            assert!((l - lfd).abs() < 1e-4 * l.abs().max(1.0));
        }
    }

    #[test]
    fn transformed_bubble_satisfies_the_transformed_system() {
        let n = dim(3);
        let b = Arc::new(make_bubble(n, 1.0, &[0.0, 0.0]).unwrap());
        let v = kelvin_origin(b);
        let mut pts: Vec<Point> = samples::half_space_points(n, 5.0, 5.0, 70, 13)
            .into_iter()
            .filter(|x| {
                let r = x.norm();
                (0.1..10.0).contains(&r)
            })
            .collect();
        pts.extend(
            samples::boundary_points(n, 5.0, 50, 14)
                .into_iter()
                .filter(|x| x.norm() > 0.1),
        );
        let rep = verify_transformed_system(
            &v,
            &KelvinCenter::origin(n),
            n.boundary_exponent(),
            n.critical_interior_exponent(),
            &pts,
        )
        .unwrap();
        assert!(rep.max_interior_residual < 1e-8, "interior {}", rep.max_interior_residual);
        assert!(rep.max_boundary_residual < 1e-8, "boundary {}", rep.max_boundary_residual);
    }

    #[test]
    fn critical_weight_collapses_to_plain_boundary_check() {
        let n = dim(5);
        assert_eq!(boundary_weight_exponent(n, n.boundary_exponent()), 0.0);
        let b = Arc::new(make_bubble(n, 1.0, &[0.4, 0.0, 0.0, 0.0]).unwrap());
        let v = kelvin_origin(b);
        let pts: Vec<Point> = samples::boundary_points(n, 4.0, 40, 15)
            .into_iter()
            .filter(|x| x.norm() > 0.2)
            .collect();
        let transformed = verify_transformed_system(
            &v,
            &KelvinCenter::origin(n),
            n.boundary_exponent(),
            n.critical_interior_exponent(),
            &pts,
        )
        .unwrap();
        let plain = verify_boundary(&v, n.boundary_exponent(), &pts).unwrap();
        assert!(
            (transformed.max_boundary_residual - plain.max_boundary_residual).abs() < 1e-14
        );
    }

    #[test]
    fn non_solution_has_interior_residual_bounded_away_from_zero() {
        let f = FnField::new(dim(3), |_: &Point| Ok(1.0))
            .with_gradient(|_| Ok(vec![0.0; 3]))
            .with_laplacian(|_| Ok(0.0))
            .closed_form();
        let v = kelvin_origin(Arc::new(f));
        let pts = vec![Point::new(vec![1.0, 0.0, 1.0])];
        let rep = verify_transformed_system(
            &v,
            &KelvinCenter::origin(dim(3)),
            3.0,
            3.0,
            &pts,
        )
        .unwrap();
        assert!(rep.max_interior_residual > 0.1);
    }

    #[test]
    fn decay_conversion_recovers_the_value_at_the_center() {
        // if f is bounded near 0 then |x|^{n-2} v(x) -> f(0) as |x| -> inf
        let b = Arc::new(make_bubble(dim(3), 1.0, &[0.7, 0.0]).unwrap());
        let f0 = b.value(&Point::zeros(3)).unwrap();
        let v = kelvin_origin(b);
        let dir = [0.6, 0.0, 0.8];
        let mut est = Vec::new();
        for r in [1e2, 1e3, 1e4] {
            let x = Point::new(dir.iter().map(|d| d * r).collect());
            est.push(r * v.value(&x).unwrap());
        }
        // Richardson over the 1/r correction
        let extr = (1e3 * est[1] - 1e2 * est[0]) / (1e3 - 1e2);
        let extr2 = (1e4 * est[2] - 1e3 * est[1]) / (1e4 - 1e3);
        assert!((extr2 - f0).abs() < 1e-6, "{extr2} vs {f0}");
        assert!((extr2 - f0).abs() < (extr - f0).abs());
    }
}
