//! Domain geometry and the scalar-field abstraction shared by every other
//! module: points of the closed upper half-space and fields exposing value,
//! gradient and Laplacian, together with finite-difference oracles for the
//! derivatives of closed-form fields.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Space dimension, constrained to n >= 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::DimensionTooSmall(n));
        }
        Ok(Dimension(n))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// Critical interior exponent (n+2)/(n-2), the one under which the
    /// explicit solution family solves the interior equation exactly.
    pub fn critical_interior_exponent(self) -> f64 {
        (self.as_f64() + 2.0) / (self.as_f64() - 2.0)
    }

    /// The interior exponent as printed in the problem statement, 2n/(n-2).
    pub fn printed_interior_exponent(self) -> f64 {
        2.0 * self.as_f64() / (self.as_f64() - 2.0)
    }

    /// Critical boundary exponent n/(n-2).
    pub fn boundary_exponent(self) -> f64 {
        self.as_f64() / (self.as_f64() - 2.0)
    }
}

/// A point of R^n. Admissible for half-space operations iff the last
/// coordinate is nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    pub fn zeros(n: usize) -> Self {
        Point { coords: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    /// Last coordinate x_n.
    pub fn last(&self) -> f64 {
        *self.coords.last().expect("point must be nonempty")
    }

    pub fn is_admissible(&self) -> bool {
        self.last() >= 0.0
    }

    pub fn check_admissible(&self) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            Err(Error::OutsideHalfSpace { xn: self.last() })
        }
    }

    pub fn check_dim(&self, n: Dimension) -> Result<()> {
        if self.dim() == n.get() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: n.get(), got: self.dim() })
        }
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

/// How a field's derivatives come about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Value, gradient and Laplacian are exact closed forms.
    ClosedForm,
    /// Values interpolated from a discrete grid; derivatives are
    /// finite-difference based.
    SampledGrid,
    /// Produced by an inversion or similar transform of another field.
    Transformed,
}

/// A positive scalar function on (a subset of) the closed upper half-space.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> Dimension;
    fn value(&self, x: &Point) -> Result<f64>;
    fn gradient(&self, x: &Point) -> Result<Vec<f64>>;
    fn laplacian(&self, x: &Point) -> Result<f64>;
    fn provenance(&self) -> Provenance;
}

pub type DynField = Arc<dyn ScalarField>;

/// Default step for the finite-difference oracles.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Central-difference gradient, second-order one-sided in the normal
/// direction when the symmetric stencil would exit the half-space.
pub fn fd_gradient(f: &dyn ScalarField, x: &Point, h: f64) -> Result<Vec<f64>> {
    x.check_dim(f.dim())?;
    x.check_admissible()?;
    if h <= 0.0 {
        return Err(Error::InvalidParameter(format!("fd step must be positive, got {h}")));
    }
    let n = x.dim();
    let mut grad = vec![0.0; n];
    for i in 0..n {
        let shift = |delta: f64| -> Result<f64> {
            let mut p = x.clone();
            p.coords_mut()[i] += delta;
            f.value(&p)
        };
        grad[i] = if i == n - 1 && x.last() < h {
            // one-sided second-order stencil at the boundary
            (-3.0 * shift(0.0)? + 4.0 * shift(h)? - shift(2.0 * h)?) / (2.0 * h)
        } else {
            (shift(h)? - shift(-h)?) / (2.0 * h)
        };
    }
    Ok(grad)
}

/// (2n+1)-point finite-difference Laplacian, one-sided second-order in the
/// normal direction at the boundary.
pub fn fd_laplacian(f: &dyn ScalarField, x: &Point, h: f64) -> Result<f64> {
    x.check_dim(f.dim())?;
    x.check_admissible()?;
    if h <= 0.0 {
        return Err(Error::InvalidParameter(format!("fd step must be positive, got {h}")));
    }
    let n = x.dim();
    let center = f.value(x)?;
    let mut lap = 0.0;
    for i in 0..n {
        let shift = |delta: f64| -> Result<f64> {
            let mut p = x.clone();
            p.coords_mut()[i] += delta;
            f.value(&p)
        };
        lap += if i == n - 1 && x.last() < h {
            // second-order one-sided second derivative
            (2.0 * center - 5.0 * shift(h)? + 4.0 * shift(2.0 * h)? - shift(3.0 * h)?)
                / (h * h)
        } else {
            (shift(h)? - 2.0 * center + shift(-h)?) / (h * h)
        };
    }
    Ok(lap)
}

/// A field defined by closures; derivative closures are optional and fall
/// back to finite differences. Useful for manufactured test fields.
pub struct FnField<V> {
    dim: Dimension,
    value: V,
    gradient: Option<Box<dyn Fn(&Point) -> Result<Vec<f64>> + Send + Sync>>,
    laplacian: Option<Box<dyn Fn(&Point) -> Result<f64> + Send + Sync>>,
    provenance: Provenance,
    fd_step: f64,
}

impl<V> FnField<V>
where
    V: Fn(&Point) -> Result<f64> + Send + Sync,
{
    pub fn new(dim: Dimension, value: V) -> Self {
        FnField {
            dim,
            value,
            gradient: None,
            laplacian: None,
            provenance: Provenance::SampledGrid,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn with_gradient(
        mut self,
        g: impl Fn(&Point) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Box::new(g));
        self
    }

    pub fn with_laplacian(
        mut self,
        l: impl Fn(&Point) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        self.laplacian = Some(Box::new(l));
        self
    }

    pub fn closed_form(mut self) -> Self {
        self.provenance = Provenance::ClosedForm;
        self
    }
}

impl<V> ScalarField for FnField<V>
where
    V: Fn(&Point) -> Result<f64> + Send + Sync,
{
    fn dim(&self) -> Dimension {
        self.dim
    }

    fn value(&self, x: &Point) -> Result<f64> {
        (self.value)(x)
    }

    fn gradient(&self, x: &Point) -> Result<Vec<f64>> {
        match &self.gradient {
            Some(g) => g(x),
            None => fd_gradient(self, x, self.fd_step),
        }
    }

    fn laplacian(&self, x: &Point) -> Result<f64> {
        match &self.laplacian {
            Some(l) => l(x),
            None => fd_laplacian(self, x, self.fd_step),
        }
    }

    fn provenance(&self) -> Provenance {
        self.provenance
    }
}

/// Pointwise sum of fields. Closed-form iff every part is.
pub struct SumField {
    parts: Vec<DynField>,
}

impl SumField {
    pub fn new(parts: Vec<DynField>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("sum of zero fields".into()));
        }
        let n = parts[0].dim();
        for p in &parts {
            if p.dim() != n {
                return Err(Error::DimensionMismatch { expected: n.get(), got: p.dim().get() });
            }
        }
        Ok(SumField { parts })
    }
}

impl ScalarField for SumField {
    fn dim(&self) -> Dimension {
        self.parts[0].dim()
    }

    fn value(&self, x: &Point) -> Result<f64> {
        self.parts.iter().map(|p| p.value(x)).sum()
    }

    fn gradient(&self, x: &Point) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.dim().get()];
        for p in &self.parts {
            for (gi, pi) in g.iter_mut().zip(p.gradient(x)?) {
                *gi += pi;
            }
        }
        Ok(g)
    }

    fn laplacian(&self, x: &Point) -> Result<f64> {
        self.parts.iter().map(|p| p.laplacian(x)).sum()
    }

    fn provenance(&self) -> Provenance {
        if self
            .parts
            .iter()
            .all(|p| p.provenance() == Provenance::ClosedForm)
        {
            Provenance::ClosedForm
        } else {
            Provenance::Transformed
        }
    }
}
