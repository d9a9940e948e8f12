//! Axisymmetric finite-difference solver: damped Newton iteration for
//! `-(u_rr + ((n-2)/r) u_r + u_zz) = u^q` on a truncated cylinder with the
//! nonlinear boundary condition `u_z = -u^p` at z = 0 and Dirichlet far-field
//! data on the outer faces.

mod banded;

pub use banded::{BandedLu, BandedMatrix};

use crate::error::{Error, Result};
use crate::field::{fd_gradient, fd_laplacian, Dimension, DynField, Point, Provenance, ScalarField};
use crate::halton::halton_scalar;

/// Tensor grid on `[0, R_r] x [0, R_z]` with nodes `(i h_r, j h_z)`.
#[derive(Debug, Clone)]
pub struct AxisymGrid {
    pub r_extent: f64,
    pub z_extent: f64,
    pub m_r: usize,
    pub m_z: usize,
}

impl AxisymGrid {
    pub fn new(r_extent: f64, z_extent: f64, m_r: usize, m_z: usize) -> Result<Self> {
        if r_extent <= 0.0 || z_extent <= 0.0 {
            return Err(Error::InvalidParameter("grid extents must be positive".into()));
        }
        if m_r < 2 || m_z < 2 {
            return Err(Error::InvalidParameter("need at least 2 cells per direction".into()));
        }
        Ok(AxisymGrid { r_extent, z_extent, m_r, m_z })
    }

    pub fn h_r(&self) -> f64 {
        self.r_extent / self.m_r as f64
    }

    pub fn h_z(&self) -> f64 {
        self.z_extent / self.m_z as f64
    }

    pub fn node_count(&self) -> usize {
        (self.m_r + 1) * (self.m_z + 1)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * (self.m_z + 1) + j
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.h_r()
    }

    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.h_z()
    }

    /// The half-space point `(r, 0, ..., 0, z)` a node corresponds to.
    pub fn node_point(&self, n: Dimension, i: usize, j: usize) -> Point {
        let mut c = vec![0.0; n.get()];
        c[0] = self.r(i);
        c[n.get() - 1] = self.z(j);
        Point::new(c)
    }
}

/// Dirichlet data on the outer faces of the truncated cylinder.
#[derive(Clone)]
pub enum FarField {
    /// Sample a known field (manufactured-solution mode).
    Field(DynField),
    /// Use the leading asymptote `mu / |x|^{n-2}` (blind mode).
    Decay { mu: f64 },
}

impl FarField {
    fn value(&self, n: Dimension, r: f64, z: f64) -> Result<f64> {
        match self {
            FarField::Field(f) => {
                let mut c = vec![0.0; n.get()];
                c[0] = r;
                c[n.get() - 1] = z;
                f.value(&Point::new(c))
            }
            FarField::Decay { mu } => {
                let rho = (r * r + z * z).sqrt();
                if rho < 1e-12 {
                    return Err(Error::Singularity);
                }
                Ok(mu / rho.powf(n.as_f64() - 2.0))
            }
        }
    }
}

/// Newton iteration controls.
#[derive(Debug, Clone)]
pub struct NewtonConfig {
    /// residual sup-norm target
    pub tol: f64,
    pub max_iter: usize,
    /// backtracking factor in (0, 1]
    pub damping: f64,
    pub max_backtracks: usize,
    /// number of continuation stages in the exponent q (1 = direct solve)
    pub continuation_steps: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-10,
            max_iter: 50,
            damping: 0.5,
            max_backtracks: 20,
            continuation_steps: 5,
        }
    }
}

/// Output of a Newton solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// row-major (m_r+1) x (m_z+1), index i*(m_z+1)+j
    pub grid_values: Vec<f64>,
    pub newton_iterations: usize,
    pub final_residual_norm: f64,
    pub converged: bool,
    /// residual sup-norms after each accepted step (final continuation stage)
    pub residual_history: Vec<f64>,
}

/// Samples a field at every grid node.
pub fn sample_on_grid(f: &dyn ScalarField, grid: &AxisymGrid, n: Dimension) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.node_count());
    for i in 0..=grid.m_r {
        for j in 0..=grid.m_z {
            out.push(f.value(&grid.node_point(n, i, j))?);
        }
    }
    Ok(out)
}

/// Discrete residual of the system. Interior rows use centered second-order
/// stencils; the axis column uses the reflected stencil with the
/// removable-singularity limit (n-1) u_rr; the z = 0 rows enforce the
/// nonlinear flux condition u_z = -u^p with a second-order one-sided
/// derivative; outer faces carry `u - g`.
pub fn assemble_residual(
    grid: &AxisymGrid,
    values: &[f64],
    n: Dimension,
    q: f64,
    p: f64,
    far_field: &FarField,
) -> Result<Vec<f64>> {
    if values.len() != grid.node_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.node_count(),
            got: values.len(),
        });
    }
    if let Some(&bad) = values.iter().find(|v| **v <= 0.0) {
        return Err(Error::NonPositive { value: bad });
    }
    let (h_r, h_z) = (grid.h_r(), grid.h_z());
    let (hr2, hz2) = (h_r * h_r, h_z * h_z);
    let nf = n.as_f64();
    let mut out = vec![0.0; values.len()];
    for i in 0..=grid.m_r {
        for j in 0..=grid.m_z {
            let k = grid.index(i, j);
            let u = values[k];
            if i == grid.m_r || j == grid.m_z {
                out[k] = u - far_field.value(n, grid.r(i), grid.z(j))?;
                continue;
            }
            let radial = if i == 0 {
                (nf - 1.0) * 2.0 * (values[grid.index(1, j)] - u) / hr2
            } else {
                let (ul, ur) = (values[grid.index(i - 1, j)], values[grid.index(i + 1, j)]);
                (ur - 2.0 * u + ul) / hr2 + (nf - 2.0) / grid.r(i) * (ur - ul) / (2.0 * h_r)
            };
            if j == 0 {
                let (u1, u2) = (values[grid.index(i, 1)], values[grid.index(i, 2)]);
                let flux = (-3.0 * u + 4.0 * u1 - u2) / (2.0 * h_z);
                out[k] = -flux - u.powf(p);
            } else {
                let (ud, up) = (values[grid.index(i, j - 1)], values[grid.index(i, j + 1)]);
                let vertical = (up - 2.0 * u + ud) / hz2;
                out[k] = -(radial + vertical) - u.powf(q);
            }
        }
    }
    Ok(out)
}

fn assemble_jacobian(
    grid: &AxisymGrid,
    values: &[f64],
    n: Dimension,
    q: f64,
    p: f64,
) -> BandedMatrix {
    let bw = grid.m_z + 1;
    let mut jac = BandedMatrix::zeros(grid.node_count(), bw, bw);
    let (h_r, h_z) = (grid.h_r(), grid.h_z());
    let (hr2, hz2) = (h_r * h_r, h_z * h_z);
    let nf = n.as_f64();
    for i in 0..=grid.m_r {
        for j in 0..=grid.m_z {
            let k = grid.index(i, j);
            let u = values[k];
            if i == grid.m_r || j == grid.m_z {
                jac.set(k, k, 1.0);
                continue;
            }
            if j == 0 {
                jac.add(k, k, 1.5 / h_z - p * u.powf(p - 1.0));
                jac.add(k, grid.index(i, 1), -2.0 / h_z);
                jac.add(k, grid.index(i, 2), 0.5 / h_z);
                continue;
            }
            let mut diag = -q * u.powf(q - 1.0);
            if i == 0 {
                diag += 2.0 * (nf - 1.0) / hr2;
                jac.add(k, grid.index(1, j), -2.0 * (nf - 1.0) / hr2);
            } else {
                diag += 2.0 / hr2;
                let drift = (nf - 2.0) / (grid.r(i) * 2.0 * h_r);
                jac.add(k, grid.index(i - 1, j), -(1.0 / hr2 - drift));
                jac.add(k, grid.index(i + 1, j), -(1.0 / hr2 + drift));
            }
            diag += 2.0 / hz2;
            jac.add(k, grid.index(i, j - 1), -1.0 / hz2);
            jac.add(k, grid.index(i, j + 1), -1.0 / hz2);
            jac.add(k, k, diag);
        }
    }
    jac
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn newton_stage(
    grid: &AxisymGrid,
    n: Dimension,
    q: f64,
    p: f64,
    guess: Vec<f64>,
    far_field: &FarField,
    config: &NewtonConfig,
) -> Result<SolveResult> {
    let mut u = guess;
    let mut history = Vec::new();
    let mut residual = assemble_residual(grid, &u, n, q, p, far_field)?;
    let mut norm = sup_norm(&residual);
    history.push(norm);
    let mut iterations = 0;
    while norm >= config.tol && iterations < config.max_iter {
        iterations += 1;
        let jac = assemble_jacobian(grid, &u, n, q, p);
        let lu = match jac.factorize() {
            Ok(lu) => lu,
            Err(Error::SingularMatrix) => {
                return Ok(SolveResult {
                    grid_values: u,
                    newton_iterations: iterations,
                    final_residual_norm: norm,
                    converged: false,
                    residual_history: history,
                })
            }
            Err(e) => return Err(e),
        };
        let neg: Vec<f64> = residual.iter().map(|r| -r).collect();
        let delta = lu.solve(&neg)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=config.max_backtracks {
            let candidate: Vec<f64> =
                u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            if candidate.iter().any(|v| *v <= 0.0) {
                t *= config.damping;
                continue;
            }
            let cand_res = assemble_residual(grid, &candidate, n, q, p, far_field)?;
            let cand_norm = sup_norm(&cand_res);
            if cand_norm < norm {
                u = candidate;
                residual = cand_res;
                norm = cand_norm;
                history.push(norm);
                accepted = true;
                break;
            }
            t *= config.damping;
        }
        if !accepted {
            return Ok(SolveResult {
                grid_values: u,
                newton_iterations: iterations,
                final_residual_norm: norm,
                converged: false,
                residual_history: history,
            });
        }
    }
    Ok(SolveResult {
        grid_values: u,
        newton_iterations: iterations,
        final_residual_norm: norm,
        converged: norm < config.tol,
        residual_history: history,
    })
}

/// Damped Newton solve. A direct attempt runs first; if it stalls and more
/// than one continuation step is configured, the solve restarts from the
/// original guess with continuation in the interior exponent, from the
/// linear problem up to the target q.
pub fn newton_solve(
    grid: &AxisymGrid,
    n: Dimension,
    q: f64,
    p: f64,
    guess: &[f64],
    far_field: &FarField,
    config: &NewtonConfig,
) -> Result<SolveResult> {
    if guess.len() != grid.node_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.node_count(),
            got: guess.len(),
        });
    }
    if let Some(&bad) = guess.iter().find(|v| **v <= 0.0) {
        return Err(Error::NonPositive { value: bad });
    }
    if config.tol <= 0.0 || config.max_iter == 0 {
        return Err(Error::InvalidParameter("tol must be positive, max_iter >= 1".into()));
    }
    let steps = config.continuation_steps.max(1);
    let direct = newton_stage(grid, n, q, p, guess.to_vec(), far_field, config)?;
    if steps == 1 || direct.converged {
        return Ok(direct);
    }
    // direct Newton stalled: restage through easier exponents
    let mut current = guess.to_vec();
    let mut last = direct;
    for k in 1..=steps {
        let qk = 1.0 + (q - 1.0) * k as f64 / steps as f64;
        // intermediate stages only need to hand over a decent guess
        let stage_cfg = NewtonConfig {
            tol: if k == steps { config.tol } else { config.tol.max(1e-8) },
            ..config.clone()
        };
        let res = newton_stage(grid, n, qk, p, current.clone(), far_field, &stage_cfg)?;
        let done = !res.converged || k == steps;
        current = res.grid_values.clone();
        last = res;
        if done {
            break;
        }
    }
    Ok(last)
}

/// Solves on each grid with exact far-field data and returns the log-log
/// slope of the sup-norm nodal error against the mesh width.
pub fn convergence_study(
    n: Dimension,
    q: f64,
    p: f64,
    exact: &DynField,
    grids: &[AxisymGrid],
    config: &NewtonConfig,
) -> Result<f64> {
    if grids.len() < 2 {
        return Err(Error::InvalidParameter("need at least two grids".into()));
    }
    let mut log_h = Vec::new();
    let mut log_e = Vec::new();
    for grid in grids {
        let samples = sample_on_grid(exact.as_ref(), grid, n)?;
        let far = FarField::Field(exact.clone());
        let res = newton_solve(grid, n, q, p, &samples, &far, config)?;
        if !res.converged {
            return Err(Error::NonConvergence(format!(
                "study grid {}x{} stalled at residual {:.3e}",
                grid.m_r, grid.m_z, res.final_residual_norm
            )));
        }
        let err = res
            .grid_values
            .iter()
            .zip(&samples)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        log_h.push(grid.h_r().max(grid.h_z()).ln());
        log_e.push(err.ln());
    }
    let m = log_h.len() as f64;
    let (sh, se): (f64, f64) = (log_h.iter().sum(), log_e.iter().sum());
    let shh: f64 = log_h.iter().map(|a| a * a).sum();
    let she: f64 = log_h.iter().zip(&log_e).map(|(a, b)| a * b).sum();
    Ok((m * she - sh * se) / (m * shh - sh * sh))
}

/// Field backed by a converged grid: bilinear interpolation inside the
/// truncated cylinder, the `mu/|x|^{n-2}` asymptote outside, with mu read off
/// the axis column by two-point extrapolation.
pub struct GridField {
    grid: AxisymGrid,
    values: Vec<f64>,
    n: Dimension,
    mu: f64,
    fd_step: f64,
}

impl GridField {
    pub fn mu(&self) -> f64 {
        self.mu
    }
}

pub fn lift_to_field(result: &SolveResult, grid: &AxisymGrid, n: Dimension) -> Result<GridField> {
    if !result.converged {
        return Err(Error::Precondition("lift requires a converged solve".into()));
    }
    let power = n.as_f64() - 2.0;
    let a = |j: usize| result.grid_values[grid.index(0, j)] * grid.z(j).powf(power);
    let mu = 2.0 * a(grid.m_z) - a(grid.m_z / 2);
    Ok(GridField {
        grid: grid.clone(),
        values: result.grid_values.clone(),
        n,
        mu,
        fd_step: 0.5 * grid.h_r().min(grid.h_z()),
    })
}

impl ScalarField for GridField {
    fn dim(&self) -> Dimension {
        self.n
    }

    fn value(&self, x: &Point) -> Result<f64> {
        x.check_dim(self.n)?;
        x.check_admissible()?;
        let d = self.n.get();
        let r = x.coords()[..d - 1].iter().map(|c| c * c).sum::<f64>().sqrt();
        let z = x[d - 1];
        if r > self.grid.r_extent || z > self.grid.z_extent {
            let rho = (r * r + z * z).sqrt();
            return Ok(self.mu / rho.powf(self.n.as_f64() - 2.0));
        }
        let (h_r, h_z) = (self.grid.h_r(), self.grid.h_z());
        let i = ((r / h_r).floor() as usize).min(self.grid.m_r - 1);
        let j = ((z / h_z).floor() as usize).min(self.grid.m_z - 1);
        let (tr, tz) = (r / h_r - i as f64, z / h_z - j as f64);
        let v00 = self.values[self.grid.index(i, j)];
        let v10 = self.values[self.grid.index(i + 1, j)];
        let v01 = self.values[self.grid.index(i, j + 1)];
        let v11 = self.values[self.grid.index(i + 1, j + 1)];
        Ok(v00 * (1.0 - tr) * (1.0 - tz)
            + v10 * tr * (1.0 - tz)
            + v01 * (1.0 - tr) * tz
            + v11 * tr * tz)
    }

    fn gradient(&self, x: &Point) -> Result<Vec<f64>> {
        fd_gradient(self, x, self.fd_step)
    }

    fn laplacian(&self, x: &Point) -> Result<f64> {
        fd_laplacian(self, x, self.fd_step)
    }

    fn provenance(&self) -> Provenance {
        Provenance::SampledGrid
    }
}

/// Deterministic multiplicative perturbation of a grid function, used for
/// basin-of-attraction experiments.
pub fn perturb_grid(values: &[f64], amplitude: f64, seed: u64) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let t = halton_scalar((seed % 4) as usize, seed + k as u64 + 1);
            v * (1.0 + amplitude * (2.0 * t - 1.0))
        })
        .collect()
}
