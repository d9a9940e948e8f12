//! Flat key-value configuration files and the central defaults table.
//! Precedence: command-line flag, then config-file entry, then default.

use std::path::Path;

/// Every configurable key with its default (as printed) and meaning.
/// Defaults written as `n-dependent` are computed from the dimension.
pub const DEFAULTS: &[(&str, &str, &str)] = &[
    ("n", "3", "space dimension (>= 3)"),
    ("lambda", "1", "bubble scale parameter"),
    ("center", "0,...,0", "tangential bubble center y' (comma-separated, n-1 values)"),
    ("q_exponent", "n-dependent: (n+2)/(n-2)", "interior exponent"),
    ("p_exponent", "n-dependent: n/(n-2)", "boundary exponent"),
    ("seed", "0", "Halton sampling seed"),
    ("samples", "500", "number of sample points"),
    ("extent", "5", "half-width of the sampling box"),
    ("tol", "1e-9", "residual tolerance"),
    ("defect_tol", "1e-6", "proportionality-defect tolerance (verify-bubble)"),
    ("kelvin_center", "0,...,0", "inversion center e' on the boundary (kelvin-check)"),
    ("fit_tol", "1e-7", "RMS tolerance for profile fits"),
    ("lambda_plane", "-5", "plane position (moving-plane)"),
    ("lambda_min", "-2", "sweep grid start (moving-plane sweep, detect-axis)"),
    ("lambda_max", "2", "sweep grid end"),
    ("lambda_step", "0.5", "sweep grid step"),
    ("radius_cap", "10", "cap sample radius (moving-plane, detect-axis)"),
    ("plane_samples", "2000", "samples per plane comparison"),
    ("radii", "1e2,1e3,1e4", "extrapolation radii (decay)"),
    ("directions", "6", "ray directions (decay)"),
    ("s_lo", "bracket from decay estimate", "scale bracket lower end (find-scale)"),
    ("s_hi", "bracket from decay estimate", "scale bracket upper end (find-scale)"),
    ("c", "1", "initial height (shoot-ode)"),
    ("ode_step", "1e-4", "RK4 step (shoot-ode)"),
    ("t_max", "2 * c^(1-p)", "integration horizon (shoot-ode)"),
    ("r_extent", "12", "radial extent of the solver domain"),
    ("z_extent", "12", "vertical extent of the solver domain"),
    ("grid", "128", "cells per direction (solve)"),
    ("grids", "32,64,128", "cell counts for the refinement ladder (convergence)"),
    ("newton_tol", "1e-10", "Newton residual sup-norm target"),
    ("max_iter", "50", "Newton iteration cap"),
    ("continuation_steps", "5", "exponent continuation stages on direct-solve stall"),
    ("perturb", "0", "multiplicative guess perturbation amplitude (solve)"),
    ("mu", "unset (manufactured far field)", "decay coefficient for blind-mode far field (solve)"),
    ("order_tol", "0.2", "allowed deviation from order 2 (convergence)"),
];

pub fn print_defaults() {
    println!("{:<20} {:<34} {}", "key", "default", "description");
    for (key, default, desc) in DEFAULTS {
        println!("{key:<20} {default:<34} {desc}");
    }
}

/// A parsed flat TOML config file; absent file means no overrides.
pub struct FileConfig {
    table: toml::Table,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let table = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
                text.parse::<toml::Table>()
                    .map_err(|e| format!("config {}: {e}", p.display()))?
            }
        };
        for (key, value) in &table {
            if !DEFAULTS.iter().any(|(k, _, _)| k == key) {
                return Err(format!("config: unknown key `{key}`"));
            }
            if value.is_table() || value.is_array() {
                return Err(format!("config: key `{key}` must be a scalar"));
            }
        }
        Ok(FileConfig { table })
    }

    pub fn f64(&self, key: &str) -> Option<f64> {
        match self.table.get(key) {
            Some(toml::Value::Float(v)) => Some(*v),
            Some(toml::Value::Integer(v)) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn usize(&self, key: &str) -> Option<usize> {
        match self.table.get(key) {
            Some(toml::Value::Integer(v)) if *v >= 0 => Some(*v as usize),
            _ => None,
        }
    }

    pub fn u64(&self, key: &str) -> Option<u64> {
        match self.table.get(key) {
            Some(toml::Value::Integer(v)) if *v >= 0 => Some(*v as u64),
            _ => None,
        }
    }

    pub fn string(&self, key: &str) -> Option<String> {
        match self.table.get(key) {
            Some(toml::Value::String(v)) => Some(v.clone()),
            _ => None,
        }
    }
}

/// Parses a comma-separated list of floats, e.g. `--center 0.5,-1`.
pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{c}` is not a number"))
        })
        .collect()
}

/// Parses a comma-separated list of positive integers, e.g. `--grids 32,64`.
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|c| {
            c.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{c}` is not a positive integer"))
        })
        .collect()
}
