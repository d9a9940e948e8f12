//! Deterministic sample-point generators built on Halton sequences.

use crate::field::{Dimension, Point};
use crate::halton::halton_points;

/// `count` points in the box `[lo_i, hi_i]` per coordinate, Halton-indexed
/// from `seed`.
pub fn box_points(lo: &[f64], hi: &[f64], count: usize, seed: u64) -> Vec<Point> {
    assert_eq!(lo.len(), hi.len());
    halton_points(lo.len(), count, seed)
        .into_iter()
        .map(|u| {
            Point::new(
                u.iter()
                    .enumerate()
                    .map(|(i, &t)| lo[i] + t * (hi[i] - lo[i]))
                    .collect(),
            )
        })
        .collect()
}

/// Interior half-space samples in `[-extent, extent]^{n-1} x [0, extent_n]`.
pub fn half_space_points(
    n: Dimension,
    extent: f64,
    extent_n: f64,
    count: usize,
    seed: u64,
) -> Vec<Point> {
    let d = n.get();
    let mut lo = vec![-extent; d];
    let mut hi = vec![extent; d];
    lo[d - 1] = 0.0;
    hi[d - 1] = extent_n;
    box_points(&lo, &hi, count, seed)
}

/// Boundary samples (x_n = 0) in `[-extent, extent]^{n-1}`.
pub fn boundary_points(n: Dimension, extent: f64, count: usize, seed: u64) -> Vec<Point> {
    let d = n.get();
    halton_points(d - 1, count, seed)
        .into_iter()
        .map(|u| {
            let mut c: Vec<f64> = u.iter().map(|&t| -extent + 2.0 * extent * t).collect();
            c.push(0.0);
            Point::new(c)
        })
        .collect()
}

/// Unit directions with nonnegative last coordinate, from Halton angles.
pub fn admissible_directions(n: Dimension, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = n.get();
    halton_points(d, count, seed)
        .into_iter()
        .map(|u| {
            // map (0,1)^d to a direction via coordinates in [-1,1], fold x_n up
            let mut v: Vec<f64> = u.iter().map(|&t| 2.0 * t - 1.0).collect();
            v[d - 1] = v[d - 1].abs();
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            v.iter().map(|c| c / norm).collect()
        })
        .collect()
}
