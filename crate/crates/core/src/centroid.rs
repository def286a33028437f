//! Centroids and the centroid decomposition of squared-distance sums.

use crate::error::{Error, Result};
use crate::instance::squared_distance;

/// Coordinate-wise mean of a nonempty point set.
pub fn centroid<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<f64>> {
    let first = points.first().ok_or(Error::EmptyPointSet)?.as_ref();
    let mut sum = vec![0.0; first.len()];
    for p in points {
        for (s, v) in sum.iter_mut().zip(p.as_ref()) {
            *s += v;
        }
    }
    let count = points.len() as f64;
    Ok(sum.into_iter().map(|s| s / count).collect())
}

/// `Σ_{x∈D} d²(c, x)`.
pub fn squared_cost<P: AsRef<[f64]>>(center: &[f64], points: &[P]) -> f64 {
    points
        .iter()
        .map(|x| squared_distance(center, x.as_ref()))
        .sum()
}

/// `d²(c, D) − d²(cent(D), D) − |D|·d²(cent(D), c)`, which vanishes for
/// every probe `c` up to rounding.
pub fn centroid_identity_residual<P: AsRef<[f64]>>(points: &[P], probe: &[f64]) -> Result<f64> {
    let mu = centroid(points)?;
    let lhs = squared_cost(probe, points);
    let spread = squared_cost(&mu, points);
    let shift = points.len() as f64 * squared_distance(&mu, probe);
    Ok(lhs - spread - shift)
}
