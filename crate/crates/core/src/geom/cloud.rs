//! Point clouds in millimeters.

use crate::error::{Error, Result};

/// An ordered set of N ≥ 1 finite points in mm. Order matters for I/O and
/// generator-provided correspondences, never for metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud(
                "a point cloud needs at least one point".into(),
            ));
        }
        if points.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidSpec(
                "point cloud contains non-finite coordinates".into(),
            ));
        }
        Ok(PointCloud { points })
    }

    /// For internal producers whose points are finite by construction.
    pub(crate) fn from_points_unchecked(points: Vec<[f64; 3]>) -> Self {
        debug_assert!(!points.is_empty());
        PointCloud { points }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn aabb(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = self.points[0];
        let mut hi = self.points[0];
        for p in &self.points[1..] {
            for d in 0..3 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    pub fn centroid(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for p in &self.points {
            for d in 0..3 {
                c[d] += p[d];
            }
        }
        let n = self.points.len() as f64;
        [c[0] / n, c[1] / n, c[2] / n]
    }
}
