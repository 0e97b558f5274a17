//! Registration accuracy metrics: translation/rotation error of rigid
//! transforms, and intensity similarity (NCC, MI/NMI) over co-registered
//! volumes.
//!
//! Entropies are in bits (log base 2); reported standard deviations are
//! population (divide by M).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geom::mat;
use crate::geom::{IntensityVolume, PointCloud, RigidTransform};
use crate::report::{mean_std, Jaw, MeanStd};

/// Translation and rotation error of a predicted transform vs ground truth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegistrationError {
    /// ‖t_pred − t_gt‖₂ in mm.
    pub trans_err: f64,
    /// Relative rotation angle in degrees, in [0, 180].
    pub rot_err: f64,
}

/// Euclidean distance between the translation vectors.
pub fn translation_error(pred: &RigidTransform, gt: &RigidTransform) -> f64 {
    mat::norm(&mat::sub_vec(pred.translation(), gt.translation()))
}

/// Relative rotation angle in degrees:
/// `R_rel = R_pred·R_gtᵀ`, `θ = acos(clamp((trace(R_rel) − 1)/2, −1, 1))`.
///
/// The clamp makes the formula total under floating point; a trace at or
/// below −1 lands exactly on 180°.
pub fn rotation_error(pred: &RigidTransform, gt: &RigidTransform) -> f64 {
    // identical rotations are exactly aligned; the trace of R·Rᵀ can land a
    // few ulps below 3 and acos would amplify that into ~1e-6 degrees
    if pred.rotation() == gt.rotation() {
        return 0.0;
    }
    let rel = mat::mul(pred.rotation(), &mat::transpose(gt.rotation()));
    let c = ((mat::trace(&rel) - 1.0) / 2.0).clamp(-1.0, 1.0);
    // θ/π·180 rather than θ·(180/π): acos(−1) = π then yields exactly 180
    c.acos() / std::f64::consts::PI * 180.0
}

pub fn registration_error(pred: &RigidTransform, gt: &RigidTransform) -> RegistrationError {
    RegistrationError {
        trans_err: translation_error(pred, gt),
        rot_err: rotation_error(pred, gt),
    }
}

/// Mean ± population std of both error components over one group of cases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorStats {
    pub trans: MeanStd,
    pub rot: MeanStd,
    pub count: usize,
}

fn stats_of(errors: &[RegistrationError]) -> Result<ErrorStats> {
    let trans: Vec<f64> = errors.iter().map(|e| e.trans_err).collect();
    let rot: Vec<f64> = errors.iter().map(|e| e.rot_err).collect();
    Ok(ErrorStats {
        trans: mean_std(&trans)?,
        rot: mean_std(&rot)?,
        count: errors.len(),
    })
}

/// Per-jaw and pooled error statistics.
#[derive(Clone, Debug)]
pub struct ErrorSummary {
    pub per_jaw: BTreeMap<Jaw, ErrorStats>,
    pub pooled: ErrorStats,
}

/// Summarize per-case errors separately for maxilla and mandible plus
/// pooled over everything.
pub fn summarize_errors(records: &[(Jaw, RegistrationError)]) -> Result<ErrorSummary> {
    if records.is_empty() {
        return Err(Error::EmptyInput(
            "no registration errors to summarize".into(),
        ));
    }
    let mut groups: BTreeMap<Jaw, Vec<RegistrationError>> = BTreeMap::new();
    let mut all = Vec::with_capacity(records.len());
    for (jaw, err) in records {
        groups.entry(*jaw).or_default().push(*err);
        all.push(*err);
    }
    let mut per_jaw = BTreeMap::new();
    for (jaw, errors) in groups {
        per_jaw.insert(jaw, stats_of(&errors)?);
    }
    Ok(ErrorSummary {
        per_jaw,
        pooled: stats_of(&all)?,
    })
}

/// Rasterize a point cloud into a binary occupancy volume (1.0 in any voxel
/// containing at least one point). Bounds are the cloud AABB expanded by
/// `padding` mm on every side; a zero-extent axis still yields one voxel.
pub fn voxelize(cloud: &PointCloud, spacing: f64, padding: f64) -> Result<IntensityVolume> {
    if !spacing.is_finite() || spacing <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "voxelize spacing must be positive, got {spacing}"
        )));
    }
    if !padding.is_finite() {
        return Err(Error::InvalidSpec("voxelize padding must be finite".into()));
    }
    let (lo, hi) = cloud.aabb();
    let mut dims = [0usize; 3];
    let mut origin = [0.0f64; 3];
    for d in 0..3 {
        let extent = (hi[d] - lo[d]) + 2.0 * padding;
        if extent < 0.0 {
            return Err(Error::DegenerateCloud(format!(
                "negative padding collapsed axis {d} (extent {extent})"
            )));
        }
        origin[d] = lo[d] - padding;
        dims[d] = (extent / spacing).floor() as usize + 1;
    }
    let total = dims[0]
        .checked_mul(dims[1])
        .and_then(|n| n.checked_mul(dims[2]))
        .filter(|&n| n <= 1 << 31)
        .ok_or_else(|| {
            Error::InvalidSpec(format!(
                "voxelize grid {dims:?} is unreasonably large for spacing {spacing}"
            ))
        })?;
    let mut values = vec![0.0f32; total];
    for p in cloud.points() {
        let mut idx = [0usize; 3];
        for d in 0..3 {
            let f = ((p[d] - origin[d]) / spacing).floor();
            idx[d] = (f.max(0.0) as usize).min(dims[d] - 1);
        }
        values[idx[0] + dims[0] * (idx[1] + dims[1] * idx[2])] = 1.0;
    }
    IntensityVolume::new(dims, [spacing; 3], origin, values)
}

/// Interpolation scheme for [`resample`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    Nearest,
    Trilinear,
}

/// Resample `moving` onto the grid of `reference`: each reference voxel
/// center is mapped through `invert(t)` into moving space and sampled
/// there; out-of-bounds samples are 0.
///
/// `t` maps moving coordinates into reference coordinates.
pub fn resample(
    moving: &IntensityVolume,
    t: &RigidTransform,
    reference: &IntensityVolume,
    interp: Interpolation,
) -> IntensityVolume {
    let inv = t.invert();
    let [nx, ny, nz] = reference.dims();
    let [mx, my, mz] = moving.dims();
    let mspacing = moving.spacing();
    let morigin = moving.origin();
    let mut values = vec![0.0f32; nx * ny * nz];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let center = reference
                    .voxel_center([i, j, k])
                    .expect("index within dims");
                let m = inv.apply_point(&center);
                // continuous voxel coordinate: u = idx at voxel centers
                let u = [
                    (m[0] - morigin[0]) / mspacing[0] - 0.5,
                    (m[1] - morigin[1]) / mspacing[1] - 0.5,
                    (m[2] - morigin[2]) / mspacing[2] - 0.5,
                ];
                let v = match interp {
                    Interpolation::Nearest => {
                        let r = [u[0].round(), u[1].round(), u[2].round()];
                        if r[0] >= 0.0
                            && r[1] >= 0.0
                            && r[2] >= 0.0
                            && (r[0] as usize) < mx
                            && (r[1] as usize) < my
                            && (r[2] as usize) < mz
                        {
                            moving.get([r[0] as usize, r[1] as usize, r[2] as usize]) as f64
                        } else {
                            0.0
                        }
                    }
                    Interpolation::Trilinear => {
                        let base = [u[0].floor(), u[1].floor(), u[2].floor()];
                        let frac = [u[0] - base[0], u[1] - base[1], u[2] - base[2]];
                        let mut acc = 0.0f64;
                        for corner in 0..8 {
                            let ox = corner & 1;
                            let oy = (corner >> 1) & 1;
                            let oz = (corner >> 2) & 1;
                            let cx = base[0] + ox as f64;
                            let cy = base[1] + oy as f64;
                            let cz = base[2] + oz as f64;
                            let w = (if ox == 1 { frac[0] } else { 1.0 - frac[0] })
                                * (if oy == 1 { frac[1] } else { 1.0 - frac[1] })
                                * (if oz == 1 { frac[2] } else { 1.0 - frac[2] });
                            if w == 0.0 {
                                continue;
                            }
                            let sample = if cx >= 0.0
                                && cy >= 0.0
                                && cz >= 0.0
                                && (cx as usize) < mx
                                && (cy as usize) < my
                                && (cz as usize) < mz
                            {
                                moving.get([cx as usize, cy as usize, cz as usize]) as f64
                            } else {
                                0.0
                            };
                            acc += w * sample;
                        }
                        acc
                    }
                };
                values[i + nx * (j + ny * k)] = v as f32;
            }
        }
    }
    IntensityVolume::new(
        reference.dims(),
        reference.spacing(),
        reference.origin(),
        values,
    )
    .expect("reference geometry is valid")
}

fn check_grids(x: &IntensityVolume, y: &IntensityVolume) -> Result<()> {
    if !x.grid().same_geometry(y.grid()) {
        return Err(Error::GeometryMismatch(format!(
            "x {:?}/{:?} vs y {:?}/{:?}",
            x.dims(),
            x.spacing(),
            y.dims(),
            y.spacing()
        )));
    }
    Ok(())
}

/// Normalized cross-correlation:
/// `Σ(Xᵢ−μ_X)(Yᵢ−μ_Y) / (√Σ(Xᵢ−μ_X)² · √Σ(Yᵢ−μ_Y)²)`.
pub fn ncc(x: &IntensityVolume, y: &IntensityVolume) -> Result<f64> {
    check_grids(x, y)?;
    for (name, v) in [("x", x), ("y", y)] {
        let mut it = v.values().iter();
        let first = *it.next().expect("volumes are nonempty");
        if it.all(|&w| w == first) {
            return Err(Error::ZeroVariance(format!("volume {name} is constant")));
        }
    }
    let n = x.values().len() as f64;
    let mu_x = x.values().iter().map(|&v| v as f64).sum::<f64>() / n;
    let mu_y = y.values().iter().map(|&v| v as f64).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&xv, &yv) in x.values().iter().zip(y.values()) {
        let dx = xv as f64 - mu_x;
        let dy = yv as f64 - mu_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Joint intensity histogram over equal-width bins spanning each volume's
/// own [min, max] range.
#[derive(Clone, Debug)]
pub struct JointHistogram {
    counts: Vec<u64>,
    bins: usize,
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl JointHistogram {
    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn count(&self, xi: usize, yi: usize) -> u64 {
        self.counts[xi * self.bins + yi]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.x_range
    }

    pub fn y_range(&self) -> (f64, f64) {
        self.y_range
    }

    fn entropy_bits(probabilities: impl Iterator<Item = f64>) -> f64 {
        // 0·log 0 = 0
        probabilities
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum()
    }

    /// (H(X), H(Y), H(X,Y)) in bits.
    pub fn entropies(&self) -> (f64, f64, f64) {
        let total = self.total() as f64;
        let mut row = vec![0u64; self.bins];
        let mut col = vec![0u64; self.bins];
        for xi in 0..self.bins {
            for yi in 0..self.bins {
                let c = self.count(xi, yi);
                row[xi] += c;
                col[yi] += c;
            }
        }
        let hx = Self::entropy_bits(row.iter().map(|&c| c as f64 / total));
        let hy = Self::entropy_bits(col.iter().map(|&c| c as f64 / total));
        let hxy = Self::entropy_bits(self.counts.iter().map(|&c| c as f64 / total));
        (hx, hy, hxy)
    }
}

fn bin_of(v: f64, range: (f64, f64), bins: usize) -> usize {
    if range.1 > range.0 {
        let f = ((v - range.0) / (range.1 - range.0) * bins as f64).floor() as usize;
        f.min(bins - 1)
    } else {
        0
    }
}

/// Build the joint histogram of two co-registered volumes.
pub fn joint_histogram(
    x: &IntensityVolume,
    y: &IntensityVolume,
    bins: usize,
) -> Result<JointHistogram> {
    check_grids(x, y)?;
    if bins < 2 {
        return Err(Error::InvalidSpec(format!(
            "need at least 2 bins, got {bins}"
        )));
    }
    let range_of = |v: &IntensityVolume| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &w in v.values() {
            lo = lo.min(w as f64);
            hi = hi.max(w as f64);
        }
        (lo, hi)
    };
    let x_range = range_of(x);
    let y_range = range_of(y);
    let mut counts = vec![0u64; bins * bins];
    for (&xv, &yv) in x.values().iter().zip(y.values()) {
        let xi = bin_of(xv as f64, x_range, bins);
        let yi = bin_of(yv as f64, y_range, bins);
        counts[xi * bins + yi] += 1;
    }
    Ok(JointHistogram {
        counts,
        bins,
        x_range,
        y_range,
    })
}

/// Mutual information in bits plus the entropies behind it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MutualInformation {
    /// `H(X) + H(Y) − H(X,Y)`, clamped at 0.
    pub mi: f64,
    /// `(H(X) + H(Y)) / H(X,Y)`; defined as 2.0 when both volumes are
    /// constant (H(X,Y) = 0).
    pub nmi: f64,
    pub hx: f64,
    pub hy: f64,
    pub hxy: f64,
}

/// Shannon mutual information and normalized mutual information over a
/// `bins × bins` joint histogram.
pub fn mutual_information(
    x: &IntensityVolume,
    y: &IntensityVolume,
    bins: usize,
) -> Result<MutualInformation> {
    let hist = joint_histogram(x, y, bins)?;
    let (hx, hy, hxy) = hist.entropies();
    let mi = (hx + hy - hxy).max(0.0);
    let nmi = if hxy == 0.0 { 2.0 } else { (hx + hy) / hxy };
    Ok(MutualInformation {
        mi,
        nmi,
        hx,
        hy,
        hxy,
    })
}
