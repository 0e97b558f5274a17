//! Rigid point-set registration: closed-form SVD alignment of corresponded
//! points, trimmed nearest-neighbor ICP with incremental refinement, PCA
//! coarse alignment, Chamfer distance, and HU-threshold preprocessing.
//!
//! Nearest-neighbor queries are exact (uniform grid index), so every
//! geometric result here can be checked against a brute-force oracle.

use crate::error::{Error, Result};
use crate::geom::mat::{self, Mat3, Vec3};
use crate::geom::{IntensityVolume, PointCloud, RigidTransform};
use crate::spatial::{auto_cell, GridIndex};

/// Matched point pairs (source, target), both in mm, K ≥ 3.
///
/// Inside ICP the source side holds points already mapped through the
/// current pose, so the solved transform is the pose *increment*.
#[derive(Clone, Debug)]
pub struct Correspondences {
    pairs: Vec<([f64; 3], [f64; 3])>,
}

impl Correspondences {
    pub fn new(pairs: Vec<([f64; 3], [f64; 3])>) -> Result<Self> {
        if pairs.len() < 3 {
            return Err(Error::Degenerate(format!(
                "a rigid solve needs at least 3 correspondences, got {}",
                pairs.len()
            )));
        }
        if pairs
            .iter()
            .any(|(p, q)| p.iter().chain(q.iter()).any(|c| !c.is_finite()))
        {
            return Err(Error::InvalidSpec("non-finite correspondence".into()));
        }
        Ok(Correspondences { pairs })
    }

    pub fn pairs(&self) -> &[([f64; 3], [f64; 3])] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Sum of squared residuals of a candidate transform.
    pub fn residual_sq(&self, t: &RigidTransform) -> f64 {
        self.pairs
            .iter()
            .map(|(p, q)| mat::dist_sq(&t.apply_point(p), q))
            .sum()
    }

    fn rms(&self, t: &RigidTransform) -> f64 {
        (self.residual_sq(t) / self.pairs.len() as f64).sqrt()
    }
}

/// Least-squares rigid alignment of corresponded points: centroids are
/// subtracted, the cross-covariance `H = Σ p̃ᵢ q̃ᵢᵀ` is decomposed
/// `H = U S Vᵀ`, and `R = V·diag(1, 1, det(V·Uᵀ))·Uᵀ` (the sign fix applied
/// at the smallest singular value, so reflections are never emitted),
/// `t = q̄ − R·p̄`.
pub fn svd_solve(c: &Correspondences) -> Result<RigidTransform> {
    let n = c.len() as f64;
    let mut p_bar = [0.0f64; 3];
    let mut q_bar = [0.0f64; 3];
    for (p, q) in c.pairs() {
        for d in 0..3 {
            p_bar[d] += p[d];
            q_bar[d] += q[d];
        }
    }
    for d in 0..3 {
        p_bar[d] /= n;
        q_bar[d] /= n;
    }
    let mut h = [[0.0f64; 3]; 3];
    for (p, q) in c.pairs() {
        let pc = mat::sub_vec(p, &p_bar);
        let qc = mat::sub_vec(q, &q_bar);
        for r in 0..3 {
            for col in 0..3 {
                h[r][col] += pc[r] * qc[col];
            }
        }
    }

    let svd = mat::to_nalgebra(&h).svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| Error::Degenerate("svd failed".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Degenerate("svd failed".into()))?;
    let s = svd.singular_values;
    let largest = s.iter().cloned().fold(0.0f64, f64::max);
    let tiny = s
        .iter()
        .filter(|&&x| x <= 1e-12 * largest.max(1e-300))
        .count();
    if largest <= 0.0 || tiny >= 2 {
        return Err(Error::Degenerate(
            "source points are collinear or coincident".into(),
        ));
    }

    let mut v = v_t.transpose();
    if (v * u.transpose()).determinant() < 0.0 {
        let mut k = 0;
        for i in 1..3 {
            if s[i] < s[k] {
                k = i;
            }
        }
        for r in 0..3 {
            v[(r, k)] = -v[(r, k)];
        }
    }
    let rotation = mat::from_nalgebra(&(v * u.transpose()));
    let translation = mat::sub_vec(&q_bar, &mat::mul_vec(&rotation, &p_bar));
    Ok(RigidTransform::from_parts_unchecked(rotation, translation))
}

/// For each source point mapped through `t`, its nearest target point.
/// Pairs farther than `max_dist` are dropped; distance ties resolve to the
/// lowest target index. The returned source side holds the *transformed*
/// points.
pub fn nearest_correspondences(
    source: &PointCloud,
    target: &PointCloud,
    t: &RigidTransform,
    max_dist: f64,
) -> Result<Correspondences> {
    let index = GridIndex::build(target.points(), auto_cell(target.points()));
    let mut pairs = Vec::with_capacity(source.len());
    for p in source.points() {
        let tp = t.apply_point(p);
        if let Some((j, _)) = index.nearest_within(&tp, max_dist) {
            pairs.push((tp, target.points()[j]));
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoCorrespondences(format!(
            "no target point within {max_dist} mm of any source point"
        )));
    }
    Correspondences::new(pairs)
}

/// ICP parameters.
#[derive(Clone, Debug)]
pub struct IcpConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the RMS improvement of one solve step, mm.
    pub epsilon: f64,
    /// Fraction of the worst correspondences dropped each iteration, [0, 1).
    pub trim_fraction: f64,
    /// Correspondences farther than this are dropped outright, mm.
    pub max_correspondence_dist: f64,
    /// Voxel-grid downsample cell applied to both clouds before iterating,
    /// mm; 0 disables downsampling.
    pub voxel_downsample: f64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        IcpConfig {
            max_iterations: 50,
            epsilon: 1e-6,
            trim_fraction: 0.1,
            max_correspondence_dist: f64::INFINITY,
            voxel_downsample: 0.5,
        }
    }
}

impl IcpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidSpec("max_iterations must be ≥ 1".into()));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::InvalidSpec("epsilon must be ≥ 0".into()));
        }
        if !(0.0..1.0).contains(&self.trim_fraction) {
            return Err(Error::InvalidSpec(format!(
                "trim fraction must lie in [0, 1), got {}",
                self.trim_fraction
            )));
        }
        if self.max_correspondence_dist.is_nan() || self.max_correspondence_dist <= 0.0 {
            return Err(Error::InvalidSpec(
                "max correspondence distance must be > 0".into(),
            ));
        }
        if !self.voxel_downsample.is_finite() || self.voxel_downsample < 0.0 {
            return Err(Error::InvalidSpec("voxel downsample must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// Per-iteration record of an ICP run.
///
/// `pre_solve_rms[k]` is the trimmed RMS over the correspondences of
/// iteration k under the pose they were made with; `post_solve_rms[k]` is
/// the RMS over the same pairs after the solve. The interleaved sequence is
/// non-increasing (the solve minimizes exactly the objective it is handed,
/// and new nearest neighbors can only be closer).
#[derive(Clone, Debug, Default)]
pub struct IcpDiagnostics {
    pub pre_solve_rms: Vec<f64>,
    pub post_solve_rms: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl IcpDiagnostics {
    /// pre₀, post₀, pre₁, post₁, …
    pub fn rms_sequence(&self) -> Vec<f64> {
        self.pre_solve_rms
            .iter()
            .zip(&self.post_solve_rms)
            .flat_map(|(&a, &b)| [a, b])
            .collect()
    }

    pub fn final_rms(&self) -> Option<f64> {
        self.post_solve_rms.last().copied()
    }
}

/// Trimmed nearest-neighbor ICP.
///
/// Each iteration: correspond under the current pose, drop the worst
/// `trim_fraction` by distance, solve the increment in closed form,
/// compose. Stops when one solve improves the RMS by less than `epsilon`
/// or after `max_iterations`.
pub fn icp(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidTransform,
    cfg: &IcpConfig,
) -> Result<(RigidTransform, IcpDiagnostics)> {
    cfg.validate()?;
    let src = voxel_downsample(source, cfg.voxel_downsample);
    let tgt = voxel_downsample(target, cfg.voxel_downsample);
    if src.len() < 3 || tgt.len() < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 points after downsampling, got {} and {}",
            src.len(),
            tgt.len()
        )));
    }

    let mut pose = *init;
    let mut diag = IcpDiagnostics::default();
    for _ in 0..cfg.max_iterations {
        let corr = nearest_correspondences(&src, &tgt, &pose, cfg.max_correspondence_dist)?;
        let kept = trim_correspondences(&corr, cfg.trim_fraction)?;
        let pre_rms = kept.rms(&RigidTransform::identity());
        let increment = svd_solve(&kept)?;
        let post_rms = kept.rms(&increment);
        pose = increment.compose(&pose);
        diag.pre_solve_rms.push(pre_rms);
        diag.post_solve_rms.push(post_rms);
        diag.iterations += 1;
        if (pre_rms - post_rms).abs() < cfg.epsilon {
            diag.converged = true;
            break;
        }
    }
    Ok((pose, diag))
}

/// Keep the best (1 − trim) fraction by distance; order within the kept set
/// follows the original correspondence order.
fn trim_correspondences(corr: &Correspondences, trim: f64) -> Result<Correspondences> {
    let n = corr.len();
    let drop = (trim * n as f64).floor() as usize;
    let keep = n - drop;
    if keep < 3 {
        return Err(Error::Degenerate(format!(
            "trimming {drop} of {n} correspondences leaves fewer than 3"
        )));
    }
    if drop == 0 {
        return Correspondences::new(corr.pairs().to_vec());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let da = mat::dist_sq(&corr.pairs()[a].0, &corr.pairs()[a].1);
        let db = mat::dist_sq(&corr.pairs()[b].0, &corr.pairs()[b].1);
        da.total_cmp(&db).then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = order[..keep].to_vec();
    kept.sort_unstable();
    Correspondences::new(kept.iter().map(|&i| corr.pairs()[i]).collect())
}

/// PCA coarse alignment: centroids and principal axes are matched, and of
/// the four proper-rotation sign assignments of the first two axes the one
/// with the lowest Chamfer distance wins.
pub fn coarse_align(source: &PointCloud, target: &PointCloud) -> Result<RigidTransform> {
    if source.len() < 4 || target.len() < 4 {
        return Err(Error::Degenerate(
            "coarse alignment needs at least 4 points per cloud".into(),
        ));
    }
    let c_s = source.centroid();
    let c_t = target.centroid();
    let axes_s = principal_axes(source.points(), &c_s)?;
    let axes_t = principal_axes(target.points(), &c_t)?;

    let mut best: Option<(f64, RigidTransform)> = None;
    for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let signs = [s1, s2, s1 * s2];
        // R = Vt · diag(signs) · Vsᵀ, proper by construction
        let mut flipped = axes_t;
        for (col, &sign) in signs.iter().enumerate() {
            for row in 0..3 {
                flipped[row][col] *= sign;
            }
        }
        let rotation = mat::mul(&flipped, &mat::transpose(&axes_s));
        let translation = mat::sub_vec(&c_t, &mat::mul_vec(&rotation, &c_s));
        let candidate = RigidTransform::from_parts_unchecked(rotation, translation);
        let score = chamfer(&candidate.apply(source), target);
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, candidate));
        }
    }
    Ok(best.expect("four candidates were scored").1)
}

/// Right-handed principal axes (columns, descending eigenvalue order).
fn principal_axes(points: &[[f64; 3]], centroid: &Vec3) -> Result<Mat3> {
    let n = points.len() as f64;
    let mut cov = [[0.0f64; 3]; 3];
    for p in points {
        let d = mat::sub_vec(p, centroid);
        for r in 0..3 {
            for c in 0..3 {
                cov[r][c] += d[r] * d[c] / n;
            }
        }
    }
    let eig = nalgebra::SymmetricEigen::new(mat::to_nalgebra(&cov));
    let mut order: Vec<usize> = vec![0, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambda_max = eig.eigenvalues[order[0]];
    let lambda_min = eig.eigenvalues[order[2]];
    if !lambda_max.is_finite() || lambda_max <= 0.0 || lambda_min <= 1e-9 * lambda_max {
        return Err(Error::Degenerate(
            "covariance is rank-deficient (coplanar or collinear cloud)".into(),
        ));
    }
    let mut axes = [[0.0f64; 3]; 3];
    for (col, &src_col) in order.iter().enumerate() {
        for row in 0..3 {
            axes[row][col] = eig.eigenvectors[(row, src_col)];
        }
    }
    if mat::det(&axes) < 0.0 {
        for row in axes.iter_mut() {
            row[2] = -row[2];
        }
    }
    Ok(axes)
}

/// Symmetric mean Chamfer distance in mm (non-squared):
/// `½·(mean over a of nearest-in-b + mean over b of nearest-in-a)`.
pub fn chamfer(a: &PointCloud, b: &PointCloud) -> f64 {
    half_chamfer(a, b, false) / 2.0 + half_chamfer(b, a, false) / 2.0
}

/// Squared variant: means of squared nearest-neighbor distances, mm².
pub fn chamfer_squared(a: &PointCloud, b: &PointCloud) -> f64 {
    half_chamfer(a, b, true) / 2.0 + half_chamfer(b, a, true) / 2.0
}

fn half_chamfer(from: &PointCloud, to: &PointCloud, squared: bool) -> f64 {
    let index = GridIndex::build(to.points(), auto_cell(to.points()));
    let mut sum = 0.0;
    for p in from.points() {
        let (_, d) = index.nearest(p);
        sum += if squared { d * d } else { d };
    }
    sum / from.len() as f64
}

/// World-space centers of all voxels with `lo ≤ value ≤ hi`, voxel-grid
/// downsampled at `spacing_out` (centroid per occupied cell).
pub fn hu_threshold(
    vol: &IntensityVolume,
    lo: f64,
    hi: f64,
    spacing_out: f64,
) -> Result<PointCloud> {
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::InvalidSpec(format!(
            "threshold range is empty: lo {lo} ≥ hi {hi}"
        )));
    }
    let [nx, ny, nz] = vol.dims();
    let mut points = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let v = vol.get([i, j, k]) as f64;
                if v >= lo && v <= hi {
                    points.push(vol.voxel_center([i, j, k]).expect("index within dims"));
                }
            }
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud(format!("no voxel in [{lo}, {hi}] HU")));
    }
    Ok(voxel_downsample(
        &PointCloud::from_points_unchecked(points),
        spacing_out,
    ))
}

/// Voxel-grid downsampling: one centroid per occupied cell of size `cell`.
/// `cell ≤ 0` returns the cloud unchanged. Output order follows cell
/// coordinates, so the result is deterministic.
pub fn voxel_downsample(cloud: &PointCloud, cell: f64) -> PointCloud {
    if cell.is_nan() || cell <= 0.0 {
        return cloud.clone();
    }
    let mut cells: std::collections::BTreeMap<(i64, i64, i64), ([f64; 3], usize)> =
        std::collections::BTreeMap::new();
    for p in cloud.points() {
        let key = (
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
        );
        let entry = cells.entry(key).or_insert(([0.0; 3], 0));
        for d in 0..3 {
            entry.0[d] += p[d];
        }
        entry.1 += 1;
    }
    PointCloud::from_points_unchecked(
        cells
            .values()
            .map(|(sum, n)| {
                let n = *n as f64;
                [sum[0] / n, sum[1] / n, sum[2] / n]
            })
            .collect(),
    )
}
