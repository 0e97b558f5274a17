//! Rigid transforms (proper rotation + translation) and 6-DoF increments.

use crate::error::{Error, Result};
use crate::geom::cloud::PointCloud;
use crate::geom::mat::{self, Mat3, Vec3};

/// Orthonormality defect a matrix may carry and still count as rigid.
const ORTHO_TOL: f64 = 1e-9;
/// Below this defect the matrix is stored verbatim instead of being
/// re-projected, so file round trips stay bit-exact.
const PROJECT_SKIP_TOL: f64 = 1e-12;

/// A rigid transform: rotation `R` (3×3, row-major, det +1) plus
/// translation `t` in millimeters. Applying it maps `p ↦ R·p + t`.
///
/// The rotation is guaranteed orthonormal (defect ≤ 1e-9) and proper
/// (det within 1e-9 of +1) after construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    rotation: Mat3,
    translation: Vec3,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: mat::IDENTITY,
            translation: [0.0; 3],
        }
    }

    /// Checked construction from a rotation matrix and translation.
    ///
    /// The matrix must already be orthonormal and proper within 1e-9; small
    /// defects above 1e-12 are removed by projection onto the nearest
    /// rotation, tighter ones are kept verbatim.
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        let defect = mat::ortho_defect(&rotation);
        let d = mat::det(&rotation);
        if defect > ORTHO_TOL || (d - 1.0).abs() > ORTHO_TOL {
            return Err(Error::NotRigid(format!(
                "orthonormality defect {defect:.3e}, det {d:.6}"
            )));
        }
        let rotation = if defect > PROJECT_SKIP_TOL {
            nearest_rotation(&rotation)?
        } else {
            rotation
        };
        Ok(RigidTransform {
            rotation,
            translation,
        })
    }

    /// Construction for rotations that are orthonormal by construction
    /// (products of rotations, SVD outputs). Debug builds still verify.
    pub(crate) fn from_parts_unchecked(rotation: Mat3, translation: Vec3) -> Self {
        debug_assert!(
            mat::ortho_defect(&rotation) < 1e-9,
            "internal rotation lost orthonormality"
        );
        RigidTransform {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        RigidTransform {
            rotation: mat::IDENTITY,
            translation,
        }
    }

    /// Rodrigues construction from a (not necessarily unit) axis and an
    /// angle in radians.
    pub fn from_axis_angle(axis: Vec3, angle: f64, translation: Vec3) -> Result<Self> {
        let n = mat::norm(&axis);
        if n < 1e-12 || !n.is_finite() {
            return Err(Error::Degenerate("rotation axis has zero length".into()));
        }
        let k = mat::scale_vec(&axis, 1.0 / n);
        Ok(RigidTransform {
            rotation: rodrigues(&k, angle),
            translation,
        })
    }

    /// Parse a 4×4 homogeneous matrix. The bottom row must match
    /// `(0, 0, 0, 1)` within `tolerance`, the rotation block must be
    /// orthonormal and have determinant within `tolerance` of +1.
    /// Noisy-but-acceptable rotation blocks are projected onto the nearest
    /// proper rotation.
    pub fn from_matrix4(m: &[[f64; 4]; 4], tolerance: f64) -> Result<Self> {
        for (c, want) in [(0usize, 0.0), (1, 0.0), (2, 0.0), (3, 1.0)] {
            if (m[3][c] - want).abs() > tolerance {
                return Err(Error::NotRigid(format!(
                    "bottom row is not (0, 0, 0, 1): entry {c} = {}",
                    m[3][c]
                )));
            }
        }
        let r: Mat3 = [
            [m[0][0], m[0][1], m[0][2]],
            [m[1][0], m[1][1], m[1][2]],
            [m[2][0], m[2][1], m[2][2]],
        ];
        let d = mat::det(&r);
        if (d - 1.0).abs() > tolerance {
            return Err(Error::NotRigid(format!("det {d:.6} is not +1")));
        }
        if mat::ortho_defect(&r) > tolerance {
            return Err(Error::NotRigid(format!(
                "rotation block defect {:.3e} exceeds tolerance {tolerance:.3e}",
                mat::ortho_defect(&r)
            )));
        }
        let rotation = if mat::ortho_defect(&r) > PROJECT_SKIP_TOL {
            nearest_rotation(&r)?
        } else {
            r
        };
        Ok(RigidTransform {
            rotation,
            translation: [m[0][3], m[1][3], m[2][3]],
        })
    }

    pub fn to_matrix4(&self) -> [[f64; 4]; 4] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            [r[0][0], r[0][1], r[0][2], t[0]],
            [r[1][0], r[1][1], r[1][2], t[1]],
            [r[2][0], r[2][1], r[2][2], t[2]],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: mat::mul(&self.rotation, &other.rotation),
            translation: mat::add_vec(
                &mat::mul_vec(&self.rotation, &other.translation),
                &self.translation,
            ),
        }
    }

    /// Inverse: rotation `Rᵀ`, translation `−Rᵀ·t`.
    pub fn invert(&self) -> RigidTransform {
        let rt = mat::transpose(&self.rotation);
        let t = mat::mul_vec(&rt, &self.translation);
        RigidTransform {
            rotation: rt,
            translation: [-t[0], -t[1], -t[2]],
        }
    }

    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        mat::add_vec(&mat::mul_vec(&self.rotation, p), &self.translation)
    }

    /// Transform every point of a cloud, preserving order.
    pub fn apply(&self, cloud: &PointCloud) -> PointCloud {
        PointCloud::from_points_unchecked(
            cloud.points().iter().map(|p| self.apply_point(p)).collect(),
        )
    }

    /// max-element difference to another transform's 4×4 form.
    pub fn max_abs_diff(&self, other: &RigidTransform) -> f64 {
        let r = mat::max_abs_diff(&self.rotation, &other.rotation);
        let t = mat::sub_vec(&self.translation, &other.translation);
        r.max(t[0].abs()).max(t[1].abs()).max(t[2].abs())
    }
}

fn rodrigues(unit_axis: &Vec3, angle: f64) -> Mat3 {
    let (s, c) = (angle.sin(), angle.cos());
    let one_c = 1.0 - c;
    let [x, y, z] = *unit_axis;
    [
        [
            c + x * x * one_c,
            x * y * one_c - z * s,
            x * z * one_c + y * s,
        ],
        [
            y * x * one_c + z * s,
            c + y * y * one_c,
            y * z * one_c - x * s,
        ],
        [
            z * x * one_c - y * s,
            z * y * one_c + x * s,
            c + z * z * one_c,
        ],
    ]
}

/// Project a matrix onto the nearest proper rotation (Frobenius sense):
/// `M = U S Vᵀ ⇒ R = U·diag(1, 1, det(U·Vᵀ))·Vᵀ`, the sign fix applied to
/// the direction of the smallest singular value.
///
/// Fails with `Degenerate` when two singular values vanish, where the
/// nearest rotation is not unique.
pub fn nearest_rotation(m: &Mat3) -> Result<Mat3> {
    let svd = mat::to_nalgebra(m).svd(true, true);
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
            "matrix is rank-deficient; nearest rotation is not unique".into(),
        ));
    }
    let mut u = u;
    if (u * v_t).determinant() < 0.0 {
        // flip the column of U paired with the smallest singular value
        let mut k = 0;
        for i in 1..3 {
            if s[i] < s[k] {
                k = i;
            }
        }
        for r in 0..3 {
            u[(r, k)] = -u[(r, k)];
        }
    }
    Ok(mat::from_nalgebra(&(u * v_t)))
}

/// An incremental 6-DoF pose: axis-angle rotation (radians·unit-axis, the
/// canonical magnitude lies in `[0, π]`) and a translation delta in mm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseIncrement {
    pub axis_angle: Vec3,
    pub translation: Vec3,
}

impl PoseIncrement {
    pub fn zero() -> Self {
        PoseIncrement {
            axis_angle: [0.0; 3],
            translation: [0.0; 3],
        }
    }

    pub fn angle(&self) -> f64 {
        mat::norm(&self.axis_angle)
    }

    pub fn to_transform(&self) -> RigidTransform {
        let angle = self.angle();
        if angle < 1e-300 {
            return RigidTransform::from_translation(self.translation);
        }
        let k = mat::scale_vec(&self.axis_angle, 1.0 / angle);
        RigidTransform {
            rotation: rodrigues(&k, angle),
            translation: self.translation,
        }
    }

    /// Logarithm map of a transform; the returned angle is in `[0, π]`.
    pub fn from_transform(t: &RigidTransform) -> Self {
        let r = t.rotation();
        let c = ((mat::trace(r) - 1.0) / 2.0).clamp(-1.0, 1.0);
        let theta = c.acos();
        // antisymmetric part = sinθ·axis
        let w = [
            (r[2][1] - r[1][2]) / 2.0,
            (r[0][2] - r[2][0]) / 2.0,
            (r[1][0] - r[0][1]) / 2.0,
        ];
        let axis_angle = if theta < 1e-7 {
            // sinθ ≈ θ, so w already is θ·axis
            w
        } else if theta > std::f64::consts::PI - 1e-6 {
            // near π the antisymmetric part vanishes; recover the axis from
            // the symmetric part, kkᵀ ≈ ((R + Rᵀ)/2 + I)/2
            let mut b = [[0.0f64; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    let sym = (r[i][j] + r[j][i]) / 2.0;
                    b[i][j] = (sym + if i == j { 1.0 } else { 0.0 }) / 2.0;
                }
            }
            let anchor = (0..3).max_by(|&a, &c| b[a][a].total_cmp(&b[c][c])).unwrap();
            let col = [b[0][anchor], b[1][anchor], b[2][anchor]];
            let n = mat::norm(&col).max(1e-300);
            let mut k = mat::scale_vec(&col, 1.0 / n);
            // align with the antisymmetric part while it still carries sign
            if mat::dot(&k, &w) < 0.0 {
                k = mat::scale_vec(&k, -1.0);
            }
            mat::scale_vec(&k, theta)
        } else {
            mat::scale_vec(&w, theta / theta.sin())
        };
        PoseIncrement {
            axis_angle,
            translation: *t.translation(),
        }
    }
}
