//! Seeded generators for ground-truthed test fixtures: dental-arch point
//! cloud pairs with a known rigid transform, and label-map pairs with
//! controlled corruptions.
//!
//! Everything is a pure function of the seed and parameters; see
//! [`CounterRng`] for the generator contract.

mod rng;

pub use rng::CounterRng;

use crate::error::{Error, Result};
use crate::geom::{LabelVolume, PointCloud, RigidTransform};

/// Parameters for [`gen_arch`].
#[derive(Clone, Debug)]
pub struct SynthSpec {
    pub seed: u64,
    /// Number of teeth on the arch.
    pub teeth: usize,
    /// Half-width of the parabolic arch in mm.
    pub arch_radius: f64,
    /// Surface samples per tooth.
    pub points_per_tooth: usize,
    /// Per-coordinate noise applied to the target copy, mm.
    pub noise_sigma: f64,
    /// Fraction of each tooth kept on the source side (crown-only crop),
    /// in (0, 1].
    pub overlap: f64,
}

impl SynthSpec {
    pub fn new(seed: u64) -> Self {
        SynthSpec {
            seed,
            teeth: 14,
            arch_radius: 25.0,
            points_per_tooth: 200,
            noise_sigma: 0.0,
            overlap: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.teeth == 0 || self.points_per_tooth == 0 {
            return Err(Error::InvalidSpec(
                "teeth and points per tooth must be ≥ 1".into(),
            ));
        }
        if !self.arch_radius.is_finite() || self.arch_radius <= 0.0 {
            return Err(Error::InvalidSpec("arch radius must be positive".into()));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::InvalidSpec("noise sigma must be ≥ 0".into()));
        }
        if self.overlap.is_nan() || self.overlap <= 0.0 || self.overlap > 1.0 {
            return Err(Error::InvalidSpec(format!(
                "overlap must lie in (0, 1], got {}",
                self.overlap
            )));
        }
        Ok(())
    }
}

/// A generated registration fixture.
///
/// `target = gt ∘ (full cloud + noise)`; `source` is the crown-side crop of
/// the full cloud (all of it when `overlap = 1`). `correspondences[j]`
/// pairs source point `j` with its pre-crop target index, so
/// `gt · source[j]` lands within the noise of `target[correspondences[j].1]`.
#[derive(Clone, Debug)]
pub struct ArchPair {
    pub source: PointCloud,
    pub target: PointCloud,
    pub gt: RigidTransform,
    pub correspondences: Vec<(usize, usize)>,
}

/// Generate a tooth-arch point-cloud pair with a known rigid transform.
///
/// Teeth are ellipsoidal point shells placed along a parabolic arch, each
/// with seeded size jitter and a tangent-aligned orientation (the jitter
/// makes the cloud asymmetric, which keeps PCA alignment well-posed). The
/// ground-truth transform has rotation ≤ 30° and translation ≤ 20 mm.
pub fn gen_arch(spec: &SynthSpec) -> Result<ArchPair> {
    spec.validate()?;
    let mut rng = CounterRng::new(spec.seed);

    // ground-truth pose
    let axis = rng.unit_vector();
    let angle = rng.range_f64(0.0, 30f64.to_radians());
    let tdir = rng.unit_vector();
    let tmag = rng.range_f64(0.0, 20.0);
    let gt = RigidTransform::from_axis_angle(
        axis,
        angle,
        [tdir[0] * tmag, tdir[1] * tmag, tdir[2] * tmag],
    )?;

    let n_total = spec.teeth * spec.points_per_tooth;
    let mut points = Vec::with_capacity(n_total);
    let mut heights = Vec::with_capacity(n_total);
    let r = spec.arch_radius;
    for t in 0..spec.teeth {
        let u = -1.0 + 2.0 * (t as f64 + 0.5) / spec.teeth as f64;
        // parabolic arch in-plane with an occlusal curve out of plane and a
        // buccolingual scallop along the arch; the seeded size jitter keeps
        // the cloud asymmetric
        let scallop = if t % 2 == 0 { 0.9 } else { -0.9 };
        let center = [
            0.9 * r * u,
            r * (1.0 - u * u) + scallop,
            0.14 * r * u * u + rng.range_f64(-0.75, 0.75),
        ];
        let semi = [
            1.8 + rng.range_f64(0.0, 2.0),
            1.8 + rng.range_f64(0.0, 2.0),
            4.0 + rng.range_f64(0.0, 3.0),
        ];
        // orient the tooth along the local arch tangent
        let phi = (-2.0 * r * u).atan2(0.9 * r);
        let (s, c) = (phi.sin(), phi.cos());
        for _ in 0..spec.points_per_tooth {
            let d = rng.unit_vector();
            let local = [semi[0] * d[0], semi[1] * d[1], semi[2] * d[2]];
            points.push([
                center[0] + c * local[0] - s * local[1],
                center[1] + s * local[0] + c * local[1],
                center[2] + local[2],
            ]);
            heights.push(local[2]);
        }
    }

    // crown-only crop on the source side
    let kept: Vec<usize> = if spec.overlap >= 1.0 {
        (0..n_total).collect()
    } else {
        let keep_per_tooth = ((spec.overlap * spec.points_per_tooth as f64).ceil() as usize).max(1);
        let mut kept = Vec::with_capacity(spec.teeth * keep_per_tooth);
        for t in 0..spec.teeth {
            let begin = t * spec.points_per_tooth;
            let mut idx: Vec<usize> = (begin..begin + spec.points_per_tooth).collect();
            idx.sort_by(|&a, &b| heights[b].total_cmp(&heights[a]).then(a.cmp(&b)));
            idx.truncate(keep_per_tooth);
            kept.extend(idx);
        }
        kept.sort_unstable();
        kept
    };
    let source = PointCloud::from_points_unchecked(kept.iter().map(|&i| points[i]).collect());
    let correspondences = kept.iter().cloned().enumerate().collect();

    let target_points: Vec<[f64; 3]> = points
        .iter()
        .map(|p| {
            let noisy = if spec.noise_sigma > 0.0 {
                [
                    p[0] + spec.noise_sigma * rng.normal_approx(),
                    p[1] + spec.noise_sigma * rng.normal_approx(),
                    p[2] + spec.noise_sigma * rng.normal_approx(),
                ]
            } else {
                *p
            };
            gt.apply_point(&noisy)
        })
        .collect();

    Ok(ArchPair {
        source,
        target: PointCloud::from_points_unchecked(target_points),
        gt,
        correspondences,
    })
}

/// Corruption applied to the predicted copy in [`gen_labelmaps`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Corruption {
    None,
    /// Grow every label by `k` voxels (6-connectivity, background only;
    /// the lowest label claims contested voxels).
    Dilate(usize),
    /// Shrink every label by `k` voxels (6-connectivity; the volume border
    /// counts as background).
    Erode(usize),
    /// Remove the last label of the list from the prediction.
    DropLabel,
    /// Swap the first two labels of the list in the prediction.
    SwapLabels,
}

/// Generate a ground-truth label map (one spherical blob per label,
/// non-overlapping) and a corrupted predicted copy. Unit spacing, zero
/// origin.
pub fn gen_labelmaps(
    seed: u64,
    size: [usize; 3],
    labels: &[u16],
    corruption: Corruption,
) -> Result<(LabelVolume, LabelVolume)> {
    if size.iter().any(|&d| d < 8) {
        return Err(Error::InvalidSpec(format!(
            "volume must be at least 8 voxels per axis, got {size:?}"
        )));
    }
    if labels.is_empty() || labels.contains(&0) {
        return Err(Error::InvalidSpec(
            "labels must be nonzero and nonempty".into(),
        ));
    }
    let mut distinct = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != labels.len() {
        return Err(Error::InvalidSpec(
            "labels must be pairwise distinct".into(),
        ));
    }
    if corruption == Corruption::SwapLabels && labels.len() < 2 {
        return Err(Error::InvalidSpec(
            "swapping needs at least two labels".into(),
        ));
    }
    // each blob needs its own x slab, or adjacent blobs would collide
    if size[0] < 2 * labels.len() {
        return Err(Error::InvalidSpec(format!(
            "{} labels need an x extent of at least {}, got {}",
            labels.len(),
            2 * labels.len(),
            size[0]
        )));
    }

    let mut rng = CounterRng::new(seed);
    let [nx, ny, nz] = size;
    let mut gt = vec![0u16; nx * ny * nz];
    let slab = nx as f64 / labels.len() as f64;
    let r_cap = (0.38 * slab).min(0.4 * ny as f64).min(0.4 * nz as f64);
    for (i, &label) in labels.iter().enumerate() {
        let center = [
            (i as f64 + 0.5) * slab + rng.range_f64(-0.05, 0.05) * slab,
            ny as f64 / 2.0 + rng.range_f64(-0.1, 0.1) * ny as f64,
            nz as f64 / 2.0 + rng.range_f64(-0.1, 0.1) * nz as f64,
        ];
        let radius = r_cap * (0.55 + 0.35 * rng.next_f64());
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let d2 = (x as f64 + 0.5 - center[0]).powi(2)
                        + (y as f64 + 0.5 - center[1]).powi(2)
                        + (z as f64 + 0.5 - center[2]).powi(2);
                    if d2 <= radius * radius {
                        gt[x + nx * (y + ny * z)] = label;
                    }
                }
            }
        }
        // a blob is never empty: the voxel containing the center is claimed
        let cx = (center[0].floor() as usize).min(nx - 1);
        let cy = (center[1].floor() as usize).min(ny - 1);
        let cz = (center[2].floor() as usize).min(nz - 1);
        gt[cx + nx * (cy + ny * cz)] = label;
    }

    let mut pred = gt.clone();
    match corruption {
        Corruption::None => {}
        Corruption::Dilate(k) => {
            for _ in 0..k {
                pred = dilate_once(&pred, size);
            }
        }
        Corruption::Erode(k) => {
            for _ in 0..k {
                pred = erode_once(&pred, size);
            }
        }
        Corruption::DropLabel => {
            let drop = *labels.last().unwrap();
            for v in pred.iter_mut() {
                if *v == drop {
                    *v = 0;
                }
            }
        }
        Corruption::SwapLabels => {
            let (a, b) = (labels[0], labels[1]);
            for v in pred.iter_mut() {
                if *v == a {
                    *v = b;
                } else if *v == b {
                    *v = a;
                }
            }
        }
    }

    let spacing = [1.0; 3];
    let origin = [0.0; 3];
    Ok((
        LabelVolume::new(size, spacing, origin, gt)?,
        LabelVolume::new(size, spacing, origin, pred)?,
    ))
}

fn neighbors6(x: usize, y: usize, z: usize, size: [usize; 3]) -> impl Iterator<Item = usize> {
    let [nx, ny, nz] = size;
    let mut out = Vec::with_capacity(6);
    if x > 0 {
        out.push(x - 1 + nx * (y + ny * z));
    }
    if x + 1 < nx {
        out.push(x + 1 + nx * (y + ny * z));
    }
    if y > 0 {
        out.push(x + nx * (y - 1 + ny * z));
    }
    if y + 1 < ny {
        out.push(x + nx * (y + 1 + ny * z));
    }
    if z > 0 {
        out.push(x + nx * (y + ny * (z - 1)));
    }
    if z + 1 < nz {
        out.push(x + nx * (y + ny * (z + 1)));
    }
    out.into_iter()
}

fn dilate_once(buf: &[u16], size: [usize; 3]) -> Vec<u16> {
    let [nx, ny, nz] = size;
    let mut out = buf.to_vec();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let at = x + nx * (y + ny * z);
                if buf[at] != 0 {
                    continue;
                }
                let claim = neighbors6(x, y, z, size)
                    .map(|n| buf[n])
                    .filter(|&v| v != 0)
                    .min();
                if let Some(label) = claim {
                    out[at] = label;
                }
            }
        }
    }
    out
}

fn erode_once(buf: &[u16], size: [usize; 3]) -> Vec<u16> {
    let [nx, ny, nz] = size;
    let mut out = buf.to_vec();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let at = x + nx * (y + ny * z);
                let v = buf[at];
                if v == 0 {
                    continue;
                }
                let boundary =
                    x == 0 || y == 0 || z == 0 || x + 1 == nx || y + 1 == ny || z + 1 == nz;
                if boundary || neighbors6(x, y, z, size).any(|n| buf[n] != v) {
                    out[at] = 0;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arch_same_seed_bit_identical() {
        let spec = SynthSpec::new(17);
        let a = gen_arch(&spec).unwrap();
        let b = gen_arch(&spec).unwrap();
        assert_eq!(a.source.points(), b.source.points());
        assert_eq!(a.target.points(), b.target.points());
        assert_eq!(a.gt.to_matrix4(), b.gt.to_matrix4());
    }

    #[test]
    fn arch_correspondences_exact_without_noise() {
        let spec = SynthSpec::new(5);
        let pair = gen_arch(&spec).unwrap();
        assert_eq!(pair.source.len(), pair.target.len());
        for &(j, i) in &pair.correspondences {
            let mapped = pair.gt.apply_point(&pair.source.points()[j]);
            assert_eq!(mapped, pair.target.points()[i]);
        }
    }

    #[test]
    fn arch_crop_respects_overlap() {
        let mut spec = SynthSpec::new(9);
        spec.overlap = 0.5;
        let pair = gen_arch(&spec).unwrap();
        assert_eq!(pair.source.len(), 14 * 100);
        // kept points are the crown-side (high local z) half of each tooth
        let spec_full = SynthSpec {
            overlap: 1.0,
            ..spec.clone()
        };
        let full = gen_arch(&spec_full).unwrap();
        for &(j, i) in &pair.correspondences {
            assert_eq!(pair.source.points()[j], full.source.points()[i]);
        }
    }

    #[test]
    fn arch_rejects_bad_spec() {
        let mut spec = SynthSpec::new(1);
        spec.overlap = 0.0;
        assert!(matches!(gen_arch(&spec), Err(Error::InvalidSpec(_))));
        let mut spec = SynthSpec::new(1);
        spec.teeth = 0;
        assert!(matches!(gen_arch(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn labelmaps_deterministic_and_disjoint() {
        let (gt, pred) = gen_labelmaps(3, [16, 16, 16], &[11, 21, 31], Corruption::None).unwrap();
        assert_eq!(gt, pred);
        let (gt2, _) = gen_labelmaps(3, [16, 16, 16], &[11, 21, 31], Corruption::None).unwrap();
        assert_eq!(gt.labels(), gt2.labels());
        for &l in &[11u16, 21, 31] {
            assert!(gt.labels().contains(&l), "label {l} missing");
        }
    }

    #[test]
    fn noiseless_pair_registers_to_zero_chamfer_from_gt() {
        let mut spec = SynthSpec::new(2);
        spec.teeth = 8;
        spec.points_per_tooth = 60;
        let pair = gen_arch(&spec).unwrap();
        // raw points: downsampling would polish against cell centroids
        let cfg = crate::registration::IcpConfig {
            voxel_downsample: 0.0,
            ..crate::registration::IcpConfig::default()
        };
        let (pose, _) =
            crate::registration::icp(&pair.source, &pair.target, &pair.gt, &cfg).unwrap();
        let residual = crate::registration::chamfer(&pose.apply(&pair.source), &pair.target);
        assert!(residual < 1e-9, "chamfer {residual}");
    }

    #[test]
    fn generator_pairing_solves_back_to_gt() {
        for seed in 1u64..=100 {
            let pair = gen_arch(&SynthSpec::new(seed)).unwrap();
            let pairs: Vec<_> = pair
                .correspondences
                .iter()
                .map(|&(j, i)| (pair.source.points()[j], pair.target.points()[i]))
                .collect();
            let solved = crate::registration::svd_solve(
                &crate::registration::Correspondences::new(pairs).unwrap(),
            )
            .unwrap();
            let diff =
                crate::geom::PoseIncrement::from_transform(&solved.compose(&pair.gt.invert()))
                    .angle()
                    .to_degrees();
            assert!(diff < 1e-7, "seed {seed}: {diff}°");
        }
    }

    #[test]
    fn labelmap_corruptions_reproduce_failure_modes() {
        use crate::seg::{
            dice_image, instance_agreement, instance_metrics, InstanceAveraging, InstanceSet,
        };

        let (gt, pred) = gen_labelmaps(9, [16, 16, 16], &[11, 21, 31], Corruption::None).unwrap();
        assert_eq!(dice_image(&pred, &gt).unwrap(), 1.0);
        assert_eq!(
            instance_agreement(
                &InstanceSet::from_volume(&pred),
                &InstanceSet::from_volume(&gt),
                0.5
            )
            .unwrap(),
            1.0
        );

        // a dropped label costs exactly one of three categories
        let (gt, dropped) =
            gen_labelmaps(9, [16, 16, 16], &[11, 21, 31], Corruption::DropLabel).unwrap();
        let ia = instance_agreement(
            &InstanceSet::from_volume(&dropped),
            &InstanceSet::from_volume(&gt),
            0.5,
        )
        .unwrap();
        assert!((ia - 2.0 / 3.0).abs() < 1e-12);

        // swapping labels is a pure recognition error: the foreground is
        // unchanged but both swapped instances lose their identity
        let (gt, swapped) =
            gen_labelmaps(9, [16, 16, 16], &[11, 21, 31], Corruption::SwapLabels).unwrap();
        assert_eq!(dice_image(&swapped, &gt).unwrap(), 1.0);
        let inst = instance_metrics(
            &InstanceSet::from_volume(&swapped),
            &InstanceSet::from_volume(&gt),
            InstanceAveraging::Union,
        )
        .unwrap();
        assert!(inst.per_label[&11].dice < 1.0);
        assert!(inst.per_label[&21].dice < 1.0);
        assert_eq!(inst.per_label[&31].dice, 1.0);
    }

    #[test]
    fn labelmaps_corruptions() {
        let (gt, dropped) =
            gen_labelmaps(3, [16, 16, 16], &[11, 21, 31], Corruption::DropLabel).unwrap();
        assert!(dropped.labels().iter().all(|&v| v != 31));
        assert!(gt.labels().contains(&31));

        let (gt, swapped) =
            gen_labelmaps(3, [16, 16, 16], &[11, 21, 31], Corruption::SwapLabels).unwrap();
        let count = |vol: &LabelVolume, l: u16| vol.labels().iter().filter(|&&v| v == l).count();
        assert_eq!(count(&gt, 11), count(&swapped, 21));
        assert_eq!(count(&gt, 21), count(&swapped, 11));

        let (gt, grown) = gen_labelmaps(3, [16, 16, 16], &[11], Corruption::Dilate(1)).unwrap();
        assert!(count(&grown, 11) > count(&gt, 11));
        let (gt, shrunk) = gen_labelmaps(3, [16, 16, 16], &[11], Corruption::Erode(1)).unwrap();
        assert!(count(&shrunk, 11) < count(&gt, 11));
    }

    #[test]
    fn labelmaps_rejects_small_or_bad_input() {
        assert!(gen_labelmaps(1, [4, 16, 16], &[1], Corruption::None).is_err());
        assert!(gen_labelmaps(1, [16, 16, 16], &[], Corruption::None).is_err());
        assert!(gen_labelmaps(1, [16, 16, 16], &[1, 1], Corruption::None).is_err());
        assert!(gen_labelmaps(1, [16, 16, 16], &[1], Corruption::SwapLabels).is_err());
        // more labels than x slabs can hold
        let many: Vec<u16> = (1..=9).collect();
        assert!(gen_labelmaps(1, [16, 16, 16], &many, Corruption::None).is_err());
        let eight: Vec<u16> = (1..=8).collect();
        let (gt, _) = gen_labelmaps(1, [16, 16, 16], &eight, Corruption::None).unwrap();
        for l in eight {
            assert!(gt.labels().contains(&l), "label {l} missing");
        }
    }
}
