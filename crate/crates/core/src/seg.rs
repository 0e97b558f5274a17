//! Segmentation metrics: image/instance Dice and mIoU, tolerance-based
//! normalized surface Dice (NSD), and instance agreement (IA).
//!
//! Conventions (applied uniformly):
//! - foreground = any nonzero label;
//! - instances match by equal label value (FDI-style codes), never by
//!   assignment;
//! - both masks empty → metric 1.0, exactly one empty → 0.0;
//! - instance means are unweighted over the evaluation label set, by
//!   default 𝒞_GT ∪ 𝒞_pred with one-sided labels scoring 0.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::geom::LabelVolume;
use crate::spatial::{auto_cell, GridIndex};

/// Which label set instance-level means average over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InstanceAveraging {
    /// 𝒞_GT ∪ 𝒞_pred; a label present on only one side scores 0.
    #[default]
    Union,
    /// 𝒞_GT only; labels hallucinated by the prediction are ignored.
    GtOnly,
}

/// Boundary face samples of a mask: positions are face centers in world mm,
/// each carrying the physical face area in mm².
#[derive(Clone, Debug)]
pub struct SurfacePointSet {
    samples: Vec<([f64; 3], f64)>,
    total_area: f64,
}

impl SurfacePointSet {
    fn new(samples: Vec<([f64; 3], f64)>) -> Self {
        let total_area = samples.iter().map(|s| s.1).sum();
        SurfacePointSet {
            samples,
            total_area,
        }
    }

    pub fn samples(&self) -> &[([f64; 3], f64)] {
        &self.samples
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// A label volume viewed as per-label binary masks.
#[derive(Clone, Debug)]
pub struct InstanceSet<'a> {
    volume: &'a LabelVolume,
    labels: BTreeSet<u16>,
}

impl<'a> InstanceSet<'a> {
    pub fn from_volume(volume: &'a LabelVolume) -> Self {
        let labels = volume
            .labels()
            .iter()
            .copied()
            .filter(|&l| l != 0)
            .collect();
        InstanceSet { volume, labels }
    }

    pub fn labels(&self) -> &BTreeSet<u16> {
        &self.labels
    }

    pub fn volume(&self) -> &LabelVolume {
        self.volume
    }
}

fn check_geometry(pred: &LabelVolume, gt: &LabelVolume) -> Result<()> {
    if !pred.grid().same_geometry(gt.grid()) {
        return Err(Error::GeometryMismatch(format!(
            "pred {:?}/{:?} vs gt {:?}/{:?}",
            pred.dims(),
            pred.spacing(),
            gt.dims(),
            gt.spacing()
        )));
    }
    Ok(())
}

fn foreground_counts(pred: &LabelVolume, gt: &LabelVolume) -> (u64, u64, u64) {
    let mut a = 0u64;
    let mut b = 0u64;
    let mut inter = 0u64;
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        let pf = p != 0;
        let gf = g != 0;
        a += pf as u64;
        b += gf as u64;
        inter += (pf && gf) as u64;
    }
    (a, b, inter)
}

/// Image-level Dice over foreground masks: `2|A∩B| / (|A|+|B|)`.
pub fn dice_image(pred: &LabelVolume, gt: &LabelVolume) -> Result<f64> {
    check_geometry(pred, gt)?;
    let (a, b, inter) = foreground_counts(pred, gt);
    Ok(dice_from_counts(a, b, inter))
}

/// Image-level IoU over foreground masks: `|A∩B| / |A∪B|`.
pub fn miou_image(pred: &LabelVolume, gt: &LabelVolume) -> Result<f64> {
    check_geometry(pred, gt)?;
    let (a, b, inter) = foreground_counts(pred, gt);
    Ok(iou_from_counts(a, b, inter))
}

fn dice_from_counts(a: u64, b: u64, inter: u64) -> f64 {
    if a + b == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (a + b) as f64
    }
}

fn iou_from_counts(a: u64, b: u64, inter: u64) -> f64 {
    let union = a + b - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Per-label overlap counts `(pred, gt, intersection)` in one pass.
fn per_label_counts(pred: &LabelVolume, gt: &LabelVolume) -> BTreeMap<u16, (u64, u64, u64)> {
    let mut counts: BTreeMap<u16, (u64, u64, u64)> = BTreeMap::new();
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        if p != 0 {
            counts.entry(p).or_default().0 += 1;
        }
        if g != 0 {
            counts.entry(g).or_default().1 += 1;
        }
        if p != 0 && p == g {
            counts.entry(p).or_default().2 += 1;
        }
    }
    counts
}

fn evaluation_labels(
    pred: &InstanceSet,
    gt: &InstanceSet,
    averaging: InstanceAveraging,
) -> BTreeSet<u16> {
    match averaging {
        InstanceAveraging::Union => pred.labels().union(gt.labels()).copied().collect(),
        InstanceAveraging::GtOnly => gt.labels().clone(),
    }
}

/// Dice/IoU of one label value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelScores {
    pub dice: f64,
    pub iou: f64,
}

/// Per-instance Dice/IoU plus their unweighted means.
#[derive(Clone, Debug)]
pub struct InstanceMetrics {
    pub per_label: BTreeMap<u16, LabelScores>,
    pub mean_dice: f64,
    pub mean_iou: f64,
}

/// Per-instance Dice and IoU. Instances are matched by equal label value;
/// a label present on only one side scores 0 on both metrics.
pub fn instance_metrics(
    pred: &InstanceSet,
    gt: &InstanceSet,
    averaging: InstanceAveraging,
) -> Result<InstanceMetrics> {
    check_geometry(pred.volume(), gt.volume())?;
    let eval = evaluation_labels(pred, gt, averaging);
    if eval.is_empty() {
        let perfect = pred.labels().is_empty() && gt.labels().is_empty();
        let score = if perfect { 1.0 } else { 0.0 };
        return Ok(InstanceMetrics {
            per_label: BTreeMap::new(),
            mean_dice: score,
            mean_iou: score,
        });
    }
    let counts = per_label_counts(pred.volume(), gt.volume());
    let mut per_label = BTreeMap::new();
    let mut dice_sum = 0.0;
    let mut iou_sum = 0.0;
    for &label in &eval {
        let (a, b, inter) = counts.get(&label).copied().unwrap_or_default();
        let scores = LabelScores {
            dice: dice_from_counts(a, b, inter),
            iou: iou_from_counts(a, b, inter),
        };
        dice_sum += scores.dice;
        iou_sum += scores.iou;
        per_label.insert(label, scores);
    }
    let n = eval.len() as f64;
    Ok(InstanceMetrics {
        per_label,
        mean_dice: dice_sum / n,
        mean_iou: iou_sum / n,
    })
}

/// Instance agreement: the fraction of 𝒞_GT ∪ 𝒞_pred whose per-label IoU
/// reaches `threshold` (default 0.5). An empty union scores 1.0.
pub fn instance_agreement(pred: &InstanceSet, gt: &InstanceSet, threshold: f64) -> Result<f64> {
    check_geometry(pred.volume(), gt.volume())?;
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidTolerance(format!(
            "IA threshold must lie in (0, 1], got {threshold}"
        )));
    }
    let all: BTreeSet<u16> = pred.labels().union(gt.labels()).copied().collect();
    if all.is_empty() {
        return Ok(1.0);
    }
    let counts = per_label_counts(pred.volume(), gt.volume());
    let matched = all
        .iter()
        .filter(|label| {
            let (a, b, inter) = counts.get(label).copied().unwrap_or_default();
            iou_from_counts(a, b, inter) >= threshold
        })
        .count();
    Ok(matched as f64 / all.len() as f64)
}

fn extract_surface_where(vol: &LabelVolume, inside: impl Fn(u16) -> bool) -> SurfacePointSet {
    let [nx, ny, nz] = vol.dims();
    let [sx, sy, sz] = vol.spacing();
    let [ox, oy, oz] = vol.origin();
    let area_x = sy * sz;
    let area_y = sx * sz;
    let area_z = sx * sy;
    let mut samples = Vec::new();
    let labels = vol.labels();
    let at = |i: usize, j: usize, k: usize| labels[i + nx * (j + ny * k)];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if !inside(at(i, j, k)) {
                    continue;
                }
                // voxel spans [corner, corner + spacing)
                let cx = ox + i as f64 * sx;
                let cy = oy + j as f64 * sy;
                let cz = oz + k as f64 * sz;
                let exposed_minus_x = i == 0 || !inside(at(i - 1, j, k));
                let exposed_plus_x = i + 1 == nx || !inside(at(i + 1, j, k));
                let exposed_minus_y = j == 0 || !inside(at(i, j - 1, k));
                let exposed_plus_y = j + 1 == ny || !inside(at(i, j + 1, k));
                let exposed_minus_z = k == 0 || !inside(at(i, j, k - 1));
                let exposed_plus_z = k + 1 == nz || !inside(at(i, j, k + 1));
                if exposed_minus_x {
                    samples.push(([cx, cy + 0.5 * sy, cz + 0.5 * sz], area_x));
                }
                if exposed_plus_x {
                    samples.push(([cx + sx, cy + 0.5 * sy, cz + 0.5 * sz], area_x));
                }
                if exposed_minus_y {
                    samples.push(([cx + 0.5 * sx, cy, cz + 0.5 * sz], area_y));
                }
                if exposed_plus_y {
                    samples.push(([cx + 0.5 * sx, cy + sy, cz + 0.5 * sz], area_y));
                }
                if exposed_minus_z {
                    samples.push(([cx + 0.5 * sx, cy + 0.5 * sy, cz], area_z));
                }
                if exposed_plus_z {
                    samples.push(([cx + 0.5 * sx, cy + 0.5 * sy, cz + sz], area_z));
                }
            }
        }
    }
    SurfacePointSet::new(samples)
}

/// Boundary of one label: one sample per exposed voxel face
/// (6-connectivity; the volume border counts as exposed). An absent label
/// yields an empty set.
pub fn extract_surface(vol: &LabelVolume, label: u16) -> SurfacePointSet {
    extract_surface_where(vol, |v| v == label && label != 0)
}

/// Boundary of the whole foreground (any nonzero label).
pub fn extract_foreground_surface(vol: &LabelVolume) -> SurfacePointSet {
    extract_surface_where(vol, |v| v != 0)
}

/// Normalized surface Dice at tolerance `tau`:
/// `(overlap_GT + overlap_pred) / (total_area_GT + total_area_pred)`,
/// where a sample overlaps when its nearest opposing sample lies within
/// `tau` (inclusive). Two empty surfaces score 1.0, exactly one empty 0.0.
pub fn nsd(pred_surf: &SurfacePointSet, gt_surf: &SurfacePointSet, tau: f64) -> Result<f64> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::InvalidTolerance(format!(
            "NSD tolerance must be positive and finite, got {tau}"
        )));
    }
    match (pred_surf.is_empty(), gt_surf.is_empty()) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        (false, false) => {}
    }
    let overlap = |from: &SurfacePointSet, to: &SurfacePointSet| -> f64 {
        let positions: Vec<[f64; 3]> = to.samples().iter().map(|s| s.0).collect();
        let index = GridIndex::build(&positions, auto_cell(&positions));
        let mut area = 0.0;
        for (p, a) in from.samples() {
            if index.any_within(p, tau) {
                area += a;
            }
        }
        area
    };
    let overlap_gt = overlap(gt_surf, pred_surf);
    let overlap_pred = overlap(pred_surf, gt_surf);
    Ok((overlap_gt + overlap_pred) / (gt_surf.total_area() + pred_surf.total_area()))
}

/// NSD of the whole-foreground boundaries.
pub fn nsd_image(pred: &LabelVolume, gt: &LabelVolume, tau: f64) -> Result<f64> {
    check_geometry(pred, gt)?;
    nsd(
        &extract_foreground_surface(pred),
        &extract_foreground_surface(gt),
        tau,
    )
}

/// Per-instance NSD plus its unweighted mean.
#[derive(Clone, Debug)]
pub struct InstanceNsd {
    pub per_label: BTreeMap<u16, f64>,
    pub mean: f64,
}

/// NSD per matching label, averaged over the evaluation label set.
pub fn nsd_instance(
    pred: &LabelVolume,
    gt: &LabelVolume,
    tau: f64,
    averaging: InstanceAveraging,
) -> Result<InstanceNsd> {
    check_geometry(pred, gt)?;
    let pred_set = InstanceSet::from_volume(pred);
    let gt_set = InstanceSet::from_volume(gt);
    let eval = evaluation_labels(&pred_set, &gt_set, averaging);
    if eval.is_empty() {
        let perfect = pred_set.labels().is_empty() && gt_set.labels().is_empty();
        return Ok(InstanceNsd {
            per_label: BTreeMap::new(),
            mean: if perfect { 1.0 } else { 0.0 },
        });
    }
    let mut per_label = BTreeMap::new();
    let mut sum = 0.0;
    for &label in &eval {
        let value = nsd(
            &extract_surface(pred, label),
            &extract_surface(gt, label),
            tau,
        )?;
        sum += value;
        per_label.insert(label, value);
    }
    Ok(InstanceNsd {
        mean: sum / eval.len() as f64,
        per_label,
    })
}
