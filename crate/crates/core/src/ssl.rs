//! Two-stage pseudo-label harness around the registration core: calibrate
//! on labeled pairs, register and confidence-filter unlabeled pairs, then
//! iteratively re-estimate from the consensus of the accepted labels.
//!
//! Confidence is the Chamfer residual of the pair under the label's
//! transform (mm, lower is better) — it is recomputable from the fields and
//! needs no learned uncertainty. Registration failures are encoded as
//! infinite confidence rather than dropped.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{nearest_rotation, PointCloud, RigidTransform};
use crate::io;
use crate::reg::{rotation_error, translation_error};
use crate::registration::{chamfer, coarse_align, icp, IcpConfig};

/// One registration case: an IOS-side source cloud, a CBCT-side target
/// cloud, and (for labeled pairs) the ground-truth transform.
#[derive(Clone, Debug)]
pub struct ScanPair {
    pub id: String,
    pub source: PointCloud,
    pub target: PointCloud,
    pub gt: Option<RigidTransform>,
}

impl ScanPair {
    pub fn is_labeled(&self) -> bool {
        self.gt.is_some()
    }
}

/// A generated label: transform plus its confidence residual.
#[derive(Clone, Debug)]
pub struct PseudoLabel {
    pub pair_id: String,
    pub transform: RigidTransform,
    /// Chamfer of the pair under `transform`, mm; infinite on failure.
    pub confidence: f64,
}

impl PseudoLabel {
    fn failed(pair_id: &str) -> Self {
        PseudoLabel {
            pair_id: pair_id.to_string(),
            transform: RigidTransform::identity(),
            confidence: f64::INFINITY,
        }
    }
}

fn register_from(pair: &ScanPair, init: &RigidTransform, cfg: &IcpConfig) -> PseudoLabel {
    match icp(&pair.source, &pair.target, init, cfg) {
        Ok((pose, _)) => {
            let confidence = chamfer(&pose.apply(&pair.source), &pair.target);
            PseudoLabel {
                pair_id: pair.id.clone(),
                transform: pose,
                confidence,
            }
        }
        Err(_) => PseudoLabel::failed(&pair.id),
    }
}

fn register_coarse(pair: &ScanPair, cfg: &IcpConfig) -> PseudoLabel {
    match coarse_align(&pair.source, &pair.target) {
        Ok(init) => register_from(pair, &init, cfg),
        Err(_) => PseudoLabel::failed(&pair.id),
    }
}

/// Pick the grid config with the lowest mean rotation error over the
/// labeled pairs (ties: lower mean translation error, then lower grid
/// index). Failed registrations count as 180° / infinite translation.
pub fn calibrate(labeled: &[ScanPair], grid: &[IcpConfig]) -> Result<IcpConfig> {
    let labeled: Vec<&ScanPair> = labeled.iter().filter(|p| p.is_labeled()).collect();
    if labeled.is_empty() {
        return Err(Error::EmptyInput(
            "calibration needs at least one labeled pair".into(),
        ));
    }
    if grid.is_empty() {
        return Err(Error::EmptyInput("calibration grid is empty".into()));
    }
    let mut best: Option<(f64, f64, usize)> = None;
    for (index, cfg) in grid.iter().enumerate() {
        let mut rot_sum = 0.0;
        let mut trans_sum = 0.0;
        for pair in &labeled {
            let gt = pair.gt.as_ref().expect("filtered to labeled pairs");
            let label = register_coarse(pair, cfg);
            if label.confidence.is_finite() {
                rot_sum += rotation_error(&label.transform, gt);
                trans_sum += translation_error(&label.transform, gt);
            } else {
                rot_sum += 180.0;
                trans_sum += f64::INFINITY;
            }
        }
        let n = labeled.len() as f64;
        let (mean_rot, mean_trans) = (rot_sum / n, trans_sum / n);
        // strict lexicographic improvement, so full ties keep the lowest index
        let better = match &best {
            None => true,
            Some((r, t, _)) => mean_rot < *r || (mean_rot == *r && mean_trans < *t),
        };
        if better {
            best = Some((mean_rot, mean_trans, index));
        }
    }
    Ok(grid[best.expect("grid is nonempty").2].clone())
}

/// Register every pair from a PCA coarse initialization; confidence is the
/// final Chamfer residual, infinite on failure.
pub fn generate_pseudo(unlabeled: &[ScanPair], cfg: &IcpConfig) -> Vec<PseudoLabel> {
    unlabeled.iter().map(|p| register_coarse(p, cfg)).collect()
}

/// Split labels at `threshold` mm: accepted = confidence ≤ threshold.
/// The partition is exhaustive and keeps input order. A zero threshold
/// accepts only exact-zero confidences; infinity accepts everything.
pub fn filter_pseudo(
    labels: &[PseudoLabel],
    threshold: f64,
) -> (Vec<PseudoLabel>, Vec<PseudoLabel>) {
    assert!(
        threshold >= 0.0,
        "confidence threshold must not be negative"
    );
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for label in labels {
        if label.confidence <= threshold {
            accepted.push(label.clone());
        } else {
            rejected.push(label.clone());
        }
    }
    (accepted, rejected)
}

/// Consensus prior of accepted labels: chordal-mean rotation (element-wise
/// average projected onto the nearest rotation) and mean translation.
pub fn consensus_prior(accepted: &[PseudoLabel]) -> Result<RigidTransform> {
    if accepted.is_empty() {
        return Err(Error::DegeneratePrior("no accepted labels".into()));
    }
    let n = accepted.len() as f64;
    let mut mean_r = [[0.0f64; 3]; 3];
    let mut mean_t = [0.0f64; 3];
    for label in accepted {
        let r = label.transform.rotation();
        for i in 0..3 {
            for j in 0..3 {
                mean_r[i][j] += r[i][j] / n;
            }
            mean_t[i] += label.transform.translation()[i] / n;
        }
    }
    let rotation = nearest_rotation(&mean_r)
        .map_err(|e| Error::DegeneratePrior(format!("rotation mean is ambiguous: {e}")))?;
    RigidTransform::new(rotation, mean_t)
}

/// Re-register every pair seeded from the consensus prior of the accepted
/// labels instead of coarse alignment. Where a pair already has an accepted
/// label, the lower-confidence of {new, accepted} is kept, so a refresh
/// never degrades a pair's residual.
pub fn self_train_round(
    unlabeled: &[ScanPair],
    accepted: &[PseudoLabel],
    cfg: &IcpConfig,
) -> Result<Vec<PseudoLabel>> {
    let prior = consensus_prior(accepted)?;
    let by_id: BTreeMap<&str, &PseudoLabel> =
        accepted.iter().map(|l| (l.pair_id.as_str(), l)).collect();
    Ok(unlabeled
        .iter()
        .map(|pair| {
            let fresh = register_from(pair, &prior, cfg);
            match by_id.get(pair.id.as_str()) {
                Some(old) if old.confidence <= fresh.confidence => (*old).clone(),
                _ => fresh,
            }
        })
        .collect())
}

/// Outcome of one pseudo-labeling round.
#[derive(Clone, Debug)]
pub struct RoundOutcome {
    pub labels: Vec<PseudoLabel>,
    pub accepted: usize,
    pub rejected: usize,
}

/// The full staged protocol: round 1 registers from coarse alignment;
/// every further round filters at `threshold` and re-registers from the
/// consensus prior (falling back to coarse alignment when nothing was
/// accepted). Labels only ever improve in confidence across rounds.
pub fn pseudo_run(
    pairs: &[ScanPair],
    cfg: &IcpConfig,
    threshold: f64,
    rounds: usize,
) -> Result<Vec<RoundOutcome>> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("manifest has no pairs".into()));
    }
    if rounds == 0 {
        return Err(Error::InvalidSpec("need at least one round".into()));
    }
    let mut outcomes: Vec<RoundOutcome> = Vec::with_capacity(rounds);
    let mut labels = generate_pseudo(pairs, cfg);
    for round in 0..rounds {
        if round > 0 {
            let (accepted, _) = filter_pseudo(&labels, threshold);
            let refreshed = if accepted.is_empty() {
                generate_pseudo(pairs, cfg)
            } else {
                self_train_round(pairs, &accepted, cfg)?
            };
            // keep the better of {previous, refreshed} per pair
            labels = labels
                .iter()
                .zip(refreshed)
                .map(|(old, new)| {
                    if new.confidence < old.confidence {
                        new
                    } else {
                        old.clone()
                    }
                })
                .collect();
        }
        let (accepted, rejected) = filter_pseudo(&labels, threshold);
        outcomes.push(RoundOutcome {
            labels: labels.clone(),
            accepted: accepted.len(),
            rejected: rejected.len(),
        });
    }
    Ok(outcomes)
}

/// Parse a pair manifest: one `pair=<id> source=<ply> target=<ply>
/// [gt=<transform-file>]` per line, paths relative to the manifest.
/// The ground-truth file must contain a record whose case id matches the
/// pair id, or exactly one record.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ScanPair>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut pairs = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut id = None;
        let mut source = None;
        let mut target = None;
        let mut gt = None;
        for token in line.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("manifest token without '=': {token:?}")))?;
            match key {
                "pair" => id = Some(value.to_string()),
                "source" => source = Some(value.to_string()),
                "target" => target = Some(value.to_string()),
                "gt" => gt = Some(value.to_string()),
                other => {
                    return Err(Error::Parse(format!("unknown manifest key {other:?}")));
                }
            }
        }
        let id =
            id.ok_or_else(|| Error::Parse(format!("manifest line without pair=: {line:?}")))?;
        let source = source.ok_or_else(|| Error::Parse(format!("pair {id} has no source=")))?;
        let target = target.ok_or_else(|| Error::Parse(format!("pair {id} has no target=")))?;
        let source = io::read_ply(base.join(source))?;
        let target = io::read_ply(base.join(target))?;
        let gt = match gt {
            None => None,
            Some(rel) => {
                let records = io::read_transforms(base.join(&rel))?;
                let found = records
                    .iter()
                    .find(|r| r.case_id == id)
                    .or(if records.len() == 1 { records.first() } else { None })
                    .ok_or_else(|| {
                        Error::Parse(format!(
                            "{rel}: no transform record for pair {id} (and not a single-record file)"
                        ))
                    })?;
                Some(found.transform)
            }
        };
        pairs.push(ScanPair {
            id,
            source,
            target,
            gt,
        });
    }
    Ok(pairs)
}
