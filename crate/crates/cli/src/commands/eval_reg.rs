//! `dentalign eval-reg`: translation/rotation error for every case-jaw key
//! plus per-jaw and pooled mean ± std; optionally NCC/MI/NMI over volume
//! pairs listed in a manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use dentalign_core::efficiency::{check_runtime, EfficiencyConfig};
use dentalign_core::geom::IntensityVolume;
use dentalign_core::io;
use dentalign_core::reg::{
    self, mutual_information, ncc, resample, voxelize, Interpolation, RegistrationError,
};
use dentalign_core::report::{CaseReport, Jaw, Task};
use dentalign_core::{Error, Result};

use super::FormatArg;

#[derive(clap::Args)]
pub struct Args {
    /// Predicted transform records.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth transform records; keys (case, jaw) come from here.
    #[arg(long)]
    gt: PathBuf,
    /// Optional manifest of volume pairs for intensity metrics, one
    /// `case=<id> jaw=<maxilla|mandible> cbct=<mha> ios=<ply>` per line.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Histogram bins for MI/NMI.
    #[arg(long, default_value_t = 64)]
    bins: usize,
    /// Restrict NCC/MI to voxels covered by the resampled moving volume.
    #[arg(long)]
    overlap_mask: bool,
    /// Report output path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Tabular)]
    format: FormatArg,
    /// Flag cases whose evaluation exceeded this wall time, seconds.
    #[arg(long)]
    t_max: Option<f64>,
    /// Also print the complementary rotation reading (180° − θ) per case.
    #[arg(long)]
    verbose: bool,
    /// Worker threads for the batch (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

struct VolumePair {
    cbct: PathBuf,
    ios: PathBuf,
}

fn read_pairs_manifest(path: &Path) -> Result<BTreeMap<(String, Jaw), VolumePair>> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut out = BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut case = None;
        let mut jaw = None;
        let mut cbct = None;
        let mut ios = None;
        for token in line.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("pairs token without '=': {token:?}")))?;
            match key {
                "case" => case = Some(value.to_string()),
                "jaw" => jaw = Some(Jaw::parse(value)?),
                "cbct" => cbct = Some(base.join(value)),
                "ios" => ios = Some(base.join(value)),
                other => return Err(Error::Parse(format!("unknown pairs key {other:?}"))),
            }
        }
        let case = case.ok_or_else(|| Error::Parse("pairs line without case=".into()))?;
        let jaw = jaw.ok_or_else(|| Error::Parse(format!("case {case}: no jaw=")))?;
        out.insert(
            (case.clone(), jaw),
            VolumePair {
                cbct: cbct.ok_or_else(|| Error::Parse(format!("case {case}: no cbct=")))?,
                ios: ios.ok_or_else(|| Error::Parse(format!("case {case}: no ios=")))?,
            },
        );
    }
    Ok(out)
}

/// Rasterize the transformed IOS cloud onto the CBCT grid and score
/// intensity similarity.
fn intensity_metrics(
    pair: &VolumePair,
    transform: &dentalign_core::RigidTransform,
    bins: usize,
    overlap_mask: bool,
) -> Result<(f64, f64, f64)> {
    let cbct = io::read_volume(&pair.cbct)?.into_intensity()?;
    let cloud = io::read_ply(&pair.ios)?;
    let moved = transform.apply(&cloud);
    let spacing = cbct.spacing().iter().cloned().fold(f64::MIN, f64::max);
    let occupancy = voxelize(&moved, spacing, 2.0 * spacing)?;
    let on_grid = resample(
        &occupancy,
        &dentalign_core::RigidTransform::identity(),
        &cbct,
        Interpolation::Nearest,
    );
    let (x, y) = if overlap_mask {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (&cv, &ov) in cbct.values().iter().zip(on_grid.values()) {
            if ov != 0.0 {
                xs.push(cv);
                ys.push(ov);
            }
        }
        if xs.len() < 2 {
            return Err(Error::ZeroVariance(
                "overlap mask leaves fewer than 2 voxels".into(),
            ));
        }
        let n = xs.len();
        (
            IntensityVolume::new([n, 1, 1], [1.0; 3], [0.0; 3], xs)?,
            IntensityVolume::new([n, 1, 1], [1.0; 3], [0.0; 3], ys)?,
        )
    } else {
        (cbct, on_grid)
    };
    let ncc_value = ncc(&x, &y)?;
    let mi = mutual_information(&x, &y, bins)?;
    Ok((ncc_value, mi.mi, mi.nmi))
}

pub fn run(args: Args) -> Result<()> {
    super::configure_jobs(args.jobs)?;
    let pred_records = io::read_transforms(&args.pred)?;
    let gt_records = io::read_transforms(&args.gt)?;
    let pairs = match &args.pairs {
        Some(path) => Some(read_pairs_manifest(path)?),
        None => None,
    };

    let pred: BTreeMap<(String, Jaw), _> = pred_records
        .into_iter()
        .map(|r| ((r.case_id.clone(), r.jaw), r.transform))
        .collect();

    struct CaseOutcome {
        report: Option<CaseReport>,
        error: Option<(Jaw, RegistrationError)>,
        stdout: Vec<String>,
        stderr: Vec<String>,
        failures: usize,
        fatal: Option<Error>,
    }

    let outcomes: Vec<CaseOutcome> = gt_records
        .par_iter()
        .map(|gt| {
            let key = (gt.case_id.clone(), gt.jaw);
            let started = Instant::now();
            let mut outcome = CaseOutcome {
                report: None,
                error: None,
                stdout: Vec::new(),
                stderr: Vec::new(),
                failures: 0,
                fatal: None,
            };
            let Some(pred_t) = pred.get(&key) else {
                let err = Error::MissingCase(format!(
                    "case {} ({}) has no prediction",
                    gt.case_id,
                    gt.jaw.as_str()
                ));
                outcome.stderr.push(err.to_string());
                outcome.failures = 1;
                outcome.fatal = Some(err);
                return outcome;
            };
            let err = reg::registration_error(pred_t, &gt.transform);
            outcome.error = Some((gt.jaw, err));
            if args.verbose {
                outcome.stdout.push(format!(
                    "case {} ({}): rot_err {:.6}° (complement {:.6}°)",
                    gt.case_id,
                    gt.jaw.as_str(),
                    err.rot_err,
                    180.0 - err.rot_err
                ));
            }
            let mut report =
                CaseReport::new(format!("{}:{}", gt.case_id, gt.jaw.as_str()), Task::Reg)
                    .with_metric("trans_err", err.trans_err)
                    .with_metric("rot_err", err.rot_err);
            if let Some(pairs) = &pairs {
                if let Some(pair) = pairs.get(&key) {
                    match intensity_metrics(pair, pred_t, args.bins, args.overlap_mask) {
                        Ok((ncc_value, mi, nmi)) => {
                            report.metrics.insert("ncc".into(), ncc_value);
                            report.metrics.insert("mi".into(), mi);
                            report.metrics.insert("nmi".into(), nmi);
                        }
                        Err(e) => {
                            outcome.stderr.push(format!(
                                "case {} ({}): {e}",
                                gt.case_id,
                                gt.jaw.as_str()
                            ));
                            outcome.failures += 1;
                        }
                    }
                }
            }
            report.runtime_s = started.elapsed().as_secs_f64();
            outcome.report = Some(report);
            outcome
        })
        .collect();

    let mut reports = Vec::new();
    let mut errors: Vec<(Jaw, RegistrationError)> = Vec::new();
    let mut failures = 0usize;
    let mut first_error = None;
    for outcome in outcomes {
        for line in &outcome.stderr {
            eprintln!("{line}");
        }
        for line in &outcome.stdout {
            println!("{line}");
        }
        failures += outcome.failures;
        if let Some(report) = outcome.report {
            reports.push(report);
        }
        if let Some(err) = outcome.error {
            errors.push(err);
        }
        if first_error.is_none() {
            first_error = outcome.fatal;
        }
    }
    if reports.is_empty() {
        return Err(first_error
            .unwrap_or_else(|| Error::EmptyInput("ground-truth file has no records".into())));
    }

    io::write_report(&args.out, &reports, args.format.into())?;

    let summary = reg::summarize_errors(&errors)?;
    for (jaw, stats) in &summary.per_jaw {
        println!(
            "{:<8} n={:<3} trans_err {:.6} ± {:.6} mm  rot_err {:.6} ± {:.6}°",
            jaw.as_str(),
            stats.count,
            stats.trans.mean,
            stats.trans.std,
            stats.rot.mean,
            stats.rot.std
        );
    }
    println!(
        "{:<8} n={:<3} trans_err {:.6} ± {:.6} mm  rot_err {:.6} ± {:.6}°",
        "pooled",
        summary.pooled.count,
        summary.pooled.trans.mean,
        summary.pooled.trans.std,
        summary.pooled.rot.mean,
        summary.pooled.rot.std
    );

    if let Some(t_max) = args.t_max {
        let cfg = EfficiencyConfig::new(t_max, 0.1)?;
        let times: Vec<f64> = reports.iter().map(|r| r.runtime_s).collect();
        let check = check_runtime(&times, &cfg)?;
        for idx in check.violations {
            println!(
                "runtime violation: case {} ({:.6} s)",
                reports[idx].case_id, times[idx]
            );
        }
    }
    println!(
        "evaluated {} case(s), {} failure(s), report written to {}",
        reports.len(),
        failures,
        args.out.display()
    );
    Ok(())
}
