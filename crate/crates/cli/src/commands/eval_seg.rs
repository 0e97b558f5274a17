//! `dentalign eval-seg`: Dice/mIoU/NSD at image and instance level plus IA
//! for every case present in both directories.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use dentalign_core::efficiency::{check_runtime, EfficiencyConfig};
use dentalign_core::geom::LabelVolume;
use dentalign_core::io;
use dentalign_core::report::{CaseReport, Task};
use dentalign_core::seg;
use dentalign_core::{Error, Result};

use super::{configure_jobs, volume_cases, FormatArg};

/// FDI label groups: whole map, teeth (11–48), or root canals (111–148,
/// tooth code + 100).
#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum LabelGroup {
    All,
    Teeth,
    Canal,
}

impl LabelGroup {
    fn filter(&self, vol: &LabelVolume) -> LabelVolume {
        match self {
            LabelGroup::All => vol.clone(),
            LabelGroup::Teeth => vol.retain_labels(|l| (11..=48).contains(&l)),
            LabelGroup::Canal => vol.retain_labels(|l| (111..=148).contains(&l)),
        }
    }
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum AveragingArg {
    Union,
    Gt,
}

impl From<AveragingArg> for seg::InstanceAveraging {
    fn from(a: AveragingArg) -> Self {
        match a {
            AveragingArg::Union => seg::InstanceAveraging::Union,
            AveragingArg::Gt => seg::InstanceAveraging::GtOnly,
        }
    }
}

#[derive(clap::Args)]
pub struct Args {
    /// Directory of predicted label volumes (.mha / .mhd).
    #[arg(long)]
    pred: PathBuf,
    /// Directory of ground-truth label volumes; case ids come from here.
    #[arg(long)]
    gt: PathBuf,
    /// NSD distance tolerance in mm.
    #[arg(long, default_value_t = 2.0)]
    tau: f64,
    /// Restrict evaluation to a label group.
    #[arg(long, value_enum, default_value_t = LabelGroup::All)]
    label_group: LabelGroup,
    /// Label set instance means average over.
    #[arg(long, value_enum, default_value_t = AveragingArg::Union)]
    instance_average: AveragingArg,
    /// Report output path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Tabular)]
    format: FormatArg,
    /// Flag cases whose evaluation exceeded this wall time, seconds.
    #[arg(long)]
    t_max: Option<f64>,
    /// Worker threads for the batch (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn evaluate_case(
    case: &str,
    pred_path: &std::path::Path,
    gt_path: &std::path::Path,
    args: &Args,
) -> Result<CaseReport> {
    if !pred_path.exists() {
        return Err(Error::MissingCase(format!(
            "case {case}: no prediction at {pred_path:?}"
        )));
    }
    let started = Instant::now();
    let pred = args
        .label_group
        .filter(&io::read_volume(pred_path)?.into_label()?);
    let gt = args
        .label_group
        .filter(&io::read_volume(gt_path)?.into_label()?);

    let averaging = args.instance_average.into();
    let dice = seg::dice_image(&pred, &gt)?;
    let miou = seg::miou_image(&pred, &gt)?;
    let nsd_img = seg::nsd_image(&pred, &gt, args.tau)?;
    let pred_set = seg::InstanceSet::from_volume(&pred);
    let gt_set = seg::InstanceSet::from_volume(&gt);
    let inst = seg::instance_metrics(&pred_set, &gt_set, averaging)?;
    let nsd_inst = seg::nsd_instance(&pred, &gt, args.tau, averaging)?;
    let ia = seg::instance_agreement(&pred_set, &gt_set, 0.5)?;

    let mut report = CaseReport::new(case, Task::Seg)
        .with_metric("dice_image", dice)
        .with_metric("miou_image", miou)
        .with_metric("nsd_image", nsd_img)
        .with_metric("dice_instance", inst.mean_dice)
        .with_metric("miou_instance", inst.mean_iou)
        .with_metric("nsd_instance", nsd_inst.mean)
        .with_metric("ia", ia);
    report.runtime_s = started.elapsed().as_secs_f64();
    Ok(report)
}

pub fn run(args: Args) -> Result<()> {
    configure_jobs(args.jobs)?;
    let cases = volume_cases(&args.gt)?;
    if cases.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no volumes found under {:?}",
            args.gt
        )));
    }

    let results: Vec<(String, Result<CaseReport>)> = cases
        .par_iter()
        .map(|(case, gt_path)| {
            let pred_path = args.pred.join(gt_path.file_name().expect("file path"));
            (
                case.clone(),
                evaluate_case(case, &pred_path, gt_path, &args),
            )
        })
        .collect();

    let mut reports = Vec::new();
    let mut failures = 0usize;
    let mut first_error = None;
    for (case, result) in results {
        match result {
            Ok(report) => reports.push(report),
            Err(err) => {
                eprintln!("case {case}: {err}");
                failures += 1;
                if first_error.is_none() {
                    first_error = Some(err);
                }
            }
        }
    }
    if reports.is_empty() {
        return Err(first_error.expect("at least one case failed"));
    }
    io::write_report(&args.out, &reports, args.format.into())?;

    if let Some(t_max) = args.t_max {
        let cfg = EfficiencyConfig::new(t_max, 0.1)?;
        let times: Vec<f64> = reports.iter().map(|r| r.runtime_s).collect();
        let check = check_runtime(&times, &cfg)?;
        println!("mean runtime {:.6} s", check.mean_runtime);
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
