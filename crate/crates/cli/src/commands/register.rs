//! `dentalign register`: align a source PLY onto a target PLY or CBCT
//! volume (HU-thresholded into a point cloud) and write the transform.

use std::path::{Path, PathBuf};

use dentalign_core::efficiency::{trace_while, write_trace, ProcessRssSampler};
use dentalign_core::geom::{PointCloud, PoseIncrement, RigidTransform};
use dentalign_core::io;
use dentalign_core::registration::{chamfer, coarse_align, hu_threshold, icp, IcpDiagnostics};
use dentalign_core::report::Jaw;
use dentalign_core::{Error, Result};

use super::IcpArgs;

#[derive(clap::Args)]
pub struct Args {
    /// Source point cloud (ASCII PLY), the IOS side.
    #[arg(long)]
    source: PathBuf,
    /// Target: ASCII PLY, or a CBCT volume (.mha/.mhd) that is
    /// HU-thresholded into a cloud.
    #[arg(long)]
    target: PathBuf,
    /// Initialization: `coarse`, `identity`, or a transform file.
    #[arg(long, default_value = "coarse")]
    init: String,
    /// Lower HU bound when the target is a volume.
    #[arg(long, default_value_t = 200.0)]
    hu_lo: f64,
    /// Upper HU bound when the target is a volume.
    #[arg(long, default_value_t = 3000.0)]
    hu_hi: f64,
    #[command(flatten)]
    icp: IcpArgs,
    /// Case id stamped into the output record.
    #[arg(long, default_value = "0000")]
    case_id: String,
    /// Jaw stamped into the output record.
    #[arg(long, default_value = "maxilla")]
    jaw: String,
    /// Output transform file.
    #[arg(long)]
    out: PathBuf,
    /// Record a memory trace (CSV) while registering and report its AUC.
    #[arg(long)]
    mem_trace: Option<PathBuf>,
    /// Print the final pose as axis-angle as well.
    #[arg(long)]
    verbose: bool,
}

fn load_target(args: &Args) -> Result<PointCloud> {
    let is_volume = args
        .target
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.eq_ignore_ascii_case("mha") || e.eq_ignore_ascii_case("mhd"))
        .unwrap_or(false);
    if is_volume {
        let vol = io::read_volume(&args.target)?.into_intensity()?;
        hu_threshold(&vol, args.hu_lo, args.hu_hi, args.icp.downsample)
    } else {
        io::read_ply(&args.target)
    }
}

fn load_init(init: &str, source: &PointCloud, target: &PointCloud) -> Result<RigidTransform> {
    match init {
        "coarse" => coarse_align(source, target),
        "identity" => Ok(RigidTransform::identity()),
        path => {
            let records = io::read_transforms(Path::new(path))?;
            records
                .first()
                .map(|r| r.transform)
                .ok_or_else(|| Error::Parse(format!("{path}: transform file has no records")))
        }
    }
}

pub fn run(args: Args) -> Result<()> {
    let source = io::read_ply(&args.source)?;
    let target = load_target(&args)?;
    let cfg = args.icp.to_config()?;
    let init = load_init(&args.init, &source, &target)?;

    let run_icp = || icp(&source, &target, &init, &cfg);
    let (result, trace): (Result<(RigidTransform, IcpDiagnostics)>, _) = if args.mem_trace.is_some()
    {
        let (result, trace) = trace_while(ProcessRssSampler, 0.1, run_icp);
        (result, Some(trace))
    } else {
        (run_icp(), None)
    };
    let (pose, diag) = result?;

    let jaw = Jaw::parse(&args.jaw)?;
    io::write_transforms(
        &args.out,
        &[io::TransformRecord {
            case_id: args.case_id.clone(),
            jaw,
            transform: pose,
        }],
    )?;

    let final_chamfer = chamfer(&pose.apply(&source), &target);
    println!(
        "iterations {} converged {} final_rms {:.6} chamfer {:.6}",
        diag.iterations,
        diag.converged,
        diag.final_rms().unwrap_or(f64::NAN),
        final_chamfer
    );
    if args.verbose {
        let inc = PoseIncrement::from_transform(&pose);
        println!(
            "pose axis-angle [{:.6}, {:.6}, {:.6}] rad, translation [{:.6}, {:.6}, {:.6}] mm",
            inc.axis_angle[0],
            inc.axis_angle[1],
            inc.axis_angle[2],
            inc.translation[0],
            inc.translation[1],
            inc.translation[2]
        );
    }
    if let (Some(path), Some(trace)) = (&args.mem_trace, trace) {
        write_trace(path, &trace)?;
        println!(
            "memory AUC {:.6} GB·s ({} samples)",
            trace.auc()?,
            trace.len()
        );
    }
    Ok(())
}
