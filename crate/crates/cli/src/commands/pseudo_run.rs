//! `dentalign pseudo-run`: the staged pseudo-label protocol over a pair
//! manifest, writing per-round label files and an accepted/rejected
//! summary.

use std::path::PathBuf;

use dentalign_core::io;
use dentalign_core::ssl::{calibrate, pseudo_run, read_manifest};
use dentalign_core::{Error, Result};

use super::IcpArgs;

#[derive(clap::Args)]
pub struct Args {
    /// Pair manifest: `pair=<id> source=<ply> target=<ply>
    /// [gt=<transform-file>]`, one per line.
    #[arg(long)]
    manifest: PathBuf,
    /// Confidence threshold in mm; labels at or under it are accepted.
    #[arg(long)]
    threshold: f64,
    /// Number of rounds (round 1 registers from coarse alignment, later
    /// rounds re-estimate from the consensus of accepted labels).
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    /// Calibrate the trim fraction on the manifest's labeled pairs first.
    #[arg(long)]
    calibrate: bool,
    #[command(flatten)]
    icp: IcpArgs,
    /// Output directory for per-round label files and the summary.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    if args.threshold.is_nan() || args.threshold <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "threshold must be positive, got {}",
            args.threshold
        )));
    }
    let pairs = read_manifest(&args.manifest)?;
    if pairs.is_empty() {
        return Err(Error::EmptyInput("manifest has no pairs".into()));
    }
    let mut cfg = args.icp.to_config()?;

    if args.calibrate {
        let labeled: Vec<_> = pairs.iter().filter(|p| p.is_labeled()).cloned().collect();
        let grid: Vec<_> = [0.0, 0.1, 0.3]
            .iter()
            .map(|&trim| dentalign_core::registration::IcpConfig {
                trim_fraction: trim,
                ..cfg.clone()
            })
            .collect();
        cfg = calibrate(&labeled, &grid)?;
        println!("calibrated trim fraction: {}", cfg.trim_fraction);
    }

    let unlabeled: Vec<_> = pairs.iter().filter(|p| !p.is_labeled()).cloned().collect();
    let subjects = if unlabeled.is_empty() {
        pairs
    } else {
        unlabeled
    };

    std::fs::create_dir_all(&args.out)?;
    let outcomes = pseudo_run(&subjects, &cfg, args.threshold, args.rounds)?;
    let mut summary = String::from("round,accepted,rejected\n");
    for (i, outcome) in outcomes.iter().enumerate() {
        let round = i + 1;
        let records: Vec<io::PseudoLabelRecord> = outcome
            .labels
            .iter()
            .map(|l| io::PseudoLabelRecord {
                pair_id: l.pair_id.clone(),
                confidence: l.confidence,
                transform: l.transform,
            })
            .collect();
        io::write_pseudo_labels(args.out.join(format!("round-{round}.pseudo")), &records)?;
        summary.push_str(&format!(
            "{round},{},{}\n",
            outcome.accepted, outcome.rejected
        ));
        println!(
            "round {round}: accepted {} rejected {}",
            outcome.accepted, outcome.rejected
        );
    }
    std::fs::write(args.out.join("summary.csv"), summary)?;
    Ok(())
}
