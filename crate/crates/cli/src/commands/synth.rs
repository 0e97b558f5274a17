//! `dentalign synth`: seeded synthetic fixtures written in the standard
//! file formats — either a registration arch pair (PLY + PLY + transform +
//! manifest) or a ground-truth/corrupted label-map pair.

use std::path::PathBuf;

use dentalign_core::io;
use dentalign_core::report::Jaw;
use dentalign_core::synth::{gen_arch, gen_labelmaps, Corruption, SynthSpec};
use dentalign_core::{Error, Result};

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum Kind {
    /// Tooth-arch point-cloud pair with a known rigid transform.
    Arch,
    /// Label-map pair (ground truth + corrupted prediction).
    Labels,
}

#[derive(clap::Args)]
pub struct Args {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,

    // arch parameters
    #[arg(long, default_value_t = 14)]
    teeth: usize,
    /// Arch half-width, mm.
    #[arg(long, default_value_t = 25.0)]
    radius: f64,
    #[arg(long, default_value_t = 200)]
    points_per_tooth: usize,
    /// Target-side noise sigma, mm.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Crown-crop fraction kept on the source side, (0, 1].
    #[arg(long, default_value_t = 1.0)]
    overlap: f64,

    // label-map parameters
    /// Cubic volume edge in voxels.
    #[arg(long, default_value_t = 16)]
    size: usize,
    /// Comma-separated label values.
    #[arg(long, default_value = "11,21,31")]
    labels: String,
    /// Corruption: none, dilate:k, erode:k, drop, swap.
    #[arg(long, default_value = "none")]
    corruption: String,
}

fn parse_corruption(s: &str) -> Result<Corruption> {
    let parse_k = |rest: Option<&str>| -> Result<usize> {
        rest.unwrap_or("1")
            .parse()
            .map_err(|_| Error::Parse(format!("bad corruption count in {s:?}")))
    };
    match s.split_once(':') {
        None => match s {
            "none" => Ok(Corruption::None),
            "drop" => Ok(Corruption::DropLabel),
            "swap" => Ok(Corruption::SwapLabels),
            "dilate" => Ok(Corruption::Dilate(1)),
            "erode" => Ok(Corruption::Erode(1)),
            other => Err(Error::Parse(format!("unknown corruption {other:?}"))),
        },
        Some(("dilate", k)) => Ok(Corruption::Dilate(parse_k(Some(k))?)),
        Some(("erode", k)) => Ok(Corruption::Erode(parse_k(Some(k))?)),
        Some((other, _)) => Err(Error::Parse(format!("unknown corruption {other:?}"))),
    }
}

pub fn run(args: Args) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    match args.kind {
        Kind::Arch => {
            let spec = SynthSpec {
                seed: args.seed,
                teeth: args.teeth,
                arch_radius: args.radius,
                points_per_tooth: args.points_per_tooth,
                noise_sigma: args.noise,
                overlap: args.overlap,
            };
            let pair = gen_arch(&spec)?;
            let id = format!("{:04}", args.seed);
            io::write_ply(args.out.join("source.ply"), &pair.source)?;
            io::write_ply(args.out.join("target.ply"), &pair.target)?;
            io::write_transforms(
                args.out.join("gt.transform"),
                &[io::TransformRecord {
                    case_id: id.clone(),
                    jaw: Jaw::Maxilla,
                    transform: pair.gt,
                }],
            )?;
            std::fs::write(
                args.out.join("manifest.txt"),
                format!("pair={id} source=source.ply target=target.ply gt=gt.transform\n"),
            )?;
            println!(
                "arch pair {id}: {} source / {} target points -> {}",
                pair.source.len(),
                pair.target.len(),
                args.out.display()
            );
        }
        Kind::Labels => {
            let labels: Vec<u16> = args
                .labels
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad label {t:?}")))
                })
                .collect::<Result<_>>()?;
            let corruption = parse_corruption(&args.corruption)?;
            let (gt, pred) = gen_labelmaps(args.seed, [args.size; 3], &labels, corruption)?;
            io::write_volume(args.out.join("gt.mha"), &io::Volume::Label(gt))?;
            io::write_volume(args.out.join("pred.mha"), &io::Volume::Label(pred))?;
            println!(
                "label maps ({}³, labels {:?}, corruption {corruption:?}) -> {}",
                args.size,
                labels,
                args.out.display()
            );
        }
    }
    Ok(())
}
