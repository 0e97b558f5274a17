pub mod eval_reg;
pub mod eval_seg;
pub mod leaderboard;
pub mod pseudo_run;
pub mod register;
pub mod synth;

use dentalign_core::io::ReportFormat;
use dentalign_core::registration::IcpConfig;
use dentalign_core::{Error, Result};

/// Shared `--format` flag value.
#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum FormatArg {
    Structured,
    Tabular,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> ReportFormat {
        match f {
            FormatArg::Structured => ReportFormat::Structured,
            FormatArg::Tabular => ReportFormat::Tabular,
        }
    }
}

/// ICP tuning flags shared by `register` and `pseudo-run`.
#[derive(Clone, Debug, clap::Args)]
pub struct IcpArgs {
    /// Maximum ICP iterations.
    #[arg(long, default_value_t = 50)]
    pub max_iterations: usize,
    /// Convergence threshold on the per-iteration RMS improvement, mm.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// Fraction of the worst correspondences dropped each iteration.
    #[arg(long, default_value_t = 0.1)]
    pub trim: f64,
    /// Drop correspondences farther than this, mm.
    #[arg(long, default_value_t = f64::INFINITY)]
    pub max_dist: f64,
    /// Voxel-grid downsample cell for both clouds, mm (0 disables).
    #[arg(long, default_value_t = 0.5)]
    pub downsample: f64,
}

impl IcpArgs {
    pub fn to_config(&self) -> Result<IcpConfig> {
        let cfg = IcpConfig {
            max_iterations: self.max_iterations,
            epsilon: self.epsilon,
            trim_fraction: self.trim,
            max_correspondence_dist: self.max_dist,
            voxel_downsample: self.downsample,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Install a rayon pool honoring `--jobs`; 0 keeps the default.
pub fn configure_jobs(jobs: usize) -> Result<()> {
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidSpec(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

/// Case files (stem, path) of every volume in a directory, sorted by stem.
pub fn volume_cases(dir: &std::path::Path) -> Result<Vec<(String, std::path::PathBuf)>> {
    let mut cases = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let is_volume = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.eq_ignore_ascii_case("mha") || e.eq_ignore_ascii_case("mhd"))
            .unwrap_or(false);
        if !is_volume {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Parse(format!("unusable filename {path:?}")))?
            .to_string();
        cases.push((stem, path));
    }
    cases.sort();
    Ok(cases)
}
