//! `dentalign leaderboard`: per-team mean ± std over case reports, ranked
//! by one metric (errors ascending, scores descending, ties alphabetical).

use std::collections::BTreeSet;
use std::path::PathBuf;

use dentalign_core::io;
use dentalign_core::report::{leaderboard, LeaderboardEntry};
use dentalign_core::{Error, Result};

#[derive(clap::Args)]
pub struct Args {
    /// Directory of report files, one per team (team name = file stem).
    #[arg(long)]
    reports: PathBuf,
    /// Metric to rank by, e.g. `trans_err` or `dice_instance`.
    #[arg(long)]
    rank_by: String,
    /// Output table (CSV).
    #[arg(long)]
    out: PathBuf,
}

fn render_table(entries: &[LeaderboardEntry]) -> String {
    let metrics: BTreeSet<&str> = entries
        .iter()
        .flat_map(|e| e.stats.keys().map(String::as_str))
        .collect();
    let mut s = String::from("rank,team");
    for m in &metrics {
        s.push_str(&format!(",{m}_mean,{m}_std"));
    }
    s.push('\n');
    for e in entries {
        s.push_str(&format!("{},{}", e.rank, e.team));
        for m in &metrics {
            match e.stats.get(*m) {
                Some(stat) => s.push_str(&format!(",{:.6},{:.6}", stat.mean, stat.std)),
                None => s.push_str(",,"),
            }
        }
        s.push('\n');
    }
    s
}

pub fn run(args: Args) -> Result<()> {
    let mut teams = Vec::new();
    let mut files: Vec<PathBuf> = std::fs::read_dir(&args.reports)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    for path in files {
        let team = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Parse(format!("unusable report filename {path:?}")))?
            .to_string();
        let reports = io::read_report(&path)?;
        teams.push((team, reports));
    }
    if teams.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no report files under {:?}",
            args.reports
        )));
    }

    let board = leaderboard(&teams, &args.rank_by)?;
    let table = render_table(&board);
    std::fs::write(&args.out, &table)?;
    print!("{table}");
    Ok(())
}
