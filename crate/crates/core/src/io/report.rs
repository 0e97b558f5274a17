//! Case report serialization: structured key-value blocks or CSV.
//!
//! Both forms use fixed 6-decimal value formatting and deterministic field
//! order, so identical inputs always produce identical bytes.
//!
//! Structured:
//!
//! ```text
//! case 0001
//!   task = seg
//!   runtime_s = 0.125000
//!   metric dice_image = 1.000000
//! ```
//!
//! Tabular: a header row `case,<metrics…>,runtime_s,auc_gb_s,task` (metric
//! columns sorted by name, the union over all cases) followed by one row
//! per case; absent values are empty cells.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::report::{CaseReport, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Structured,
    Tabular,
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

/// Render reports; errors on an empty list.
pub fn format_report(reports: &[CaseReport], format: ReportFormat) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no case reports to write".into()));
    }
    Ok(match format {
        ReportFormat::Structured => {
            let mut s = String::new();
            for (i, r) in reports.iter().enumerate() {
                if i > 0 {
                    s.push('\n');
                }
                s.push_str(&format!("case {}\n", r.case_id));
                s.push_str(&format!("  task = {}\n", r.task.as_str()));
                s.push_str(&format!("  runtime_s = {}\n", fmt6(r.runtime_s)));
                if let Some(auc) = r.memory_auc {
                    s.push_str(&format!("  auc_gb_s = {}\n", fmt6(auc)));
                }
                for (name, value) in &r.metrics {
                    s.push_str(&format!("  metric {name} = {}\n", fmt6(*value)));
                }
            }
            s
        }
        ReportFormat::Tabular => {
            let columns: BTreeSet<&str> = reports
                .iter()
                .flat_map(|r| r.metrics.keys().map(String::as_str))
                .collect();
            let mut s = String::from("case");
            for c in &columns {
                s.push(',');
                s.push_str(c);
            }
            s.push_str(",runtime_s,auc_gb_s,task\n");
            for r in reports {
                s.push_str(&r.case_id);
                for c in &columns {
                    s.push(',');
                    if let Some(v) = r.metrics.get(*c) {
                        s.push_str(&fmt6(*v));
                    }
                }
                s.push(',');
                s.push_str(&fmt6(r.runtime_s));
                s.push(',');
                if let Some(auc) = r.memory_auc {
                    s.push_str(&fmt6(auc));
                }
                s.push(',');
                s.push_str(r.task.as_str());
                s.push('\n');
            }
            s
        }
    })
}

/// Parse either report form (auto-detected).
pub fn parse_report(text: &str) -> Result<Vec<CaseReport>> {
    let first = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| Error::Parse("empty report".into()))?;
    if first.starts_with("case ") {
        parse_structured(text)
    } else if first.starts_with("case,") {
        parse_tabular(text)
    } else {
        Err(Error::Parse(format!(
            "not a report file (first line {first:?})"
        )))
    }
}

fn parse_structured(text: &str) -> Result<Vec<CaseReport>> {
    let mut out: Vec<CaseReport> = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(id) = trimmed.strip_prefix("case ") {
            out.push(CaseReport::new(id.trim(), Task::Seg));
            continue;
        }
        let current = out
            .last_mut()
            .ok_or_else(|| Error::Parse(format!("field before any case: {trimmed:?}")))?;
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("field without '=': {trimmed:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "task" {
            current.task = Task::parse(value)?;
        } else if key == "runtime_s" {
            current.runtime_s = parse_value(value)?;
        } else if key == "auc_gb_s" {
            current.memory_auc = Some(parse_value(value)?);
        } else if let Some(name) = key.strip_prefix("metric ") {
            current
                .metrics
                .insert(name.trim().to_string(), parse_value(value)?);
        } else {
            return Err(Error::Parse(format!("unknown report field {key:?}")));
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("report has no cases".into()));
    }
    Ok(out)
}

fn parse_tabular(text: &str) -> Result<Vec<CaseReport>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.first() != Some(&"case") || columns.last() != Some(&"task") {
        return Err(Error::Parse("CSV header must span case…task".into()));
    }
    if columns.len() < 4
        || columns[columns.len() - 3] != "runtime_s"
        || columns[columns.len() - 2] != "auc_gb_s"
    {
        return Err(Error::Parse(
            "CSV header must end with runtime_s,auc_gb_s,task".into(),
        ));
    }
    let metric_names = &columns[1..columns.len() - 3];
    let mut out = Vec::new();
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(Error::Parse(format!(
                "row has {} cells, header has {}",
                cells.len(),
                columns.len()
            )));
        }
        let mut report = CaseReport::new(cells[0], Task::parse(cells[cells.len() - 1])?);
        for (name, cell) in metric_names.iter().zip(&cells[1..]) {
            if !cell.is_empty() {
                report.metrics.insert(name.to_string(), parse_value(cell)?);
            }
        }
        report.runtime_s = parse_value(cells[cells.len() - 3])?;
        let auc = cells[cells.len() - 2];
        if !auc.is_empty() {
            report.memory_auc = Some(parse_value(auc)?);
        }
        out.push(report);
    }
    if out.is_empty() {
        return Err(Error::Parse("CSV has no data rows".into()));
    }
    Ok(out)
}

fn parse_value(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad numeric value {s:?}")))
}

pub fn write_report(
    path: impl AsRef<Path>,
    reports: &[CaseReport],
    format: ReportFormat,
) -> Result<()> {
    std::fs::write(path.as_ref(), format_report(reports, format)?)?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<CaseReport>> {
    parse_report(&std::fs::read_to_string(path.as_ref())?)
}
