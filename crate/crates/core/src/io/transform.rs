//! Rigid transform record files (and pseudo-label record files).
//!
//! UTF-8 text, one record per line. The mandatory header line
//! `# order=row-major` pins the matrix layout so files cannot be
//! transposed silently:
//!
//! ```text
//! # order=row-major
//! case=0001 jaw=maxilla matrix=1 0 0 0 0 1 0 0 0 0 1 0 0 0 0 1
//! ```
//!
//! Matrix entries use shortest round-trip float formatting, so
//! write→read→write is byte-identical. Every matrix is validated rigid
//! (tolerance 1e-3) at parse time.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::RigidTransform;
use crate::report::Jaw;

const HEADER: &str = "# order=row-major";
/// Rigidity tolerance applied to parsed matrices.
pub const PARSE_RIGID_TOL: f64 = 1e-3;

/// One case-jaw transform.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformRecord {
    pub case_id: String,
    pub jaw: Jaw,
    pub transform: RigidTransform,
}

/// One pseudo-label: a pair id, its confidence residual (mm; lower is
/// better, `inf` encodes a registration failure), and the transform.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoLabelRecord {
    pub pair_id: String,
    pub confidence: f64,
    pub transform: RigidTransform,
}

fn format_matrix(t: &RigidTransform) -> String {
    let m = t.to_matrix4();
    let mut parts = Vec::with_capacity(16);
    for row in &m {
        for v in row {
            parts.push(format!("{v}"));
        }
    }
    parts.join(" ")
}

fn parse_matrix(tokens: &[&str], context: &str) -> Result<RigidTransform> {
    if tokens.len() != 16 {
        return Err(Error::Parse(format!(
            "{context}: matrix needs 16 values, got {}",
            tokens.len()
        )));
    }
    let mut m = [[0.0f64; 4]; 4];
    for (i, tok) in tokens.iter().enumerate() {
        m[i / 4][i % 4] = tok
            .parse()
            .map_err(|_| Error::Parse(format!("{context}: bad matrix entry {tok:?}")))?;
    }
    RigidTransform::from_matrix4(&m, PARSE_RIGID_TOL)
        .map_err(|e| Error::NotRigid(format!("{context}: {e}")))
}

fn check_header(line: Option<&str>) -> Result<()> {
    match line {
        Some(l) if l.trim() == HEADER => Ok(()),
        other => Err(Error::Parse(format!(
            "expected header {HEADER:?}, got {other:?}"
        ))),
    }
}

/// `key=` prefix of a token, with the value as remainder.
fn field<'a>(token: &'a str, key: &str, context: &str) -> Result<&'a str> {
    token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| Error::Parse(format!("{context}: expected {key}=..., got {token:?}")))
}

pub fn format_transforms(records: &[TransformRecord]) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&format!(
            "case={} jaw={} matrix={}\n",
            r.case_id,
            r.jaw.as_str(),
            format_matrix(&r.transform)
        ));
    }
    s
}

pub fn parse_transforms(text: &str) -> Result<Vec<TransformRecord>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    check_header(lines.next())?;
    let mut out = Vec::new();
    for line in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 3 {
            return Err(Error::Parse(format!("short transform record {line:?}")));
        }
        let case_id = field(tokens[0], "case", "transform record")?.to_string();
        let jaw = Jaw::parse(field(tokens[1], "jaw", &format!("case {case_id}"))?)?;
        let first = field(tokens[2], "matrix", &format!("case {case_id}"))?;
        let mut matrix_tokens = vec![first];
        matrix_tokens.extend(&tokens[3..]);
        let transform = parse_matrix(&matrix_tokens, &format!("case {case_id}"))?;
        out.push(TransformRecord {
            case_id,
            jaw,
            transform,
        });
    }
    Ok(out)
}

pub fn read_transforms(path: impl AsRef<Path>) -> Result<Vec<TransformRecord>> {
    parse_transforms(&std::fs::read_to_string(path.as_ref())?)
}

pub fn write_transforms(path: impl AsRef<Path>, records: &[TransformRecord]) -> Result<()> {
    std::fs::write(path.as_ref(), format_transforms(records))?;
    Ok(())
}

pub fn format_pseudo_labels(records: &[PseudoLabelRecord]) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for r in records {
        let confidence = if r.confidence.is_finite() {
            format!("{}", r.confidence)
        } else {
            "inf".to_string()
        };
        s.push_str(&format!(
            "pair={} confidence={} matrix={}\n",
            r.pair_id,
            confidence,
            format_matrix(&r.transform)
        ));
    }
    s
}

pub fn parse_pseudo_labels(text: &str) -> Result<Vec<PseudoLabelRecord>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    check_header(lines.next())?;
    let mut out = Vec::new();
    for line in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 3 {
            return Err(Error::Parse(format!("short pseudo-label record {line:?}")));
        }
        let pair_id = field(tokens[0], "pair", "pseudo-label record")?.to_string();
        let conf_str = field(tokens[1], "confidence", &format!("pair {pair_id}"))?;
        let confidence: f64 = conf_str
            .parse()
            .map_err(|_| Error::Parse(format!("pair {pair_id}: bad confidence {conf_str:?}")))?;
        let first = field(tokens[2], "matrix", &format!("pair {pair_id}"))?;
        let mut matrix_tokens = vec![first];
        matrix_tokens.extend(&tokens[3..]);
        let transform = parse_matrix(&matrix_tokens, &format!("pair {pair_id}"))?;
        out.push(PseudoLabelRecord {
            pair_id,
            confidence,
            transform,
        });
    }
    Ok(out)
}

pub fn read_pseudo_labels(path: impl AsRef<Path>) -> Result<Vec<PseudoLabelRecord>> {
    parse_pseudo_labels(&std::fs::read_to_string(path.as_ref())?)
}

pub fn write_pseudo_labels(path: impl AsRef<Path>, records: &[PseudoLabelRecord]) -> Result<()> {
    std::fs::write(path.as_ref(), format_pseudo_labels(records))?;
    Ok(())
}
