//! ASCII PLY reader/writer for point clouds.
//!
//! Only the ASCII subset is supported; binary PLY is rejected with a clear
//! error. Faces and non-vertex elements are skipped, vertices become the
//! cloud in file order. Coordinates are written with 6 decimals, which
//! makes a write→read→write cycle byte-stable.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::PointCloud;

/// Parse ASCII PLY text into a point cloud.
pub fn parse_ply(text: &str) -> Result<PointCloud> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));

    if lines.next().map(str::trim) != Some("ply") {
        return Err(Error::Parse("not a PLY file (missing 'ply' magic)".into()));
    }

    // header
    struct Element {
        name: String,
        count: usize,
        props: Vec<String>,
        has_list: bool,
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut format_seen = false;
    loop {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse("PLY header ends before end_header".into()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with("comment") || line.starts_with("obj_info") {
            continue;
        }
        if line == "end_header" {
            break;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                let kind = tok.next().unwrap_or("");
                if kind != "ascii" {
                    return Err(Error::Parse(format!(
                        "only ASCII PLY is supported, got format {kind:?}"
                    )));
                }
                format_seen = true;
            }
            Some("element") => {
                let name = tok
                    .next()
                    .ok_or_else(|| Error::Parse("element without a name".into()))?;
                let count: usize = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("element {name} without a count")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                    has_list: false,
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| Error::Parse("property before any element".into()))?;
                let ty = tok
                    .next()
                    .ok_or_else(|| Error::Parse("property without a type".into()))?;
                if ty == "list" {
                    element.has_list = true;
                    element.props.push(String::new());
                } else {
                    let name = tok
                        .next()
                        .ok_or_else(|| Error::Parse("property without a name".into()))?;
                    if element.name == "vertex"
                        && ["x", "y", "z"].contains(&name)
                        && !["float", "float32", "double", "float64"].contains(&ty)
                    {
                        return Err(Error::Parse(format!(
                            "vertex coordinate {name} must be float or double, got {ty}"
                        )));
                    }
                    element.props.push(name.to_string());
                }
            }
            other => {
                return Err(Error::Parse(format!(
                    "unexpected PLY header entry {other:?}"
                )));
            }
        }
    }
    if !format_seen {
        return Err(Error::Parse("PLY header has no format line".into()));
    }

    if elements.iter().filter(|e| e.name == "vertex").count() > 1 {
        return Err(Error::Parse("PLY declares multiple vertex elements".into()));
    }
    let vertex = elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or_else(|| Error::Parse("PLY has no vertex element".into()))?;
    if vertex.has_list {
        return Err(Error::Parse("vertex element with list properties".into()));
    }
    let coord_cols: Vec<usize> = ["x", "y", "z"]
        .iter()
        .map(|want| {
            vertex
                .props
                .iter()
                .position(|p| p == want)
                .ok_or_else(|| Error::Parse(format!("vertex element lacks property {want}")))
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    for element in &elements {
        for row in 0..element.count {
            let line = loop {
                match lines.next() {
                    Some(l) if l.trim().is_empty() => continue,
                    Some(l) => break l,
                    None => {
                        return Err(Error::Parse(format!(
                            "element {} declares {} rows but the file ends at row {row}",
                            element.name, element.count
                        )))
                    }
                }
            };
            if element.name != "vertex" {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != element.props.len() {
                return Err(Error::Parse(format!(
                    "vertex row {row} has {} values, expected {}",
                    tokens.len(),
                    element.props.len()
                )));
            }
            let mut p = [0.0f64; 3];
            for (d, &col) in coord_cols.iter().enumerate() {
                p[d] = tokens[col]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coordinate {:?}", tokens[col])))?;
            }
            points.push(p);
        }
    }
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(Error::Parse(format!(
            "trailing content after PLY data: {extra:?}"
        )));
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud("PLY declares zero vertices".into()));
    }
    PointCloud::new(points)
}

/// Render a cloud as ASCII PLY with 6-decimal coordinates.
pub fn format_ply(cloud: &PointCloud) -> String {
    let mut s = String::with_capacity(64 + cloud.len() * 30);
    s.push_str("ply\nformat ascii 1.0\n");
    s.push_str(&format!("element vertex {}\n", cloud.len()));
    s.push_str("property float x\nproperty float y\nproperty float z\nend_header\n");
    for p in cloud.points() {
        s.push_str(&format!("{:.6} {:.6} {:.6}\n", p[0], p[1], p[2]));
    }
    s
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| match e.kind() {
        std::io::ErrorKind::InvalidData => {
            Error::Parse("file is not text; binary PLY is not supported".into())
        }
        _ => Error::Io(e),
    })?;
    parse_ply(&text)
}

pub fn write_ply(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    std::fs::write(path.as_ref(), format_ply(cloud))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::CounterRng;

    #[test]
    fn triangle_parses_to_three_points() {
        let text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 0 0\n0 1 0\n";
        let cloud = parse_ply(text).unwrap();
        assert_eq!(cloud.len(), 3);
        assert_eq!(cloud.points()[2], [0.0, 1.0, 0.0]);
    }

    #[test]
    fn missing_vertices_is_a_parse_error() {
        let text = "ply\nformat ascii 1.0\nelement vertex 5\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n";
        assert!(matches!(parse_ply(text), Err(Error::Parse(_))));
    }

    #[test]
    fn binary_and_empty_are_rejected() {
        let text = "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
        assert!(matches!(parse_ply(text), Err(Error::Parse(_))));
        let text = "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
        assert!(matches!(parse_ply(text), Err(Error::EmptyCloud(_))));
    }

    #[test]
    fn faces_and_extra_properties_are_skipped() {
        let text = "ply\nformat ascii 1.0\ncomment exported\nelement vertex 2\nproperty float nx\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n9 0.5 1.5 2.5\n9 -1 -2 -3\n3 0 1 0\n";
        let cloud = parse_ply(text).unwrap();
        assert_eq!(cloud.points()[0], [0.5, 1.5, 2.5]);
        assert_eq!(cloud.points()[1], [-1.0, -2.0, -3.0]);
    }

    #[test]
    fn round_trip_keeps_six_decimals() {
        let mut rng = CounterRng::new(44);
        let points: Vec<[f64; 3]> = (0..1000)
            .map(|_| {
                [
                    rng.range_f64(-50.0, 50.0),
                    rng.range_f64(-50.0, 50.0),
                    rng.range_f64(-50.0, 50.0),
                ]
            })
            .collect();
        let cloud = PointCloud::new(points).unwrap();
        let text = format_ply(&cloud);
        let back = parse_ply(&text).unwrap();
        for (a, b) in cloud.points().iter().zip(back.points()) {
            for d in 0..3 {
                assert!((a[d] - b[d]).abs() <= 5e-7);
            }
        }
        // a second write is byte-identical
        assert_eq!(format_ply(&back), text);
    }
}
