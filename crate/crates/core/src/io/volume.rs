//! MetaImage-style volume reader/writer.
//!
//! The header is plain text, one `key = value` per line, exactly the keys
//! `NDims` (must be 3), `DimSize`, `ElementSpacing`, `Offset`, `ElementType`
//! (`MET_UCHAR | MET_USHORT | MET_SHORT | MET_FLOAT`), and `ElementDataFile`
//! (`LOCAL` or a relative path), in any order with `ElementDataFile` last.
//! Voxel data is a raw little-endian buffer, inline for `LOCAL` (`.mha`
//! convention) or in the referenced sibling file (`.mhd` + `.raw`).
//!
//! Unsigned element types load as [`LabelVolume`], signed/float ones as
//! [`IntensityVolume`]. The element type is retained so writing a volume
//! back reproduces the original bytes.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{IntensityVolume, LabelVolume, VoxelType};

/// Parsed volume header.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub voxel_type: VoxelType,
    /// `None` = LOCAL (inline data), `Some(rel)` = sibling raw file.
    pub data_file: Option<String>,
}

/// A volume of either kind, as determined by the element type.
#[derive(Clone, Debug, PartialEq)]
pub enum Volume {
    Label(LabelVolume),
    Intensity(IntensityVolume),
}

impl Volume {
    pub fn into_label(self) -> Result<LabelVolume> {
        match self {
            Volume::Label(v) => Ok(v),
            Volume::Intensity(_) => Err(Error::Parse(
                "expected a label volume, found intensity data".into(),
            )),
        }
    }

    pub fn into_intensity(self) -> Result<IntensityVolume> {
        match self {
            Volume::Intensity(v) => Ok(v),
            Volume::Label(_) => Err(Error::Parse(
                "expected an intensity volume, found label data".into(),
            )),
        }
    }

    pub fn voxel_type(&self) -> VoxelType {
        match self {
            Volume::Label(v) => v.voxel_type(),
            Volume::Intensity(v) => v.voxel_type(),
        }
    }
}

fn parse_header(text: &str) -> Result<(VolumeHeader, usize)> {
    let mut dims = None;
    let mut spacing = None;
    let mut origin = None;
    let mut voxel_type = None;
    let mut ndims_seen = false;
    let mut consumed = 0usize;
    let mut data_file = None;

    for line in text.split_inclusive('\n') {
        consumed += line.len();
        let entry = line.trim_end_matches(['\n', '\r']);
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("header line without '=': {entry:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "NDims" => {
                if value != "3" {
                    return Err(Error::Parse(format!("NDims must be 3, got {value}")));
                }
                ndims_seen = true;
            }
            "DimSize" => {
                let v = parse_triplet::<usize>(value, "DimSize")?;
                dims = Some(v);
            }
            "ElementSpacing" => {
                spacing = Some(parse_triplet::<f64>(value, "ElementSpacing")?);
            }
            "Offset" => {
                origin = Some(parse_triplet::<f64>(value, "Offset")?);
            }
            "ElementType" => {
                voxel_type = Some(
                    VoxelType::from_met_name(value)
                        .ok_or_else(|| Error::Parse(format!("unsupported ElementType {value}")))?,
                );
            }
            "ElementDataFile" => {
                data_file = Some(if value == "LOCAL" {
                    None
                } else {
                    Some(value.to_string())
                });
                break;
            }
            other => {
                return Err(Error::Parse(format!("unexpected header key {other:?}")));
            }
        }
    }

    let data_file =
        data_file.ok_or_else(|| Error::Parse("header ends before ElementDataFile".into()))?;
    if !ndims_seen {
        return Err(Error::Parse("missing NDims".into()));
    }
    let header = VolumeHeader {
        dims: dims.ok_or_else(|| Error::Parse("missing DimSize".into()))?,
        spacing: spacing.ok_or_else(|| Error::Parse("missing ElementSpacing".into()))?,
        origin: origin.ok_or_else(|| Error::Parse("missing Offset".into()))?,
        voxel_type: voxel_type.ok_or_else(|| Error::Parse("missing ElementType".into()))?,
        data_file,
    };
    Ok((header, consumed))
}

fn parse_triplet<T: std::str::FromStr>(value: &str, key: &str) -> Result<[T; 3]> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("{key} needs 3 values, got {value:?}")));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(
            p.parse::<T>()
                .map_err(|_| Error::Parse(format!("bad {key} component {p:?}")))?,
        );
    }
    Ok([out.remove(0), out.remove(0), out.remove(0)])
}

fn decode(header: &VolumeHeader, raw: &[u8]) -> Result<Volume> {
    let n = header.dims[0] * header.dims[1] * header.dims[2];
    let expect = n * header.voxel_type.byte_size();
    if raw.len() != expect {
        return Err(Error::SizeMismatch(format!(
            "buffer holds {} bytes, dims {:?} × {} require {expect}",
            raw.len(),
            header.dims,
            header.voxel_type.met_name()
        )));
    }
    match header.voxel_type {
        VoxelType::U8 => {
            let labels = raw.iter().map(|&b| b as u16).collect();
            Ok(Volume::Label(
                LabelVolume::new(header.dims, header.spacing, header.origin, labels)?
                    .with_voxel_type(VoxelType::U8)?,
            ))
        }
        VoxelType::U16 => {
            let labels = raw
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]))
                .collect();
            Ok(Volume::Label(
                LabelVolume::new(header.dims, header.spacing, header.origin, labels)?
                    .with_voxel_type(VoxelType::U16)?,
            ))
        }
        VoxelType::I16 => {
            let values = raw
                .chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]) as f32)
                .collect();
            Ok(Volume::Intensity(
                IntensityVolume::new(header.dims, header.spacing, header.origin, values)?
                    .with_voxel_type(VoxelType::I16),
            ))
        }
        VoxelType::F32 => {
            let values = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            Ok(Volume::Intensity(
                IntensityVolume::new(header.dims, header.spacing, header.origin, values)?
                    .with_voxel_type(VoxelType::F32),
            ))
        }
    }
}

fn encode(vol: &Volume) -> Result<Vec<u8>> {
    Ok(match vol {
        Volume::Label(v) => match v.voxel_type() {
            VoxelType::U8 => v.labels().iter().map(|&l| l as u8).collect(),
            VoxelType::U16 => v.labels().iter().flat_map(|l| l.to_le_bytes()).collect(),
            other => {
                return Err(Error::InvalidSpec(format!(
                    "labels cannot be written as {}",
                    other.met_name()
                )))
            }
        },
        Volume::Intensity(v) => match v.voxel_type() {
            VoxelType::I16 => {
                let mut out = Vec::with_capacity(v.values().len() * 2);
                for &x in v.values() {
                    if x.fract() != 0.0 || x < i16::MIN as f32 || x > i16::MAX as f32 {
                        return Err(Error::InvalidSpec(format!(
                            "value {x} is not representable as MET_SHORT"
                        )));
                    }
                    out.extend_from_slice(&(x as i16).to_le_bytes());
                }
                out
            }
            VoxelType::U8 => {
                let mut out = Vec::with_capacity(v.values().len());
                for &x in v.values() {
                    if x.fract() != 0.0 || !(0.0..=u8::MAX as f32).contains(&x) {
                        return Err(Error::InvalidSpec(format!(
                            "value {x} is not representable as MET_UCHAR"
                        )));
                    }
                    out.push(x as u8);
                }
                out
            }
            VoxelType::U16 => {
                let mut out = Vec::with_capacity(v.values().len() * 2);
                for &x in v.values() {
                    if x.fract() != 0.0 || !(0.0..=u16::MAX as f32).contains(&x) {
                        return Err(Error::InvalidSpec(format!(
                            "value {x} is not representable as MET_USHORT"
                        )));
                    }
                    out.extend_from_slice(&(x as u16).to_le_bytes());
                }
                out
            }
            VoxelType::F32 => v.values().iter().flat_map(|x| x.to_le_bytes()).collect(),
        },
    })
}

fn format_header(vol: &Volume, data_file: &Option<String>) -> String {
    let (dims, spacing, origin) = match vol {
        Volume::Label(v) => (v.dims(), v.spacing(), v.origin()),
        Volume::Intensity(v) => (v.dims(), v.spacing(), v.origin()),
    };
    let mut s = String::new();
    s.push_str("NDims = 3\n");
    s.push_str(&format!("DimSize = {} {} {}\n", dims[0], dims[1], dims[2]));
    s.push_str(&format!(
        "ElementSpacing = {} {} {}\n",
        spacing[0], spacing[1], spacing[2]
    ));
    s.push_str(&format!(
        "Offset = {} {} {}\n",
        origin[0], origin[1], origin[2]
    ));
    s.push_str(&format!("ElementType = {}\n", vol.voxel_type().met_name()));
    match data_file {
        None => s.push_str("ElementDataFile = LOCAL\n"),
        Some(rel) => s.push_str(&format!("ElementDataFile = {rel}\n")),
    }
    s
}

/// Read a volume (`.mha` inline or `.mhd` + raw sibling).
pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    // the header is ASCII; scan it without touching the binary remainder
    let header_limit = bytes.len().min(64 * 1024);
    let head_text = std::str::from_utf8(&bytes[..header_limit])
        .or_else(|e| {
            // cut at the last valid boundary: binary payload follows the header
            std::str::from_utf8(&bytes[..e.valid_up_to()])
        })
        .map_err(|_| Error::Parse("volume header is not valid text".into()))?;
    let (header, consumed) = parse_header(head_text)?;
    let raw = match &header.data_file {
        None => bytes[consumed..].to_vec(),
        Some(rel) => {
            let sibling = path.parent().unwrap_or_else(|| Path::new(".")).join(rel);
            if consumed != bytes.len() {
                return Err(Error::Parse(
                    "trailing bytes after header that references an external data file".into(),
                ));
            }
            std::fs::read(sibling)?
        }
    };
    decode(&header, &raw)
}

/// Write a volume. `.mha` stores data inline (LOCAL); any other extension
/// writes a text header plus a sibling `<stem>.raw`.
pub fn write_volume(path: impl AsRef<Path>, vol: &Volume) -> Result<()> {
    let path = path.as_ref();
    let inline = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("mha"))
        .unwrap_or(false);
    let raw = encode(vol)?;
    if inline {
        let mut out = format_header(vol, &None).into_bytes();
        out.extend_from_slice(&raw);
        std::fs::write(path, out)?;
    } else {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Parse(format!("cannot derive a raw filename from {path:?}")))?;
        let rel = format!("{stem}.raw");
        std::fs::write(path, format_header(vol, &Some(rel.clone())))?;
        std::fs::write(
            path.parent().unwrap_or_else(|| Path::new(".")).join(rel),
            raw,
        )?;
    }
    Ok(())
}
