//! Bit-exact readers and writers.
//!
//! Formats (all little-endian, all rejecting length mismatches outright):
//! - volumes: MetaImage-style text header + raw buffer (`.mha` inline,
//!   `.mhd` + sibling `.raw`);
//! - point clouds: ASCII PLY, vertices only, 6-decimal coordinates;
//! - rigid transforms: one `case=… jaw=… matrix=…` record per line under a
//!   `# order=row-major` header;
//! - case reports: hierarchical key-value or CSV, fixed 6-decimal values.

mod ply;
mod report;
mod transform;
mod volume;

pub use ply::{format_ply, parse_ply, read_ply, write_ply};
pub use report::{format_report, parse_report, read_report, write_report, ReportFormat};
pub use transform::{
    format_pseudo_labels, format_transforms, parse_pseudo_labels, parse_transforms,
    read_pseudo_labels, read_transforms, write_pseudo_labels, write_transforms, PseudoLabelRecord,
    TransformRecord,
};
pub use volume::{read_volume, write_volume, Volume, VolumeHeader};
