//! Voxel grids, integer label volumes, and scalar intensity volumes.

use crate::error::{Error, Result};

/// On-disk element type of a volume. Retained across read/write so that
/// file round trips are byte-identical.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VoxelType {
    U8,
    U16,
    I16,
    F32,
}

impl VoxelType {
    pub fn byte_size(self) -> usize {
        match self {
            VoxelType::U8 => 1,
            VoxelType::U16 | VoxelType::I16 => 2,
            VoxelType::F32 => 4,
        }
    }

    /// MetaImage-style name.
    pub fn met_name(self) -> &'static str {
        match self {
            VoxelType::U8 => "MET_UCHAR",
            VoxelType::U16 => "MET_USHORT",
            VoxelType::I16 => "MET_SHORT",
            VoxelType::F32 => "MET_FLOAT",
        }
    }

    pub fn from_met_name(s: &str) -> Option<Self> {
        match s {
            "MET_UCHAR" => Some(VoxelType::U8),
            "MET_USHORT" => Some(VoxelType::U16),
            "MET_SHORT" => Some(VoxelType::I16),
            "MET_FLOAT" => Some(VoxelType::F32),
            _ => None,
        }
    }

    /// True for unsigned integer types, which hold label maps.
    pub fn is_label(self) -> bool {
        matches!(self, VoxelType::U8 | VoxelType::U16)
    }
}

/// Geometry of a voxel grid: dims, spacing (mm), and world origin (mm).
///
/// Index `(i, j, k)` addresses the voxel whose *corner* sits at
/// `origin + (i·sx, j·sy, k·sz)`; buffers are x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
}

impl Grid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidSpec(format!("zero-sized dims {dims:?}")));
        }
        if spacing.iter().any(|&s| !s.is_finite() || s <= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "spacing must be strictly positive, got {spacing:?}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidSpec("non-finite origin".into()));
        }
        Ok(Grid {
            dims,
            spacing,
            origin,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, idx: [usize; 3]) -> bool {
        idx[0] < self.dims[0] && idx[1] < self.dims[1] && idx[2] < self.dims[2]
    }

    /// Linear buffer offset of `(i, j, k)`, x-fastest.
    pub fn offset(&self, idx: [usize; 3]) -> usize {
        idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])
    }

    /// World position of the voxel corner (corner-anchored convention).
    pub fn voxel_to_world(&self, idx: [usize; 3]) -> Result<[f64; 3]> {
        if !self.contains(idx) {
            return Err(Error::OutOfBounds(format!(
                "index {idx:?} outside dims {:?}",
                self.dims
            )));
        }
        Ok([
            self.origin[0] + idx[0] as f64 * self.spacing[0],
            self.origin[1] + idx[1] as f64 * self.spacing[1],
            self.origin[2] + idx[2] as f64 * self.spacing[2],
        ])
    }

    /// Inverse of [`Grid::voxel_to_world`]; rounds to the nearest lattice
    /// point so corner positions round-trip exactly.
    pub fn world_to_voxel(&self, p: [f64; 3]) -> Result<[usize; 3]> {
        let mut idx = [0usize; 3];
        for d in 0..3 {
            let f = ((p[d] - self.origin[d]) / self.spacing[d]).round();
            if f < 0.0 || f >= self.dims[d] as f64 {
                return Err(Error::OutOfBounds(format!(
                    "world point {p:?} outside grid on axis {d}"
                )));
            }
            idx[d] = f as usize;
        }
        Ok(idx)
    }

    /// World position of the voxel center: corner + half spacing.
    pub fn voxel_center(&self, idx: [usize; 3]) -> Result<[f64; 3]> {
        let corner = self.voxel_to_world(idx)?;
        Ok([
            corner[0] + 0.5 * self.spacing[0],
            corner[1] + 0.5 * self.spacing[1],
            corner[2] + 0.5 * self.spacing[2],
        ])
    }

    /// True when both grids have identical dims and near-identical spacing.
    pub fn same_geometry(&self, other: &Grid) -> bool {
        self.dims == other.dims
            && (0..3).all(|d| (self.spacing[d] - other.spacing[d]).abs() <= 1e-9)
    }
}

/// A 3D integer label raster. Value 0 is background; nonzero values are
/// instance labels (FDI-style category codes).
#[derive(Clone, Debug, PartialEq)]
pub struct LabelVolume {
    grid: Grid,
    labels: Vec<u16>,
    voxel_type: VoxelType,
}

impl LabelVolume {
    pub fn new(
        dims: [usize; 3],
        spacing: [f64; 3],
        origin: [f64; 3],
        labels: Vec<u16>,
    ) -> Result<Self> {
        let grid = Grid::new(dims, spacing, origin)?;
        if labels.len() != grid.len() {
            return Err(Error::SizeMismatch(format!(
                "label buffer holds {} values, dims {:?} require {}",
                labels.len(),
                dims,
                grid.len()
            )));
        }
        let voxel_type = if labels.iter().all(|&v| v <= u8::MAX as u16) {
            VoxelType::U8
        } else {
            VoxelType::U16
        };
        Ok(LabelVolume {
            grid,
            labels,
            voxel_type,
        })
    }

    pub(crate) fn with_voxel_type(mut self, voxel_type: VoxelType) -> Result<Self> {
        if !voxel_type.is_label() {
            return Err(Error::InvalidSpec(format!(
                "{} cannot hold labels",
                voxel_type.met_name()
            )));
        }
        if voxel_type == VoxelType::U8 && self.labels.iter().any(|&v| v > u8::MAX as u16) {
            return Err(Error::SizeMismatch(
                "label exceeds the 8-bit element type".into(),
            ));
        }
        self.voxel_type = voxel_type;
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims()
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.grid.spacing()
    }

    pub fn origin(&self) -> [f64; 3] {
        self.grid.origin()
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn voxel_type(&self) -> VoxelType {
        self.voxel_type
    }

    pub fn get(&self, idx: [usize; 3]) -> u16 {
        self.labels[self.grid.offset(idx)]
    }

    pub fn voxel_to_world(&self, idx: [usize; 3]) -> Result<[f64; 3]> {
        self.grid.voxel_to_world(idx)
    }

    pub fn world_to_voxel(&self, p: [f64; 3]) -> Result<[usize; 3]> {
        self.grid.world_to_voxel(p)
    }

    /// Copy with every label failing `keep` zeroed out. Used by the
    /// label-group filter of the evaluation CLI.
    pub fn retain_labels(&self, keep: impl Fn(u16) -> bool) -> LabelVolume {
        let labels = self
            .labels
            .iter()
            .map(|&v| if v != 0 && keep(v) { v } else { 0 })
            .collect();
        LabelVolume {
            grid: self.grid.clone(),
            labels,
            voxel_type: self.voxel_type,
        }
    }
}

/// A 3D scalar raster (HU values or occupancy). Values are finite by
/// construction.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityVolume {
    grid: Grid,
    values: Vec<f32>,
    voxel_type: VoxelType,
}

impl IntensityVolume {
    pub fn new(
        dims: [usize; 3],
        spacing: [f64; 3],
        origin: [f64; 3],
        values: Vec<f32>,
    ) -> Result<Self> {
        let grid = Grid::new(dims, spacing, origin)?;
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch(format!(
                "value buffer holds {} values, dims {:?} require {}",
                values.len(),
                dims,
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec(
                "intensity volume contains NaN or infinite values".into(),
            ));
        }
        Ok(IntensityVolume {
            grid,
            values,
            voxel_type: VoxelType::F32,
        })
    }

    pub(crate) fn with_voxel_type(mut self, voxel_type: VoxelType) -> Self {
        self.voxel_type = voxel_type;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims()
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.grid.spacing()
    }

    pub fn origin(&self) -> [f64; 3] {
        self.grid.origin()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn voxel_type(&self) -> VoxelType {
        self.voxel_type
    }

    pub fn get(&self, idx: [usize; 3]) -> f32 {
        self.values[self.grid.offset(idx)]
    }

    pub fn voxel_center(&self, idx: [usize; 3]) -> Result<[f64; 3]> {
        self.grid.voxel_center(idx)
    }
}
