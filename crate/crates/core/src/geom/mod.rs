//! Geometric primitives shared by every other module: rigid transforms,
//! voxel grids and volumes, and point clouds.
//!
//! Conventions:
//! - rotations are 3×3 row-major proper rotation matrices, translations in mm;
//! - voxel index `(i, j, k)` maps to the voxel *corner* at
//!   `origin + (i·sx, j·sy, k·sz)`; the voxel center sits half a spacing
//!   further along each axis;
//! - label buffers are x-fastest: `index = i + nx·(j + ny·k)`.

pub(crate) mod mat;

mod cloud;
mod transform;
mod volume;

pub use cloud::PointCloud;
pub use transform::{nearest_rotation, PoseIncrement, RigidTransform};
pub use volume::{Grid, IntensityVolume, LabelVolume, VoxelType};
