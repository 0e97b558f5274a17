//! Core library for evaluating dental CBCT/IOS segmentation and registration.
//!
//! The crate is organized around the data that flows through a challenge-style
//! evaluation pipeline:
//!
//! - [`geom`] — rigid transforms, label/intensity volumes, point clouds.
//! - [`io`] — bit-exact readers/writers for volumes, ASCII PLY clouds,
//!   transform records, and case reports.
//! - [`seg`] — image- and instance-level Dice/mIoU, tolerance-based
//!   normalized surface Dice, and instance agreement.
//! - [`reg`] — translation/rotation error for rigid transforms and
//!   intensity similarity (NCC, MI/NMI) over co-registered volumes.
//! - [`efficiency`] — runtime caps and memory–time AUC accounting.
//! - [`registration`] — closed-form SVD alignment, trimmed ICP, PCA coarse
//!   alignment, Chamfer distance, and HU-threshold preprocessing.
//! - [`ssl`] — the two-stage pseudo-label harness around the registration
//!   core (calibrate, generate, filter, re-estimate).
//! - [`synth`] — seeded, fully deterministic generators for ground-truthed
//!   test fixtures.
//! - [`report`] — per-case reports and leaderboard aggregation.
//!
//! All transforms map IOS (source) coordinates into CBCT (target) coordinates;
//! metrics are symmetric in that convention as long as both sides use it.

// fixed-size 3×3 / 3-vector code reads best with explicit indices
#![allow(clippy::needless_range_loop)]

pub mod efficiency;
pub mod error;
pub mod geom;
pub mod io;
pub mod reg;
pub mod registration;
pub mod report;
pub mod seg;
pub mod spatial;
pub mod ssl;
pub mod synth;

pub use error::{Error, Result};
pub use geom::{
    IntensityVolume, LabelVolume, PointCloud, PoseIncrement, RigidTransform, VoxelType,
};
pub use report::{CaseReport, Jaw, LeaderboardEntry, MeanStd, Task};
