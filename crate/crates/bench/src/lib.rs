//! Shared fixtures for the criterion benchmarks.

use dentalign_core::geom::{LabelVolume, PointCloud, RigidTransform};
use dentalign_core::synth::{gen_arch, gen_labelmaps, Corruption, SynthSpec};

/// Default arch pair with partial overlap and measurement noise, plus a
/// mildly perturbed initialization.
pub fn arch_fixture(seed: u64) -> (PointCloud, PointCloud, RigidTransform) {
    let mut spec = SynthSpec::new(seed);
    spec.noise_sigma = 0.05;
    spec.overlap = 0.85;
    let pair = gen_arch(&spec).unwrap();
    let nudge =
        RigidTransform::from_axis_angle([0.2, -0.5, 0.8], 5f64.to_radians(), [2.0, -1.0, 1.5])
            .unwrap();
    let init = nudge.compose(&pair.gt);
    (pair.source, pair.target, init)
}

/// A corrupted label-map pair at the given cubic size.
pub fn labelmap_fixture(size: usize) -> (LabelVolume, LabelVolume) {
    let (gt, pred) = gen_labelmaps(1, [size; 3], &[11, 21, 31], Corruption::Dilate(1)).unwrap();
    (pred, gt)
}
