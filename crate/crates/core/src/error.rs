//! Crate-wide error type.
//!
//! One enum covers every module so errors compose across the pipeline
//! (e.g. the pseudo-label harness surfaces registration failures verbatim).
//! The CLI maps variants onto its exit-code contract: parse/I-O problems
//! are distinct from domain errors.

/// Everything that can go wrong in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A matrix failed the rigidity checks (orthonormality, det +1, bottom row).
    #[error("not a rigid transform: {0}")]
    NotRigid(String),
    /// A voxel index or sample location is outside the volume.
    #[error("out of bounds: {0}")]
    OutOfBounds(String),
    /// Malformed file content.
    #[error("parse error: {0}")]
    Parse(String),
    /// Buffer length disagrees with the declared geometry.
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    /// A point cloud ended up with no points.
    #[error("empty point cloud: {0}")]
    EmptyCloud(String),
    /// Two volumes do not share dims/spacing and cannot be compared.
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    /// A distance tolerance was not strictly positive.
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
    /// A volume is constant; correlation is undefined.
    #[error("zero variance: {0}")]
    ZeroVariance(String),
    /// An aggregate was requested over no data.
    #[error("empty input: {0}")]
    EmptyInput(String),
    /// A memory trace is too short to integrate.
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    /// A memory trace violates its invariants.
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    /// The cloud collapsed to a degenerate bounding box.
    #[error("degenerate cloud: {0}")]
    DegenerateCloud(String),
    /// Point geometry too degenerate to solve (collinear, coplanar, coincident).
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    /// Every candidate correspondence was dropped.
    #[error("no correspondences: {0}")]
    NoCorrespondences(String),
    /// No accepted pseudo-labels to build a consensus prior from.
    #[error("degenerate prior: {0}")]
    DegeneratePrior(String),
    /// Generator or config parameters outside their documented ranges.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    /// A case present on one side of a batch evaluation is missing on the other.
    #[error("missing case: {0}")]
    MissingCase(String),
    /// A ranking metric is absent from the reports.
    #[error("unknown metric: {0}")]
    UnknownMetric(String),
    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by unreadable or malformed inputs, as opposed
    /// to domain/metric errors. The CLI exits with code 2 for these.
    pub fn is_io_or_parse(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::SizeMismatch(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
