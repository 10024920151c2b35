use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kinetic energy must be positive, got {0} keV")]
    NonPositiveEnergy(f64),

    #[error("beam parameter is not physical: Im[q] = {0} m must be positive")]
    NonPhysicalBeam(f64),

    #[error("focal length must be non-zero and finite, got {0} m")]
    InvalidFocalLength(f64),

    #[error("drift length must be finite and non-negative, got {0} m")]
    InvalidDrift(f64),

    #[error("quadrupole axis {axis} rad is not aligned with the astigmatic frame {frame} rad")]
    AxisMismatch { axis: f64, frame: f64 },

    #[error("rotator requires a stigmatic beam, relative q mismatch is {0:e}")]
    AstigmaticRotation(f64),

    #[error("quadrupole spacing must be positive and finite, got {0} m")]
    InvalidSpacing(f64),

    #[error(
        "relative phase {0} rad is an edge case of the two-quadrupole shifter; \
         use design_edge (QPs off for 0, line focus for π) or chain two shifters"
    )]
    EdgePhase(f64),

    #[error("phase {0} rad is not one of the edge cases 0 or π")]
    NotAnEdgePhase(f64),

    #[error("sign of f1 ({f1} m) must match sign of u ({u}) for this phase")]
    SignMismatch { f1: f64, u: f64 },

    #[error("requested Rayleigh range {target} m is outside the attainable range [{min}, {max}] m")]
    UnattainableRayleigh { target: f64, min: f64, max: f64 },

    #[error("design is over-constrained: only one free parameter may be chosen, got {0}")]
    Overconstrained(usize),

    #[error("chain needs at least one stage")]
    EmptyChain,

    #[error("stage {index} output does not match stage {next} input (relative residual {residual:e}); insert a relay")]
    IncompatibleStages {
        index: usize,
        next: usize,
        residual: f64,
    },

    #[error("relay cannot map the beam: {0}")]
    RelayUnattainable(String),

    #[error("angle {name} = {value} rad is outside {range}")]
    AngleOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("state is not normalized: |a|^2 + |b|^2 = {0}")]
    NotNormalized(f64),

    #[error("matrix is not unitary: ||U U^dagger - I||_F = {0:e}")]
    NotUnitary(f64),

    #[error("grid size {0} must be a power of two")]
    GridSize(usize),

    #[error("grids are incompatible: {0}")]
    GridMismatch(String),

    #[error("sampling validity violated: {0}")]
    Sampling(String),

    #[error("reference beam does not describe the field: residual power {0} exceeds 0.5")]
    InvalidReference(f64),

    #[error("field dump format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by numerical validity limits (grid sampling)
    /// rather than by invalid inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Sampling(_))
    }
}
