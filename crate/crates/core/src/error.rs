use thiserror::Error;

use crate::linalg::IVec;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not invertible")]
    NotInvertible,
    #[error("borderline, refine: spectral radius of the inverse is {0} (within 1e-9 of 1)")]
    Borderline(f64),
    #[error("matrix is not expanding (spectral radius of the inverse {0})")]
    NotExpanding(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("invalid digit set: {0}")]
    InvalidDigits(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("depth {requested} is beyond the addressable word (max {available})")]
    DepthOutOfRange { requested: usize, available: usize },
    #[error("depth too large: {atoms} atoms exceed the cap of {cap}")]
    DepthTooLarge { atoms: u128, cap: u128 },
    #[error("unknown pair `{0}`")]
    UnknownPair(String),
    #[error("pair `{0}` has no attached spectrum")]
    MissingSpectrum(String),
    #[error("pair `{0}` is not admissible")]
    NotAdmissible(String),
    #[error("tolerance breach: exact verdict {exact}, float verdict {float} (max modulus {modulus:e})")]
    ToleranceBreach { exact: bool, float: bool, modulus: f64 },
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    #[error("level gap too small at level {level}: |(R^T)^-1 lambda| = {value} >= gamma/2 = {bound} for lambda = {lambda:?}; try a larger depth")]
    LevelGapTooSmall {
        level: usize,
        lambda: IVec,
        value: f64,
        bound: f64,
    },
    #[error("equi-positivity correction not found at level {level} for lambda = {lambda:?} (best value {best:e} < eps {eps:e})")]
    CorrectionNotFound {
        level: usize,
        lambda: IVec,
        best: f64,
        eps: f64,
    },
    #[error("pair is not in the diagonal digit-box class")]
    NotDiagonalClass,
    #[error("cannot bound lattice translates: {0}")]
    UnboundedSupport(String),
    #[error("dimension {0} too large for vertex enumeration (max 20)")]
    TooManyVertices(usize),
    #[error("raster output needs dimension 1 or 2, got {0}")]
    RasterDimension(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty sample list")]
    EmptySamples,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
