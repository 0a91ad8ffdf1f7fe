use thiserror::Error;

/// Errors produced by the exact-arithmetic pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("D = {0} is not square-free")]
    NotSquareFree(u64),
    #[error("D must be a positive square-free integer, got {0}")]
    InvalidD(u64),
    #[error("D = {0} exceeds the supported range (D <= 200)")]
    UnsupportedD(u64),
    #[error("precision must be at least 6 decimal digits, got {0}")]
    InvalidPrecision(u32),
    #[error("the zero ideal is not allowed here")]
    ZeroIdeal,
    #[error("the unit ideal is not allowed here")]
    UnitIdeal,
    #[error("full enumeration of SL2(O/a) needs N(a) <= {cap}, got N(a) = {norm}")]
    EnumerationCap { norm: String, cap: u64 },
    #[error("cusp-count formula needs -4 outside the level ideal; use the orbit oracle instead")]
    FormulaBelowThreshold,
    #[error("matrix is not unimodular (det != 1)")]
    NonUnimodular,
    #[error("invariant vector failed the fixed-space check at cusp {0} (wrong cusp matrix?)")]
    FixedSpaceCheck(usize),
    #[error("no presentation data shipped for D = {0}")]
    MissingPresentation(u64),
    #[error("relator {index} ({word}) evaluates to a non-identity matrix")]
    RelatorEvaluation { index: usize, word: String },
    #[error("coset graph is not transitive: reached {reached} of {expected} cosets")]
    CosetGraphNotTransitive { reached: usize, expected: usize },
    #[error("evaluated boundary composite d1*d2 is nonzero: presentation or evaluation bug")]
    CompositeNonzero,
    #[error("evaluated matrix width {width} exceeds the column cap {cap}")]
    SizeCap { width: usize, cap: usize },
    #[error("peripheral classes span rank {got}, expected {expected}")]
    PeripheralRankDeficient { got: usize, expected: usize },
    #[error("coinvariants have nonzero free rank {0} for a nontrivial weight")]
    NonzeroInvariants(usize),
    #[error("zeta evaluation needs s >= 3, got {0}")]
    SBelowThree(f64),
    #[error("weight must be at least 3, got {0}")]
    WeightBelowThree(u32),
    #[error("weight must be at least 1, got {0}")]
    WeightBelowOne(u32),
    #[error("no ideal-class data shipped for D = {0}")]
    MissingClassData(u64),
    #[error("invalid tower: {0}")]
    InvalidTower(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
