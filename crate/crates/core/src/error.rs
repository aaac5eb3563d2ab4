use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("field data: {0}")]
    FieldData(String),
    #[error("defining polynomial for p={p}, f={f} is reducible mod p")]
    Reducible { p: u64, f: usize },
    #[error("no defining polynomial for p={p}, f={f} in the field table")]
    UnknownField { p: u64, f: usize },
    #[error("p={0} is not an odd prime")]
    BadPrime(u64),
    #[error("zero residue has no Teichmuller lift")]
    ZeroResidue,
    #[error("element is not a unit")]
    NotUnit,
    #[error("level {got} is below the required level {need}")]
    LevelTooLow { got: u32, need: u32 },
    #[error("field mismatch: {0}")]
    FieldMismatch(String),
    #[error("{0} is not coprime to the ambient root order {1}")]
    NotCoprime(i64, u64),
    #[error("inversion of zero")]
    DivisionByZero,
    #[error("inverse not supported in degree {0} (cap {1})")]
    InverseTooLarge(u64, u64),
    #[error("enumeration of {count} items exceeds the cap {cap}")]
    CapExceeded { count: u64, cap: u64 },
    #[error("unramified character has no epsilon factor in this library")]
    Unramified,
    #[error("unsupported representation: {0}")]
    UnsupportedRep(String),
    #[error("invalid representation data: {0}")]
    InvalidRep(String),
    #[error("l = {l} outside [0, {n}]")]
    LevelOutOfRange { l: i64, n: u32 },
    #[error("matrix is not invertible")]
    Singular,
    #[error("p-adic precision exhausted at B = {0}")]
    PrecisionExhausted(u32),
    #[error("no cell witness found: {0}")]
    NoWitness(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
