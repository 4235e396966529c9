//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

/// Failure modes of the exact computations.
///
/// Structural errors (bad index sets, dimension mismatches) are kept apart
/// from genuine incompatibilities (a pair of flags in a forbidden relative
/// position, an automorphism outside its Stokes group), since validators
/// report the two differently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Operands have incompatible shapes (ambient dimensions, index sets).
    Shape(String),
    /// A precondition on the mathematical data failed.
    Invalid(String),
    /// Two gradings admit no common refining order; carries a certificate.
    Incompatible(String),
    /// A matrix expected to be unipotent/nilpotent is not.
    NotUnipotent(String),
    /// An angle comparison mixed bounded and unbounded angles.
    AngleKind,
    /// Named generator missing from a representation.
    UnknownGenerator(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(s) => write!(f, "shape mismatch: {s}"),
            Error::Invalid(s) => write!(f, "invalid data: {s}"),
            Error::Incompatible(s) => write!(f, "incompatible gradings: {s}"),
            Error::NotUnipotent(s) => write!(f, "not unipotent: {s}"),
            Error::AngleKind => write!(f, "cannot compare bounded with unbounded angles"),
            Error::UnknownGenerator(s) => write!(f, "unknown generator: {s}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
