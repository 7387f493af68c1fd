use thiserror::Error;

use crate::grassmann::Subspace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// A mathematical check failed (not a design, overlap, inequivalent parts, ...).
    Verification,
    /// A search or size budget was exhausted without a definite answer.
    Budget,
    /// Malformed input, unreadable file or bad parameters.
    Input,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not invertible")]
    NotInvertible,

    #[error("group closure exceeded the cap of {cap} elements")]
    GroupTooLarge { cap: usize },

    #[error("not a {t}-design: t-subspace {witness} lies in {count} blocks, expected {expected}")]
    NotADesign {
        t: usize,
        witness: Subspace,
        count: u64,
        expected: u64,
    },

    #[error("design has lambda {found}, declared {declared}")]
    LambdaMismatch { declared: u64, found: u64 },

    #[error("block count identity fails: lambda*[v,t] = {lhs} but |B|*[k,t] = {rhs}")]
    CountIdentity { lhs: u128, rhs: u128 },

    #[error("designs {first} and {second} share block {witness}")]
    Overlap {
        first: usize,
        second: usize,
        witness: Subspace,
    },

    #[error("large set covers {found} blocks, the Grassmannian has {expected}")]
    Coverage { found: u64, expected: u64 },

    #[error("member design {index} failed verification: {source}")]
    MemberDesign {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parts {first} and {second} are not {t}-equivalent: {witness} has counts {count_first} vs {count_second}")]
    NotEquivalent {
        t: i32,
        first: usize,
        second: usize,
        witness: Subspace,
        count_first: u64,
        count_second: u64,
    },

    #[error("representative {index} {record} has rank {rank}, expected {expected}")]
    RankDeficient {
        index: usize,
        record: String,
        rank: usize,
        expected: usize,
    },

    #[error("orbits of representatives {first} and {second} overlap")]
    OverlappingOrbits { first: usize, second: usize },

    #[error("{params} is not admissible: N does not divide [{top} choose {bottom}]_q = {value}")]
    Inadmissible {
        params: String,
        top: u32,
        bottom: u32,
        value: String,
    },

    #[error("missing large-set data for leaves: {}", .0.join(", "))]
    MissingLeaves(Vec<String>),

    #[error("refusing to materialize {count} subspaces (cap {cap}); pass force to override")]
    SizeGuard { count: String, cap: u64 },

    #[error("search budget exhausted: {0}")]
    Budget(String),

    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NotADesign { .. }
            | Error::LambdaMismatch { .. }
            | Error::CountIdentity { .. }
            | Error::Overlap { .. }
            | Error::Coverage { .. }
            | Error::MemberDesign { .. }
            | Error::NotEquivalent { .. }
            | Error::RankDeficient { .. }
            | Error::OverlappingOrbits { .. }
            | Error::Inadmissible { .. } => ErrorClass::Verification,
            Error::Budget(_) | Error::SizeGuard { .. } | Error::GroupTooLarge { .. } => {
                ErrorClass::Budget
            }
            _ => ErrorClass::Input,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(path: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
