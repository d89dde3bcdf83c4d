use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("element {element} does not belong to {semigroup}")]
    NotAnElement { element: String, semigroup: String },

    #[error("semigroup rank must be positive")]
    ZeroRank,

    #[error("enumeration would produce {count} items, above the cap of {cap}")]
    EnumerationCap { count: u128, cap: usize },

    #[error("foundation set must be non-empty")]
    EmptyFoundationSet,

    #[error("subset of size {size} exceeds the cap of {cap}")]
    SubsetCap { size: usize, cap: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("{what} is not unitary (residual {residual:.3e})")]
    NotUnitary { what: String, residual: f64 },

    #[error("{what} does not preserve the block structure (residual {residual:.3e})")]
    NotBlockPreserving { what: String, residual: f64 },

    #[error("{what}: {reason}")]
    Unsupported { what: String, reason: String },

    #[error("input is not in the range of the inverse endomorphism (residual {residual:.3e})")]
    NotConformable { residual: f64 },

    #[error("element is not in the corner E_p A E_q (residual {residual:.3e})")]
    NotInCorner { residual: f64 },

    #[error("map is not unital (residual {residual:.3e})")]
    NotUnital { residual: f64 },

    #[error("map is not self-adjoint (residual {residual:.3e})")]
    NotSelfAdjoint { residual: f64 },

    #[error("{what} is not a contraction (norm {norm})")]
    NotContractive { what: String, norm: f64 },

    #[error("generators {i} and {j} do not commute (residual {residual:.3e})")]
    NotCommuting { i: usize, j: usize, residual: f64 },

    #[error("pair is not covariant for generator {generator} (residual {residual:.3e})")]
    NotCovariant { generator: usize, residual: f64 },

    #[error("lifted map is not consistent under refinement (residual {residual:.3e})")]
    Inconsistent { residual: f64 },

    #[error(
        "map is not completely positive (Choi eigenvalue {min_eigenvalue:.6e} in block {block})"
    )]
    NotCompletelyPositive { min_eigenvalue: f64, block: usize },

    #[error(
        "Gram matrix is not positive: eigenvalue {min_eigenvalue:.6e} (largest {lambda_max:.6e})"
    )]
    NotPositive {
        min_eigenvalue: f64,
        lambda_max: f64,
        witness: Vec<(String, f64)>,
    },

    #[error("problem dimension {dim} exceeds the cap of {cap}")]
    ResourceCap { dim: usize, cap: usize },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
