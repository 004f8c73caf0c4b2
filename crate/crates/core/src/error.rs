use thiserror::Error;

/// Errors raised by the operator model, its checkers and its spec loaders.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("support budget exceeded: {size} entries > limit {limit}")]
    SupportBudget { size: usize, limit: usize },

    #[error("malformed spec at {field}: {message}")]
    Spec { field: String, message: String },

    #[error("parent map contains a cycle through vertex `{0}`")]
    CyclicParent(String),

    #[error("vertex `{0}` is a leaf and no extension rule is given")]
    LeafWithoutExtension(String),

    #[error("zero weight at `{0}`")]
    ZeroWeight(String),

    #[error("unknown index key `{0}`")]
    UnknownKey(String),

    #[error("`{v}` is not a descendant of `{u}`")]
    NotDescendant { u: String, v: String },

    #[error("operator is not left-invertible: inf of the Gram diagonal is {inf_d:e}")]
    NotLeftInvertible { inf_d: f64 },

    #[error("branching vertex `{0}` has a zero weight vector")]
    DegenerateBranching(String),

    #[error("branching vertex `{vertex}` lies outside the window of depth {depth}")]
    BranchingOutsideWindow { vertex: String, depth: i64 },

    #[error("subspace atoms are linearly dependent or empty")]
    DependentAtoms,

    #[error("requires a rooted tree")]
    RequiresRootedTree,

    #[error("orbit exploration exhausted budget {0}")]
    OrbitBudget(usize),

    #[error("point `{0}` lies on a cycle-free orbit without a basepoint")]
    Unclassifiable(String),

    #[error("intertwining violated at coefficient index {index}: deviation {deviation:e}")]
    Intertwining { index: i64, deviation: f64 },

    #[error("coefficient index {0} is contaminated by window truncation")]
    Contaminated(i64),

    #[error("window too small: need at least {need} coefficients per side, have {have}")]
    WindowTooSmall { need: usize, have: usize },

    #[error("coefficient window is not exact; enlarge the bounds")]
    InexactWindow,

    #[error("vector is not in the domain of the multiplier at this truncation (residual {residual:e})")]
    Domain { residual: f64 },

    #[error("vector is not in the range of the shift (residual {residual:e})")]
    NotInRange { residual: f64 },

    #[error("operator does not commute with T: {violation:e} at `{witness}`")]
    NonCommuting { witness: String, violation: f64 },

    #[error("hypothesis `{check}` failed: max violation {max_violation:e}")]
    Hypothesis { check: String, max_violation: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("dense window of {0} keys exceeds the cap of 2000")]
    DenseTooLarge(usize),

    #[error("singular Gram matrix in dense Cauchy dual")]
    Singular,

    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case name of the variant, used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SupportBudget { .. } => "support_budget",
            Error::Spec { .. } => "spec",
            Error::CyclicParent(_) => "cyclic_parent",
            Error::LeafWithoutExtension(_) => "leaf_without_extension",
            Error::ZeroWeight(_) => "zero_weight",
            Error::UnknownKey(_) => "unknown_key",
            Error::NotDescendant { .. } => "not_descendant",
            Error::NotLeftInvertible { .. } => "not_left_invertible",
            Error::DegenerateBranching(_) => "degenerate_branching",
            Error::BranchingOutsideWindow { .. } => "branching_outside_window",
            Error::DependentAtoms => "dependent_atoms",
            Error::RequiresRootedTree => "requires_rooted_tree",
            Error::OrbitBudget(_) => "orbit_budget",
            Error::Unclassifiable(_) => "unclassifiable",
            Error::Intertwining { .. } => "intertwining",
            Error::Contaminated(_) => "contaminated",
            Error::WindowTooSmall { .. } => "window_too_small",
            Error::InexactWindow => "inexact_window",
            Error::Domain { .. } => "domain",
            Error::NotInRange { .. } => "not_in_range",
            Error::NonCommuting { .. } => "non_commuting",
            Error::Hypothesis { .. } => "hypothesis",
            Error::Dimension { .. } => "dimension",
            Error::DenseTooLarge(_) => "dense_too_large",
            Error::Singular => "singular",
            Error::Config(_) => "config",
        }
    }
}
