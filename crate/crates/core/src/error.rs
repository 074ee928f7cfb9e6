use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error(
        "singular matrix: pivot {pivot} has magnitude {magnitude:e} below threshold {threshold:e}"
    )]
    Singular {
        pivot: usize,
        magnitude: f64,
        threshold: f64,
    },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("matrix is not Hermitian (max |S - S^dagger| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary (max |S^dagger S - I| = {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("degenerate coupling: rank(S + I) = {m} for n = {n}, expected 1..n-1")]
    DegenerateCoupling { m: usize, n: usize },

    #[error("inverse formulas disagree by {residual:e}")]
    FormulaDisagreement { residual: f64 },

    #[error("no {family} construction for n = {n}; supported sizes: {supported}")]
    ConstructionUnavailable {
        family: &'static str,
        n: usize,
        supported: String,
    },

    #[error("resonance{}: kL = {kl} is within threshold of {multiple}*pi", edge.map(|(i, j)| format!(" on edge ({i}, {j})")).unwrap_or_default())]
    Resonance {
        edge: Option<(usize, usize)>,
        kl: f64,
        multiple: u64,
    },

    #[error("invalid sweep range: {0}")]
    InvalidRange(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("internal error: {0}")]
    Internal(String),
}
