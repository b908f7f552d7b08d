use thiserror::Error;

/// Errors surfaced by model construction, solvers, and verification suites.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-klt cone parameters (beta0={beta0}, beta_inf={beta_inf}) outside diagnostics mode")]
    NonKlt { beta0: f64, beta_inf: f64 },

    #[error("cell count {0} must be even (even-gauge symmetrization pairs nodes across t=0)")]
    OddCells(usize),

    #[error("cell count {0} below the minimum of 16")]
    TooFewCells(usize),

    #[error("grid half-width must be positive, got {0}")]
    BadHalfWidth(f64),

    #[error("node budget exceeded: {nodes} nodes > budget {budget}")]
    ResourceGuard { nodes: usize, budget: usize },

    #[error("inadmissible potential: convexity residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    Inadmissible { residual: f64, tol: f64 },

    #[error("boundary slope {slope:.6e} outside the budget interval [0, {budget:.6e}]")]
    SlopeBudget { slope: f64, budget: f64 },

    #[error("input is not discretely convex (hull gap {0:.3e})")]
    NonConvexInput(f64),

    #[error("measures live on different grids ({0} vs {1} weights)")]
    GridMismatch(usize, usize),

    #[error("target measure concentration {max_weight:.3e} exceeds the cap {cap:.3e}")]
    ConcentrationCap { max_weight: f64, cap: f64 },

    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    Nonconvergence { residual: f64, iterations: usize },

    #[error("measure mass defect {defect:.3e} exceeds tolerance")]
    MassDefect { defect: f64 },

    #[error("negative-determinant clamp defect {defect:.3e} exceeds 1e-6 of total mass")]
    ClampDefect { defect: f64 },

    #[error("boundary atoms carry {mass:.3e} > 1e-4 mass against an atom-free reference; entropy not computed")]
    AtomMass { mass: f64 },

    #[error("weights {0} and {1} are not a conjugate pair")]
    NonConjugatePair(String, String),

    #[error("alpha = {alpha} is not below the certified lower bracket {bracket}")]
    AlphaOutsideBracket { alpha: f64, bracket: f64 },

    #[error("delta = {delta} outside the admissible window ({lo}, {hi})")]
    DeltaWindow { delta: f64, lo: f64, hi: f64 },

    #[error("operation requires a {expected} model")]
    WrongModelKind { expected: &'static str },

    #[error("shift {shift} pushes the translated potential off-grid (|shift| must stay below T - 2 = {limit})")]
    ShiftOffGrid { shift: f64, limit: f64 },

    #[error("flow step violates the CFL guard: dt*max|rhs| = {value:.3e} > 0.5")]
    FlowCfl { value: f64 },

    #[error("explicit flow requires strictly positive interior Monge-Ampere mass (min {min_mass:.3e})")]
    NonPositiveMass { min_mass: f64 },

    #[error("config error: {0}")]
    InvalidConfig(String),

    #[error("incompatible models across runs: {0}")]
    IncompatibleRuns(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
