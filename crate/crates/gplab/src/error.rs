use thiserror::Error;

/// Errors surfaced by grid construction, discrete calculus, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("node {node}: stencil exits the domain mask ({detail})")]
    StencilExitsMask { node: usize, detail: String },

    #[error("node {node}: insufficient neighbors for {op}")]
    InsufficientNeighbors { node: usize, op: &'static str },

    #[error("ball at {center:?} radius {radius} contains only {count} nodes (need {need})")]
    TooFewBallNodes {
        center: [f64; 3],
        radius: f64,
        count: usize,
        need: usize,
    },

    #[error("matrix not positive definite{}", node.map(|n| format!(" at node {n}")).unwrap_or_default())]
    NotPositiveDefinite { node: Option<usize> },

    #[error("zero direction: eta = 0 with epsilon = 0")]
    ZeroDirection,

    #[error("singular branch requires epsilon > 0 (gamma <= 0)")]
    SingularNeedsEpsilon,

    #[error("n = {0} <= 2: Cordes condition is equivalent to uniform ellipticity, no finite p-threshold")]
    CordesDimensionTooSmall(usize),

    #[error("linear solver {kind} after {iters} iterations (last relative residual {residual:.3e})")]
    LinearSolveFailed {
        kind: &'static str,
        iters: usize,
        residual: f64,
    },

    #[error("outer iteration diverged: update sup-norm grew for {grow_steps} consecutive steps (trace: {trace:?})")]
    OuterDiverged { grow_steps: usize, trace: Vec<f64> },

    #[error("outer iteration did not converge in {max_iter} steps (last update {last_update:.3e})")]
    OuterMaxIter { max_iter: usize, last_update: f64 },

    #[error("rank-deficient node set for plane fit at {center:?} radius {radius}")]
    RankDeficientFit { center: [f64; 3], radius: f64 },

    #[error("field i/o: {0}")]
    FieldIo(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
