use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("degenerate extent on axis {axis}")]
    DegenerateExtent { axis: usize },
    #[error("weight exponent {alpha} is not locally integrable in dimension {dim}")]
    WeightNotIntegrable { alpha: f64, dim: usize },
    #[error("space would have {nodes} nodes, above the cap of {cap}")]
    NodeBudgetExceeded { nodes: usize, cap: usize },
    #[error("empty grid")]
    EmptyGrid,
    #[error("unknown node id {0}")]
    UnknownNode(u64),
    #[error("duplicate node id {0}")]
    DuplicateNode(u64),
    #[error("nonpositive {what}")]
    NonpositiveWeight { what: &'static str },
    #[error("self-loop on node {0}")]
    SelfLoop(u64),
    #[error("graph is not connected")]
    Disconnected,
    #[error("operation needs node positions but the space has none")]
    NoPositions,
    #[error("exponent p = {0} outside the supported range [1.001, 64]")]
    ExponentOutOfRange(f64),
    #[error("infinite field value on node {node} enters the energy")]
    InfiniteEnergyInput { node: usize },
    #[error("obstacle problem is infeasible: {0}")]
    Infeasible(String),
    #[error("domain complement is empty; the problem has no boundary")]
    EmptyComplement,
    #[error("solver stopped after {iterations} iterations with residual {residual:e}")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("condenser set is not contained in its domain")]
    EnotInA,
    #[error("geometry violation: {0}")]
    GeometryViolation(String),
    #[error("no scale is resolvable on the grid")]
    ScaleUnderflow,
    #[error("descriptor cannot be rescaled about the base point: {0}")]
    DescriptorNotDilatable(String),
    #[error("report {index} is not classified thin")]
    NotThin { index: usize },
    #[error("report has {have} terms, policy needs {need}")]
    TooFewTerms { have: usize, need: usize },
    #[error("tail budget cannot be met for report {index}")]
    BudgetInfeasible { index: usize },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("capacity does not shrink below 2^(-{level}p) at resolvable radii")]
    ShrinkTooSlow { level: usize },
}
