//! Nonlinear condenser capacities at desk scale.
//!
//! * [`gauge`]: symmetric gauge functions (`lp`, Lorentz `(p,1)`, weight
//!   sequences) on vectors and on singular values, with subgradients.
//! * [`graph`]: generator-labeled graphs, Cayley-graph balls and the discrete
//!   gradient seminorms.
//! * [`capacity`]: graph condenser capacities, profiles over growing balls and
//!   a hyperbolicity probe; [`oracle`] holds the independent exact routes
//!   (harmonic solve for `p = 2`, minimum cut for `l1`).
//! * [`modulus`]: the matrix condenser modulus
//!   `inf max_j |[T_j, X]|` over `0 <= X <= I, XP = P, XQ = 0`, and the
//!   graph/matrix transfer check.
//! * [`covering`]: cell sets, covering functionals and the commutator
//!   certificate for commuting multiplication tuples.

pub mod capacity;
pub mod covering;
pub mod error;
pub mod gauge;
pub mod graph;
pub mod modulus;
pub mod oracle;
pub mod subgradient;

pub use capacity::{
    capacity_profile, hyperbolicity_probe, solve_condenser, solve_condenser_from,
    CondenserProblem, ProbeReport, ProfilePoint, SolveReport, Verdict,
};
pub use error::{Error, Result};
pub use gauge::{evaluate_singular_norm, make_lorentz_weights, subgradient_singular, NormingFunction};
pub use graph::{
    cayley_ball, generator_difference, gradient_seminorm, path_graph, GradientCombiner, Group,
    LabeledGraph, VertexFunction,
};
pub use modulus::{
    diag_compress, project_feasible, solve_modulus, transfer_compare, truncated_shift_tuple,
    OperatorTuple, ProjectionPair, TransferReport, TupleKind,
};
pub use subgradient::{SolveOptions, StepRule};
