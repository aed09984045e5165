//! Core data model and classical algorithms for vehicle routing on
//! directed complete multigraphs: instances with parallel edges carrying
//! attribute vectors, per-variant route evaluation, seeded instance
//! generators, Chebyshev/linear scalarization with Pareto archives and
//! hypervolume, exact and greedy fixed-sequence arc selection, and the
//! classical baseline heuristics.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod fsasp;
pub mod gen;
pub mod instance;
pub mod json;
pub mod pareto;
pub mod route;

pub use error::CoreError;
pub use eval::{cheapest_edge_matrix, evaluate_route, RouteEvaluation};
pub use instance::{EdgeAttr, MultigraphInstance, NodeAttrs, ProblemSpec, Variant};
pub use pareto::{chebyshev_cost, linear_cost, ParetoArchive, Preference};
pub use route::Route;
