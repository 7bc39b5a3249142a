//! Causal effect identification from DAGs with context-specific edge labels.
//!
//! The library decides whether an interventional distribution `P_t(S)` is
//! computable from the observational distribution given
//!
//! 1. a causal DAG with latent variables, and
//! 2. per-context sets of directed edges that vanish for particular
//!    realizations of *control variables* (observed root vertices).
//!
//! On success it emits a symbolic estimand over observational probability
//! terms; an exact rational discrete-model oracle validates every emitted
//! formula against the truncated-factorization interventional distribution.
//!
//! Module map:
//! - [`graph`]: immutable DAGs, variable universe, the graph text format.
//! - [`sep`]: d-separation, inducing paths, do-calculus rule preconditions.
//! - [`labels`]: control specs, label sets, maximal-regular normalization.
//! - [`admg`]: latent projection onto observed vertices, c-components.
//! - [`estimand`]: the estimand expression tree, rendering and parsing.
//! - [`ident`]: identification of `P_t(S)` from a projected mixed graph.
//! - [`csi`]: identification from (graph, label set), label learning.
//! - [`dist`]: exact discrete models, joints, interventions, evaluation.
//! - [`bench`]: the random-graph benchmark harness.

pub mod admg;
pub mod bench;
pub mod csi;
pub mod dist;
pub mod error;
pub mod estimand;
pub mod graph;
pub mod ident;
pub mod labels;
pub mod sep;

pub use admg::Admg;
pub use csi::{identify_csi, learn_labels, learnable};
pub use dist::{DiscreteModel, JointTable};
pub use error::{Error, Result};
pub use estimand::{Estimand, RenderStyle};
pub use graph::{CausalGraph, Context, Edge, Universe, VarId, VariableDecl};
pub use ident::identify;
pub use labels::{ControlSpec, LabelSet};
