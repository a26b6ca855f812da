//! Generation and classification of bipartite two-setting, two-outcome
//! correlations.
//!
//! Behaviors come from quantum states ([`quantum`]), finite hidden-variable
//! models ([`hv`]) or by hand ([`behavior`]); [`classifier`] places them in
//! the hierarchy Local ⊆ QuantumCompatible ⊆ NoSignalling ⊆ Signalling.

// Probability tables are indexed [x][y][a][b]; explicit indices read better.
#![allow(clippy::needless_range_loop)]

pub mod behavior;
pub mod classifier;
pub mod error;
pub mod hv;
pub mod linalg;
pub mod npa;
pub mod quantum;
pub mod sampling;
pub mod simplex;
pub mod sweep;

pub use behavior::{
    chsh_all, correlation_coefficient, correlators, mix, ns_residual, validate, Behavior, Chsh,
    CorrelatorTable, NsReport,
};
pub use classifier::{classify, classify_many, ClassifierConfig, Tier, Tolerances, Verdict};
pub use error::{Error, Result};
pub use hv::{
    deterministic_vertex, evaluate, model_class, pr_box, pr_box_model, HvModel, ModelClass,
};
pub use quantum::{
    singlet_state, two_qubit_behavior, werner_state, HermitianOperator, MeasurementDirection,
    QuantumState,
};
