//! Translational collaborative metric learning for implicit feedback.
//!
//! Users and items live as points in a shared metric space. Instead of
//! pinning each user to a single point, every user-item pair gets a
//! translation vector built from neighborhood information — the element-wise
//! product of the user's mean item embedding and the item's mean user
//! embedding — and the pair is scored by the negated squared Euclidean
//! distance between the translated user and the item:
//!
//! ```text
//! s(u,i) = -||alpha_u + r_ui - beta_i||^2,   r_ui = alpha_u_nbr (.) beta_i_nbr
//! ```
//!
//! Training minimizes a margin ranking loss over sampled (user, positive,
//! negative) triples plus two regularizers (neighborhood pull and translated
//! distance pull), with plain mini-batch SGD and unit-ball projection of the
//! embedding tables. Evaluation follows the leave-one-out protocol: each
//! user's held-out item is ranked against sampled non-interacted candidates
//! and scored with HR\@N and NDCG\@N.
//!
//! The crate ships four scoring variants behind one interface: `transcf`
//! (the full model), `transcf-dot` (inner-product scoring ablation),
//! `transcf-alt` (translations from raw instead of neighborhood embeddings)
//! and `cml` (no translations), plus diagnostics that measure how often the
//! learned translations move users closer to items and exports for
//! downstream classification or visualization of the translation vectors.
//!
//! See the `examples/` directory for runnable walkthroughs of every major
//! capability; the `transcf` binary wraps the same functionality as
//! `split` / `train` / `evaluate` / `analyze` / `export` subcommands.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod embed;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod model;
pub mod synthetic;
pub mod trainer;

pub use dataset::{load_interactions, InteractionDataset, SplitDataset, TrainTriple};
pub use embed::{EmbeddingTable, HyperParams, ModelState, Variant};
pub use error::{Error, Result};
pub use eval::{evaluate, EvalConfig, EvalReport, Which};
pub use model::{hinge_term, objective, score, translation, LossTerms};
pub use trainer::{grid_search, train, GridSpec, TrainConfig, TrainLog};
