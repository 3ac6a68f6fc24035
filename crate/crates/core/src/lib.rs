//! Meta-path discovery for typed graphs by filling masked sentences.
//!
//! Node pairs are verbalized as prompts such as
//! `asthma [MASK] [MASK] . It [MASK] dupilumab`, a scorer fills the masks
//! with edge-type and node names, and the resulting typed paths are counted
//! into ranked meta-paths. Those drive random walks for skip-gram node
//! embeddings, which are evaluated on link prediction and node
//! classification.
//!
//! The scorer is a [`lm::ScorerBackend`]: either the built-in n-gram model
//! ([`lm::BuiltinLm`]) or an HTTP service ([`lm::RemoteBackend`]).
//! [`pipeline::Run`] chains every stage with on-disk artifacts; the
//! `hinfill` binary exposes the stages as subcommands.

pub mod classifier;
pub mod cli;
pub mod config;
pub mod embed;
pub mod error;
pub mod hin;
pub mod induction;
pub mod linalg;
pub mod lm;
pub mod pipeline;
pub mod sampler;
pub mod synthetic;
pub mod tasks;
pub mod tokens;
pub mod verbalize;
