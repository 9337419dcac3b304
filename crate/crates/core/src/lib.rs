//! Information directed sampling and Thompson sampling for Bernoulli bandits
//! with graph feedback.
//!
//! Playing an arm reveals its reward and, depending on the feedback model,
//! the rewards of neighbouring arms. Feedback is either a graph known
//! before each decision or an Erdős–Rényi graph realised afterwards, in
//! which every other arm is observed with probability `r_t`.
//!
//! The crate is organised as:
//!
//! - [`graph`]: adjacency matrices, feedback models and clique covers.
//! - [`posterior`]: grid-based Beta posteriors and the per-round
//!   statistics `α`, `Δ`, `h`.
//! - [`solvers`]: the ratio minimisation and the constrained LP.
//! - [`policy`]: TS-N, IDS-N, IDSN-LP, IDS-LP and the UCB baselines.
//! - [`sim`]: trials, experiments, regret bounds and the invariant monitor.
//! - [`oracle`]: slow reference implementations used by the tests.
//! - [`config`] and [`report`]: config files and CSV output.
//!
//! All entropies and information quantities are in nats.
//!
//! ```
//! use ids_graph::graph::{Adjacency, FeedbackModel};
//! use ids_graph::policy::PolicyId;
//! use ids_graph::posterior::BetaParams;
//! use ids_graph::sim::{run_trial, TrialSpec};
//!
//! let model = FeedbackModel::fixed_graph(Adjacency::two_clique_bowtie());
//! let prior = vec![BetaParams::uniform(); 5];
//! let spec = TrialSpec {
//!     policy: PolicyId::IdsN,
//!     model: &model,
//!     prior: &prior,
//!     horizon: 50,
//!     grid_size: 200,
//!     monitor: true,
//! };
//! let outcome = run_trial(&spec, 7).unwrap();
//! assert_eq!(outcome.curve.instant.len(), 50);
//! assert!(outcome.monitor.is_clean());
//! ```

pub mod config;
pub mod error;
pub mod graph;
pub mod oracle;
pub mod policy;
pub mod posterior;
pub mod report;
pub mod sim;
pub mod solvers;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/feedback.md")]
    mod feedback {}
    #[doc = include_str!("../../../book/src/posterior.md")]
    mod posterior {}
    #[doc = include_str!("../../../book/src/policies.md")]
    mod policies {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
