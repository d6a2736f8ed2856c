//! Model checking of strategic obligations on MDPs, and gradient-based
//! modification of reward-optimal policies until they satisfy such
//! obligations while retaining high expected utility.
//!
//! The crate is organized around a small set of explicit-state types:
//! [`mdp::Mdp`] for models, [`mdp::StochasticPolicy`] for policies (the
//! parameters of the policy-induced Markov chain), and
//! [`formula::StateFormula`] for PCTL obligation content. On top of those,
//! [`checker`] answers strategic stit / strategic ought / contrary-to-duty
//! queries, [`gradients`] differentiates satisfaction probability and
//! expected utility with respect to the policy, [`synth`] searches for
//! obligation-satisfying policies, [`envs`] builds the bundled and generated
//! environments, and [`explore`] runs shielded learning with unknown rewards.

pub mod checker;
pub mod envs;
pub mod error;
pub mod explore;
pub mod formula;
pub mod gradients;
pub mod mdp;
pub mod rng;
pub mod synth;

#[cfg(test)]
pub(crate) mod test_support;

pub use error::{Error, Result};
