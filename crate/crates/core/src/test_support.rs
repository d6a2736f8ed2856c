//! Shared generators for randomized tests.

use crate::mdp::{Mdp, MdpBuilder, StateId, StochasticPolicy};
use crate::rng::Prng;

/// Small random MDP with 1..=max_actions actions per state and fanout up to
/// 3 (duplicate successor draws merge, so rows stay valid distributions).
pub(crate) fn random_mdp(rng: &mut Prng, n_states: usize, max_actions: usize) -> Mdp {
    let mut b = MdpBuilder::new(n_states).discount(rng.uniform_in(0.8, 0.99));
    for s in 0..n_states {
        let n_actions = 1 + rng.below(max_actions);
        for _ in 0..n_actions {
            let fanout = 1 + rng.below(3.min(n_states));
            let probs = rng.dirichlet(fanout);
            let row: Vec<(StateId, f64)> = probs
                .into_iter()
                .map(|p| (rng.below(n_states), p))
                .collect();
            b.add_action(s, &row);
        }
        b.set_state_reward(s, rng.uniform_in(-1.0, 1.0));
    }
    b.build().unwrap()
}

/// Like [`random_mdp`] but with a nonempty label attached to random states.
pub(crate) fn random_labeled_mdp(
    rng: &mut Prng,
    n_states: usize,
    max_actions: usize,
    label: &str,
) -> Mdp {
    let mdp = random_mdp(rng, n_states, max_actions);
    let mut b = MdpBuilder::new(mdp.n_states()).discount(mdp.discount());
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions(s) {
            let row: Vec<_> = mdp
                .transitions(s, a)
                .iter()
                .map(|t| (t.successor, t.probability))
                .collect();
            b.add_action(s, &row);
        }
        b.set_state_reward(s, mdp.state_reward(s));
    }
    let n_labeled = 1 + rng.below(n_states);
    let states: Vec<StateId> = (0..n_labeled).map(|_| rng.below(n_states)).collect();
    b.add_label(label, &states);
    b.build().unwrap()
}

/// Strictly positive random policy (a Dirichlet draw per state).
pub(crate) fn random_policy(rng: &mut Prng, mdp: &Mdp) -> StochasticPolicy {
    let rows = (0..mdp.n_states())
        .map(|s| rng.dirichlet(mdp.n_actions(s)))
        .collect();
    StochasticPolicy::from_rows(rows)
}
