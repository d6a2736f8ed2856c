//! Explicit finite MDPs, stochastic policies, and policy-induced Markov chains.
//!
//! States are dense integers `0..n_states`; actions are dense per state.
//! Transition data is stored flat (CSR-style offsets) so that sweeps over the
//! multi-million-transition benchmark models stay cache friendly. All types
//! are immutable after construction and safe to share across threads.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub type StateId = usize;
pub type ActionId = usize;

/// Row-sum slack tolerated by the validator and by policy checks.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub successor: StateId,
    pub probability: f64,
}

/// Explicit MDP: transitions, rewards, atomic-proposition labels, initial
/// state, discount, and the set of absorbing states.
#[derive(Debug, Clone)]
pub struct Mdp {
    n_states: usize,
    initial_state: StateId,
    discount: f64,
    /// `sa_offsets[s]..sa_offsets[s + 1]` indexes state `s`'s action block.
    sa_offsets: Vec<usize>,
    /// `tr_offsets[p]..tr_offsets[p + 1]` indexes pair `p`'s transitions.
    tr_offsets: Vec<usize>,
    transitions: Vec<Transition>,
    state_rewards: Vec<f64>,
    /// Optional reward per state-action pair, indexed like `tr_offsets`.
    sa_rewards: Option<Vec<f64>>,
    /// Label name -> sorted state ids.
    labels: BTreeMap<String, Vec<StateId>>,
    absorbing: Vec<bool>,
}

impl Mdp {
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn initial_state(&self) -> StateId {
        self.initial_state
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn n_actions(&self, s: StateId) -> usize {
        self.sa_offsets[s + 1] - self.sa_offsets[s]
    }

    /// Flat index of the pair `(s, a)`.
    #[inline]
    pub fn pair_index(&self, s: StateId, a: ActionId) -> usize {
        debug_assert!(a < self.n_actions(s));
        self.sa_offsets[s] + a
    }

    pub fn n_pairs(&self) -> usize {
        *self.sa_offsets.last().unwrap()
    }

    #[inline]
    pub fn transitions(&self, s: StateId, a: ActionId) -> &[Transition] {
        let p = self.pair_index(s, a);
        &self.transitions[self.tr_offsets[p]..self.tr_offsets[p + 1]]
    }

    pub fn n_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn state_reward(&self, s: StateId) -> f64 {
        self.state_rewards[s]
    }

    pub fn state_rewards(&self) -> &[f64] {
        &self.state_rewards
    }

    /// State-action reward component; 0 when the model has none.
    pub fn sa_reward(&self, s: StateId, a: ActionId) -> f64 {
        match &self.sa_rewards {
            Some(r) => r[self.pair_index(s, a)],
            None => 0.0,
        }
    }

    pub fn has_sa_rewards(&self) -> bool {
        self.sa_rewards.is_some()
    }

    pub fn is_absorbing(&self, s: StateId) -> bool {
        self.absorbing[s]
    }

    pub fn absorbing_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.n_states).filter(|&s| self.absorbing[s])
    }

    pub fn labels(&self) -> &BTreeMap<String, Vec<StateId>> {
        &self.labels
    }

    pub fn label_states(&self, name: &str) -> Option<&[StateId]> {
        self.labels.get(name).map(|v| v.as_slice())
    }

    /// Membership mask for a label; errors on unknown names.
    pub fn label_mask(&self, name: &str) -> Result<Vec<bool>> {
        let states = self
            .labels
            .get(name)
            .ok_or_else(|| Error::UnknownAtom(name.to_string()))?;
        let mut mask = vec![false; self.n_states];
        for &s in states {
            mask[s] = true;
        }
        Ok(mask)
    }

    /// Copy of this MDP with the state reward vector replaced. Used when
    /// evaluating gradients against estimated rewards.
    pub fn with_state_rewards(&self, rewards: Vec<f64>) -> Mdp {
        assert_eq!(rewards.len(), self.n_states);
        let mut m = self.clone();
        m.state_rewards = rewards;
        m
    }
}

/// Incremental construction of an [`Mdp`]. Structural impossibilities
/// (out-of-range ids) are rejected here; semantic invariants (row sums,
/// absorbing self-loops) are the business of [`validate_mdp`] so that
/// malformed models can still be represented and reported on.
#[derive(Debug, Clone)]
pub struct MdpBuilder {
    n_states: usize,
    initial_state: StateId,
    discount: f64,
    actions: Vec<Vec<Vec<Transition>>>,
    state_rewards: Vec<f64>,
    sa_rewards: Vec<Vec<f64>>,
    any_sa_reward: bool,
    labels: BTreeMap<String, Vec<StateId>>,
    absorbing: Vec<bool>,
}

impl MdpBuilder {
    pub fn new(n_states: usize) -> Self {
        Self {
            n_states,
            initial_state: 0,
            discount: 0.95,
            actions: vec![Vec::new(); n_states],
            state_rewards: vec![0.0; n_states],
            sa_rewards: vec![Vec::new(); n_states],
            any_sa_reward: false,
            labels: BTreeMap::new(),
            absorbing: vec![false; n_states],
        }
    }

    pub fn initial_state(mut self, s: StateId) -> Self {
        self.initial_state = s;
        self
    }

    pub fn discount(mut self, gamma: f64) -> Self {
        self.discount = gamma;
        self
    }

    /// Appends an action to `s` and returns its id. Duplicate successors are
    /// merged by summing probabilities.
    pub fn add_action(&mut self, s: StateId, transitions: &[(StateId, f64)]) -> ActionId {
        let mut merged: BTreeMap<StateId, f64> = BTreeMap::new();
        for &(t, p) in transitions {
            *merged.entry(t).or_insert(0.0) += p;
        }
        self.actions[s].push(
            merged
                .into_iter()
                .map(|(successor, probability)| Transition {
                    successor,
                    probability,
                })
                .collect(),
        );
        self.sa_rewards[s].push(0.0);
        self.actions[s].len() - 1
    }

    pub fn set_state_reward(&mut self, s: StateId, r: f64) {
        self.state_rewards[s] = r;
    }

    pub fn set_sa_reward(&mut self, s: StateId, a: ActionId, r: f64) {
        self.sa_rewards[s][a] = r;
        self.any_sa_reward = true;
    }

    /// Adds states to a label, creating it if needed.
    pub fn add_label(&mut self, name: &str, states: &[StateId]) {
        let entry = self.labels.entry(name.to_string()).or_default();
        entry.extend_from_slice(states);
        entry.sort_unstable();
        entry.dedup();
    }

    /// Marks `s` absorbing and gives it a self-loop action if it has none.
    pub fn mark_absorbing(&mut self, s: StateId) {
        self.absorbing[s] = true;
        if self.actions[s].is_empty() {
            self.add_action(s, &[(s, 1.0)]);
        }
    }

    pub fn build(self) -> Result<Mdp> {
        if self.initial_state >= self.n_states {
            return Err(Error::InvalidModel(format!(
                "initial state {} out of range (n_states = {})",
                self.initial_state, self.n_states
            )));
        }
        for (name, states) in &self.labels {
            if let Some(&bad) = states.iter().find(|&&s| s >= self.n_states) {
                return Err(Error::InvalidModel(format!(
                    "label `{name}` names state {bad} out of range"
                )));
            }
        }
        let mut sa_offsets = Vec::with_capacity(self.n_states + 1);
        let mut tr_offsets = vec![0usize];
        let mut transitions = Vec::new();
        let mut sa_rewards = Vec::new();
        sa_offsets.push(0);
        for (s, acts) in self.actions.iter().enumerate() {
            for (a, row) in acts.iter().enumerate() {
                for t in row {
                    if t.successor >= self.n_states {
                        return Err(Error::InvalidModel(format!(
                            "transition ({s}, {a}) -> {} out of range",
                            t.successor
                        )));
                    }
                }
                transitions.extend_from_slice(row);
                tr_offsets.push(transitions.len());
                sa_rewards.push(self.sa_rewards[s][a]);
            }
            sa_offsets.push(tr_offsets.len() - 1);
        }
        Ok(Mdp {
            n_states: self.n_states,
            initial_state: self.initial_state,
            discount: self.discount,
            sa_offsets,
            tr_offsets,
            transitions,
            state_rewards: self.state_rewards,
            sa_rewards: self.any_sa_reward.then_some(sa_rewards),
            labels: self.labels,
            absorbing: self.absorbing,
        })
    }
}

/// One invariant failure found by [`validate_mdp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub state: Option<StateId>,
    pub action: Option<ActionId>,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.state, self.action) {
            (Some(s), Some(a)) => write!(f, "state {s} action {a}: {}", self.message),
            (Some(s), None) => write!(f, "state {s}: {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every model invariant and reports all failures; an empty report
/// means the model is well formed.
pub fn validate_mdp(mdp: &Mdp) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut push = |state, action, message: String| {
        report.violations.push(Violation {
            state,
            action,
            message,
        });
    };

    if !(mdp.discount > 0.0 && mdp.discount <= 1.0) {
        push(None, None, format!("discount {} outside (0, 1]", mdp.discount));
    }
    for s in 0..mdp.n_states {
        if mdp.n_actions(s) == 0 {
            push(Some(s), None, "no enabled action".to_string());
            continue;
        }
        for a in 0..mdp.n_actions(s) {
            let row = mdp.transitions(s, a);
            let mut sum = 0.0;
            for t in row {
                if !(0.0..=1.0).contains(&t.probability) {
                    push(
                        Some(s),
                        Some(a),
                        format!("probability {} outside [0, 1]", t.probability),
                    );
                }
                sum += t.probability;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                push(Some(s), Some(a), format!("row sum {sum} ≠ 1"));
            }
        }
        if mdp.is_absorbing(s) {
            let has_self_loop = (0..mdp.n_actions(s)).any(|a| {
                let row = mdp.transitions(s, a);
                row.len() == 1 && row[0].successor == s && (row[0].probability - 1.0).abs() <= ROW_SUM_TOL
            });
            if !has_self_loop {
                push(
                    Some(s),
                    None,
                    "absorbing state lacks a self-loop action with probability 1".to_string(),
                );
            }
        }
    }
    report
}

/// Per-state probability distribution over enabled actions; the parameter
/// vector of the policy-induced parametric Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPolicy {
    rows: Vec<Vec<f64>>,
}

impl StochasticPolicy {
    /// Wraps raw rows; `rows[s][a]` is the probability of action `a` in `s`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn uniform(mdp: &Mdp) -> Self {
        let rows = (0..mdp.n_states())
            .map(|s| {
                let k = mdp.n_actions(s);
                vec![1.0 / k as f64; k]
            })
            .collect();
        Self { rows }
    }

    /// Point-mass policy choosing `choice[s]` in each state.
    pub fn deterministic(mdp: &Mdp, choice: &[ActionId]) -> Result<Self> {
        if choice.len() != mdp.n_states() {
            return Err(Error::MismatchedSpaces);
        }
        let mut rows = Vec::with_capacity(choice.len());
        for (s, &a) in choice.iter().enumerate() {
            let k = mdp.n_actions(s);
            if a >= k {
                return Err(Error::ActionNotEnabled { state: s, action: a });
            }
            let mut row = vec![0.0; k];
            row[a] = 1.0;
            rows.push(row);
        }
        Ok(Self { rows })
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn prob(&self, s: StateId, a: ActionId) -> f64 {
        self.rows[s][a]
    }

    pub fn row(&self, s: StateId) -> &[f64] {
        &self.rows[s]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }

    /// The chosen action per state, if the policy is deterministic.
    pub fn as_deterministic(&self) -> Option<Vec<ActionId>> {
        self.rows
            .iter()
            .map(|row| {
                let mut chosen = None;
                for (a, &p) in row.iter().enumerate() {
                    if p == 1.0 && chosen.is_none() {
                        chosen = Some(a);
                    } else if p != 0.0 && p != 1.0 || (p == 1.0 && chosen != Some(a)) {
                        return None;
                    }
                }
                chosen
            })
            .collect()
    }

    /// Errors unless the policy covers every state of `mdp`, puts mass only
    /// on enabled actions, and each row sums to 1 within [`ROW_SUM_TOL`].
    pub fn validate(&self, mdp: &Mdp) -> Result<()> {
        if self.rows.len() != mdp.n_states() {
            return Err(Error::UndefinedPolicyState {
                state: self.rows.len().min(mdp.n_states()),
            });
        }
        for (s, row) in self.rows.iter().enumerate() {
            if row.len() != mdp.n_actions(s) {
                return Err(Error::ActionNotEnabled {
                    state: s,
                    action: row.len().max(mdp.n_actions(s)) - 1,
                });
            }
            let mut sum = 0.0;
            for &p in row {
                if p < 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "policy probability {p} < 0 in state {s}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidModel(format!(
                    "policy row {s} sums to {sum}"
                )));
            }
        }
        Ok(())
    }
}

/// Finite Markov chain: the MDP with action choice resolved by a policy.
#[derive(Debug, Clone)]
pub struct MarkovChain {
    n_states: usize,
    initial_state: StateId,
    row_offsets: Vec<usize>,
    transitions: Vec<Transition>,
    state_rewards: Vec<f64>,
    labels: BTreeMap<String, Vec<StateId>>,
}

impl MarkovChain {
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn initial_state(&self) -> StateId {
        self.initial_state
    }

    #[inline]
    pub fn row(&self, s: StateId) -> &[Transition] {
        &self.transitions[self.row_offsets[s]..self.row_offsets[s + 1]]
    }

    pub fn n_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn state_reward(&self, s: StateId) -> f64 {
        self.state_rewards[s]
    }

    pub fn labels(&self) -> &BTreeMap<String, Vec<StateId>> {
        &self.labels
    }

    pub fn label_mask(&self, name: &str) -> Result<Vec<bool>> {
        let states = self
            .labels
            .get(name)
            .ok_or_else(|| Error::UnknownAtom(name.to_string()))?;
        let mut mask = vec![false; self.n_states];
        for &s in states {
            mask[s] = true;
        }
        Ok(mask)
    }

    /// Predecessor adjacency: for each state, the list of `(source, probability)`
    /// entries pointing at it. Used by backward reachability and adjoint solves.
    pub(crate) fn reverse_rows(&self) -> (Vec<usize>, Vec<Transition>) {
        let mut counts = vec![0usize; self.n_states + 1];
        for t in &self.transitions {
            counts[t.successor + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut rev = vec![
            Transition {
                successor: 0,
                probability: 0.0
            };
            self.transitions.len()
        ];
        let mut next = counts.clone();
        for s in 0..self.n_states {
            for t in self.row(s) {
                rev[next[t.successor]] = Transition {
                    successor: s,
                    probability: t.probability,
                };
                next[t.successor] += 1;
            }
        }
        (counts, rev)
    }
}

/// Resolves the MDP's action choice by `policy`: row `s` of the result is
/// `sum_a policy(a|s) * T(s, a, .)`. Deterministic policies yield exactly the
/// model with all off-policy state-action pairs removed.
pub fn induce_chain(mdp: &Mdp, policy: &StochasticPolicy) -> Result<MarkovChain> {
    if policy.n_states() != mdp.n_states() {
        return Err(Error::UndefinedPolicyState {
            state: policy.n_states().min(mdp.n_states()),
        });
    }
    let mut row_offsets = Vec::with_capacity(mdp.n_states() + 1);
    let mut transitions = Vec::new();
    row_offsets.push(0);
    let mut scratch: Vec<(StateId, f64)> = Vec::new();
    for s in 0..mdp.n_states() {
        let row = policy.row(s);
        if row.len() != mdp.n_actions(s) {
            return Err(Error::ActionNotEnabled {
                state: s,
                action: row.len().max(mdp.n_actions(s)).saturating_sub(1),
            });
        }
        scratch.clear();
        for (a, &pa) in row.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            for t in mdp.transitions(s, a) {
                scratch.push((t.successor, pa * t.probability));
            }
        }
        scratch.sort_unstable_by_key(|&(succ, _)| succ);
        let mut merged: Vec<Transition> = Vec::with_capacity(scratch.len());
        for &(succ, p) in scratch.iter() {
            match merged.last_mut() {
                Some(last) if last.successor == succ => last.probability += p,
                _ => merged.push(Transition {
                    successor: succ,
                    probability: p,
                }),
            }
        }
        transitions.extend_from_slice(&merged);
        row_offsets.push(transitions.len());
    }
    Ok(MarkovChain {
        n_states: mdp.n_states(),
        initial_state: mdp.initial_state(),
        row_offsets,
        transitions,
        state_rewards: mdp.state_rewards.clone(),
        labels: mdp.labels.clone(),
    })
}

/// Convex combination `(1 - t) * p + t * q` of two policies over the same
/// state/action space.
pub fn interpolate_policies(
    p: &StochasticPolicy,
    q: &StochasticPolicy,
    t: f64,
) -> Result<StochasticPolicy> {
    debug_assert!((0.0..=1.0).contains(&t), "interpolation weight {t}");
    if p.n_states() != q.n_states() {
        return Err(Error::MismatchedSpaces);
    }
    let mut rows = Vec::with_capacity(p.n_states());
    for s in 0..p.n_states() {
        let (pr, qr) = (p.row(s), q.row(s));
        if pr.len() != qr.len() {
            return Err(Error::MismatchedSpaces);
        }
        rows.push(
            pr.iter()
                .zip(qr)
                .map(|(&a, &b)| (1.0 - t) * a + t * b)
                .collect(),
        );
    }
    Ok(StochasticPolicy::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Prng;

    fn one_state_loop() -> Mdp {
        let mut b = MdpBuilder::new(1).discount(0.9);
        b.add_action(0, &[(0, 1.0)]);
        b.mark_absorbing(0);
        b.set_state_reward(0, 10.0);
        b.build().unwrap()
    }

    #[test]
    fn validator_accepts_identity_case() {
        let report = validate_mdp(&one_state_loop());
        assert!(report.is_empty(), "{report}");
    }

    #[test]
    fn validator_reports_bad_row_sum() {
        let mut b = MdpBuilder::new(2);
        b.add_action(0, &[(1, 0.9)]);
        b.add_action(1, &[(1, 1.0)]);
        let mdp = b.build().unwrap();
        let report = validate_mdp(&mdp);
        assert!(!report.is_empty());
        let text = report.to_string();
        assert!(text.contains("row sum 0.9 ≠ 1"), "got: {text}");
    }

    #[test]
    fn validator_reports_missing_action_and_bad_absorbing() {
        let mut b = MdpBuilder::new(2);
        b.add_action(0, &[(0, 0.5), (1, 0.5)]);
        b.absorbing[0] = true; // no self-loop action
        let mdp = b.build().unwrap();
        let report = validate_mdp(&mdp);
        let text = report.to_string();
        assert!(text.contains("no enabled action"), "got: {text}");
        assert!(text.contains("self-loop"), "got: {text}");
    }

    #[test]
    fn builder_rejects_out_of_range_successor() {
        let mut b = MdpBuilder::new(1);
        b.add_action(0, &[(3, 1.0)]);
        assert!(b.build().is_err());
    }

    #[test]
    fn deterministic_induction_prunes_off_policy_actions() {
        let mut b = MdpBuilder::new(2);
        b.add_action(0, &[(1, 1.0)]);
        b.add_action(0, &[(0, 1.0)]);
        b.add_action(1, &[(1, 1.0)]);
        let mdp = b.build().unwrap();
        let pi = StochasticPolicy::deterministic(&mdp, &[0, 0]).unwrap();
        let chain = induce_chain(&mdp, &pi).unwrap();
        assert_eq!(chain.row(0), &[Transition { successor: 1, probability: 1.0 }]);
    }

    #[test]
    fn uniform_mixture_splits_rows() {
        let mut b = MdpBuilder::new(2);
        b.add_action(0, &[(1, 1.0)]);
        b.add_action(0, &[(0, 1.0)]);
        b.add_action(1, &[(1, 1.0)]);
        let mdp = b.build().unwrap();
        let pi = StochasticPolicy::from_rows(vec![vec![0.5, 0.5], vec![1.0]]);
        let chain = induce_chain(&mdp, &pi).unwrap();
        let row: Vec<_> = chain.row(0).to_vec();
        assert_eq!(row.len(), 2);
        assert!((row[0].probability - 0.5).abs() < 1e-15 && row[0].successor == 0);
        assert!((row[1].probability - 0.5).abs() < 1e-15 && row[1].successor == 1);
    }

    #[test]
    fn interpolation_endpoints_and_midpoint() {
        let p = StochasticPolicy::from_rows(vec![vec![1.0, 0.0]]);
        let q = StochasticPolicy::from_rows(vec![vec![0.0, 1.0]]);
        assert_eq!(interpolate_policies(&p, &q, 0.0).unwrap(), p);
        assert_eq!(interpolate_policies(&p, &q, 1.0).unwrap(), q);
        let mid = interpolate_policies(&p, &q, 0.25).unwrap();
        assert_eq!(mid.row(0), &[0.75, 0.25]);
    }

    #[test]
    fn interpolation_rejects_mismatched_spaces() {
        let p = StochasticPolicy::from_rows(vec![vec![1.0, 0.0]]);
        let q = StochasticPolicy::from_rows(vec![vec![1.0]]);
        assert!(matches!(
            interpolate_policies(&p, &q, 0.5),
            Err(Error::MismatchedSpaces)
        ));
    }

    use crate::test_support::{random_mdp, random_policy};

    #[test]
    fn induced_chain_rows_are_stochastic_on_random_models() {
        let mut rng = Prng::seeded(11);
        for _ in 0..50 {
            let mdp = random_mdp(&mut rng, 6, 3);
            let pi = random_policy(&mut rng, &mdp);
            let chain = induce_chain(&mdp, &pi).unwrap();
            for s in 0..chain.n_states() {
                let sum: f64 = chain.row(s).iter().map(|t| t.probability).sum();
                assert!((sum - 1.0).abs() < ROW_SUM_TOL, "row {s} sums to {sum}");
            }
        }
    }

    #[test]
    fn induction_is_linear_in_the_policy() {
        let mut rng = Prng::seeded(23);
        for _ in 0..20 {
            let mdp = random_mdp(&mut rng, 5, 3);
            let p = random_policy(&mut rng, &mdp);
            let q = random_policy(&mut rng, &mdp);
            let t = rng.uniform();
            let mixed = induce_chain(&mdp, &interpolate_policies(&p, &q, t).unwrap()).unwrap();
            let cp = induce_chain(&mdp, &p).unwrap();
            let cq = induce_chain(&mdp, &q).unwrap();
            for s in 0..mdp.n_states() {
                let mut dense_mixed = vec![0.0; mdp.n_states()];
                for tr in mixed.row(s) {
                    dense_mixed[tr.successor] += tr.probability;
                }
                let mut dense_expect = vec![0.0; mdp.n_states()];
                for tr in cp.row(s) {
                    dense_expect[tr.successor] += (1.0 - t) * tr.probability;
                }
                for tr in cq.row(s) {
                    dense_expect[tr.successor] += t * tr.probability;
                }
                for (got, want) in dense_mixed.iter().zip(&dense_expect) {
                    assert!((got - want).abs() < 1e-12);
                }
            }
        }
    }
}
