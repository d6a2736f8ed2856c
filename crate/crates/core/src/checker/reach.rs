//! Optimal (max or min) path-formula probabilities over MDP schedulers.
//!
//! The pipeline is the classical one: qualitative prob0/prob1 state sets are
//! computed by graph fixed points (worklist algorithms, linear in the
//! transition count per pass), then the remaining states are solved by value
//! iteration from below with the optimizing operator. A deterministic witness
//! policy attaining the optimum is produced alongside the values; on
//! almost-sure states it follows the attractor certificate of the prob1
//! computation so the witness makes actual progress.

use crate::error::{Error, Result};
use crate::formula::{PathFormula, StateFormula};
use crate::mdp::{ActionId, Mdp, StateId, StochasticPolicy};

/// Residual bound for reachability value iteration.
pub const REACH_TOL: f64 = 1e-10;
/// Sweep budget for reachability value iteration.
pub const MAX_REACH_SWEEPS: usize = 1_000_000;
/// Two action values within this window count as tied.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptMode {
    Max,
    Min,
}

impl OptMode {
    pub fn flipped(self) -> OptMode {
        match self {
            OptMode::Max => OptMode::Min,
            OptMode::Min => OptMode::Max,
        }
    }
}

/// Evaluates a probability-free state formula over the MDP's labels.
pub(crate) fn eval_prob_free(mdp: &Mdp, f: &StateFormula) -> Result<Vec<bool>> {
    if f.contains_prob() {
        return Err(Error::NestedProb);
    }
    fn eval(mdp: &Mdp, f: &StateFormula) -> Result<Vec<bool>> {
        Ok(match f {
            StateFormula::True => vec![true; mdp.n_states()],
            StateFormula::False => vec![false; mdp.n_states()],
            StateFormula::Atom(name) => mdp.label_mask(name)?,
            StateFormula::Not(g) => {
                let mut m = eval(mdp, g)?;
                m.iter_mut().for_each(|b| *b = !*b);
                m
            }
            StateFormula::And(a, b) => {
                let (ma, mb) = (eval(mdp, a)?, eval(mdp, b)?);
                ma.iter().zip(&mb).map(|(&x, &y)| x && y).collect()
            }
            StateFormula::Or(a, b) => {
                let (ma, mb) = (eval(mdp, a)?, eval(mdp, b)?);
                ma.iter().zip(&mb).map(|(&x, &y)| x || y).collect()
            }
            StateFormula::Implies(a, b) => {
                let (ma, mb) = (eval(mdp, a)?, eval(mdp, b)?);
                ma.iter().zip(&mb).map(|(&x, &y)| !x || y).collect()
            }
            StateFormula::Prob { .. } => unreachable!("checked by contains_prob"),
        })
    }
    eval(mdp, f)
}

/// Reverse adjacency: for each state, the `(source, action)` pairs with a
/// positive-probability edge into it.
struct ReverseEdges {
    offsets: Vec<usize>,
    entries: Vec<(StateId, ActionId)>,
}

impl ReverseEdges {
    fn build(mdp: &Mdp) -> Self {
        let n = mdp.n_states();
        let mut counts = vec![0usize; n + 1];
        for s in 0..n {
            for a in 0..mdp.n_actions(s) {
                for t in mdp.transitions(s, a) {
                    if t.probability > 0.0 {
                        counts[t.successor + 1] += 1;
                    }
                }
            }
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut entries = vec![(0usize, 0usize); *counts.last().unwrap()];
        let mut next = counts.clone();
        for s in 0..n {
            for a in 0..mdp.n_actions(s) {
                for t in mdp.transitions(s, a) {
                    if t.probability > 0.0 {
                        entries[next[t.successor]] = (s, a);
                        next[t.successor] += 1;
                    }
                }
            }
        }
        Self {
            offsets: counts,
            entries,
        }
    }

    fn predecessors(&self, t: StateId) -> &[(StateId, ActionId)] {
        &self.entries[self.offsets[t]..self.offsets[t + 1]]
    }
}

/// States from which no scheduler reaches `sat2` through `via` states:
/// the complement of existential backward reachability.
fn prob0_max(mdp: &Mdp, rev: &ReverseEdges, via: &[bool], sat2: &[bool]) -> Vec<bool> {
    let n = mdp.n_states();
    let mut reached = sat2.to_vec();
    let mut stack: Vec<StateId> = (0..n).filter(|&s| sat2[s]).collect();
    while let Some(t) = stack.pop() {
        for &(s, _) in rev.predecessors(t) {
            if !reached[s] && via[s] {
                reached[s] = true;
                stack.push(s);
            }
        }
    }
    reached.iter().map(|&b| !b).collect()
}

/// States where the maximal probability of `phi1 U phi2` is 1, plus an
/// attractor action per almost-sure non-target state that guarantees progress.
fn prob1_max(
    mdp: &Mdp,
    rev: &ReverseEdges,
    via: &[bool],
    sat2: &[bool],
) -> (Vec<bool>, Vec<Option<ActionId>>) {
    let n = mdp.n_states();
    let mut u = vec![true; n];
    loop {
        // Pairs whose whole successor set stays inside u.
        let mut allowed = vec![true; mdp.n_pairs()];
        for s in 0..n {
            for a in 0..mdp.n_actions(s) {
                let p = mdp.pair_index(s, a);
                allowed[p] = mdp
                    .transitions(s, a)
                    .iter()
                    .all(|t| t.probability == 0.0 || u[t.successor]);
            }
        }
        // Attractor of sat2 through `via` using allowed pairs only.
        let mut r = sat2.to_vec();
        let mut witness = vec![None; n];
        let mut stack: Vec<StateId> = (0..n).filter(|&s| sat2[s]).collect();
        while let Some(t) = stack.pop() {
            for &(s, a) in rev.predecessors(t) {
                if !r[s] && via[s] && allowed[mdp.pair_index(s, a)] {
                    r[s] = true;
                    witness[s] = Some(a);
                    stack.push(s);
                }
            }
        }
        if r == u {
            return (u, witness);
        }
        u = r;
    }
}

/// States where the minimal probability of `phi1 U phi2` is 0, plus an
/// avoiding action per such state (all successors stay outside the
/// positive-probability region).
fn prob0_min(
    mdp: &Mdp,
    rev: &ReverseEdges,
    via: &[bool],
    sat2: &[bool],
) -> (Vec<bool>, Vec<Option<ActionId>>) {
    let n = mdp.n_states();
    // r = states where every scheduler has positive probability of the until.
    let mut r = sat2.to_vec();
    let mut pair_hit = vec![false; mdp.n_pairs()];
    let mut hit_actions = vec![0usize; n];
    let mut stack: Vec<StateId> = (0..n).filter(|&s| sat2[s]).collect();
    while let Some(t) = stack.pop() {
        for &(s, a) in rev.predecessors(t) {
            let p = mdp.pair_index(s, a);
            if !pair_hit[p] {
                pair_hit[p] = true;
                hit_actions[s] += 1;
                if !r[s] && via[s] && hit_actions[s] == mdp.n_actions(s) {
                    r[s] = true;
                    stack.push(s);
                }
            }
        }
    }
    let no: Vec<bool> = r.iter().map(|&b| !b).collect();
    let mut avoid = vec![None; n];
    for s in 0..n {
        if no[s] {
            avoid[s] = (0..mdp.n_actions(s)).find(|&a| {
                mdp.transitions(s, a)
                    .iter()
                    .all(|t| t.probability == 0.0 || no[t.successor])
            });
        }
    }
    (no, avoid)
}

/// States where the minimal probability of `phi1 U phi2` is 1.
///
/// `Pmin = 1` iff no scheduler gives positive probability to the complement,
/// i.e. to reaching a `!phi1 & !phi2` state through `phi1 & !phi2` states or
/// to staying in `phi1 & !phi2` forever. The latter is possible exactly from
/// states that can reach (within that region) its largest closed sub-MDP.
fn prob1_min(mdp: &Mdp, rev: &ReverseEdges, sat1: &[bool], sat2: &[bool]) -> Vec<bool> {
    let n = mdp.n_states();
    let region: Vec<bool> = (0..n).map(|s| sat1[s] && !sat2[s]).collect();
    let bad: Vec<bool> = (0..n).map(|s| !sat1[s] && !sat2[s]).collect();

    // Largest z ⊆ region in which every state has an action staying in z.
    let mut in_z = region.clone();
    let mut out_count = vec![0usize; mdp.n_pairs()];
    let mut intact_actions = vec![0usize; n];
    let mut stack: Vec<StateId> = Vec::new();
    for s in 0..n {
        if !in_z[s] {
            continue;
        }
        for a in 0..mdp.n_actions(s) {
            let p = mdp.pair_index(s, a);
            out_count[p] = mdp
                .transitions(s, a)
                .iter()
                .filter(|t| t.probability > 0.0 && !region[t.successor])
                .count();
            if out_count[p] == 0 {
                intact_actions[s] += 1;
            }
        }
        if intact_actions[s] == 0 {
            in_z[s] = false;
            stack.push(s);
        }
    }
    while let Some(t) = stack.pop() {
        for &(s, a) in rev.predecessors(t) {
            if !in_z[s] {
                continue;
            }
            let p = mdp.pair_index(s, a);
            out_count[p] += 1;
            if out_count[p] == 1 {
                intact_actions[s] -= 1;
                if intact_actions[s] == 0 {
                    in_z[s] = false;
                    stack.push(s);
                }
            }
        }
    }

    // Existential backward closure of bad ∪ z through the region.
    let mut w: Vec<bool> = (0..n).map(|s| bad[s] || in_z[s]).collect();
    let mut stack: Vec<StateId> = (0..n).filter(|&s| w[s]).collect();
    while let Some(t) = stack.pop() {
        for &(s, _) in rev.predecessors(t) {
            if !w[s] && region[s] {
                w[s] = true;
                stack.push(s);
            }
        }
    }
    w.iter().map(|&b| !b).collect()
}

struct UntilOptimum {
    values: Vec<f64>,
    policy: Vec<ActionId>,
}

/// Full solve of `opt P(phi1 U phi2)` with witness extraction.
fn optimize_until(
    mdp: &Mdp,
    sat1: &[bool],
    sat2: &[bool],
    mode: OptMode,
) -> Result<UntilOptimum> {
    let n = mdp.n_states();
    let rev = ReverseEdges::build(mdp);
    let via: Vec<bool> = (0..n).map(|s| sat1[s] && !sat2[s]).collect();

    let (yes, no, attractor, avoid) = match mode {
        OptMode::Max => {
            let no = prob0_max(mdp, &rev, &via, sat2);
            let (yes, attractor) = prob1_max(mdp, &rev, &via, sat2);
            (yes, no, attractor, Vec::new())
        }
        OptMode::Min => {
            let (no, avoid) = prob0_min(mdp, &rev, &via, sat2);
            let yes = prob1_min(mdp, &rev, sat1, sat2);
            (yes, no, Vec::new(), avoid)
        }
    };

    let mut values = vec![0.0; n];
    for s in 0..n {
        if yes[s] {
            values[s] = 1.0;
        }
    }
    let maybe: Vec<StateId> = (0..n).filter(|&s| !yes[s] && !no[s]).collect();
    let mut is_maybe = vec![false; n];
    for &s in &maybe {
        is_maybe[s] = true;
    }

    if !maybe.is_empty() {
        // Per-pair mass into sure-yes states and self-loop mass, fixed
        // across sweeps.
        let mut yes_mass = vec![0.0f64; mdp.n_pairs()];
        let mut self_mass = vec![0.0f64; mdp.n_pairs()];
        for &s in &maybe {
            for a in 0..mdp.n_actions(s) {
                let p = mdp.pair_index(s, a);
                for t in mdp.transitions(s, a) {
                    if t.successor == s {
                        self_mass[p] += t.probability;
                    } else if yes[t.successor] {
                        yes_mass[p] += t.probability;
                    }
                }
            }
        }
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for _sweep in 0..MAX_REACH_SWEEPS {
            let mut max_delta = 0.0f64;
            for &s in &maybe {
                let mut best = match mode {
                    OptMode::Max => f64::NEG_INFINITY,
                    OptMode::Min => f64::INFINITY,
                };
                for a in 0..mdp.n_actions(s) {
                    let p = mdp.pair_index(s, a);
                    let mut acc = yes_mass[p];
                    for t in mdp.transitions(s, a) {
                        if t.successor != s && is_maybe[t.successor] {
                            acc += t.probability * values[t.successor];
                        }
                    }
                    let denom = 1.0 - self_mass[p];
                    let q = if denom <= f64::EPSILON { 0.0 } else { acc / denom };
                    best = match mode {
                        OptMode::Max => best.max(q),
                        OptMode::Min => best.min(q),
                    };
                }
                let delta = (best - values[s]).abs();
                if delta > max_delta {
                    max_delta = delta;
                }
                values[s] = best;
            }
            if max_delta < REACH_TOL {
                converged = true;
                break;
            }
            residual = max_delta;
        }
        if !converged {
            return Err(Error::NoConvergence {
                what: "reachability value iteration",
                max_iters: MAX_REACH_SWEEPS,
                residual,
            });
        }
    }

    // Hop distances toward the sure set, used to break value ties in favor
    // of actions that actually make progress (a tied action could otherwise
    // cycle forever at the same value).
    let distance = match mode {
        OptMode::Max => {
            let mut dist = vec![usize::MAX; n];
            let mut queue = std::collections::VecDeque::new();
            for s in 0..n {
                if yes[s] {
                    dist[s] = 0;
                    queue.push_back(s);
                }
            }
            while let Some(t) = queue.pop_front() {
                for &(s, _) in rev.predecessors(t) {
                    if dist[s] == usize::MAX {
                        dist[s] = dist[t] + 1;
                        queue.push_back(s);
                    }
                }
            }
            dist
        }
        OptMode::Min => Vec::new(),
    };

    let mut policy = vec![0usize; n];
    for s in 0..n {
        if yes[s] {
            policy[s] = match mode {
                OptMode::Max if !sat2[s] => attractor[s].unwrap_or(0),
                _ => 0,
            };
        } else if no[s] {
            policy[s] = match mode {
                OptMode::Min => avoid[s].unwrap_or(0),
                OptMode::Max => 0,
            };
        } else {
            // Greedy in the solved values with tie-breaking.
            let mut best_a = 0usize;
            let mut best_q = f64::NEG_INFINITY;
            let mut best_score = usize::MAX;
            for a in 0..mdp.n_actions(s) {
                let mut q = 0.0;
                let mut self_p = 0.0;
                for t in mdp.transitions(s, a) {
                    if t.successor == s {
                        self_p += t.probability;
                    } else {
                        q += t.probability * values[t.successor];
                    }
                }
                let denom = 1.0 - self_p;
                let q = if denom <= f64::EPSILON { 0.0 } else { q / denom };
                let signed = match mode {
                    OptMode::Max => q,
                    OptMode::Min => -q,
                };
                let score = match mode {
                    OptMode::Max => mdp
                        .transitions(s, a)
                        .iter()
                        .filter(|t| t.probability > 0.0)
                        .map(|t| distance[t.successor])
                        .min()
                        .unwrap_or(usize::MAX),
                    OptMode::Min => 0,
                };
                let improves = signed > best_q + TIE_TOL
                    || (signed > best_q - TIE_TOL && score < best_score);
                if a == 0 || improves {
                    best_a = a;
                    best_q = signed.max(best_q);
                    best_score = score;
                }
            }
            policy[s] = best_a;
        }
    }

    Ok(UntilOptimum {
        values,
        policy,
    })
}

/// Optimal probability of a path formula over all schedulers, with a
/// deterministic policy attaining it. Path content must be probability-free.
pub fn optimize_path_probability(
    mdp: &Mdp,
    path: &PathFormula,
    mode: OptMode,
) -> Result<(Vec<f64>, StochasticPolicy)> {
    match path {
        PathFormula::Next(f) => {
            let sat = eval_prob_free(mdp, f)?;
            let n = mdp.n_states();
            let mut values = vec![0.0; n];
            let mut choice = vec![0usize; n];
            for s in 0..n {
                let one_step: Vec<f64> = (0..mdp.n_actions(s))
                    .map(|a| {
                        mdp.transitions(s, a)
                            .iter()
                            .filter(|t| sat[t.successor])
                            .map(|t| t.probability)
                            .sum()
                    })
                    .collect();
                let opt = match mode {
                    OptMode::Max => one_step.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    OptMode::Min => one_step.iter().cloned().fold(f64::INFINITY, f64::min),
                };
                values[s] = opt;
                // Lowest-indexed action within the tie window of the optimum.
                choice[s] = one_step
                    .iter()
                    .position(|&v| (v - opt).abs() <= TIE_TOL)
                    .unwrap_or(0);
            }
            Ok((values, StochasticPolicy::deterministic(mdp, &choice)?))
        }
        PathFormula::Eventually(f) => {
            let sat2 = eval_prob_free(mdp, f)?;
            let sat1 = vec![true; mdp.n_states()];
            let opt = optimize_until(mdp, &sat1, &sat2, mode)?;
            Ok((
                opt.values,
                StochasticPolicy::deterministic(mdp, &opt.policy)?,
            ))
        }
        PathFormula::Globally(f) => {
            // opt P(G phi) = 1 - opposite-opt P(F !phi), same witness.
            let dual = PathFormula::Eventually(StateFormula::not(f.clone()));
            let (dual_values, policy) = optimize_path_probability(mdp, &dual, mode.flipped())?;
            Ok((dual_values.iter().map(|&v| 1.0 - v).collect(), policy))
        }
        PathFormula::Until(a, b) => {
            let sat1 = eval_prob_free(mdp, a)?;
            let sat2 = eval_prob_free(mdp, b)?;
            let opt = optimize_until(mdp, &sat1, &sat2, mode)?;
            Ok((
                opt.values,
                StochasticPolicy::deterministic(mdp, &opt.policy)?,
            ))
        }
    }
}
