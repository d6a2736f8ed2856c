//! PCTL model checking on finite Markov chains.
//!
//! Probabilities for until-style path formulas are computed the standard way:
//! qualitative prob0/prob1 sets by graph reachability first, then a
//! Gauss-Seidel solve of `x = A x + b` on the remaining undetermined states.
//! Probabilities are undiscounted.

use crate::error::{Error, Result};
use crate::formula::{PathFormula, StateFormula};
use crate::mdp::{MarkovChain, StateId};

/// Residual bound for linear solves.
pub const SOLVE_TOL: f64 = 1e-10;
/// Sweep budget for linear solves.
pub const MAX_SWEEPS: usize = 1_000_000;

/// Qualitative classification plus solved values for one until formula.
#[derive(Debug, Clone)]
pub(crate) struct UntilSolution {
    /// Probability of the until holding, per state.
    pub values: Vec<f64>,
    pub yes: Vec<bool>,
    pub no: Vec<bool>,
    /// States that required the numeric solve.
    pub maybe: Vec<StateId>,
    pub is_maybe: Vec<bool>,
}

/// Satisfaction set of a state formula, bottom-up over the AST.
pub(crate) fn sat_states(chain: &MarkovChain, f: &StateFormula) -> Result<Vec<bool>> {
    Ok(match f {
        StateFormula::True => vec![true; chain.n_states()],
        StateFormula::False => vec![false; chain.n_states()],
        StateFormula::Atom(name) => chain.label_mask(name)?,
        StateFormula::Not(g) => {
            let mut m = sat_states(chain, g)?;
            m.iter_mut().for_each(|b| *b = !*b);
            m
        }
        StateFormula::And(a, b) => {
            let ma = sat_states(chain, a)?;
            let mb = sat_states(chain, b)?;
            ma.iter().zip(&mb).map(|(&x, &y)| x && y).collect()
        }
        StateFormula::Or(a, b) => {
            let ma = sat_states(chain, a)?;
            let mb = sat_states(chain, b)?;
            ma.iter().zip(&mb).map(|(&x, &y)| x || y).collect()
        }
        StateFormula::Implies(a, b) => {
            let ma = sat_states(chain, a)?;
            let mb = sat_states(chain, b)?;
            ma.iter().zip(&mb).map(|(&x, &y)| !x || y).collect()
        }
        StateFormula::Prob {
            relation,
            threshold,
            path,
        } => {
            let p = path_probabilities(chain, path)?;
            p.iter().map(|&v| relation.holds(v, *threshold)).collect()
        }
    })
}

/// Probability, per state, of the path formula holding.
pub(crate) fn path_probabilities(chain: &MarkovChain, path: &PathFormula) -> Result<Vec<f64>> {
    match path {
        PathFormula::Next(f) => {
            let sat = sat_states(chain, f)?;
            Ok((0..chain.n_states())
                .map(|s| {
                    chain
                        .row(s)
                        .iter()
                        .filter(|t| sat[t.successor])
                        .map(|t| t.probability)
                        .sum()
                })
                .collect())
        }
        PathFormula::Eventually(f) => {
            let sat = sat_states(chain, f)?;
            let all = vec![true; chain.n_states()];
            Ok(until_solution(chain, &all, &sat)?.values)
        }
        PathFormula::Globally(f) => {
            // G phi = !(true U !phi)
            let sat = sat_states(chain, f)?;
            let not_sat: Vec<bool> = sat.iter().map(|&b| !b).collect();
            let all = vec![true; chain.n_states()];
            let sol = until_solution(chain, &all, &not_sat)?;
            Ok(sol.values.iter().map(|&v| 1.0 - v).collect())
        }
        PathFormula::Until(a, b) => {
            let sa = sat_states(chain, a)?;
            let sb = sat_states(chain, b)?;
            Ok(until_solution(chain, &sa, &sb)?.values)
        }
    }
}

/// Backward reachability over the chain's reversed edges: the set of states
/// that can reach `from` along states satisfying `via` (states in `from`
/// count as reached regardless of `via`).
fn backward_reach(
    rev_offsets: &[usize],
    rev_edges: &[crate::mdp::Transition],
    from: &[bool],
    via: &[bool],
) -> Vec<bool> {
    let n = from.len();
    let mut reached = from.to_vec();
    let mut stack: Vec<StateId> = (0..n).filter(|&s| from[s]).collect();
    while let Some(t) = stack.pop() {
        for e in &rev_edges[rev_offsets[t]..rev_offsets[t + 1]] {
            let s = e.successor; // predecessor of t
            if !reached[s] && via[s] && e.probability > 0.0 {
                reached[s] = true;
                stack.push(s);
            }
        }
    }
    reached
}

/// Solves `P(phi1 U phi2)` for every state of the chain.
pub(crate) fn until_solution(
    chain: &MarkovChain,
    sat1: &[bool],
    sat2: &[bool],
) -> Result<UntilSolution> {
    let n = chain.n_states();
    let (rev_offsets, rev_edges) = chain.reverse_rows();
    // Candidate states that may route probability: sat1 and not sat2.
    let via: Vec<bool> = (0..n).map(|s| sat1[s] && !sat2[s]).collect();
    // prob0: cannot reach sat2 through `via` states.
    let reach_target = backward_reach(&rev_offsets, &rev_edges, sat2, &via);
    let no: Vec<bool> = reach_target.iter().map(|&b| !b).collect();
    // prob1: cannot reach a prob0 state through `via` states.
    let reach_no = backward_reach(&rev_offsets, &rev_edges, &no, &via);
    let yes: Vec<bool> = reach_no.iter().map(|&b| !b).collect();

    let maybe: Vec<StateId> = (0..n).filter(|&s| !yes[s] && !no[s]).collect();
    let mut is_maybe = vec![false; n];
    for &s in &maybe {
        is_maybe[s] = true;
    }

    let mut values = vec![0.0; n];
    for s in 0..n {
        if yes[s] {
            values[s] = 1.0;
        }
    }
    if !maybe.is_empty() {
        gauss_seidel_until(chain, &maybe, &is_maybe, &yes, &mut values)?;
    }
    Ok(UntilSolution {
        values,
        yes,
        no,
        maybe,
        is_maybe,
    })
}

/// In-place Gauss-Seidel sweeps for `x = A x + b` over the maybe states,
/// solving the self-loop mass exactly per row.
fn gauss_seidel_until(
    chain: &MarkovChain,
    maybe: &[StateId],
    is_maybe: &[bool],
    yes: &[bool],
    values: &mut [f64],
) -> Result<()> {
    for sweep in 0..MAX_SWEEPS {
        let mut max_delta = 0.0f64;
        for &s in maybe {
            let mut acc = 0.0;
            let mut self_mass = 0.0;
            for t in chain.row(s) {
                if t.successor == s {
                    self_mass += t.probability;
                } else if is_maybe[t.successor] {
                    acc += t.probability * values[t.successor];
                } else if yes[t.successor] {
                    acc += t.probability;
                }
            }
            let denom = 1.0 - self_mass;
            let new = if denom <= f64::EPSILON { 0.0 } else { acc / denom };
            let delta = (new - values[s]).abs();
            if delta > max_delta {
                max_delta = delta;
            }
            values[s] = new;
        }
        if max_delta < SOLVE_TOL {
            return Ok(());
        }
        if sweep == MAX_SWEEPS - 1 {
            return Err(Error::NoConvergence {
                what: "until linear solve",
                max_iters: MAX_SWEEPS,
                residual: max_delta,
            });
        }
    }
    unreachable!()
}

/// Discounted occupancy row of the initial-state resolvent, restricted to
/// nothing: solves `u = e_source + gamma * A^T u` over all states. With
/// `gamma = 1` the solve is restricted to `restrict` (used for the adjoint
/// of an until system, where convergence is guaranteed on the maybe states).
pub(crate) fn adjoint_occupancy(
    chain: &MarkovChain,
    source: StateId,
    gamma: f64,
    restrict: Option<&[bool]>,
) -> Result<Vec<f64>> {
    let n = chain.n_states();
    let (rev_offsets, rev_edges) = chain.reverse_rows();
    let included = |s: usize| restrict.map_or(true, |m| m[s]);
    let mut u = vec![0.0; n];
    if !included(source) {
        return Ok(u);
    }
    let order: Vec<StateId> = (0..n).filter(|&s| included(s)).collect();
    for sweep in 0..MAX_SWEEPS {
        let mut max_delta = 0.0f64;
        for &t in &order {
            let mut acc = if t == source { 1.0 } else { 0.0 };
            let mut self_mass = 0.0;
            for e in &rev_edges[rev_offsets[t]..rev_offsets[t + 1]] {
                let s = e.successor; // predecessor
                if s == t {
                    self_mass += e.probability;
                } else if included(s) {
                    acc += gamma * e.probability * u[s];
                }
            }
            let denom = 1.0 - gamma * self_mass;
            let new = if denom <= f64::EPSILON { acc } else { acc / denom };
            let delta = (new - u[t]).abs();
            if delta > max_delta {
                max_delta = delta;
            }
            u[t] = new;
        }
        if max_delta < SOLVE_TOL {
            return Ok(u);
        }
        if sweep == MAX_SWEEPS - 1 {
            return Err(Error::NoConvergence {
                what: "adjoint occupancy solve",
                max_iters: MAX_SWEEPS,
                residual: max_delta,
            });
        }
    }
    unreachable!()
}
