//! Value iteration, optimal-policy extraction, PCTL checking, and the
//! strategic stit / strategic ought / contrary-to-duty checks.
//!
//! The strategic ought check follows the two-step scheme: find the unique
//! (tie-broken) utility-optimal policy by value iteration, then model-check
//! the obligation content on the Markov chain that policy induces. The
//! strategic stit check instead optimizes the content's satisfaction
//! probability directly over all schedulers. Utilities are discounted by the
//! model's discount factor; PCTL probabilities are undiscounted.

mod pctl;
mod reach;

pub use pctl::{MAX_SWEEPS, SOLVE_TOL};
pub use reach::{optimize_path_probability, OptMode, REACH_TOL};

pub(crate) use pctl::{adjoint_occupancy, path_probabilities, sat_states, until_solution};
pub(crate) use reach::eval_prob_free;

use crate::error::{Error, Result};
use crate::formula::{PathFormula, StateFormula};
use crate::mdp::{induce_chain, ActionId, MarkovChain, Mdp, StateId, StochasticPolicy};

/// Default Bellman residual bound for value iteration.
pub const DEFAULT_VI_TOL: f64 = 1e-9;
/// Default iteration budget for value iteration.
pub const DEFAULT_VI_MAX_ITERS: usize = 100_000;
/// Default window within which action qualities count as tied.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

/// Expected discounted utility of each enabled state-action pair.
#[derive(Debug, Clone)]
pub struct QTable {
    q: Vec<Vec<f64>>,
}

impl QTable {
    pub fn value(&self, s: StateId, a: ActionId) -> f64 {
        self.q[s][a]
    }

    pub fn row(&self, s: StateId) -> &[f64] {
        &self.q[s]
    }

    pub fn n_states(&self) -> usize {
        self.q.len()
    }
}

/// Outcome of a single check: the verdict, the satisfaction probability of
/// the outermost path formula at the query state (present exactly when the
/// formula's outer node is a probability operator), and the policy the
/// verdict is grounded in.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub verdict: bool,
    pub satisfaction_probability: Option<f64>,
    pub witness_policy: Option<StochasticPolicy>,
}

/// Solves the Bellman optimality equation by in-place value iteration with
/// per-action self-loop elimination. Returns the optimal state values and
/// the Q-table. `tol` bounds the sup-norm residual between sweeps.
pub fn value_iteration(mdp: &Mdp, tol: f64) -> Result<(Vec<f64>, QTable)> {
    value_iteration_bounded(mdp, tol, DEFAULT_VI_MAX_ITERS)
}

pub fn value_iteration_bounded(
    mdp: &Mdp,
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, QTable)> {
    let n = mdp.n_states();
    let gamma = mdp.discount();
    let mut values = vec![0.0f64; n];
    let mut converged = false;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        let mut max_delta = 0.0f64;
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            for a in 0..mdp.n_actions(s) {
                let reward = mdp.state_reward(s) + mdp.sa_reward(s, a);
                let mut acc = 0.0;
                let mut self_p = 0.0;
                for t in mdp.transitions(s, a) {
                    if t.successor == s {
                        self_p += t.probability;
                    } else {
                        acc += t.probability * values[t.successor];
                    }
                }
                // Solve the action's own self-loop mass exactly:
                // q = r + gamma * (self_p * q + acc).
                let q = (reward + gamma * acc) / (1.0 - gamma * self_p);
                if q > best {
                    best = q;
                }
            }
            let delta = (best - values[s]).abs();
            if delta > max_delta {
                max_delta = delta;
            }
            values[s] = best;
        }
        if max_delta < tol {
            converged = true;
            break;
        }
        residual = max_delta;
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "value iteration",
            max_iters,
            residual,
        });
    }
    let q = (0..n)
        .map(|s| {
            (0..mdp.n_actions(s))
                .map(|a| {
                    let reward = mdp.state_reward(s) + mdp.sa_reward(s, a);
                    let acc: f64 = mdp
                        .transitions(s, a)
                        .iter()
                        .map(|t| t.probability * values[t.successor])
                        .sum();
                    reward + gamma * acc
                })
                .collect()
        })
        .collect();
    Ok((values, QTable { q }))
}

/// The unique tie-broken greedy policy: per state, the lowest-indexed action
/// whose quality is within `tie_tol` of the row maximum.
pub fn extract_optimal_policy(q: &QTable, tie_tol: f64) -> StochasticPolicy {
    let rows = q
        .q
        .iter()
        .map(|row| {
            let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let chosen = row
                .iter()
                .position(|&v| v >= best - tie_tol)
                .unwrap_or(0);
            let mut out = vec![0.0; row.len()];
            out[chosen] = 1.0;
            out
        })
        .collect();
    StochasticPolicy::from_rows(rows)
}

/// Discounted state values of a fixed policy: solves `V = r + gamma P V` on
/// the induced chain by Gauss-Seidel sweeps (residual below [`SOLVE_TOL`]).
pub(crate) fn evaluate_policy_values(mdp: &Mdp, policy: &StochasticPolicy) -> Result<Vec<f64>> {
    let chain = induce_chain(mdp, policy)?;
    let gamma = mdp.discount();
    let n = mdp.n_states();
    // Policy-weighted reward, including any state-action component.
    let rewards: Vec<f64> = (0..n)
        .map(|s| {
            let mut r = mdp.state_reward(s);
            if mdp.has_sa_rewards() {
                for a in 0..mdp.n_actions(s) {
                    r += policy.prob(s, a) * mdp.sa_reward(s, a);
                }
            }
            r
        })
        .collect();
    let mut values = vec![0.0f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        let mut max_delta = 0.0f64;
        for s in 0..n {
            let mut acc = 0.0;
            let mut self_p = 0.0;
            for t in chain.row(s) {
                if t.successor == s {
                    self_p += t.probability;
                } else {
                    acc += t.probability * values[t.successor];
                }
            }
            let new = (rewards[s] + gamma * acc) / (1.0 - gamma * self_p);
            let delta = (new - values[s]).abs();
            if delta > max_delta {
                max_delta = delta;
            }
            values[s] = new;
        }
        if max_delta < SOLVE_TOL {
            return Ok(values);
        }
        residual = max_delta;
    }
    Err(Error::NoConvergence {
        what: "policy evaluation",
        max_iters: MAX_SWEEPS,
        residual,
    })
}

/// Expected discounted utility of `policy` from the initial state.
pub fn expected_utility(mdp: &Mdp, policy: &StochasticPolicy) -> Result<f64> {
    Ok(evaluate_policy_values(mdp, policy)?[mdp.initial_state()])
}

/// PCTL model checking of `f` on a Markov chain at `state`. Full nesting of
/// probability operators is allowed.
pub fn check_pctl_mc(chain: &MarkovChain, f: &StateFormula, state: StateId) -> Result<CheckResult> {
    if let StateFormula::Prob {
        relation,
        threshold,
        path,
    } = f
    {
        let p = path_probabilities(chain, path)?;
        let prob = p[state].clamp(0.0, 1.0);
        return Ok(CheckResult {
            verdict: relation.holds(prob, *threshold),
            satisfaction_probability: Some(prob),
            witness_policy: None,
        });
    }
    let sat = sat_states(chain, f)?;
    Ok(CheckResult {
        verdict: sat[state],
        satisfaction_probability: None,
        witness_policy: None,
    })
}

/// Optimal satisfaction probabilities over schedulers, as a standalone
/// operation: returns the per-state probability vector and an optimizing
/// deterministic policy.
pub fn max_reach_mdp(
    mdp: &Mdp,
    path: &PathFormula,
    mode: OptMode,
) -> Result<(Vec<f64>, StochasticPolicy)> {
    optimize_path_probability(mdp, path, mode)
}

/// Strategic stit check: does some policy make the probability bound hold at
/// `state`? Lower bounds are decided against the scheduler maximum, upper
/// bounds against the minimum; the optimizing policy is returned as witness
/// when the verdict is positive.
pub fn check_strategic_stit(mdp: &Mdp, f: &StateFormula, state: StateId) -> Result<CheckResult> {
    let StateFormula::Prob {
        relation,
        threshold,
        path,
    } = f
    else {
        return Err(Error::NestedProb);
    };
    let mode = if relation.is_lower_bound() {
        OptMode::Max
    } else {
        OptMode::Min
    };
    let (values, policy) = optimize_path_probability(mdp, path, mode)?;
    let prob = values[state].clamp(0.0, 1.0);
    let verdict = relation.holds(prob, *threshold);
    Ok(CheckResult {
        verdict,
        satisfaction_probability: Some(prob),
        witness_policy: verdict.then_some(policy),
    })
}

/// Strategic ought check: extract the unique tie-broken reward-optimal
/// policy, then model-check `f` on the chain it induces.
pub fn check_strategic_ought(mdp: &Mdp, f: &StateFormula, state: StateId) -> Result<CheckResult> {
    let (_, q) = value_iteration(mdp, DEFAULT_VI_TOL)?;
    let optimal = extract_optimal_policy(&q, DEFAULT_TIE_TOL);
    let chain = induce_chain(mdp, &optimal)?;
    let mut result = check_pctl_mc(&chain, f, state)?;
    result.witness_policy = Some(optimal);
    Ok(result)
}

/// How the violation states of a contrary-to-duty check are named.
#[derive(Debug, Clone)]
pub enum ViolationStates {
    States(Vec<StateId>),
    Label(String),
}

/// Outcome of a contrary-to-duty check: the duty evaluated at the initial
/// state (reported for context), the CTD obligation checked from every
/// violation state, and the conjunction of those verdicts.
#[derive(Debug, Clone)]
pub struct CtdResult {
    pub duty: CheckResult,
    pub per_violation: Vec<(StateId, CheckResult)>,
    pub verdict: bool,
}

/// Contrary-to-duty check: the CTD obligation must hold as a strategic ought
/// from every state that marks a violation of the duty.
pub fn check_ctd(
    mdp: &Mdp,
    duty: &StateFormula,
    violations: &ViolationStates,
    ctd: &StateFormula,
) -> Result<CtdResult> {
    let states: Vec<StateId> = match violations {
        ViolationStates::States(v) => v.clone(),
        ViolationStates::Label(name) => mdp
            .label_states(name)
            .ok_or_else(|| Error::UnknownAtom(name.clone()))?
            .to_vec(),
    };
    if states.is_empty() {
        return Err(Error::EmptyViolationSet);
    }
    // One optimal policy serves the duty report and all per-state CTD
    // checks; this matches running check_strategic_ought per state since the
    // optimal policy does not depend on the query state.
    let (_, q) = value_iteration(mdp, DEFAULT_VI_TOL)?;
    let optimal = extract_optimal_policy(&q, DEFAULT_TIE_TOL);
    let chain = induce_chain(mdp, &optimal)?;
    let mut duty_result = check_pctl_mc(&chain, duty, mdp.initial_state())?;
    duty_result.witness_policy = Some(optimal.clone());
    let mut per_violation = Vec::with_capacity(states.len());
    let mut verdict = true;
    for &v in &states {
        let mut r = check_pctl_mc(&chain, ctd, v)?;
        r.witness_policy = Some(optimal.clone());
        verdict &= r.verdict;
        per_violation.push((v, r));
    }
    Ok(CtdResult {
        duty: duty_result,
        per_violation,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, Bowtie};
    use crate::mdp::MdpBuilder;
    use crate::rng::Prng;

    fn absorbing_single(reward: f64, gamma: f64) -> Mdp {
        let mut b = MdpBuilder::new(1).discount(gamma);
        b.add_action(0, &[(0, 1.0)]);
        b.mark_absorbing(0);
        b.set_state_reward(0, reward);
        b.build().unwrap()
    }

    #[test]
    fn absorbing_value_is_reward_over_one_minus_gamma() {
        let mdp = absorbing_single(10.0, 0.9);
        let (v, _) = value_iteration(&mdp, 1e-12).unwrap();
        assert!((v[0] - 100.0).abs() < 1e-6, "got {}", v[0]);
    }

    #[test]
    fn two_state_chain_closed_form() {
        // s0 -> s1 (absorbing), R(s0) = -1, R(s1) = 10, gamma = 0.9.
        let mut b = MdpBuilder::new(2).discount(0.9);
        b.add_action(0, &[(1, 1.0)]);
        b.set_state_reward(0, -1.0);
        b.add_action(1, &[(1, 1.0)]);
        b.mark_absorbing(1);
        b.set_state_reward(1, 10.0);
        let mdp = b.build().unwrap();
        let (v, q) = value_iteration(&mdp, 1e-12).unwrap();
        assert!((v[0] - 89.0).abs() < 1e-6, "got {}", v[0]);
        assert!((q.value(0, 0) - 89.0).abs() < 1e-6);
    }

    #[test]
    fn tie_break_takes_lowest_index() {
        let q = QTable {
            q: vec![vec![5.0, 5.0], vec![7.0, 7.5]],
        };
        let pi = extract_optimal_policy(&q, 1e-9);
        assert_eq!(pi.as_deterministic().unwrap(), vec![0, 1]);
    }

    #[test]
    fn extracted_action_attains_the_max_on_random_tables() {
        let mut rng = Prng::seeded(5);
        for _ in 0..200 {
            let q = QTable {
                q: (0..6)
                    .map(|_| (0..1 + rng.below(4)).map(|_| rng.uniform_in(-5.0, 5.0)).collect())
                    .collect(),
            };
            let pi = extract_optimal_policy(&q, 1e-9);
            let choice = pi.as_deterministic().unwrap();
            for (s, &a) in choice.iter().enumerate() {
                let best = q.row(s).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert!(q.value(s, a) >= best - 1e-9);
            }
        }
    }

    #[test]
    fn expected_utility_matches_absorbing_closed_form() {
        let mdp = absorbing_single(10.0, 0.9);
        let pi = StochasticPolicy::uniform(&mdp);
        let v = expected_utility(&mdp, &pi).unwrap();
        assert!((v - 100.0).abs() < 1e-8);
    }

    #[test]
    fn optimal_policy_dominates_random_policies() {
        let mut rng = Prng::seeded(77);
        let mdp = crate::test_support::random_mdp(&mut rng, 8, 3);
        let (_, q) = value_iteration(&mdp, 1e-10).unwrap();
        let optimal = extract_optimal_policy(&q, 1e-9);
        let v_opt = expected_utility(&mdp, &optimal).unwrap();
        for _ in 0..100 {
            let pi = crate::test_support::random_policy(&mut rng, &mdp);
            let v = expected_utility(&mdp, &pi).unwrap();
            assert!(v <= v_opt + 1e-7, "random policy beat optimal: {v} > {v_opt}");
        }
    }

    #[test]
    fn value_iteration_cross_checks_policy_evaluation() {
        let mut rng = Prng::seeded(78);
        for _ in 0..20 {
            let mdp = crate::test_support::random_mdp(&mut rng, 6, 3);
            let (v, q) = value_iteration(&mdp, 1e-12).unwrap();
            let pi = extract_optimal_policy(&q, 1e-9);
            let v_pi = expected_utility(&mdp, &pi).unwrap();
            assert!(
                (v[mdp.initial_state()] - v_pi).abs() < 1e-6,
                "{} vs {v_pi}",
                v[mdp.initial_state()]
            );
        }
    }

    fn stit_demo_mdp() -> Mdp {
        // Two-step tree in MDP form: from the root, one action keeps A
        // reachable surely, the other leads to B-land.
        let mut b = MdpBuilder::new(4).discount(0.95);
        b.add_action(0, &[(1, 1.0)]); // toward A
        b.add_action(0, &[(2, 1.0)]); // toward B
        b.add_action(1, &[(3, 1.0)]); // commit to A
        b.add_action(1, &[(2, 1.0)]); // drift to B
        b.add_action(2, &[(2, 1.0)]);
        b.mark_absorbing(2);
        b.add_action(3, &[(3, 1.0)]);
        b.mark_absorbing(3);
        b.add_label("A", &[3]);
        b.add_label("B", &[2]);
        b.set_state_reward(2, 7.5);
        b.set_state_reward(3, 7.0);
        b.build().unwrap()
    }

    #[test]
    fn stit_holds_via_existential_policy() {
        let mdp = stit_demo_mdp();
        let f = parse_formula("P>=1 [ F A ]").unwrap();
        let r = check_strategic_stit(&mdp, &f, 0).unwrap();
        assert!(r.verdict);
        let witness = r.witness_policy.unwrap().as_deterministic().unwrap();
        assert_eq!(witness[0], 0);
        assert_eq!(witness[1], 0);
    }

    #[test]
    fn stit_fails_when_no_policy_reaches() {
        let mut b = MdpBuilder::new(2);
        b.add_action(0, &[(0, 1.0)]);
        b.mark_absorbing(0);
        b.add_action(1, &[(1, 1.0)]);
        b.mark_absorbing(1);
        b.add_label("goal", &[1]);
        let mdp = b.build().unwrap();
        let f = parse_formula("P>=0.5 [ F goal ]").unwrap();
        let r = check_strategic_stit(&mdp, &f, 0).unwrap();
        assert!(!r.verdict);
        assert_eq!(r.satisfaction_probability, Some(0.0));
        assert!(r.witness_policy.is_none());
    }

    #[test]
    fn ought_follows_the_optimal_policy() {
        // The higher-reward branch is B; the ought of eventually-B holds,
        // the ought of eventually-A does not.
        let mdp = stit_demo_mdp();
        let ought_b = check_strategic_ought(&mdp, &parse_formula("P>=1 [ F B ]").unwrap(), 0)
            .unwrap();
        assert!(ought_b.verdict);
        let ought_a = check_strategic_ought(&mdp, &parse_formula("P>=0.5 [ F A ]").unwrap(), 0)
            .unwrap();
        assert!(!ought_a.verdict);
    }

    #[test]
    fn ought_handles_nested_prob_content() {
        let mdp = stit_demo_mdp();
        let f = parse_formula("P>=1 [ F P>=1 [ G B ] ]").unwrap();
        let r = check_strategic_ought(&mdp, &f, 0).unwrap();
        assert!(r.verdict);
    }

    #[test]
    fn stit_rejects_non_prob_formula() {
        let mdp = stit_demo_mdp();
        assert!(check_strategic_stit(&mdp, &StateFormula::atom("A"), 0).is_err());
    }

    #[test]
    fn ought_implies_stit_on_random_models() {
        let mut rng = Prng::seeded(2024);
        let mut oughts = 0;
        for _ in 0..500 {
            let mdp = crate::test_support::random_mdp(&mut rng, 5, 2);
            let mut b = MdpBuilder::new(mdp.n_states());
            for s in 0..mdp.n_states() {
                for a in 0..mdp.n_actions(s) {
                    let row: Vec<_> = mdp
                        .transitions(s, a)
                        .iter()
                        .map(|t| (t.successor, t.probability))
                        .collect();
                    b.add_action(s, &row);
                }
                b.set_state_reward(s, rng.uniform_in(-1.0, 1.0));
            }
            b.add_label("x", &[rng.below(mdp.n_states())]);
            let mdp = b.build().unwrap();
            let rho = (rng.uniform() * 10.0).floor() / 10.0;
            let relation = if rng.below(2) == 0 { Bowtie::Ge } else { Bowtie::Lt };
            let f = StateFormula::prob(
                relation,
                rho,
                PathFormula::Eventually(StateFormula::atom("x")),
            );
            let ought = check_strategic_ought(&mdp, &f, mdp.initial_state()).unwrap();
            if ought.verdict {
                oughts += 1;
                let stit = check_strategic_stit(&mdp, &f, mdp.initial_state()).unwrap();
                assert!(stit.verdict, "ought held but stit failed for {f}");
            }
        }
        assert!(oughts > 0, "vacuous test: no ought ever held");
    }

    #[test]
    fn verdict_monotone_in_threshold() {
        let mut rng = Prng::seeded(31);
        for _ in 0..50 {
            let mdp = crate::test_support::random_mdp(&mut rng, 5, 2);
            let mut b = MdpBuilder::new(mdp.n_states());
            for s in 0..mdp.n_states() {
                for a in 0..mdp.n_actions(s) {
                    let row: Vec<_> = mdp
                        .transitions(s, a)
                        .iter()
                        .map(|t| (t.successor, t.probability))
                        .collect();
                    b.add_action(s, &row);
                }
            }
            b.add_label("x", &[rng.below(mdp.n_states())]);
            let mdp = b.build().unwrap();
            let rho1 = rng.uniform();
            let rho2 = rng.uniform() * rho1;
            let check = |rho| {
                let f = StateFormula::prob(
                    Bowtie::Ge,
                    rho,
                    PathFormula::Eventually(StateFormula::atom("x")),
                );
                check_strategic_ought(&mdp, &f, mdp.initial_state())
                    .unwrap()
                    .verdict
            };
            if check(rho1) {
                assert!(check(rho2), "verdict not monotone: {rho1} held but {rho2} failed");
            }
        }
    }

    #[test]
    fn ctd_conjunction_over_violation_states() {
        // From the violation state 1 the optimal policy surely returns to
        // the start label; from 2 it cannot.
        let mut b = MdpBuilder::new(4).discount(0.9);
        b.add_action(0, &[(1, 0.5), (2, 0.5)]);
        b.add_action(1, &[(3, 1.0)]);
        b.add_action(2, &[(2, 1.0)]);
        b.mark_absorbing(2);
        b.add_action(3, &[(3, 1.0)]);
        b.mark_absorbing(3);
        b.set_state_reward(3, 5.0);
        b.add_label("start", &[3]);
        b.add_label("north", &[1, 2]);
        let mdp = b.build().unwrap();
        let duty = parse_formula("P>=0.5 [ X start ]").unwrap();
        let ctd = parse_formula("P>=0.6 [ F start ]").unwrap();
        let single = check_ctd(
            &mdp,
            &duty,
            &ViolationStates::States(vec![1]),
            &ctd,
        )
        .unwrap();
        assert!(single.verdict);
        let direct = check_strategic_ought(&mdp, &ctd, 1).unwrap();
        assert_eq!(single.per_violation[0].1.verdict, direct.verdict);

        let both = check_ctd(&mdp, &duty, &ViolationStates::Label("north".into()), &ctd).unwrap();
        assert!(!both.verdict, "absorbing unlabeled violation state must fail");
        assert!(matches!(
            check_ctd(&mdp, &duty, &ViolationStates::States(vec![]), &ctd),
            Err(Error::EmptyViolationSet)
        ));
    }
}
