//! Exact finite-horizon dynamic programming over canonical states.
//!
//! States are enumerated forward slot by slot from the all-waiting initial
//! state, then valued backward from the last reachable slot. The reward of a
//! started job is credited when it starts, as `E[w_j(t + σ_j)]`; a state with
//! no waiting job (or with `t >= horizon`) therefore has value zero.
//!
//! Geometric jobs in service carry no age in the key (memorylessness), so the
//! state count stays at most `3^J` per slot for all-geometric instances.

mod kernel;
mod table;

use itertools::Itertools;
use rayon::prelude::*;

pub use kernel::transition_distribution;
pub use table::{CanonicalStateKey, KeyStatus, PolicyTable};

use crate::error::{Result, SchedError};
use crate::model::{Instance, ServiceDist};
use crate::policy::Policy;
use kernel::completion_outcomes;
use table::{mask_jobs, KeyCodec, Layer, DONE, IN_SERVICE, WAITING};

/// Default cap on (state, action) evaluations.
pub const DEFAULT_MAX_EVALUATIONS: u64 = 50_000_000;

/// Relative slack under which two action values count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActionSpace {
    /// Only matchings that start `min(K, F)` jobs.
    #[default]
    NonIdling,
    /// Every feasible matching, including the empty one.
    IdlingPermitted,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_evaluations: u64,
    pub action_space: ActionSpace,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
            action_space: ActionSpace::NonIdling,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub max_evaluations: u64,
    /// Keep the ages of memoryless in-service jobs in the state, so that
    /// policies reading start slots of geometric jobs are evaluated exactly.
    pub track_memoryless_ages: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
            track_memoryless_ages: false,
        }
    }
}

struct Model<'a> {
    instance: &'a Instance,
    codec: KeyCodec,
    /// `locked[j][t] = E[w_j(t + σ_j)]` for `t = 0..=horizon`.
    locked: Vec<Vec<f64>>,
    /// Hazard by age for finite-support jobs; a single entry `p` for geometric.
    hazards: Vec<Vec<f64>>,
}

impl<'a> Model<'a> {
    fn new(instance: &'a Instance, track_memoryless_ages: bool) -> Result<Self> {
        if instance.n_jobs() > 63 {
            return Err(SchedError::StateSpaceTooLarge {
                dimension: "jobs",
                count: instance.n_jobs() as u64,
                cap: 63,
            });
        }
        let max_age = instance
            .jobs()
            .iter()
            .filter_map(|j| j.service.max_support())
            .max()
            .unwrap_or(0)
            .max(instance.horizon());
        if max_age >= u32::from(u16::MAX - IN_SERVICE) {
            return Err(SchedError::StateSpaceTooLarge {
                dimension: "service age / horizon",
                count: u64::from(max_age),
                cap: u64::from(u16::MAX - IN_SERVICE - 1),
            });
        }
        let horizon = instance.horizon();
        let locked = instance
            .jobs()
            .iter()
            .map(|job| (0..=horizon).map(|t| job.expected_completion_reward(t)).collect())
            .collect();
        let hazards = instance
            .jobs()
            .iter()
            .map(|job| match &job.service {
                ServiceDist::Geometric { p } => vec![*p],
                s => (0..s.max_support().unwrap_or(1)).map(|a| s.hazard(a)).collect(),
            })
            .collect();
        Ok(Model {
            instance,
            codec: KeyCodec::new(instance, track_memoryless_ages),
            locked,
            hazards,
        })
    }

    fn hazard(&self, j: usize, age: u32) -> f64 {
        let h = &self.hazards[j];
        if self.instance.job(j).service.is_memoryless() {
            h[0]
        } else {
            h.get(age as usize).copied().unwrap_or(1.0)
        }
    }

    fn is_terminal(&self, t: u32, codes: &[u16]) -> bool {
        t >= self.instance.horizon() || !codes.contains(&WAITING)
    }

    fn immediate(&self, t: u32, mask: u64) -> f64 {
        mask_jobs(mask).map(|j| self.locked[j][t as usize]).sum()
    }

    fn candidate_masks(&self, codes: &[u16], space: ActionSpace) -> Vec<u64> {
        let waiting: Vec<usize> = codes
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == WAITING)
            .map(|(j, _)| j)
            .collect();
        let busy = codes.iter().filter(|&&c| c >= IN_SERVICE).count();
        let free = self.instance.n_processors().saturating_sub(busy);
        let max = waiting.len().min(free);
        let sizes = match space {
            ActionSpace::NonIdling => max..=max,
            ActionSpace::IdlingPermitted => 0..=max,
        };
        sizes
            .flat_map(|k| waiting.iter().copied().combinations(k))
            .map(|js| js.into_iter().fold(0u64, |m, j| m | 1 << j))
            .collect()
    }

    /// Successor keys and probabilities after starting `mask` in `codes`.
    fn successors(&self, codes: &[u16], mask: u64, scratch: &mut Vec<(u64, f64)>) -> Vec<(Box<[u16]>, f64)> {
        let mut running: Vec<(usize, u32)> = Vec::new();
        for (j, &c) in codes.iter().enumerate() {
            if mask >> j & 1 == 1 {
                running.push((j, 0));
            } else if c >= IN_SERVICE {
                running.push((j, u32::from(c - IN_SERVICE)));
            }
        }
        let hazards: Vec<f64> = running.iter().map(|&(j, a)| self.hazard(j, a)).collect();
        completion_outcomes(&hazards, scratch);
        scratch
            .iter()
            .map(|&(done, prob)| {
                let mut next: Box<[u16]> = codes.into();
                for (i, &(j, age)) in running.iter().enumerate() {
                    next[j] = if done >> i & 1 == 1 {
                        DONE
                    } else {
                        self.codec.in_service_code(j, age + 1)
                    };
                }
                (next, prob)
            })
            .collect()
    }

    /// Forward reachability; `choose` lists the candidate actions of a non-terminal state.
    fn enumerate<F>(&self, max_evaluations: u64, mut choose: F) -> Result<(Vec<Layer>, u64)>
    where
        F: FnMut(u32, &[u16]) -> Result<Vec<u64>>,
    {
        let mut layers = Vec::new();
        let mut cur = Layer::new();
        cur.intern(vec![WAITING; self.instance.n_jobs()].into());
        let mut evaluations = 0u64;
        let mut scratch = Vec::new();
        let mut t = 0u32;
        loop {
            let mut next = Layer::new();
            for i in 0..cur.keys.len() {
                if !self.is_terminal(t, &cur.keys[i]) {
                    let codes = cur.keys[i].clone();
                    let cands = choose(t, &codes)?;
                    evaluations += cands.len() as u64;
                    if evaluations > max_evaluations {
                        return Err(SchedError::StateSpaceTooLarge {
                            dimension: "state-action evaluations",
                            count: evaluations,
                            cap: max_evaluations,
                        });
                    }
                    for &mask in &cands {
                        for (succ, _) in self.successors(&codes, mask, &mut scratch) {
                            next.intern(succ);
                        }
                    }
                    cur.actions.extend(cands);
                }
                cur.offsets.push(cur.actions.len());
            }
            layers.push(cur);
            if next.keys.is_empty() {
                break;
            }
            cur = next;
            t += 1;
        }
        Ok((layers, evaluations))
    }

    /// Backward pass: value of every state as the best candidate's
    /// `immediate + E[next value]`; earlier candidates win ties.
    fn backward(&self, layers: &mut [Layer]) {
        for t in (0..layers.len()).rev() {
            let (head, tail) = layers.split_at_mut(t + 1);
            let cur = &head[t];
            let next = tail.first();
            let results: Vec<(f64, u64)> = (0..cur.keys.len())
                .into_par_iter()
                .map_init(Vec::new, |scratch, i| {
                    let mut best: Option<(f64, u64)> = None;
                    for &mask in cur.candidates(i) {
                        let mut v = self.immediate(t as u32, mask);
                        if let Some(next) = next {
                            for (succ, p) in self.successors(&cur.keys[i], mask, scratch) {
                                v += p * next.values[next.index[&succ]];
                            }
                        }
                        match best {
                            Some((b, _)) if v <= b + TIE_TOLERANCE * b.abs().max(1.0) => {}
                            _ => best = Some((v, mask)),
                        }
                    }
                    best.unwrap_or((0.0, 0))
                })
                .collect();
            let cur = &mut head[t];
            (cur.values, cur.chosen) = results.into_iter().unzip();
        }
    }
}

/// Optimal value and policy by backward induction with the default configuration.
pub fn solve_optimal(instance: &Instance) -> Result<PolicyTable> {
    solve_optimal_with(instance, &SolverConfig::default())
}

pub fn solve_optimal_with(instance: &Instance, config: &SolverConfig) -> Result<PolicyTable> {
    let model = Model::new(instance, false)?;
    let (mut layers, evaluations) = model.enumerate(config.max_evaluations, |_, codes| {
        Ok(model.candidate_masks(codes, config.action_space))
    })?;
    model.backward(&mut layers);
    Ok(PolicyTable {
        codec: model.codec,
        layers,
        n_processors: instance.n_processors(),
        evaluations,
    })
}

/// Exact value of `policy` at every state it reaches, on the solver's kernel.
///
/// The policy is queried once per canonical state with a representative
/// [`crate::model::State`]: in-service jobs sit on processors in ascending job
/// order, and unless [`EvalOptions::track_memoryless_ages`] is set, geometric
/// jobs in service are shown with start slot `t - 1`.
pub fn evaluate_policy_table<P: Policy + ?Sized>(
    instance: &Instance,
    policy: &P,
    options: &EvalOptions,
) -> Result<PolicyTable> {
    let model = Model::new(instance, options.track_memoryless_ages)?;
    let n = instance.n_processors();
    let (mut layers, evaluations) = model.enumerate(options.max_evaluations, |t, codes| {
        let rep = model.codec.representative(t, codes, n);
        let action = policy.decide(&rep, instance)?;
        action.check_feasible(&rep).map_err(|e| SchedError::InfeasibleAction {
            t,
            reason: format!("in state [{}]: {e}", model.codec.key(t, codes)),
        })?;
        Ok(vec![action.jobs().fold(0u64, |m, j| m | 1 << j)])
    })?;
    model.backward(&mut layers);
    Ok(PolicyTable {
        codec: model.codec,
        layers,
        n_processors: n,
        evaluations,
    })
}

/// Exact expected total reward of `policy` from the initial state.
pub fn evaluate_policy_exact<P: Policy + ?Sized>(instance: &Instance, policy: &P) -> Result<f64> {
    Ok(evaluate_policy_table(instance, policy, &EvalOptions::default())?.initial_value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Job, Matching, RewardFn, State};
    use crate::policy::GreedyPolicy;

    fn suboptimality_example(m: f64, eps: f64, horizon: u32) -> Instance {
        Instance::new(
            vec![
                Job::new(RewardFn::step(m * m, 1).unwrap(), ServiceDist::geometric(1.0 / m).unwrap()),
                Job::new(RewardFn::step(1.0 + eps, horizon).unwrap(), ServiceDist::geometric(1.0).unwrap()),
            ],
            1,
            horizon,
        )
        .unwrap()
    }

    #[test]
    fn single_deterministic_job() {
        let inst = Instance::new(
            vec![Job::new(RewardFn::step(5.0, 3).unwrap(), ServiceDist::deterministic(2).unwrap())],
            1,
            3,
        )
        .unwrap();
        let table = solve_optimal(&inst).unwrap();
        assert_eq!(table.initial_value(), 5.0);
    }

    #[test]
    fn suboptimality_example_values() {
        let inst = suboptimality_example(4.0, 0.1, 100);
        let table = solve_optimal(&inst).unwrap();
        assert!((table.initial_value() - 5.1).abs() < 1e-9);
        assert_eq!(table.action_jobs(&State::initial(&inst)).unwrap(), vec![0]);
        let g = evaluate_policy_exact(&inst, &GreedyPolicy).unwrap();
        assert!((g - 1.1).abs() < 1e-12);
    }

    #[test]
    fn optimal_table_evaluates_to_itself() {
        let inst = suboptimality_example(3.0, 0.2, 20);
        let table = solve_optimal(&inst).unwrap();
        let v = evaluate_policy_exact(&inst, &table).unwrap();
        assert!((v - table.initial_value()).abs() < 1e-12);
    }

    #[test]
    fn cap_names_dimension() {
        let inst = suboptimality_example(4.0, 0.1, 100);
        let cfg = SolverConfig {
            max_evaluations: 3,
            ..Default::default()
        };
        match solve_optimal_with(&inst, &cfg) {
            Err(SchedError::StateSpaceTooLarge { dimension, .. }) => {
                assert_eq!(dimension, "state-action evaluations")
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_policy_reports_state() {
        let inst = suboptimality_example(4.0, 0.1, 10);
        let bad = |_: &State, _: &Instance| Ok(Matching::new(vec![(0, 0), (1, 0)]));
        match evaluate_policy_exact(&inst, &bad) {
            Err(SchedError::InfeasibleAction { t, reason }) => {
                assert_eq!(t, 0);
                assert!(reason.contains("[W W]"), "{reason}");
            }
            other => panic!("expected infeasible action, got {other:?}"),
        }
    }

    #[test]
    fn dump_is_ordered() {
        let inst = suboptimality_example(2.0, 0.5, 4);
        let table = solve_optimal(&inst).unwrap();
        let mut buf = Vec::new();
        table.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,jobs,action,value"));
        assert!(lines.next().unwrap().starts_with("0,W W,0,"));
        let ts: Vec<u32> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
        assert!(ts.windows(2).all(|w| w[0] <= w[1]));
    }
}
