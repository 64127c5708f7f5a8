//! Seeded Monte Carlo execution of policies on sampled service times.
//!
//! Service times come from a counter-based stream keyed by
//! `(seed, replication, job)`: ChaCha8 seeded from `seed`, stream number
//! `replication`, word offset `2 * job`. A job's draw therefore does not depend
//! on when, or whether, any other job is started, which keeps two policies
//! coupled on the same realizations (common random numbers).

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::error::{Result, SchedError};
use crate::model::{Instance, JobStatus, State};
use crate::policy::Policy;
use crate::stats::mean_and_se;

/// Realized service time of every job for one replication.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SampledScenario {
    pub service_times: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobTrace {
    pub start_slot: Option<u32>,
    pub completion_slot: Option<u32>,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub jobs: Vec<JobTrace>,
    pub total: f64,
}

impl RunTrace {
    fn new(n_jobs: usize) -> Self {
        RunTrace {
            jobs: vec![
                JobTrace {
                    start_slot: None,
                    completion_slot: None,
                    reward: 0.0,
                };
                n_jobs
            ],
            total: 0.0,
        }
    }

    /// Largest number of jobs in service during any slot.
    pub fn max_concurrency(&self) -> usize {
        let mut events: Vec<(u32, i32)> = Vec::new();
        for j in &self.jobs {
            if let (Some(s), Some(c)) = (j.start_slot, j.completion_slot) {
                events.push((s, 1));
                events.push((c, -1));
            }
        }
        // completions free a processor before starts at the same slot
        events.sort_by_key(|&(t, d)| (t, d));
        let mut cur = 0i32;
        let mut best = 0i32;
        for (_, d) in events {
            cur += d;
            best = best.max(cur);
        }
        best as usize
    }
}

/// A policy produced an infeasible action mid-run.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct SimulationFailure {
    pub error: SchedError,
    pub partial: RunTrace,
}

impl From<SimulationFailure> for SchedError {
    fn from(f: SimulationFailure) -> Self {
        f.error
    }
}

pub fn sample_service_times(instance: &Instance, seed: u64, replication: u64) -> SampledScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    let service_times = instance
        .jobs()
        .iter()
        .enumerate()
        .map(|(j, job)| {
            rng.set_word_pos(2 * j as u128);
            let u: f64 = rng.gen();
            job.service.sample(u)
        })
        .collect();
    SampledScenario { service_times }
}

/// Runs `policy` slot by slot on fixed service times.
///
/// A job started at `t` finishes at `t + σ` and earns `w(t + σ)`. The run stops
/// once every job is done or `t` reaches the horizon; anything still in
/// service then finishes past the horizon and earns zero, and jobs never
/// started earn nothing.
pub fn run_policy_on_sample<P: Policy + ?Sized>(
    instance: &Instance,
    policy: &P,
    scenario: &SampledScenario,
) -> std::result::Result<RunTrace, SimulationFailure> {
    let mut trace = RunTrace::new(instance.n_jobs());
    let mut state = State::initial(instance);
    let horizon = instance.horizon();
    loop {
        let t = state.t();
        for j in 0..instance.n_jobs() {
            if let JobStatus::InService { start_slot, .. } = state.job_status(j) {
                if start_slot + scenario.service_times[j] == t {
                    state.complete(j);
                }
            }
        }
        if state.all_done() || t >= horizon {
            break;
        }
        let action = match policy
            .decide(&state, instance)
            .and_then(|a| a.check_feasible(&state).map(|_| a))
        {
            Ok(a) => a,
            Err(error) => {
                finish(instance, &mut trace);
                return Err(SimulationFailure { error, partial: trace });
            }
        };
        for j in action.jobs() {
            trace.jobs[j].start_slot = Some(t);
            trace.jobs[j].completion_slot = Some(t + scenario.service_times[j]);
        }
        state = state.with_started(&action);
        state.advance();
    }
    finish(instance, &mut trace);
    Ok(trace)
}

fn finish(instance: &Instance, trace: &mut RunTrace) {
    for (j, jt) in trace.jobs.iter_mut().enumerate() {
        jt.reward = jt
            .completion_slot
            .map_or(0.0, |c| instance.job(j).reward.eval(c));
    }
    trace.total = trace.jobs.iter().map(|j| j.reward).sum();
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub n_reps: u64,
}

fn totals<P: Policy + ?Sized>(instance: &Instance, policy: &P, n_reps: u64, seed: u64) -> Result<Vec<f64>> {
    (0..n_reps)
        .into_par_iter()
        .map(|r| {
            let scenario = sample_service_times(instance, seed, r);
            Ok(run_policy_on_sample(instance, policy, &scenario)?.total)
        })
        .collect()
}

/// Mean and standard error of the total reward over replications `0..n_reps`.
pub fn monte_carlo_evaluate<P: Policy + ?Sized>(
    instance: &Instance,
    policy: &P,
    n_reps: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if n_reps == 0 {
        return Err(SchedError::Domain("n_reps must be >= 1".into()));
    }
    let xs = totals(instance, policy, n_reps, seed)?;
    let (mean, standard_error) = mean_and_se(&xs);
    Ok(MonteCarloEstimate {
        mean,
        standard_error,
        n_reps,
    })
}

/// Paired comparison of two policies on identical sampled scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrnComparison {
    pub mean_a: f64,
    pub mean_b: f64,
    /// `Σ_r A_r / Σ_r B_r`; 1 when both sums are zero.
    pub ratio: f64,
    /// Mean of `A_r - B_r`.
    pub mean_difference: f64,
    /// Standard error of the paired differences.
    pub difference_se: f64,
    pub n_reps: u64,
}

pub fn compare_policies_crn<A: Policy + ?Sized, B: Policy + ?Sized>(
    instance: &Instance,
    policy_a: &A,
    policy_b: &B,
    n_reps: u64,
    seed: u64,
) -> Result<CrnComparison> {
    if n_reps == 0 {
        return Err(SchedError::Domain("n_reps must be >= 1".into()));
    }
    let pairs: Vec<(f64, f64)> = (0..n_reps)
        .into_par_iter()
        .map(|r| {
            let scenario = sample_service_times(instance, seed, r);
            let a = run_policy_on_sample(instance, policy_a, &scenario)?.total;
            let b = run_policy_on_sample(instance, policy_b, &scenario)?.total;
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    let (xa, xb): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
    let (mean_a, _) = mean_and_se(&xa);
    let (mean_b, _) = mean_and_se(&xb);
    let (mean_difference, difference_se) = mean_and_se(&diffs);
    let ratio = if mean_a == 0.0 && mean_b == 0.0 {
        1.0
    } else {
        mean_a / mean_b
    };
    Ok(CrnComparison {
        mean_a,
        mean_b,
        ratio,
        mean_difference,
        difference_se,
        n_reps,
    })
}

/// CSV with columns `replication,job_id,start_slot,completion_slot,reward`;
/// slots are empty for jobs that never started.
pub fn write_traces_csv<W: Write>(mut w: W, traces: &[(u64, RunTrace)]) -> Result<()> {
    writeln!(w, "replication,job_id,start_slot,completion_slot,reward")?;
    let opt = |v: Option<u32>| v.map(|x| x.to_string()).unwrap_or_default();
    for (rep, trace) in traces {
        for (j, jt) in trace.jobs.iter().enumerate() {
            writeln!(
                w,
                "{rep},{j},{},{},{}",
                opt(jt.start_slot),
                opt(jt.completion_slot),
                jt.reward
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Job, Matching, RewardFn, ServiceDist};
    use crate::policy::GreedyPolicy;

    fn iid_tightness(eps: f64) -> Instance {
        let one = ServiceDist::deterministic(1).unwrap();
        Instance::new(
            vec![
                Job::new(RewardFn::step(1.0 - eps, 1).unwrap(), one.clone()),
                Job::new(RewardFn::step(1.0, 10).unwrap(), one),
            ],
            1,
            10,
        )
        .unwrap()
    }

    #[test]
    fn greedy_trace_on_iid_example() {
        let inst = iid_tightness(0.25);
        let sc = sample_service_times(&inst, 0, 0);
        let tr = run_policy_on_sample(&inst, &GreedyPolicy, &sc).unwrap();
        assert_eq!(tr.total, 1.0);
        assert_eq!(tr.jobs[1].completion_slot, Some(1));
        assert_eq!(tr.jobs[1].reward, 1.0);
        assert_eq!(tr.jobs[0].completion_slot, Some(2));
        assert_eq!(tr.jobs[0].reward, 0.0);
    }

    #[test]
    fn job_one_first_earns_more() {
        let inst = iid_tightness(0.25);
        let first = |s: &State, _: &Instance| {
            let pick: Vec<usize> = s.waiting_jobs().take(1).collect();
            Ok(Matching::canonical(&pick, s))
        };
        let sc = sample_service_times(&inst, 9, 3);
        let tr = run_policy_on_sample(&inst, &first, &sc).unwrap();
        assert_eq!(tr.total, 1.75);
    }

    #[test]
    fn sampling_is_reproducible() {
        let inst = Instance::new(
            vec![
                Job::new(RewardFn::step(1.0, 10).unwrap(), ServiceDist::geometric(0.3).unwrap()),
                Job::new(RewardFn::step(1.0, 10).unwrap(), ServiceDist::geometric(0.6).unwrap()),
            ],
            1,
            10,
        )
        .unwrap();
        assert_eq!(sample_service_times(&inst, 7, 11), sample_service_times(&inst, 7, 11));
        let distinct = (0..50)
            .map(|r| sample_service_times(&inst, 7, r))
            .collect::<std::collections::HashSet<_>>();
        assert!(distinct.len() > 10);
    }

    #[test]
    fn deterministic_instance_has_zero_error() {
        let inst = iid_tightness(0.1);
        let est = monte_carlo_evaluate(&inst, &GreedyPolicy, 200, 1).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.standard_error, 0.0);
    }

    #[test]
    fn infeasible_policy_returns_partial_trace() {
        let inst = iid_tightness(0.1);
        // keeps asking for job 0, which is done after slot 1
        let bad = |_: &State, _: &Instance| Ok(Matching::new(vec![(0, 0)]));
        let sc = sample_service_times(&inst, 0, 0);
        let err = run_policy_on_sample(&inst, &bad, &sc).unwrap_err();
        assert_eq!(err.partial.jobs[0].start_slot, Some(0));
        assert!(matches!(err.error, SchedError::InfeasibleAction { t: 1, .. }));
    }

    #[test]
    fn trace_csv_layout() {
        let inst = iid_tightness(0.25);
        let tr = run_policy_on_sample(&inst, &GreedyPolicy, &sample_service_times(&inst, 0, 0)).unwrap();
        let mut buf = Vec::new();
        write_traces_csv(&mut buf, &[(4, tr)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "replication,job_id,start_slot,completion_slot,reward\n4,0,1,2,0\n4,1,0,1,1\n"
        );
    }
}
