use crate::error::Result;
use crate::model::{Instance, JobStatus, Matching, State};

/// Completion outcomes of independent jobs with per-slot completion
/// probabilities `hazards`. Bit `i` of the mask is set when job `i` completes.
/// Zero-probability outcomes are dropped.
pub(crate) fn completion_outcomes(hazards: &[f64], out: &mut Vec<(u64, f64)>) {
    out.clear();
    let m = hazards.len();
    debug_assert!(m < 64);
    for mask in 0u64..(1u64 << m) {
        let mut prob = 1.0;
        for (i, &h) in hazards.iter().enumerate() {
            prob *= if mask >> i & 1 == 1 { h } else { 1.0 - h };
            if prob == 0.0 {
                break;
            }
        }
        if prob > 0.0 {
            out.push((mask, prob));
        }
    }
}

/// Distribution of the state at `t + 1` after starting `action` in `state`.
///
/// Every in-service or newly started job completes this slot with its hazard
/// `P(σ = a + 1 | σ > a)` at age `a`, independently of the others.
pub fn transition_distribution(
    state: &State,
    action: &Matching,
    instance: &Instance,
) -> Result<Vec<(State, f64)>> {
    state.validate_for(instance)?;
    action.check_feasible(state)?;
    let started = state.with_started(action);
    let t = state.t();
    let running: Vec<(usize, f64)> = started
        .job_statuses()
        .iter()
        .enumerate()
        .filter_map(|(j, s)| match s {
            JobStatus::InService { start_slot, .. } => {
                Some((j, instance.job(j).service.hazard(t - start_slot)))
            }
            _ => None,
        })
        .collect();
    let hazards: Vec<f64> = running.iter().map(|r| r.1).collect();
    let mut outcomes = Vec::new();
    completion_outcomes(&hazards, &mut outcomes);
    Ok(outcomes
        .into_iter()
        .map(|(mask, prob)| {
            let mut next = started.clone();
            for (i, (j, _)) in running.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    next.complete(*j);
                }
            }
            next.advance();
            (next, prob)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Job, ProcessorStatus, RewardFn, ServiceDist};

    fn inst(services: Vec<ServiceDist>, n: usize) -> Instance {
        let jobs = services
            .into_iter()
            .map(|s| Job::new(RewardFn::step(1.0, 10).unwrap(), s))
            .collect();
        Instance::new(jobs, n, 10).unwrap()
    }

    #[test]
    fn geometric_single_job() {
        let i = inst(vec![ServiceDist::geometric(0.3).unwrap()], 1);
        let s = State::initial(&i);
        let a = Matching::new(vec![(0, 0)]);
        let d = transition_distribution(&s, &a, &i).unwrap();
        assert_eq!(d.len(), 2);
        let done = d.iter().find(|(s, _)| s.all_done()).unwrap();
        assert!((done.1 - 0.3).abs() < 1e-15);
        let busy = d.iter().find(|(s, _)| !s.all_done()).unwrap();
        assert!((busy.1 - 0.7).abs() < 1e-15);
        assert_eq!(busy.0.t(), 1);
        assert_eq!(busy.0.processor_statuses()[0], ProcessorStatus::Busy { job: 0 });
    }

    #[test]
    fn deterministic_one_completes_surely() {
        let i = inst(vec![ServiceDist::deterministic(1).unwrap()], 1);
        let d = transition_distribution(&State::initial(&i), &Matching::new(vec![(0, 0)]), &i).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d[0].0.all_done());
        assert_eq!(d[0].1, 1.0);
    }

    #[test]
    fn two_geometric_halves() {
        let g = ServiceDist::geometric(0.5).unwrap();
        let i = inst(vec![g.clone(), g], 2);
        let s = State::new(
            3,
            vec![
                JobStatus::InService { processor: 0, start_slot: 1 },
                JobStatus::InService { processor: 1, start_slot: 2 },
            ],
            vec![ProcessorStatus::Busy { job: 0 }, ProcessorStatus::Busy { job: 1 }],
        )
        .unwrap();
        let d = transition_distribution(&s, &Matching::empty(), &i).unwrap();
        assert_eq!(d.len(), 4);
        for (_, p) in &d {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn infeasible_action_rejected() {
        let i = inst(vec![ServiceDist::deterministic(2).unwrap()], 1);
        let s = State::initial(&i);
        assert!(transition_distribution(&s, &Matching::new(vec![(0, 3)]), &i).is_err());
    }
}
