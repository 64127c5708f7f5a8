//! Stationary decision rules over the observable state.

use std::cmp::Ordering;

use crate::error::Result;
use crate::model::{Instance, Matching, State};

/// A decision rule mapping the observable state to a matching.
///
/// Policies only ever see [`State`]; realized service times of jobs still in
/// service are not part of it.
pub trait Policy: Sync {
    fn decide(&self, state: &State, instance: &Instance) -> Result<Matching>;
}

impl<F> Policy for F
where
    F: Fn(&State, &Instance) -> Result<Matching> + Sync,
{
    fn decide(&self, state: &State, instance: &Instance) -> Result<Matching> {
        self(state, instance)
    }
}

/// Starts the `min(K, F)` waiting jobs with the largest reward rate
/// `E[w_j(t + σ_j)] / E[σ_j]`, ties to the smaller job id.
///
/// With identical processors the argmax over matchings of the summed rates is
/// exactly this top-`F` selection. Jobs whose rate is zero are still eligible.
pub fn greedy_action(state: &State, instance: &Instance) -> Matching {
    let t = state.t();
    let mut ranked: Vec<(usize, f64)> = state
        .waiting_jobs()
        .map(|j| (j, instance.job(j).greedy_index(t)))
        .collect();
    ranked.sort_by(|a, b| match b.1.partial_cmp(&a.1) {
        Some(Ordering::Equal) | None => a.0.cmp(&b.0),
        Some(o) => o,
    });
    let take = ranked.len().min(state.free_processors().count());
    let chosen: Vec<usize> = ranked[..take].iter().map(|r| r.0).collect();
    Matching::canonical(&chosen, state)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyPolicy;

impl Policy for GreedyPolicy {
    fn decide(&self, state: &State, instance: &Instance) -> Result<Matching> {
        Ok(greedy_action(state, instance))
    }
}
