//! Analytic quantities tied to the greedy guarantees: the service-time
//! spread `Δ`, its all-geometric upper bound, the reward decay time-scale
//! `δ`, and a combined report that checks the greedy/optimal ratio.

use std::ops::Range;

use crate::dp::{evaluate_policy_exact, solve_optimal};
use crate::error::{Result, SchedError};
use crate::model::{shifted_expectation, Instance, ServiceDist};
use crate::policy::GreedyPolicy;
use crate::stats::format_significant;

/// Infinite sums stop once a term falls below this.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Relative slack used by the ratio verdicts.
pub const VERDICT_TOLERANCE: f64 = 1e-9;

const MAX_TAIL_TERMS: u64 = 100_000_000;

/// A truncated infinite sum and an upper bound on what was left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSum {
    pub value: f64,
    pub truncation_bound: f64,
    pub terms: u64,
}

/// `E[max_j σ_j]` for independent service times, as `Σ_{x≥0} P(σ_max > x)`.
pub fn expected_sigma_max_exact(dists: &[ServiceDist]) -> Result<TailSum> {
    if dists.is_empty() {
        return Err(SchedError::Domain("no service distributions given".into()));
    }
    for d in dists {
        d.validate()?;
    }
    // finite-support survival tables, geometric ratios tracked as running powers
    let finite_end = dists.iter().filter_map(ServiceDist::max_support).max().unwrap_or(0);
    let survival: Vec<Vec<f64>> = dists
        .iter()
        .map(|d| match d.max_support() {
            Some(m) => (0..=m).map(|x| d.survival(x)).collect(),
            None => Vec::new(),
        })
        .collect();
    let ratios: Vec<Option<f64>> = dists
        .iter()
        .map(|d| match d {
            ServiceDist::Geometric { p } => Some(1.0 - p),
            _ => None,
        })
        .collect();
    let mut powers = vec![1.0_f64; dists.len()];
    let has_geometric = ratios.iter().any(Option::is_some);

    let mut value = 0.0;
    let mut x: u32 = 0;
    loop {
        let mut log_all_done = 0.0;
        for j in 0..dists.len() {
            let s = match ratios[j] {
                Some(_) => powers[j],
                None => survival[j].get(x as usize).copied().unwrap_or(0.0),
            };
            log_all_done += (-s).ln_1p();
        }
        let term = -log_all_done.exp_m1();
        value += term;
        for j in 0..dists.len() {
            if let Some(q) = ratios[j] {
                powers[j] *= q;
            }
        }
        x += 1;
        let past_finite = x >= finite_end;
        if past_finite && (!has_geometric || term < TAIL_TOLERANCE) {
            break;
        }
        if u64::from(x) >= MAX_TAIL_TERMS {
            return Err(SchedError::Domain(format!(
                "E[σ_max] tail did not fall below {TAIL_TOLERANCE} within {MAX_TAIL_TERMS} terms"
            )));
        }
    }
    // P(σ_max > y) ≤ Σ_j q_j^y for y ≥ x; finite supports contribute nothing
    let truncation_bound = dists
        .iter()
        .map(|d| match d {
            ServiceDist::Geometric { p } => (1.0 - p).powi(x as i32) / p,
            _ => 0.0,
        })
        .sum();
    Ok(TailSum {
        value,
        truncation_bound,
        terms: u64::from(x),
    })
}

pub fn min_mean_service(instance: &Instance) -> f64 {
    instance
        .jobs()
        .iter()
        .map(|j| j.service.mean())
        .fold(f64::INFINITY, f64::min)
}

/// `Δ = E[σ_max] / min_j E[σ_j]`.
pub fn delta_exact(instance: &Instance) -> Result<f64> {
    let dists: Vec<ServiceDist> = instance.jobs().iter().map(|j| j.service.clone()).collect();
    Ok(expected_sigma_max_exact(&dists)?.value / min_mean_service(instance))
}

/// Upper bound on `Δ` for `J` geometric jobs with rates in `[p_min, p_max]`:
/// `p_max · Σ_{x≥0} [1 − (1 − (1−p_min)^x)^J]`.
pub fn delta_ub_appendix(p_min: f64, p_max: f64, n_jobs: usize) -> Result<TailSum> {
    if p_min.is_nan() || p_min <= 0.0 {
        return Err(SchedError::Domain(format!(
            "p_min = {p_min}: the bound diverges unless p_min > 0"
        )));
    }
    if !(p_min <= p_max && p_max <= 1.0) {
        return Err(SchedError::Domain(format!(
            "need 0 < p_min <= p_max <= 1, got p_min = {p_min}, p_max = {p_max}"
        )));
    }
    if n_jobs == 0 {
        return Err(SchedError::Domain("need at least one job".into()));
    }
    let q = 1.0 - p_min;
    let j = n_jobs as f64;
    let mut qx = 1.0_f64;
    let mut sum = 0.0;
    let mut x: u64 = 0;
    loop {
        // 1 - (1 - q^x)^J, written to keep precision when q^x is tiny
        let term = -(j * (-qx).ln_1p()).exp_m1();
        sum += term;
        qx *= q;
        x += 1;
        if term < TAIL_TOLERANCE {
            break;
        }
        if x >= MAX_TAIL_TERMS {
            return Err(SchedError::Domain(format!(
                "bound tail did not fall below {TAIL_TOLERANCE} within {MAX_TAIL_TERMS} terms"
            )));
        }
    }
    Ok(TailSum {
        value: p_max * sum,
        truncation_bound: p_max * j * qx / p_min,
        terms: x,
    })
}

/// `Δ_UB` for an instance whose jobs are all geometric; `None` otherwise.
pub fn delta_ub_for(instance: &Instance) -> Result<Option<f64>> {
    let mut rates = Vec::with_capacity(instance.n_jobs());
    for job in instance.jobs() {
        match job.service {
            ServiceDist::Geometric { p } => rates.push(p),
            _ => return Ok(None),
        }
    }
    let p_min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let p_max = rates.iter().copied().fold(0.0, f64::max);
    Ok(Some(delta_ub_appendix(p_min, p_max, rates.len())?.value))
}

/// `δ = max_{t,k,m} E[w_k(t) − w_k(t + σ_m)]` over `t` in `0..horizon`.
pub fn decay_timescale(instance: &Instance) -> f64 {
    decay_timescale_over(instance, 0..instance.horizon())
}

/// [`decay_timescale`] with the scan over `t` restricted to `slots`.
pub fn decay_timescale_over(instance: &Instance, slots: Range<u32>) -> f64 {
    let jobs = instance.jobs();
    let mut best = 0.0_f64;
    for t in slots {
        for k in jobs {
            let now = k.reward.eval(t);
            if now <= best {
                continue;
            }
            for m in jobs {
                best = best.max(now - shifted_expectation(&k.reward, &m.service, t));
            }
        }
    }
    best
}

/// Everything needed to judge one instance against the greedy guarantees.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub expected_sigma_max: f64,
    pub sigma_max_truncation: f64,
    pub min_mean_service: f64,
    pub delta: f64,
    /// Present only when every job is geometric.
    pub delta_ub: Option<f64>,
    pub decay_timescale: f64,
    pub optimal: f64,
    pub greedy: f64,
    /// `optimal / greedy`; 1 when both are zero.
    pub ratio: f64,
    pub bound_2_plus_delta: f64,
    pub iid: bool,
    /// `greedy ≤ optimal`.
    pub greedy_not_above_optimal: bool,
    /// `optimal ≤ (2 + Δ)·greedy`.
    pub within_2_plus_delta: bool,
    /// `optimal ≤ 2·greedy`; only checked for IID service.
    pub within_2: Option<bool>,
}

/// Column order of [`BoundReport::csv_row`].
pub const BOUND_REPORT_CSV_HEADER: &str = "expected_sigma_max,min_mean_service,delta,delta_ub,\
decay_timescale,optimal,greedy,ratio,bound_2_plus_delta,iid,greedy_not_above_optimal,\
within_2_plus_delta,within_2";

fn le_relative(a: f64, b: f64) -> bool {
    a <= b + VERDICT_TOLERANCE * a.abs().max(b.abs())
}

impl BoundReport {
    /// True when every applicable verdict holds.
    pub fn all_hold(&self) -> bool {
        self.greedy_not_above_optimal && self.within_2_plus_delta && self.within_2.unwrap_or(true)
    }

    /// One CSV line in [`BOUND_REPORT_CSV_HEADER`] order; absent values are empty.
    pub fn csv_row(&self) -> String {
        let f = |x: f64| format_significant(x, 9);
        let opt_f = |x: Option<f64>| x.map(f).unwrap_or_default();
        let opt_b = |x: Option<bool>| x.map(|b| b.to_string()).unwrap_or_default();
        [
            f(self.expected_sigma_max),
            f(self.min_mean_service),
            f(self.delta),
            opt_f(self.delta_ub),
            f(self.decay_timescale),
            f(self.optimal),
            f(self.greedy),
            f(self.ratio),
            f(self.bound_2_plus_delta),
            self.iid.to_string(),
            self.greedy_not_above_optimal.to_string(),
            self.within_2_plus_delta.to_string(),
            opt_b(self.within_2),
        ]
        .join(",")
    }
}

pub fn greedy_ratio(optimal: f64, greedy: f64) -> f64 {
    if greedy == 0.0 {
        if optimal == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        optimal / greedy
    }
}

/// Solves the instance exactly, evaluates greedy and checks the guarantees.
pub fn check_bounds(instance: &Instance) -> Result<BoundReport> {
    let optimal = solve_optimal(instance)?.initial_value();
    let greedy = evaluate_policy_exact(instance, &GreedyPolicy)?;
    let dists: Vec<ServiceDist> = instance.jobs().iter().map(|j| j.service.clone()).collect();
    let sigma_max = expected_sigma_max_exact(&dists)?;
    let min_mean = min_mean_service(instance);
    let delta = sigma_max.value / min_mean;
    let iid = instance.is_iid();
    let bound = 2.0 + delta;
    Ok(BoundReport {
        expected_sigma_max: sigma_max.value,
        sigma_max_truncation: sigma_max.truncation_bound,
        min_mean_service: min_mean,
        delta,
        delta_ub: delta_ub_for(instance)?,
        decay_timescale: decay_timescale(instance),
        optimal,
        greedy,
        ratio: greedy_ratio(optimal, greedy),
        bound_2_plus_delta: bound,
        iid,
        greedy_not_above_optimal: le_relative(greedy, optimal),
        within_2_plus_delta: le_relative(optimal, bound * greedy),
        within_2: iid.then(|| le_relative(optimal, 2.0 * greedy)),
    })
}
