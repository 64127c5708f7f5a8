#![allow(dead_code)]

use decaysched::bench::{random_reward, BenchConfig, RewardFamily};
use decaysched::dp::transition_distribution;
use decaysched::model::{Instance, Job, RewardFn, ServiceDist, State};
use decaysched::policy::Policy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn trap_instance(m: f64, eps: f64, horizon: u32) -> Instance {
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

/// Two unit jobs: the cheaper one expires after slot 1.
pub fn tightness_instance(eps: f64) -> Instance {
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

pub fn reward(rng: &mut ChaCha8Rng, family: RewardFamily, horizon: u32) -> RewardFn {
    let cfg = BenchConfig {
        horizon,
        ..BenchConfig::default()
    };
    random_reward(family, &cfg, rng).unwrap()
}

pub fn any_family(rng: &mut ChaCha8Rng) -> RewardFamily {
    RewardFamily::ALL[rng.gen_range(0..RewardFamily::ALL.len())]
}

/// Geometric jobs with independent uniform rates in `[p_lo, p_hi]`.
pub fn geometric_instance(
    rng: &mut ChaCha8Rng,
    family: RewardFamily,
    n_jobs: usize,
    n_processors: usize,
    horizon: u32,
    (p_lo, p_hi): (f64, f64),
) -> Instance {
    let jobs = (0..n_jobs)
        .map(|_| {
            let p = rng.gen_range(p_lo..=p_hi);
            Job::new(reward(rng, family, horizon), ServiceDist::geometric(p).unwrap())
        })
        .collect();
    Instance::new(jobs, n_processors, horizon).unwrap()
}

/// Every job gets the same service distribution.
pub fn iid_instance(
    rng: &mut ChaCha8Rng,
    service: ServiceDist,
    n_jobs: usize,
    n_processors: usize,
    horizon: u32,
) -> Instance {
    let jobs = (0..n_jobs)
        .map(|_| {
            let fam = any_family(rng);
            Job::new(reward(rng, fam, horizon), service.clone())
        })
        .collect();
    Instance::new(jobs, n_processors, horizon).unwrap()
}

pub fn deterministic_instance(
    rng: &mut ChaCha8Rng,
    n_jobs: usize,
    n_processors: usize,
    horizon: u32,
    max_duration: u32,
) -> Instance {
    let jobs = (0..n_jobs)
        .map(|_| {
            let fam = any_family(rng);
            let d = rng.gen_range(1..=max_duration);
            Job::new(reward(rng, fam, horizon), ServiceDist::deterministic(d).unwrap())
        })
        .collect();
    Instance::new(jobs, n_processors, horizon).unwrap()
}

/// A pmf on `1..=len` with random positive weights.
pub fn empirical(rng: &mut ChaCha8Rng, len: usize) -> ServiceDist {
    let w: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut pmf: Vec<f64> = w.iter().map(|x| x / total).collect();
    let head: f64 = pmf[..len - 1].iter().sum();
    pmf[len - 1] = 1.0 - head;
    ServiceDist::empirical(pmf).unwrap()
}

/// Geometric, deterministic or empirical, uniformly.
pub fn any_service(rng: &mut ChaCha8Rng) -> ServiceDist {
    match rng.gen_range(0..3) {
        0 => ServiceDist::geometric(rng.gen_range(0.2..=1.0)).unwrap(),
        1 => ServiceDist::deterministic(rng.gen_range(1..=3)).unwrap(),
        _ => {
            let len = rng.gen_range(1..=3);
            empirical(rng, len)
        }
    }
}

pub fn mixed_instance(
    rng: &mut ChaCha8Rng,
    n_jobs: usize,
    n_processors: usize,
    horizon: u32,
) -> Instance {
    let jobs = (0..n_jobs)
        .map(|_| {
            let fam = any_family(rng);
            Job::new(reward(rng, fam, horizon), any_service(rng))
        })
        .collect();
    Instance::new(jobs, n_processors, horizon).unwrap()
}

/// States visited by following `policy` with random outcomes, stopping at
/// the first state with nothing left to decide.
pub fn random_walk<P: Policy + ?Sized>(
    instance: &Instance,
    policy: &P,
    rng: &mut ChaCha8Rng,
) -> Vec<State> {
    let mut state = State::initial(instance);
    let mut visited = Vec::new();
    while state.t() < instance.horizon() && state.waiting_jobs().next().is_some() {
        visited.push(state.clone());
        let action = policy.decide(&state, instance).unwrap();
        let outcomes = transition_distribution(&state, &action, instance).unwrap();
        let mut u: f64 = rng.gen();
        let mut next = outcomes.last().unwrap().0.clone();
        for (s, p) in outcomes {
            if u < p {
                next = s;
                break;
            }
            u -= p;
        }
        state = next;
    }
    visited
}
