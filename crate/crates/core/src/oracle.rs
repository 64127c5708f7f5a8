//! Exhaustive ground truth for small instances. Nothing here shares code
//! with the dynamic program.

use crate::error::{Result, SchedError};
use crate::model::{Instance, ServiceDist};

pub const BRUTE_FORCE_MAX_JOBS: usize = 8;
pub const BRUTE_FORCE_MAX_PROCESSORS: usize = 3;
pub const KNAPSACK_MAX_ITEMS: usize = 20;

/// Best total reward over every open-loop schedule of a deterministic
/// instance: each processor runs an ordered list of jobs back to back from
/// slot 0.
pub fn brute_force_deterministic(instance: &Instance) -> Result<f64> {
    let mut durations = Vec::with_capacity(instance.n_jobs());
    for (j, job) in instance.jobs().iter().enumerate() {
        match job.service {
            ServiceDist::Deterministic { duration } => durations.push(duration),
            _ => {
                return Err(SchedError::Domain(format!(
                    "job {j} has a random service time; brute force needs deterministic jobs"
                )))
            }
        }
    }
    if instance.n_jobs() > BRUTE_FORCE_MAX_JOBS || instance.n_processors() > BRUTE_FORCE_MAX_PROCESSORS {
        return Err(SchedError::Domain(format!(
            "brute force limited to {BRUTE_FORCE_MAX_JOBS} jobs and {BRUTE_FORCE_MAX_PROCESSORS} processors"
        )));
    }
    let search = ScheduleSearch {
        instance,
        durations,
        // more processors than jobs never helps
        n_processors: instance.n_processors().min(instance.n_jobs()),
    };
    let mut best = 0.0;
    let all = (1u32 << instance.n_jobs()) - 1;
    search.fill(0, 0, all, 0.0, &mut best);
    Ok(best)
}

struct ScheduleSearch<'a> {
    instance: &'a Instance,
    durations: Vec<u32>,
    n_processors: usize,
}

impl ScheduleSearch<'_> {
    fn optimistic(&self, remaining: u32) -> f64 {
        (0..self.durations.len())
            .filter(|j| remaining >> j & 1 == 1)
            .map(|j| self.instance.job(j).reward.peak())
            .sum()
    }

    /// Processors are filled in order; `end` is when `processor` frees up.
    fn fill(&self, processor: usize, end: u32, remaining: u32, acc: f64, best: &mut f64) {
        if acc > *best {
            *best = acc;
        }
        if remaining == 0 || acc + self.optimistic(remaining) <= *best {
            return;
        }
        for j in 0..self.durations.len() {
            if remaining >> j & 1 == 0 {
                continue;
            }
            let done = end.saturating_add(self.durations[j]);
            let gain = self.instance.job(j).reward.eval(done);
            self.fill(processor, done, remaining & !(1 << j), acc + gain, best);
        }
        if processor + 1 < self.n_processors {
            self.fill(processor + 1, 0, remaining, acc, best);
        }
    }
}

/// 0/1 multiple knapsack: `n_knapsacks` bins of equal `capacity`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackInstance {
    values: Vec<f64>,
    sizes: Vec<u32>,
    n_knapsacks: usize,
    capacity: u32,
}

impl KnapsackInstance {
    pub fn new(values: Vec<f64>, sizes: Vec<u32>, n_knapsacks: usize, capacity: u32) -> Result<Self> {
        if values.len() != sizes.len() {
            return Err(SchedError::InvalidInstance(format!(
                "{} values but {} sizes",
                values.len(),
                sizes.len()
            )));
        }
        if values.len() > KNAPSACK_MAX_ITEMS {
            return Err(SchedError::InvalidInstance(format!(
                "exhaustive knapsack limited to {KNAPSACK_MAX_ITEMS} items"
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(SchedError::InvalidInstance("item values must be positive".into()));
        }
        if sizes.contains(&0) || n_knapsacks == 0 || capacity == 0 {
            return Err(SchedError::InvalidInstance(
                "sizes, knapsack count and capacity must be positive".into(),
            ));
        }
        Ok(KnapsackInstance {
            values,
            sizes,
            n_knapsacks,
            capacity,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn n_knapsacks(&self) -> usize {
        self.n_knapsacks
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }
}

/// Largest total value packable into the knapsacks.
pub fn knapsack_bruteforce(kp: &KnapsackInstance) -> f64 {
    let n = kp.values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| kp.values[b].total_cmp(&kp.values[a]).then(a.cmp(&b)));
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + kp.values[order[i]];
    }
    let mut free = vec![kp.capacity; kp.n_knapsacks];
    let mut best = 0.0;
    pack(kp, &order, &suffix, 0, &mut free, 0.0, &mut best);
    best
}

fn pack(
    kp: &KnapsackInstance,
    order: &[usize],
    suffix: &[f64],
    i: usize,
    free: &mut [u32],
    acc: f64,
    best: &mut f64,
) {
    if acc > *best {
        *best = acc;
    }
    if i == order.len() || acc + suffix[i] <= *best {
        return;
    }
    let item = order[i];
    let size = kp.sizes[item];
    for k in 0..free.len() {
        // bins with equal free space are interchangeable
        if free[k] < size || free[..k].contains(&free[k]) {
            continue;
        }
        free[k] -= size;
        pack(kp, order, suffix, i + 1, free, acc + kp.values[item], best);
        free[k] += size;
    }
    pack(kp, order, suffix, i + 1, free, acc, best);
}
