//! Random instance families and the greedy-versus-optimal benchmark sweeps.
//!
//! Every ratio is exact: both the optimal value and the greedy value come
//! from the dynamic program, so no simulation noise enters the tables.
//! Output is CSV with a fixed column order and 9 significant digits.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{delta_ub_appendix, greedy_ratio};
use crate::dp::{evaluate_policy_exact, solve_optimal};
use crate::error::{Result, SchedError};
use crate::model::{Instance, Job, RewardFn, ServiceDist};
use crate::policy::GreedyPolicy;
use crate::stats::{format_significant, mean_and_se};

const RATIO_TOLERANCE: f64 = 1e-9;
const MAX_BENCH_HORIZON: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardFamily {
    Step,
    Linear,
    Exponential,
    Parabolic,
    TwoStep,
}

impl RewardFamily {
    pub const ALL: [RewardFamily; 5] = [
        RewardFamily::Step,
        RewardFamily::Linear,
        RewardFamily::Exponential,
        RewardFamily::Parabolic,
        RewardFamily::TwoStep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RewardFamily::Step => "step",
            RewardFamily::Linear => "linear",
            RewardFamily::Exponential => "exponential",
            RewardFamily::Parabolic => "parabolic",
            RewardFamily::TwoStep => "two-step",
        }
    }

    fn stream_tag(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for RewardFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Mean ratio per (family, J).
    #[default]
    Table,
    /// Mean ratio for J = 1..=j_max on one family.
    SweepJobs,
    /// Mean ratio and `Δ_UB` as `p_min` varies with `p_max` fixed.
    SweepDelta,
}

/// Closed interval a uniform draw is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.gen_range(self.lo..=self.hi)
        }
    }
}

/// Benchmark configuration, read from TOML. Missing keys take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub experiment: Experiment,
    /// Families covered by `table`.
    pub families: Vec<RewardFamily>,
    /// Job counts covered by `table`.
    pub j_values: Vec<usize>,
    /// Family used by both sweeps.
    pub sweep_family: RewardFamily,
    /// Largest J in `sweep_jobs`.
    pub j_max: usize,
    /// Job count in `sweep_delta`.
    pub sweep_delta_jobs: usize,
    /// `p_min` values in `sweep_delta`; `p_max` stays fixed.
    pub p_min_values: Vec<f64>,
    pub n_processors: usize,
    pub horizon: u32,
    /// Geometric rates are spaced evenly over `[p_min, p_max]`.
    pub p_min: f64,
    pub p_max: f64,
    pub n_instances: usize,
    pub seed: u64,
    /// Peak reward of every family, and both levels of two-step rewards.
    pub value_range: Interval,
    /// Decay rate of exponential rewards.
    pub exponential_rate_range: Interval,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            experiment: Experiment::Table,
            families: RewardFamily::ALL.to_vec(),
            j_values: vec![2, 5, 8],
            sweep_family: RewardFamily::Step,
            j_max: 8,
            sweep_delta_jobs: 5,
            p_min_values: vec![0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8],
            n_processors: 1,
            horizon: 30,
            p_min: 0.1,
            p_max: 0.9,
            n_instances: 100,
            seed: 0,
            value_range: Interval { lo: 1.0, hi: 10.0 },
            exponential_rate_range: Interval { lo: 0.02, hi: 0.3 },
        }
    }
}

fn valid_rate(p: f64) -> bool {
    p > 0.0 && p <= 1.0
}

impl BenchConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: BenchConfig = toml::from_str(s).map_err(|e| SchedError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SchedError::Parse(msg));
        if self.horizon == 0 || self.horizon > MAX_BENCH_HORIZON {
            return bad(format!("horizon must be in 1..={MAX_BENCH_HORIZON}, got {}", self.horizon));
        }
        if !(valid_rate(self.p_min) && valid_rate(self.p_max) && self.p_min <= self.p_max) {
            return bad(format!(
                "need 0 < p_min <= p_max <= 1, got {} and {}",
                self.p_min, self.p_max
            ));
        }
        if let Some(p) = self.p_min_values.iter().find(|&&p| !(valid_rate(p) && p <= self.p_max)) {
            return bad(format!("p_min_values entry {p} is outside (0, p_max]"));
        }
        if self.n_instances == 0 {
            return bad("n_instances must be >= 1".into());
        }
        if self.n_processors == 0 {
            return bad("n_processors must be >= 1".into());
        }
        if self.j_values.contains(&0) || self.j_max == 0 || self.sweep_delta_jobs == 0 {
            return bad("job counts must be >= 1".into());
        }
        for (name, r) in [
            ("value_range", self.value_range),
            ("exponential_rate_range", self.exponential_rate_range),
        ] {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo > 0.0 && r.lo <= r.hi) {
                return bad(format!("{name} needs 0 < lo <= hi, got [{}, {}]", r.lo, r.hi));
            }
        }
        Ok(())
    }
}

/// `J` rates spaced evenly over `[p_min, p_max]`; a single job gets the midpoint.
pub fn evenly_spaced_rates(p_min: f64, p_max: f64, n_jobs: usize) -> Vec<f64> {
    if n_jobs == 1 {
        return vec![0.5 * (p_min + p_max)];
    }
    let step = (p_max - p_min) / (n_jobs - 1) as f64;
    (0..n_jobs)
        .map(|i| if i + 1 == n_jobs { p_max } else { p_min + step * i as f64 })
        .collect()
}

fn deadline(rng: &mut ChaCha8Rng, horizon: u32) -> u32 {
    rng.gen_range(1..=horizon)
}

/// One random reward function of the given family.
pub fn random_reward(
    family: RewardFamily,
    cfg: &BenchConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RewardFn> {
    let h = cfg.horizon;
    match family {
        RewardFamily::Step => {
            let v = cfg.value_range.draw(rng);
            RewardFn::step(v, deadline(rng, h))
        }
        RewardFamily::Linear => {
            let v = cfg.value_range.draw(rng);
            RewardFn::linear(v, deadline(rng, h))
        }
        RewardFamily::Exponential => {
            let v = cfg.value_range.draw(rng);
            let rate = cfg.exponential_rate_range.draw(rng);
            RewardFn::exponential(v, rate, h)
        }
        RewardFamily::Parabolic => {
            let v = cfg.value_range.draw(rng);
            RewardFn::parabolic(v, deadline(rng, h))
        }
        RewardFamily::TwoStep => {
            let a = cfg.value_range.draw(rng);
            let b = cfg.value_range.draw(rng);
            let d1 = deadline(rng, h);
            let d2 = deadline(rng, h);
            RewardFn::two_step(a.max(b), d1.min(d2), a.min(b), d1.max(d2))
        }
    }
}

/// Instance number `index` of the (family, J) cell: rewards drawn from a
/// stream keyed on the cell and index, rates from [`evenly_spaced_rates`].
pub fn random_instance(
    cfg: &BenchConfig,
    family: RewardFamily,
    n_jobs: usize,
    p_min: f64,
    index: usize,
) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream((family.stream_tag() << 56) | ((n_jobs as u64) << 32) | index as u64);
    let rates = evenly_spaced_rates(p_min, cfg.p_max, n_jobs);
    let mut jobs = Vec::with_capacity(n_jobs);
    for p in rates {
        let reward = random_reward(family, cfg, &mut rng)?;
        jobs.push(Job::new(reward, ServiceDist::geometric(p)?));
    }
    Instance::new(jobs, cfg.n_processors, cfg.horizon)
}

/// An instance left out of a mean, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedInstance {
    pub family: RewardFamily,
    pub n_jobs: usize,
    pub p_min: f64,
    pub index: usize,
    pub reason: String,
}

impl fmt::Display for SkippedInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "skipped {} J={} p_min={} instance {}: {}",
            self.family, self.n_jobs, self.p_min, self.index, self.reason
        )
    }
}

/// Mean exact ratio over one cell of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub family: RewardFamily,
    pub n_jobs: usize,
    pub p_min: f64,
    pub mean_ratio: f64,
    pub stderr: f64,
    pub delta_ub: f64,
    pub ratios: Vec<f64>,
}

fn run_cell(
    cfg: &BenchConfig,
    family: RewardFamily,
    n_jobs: usize,
    p_min: f64,
    skipped: &mut Vec<SkippedInstance>,
) -> Result<CellResult> {
    let delta_ub = delta_ub_appendix(p_min, cfg.p_max, n_jobs)?.value;
    let outcomes: Vec<Result<f64>> = (0..cfg.n_instances)
        .into_par_iter()
        .map(|index| {
            let inst = random_instance(cfg, family, n_jobs, p_min, index)?;
            let optimal = solve_optimal(&inst)?.initial_value();
            let greedy = evaluate_policy_exact(&inst, &GreedyPolicy)?;
            Ok(greedy_ratio(optimal, greedy))
        })
        .collect();
    let mut ratios = Vec::with_capacity(outcomes.len());
    for (index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => {
                if !(r >= 1.0 - RATIO_TOLERANCE && r <= 2.0 + delta_ub + RATIO_TOLERANCE) {
                    return Err(SchedError::BoundViolated(format!(
                        "{family} J={n_jobs} p_min={p_min} instance {index}: ratio {r} outside [1, 2 + {delta_ub}]"
                    )));
                }
                ratios.push(r);
            }
            Err(e @ SchedError::StateSpaceTooLarge { .. }) => skipped.push(SkippedInstance {
                family,
                n_jobs,
                p_min,
                index,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    let (mean_ratio, stderr) = if ratios.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        mean_and_se(&ratios)
    };
    Ok(CellResult {
        family,
        n_jobs,
        p_min,
        mean_ratio,
        stderr,
        delta_ub,
        ratios,
    })
}

/// Rows of one experiment plus anything that had to be skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub experiment: Experiment,
    pub cells: Vec<CellResult>,
    pub skipped: Vec<SkippedInstance>,
}

pub const TABLE_HEADER: &str = "family,J,mean_ratio,stderr,delta_ub";
pub const SWEEP_JOBS_HEADER: &str = "J,mean_ratio";
pub const SWEEP_DELTA_HEADER: &str = "p_min,delta_ub,mean_ratio";

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let f = |x: f64| format_significant(x, 9);
        let (header, rows): (&str, Vec<String>) = match self.experiment {
            Experiment::Table => (
                TABLE_HEADER,
                self.cells
                    .iter()
                    .map(|c| {
                        format!(
                            "{},{},{},{},{}",
                            c.family,
                            c.n_jobs,
                            f(c.mean_ratio),
                            f(c.stderr),
                            f(c.delta_ub)
                        )
                    })
                    .collect(),
            ),
            Experiment::SweepJobs => (
                SWEEP_JOBS_HEADER,
                self.cells
                    .iter()
                    .map(|c| format!("{},{}", c.n_jobs, f(c.mean_ratio)))
                    .collect(),
            ),
            Experiment::SweepDelta => (
                SWEEP_DELTA_HEADER,
                self.cells
                    .iter()
                    .map(|c| format!("{},{},{}", f(c.p_min), f(c.delta_ub), f(c.mean_ratio)))
                    .collect(),
            ),
        };
        let mut out = String::from(header);
        out.push('\n');
        for r in rows {
            out.push_str(&r);
            out.push('\n');
        }
        out
    }
}

/// Mean ratio for every (family, J) pair, families outermost.
pub fn bench_table(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let mut skipped = Vec::new();
    let mut cells = Vec::new();
    for &family in &cfg.families {
        for &j in &cfg.j_values {
            cells.push(run_cell(cfg, family, j, cfg.p_min, &mut skipped)?);
        }
    }
    Ok(BenchReport {
        experiment: Experiment::Table,
        cells,
        skipped,
    })
}

/// Mean ratio for J = 1..=j_max on the sweep family.
pub fn sweep_jobs(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let mut skipped = Vec::new();
    let cells = (1..=cfg.j_max)
        .map(|j| run_cell(cfg, cfg.sweep_family, j, cfg.p_min, &mut skipped))
        .collect::<Result<_>>()?;
    Ok(BenchReport {
        experiment: Experiment::SweepJobs,
        cells,
        skipped,
    })
}

/// Mean ratio and `Δ_UB` for each `p_min`, with `p_max` fixed. Fails if a
/// row's mean ratio exceeds `2 + Δ_UB`.
pub fn sweep_delta(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let mut skipped = Vec::new();
    let mut cells = Vec::new();
    for &p_min in &cfg.p_min_values {
        let cell = run_cell(cfg, cfg.sweep_family, cfg.sweep_delta_jobs, p_min, &mut skipped)?;
        if cell.mean_ratio > 2.0 + cell.delta_ub + RATIO_TOLERANCE {
            return Err(SchedError::BoundViolated(format!(
                "p_min={p_min}: mean ratio {} exceeds 2 + {}",
                cell.mean_ratio, cell.delta_ub
            )));
        }
        cells.push(cell);
    }
    Ok(BenchReport {
        experiment: Experiment::SweepDelta,
        cells,
        skipped,
    })
}

/// Runs whichever experiment the config names.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    match cfg.experiment {
        Experiment::Table => bench_table(cfg),
        Experiment::SweepJobs => sweep_jobs(cfg),
        Experiment::SweepDelta => sweep_delta(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BenchConfig {
        BenchConfig {
            n_instances: 8,
            horizon: 12,
            j_values: vec![1, 3],
            ..BenchConfig::default()
        }
    }

    #[test]
    fn rates_are_evenly_spaced() {
        assert_eq!(evenly_spaced_rates(0.1, 0.9, 5), vec![0.1, 0.30000000000000004, 0.5, 0.7000000000000001, 0.9]);
        assert_eq!(evenly_spaced_rates(0.2, 0.6, 1), vec![0.4]);
        assert_eq!(evenly_spaced_rates(0.5, 0.5, 3), vec![0.5; 3]);
    }

    #[test]
    fn instances_are_reproducible_and_distinct() {
        let cfg = small();
        let a = random_instance(&cfg, RewardFamily::TwoStep, 3, 0.1, 4).unwrap();
        let b = random_instance(&cfg, RewardFamily::TwoStep, 3, 0.1, 4).unwrap();
        let c = random_instance(&cfg, RewardFamily::TwoStep, 3, 0.1, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn every_family_generates_valid_instances() {
        let cfg = small();
        for fam in RewardFamily::ALL {
            for i in 0..20 {
                let inst = random_instance(&cfg, fam, 4, cfg.p_min, i).unwrap();
                for job in inst.jobs() {
                    assert!(job.reward.horizon() <= cfg.horizon);
                    let v = job.reward.eval(0);
                    assert!((1.0..=10.0).contains(&v), "{fam}: {v}");
                }
            }
        }
    }

    #[test]
    fn single_job_cells_are_exactly_one() {
        let report = bench_table(&small()).unwrap();
        for c in report.cells.iter().filter(|c| c.n_jobs == 1) {
            assert_eq!(c.mean_ratio, 1.0, "{}", c.family);
            assert_eq!(c.stderr, 0.0);
        }
        assert!(report.skipped.is_empty());
    }

    #[test]
    fn csv_is_byte_identical_across_runs() {
        let cfg = small();
        let a = bench_table(&cfg).unwrap().to_csv();
        let b = bench_table(&cfg).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with("family,J,mean_ratio,stderr,delta_ub\nstep,1,1,0,"));
        assert_eq!(a.lines().count(), 1 + 5 * 2);
    }

    #[test]
    fn sweeps_have_expected_shape() {
        let cfg = BenchConfig {
            j_max: 3,
            p_min_values: vec![0.05, 0.3, 0.9],
            sweep_delta_jobs: 3,
            ..small()
        };
        let jobs = sweep_jobs(&cfg).unwrap();
        assert_eq!(jobs.cells.len(), 3);
        assert_eq!(jobs.cells[0].mean_ratio, 1.0);
        assert!(jobs.to_csv().starts_with("J,mean_ratio\n1,1\n"));

        let delta = sweep_delta(&cfg).unwrap();
        let ubs: Vec<f64> = delta.cells.iter().map(|c| c.delta_ub).collect();
        assert!(ubs.windows(2).all(|w| w[0] > w[1]), "{ubs:?}");
        assert!(delta.cells.iter().all(|c| c.mean_ratio <= 2.0 + c.delta_ub));
        assert!(delta.to_csv().starts_with("p_min,delta_ub,mean_ratio\n0.05,"));
    }

    #[test]
    fn config_parsing() {
        let cfg = BenchConfig::from_toml_str(
            r#"
experiment = "sweep_delta"
families = ["step", "two-step"]
n_instances = 5
value_range = { lo = 2.0, hi = 3.0 }
"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::SweepDelta);
        assert_eq!(cfg.families, vec![RewardFamily::Step, RewardFamily::TwoStep]);
        assert_eq!(cfg.horizon, 30);
        assert!(BenchConfig::from_toml_str("horizon = 0").is_err());
        assert!(BenchConfig::from_toml_str("p_min = 0.0").is_err());
        assert!(BenchConfig::from_toml_str("bogus = 1").is_err());
        assert!(BenchConfig::from_toml_str("families = [\"cubic\"]").is_err());
        assert!(BenchConfig::from_toml_str("n_instances = 0").is_err());
    }
}
