//! Non-preemptive scheduling of jobs whose completion reward decays over time.
//!
//! `J` jobs with random integer service times wait in a buffer for `N`
//! identical processors. Completing job `j` at slot `t` earns `w_j(t)`, a
//! non-increasing reward. The crate provides:
//!
//! * [`dp`]: the exact optimal policy by backward induction, and exact
//!   evaluation of any policy on the same kernel;
//! * [`policy`]: the greedy reward-rate rule `E[w_j(t + σ_j)] / E[σ_j]`;
//! * [`sim`]: seeded Monte Carlo runs with common random numbers;
//! * [`bounds`]: `Δ = E[max σ] / min E[σ]`, its geometric upper bound, the
//!   decay time-scale `δ`, and the `2 + Δ` / factor-2 checks;
//! * [`oracle`]: brute-force schedules and multiple-knapsack search;
//! * [`bench`]: random instance families and CSV tables.
//!
//! ```
//! use decaysched::dp::{evaluate_policy_exact, solve_optimal};
//! use decaysched::model::{Instance, Job, RewardFn, ServiceDist};
//! use decaysched::policy::GreedyPolicy;
//!
//! let inst = Instance::new(
//!     vec![
//!         Job::new(RewardFn::step(16.0, 1)?, ServiceDist::geometric(0.25)?),
//!         Job::new(RewardFn::step(1.1, 100)?, ServiceDist::geometric(1.0)?),
//!     ],
//!     1,
//!     100,
//! )?;
//! let optimal = solve_optimal(&inst)?.initial_value();
//! let greedy = evaluate_policy_exact(&inst, &GreedyPolicy)?;
//! assert!((optimal - 5.1).abs() < 1e-9);
//! assert!((greedy - 1.1).abs() < 1e-9);
//! # Ok::<(), decaysched::SchedError>(())
//! ```

pub mod bench;
pub mod bounds;
pub mod dp;
mod error;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod sim;
pub mod stats;

pub use error::{Result, SchedError};
