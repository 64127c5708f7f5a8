use serde::{Deserialize, Serialize};

use crate::error::{Result, SchedError};

/// A non-increasing, non-negative completion reward `w(t)` over discrete slots.
///
/// Every variant has a finite horizon: `w(t) = 0` for `t > horizon()`.
/// A constant reward is a [`RewardFn::Step`] whose deadline is the instance horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardFn {
    /// `value` for `t <= deadline`.
    Step { value: f64, deadline: u32 },
    /// `high` for `t <= first_deadline`, `low` for `t <= second_deadline`.
    TwoStep {
        high: f64,
        first_deadline: u32,
        low: f64,
        second_deadline: u32,
    },
    /// Straight line from `(0, value)` down to `(deadline, 0)`.
    Linear { value: f64, deadline: u32 },
    /// Concave parabola through `(0, value)` and `(deadline, 0)` with its vertex at `t = 0`.
    Parabolic { value: f64, deadline: u32 },
    /// `value * exp(-rate * t)`, cut to zero after `horizon`.
    Exponential { value: f64, rate: f64, horizon: u32 },
    /// Explicit values for `t = 0..values.len()`.
    Table { values: Vec<f64> },
}

impl RewardFn {
    pub fn step(value: f64, deadline: u32) -> Result<Self> {
        Self::Step { value, deadline }.validated()
    }

    pub fn two_step(high: f64, first_deadline: u32, low: f64, second_deadline: u32) -> Result<Self> {
        Self::TwoStep {
            high,
            first_deadline,
            low,
            second_deadline,
        }
        .validated()
    }

    pub fn linear(value: f64, deadline: u32) -> Result<Self> {
        Self::Linear { value, deadline }.validated()
    }

    pub fn parabolic(value: f64, deadline: u32) -> Result<Self> {
        Self::Parabolic { value, deadline }.validated()
    }

    pub fn exponential(value: f64, rate: f64, horizon: u32) -> Result<Self> {
        Self::Exponential { value, rate, horizon }.validated()
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        Self::Table { values }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Short family name, as used in configs and CSV output.
    pub fn kind(&self) -> &'static str {
        match self {
            RewardFn::Step { .. } => "step",
            RewardFn::TwoStep { .. } => "two_step",
            RewardFn::Linear { .. } => "linear",
            RewardFn::Parabolic { .. } => "parabolic",
            RewardFn::Exponential { .. } => "exponential",
            RewardFn::Table { .. } => "table",
        }
    }

    /// Last slot at which the reward may be positive.
    pub fn horizon(&self) -> u32 {
        match *self {
            RewardFn::Step { deadline, .. } => deadline,
            RewardFn::TwoStep { second_deadline, .. } => second_deadline,
            RewardFn::Linear { deadline, .. } => deadline,
            RewardFn::Parabolic { deadline, .. } => deadline,
            RewardFn::Exponential { horizon, .. } => horizon,
            RewardFn::Table { ref values } => values.len().saturating_sub(1) as u32,
        }
    }

    /// `w(t)`; zero past the horizon.
    pub fn eval(&self, t: u32) -> f64 {
        match *self {
            RewardFn::Step { value, deadline } => {
                if t <= deadline {
                    value
                } else {
                    0.0
                }
            }
            RewardFn::TwoStep {
                high,
                first_deadline,
                low,
                second_deadline,
            } => {
                if t <= first_deadline {
                    high
                } else if t <= second_deadline {
                    low
                } else {
                    0.0
                }
            }
            RewardFn::Linear { value, deadline } => {
                if t <= deadline {
                    value * f64::from(deadline - t) / f64::from(deadline)
                } else {
                    0.0
                }
            }
            RewardFn::Parabolic { value, deadline } => {
                if t <= deadline {
                    let x = f64::from(t) / f64::from(deadline);
                    (value * (1.0 - x * x)).max(0.0)
                } else {
                    0.0
                }
            }
            RewardFn::Exponential { value, rate, horizon } => {
                if t <= horizon {
                    value * (-rate * f64::from(t)).exp()
                } else {
                    0.0
                }
            }
            RewardFn::Table { ref values } => values.get(t as usize).copied().unwrap_or(0.0),
        }
    }

    /// Largest value, attained at `t = 0`.
    pub fn peak(&self) -> f64 {
        self.eval(0)
    }

    /// Checks parameters, then scans `0..=horizon+1` for negativity and increases.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SchedError::InvalidReward(msg));
        let finite_nonneg = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(SchedError::InvalidReward(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        match *self {
            RewardFn::Step { value, .. } => finite_nonneg("value", value)?,
            RewardFn::TwoStep {
                high,
                first_deadline,
                low,
                second_deadline,
            } => {
                finite_nonneg("high", high)?;
                finite_nonneg("low", low)?;
                if first_deadline > second_deadline {
                    return bad(format!(
                        "first_deadline {first_deadline} exceeds second_deadline {second_deadline}"
                    ));
                }
            }
            RewardFn::Linear { value, deadline } | RewardFn::Parabolic { value, deadline } => {
                finite_nonneg("value", value)?;
                if deadline == 0 {
                    return bad(format!("{} reward needs deadline >= 1", self.kind()));
                }
            }
            RewardFn::Exponential { value, rate, .. } => {
                finite_nonneg("value", value)?;
                finite_nonneg("rate", rate)?;
            }
            RewardFn::Table { ref values } => {
                if values.is_empty() {
                    return bad("table reward needs at least one value".into());
                }
                for &v in values {
                    finite_nonneg("table entry", v)?;
                }
            }
        }
        let mut prev = self.eval(0);
        for t in 1..=self.horizon().saturating_add(1) {
            let cur = self.eval(t);
            if cur < 0.0 {
                return bad(format!("w({t}) = {cur} is negative"));
            }
            if cur > prev {
                return bad(format!("w({t}) = {cur} exceeds w({}) = {prev}", t - 1));
            }
            prev = cur;
        }
        Ok(())
    }

    /// Same shape with every value multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> RewardFn {
        match self.clone() {
            RewardFn::Step { value, deadline } => RewardFn::Step {
                value: value * factor,
                deadline,
            },
            RewardFn::TwoStep {
                high,
                first_deadline,
                low,
                second_deadline,
            } => RewardFn::TwoStep {
                high: high * factor,
                first_deadline,
                low: low * factor,
                second_deadline,
            },
            RewardFn::Linear { value, deadline } => RewardFn::Linear {
                value: value * factor,
                deadline,
            },
            RewardFn::Parabolic { value, deadline } => RewardFn::Parabolic {
                value: value * factor,
                deadline,
            },
            RewardFn::Exponential { value, rate, horizon } => RewardFn::Exponential {
                value: value * factor,
                rate,
                horizon,
            },
            RewardFn::Table { values } => RewardFn::Table {
                values: values.into_iter().map(|v| v * factor).collect(),
            },
        }
    }

    /// Time dilation `w_L(t) = w(floor(t / L))`. The result is a table whose
    /// horizon is `L * (horizon + 1) - 1`.
    pub fn stretched(&self, factor: u32) -> RewardFn {
        assert!(factor >= 1, "stretch factor must be >= 1");
        let len = factor as usize * (self.horizon() as usize + 1);
        let values = (0..len).map(|t| self.eval(t as u32 / factor)).collect();
        RewardFn::Table { values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_plateau_and_cutoff() {
        let w = RewardFn::step(5.0, 3).unwrap();
        assert_eq!(w.eval(2), 5.0);
        assert_eq!(w.eval(3), 5.0);
        assert_eq!(w.eval(4), 0.0);
    }

    #[test]
    fn suboptimality_example_job_one_reward() {
        let m = 4.0_f64;
        let w = RewardFn::step(m * m, 1).unwrap();
        assert_eq!(w.eval(1), 16.0);
        assert_eq!(w.eval(2), 0.0);
    }

    #[test]
    fn families_are_zero_past_horizon() {
        let fns = [
            RewardFn::two_step(8.0, 3, 2.0, 7).unwrap(),
            RewardFn::linear(10.0, 5).unwrap(),
            RewardFn::parabolic(10.0, 5).unwrap(),
            RewardFn::exponential(3.0, 0.2, 9).unwrap(),
            RewardFn::table(vec![3.0, 2.0, 2.0, 1.0]).unwrap(),
        ];
        for w in &fns {
            let h = w.horizon();
            for t in h + 1..h + 20 {
                assert_eq!(w.eval(t), 0.0, "{w:?} at {t}");
            }
        }
        assert_eq!(RewardFn::linear(10.0, 5).unwrap().eval(5), 0.0);
        assert!((RewardFn::parabolic(10.0, 5).unwrap().eval(1) - 9.6).abs() < 1e-12);
    }

    #[test]
    fn rejects_increasing_table() {
        let err = RewardFn::table(vec![1.0, 2.0]).unwrap_err();
        assert!(matches!(err, SchedError::InvalidReward(_)));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(RewardFn::step(-1.0, 3).is_err());
        assert!(RewardFn::step(f64::NAN, 3).is_err());
        assert!(RewardFn::two_step(1.0, 3, 2.0, 5).is_err());
        assert!(RewardFn::two_step(3.0, 6, 2.0, 5).is_err());
        assert!(RewardFn::linear(1.0, 0).is_err());
        assert!(RewardFn::exponential(1.0, -0.1, 5).is_err());
        assert!(RewardFn::table(vec![]).is_err());
    }

    #[test]
    fn stretch_dilates_in_time() {
        let w = RewardFn::step(2.0, 1).unwrap();
        let s = w.stretched(3);
        assert_eq!(s.horizon(), 5);
        for t in 0..=5 {
            assert_eq!(s.eval(t), 2.0);
        }
        assert_eq!(s.eval(6), 0.0);
        assert!(s.validate().is_ok());
    }
}
