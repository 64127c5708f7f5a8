use serde::{Deserialize, Serialize};

use crate::error::{Result, SchedError};

/// Tolerance on the total mass of an empirical pmf.
pub const PMF_SUM_TOLERANCE: f64 = 1e-12;

/// Distribution of an integer service time `σ >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServiceDist {
    /// `P(σ = k) = (1 - p)^(k-1) p`, mean `1/p`.
    Geometric { p: f64 },
    /// `σ = duration` with probability one.
    Deterministic { duration: u32 },
    /// `pmf[k - 1] = P(σ = k)` for `k = 1..=pmf.len()`.
    Empirical { pmf: Vec<f64> },
}

impl ServiceDist {
    pub fn geometric(p: f64) -> Result<Self> {
        let d = ServiceDist::Geometric { p };
        d.validate()?;
        Ok(d)
    }

    pub fn deterministic(duration: u32) -> Result<Self> {
        let d = ServiceDist::Deterministic { duration };
        d.validate()?;
        Ok(d)
    }

    pub fn empirical(pmf: Vec<f64>) -> Result<Self> {
        let d = ServiceDist::Empirical { pmf };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ServiceDist::Geometric { p } => {
                if !(p.is_finite() && *p > 0.0 && *p <= 1.0) {
                    return Err(SchedError::InvalidService(format!(
                        "geometric p must lie in (0, 1], got {p}"
                    )));
                }
            }
            ServiceDist::Deterministic { duration } => {
                if *duration == 0 {
                    return Err(SchedError::InvalidService(
                        "deterministic duration must be >= 1".into(),
                    ));
                }
            }
            ServiceDist::Empirical { pmf } => {
                if pmf.is_empty() {
                    return Err(SchedError::InvalidService("empty pmf".into()));
                }
                if let Some(v) = pmf.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(SchedError::InvalidService(format!(
                        "pmf entries must be finite and >= 0, got {v}"
                    )));
                }
                let total: f64 = pmf.iter().sum();
                if (total - 1.0).abs() > PMF_SUM_TOLERANCE {
                    return Err(SchedError::InvalidService(format!(
                        "pmf sums to {total}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Geometric service is the only memoryless kind; its age never matters.
    pub fn is_memoryless(&self) -> bool {
        matches!(self, ServiceDist::Geometric { .. })
    }

    /// Largest value in the support, `None` for geometric.
    pub fn max_support(&self) -> Option<u32> {
        match self {
            ServiceDist::Geometric { .. } => None,
            ServiceDist::Deterministic { duration } => Some(*duration),
            ServiceDist::Empirical { pmf } => pmf
                .iter()
                .rposition(|&v| v > 0.0)
                .map(|i| i as u32 + 1),
        }
    }

    /// `P(σ = k)`.
    pub fn pmf(&self, k: u32) -> f64 {
        if k == 0 {
            return 0.0;
        }
        match self {
            ServiceDist::Geometric { p } => (1.0 - p).powi(k as i32 - 1) * p,
            ServiceDist::Deterministic { duration } => f64::from(u8::from(k == *duration)),
            ServiceDist::Empirical { pmf } => pmf.get(k as usize - 1).copied().unwrap_or(0.0),
        }
    }

    /// `P(σ > k)`.
    pub fn survival(&self, k: u32) -> f64 {
        match self {
            ServiceDist::Geometric { p } => (1.0 - p).powi(k as i32),
            ServiceDist::Deterministic { duration } => f64::from(u8::from(k < *duration)),
            ServiceDist::Empirical { pmf } => pmf.iter().skip(k as usize).sum(),
        }
    }

    /// `P(σ <= k)`.
    pub fn cdf(&self, k: u32) -> f64 {
        1.0 - self.survival(k)
    }

    pub fn mean(&self) -> f64 {
        match self {
            ServiceDist::Geometric { p } => 1.0 / p,
            ServiceDist::Deterministic { duration } => f64::from(*duration),
            ServiceDist::Empirical { pmf } => pmf
                .iter()
                .enumerate()
                .map(|(i, v)| (i + 1) as f64 * v)
                .sum(),
        }
    }

    /// Probability of finishing in the next slot given `age` slots already served:
    /// `P(σ = age + 1 | σ > age)`. Ages past the support report 1.
    pub fn hazard(&self, age: u32) -> f64 {
        match self {
            ServiceDist::Geometric { p } => *p,
            _ => {
                let alive = self.survival(age);
                if alive <= 0.0 {
                    1.0
                } else {
                    (self.pmf(age + 1) / alive).min(1.0)
                }
            }
        }
    }

    /// Residual distribution `P(σ - age = k | σ > age)`.
    pub fn residual(&self, age: u32) -> Result<ServiceDist> {
        if age == 0 {
            return Ok(self.clone());
        }
        match self {
            ServiceDist::Geometric { .. } => Ok(self.clone()),
            ServiceDist::Deterministic { duration } => {
                if age < *duration {
                    Ok(ServiceDist::Deterministic {
                        duration: duration - age,
                    })
                } else {
                    Err(SchedError::Domain(format!(
                        "deterministic({duration}) cannot still be in service at age {age}"
                    )))
                }
            }
            ServiceDist::Empirical { pmf } => {
                let alive = self.survival(age);
                if alive <= 0.0 {
                    return Err(SchedError::Domain(format!(
                        "empirical service has no mass beyond age {age}"
                    )));
                }
                let mut tail: Vec<f64> = pmf[age as usize..].iter().map(|v| v / alive).collect();
                while tail.last() == Some(&0.0) {
                    tail.pop();
                }
                Ok(ServiceDist::Empirical { pmf: tail })
            }
        }
    }

    /// Inverse-CDF draw from a uniform `u` in `[0, 1)`: the smallest `k` with `F(k) > u`.
    ///
    /// Uses only IEEE multiplication and addition so the result is the same on every platform.
    pub fn sample(&self, u: f64) -> u32 {
        match self {
            ServiceDist::Geometric { p } => {
                let q = 1.0 - p;
                let target = 1.0 - u;
                let mut alive = 1.0;
                let mut k = 0;
                loop {
                    k += 1;
                    alive *= q;
                    if alive < target {
                        return k;
                    }
                }
            }
            ServiceDist::Deterministic { duration } => *duration,
            ServiceDist::Empirical { pmf } => {
                let mut acc = 0.0;
                for (i, v) in pmf.iter().enumerate() {
                    acc += v;
                    if acc > u {
                        return i as u32 + 1;
                    }
                }
                self.max_support().unwrap_or(pmf.len() as u32)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_basics() {
        let g = ServiceDist::geometric(0.25).unwrap();
        assert_eq!(g.mean(), 4.0);
        assert!((g.pmf(1) - 0.25).abs() < 1e-15);
        assert!((g.pmf(2) - 0.1875).abs() < 1e-15);
        assert!((g.survival(2) - 0.5625).abs() < 1e-15);
        assert_eq!(g.hazard(7), 0.25);
        assert!(g.max_support().is_none());
    }

    #[test]
    fn rejects_invalid() {
        assert!(ServiceDist::geometric(0.0).is_err());
        assert!(ServiceDist::geometric(1.5).is_err());
        assert!(ServiceDist::deterministic(0).is_err());
        assert!(ServiceDist::empirical(vec![0.5, 0.4]).is_err());
        assert!(ServiceDist::empirical(vec![]).is_err());
        assert!(ServiceDist::empirical(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn residual_geometric_is_memoryless() {
        let g = ServiceDist::geometric(0.3).unwrap();
        assert_eq!(g.residual(5).unwrap(), g);
    }

    #[test]
    fn residual_deterministic_counts_down() {
        let d = ServiceDist::deterministic(4).unwrap();
        assert_eq!(d.residual(1).unwrap(), ServiceDist::Deterministic { duration: 3 });
        assert!(d.residual(4).is_err());
    }

    #[test]
    fn residual_empirical_conditions() {
        // P(σ=3 | σ>1) = 1, so residual is a point mass at 2.
        let e = ServiceDist::empirical(vec![0.5, 0.0, 0.5]).unwrap();
        let r = e.residual(1).unwrap();
        assert_eq!(r.pmf(2), 1.0);
        assert_eq!(r.pmf(1), 0.0);
        assert_eq!(r.max_support(), Some(2));
    }

    #[test]
    fn hazards_for_finite_support() {
        let e = ServiceDist::empirical(vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(e.hazard(0), 0.5);
        assert_eq!(e.hazard(1), 0.5);
        assert_eq!(e.hazard(2), 1.0);
        let d = ServiceDist::deterministic(2).unwrap();
        assert_eq!(d.hazard(0), 0.0);
        assert_eq!(d.hazard(1), 1.0);
    }

    #[test]
    fn degenerate_samples() {
        assert_eq!(ServiceDist::deterministic(3).unwrap().sample(0.9), 3);
        let g1 = ServiceDist::geometric(1.0).unwrap();
        for u in [0.0, 0.3, 0.999_999] {
            assert_eq!(g1.sample(u), 1);
        }
        let e = ServiceDist::empirical(vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(e.sample(0.1), 1);
        assert_eq!(e.sample(0.7), 3);
    }
}
