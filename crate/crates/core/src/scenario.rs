use crate::error::{Error, Result};

/// Physical scenario shared by every bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    /// Target reflectivity η.
    pub eta: f64,
    /// Background brightness N_B per mode.
    pub n_b: f64,
    /// Number of probed modes M.
    pub m_modes: u64,
    /// Covertness ε.
    pub epsilon: f64,
    /// Willie's prior on "no probe".
    pub prior0: f64,
    pub prior1: f64,
}

impl ScenarioParams {
    pub fn new(eta: f64, n_b: f64, m_modes: u64, epsilon: f64) -> Result<Self> {
        let p = ScenarioParams { eta, n_b, m_modes, epsilon, prior0: 0.5, prior1: 0.5 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_prior0(self, prior0: f64) -> Result<Self> {
        let p = ScenarioParams { prior0, prior1: 1.0 - prior0, ..self };
        p.validate()?;
        Ok(p)
    }

    pub fn with_m(self, m_modes: u64) -> Result<Self> {
        let p = ScenarioParams { m_modes, ..self };
        p.validate()?;
        Ok(p)
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        let p = ScenarioParams { epsilon, ..self };
        p.validate()?;
        Ok(p)
    }

    pub fn with_n_b(self, n_b: f64) -> Result<Self> {
        let p = ScenarioParams { n_b, ..self };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta < 1.0) {
            return Err(Error::Domain { what: "eta", value: self.eta });
        }
        if !(self.n_b >= 0.0) || !self.n_b.is_finite() {
            return Err(Error::Domain { what: "n_b", value: self.n_b });
        }
        if self.m_modes == 0 {
            return Err(Error::InvalidParameter("m_modes must be at least 1"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon <= 0.5) {
            return Err(Error::Domain { what: "epsilon", value: self.epsilon });
        }
        let ok = |x: f64| x > 0.0 && x < 1.0;
        if !ok(self.prior0) || !ok(self.prior1) || (self.prior0 + self.prior1 - 1.0).abs() > 1e-12 {
            return Err(Error::Domain { what: "prior0", value: self.prior0 });
        }
        Ok(())
    }

    pub fn m(&self) -> f64 {
        self.m_modes as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let p = ScenarioParams::new(0.01, 0.2, 100, 1e-3).unwrap();
        assert_eq!(p.prior0, 0.5);
        assert!(ScenarioParams::new(1.0, 0.2, 100, 1e-3).is_err());
        assert!(ScenarioParams::new(0.01, -0.1, 100, 1e-3).is_err());
        assert!(ScenarioParams::new(0.01, 0.2, 0, 1e-3).is_err());
        assert!(ScenarioParams::new(0.01, 0.2, 1, 0.6).is_err());
        assert!(p.with_prior0(1.0).is_err());
        let q = p.with_prior0(0.9).unwrap();
        assert!((q.prior1 - 0.1).abs() < 1e-15);
    }
}
