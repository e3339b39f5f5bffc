use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Single-spin dephasing γ, collective relaxation Γ and thermal occupation n̄_th,
/// in the same time units as the twisting strength they accompany.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub gamma: f64,
    #[serde(rename = "Gamma")]
    pub big_gamma: f64,
    pub n_th: f64,
}

impl NoiseParams {
    pub fn new(gamma: f64, big_gamma: f64, n_th: f64) -> Result<Self> {
        let n = NoiseParams { gamma, big_gamma, n_th };
        n.validate()?;
        Ok(n)
    }

    pub fn noiseless() -> Self {
        NoiseParams::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("Gamma", self.big_gamma), ("n_th", self.n_th)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be non-negative and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Thermally enhanced collective rate Γ(2n̄_th + 1).
    pub fn collective_rate(&self) -> f64 {
        self.big_gamma * (2.0 * self.n_th + 1.0)
    }

    /// Dephasing rate γ = 1/(2T₂).
    pub fn gamma_from_t2(t2: f64) -> f64 {
        0.5 / t2
    }

    pub fn scaled(&self, s: f64) -> NoiseParams {
        NoiseParams {
            gamma: self.gamma * s,
            big_gamma: self.big_gamma * s,
            n_th: self.n_th,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.gamma == 0.0 && self.big_gamma == 0.0
    }
}
