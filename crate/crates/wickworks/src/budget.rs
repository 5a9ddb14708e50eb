//! Work budgets for enumeration and nested lattice sums.
//!
//! The environment variable `WICKWORKS_BUDGET` overrides the default.

use crate::error::{Error, Result};

pub const ENV_VAR: &str = "WICKWORKS_BUDGET";
pub const DEFAULT_BUDGET: u64 = 2_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget(pub u64);

impl Default for Budget {
    fn default() -> Self {
        Budget(DEFAULT_BUDGET)
    }
}

impl Budget {
    pub fn from_env() -> Self {
        std::env::var(ENV_VAR)
            .ok()
            .and_then(|s| s.trim().parse::<u64>().ok())
            .map(Budget)
            .unwrap_or_default()
    }

    /// Like [`Budget::from_env`] but rejects a value that is set and not a positive integer.
    pub fn try_from_env() -> Result<Self> {
        match std::env::var(ENV_VAR) {
            Err(_) => Ok(Budget::default()),
            Ok(s) => match s.trim().parse::<u64>() {
                Ok(b) if b > 0 => Ok(Budget(b)),
                _ => Err(Error::Invalid(format!(
                    "{ENV_VAR} must be a positive integer, got {s:?}"
                ))),
            },
        }
    }

    pub fn unlimited() -> Self {
        Budget(u64::MAX)
    }

    pub fn check(&self, what: &str, needed: u64) -> Result<()> {
        if needed > self.0 {
            Err(Error::Budget {
                what: what.to_string(),
                needed,
                budget: self.0,
            })
        } else {
            Ok(())
        }
    }
}
