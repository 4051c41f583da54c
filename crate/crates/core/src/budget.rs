//! Wall-clock budgets for long scans.
//!
//! A `Budget` is a deadline, not a cooperative counter: callers sprinkle
//! `check` at loop boundaries and receive `Error::BudgetExceeded` once the
//! deadline passes. Scans that hit the deadline return the deterministic
//! prefix they have completed plus a `partial` marker, so results are
//! reproducible up to the cut-off point.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Budget {
    deadline: Option<Instant>,
}

impl Budget {
    /// A budget that expires `ms` milliseconds from now.
    pub fn from_ms(ms: u64) -> Self {
        Budget {
            deadline: Some(Instant::now() + Duration::from_millis(ms)),
        }
    }

    /// No deadline; `check` always succeeds.
    pub fn unlimited() -> Self {
        Budget { deadline: None }
    }

    pub fn is_exceeded(&self) -> bool {
        match self.deadline {
            Some(d) => Instant::now() >= d,
            None => false,
        }
    }

    /// Err(BudgetExceeded) once the deadline has passed.
    pub fn check(&self, stage: &str) -> Result<()> {
        if self.is_exceeded() {
            Err(Error::BudgetExceeded {
                stage: stage.to_string(),
            })
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    /// Five minutes, matching the CLI default.
    fn default() -> Self {
        Budget::from_ms(300_000)
    }
}
