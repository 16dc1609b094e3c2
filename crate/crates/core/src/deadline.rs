use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Cooperative per-step time limit. Long loops call [`Deadline::check`].
#[derive(Clone, Copy, Debug)]
pub struct Deadline {
    end: Option<Instant>,
    step: usize,
}

impl Deadline {
    pub fn none() -> Self {
        Deadline { end: None, step: 0 }
    }

    pub fn after(limit: Option<Duration>, step: usize) -> Self {
        Deadline { end: limit.map(|d| Instant::now() + d), step }
    }

    pub fn check(&self) -> Result<()> {
        match self.end {
            Some(end) if Instant::now() >= end => Err(Error::Timeout { step: self.step }),
            _ => Ok(()),
        }
    }
}
