//! Model inputs for the threshold-autoscaled setup queue.
//!
//! The system has `n0` always-on legacy servers and `k` on-demand instances
//! that each need an exponential setup time before serving. Instance `i` is
//! ordered when the job count reaches `n_i = n0 + i` and powered off when it
//! drops back to `n_{i-1}`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Poisson arrival rate.
    pub lambda: f64,
    /// Service rate of one server.
    pub mu: f64,
    /// Setup completion rate of one instance.
    pub alpha: f64,
    /// Abandonment rate of one waiting job.
    pub theta: f64,
    /// Legacy capacity in server units.
    pub n0: usize,
    /// Number of on-demand instances.
    pub k: usize,
    /// Maximum number of jobs in the system.
    pub capacity: usize,
}

impl ModelParams {
    pub fn new(
        lambda: f64,
        mu: f64,
        alpha: f64,
        theta: f64,
        n0: usize,
        k: usize,
        capacity: usize,
    ) -> Self {
        ModelParams {
            lambda,
            mu,
            alpha,
            theta,
            n0,
            k,
            capacity,
        }
    }

    /// Total server count `N = n0 + k`.
    pub fn total_servers(&self) -> usize {
        self.n0 + self.k
    }

    /// Active server count at level `i`, i.e. `n_i = n0 + i`. This is also the
    /// power-up threshold of instance `i`; the power-down threshold is
    /// `servers_at(i - 1)`.
    pub fn servers_at(&self, level: usize) -> usize {
        self.n0 + level
    }

    pub fn validate(self) -> Result<Self> {
        for (field, value) in [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("alpha", self.alpha),
            ("theta", self.theta),
        ] {
            if !value.is_finite() {
                return Err(Error::param(field, format!("must be finite, got {value}")));
            }
            if value < 0.0 {
                return Err(Error::param(field, format!("must be non-negative, got {value}")));
            }
        }
        if self.mu == 0.0 {
            return Err(Error::param("mu", "service rate must be positive"));
        }
        if self.k > 0 && self.alpha == 0.0 {
            return Err(Error::param(
                "alpha",
                "setup rate must be positive when k > 0 (setup would never complete)",
            ));
        }
        if self.total_servers() == 0 {
            return Err(Error::param("n0", "n0 + k must be at least 1"));
        }
        if self.capacity < self.total_servers() {
            return Err(Error::param(
                "K",
                format!(
                    "K < n0+k ({} < {} + {})",
                    self.capacity, self.n0, self.k
                ),
            ));
        }
        Ok(self)
    }
}
