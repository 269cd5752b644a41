//! Performance metrics of a solved model and the weighted score.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::solver::StationaryDistribution;
use crate::state_space::StateSpace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    /// E[L], mean number of jobs in the system.
    pub mean_jobs: f64,
    /// E[Q], mean number of waiting jobs.
    pub mean_waiting: f64,
    /// P_b, probability an arrival finds the system full.
    pub blocking: f64,
    /// W = E[L] / (lambda (1 - P_b)).
    pub response_time: f64,
    /// W_q = W - 1/mu.
    pub queue_wait: f64,
    /// S, mean number of instances that are active or in setup.
    pub vnf_cost: f64,
    /// P_d = E[Q] theta / (lambda (1 - P_b)).
    pub dropping: f64,
    /// False when the accepted arrival rate is zero; W, W_q and P_d are then
    /// reported as 0.
    pub waiting_defined: bool,
    pub score: Option<f64>,
}

impl MetricsReport {
    pub fn with_score(mut self, w: &Weights) -> Result<Self> {
        self.score = Some(performance_score(&self, w)?);
        Ok(self)
    }
}

/// Weights for `W_q`, `S`, `P_b` and `P_d` in the performance score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub queue_wait: f64,
    pub vnf_cost: f64,
    pub blocking: f64,
    pub dropping: f64,
}

impl Weights {
    pub fn new(queue_wait: f64, vnf_cost: f64, blocking: f64, dropping: f64) -> Result<Self> {
        let w = Weights {
            queue_wait,
            vnf_cost,
            blocking,
            dropping,
        };
        w.check()?;
        if w.as_array().iter().all(|&x| x == 0.0) {
            return Err(Error::param("weights", "at least one weight must be positive"));
        }
        Ok(w)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.queue_wait, self.vnf_cost, self.blocking, self.dropping]
    }

    fn check(&self) -> Result<()> {
        let names = ["w1", "w2", "w3", "w4"];
        for (name, x) in names.into_iter().zip(self.as_array()) {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::param(name, format!("weight must be finite and >= 0, got {x}")));
            }
        }
        Ok(())
    }
}

pub fn compute_metrics(dist: &StationaryDistribution, m: &ModelParams) -> Result<MetricsReport> {
    let expected = StateSpace::new(m);
    if dist.space() != &expected {
        return Err(Error::DimensionMismatch {
            expected: expected.len(),
            found: dist.space().len(),
        });
    }
    let n_total = m.total_servers();
    let mut mean_jobs = 0.0;
    let mut mean_waiting = 0.0;
    let mut vnf_cost = 0.0;
    let mut blocking = 0.0;
    for ((i, j), p) in dist.iter() {
        let n_i = m.servers_at(i);
        let waiting = j.saturating_sub(n_i);
        mean_jobs += j as f64 * p;
        mean_waiting += waiting as f64 * p;
        vnf_cost += (i + waiting.min(n_total - n_i)) as f64 * p;
        if j == m.capacity {
            blocking += p;
        }
    }
    let accepted = m.lambda * (1.0 - blocking);
    let waiting_defined = accepted > 0.0;
    let (response_time, queue_wait, dropping) = if waiting_defined {
        let w = mean_jobs / accepted;
        (w, w - 1.0 / m.mu, mean_waiting * m.theta / accepted)
    } else {
        (0.0, 0.0, 0.0)
    };
    Ok(MetricsReport {
        mean_jobs,
        mean_waiting,
        blocking,
        response_time,
        queue_wait,
        vnf_cost,
        dropping,
        waiting_defined,
        score: None,
    })
}

/// `P = w1 W_q + w2 S + w3 P_b + w4 P_d`.
pub fn performance_score(r: &MetricsReport, w: &Weights) -> Result<f64> {
    w.check()?;
    Ok(w.queue_wait * r.queue_wait
        + w.vnf_cost * r.vnf_cost
        + w.blocking * r.blocking
        + w.dropping * r.dropping)
}
