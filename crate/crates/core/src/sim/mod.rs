//! Discrete-event simulation of the threshold autoscaling policy, with
//! replicated runs and Student-t confidence intervals.

mod engine;
pub mod stats;

use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, MetricsReport};
use crate::params::ModelParams;
use crate::report::{fmt_num, param_cells};
use crate::solver::solve_stationary;

pub use engine::{replication_rng, run_replication, ReplicationStats, Snapshot, TraceEvent, Tracer};
pub use stats::{student_t_95, Estimate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    pub warmup: f64,
    pub replications: usize,
    pub master_seed: u64,
}

impl SimConfig {
    /// Warmup defaults to 10% of the horizon.
    pub fn new(horizon: f64, replications: usize, master_seed: u64) -> Self {
        SimConfig {
            horizon,
            warmup: 0.1 * horizon,
            replications,
            master_seed,
        }
    }

    pub fn validate(self) -> Result<Self> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::param("sim.horizon", "must be positive and finite"));
        }
        if !(self.warmup >= 0.0 && self.warmup < self.horizon) {
            return Err(Error::param(
                "sim.warmup",
                format!("need 0 <= warmup < horizon, got {} vs {}", self.warmup, self.horizon),
            ));
        }
        if self.replications == 0 {
            return Err(Error::param("sim.replications", "must be at least 1"));
        }
        Ok(self)
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig::new(3.0e4, 10, 42)
    }
}

/// Event counts summed over replications, restricted to jobs arriving after
/// warmup. `arrivals = blocked + abandoned + served + in_system`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimCounts {
    pub arrivals: u64,
    pub blocked: u64,
    pub abandoned: u64,
    pub served: u64,
    pub in_system: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub mean_jobs: Estimate,
    pub mean_waiting: Estimate,
    /// Little's-law estimate `E[L] / (lambda (1 - P_b)) - 1/mu`.
    pub queue_wait: Estimate,
    /// Mean observed wait of jobs that started service.
    pub queue_wait_direct: Estimate,
    pub vnf_cost: Estimate,
    pub blocking: Estimate,
    pub dropping: Estimate,
    pub counts: SimCounts,
    pub replications: usize,
}

pub fn simulate(m: &ModelParams, cfg: &SimConfig) -> Result<SimReport> {
    let m = m.validate()?;
    let cfg = cfg.validate()?;
    let reps: Vec<ReplicationStats> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| {
            let rng = replication_rng(cfg.master_seed, r);
            run_replication(&m, cfg.warmup, cfg.horizon, rng, &mut ())
        })
        .collect();
    Ok(aggregate(&m, &reps))
}

/// Writes the event trace of replication `rep` as `time,event,level,jobs`.
pub fn write_trace<W: Write>(m: &ModelParams, cfg: &SimConfig, rep: u64, out: W) -> Result<io::Result<()>> {
    let m = m.validate()?;
    let cfg = cfg.validate()?;
    let mut out = io::BufWriter::new(out);
    let mut status = writeln!(out, "time,event,level,jobs");
    let mut tracer = |s: &Snapshot| {
        if status.is_ok() {
            status = writeln!(out, "{},{},{},{}", fmt_num(s.time), s.event, s.active, s.jobs);
        }
    };
    run_replication(&m, cfg.warmup, cfg.horizon, replication_rng(cfg.master_seed, rep), &mut tracer);
    Ok(status.and_then(|_| out.flush()))
}

fn aggregate(m: &ModelParams, reps: &[ReplicationStats]) -> SimReport {
    let collect = |f: &dyn Fn(&ReplicationStats) -> f64| -> Vec<f64> { reps.iter().map(f).collect() };
    let mut counts = SimCounts::default();
    for r in reps {
        counts.arrivals += r.arrivals;
        counts.blocked += r.blocked;
        counts.abandoned += r.abandoned;
        counts.served += r.served;
        counts.in_system += r.in_system;
    }
    let mut blocking = student_t_95(&collect(&|r| r.blocking()));
    if counts.blocked == 0 && counts.arrivals > 0 {
        blocking.half_width = blocking.half_width.max(stats::zero_event_upper_bound(counts.arrivals));
    }
    let mut dropping = student_t_95(&collect(&|r| r.dropping()));
    let accepted = counts.arrivals - counts.blocked;
    if counts.abandoned == 0 && accepted > 0 {
        dropping.half_width = dropping.half_width.max(stats::zero_event_upper_bound(accepted));
    }
    SimReport {
        mean_jobs: student_t_95(&collect(&|r| r.mean_jobs())),
        mean_waiting: student_t_95(&collect(&|r| r.mean_waiting())),
        queue_wait: student_t_95(&collect(&|r| r.queue_wait_little(m))),
        queue_wait_direct: student_t_95(&collect(&|r| r.queue_wait_direct())),
        vnf_cost: student_t_95(&collect(&|r| r.mean_instances())),
        blocking,
        dropping,
        counts,
        replications: reps.len(),
    }
}

/// Which analytical values fall inside the simulated 95% intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WithinCi {
    pub queue_wait: bool,
    pub vnf_cost: bool,
    pub blocking: bool,
    pub dropping: bool,
}

impl WithinCi {
    pub fn as_array(&self) -> [bool; 4] {
        [self.queue_wait, self.vnf_cost, self.blocking, self.dropping]
    }

    pub fn count(&self) -> usize {
        self.as_array().iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub params: ModelParams,
    pub exact: MetricsReport,
    pub sim: SimReport,
    pub within: WithinCi,
}

pub fn compare(m: &ModelParams, cfg: &SimConfig) -> Result<ComparisonRow> {
    let exact = compute_metrics(&solve_stationary(m)?, m)?;
    let sim = simulate(m, cfg)?;
    let within = WithinCi {
        queue_wait: sim.queue_wait.contains(exact.queue_wait),
        vnf_cost: sim.vnf_cost.contains(exact.vnf_cost),
        blocking: sim.blocking.contains(exact.blocking),
        dropping: sim.dropping.contains(exact.dropping),
    };
    Ok(ComparisonRow {
        params: *m,
        exact,
        sim,
        within,
    })
}

pub const SIM_HEADER: &str = "lambda,mu,alpha,theta,n0,k,K,EL,EL_hw,EQ,EQ_hw,Wq,Wq_hw,Wq_direct,Wq_direct_hw,S,S_hw,Pb,Pb_hw,Pd,Pd_hw,arrivals,blocked,abandoned,served,in_system,replications";

fn est_cells(e: &Estimate) -> String {
    let hw = if e.half_width.is_nan() {
        String::new()
    } else {
        fmt_num(e.half_width)
    };
    format!("{},{}", fmt_num(e.mean), hw)
}

pub fn sim_row(m: &ModelParams, r: &SimReport) -> String {
    let c = &r.counts;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        param_cells(m),
        est_cells(&r.mean_jobs),
        est_cells(&r.mean_waiting),
        est_cells(&r.queue_wait),
        est_cells(&r.queue_wait_direct),
        est_cells(&r.vnf_cost),
        est_cells(&r.blocking),
        est_cells(&r.dropping),
        c.arrivals,
        c.blocked,
        c.abandoned,
        c.served,
        c.in_system,
        r.replications
    )
}

pub const COMPARE_HEADER: &str = "lambda,mu,alpha,theta,n0,k,K,Wq_exact,Wq_sim,Wq_hw,within_ci_Wq,S_exact,S_sim,S_hw,within_ci_S,Pb_exact,Pb_sim,Pb_hw,within_ci_Pb,Pd_exact,Pd_sim,Pd_hw,within_ci_Pd";

pub fn compare_row(row: &ComparisonRow) -> String {
    let cell = |exact: f64, e: &Estimate, ok: bool| format!("{},{},{}", fmt_num(exact), est_cells(e), ok);
    format!(
        "{},{},{},{},{}",
        param_cells(&row.params),
        cell(row.exact.queue_wait, &row.sim.queue_wait, row.within.queue_wait),
        cell(row.exact.vnf_cost, &row.sim.vnf_cost, row.within.vnf_cost),
        cell(row.exact.blocking, &row.sim.blocking, row.within.blocking),
        cell(row.exact.dropping, &row.sim.dropping, row.within.dropping),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ModelParams {
        ModelParams::new(1.0, 1.0, 0.5, 0.2, 2, 2, 7)
    }

    #[test]
    fn rejects_warmup_past_horizon() {
        let cfg = SimConfig {
            horizon: 10.0,
            warmup: 10.0,
            replications: 2,
            master_seed: 1,
        };
        assert!(matches!(
            simulate(&small(), &cfg),
            Err(Error::InvalidParam { field: "sim.warmup", .. })
        ));
        let cfg = SimConfig { replications: 0, ..SimConfig::new(10.0, 1, 1) };
        assert!(simulate(&small(), &cfg).is_err());
    }

    #[test]
    fn no_arrivals_means_empty_report() {
        let m = ModelParams { lambda: 0.0, ..small() };
        let r = simulate(&m, &SimConfig::new(1000.0, 3, 7)).unwrap();
        assert_eq!(r.counts, SimCounts::default());
        for e in [r.mean_jobs, r.queue_wait, r.vnf_cost, r.blocking, r.dropping] {
            assert_eq!(e.mean, 0.0);
            assert_eq!(e.half_width, 0.0);
        }
        let row = compare(&m, &SimConfig::new(1000.0, 3, 7)).unwrap();
        assert_eq!(row.within.count(), 4);
    }

    #[test]
    fn counts_are_conserved_per_replication() {
        let m = ModelParams::new(6.0, 1.0, 0.3, 0.4, 2, 3, 9);
        for rep in 0..4 {
            let s = run_replication(&m, 50.0, 2000.0, replication_rng(9, rep), &mut ());
            assert!(s.arrivals > 0 && s.blocked > 0 && s.abandoned > 0);
            assert_eq!(s.arrivals, s.blocked + s.abandoned + s.served + s.in_system);
        }
    }

    #[test]
    fn policy_never_exceeds_instance_budget() {
        let m = ModelParams::new(8.0, 1.0, 0.5, 0.1, 3, 4, 20);
        let mut snaps = Vec::new();
        run_replication(&m, 0.0, 500.0, replication_rng(3, 0), &mut |s: &Snapshot| snaps.push(*s));
        assert!(snaps.len() > 1000);
        for s in &snaps {
            assert!(s.active <= m.k);
            assert!(s.in_setup <= m.k - s.active);
            assert_eq!(s.busy, s.jobs.min(m.n0 + s.active));
            assert!(s.jobs <= m.capacity);
        }
        // once an event is fully processed, setups match the threshold deficit
        for pair in snaps.windows(2) {
            if pair[0].time != pair[1].time {
                let s = pair[0];
                assert_eq!(
                    s.in_setup,
                    s.jobs.saturating_sub(m.n0 + s.active).min(m.k - s.active),
                    "{s:?}"
                );
            }
        }
    }

    #[test]
    fn trace_is_deterministic_and_well_formed() {
        let m = small();
        let cfg = SimConfig::new(50.0, 1, 11);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_trace(&m, &cfg, 0, &mut a).unwrap().unwrap();
        write_trace(&m, &cfg, 0, &mut b).unwrap().unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("time,event,level,jobs"));
        let known = [
            "arrive", "block", "serve_start", "depart", "abandon", "setup_start", "setup_done",
            "setup_cancel", "power_down",
        ];
        let mut n = 0;
        for line in lines {
            let cols: Vec<_> = line.split(',').collect();
            assert_eq!(cols.len(), 4);
            assert!(known.contains(&cols[1]), "{line}");
            n += 1;
        }
        assert!(n > 20);
    }

    #[test]
    fn same_seed_same_report() {
        let cfg = SimConfig::new(2000.0, 4, 5);
        let a = simulate(&small(), &cfg).unwrap();
        let b = simulate(&small(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(sim_row(&small(), &a), sim_row(&small(), &b));
        let c = simulate(&small(), &SimConfig { master_seed: 6, ..cfg }).unwrap();
        assert_ne!(a, c);
    }
}
