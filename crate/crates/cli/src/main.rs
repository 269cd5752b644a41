use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vnfscale_core::planner::{plan_csv, sweep_csv};
use vnfscale_core::report::{fmt_num, metrics_row, METRICS_HEADER};
use vnfscale_core::sim::{compare_row, sim_row, write_trace, Estimate, COMPARE_HEADER, SIM_HEADER};
use vnfscale_core::{
    analyze, compare, plan_k, simulate, sweep, ComparisonRow, MetricsReport, ModelParams,
    PlanResult, SimReport, SweepSpec,
};

mod config;

use config::{load_config, Format, Overrides, RunConfig};

/// Exact analysis, simulation and planning for threshold-autoscaled queues
/// with setup times and impatient jobs.
#[derive(Debug, Parser)]
#[command(name = "vnfscale", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    n0: Option<usize>,
    #[arg(long, global = true)]
    k: Option<usize>,
    /// System capacity K.
    #[arg(long, global = true)]
    capacity: Option<usize>,
    /// Master seed for simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; written atomically. Standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact metrics of one configuration.
    Solve,
    /// Replicated simulation with 95% confidence intervals.
    Simulate {
        /// Also write the event trace of the first replication here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Exact metrics against simulation intervals.
    Compare,
    /// Exact metrics over the `[sweep]` grid.
    Sweep,
    /// Choose k from `[plan]` under the budget.
    Plan,
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<vnfscale_core::Error> for Failure {
    fn from(e: vnfscale_core::Error) -> Self {
        Failure {
            code: if e.is_validation() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let over = Overrides {
        lambda: cli.lambda,
        mu: cli.mu,
        alpha: cli.alpha,
        theta: cli.theta,
        n0: cli.n0,
        k: cli.k,
        capacity: cli.capacity,
        seed: cli.seed,
        out: cli.out.clone(),
        format: cli.format,
    };
    let cfg = load_config(cli.config.as_deref(), &over)?;
    let text = match &cli.command {
        Command::Solve => {
            let mut report = analyze(&cfg.model)?;
            if let Some(w) = &cfg.weights {
                report = report.with_score(w)?;
            }
            render_solve(&cfg, &report)
        }
        Command::Simulate { trace } => {
            let report = simulate(&cfg.model, &cfg.sim)?;
            if let Some(path) = trace {
                let mut buf = Vec::new();
                write_trace(&cfg.model, &cfg.sim, 0, &mut buf)?
                    .map_err(|e| Failure::validation(format!("trace: {e}")))?;
                write_atomic(path, &buf)?;
            }
            render_simulate(&cfg, &report)
        }
        Command::Compare => {
            let row = compare(&cfg.model, &cfg.sim)?;
            render_compare(&cfg, &row)
        }
        Command::Sweep => {
            let dims = cfg
                .sweep
                .clone()
                .ok_or_else(|| Failure::validation("sweep requires a [sweep] section"))?;
            let spec = SweepSpec {
                base: cfg.model,
                dims,
                weights: cfg.weights,
            };
            let rows = sweep(&spec)?;
            sweep_csv(&rows)
        }
        Command::Plan => {
            let plan = cfg
                .plan
                .ok_or_else(|| Failure::validation("plan requires a [plan] section"))?;
            let weights = cfg
                .weights
                .ok_or_else(|| Failure::validation("plan requires a [weights] section"))?;
            let result = plan_k(
                &cfg.model,
                plan.k_min..=plan.k_max,
                &weights,
                plan.budget.unwrap_or(f64::INFINITY),
            )?;
            let summary = plan_summary(&result);
            match cfg.format {
                Format::Csv => {
                    eprint!("{summary}");
                    plan_csv(&result)
                }
                Format::Pretty => format!("{summary}\n{}", plan_csv(&result)),
            }
        }
    };
    emit(cfg.out.as_deref(), text.as_bytes())
}

fn render_solve(cfg: &RunConfig, r: &MetricsReport) -> String {
    match cfg.format {
        Format::Csv => format!("{METRICS_HEADER}\n{}\n", metrics_row(&cfg.model, r, r.score)),
        Format::Pretty => {
            let mut s = pretty_params(&cfg.model);
            let undefined = |x: f64| if r.waiting_defined { fmt_num(x) } else { "undefined".into() };
            s += &format!("E[L]  mean jobs          {}\n", fmt_num(r.mean_jobs));
            s += &format!("E[Q]  mean waiting       {}\n", fmt_num(r.mean_waiting));
            s += &format!("W     response time      {}\n", undefined(r.response_time));
            s += &format!("Wq    queue wait         {}\n", undefined(r.queue_wait));
            s += &format!("S     mean instances     {}\n", fmt_num(r.vnf_cost));
            s += &format!("Pb    blocking           {}\n", fmt_num(r.blocking));
            s += &format!("Pd    dropping           {}\n", undefined(r.dropping));
            if let Some(p) = r.score {
                s += &format!("P     score              {}\n", fmt_num(p));
            }
            s
        }
    }
}

fn pretty_params(m: &ModelParams) -> String {
    format!(
        "lambda={} mu={} alpha={} theta={} n0={} k={} K={}\n",
        fmt_num(m.lambda),
        fmt_num(m.mu),
        fmt_num(m.alpha),
        fmt_num(m.theta),
        m.n0,
        m.k,
        m.capacity
    )
}

fn pretty_estimate(e: &Estimate) -> String {
    if e.half_width.is_nan() {
        fmt_num(e.mean)
    } else {
        format!("{} ± {}", fmt_num(e.mean), fmt_num(e.half_width))
    }
}

fn render_simulate(cfg: &RunConfig, r: &SimReport) -> String {
    match cfg.format {
        Format::Csv => format!("{SIM_HEADER}\n{}\n", sim_row(&cfg.model, r)),
        Format::Pretty => {
            let mut s = pretty_params(&cfg.model);
            s += &format!(
                "{} replications, horizon {}, warmup {}, seed {}\n",
                r.replications,
                fmt_num(cfg.sim.horizon),
                fmt_num(cfg.sim.warmup),
                cfg.sim.master_seed
            );
            for (name, e) in [
                ("E[L]", &r.mean_jobs),
                ("E[Q]", &r.mean_waiting),
                ("Wq", &r.queue_wait),
                ("Wq (per job)", &r.queue_wait_direct),
                ("S", &r.vnf_cost),
                ("Pb", &r.blocking),
                ("Pd", &r.dropping),
            ] {
                s += &format!("{name:<14}{}\n", pretty_estimate(e));
            }
            let c = &r.counts;
            s += &format!(
                "arrivals {} blocked {} abandoned {} served {} in system {}\n",
                c.arrivals, c.blocked, c.abandoned, c.served, c.in_system
            );
            s
        }
    }
}

fn render_compare(cfg: &RunConfig, row: &ComparisonRow) -> String {
    match cfg.format {
        Format::Csv => format!("{COMPARE_HEADER}\n{}\n", compare_row(row)),
        Format::Pretty => {
            let mut s = pretty_params(&cfg.model);
            for (name, exact, est, ok) in [
                ("Wq", row.exact.queue_wait, &row.sim.queue_wait, row.within.queue_wait),
                ("S", row.exact.vnf_cost, &row.sim.vnf_cost, row.within.vnf_cost),
                ("Pb", row.exact.blocking, &row.sim.blocking, row.within.blocking),
                ("Pd", row.exact.dropping, &row.sim.dropping, row.within.dropping),
            ] {
                s += &format!(
                    "{name:<4}exact {:<20} sim {:<36} {}\n",
                    fmt_num(exact),
                    pretty_estimate(est),
                    if ok { "within CI" } else { "OUTSIDE CI" }
                );
            }
            s
        }
    }
}

fn plan_summary(p: &PlanResult) -> String {
    let budget = if p.budget.is_infinite() {
        "unbounded".to_string()
    } else {
        fmt_num(p.budget)
    };
    let feasible = p.candidates.iter().filter(|c| c.feasible).count();
    format!(
        "chosen k = {} (score {}, S = {}, Wq = {}, Pb = {}, Pd = {}); budget {}; {} of {} candidates feasible\n",
        p.chosen_k,
        fmt_num(p.score),
        fmt_num(p.report.vnf_cost),
        fmt_num(p.report.queue_wait),
        fmt_num(p.report.blocking),
        fmt_num(p.report.dropping),
        budget,
        feasible,
        p.candidates.len()
    )
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => write_atomic(path, bytes),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::validation(format!("stdout: {e}"))),
    }
}

/// Writes to a temporary file next to `path` and renames it into place, so a
/// failed run never leaves a partial file behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let fail = |e: &dyn std::fmt::Display| Failure::validation(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(bytes).map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}
