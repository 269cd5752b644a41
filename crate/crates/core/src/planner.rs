//! Parameter sweeps and selection of the number of on-demand instances.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{MetricsReport, Weights};
use crate::params::ModelParams;
use crate::report::{metrics_row, param_cells, METRICS_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Lambda,
    Mu,
    Alpha,
    Theta,
    N0,
    K,
    Capacity,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Lambda => "lambda",
            SweepParam::Mu => "mu",
            SweepParam::Alpha => "alpha",
            SweepParam::Theta => "theta",
            SweepParam::N0 => "n0",
            SweepParam::K => "k",
            SweepParam::Capacity => "K",
        }
    }

    fn is_integer(&self) -> bool {
        matches!(self, SweepParam::N0 | SweepParam::K | SweepParam::Capacity)
    }

    fn apply(&self, m: &mut ModelParams, value: f64) {
        match self {
            SweepParam::Lambda => m.lambda = value,
            SweepParam::Mu => m.mu = value,
            SweepParam::Alpha => m.alpha = value,
            SweepParam::Theta => m.theta = value,
            // integrality checked when the grid is built
            SweepParam::N0 => m.n0 = value.round() as usize,
            SweepParam::K => m.k = value.round() as usize,
            SweepParam::Capacity => m.capacity = value.round() as usize,
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lambda" => SweepParam::Lambda,
            "mu" => SweepParam::Mu,
            "alpha" => SweepParam::Alpha,
            "theta" => SweepParam::Theta,
            "n0" => SweepParam::N0,
            "k" => SweepParam::K,
            "K" | "capacity" => SweepParam::Capacity,
            other => return Err(Error::param("sweep", format!("unknown parameter `{other}`"))),
        })
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Inclusive arithmetic grid `start, start + step, ..., <= stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepDim {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepDim {
    pub fn new(param: SweepParam, start: f64, stop: f64, step: f64) -> Self {
        SweepDim {
            param,
            start,
            stop,
            step,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let field = "sweep";
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(Error::param(field, format!("{}: bounds must be finite", self.param)));
        }
        if self.stop < self.start {
            return Err(Error::param(field, format!("{}: stop < start", self.param)));
        }
        if !(self.step > 0.0) && self.stop > self.start {
            return Err(Error::param(field, format!("{}: step must be positive", self.param)));
        }
        let count = if self.stop == self.start {
            1
        } else {
            ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
        };
        let values: Vec<f64> = (0..count).map(|n| self.start + n as f64 * self.step).collect();
        if self.param.is_integer() {
            for &v in &values {
                if v < 0.0 || (v - v.round()).abs() > 1e-9 {
                    return Err(Error::param(
                        field,
                        format!("{}: grid value {v} is not a non-negative integer", self.param),
                    ));
                }
            }
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ModelParams,
    /// Outermost dimension first.
    pub dims: Vec<SweepDim>,
    pub weights: Option<Weights>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub params: ModelParams,
    pub outcome: Result<MetricsReport>,
}

impl SweepSpec {
    /// Grid points in lexicographic order over `dims`.
    pub fn grid(&self) -> Result<Vec<ModelParams>> {
        let mut points = vec![self.base];
        for dim in &self.dims {
            let values = dim.values()?;
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p;
                        dim.param.apply(&mut q, v);
                        q
                    })
                })
                .collect();
        }
        Ok(points)
    }
}

fn evaluate(m: &ModelParams, weights: Option<&Weights>) -> Result<MetricsReport> {
    let report = crate::analyze(m)?;
    match weights {
        Some(w) => report.with_score(w),
        None => Ok(report),
    }
}

/// One row per grid point. Invalid points carry their error instead of
/// aborting the sweep.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let grid = spec.grid()?;
    Ok(grid
        .into_par_iter()
        .map(|params| SweepRow {
            params,
            outcome: evaluate(&params, spec.weights.as_ref()),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub k: usize,
    pub params: ModelParams,
    /// Metrics with score, or why the candidate could not be evaluated.
    pub outcome: Result<MetricsReport>,
    pub feasible: bool,
}

impl Candidate {
    pub fn score(&self) -> Option<f64> {
        self.outcome.as_ref().ok().and_then(|r| r.score)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub chosen_k: usize,
    pub report: MetricsReport,
    pub score: f64,
    pub budget: f64,
    pub candidates: Vec<Candidate>,
}

/// Evaluates every `k` in `k_range`, keeps those whose mean instance count `S`
/// is within `budget`, and returns the one with the lowest score (smallest
/// `k` on ties). Candidates with `K < n0 + k` are infeasible.
pub fn plan_k(
    base: &ModelParams,
    k_range: RangeInclusive<usize>,
    weights: &Weights,
    budget: f64,
) -> Result<PlanResult> {
    if k_range.is_empty() {
        return Err(Error::param("plan.k", "empty candidate range"));
    }
    if budget.is_nan() || budget < 0.0 {
        return Err(Error::param("plan.budget", format!("must be >= 0, got {budget}")));
    }
    let candidates: Vec<Candidate> = k_range
        .into_par_iter()
        .map(|k| {
            let params = ModelParams { k, ..*base };
            let outcome = evaluate(&params, Some(weights));
            let feasible = matches!(&outcome, Ok(r) if r.vnf_cost <= budget);
            Candidate {
                k,
                params,
                outcome,
                feasible,
            }
        })
        .collect();

    // a genuine modeling failure must not be hidden behind "infeasible"
    if let Some(err) = candidates.iter().find_map(|c| match &c.outcome {
        Err(e) if !e.is_validation() => Some(e.clone()),
        _ => None,
    }) {
        return Err(err);
    }

    let mut best: Option<&Candidate> = None;
    for c in candidates.iter().filter(|c| c.feasible) {
        let better = match best {
            None => true,
            Some(b) => c.score() < b.score(),
        };
        if better {
            best = Some(c);
        }
    }
    let best = best.ok_or(Error::NoFeasibleK { budget })?;
    let report = *best.outcome.as_ref().expect("feasible candidates evaluated");
    Ok(PlanResult {
        chosen_k: best.k,
        report,
        score: report.score.expect("scored"),
        budget,
        candidates,
    })
}

pub const SWEEP_HEADER: &str = "lambda,mu,alpha,theta,n0,k,K,EL,EQ,W,Wq,S,Pb,Pd,score,error";

fn outcome_row(params: &ModelParams, outcome: &Result<MetricsReport>) -> String {
    match outcome {
        Ok(r) => format!("{},", metrics_row(params, r, r.score)),
        // 8 empty metric cells keep the columns aligned
        Err(e) => format!("{},,,,,,,,,{}", param_cells(params), csv_text(&e.to_string())),
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&outcome_row(&row.params, &row.outcome));
        out.push('\n');
    }
    out
}

pub const PLAN_HEADER: &str = "lambda,mu,alpha,theta,n0,k,K,EL,EQ,W,Wq,S,Pb,Pd,score,error,feasible,chosen";

pub fn plan_csv(plan: &PlanResult) -> String {
    let mut out = String::from(PLAN_HEADER);
    out.push('\n');
    for c in &plan.candidates {
        out.push_str(&format!(
            "{},{},{}\n",
            outcome_row(&c.params, &c.outcome),
            c.feasible,
            c.k == plan.chosen_k
        ));
    }
    out
}

/// Header shared by `solve` output and the first columns of sweep rows.
pub fn metrics_header() -> &'static str {
    METRICS_HEADER
}
