//! Independent ground truth: the full generator of the chain, a dense global
//! balance solve, and the product-form solution of the `k = 0` reduction.
//!
//! Nothing here shares code with the level recursion in [`crate::solver`];
//! transitions are enumerated directly from the model's event rules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::solver::StationaryDistribution;
use crate::state_space::StateSpace;

/// Largest state space the dense solve will accept.
pub const DENSE_STATE_LIMIT: usize = 20_000;

/// Entries of the dense solution above this negative value are rounding noise.
const CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    Arrival,
    Service,
    PowerDown,
    Abandonment,
    SetupDone,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub kind: TransitionKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub space: StateSpace,
    pub transitions: Vec<Transition>,
    /// Total outflow rate per state (the negated diagonal).
    pub outflow: Vec<f64>,
}

impl Generator {
    pub fn max_rate(&self) -> f64 {
        self.transitions.iter().map(|t| t.rate).fold(0.0, f64::max)
    }

    /// Outgoing transitions from one state, in insertion order.
    pub fn outgoing(&self, state: usize) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.from == state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorOptions {
    /// Include abandonment arcs. Turning this off gives the setup queue with
    /// infinitely patient jobs regardless of `theta`.
    pub abandonment: bool,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions { abandonment: true }
    }
}

pub fn build_generator(m: &ModelParams) -> Result<Generator> {
    build_generator_with(m, GeneratorOptions::default())
}

pub fn build_generator_with(m: &ModelParams, opts: GeneratorOptions) -> Result<Generator> {
    let m = m.validate()?;
    let space = StateSpace::new(&m);
    if space.len() > DENSE_STATE_LIMIT {
        return Err(Error::SizeGuard {
            states: space.len(),
            limit: DENSE_STATE_LIMIT,
        });
    }
    let mut transitions = Vec::with_capacity(4 * space.len());
    let idx = |i: usize, j: usize| space.index(i, j).expect("state in space");

    for (from, (i, j)) in space.states().enumerate() {
        let servers = m.n0 + i;
        let mut push = |to: usize, rate: f64, kind: TransitionKind| {
            if rate > 0.0 {
                transitions.push(Transition { from, to, rate, kind });
            }
        };
        if j < m.capacity {
            push(idx(i, j + 1), m.lambda, TransitionKind::Arrival);
        }
        if j > 0 {
            let busy = j.min(servers) as f64 * m.mu;
            if i >= 1 && j == servers {
                // the freed server is an instance; it powers off
                push(idx(i - 1, j - 1), busy, TransitionKind::PowerDown);
            } else {
                push(idx(i, j - 1), busy, TransitionKind::Service);
            }
        }
        if opts.abandonment && j > servers {
            push(idx(i, j - 1), (j - servers) as f64 * m.theta, TransitionKind::Abandonment);
        }
        if i < m.k && j > servers {
            let in_setup = (j - servers).min(m.k - i);
            push(idx(i + 1, j), in_setup as f64 * m.alpha, TransitionKind::SetupDone);
        }
    }

    let mut outflow = vec![0.0; space.len()];
    for t in &transitions {
        outflow[t.from] += t.rate;
    }
    Ok(Generator {
        space,
        transitions,
        outflow,
    })
}

/// Solves `pi Q = 0`, `sum pi = 1` by dense LU with partial pivoting. The last
/// balance equation is replaced by the normalization row.
pub fn solve_global(m: &ModelParams) -> Result<StationaryDistribution> {
    solve_generator(&build_generator(m)?)
}

pub fn solve_generator(g: &Generator) -> Result<StationaryDistribution> {
    let n = g.space.len();
    if n > DENSE_STATE_LIMIT {
        return Err(Error::SizeGuard {
            states: n,
            limit: DENSE_STATE_LIMIT,
        });
    }
    // rows are balance equations: sum_from pi_from q(from, to) = 0
    let mut a = DMatrix::<f64>::zeros(n, n);
    for t in &g.transitions {
        a[(t.to, t.from)] += t.rate;
    }
    for s in 0..n {
        a[(s, s)] -= g.outflow[s];
    }
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;

    let x = a.lu().solve(&rhs).ok_or(Error::Singular)?;
    let mut probs: Vec<f64> = x.iter().copied().collect();
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(Error::Singular);
    }
    for p in &mut probs {
        if *p < 0.0 {
            if *p < -CLAMP_TOL {
                return Err(Error::Invariant(format!(
                    "dense solve produced negative mass {p}"
                )));
            }
            *p = 0.0;
        }
    }
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    StationaryDistribution::from_parts(g.space.clone(), probs, 0.0)
}

/// Product form of the `k = 0` chain: birth rate `lambda`, death rate
/// `min(j, n0) mu + max(j - n0, 0) theta`.
pub fn birth_death_closed_form(m: &ModelParams) -> Result<StationaryDistribution> {
    let m = m.validate()?;
    if m.k != 0 {
        return Err(Error::param("k", "closed form requires k = 0"));
    }
    let mut weights = Vec::with_capacity(m.capacity + 1);
    let mut w = 1.0;
    weights.push(w);
    for l in 1..=m.capacity {
        let death = l.min(m.n0) as f64 * m.mu + l.saturating_sub(m.n0) as f64 * m.theta;
        w *= m.lambda / death;
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    let probs = weights.iter().map(|w| w / total).collect();
    StationaryDistribution::from_parts(StateSpace::new(&m), probs, total.ln())
}

/// Max-norm of `pi Q` divided by the largest transition rate.
pub fn residual(m: &ModelParams, dist: &StationaryDistribution) -> Result<f64> {
    generator_residual(&build_generator(m)?, dist)
}

pub fn generator_residual(g: &Generator, dist: &StationaryDistribution) -> Result<f64> {
    if dist.space() != &g.space {
        return Err(Error::DimensionMismatch {
            expected: g.space.len(),
            found: dist.space().len(),
        });
    }
    let pi = dist.probs();
    let mut balance: Vec<f64> = pi.iter().zip(&g.outflow).map(|(p, q)| -p * q).collect();
    for t in &g.transitions {
        balance[t.to] += pi[t.from] * t.rate;
    }
    let scale = g.max_rate();
    let worst = balance.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(if scale > 0.0 { worst / scale } else { worst })
}
