//! Exact stationary distribution by level-wise backward coefficients and
//! forward substitution.
//!
//! Within level `i` the masses satisfy `pi(i, j) = a(i, j) + b(i, j) * pi(i, j-1)`
//! for `j > n_i`. The coefficients are computed from `j = K` downwards using the
//! balance equations of level `i` and the (already known) masses of level
//! `i - 1`, which feed level `i` through setup completions. The lowest state
//! of each level is seeded by the flow balance across the cut between levels
//! `<= i` and `> i`. Everything stays non-negative, so no cancellation occurs.
//!
//! Work and memory are linear in the number of states.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::report::fmt_num;
use crate::state_space::StateSpace;

/// Relative slack allowed when checking the coefficient bounds, to absorb
/// rounding in the last few ulps.
pub const BOUND_RTOL: f64 = 1e-12;

/// Masses above this are rescaled mid-level to stay clear of overflow.
const RESCALE_THRESHOLD: f64 = 1e250;

/// Recursion coefficients of one level, for `j = first_jobs ..= K`.
/// Level 0 has no `a` term; its `a` vector is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCoefficients {
    pub level: usize,
    pub first_jobs: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl LevelCoefficients {
    pub fn a_at(&self, jobs: usize) -> f64 {
        if self.a.is_empty() {
            0.0
        } else {
            self.a[jobs - self.first_jobs]
        }
    }

    pub fn b_at(&self, jobs: usize) -> f64 {
        self.b[jobs - self.first_jobs]
    }

    pub fn jobs(&self) -> std::ops::RangeInclusive<usize> {
        self.first_jobs..=self.first_jobs + self.b.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoeffTable {
    pub levels: Vec<LevelCoefficients>,
}

/// Normalized probability mass over a [`StateSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    space: StateSpace,
    probs: Vec<f64>,
    log_scale: f64,
}

impl StationaryDistribution {
    /// Wraps an already normalized vector. `log_scale` is the log of the
    /// normalizing constant relative to `pi(0,0) = 1`, or 0 when unknown.
    pub fn from_parts(space: StateSpace, probs: Vec<f64>, log_scale: f64) -> Result<Self> {
        if probs.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                found: probs.len(),
            });
        }
        Ok(StationaryDistribution {
            space,
            probs,
            log_scale,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, level: usize, jobs: usize) -> f64 {
        self.space
            .index(level, jobs)
            .map_or(0.0, |idx| self.probs[idx])
    }

    pub fn level(&self, i: usize) -> &[f64] {
        &self.probs[self.space.level_indices(i)]
    }

    /// `ln Z` where `Z` is the total unnormalized mass when `pi(0,0) = 1`.
    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.space.states().zip(self.probs.iter().copied())
    }

    /// Largest absolute difference to another distribution on the same space.
    pub fn sup_distance(&self, other: &StationaryDistribution) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch {
                expected: self.space.len(),
                found: other.space.len(),
            });
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    }

    /// Writes `level,jobs,probability` rows in state order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "level,jobs,probability")?;
        for ((i, j), p) in self.iter() {
            writeln!(out, "{i},{j},{}", fmt_num(p))?;
        }
        Ok(())
    }
}

fn setups_in_progress(m: &ModelParams, level: usize, jobs: usize) -> usize {
    let n_i = m.servers_at(level);
    jobs.saturating_sub(n_i).min(m.total_servers() - n_i)
}

/// Upper bound on `b(i, j)` for `j > n_i`.
pub fn b_upper_bound(m: &ModelParams, level: usize, jobs: usize) -> f64 {
    let n_i = m.servers_at(level);
    m.lambda
        / (n_i as f64 * m.mu
            + setups_in_progress(m, level, jobs) as f64 * m.alpha
            + (jobs - n_i) as f64 * m.theta)
}

/// Backward pass for `j = K` down to `n_i + 1`. `inflow` holds the masses of
/// level `i - 1` (indexed by that level's range); `None` for level 0.
///
/// With `down_j = n_i mu + (j - n_i) theta` and `s_j` instances in setup, the
/// denominator `A_j = lambda + down_j + s_j alpha - down_{j+1} b_{j+1}` is
/// carried as `A_j = down_j + E_j`, where `E_j = s_j alpha + lambda E_{j+1} / A_{j+1}`
/// and `E_K = s_K alpha`. Every term is non-negative, so there is no
/// cancellation when `lambda` dwarfs the service rates.
fn backward_pass(
    m: &ModelParams,
    level: usize,
    inflow: Option<(&[f64], usize)>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n_i = m.servers_at(level);
    let cap = m.capacity;
    let len = cap - n_i;
    let mut a = vec![0.0; if inflow.is_some() { len } else { 0 }];
    let mut b = vec![0.0; len];
    let busy_rate = n_i as f64 * m.mu;
    let down = |j: usize| busy_rate + (j - n_i) as f64 * m.theta;

    // (E_{j+1}, A_{j+1})
    let mut upper: Option<(f64, f64)> = None;
    for j in (n_i + 1..=cap).rev() {
        let slot = j - n_i - 1;
        let setup = setups_in_progress(m, level, j) as f64 * m.alpha;
        let excess = match upper {
            None => setup,
            Some((e, denom)) => setup + m.lambda * (e / denom),
        };
        let denom = down(j) + excess;
        if !(denom > 0.0 && denom.is_finite()) {
            return Err(Error::Invariant(format!(
                "non-positive denominator {denom} at level {level}, jobs {j}"
            )));
        }
        upper = Some((excess, denom));

        b[slot] = m.lambda / denom;
        let bound = b_upper_bound(m, level, j);
        if b[slot] < 0.0 || b[slot] > bound * (1.0 + BOUND_RTOL) {
            return Err(Error::Invariant(format!(
                "b({level},{j}) = {} outside [0, {bound}]",
                b[slot]
            )));
        }
        if let Some((prev, prev_lowest)) = inflow {
            let carried = if j < cap { down(j + 1) * a[slot + 1] } else { 0.0 };
            let setup_rate = setups_in_progress(m, level - 1, j) as f64 * m.alpha;
            a[slot] = (carried + setup_rate * prev[j - prev_lowest]) / denom;
            if !(a[slot] >= 0.0 && a[slot].is_finite()) {
                return Err(Error::Invariant(format!(
                    "a({level},{j}) = {} is not a non-negative number",
                    a[slot]
                )));
            }
        }
    }
    Ok((a, b))
}

/// `b(0, j)` for `j = 1..=K`: `lambda / (j mu)` up to `n0`, then the backward
/// recursion over the waiting region of level 0.
pub fn level0_coefficients(m: &ModelParams) -> Result<LevelCoefficients> {
    let mut b: Vec<f64> = (1..=m.n0)
        .map(|j| m.lambda / (j as f64 * m.mu))
        .collect();
    let (_, tail) = backward_pass(m, 0, None)?;
    b.extend(tail);
    Ok(LevelCoefficients {
        level: 0,
        first_jobs: 1,
        a: Vec::new(),
        b,
    })
}

/// Coefficients of level `level >= 1` given the masses of level `level - 1`
/// over its full job range.
pub fn level_coefficients(
    m: &ModelParams,
    level: usize,
    prev_level: &[f64],
) -> Result<LevelCoefficients> {
    assert!(level >= 1 && level <= m.k, "level {level} out of 1..={}", m.k);
    let prev_lowest = if level == 1 { 0 } else { m.servers_at(level - 1) };
    if prev_level.len() != m.capacity + 1 - prev_lowest {
        return Err(Error::DimensionMismatch {
            expected: m.capacity + 1 - prev_lowest,
            found: prev_level.len(),
        });
    }
    let (a, b) = backward_pass(m, level, Some((prev_level, prev_lowest)))?;
    Ok(LevelCoefficients {
        level,
        first_jobs: m.servers_at(level) + 1,
        a,
        b,
    })
}

/// Mass of the lowest state of level `level + 1` from the cut balance between
/// levels `<= level` and `> level`: setups completing upward must equal
/// departures that power an instance down.
pub fn boundary_mass(m: &ModelParams, level: usize, level_masses: &[f64]) -> f64 {
    let n_i = m.servers_at(level);
    let lowest = if level == 0 { 0 } else { n_i };
    let upward: f64 = (n_i + 1..=m.capacity)
        .map(|j| setups_in_progress(m, level, j) as f64 * m.alpha * level_masses[j - lowest])
        .sum();
    upward / (m.servers_at(level + 1) as f64 * m.mu)
}

/// Solves for the stationary distribution. Each level's coefficients are
/// dropped once its masses are filled, so memory stays at one mass array.
pub fn solve_stationary(m: &ModelParams) -> Result<StationaryDistribution> {
    solve_levels(m, |_| {})
}

/// Solves for the stationary distribution and also returns every level's
/// coefficients. The `a` coefficients of level `i` are expressed in the
/// (rescaled) units of level `i - 1`.
pub fn solve_with_coefficients(m: &ModelParams) -> Result<(StationaryDistribution, CoeffTable)> {
    let mut table = CoeffTable::default();
    let dist = solve_levels(m, |c| table.levels.push(c))?;
    Ok((dist, table))
}

fn solve_levels(
    m: &ModelParams,
    mut keep: impl FnMut(LevelCoefficients),
) -> Result<StationaryDistribution> {
    let m = m.validate()?;
    let space = StateSpace::new(&m);
    let mut mass = vec![0.0; space.len()];
    let mut level_log = Vec::with_capacity(m.k + 1);

    let coeffs = level0_coefficients(&m)?;
    {
        let level = &mut mass[space.level_indices(0)];
        level[0] = 1.0;
        let log = forward_pass(level, 0, &coeffs);
        level_log.push(log);
    }
    keep(coeffs);

    for i in 1..=m.k {
        let prev_range = space.level_indices(i - 1);
        let cur_range = space.level_indices(i);
        let (head, tail) = mass.split_at_mut(cur_range.start);
        let prev = &head[prev_range];
        let cur = &mut tail[..cur_range.len()];

        cur[0] = boundary_mass(&m, i - 1, prev);
        let coeffs = level_coefficients(&m, i, prev)?;
        let log = forward_pass(cur, i, &coeffs);
        level_log.push(level_log[i - 1] + log);
        keep(coeffs);
    }

    let top = level_log.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for i in 0..=m.k {
        let w = (level_log[i] - top).exp();
        for p in &mut mass[space.level_indices(i)] {
            *p *= w;
            total += *p;
        }
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Invariant(format!("total mass {total} is not positive")));
    }
    for p in &mut mass {
        *p /= total;
    }
    Ok(StationaryDistribution {
        space,
        probs: mass,
        log_scale: top + total.ln(),
    })
}

/// Fills `level[1..]` from `level[0]` with `pi_j = a_j + b_j pi_{j-1}`, then
/// rescales the level so its maximum is 1. Returns the log of the factor
/// divided out.
fn forward_pass(level: &mut [f64], level_idx: usize, coeffs: &LevelCoefficients) -> f64 {
    let mut log = 0.0;
    // running divisor applied to the a terms after a mid-level rescale
    let mut local = 1.0;
    let first = coeffs.first_jobs;
    let lowest = if level_idx == 0 { 0 } else { first - 1 };
    for pos in 1..level.len() {
        let j = lowest + pos;
        let value = coeffs.a_at(j) / local + coeffs.b_at(j) * level[pos - 1];
        level[pos] = value;
        if value > RESCALE_THRESHOLD {
            for p in &mut level[..=pos] {
                *p /= RESCALE_THRESHOLD;
            }
            local *= RESCALE_THRESHOLD;
            log += RESCALE_THRESHOLD.ln();
        }
    }
    let max = level.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        for p in level.iter_mut() {
            *p /= max;
        }
        log += max.ln();
    }
    log
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ModelParams {
        ModelParams::new(1.0, 1.0, 0.5, 0.2, 2, 2, 7)
    }

    #[test]
    fn level0_below_legacy_capacity_is_poisson_ratio() {
        let m = ModelParams::new(1.0, 1.0, 0.5, 0.2, 2, 2, 7);
        let c = level0_coefficients(&m).unwrap();
        assert_eq!(c.b_at(1), 1.0);
        assert_eq!(c.b_at(2), 0.5);
        assert_eq!(c.jobs(), 1..=7);
    }

    #[test]
    fn level0_terminal_with_no_instances() {
        let m = ModelParams::new(1.0, 1.0, 1.0, 0.0, 1, 0, 1);
        let c = level0_coefficients(&m).unwrap();
        assert_eq!(c.b, vec![1.0]);
    }

    #[test]
    fn top_level_terminal_coefficient() {
        let (_, table) = solve_with_coefficients(&small()).unwrap();
        let top = &table.levels[2];
        assert_eq!(top.jobs(), 5..=7);
        let expected = 1.0 / (4.0 + 3.0 * 0.2);
        assert!((top.b_at(7) - expected).abs() < 1e-15);
        assert!((top.b_at(7) - 0.217391304347826).abs() < 1e-12);
    }

    #[test]
    fn first_level_respects_bound() {
        let (_, table) = solve_with_coefficients(&small()).unwrap();
        let lvl = &table.levels[1];
        for j in 4..=7usize {
            let bound = 1.0 / (3.0 + (j - 3).min(1) as f64 * 0.5 + (j - 3) as f64 * 0.2);
            let b = lvl.b_at(j);
            assert!(b > 0.0 && b <= bound * (1.0 + BOUND_RTOL), "j={j}: {b} vs {bound}");
            assert!(lvl.a_at(j) >= 0.0);
        }
    }

    #[test]
    fn zero_arrivals_concentrate_on_empty_state() {
        let m = ModelParams::new(0.0, 1.0, 0.5, 0.2, 2, 2, 7);
        let (dist, table) = solve_with_coefficients(&m).unwrap();
        assert_eq!(dist.prob(0, 0), 1.0);
        assert!(dist.probs()[1..].iter().all(|&p| p == 0.0));
        for lvl in &table.levels {
            assert!(lvl.b.iter().all(|&b| b == 0.0));
            assert!(lvl.a.iter().all(|&a| a >= 0.0 && a.is_finite()));
        }
        let level0 = dist.level(0);
        assert_eq!(boundary_mass(&m, 0, level0), 0.0);
    }

    #[test]
    fn unit_ratio_birth_death() {
        let m = ModelParams::new(1.0, 1.0, 1.0, 0.0, 1, 0, 2);
        let dist = solve_stationary(&m).unwrap();
        for &p in dist.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((dist.log_scale() - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_scale_recovers_empty_state_mass() {
        let dist = solve_stationary(&small()).unwrap();
        assert!(((-dist.log_scale()).exp() - dist.prob(0, 0)).abs() < 1e-14);
    }

    #[test]
    fn large_instance_survives_without_overflow() {
        // lambda^n0 / n0! reaches ~1e300 within level 0
        let m = ModelParams::new(2000.0, 1.0, 0.01, 0.01, 170, 10, 400);
        let dist = solve_stationary(&m).unwrap();
        let total: f64 = dist.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(dist.probs().iter().all(|p| p.is_finite() && *p >= 0.0));
        assert!(dist.log_scale() > 600.0);
    }

    #[test]
    fn rejects_invalid_params() {
        let m = ModelParams::new(1.0, 1.0, 1.0, 0.0, 2, 3, 4);
        assert!(matches!(
            solve_stationary(&m),
            Err(Error::InvalidParam { field: "K", .. })
        ));
    }

    #[test]
    fn csv_is_stable() {
        let m = ModelParams::new(1.0, 1.0, 1.0, 0.0, 1, 0, 2);
        let mut buf = Vec::new();
        solve_stationary(&m).unwrap().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "level,jobs,probability\n0,0,0.333333333333\n0,1,0.333333333333\n0,2,0.333333333333\n"
        );
    }
}
