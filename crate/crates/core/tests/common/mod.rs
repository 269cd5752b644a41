#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vnfscale_core::ModelParams;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

/// Fixed grid of small random instances: n0 in 0..=5, k in 0..=4,
/// K in N..=N+12, rates log-uniform in [0.01, 10].
pub fn small_grid(count: usize, seed: u64) -> Vec<ModelParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n0 = rng.random_range(0..=5usize);
        let k = rng.random_range(0..=4usize);
        if n0 + k == 0 {
            continue;
        }
        let capacity = n0 + k + rng.random_range(0..=12usize);
        out.push(ModelParams::new(
            log_uniform(&mut rng, 0.01, 10.0),
            log_uniform(&mut rng, 0.01, 10.0),
            log_uniform(&mut rng, 0.01, 10.0),
            log_uniform(&mut rng, 0.01, 10.0),
            n0,
            k,
            capacity,
        ));
    }
    out
}

/// Metrics recomputed from first principles on any distribution over the
/// model's states, given as `((level, jobs), probability)` pairs. Returns
/// `(W_q, S, P_b, P_d)`.
pub fn reference_metrics(
    m: &ModelParams,
    states: impl Iterator<Item = ((usize, usize), f64)>,
) -> (f64, f64, f64, f64) {
    let (mut el, mut eq, mut s, mut pb) = (0.0, 0.0, 0.0, 0.0);
    for ((i, j), p) in states {
        let servers = m.n0 + i;
        let waiting = j.saturating_sub(servers);
        el += j as f64 * p;
        eq += waiting as f64 * p;
        s += (i + waiting.min(m.k - i)) as f64 * p;
        if j == m.capacity {
            pb += p;
        }
    }
    let accepted = m.lambda * (1.0 - pb);
    if accepted > 0.0 {
        (el / accepted - 1.0 / m.mu, s, pb, eq * m.theta / accepted)
    } else {
        (0.0, s, pb, 0.0)
    }
}
