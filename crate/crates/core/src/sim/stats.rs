use statrs::distribution::{ContinuousCDF, StudentsT};

/// Mean and 95% half-width across replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// NaN when fewer than two replications are available.
    pub half_width: f64,
}

impl Estimate {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.half_width
    }
}

/// Two-sided 95% Student-t interval. Values are sorted first so that the
/// result does not depend on the order replications finished in.
pub fn student_t_95(values: &[f64]) -> Estimate {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return Estimate {
            mean: f64::NAN,
            half_width: f64::NAN,
        };
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Estimate {
            mean,
            half_width: f64::NAN,
        };
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    Estimate {
        mean,
        half_width: t * (var / n as f64).sqrt(),
    }
}

/// 95% upper bound on a proportion after observing zero events in `trials`
/// (the "rule of three"). A t-interval over all-zero replications collapses
/// to a point and cannot express this uncertainty.
pub fn zero_event_upper_bound(trials: u64) -> f64 {
    if trials == 0 {
        1.0
    } else {
        (3.0 / trials as f64).min(1.0)
    }
}
