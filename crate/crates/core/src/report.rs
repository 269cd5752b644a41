//! CSV row schema shared by the solver front ends.

use crate::metrics::MetricsReport;
use crate::params::ModelParams;

pub const PARAM_COLUMNS: [&str; 7] = ["lambda", "mu", "alpha", "theta", "n0", "k", "K"];

/// Header of a solved-metrics row.
pub const METRICS_HEADER: &str = "lambda,mu,alpha,theta,n0,k,K,EL,EQ,W,Wq,S,Pb,Pd,score";

/// Formats with 12 significant digits, trimming trailing zeros, in the style
/// of C's `%.12g`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..12).contains(&exp) {
        return format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    let fixed = format!("{:.*}", decimals, x);
    trim_zeros(&fixed).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Formats an optional value; `None` becomes an empty cell.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub fn param_cells(m: &ModelParams) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        fmt_num(m.lambda),
        fmt_num(m.mu),
        fmt_num(m.alpha),
        fmt_num(m.theta),
        m.n0,
        m.k,
        m.capacity
    )
}

/// `EL,EQ,W,Wq,S,Pb,Pd`. Waiting-time cells are empty when undefined.
pub fn metric_cells(r: &MetricsReport) -> String {
    let timed = |x: f64| {
        if r.waiting_defined {
            fmt_num(x)
        } else {
            String::new()
        }
    };
    format!(
        "{},{},{},{},{},{},{}",
        fmt_num(r.mean_jobs),
        fmt_num(r.mean_waiting),
        timed(r.response_time),
        timed(r.queue_wait),
        fmt_num(r.vnf_cost),
        fmt_num(r.blocking),
        timed(r.dropping)
    )
}

/// Full row matching [`METRICS_HEADER`].
pub fn metrics_row(m: &ModelParams, r: &MetricsReport, score: Option<f64>) -> String {
    format!("{},{},{}", param_cells(m), metric_cells(r), fmt_opt(score))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(2.0 / 3.0), "0.666666666667");
        assert_eq!(fmt_num(50.0), "50");
        assert_eq!(fmt_num(0.005), "0.005");
        assert_eq!(fmt_num(1.5), "1.5");
        assert_eq!(fmt_num(-0.25), "-0.25");
        assert_eq!(fmt_num(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt_num(1.0e-7), "1e-07");
        assert_eq!(fmt_num(2.5e-5), "2.5e-05");
        assert_eq!(fmt_num(1.0e-4), "0.0001");
        assert_eq!(fmt_num(999999999999.5), "1e+12");
        assert_eq!(fmt_num(0.0), "0");
    }

    #[test]
    fn optional_cells() {
        assert_eq!(fmt_opt(None), "");
        assert_eq!(fmt_opt(Some(0.5)), "0.5");
    }
}
