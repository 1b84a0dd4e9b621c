//! CSV curves and the JSON run report.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::config::{self, Config};
use crate::scenario::Point;

pub const CSV_HEADER: &str = "scenario,N,sweep_parameter_name,sweep_value,coefficient,value,defined_flag";

/// 17 significant digits, which round-trips every `f64`.
pub fn number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// One row per coefficient and sweep point. Undefined squeezing coefficients
/// carry their limiting value; other undefined coefficients have an empty
/// `value`.
pub fn csv(config: &Config, points: &[Point]) -> String {
    let mut out = String::with_capacity(points.len() * 10 * 96);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in points {
        for rec in &p.report.coefficients {
            let value = rec.value_or_limit().map(number).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                config.scenario,
                p.n,
                p.sweep_parameter_name,
                number(p.sweep_value),
                rec.name.name(),
                value,
                rec.defined
            )
            .unwrap();
        }
    }
    out
}

pub fn report(config: &Config, points: &[Point], wall_time: f64) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": config::to_json(config),
        "seed": config.seed(),
        "wall_time_seconds": wall_time,
        "points": points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, 2.0 / 3.0, -1e-300, 123456.789, f64::MIN_POSITIVE, 0.1 + 0.2] {
            let s = number(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
            assert!(!s.contains(','));
        }
        assert_eq!(number(2.0 / 3.0), "6.6666666666666663e-1");
    }
}
