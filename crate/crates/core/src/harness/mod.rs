//! Scenario files, parameter sweeps and method comparison.

mod compare;
mod run;
mod scenario;
mod sweep;

pub use compare::{compare_methods, ComparisonTable};
pub use run::{
    entangled_state, oracle_check, probes, run_scenario, NamedDetection, OracleComparison, OracleEstimate, Probe,
    ReportRow,
};
pub use scenario::{load_scenario, parse_scenario, BudgetConfig, GainPolicy, Method, Scenario, DEFAULT_AMPLITUDE};
pub use sweep::{grid, sweep, sweep_csv, write_csv, SweepParam, SweepPoint, CSV_HEADER};

const SIG_DIGITS: i32 = 6;

/// Formats `x` with six significant digits, switching to exponent notation
/// outside `[1e-4, 1e6)`.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return format!("{:.*}", (SIG_DIGITS - 1) as usize, 0.0);
    }
    let mut exp = x.abs().log10().floor() as i32;
    // rounding can carry into the next decade (9.999996 -> 10.0000)
    if (x.abs() / 10f64.powi(exp)) >= 10.0 - 0.5 * 10f64.powi(1 - SIG_DIGITS) {
        exp += 1;
    }
    if (-4..6).contains(&exp) {
        let decimals = (SIG_DIGITS - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{:.*e}", (SIG_DIGITS - 1) as usize, x)
    }
}

/// `x` rounded to six significant digits.
pub fn round_sig(x: f64) -> f64 {
    format_sig(x).parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig(2.0), "2.00000");
        assert_eq!(format_sig(0.427), "0.427000");
        assert_eq!(format_sig(-1.234567), "-1.23457");
        assert_eq!(format_sig(9.999996), "10.0000");
        assert_eq!(format_sig(123456.7), "123457");
        assert_eq!(format_sig(2.05e7), "2.05000e7");
        assert_eq!(format_sig(1.5e-5), "1.50000e-5");
        assert_eq!(format_sig(0.0), "0.00000");
        assert_eq!(round_sig(0.12345678), 0.123457);
    }
}
