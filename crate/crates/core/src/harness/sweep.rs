use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use super::format_sig;
use super::run::{run_scenario, ReportRow};
use super::scenario::{GainPolicy, Scenario};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "method,param,value,v_sq_plus,v_sq_minus,sum,bound,witnessed,mc_sum,mc_stderr";

/// Scenario parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Theta,
    Phi,
    Gain,
    /// Squeezing of both inputs.
    SqueezingDb,
    /// Propagation efficiency of both arms.
    Eta,
    /// Classical phase noise of both inputs.
    ExcessPhaseDb,
    EntangleRatio,
}

impl SweepParam {
    pub const ALL: [SweepParam; 7] = [
        SweepParam::Theta,
        SweepParam::Phi,
        SweepParam::Gain,
        SweepParam::SqueezingDb,
        SweepParam::Eta,
        SweepParam::ExcessPhaseDb,
        SweepParam::EntangleRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Theta => "theta",
            SweepParam::Phi => "phi",
            SweepParam::Gain => "gain",
            SweepParam::SqueezingDb => "squeezing_db",
            SweepParam::Eta => "eta",
            SweepParam::ExcessPhaseDb => "excess_phase_db",
            SweepParam::EntangleRatio => "entangle_ratio",
        }
    }

    /// Copy of `s` with the parameter set to `value`.
    ///
    /// Raising the squeezing above an input's antisqueezing lifts the
    /// antisqueezing along, keeping the input at least minimum-uncertainty.
    pub fn apply(self, s: &Scenario, value: f64) -> Scenario {
        let mut s = s.clone();
        match self {
            SweepParam::Theta => s.theta = value,
            SweepParam::Phi => s.phi = value,
            SweepParam::Gain => s.gain = GainPolicy::Fixed(value),
            SweepParam::SqueezingDb => {
                for input in [&mut s.input_a, &mut s.input_b] {
                    input.squeezing_db = value;
                    input.antisqueezing_db = input.antisqueezing_db.max(value);
                }
            }
            SweepParam::Eta => {
                s.budget_a.prop_loss = 1.0 - value;
                s.budget_b.prop_loss = 1.0 - value;
            }
            SweepParam::ExcessPhaseDb => {
                s.input_a.excess_phase_db = value;
                s.input_b.excess_phase_db = value;
            }
            SweepParam::EntangleRatio => s.entangle_ratio = value,
        }
        s
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<_> = SweepParam::ALL.iter().map(|p| p.name()).collect();
            Error::validation("param", format!("unknown sweep parameter `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

/// One grid point; `row` is `None` where the configuration is degenerate.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub row: Option<ReportRow>,
}

/// Evenly spaced grid of `steps` points from `from` to `to` inclusive.
pub fn grid(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::validation("steps", format!("need at least 2 grid points, got {steps}")));
    }
    if !from.is_finite() || !to.is_finite() {
        return Err(Error::validation("from", "grid limits must be finite"));
    }
    let h = (to - from) / (steps - 1) as f64;
    Ok((0..steps).map(|k| if k + 1 == steps { to } else { from + k as f64 * h }).collect())
}

/// Runs the scenario at every grid point in parallel; points come back in grid order.
pub fn sweep(s: &Scenario, param: SweepParam, from: f64, to: f64, steps: usize) -> Result<Vec<SweepPoint>> {
    let values = grid(from, to, steps)?;
    values
        .into_par_iter()
        .map(|value| {
            let point = param.apply(s, value);
            match run_scenario(&point) {
                Ok(row) => Ok(SweepPoint { value, row: Some(row) }),
                Err(Error::Degenerate(_)) => Ok(SweepPoint { value, row: None }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Writes the fixed-schema CSV of a sweep.
pub fn write_csv<W: Write>(mut out: W, s: &Scenario, param: SweepParam, points: &[SweepPoint]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for p in points {
        let mut cells = vec![s.method.label().to_string(), param.name().to_string(), format_sig(p.value)];
        match &p.row {
            Some(row) => {
                let opt = |x: Option<f64>| x.map(format_sig).unwrap_or_default();
                cells.push(opt(row.v_sq_plus));
                cells.push(opt(row.v_sq_minus));
                cells.push(format_sig(row.sum));
                cells.push(format_sig(row.bound));
                cells.push(row.witnessed.to_string());
                cells.push(opt(row.mc.map(|m| m.sum)));
                cells.push(opt(row.mc.map(|m| m.stderr)));
            }
            None => cells.extend(std::iter::repeat_n(String::new(), 7)),
        }
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn sweep_csv(s: &Scenario, param: SweepParam, from: f64, to: f64, steps: usize) -> Result<String> {
    let points = sweep(s, param, from, to, steps)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, s, param, &points)?;
    Ok(String::from_utf8(buf).expect("CSV is ASCII"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::Method;

    #[test]
    fn grid_is_inclusive_and_monotone() {
        let g = grid(0.1, 3.0, 30).unwrap();
        assert_eq!(g.len(), 30);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[29], 3.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(grid(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        let err = "detuning".parse::<SweepParam>().unwrap_err();
        assert!(err.to_string().contains("detuning"));
        for p in SweepParam::ALL {
            assert_eq!(p.name().parse::<SweepParam>().unwrap(), p);
        }
    }

    #[test]
    fn degenerate_points_leave_empty_cells() {
        // port c goes dark at φ = 0
        let s = Scenario::symmetric(Method::C, 3.0);
        let csv = sweep_csv(&s, SweepParam::Phi, 0.0, 1.0, 3).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "C,phi,0.00000,,,,,,,");
        assert_eq!(lines[2].split(',').count(), 10);
        assert!(lines[2].ends_with(",,"), "{}", lines[2]);
    }

    #[test]
    fn invalid_points_abort_the_sweep() {
        let s = Scenario::symmetric(Method::B, 3.0);
        assert!(sweep(&s, SweepParam::Eta, 0.5, 1.5, 3).is_err());
    }

    #[test]
    fn excess_noise_leaks_in_off_balance() {
        // fully common noise stays a global phase at θ = π/2, whatever the ratio
        let mut s = Scenario::symmetric(Method::B, 3.7);
        s.entangle_ratio = 0.48;
        s.excess_correlation = 0.9;
        let pts = sweep(&s, SweepParam::ExcessPhaseDb, 0.0, 25.0, 11).unwrap();
        let vm: Vec<f64> = pts.iter().map(|p| p.row.as_ref().unwrap().v_sq_minus.unwrap()).collect();
        assert!(vm.windows(2).all(|w| w[1] > w[0]), "{vm:?}");
    }
}
