use serde::Serialize;
use serde_json::{json, Value};

use super::scenario::{GainPolicy, Method, Scenario};
use super::round_sig;
use crate::detection::{
    method_a_currents, method_a_joint, method_b_channels, method_b_currents, method_c_current, DetectionResult,
    Photocurrent,
};
use crate::entanglement::{generate_entangled_correlated, minimize_over_gain, theta_adapted_bound, DUAN_SIMON_BOUND};
use crate::error::{Error, Result};
use crate::gaussian::{BrightGaussianState, Quadrature};

/// A raw detector reading with the name of the photocurrent it came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedDetection {
    pub name: String,
    #[serde(flatten)]
    pub result: DetectionResult,
}

/// Monte-Carlo estimate of the row's sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub sum: f64,
    pub stderr: f64,
}

/// Outcome of one scenario.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub method: Method,
    /// `None` for Method C, which never separates the two correlations.
    pub v_sq_plus: Option<f64>,
    pub v_sq_minus: Option<f64>,
    pub sum: f64,
    pub bound: f64,
    pub witnessed: bool,
    /// Method A gains of the amplitude and phase combinations.
    pub gain: Option<[f64; 2]>,
    pub frequency: f64,
    pub detections: Vec<NamedDetection>,
    pub mc: Option<OracleEstimate>,
}

impl ReportRow {
    /// JSON view with every number rounded to six significant digits.
    pub fn to_json(&self) -> Value {
        let r = |x: f64| round_sig(x);
        let opt = |x: Option<f64>| x.map(round_sig);
        json!({
            "method": self.method.label(),
            "v_sq_plus": opt(self.v_sq_plus),
            "v_sq_minus": opt(self.v_sq_minus),
            "sum": r(self.sum),
            "bound": r(self.bound),
            "witnessed": self.witnessed,
            "gain": self.gain.map(|g| [r(g[0]), r(g[1])]),
            "frequency": r(self.frequency),
            "detections": self.detections.iter().map(|d| json!({
                "name": d.name,
                "variance": r(d.result.variance),
                "shot_noise": r(d.result.shot_noise),
                "normalized": r(d.result.normalized),
                "rel_db": r(d.result.rel_db),
            })).collect::<Vec<_>>(),
            "mc_sum": self.mc.map(|m| r(m.sum)),
            "mc_stderr": self.mc.map(|m| r(m.stderr)),
        })
    }
}

/// A photocurrent entering the row's sum with weight `coefficient`.
#[derive(Clone, Debug)]
pub struct Probe {
    pub name: &'static str,
    pub current: Photocurrent,
    pub coefficient: f64,
}

/// Analytic value of one probe next to its sampled estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleComparison {
    pub name: String,
    pub analytic: f64,
    pub estimate: f64,
    pub stderr: f64,
}

impl OracleComparison {
    /// Deviation in units of the standard error.
    pub fn z_score(&self) -> f64 {
        (self.estimate - self.analytic) / self.stderr
    }
}

struct Evaluation {
    row: ReportRow,
    probes: Vec<Probe>,
}

/// Entangled pair described by the scenario, before any detection loss.
pub fn entangled_state(s: &Scenario) -> Result<BrightGaussianState> {
    generate_entangled_correlated(&s.input_a, &s.input_b, s.theta, s.entangle_ratio, s.excess_correlation)
}

pub fn run_scenario(s: &Scenario) -> Result<ReportRow> {
    let Evaluation { mut row, probes } = evaluate(s)?;
    if s.mc_samples > 0 {
        let checks = sample_probes(&probes, s.mc_samples, s.seed)?;
        let sum = probes.iter().zip(&checks).map(|(p, c)| p.coefficient * c.estimate).sum();
        let var: f64 = probes.iter().zip(&checks).map(|(p, c)| (p.coefficient * c.stderr).powi(2)).sum();
        row.mc = Some(OracleEstimate { sum, stderr: var.sqrt() });
    }
    Ok(row)
}

/// Photocurrents whose weighted normalized variances add up to the row's sum.
pub fn probes(s: &Scenario) -> Result<Vec<Probe>> {
    Ok(evaluate(s)?.probes)
}

/// Samples every probe of the scenario and reports it against its analytic value.
pub fn oracle_check(s: &Scenario, samples: usize, seed: u64) -> Result<Vec<OracleComparison>> {
    let probes = probes(s)?;
    sample_probes(&probes, samples, seed)
}

fn sample_probes(probes: &[Probe], samples: usize, seed: u64) -> Result<Vec<OracleComparison>> {
    probes
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let (estimate, stderr) = p.current.sample_normalized(samples, probe_seed(seed, k))?;
            Ok(OracleComparison { name: p.name.to_string(), analytic: p.current.result()?.normalized, estimate, stderr })
        })
        .collect()
}

/// Decorrelates the streams of the probes of one scenario.
fn probe_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn evaluate(s: &Scenario) -> Result<Evaluation> {
    s.validate()?;
    let ctx = format!("method {}", s.method);
    evaluate_inner(s).map_err(|e| e.context(&ctx))
}

fn evaluate_inner(s: &Scenario) -> Result<Evaluation> {
    let state = entangled_state(s)?;
    let budgets = s.budgets();
    let eps = s.electronic_imbalance;

    let (v_plus, v_minus, sum, bound, gain, detections, probes) = match s.method {
        Method::A => {
            let (g_x, g_y) = match s.gain {
                GainPolicy::Fixed(g) => (g, g),
                GainPolicy::Optimize => {
                    let best = |q: Quadrature| -> f64 {
                        let f = |g: f64| {
                            method_a_currents(&state, q, &budgets, g, eps)
                                .and_then(|(c, _)| c.result())
                                .map_or(f64::NAN, |r| r.normalized)
                        };
                        minimize_over_gain(f).0
                    };
                    (best(Quadrature::X), best(Quadrature::Y))
                }
            };
            let bound = match s.gain {
                GainPolicy::Fixed(_) => DUAN_SIMON_BOUND,
                GainPolicy::Optimize => theta_adapted_bound(s.theta),
            };
            let x = method_a_joint(&state, Quadrature::X, &budgets, g_x, eps)?;
            let y = method_a_joint(&state, Quadrature::Y, &budgets, g_y, eps)?;
            let (cx, _) = method_a_currents(&state, Quadrature::X, &budgets, g_x, eps)?;
            let (cy, _) = method_a_currents(&state, Quadrature::Y, &budgets, g_y, eps)?;
            let detections = vec![
                named("x_correlation", x.correlation),
                named("x_anticorrelation", x.anti),
                named("x_a", x.individual[0]),
                named("x_b", x.individual[1]),
                named("y_correlation", y.correlation),
                named("y_anticorrelation", y.anti),
                named("y_a", y.individual[0]),
                named("y_b", y.individual[1]),
            ];
            let (p, m) = (x.correlation.normalized, y.correlation.normalized);
            let probes = vec![
                Probe { name: "x_correlation", current: cx, coefficient: 1.0 },
                Probe { name: "y_correlation", current: cy, coefficient: 1.0 },
            ];
            (Some(p), Some(m), p + m, bound, Some([g_x, g_y]), detections, probes)
        }
        Method::B => {
            let ch = method_b_channels(&state, s.phi, &budgets, eps)?;
            let (sum_i, diff_i) = method_b_currents(&state, s.phi, &budgets, eps)?;
            let detections = vec![named("sum", ch.sum), named("difference", ch.diff)];
            let (p, m) = (ch.sum.normalized, ch.diff.normalized);
            let probes = vec![
                Probe { name: "sum", current: sum_i, coefficient: 1.0 },
                Probe { name: "difference", current: diff_i, coefficient: 1.0 },
            ];
            (Some(p), Some(m), p + m, DUAN_SIMON_BOUND, None, detections, probes)
        }
        Method::C => {
            let current = method_c_current(&state, s.phi, s.port, &budgets)?;
            let r = current.result()?;
            let detections = vec![NamedDetection { name: format!("port_{}", s.port.label()), result: r }];
            // the port variance is half the Duan–Simon sum
            let probes = vec![Probe { name: "port", current, coefficient: 2.0 }];
            (None, None, 2.0 * r.normalized, DUAN_SIMON_BOUND, None, detections, probes)
        }
    };

    if !sum.is_finite() {
        return Err(Error::degenerate("non-finite squeezing variance"));
    }
    let row = ReportRow {
        method: s.method,
        v_sq_plus: v_plus,
        v_sq_minus: v_minus,
        sum,
        bound,
        witnessed: sum < bound,
        gain,
        frequency: s.band.center_frequency,
        detections,
        mc: None,
    };
    Ok(Evaluation { row, probes })
}

fn named(name: &str, result: DetectionResult) -> NamedDetection {
    NamedDetection { name: name.to_string(), result }
}
