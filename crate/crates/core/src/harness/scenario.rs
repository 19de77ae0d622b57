//! Scenario documents.
//!
//! A scenario file is a flat list of `key = value` lines. Keys are the
//! scenario field names, nested fields use dotted paths (`budget_a.visibility`),
//! values are JSON literals. Lines starting with `#` are comments.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::detection::{LossBudget, Port};
use crate::error::{Error, Result};
use crate::gaussian::{DetectionBand, SqueezedInputSpec};

/// Carrier amplitude used when a scenario does not set one. Normalized
/// results do not depend on it.
pub const DEFAULT_AMPLITUDE: f64 = 1.0e4;

/// Correlation group shared by inputs that come out of one fiber.
const DEFAULT_GROUP: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    A,
    B,
    C,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::A => "A",
            Method::B => "B",
            Method::C => "C",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Method::A),
            "B" | "b" => Ok(Method::B),
            "C" | "c" => Ok(Method::C),
            other => Err(Error::validation("method", format!("expected A, B or C, got {other:?}"))),
        }
    }
}

/// Gain applied to the second beam's photocurrent in Method A.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GainPolicy {
    Fixed(f64),
    /// Separate gains for both quadratures, each minimizing its own variance.
    Optimize,
}

impl Default for GainPolicy {
    fn default() -> Self {
        GainPolicy::Fixed(1.0)
    }
}

/// Loss budget as written in a scenario file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetConfig {
    /// Fraction of the power lost in propagation.
    pub prop_loss: f64,
    pub visibility: f64,
    pub quantum_efficiency: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig { prop_loss: 0.0, visibility: 1.0, quantum_efficiency: 1.0 }
    }
}

impl BudgetConfig {
    pub fn to_budget(&self) -> LossBudget {
        LossBudget {
            propagation: 1.0 - self.prop_loss,
            visibility: self.visibility,
            quantum_efficiency: self.quantum_efficiency,
        }
    }

    fn validate(&self, prefix: &str) -> Result<()> {
        for (name, v) in [
            ("prop_loss", self.prop_loss),
            ("visibility", self.visibility),
            ("quantum_efficiency", self.quantum_efficiency),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(format!("{prefix}.{name}"), format!("must lie in [0,1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Full description of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub input_a: SqueezedInputSpec,
    pub input_b: SqueezedInputSpec,
    pub theta: f64,
    pub entangle_ratio: f64,
    pub phi: f64,
    pub method: Method,
    pub budget_a: BudgetConfig,
    pub budget_b: BudgetConfig,
    pub gain: GainPolicy,
    pub excess_correlation: f64,
    pub seed: u64,
    pub mc_samples: usize,
    /// Detected port for Method C.
    pub port: Port,
    /// Relative gain error of the second photocurrent.
    pub electronic_imbalance: f64,
    pub band: DetectionBand,
}

impl Scenario {
    /// Lossless θ = π/2 scenario with the given input squeezing on both beams.
    pub fn symmetric(method: Method, squeezing_db: f64) -> Self {
        let input = SqueezedInputSpec {
            correlated_group: Some(DEFAULT_GROUP),
            ..SqueezedInputSpec::pure(DEFAULT_AMPLITUDE, squeezing_db)
        };
        Scenario {
            input_a: input,
            input_b: input,
            theta: FRAC_PI_2,
            entangle_ratio: 0.5,
            phi: FRAC_PI_2,
            method,
            budget_a: BudgetConfig::default(),
            budget_b: BudgetConfig::default(),
            gain: GainPolicy::default(),
            excess_correlation: 1.0,
            seed: 0,
            mc_samples: 0,
            port: Port::C,
            electronic_imbalance: 0.0,
            band: DetectionBand::default(),
        }
    }

    pub fn budgets(&self) -> [LossBudget; 2] {
        [self.budget_a.to_budget(), self.budget_b.to_budget()]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, input) in [("input_a", &self.input_a), ("input_b", &self.input_b)] {
            input.validate().map_err(|e| Error::validation(name, strip_kind(e)))?;
        }
        for (name, v) in [("theta", self.theta), ("phi", self.phi), ("electronic_imbalance", self.electronic_imbalance)] {
            if !v.is_finite() {
                return Err(Error::validation(name, format!("must be finite, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.entangle_ratio) {
            return Err(Error::validation("entangle_ratio", format!("must lie in [0,1], got {}", self.entangle_ratio)));
        }
        if !(0.0..=1.0).contains(&self.excess_correlation) {
            return Err(Error::validation(
                "excess_correlation",
                format!("must lie in [0,1], got {}", self.excess_correlation),
            ));
        }
        self.budget_a.validate("budget_a")?;
        self.budget_b.validate("budget_b")?;
        if let GainPolicy::Fixed(g) = self.gain {
            if !g.is_finite() || g < 0.0 {
                return Err(Error::validation("gain", format!("must be a non-negative number or \"optimize\", got {g}")));
            }
        }
        if self.electronic_imbalance <= -1.0 {
            return Err(Error::validation("electronic_imbalance", "must exceed -1"));
        }
        if self.mc_samples == 1 {
            return Err(Error::validation("mc_samples", "must be 0 (off) or at least 2"));
        }
        for (name, v) in [
            ("band.center_frequency", self.band.center_frequency),
            ("band.rbw", self.band.rbw),
            ("band.vbw", self.band.vbw),
            ("band.repetition_rate", self.band.repetition_rate),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Serializes every field, so parsing the output yields an equal scenario.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut put = |key: &str, v: Value| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&v.to_string());
            out.push('\n');
        };
        put("method", Value::from(self.method.label()));
        for (prefix, input) in [("input_a", &self.input_a), ("input_b", &self.input_b)] {
            put(&format!("{prefix}.amplitude"), num(input.amplitude));
            put(&format!("{prefix}.squeezing_db"), num(input.squeezing_db));
            put(&format!("{prefix}.antisqueezing_db"), num(input.antisqueezing_db));
            put(&format!("{prefix}.excess_phase_db"), num(input.excess_phase_db));
            put(&format!("{prefix}.correlated_group"), input.correlated_group.map_or(Value::Null, Value::from));
        }
        put("theta", num(self.theta));
        put("entangle_ratio", num(self.entangle_ratio));
        put("phi", num(self.phi));
        for (prefix, b) in [("budget_a", &self.budget_a), ("budget_b", &self.budget_b)] {
            put(&format!("{prefix}.prop_loss"), num(b.prop_loss));
            put(&format!("{prefix}.visibility"), num(b.visibility));
            put(&format!("{prefix}.quantum_efficiency"), num(b.quantum_efficiency));
        }
        put(
            "gain",
            match self.gain {
                GainPolicy::Fixed(g) => num(g),
                GainPolicy::Optimize => Value::from("optimize"),
            },
        );
        put("excess_correlation", num(self.excess_correlation));
        put("seed", Value::from(self.seed));
        put("mc_samples", Value::from(self.mc_samples));
        put("port", Value::from(self.port.label()));
        put("electronic_imbalance", num(self.electronic_imbalance));
        put("band.center_frequency", num(self.band.center_frequency));
        put("band.rbw", num(self.band.rbw));
        put("band.vbw", num(self.band.vbw));
        put("band.repetition_rate", num(self.band.repetition_rate));
        out
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_scenario(s)
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn strip_kind(e: Error) -> String {
    match e {
        Error::Domain(m) | Error::Degenerate(m) => m,
        other => other.to_string(),
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_scenario(&text)
}

const REQUIRED: [&str; 3] = ["method", "input_a.squeezing_db", "input_b.squeezing_db"];

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut s = Scenario::symmetric(Method::A, 0.0);
    let mut seen = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: line_no, message: format!("expected `key = value`, got {line:?}") })?;
        let key = key.trim();
        let value: Value = serde_json::from_str(value.trim())
            .map_err(|e| Error::Parse { line: line_no, message: format!("value of `{key}` is not valid JSON: {e}") })?;
        if !seen.insert(key.to_string()) {
            return Err(Error::Parse { line: line_no, message: format!("duplicate key `{key}`") });
        }
        assign(&mut s, key, &value)?;
    }

    for key in REQUIRED {
        if !seen.contains(key) {
            return Err(Error::validation(key, "required key is missing"));
        }
    }
    // minimum-uncertainty inputs unless stated otherwise
    if !seen.contains("input_a.antisqueezing_db") {
        s.input_a.antisqueezing_db = s.input_a.squeezing_db;
    }
    if !seen.contains("input_b.antisqueezing_db") {
        s.input_b.antisqueezing_db = s.input_b.squeezing_db;
    }
    s.validate()?;
    Ok(s)
}

fn assign(s: &mut Scenario, key: &str, v: &Value) -> Result<()> {
    if let Some((head, field)) = key.split_once('.') {
        return match head {
            "input_a" => assign_input(&mut s.input_a, key, field, v),
            "input_b" => assign_input(&mut s.input_b, key, field, v),
            "budget_a" => assign_budget(&mut s.budget_a, key, field, v),
            "budget_b" => assign_budget(&mut s.budget_b, key, field, v),
            "band" => {
                let slot = match field {
                    "center_frequency" => &mut s.band.center_frequency,
                    "rbw" => &mut s.band.rbw,
                    "vbw" => &mut s.band.vbw,
                    "repetition_rate" => &mut s.band.repetition_rate,
                    _ => return Err(unknown(key)),
                };
                *slot = number(key, v)?;
                Ok(())
            }
            _ => Err(unknown(key)),
        };
    }
    match key {
        "method" => s.method = string(key, v)?.parse()?,
        "theta" => s.theta = number(key, v)?,
        "entangle_ratio" => s.entangle_ratio = number(key, v)?,
        "phi" => s.phi = number(key, v)?,
        "gain" => {
            s.gain = match v {
                Value::String(t) if t == "optimize" => GainPolicy::Optimize,
                Value::Number(_) => GainPolicy::Fixed(number(key, v)?),
                _ => return Err(Error::validation(key, "expected a number or \"optimize\"")),
            }
        }
        "excess_correlation" => s.excess_correlation = number(key, v)?,
        "seed" => s.seed = unsigned(key, v)?,
        "mc_samples" => {
            s.mc_samples = usize::try_from(unsigned(key, v)?).map_err(|_| Error::validation(key, "too large"))?
        }
        "port" => s.port = string(key, v)?.parse().map_err(|e| Error::validation(key, strip_kind(e)))?,
        "electronic_imbalance" => s.electronic_imbalance = number(key, v)?,
        _ => return Err(unknown(key)),
    }
    Ok(())
}

fn assign_input(input: &mut SqueezedInputSpec, key: &str, field: &str, v: &Value) -> Result<()> {
    match field {
        "amplitude" => input.amplitude = number(key, v)?,
        "squeezing_db" => input.squeezing_db = number(key, v)?,
        "antisqueezing_db" => input.antisqueezing_db = number(key, v)?,
        "excess_phase_db" => input.excess_phase_db = number(key, v)?,
        "correlated_group" => {
            input.correlated_group = match v {
                Value::Null => None,
                _ => Some(u32::try_from(unsigned(key, v)?).map_err(|_| Error::validation(key, "too large"))?),
            }
        }
        _ => return Err(unknown(key)),
    }
    Ok(())
}

fn assign_budget(b: &mut BudgetConfig, key: &str, field: &str, v: &Value) -> Result<()> {
    let slot = match field {
        "prop_loss" => &mut b.prop_loss,
        "visibility" => &mut b.visibility,
        "quantum_efficiency" => &mut b.quantum_efficiency,
        _ => return Err(unknown(key)),
    };
    *slot = number(key, v)?;
    Ok(())
}

fn unknown(key: &str) -> Error {
    Error::validation(key, "unknown key")
}

fn number(key: &str, v: &Value) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::validation(key, format!("expected a number, got {v}")))
}

fn unsigned(key: &str, v: &Value) -> Result<u64> {
    v.as_u64().ok_or_else(|| Error::validation(key, format!("expected a non-negative integer, got {v}")))
}

fn string<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::validation(key, format!("expected a string, got {v}")))
}
