//! Measurement schemes for bright entangled beams.
//!
//! * Method A: one unbalanced Mach–Zehnder per beam measures either
//!   quadrature locally; the photocurrents are combined afterwards.
//! * Method B: the pair is interfered on a balanced splitter; the sum and
//!   difference photocurrents carry the amplitude and phase correlations.
//! * Method C: as B, but a single output port is detected.
//!
//! Variances are photocurrent variances in photon-number units; every result
//! comes with the variance of the same photocurrent combination for coherent
//! light.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{apply_beamsplitter, apply_loss, BrightGaussianState, FluctuationSampler, Quadrature};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Output ports carrying less than this fraction of the total power are dark.
pub const DARK_PORT_FRACTION: f64 = 1e-12;

/// A detected variance together with its shot-noise reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub variance: f64,
    pub shot_noise: f64,
    pub normalized: f64,
    pub rel_db: f64,
}

impl DetectionResult {
    pub fn new(variance: f64, shot_noise: f64) -> Result<Self> {
        if !(shot_noise > 0.0) || !shot_noise.is_finite() {
            return Err(Error::degenerate(format!("shot-noise reference must be positive, got {shot_noise}")));
        }
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::domain(format!("detected variance must be positive, got {variance}")));
        }
        let normalized = variance / shot_noise;
        Ok(DetectionResult { variance, shot_noise, normalized, rel_db: 10.0 * normalized.log10() })
    }
}

/// A linear photocurrent combination on a concrete post-measurement state.
///
/// `weights` act on the quadrature vector of `state` and already include the
/// carrier amplitudes, so `wᵀΣw` is the photocurrent variance in photon-number
/// units.
#[derive(Clone, Debug, PartialEq)]
pub struct Photocurrent {
    pub state: BrightGaussianState,
    pub weights: Vec<f64>,
    pub shot_noise: f64,
}

impl Photocurrent {
    pub fn variance(&self) -> f64 {
        self.state.combination_variance(&self.weights)
    }

    pub fn result(&self) -> Result<DetectionResult> {
        DetectionResult::new(self.variance(), self.shot_noise)
    }

    /// Monte-Carlo estimate of the normalized variance and its standard error,
    /// from `count` draws of the state's fluctuations.
    pub fn sample_normalized(&self, count: usize, seed: u64) -> Result<(f64, f64)> {
        if count < 2 {
            return Err(Error::domain("at least two samples are needed for a variance"));
        }
        let mut sampler = FluctuationSampler::new(self.state.cov(), seed)?;
        let mut draw = vec![0.0; sampler.dim()];
        // Welford accumulation of the photocurrent
        let (mut mean, mut m2) = (0.0, 0.0);
        for k in 0..count {
            sampler.draw(&mut draw);
            let x: f64 = draw.iter().zip(&self.weights).map(|(d, w)| d * w).sum();
            let delta = x - mean;
            mean += delta / (k + 1) as f64;
            m2 += delta * (x - mean);
        }
        let var = m2 / (count - 1) as f64 / self.shot_noise;
        Ok((var, var * (2.0 / (count - 1) as f64).sqrt()))
    }
}

/// Efficiencies between the entangled source and a detector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    /// Propagation transmission `η_prop`.
    pub propagation: f64,
    /// Interference visibility `𝒱`; acts as an efficiency `𝒱²`.
    pub visibility: f64,
    pub quantum_efficiency: f64,
}

impl Default for LossBudget {
    fn default() -> Self {
        LossBudget::ideal()
    }
}

impl LossBudget {
    pub const fn ideal() -> Self {
        LossBudget { propagation: 1.0, visibility: 1.0, quantum_efficiency: 1.0 }
    }

    pub fn new(propagation: f64, visibility: f64, quantum_efficiency: f64) -> Result<Self> {
        let b = LossBudget { propagation, visibility, quantum_efficiency };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("propagation", self.propagation),
            ("visibility", self.visibility),
            ("quantum_efficiency", self.quantum_efficiency),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} must lie in [0,1], got {v}")));
            }
        }
        Ok(())
    }

    /// Efficiency of measurements that involve interference: `η_prop·𝒱²·η_qe`.
    pub fn effective(&self) -> f64 {
        self.propagation * self.visibility * self.visibility * self.quantum_efficiency
    }

    /// Efficiency of direct amplitude detection, which needs no interference.
    pub fn amplitude_path(&self) -> f64 {
        self.propagation * self.quantum_efficiency
    }

    fn for_quadrature(&self, q: Quadrature) -> f64 {
        match q {
            Quadrature::X => self.amplitude_path(),
            Quadrature::Y => self.effective(),
        }
    }
}

/// Variance before a loss `eta` that yields `detected` after it.
pub fn source_variance(detected: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::domain(format!("efficiency must lie in (0,1], got {eta}")));
    }
    let v = (detected - (1.0 - eta)) / eta;
    if !(v > 0.0) {
        return Err(Error::domain(format!("{detected} cannot be produced by loss {eta}")));
    }
    Ok(v)
}

/// Delay line of the unbalanced Mach–Zehnder for a pulsed source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MzGeometry {
    pub repetition_rate: f64,
    pub n: u32,
    /// Arm-length difference in metres, `c·n/f_rep`.
    pub delta_l: f64,
    /// Sideband frequency with a π carrier–sideband phase, `f_rep/(2n)`.
    pub measurement_frequency: f64,
}

pub fn mz_geometry(repetition_rate: f64, n: u32) -> Result<MzGeometry> {
    if !(repetition_rate > 0.0) || !repetition_rate.is_finite() {
        return Err(Error::domain(format!("repetition rate must be positive, got {repetition_rate}")));
    }
    if n == 0 {
        return Err(Error::domain("delay multiple n must be at least 1"));
    }
    Ok(MzGeometry {
        repetition_rate,
        n,
        delta_l: SPEED_OF_LIGHT * n as f64 / repetition_rate,
        measurement_frequency: repetition_rate / (2.0 * n as f64),
    })
}

fn carrier(state: &BrightGaussianState, mode: usize) -> Result<f64> {
    let a = state.amplitude(mode);
    if !(a > 0.0) {
        return Err(Error::degenerate(format!("mode {mode} carries no light")));
    }
    Ok(a)
}

fn require_pair(state: &BrightGaussianState) -> Result<()> {
    if state.num_modes() != 2 {
        return Err(Error::domain(format!("expected a two-mode state, got {} modes", state.num_modes())));
    }
    Ok(())
}

/// Single-beam measurement with the phase-measuring interferometer.
///
/// The interferometer is treated as an ideal carrier–sideband π shifter at
/// the design frequency, so the difference photocurrent has variance
/// `α²V(δY)`. The amplitude setting needs no interference and therefore skips
/// the visibility factor.
pub fn method_a_measure(
    state: &BrightGaussianState,
    mode: usize,
    quadrature: Quadrature,
    budget: &LossBudget,
) -> Result<DetectionResult> {
    budget.validate()?;
    let lossy = apply_loss(state, mode, budget.for_quadrature(quadrature))?;
    let a = carrier(&lossy, mode)?;
    DetectionResult::new(a * a * lossy.variance(mode, quadrature), a * a)
}

/// Joint Method A measurement on both beams.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodAJoint {
    pub quadrature: Quadrature,
    /// `X₁ + gX₂` or `Y₁ − gY₂`.
    pub correlation: DetectionResult,
    /// The opposite-sign combination.
    pub anti: DetectionResult,
    pub individual: [DetectionResult; 2],
}

/// Photocurrent combinations of a joint Method A measurement: the
/// correlation signal and its opposite-sign partner.
///
/// Both photocurrents are scaled to a common carrier level before combining,
/// and `imbalance` is a relative gain error `ε` on the second one, so the
/// combination is `δQ₁ ± g(1+ε)δQ₂`.
pub fn method_a_currents(
    state: &BrightGaussianState,
    quadrature: Quadrature,
    budgets: &[LossBudget; 2],
    g: f64,
    imbalance: f64,
) -> Result<(Photocurrent, Photocurrent)> {
    require_pair(state)?;
    if !g.is_finite() || !imbalance.is_finite() {
        return Err(Error::domain("gain and imbalance must be finite"));
    }
    let mut lossy = state.clone();
    for (mode, budget) in budgets.iter().enumerate() {
        budget.validate()?;
        lossy = apply_loss(&lossy, mode, budget.for_quadrature(quadrature))?;
    }
    let a1 = carrier(&lossy, 0)?;
    let a2 = carrier(&lossy, 1)?;
    let reference = (0.5 * (a1 * a1 + a2 * a2)).sqrt();
    let w = g * (1.0 + imbalance);
    let sign = match quadrature {
        Quadrature::X => 1.0,
        Quadrature::Y => -1.0,
    };
    let weights = |s: f64| match quadrature {
        Quadrature::X => vec![reference, 0.0, s * w * reference, 0.0],
        Quadrature::Y => vec![0.0, reference, 0.0, s * w * reference],
    };
    let shot_noise = reference * reference * (1.0 + w * w);
    let correlation = Photocurrent { state: lossy.clone(), weights: weights(sign), shot_noise };
    let anti = Photocurrent { state: lossy, weights: weights(-sign), shot_noise };
    Ok((correlation, anti))
}

/// Combines two local Method A measurements; see [`method_a_currents`].
pub fn method_a_joint(
    state: &BrightGaussianState,
    quadrature: Quadrature,
    budgets: &[LossBudget; 2],
    g: f64,
    imbalance: f64,
) -> Result<MethodAJoint> {
    let (correlation, anti) = method_a_currents(state, quadrature, budgets, g, imbalance)?;
    let lossy = &correlation.state;
    let single = |mode: usize| -> Result<DetectionResult> {
        let a = lossy.amplitude(mode);
        DetectionResult::new(a * a * lossy.variance(mode, quadrature), a * a)
    };
    Ok(MethodAJoint {
        quadrature,
        correlation: correlation.result()?,
        anti: anti.result()?,
        individual: [single(0)?, single(1)?],
    })
}

/// Output port of the verification splitter.
///
/// With `φ` the relative carrier phase of the second beam, port `d` carries
/// `(a + e^{iφ}b)/√2` and port `c` carries `(a − e^{iφ}b)/√2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Port {
    C,
    D,
}

impl Port {
    fn mode(self) -> usize {
        match self {
            Port::D => 0,
            Port::C => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Port::C => "c",
            Port::D => "d",
        }
    }
}

impl std::str::FromStr for Port {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c" | "C" => Ok(Port::C),
            "d" | "D" => Ok(Port::D),
            other => Err(Error::domain(format!("unknown port `{other}` (expected c or d)"))),
        }
    }
}

/// Sum and difference photocurrents behind the verification splitter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodBChannels {
    pub sum: DetectionResult,
    pub diff: DetectionResult,
    /// Mean photon numbers of ports c and d.
    pub port_powers: [f64; 2],
}

fn interfere(state: &BrightGaussianState, phi: f64, budgets: &[LossBudget; 2]) -> Result<BrightGaussianState> {
    require_pair(state)?;
    let mut lossy = state.clone();
    for (mode, budget) in budgets.iter().enumerate() {
        budget.validate()?;
        lossy = apply_loss(&lossy, mode, budget.effective())?;
    }
    let out = apply_beamsplitter(&lossy, 0, 1, 0.5, phi)?;
    let total = out.total_power();
    for port in [Port::C, Port::D] {
        let p = out.amplitude(port.mode()).powi(2);
        if !(total > 0.0) || p < DARK_PORT_FRACTION * total {
            return Err(Error::degenerate(format!(
                "port {} is dark at φ = {phi}; shot-noise normalization is undefined",
                port.label()
            )));
        }
    }
    Ok(out)
}

/// Sum and difference photocurrents of Method B.
///
/// `imbalance` is a relative gain error on the port-c photocurrent.
pub fn method_b_currents(
    state: &BrightGaussianState,
    phi: f64,
    budgets: &[LossBudget; 2],
    imbalance: f64,
) -> Result<(Photocurrent, Photocurrent)> {
    let out = interfere(state, phi, budgets)?;
    let a_d = out.amplitude(Port::D.mode());
    let a_c = out.amplitude(Port::C.mode()) * (1.0 + imbalance);
    // ordering: [X_d, Y_d, X_c, Y_c]
    let shot_noise = shot_noise_reference(&[a_d, a_c])?;
    let sum = Photocurrent { state: out.clone(), weights: vec![a_d, 0.0, a_c, 0.0], shot_noise };
    let diff = Photocurrent { state: out, weights: vec![a_d, 0.0, -a_c, 0.0], shot_noise };
    Ok((sum, diff))
}

/// Method B: interfere the pair at relative phase `phi` on a balanced
/// splitter and record the sum and difference of the two photocurrents.
pub fn method_b_channels(
    state: &BrightGaussianState,
    phi: f64,
    budgets: &[LossBudget; 2],
    imbalance: f64,
) -> Result<MethodBChannels> {
    let (sum, diff) = method_b_currents(state, phi, budgets, imbalance)?;
    let out = &sum.state;
    Ok(MethodBChannels {
        sum: sum.result()?,
        diff: diff.result()?,
        port_powers: [out.amplitude(Port::C.mode()).powi(2), out.amplitude(Port::D.mode()).powi(2)],
    })
}

/// Photocurrent of a single output port of the verification splitter.
pub fn method_c_current(
    state: &BrightGaussianState,
    phi: f64,
    port: Port,
    budgets: &[LossBudget; 2],
) -> Result<Photocurrent> {
    let out = interfere(state, phi, budgets)?;
    let mode = port.mode();
    let a = out.amplitude(mode);
    let mut weights = vec![0.0; 4];
    weights[Quadrature::X.index(mode)] = a;
    Ok(Photocurrent { state: out, weights, shot_noise: shot_noise_reference(&[a])? })
}

/// Method C: the photocurrent variance of one output port.
pub fn method_c_single_port(
    state: &BrightGaussianState,
    phi: f64,
    port: Port,
    budgets: &[LossBudget; 2],
) -> Result<DetectionResult> {
    method_c_current(state, phi, port, budgets)?.result()
}

/// Coherent-light variance `Σ αᵢ²` of a photocurrent sum weighted by the
/// carrier amplitudes.
pub fn shot_noise_reference(amplitudes: &[f64]) -> Result<f64> {
    if amplitudes.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::domain("amplitudes must be finite and non-negative"));
    }
    let total: f64 = amplitudes.iter().map(|a| a * a).sum();
    if !(total > 0.0) {
        return Err(Error::degenerate("no light reaches the detectors"));
    }
    Ok(total)
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Removes an electronic noise floor from a spectrum-analyzer reading by
/// linear power subtraction.
pub fn correct_electronic_noise(signal_dbm: f64, electronic_dbm: f64) -> Result<f64> {
    if electronic_dbm == f64::NEG_INFINITY {
        return Ok(signal_dbm);
    }
    if !(signal_dbm > electronic_dbm) {
        return Err(Error::domain(format!(
            "signal {signal_dbm} dBm does not exceed electronic noise {electronic_dbm} dBm"
        )));
    }
    Ok(mw_to_dbm(dbm_to_mw(signal_dbm) - dbm_to_mw(electronic_dbm)))
}

/// Inverse of [`correct_electronic_noise`].
pub fn add_electronic_noise(signal_dbm: f64, electronic_dbm: f64) -> f64 {
    mw_to_dbm(dbm_to_mw(signal_dbm) + dbm_to_mw(electronic_dbm))
}
