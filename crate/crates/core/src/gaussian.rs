//! Bright Gaussian beams in the linearized carrier-plus-fluctuation picture.
//!
//! Every mode carries a classical amplitude `α ≥ 0` and a carrier phase. The
//! fluctuation quadratures `δX` (along the carrier) and `δY` (perpendicular to
//! it) are expressed in a frame that co-rotates with the carrier, so the
//! amplitude quadrature is always the one seen by direct photodetection:
//! `n ≈ α² + α·δX`.
//!
//! Covariances are in shot-noise units (vacuum quadrature variance = 1) and use
//! the interleaved ordering `[δX₁, δY₁, δX₂, δY₂, …]`.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for symmetry of covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Most negative eigenvalue still accepted as positive semi-definite.
pub const PSD_TOL: f64 = 1e-9;
/// Outputs weaker than this fraction of the input amplitude scale are dark.
pub const DARK_AMPLITUDE_FRACTION: f64 = 1e-6;

/// Converts a level in dB to a linear variance ratio.
pub fn db_to_var(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear variance ratio to dB.
pub fn var_to_db(v: f64) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::domain(format!("variance must be positive and finite, got {v}")));
    }
    Ok(10.0 * v.log10())
}

/// Which quadrature of a mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrature {
    /// Amplitude quadrature, along the carrier.
    X,
    /// Phase quadrature, perpendicular to the carrier.
    Y,
}

impl Quadrature {
    /// Row of this quadrature of `mode` in the covariance matrix.
    pub fn index(self, mode: usize) -> usize {
        match self {
            Quadrature::X => 2 * mode,
            Quadrature::Y => 2 * mode + 1,
        }
    }
}

/// A fiber-squeezed input beam.
///
/// `squeezing_db` is the reduction of `δX` below shot noise, `antisqueezing_db`
/// the quantum excess of `δY`. `excess_phase_db` adds classical phase noise
/// whose realization is shared by every input carrying the same
/// `correlated_group`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezedInputSpec {
    pub amplitude: f64,
    pub squeezing_db: f64,
    pub antisqueezing_db: f64,
    pub excess_phase_db: f64,
    pub correlated_group: Option<u32>,
}

impl SqueezedInputSpec {
    /// Minimum-uncertainty squeezed input with no classical phase noise.
    pub fn pure(amplitude: f64, squeezing_db: f64) -> Self {
        SqueezedInputSpec {
            amplitude,
            squeezing_db,
            antisqueezing_db: squeezing_db,
            excess_phase_db: 0.0,
            correlated_group: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("amplitude", self.amplitude),
            ("squeezing_db", self.squeezing_db),
            ("antisqueezing_db", self.antisqueezing_db),
            ("excess_phase_db", self.excess_phase_db),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.squeezed_variance() * self.antisqueezed_variance() < 1.0 - PSD_TOL {
            return Err(Error::domain(format!(
                "Heisenberg bound violated: {} dB squeezing with only {} dB antisqueezing",
                self.squeezing_db, self.antisqueezing_db
            )));
        }
        Ok(())
    }

    /// `V(δX)` of the input.
    pub fn squeezed_variance(&self) -> f64 {
        db_to_var(-self.squeezing_db)
    }

    /// Quantum part of `V(δY)`.
    pub fn antisqueezed_variance(&self) -> f64 {
        db_to_var(self.antisqueezing_db)
    }

    /// Classical phase-noise variance added on top of the quantum part.
    pub fn classical_phase_variance(&self) -> f64 {
        if self.excess_phase_db > 0.0 {
            db_to_var(self.excess_phase_db) - 1.0
        } else {
            0.0
        }
    }

    /// Total `V(δY)`.
    pub fn phase_variance(&self) -> f64 {
        self.antisqueezed_variance() + self.classical_phase_variance()
    }
}

/// Spectrum-analyzer settings of a measurement. Carried as metadata only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionBand {
    pub center_frequency: f64,
    pub rbw: f64,
    pub vbw: f64,
    pub repetition_rate: f64,
}

impl Default for DetectionBand {
    fn default() -> Self {
        DetectionBand { center_frequency: 17.5e6, rbw: 300e3, vbw: 30.0, repetition_rate: 82e6 }
    }
}

impl DetectionBand {
    pub fn validate(&self) -> Result<()> {
        if !(self.center_frequency > 0.0) {
            return Err(Error::domain("center frequency must be positive"));
        }
        Ok(())
    }
}

/// Classical phase noise still attached to a mode, kept until the mode is
/// mixed with others so that `compose` can correlate inputs of one group.
#[derive(Clone, Copy, Debug, PartialEq)]
struct CommonPhaseNoise {
    group: u32,
    variance: f64,
}

/// n-mode bright Gaussian state.
#[derive(Clone, Debug, PartialEq)]
pub struct BrightGaussianState {
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
    cov: DMatrix<f64>,
    common: Vec<Option<CommonPhaseNoise>>,
}

impl BrightGaussianState {
    /// Builds a state from raw parts, checking every invariant.
    pub fn from_parts(amplitudes: Vec<f64>, phases: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = amplitudes.len();
        if phases.len() != n || cov.nrows() != 2 * n || cov.ncols() != 2 * n {
            return Err(Error::domain(format!(
                "shape mismatch: {n} amplitudes, {} phases, {}x{} covariance",
                phases.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        if amplitudes.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::domain("amplitudes must be finite and non-negative"));
        }
        let state = BrightGaussianState { amplitudes, phases, cov, common: vec![None; n] };
        state.check_covariance()?;
        Ok(state)
    }

    pub fn num_modes(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, mode: usize) -> f64 {
        self.amplitudes[mode]
    }

    /// Carrier phase of each mode in the laboratory frame.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Total mean photon number `Σ α²`.
    pub fn total_power(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }

    pub fn variance(&self, mode: usize, q: Quadrature) -> f64 {
        let k = q.index(mode);
        self.cov[(k, k)]
    }

    pub fn covariance(&self, (m1, q1): (usize, Quadrature), (m2, q2): (usize, Quadrature)) -> f64 {
        self.cov[(q1.index(m1), q2.index(m2))]
    }

    /// Variance `wᵀ Σ w` of a linear combination of quadratures.
    pub fn combination_variance(&self, weights: &[f64]) -> f64 {
        debug_assert_eq!(weights.len(), self.cov.nrows());
        let w = DVector::from_column_slice(weights);
        (w.transpose() * &self.cov * &w)[(0, 0)]
    }

    /// Fails unless the covariance is symmetric and positive semi-definite.
    pub fn check_covariance(&self) -> Result<()> {
        let n = self.cov.nrows();
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (self.cov[(i, j)], self.cov[(j, i)]);
                let scale = 1f64.max(a.abs()).max(b.abs());
                if (a - b).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::domain(format!("covariance not symmetric at ({i},{j})")));
                }
            }
        }
        if self.cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("covariance has non-finite entries"));
        }
        let min = min_eigenvalue(&self.cov);
        if min < -PSD_TOL {
            return Err(Error::domain(format!("covariance not positive semi-definite (eigenvalue {min:e})")));
        }
        Ok(())
    }

    fn debug_check(self) -> Self {
        debug_assert!(self.check_covariance().is_ok(), "{:?}", self.check_covariance());
        self
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes() {
            return Err(Error::domain(format!("mode {mode} out of range for {}-mode state", self.num_modes())));
        }
        Ok(())
    }

    /// Applies `block` (a 2x2 or 4x4 real matrix acting on the listed modes)
    /// to the fluctuation vector and updates the covariance by congruence.
    fn transform_modes(&mut self, modes: &[usize], block: &DMatrix<f64>) {
        let dim = self.cov.nrows();
        let mut full = DMatrix::<f64>::identity(dim, dim);
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        for (r, &ri) in idx.iter().enumerate() {
            for (c, &ci) in idx.iter().enumerate() {
                full[(ri, ci)] = block[(r, c)];
            }
        }
        let cov = &full * &self.cov * full.transpose();
        self.cov = symmetrize(cov);
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Rotation taking carrier-frame quadratures to laboratory-frame quadratures
/// for a carrier at phase `phi`.
fn rotation(phi: f64) -> [[f64; 2]; 2] {
    let (s, c) = phi.sin_cos();
    [[c, -s], [s, c]]
}

/// Coherent state of the given amplitude: `cov = I`.
pub fn make_coherent(amplitude: f64) -> Result<BrightGaussianState> {
    if !amplitude.is_finite() || amplitude < 0.0 {
        return Err(Error::domain(format!("amplitude must be non-negative, got {amplitude}")));
    }
    Ok(BrightGaussianState {
        amplitudes: vec![amplitude],
        phases: vec![0.0],
        cov: DMatrix::identity(2, 2),
        common: vec![None],
    })
}

/// Amplitude-squeezed single-mode state described by `spec`.
pub fn make_squeezed(spec: &SqueezedInputSpec) -> Result<BrightGaussianState> {
    spec.validate()?;
    let mut cov = DMatrix::zeros(2, 2);
    cov[(0, 0)] = spec.squeezed_variance();
    cov[(1, 1)] = spec.phase_variance();
    let common = match spec.correlated_group {
        Some(group) if spec.classical_phase_variance() > 0.0 => {
            Some(CommonPhaseNoise { group, variance: spec.classical_phase_variance() })
        }
        _ => None,
    };
    Ok(BrightGaussianState { amplitudes: vec![spec.amplitude], phases: vec![0.0], cov, common: vec![common] })
}

/// Tensor product with fully correlated common-mode phase noise.
pub fn compose(states: &[BrightGaussianState]) -> BrightGaussianState {
    compose_correlated(states, 1.0).expect("unit correlation is always valid")
}

/// Tensor product of independent states, except that modes from different
/// constituents sharing a `correlated_group` receive the cross covariance
/// `Cov(δYᵢ, δYⱼ) = correlation · √(cᵢ cⱼ)` of their classical phase noise.
pub fn compose_correlated(states: &[BrightGaussianState], correlation: f64) -> Result<BrightGaussianState> {
    if !(0.0..=1.0).contains(&correlation) {
        return Err(Error::domain(format!("excess correlation must lie in [0,1], got {correlation}")));
    }
    let n: usize = states.iter().map(|s| s.num_modes()).sum();
    let mut out = BrightGaussianState {
        amplitudes: Vec::with_capacity(n),
        phases: Vec::with_capacity(n),
        cov: DMatrix::zeros(2 * n, 2 * n),
        common: Vec::with_capacity(n),
    };
    let mut owner = Vec::with_capacity(n);
    let mut offset = 0;
    for (k, s) in states.iter().enumerate() {
        let d = 2 * s.num_modes();
        out.cov.view_mut((offset, offset), (d, d)).copy_from(&s.cov);
        out.amplitudes.extend_from_slice(&s.amplitudes);
        out.phases.extend_from_slice(&s.phases);
        out.common.extend_from_slice(&s.common);
        owner.extend(std::iter::repeat_n(k, s.num_modes()));
        offset += d;
    }
    for p in 0..n {
        for q in 0..p {
            if owner[p] == owner[q] {
                continue;
            }
            if let (Some(a), Some(b)) = (out.common[p], out.common[q]) {
                if a.group == b.group {
                    let c = correlation * (a.variance * b.variance).sqrt();
                    out.cov[(2 * p + 1, 2 * q + 1)] = c;
                    out.cov[(2 * q + 1, 2 * p + 1)] = c;
                }
            }
        }
    }
    Ok(out.debug_check())
}

/// Lossless beam splitter between modes `i` and `j`.
///
/// `ratio` is the intensity transmission (0.5 is balanced) and `theta` the
/// relative carrier phase of mode `j` with respect to mode `i` where they
/// meet. With carriers aligned to that relative phase the outputs are
///
/// ```text
/// out_i = √r · a_i + √(1−r) · a_j
/// out_j = √(1−r) · a_i − √r · a_j
/// ```
///
/// so for equal inputs `α` and `r = 0.5` the output amplitudes are
/// `α√(1+cosθ)` and `α√(1−cosθ)`. Outputs are re-expressed in frames aligned
/// with their own carriers. An output weaker than
/// [`DARK_AMPLITUDE_FRACTION`] of the input scale is dark: its amplitude is set
/// to zero and its fluctuations are kept in the laboratory frame.
pub fn apply_beamsplitter(
    state: &BrightGaussianState,
    i: usize,
    j: usize,
    ratio: f64,
    theta: f64,
) -> Result<BrightGaussianState> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::domain(format!("splitting ratio must lie in [0,1], got {ratio}")));
    }
    if !theta.is_finite() {
        return Err(Error::domain("interference phase must be finite"));
    }
    state.check_mode(i)?;
    state.check_mode(j)?;
    if i == j {
        return Err(Error::domain("beam splitter needs two distinct modes"));
    }
    let t = ratio.sqrt();
    let r = (1.0 - ratio).sqrt();
    let phase_i = state.phases[i];
    let phase_j = phase_i + theta;

    let a_i = Complex::from_polar(state.amplitudes[i], phase_i);
    let a_j = Complex::from_polar(state.amplitudes[j], phase_j);
    let out_i = a_i * t + a_j * r;
    let out_j = a_i * r - a_j * t;
    let scale = (state.amplitudes[i].powi(2) + state.amplitudes[j].powi(2)).sqrt();
    let carrier = |z: Complex<f64>| {
        if z.norm() <= DARK_AMPLITUDE_FRACTION * scale {
            (0.0, 0.0)
        } else {
            (z.norm(), z.arg())
        }
    };
    let (amp_i, psi_i) = carrier(out_i);
    let (amp_j, psi_j) = carrier(out_j);

    // carrier frame -> lab frame for the (phase-shifted) inputs
    let in_i = rotation(phase_i);
    let in_j = rotation(phase_j);
    // lab frame -> carrier frame for the outputs (transpose of the rotation)
    let back_i = rotation(-psi_i);
    let back_j = rotation(-psi_j);
    let mix = [[t, r], [r, -t]];
    let ins = [in_i, in_j];
    let backs = [back_i, back_j];
    let mut block = DMatrix::zeros(4, 4);
    for out in 0..2 {
        for inp in 0..2 {
            // back_out · mix[out][inp] · in_inp
            for a in 0..2 {
                for b in 0..2 {
                    let mut v = 0.0;
                    for k in 0..2 {
                        v += backs[out][a][k] * ins[inp][k][b];
                    }
                    block[(2 * out + a, 2 * inp + b)] = mix[out][inp] * v;
                }
            }
        }
    }

    let mut next = state.clone();
    next.transform_modes(&[i, j], &block);
    next.amplitudes[i] = amp_i;
    next.amplitudes[j] = amp_j;
    next.phases[i] = psi_i;
    next.phases[j] = psi_j;
    next.common[i] = None;
    next.common[j] = None;
    Ok(next.debug_check())
}

/// Pure loss channel of transmission `eta` on one mode (vacuum admixture).
pub fn apply_loss(state: &BrightGaussianState, mode: usize, eta: f64) -> Result<BrightGaussianState> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain(format!("transmission must lie in [0,1], got {eta}")));
    }
    state.check_mode(mode)?;
    let mut next = state.clone();
    let s = eta.sqrt();
    let own = [2 * mode, 2 * mode + 1];
    let dim = next.cov.nrows();
    for r in 0..dim {
        for c in 0..dim {
            let factor = match (own.contains(&r), own.contains(&c)) {
                (true, true) => eta,
                (false, false) => continue,
                _ => s,
            };
            next.cov[(r, c)] *= factor;
        }
    }
    for k in own {
        next.cov[(k, k)] = eta * state.cov[(k, k)] + (1.0 - eta);
    }
    next.amplitudes[mode] *= s;
    if let Some(noise) = next.common[mode].as_mut() {
        noise.variance *= eta;
    }
    Ok(next.debug_check())
}

/// Rotates the fluctuation frame of `mode` by `phi` relative to its carrier:
/// `δX' = cos φ δX + sin φ δY`, `δY' = −sin φ δX + cos φ δY`.
///
/// The carrier phase advances by `phi` while laboratory-frame fluctuations are
/// untouched, so subsequent interference sees the shifted carrier.
pub fn apply_phase(state: &BrightGaussianState, mode: usize, phi: f64) -> Result<BrightGaussianState> {
    state.check_mode(mode)?;
    let rot = rotation(-phi);
    let block = DMatrix::from_row_slice(2, 2, &[rot[0][0], rot[0][1], rot[1][0], rot[1][1]]);
    let mut next = state.clone();
    next.transform_modes(&[mode], &block);
    next.phases[mode] += phi;
    next.common[mode] = None;
    Ok(next.debug_check())
}

/// Photocurrent variance `α² V(δX)` of direct detection on `mode`.
pub fn direct_detect_variance(state: &BrightGaussianState, mode: usize) -> Result<f64> {
    state.check_mode(mode)?;
    let a = state.amplitudes[mode];
    if !(a > 0.0) {
        return Err(Error::degenerate(format!("mode {mode} has no carrier; direct detection is not linearizable")));
    }
    Ok(a * a * state.variance(mode, Quadrature::X))
}

/// Draws zero-mean Gaussian vectors with a given covariance.
///
/// Uses the symmetric square root `V·√Λ` of the covariance, so singular (but
/// positive semi-definite) matrices are accepted.
pub struct FluctuationSampler {
    factor: DMatrix<f64>,
    rng: ChaCha8Rng,
    scratch: Vec<f64>,
}

impl FluctuationSampler {
    pub fn new(cov: &DMatrix<f64>, seed: u64) -> Result<Self> {
        let eig = SymmetricEigen::new(cov.clone());
        if let Some(min) = eig.eigenvalues.iter().copied().reduce(f64::min) {
            if min < -PSD_TOL {
                return Err(Error::domain(format!("cannot sample: covariance has eigenvalue {min:e}")));
            }
        }
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let factor = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        let dim = cov.nrows();
        Ok(FluctuationSampler { factor, rng: ChaCha8Rng::seed_from_u64(seed), scratch: vec![0.0; dim] })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// Writes one draw into `out`.
    pub fn draw(&mut self, out: &mut [f64]) {
        let dim = self.dim();
        for z in self.scratch.iter_mut() {
            *z = StandardNormal.sample(&mut self.rng);
        }
        for (r, o) in out.iter_mut().enumerate().take(dim) {
            let mut v = 0.0;
            for c in 0..dim {
                v += self.factor[(r, c)] * self.scratch[c];
            }
            *o = v;
        }
    }
}

/// `count × 2n` matrix of fluctuation samples; deterministic for a given seed.
pub fn sample_fluctuations(state: &BrightGaussianState, count: usize, seed: u64) -> Result<DMatrix<f64>> {
    if count == 0 {
        return Err(Error::domain("sample count must be at least 1"));
    }
    let mut sampler = FluctuationSampler::new(&state.cov, seed)?;
    let dim = sampler.dim();
    let mut out = DMatrix::zeros(count, dim);
    let mut row = vec![0.0; dim];
    for k in 0..count {
        sampler.draw(&mut row);
        for (c, v) in row.iter().enumerate() {
            out[(k, c)] = *v;
        }
    }
    Ok(out)
}

/// Unbiased sample covariance of the rows of `samples`.
pub fn empirical_covariance(samples: &DMatrix<f64>) -> DMatrix<f64> {
    let n = samples.nrows() as f64;
    let mean = samples.row_mean();
    let mut centered = samples.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    centered.transpose() * &centered / (n - 1.0)
}

/// JSON form `{amplitudes, phases, cov}` with the covariance as nested rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateRecord {
    pub amplitudes: Vec<f64>,
    #[serde(default)]
    pub phases: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl From<&BrightGaussianState> for StateRecord {
    fn from(s: &BrightGaussianState) -> Self {
        StateRecord {
            amplitudes: s.amplitudes.clone(),
            phases: s.phases.clone(),
            cov: s.cov.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

impl TryFrom<StateRecord> for BrightGaussianState {
    type Error = Error;

    fn try_from(rec: StateRecord) -> Result<Self> {
        let n = rec.amplitudes.len();
        let phases = if rec.phases.is_empty() { vec![0.0; n] } else { rec.phases };
        if rec.cov.len() != 2 * n || rec.cov.iter().any(|r| r.len() != 2 * n) {
            return Err(Error::domain(format!("covariance must be {0}x{0}", 2 * n)));
        }
        let flat: Vec<f64> = rec.cov.into_iter().flatten().collect();
        let cov = DMatrix::from_row_slice(2 * n, 2 * n, &flat);
        BrightGaussianState::from_parts(rec.amplitudes, phases, cov)
    }
}

impl Serialize for BrightGaussianState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for BrightGaussianState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = StateRecord::deserialize(d)?;
        BrightGaussianState::try_from(rec).map_err(serde::de::Error::custom)
    }
}
