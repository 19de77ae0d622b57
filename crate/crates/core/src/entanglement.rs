//! Entangled-pair generation and the Duan–Simon family of witnesses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    apply_beamsplitter, compose_correlated, make_squeezed, BrightGaussianState, SqueezedInputSpec,
};

/// Standard bound of the sum criterion in shot-noise units.
pub const DUAN_SIMON_BOUND: f64 = 2.0;
/// Search interval for the gain, `[GAIN_MIN, GAIN_MAX]`.
pub const GAIN_MIN: f64 = 1e-3;
pub const GAIN_MAX: f64 = 1e3;
const GAIN_TOL: f64 = 1e-10;

/// Outcome of a sum-criterion evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub v_sq_plus_x: f64,
    pub v_sq_minus_y: f64,
    #[serde(rename = "gain")]
    pub gain_used: f64,
    /// Separate gain of the phase-quadrature combination, when optimized per quadrature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_y: Option<f64>,
    #[serde(rename = "sum")]
    pub sum_value: f64,
    #[serde(rename = "product")]
    pub product_value: f64,
    pub bound: f64,
    pub witnessed: bool,
}

impl WitnessReport {
    pub fn new(v_sq_plus_x: f64, v_sq_minus_y: f64, gain: f64, bound: f64) -> Self {
        let sum_value = v_sq_plus_x + v_sq_minus_y;
        WitnessReport {
            v_sq_plus_x,
            v_sq_minus_y,
            gain_used: gain,
            gain_y: None,
            sum_value,
            product_value: v_sq_plus_x * v_sq_minus_y,
            bound,
            witnessed: sum_value < bound,
        }
    }

    /// Product criterion `V⁺·V⁻ < 1`.
    pub fn product_witnessed(&self) -> bool {
        self.product_value < 1.0
    }
}

/// Coefficients of `δu = h_a δX_a + h_b δX_b` and `δv = g_a δY_a + g_b δY_b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedCombination {
    pub h_a: f64,
    pub h_b: f64,
    pub g_a: f64,
    pub g_b: f64,
}

impl GeneralizedCombination {
    pub fn new(h_a: f64, h_b: f64, g_a: f64, g_b: f64) -> Result<Self> {
        let c = GeneralizedCombination { h_a, h_b, g_a, g_b };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.h_a, self.h_b, self.g_a, self.g_b];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("combination coefficients must be finite"));
        }
        if all.iter().all(|v| *v == 0.0) {
            return Err(Error::domain("combination coefficients are all zero"));
        }
        Ok(())
    }

    pub fn u_weights(&self) -> [f64; 4] {
        [self.h_a, 0.0, self.h_b, 0.0]
    }

    pub fn v_weights(&self) -> [f64; 4] {
        [0.0, self.g_a, 0.0, self.g_b]
    }
}

/// Result of the generalized criterion `V(δu) + V(δv) < 2(|h_a g_a| + |h_b g_b|)`.
///
/// The normalized pair divides both sides by `(|h|² + |g|²)/2`, the mean
/// coherent-state variance of the two combinations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedWitness {
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_normalized: f64,
    pub rhs_normalized: f64,
    pub witnessed: bool,
}

/// Result of a gain optimization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainOptimum {
    pub gain: f64,
    pub report: WitnessReport,
    /// False when the search produced a non-finite optimum and fell back to `g = 1`.
    pub converged: bool,
}

fn require_pair(state: &BrightGaussianState) -> Result<()> {
    if state.num_modes() != 2 {
        return Err(Error::domain(format!("expected a two-mode state, got {} modes", state.num_modes())));
    }
    Ok(())
}

fn require_carriers(state: &BrightGaussianState) -> Result<()> {
    require_pair(state)?;
    for (k, a) in state.amplitudes().iter().enumerate() {
        if !(*a > 0.0) {
            return Err(Error::degenerate(format!("mode {k} is dark; quadratures are not carrier-aligned")));
        }
    }
    Ok(())
}

/// Interferes two squeezed beams on a splitter of intensity ratio `ratio` at
/// relative phase `theta`; common-mode phase noise is fully correlated.
pub fn generate_entangled(
    a: &SqueezedInputSpec,
    b: &SqueezedInputSpec,
    theta: f64,
    ratio: f64,
) -> Result<BrightGaussianState> {
    generate_entangled_correlated(a, b, theta, ratio, 1.0)
}

/// As [`generate_entangled`] with a configurable correlation of the shared
/// classical phase noise.
pub fn generate_entangled_correlated(
    a: &SqueezedInputSpec,
    b: &SqueezedInputSpec,
    theta: f64,
    ratio: f64,
    excess_correlation: f64,
) -> Result<BrightGaussianState> {
    let pair = compose_correlated(&[make_squeezed(a)?, make_squeezed(b)?], excess_correlation)?;
    apply_beamsplitter(&pair, 0, 1, ratio, theta)
}

/// Shot-noise-normalized `V(δX₁ + gδX₂)/(1+g²)` and `V(δY₁ − gδY₂)/(1+g²)`.
pub fn squeezing_variances(state: &BrightGaussianState, g: f64) -> Result<(f64, f64)> {
    squeezing_variances_split(state, g, g)
}

fn squeezing_variances_split(state: &BrightGaussianState, g_x: f64, g_y: f64) -> Result<(f64, f64)> {
    require_carriers(state)?;
    if !g_x.is_finite() || !g_y.is_finite() {
        return Err(Error::domain("gain must be finite"));
    }
    let plus = state.combination_variance(&[1.0, 0.0, g_x, 0.0]) / (1.0 + g_x * g_x);
    let minus = state.combination_variance(&[0.0, 1.0, 0.0, -g_y]) / (1.0 + g_y * g_y);
    Ok((plus, minus))
}

/// Sum criterion at gain `g` against the standard bound of 2.
pub fn duan_simon(state: &BrightGaussianState, g: f64) -> Result<WitnessReport> {
    let (plus, minus) = squeezing_variances(state, g)?;
    Ok(WitnessReport::new(plus, minus, g, DUAN_SIMON_BOUND))
}

/// Generalized non-separability criterion for arbitrary combination weights.
pub fn generalized_witness(state: &BrightGaussianState, c: &GeneralizedCombination) -> Result<GeneralizedWitness> {
    require_pair(state)?;
    c.validate()?;
    let lhs = state.combination_variance(&c.u_weights()) + state.combination_variance(&c.v_weights());
    let rhs = 2.0 * ((c.h_a * c.g_a).abs() + (c.h_b * c.g_b).abs());
    let norm = 0.5 * (c.h_a * c.h_a + c.h_b * c.h_b + c.g_a * c.g_a + c.g_b * c.g_b);
    Ok(GeneralizedWitness {
        lhs,
        rhs,
        lhs_normalized: lhs / norm,
        rhs_normalized: rhs / norm,
        witnessed: lhs < rhs,
    })
}

/// Bound `2√(1−cos²θ) = 2|sin θ|` of the normalized generalized criterion
/// when the weights follow the entangled amplitudes.
pub fn theta_adapted_bound(theta: f64) -> f64 {
    2.0 * theta.sin().abs()
}

/// Weights matched to the amplitudes `α√(1±cosθ)` of the entangled pair:
/// `h = (α_ent, β_ent)`, `g = (β_ent, −α_ent)`.
pub fn optimal_gains_for_theta(alpha: f64, theta: f64) -> Result<GeneralizedCombination> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::domain(format!("amplitude must be positive, got {alpha}")));
    }
    let c = theta.cos();
    let alpha_ent = alpha * (1.0 + c).max(0.0).sqrt();
    let beta_ent = alpha * (1.0 - c).max(0.0).sqrt();
    GeneralizedCombination::new(alpha_ent, beta_ent, beta_ent, -alpha_ent)
}

/// Minimizes `f` over `g ∈ [GAIN_MIN, GAIN_MAX]`: a logarithmic grid locates
/// the basin, golden-section search in `ln g` refines it. Returns
/// `(g, f(g), converged)`; `g = 1` is kept whenever it is at least as good.
pub fn minimize_over_gain(f: impl Fn(f64) -> f64) -> (f64, f64, bool) {
    const GRID: usize = 240;
    let (lo, hi) = (GAIN_MIN.ln(), GAIN_MAX.ln());
    let step = (hi - lo) / GRID as f64;
    let eval = |x: f64| f(x.exp());

    let mut best_k = 0;
    let mut best = f64::INFINITY;
    for k in 0..=GRID {
        let v = eval(lo + k as f64 * step);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let unit = f(1.0);
    if !best.is_finite() {
        return (1.0, unit, false);
    }

    let mut a = lo + best_k.saturating_sub(1) as f64 * step;
    let mut b = lo + (best_k + 1).min(GRID) as f64 * step;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    while (b - a).abs() > GAIN_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    let x = 0.5 * (a + b);
    let (g, v) = (x.exp(), eval(x));
    if !v.is_finite() || !g.is_finite() {
        return (1.0, unit, false);
    }
    if unit <= v {
        (1.0, unit, true)
    } else {
        (g, v, true)
    }
}

/// Shared gain minimizing `V⁺(g) + V⁻(g)`.
pub fn optimize_gain(state: &BrightGaussianState) -> Result<GainOptimum> {
    require_carriers(state)?;
    let objective = |g: f64| match squeezing_variances(state, g) {
        Ok((p, m)) => p + m,
        Err(_) => f64::NAN,
    };
    let (gain, _, converged) = minimize_over_gain(objective);
    let report = duan_simon(state, gain)?;
    Ok(GainOptimum { gain, report, converged })
}

/// Independent gains for the amplitude and phase combinations.
///
/// Each normalized variance is a Rayleigh quotient of a 2×2 block; the
/// minimizing direction is its lowest eigenvector, used when its gain is
/// positive, otherwise the search falls back to the bracketed minimizer.
pub fn optimize_gain_per_quadrature(state: &BrightGaussianState) -> Result<WitnessReport> {
    require_carriers(state)?;
    let cov = state.cov();
    let best = |v1: f64, v2: f64, c12: f64, sign: f64| -> f64 {
        // minimize (v1 + 2 s g c12 + g² v2)/(1+g²)
        let c = sign * c12;
        let closed = if c.abs() < 1e-300 {
            if v2 < v1 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            let half_gap = 0.5 * (v2 - v1);
            let lambda = 0.5 * (v1 + v2) - (half_gap * half_gap + c * c).sqrt();
            (lambda - v1) / c
        };
        if closed.is_finite() && (GAIN_MIN..=GAIN_MAX).contains(&closed) {
            closed
        } else {
            minimize_over_gain(|g| (v1 + 2.0 * g * c + g * g * v2) / (1.0 + g * g)).0
        }
    };
    let g_x = best(cov[(0, 0)], cov[(2, 2)], cov[(0, 2)], 1.0);
    let g_y = best(cov[(1, 1)], cov[(3, 3)], cov[(1, 3)], -1.0);
    let (plus, minus) = squeezing_variances_split(state, g_x, g_y)?;
    let mut report = WitnessReport::new(plus, minus, g_x, DUAN_SIMON_BOUND);
    report.gain_y = Some(g_y);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{apply_loss, db_to_var, make_coherent, compose};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6};

    fn pure(db: f64) -> SqueezedInputSpec {
        SqueezedInputSpec::pure(1e4, db)
    }

    fn coherent_pair() -> BrightGaussianState {
        compose(&[make_coherent(1e3).unwrap(), make_coherent(1e3).unwrap()])
    }

    #[test]
    fn symmetric_pair_variances() {
        let db = -10.0 * 0.5f64.log10();
        let ent = generate_entangled(&pure(db), &pure(db), FRAC_PI_2, 0.5).unwrap();
        assert_abs_diff_eq!(ent.combination_variance(&[1.0, 0.0, 1.0, 0.0]), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ent.combination_variance(&[0.0, 1.0, 0.0, -1.0]), 1.0, epsilon = 1e-12);
        let (p, m) = squeezing_variances(&ent, 1.0).unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn off_balance_theta_variance() {
        // V(δX_a,ent) from the entangled-quadrature expansion at θ = π/3
        let spec = SqueezedInputSpec { antisqueezing_db: 3.0103, ..pure(3.0103) };
        let (vx, vy) = (spec.squeezed_variance(), spec.phase_variance());
        let ent = generate_entangled(&spec, &spec, FRAC_PI_3, 0.5).unwrap();
        let (s, c) = FRAC_PI_3.sin_cos();
        let expected = 0.25 / (1.0 + c) * ((1.0 + c).powi(2) * 2.0 * vx + 2.0 * s * s * vy);
        assert_abs_diff_eq!(ent.variance(0, crate::gaussian::Quadrature::X), expected, epsilon = 1e-12);
        assert!(generate_entangled(&spec, &spec, 0.0, 0.5).unwrap().amplitude(1) == 0.0);
    }

    #[test]
    fn coherent_boundary_is_exact() {
        let pair = coherent_pair();
        for g in [0.1, 0.7, 1.0, 3.0] {
            let (p, m) = squeezing_variances(&pair, g).unwrap();
            assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m, 1.0, epsilon = 1e-12);
        }
        let r = duan_simon(&pair, 1.0).unwrap();
        assert_abs_diff_eq!(r.sum_value, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.product_value, 1.0, epsilon = 1e-12);
        assert!(!r.witnessed);
    }

    #[test]
    fn measured_variances_witness_entanglement() {
        let a = WitnessReport::new(0.55, 0.74, 1.0, DUAN_SIMON_BOUND);
        assert_abs_diff_eq!(a.sum_value, 1.29, epsilon = 1e-12);
        assert!(a.witnessed && a.product_witnessed());
        let b = WitnessReport::new(0.47, 0.62, 1.0, DUAN_SIMON_BOUND);
        assert_abs_diff_eq!(b.sum_value, 1.09, epsilon = 1e-12);
        assert!(b.witnessed);
    }

    #[test]
    fn report_serializes_with_fixed_names() {
        let v = serde_json::to_value(WitnessReport::new(0.5, 0.6, 1.0, 2.0)).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["bound", "gain", "product", "sum", "v_sq_minus_y", "v_sq_plus_x", "witnessed"]);
    }

    #[test]
    fn generalized_witness_cases() {
        let pair = coherent_pair();
        let c = GeneralizedCombination::new(1.0, 1.0, 1.0, -1.0).unwrap();
        let w = generalized_witness(&pair, &c).unwrap();
        assert_abs_diff_eq!(w.lhs, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.rhs, 4.0, epsilon = 1e-12);
        assert!(!w.witnessed);
        assert!(GeneralizedCombination::new(0.0, 0.0, 0.0, 0.0).is_err());

        let ent = generate_entangled(&pure(3.7), &pure(3.7), 1.0, 0.5).unwrap();
        let w = generalized_witness(&ent, &c).unwrap();
        let ds = duan_simon(&ent, 1.0).unwrap();
        assert_abs_diff_eq!(w.lhs, 2.0 * ds.sum_value, epsilon = 1e-12);
    }

    #[test]
    fn amplitude_matched_weights_give_equal_variances() {
        let alpha = 1e4;
        let vs = db_to_var(-3.7);
        let spec = SqueezedInputSpec { antisqueezing_db: 12.0, ..SqueezedInputSpec::pure(alpha, 3.7) };
        for theta in [0.4, 1.1, 2.3] {
            let ent = generate_entangled(&spec, &spec, theta, 0.5).unwrap();
            let c = optimal_gains_for_theta(alpha, theta).unwrap();
            let w = generalized_witness(&ent, &c).unwrap();
            let u = ent.combination_variance(&c.u_weights());
            let v = ent.combination_variance(&c.v_weights());
            assert_abs_diff_eq!(u / (2.0 * alpha * alpha), vs, epsilon = 1e-9);
            assert_abs_diff_eq!(v / (2.0 * alpha * alpha), vs, epsilon = 1e-9);
            assert_abs_diff_eq!(w.lhs_normalized, 2.0 * vs, epsilon = 1e-9);
            assert_abs_diff_eq!(w.rhs_normalized, theta_adapted_bound(theta), epsilon = 1e-9);
        }
    }

    #[test]
    fn adapted_bound_values() {
        assert_abs_diff_eq!(theta_adapted_bound(FRAC_PI_2), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(theta_adapted_bound(FRAC_PI_6), 1.0, epsilon = 1e-15);
        assert_eq!(theta_adapted_bound(0.0), 0.0);
    }

    #[test]
    fn gains_for_theta() {
        let g = optimal_gains_for_theta(1.0, FRAC_PI_2).unwrap();
        for v in [g.h_a, g.h_b, g.g_a, g.g_b] {
            assert_abs_diff_eq!(v.abs(), 1.0, epsilon = 1e-12);
        }
        let g = optimal_gains_for_theta(1.0, FRAC_PI_3).unwrap();
        assert_abs_diff_eq!(g.h_a, 1.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(g.h_b, 0.5f64.sqrt(), epsilon = 1e-12);
        assert_eq!(g.g_a, g.h_b);
        assert_eq!(g.g_b, -g.h_a);
        assert!(optimal_gains_for_theta(0.0, 1.0).is_err());
    }

    #[test]
    fn optimized_gain_symmetric_and_flat() {
        let ent = generate_entangled(&pure(3.0), &pure(3.0), FRAC_PI_2, 0.5).unwrap();
        let opt = optimize_gain(&ent).unwrap();
        assert!(opt.converged);
        assert_abs_diff_eq!(opt.gain, 1.0, epsilon = 1e-6);

        let pair = coherent_pair();
        let opt = optimize_gain(&pair).unwrap();
        assert_abs_diff_eq!(opt.report.sum_value, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn optimized_gain_beats_unit_gain_under_asymmetric_loss() {
        let ent = generate_entangled(&pure(6.0), &pure(6.0), FRAC_PI_2, 0.5).unwrap();
        let lossy = apply_loss(&ent, 0, 0.8).unwrap();
        let opt = optimize_gain(&lossy).unwrap();
        // grid oracle over g ∈ [0.1, 10]
        let (mut grid_g, mut grid_best) = (1.0, f64::INFINITY);
        for k in 0..=20_000 {
            let g = 0.1 * 100f64.powf(k as f64 / 20_000.0);
            let (p, m) = squeezing_variances(&lossy, g).unwrap();
            if p + m < grid_best {
                grid_best = p + m;
                grid_g = g;
            }
        }
        assert!((opt.gain - 1.0).abs() > 1e-3);
        assert!(opt.report.sum_value <= duan_simon(&lossy, 1.0).unwrap().sum_value);
        assert!(opt.report.sum_value <= grid_best + 1e-9);
        assert_abs_diff_eq!(opt.gain, grid_g, epsilon = 2e-3);

        let per = optimize_gain_per_quadrature(&lossy).unwrap();
        assert!(per.gain_y.is_some());
        assert!(per.sum_value <= opt.report.sum_value + 1e-12);
    }

    #[test]
    fn two_mode_and_carrier_preconditions() {
        let single = make_coherent(1.0).unwrap();
        assert!(matches!(squeezing_variances(&single, 1.0), Err(Error::Domain(_))));
        let dark = generate_entangled(&pure(3.0), &pure(3.0), 0.0, 0.5).unwrap();
        assert!(matches!(duan_simon(&dark, 1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn common_mode_noise_cancels_on_balanced_splitter() {
        let noisy = |db| SqueezedInputSpec {
            amplitude: 1e4,
            squeezing_db: 3.0,
            antisqueezing_db: 10.0,
            excess_phase_db: db,
            correlated_group: Some(1),
        };
        let quiet = generate_entangled(&noisy(0.0), &noisy(0.0), FRAC_PI_2, 0.5).unwrap();
        let (_, base) = squeezing_variances(&quiet, 1.0).unwrap();
        for db in [5.0, 20.0, 23.0, 30.0] {
            for rho in [1.0, 0.8] {
                let ent = generate_entangled_correlated(&noisy(db), &noisy(db), FRAC_PI_2, 0.5, rho).unwrap();
                let (_, m) = squeezing_variances(&ent, 1.0).unwrap();
                assert_abs_diff_eq!(m, base, epsilon = 1e-9);
            }
        }
    }
}
