//! Closed-form approximations of the signal bulk 𝒫 and interference bulk ℐ
//! of the eigenvalue distribution of `Y Yᴴ`, and the resulting separability
//! conditions.
//!
//! Three approximations are provided:
//!
//! * unilateral: each bulk is Marchenko-Pastur-like, corrected by
//!   multiplicative repulsion factors for noise (`n_P`, `n_I`) and for the
//!   other bulk (`i_P`, `i_I`);
//! * bilateral high-SNR: perturbation of the noiseless inverse `s(G)` to
//!   first and second order in the load α;
//! * bilateral general-SNR: the second-order result with noise `ζ = W C`.
//!
//! Unilateral intervals are in units of `Y Yᴴ / (T R)`; every other result is
//! in units of `Y Yᴴ`. Everything bilateral works in the `r, t, ζ`
//! parameterization of [`DerivedParams`].

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bisect, Polynomial};
use crate::system_model::{derive_params, DerivedParams, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkInterval {
    pub lower: f64,
    pub upper: f64,
}

impl BulkInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::BulksMerged(format!(
                "interval endpoints out of order: [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn contains_interval(&self, other: &BulkInterval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            lower: self.lower * factor,
            upper: self.upper * factor,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupportMethod {
    #[serde(rename = "unilateral")]
    Unilateral,
    /// Extremes of the first-order inverse.
    #[serde(rename = "bilateral_highSNR_1")]
    BilateralHighSnr1,
    /// Zeros of the second-order radicand.
    #[serde(rename = "bilateral_highSNR_2")]
    BilateralHighSnr2,
    /// Handier enclosure of the second-order bulks.
    #[serde(rename = "bilateral_highSNR_enclosure")]
    BilateralHighSnrEnclosure,
    #[serde(rename = "bilateral_general")]
    BilateralGeneral,
}

/// Approximate supports of both bulks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate {
    /// 𝒫.
    pub signal: BulkInterval,
    /// ℐ.
    pub interference: BulkInterval,
    pub method: SupportMethod,
    /// True iff the intervals are disjoint with 𝒫 above ℐ.
    pub separable: bool,
    /// Caveats attached to the numbers (regime warnings, clamping).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    pub params: DerivedParams,
}

impl SupportEstimate {
    fn new(
        signal: BulkInterval,
        interference: BulkInterval,
        method: SupportMethod,
        params: DerivedParams,
    ) -> Self {
        Self {
            separable: signal.lower > interference.upper,
            signal,
            interference,
            method,
            flags: Vec::new(),
            params,
        }
    }
}

fn require_interference(dp: &DerivedParams) -> Result<()> {
    if !(dp.r > 0.0 && dp.r.is_finite()) {
        return Err(Error::Domain(format!(
            "r must be positive and finite, got {}",
            dp.r
        )));
    }
    if !(dp.t.is_finite() && dp.t > 0.0) || dp.neighbors == 0 {
        return Err(Error::Regime(
            "bilateral approximations need interference (finite t, L >= 1)".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Unilateral approximation.

/// `𝒫` and `ℐ` before repulsion, in units of `Y Yᴴ / (T R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnilateralIntervals {
    pub signal: BulkInterval,
    pub interference: BulkInterval,
    pub flags: Vec<String>,
}

/// `κP/α ∓ 2P √((κ² + κ)/α)` and `κI/α ∓ 2I √(L(κ² + κ)/α)`; negative lower
/// endpoints are clamped to zero.
pub fn unilateral_intervals(dp: &DerivedParams, p: f64, i: f64) -> Result<UnilateralIntervals> {
    let (k, a, l) = (dp.kappa, dp.alpha, dp.neighbors as f64);
    if !(a > 0.0 && k > 0.0) {
        return Err(Error::Domain(
            "unilateral intervals need alpha > 0 and kappa > 0".into(),
        ));
    }
    let mut flags = Vec::new();
    if a > 0.1 {
        flags.push(format!(
            "alpha = {a} is not small; the unilateral approximation is coarse"
        ));
    }
    let spread = ((k * k + k) / a).sqrt();
    let mut make = |name: &str, center: f64, half: f64| {
        let mut lower = center - half;
        if lower < 0.0 {
            flags.push(format!("{name} lower endpoint {lower} clamped to 0"));
            lower = 0.0;
        }
        BulkInterval {
            lower,
            upper: center + half,
        }
    };
    let signal = make("signal", k * p / a, 2.0 * p * spread);
    let interference = make("interference", k * i / a, 2.0 * i * l.sqrt() * spread);
    Ok(UnilateralIntervals {
        signal,
        interference,
        flags,
    })
}

/// Repulsion factors of the unilateral approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFactors {
    pub n_p: f64,
    pub n_i: f64,
    pub i_p: f64,
    pub i_i: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// `n_P = (1 + W/(PR))(1 + W/(PC))` and the same with I.
pub fn noise_scale_factors(p: f64, i: f64, w: f64, r: usize, c: usize) -> (f64, f64) {
    let (rf, cf) = (r as f64, c as f64);
    let n = |x: f64| (1.0 + w / (x * rf)) * (1.0 + w / (x * cf));
    (n(p), n(i))
}

/// `n_P`, `n_I` from the derived scalars: `W/(PR) = ζ r`, `W/(PC) = ζ r/κ`.
fn noise_factors_derived(dp: &DerivedParams, t: f64) -> (f64, f64) {
    let n = |x: f64| (1.0 + dp.zeta * x) * (1.0 + dp.zeta * x / dp.kappa);
    (n(dp.r), n(t))
}

/// `i_P = (1 + (Lα/κ)/(P/I − 1))(1 + Lα/(P/I − 1))` and
/// `i_I = (1 + (α/κ)/(I/P − 1))(1 + α/(I/P − 1))`.
pub fn interference_scale_factors(
    p: f64,
    i: f64,
    alpha: f64,
    kappa: f64,
    l: usize,
) -> Result<(f64, f64)> {
    if p == i {
        return Err(Error::Singular(
            "interference scale factors are singular at P = I".into(),
        ));
    }
    if !(p > 0.0 && i > 0.0) {
        return Err(Error::Domain(format!("need P > 0 and I > 0, got {p}, {i}")));
    }
    let la = l as f64 * alpha;
    let d_p = p / i - 1.0;
    let d_i = i / p - 1.0;
    Ok((
        (1.0 + la / kappa / d_p) * (1.0 + la / d_p),
        (1.0 + alpha / kappa / d_i) * (1.0 + alpha / d_i),
    ))
}

/// All four factors for a flat-interference system, flagged when `P/I < 2`
/// where the interference factors lose accuracy.
pub fn scale_factors(sys: &SystemParams) -> Result<ScaleFactors> {
    let dp = derive_params(sys)?;
    let p = sys.signal_power;
    let i = sys.max_interference();
    let (n_p, n_i) =
        noise_scale_factors(p, i, sys.noise_power, sys.receive_antennas, sys.coherence);
    let (i_p, i_i) = interference_scale_factors(p, i, dp.alpha, dp.kappa, dp.neighbors)?;
    let mut flags = Vec::new();
    if p / i < 2.0 {
        flags.push(format!(
            "P/I = {:.3} < 2: interference scale factors are inaccurate",
            p / i
        ));
    }
    Ok(ScaleFactors {
        n_p,
        n_i,
        i_p,
        i_i,
        flags,
    })
}

/// Unilateral supports including repulsion, `n_P i_P 𝒫` and `n_I i_I ℐ`,
/// converted to units of `Y Yᴴ`.
pub fn unilateral_support(sys: &SystemParams) -> Result<SupportEstimate> {
    let dp = derive_params(sys)?;
    let raw = unilateral_intervals(&dp, sys.signal_power, sys.max_interference())?;
    let f = scale_factors(sys)?;
    let to_gram = (sys.transmit_antennas * sys.receive_antennas) as f64;
    let signal = raw.signal.scaled(f.n_p * f.i_p * to_gram);
    let interference = raw.interference.scaled(f.n_i * f.i_i * to_gram);
    let mut est = SupportEstimate::new(signal, interference, SupportMethod::Unilateral, dp);
    est.flags = raw.flags;
    est.flags.extend(f.flags);
    if !dp.flat_interference {
        est.flags
            .push("interference is not flat; the strongest power was used".into());
    }
    Ok(est)
}

fn unilateral_margin(dp: &DerivedParams, beta: f64) -> Result<f64> {
    let (k, a, l) = (dp.kappa, dp.alpha, dp.neighbors as f64);
    let denominator = 1.0 - 2.0 * (a * (1.0 + 1.0 / k)).sqrt();
    if denominator <= 0.0 {
        return Err(Error::Regime(format!(
            "1 - 2 sqrt(alpha (1 + 1/kappa)) = {denominator} <= 0: no separation predicted"
        )));
    }
    let t = dp.r / beta;
    let (n_p, n_i) = noise_factors_derived(dp, t);
    let (i_p, i_i) = interference_scale_factors(1.0, beta, a, k, dp.neighbors)?;
    let rhs =
        n_i * i_i / (n_p * i_p) * (1.0 + 2.0 * (a * l * (1.0 + 1.0 / k)).sqrt()) / denominator;
    Ok(1.0 / beta - rhs)
}

/// Unilateral separability at the interference ratio of `dp`, and the
/// threshold ratio I/P at which the scaled bulks start to overlap.
///
/// The scale factors depend on the trial ratio, so the inequality is solved
/// by scanning I/P upward for the first change from separable to merged and
/// bisecting inside that cell. Weak interference may be buried in the noise
/// bulk (merged at very small I/P) and the `i` factors blow up near I = P, so
/// the first crossing after the separable region is the meaningful one.
/// Returns a threshold of 1 when no crossing is found below `I = P`.
pub fn unilateral_separable(dp: &DerivedParams) -> Result<(bool, f64)> {
    const SCAN: usize = 2000;
    let at = |beta: f64| unilateral_margin(dp, beta);
    let betas: Vec<f64> = (1..SCAN).map(|k| k as f64 / SCAN as f64).collect();
    let mut seen_positive = false;
    let mut threshold = None;
    let mut prev: Option<(f64, f64)> = None;
    for &b in &betas {
        let m = at(b)?;
        if let Some((pb, pm)) = prev {
            if seen_positive && pm > 0.0 && m <= 0.0 {
                threshold = Some(bisect(|x| at(x).unwrap_or(f64::NAN), pb, b, BOUNDARY_TOL)?);
                break;
            }
        }
        seen_positive |= m > 0.0;
        prev = Some((b, m));
    }
    if !seen_positive {
        return Err(Error::Regime(
            "no interference ratio in (0, 1) yields separated bulks".into(),
        ));
    }
    let threshold = threshold.unwrap_or(1.0);
    let separable = dp.beta_ratio < 1.0 && dp.beta_ratio > 0.0 && at(dp.beta_ratio)? > 0.0;
    Ok((separable, threshold))
}

/// Absolute tolerance of the boundary searches on I/P.
pub const BOUNDARY_TOL: f64 = 1e-4;

// ---------------------------------------------------------------------------
// Bilateral high-SNR approximation, first order.

/// First-order inverse of the Stieltjes transform,
/// `s⁽¹⁾(G) = N(G) / (G D(G))` with quadratic `N` and `D`.
pub fn s1_inverse(g: f64, dp: &DerivedParams) -> Result<f64> {
    require_interference(dp)?;
    let (k, a, l, r, t) = (dp.kappa, dp.alpha, dp.neighbors as f64, dp.r, dp.t);
    let lrt = l * r + t;
    let num = ((l + 1.0) * (k - 2.0) * a - k) * g * g + (lrt * (k - 1.0) * a - k * (r + t)) * g
        - k * r * t;
    let quad = (k + 2.0 * (l + 1.0) * a) * g * g + (lrt * a + k * (r + t)) * g + k * r * t;
    let den = g * quad;
    // Poles at G = 0 and at the roots of `quad`.
    let scale = k * r * t * (g.abs() + t);
    if den.abs() <= 1e-14 * scale || !den.is_finite() {
        return Err(Error::NearPole(g));
    }
    Ok(num / den)
}

/// Poles `G₋∞ < G₊∞` of `s⁽¹⁾` other than zero.
pub fn s1_poles(dp: &DerivedParams) -> Result<(f64, f64)> {
    require_interference(dp)?;
    let (k, a, l, r, t) = (dp.kappa, dp.alpha, dp.neighbors as f64, dp.r, dp.t);
    let qa = k + 2.0 * (l + 1.0) * a;
    let qb = (l * r + t) * a + k * (r + t);
    let qc = k * r * t;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Err(Error::Regime(
            "first-order inverse has no real poles".into(),
        ));
    }
    // Both roots are negative; the stable pair of formulas avoids
    // cancellation.
    let q = -0.5 * (qb + disc.sqrt());
    let (x1, x2) = (q / qa, qc / q);
    Ok((x1.min(x2), x1.max(x2)))
}

/// Real roots of `p(G)` where `p` is given by ascending coefficients in `G`,
/// solved after the substitution `G = r g` to balance the coefficients.
fn real_roots_scaled(coeffs_in_g: &[f64], r: f64) -> Result<Option<Vec<f64>>> {
    let scaled: Vec<f64> = coeffs_in_g
        .iter()
        .enumerate()
        .map(|(k, c)| c * r.powi(k as i32))
        .collect();
    let roots = Polynomial::new(scaled).roots()?;
    if roots
        .iter()
        .any(|z| z.im.abs() > 1e-9 * z.norm().max(1e-300))
    {
        return Ok(None);
    }
    let mut real: Vec<f64> = roots.iter().map(|z| z.re * r).collect();
    real.sort_by(f64::total_cmp);
    Ok(Some(real))
}

/// Sorted real zeros `G₁ ≤ … ≤ G₄` of `d s⁽¹⁾/dG`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticExtremes {
    pub roots: [f64; 4],
    /// Set when two roots nearly coincide (e.g. `r = t`).
    pub degenerate: bool,
}

pub fn quartic_extremes(dp: &DerivedParams) -> Result<QuarticExtremes> {
    require_interference(dp)?;
    let (k, a, l, r, t) = (dp.kappa, dp.alpha, dp.neighbors as f64, dp.r, dp.t);
    let lrt = l * r + t;
    let l1 = l + 1.0;
    let c4 = 2.0 * l1 * l1 * (k - 2.0) * a * a + l1 * (k - 4.0) * k * a - k * k;
    let c3 = 2.0
        * (2.0 * lrt * l1 * (k - 1.0) * a * a + (lrt * (k - 1.0) - 2.0 * l1 * (t + r)) * a * k
            - (t + r) * k * k);
    let c2 = lrt * lrt * (k - 1.0) * a * a + (t * t + l * r * r) * (k - 2.0) * k * a
        - 6.0 * l1 * r * t * k * a
        - ((t + r) * (t + r) + 2.0 * r * t) * k * k;
    let c1 = -2.0 * r * t * k * (lrt * a + (t + r) * k);
    let c0 = -k * k * r * r * t * t;
    let roots =
        real_roots_scaled(&[c0, c1, c2, c3, c4], r)?.ok_or(Error::NoFirstOrderSeparation)?;
    if roots.len() != 4 {
        return Err(Error::NoFirstOrderSeparation);
    }
    let spread = roots[3].abs().max(roots[0].abs());
    let degenerate = roots
        .windows(2)
        .any(|w| (w[1] - w[0]).abs() <= 1e-6 * spread)
        || (t - r).abs() <= 1e-12 * t;
    Ok(QuarticExtremes {
        roots: [roots[0], roots[1], roots[2], roots[3]],
        degenerate,
    })
}

/// `ℐ ≈ [s⁽¹⁾(G₁), s⁽¹⁾(G₂)]`, `𝒫 ≈ [s⁽¹⁾(G₃), s⁽¹⁾(G₄)]`.
pub fn bilateral_supports_first_order(dp: &DerivedParams) -> Result<SupportEstimate> {
    let ex = quartic_extremes(dp)?;
    let v: Vec<f64> = ex
        .roots
        .iter()
        .map(|&g| s1_inverse(g, dp))
        .collect::<Result<_>>()?;
    let interference = BulkInterval::new(v[0], v[1])?;
    let signal = BulkInterval::new(v[2], v[3])?;
    let mut est = SupportEstimate::new(signal, interference, SupportMethod::BilateralHighSnr1, *dp);
    if ex.degenerate {
        est.flags.push("quartic extremes nearly coincide".into());
    }
    Ok(est)
}

// ---------------------------------------------------------------------------
// Bilateral high-SNR approximation, second order.

/// `φ₀(G)`, the centre of the two second-order branches.
pub fn phi0(g: f64, dp: &DerivedParams) -> f64 {
    let (k, a, l, r, t) = (dp.kappa, dp.alpha, dp.neighbors as f64, dp.r, dp.t);
    let num = (2.0 * a * (l + 1.0) * (k - 1.0) + k * (k - 4.0)) * g * g
        + k * (a * (t + l * r) + (k - 2.0) * (t + r)) * g
        + k * k * r * t;
    num / phi_denominator(g, dp)
}

fn phi_denominator(g: f64, dp: &DerivedParams) -> f64 {
    let (k, a, l, r, t) = (dp.kappa, dp.alpha, dp.neighbors as f64, dp.r, dp.t);
    2.0 * g * g * ((2.0 * k + (l + 1.0) * a) * g + k * (t + r))
}

/// Ascending coefficients in `G` of the radicand under `ρ₀`.
fn rho0_radicand_coeffs(dp: &DerivedParams) -> [f64; 5] {
    let (k, a, l, r, t) = (dp.kappa, dp.alpha, dp.neighbors as f64, dp.r, dp.t);
    let tlr = t + l * r;
    [
        k * k * t * t * r * r,
        2.0 * k * r * t * (k * (t + r) + a * tlr),
        (t * t + 4.0 * r * t + r * r) * k * k - 2.0 * a * k * (l * r - t) * (r - t)
            + a * a * tlr * tlr,
        2.0 * k * (k * (t + r) - 3.0 * a * (l * r + t)),
        k * (k - 4.0 * a * (l + 1.0)),
    ]
}

/// Radicand and the magnitude of its terms, for a rounding-aware sign test.
fn rho0_radicand(g: f64, dp: &DerivedParams) -> (f64, f64) {
    let c = rho0_radicand_coeffs(dp);
    let value = c.iter().rev().fold(0.0, |acc, c| acc * g + c);
    let size = c.iter().rev().fold(0.0, |acc, c| acc * g.abs() + c.abs());
    (value, size)
}

/// `ρ₀(G) = κ √rad(G) / (2G²((2κ + (L+1)α)G + κ(t + r)))`.
pub fn rho0(g: f64, dp: &DerivedParams) -> Result<f64> {
    let (rad, size) = rho0_radicand(g, dp);
    if rad < -1e-9 * size {
        return Err(Error::Domain(format!(
            "radicand of rho0 is negative at G = {g:e}"
        )));
    }
    Ok(dp.kappa * rad.max(0.0).sqrt() / phi_denominator(g, dp))
}

/// Second-order high-SNR inverse: `φ₀ + ρ₀` between the first-order poles,
/// `φ₀ − ρ₀` elsewhere.
pub fn s2_inverse_highsnr(g: f64, dp: &DerivedParams) -> Result<f64> {
    require_interference(dp)?;
    let den = phi_denominator(g, dp);
    let scale = 2.0 * g * g * dp.kappa * (dp.t + dp.r);
    if den.abs() <= 1e-14 * scale.abs() || g == 0.0 {
        return Err(Error::NearPole(g));
    }
    let (lo, hi) = s1_poles(dp)?;
    let rho = rho0(g, dp)?;
    let phi = phi0(g, dp);
    Ok(if lo <= g && g <= hi {
        phi + rho
    } else {
        phi - rho
    })
}

/// Pole of `φ₀ − ρ₀` between the first-order poles.
pub fn s2_branch_pole(dp: &DerivedParams) -> f64 {
    -(dp.t + dp.r) * dp.kappa / (2.0 * dp.kappa + dp.alpha * (dp.neighbors as f64 + 1.0))
}

/// Signal-bulk map `s_𝒫⁽²⁾(x)` of the enclosure.
pub fn s2_signal(x: f64, dp: &DerivedParams) -> f64 {
    sigma_signal(x, dp, 0.0)
}

/// Interference-bulk map `s_ℐ⁽²⁾(x)` of the enclosure.
pub fn s2_interference(x: f64, dp: &DerivedParams) -> f64 {
    sigma_interference(x, dp, 0.0)
}

/// Results of the second-order high-SNR approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighSnrSupports {
    /// `[φ₀(G₁), φ₀(G₂)]` and `[φ₀(G₃), φ₀(G₄)]` from the zeros of `ρ₀`.
    pub zeros: SupportEstimate,
    /// `[s_ℐ⁽²⁾(G_ℐℓ), s_ℐ⁽²⁾(G_ℐu)]` and `[s_𝒫⁽²⁾(G_𝒫ℓ), s_𝒫⁽²⁾(G_𝒫u)]`.
    pub enclosure: SupportEstimate,
}

/// Both second-order approximations; requires the validity condition.
pub fn bilateral_supports_highsnr(dp: &DerivedParams) -> Result<HighSnrSupports> {
    require_interference(dp)?;
    let mut flags = Vec::new();
    if !bilateral_validity(dp) {
        flags.push("validity condition on alpha/kappa is violated".to_string());
    }
    let zeros = real_roots_scaled(&rho0_radicand_coeffs(dp), dp.r)?
        .filter(|z| z.len() == 4)
        .ok_or_else(|| Error::BulksMerged("radicand of rho0 has complex zeros".into()))?;
    if zeros[1] >= zeros[2] {
        return Err(Error::BulksMerged("zeros of rho0 are not ordered".into()));
    }
    let v: Vec<f64> = zeros.iter().map(|&g| phi0(g, dp)).collect();
    let mut by_zeros = SupportEstimate::new(
        BulkInterval::new(v[2], v[3])?,
        BulkInterval::new(v[0], v[1])?,
        SupportMethod::BilateralHighSnr2,
        *dp,
    );
    by_zeros.flags = flags.clone();

    let mut enclosure = general_estimate(dp, 0.0)?;
    enclosure.method = SupportMethod::BilateralHighSnrEnclosure;
    enclosure.flags = flags;
    Ok(HighSnrSupports {
        zeros: by_zeros,
        enclosure,
    })
}

/// Largest `α/κ` for which the bulks separate at interference ratio
/// `β = I/P`, for L neighbor cells.
pub fn separability_boundary(beta: f64, l: usize) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!(
            "beta must be non-negative, got {beta}"
        )));
    }
    if beta >= 1.0 {
        return Ok(0.0);
    }
    let l = l as f64;
    let b = beta;
    let num = (1.0 - b).powi(2)
        * (l * b * b + 3.0 * (l + 1.0) * b + 1.0 - 2.0 * (1.0 + b) * (3.0 * l * b).sqrt());
    let den = (l * b * b - 1.0) * (l * b * b + 6.0 * (l - 1.0) * b - 1.0)
        + (9.0 * l * l - 2.0 * l + 9.0) * b * b;
    Ok(num / den)
}

/// Interference ratio at which the boundary equals `alpha_over_kappa`:
/// ratios below it are separable.
pub fn separability_threshold(alpha_over_kappa: f64, l: usize) -> Result<f64> {
    if !(alpha_over_kappa > 0.0) {
        return Err(Error::Domain(format!(
            "alpha/kappa must be positive, got {alpha_over_kappa}"
        )));
    }
    if alpha_over_kappa >= 1.0 {
        return Ok(0.0);
    }
    bisect(
        |b| {
            separability_boundary(b, l)
                .map(|v| v - alpha_over_kappa)
                .unwrap_or(f64::NAN)
        },
        0.0,
        1.0,
        BOUNDARY_TOL,
    )
}

/// `(β, max α/κ)` on `n` evenly spaced ratios in `[0, 1]`.
pub fn separability_curve(l: usize, n: usize) -> Result<Vec<(f64, f64)>> {
    let n = n.max(2);
    (0..n)
        .map(|k| {
            let b = k as f64 / (n - 1) as f64;
            separability_boundary(b, l).map(|v| (b, v))
        })
        .collect()
}

/// CSV with columns `L,beta,max_alpha_over_kappa`, one curve per L.
pub fn write_separability_csv<W: Write>(out: W, ls: &[usize], n: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["L", "beta", "max_alpha_over_kappa"])?;
    for &l in ls {
        for (b, v) in separability_curve(l, n)? {
            w.write_record([l.to_string(), b.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `α/κ ≤ (t − r)² / (r (t + (L − 1) r))`, the range where the second-order
/// expansion is meaningful.
pub fn bilateral_validity(dp: &DerivedParams) -> bool {
    let (r, t, l) = (dp.r, dp.t, dp.neighbors as f64);
    if t.is_infinite() {
        return true;
    }
    if t < r {
        return false;
    }
    dp.alpha / dp.kappa <= (t - r).powi(2) / (r * (t + (l - 1.0) * r))
}

// ---------------------------------------------------------------------------
// Bilateral general-SNR approximation.

/// `ς_𝒫⁽²⁾(x)` at noise level `ζ`.
pub fn sigma_signal(x: f64, dp: &DerivedParams, zeta: f64) -> f64 {
    let (k, a, l, r, t, z) = (dp.kappa, dp.alpha, dp.neighbors as f64, dp.r, dp.t, zeta);
    let d = ((1.0 + l) * a - k + z * (t - 2.0 * r)) * x + k * (t - 2.0 * r);
    (a * k * (l + 1.0) - a * (l + 1.0) + k * (1.0 - k) + z * (k - 1.0) * (t - 2.0 * r)) / d
        + k / (2.0 * x * x)
            * ((k * (t - 5.0 * r) + a * (t + l * r) + 4.0 * r - 2.0 * t + z * r * (t - 3.0 * r))
                * x
                + k * r * (t - 3.0 * r))
            / d
}

/// `ς_ℐ⁽²⁾(x)` at noise level `ζ`.
pub fn sigma_interference(x: f64, dp: &DerivedParams, zeta: f64) -> f64 {
    let (k, a, l, r, t, z) = (dp.kappa, dp.alpha, dp.neighbors as f64, dp.r, dp.t, zeta);
    let d = (a * (l + 1.0) - k - z * (2.0 * t - r)) * x - k * (2.0 * t - r);
    (a * k * (l + 1.0) - k * (k - 1.0) - a * (l + 1.0) - (k - 1.0) * (2.0 * t - r) * z) / d
        + (k * ((4.0 - 5.0 * k) * t + (k - 2.0) * r + a * (t + l * r) - z * t * (3.0 * t - r)) * x
            + k * k * t * (r - 3.0 * t))
            / (2.0 * x * x * d)
}

/// `(Γ_𝒫ℓ, Γ_𝒫u)`: the plus sign gives the lower end of the signal bulk.
pub fn gamma_signal(dp: &DerivedParams, zeta: f64) -> Result<(f64, f64)> {
    require_interference(dp)?;
    let (k, a, l, r, t, z) = (dp.kappa, dp.alpha, dp.neighbors as f64, dp.r, dp.t, zeta);
    let rad = a * k * (t - r).powi(2) - a * a * r * (t + (l - 1.0) * r);
    if rad < 0.0 {
        return Err(Error::BulksMerged(format!(
            "signal radicand {rad:e} is negative"
        )));
    }
    let base = z * r * (t - r) + k * (t - r) + a * (t + (l - 2.0) * r);
    let den = (r * (t - r) * z + (a - k) * t + (a * l + k) * r).powi(2)
        + 4.0 * r * z * ((a + k) * r * r - (a + 2.0 * k) * t * r + k * t * t)
        + 4.0 * a * k * l * r * (t - r);
    let pre = -k * r * (t - r) / den;
    let sq = 2.0 * rad.sqrt();
    Ok((pre * (base + sq), pre * (base - sq)))
}

/// `(Γ_ℐℓ, Γ_ℐu)`: the plus sign gives the lower end of the interference
/// bulk.
pub fn gamma_interference(dp: &DerivedParams, zeta: f64) -> Result<(f64, f64)> {
    require_interference(dp)?;
    let (k, a, l, r, t, z) = (dp.kappa, dp.alpha, dp.neighbors as f64, dp.r, dp.t, zeta);
    let rad = a * k * l * (t - r).powi(2) + a * a * l * t * ((l - 1.0) * t - l * r);
    if rad < 0.0 {
        return Err(Error::BulksMerged(format!(
            "interference radicand {rad:e} is negative"
        )));
    }
    let base = k * (t - r) + a * (2.0 * l - 1.0) * t - a * l * r + t * (t - r) * z;
    let den = (a * t + l * a * r - t * k + r * k + t * (t - r) * z).powi(2)
        + 4.0 * (t - r) * (t * ((k + a * l - a) * t - (a * l + k) * r) * z + a * k * l * r);
    let pre = -k * t * (t - r) / den;
    let sq = 2.0 * rad.sqrt();
    Ok((pre * (base + sq), pre * (base - sq)))
}

fn general_estimate(dp: &DerivedParams, zeta: f64) -> Result<SupportEstimate> {
    let (gpl, gpu) = gamma_signal(dp, zeta)?;
    let (gil, giu) = gamma_interference(dp, zeta)?;
    let signal = BulkInterval::new(sigma_signal(gpl, dp, zeta), sigma_signal(gpu, dp, zeta))?;
    let interference = BulkInterval::new(
        sigma_interference(gil, dp, zeta),
        sigma_interference(giu, dp, zeta),
    )?;
    let mut est = SupportEstimate::new(signal, interference, SupportMethod::BilateralGeneral, *dp);
    if !(giu < gpl) {
        est.flags
            .push("Gamma criterion: the stationary points overlap".into());
    }
    Ok(est)
}

/// Enclosures of both bulks at noise level `zeta` (`ζ = W C`; zero gives the
/// high-SNR enclosure).
pub fn bilateral_supports_general(dp: &DerivedParams, zeta: f64) -> Result<SupportEstimate> {
    if !(zeta >= 0.0 && zeta.is_finite()) {
        return Err(Error::Domain(format!(
            "zeta must be non-negative, got {zeta}"
        )));
    }
    general_estimate(dp, zeta)
}

/// Separability verdict `Γ_ℐu < Γ_𝒫ℓ` of the general-SNR approximation.
pub fn gamma_separable(dp: &DerivedParams, zeta: f64) -> Result<bool> {
    match (gamma_signal(dp, zeta), gamma_interference(dp, zeta)) {
        (Ok((gpl, _)), Ok((_, giu))) => Ok(giu < gpl),
        (Err(Error::BulksMerged(_)), _) | (_, Err(Error::BulksMerged(_))) => Ok(false),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// Eigenvalue repulsion.

/// Zero `G₄ = r κ (t − r) / (κ (r − t) − β r)` of the explicit noiseless
/// inverse with an interference dimension ratio `β`, and the scaling
/// `r s₀(G₄)` it implies for the signal bulk.
pub fn repulsion_scale(kappa: f64, beta: f64, r: f64, t: f64) -> (f64, f64) {
    let k = kappa;
    let g4 = r * k * (t - r) / (k * (r - t) - beta * r);
    let rad = beta * beta * g4 * g4 + 2.0 * beta * g4 * t * k - 2.0 * beta * g4 * g4 * k
        + k * k * (g4 + t).powi(2);
    let s0 = (g4 * k - 2.0 * g4 + g4 * beta + t * k) / (2.0 * g4 * g4)
        - rad.max(0.0).sqrt() / (2.0 * g4 * g4);
    (g4, r * s0)
}

/// Check of the interference repulsion factor against the explicit inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepulsionReport {
    /// `L α`.
    pub beta: f64,
    pub g4: f64,
    /// `r s₀(G₄)`.
    pub ratio: f64,
    /// `i_P` at `P/I = t/r`.
    pub predicted: f64,
    pub relative_error: f64,
}

pub fn repulsion_verification(dp: &DerivedParams) -> Result<RepulsionReport> {
    require_interference(dp)?;
    let beta = dp.neighbors as f64 * dp.alpha;
    let (g4, ratio) = repulsion_scale(dp.kappa, beta, dp.r, dp.t);
    let (predicted, _) =
        interference_scale_factors(dp.t / dp.r, 1.0, dp.alpha, dp.kappa, dp.neighbors)?;
    Ok(RepulsionReport {
        beta,
        g4,
        ratio,
        predicted,
        relative_error: (ratio - predicted).abs() / predicted,
    })
}

// ---------------------------------------------------------------------------
// All methods at once.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodFailure {
    pub method: SupportMethod,
    pub error: String,
    pub message: String,
}

/// Every applicable estimate for one system, plus the separability
/// thresholds on I/P.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub estimates: Vec<SupportEstimate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<MethodFailure>,
    pub unilateral_threshold: Option<f64>,
    pub bilateral_threshold: Option<f64>,
}

impl SupportReport {
    pub fn get(&self, method: SupportMethod) -> Option<&SupportEstimate> {
        self.estimates.iter().find(|e| e.method == method)
    }
}

/// Share of an interval's width by which a bilateral interval may stick out
/// of the unilateral one before it is flagged.
const CROSS_CHECK_SLACK: f64 = 0.1;

/// Runs every method on `sys`. Methods that do not apply (no interference,
/// merged bulks) are listed as failures instead of aborting the report;
/// invalid parameters are still an error.
pub fn all_supports(sys: &SystemParams) -> Result<SupportReport> {
    let dp = derive_params(sys)?;
    let mut estimates = Vec::new();
    let mut failures = Vec::new();
    let mut keep = |method: SupportMethod,
                    r: Result<SupportEstimate>,
                    estimates: &mut Vec<SupportEstimate>| match r {
        Ok(e) => estimates.push(e),
        Err(e) => failures.push(MethodFailure {
            method,
            error: e.kind().to_string(),
            message: e.to_string(),
        }),
    };
    keep(
        SupportMethod::Unilateral,
        unilateral_support(sys),
        &mut estimates,
    );
    keep(
        SupportMethod::BilateralHighSnr1,
        bilateral_supports_first_order(&dp),
        &mut estimates,
    );
    match bilateral_supports_highsnr(&dp) {
        Ok(hs) => {
            estimates.push(hs.zeros);
            estimates.push(hs.enclosure);
        }
        Err(e) => {
            keep(SupportMethod::BilateralHighSnr2, Err(e), &mut estimates);
        }
    }
    keep(
        SupportMethod::BilateralGeneral,
        bilateral_supports_general(&dp, dp.zeta),
        &mut estimates,
    );

    if let Some(uni) = estimates
        .iter()
        .find(|e| e.method == SupportMethod::Unilateral)
        .cloned()
    {
        let widen = |b: &BulkInterval| {
            let pad = CROSS_CHECK_SLACK * b.width();
            BulkInterval {
                lower: b.lower - pad,
                upper: b.upper + pad,
            }
        };
        let (ws, wi) = (widen(&uni.signal), widen(&uni.interference));
        for e in estimates
            .iter_mut()
            .filter(|e| e.method != SupportMethod::Unilateral)
        {
            if !ws.contains_interval(&e.signal) || !wi.contains_interval(&e.interference) {
                e.flags
                    .push("not contained in the scaled unilateral intervals".into());
            }
        }
    }

    let unilateral_threshold = unilateral_separable(&dp).ok().map(|(_, b)| b);
    let bilateral_threshold = separability_threshold(dp.alpha / dp.kappa, dp.neighbors).ok();
    Ok(SupportReport {
        estimates,
        failures,
        unilateral_threshold,
        bilateral_threshold,
    })
}
