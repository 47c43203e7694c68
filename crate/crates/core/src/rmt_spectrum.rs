//! Asymptotic eigenvalue distribution of `Y Yᴴ` through its Stieltjes
//! transform, and the empirical spectrum of sampled blocks.
//!
//! The limit law is described by `G(s) = ∫ dP(x)/(x − s)`, which solves
//!
//! ```text
//! u    = (sG + 1 − κ) G
//! F(u) = ζ/κ + Σ_j w_j / (κ/ℓ_j − u)
//! 0    = sG + 1 + u F(u)
//! ```
//!
//! where each transmitter group contributes a weight `w_j` (its share of the
//! R dimensions) at level `ℓ_j` (its received power times `R C`). The
//! eigenvalues are those of the unnormalized `Y Yᴴ`: the signal bulk sits near
//! `P R C` and the noise bulk near `W C`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gram_eigenvalues, CMat};
use crate::numerics::{cumulative_trapezoid, damped_fixed_point, trapezoid, Complex64};
use crate::system_model::{DerivedParams, SystemParams};

/// One group of transmitters with common received power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralTerm {
    /// Share of the R receive dimensions, e.g. `T/R` for the in-cell users.
    pub weight: f64,
    /// Eigenvalue scale of the group, `p R C` for received power `p`.
    pub level: f64,
}

/// Parameters of the fixed-point equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointParams {
    /// C/R.
    pub kappa: f64,
    /// T/R, kept for reference; the signal term is part of `terms`.
    pub alpha: f64,
    /// W C.
    pub zeta: f64,
    pub terms: Vec<SpectralTerm>,
}

impl FixedPointParams {
    /// Signal term `(T/R, P R C)` plus one term per interferer
    /// `(1/R, I_k R C)`, equal levels merged, zero powers dropped.
    pub fn from_system(sys: &SystemParams) -> Result<Self> {
        sys.validate()?;
        let rf = sys.receive_antennas as f64;
        let cf = sys.coherence as f64;
        let mut terms = Vec::new();
        if sys.signal_power > 0.0 {
            terms.push(SpectralTerm {
                weight: sys.transmit_antennas as f64 / rf,
                level: sys.signal_power * rf * cf,
            });
        }
        for &ik in &sys.interference_powers {
            if ik > 0.0 {
                terms.push(SpectralTerm {
                    weight: 1.0 / rf,
                    level: ik * rf * cf,
                });
            }
        }
        Ok(Self {
            kappa: cf / rf,
            alpha: sys.transmit_antennas as f64 / rf,
            zeta: sys.noise_power * cf,
            terms: merge_terms(terms),
        }
        .checked()?)
    }

    /// Flat interference in the `r, t, ζ` parameterization: signal level
    /// `1/r` with weight `α`, interference level `1/t` with weight `L α`.
    pub fn from_derived(dp: &DerivedParams) -> Result<Self> {
        let mut terms = vec![SpectralTerm {
            weight: dp.alpha,
            level: 1.0 / dp.r,
        }];
        if dp.t.is_finite() && dp.neighbors > 0 {
            terms.push(SpectralTerm {
                weight: dp.neighbors as f64 * dp.alpha,
                level: 1.0 / dp.t,
            });
        }
        Self {
            kappa: dp.kappa,
            alpha: dp.alpha,
            zeta: dp.zeta,
            terms: merge_terms(terms),
        }
        .checked()
    }

    /// Noise only: the limit is Marchenko-Pastur at scale `ζ`.
    pub fn noise_only(kappa: f64, zeta: f64) -> Result<Self> {
        Self {
            kappa,
            alpha: 0.0,
            zeta,
            terms: Vec::new(),
        }
        .checked()
    }

    fn checked(self) -> Result<Self> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::Domain(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return Err(Error::Domain(format!(
                "zeta must be non-negative, got {}",
                self.zeta
            )));
        }
        for term in &self.terms {
            if !(term.weight >= 0.0 && term.level > 0.0 && term.level.is_finite()) {
                return Err(Error::Domain(format!("invalid spectral term {term:?}")));
            }
        }
        if self.zeta == 0.0 && self.terms.is_empty() {
            return Err(Error::Domain(
                "no signal, interference or noise: the spectrum is a point mass at 0".into(),
            ));
        }
        Ok(self)
    }

    /// Terms as `(ρ, a²)` pairs with `ρ = w/κ` and `a² = ℓ w`; for the signal
    /// that is `(α/κ, P T C)` and for interferer k `(1/C, I_k C)`.
    pub fn weight_power_pairs(&self) -> Vec<(f64, f64)> {
        self.terms
            .iter()
            .map(|t| (t.weight / self.kappa, t.level * t.weight))
            .collect()
    }

    /// Noise variance in the same parameterization, `W C`.
    pub fn noise_power_term(&self) -> f64 {
        self.zeta
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// Mass of the eigenvalue distribution sitting exactly at zero.
    pub fn atom_at_zero(&self) -> f64 {
        let rank_share = if self.zeta > 0.0 {
            self.kappa.min(1.0)
        } else {
            self.kappa.min(1.0).min(self.total_weight())
        };
        (1.0 - rank_share).max(0.0)
    }

    /// Generous upper bound on the support.
    pub fn spectral_bound(&self) -> f64 {
        let w = self.total_weight();
        let l_max = self.terms.iter().map(|t| t.level).fold(0.0, f64::max);
        let signal = l_max.sqrt() * (1.0 + w.sqrt()) * (1.0 + (w / self.kappa).sqrt());
        let noise = self.zeta.sqrt() * (1.0 + 1.0 / self.kappa.sqrt());
        1.2 * (signal + noise).powi(2)
    }

    fn characteristic_scale(&self) -> f64 {
        self.terms.iter().map(|t| t.level).fold(self.zeta, f64::max)
    }

    fn scaled(&self, sigma: f64) -> Self {
        Self {
            kappa: self.kappa,
            alpha: self.alpha,
            zeta: self.zeta / sigma,
            terms: self
                .terms
                .iter()
                .map(|t| SpectralTerm {
                    weight: t.weight,
                    level: t.level / sigma,
                })
                .collect(),
        }
    }
}

fn merge_terms(mut terms: Vec<SpectralTerm>) -> Vec<SpectralTerm> {
    terms.sort_by(|a, b| a.level.total_cmp(&b.level));
    let mut merged: Vec<SpectralTerm> = Vec::with_capacity(terms.len());
    for term in terms {
        match merged.last_mut() {
            Some(last) if (last.level - term.level).abs() <= 1e-12 * term.level => {
                last.weight += term.weight
            }
            _ => merged.push(term),
        }
    }
    merged
}

/// Residual of the fixed-point equation and its derivative in `G`.
fn equation(g: Complex64, s: Complex64, fp: &FixedPointParams) -> (Complex64, Complex64) {
    let k = fp.kappa;
    let a = s * g + 1.0 - k;
    let u = a * g;
    let du = s * g + a;
    let mut f_u = Complex64::new(fp.zeta / k, 0.0);
    let mut df_u = Complex64::new(0.0, 0.0);
    for term in &fp.terms {
        let inv = 1.0 / (k / term.level - u);
        f_u += term.weight * inv;
        df_u += term.weight * inv * inv;
    }
    (s * g + 1.0 + u * f_u, s + du * (f_u + u * df_u))
}

fn fixed_point_map(g: Complex64, s: Complex64, fp: &FixedPointParams) -> Complex64 {
    let k = fp.kappa;
    let u = (s * g + 1.0 - k) * g;
    let mut f_u = Complex64::new(fp.zeta / k, 0.0);
    for term in &fp.terms {
        f_u += term.weight / (k / term.level - u);
    }
    -(1.0 + u * f_u) / s
}

/// A solved point of the transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StieltjesValue {
    pub s: Complex64,
    pub g: Complex64,
    /// |residual of the fixed-point equation| at `g`.
    pub residual: f64,
}

/// Residual target of the solver.
pub const STIELTJES_TOL: f64 = 1e-10;
const NEWTON_TOL: f64 = 1e-13;
const NEWTON_MAX: usize = 40;
const DAMPING: f64 = 0.5;
const FIXED_POINT_MAX: usize = 10_000;

/// Solves the fixed-point equation at `s` (with `Im s > 0`) on the branch
/// with `Im G > 0`.
///
/// Far from the real axis the damped map `G ← −(1 + u F(u))/s` contracts, so
/// the solution is first found at a large imaginary part and then followed
/// down to `Im s` by Newton steps whose length is halved whenever a step
/// fails or leaves the upper half plane.
pub fn stieltjes_solve(s: Complex64, fp: &FixedPointParams) -> Result<StieltjesValue> {
    if !(s.im > 0.0) || !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::Domain(format!(
            "Stieltjes transform needs Im(s) > 0, got {s}"
        )));
    }
    let sigma = fp.characteristic_scale();
    let scaled = fp.scaled(sigma);
    let target = s / sigma;
    let g = solve_scaled(target, &scaled)? / sigma;
    let residual = equation(g * sigma, target, &scaled).0.norm();
    Ok(StieltjesValue { s, g, residual })
}

fn newton(mut g: Complex64, s: Complex64, fp: &FixedPointParams) -> Option<(Complex64, f64)> {
    for _ in 0..NEWTON_MAX {
        let (f, df) = equation(g, s, fp);
        let res = f.norm();
        if res <= NEWTON_TOL {
            return Some((g, res));
        }
        if df.norm() == 0.0 || !res.is_finite() {
            return None;
        }
        g -= f / df;
    }
    let res = equation(g, s, fp).0.norm();
    (res <= STIELTJES_TOL).then_some((g, res))
}

fn on_branch(g: Complex64, s: Complex64) -> bool {
    g.im > 0.0 && g.norm() <= 1.0 / s.im * (1.0 + 1e-9)
}

fn solve_scaled(s: Complex64, fp: &FixedPointParams) -> Result<Complex64> {
    let bound = fp.spectral_bound();
    let y_start = s.im.max(4.0 * (s.re.abs() + bound));
    let start = Complex64::new(s.re, y_start);
    let fixed = damped_fixed_point(
        |g| fixed_point_map(g, start, fp),
        -1.0 / start,
        DAMPING,
        NEWTON_TOL,
        FIXED_POINT_MAX,
    )?;
    let mut g = fixed.value;
    if !on_branch(g, start) {
        return Err(Error::NoConvergence {
            iterations: fixed.iterations,
            residual: fixed.residual,
        });
    }
    let mut y = y_start;
    let mut ratio: f64 = 0.25;
    let mut last_residual = fixed.residual;
    let mut steps = 0usize;
    while y > s.im {
        let y_next = (y * ratio).max(s.im);
        let point = Complex64::new(s.re, y_next);
        match newton(g, point, fp) {
            Some((g_next, res)) if on_branch(g_next, point) => {
                g = g_next;
                y = y_next;
                last_residual = res;
                ratio = (ratio * ratio).max(1e-3);
            }
            _ => {
                ratio = ratio.sqrt();
                if ratio > 1.0 - 1e-6 {
                    return Err(Error::NoConvergence {
                        iterations: steps,
                        residual: last_residual,
                    });
                }
            }
        }
        steps += 1;
        if steps > 10_000 {
            return Err(Error::NoConvergence {
                iterations: steps,
                residual: last_residual,
            });
        }
    }
    if last_residual > STIELTJES_TOL {
        return Err(Error::NoConvergence {
            iterations: steps,
            residual: last_residual,
        });
    }
    Ok(g)
}

/// Continuous density on a grid plus the atom at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub atom_at_zero: f64,
    pub kappa: f64,
}

impl SpectralDensity {
    /// Trapezoid integral of the continuous part.
    pub fn continuous_mass(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    pub fn total_mass(&self) -> f64 {
        self.atom_at_zero + self.continuous_mass()
    }

    /// CDF of the continuous part, normalized to end at 1.
    pub fn continuous_cdf(&self) -> Vec<f64> {
        let mut cdf = cumulative_trapezoid(&self.grid, &self.values);
        let total = cdf.last().copied().unwrap_or(0.0);
        if total > 0.0 {
            cdf.iter_mut().for_each(|v| *v /= total);
        }
        cdf
    }

    /// Normalized continuous CDF at `x`, linearly interpolated.
    pub fn cdf_at(&self, cdf: &[f64], x: f64) -> f64 {
        let g = &self.grid;
        if g.is_empty() || x <= g[0] {
            return 0.0;
        }
        if x >= g[g.len() - 1] {
            return 1.0;
        }
        let i = g.partition_point(|&v| v <= x);
        let (x0, x1) = (g[i - 1], g[i]);
        cdf[i - 1] + (cdf[i] - cdf[i - 1]) * (x - x0) / (x1 - x0)
    }

    /// Density of the eigenvalues of `factor · Y Yᴴ`.
    pub fn rescale(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.iter().map(|x| x * factor).collect(),
            values: self.values.iter().map(|v| v / factor).collect(),
            atom_at_zero: self.atom_at_zero,
            kappa: self.kappa,
        }
    }

    /// Maximal intervals where the density exceeds `threshold`.
    pub fn support_intervals(&self, threshold: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut start: Option<f64> = None;
        for (&x, &v) in self.grid.iter().zip(&self.values) {
            match (v > threshold, start) {
                (true, None) => start = Some(x),
                (false, Some(a)) => {
                    out.push((a, x));
                    start = None;
                }
                _ => {}
            }
        }
        if let (Some(a), Some(&b)) = (start, self.grid.last()) {
            out.push((a, b));
        }
        out
    }

    /// CSV with columns `x,density` after `# kappa=…` and `# atom=…` lines
    /// and any extra `# key=value` metadata.
    pub fn write_csv<W: Write>(&self, out: W, metadata: &[(String, String)]) -> Result<()> {
        let mut out = out;
        writeln!(out, "# kappa={}", self.kappa)?;
        writeln!(out, "# atom={}", self.atom_at_zero)?;
        for (k, v) in metadata {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "density"])?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            w.write_record([x.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Continuous density by Stieltjes inversion, `Im G(x + i y)/π`, at every
/// grid point.
pub fn density_from_stieltjes(
    grid: &[f64],
    fp: &FixedPointParams,
    y_offset: f64,
) -> Result<SpectralDensity> {
    if !(y_offset > 0.0) {
        return Err(Error::Domain(format!(
            "y_offset must be positive, got {y_offset}"
        )));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("grid must be strictly increasing".into()));
    }
    // The atom at zero is removed so that its Lorentzian tail does not count
    // as continuous mass.
    let atom = fp.atom_at_zero();
    let values = grid
        .par_iter()
        .map(|&x| {
            stieltjes_solve(Complex64::new(x, y_offset), fp).map(|v| {
                let lorentz = atom * y_offset / (x * x + y_offset * y_offset);
                ((v.g.im - lorentz) / std::f64::consts::PI).max(0.0)
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SpectralDensity {
        grid: grid.to_vec(),
        values,
        atom_at_zero: atom,
        kappa: fp.kappa,
    })
}

/// Default inversion offset, a small fraction of the grid span.
pub fn default_y_offset(grid: &[f64]) -> f64 {
    match (grid.first(), grid.last()) {
        (Some(a), Some(b)) if b > a => 1e-4 * (b - a),
        _ => 1e-6,
    }
}

/// Eigenvalues of `Y Yᴴ / R`, non-increasing.
pub fn empirical_spectrum(y: &CMat) -> Vec<f64> {
    let r = y.nrows() as f64;
    gram_eigenvalues(y).into_iter().map(|v| v / r).collect()
}

/// Marchenko-Pastur law of `Y Yᴴ` for an `R × C` block of iid noise, at
/// `κ = C/R`, with eigenvalues measured in units of `scale` (`W C` for noise
/// variance W).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchenkoPastur {
    pub kappa: f64,
    pub scale: f64,
}

pub fn mp_density(kappa: f64, scale: f64) -> Result<MarchenkoPastur> {
    if !(kappa > 0.0 && scale > 0.0) {
        return Err(Error::Domain(format!(
            "need kappa > 0 and scale > 0, got {kappa}, {scale}"
        )));
    }
    Ok(MarchenkoPastur { kappa, scale })
}

impl MarchenkoPastur {
    pub fn lower(&self) -> f64 {
        self.scale * (1.0 - 1.0 / self.kappa.sqrt()).powi(2)
    }

    pub fn upper(&self) -> f64 {
        self.scale * (1.0 + 1.0 / self.kappa.sqrt()).powi(2)
    }

    /// `κ √(4/κ − (x − 1 − 1/κ)²) / (2π x)` in normalized units; it
    /// integrates to `min(1, κ)`.
    pub fn density(&self, x: f64) -> f64 {
        let k = self.kappa;
        let xn = x / self.scale;
        if xn <= 0.0 {
            return 0.0;
        }
        let d = 4.0 / k - (xn - 1.0 - 1.0 / k).powi(2);
        if d <= 0.0 {
            return 0.0;
        }
        k * d.sqrt() / (2.0 * std::f64::consts::PI * xn) / self.scale
    }

    pub fn atom_at_zero(&self) -> f64 {
        (1.0 - self.kappa).max(0.0)
    }
}

/// Largest eigenvalue of the noise part of the projected Gram matrix,
/// `T C W (1 + 1/√κ)²`.
pub fn noise_bulk_max_power(t: usize, c: usize, w: f64, kappa: f64) -> f64 {
    t as f64 * c as f64 * w * (1.0 + 1.0 / kappa.sqrt()).powi(2)
}

/// Two lower bounds on the SNR after projection,
/// `(P/W) R / (1 + 1/√κ)²` and the weaker `(P/W) min(R, C) / 4`.
pub fn snr_lower_bound(p: f64, w: f64, r: usize, c: usize, kappa: f64) -> (f64, f64) {
    let snr = p / w;
    (
        snr * r as f64 / (1.0 + 1.0 / kappa.sqrt()).powi(2),
        snr * r.min(c) as f64 / 4.0,
    )
}
