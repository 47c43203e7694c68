//! Monte Carlo experiments: uncoded BER of both receivers over a sweep, and
//! empirical spectra against the asymptotic density.
//!
//! Every block is generated from `(point seed, block index)` alone, so results
//! do not depend on the number of worker threads, and both receivers always
//! see the same received block.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bulk_support::{all_supports, BulkInterval, SupportReport};
use crate::error::{Error, Result};
use crate::linalg::gram_eigenvalues;
use crate::rmt_spectrum::{
    default_y_offset, density_from_stieltjes, FixedPointParams, SpectralDensity,
};
use crate::subspace_receiver::{conventional_receiver, count_bit_errors, svd_receiver};
use crate::system_model::{
    assemble_received, realization_rng, sample_realization, DataLaw, PilotConfig, SystemConfig,
    SystemParams,
};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Receiver {
    Svd,
    Conventional,
}

impl Receiver {
    pub fn name(self) -> &'static str {
        match self {
            Receiver::Svd => "svd",
            Receiver::Conventional => "conventional",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Number of receive antennas R.
    ReceiveAntennas,
    /// Flat interference power relative to P.
    InterferenceRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    /// R or I/P.
    pub sweep_value: f64,
    pub receiver: Receiver,
    pub tau: usize,
    /// Free-form label of the curve, e.g. `delta=2`.
    pub series: String,
    pub ber: f64,
    pub errors: u64,
    pub bits: u64,
    pub symbols_counted: u64,
    /// Half-width of the 95% interval on `ber`.
    pub ci_halfwidth: f64,
    pub blocks: usize,
    /// Seed of the block generator; equal for both receivers at one point.
    pub seed: u64,
}

impl BerPoint {
    pub fn ci(&self) -> (f64, f64) {
        (self.ber - self.ci_halfwidth, self.ber + self.ci_halfwidth)
    }

    /// True when the two confidence intervals are disjoint and `self` is
    /// the lower one.
    pub fn clearly_below(&self, other: &BerPoint) -> bool {
        self.ci().1 < other.ci().0
    }
}

/// Sweep definition for the BER experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Extra curves of the modulo profile, one per δ; empty uses the
    /// system's own profile.
    #[serde(default)]
    pub deltas: Vec<f64>,
    /// Pilot lengths τ in units of T; empty uses the system's `tau_blocks`.
    #[serde(default)]
    pub taus: Vec<usize>,
    #[serde(default = "both_receivers")]
    pub receivers: Vec<Receiver>,
    /// Coherence blocks per sweep point, raised if needed to reach
    /// `min_symbols`.
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    #[serde(default)]
    pub min_symbols: u64,
    /// Subspace dimension of the SVD receiver; defaults to T.
    #[serde(default)]
    pub t_sel: Option<usize>,
}

fn both_receivers() -> Vec<Receiver> {
    vec![Receiver::Svd, Receiver::Conventional]
}

fn default_blocks() -> usize {
    1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 {
            return Err(Error::Config(
                "at least one block per point is needed".into(),
            ));
        }
        if self.values.is_empty() || self.receivers.is_empty() {
            return Err(Error::Config(
                "sweep values and receivers must not be empty".into(),
            ));
        }
        if self.taus.contains(&0) {
            return Err(Error::Config(
                "the receivers need tau >= 1 pilot block".into(),
            ));
        }
        if !self.deltas.is_empty() && self.axis == SweepAxis::InterferenceRatio {
            return Err(Error::Config(
                "deltas and an I/P sweep both set the interference".into(),
            ));
        }
        Ok(())
    }

    fn taus(&self) -> Vec<usize> {
        if self.taus.is_empty() {
            vec![self.system.tau_blocks.max(1)]
        } else {
            self.taus.clone()
        }
    }

    /// `(label, system config)` per curve.
    fn series(&self) -> Vec<(String, SystemConfig)> {
        if self.deltas.is_empty() {
            return vec![(String::new(), self.system.clone())];
        }
        self.deltas
            .iter()
            .map(|&d| {
                let mut s = self.system.clone();
                s.profile = Some("modulo".into());
                s.delta = Some(d);
                s.i = None;
                s.i_db = None;
                s.i_over_p = None;
                (format!("delta={d}"), s)
            })
            .collect()
    }

    fn resolve_point(&self, base: &SystemConfig, value: f64) -> Result<SystemParams> {
        match self.axis {
            SweepAxis::ReceiveAntennas => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!(
                        "R must be a positive integer, got {value}"
                    )));
                }
                base.resolve_with(Some(value as usize))
            }
            SweepAxis::InterferenceRatio => {
                let mut s = base.clone();
                s.profile = Some("flat".into());
                s.i = None;
                s.i_db = None;
                s.i_over_p = Some(value);
                s.resolve()
            }
        }
    }
}

/// Seed of one sweep point, mixed from the experiment seed and the point's
/// coordinates so that points are independent.
pub fn point_seed(seed: u64, series: usize, tau: usize, point: usize) -> u64 {
    let mut z = seed;
    for v in [series as u64, tau as u64, point as u64] {
        z = splitmix(z ^ splitmix(v.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Streams at or above this offset draw pilots, below it channels.
const PILOT_STREAM: u64 = 1 << 62;

/// Bit errors of every receiver on one block.
#[derive(Debug, Clone, Copy, Default)]
struct BlockErrors {
    svd: u64,
    conventional: u64,
}

fn run_block(
    sys: &SystemParams,
    tau: usize,
    t_sel: usize,
    receivers: &[Receiver],
    seed: u64,
    index: u64,
) -> Result<BlockErrors> {
    let mut pilot_rng = realization_rng(seed, PILOT_STREAM + index);
    let pilots =
        PilotConfig::for_blocks(&mut pilot_rng, sys.transmit_antennas, sys.signal_power, tau);
    let rz = sample_realization(sys, &pilots, seed, index, DataLaw::Qpsk)?;
    let y = assemble_received(&rz)?;
    let sent = rz.data();
    let mut out = BlockErrors::default();
    for &rx in receivers {
        let decisions = match rx {
            Receiver::Svd => svd_receiver(&y, &pilots, t_sel, sys.noise_power / sys.signal_power)?,
            Receiver::Conventional => conventional_receiver(&y, &pilots)?,
        };
        let e = count_bit_errors(&decisions, &sent)?;
        match rx {
            Receiver::Svd => out.svd = e,
            Receiver::Conventional => out.conventional = e,
        }
    }
    Ok(out)
}

/// BER and the 95% half-width from per-block error counts.
///
/// Errors within one block share the channel and are correlated, so the
/// spread is estimated from the block means (batch means); with a single
/// block the binomial approximation over bits is used.
pub fn ber_statistics(block_errors: &[u64], bits_per_block: u64) -> (f64, f64) {
    let n = block_errors.len();
    let bits = bits_per_block * n as u64;
    if bits == 0 {
        return (0.0, 0.0);
    }
    let errors: u64 = block_errors.iter().sum();
    let ber = errors as f64 / bits as f64;
    let binomial = Z95 * (ber * (1.0 - ber) / bits as f64).sqrt();
    if n < 2 {
        return (ber, binomial);
    }
    let rates = block_errors
        .iter()
        .map(|&e| e as f64 / bits_per_block as f64);
    let var = rates.map(|x| (x - ber).powi(2)).sum::<f64>() / (n - 1) as f64;
    (ber, (Z95 * (var / n as f64).sqrt()).max(binomial))
}

/// Runs a BER sweep along `cfg.axis` for every curve and pilot length.
pub fn ber_sweep(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<BerPoint>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for (si, (label, base)) in cfg.series().iter().enumerate() {
        for tau in cfg.taus() {
            for (pi, &value) in cfg.values.iter().enumerate() {
                let sys = cfg.resolve_point(base, value)?;
                if sys.signal_power <= 0.0 {
                    return Err(Error::Config("BER needs P > 0".into()));
                }
                let t = sys.transmit_antennas;
                let pilot_cols = tau * t;
                if pilot_cols >= sys.coherence {
                    return Err(Error::Config(format!(
                        "tau = {tau} leaves no data columns in C = {}",
                        sys.coherence
                    )));
                }
                let symbols_per_block = (t * (sys.coherence - pilot_cols)) as u64;
                let bits_per_block = 2 * symbols_per_block;
                let blocks = cfg
                    .blocks
                    .max(cfg.min_symbols.div_ceil(symbols_per_block) as usize);
                let t_sel = cfg.t_sel.unwrap_or(t);
                let pseed = point_seed(seed, si, tau, pi);
                let per_block = (0..blocks as u64)
                    .into_par_iter()
                    .map(|b| run_block(&sys, tau, t_sel, &cfg.receivers, pseed, b))
                    .collect::<Result<Vec<_>>>()?;
                for &rx in &cfg.receivers {
                    let counts: Vec<u64> = per_block
                        .iter()
                        .map(|e| match rx {
                            Receiver::Svd => e.svd,
                            Receiver::Conventional => e.conventional,
                        })
                        .collect();
                    let (ber, ci) = ber_statistics(&counts, bits_per_block);
                    out.push(BerPoint {
                        sweep_value: value,
                        receiver: rx,
                        tau,
                        series: label.clone(),
                        ber,
                        errors: counts.iter().sum(),
                        bits: bits_per_block * blocks as u64,
                        symbols_counted: symbols_per_block * blocks as u64,
                        ci_halfwidth: ci,
                        blocks,
                        seed: pseed,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// BER against the number of receive antennas.
pub fn ber_vs_r(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<BerPoint>> {
    if cfg.axis != SweepAxis::ReceiveAntennas {
        return Err(Error::Config("ber_vs_r needs axis receive_antennas".into()));
    }
    ber_sweep(cfg, seed)
}

/// BER against the flat interference ratio I/P.
pub fn ber_vs_ip(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<BerPoint>> {
    if cfg.axis != SweepAxis::InterferenceRatio {
        return Err(Error::Config(
            "ber_vs_ip needs axis interference_ratio".into(),
        ));
    }
    ber_sweep(cfg, seed)
}

/// Looks up one point of a sweep.
pub fn find_point<'a>(
    points: &'a [BerPoint],
    series: &str,
    tau: usize,
    value: f64,
    receiver: Receiver,
) -> Option<&'a BerPoint> {
    points.iter().find(|p| {
        p.series == series && p.tau == tau && p.sweep_value == value && p.receiver == receiver
    })
}

/// CSV with columns `sweep_value,receiver,tau,ber,errors,bits,ci,series,seed`
/// after the configuration as `#` lines of JSON.
pub fn write_ber_csv<W: Write>(
    mut out: W,
    cfg: &ExperimentConfig,
    seed: u64,
    points: &[BerPoint],
) -> Result<()> {
    write_json_header(
        &mut out,
        &serde_json::json!({ "experiment": cfg, "seed": seed }),
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "sweep_value",
        "receiver",
        "tau",
        "ber",
        "errors",
        "bits",
        "ci",
        "series",
        "seed",
    ])?;
    for p in points {
        w.write_record([
            p.sweep_value.to_string(),
            p.receiver.name().to_string(),
            p.tau.to_string(),
            p.ber.to_string(),
            p.errors.to_string(),
            p.bits.to_string(),
            p.ci_halfwidth.to_string(),
            p.series.clone(),
            p.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON, one `# ` comment line per line.
pub fn write_json_header<W: Write>(out: &mut W, value: &serde_json::Value) -> Result<()> {
    for line in serde_json::to_string_pretty(value)?.lines() {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Spectra.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub system: SystemConfig,
    /// Independent blocks whose eigenvalues are pooled.
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Imaginary offset of the Stieltjes inversion; defaults to a small
    /// fraction of the grid span.
    #[serde(default)]
    pub y_offset: Option<f64>,
}

fn default_seeds() -> usize {
    20
}

fn default_bins() -> usize {
    200
}

fn default_grid_points() -> usize {
    4000
}

/// Share of the empirical eigenvalues of one bulk inside an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub method: crate::bulk_support::SupportMethod,
    pub signal: f64,
    pub interference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Bin edges, `bins + 1` values, in units of `Y Yᴴ`.
    pub edges: Vec<f64>,
    /// Empirical density of the nonzero eigenvalues, averaged over seeds.
    pub histogram: Vec<f64>,
    /// Asymptotic continuous density, normalized like the histogram.
    pub density: SpectralDensity,
    /// Kolmogorov distance between the empirical and asymptotic CDFs of the
    /// nonzero eigenvalues.
    pub ks_distance: f64,
    /// Asymptotic support intervals, ascending.
    pub bulks: Vec<(f64, f64)>,
    /// Share of nonzero eigenvalues strictly inside the gap below the top
    /// bulk; `None` when the asymptotic support is connected.
    pub gap_mass: Option<f64>,
    pub supports: Option<SupportReport>,
    pub containment: Vec<Containment>,
    pub nonzero_eigenvalues: usize,
    pub seed: u64,
}

/// Density level, relative to the peak, below which the asymptotic density
/// counts as a gap between bulks.
pub const BULK_THRESHOLD: f64 = 1e-3;

/// Eigenvalues of `Y Yᴴ` for one Gaussian-data block without pilots, in
/// descending order.
pub fn block_eigenvalues(sys: &SystemParams, seed: u64, index: u64) -> Result<Vec<f64>> {
    let pilots = PilotConfig::none(sys.transmit_antennas);
    let rz = sample_realization(sys, &pilots, seed, index, DataLaw::Gaussian)?;
    Ok(gram_eigenvalues(&assemble_received(&rz)?))
}

/// Pooled empirical spectrum over `cfg.seeds` blocks against the asymptotic
/// density and all support approximations.
pub fn spectrum_experiment(cfg: &SpectrumConfig, seed: u64) -> Result<SpectrumReport> {
    if cfg.seeds == 0 || cfg.bins == 0 || cfg.grid_points < 2 {
        return Err(Error::Config(
            "seeds, bins and grid_points must be positive".into(),
        ));
    }
    let sys = cfg.system.resolve()?;
    let fp = FixedPointParams::from_system(&sys)?;
    let per_block = (0..cfg.seeds as u64)
        .into_par_iter()
        .map(|i| block_eigenvalues(&sys, seed, i))
        .collect::<Result<Vec<_>>>()?;

    // Everything beyond the asymptotic rank is a numerical zero.
    let rank = ((1.0 - fp.atom_at_zero()) * sys.receive_antennas as f64).round() as usize;
    let mut pooled: Vec<f64> = per_block
        .iter()
        .flat_map(|ev| ev.iter().take(rank).copied())
        .collect();
    pooled.sort_by(f64::total_cmp);
    let top = *pooled.last().unwrap_or(&0.0);

    let hi = fp.spectral_bound().max(1.05 * top);
    let grid: Vec<f64> = (0..cfg.grid_points)
        .map(|k| hi * k as f64 / (cfg.grid_points - 1) as f64)
        .collect();
    let y_offset = cfg
        .y_offset
        .unwrap_or_else(|| 0.1 * default_y_offset(&grid));
    let density = density_from_stieltjes(&grid, &fp, y_offset)?;
    let cdf = density.continuous_cdf();

    let n = pooled.len() as f64;
    let ks_distance = pooled
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = density.cdf_at(&cdf, x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);

    // Normalize the continuous density to unit mass like the histogram.
    let mass = density.continuous_mass();
    let normalized = SpectralDensity {
        values: density.values.iter().map(|v| v / mass).collect(),
        ..density.clone()
    };
    let peak = normalized.values.iter().copied().fold(0.0, f64::max);
    let bulks = normalized.support_intervals(BULK_THRESHOLD * peak);
    let gap_mass = match bulks.len() {
        0 | 1 => None,
        k => {
            let (a, b) = (bulks[k - 2].1, bulks[k - 1].0);
            Some(pooled.iter().filter(|&&x| a < x && x < b).count() as f64 / n)
        }
    };

    let width = hi / cfg.bins as f64;
    let edges: Vec<f64> = (0..=cfg.bins).map(|k| k as f64 * width).collect();
    let mut counts = vec![0usize; cfg.bins];
    for &x in &pooled {
        counts[((x / width) as usize).min(cfg.bins - 1)] += 1;
    }
    let histogram = counts.iter().map(|&c| c as f64 / (n * width)).collect();

    let supports = if sys.signal_power > 0.0 && sys.max_interference() > 0.0 {
        Some(all_supports(&sys)?)
    } else {
        None
    };
    let containment = supports
        .as_ref()
        .map(|rep| {
            rep.estimates
                .iter()
                .map(|e| containment(&per_block, &sys, e.method, &e.signal, &e.interference))
                .collect()
        })
        .unwrap_or_default();

    Ok(SpectrumReport {
        edges,
        histogram,
        density: normalized,
        ks_distance,
        bulks,
        gap_mass,
        supports,
        containment,
        nonzero_eigenvalues: pooled.len(),
        seed,
    })
}

/// The T largest eigenvalues of each block form the signal bulk, the next
/// `L T` the interference bulk.
fn containment(
    per_block: &[Vec<f64>],
    sys: &SystemParams,
    method: crate::bulk_support::SupportMethod,
    signal: &BulkInterval,
    interference: &BulkInterval,
) -> Containment {
    let t = sys.transmit_antennas;
    let k = sys.interferer_count();
    let share = |from: usize, len: usize, b: &BulkInterval| {
        let vals: Vec<f64> = per_block
            .iter()
            .flat_map(|ev| ev.iter().skip(from).take(len).copied())
            .collect();
        vals.iter().filter(|&&x| b.contains(x)).count() as f64 / vals.len().max(1) as f64
    };
    Containment {
        method,
        signal: share(0, t, signal),
        interference: share(t, k, interference),
    }
}

/// Histogram and overlay as CSV: `# ` lines with the config and summary,
/// then `x,empirical,asymptotic` at the bin centres.
pub fn write_spectrum_csv<W: Write>(
    mut out: W,
    cfg: &SpectrumConfig,
    report: &SpectrumReport,
) -> Result<()> {
    write_json_header(
        &mut out,
        &serde_json::json!({
            "config": cfg,
            "seed": report.seed,
            "ks_distance": report.ks_distance,
            "gap_mass": report.gap_mass,
            "bulks": report.bulks,
            "atom_at_zero": report.density.atom_at_zero,
            "containment": report.containment,
        }),
    )?;
    let cdf = report.density.continuous_cdf();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "empirical", "asymptotic"])?;
    for (k, h) in report.histogram.iter().enumerate() {
        let (a, b) = (report.edges[k], report.edges[k + 1]);
        let asymptotic =
            (report.density.cdf_at(&cdf, b) - report.density.cdf_at(&cdf, a)) / (b - a);
        w.write_record([
            (0.5 * (a + b)).to_string(),
            h.to_string(),
            asymptotic.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fig.-style system: flat interference at ratio `i_over_p`.
pub fn flat_system_config(
    r: usize,
    t: usize,
    c: usize,
    l: usize,
    p: f64,
    w: f64,
    i_over_p: f64,
) -> SystemConfig {
    SystemConfig {
        r: Some(r),
        t,
        c,
        l,
        p: Some(p),
        w: Some(w),
        i_over_p: Some(i_over_p),
        ..SystemConfig::default()
    }
}

/// Modulo-profile system `I_k = P (k mod T)/(δ T)`.
pub fn modulo_system_config(
    r: usize,
    t: usize,
    c: usize,
    l: usize,
    p: f64,
    w: f64,
    delta: f64,
) -> SystemConfig {
    SystemConfig {
        r: Some(r),
        t,
        c,
        l,
        p: Some(p),
        w: Some(w),
        profile: Some("modulo".into()),
        delta: Some(delta),
        ..SystemConfig::default()
    }
}
