//! Parameters and random generation of one coherence block of the multi-cell
//! uplink `Y = H X + H_I X_I + Z`.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, dft_unitary, haar_unitary, CMat};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Physical quantities that fix the coherence time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Hz.
    pub carrier_frequency: f64,
    /// Seconds.
    pub delay_spread: f64,
    /// Meters per second.
    pub mobile_speed: f64,
    /// Meters per second.
    pub light_speed: f64,
}

impl RadioParams {
    pub fn new(carrier_frequency: f64, delay_spread: f64, mobile_speed: f64) -> Self {
        Self {
            carrier_frequency,
            delay_spread,
            mobile_speed,
            light_speed: SPEED_OF_LIGHT,
        }
    }

    /// GHz, microseconds and km/h.
    pub fn from_practical_units(carrier_ghz: f64, delay_spread_us: f64, speed_kmh: f64) -> Self {
        Self::new(carrier_ghz * 1e9, delay_spread_us * 1e-6, speed_kmh / 3.6)
    }
}

/// Number of symbols over which the channel stays constant,
/// `3 c / (4 √π f₀ τ v)`.
pub fn coherence_symbols(radio: &RadioParams) -> Result<f64> {
    let fields = [
        ("carrier_frequency", radio.carrier_frequency),
        ("delay_spread", radio.delay_spread),
        ("mobile_speed", radio.mobile_speed),
        ("light_speed", radio.light_speed),
    ];
    for (name, value) in fields {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Domain(format!(
                "{name} must be positive, got {value}"
            )));
        }
    }
    let pi_sqrt = std::f64::consts::PI.sqrt();
    Ok(
        3.0 / (4.0 * pi_sqrt * radio.carrier_frequency * radio.delay_spread) * radio.light_speed
            / radio.mobile_speed,
    )
}

/// Cell geometry and received powers (all powers linear).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// R.
    pub receive_antennas: usize,
    /// T, terminals (transmit antennas) per cell.
    pub transmit_antennas: usize,
    /// C, in symbols.
    pub coherence: usize,
    /// L.
    pub neighbors: usize,
    /// P.
    pub signal_power: f64,
    /// W, per entry.
    pub noise_power: f64,
    /// I_k for k = 1..L·T.
    pub interference_powers: Vec<f64>,
}

impl SystemParams {
    /// All interferers received with the same power `interference`.
    pub fn flat(
        receive_antennas: usize,
        transmit_antennas: usize,
        coherence: usize,
        neighbors: usize,
        signal_power: f64,
        interference: f64,
        noise_power: f64,
    ) -> Self {
        Self {
            receive_antennas,
            transmit_antennas,
            coherence,
            neighbors,
            signal_power,
            noise_power,
            interference_powers: vec![interference; neighbors * transmit_antennas],
        }
    }

    pub fn interferer_count(&self) -> usize {
        self.neighbors * self.transmit_antennas
    }

    pub fn validate(&self) -> Result<()> {
        if self.receive_antennas == 0 || self.transmit_antennas == 0 || self.coherence == 0 {
            return Err(Error::Config("R, T and C must be at least 1".into()));
        }
        for (name, value) in [("P", self.signal_power), ("W", self.noise_power)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be a non-negative number, got {value}"
                )));
            }
        }
        if self.interference_powers.len() != self.interferer_count() {
            return Err(Error::Config(format!(
                "expected {} interference powers (L*T), got {}",
                self.interferer_count(),
                self.interference_powers.len()
            )));
        }
        if let Some(bad) = self
            .interference_powers
            .iter()
            .find(|p| !(**p >= 0.0 && p.is_finite()))
        {
            return Err(Error::Config(format!(
                "interference power {bad} is not a non-negative number"
            )));
        }
        Ok(())
    }

    /// True when some interferer is received stronger than the in-cell
    /// terminals, which power-controlled handoff rules out.
    pub fn handoff_violated(&self) -> bool {
        self.interference_powers
            .iter()
            .any(|&i| i > self.signal_power)
    }

    pub fn is_flat(&self) -> bool {
        self.interference_powers.windows(2).all(|w| w[0] == w[1])
    }

    pub fn max_interference(&self) -> f64 {
        self.interference_powers.iter().copied().fold(0.0, f64::max)
    }
}

/// Dimensionless quantities used throughout the asymptotic analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// C/R.
    pub kappa: f64,
    /// T/R.
    pub alpha: f64,
    /// 1/(P R C).
    pub r: f64,
    /// 1/(I R C); infinite without interference.
    pub t: f64,
    /// W C.
    pub zeta: f64,
    /// r/t = I/P.
    pub beta_ratio: f64,
    /// L.
    pub neighbors: usize,
    /// False when the interference powers differ and `t` was computed from
    /// the strongest one.
    pub flat_interference: bool,
}

impl DerivedParams {
    /// Builds the scalars directly; `beta_ratio` follows as `r/t`.
    pub fn new(kappa: f64, alpha: f64, r: f64, t: f64, zeta: f64, neighbors: usize) -> Self {
        Self {
            kappa,
            alpha,
            r,
            t,
            zeta,
            beta_ratio: r / t,
            neighbors,
            flat_interference: true,
        }
    }
}

pub fn derive_params(sys: &SystemParams) -> Result<DerivedParams> {
    sys.validate()?;
    if sys.signal_power <= 0.0 {
        return Err(Error::Domain("r = 1/(PRC) needs P > 0".into()));
    }
    let rf = sys.receive_antennas as f64;
    let cf = sys.coherence as f64;
    let interference = sys.max_interference();
    Ok(DerivedParams {
        kappa: cf / rf,
        alpha: sys.transmit_antennas as f64 / rf,
        r: 1.0 / (sys.signal_power * rf * cf),
        t: if interference > 0.0 {
            1.0 / (interference * rf * cf)
        } else {
            f64::INFINITY
        },
        zeta: sys.noise_power * cf,
        beta_ratio: interference / sys.signal_power,
        neighbors: sys.neighbors,
        flat_interference: sys.is_flat(),
    })
}

/// How the L·T interference powers are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InterferenceProfile {
    /// Every interferer at power `power`.
    Flat { power: f64 },
    /// `I_k = P (k mod T) / (δ T)`.
    Modulo { delta: f64 },
}

pub fn interference_profile(
    profile: InterferenceProfile,
    signal_power: f64,
    transmit_antennas: usize,
    neighbors: usize,
) -> Result<Vec<f64>> {
    let n = transmit_antennas * neighbors;
    match profile {
        InterferenceProfile::Flat { power } => {
            if !(power >= 0.0) {
                return Err(Error::Domain(format!(
                    "interference power must be non-negative, got {power}"
                )));
            }
            Ok(vec![power; n])
        }
        InterferenceProfile::Modulo { delta } => {
            if !(delta > 0.0) {
                return Err(Error::Domain(format!(
                    "delta must be positive, got {delta}"
                )));
            }
            let t = transmit_antennas as f64;
            Ok((1..=n)
                .map(|k| signal_power * (k % transmit_antennas) as f64 / (delta * t))
                .collect())
        }
    }
}

/// Pilot symbols sent in the first `τ T` columns of each block.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotConfig {
    pub tau_blocks: usize,
    /// `T × τT`; rows orthogonal within each `T × T` block.
    pub pilot_matrix: CMat,
    /// Whether the neighboring cells reuse the same pilots (the contaminated
    /// case) or send their own.
    pub shared: bool,
}

impl PilotConfig {
    /// No pilots; every column carries data.
    pub fn none(transmit_antennas: usize) -> Self {
        Self {
            tau_blocks: 0,
            pilot_matrix: CMat::zeros(transmit_antennas, 0),
            shared: true,
        }
    }

    /// One block `√(TP) F` with `F` the unitary DFT, reused by every cell.
    pub fn orthogonal(transmit_antennas: usize, signal_power: f64) -> Self {
        let scale = Complex::new((transmit_antennas as f64 * signal_power).sqrt(), 0.0);
        Self {
            tau_blocks: 1,
            pilot_matrix: dft_unitary(transmit_antennas) * scale,
            shared: true,
        }
    }

    /// `τ` independent Haar-random unitary blocks scaled by `√(TP)`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        transmit_antennas: usize,
        signal_power: f64,
        tau_blocks: usize,
    ) -> Self {
        Self {
            tau_blocks,
            pilot_matrix: random_pilot_blocks(rng, transmit_antennas, signal_power, tau_blocks),
            shared: false,
        }
    }

    /// DFT pilots for a single block, random pilots otherwise.
    pub fn for_blocks<R: Rng + ?Sized>(
        rng: &mut R,
        transmit_antennas: usize,
        signal_power: f64,
        tau_blocks: usize,
    ) -> Self {
        match tau_blocks {
            0 => Self::none(transmit_antennas),
            1 => Self::orthogonal(transmit_antennas, signal_power),
            _ => Self::random(rng, transmit_antennas, signal_power, tau_blocks),
        }
    }

    /// Wraps an arbitrary `T × τT` matrix, checking that each block has
    /// orthogonal rows of equal norm.
    pub fn from_matrix(pilot_matrix: CMat, shared: bool) -> Result<Self> {
        let t = pilot_matrix.nrows();
        if t == 0 || pilot_matrix.ncols() % t != 0 {
            return Err(Error::Dimension(format!(
                "pilot matrix {}x{} is not a row of square blocks",
                t,
                pilot_matrix.ncols()
            )));
        }
        let tau_blocks = pilot_matrix.ncols() / t;
        for b in 0..tau_blocks {
            let block = pilot_matrix.columns(b * t, t);
            let gram = &block * block.adjoint();
            let norm = gram[(0, 0)].re;
            let off = (gram - CMat::identity(t, t) * Complex::new(norm, 0.0)).norm();
            if !(norm > 0.0) || off > 1e-9 * norm {
                return Err(Error::Config(format!(
                    "pilot block {b} does not have orthogonal rows of equal norm"
                )));
            }
        }
        Ok(Self {
            tau_blocks,
            pilot_matrix,
            shared,
        })
    }

    pub fn pilot_columns(&self) -> usize {
        self.pilot_matrix.ncols()
    }
}

fn random_pilot_blocks<R: Rng + ?Sized>(
    rng: &mut R,
    t: usize,
    signal_power: f64,
    tau_blocks: usize,
) -> CMat {
    let scale = Complex::new((t as f64 * signal_power).sqrt(), 0.0);
    let mut m = CMat::zeros(t, t * tau_blocks);
    for b in 0..tau_blocks {
        m.columns_mut(b * t, t)
            .copy_from(&(haar_unitary(rng, t) * scale));
    }
    m
}

/// Distribution of the data symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataLaw {
    /// Circularly-symmetric complex Gaussian of variance P.
    Gaussian,
    /// Gray-mapped `√(P/2)(±1 ± j)`.
    Qpsk,
}

/// One sampled coherence block.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// R × T, unit-variance entries.
    pub h: CMat,
    /// T × C, pilots followed by data.
    pub x: CMat,
    /// R × LT; column k has variance I_k/P.
    pub h_i: CMat,
    /// LT × C.
    pub x_i: CMat,
    /// R × C, variance W.
    pub noise: CMat,
    pub pilots: PilotConfig,
    pub data_law: DataLaw,
    pub seed: u64,
    pub index: u64,
}

impl ChannelRealization {
    /// Data part of X, `T × (C − τT)`.
    pub fn data(&self) -> CMat {
        let p = self.pilots.pilot_columns();
        self.x.columns(p, self.x.ncols() - p).into_owned()
    }
}

/// Generator for realization `index` of the experiment seeded by `seed`.
/// Distinct indices give independent streams.
pub fn realization_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn sample_realization(
    sys: &SystemParams,
    pilots: &PilotConfig,
    seed: u64,
    index: u64,
    data_law: DataLaw,
) -> Result<ChannelRealization> {
    sys.validate()?;
    let (r, t, c) = (sys.receive_antennas, sys.transmit_antennas, sys.coherence);
    let k = sys.interferer_count();
    let tau_cols = pilots.pilot_columns();
    if pilots.pilot_matrix.nrows() != t {
        return Err(Error::Dimension(format!(
            "pilot matrix has {} rows, T = {t}",
            pilots.pilot_matrix.nrows()
        )));
    }
    if tau_cols > c {
        return Err(Error::Config(format!(
            "{} pilot blocks of length {t} do not fit in C = {c}",
            pilots.tau_blocks
        )));
    }
    let mut rng = realization_rng(seed, index);
    let p = sys.signal_power;

    let h = complex_gaussian(&mut rng, r, t, 1.0);
    let mut x = CMat::zeros(t, c);
    x.columns_mut(0, tau_cols).copy_from(&pilots.pilot_matrix);
    x.columns_mut(tau_cols, c - tau_cols).copy_from(&draw_data(
        &mut rng,
        t,
        c - tau_cols,
        p,
        data_law,
    ));

    // With P = 0 the interferers keep their absolute power in H_I.
    let (interferer_symbol_power, gain_scale) = if p > 0.0 { (p, 1.0 / p) } else { (1.0, 1.0) };
    let mut h_i = complex_gaussian(&mut rng, r, k, 1.0);
    for (j, &ik) in sys.interference_powers.iter().enumerate() {
        h_i.column_mut(j).scale_mut((ik * gain_scale).sqrt());
    }
    let mut x_i = CMat::zeros(k, c);
    if tau_cols > 0 {
        for cell in 0..sys.neighbors {
            let block = if pilots.shared && p > 0.0 {
                pilots.pilot_matrix.clone()
            } else {
                random_pilot_blocks(&mut rng, t, interferer_symbol_power, pilots.tau_blocks)
            };
            x_i.view_mut((cell * t, 0), (t, tau_cols)).copy_from(&block);
        }
    }
    x_i.columns_mut(tau_cols, c - tau_cols)
        .copy_from(&draw_data(
            &mut rng,
            k,
            c - tau_cols,
            interferer_symbol_power,
            data_law,
        ));

    let noise = if sys.noise_power > 0.0 {
        complex_gaussian(&mut rng, r, c, sys.noise_power)
    } else {
        CMat::zeros(r, c)
    };

    Ok(ChannelRealization {
        h,
        x,
        h_i,
        x_i,
        noise,
        pilots: pilots.clone(),
        data_law,
        seed,
        index,
    })
}

fn draw_data<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    power: f64,
    law: DataLaw,
) -> CMat {
    match law {
        DataLaw::Gaussian => complex_gaussian(rng, rows, cols, power),
        DataLaw::Qpsk => {
            let a = (0.5 * power).sqrt();
            CMat::from_fn(rows, cols, |_, _| {
                let re = if rng.random::<bool>() { a } else { -a };
                let im = if rng.random::<bool>() { a } else { -a };
                Complex::new(re, im)
            })
        }
    }
}

/// `Y = H X + H_I X_I + Z`.
pub fn assemble_received(rz: &ChannelRealization) -> Result<CMat> {
    let (r, c) = rz.noise.shape();
    let conformable = rz.h.nrows() == r
        && rz.h_i.nrows() == r
        && rz.h.ncols() == rz.x.nrows()
        && rz.h_i.ncols() == rz.x_i.nrows()
        && rz.x.ncols() == c
        && rz.x_i.ncols() == c;
    if !conformable {
        return Err(Error::Dimension(format!(
            "H {:?}, X {:?}, H_I {:?}, X_I {:?}, Z {:?}",
            rz.h.shape(),
            rz.x.shape(),
            rz.h_i.shape(),
            rz.x_i.shape(),
            rz.noise.shape()
        )));
    }
    Ok(&rz.h * &rz.x + &rz.h_i * &rz.x_i + &rz.noise)
}

/// Decibels to linear power.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// System section of a JSON configuration document. Powers may be given
/// linear (`P`, `W`, `I`) or in dB (`P_dB`, `W_dB`, `I_dB`); the interference
/// may also be given relative to P (`I_over_P`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(rename = "R")]
    pub r: Option<usize>,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "C")]
    pub c: usize,
    #[serde(rename = "L", default)]
    pub l: usize,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(rename = "P_dB", default, skip_serializing_if = "Option::is_none")]
    pub p_db: Option<f64>,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(rename = "W_dB", default, skip_serializing_if = "Option::is_none")]
    pub w_db: Option<f64>,
    #[serde(rename = "I", default, skip_serializing_if = "Option::is_none")]
    pub i: Option<f64>,
    #[serde(rename = "I_dB", default, skip_serializing_if = "Option::is_none")]
    pub i_db: Option<f64>,
    #[serde(rename = "I_over_P", default, skip_serializing_if = "Option::is_none")]
    pub i_over_p: Option<f64>,
    /// "flat" (default) or "modulo".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default = "default_tau")]
    pub tau_blocks: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_tau() -> usize {
    1
}

fn pick_power(name: &str, linear: Option<f64>, db: Option<f64>) -> Result<Option<f64>> {
    match (linear, db) {
        (Some(_), Some(_)) => Err(Error::Config(format!(
            "give either {name} or {name}_dB, not both"
        ))),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(d)) => Ok(Some(db_to_linear(d))),
        (None, None) => Ok(None),
    }
}

impl SystemConfig {
    pub fn signal_power(&self) -> Result<f64> {
        pick_power("P", self.p, self.p_db)?.ok_or_else(|| Error::Config("missing P or P_dB".into()))
    }

    pub fn noise_power(&self) -> Result<f64> {
        Ok(pick_power("W", self.w, self.w_db)?.unwrap_or(0.0))
    }

    pub fn profile(&self) -> Result<InterferenceProfile> {
        match self.profile.as_deref().unwrap_or("flat") {
            "flat" => {
                let p = self.signal_power()?;
                let absolute = pick_power("I", self.i, self.i_db)?;
                let power = match (absolute, self.i_over_p) {
                    (Some(_), Some(_)) => {
                        return Err(Error::Config("give the interference power once".into()))
                    }
                    (Some(v), None) => v,
                    (None, Some(ratio)) => ratio * p,
                    (None, None) => 0.0,
                };
                Ok(InterferenceProfile::Flat { power })
            }
            "modulo" => {
                let delta = self
                    .delta
                    .ok_or_else(|| Error::Config("modulo profile needs delta".into()))?;
                Ok(InterferenceProfile::Modulo { delta })
            }
            other => Err(Error::Config(format!(
                "unknown interference profile {other:?}"
            ))),
        }
    }

    /// Resolved parameters; `r_override` replaces R (used by antenna sweeps).
    pub fn resolve_with(&self, r_override: Option<usize>) -> Result<SystemParams> {
        let r = r_override
            .or(self.r)
            .ok_or_else(|| Error::Config("missing R".into()))?;
        let p = self.signal_power()?;
        let sys = SystemParams {
            receive_antennas: r,
            transmit_antennas: self.t,
            coherence: self.c,
            neighbors: self.l,
            signal_power: p,
            noise_power: self.noise_power()?,
            interference_powers: interference_profile(self.profile()?, p, self.t, self.l)?,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn resolve(&self) -> Result<SystemParams> {
        self.resolve_with(None)
    }
}
