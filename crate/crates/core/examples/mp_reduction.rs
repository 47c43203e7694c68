//! Noise-only fixed point against the closed-form Marchenko-Pastur law.

use pilot_decontam::rmt_spectrum::{density_from_stieltjes, mp_density, FixedPointParams};

fn main() -> pilot_decontam::Result<()> {
    for kappa in [1.0 / 3.0, 1.0, 10.0 / 3.0] {
        let mp = mp_density(kappa, 1.0)?;
        let grid: Vec<f64> = (1..200).map(|k| mp.lower() + (mp.upper() - mp.lower()) * k as f64 / 200.0).collect();
        let d = density_from_stieltjes(&grid, &FixedPointParams::noise_only(kappa, 1.0)?, 1e-6)?;
        let err = grid.iter().zip(&d.values).map(|(x, v)| (v - mp.density(*x)).abs()).fold(0.0, f64::max);
        println!("kappa {kappa:.3}: support [{:.3}, {:.3}], atom {:.3}, max error {err:.1e}", mp.lower(), mp.upper(), mp.atom_at_zero());
    }
    Ok(())
}
