//! Empirical eigenvalues of `Y Yᴴ` against the asymptotic density, for a
//! modulo interference profile.
//!
//! `cargo run --release --example spectrum_overlay -- [R] [seeds]`

use pilot_decontam::montecarlo::{modulo_system_config, spectrum_experiment, SpectrumConfig};

fn main() -> pilot_decontam::Result<()> {
    let mut args = std::env::args().skip(1);
    let r: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(300);
    let seeds: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(5);
    let cfg = SpectrumConfig {
        system: modulo_system_config(r, 10, 100, 2, 0.1, 1.0, 4.0),
        seeds,
        bins: 40,
        grid_points: 1500,
        y_offset: None,
    };
    let rep = spectrum_experiment(&cfg, 1)?;
    println!("R = {r}, {} nonzero eigenvalues over {seeds} blocks", rep.nonzero_eigenvalues);
    println!("asymptotic bulks: {:?}", rep.bulks);
    println!("Kolmogorov distance {:.4}", rep.ks_distance);
    if let Some(gap) = rep.gap_mass {
        println!("eigenvalues inside the gap: {:.3}%", 100.0 * gap);
    }
    let peak = rep.histogram.iter().copied().fold(0.0, f64::max);
    for (k, h) in rep.histogram.iter().enumerate() {
        let bar = "#".repeat((50.0 * h / peak).round() as usize);
        println!("{:>9.1} {bar}", 0.5 * (rep.edges[k] + rep.edges[k + 1]));
    }
    Ok(())
}
