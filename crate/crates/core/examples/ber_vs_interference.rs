//! BER of both receivers against the interference ratio I/P, for several
//! pilot lengths.
//!
//! `cargo run --release --example ber_vs_interference -- [symbols per point]`

use pilot_decontam::montecarlo::{ber_vs_ip, flat_system_config, ExperimentConfig, Receiver, SweepAxis};

fn main() -> pilot_decontam::Result<()> {
    let symbols: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3_000);
    let cfg = ExperimentConfig {
        system: flat_system_config(100, 3, 300, 2, 0.1, 1.0, 0.1),
        axis: SweepAxis::InterferenceRatio,
        values: vec![0.1, 0.5, 0.95],
        deltas: vec![],
        taus: vec![1, 5],
        receivers: vec![Receiver::Svd, Receiver::Conventional],
        blocks: 1,
        min_symbols: symbols,
        t_sel: None,
    };
    for p in ber_vs_ip(&cfg, 2)? {
        println!("tau={:<2} I/P={:<5} {:<13} {:.4} ± {:.4}", p.tau, p.sweep_value, p.receiver.name(), p.ber, p.ci_halfwidth);
    }
    Ok(())
}
