//! BER of both receivers against the number of receive antennas.
//!
//! `cargo run --release --example ber_vs_antennas -- [symbols per point]`

use pilot_decontam::montecarlo::{ber_vs_r, modulo_system_config, ExperimentConfig, Receiver, SweepAxis};

fn main() -> pilot_decontam::Result<()> {
    let symbols: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5_000);
    let cfg = ExperimentConfig {
        system: modulo_system_config(100, 5, 100, 6, 0.1, 1.0, 2.0),
        axis: SweepAxis::ReceiveAntennas,
        values: vec![50.0, 100.0, 200.0],
        deltas: vec![2.0, 6.0],
        taus: vec![1],
        receivers: vec![Receiver::Svd, Receiver::Conventional],
        blocks: 1,
        min_symbols: symbols,
        t_sel: None,
    };
    for p in ber_vs_r(&cfg, 1)? {
        println!("{:<9} R={:<4} {:<13} {:.4} ± {:.4}", p.series, p.sweep_value, p.receiver.name(), p.ber, p.ci_halfwidth);
    }
    Ok(())
}
