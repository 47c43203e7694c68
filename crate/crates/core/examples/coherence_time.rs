//! Coherence time in symbols for a few mobility scenarios.
//!
//! `cargo run --example coherence_time -- 2.6 5 350`

use pilot_decontam::system_model::{coherence_symbols, RadioParams};

fn main() -> pilot_decontam::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if let [ghz, us, kmh] = args[..] {
        let c = coherence_symbols(&RadioParams::from_practical_units(ghz, us, kmh))?;
        println!("{c:.1}");
        return Ok(());
    }
    println!("{:>8} {:>8} {:>8} {:>10}", "GHz", "us", "km/h", "symbols");
    for (ghz, us, kmh) in [(2.6, 5.0, 350.0), (2.6, 5.0, 120.0), (3.5, 1.0, 50.0), (0.8, 5.0, 3.0)] {
        let c = coherence_symbols(&RadioParams::from_practical_units(ghz, us, kmh))?;
        println!("{ghz:>8} {us:>8} {kmh:>8} {c:>10.1}");
    }
    Ok(())
}
