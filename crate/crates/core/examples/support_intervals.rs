//! Signal and interference bulk supports by every approximation.
//!
//! `cargo run --example support_intervals -- [I/P] [W]`

use pilot_decontam::bulk_support::all_supports;
use pilot_decontam::system_model::SystemParams;

fn main() -> pilot_decontam::Result<()> {
    let mut args = std::env::args().skip(1);
    let ratio: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.25);
    let w: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1.0);
    let p = 0.1;
    let sys = SystemParams::flat(300, 3, 1000, 2, p, ratio * p, w);
    let rep = all_supports(&sys)?;
    println!("{:<30} {:>22} {:>22} sep", "method", "interference", "signal");
    for e in &rep.estimates {
        println!(
            "{:<30} [{:>9.0}, {:>9.0}] [{:>9.0}, {:>9.0}] {}",
            format!("{:?}", e.method),
            e.interference.lower,
            e.interference.upper,
            e.signal.lower,
            e.signal.upper,
            e.separable
        );
        for f in &e.flags {
            println!("    note: {f}");
        }
    }
    for f in &rep.failures {
        println!("{:<30} {}", format!("{:?}", f.method), f.message);
    }
    println!("separable up to I/P = {:?} (unilateral), {:?} (bilateral)", rep.unilateral_threshold, rep.bilateral_threshold);
    Ok(())
}
