//! Largest load α/κ with separated bulks, as a function of I/P.

use pilot_decontam::bulk_support::{separability_curve, separability_threshold};

fn main() -> pilot_decontam::Result<()> {
    let ls = [2, 4, 7];
    println!("{:>6} {}", "I/P", ls.map(|l| format!("{:>10}", format!("L={l}"))).join(""));
    let curves: Vec<Vec<(f64, f64)>> = ls.iter().map(|&l| separability_curve(l, 21)).collect::<Result<_, _>>()?;
    for k in 0..21 {
        let row: String = curves.iter().map(|c| format!("{:>10.5}", c[k].1)).collect();
        println!("{:>6.2} {row}", curves[0][k].0);
    }
    for l in ls {
        println!("L={l}: alpha/kappa = 0.003 separable below I/P = {:.4}", separability_threshold(0.003, l)?);
    }
    Ok(())
}
