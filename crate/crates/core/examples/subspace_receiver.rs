//! One block through both receivers, step by step.

use pilot_decontam::subspace_receiver::{
    conventional_receiver, count_bit_errors, estimate_projected_channel, project, signal_subspace, svd_receiver,
};
use pilot_decontam::system_model::{assemble_received, sample_realization, DataLaw, PilotConfig, SystemParams};

fn main() -> pilot_decontam::Result<()> {
    let (p, w) = (0.1, 1.0);
    let sys = SystemParams::flat(200, 4, 400, 3, p, 0.3 * p, w);
    let pilots = PilotConfig::orthogonal(4, p);
    let rz = sample_realization(&sys, &pilots, 11, 0, DataLaw::Qpsk)?;
    let y = assemble_received(&rz)?;

    let basis = signal_subspace(&y, 4)?;
    println!("leading singular values: {:?}", basis.singular_values.iter().map(|s| format!("{s:.1}")).collect::<Vec<_>>());
    let y_tilde = project(&basis, &y)?;
    let h = estimate_projected_channel(&y_tilde, &pilots)?;
    println!("projected channel is {}x{}", h.h_tilde.nrows(), h.h_tilde.ncols());

    let bits = 2 * rz.data().len();
    let svd = count_bit_errors(&svd_receiver(&y, &pilots, 4, w / p)?, &rz.data())?;
    let conv = count_bit_errors(&conventional_receiver(&y, &pilots)?, &rz.data())?;
    println!("bit errors out of {bits}: svd {svd}, conventional {conv}");
    Ok(())
}
