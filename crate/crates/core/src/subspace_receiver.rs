//! Blind subspace-projection receiver and the linear-estimation baseline.
//!
//! The SVD receiver projects the received block onto its `T_sel` strongest
//! left-singular directions, estimates the small `T_sel × T` channel from the
//! projected pilots and equalizes the projected data. When the signal bulk of
//! the spectrum is separated from the interference bulk the projection
//! removes most of the interference before any pilot is looked at.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{partial_svd, right_pseudo_inverse, CMat};
use crate::numerics::Complex64;
use crate::system_model::PilotConfig;

/// Tolerance on the relative eigen-residual of the partial SVD.
pub const SUBSPACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    /// `R × T_sel`, orthonormal columns.
    pub s: CMat,
    /// Leading singular values, non-increasing.
    pub singular_values: Vec<f64>,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.s.ncols()
    }
}

/// Leading `t_sel` left-singular directions of `y`.
pub fn signal_subspace(y: &CMat, t_sel: usize) -> Result<SubspaceBasis> {
    let max = y.nrows().min(y.ncols());
    if t_sel == 0 || t_sel > max {
        return Err(Error::Domain(format!("T_sel = {t_sel} outside 1..={max}")));
    }
    let svd = partial_svd(y, t_sel, SUBSPACE_TOL)?;
    Ok(SubspaceBasis {
        s: svd.left,
        singular_values: svd.singular_values,
    })
}

/// `Ỹ = Sᴴ Y`.
pub fn project(basis: &SubspaceBasis, y: &CMat) -> Result<CMat> {
    if basis.s.nrows() != y.nrows() {
        return Err(Error::Dimension(format!(
            "basis has {} rows, Y has {}",
            basis.s.nrows(),
            y.nrows()
        )));
    }
    Ok(basis.s.adjoint() * y)
}

/// Channel seen after projection, `T_sel × T`.
#[derive(Debug, Clone)]
pub struct ProjectedChannel {
    pub h_tilde: CMat,
}

/// Least-squares channel from the pilot columns, `Y_p X_p⁺`. Works for the
/// projected block and for the full `R × C` block alike.
fn ls_channel(y: &CMat, pilots: &PilotConfig) -> Result<CMat> {
    let n = pilots.pilot_columns();
    if n == 0 {
        return Err(Error::Config(
            "channel estimation needs at least one pilot block".into(),
        ));
    }
    if y.ncols() < n {
        return Err(Error::Dimension(format!(
            "{} columns cannot hold {n} pilot columns",
            y.ncols()
        )));
    }
    let pinv = right_pseudo_inverse(&pilots.pilot_matrix)?;
    Ok(y.columns(0, n) * pinv)
}

pub fn estimate_projected_channel(
    y_tilde: &CMat,
    pilots: &PilotConfig,
) -> Result<ProjectedChannel> {
    let h_tilde = ls_channel(y_tilde, pilots)?;
    if h_tilde
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::Singular(
            "projected channel estimate is not finite".into(),
        ));
    }
    Ok(ProjectedChannel { h_tilde })
}

/// Sign slicer: each entry becomes `±1 ± j`.
pub fn slice_qpsk(z: &CMat) -> CMat {
    z.map(|v| Complex::new(sign(v.re), sign(v.im)))
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Bit errors between sliced decisions and the transmitted Gray-mapped QPSK
/// symbols (one bit per quadrature).
pub fn count_bit_errors(decisions: &CMat, transmitted: &CMat) -> Result<u64> {
    if decisions.shape() != transmitted.shape() {
        return Err(Error::Dimension(format!(
            "{:?} decisions for {:?} symbols",
            decisions.shape(),
            transmitted.shape()
        )));
    }
    Ok(decisions
        .iter()
        .zip(transmitted.iter())
        .map(|(d, x)| {
            u64::from((d.re < 0.0) != (x.re < 0.0)) + u64::from((d.im < 0.0) != (x.im < 0.0))
        })
        .sum())
}

/// Linear MMSE equalization of the projected data followed by QPSK slicing.
///
/// `noise_to_signal` is `W/P`, the regularization of `H̃ᴴ H̃`. A singular
/// equalizer falls back to the pseudo-inverse of `H̃`.
pub fn detect_subspace(
    y_tilde_data: &CMat,
    h: &ProjectedChannel,
    noise_to_signal: f64,
) -> Result<CMat> {
    let ht = &h.h_tilde;
    if ht.nrows() != y_tilde_data.nrows() {
        return Err(Error::Dimension(format!(
            "channel has {} rows, projected data has {}",
            ht.nrows(),
            y_tilde_data.nrows()
        )));
    }
    let t = ht.ncols();
    let gram = ht.adjoint() * ht + CMat::identity(t, t) * Complex64::new(noise_to_signal, 0.0);
    let rhs = ht.adjoint() * y_tilde_data;
    let z = match gram.clone().cholesky() {
        Some(chol) if well_conditioned(&gram) => chol.solve(&rhs),
        _ => {
            let pinv = ht
                .clone()
                .pseudo_inverse(1e-12 * ht.norm().max(f64::MIN_POSITIVE))
                .map_err(|e| Error::Singular(e.to_string()))?;
            pinv * y_tilde_data
        }
    };
    Ok(slice_qpsk(&z))
}

fn well_conditioned(gram: &CMat) -> bool {
    let ev = gram.clone().symmetric_eigenvalues();
    let max = ev.iter().copied().fold(0.0, f64::max);
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    max > 0.0 && min > 1e-12 * max
}

/// Full SVD receiver on one block: subspace, projection, projected LS
/// channel, MMSE detection of the data columns.
pub fn svd_receiver(
    y: &CMat,
    pilots: &PilotConfig,
    t_sel: usize,
    noise_to_signal: f64,
) -> Result<CMat> {
    let basis = signal_subspace(y, t_sel)?;
    let y_tilde = project(&basis, y)?;
    let h = estimate_projected_channel(&y_tilde, pilots)?;
    let n = pilots.pilot_columns();
    let data = y_tilde.columns(n, y_tilde.ncols() - n).into_owned();
    detect_subspace(&data, &h, noise_to_signal)
}

/// Baseline: LS estimate of the full `R × T` channel from the pilot columns,
/// maximum-ratio combining of the data columns, QPSK slicing.
pub fn conventional_receiver(y: &CMat, pilots: &PilotConfig) -> Result<CMat> {
    let h_hat = ls_channel(y, pilots)?;
    let n = pilots.pilot_columns();
    let data = y.columns(n, y.ncols() - n);
    Ok(slice_qpsk(&(h_hat.adjoint() * data)))
}

/// Unit-norm receive beamformer.
#[derive(Debug, Clone)]
pub struct BeamformerVector {
    pub m: nalgebra::DVector<Complex64>,
}

/// Maximizer of the Rayleigh quotient `mᴴ Y Yᴴ m / mᴴ m`, i.e. the leading
/// left-singular vector.
pub fn matched_filter_principal(y: &CMat) -> Result<BeamformerVector> {
    if y.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::Domain(
            "matched filter of a zero matrix is undefined".into(),
        ));
    }
    let svd = partial_svd(y, 1, SUBSPACE_TOL)?;
    Ok(BeamformerVector {
        m: svd.left.column(0).into_owned(),
    })
}

/// `|⟨a, b⟩| / (‖a‖ ‖b‖)`.
pub fn alignment(a: &nalgebra::DVector<Complex64>, b: &nalgebra::DVector<Complex64>) -> f64 {
    a.dotc(b).norm() / (a.norm() * b.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian;
    use crate::system_model::{
        assemble_received, realization_rng, sample_realization, DataLaw, SystemParams,
    };

    fn projector(m: &CMat) -> CMat {
        m * m.adjoint()
    }

    fn operator_norm(m: &CMat) -> f64 {
        crate::linalg::operator_norm(m)
    }

    #[test]
    fn rank_one_subspace() {
        let mut rng = realization_rng(1, 0);
        let u = complex_gaussian(&mut rng, 12, 1, 1.0);
        let v = complex_gaussian(&mut rng, 9, 1, 1.0);
        let y = &u * v.adjoint();
        let b = signal_subspace(&y, 1).unwrap();
        let un = u.column(0) / Complex::new(u.norm(), 0.0);
        assert!((b.s.column(0).dotc(&un).norm() - 1.0).abs() < 1e-10);
        let mf = matched_filter_principal(&y).unwrap();
        assert!((alignment(&mf.m, &un.into_owned()) - 1.0).abs() < 1e-10);
        assert!((mf.m.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_free_single_cell_span() {
        let sys = SystemParams::flat(40, 3, 30, 0, 1.0, 0.0, 0.0);
        let pilots = PilotConfig::orthogonal(3, 1.0);
        let rz = sample_realization(&sys, &pilots, 2, 0, DataLaw::Qpsk).unwrap();
        let y = assemble_received(&rz).unwrap();
        let b = signal_subspace(&y, 3).unwrap();
        let q = rz.h.clone().qr().q();
        assert!(operator_norm(&(projector(&b.s) - projector(&q))) < 1e-8);

        let yt = project(&b, &y).unwrap();
        assert!((yt.norm() - y.norm()).abs() < 1e-8 * y.norm());

        let h = estimate_projected_channel(&yt, &pilots).unwrap();
        assert!((&h.h_tilde - b.s.adjoint() * &rz.h).norm() < 1e-8);

        let dec = svd_receiver(&y, &pilots, 3, 0.0).unwrap();
        assert_eq!(dec.shape(), (3, 27));
        assert_eq!(count_bit_errors(&dec, &rz.data()).unwrap(), 0);

        let conv = conventional_receiver(&y, &pilots).unwrap();
        assert_eq!(conv.shape(), (3, 27));
        assert_eq!(count_bit_errors(&conv, &rz.data()).unwrap(), 0);
    }

    #[test]
    fn projected_energy_is_leading_singular_energy() {
        let y = complex_gaussian(&mut realization_rng(5, 0), 30, 50, 1.0);
        let b = signal_subspace(&y, 4).unwrap();
        let yt = project(&b, &y).unwrap();
        let energy: f64 = b.singular_values.iter().map(|s| s * s).sum();
        assert!((yt.norm_squared() - energy).abs() < 1e-8 * energy);
        assert!(yt.norm() <= y.norm());
    }

    #[test]
    fn zero_columns_do_not_move_the_subspace() {
        let y = complex_gaussian(&mut realization_rng(6, 0), 20, 15, 1.0);
        let mut padded = CMat::zeros(20, 25);
        padded.columns_mut(0, 15).copy_from(&y);
        let a = signal_subspace(&y, 2).unwrap();
        let b = signal_subspace(&padded, 2).unwrap();
        assert!(operator_norm(&(projector(&a.s) - projector(&b.s))) < 1e-8);
    }

    #[test]
    fn subspace_rank_bounds() {
        let y = CMat::zeros(4, 6);
        assert!(signal_subspace(&y, 0).is_err());
        assert!(signal_subspace(&y, 5).is_err());
        assert!(matches!(
            matched_filter_principal(&y),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn identity_pilots_estimate_is_a_rescaling() {
        let p: f64 = 0.25;
        let pilots =
            PilotConfig::from_matrix(CMat::identity(2, 2) * Complex::new(p.sqrt(), 0.0), true)
                .unwrap();
        let y_tilde = complex_gaussian(&mut realization_rng(7, 0), 2, 10, 1.0);
        let h = estimate_projected_channel(&y_tilde, &pilots).unwrap();
        let expected = y_tilde.columns(0, 2) / Complex::new(p.sqrt(), 0.0);
        assert!((h.h_tilde - expected).norm() < 1e-12);
    }

    #[test]
    fn identity_channel_detects_transmitted_symbols() {
        let mut rng = realization_rng(8, 0);
        let x = slice_qpsk(&complex_gaussian(&mut rng, 3, 20, 1.0));
        let h = ProjectedChannel {
            h_tilde: CMat::identity(3, 3),
        };
        let dec = detect_subspace(&x, &h, 0.0).unwrap();
        assert_eq!(dec, x);
    }

    #[test]
    fn singular_equalizer_falls_back() {
        let mut ht = CMat::zeros(2, 2);
        ht[(0, 0)] = Complex::new(1.0, 0.0);
        let data = CMat::from_element(2, 3, Complex::new(-0.5, 0.5));
        let dec = detect_subspace(&data, &ProjectedChannel { h_tilde: ht }, 0.0).unwrap();
        assert_eq!(dec.shape(), (2, 3));
        assert_eq!(dec[(0, 0)], Complex::new(-1.0, 1.0));
    }

    #[test]
    fn rank_deficient_pilots_are_an_error() {
        let mut bad = PilotConfig::orthogonal(2, 1.0);
        bad.pilot_matrix = CMat::from_element(2, 2, Complex::new(1.0, 0.0));
        let y = CMat::from_element(2, 6, Complex::new(1.0, 0.0));
        assert!(matches!(
            estimate_projected_channel(&y, &bad),
            Err(Error::Singular(_))
        ));
        assert!(estimate_projected_channel(&y, &PilotConfig::none(2)).is_err());
    }

    #[test]
    fn matched_filter_ignores_column_order() {
        let y = complex_gaussian(&mut realization_rng(9, 0), 15, 8, 1.0);
        let mut perm = y.clone();
        perm.swap_columns(0, 7);
        perm.swap_columns(2, 5);
        let a = matched_filter_principal(&y).unwrap();
        let b = matched_filter_principal(&perm).unwrap();
        assert!((alignment(&a.m, &b.m) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn contaminated_conventional_estimate() {
        // Shared pilots: the LS estimate picks up every interferer channel.
        let sys = SystemParams::flat(16, 2, 10, 2, 1.0, 0.5, 0.0);
        let pilots = PilotConfig::orthogonal(2, 1.0);
        let rz = sample_realization(&sys, &pilots, 3, 0, DataLaw::Qpsk).unwrap();
        let y = assemble_received(&rz).unwrap();
        let h_hat = ls_channel(&y, &pilots).unwrap();
        let mut expected = rz.h.clone();
        for cell in 0..2 {
            expected += rz.h_i.columns(2 * cell, 2);
        }
        assert!((h_hat - expected).norm() < 1e-10);
    }
}
