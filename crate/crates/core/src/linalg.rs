//! Complex dense-matrix helpers shared by the channel model and receivers.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::Complex64;

pub type CMat = DMatrix<Complex64>;

const OVERSAMPLE: usize = 8;
const MAX_SUBSPACE_ITERATIONS: usize = 300;
const SKETCH_SEED: u64 = 0x5ee0_d5e7;

/// Matrix with iid circularly-symmetric complex Gaussian entries of the given
/// variance.
pub fn complex_gaussian<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> CMat {
    let sd = (0.5 * variance).sqrt();
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(sd * re, sd * im)
    })
}

/// Haar-distributed unitary matrix (QR of a Ginibre matrix with the phases of
/// the triangular factor removed).
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let qr = complex_gaussian(rng, n, n, 1.0).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Unitary DFT matrix of size `n`.
pub fn dft_unitary(n: usize) -> CMat {
    let scale = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |i, j| {
        let angle = -2.0 * std::f64::consts::PI * (i * j) as f64 / n as f64;
        Complex::from_polar(scale, angle)
    })
}

/// Orthonormal basis of the column space (thin QR).
pub fn orthonormalize(m: &CMat) -> CMat {
    m.clone().qr().q()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in non-increasing
/// order with matching eigenvector columns.
pub fn hermitian_eigen_desc(m: CMat) -> (Vec<f64>, CMat) {
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(eig.eigenvectors.nrows(), order.len(), |i, j| {
        eig.eigenvectors[(i, order[j])]
    });
    (values, vectors)
}

/// Eigenvalues of `Y Yᴴ`, non-increasing, computed from the smaller Gram
/// matrix and padded with zeros.
pub fn gram_eigenvalues(y: &CMat) -> Vec<f64> {
    let (r, c) = y.shape();
    let gram = if r <= c {
        y * y.adjoint()
    } else {
        y.adjoint() * y
    };
    let mut values: Vec<f64> = gram
        .symmetric_eigenvalues()
        .iter()
        .map(|v| v.max(0.0))
        .collect();
    values.resize(r, 0.0);
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Leading left-singular directions of a matrix.
#[derive(Debug, Clone)]
pub struct PartialSvd {
    /// `rows × k` with orthonormal columns.
    pub left: CMat,
    /// Non-increasing.
    pub singular_values: Vec<f64>,
    /// Subspace iterations used; zero when the dense path was taken.
    pub iterations: usize,
    /// `max_i ‖Y Yᴴ u_i − σ_i² u_i‖ / σ_1²`.
    pub residual: f64,
}

/// The `k` leading left-singular vectors and values of `y`.
///
/// Block subspace iteration on `Y Yᴴ` with Rayleigh-Ritz extraction, started
/// from a fixed Gaussian sketch so results are reproducible. If the relative
/// eigen-residual does not reach `tol` the dense Gram eigensolver is used.
pub fn partial_svd(y: &CMat, k: usize, tol: f64) -> Result<PartialSvd> {
    let (rows, cols) = y.shape();
    let n = rows.min(cols);
    if k == 0 || k > n {
        return Err(Error::Domain(format!(
            "requested {k} singular vectors of a {rows}x{cols} matrix"
        )));
    }
    let block = (k + OVERSAMPLE).min(n);
    if block == n || rows.max(cols) <= 2 * block {
        return Ok(dense_partial_svd(y, k));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SKETCH_SEED);
    let sketch = complex_gaussian(&mut rng, cols, block, 1.0);
    let mut q = orthonormalize(&(y * sketch));
    let y_adj = y.adjoint();
    for iteration in 1..=MAX_SUBSPACE_ITERATIONS {
        q = orthonormalize(&(y * (&y_adj * &q)));
        let projected = q.adjoint() * y;
        let (values, vectors) = hermitian_eigen_desc(&projected * projected.adjoint());
        let left = &q * vectors.columns(0, k);
        let applied = y * (&y_adj * &left);
        let top = values[0].max(f64::MIN_POSITIVE);
        let residual = (0..k)
            .map(|i| {
                (applied.column(i) - left.column(i) * Complex::new(values[i], 0.0)).norm() / top
            })
            .fold(0.0, f64::max);
        if residual <= tol {
            return Ok(PartialSvd {
                left,
                singular_values: values[..k].iter().map(|v| v.max(0.0).sqrt()).collect(),
                iterations: iteration,
                residual,
            });
        }
    }
    Ok(dense_partial_svd(y, k))
}

fn dense_partial_svd(y: &CMat, k: usize) -> PartialSvd {
    let (rows, cols) = y.shape();
    let (left, values) = if rows <= cols {
        let (values, vectors) = hermitian_eigen_desc(y * y.adjoint());
        (vectors.columns(0, k).into_owned(), values)
    } else {
        let (values, vectors) = hermitian_eigen_desc(y.adjoint() * y);
        let mut left = CMat::zeros(rows, k);
        for i in 0..k {
            let mut u = y * vectors.column(i);
            let norm = u.norm();
            if norm > 0.0 {
                u.unscale_mut(norm);
            }
            left.set_column(i, &u);
        }
        // Columns belonging to zero singular values are not determined by
        // `Y`; make them orthonormal anyway.
        if values[..k].iter().any(|&v| v <= 0.0) {
            left = complete_orthonormal(left, &values[..k]);
        }
        (left, values)
    };
    let singular_values: Vec<f64> = values[..k].iter().map(|v| v.max(0.0).sqrt()).collect();
    let applied = y * (y.adjoint() * &left);
    let top = values[0].max(f64::MIN_POSITIVE);
    let residual = (0..k)
        .map(|i| {
            (applied.column(i) - left.column(i) * Complex::new(values[i].max(0.0), 0.0)).norm()
                / top
        })
        .fold(0.0, f64::max);
    PartialSvd {
        left,
        singular_values,
        iterations: 0,
        residual,
    }
}

fn complete_orthonormal(mut left: CMat, values: &[f64]) -> CMat {
    let rows = left.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(SKETCH_SEED);
    for (i, &v) in values.iter().enumerate() {
        if v > 0.0 {
            continue;
        }
        let mut candidate = complex_gaussian(&mut rng, rows, 1, 1.0);
        for j in 0..left.ncols() {
            if j == i {
                continue;
            }
            let col = left.column(j).into_owned();
            let overlap = col.dotc(&candidate);
            candidate -= col * overlap;
        }
        let norm = candidate.norm();
        left.set_column(i, &(candidate.column(0) / Complex::new(norm, 0.0)));
    }
    left
}

/// Right pseudo-inverse `Xᴴ (X Xᴴ)⁻¹` of a matrix with full row rank.
pub fn right_pseudo_inverse(x: &CMat) -> Result<CMat> {
    let gram = x * x.adjoint();
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Singular("pilot matrix does not have full row rank".into()))?;
    // Guard against numerically rank-deficient pilot blocks.
    let diag_min = (0..chol.l_dirty().nrows())
        .map(|i| chol.l_dirty()[(i, i)].re)
        .fold(f64::INFINITY, f64::min);
    let diag_max = (0..chol.l_dirty().nrows())
        .map(|i| chol.l_dirty()[(i, i)].re)
        .fold(0.0, f64::max);
    if !(diag_min > 1e-7 * diag_max) {
        return Err(Error::Singular(
            "pilot matrix is numerically rank deficient".into(),
        ));
    }
    Ok(x.adjoint() * chol.inverse())
}

/// Orthogonal projector onto the column space of `basis` (orthonormal
/// columns assumed).
pub fn projector(basis: &CMat) -> CMat {
    basis * basis.adjoint()
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    gram_eigenvalues(m).first().copied().unwrap_or(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let u = haar_unitary(&mut rng(), 6);
        let err = (u.adjoint() * &u - CMat::identity(6, 6)).norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn dft_is_unitary_with_constant_modulus() {
        let f = dft_unitary(5);
        assert!((f.adjoint() * &f - CMat::identity(5, 5)).norm() < 1e-12);
        for z in f.iter() {
            assert!((z.norm() - 1.0 / 5f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn partial_svd_matches_full_svd() {
        let mut rng = rng();
        // Low rank plus noise so the leading directions are well separated.
        let a = complex_gaussian(&mut rng, 120, 3, 1.0);
        let b = complex_gaussian(&mut rng, 3, 200, 1.0);
        let y = &a * &b * Complex::new(5.0, 0.0) + complex_gaussian(&mut rng, 120, 200, 1.0);
        let part = partial_svd(&y, 3, 1e-10).unwrap();
        assert!(part.iterations > 0, "expected the iterative path");
        assert!(part.residual <= 1e-10);
        let full = y.clone().svd(true, false);
        let mut sv: Vec<f64> = full.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        for i in 0..3 {
            assert!((part.singular_values[i] - sv[i]).abs() / sv[i] < 1e-9);
        }
        let gram = part.left.adjoint() * &part.left;
        assert!((gram - CMat::identity(3, 3)).norm() < 1e-10);
    }

    #[test]
    fn dense_path_for_tall_matrix() {
        let mut rng = rng();
        let y = complex_gaussian(&mut rng, 40, 6, 1.0);
        let part = partial_svd(&y, 2, 1e-10).unwrap();
        assert_eq!(part.iterations, 0);
        assert!((part.left.adjoint() * &part.left - CMat::identity(2, 2)).norm() < 1e-10);
        assert!(part.residual < 1e-10);
    }

    #[test]
    fn out_of_range_rank_is_rejected() {
        let y = CMat::zeros(4, 3);
        assert!(partial_svd(&y, 0, 1e-10).is_err());
        assert!(partial_svd(&y, 4, 1e-10).is_err());
    }

    #[test]
    fn gram_eigenvalues_trace_identity() {
        let y = complex_gaussian(&mut rng(), 30, 10, 2.0);
        let ev = gram_eigenvalues(&y);
        assert_eq!(ev.len(), 30);
        assert!(ev[10..].iter().all(|&v| v == 0.0));
        let trace: f64 = ev.iter().sum();
        assert!((trace - y.norm_squared()).abs() / trace < 1e-12);
    }

    #[test]
    fn pseudo_inverse_of_rank_deficient_block_fails() {
        let mut x = complex_gaussian(&mut rng(), 3, 6, 1.0);
        let row = x.row(0).into_owned();
        x.set_row(2, &row);
        assert!(matches!(right_pseudo_inverse(&x), Err(Error::Singular(_))));
        let ok = complex_gaussian(&mut rng(), 3, 6, 1.0);
        let pinv = right_pseudo_inverse(&ok).unwrap();
        assert!((&ok * pinv - CMat::identity(3, 3)).norm() < 1e-12);
    }
}
