//! Shared numerical kernels: polynomial roots, damped fixed-point iteration,
//! bisection and quadrature.

use std::ops::{Add, Mul, Sub};

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Real polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients, trimming zero leading
    /// terms.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    /// Builds the monic polynomial with the given real roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        let mut coeffs = vec![1.0];
        for &root in roots {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= root * c;
            }
            coeffs = next;
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// All complex roots, via eigenvalues of the balanced companion matrix
    /// followed by a few Newton polishing steps.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        poly_roots(self)
    }
}

/// All complex roots of `p`.
///
/// The companion matrix of the monic polynomial is balanced
/// (Parlett-Reinsch) before the Schur decomposition, which keeps the
/// eigenvalues accurate when the coefficients span many orders of magnitude.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    let n = p.degree();
    if n == 0 {
        return Err(Error::Domain("polynomial of degree 0 has no roots".into()));
    }
    let lead = p.coeffs[n];
    if n == 1 {
        return Ok(vec![Complex64::new(-p.coeffs[0] / lead, 0.0)]);
    }

    let mut companion = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        companion[(i, n - 1)] = -p.coeffs[i] / lead;
    }
    nalgebra::linalg::balancing::balance_parlett_reinsch(&mut companion);
    let eig = companion
        .try_schur(f64::EPSILON, 10_000)
        .ok_or(Error::NoConvergence {
            iterations: 10_000,
            residual: f64::NAN,
        })?
        .complex_eigenvalues();

    Ok(eig.iter().map(|&z| polish_root(p, z)).collect())
}

fn polish_root(p: &Polynomial, mut z: Complex64) -> Complex64 {
    let mut best = p.eval_complex(z).norm();
    for _ in 0..4 {
        let (v, dv) = p.eval_with_derivative(z);
        if dv.norm() == 0.0 {
            break;
        }
        let candidate = z - v / dv;
        let r = p.eval_complex(candidate).norm();
        if !(r < best) {
            break;
        }
        best = r;
        z = candidate;
    }
    z
}

/// Values a fixed-point iteration can run on.
pub trait FixedPointValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;
}

impl FixedPointValue for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl FixedPointValue for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedPoint<T> {
    pub value: T,
    pub iterations: usize,
    /// `|x - map(x)|` at the returned point.
    pub residual: f64,
}

/// Iterates `x <- (1 - damping) x + damping map(x)` until `|x - map(x)| <= tol`.
pub fn damped_fixed_point<T, F>(
    mut map: F,
    init: T,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint<T>>
where
    T: FixedPointValue,
    F: FnMut(T) -> T,
{
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::Domain(format!("damping {damping} not in (0, 1]")));
    }
    let mut x = init;
    let mut residual = f64::INFINITY;
    for iterations in 0..=max_iter {
        let fx = map(x);
        residual = (fx - x).magnitude();
        if residual <= tol {
            return Ok(FixedPoint {
                value: x,
                iterations,
                residual,
            });
        }
        if !residual.is_finite() {
            break;
        }
        x = x * (1.0 - damping) + fx * damping;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Root of `f` in `[lo, hi]` by bisection, to bracket width `tol`.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoSignChange { lo, hi });
    }
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Trapezoidal rule over tabulated samples.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Running trapezoidal integral; the first entry is zero.
pub fn cumulative_trapezoid(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    out.push(acc);
    for (x, y) in xs.windows(2).zip(ys.windows(2)) {
        acc += 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
        out.push(acc);
    }
    out
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, 48)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_real(mut roots: Vec<Complex64>) -> Vec<f64> {
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        roots.iter().map(|z| z.re).collect()
    }

    #[test]
    fn roots_of_x_squared_minus_one() {
        let p = Polynomial::new(vec![-1.0, 0.0, 1.0]);
        let r = sorted_real(p.roots().unwrap());
        assert!((r[0] + 1.0).abs() < 1e-12);
        assert!((r[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn roots_of_expanded_quartic() {
        // (x-1)(x-2)(x-3)(x-4) = x^4 - 10x^3 + 35x^2 - 50x + 24
        let p = Polynomial::new(vec![24.0, -50.0, 35.0, -10.0, 1.0]);
        let roots = p.roots().unwrap();
        let norm = p.coeff_norm();
        for z in &roots {
            assert!(z.im.abs() < 1e-9);
            assert!(p.eval_complex(*z).norm() <= 1e-8 * norm);
        }
        let r = sorted_real(roots);
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn double_root_is_recovered() {
        // (x-1)^2 (x-2) = x^3 - 4x^2 + 5x - 2
        let p = Polynomial::new(vec![-2.0, 5.0, -4.0, 1.0]);
        let r = sorted_real(p.roots().unwrap());
        assert!((r[0] - 1.0).abs() < 1e-4);
        assert!((r[1] - 1.0).abs() < 1e-4);
        assert!((r[2] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn wildly_scaled_coefficients() {
        // Roots at 1e-5 scale, like the extremes of the inverse Stieltjes
        // transform.
        let roots = [-1.5e-4, -1.1e-4, -3.7e-5, -3.0e-5];
        let p = Polynomial::from_roots(&roots);
        let got = sorted_real(p.roots().unwrap());
        for (g, w) in got.iter().zip(roots) {
            assert!(((g - w) / w).abs() < 1e-8, "{g} vs {w}");
        }
    }

    #[test]
    fn degree_zero_is_rejected() {
        assert!(matches!(
            Polynomial::new(vec![3.0]).roots(),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            Polynomial::new(vec![3.0, 0.0]).roots(),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn halving_map_converges_to_zero() {
        let fp = damped_fixed_point(|x: f64| x / 2.0, 1.0, 1.0, 1e-12, 1000).unwrap();
        assert!(fp.value.abs() < 1e-11);
        assert!(fp.residual <= 1e-12);
    }

    #[test]
    fn cosine_fixed_point() {
        // Independent reference: plain undamped iteration run to exhaustion.
        let mut reference = 1.0_f64;
        for _ in 0..10_000 {
            reference = reference.cos();
        }
        let fp = damped_fixed_point(f64::cos, 1.0, 0.5, 1e-13, 10_000).unwrap();
        assert!((fp.value - reference).abs() < 1e-12);
        assert!((fp.value - 0.739_085).abs() < 1e-6);
    }

    #[test]
    fn damping_one_is_plain_iteration() {
        let map = |x: f64| 0.3 * x + 1.0;
        let tol = 1e-10;
        let mut x = 0.0;
        let mut steps = 0;
        while (map(x) - x).abs() > tol {
            x = map(x);
            steps += 1;
        }
        let fp = damped_fixed_point(map, 0.0, 1.0, tol, 1000).unwrap();
        assert_eq!(fp.iterations, steps);
        assert_eq!(fp.value, x);
    }

    #[test]
    fn bad_damping_is_rejected() {
        assert!(damped_fixed_point(|x: f64| x, 0.0, 0.0, 1e-9, 10).is_err());
        assert!(damped_fixed_point(|x: f64| x, 0.0, 1.5, 1e-9, 10).is_err());
    }

    #[test]
    fn bisection_examples() {
        assert!((bisect(|x| x - 0.5, 0.0, 1.0, 1e-12).unwrap() - 0.5).abs() < 1e-12);
        let r = bisect(|x| x * x - 2.0, 1.0, 2.0, 1e-8).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-5);
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-6),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn quadrature_rules() {
        let xs: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!((trapezoid(&xs, &ys) - 1.0 / 3.0).abs() < 1e-6);
        let cum = cumulative_trapezoid(&xs, &ys);
        assert_eq!(cum.len(), xs.len());
        assert!((cum[1000] - trapezoid(&xs, &ys)).abs() < 1e-15);
        let s = adaptive_simpson(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((s - 2.0).abs() < 1e-10);
    }
}
