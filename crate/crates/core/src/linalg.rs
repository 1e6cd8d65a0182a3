//! Complex dense linear algebra and special-function kernels.
//!
//! Matrices are `nalgebra` dense complex matrices. Eigendecomposition is
//! delegated to `nalgebra`'s Hermitian solver and then normalized here:
//! eigenvalues are sorted in descending order and every eigenvector's phase
//! is fixed so that its largest-magnitude entry is real and positive.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance used when checking that an input is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default relative threshold for truncating small eigenvalues of the
/// partial sector covariance.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Eigenpairs of a Hermitian matrix, sorted by descending eigenvalue.
///
/// `vectors` has one orthonormal column per entry of `values`. A truncated
/// system keeps only the leading columns, so `vectors` may be `n x r`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenSystem {
    /// Number of retained eigenpairs.
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// Ambient dimension of the eigenvectors.
    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    /// Keeps the eigenpairs with `value >= rel_tol * value_max` and `value > 0`.
    pub fn truncated(&self, rel_tol: f64) -> EigenSystem {
        let max = self.values.first().copied().unwrap_or(0.0);
        let keep = if max > 0.0 {
            self.values
                .iter()
                .take_while(|&&v| v > 0.0 && v >= rel_tol * max)
                .count()
        } else {
            0
        };
        EigenSystem {
            values: self.values[..keep].to_vec(),
            vectors: self.vectors.columns(0, keep).into_owned(),
        }
    }

    /// Rebuilds `V diag(values) V^H`.
    pub fn reassemble(&self) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for (r, &value) in self.values.iter().enumerate() {
            let col = self.vectors.column(r);
            out.ger(Complex64::new(value, 0.0), &col, &col.conjugate(), Complex64::new(1.0, 0.0));
        }
        hermitize(&mut out);
        out
    }
}

/// Largest entry magnitude of `a`.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// `max |A - A^H|`.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Replaces `A` with `(A + A^H) / 2`, making it exactly Hermitian.
pub fn hermitize(a: &mut CMatrix) {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
}

fn check_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    Ok(a.nrows())
}

/// Checks that `a` is square, finite and Hermitian within [`HERMITIAN_TOL`].
pub fn check_hermitian(a: &CMatrix) -> Result<()> {
    check_square(a)?;
    let tolerance = HERMITIAN_TOL * max_abs(a);
    let deviation = hermitian_deviation(a);
    if deviation > tolerance {
        return Err(Error::NotHermitian {
            deviation,
            tolerance,
        });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back in descending order. Each eigenvector is rotated so
/// that its largest-magnitude entry (first one on ties) is real and positive,
/// which makes the output deterministic for a given input.
pub fn hermitian_eig(a: &CMatrix) -> Result<EigenSystem> {
    check_hermitian(a)?;
    let n = a.nrows();
    let mut sym = a.clone();
    hermitize(&mut sym);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let mut vectors = CMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        let mut best = -1.0;
        for (i, z) in col.iter().enumerate() {
            let mag = z.norm();
            if mag > best {
                best = mag;
                pivot = i;
            }
        }
        let phase = if best > 0.0 {
            col[pivot].conj() / best
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            vectors[(i, dst)] = col[i] * phase;
        }
        vectors[(pivot, dst)] = Complex64::new(vectors[(pivot, dst)].norm(), 0.0);
    }
    Ok(EigenSystem { values, vectors })
}

/// Inverse of a Hermitian positive-definite matrix via Cholesky.
pub fn hermitian_inverse(a: &CMatrix) -> Result<CMatrix> {
    check_square(a)?;
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("Cholesky factorization failed".into()))?;
    let l = chol.l_dirty();
    let diag: Vec<f64> = (0..a.nrows()).map(|i| l[(i, i)].re).collect();
    let hi = diag.iter().cloned().fold(0.0, f64::max);
    let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    // squared pivot ratio bounds the reciprocal condition number from above
    if a.nrows() > 0 && (lo / hi).powi(2) < f64::EPSILON * a.nrows() as f64 {
        return Err(Error::Singular(format!(
            "matrix is numerically singular (pivot ratio {:.3e})",
            lo / hi
        )));
    }
    let mut inv = chol.inverse();
    hermitize(&mut inv);
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular("inverse has non-finite entries".into()));
    }
    Ok(inv)
}

/// `‖A B − I‖_F`.
pub fn identity_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    (a * b - CMatrix::identity(n, n)).norm()
}

/// Bessel function of the first kind, order zero.
///
/// Power series below `|x| = 12`, Hankel asymptotic expansion above. The
/// two branches agree with each other to better than 1e-10 at the seam.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < 12.0 {
        j0_series(x)
    } else {
        j0_asymptotic(x)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        let kf = k as f64;
        term *= -q / (kf * kf);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn j0_asymptotic(x: f64) -> f64 {
    // u_k = prod_{j<=k} -(2j-1)^2 / (8 j x); P takes even k, Q odd k, with
    // alternating signs on each.
    let mut p = 1.0;
    let mut q = 0.0;
    let mut u = 1.0_f64;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = u * (-(odd * odd)) / (k as f64 * 8.0 * x);
        if next.abs() >= prev || next.abs() < 1e-18 {
            break;
        }
        prev = next.abs();
        u = next;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * u;
        } else {
            q += sign * u;
        }
    }
    let chi = x - std::f64::consts::FRAC_PI_4;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Real symmetric `M x M` matrix with entries `J0(|l − m| π)`.
pub fn bessel_matrix(m: usize) -> DMatrix<f64> {
    let lags: Vec<f64> = (0..m)
        .map(|d| bessel_j0(d as f64 * std::f64::consts::PI))
        .collect();
    DMatrix::from_fn(m, m, |l, c| lags[l.abs_diff(c)])
}

/// Inverse of `2π γ_L I + (γ_H − γ_L) E Ξ E^H` through the matrix inversion
/// lemma, where `eig` carries `E` (columns) and `Ξ` (values).
///
/// `dim` is the array size; it fixes the output shape when `eig` is empty.
pub fn woodbury_inverse(
    gamma_low: f64,
    gamma_high: f64,
    eig: &EigenSystem,
    dim: usize,
) -> Result<CMatrix> {
    if !(gamma_low > 0.0) || !(gamma_high > gamma_low) || !gamma_high.is_finite() {
        return Err(Error::InvalidLevels {
            low: gamma_low,
            high: gamma_high,
        });
    }
    if eig.rank() > 0 && eig.dim() != dim {
        return Err(Error::InvalidArgument(format!(
            "eigenvectors have {} rows, expected {dim}",
            eig.dim()
        )));
    }
    if eig.values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(
            "retained eigenvalues must be positive".into(),
        ));
    }
    let floor = 2.0 * std::f64::consts::PI * gamma_low;
    let mut inv = CMatrix::identity(dim, dim);
    let r = eig.rank();
    if r > 0 {
        let e = &eig.vectors;
        let ratio = floor / (gamma_high - gamma_low);
        let mut core = e.adjoint() * e;
        for (i, &xi) in eig.values.iter().enumerate() {
            core[(i, i)] += Complex64::new(ratio / xi, 0.0);
        }
        let core_inv = hermitian_inverse(&core)?;
        inv -= e * core_inv * e.adjoint();
    }
    inv /= Complex64::new(floor, 0.0);
    hermitize(&mut inv);
    Ok(inv)
}

/// The matrix whose inverse [`woodbury_inverse`] computes.
pub fn two_level_matrix(gamma_low: f64, gamma_high: f64, eig: &EigenSystem, dim: usize) -> CMatrix {
    let floor = 2.0 * std::f64::consts::PI * gamma_low;
    let mut out = CMatrix::identity(dim, dim) * Complex64::new(floor, 0.0);
    if eig.rank() > 0 {
        out += eig.reassemble() * Complex64::new(gamma_high - gamma_low, 0.0);
    }
    hermitize(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let a = CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let mut h = &a + a.adjoint();
        hermitize(&mut h);
        h
    }

    fn random_psd(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let b = CMatrix::from_fn(n, rank, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let mut p = &b * b.adjoint();
        hermitize(&mut p);
        p
    }

    fn ula(m: usize, u: f64) -> CVector {
        CVector::from_fn(m, |i, _| Complex64::from_polar(1.0, -(i as f64) * u))
    }

    /// (1/π)∫_0^π cos(x sin t) dt, periodic trapezoid.
    fn j0_quadrature(x: f64) -> f64 {
        let n = 4000;
        let h = PI / n as f64;
        let mut s = 0.5 * (1.0 + 1.0);
        for i in 1..n {
            s += (x * (i as f64 * h).sin()).cos();
        }
        s * h / PI
    }

    #[test]
    fn eig_identity() {
        let eig = hermitian_eig(&CMatrix::identity(4, 4)).unwrap();
        assert_eq!(eig.values, vec![1.0; 4]);
        let v = &eig.vectors;
        assert!((v.adjoint() * v - CMatrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn eig_rank_one_plus_noise() {
        let m = 8;
        let a = ula(m, 0.7);
        let mut r = &a * a.adjoint() * Complex64::new(3.0, 0.0);
        r += CMatrix::identity(m, m) * Complex64::new(0.5, 0.0);
        hermitize(&mut r);
        let eig = hermitian_eig(&r).unwrap();
        assert!((eig.values[0] - (m as f64 * 3.0 + 0.5)).abs() < 1e-10);
        for &v in &eig.values[1..] {
            assert!((v - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn eig_random_residual_and_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 8, 20] {
            let a = random_hermitian(n, &mut rng);
            let eig = hermitian_eig(&a).unwrap();
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
            let v = &eig.vectors;
            let lam = CMatrix::from_diagonal(&CVector::from_iterator(
                n,
                eig.values.iter().map(|&x| Complex64::new(x, 0.0)),
            ));
            assert!((&a * v - v * lam).norm() <= 1e-9 * a.norm());
            assert!((v.adjoint() * v - CMatrix::identity(n, n)).norm() <= 1e-10 * n as f64);
            let trace: f64 = (0..n).map(|i| a[(i, i)].re).sum();
            let sum: f64 = eig.values.iter().sum();
            assert!((trace - sum).abs() <= 1e-9 * trace.abs().max(a.norm()));
        }
    }

    #[test]
    fn eig_phase_is_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_hermitian(6, &mut rng);
        let eig = hermitian_eig(&a).unwrap();
        for c in 0..6 {
            let col = eig.vectors.column(c);
            let (idx, _) = col
                .iter()
                .enumerate()
                .fold((0, -1.0), |(bi, bm), (i, z)| if z.norm() > bm { (i, z.norm()) } else { (bi, bm) });
            assert_eq!(col[idx].im, 0.0);
            assert!(col[idx].re > 0.0);
        }
        assert_eq!(eig, hermitian_eig(&a).unwrap());
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut a = CMatrix::identity(3, 3);
        a[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(hermitian_eig(&a), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            hermitian_eig(&CMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn eig_psd_values_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_psd(10, 3, &mut rng);
        let eig = hermitian_eig(&p).unwrap();
        let scale = p.norm();
        assert!(eig.values.iter().all(|&v| v >= -1e-10 * scale));
    }

    #[test]
    fn truncation_keeps_leading_pairs() {
        let eig = EigenSystem {
            values: vec![4.0, 1.0, 1e-9, 0.0],
            vectors: CMatrix::identity(4, 4),
        };
        let t = eig.truncated(1e-8);
        assert_eq!(t.values, vec![4.0, 1.0]);
        assert_eq!(t.vectors.ncols(), 2);
        assert_eq!(t.dim(), 4);
    }

    #[test]
    fn j0_known_points() {
        assert_eq!(bessel_j0(0.0), 1.0);
        assert!(bessel_j0(2.404825557695773).abs() <= 1e-9);
        let oracle = j0_quadrature(PI);
        assert!((bessel_j0(PI) - oracle).abs() <= 1e-9);
        assert!((bessel_j0(-PI) - bessel_j0(PI)).abs() < 1e-15);
    }

    #[test]
    fn j0_matches_quadrature_across_range() {
        // covers both branches and (M-1)π for M up to 256
        let mut x = 0.0;
        while x < 255.0 * PI {
            let err = (bessel_j0(x) - j0_quadrature(x)).abs();
            assert!(err <= 1e-10, "x = {x}: err {err:e}");
            x += 0.737;
        }
        for k in 0..256 {
            let x = k as f64 * PI;
            assert!((bessel_j0(x) - j0_quadrature(x)).abs() <= 1e-10);
        }
    }

    #[test]
    fn j0_continuous_at_branch_seam() {
        let lo = bessel_j0(12.0 - 1e-12);
        let hi = bessel_j0(12.0);
        assert!((lo - hi).abs() < 1e-10);
    }

    #[test]
    fn bessel_matrix_structure() {
        assert_eq!(bessel_matrix(1), DMatrix::from_element(1, 1, 1.0));
        let b = bessel_matrix(7);
        for i in 0..7 {
            assert_eq!(b[(i, i)], 1.0);
            for j in 0..7 {
                assert_eq!(b[(i, j)], b[(j, i)]);
            }
        }
    }

    #[test]
    fn bessel_matrix_equals_outer_product_integral() {
        // (1/2π) ∫_{-π}^{π} a(θ) a(θ)^H dθ with a half-wavelength ULA,
        // 10^5-point trapezoid.
        let m = 4;
        let n = 100_000;
        let h = 2.0 * PI / n as f64;
        let mut acc = CMatrix::zeros(m, m);
        for i in 0..=n {
            let theta = -PI + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let a = ula(m, PI * theta.sin());
            acc += (&a * a.adjoint()) * Complex64::new(w * h, 0.0);
        }
        acc /= Complex64::new(2.0 * PI, 0.0);
        let b = bessel_matrix(m);
        for l in 0..m {
            for c in 0..m {
                assert!((acc[(l, c)].re - b[(l, c)]).abs() <= 1e-6);
                assert!(acc[(l, c)].im.abs() <= 1e-6);
            }
        }
    }

    fn seeded_partial(m: usize, rank: usize, rng: &mut ChaCha8Rng) -> EigenSystem {
        let p = random_psd(m, rank, rng);
        hermitian_eig(&p).unwrap().truncated(DEFAULT_RANK_TOL)
    }

    #[test]
    fn woodbury_empty_update_is_scaled_identity() {
        let eig = EigenSystem {
            values: vec![],
            vectors: CMatrix::zeros(5, 0),
        };
        let inv = woodbury_inverse(0.3, 10.0, &eig, 5).unwrap();
        let expect = CMatrix::identity(5, 5) / Complex64::new(2.0 * PI * 0.3, 0.0);
        assert!((inv - expect).norm() < 1e-14);
    }

    #[test]
    fn woodbury_matches_dense_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eig = seeded_partial(12, 3, &mut rng);
        assert_eq!(eig.rank(), 3);
        let r = two_level_matrix(0.2, 50.0, &eig, 12);
        let inv = woodbury_inverse(0.2, 50.0, &eig, 12).unwrap();
        assert!(identity_residual(&r, &inv) <= 1e-8);
        let dense = hermitian_inverse(&r).unwrap();
        assert!((&inv - &dense).norm() <= 1e-8 * dense.norm());
    }

    #[test]
    fn woodbury_homogeneous_in_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let eig = seeded_partial(8, 2, &mut rng);
        let base = woodbury_inverse(0.1, 3.0, &eig, 8).unwrap();
        let c = 7.5;
        let scaled = woodbury_inverse(0.1 * c, 3.0 * c, &eig, 8).unwrap();
        assert!((scaled * Complex64::new(c, 0.0) - &base).norm() <= 1e-12 * base.norm());
    }

    #[test]
    fn woodbury_rejects_bad_levels() {
        let eig = EigenSystem {
            values: vec![],
            vectors: CMatrix::zeros(3, 0),
        };
        assert!(matches!(
            woodbury_inverse(1.0, 1.0, &eig, 3),
            Err(Error::InvalidLevels { .. })
        ));
        assert!(matches!(
            woodbury_inverse(0.0, 1.0, &eig, 3),
            Err(Error::InvalidLevels { .. })
        ));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(100))]
        #[test]
        fn woodbury_inverts_two_level_matrix(
            seed in 0u64..u64::MAX,
            m in 2usize..24,
            rank_frac in 0.0f64..1.0,
            low in 1e-3f64..10.0,
            ratio in 1.5f64..1e5,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rank = 1 + ((m - 1) as f64 * rank_frac) as usize;
            let eig = seeded_partial(m, rank, &mut rng);
            let high = low * ratio;
            let r = two_level_matrix(low, high, &eig, m);
            let inv = woodbury_inverse(low, high, &eig, m).unwrap();
            proptest::prop_assert!(identity_residual(&r, &inv) <= 1e-8);
        }

        #[test]
        fn eig_trace_matches_sum(seed in 0u64..u64::MAX, n in 1usize..16) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(n, &mut rng);
            let eig = hermitian_eig(&a).unwrap();
            let trace: f64 = (0..n).map(|i| a[(i, i)].re).sum();
            let sum: f64 = eig.values.iter().sum();
            proptest::prop_assert!((trace - sum).abs() <= 1e-9 * a.norm().max(1e-300));
        }
    }
}
