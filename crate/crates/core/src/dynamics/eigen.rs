//! Dense eigenvalues for the small (<= 16) real matrices this crate needs.
//!
//! The heavy lifting (Hessenberg reduction plus implicitly shifted QR) is
//! delegated to nalgebra's real Schur decomposition; this wrapper pins the
//! ordering convention and offers residual verification of eigenpairs via
//! inverse iteration.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_DIM: usize = 16;
const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 200;

/// All eigenvalues of a square real matrix, sorted by descending real part
/// (ties by descending imaginary part).
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
    if m.nrows() > MAX_DIM {
        return Err(Error::Parse(format!(
            "eigenvalue solver is limited to dimension {MAX_DIM}, got {}",
            m.nrows()
        )));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or(Error::EigenNoConvergence)?;
    let eigs = schur.complex_eigenvalues();
    let mut out: Vec<Complex64> = eigs.iter().map(|z| Complex64::new(z.re, z.im)).collect();
    sort_eigenvalues(&mut out);
    Ok(out)
}

pub fn sort_eigenvalues(eigs: &mut [Complex64]) {
    eigs.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Residual `||M v - lambda v||_2` of the best eigenvector for `lambda`,
/// found by a few steps of inverse iteration on the shifted matrix.
pub fn eigenpair_residual(m: &DMatrix<f64>, lambda: Complex64) -> f64 {
    let n = m.nrows();
    let mc = m.map(|v| Complex64::new(v, 0.0));
    // tiny regularisation keeps the shifted solve nonsingular
    let shift = lambda + Complex64::new(1e-12 * (1.0 + m.amax()), 0.0);
    let mut shifted = mc.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let lu = shifted.lu();
    let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0 / (1.0 + i as f64), 0.1 * i as f64));
    v /= Complex64::new(v.norm(), 0.0);
    for _ in 0..4 {
        let Some(next) = lu.solve(&v) else { break };
        let norm = next.norm();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        v = next / Complex64::new(norm, 0.0);
    }
    (&mc * &v - &v * lambda).norm()
}

/// Verify every eigenvalue to residual `tol * ||M||`; errors on failure.
pub fn verify_eigenpairs(m: &DMatrix<f64>, eigs: &[Complex64], tol: f64) -> Result<()> {
    let scale = m.amax().max(1e-300);
    for &lambda in eigs {
        let res = eigenpair_residual(m, lambda);
        if res > tol * scale {
            return Err(Error::EigenNoConvergence);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_block_gives_pure_imaginary_pair() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let e = eigenvalues(&m).unwrap();
        assert!((e[0] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        assert!((e[1] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn shear_block_at_hopf() {
        // [[0.2, -1], [0.2, -0.2]]: trace 0, det 0.16 -> +-0.4i
        let m = DMatrix::from_row_slice(2, 2, &[0.2, -1.0, 0.2, -0.2]);
        let e = eigenvalues(&m).unwrap();
        assert!(e[0].re.abs() < 1e-12);
        assert!((e[0].im - 0.4).abs() < 1e-12);
        assert!((e[1].im + 0.4).abs() < 1e-12);
    }

    #[test]
    fn upper_triangular() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        let e = eigenvalues(&m).unwrap();
        assert!((e[0].re - 3.0).abs() < 1e-12);
        assert!((e[1].re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn similarity_invariance_under_permutation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.random_range(2..9);
            let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            // random permutation similarity
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let p = DMatrix::from_fn(n, n, |i, j| if perm[i] == j { 1.0 } else { 0.0 });
            let sim = &p * &m * p.transpose();
            let mut e1 = eigenvalues(&m).unwrap();
            let mut e2 = eigenvalues(&sim).unwrap();
            sort_eigenvalues(&mut e1);
            sort_eigenvalues(&mut e2);
            for (a, b) in e1.iter().zip(&e2) {
                assert!((a - b).norm() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn eigenpair_residuals_verify() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let m = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
        let e = eigenvalues(&m).unwrap();
        verify_eigenpairs(&m, &e, 1e-10).unwrap();
    }

    #[test]
    fn dimension_guard() {
        let m = DMatrix::<f64>::zeros(17, 17);
        assert!(eigenvalues(&m).is_err());
    }
}
