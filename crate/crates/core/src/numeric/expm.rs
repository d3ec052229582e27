use nalgebra::DMatrix;

use crate::Complex64;

/// Matrix exponential by scaling and squaring with a degree-18 Taylor
/// polynomial. Intended for the small (2×2, 4×4) matrices used here.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm1 > 0.25 { (norm1 / 0.25).log2().ceil() as i32 } else { 0 };
    let scaled = a * Complex64::new(0.5f64.powi(s), 0.0);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=18 {
        term = &term * &scaled * Complex64::new(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(c·H)` for Hermitian `H` via its eigendecomposition.
pub fn expm_hermitian(h: &DMatrix<Complex64>, c: Complex64) -> DMatrix<Complex64> {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (c * l).exp()));
    v * d * v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    #[test]
    fn exp_of_pauli_x_rotation() {
        let x = DMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        let theta = 1.3;
        let e = expm(&(&x * c64(0.0, -theta)));
        assert!((e[(0, 0)] - c64(theta.cos(), 0.0)).norm() < 1e-14);
        assert!((e[(0, 1)] - c64(0.0, -theta.sin())).norm() < 1e-14);
        let eh = expm_hermitian(&x, c64(0.0, -theta));
        assert!((&e - &eh).norm() < 1e-13);
    }

    #[test]
    fn hermitian_exponential_inverse_pair() {
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[c64(0.3, 0.0), c64(0.2, -0.7), c64(0.2, 0.7), c64(-1.1, 0.0)],
        );
        let p = expm_hermitian(&h, c64(0.0, 5.0)) * expm_hermitian(&h, c64(0.0, -5.0));
        assert!((p - DMatrix::identity(2, 2)).norm() < 1e-12);
    }
}
