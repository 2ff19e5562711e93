//! Small symmetric-matrix helpers shared across the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues allowed to dip this far below zero before a matrix is
/// rejected as not PSD; anything in `[-PSD_EIGENVALUE_TOL, 0)` is treated as
/// rounding noise and clipped to 0 where a factorization is needed.
pub const PSD_EIGENVALUE_TOL: f64 = 1e-12;

/// Absolute symmetry slack relative to the largest entry.
const SYMMETRY_TOL: f64 = 1e-12;

pub fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = 1.0 + a.amax();
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NotPsd(format!(
                    "asymmetric at ({i},{j}): {} vs {}",
                    a[(i, j)],
                    a[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Eigenvalues of the symmetrized matrix, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
    DVector::from_vec(ev)
}

/// Accept matrices whose smallest eigenvalue is at least `-PSD_EIGENVALUE_TOL`.
pub fn check_psd(a: &DMatrix<f64>) -> Result<()> {
    let ev = sym_eigenvalues(a);
    let min = ev[0];
    if min < -PSD_EIGENVALUE_TOL {
        return Err(Error::NotPsd(format!("smallest eigenvalue {min}")));
    }
    Ok(())
}

/// Symmetric square root with near-zero negative eigenvalues clipped to 0.
pub fn psd_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(a)?;
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut root = DVector::zeros(eig.eigenvalues.len());
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l < -PSD_EIGENVALUE_TOL {
            return Err(Error::NotPsd(format!("eigenvalue {l} in square root")));
        }
        root[k] = l.max(0.0).sqrt();
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&root) * q.transpose())
}

/// Bilinear (not sesquilinear) form `w' A w` for complex `w` and real `A`.
pub fn bilinear_complex(a: &DMatrix<f64>, w: &[Complex64]) -> Complex64 {
    let n = a.nrows();
    debug_assert_eq!(w.len(), n);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for l in 0..n {
            row += a[(k, l)] * w[l];
        }
        acc += w[k] * row;
    }
    acc
}
