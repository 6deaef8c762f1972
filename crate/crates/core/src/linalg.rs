//! Dense kernels: permanent, Cholesky factor, and twisted Green functions.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::homology::OneForm;

pub type Complex64 = Complex<f64>;

pub const MAX_PERMANENT_DIM: usize = 15;

/// Permanent by Ryser's inclusion-exclusion, visiting column subsets in Gray
/// code order so each step updates the row sums with one column.
pub fn permanent(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "permanent needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if n > MAX_PERMANENT_DIM {
        return Err(Error::DimensionTooLarge {
            n,
            max: MAX_PERMANENT_DIM,
        });
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mut row_sums = vec![0.0; n];
    let mut total = 0.0;
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let next = k ^ (k >> 1);
        let changed = (gray ^ next).trailing_zeros() as usize;
        let added = next & (1 << changed) != 0;
        gray = next;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if added {
                *s += m[(i, changed)];
            } else {
                *s -= m[(i, changed)];
            }
        }
        let prod: f64 = row_sums.iter().product();
        if (n - gray.count_ones() as usize).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(total)
}

/// Lower-triangular `L` with `L L^T = G`.
pub fn chol_factor(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if g.nrows() != g.ncols() {
        return Err(Error::InvalidInput("Cholesky needs a square matrix".into()));
    }
    g.clone()
        .cholesky()
        .map(|c| c.unpack())
        .ok_or(Error::NotPositiveDefinite)
}

/// `M_lambda - C o exp(2 pi i omega)`: conductances multiplied by the phase
/// of the one-form on each oriented edge.
pub fn twisted_energy(g: &WeightedGraph, omega: &OneForm) -> DMatrix<Complex64> {
    let n = g.vertex_count();
    DMatrix::from_fn(n, n, |x, y| {
        if x == y {
            Complex64::new(g.lambda(x), 0.0)
        } else {
            let c = g.conductance(x, y);
            if c == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                -Complex64::from_polar(c, 2.0 * PI * omega.get(x, y))
            }
        }
    })
}

#[derive(Debug, Clone)]
pub struct TwistedGreen {
    pub matrix: DMatrix<Complex64>,
    /// `det G^(2 pi i omega)`, real part.
    pub det: f64,
    /// Imaginary part of the determinant, zero up to rounding for a Hermitian
    /// matrix.
    pub det_imag: f64,
}

/// Twisted Green function `(M_lambda - C o exp(2 pi i omega))^-1` with its
/// determinant, computed by pivoted LU.
pub fn twist_green(g: &WeightedGraph, omega: &OneForm) -> Result<TwistedGreen> {
    let a = twisted_energy(g, omega);
    let lu = a.lu();
    let det_a = lu.determinant();
    if det_a.norm() == 0.0 {
        return Err(Error::Singular);
    }
    let inv = lu.try_inverse().ok_or(Error::Singular)?;
    let det = Complex64::new(1.0, 0.0) / det_a;
    Ok(TwistedGreen {
        matrix: inv,
        det: det.re,
        det_imag: det.im,
    })
}

/// `det(M_lambda - C) / det(M_lambda - C o exp(2 pi i omega))`, which is
/// `det G^(2 pi i omega) / det G`. Uses a complex Cholesky factorization, so
/// the result is real and positive by construction; an error means the
/// twisted matrix lost positive definiteness.
pub fn twisted_det_ratio(g: &WeightedGraph, omega: &OneForm, log_det_energy: f64) -> Result<f64> {
    let a = twisted_energy(g, omega);
    let chol = a.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let log_det_twisted: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.re.ln()).sum::<f64>();
    Ok((log_det_energy - log_det_twisted).exp())
}

/// `ln det` of a symmetric positive definite matrix.
pub fn log_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}
