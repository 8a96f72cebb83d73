//! Canonical-system view of the Schrödinger equation in its own gauge
//! (`A = diag(1, 0)`, `B = diag(V, -1)`): j-forms, the kernel identity
//!
//! ```text
//! T(x,w)* j T(x,z) - j = (conj w - z) ∫_0^x T(s,w)* A T(s,z) ds
//! ```
//!
//! and the Hermite-Biehler function `E_L = v(L,·) + i v'(L,·)`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::kernel::{is_near_diagonal, kernel_boundary, row_gram, KernelError};
use crate::ode::{j_matrix, Mat2, OdeError, Solver, DEFAULT_TOL};
use crate::potential::Potential;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CanonicalError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("need 0 <= x1 <= x2, got x1 = {x1}, x2 = {x2}")]
    Interval { x1: f64, x2: f64 },
    #[error("sample {0} is not in the open upper half-plane")]
    Sample(Complex64),
}

/// `i (T*(x2) j T(x2) - T*(x1) j T(x1))` at one energy, with the quadrature
/// `2 Im z ∫_{x1}^{x2} T* A T` of the same matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JForm {
    pub x1: f64,
    pub x2: f64,
    pub z: Complex64,
    pub matrix: Mat2,
    pub quadrature: Mat2,
}

/// Eigenvalues of a Hermitian 2×2 matrix, ascending.
pub fn hermitian_eigenvalues(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (mean - rad, mean + rad)
}

pub const PSD_TOL: f64 = 1e-10;

impl JForm {
    pub fn hermitian_defect(&self) -> f64 {
        (self.matrix - self.matrix.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix).0
    }

    /// Minimum eigenvalue at least `-PSD_TOL` relative to the matrix size.
    pub fn is_psd(&self) -> bool {
        let scale = self.matrix.iter().map(|c| c.norm()).fold(1.0, f64::max);
        self.min_eigenvalue() >= -PSD_TOL * scale
    }

    /// Largest entrywise gap between the two computations.
    pub fn factorization_defect(&self) -> f64 {
        (self.matrix - self.quadrature).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

fn t_of(phi: &Mat2) -> Mat2 {
    Mat2::new(phi[(0, 0)], -phi[(0, 1)], -phi[(1, 0)], phi[(1, 1)])
}

pub fn j_form(potential: &Potential, z: Complex64, x1: f64, x2: f64) -> Result<JForm, CanonicalError> {
    if !(0.0 <= x1 && x1 <= x2) {
        return Err(CanonicalError::Interval { x1, x2 });
    }
    let solver = Solver::new(potential);
    let i = Complex64::new(0.0, 1.0);
    let j = j_matrix();
    let phi1 = solver.fundamental(z, x1)?.matrix();
    let phi2 = solver.fundamental(z, x2)?.matrix();
    let (t1, t2) = (t_of(&phi1), t_of(&phi2));
    let matrix = (t2.adjoint() * j * t2 - t1.adjoint() * j * t1) * i;

    let quadrature = if x2 > x1 {
        let phi1_conj = solver.fundamental(z.conj(), x1)?.matrix();
        let g = row_gram(potential, x1, x2, z, z.conj(), phi1, phi1_conj, 4.0, DEFAULT_TOL)?;
        // rows of T are (v, -u): ∫T*AT = S G S with S = diag(1, -1)
        let s = Mat2::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0));
        s * g.value * s * Complex64::new(2.0 * z.im, 0.0)
    } else {
        Mat2::zeros()
    };
    Ok(JForm { x1, x2, z, matrix, quadrature })
}

/// `K_L(z, w)` as the `(1,1)` entry of `(T(L,w)* j T(L,z) - j)/(conj w - z)`.
/// Near the diagonal it falls back to the midpoint route of the boundary
/// formula.
pub fn kernel_via_jform(potential: &Potential, length: f64, z: Complex64, w: Complex64) -> Result<Complex64, CanonicalError> {
    if is_near_diagonal(length, z, w) {
        return Ok(kernel_boundary(potential, length, z, w)?.value);
    }
    let solver = Solver::new(potential);
    let tz = t_of(&solver.fundamental(z, length)?.matrix());
    let tw = t_of(&solver.fundamental(w, length)?.matrix());
    let form = tw.adjoint() * j_matrix() * tz - j_matrix();
    Ok(form[(0, 0)] / (w.conj() - z))
}

/// `E_L(z)` and `E_L^#(z) = conj(E_L(conj z))`, each from its own frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HermiteBiehler {
    pub length: f64,
    pub z: Complex64,
    pub e_value: Complex64,
    pub e_sharp: Complex64,
}

impl HermiteBiehler {
    /// `|E^#(z)| / |E(z)|`; infinite when `E(z) = 0`.
    pub fn ratio(&self) -> f64 {
        let e = self.e_value.norm();
        if e == 0.0 {
            f64::INFINITY
        } else {
            self.e_sharp.norm() / e
        }
    }
}

pub fn hermite_biehler(potential: &Potential, length: f64, z: Complex64) -> Result<HermiteBiehler, CanonicalError> {
    let solver = Solver::new(potential);
    let i = Complex64::new(0.0, 1.0);
    let p = solver.fundamental(z, length)?;
    let q = solver.fundamental(z.conj(), length)?;
    // common scale keeps the ratio exact when magnitudes overflow
    let shift = p.log_scale.max(q.log_scale);
    let fp = Complex64::new((p.log_scale - shift).exp(), 0.0);
    let fq = Complex64::new((q.log_scale - shift).exp(), 0.0);
    let e_value = (p.m[(0, 0)] + i * p.m[(1, 0)]) * fp;
    let e_sharp = ((q.m[(0, 0)] + i * q.m[(1, 0)]) * fq).conj();
    Ok(HermiteBiehler { length, z, e_value, e_sharp })
}

pub const HB_SLACK: f64 = 1e-12;

/// Samples where `|E^#/E| > 1 + HB_SLACK` (including zeros of `E`).
pub fn hb_violations(potential: &Potential, length: f64, samples: &[Complex64]) -> Result<Vec<HermiteBiehler>, CanonicalError> {
    let mut out = Vec::new();
    for &z in samples {
        if !(z.im > 0.0) {
            return Err(CanonicalError::Sample(z));
        }
        let hb = hermite_biehler(potential, length, z)?;
        if !(hb.ratio() <= 1.0 + HB_SLACK) {
            out.push(hb);
        }
    }
    Ok(out)
}

/// True iff `E_L` satisfies the Hermite-Biehler inequality at every sample.
pub fn hb_check(potential: &Potential, length: f64, samples: &[Complex64]) -> Result<bool, CanonicalError> {
    Ok(hb_violations(potential, length, samples)?.is_empty())
}
