//! Christoffel-Darboux kernel `K_L(z, w) = ∫_0^L v(x,z) conj(v(x,w)) dx`,
//! the Christoffel function and the extremal functions of the free problem.
//!
//! For real potentials `conj(v(x, w)) = v(x, conj w)`, so every evaluation
//! works with the pair of energies `(z, conj w)`.

use num_complex::Complex64;
use std::sync::OnceLock;
use thiserror::Error;

use crate::ode::{cell_trig, sqrt_upper, Mat2, OdeError, Solver, DEFAULT_TOL};
use crate::potential::{PieceKind, Potential};
use crate::quadrature::gauss_legendre_20;
use crate::rk::{self, StepControl};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("length must be positive, got {0}")]
    Length(f64),
    #[error("quadrature error {err:e} exceeds requested {tol:e}")]
    Tolerance { err: f64, tol: f64 },
    #[error("|conj(w) - z| = {gap:e} is too small for the boundary quotient; use the diagonal route")]
    NearDiagonal { gap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum KernelMethod {
    Quadrature,
    BoundaryFormula,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval {
    pub length: f64,
    pub z: Complex64,
    pub w: Complex64,
    pub value: Complex64,
    pub method: KernelMethod,
    pub err_estimate: f64,
}

fn check_length(length: f64) -> Result<(), KernelError> {
    if length > 0.0 && length.is_finite() {
        Ok(())
    } else {
        Err(KernelError::Length(length))
    }
}

/// Flat-cell propagator `[[C, S], [-qS, C]]` applied to a fundamental matrix.
fn advance_flat(z: Complex64, d: f64, h: f64, phi: &Mat2) -> Mat2 {
    let q = z - d;
    let t = cell_trig(q, h);
    Mat2::new(t.c, t.s, -q * t.s, t.c) * phi
}

/// `G[i][k] = ∫ Φ_{0i}(x, y) Φ_{0k}(x, z) dx`, i.e. the products of the first
/// rows `(v, u)` at two energies, with a resolution-difference error estimate
/// and `∫ |v(y) v(z)|` for scaling.
pub(crate) struct Gram {
    pub value: Mat2,
    pub err: f64,
    pub mass: f64,
}

fn outer_rows(phi_y: &Mat2, phi_z: &Mat2) -> Mat2 {
    Mat2::new(
        phi_y[(0, 0)] * phi_z[(0, 0)],
        phi_y[(0, 0)] * phi_z[(0, 1)],
        phi_y[(0, 1)] * phi_z[(0, 0)],
        phi_y[(0, 1)] * phi_z[(0, 1)],
    )
}

fn mat_err(m: &Mat2) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Flat piece, Gauss-Legendre panels with `|k| h ≤ kappa`.
fn flat_gram(z: Complex64, y: Complex64, d: f64, h: f64, phi_z: &Mat2, phi_y: &Mat2, kappa: f64) -> (Mat2, f64) {
    let rule = gauss_legendre_20();
    let kmax = sqrt_upper(z - d).norm().max(sqrt_upper(y - d).norm()).max(1e-3);
    let panels = (h * kmax / kappa).ceil().max(1.0) as usize;
    let width = h / panels as f64;
    let mut acc = Mat2::zeros();
    let mut mass = 0.0;
    for p in 0..panels {
        let lo = p as f64 * width;
        let half = 0.5 * width;
        for (node, weight) in rule.nodes.iter().zip(&rule.weights) {
            let t = lo + half * (node + 1.0);
            let f = outer_rows(&advance_flat(y, d, t, phi_y), &advance_flat(z, d, t, phi_z)) * Complex64::new(weight * half, 0.0);
            mass += f[(0, 0)].norm();
            acc += f;
        }
    }
    (acc, mass)
}

fn pack(m: &Mat2, out: &mut [f64]) {
    for (i, c) in m.iter().enumerate() {
        out[2 * i] = c.re;
        out[2 * i + 1] = c.im;
    }
}

fn unpack(s: &[f64]) -> Mat2 {
    Mat2::from_iterator((0..4).map(|i| Complex64::new(s[2 * i], s[2 * i + 1])))
}

/// Smooth piece: both fundamental matrices and the running integrals as one
/// real system of dimension 25.
fn smooth_gram(potential: &Potential, z: Complex64, y: Complex64, a: f64, b: f64, phi_z: &Mat2, phi_y: &Mat2, tol: f64) -> Result<(Mat2, Mat2, Mat2, f64), OdeError> {
    let mut y0 = [0.0; 25];
    pack(phi_z, &mut y0[0..8]);
    pack(phi_y, &mut y0[8..16]);
    let rhs = |x: f64, s: &[f64; 25]| {
        let pot = potential.evaluate(x).unwrap_or(0.0);
        let one = Complex64::new(1.0, 0.0);
        let pz = unpack(&s[0..8]);
        let py = unpack(&s[8..16]);
        let az = Mat2::new(Complex64::new(0.0, 0.0), one, pot - z, Complex64::new(0.0, 0.0));
        let ay = Mat2::new(Complex64::new(0.0, 0.0), one, pot - y, Complex64::new(0.0, 0.0));
        let g = outer_rows(&py, &pz);
        let mut out = [0.0; 25];
        pack(&(az * pz), &mut out[0..8]);
        pack(&(ay * py), &mut out[8..16]);
        pack(&g, &mut out[16..24]);
        out[24] = g[(0, 0)].norm();
        out
    };
    let ctrl = StepControl { rtol: tol, atol: tol, h_max: b - a };
    let out = rk::integrate(rhs, a, b, y0, ctrl, |_, _| {}).map_err(|e| OdeError::StepUnderflow { x: e.x })?;
    Ok((unpack(&out[0..8]), unpack(&out[8..16]), unpack(&out[16..24]), out[24]))
}

/// Row products integrated over `[a, b]`, starting from the fundamental
/// matrices `phi_z`, `phi_y` at `a`.
pub(crate) fn row_gram(
    potential: &Potential,
    a: f64,
    b: f64,
    z: Complex64,
    y: Complex64,
    mut phi_z: Mat2,
    mut phi_y: Mat2,
    kappa: f64,
    tol: f64,
) -> Result<Gram, OdeError> {
    let mut value = Mat2::zeros();
    let mut err = 0.0;
    let mut mass = 0.0;
    for piece in potential.pieces(a, b)? {
        match piece.kind {
            PieceKind::Flat(d) => {
                let h = piece.width();
                let (coarse, _) = flat_gram(z, y, d, h, &phi_z, &phi_y, kappa);
                let (fine, m) = flat_gram(z, y, d, h, &phi_z, &phi_y, 0.5 * kappa);
                value += fine;
                err += mat_err(&(fine - coarse));
                mass += m;
                phi_z = advance_flat(z, d, h, &phi_z);
                phi_y = advance_flat(y, d, h, &phi_y);
            }
            PieceKind::Smooth => {
                let (s, e) = (piece.start, piece.end);
                let (_, _, coarse, _) = smooth_gram(potential, z, y, s, e, &phi_z, &phi_y, tol)?;
                let (nz, ny, fine, m) = smooth_gram(potential, z, y, s, e, &phi_z, &phi_y, 1e-3 * tol)?;
                value += fine;
                err += mat_err(&(fine - coarse));
                mass += m;
                phi_z = nz;
                phi_y = ny;
            }
        }
    }
    Ok(Gram { value, err, mass })
}

/// `K_L(z, w)` by quadrature of `v(x,z) conj(v(x,w))`.
///
/// Panels are refined until the difference between two resolutions is below
/// `tol * |value|` (or at roundoff level relative to `∫|v conj v|`).
pub fn kernel_quadrature(potential: &Potential, length: f64, z: Complex64, w: Complex64, tol: f64) -> Result<KernelEval, KernelError> {
    check_length(length)?;
    if !(tol > 0.0) {
        return Err(OdeError::Tolerance(tol).into());
    }
    let y = w.conj();
    let mut kappa = 4.0;
    let mut last = None;
    for _ in 0..5 {
        let g = row_gram(potential, 0.0, length, z, y, Mat2::identity(), Mat2::identity(), kappa, tol.min(DEFAULT_TOL))?;
        let value = g.value[(0, 0)];
        if g.err <= tol * value.norm() || g.err <= 1e-14 * g.mass {
            return Ok(KernelEval { length, z, w, value, method: KernelMethod::Quadrature, err_estimate: g.err });
        }
        last = Some((g.err, value));
        kappa *= 0.5;
    }
    let (err, value) = last.expect("at least one pass");
    Err(KernelError::Tolerance { err, tol: tol * value.norm() })
}

/// Scale of `|conj(w) - z|` below which the boundary quotient is replaced by
/// its midpoint expansion.
const NEAR_DIAGONAL: f64 = 1e-6;

fn diagonal_scale(length: f64, m: Complex64) -> f64 {
    length * length.min(1.0 / sqrt_upper(m).norm().max(1e-300))
}

/// True when [`kernel_boundary`] evaluates `(z, w)` by the midpoint expansion.
pub fn is_near_diagonal(length: f64, z: Complex64, w: Complex64) -> bool {
    let y = w.conj();
    (y - z).norm() * diagonal_scale(length, 0.5 * (y + z)) < NEAR_DIAGONAL
}

/// `K_L(z, w)` from one frame evaluation at `x = L`:
/// `(conj v(L,w) v'(L,z) - conj v'(L,w) v(L,z)) / (conj w - z)`.
///
/// When `|conj w - z|` is tiny on the scale of `L` the quotient is replaced
/// by `(∂v v' - v ∂v')` at the midpoint, which is accurate to second order.
pub fn kernel_boundary(potential: &Potential, length: f64, z: Complex64, w: Complex64) -> Result<KernelEval, KernelError> {
    check_length(length)?;
    let solver = Solver::new(potential);
    let y = w.conj();
    let gap = y - z;
    let mid = 0.5 * (y + z);
    if is_near_diagonal(length, z, w) {
        let vf = solver.variational_frame(mid, length)?;
        let f = vf.frame;
        let value = vf.dz_v * f.dv - f.v * vf.dz_dv;
        let err = f64::EPSILON * 8.0 * (vf.dz_v.norm() * f.dv.norm() + f.v.norm() * vf.dz_dv.norm())
            + (gap.norm() * diagonal_scale(length, mid)).powi(2) * value.norm();
        return Ok(KernelEval { length, z, w, value, method: KernelMethod::BoundaryFormula, err_estimate: err });
    }
    let fz = solver.frame(z, length)?;
    let fy = solver.frame(y, length)?;
    let num_a = fy.v * fz.dv;
    let num_b = fy.dv * fz.v;
    let value = (num_a - num_b) / gap;
    let err = f64::EPSILON * 8.0 * (num_a.norm() + num_b.norm()) / gap.norm();
    Ok(KernelEval { length, z, w, value, method: KernelMethod::BoundaryFormula, err_estimate: err })
}

/// Strict version of [`kernel_boundary`] that refuses near-diagonal input.
pub fn kernel_boundary_strict(potential: &Potential, length: f64, z: Complex64, w: Complex64, min_gap: f64) -> Result<KernelEval, KernelError> {
    let gap = (w.conj() - z).norm();
    if gap < min_gap {
        return Err(KernelError::NearDiagonal { gap });
    }
    kernel_boundary(potential, length, z, w)
}

/// `K_L(ξ, ξ) = v' ∂_ξ v - v ∂_ξ v'` at `x = L`.
pub fn kernel_diagonal(potential: &Potential, length: f64, xi: f64) -> Result<f64, KernelError> {
    check_length(length)?;
    let vf = Solver::new(potential).variational_frame(Complex64::new(xi, 0.0), length)?;
    Ok((vf.dz_v * vf.frame.dv - vf.frame.v * vf.dz_dv).re)
}

/// `λ_L(ξ) = 1 / K_L(ξ, ξ)`.
pub fn christoffel(potential: &Potential, length: f64, xi: f64) -> Result<f64, KernelError> {
    Ok(1.0 / kernel_diagonal(potential, length, xi)?)
}

/// `Q_L(z) = K_L(z, ξ0) / K_L(ξ0, ξ0)`.
pub fn minimizer_q(potential: &Potential, length: f64, xi0: f64, z: Complex64) -> Result<Complex64, KernelError> {
    let x0 = Complex64::new(xi0, 0.0);
    if z == x0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let num = kernel_boundary(potential, length, z, x0)?.value;
    Ok(num / kernel_diagonal(potential, length, xi0)?)
}

/// First positive root of `tan(2u) = 2u`, cached.
pub fn u0() -> f64 {
    static U0: OnceLock<f64> = OnceLock::new();
    *U0.get_or_init(|| {
        // sin(2u) - 2u cos(2u) has no poles and changes sign on (π/2, 3π/4)
        let g = |u: f64| (2.0 * u).sin() - 2.0 * u * (2.0 * u).cos();
        let (mut lo, mut hi) = (std::f64::consts::FRAC_PI_2, 0.75 * std::f64::consts::PI);
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}

/// Extremal function of the free problem shifted to `d0`, peaked at `ξ0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalFunction {
    pub d0: f64,
    pub xi0: f64,
    pub c: f64,
    pub u0: f64,
}

/// `sin(c a)/a`, entire in `a`.
fn sin_over(c: f64, a: Complex64) -> Complex64 {
    let ca = a * c;
    if ca.norm() < 1e-3 {
        let ca2 = ca * ca;
        c * (1.0 - ca2 / 6.0 * (1.0 - ca2 / 20.0 * (1.0 - ca2 / 42.0)))
    } else {
        ca.sin() / a
    }
}

impl ExtremalFunction {
    pub fn new(d0: f64, xi0: f64) -> Result<Self, KernelError> {
        if !(xi0 > d0) {
            return Err(KernelError::Length(xi0 - d0));
        }
        let u0 = u0();
        Ok(ExtremalFunction { d0, xi0, c: u0 / (xi0 - d0).sqrt(), u0 })
    }

    /// `F_c(z) = sin(c(s - s0))/(s - s0) + sin(c(s + s0))/(s + s0)` with
    /// `s = √(z - d0)`, `s0 = √(ξ0 - d0)`. Even in `s`, hence entire in `z`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let s = sqrt_upper(z - self.d0);
        let s0 = (self.xi0 - self.d0).sqrt();
        sin_over(self.c, s - s0) + sin_over(self.c, s + s0)
    }
}

pub fn extremal_function(d0: f64, xi0: f64, z: Complex64) -> Result<Complex64, KernelError> {
    Ok(ExtremalFunction::new(d0, xi0)?.eval(z))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn free_diag(l: f64, xi: f64) -> f64 {
        let k = xi.sqrt();
        l / 2.0 + (2.0 * k * l).sin() / (4.0 * k)
    }

    #[test]
    fn free_diagonal_closed_form() {
        for &(l, xi) in &[(3.0, 2.0), (50.0, 0.7), (200.0, 1.0)] {
            let q = kernel_quadrature(&Potential::Zero, l, c(xi, 0.0), c(xi, 0.0), 1e-12).unwrap();
            let d = kernel_diagonal(&Potential::Zero, l, xi).unwrap();
            let exact = free_diag(l, xi);
            assert!((q.value.re - exact).abs() < 1e-10 * exact, "{} {exact}", q.value);
            assert!((d - exact).abs() < 1e-10 * exact);
        }
        assert!((kernel_diagonal(&Potential::Zero, 4.0, 0.0).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn short_length_is_about_length() {
        let v = Potential::cosine(1.0, 0.3, 2.0);
        let q = kernel_quadrature(&v, 1e-4, c(5.0, 1.0), c(-2.0, 0.5), 1e-10).unwrap();
        assert!((q.value - 1e-4).norm() < 1e-9);
    }

    #[test]
    fn constant_potential_cross_method() {
        let v = Potential::constant(2.0);
        let q = kernel_quadrature(&v, 5.0, c(6.0, 0.0), c(6.0, 0.0), 1e-12).unwrap();
        let d = kernel_diagonal(&v, 5.0, 6.0).unwrap();
        assert!((q.value.re - d).abs() < 1e-9);
    }

    #[test]
    fn boundary_matches_quadrature_off_diagonal() {
        let pots = [Potential::Zero, Potential::constant(-1.5), Potential::OscillatingExample, Potential::cosine(1.3, 0.2, 1.0)];
        for v in &pots {
            for &(z, w) in &[(c(3.0, 0.5), c(1.0, -2.0)), (c(-4.0, 0.0), c(10.0, 0.0)), (c(20.0, 3.0), c(-7.0, 1.0))] {
                let q = kernel_quadrature(v, 6.5, z, w, 1e-11).unwrap();
                let b = kernel_boundary(v, 6.5, z, w).unwrap();
                assert!((q.value - b.value).norm() <= 1e-8 * (1.0 + q.value.norm()), "{v:?} {z} {w}: {} {}", q.value, b.value);
            }
        }
    }

    #[test]
    fn hermitian_symmetry() {
        let v = Potential::OscillatingExample;
        let (z, w) = (c(2.0, 0.7), c(-1.0, 0.2));
        let a = kernel_boundary(&v, 4.0, z, w).unwrap().value;
        let b = kernel_boundary(&v, 4.0, w, z).unwrap().value;
        assert!((a - b.conj()).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn near_diagonal_route_is_continuous() {
        let v = Potential::constant(0.5);
        // the expansion is centred on the midpoint
        let d = kernel_diagonal(&v, 10.0, 2.0 + 1e-9).unwrap();
        let near = kernel_boundary(&v, 10.0, c(2.0 + 2e-9, 0.0), c(2.0, 0.0)).unwrap();
        assert!((near.value.re - d).abs() < 1e-12 * d);
        // just outside the switch the raw quotient agrees to its cancellation level
        let far = kernel_boundary(&v, 10.0, c(2.0 + 2e-6, 0.0), c(2.0, 0.0)).unwrap();
        let mid = kernel_diagonal(&v, 10.0, 2.0 + 1e-6).unwrap();
        assert!((far.value.re - mid).abs() < 1e-8 * mid);
        let strict = kernel_boundary_strict(&v, 10.0, c(2.0 + 1e-9, 0.0), c(2.0, 0.0), 1e-3);
        assert!(matches!(strict, Err(KernelError::NearDiagonal { .. })));
    }

    #[test]
    fn christoffel_times_diagonal_is_one() {
        let v = Potential::cosine(2.0, 0.0, 1.0);
        let k = kernel_diagonal(&v, 7.0, 1.3).unwrap();
        let lam = christoffel(&v, 7.0, 1.3).unwrap();
        assert!((lam * k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn christoffel_monotone_in_length() {
        let v = Potential::OscillatingExample;
        let lams: Vec<f64> = (1..=10).map(|l| christoffel(&v, l as f64 * 1.7, 0.8).unwrap()).collect();
        assert!(lams.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn free_christoffel_limit() {
        let lam = christoffel(&Potential::Zero, 200.0, 1.0).unwrap();
        assert!((200.0 * lam - 200.0 / (100.0 + 400f64.sin() / 4.0)).abs() < 1e-10);
        assert!((200.0 * lam - 2.0).abs() < 0.02);
    }

    #[test]
    fn minimizer_properties() {
        let v = Potential::Zero;
        assert_eq!(minimizer_q(&v, 30.0, 2.0, c(2.0, 0.0)).unwrap(), c(1.0, 0.0));
        let k0 = kernel_diagonal(&v, 30.0, 2.0).unwrap();
        for k in 0..40 {
            let xi = 0.1 + 0.2 * k as f64;
            let q = minimizer_q(&v, 30.0, 2.0, c(xi, 0.0)).unwrap();
            assert!(q.im.abs() < 1e-14 * (1.0 + q.re.abs()));
            let cs = (kernel_diagonal(&v, 30.0, xi).unwrap() / k0).sqrt();
            assert!(q.norm() <= cs * (1.0 + 1e-10));
        }
    }

    #[test]
    fn u0_value() {
        assert!((u0() - 2.246_704_5).abs() < 1e-6);
        assert!(((2.0 * u0()).tan() - 2.0 * u0()).abs() < 1e-9);
    }

    #[test]
    fn extremal_is_twice_kernel() {
        let (d0, xi0) = (1.0, 3.5);
        let f = ExtremalFunction::new(d0, xi0).unwrap();
        let v = Potential::constant(d0);
        for &z in &[c(0.0, 0.0), c(2.0, 1.0), c(-3.0, 0.5), c(10.0, -2.0)] {
            let k = kernel_boundary(&v, f.c, z, c(xi0, 0.0)).unwrap().value;
            assert!((f.eval(z) - 2.0 * k).norm() < 1e-10 * (1.0 + k.norm()));
        }
    }

    #[test]
    fn extremal_peak() {
        let f = ExtremalFunction::new(0.0, 2.0).unwrap();
        let peak = f.eval(c(2.0, 0.0)).re;
        for k in 0..=1000 {
            let xi = k as f64 / 10.0;
            assert!(f.eval(c(xi, 0.0)).norm() <= peak * (1.0 + 1e-12));
        }
    }
}
