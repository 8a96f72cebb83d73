//! Fundamental solutions of `-y'' + V y = z y` on the half-line.
//!
//! The Neumann solution `v` (`v(0)=1, v'(0)=0`) and the Dirichlet solution
//! `u` (`u(0)=0, u'(0)=1`) are carried together as the fundamental matrix
//! `Φ = [[v, u], [v', u']]`, along with its `z`-derivative. On constant cells
//! the propagator is closed form; smooth pieces are integrated with an
//! embedded Runge-Kutta pair. Magnitudes are tracked with a separate log scale
//! so long sweeps at complex energies do not overflow.

use nalgebra::Matrix2;
use num_complex::Complex64;
use thiserror::Error;

use crate::potential::{Piece, PieceKind, Potential, PotentialError};
use crate::quadrature::GaussLegendre;
use crate::rk::{self, StepControl};

pub type Mat2 = Matrix2<Complex64>;

/// Default local tolerance for smooth pieces (relative, per unit length).
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at x = {x}")]
    StepUnderflow { x: f64 },
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("Volterra series truncated: tail bound {bound:e} exceeds {tol:e}")]
    Truncation { bound: f64, tol: f64 },
}

/// Square root with `Im √z ≥ 0`.
pub fn sqrt_upper(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 || (r.im == 0.0 && r.re < 0.0) {
        -r
    } else {
        r
    }
}

/// `cos(k h)`, `sin(k h)/k` and their derivatives with respect to `q = k²`,
/// as entire functions of `q` (series near `q h² = 0`).
#[derive(Debug, Clone, Copy)]
pub(crate) struct CellTrig {
    pub c: Complex64,
    pub s: Complex64,
    pub dc: Complex64,
    pub ds: Complex64,
}

pub(crate) fn cell_trig(q: Complex64, h: f64) -> CellTrig {
    let w = q * h * h;
    if w.norm() < 0.25 {
        // c = Σ (-w)^n/(2n)!,  s/h = Σ (-w)^n/(2n+1)!,
        // ds/dq = h³ Σ_{n≥1} -n (-w)^{n-1}/(2n+1)!
        let mut c = Complex64::new(0.0, 0.0);
        let mut s = Complex64::new(0.0, 0.0);
        let mut ds = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut pow_prev = Complex64::new(0.0, 0.0);
        let mut fact_even = 1.0;
        let mut fact_odd = 1.0;
        for n in 0..18 {
            if n > 0 {
                let nf = n as f64;
                fact_even *= (2.0 * nf - 1.0) * (2.0 * nf);
                fact_odd *= (2.0 * nf) * (2.0 * nf + 1.0);
                ds += -nf * pow_prev / fact_odd;
            }
            c += pow / fact_even;
            s += pow / fact_odd;
            pow_prev = pow;
            pow *= -w;
        }
        let s = s * h;
        CellTrig { c, s, dc: -0.5 * h * s, ds: ds * h * h * h }
    } else {
        let k = sqrt_upper(q);
        let kh = k * h;
        let c = kh.cos();
        let s = kh.sin() / k;
        CellTrig { c, s, dc: -0.5 * h * s, ds: (h * c - s) / (2.0 * q) }
    }
}

/// A propagator `Φ(b) Φ(a)^{-1}` (or a fundamental matrix) together with its
/// `z`-derivative, both stored as `exp(log_scale) * matrix`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagated {
    pub m: Mat2,
    pub dm: Mat2,
    pub log_scale: f64,
}

impl Propagated {
    pub fn identity() -> Self {
        Propagated { m: Mat2::identity(), dm: Mat2::zeros(), log_scale: 0.0 }
    }

    /// Flat cell of width `h` with potential value `d` at energy `z`.
    pub fn cell(z: Complex64, d: f64, h: f64) -> Self {
        let q = z - d;
        let t = cell_trig(q, h);
        let m = Mat2::new(t.c, t.s, -q * t.s, t.c);
        let dm = Mat2::new(t.dc, t.ds, -t.s - q * t.ds, t.dc);
        Propagated { m, dm, log_scale: 0.0 }
    }

    /// `next ∘ self`: first propagate by `self`, then by `next`.
    pub fn then(&self, next: &Propagated) -> Propagated {
        let mut out = Propagated {
            m: next.m * self.m,
            dm: next.dm * self.m + next.m * self.dm,
            log_scale: self.log_scale + next.log_scale,
        };
        out.rescale();
        out
    }

    fn rescale(&mut self) {
        let n = self.m.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if n > 1e100 || (n < 1e-100 && n > 0.0) {
            let ln = n.ln();
            let f = (-ln).exp();
            self.m *= Complex64::new(f, 0.0);
            self.dm *= Complex64::new(f, 0.0);
            self.log_scale += ln;
        }
    }

    pub fn pow(&self, mut n: u64) -> Propagated {
        let mut result = Propagated::identity();
        let mut base = *self;
        while n > 0 {
            if n & 1 == 1 {
                result = result.then(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.then(&base);
            }
        }
        result
    }

    /// Unscaled matrix.
    pub fn matrix(&self) -> Mat2 {
        self.m * Complex64::new(self.log_scale.exp(), 0.0)
    }

    /// Unscaled `z`-derivative.
    pub fn derivative(&self) -> Mat2 {
        self.dm * Complex64::new(self.log_scale.exp(), 0.0)
    }
}

/// Values of the fundamental system at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionFrame {
    pub x: f64,
    pub z: Complex64,
    pub v: Complex64,
    pub dv: Complex64,
    pub u: Complex64,
    pub du: Complex64,
}

impl SolutionFrame {
    pub fn from_fundamental(x: f64, z: Complex64, phi: &Mat2) -> Self {
        SolutionFrame { x, z, v: phi[(0, 0)], u: phi[(0, 1)], dv: phi[(1, 0)], du: phi[(1, 1)] }
    }

    pub fn wronskian(&self) -> Complex64 {
        self.v * self.du - self.dv * self.u
    }

    pub fn transfer_matrix(&self) -> TransferMatrix {
        TransferMatrix { x: self.x, z: self.z, entries: Mat2::new(self.v, -self.u, -self.dv, self.du) }
    }
}

/// Frame plus the `z`-derivatives of each entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalFrame {
    pub frame: SolutionFrame,
    pub dz_v: Complex64,
    pub dz_dv: Complex64,
    pub dz_u: Complex64,
    pub dz_du: Complex64,
}

/// `T(x,z) = [[v, -u], [-v', u']]`, the transfer matrix of the canonical
/// system in Schrödinger gauge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub x: f64,
    pub z: Complex64,
    pub entries: Mat2,
}

/// `j = [[0, -1], [1, 0]]`.
pub fn j_matrix() -> Mat2 {
    let o = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    Mat2::new(o, -one, one, o)
}

impl TransferMatrix {
    pub fn det(&self) -> Complex64 {
        self.entries.determinant()
    }

    /// `i (T* j T - j)`; positive semidefinite on the upper half-plane.
    pub fn j_expansion(&self) -> Mat2 {
        let j = j_matrix();
        (self.entries.adjoint() * j * self.entries - j) * Complex64::new(0.0, 1.0)
    }
}

/// Solver for the fundamental system of a fixed potential.
#[derive(Debug, Clone)]
pub struct Solver<'a> {
    potential: &'a Potential,
    tol: f64,
}

impl<'a> Solver<'a> {
    pub fn new(potential: &'a Potential) -> Self {
        Solver { potential, tol: DEFAULT_TOL }
    }

    pub fn with_tol(potential: &'a Potential, tol: f64) -> Result<Self, OdeError> {
        if !(tol > 0.0) {
            return Err(OdeError::Tolerance(tol));
        }
        Ok(Solver { potential, tol })
    }

    pub fn potential(&self) -> &Potential {
        self.potential
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn step_control(&self, width: f64) -> StepControl {
        // local error is compounded by monodromy powers; keep it well below tol
        StepControl { rtol: 1e-2 * self.tol, atol: 1e-2 * self.tol, h_max: width }
    }

    /// Propagator across a single piece.
    pub fn piece_transfer(&self, z: Complex64, piece: &Piece) -> Result<Propagated, OdeError> {
        match piece.kind {
            PieceKind::Flat(d) => Ok(Propagated::cell(z, d, piece.width())),
            PieceKind::Smooth => self.smooth_transfer(z, piece.start, piece.end),
        }
    }

    fn smooth_transfer(&self, z: Complex64, a: f64, b: f64) -> Result<Propagated, OdeError> {
        let pot = self.potential;
        let mut y0 = [0.0; 16];
        y0[0] = 1.0; // P00
        y0[6] = 1.0; // P11
        let rhs = |x: f64, y: &[f64; 16]| {
            let q = Complex64::new(pot.evaluate(x).unwrap_or(0.0), 0.0) - z;
            let mut out = [0.0; 16];
            // P' = A P with A = [[0,1],[V-z,0]]; dP' = A dP + [[0,0],[-1,0]] P
            for col in 0..2 {
                let r0 = Complex64::new(y[2 * col], y[2 * col + 1]);
                let dr0 = Complex64::new(y[8 + 2 * col], y[8 + 2 * col + 1]);
                let dr1 = Complex64::new(y[8 + 4 + 2 * col], y[8 + 4 + 2 * col + 1]);
                out[2 * col] = y[4 + 2 * col];
                out[2 * col + 1] = y[4 + 2 * col + 1];
                let r1p = q * r0;
                out[4 + 2 * col] = r1p.re;
                out[4 + 2 * col + 1] = r1p.im;
                out[8 + 2 * col] = dr1.re;
                out[8 + 2 * col + 1] = dr1.im;
                let dr1p = q * dr0 - r0;
                out[12 + 2 * col] = dr1p.re;
                out[12 + 2 * col + 1] = dr1p.im;
            }
            out
        };
        let y = rk::integrate(rhs, a, b, y0, self.step_control(b - a), |_, _| {})
            .map_err(|e| OdeError::StepUnderflow { x: e.x })?;
        let c = |i: usize| Complex64::new(y[i], y[i + 1]);
        Ok(Propagated {
            m: Mat2::new(c(0), c(2), c(4), c(6)),
            dm: Mat2::new(c(8), c(10), c(12), c(14)),
            log_scale: 0.0,
        })
    }

    /// Propagator from `a` to `b`.
    pub fn transfer(&self, z: Complex64, a: f64, b: f64) -> Result<Propagated, OdeError> {
        let mut acc = Propagated::identity();
        for piece in self.potential.pieces(a, b)? {
            acc = acc.then(&self.piece_transfer(z, &piece)?);
        }
        Ok(acc)
    }

    /// Monodromy over one period (periodic potentials only).
    pub fn monodromy(&self, z: Complex64) -> Option<Result<Propagated, OdeError>> {
        self.potential.period().map(|p| self.transfer(z, 0.0, p))
    }

    /// Fundamental matrix `Φ(x, z)` with its `z`-derivative.
    pub fn fundamental(&self, z: Complex64, x: f64) -> Result<Propagated, OdeError> {
        if let Some(p) = self.potential.period() {
            let n = (x / p).floor();
            if n >= 2.0 {
                let rem = x - n * p;
                let mono = self.transfer(z, 0.0, p)?;
                let head = self.transfer(z, 0.0, rem)?;
                // Φ(np + r) = Φ(r) M^n
                return Ok(mono.pow(n as u64).then(&head));
            }
        }
        self.transfer(z, 0.0, x)
    }

    /// Fundamental matrices at each point of an increasing grid.
    pub fn sweep(&self, z: Complex64, xs: &[f64]) -> Result<Vec<Propagated>, OdeError> {
        if self.potential.period().is_some() {
            return xs.iter().map(|&x| self.fundamental(z, x)).collect();
        }
        let mut out = Vec::with_capacity(xs.len());
        let mut acc = Propagated::identity();
        let mut pos = 0.0;
        for &x in xs {
            acc = acc.then(&self.transfer(z, pos, x)?);
            pos = x;
            out.push(acc);
        }
        Ok(out)
    }

    pub fn frame(&self, z: Complex64, x: f64) -> Result<SolutionFrame, OdeError> {
        Ok(SolutionFrame::from_fundamental(x, z, &self.fundamental(z, x)?.matrix()))
    }

    pub fn variational_frame(&self, z: Complex64, x: f64) -> Result<VariationalFrame, OdeError> {
        let p = self.fundamental(z, x)?;
        let m = p.matrix();
        let d = p.derivative();
        Ok(VariationalFrame {
            frame: SolutionFrame::from_fundamental(x, z, &m),
            dz_v: d[(0, 0)],
            dz_u: d[(0, 1)],
            dz_dv: d[(1, 0)],
            dz_du: d[(1, 1)],
        })
    }
}

/// Frame at `x_target` for energy `z`.
pub fn integrate_frame(potential: &Potential, z: Complex64, x_target: f64, tol: f64) -> Result<SolutionFrame, OdeError> {
    Solver::with_tol(potential, tol)?.frame(z, x_target)
}

/// Truncated Volterra series for `v(x, z)` and a bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolterraSeries {
    pub value: Complex64,
    pub tail_bound: f64,
    pub terms: usize,
}

impl VolterraSeries {
    /// The value if the tail bound is within `tol`.
    pub fn within(&self, tol: f64) -> Result<Complex64, OdeError> {
        if self.tail_bound <= tol {
            Ok(self.value)
        } else {
            Err(OdeError::Truncation { bound: self.tail_bound, tol })
        }
    }
}

/// Sums `v = Σ_{n ≤ n_max} w_n(x)` with `w_0 = cos(√z t)` and
/// `w_n(t) = ∫_0^t s(t-τ) V(τ) w_{n-1}(τ) dτ`.
///
/// The kernel `s(t-τ) = S(t)C(τ) - C(t)S(τ)` separates, so each iterate is two
/// cumulative integrals, evaluated with Gauss-Legendre panels and their exact
/// indefinite-integration matrix.
pub fn volterra_series(potential: &Potential, z: Complex64, x: f64, n_max: usize) -> Result<VolterraSeries, OdeError> {
    let k = sqrt_upper(z);
    let trig = |t: f64| {
        let ct = cell_trig(z, t);
        (ct.c, ct.s)
    };
    let rule = GaussLegendre::new(16);
    let cum = rule.cumulative_matrix();
    let panel_width = 0.25f64.min(1.0 / k.norm().max(1e-300));

    struct Panel {
        half: f64,
        c: Vec<Complex64>,
        s: Vec<Complex64>,
        pot: Vec<f64>,
    }
    let mut panels = Vec::new();
    for piece in potential.pieces(0.0, x)? {
        let count = (piece.width() / panel_width).ceil().max(1.0) as usize;
        let h = piece.width() / count as f64;
        for p in 0..count {
            let lo = piece.start + p as f64 * h;
            let half = 0.5 * h;
            let mut c = Vec::with_capacity(16);
            let mut s = Vec::with_capacity(16);
            let mut pot = Vec::with_capacity(16);
            for &node in &rule.nodes {
                let t = lo + half * (node + 1.0);
                let (ct, st) = trig(t);
                c.push(ct);
                s.push(st);
                pot.push(match piece.kind {
                    PieceKind::Flat(v) => v,
                    PieceKind::Smooth => potential.evaluate(t)?,
                });
            }
            panels.push(Panel { half, c, s, pot });
        }
    }
    let (cx, sx) = trig(x);
    let mut w_prev: Vec<Vec<Complex64>> = panels.iter().map(|p| p.c.clone()).collect();
    let mut value = cx;
    if k.im * x > 0.5 {
        // S(t)C(τ) - C(t)S(τ) cancels at scale e^{2 Im k x}; use the two
        // exponential halves of s(t-τ) with panel-local rescaling instead
        let i = Complex64::new(0.0, 1.0);
        let phases: Vec<(Vec<Complex64>, Vec<Complex64>, Complex64)> = panels
            .iter()
            .map(|p| {
                let up = rule.nodes.iter().map(|n| (i * k * p.half * (n + 1.0)).exp()).collect();
                let down = rule.nodes.iter().map(|n| (-i * k * p.half * (n + 1.0)).exp()).collect();
                (up, down, (i * k * 2.0 * p.half).exp())
            })
            .collect();
        let two_ik = 2.0 * i * k;
        for _ in 1..=n_max {
            // P(t) = ∫ e^{ik(t-τ)} g, N(t) = ∫ e^{-ik(t-τ)} g with g = V w
            let mut p_acc = Complex64::new(0.0, 0.0);
            let mut n_acc = Complex64::new(0.0, 0.0);
            let mut w_next = Vec::with_capacity(panels.len());
            for ((panel, w), (up, down, eh)) in panels.iter().zip(&w_prev).zip(&phases) {
                let g: Vec<Complex64> = (0..16).map(|j| panel.pot[j] * w[j]).collect();
                let fp: Vec<Complex64> = (0..16).map(|j| g[j] * down[j]).collect();
                let fn_: Vec<Complex64> = (0..16).map(|j| g[j] * up[j]).collect();
                let mut wn = Vec::with_capacity(16);
                for r in 0..16 {
                    let mut pi = p_acc;
                    let mut ni = n_acc;
                    for j in 0..16 {
                        pi += fp[j] * cum[r][j] * panel.half;
                        ni += fn_[j] * cum[r][j] * panel.half;
                    }
                    wn.push((up[r] * pi - down[r] * ni) / two_ik);
                }
                let (mut pe, mut ne) = (p_acc, n_acc);
                for j in 0..16 {
                    pe += fp[j] * rule.weights[j] * panel.half;
                    ne += fn_[j] * rule.weights[j] * panel.half;
                }
                p_acc = pe * eh;
                n_acc = ne / eh;
                w_next.push(wn);
            }
            value += (p_acc - n_acc) / two_ik;
            w_prev = w_next;
        }
    } else {
        for _ in 1..=n_max {
            let mut a_acc = Complex64::new(0.0, 0.0);
            let mut b_acc = Complex64::new(0.0, 0.0);
            let mut w_next = Vec::with_capacity(panels.len());
            for (panel, w) in panels.iter().zip(&w_prev) {
                let fa: Vec<Complex64> = (0..16).map(|j| panel.c[j] * panel.pot[j] * w[j]).collect();
                let fb: Vec<Complex64> = (0..16).map(|j| panel.s[j] * panel.pot[j] * w[j]).collect();
                let mut wn = Vec::with_capacity(16);
                for r in 0..16 {
                    let mut ai = a_acc;
                    let mut bi = b_acc;
                    for j in 0..16 {
                        ai += fa[j] * cum[r][j] * panel.half;
                        bi += fb[j] * cum[r][j] * panel.half;
                    }
                    wn.push(panel.s[r] * ai - panel.c[r] * bi);
                }
                for j in 0..16 {
                    a_acc += fa[j] * rule.weights[j] * panel.half;
                    b_acc += fb[j] * rule.weights[j] * panel.half;
                }
                w_next.push(wn);
            }
            value += sx * a_acc - cx * b_acc;
            w_prev = w_next;
        }
    }

    let mass = potential.abs_integral(0.0, x)?;
    let sigma = x.min(1.0 / k.norm());
    let a = sigma * mass;
    let mut term = 1.0;
    for n in 1..=n_max {
        term *= a / n as f64;
    }
    let mut tail = 0.0;
    let mut n = n_max + 1;
    loop {
        term *= a / n as f64;
        tail += term;
        if term < 1e-18 * tail || term == 0.0 || n > n_max + 10_000 {
            break;
        }
        n += 1;
    }
    Ok(VolterraSeries { value, tail_bound: (k.im * x).exp() * tail, terms: n_max })
}

/// Checks `|v(x, ξ)|` against the exponential bounds that follow from the
/// Volterra series: `exp(∫|V|/√ξ)` for `ξ ≥ 1`, and
/// `exp((1 + Im√ξ) x + ∫|V|)` below.
pub fn check_growth_bounds(frame: &SolutionFrame, potential: &Potential) -> bool {
    if frame.z.im != 0.0 {
        return false;
    }
    let xi = frame.z.re;
    let Ok(mass) = potential.abs_integral(0.0, frame.x) else {
        return false;
    };
    let log_bound = if xi >= 1.0 {
        mass / xi.sqrt()
    } else {
        (1.0 + sqrt_upper(Complex64::new(xi, 0.0)).im) * frame.x + mass
    };
    frame.v.norm().ln() <= log_bound + 1e-12 * (1.0 + log_bound.abs())
}

/// `(1/x) log|v(x, z)|` along an increasing positive grid; `-∞` where `v`
/// vanishes.
pub fn growth_rate(potential: &Potential, z: Complex64, grid: &[f64]) -> Result<Vec<f64>, OdeError> {
    let solver = Solver::new(potential);
    let frames = solver.sweep(z, grid)?;
    Ok(grid
        .iter()
        .zip(frames)
        .map(|(&x, p)| {
            let v = p.m[(0, 0)].norm();
            if v == 0.0 {
                f64::NEG_INFINITY
            } else {
                (v.ln() + p.log_scale) / x
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_solutions_closed_form() {
        let v = Potential::Zero;
        for z in [c(4.0, 0.0), c(-2.0, 0.5), c(3.0, 7.0), c(0.0, 0.0)] {
            let f = integrate_frame(&v, z, 2.5, 1e-10).unwrap();
            let k = sqrt_upper(z);
            let expect_u = if z.norm() == 0.0 { c(2.5, 0.0) } else { (k * 2.5).sin() / k };
            assert!((f.v - (k * 2.5).cos()).norm() < 1e-13);
            assert!((f.u - expect_u).norm() < 1e-13);
        }
    }

    #[test]
    fn constant_potential_is_shifted_free() {
        let v = Potential::constant(2.0);
        let z = c(5.0, 1.0);
        let f = integrate_frame(&v, z, 3.0, 1e-10).unwrap();
        assert!((f.v - (sqrt_upper(z - 2.0) * 3.0).cos()).norm() < 1e-12);
    }

    #[test]
    fn initial_frame() {
        let f = integrate_frame(&Potential::OscillatingExample, c(1.0, 1.0), 0.0, 1e-10).unwrap();
        assert_eq!((f.v, f.dv, f.u, f.du), (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)));
    }

    #[test]
    fn cell_derivative_matches_finite_difference() {
        for (q, h) in [(c(3.0, 0.2), 0.7), (c(1e-6, 0.0), 0.3), (c(-40.0, 2.0), 0.5), (c(0.0, 0.0), 2.0)] {
            let p = Propagated::cell(q, 0.0, h);
            let eps = 1e-6;
            let fd = (Propagated::cell(q + eps, 0.0, h).m - Propagated::cell(q - eps, 0.0, h).m) / c(2.0 * eps, 0.0);
            assert!((p.dm - fd).norm() < 1e-7 * (1.0 + fd.norm()), "q={q} h={h}");
        }
    }

    #[test]
    fn smooth_piece_matches_fine_cells() {
        // cosine potential vs. a fine piecewise-constant midpoint approximation is too crude;
        // compare instead against the same potential at tighter tolerance
        let v = Potential::cosine(1.0, 0.5, 2.0);
        let z = c(3.0, 0.4);
        let a = Solver::with_tol(&v, 1e-8).unwrap().frame(z, 1.7).unwrap();
        let b = Solver::with_tol(&v, 1e-12).unwrap().frame(z, 1.7).unwrap();
        assert!((a.v - b.v).norm() < 1e-6);
        assert!((b.wronskian() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn periodic_shortcut_agrees_with_direct_product() {
        let v = Potential::Periodic {
            period: 0.7,
            profile: crate::potential::PeriodicProfile::Samples { values: vec![1.0, -2.0, 0.5] },
        };
        let s = Solver::new(&v);
        let z = c(2.0, 0.3);
        let fast = s.fundamental(z, 9.45).unwrap();
        let slow = s.transfer(z, 0.0, 9.45).unwrap();
        assert!((fast.matrix() - slow.matrix()).norm() < 1e-9 * slow.matrix().norm());
        assert!((fast.derivative() - slow.derivative()).norm() < 1e-8 * slow.derivative().norm());
    }

    #[test]
    fn volterra_free_is_cosine() {
        let r = volterra_series(&Potential::Zero, c(3.0, 1.0), 2.0, 5).unwrap();
        assert_eq!(r.value, (sqrt_upper(c(3.0, 1.0)) * 2.0).cos());
        assert_eq!(r.tail_bound, 0.0);
    }

    #[test]
    fn volterra_constant_examples() {
        let r = volterra_series(&Potential::constant(1.0), c(4.0, 0.0), 1.0, 8).unwrap();
        let exact = 3f64.sqrt().cos();
        assert!((r.value.re - exact).abs() <= r.tail_bound + 1e-13);
        assert!(r.tail_bound < 1e-8);

        let r = volterra_series(&Potential::constant(1.0), c(100.0, 0.0), 1.0, 2).unwrap();
        let exact = 99f64.sqrt().cos();
        assert!((r.value.re - exact).abs() <= (0.1f64).exp() - 1.0);
        assert!((r.value.re - exact).abs() <= r.tail_bound);
        assert!(matches!(r.within(1e-12), Err(OdeError::Truncation { .. })));
    }

    #[test]
    fn volterra_matches_propagation_on_oscillating_example() {
        let v = Potential::OscillatingExample;
        let z = c(2.0, 1.0);
        let series = volterra_series(&v, z, 3.0, 30).unwrap();
        let frame = integrate_frame(&v, z, 3.0, 1e-10).unwrap();
        assert!(series.tail_bound < 1e-12);
        assert!((series.value - frame.v).norm() < 1e-8, "{} vs {}", series.value, frame.v);
    }

    #[test]
    fn growth_bound_examples() {
        let f = integrate_frame(&Potential::Zero, c(4.0, 0.0), 10.0, 1e-10).unwrap();
        assert!(check_growth_bounds(&f, &Potential::Zero));
        let v = Potential::constant(1.0);
        let f = integrate_frame(&v, c(4.0, 0.0), 2.0, 1e-10).unwrap();
        assert!(check_growth_bounds(&f, &v));
        let f = integrate_frame(&Potential::Zero, c(-1.0, 0.0), 1.0, 1e-10).unwrap();
        assert!((f.v.re - 1f64.cosh()).abs() < 1e-14);
        assert!(check_growth_bounds(&f, &Potential::Zero));
        // a fabricated frame that exceeds the bound is rejected
        let mut bad = f;
        bad.v = c(100.0, 0.0);
        assert!(!check_growth_bounds(&bad, &Potential::Zero));
    }

    #[test]
    fn growth_rate_examples() {
        let grid: Vec<f64> = (1..=20).map(|k| 10.0 * k as f64).collect();
        let r = growth_rate(&Potential::Zero, c(1.0, 0.0), &grid).unwrap();
        assert!(r.iter().all(|&g| g <= 1e-12));
        let r = growth_rate(&Potential::Zero, c(-1.0, 0.0), &grid).unwrap();
        assert!((r.last().unwrap() - 1.0).abs() < 0.01);
        assert!((r[19] - 1.0).abs() < (r[0] - 1.0).abs());
        let r = growth_rate(&Potential::Zero, c(0.25, 0.0), &[2.0 * std::f64::consts::PI * 0.75 / 0.5]).unwrap();
        // cos(3π/2) is ~1e-16, not an exact zero, so only check it is very negative
        assert!(r[0] < -3.0);
    }
}
