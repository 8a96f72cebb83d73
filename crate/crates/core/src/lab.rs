//! Experiments on the truncated problems: Christoffel asymptotics, sine-kernel
//! universality, clock spacing of the Neumann-at-`L` eigenvalues and their
//! counting measure.
//!
//! Eigenvalues of the truncation are the zeros of `ξ ↦ v'(L, ξ)`. They are
//! located with the Prüfer angle `θ` (`v = r sin θ`, `v' = r cos θ`,
//! `θ(0) = π/2`), which is increasing in `ξ`; the `k`-th eigenvalue is where
//! `θ(L, ξ) = π/2 + kπ`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

use crate::kernel::{christoffel, kernel_boundary, KernelError};
use crate::martin::{comb_map, FiniteGapSet, MartinError};
use crate::ode::{OdeError, Solver};
use crate::potential::{PieceKind, Potential};
use crate::rk::{self, StepControl};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Martin(#[from] MartinError),
    #[error("window [{0}, {1}] is empty or unbounded")]
    Window(f64, f64),
    #[error("spectrum window around {xi} still lacks index {missing} after widening")]
    WindowUnderflow { xi: f64, missing: i64 },
    #[error("grid needs at least {0} points")]
    Grid(usize),
    #[error("density must be positive and finite at {xi}, got {value}")]
    Density { xi: f64, value: f64 },
}

/// Wraps `a` into `(-π/2, π/2]`.
fn wrap_half(a: f64) -> f64 {
    a - PI * (a / PI).round()
}

/// Prüfer angle `θ(L, ξ)` for real `ξ`, lifted continuously from `θ(0) = π/2`.
///
/// On a flat cell with `q = ξ - d > 0` the scaled angle `atan2(v, v'/k)`
/// advances by exactly `k h` and shares its quadrant with `θ`. For `q ≤ 0`
/// the angle cannot cross the repelling equilibria `-atan2(1, κ) + nπ`, so the
/// end value is the unique representative inside the starting window.
pub fn prufer_angle(potential: &Potential, length: f64, xi: f64) -> Result<f64, LabError> {
    let mut theta = FRAC_PI_2;
    let mut v = 1.0f64;
    let mut dv = 0.0f64;
    for piece in potential.pieces(0.0, length).map_err(OdeError::from)? {
        let h = piece.width();
        match piece.kind {
            PieceKind::Flat(d) => {
                let q = xi - d;
                if q > 0.0 {
                    let k = q.sqrt();
                    let psi0 = theta + wrap_half(v.atan2(dv / k) - v.atan2(dv));
                    let (s, c) = (k * h).sin_cos();
                    let (nv, ndv) = (c * v + s / k * dv, -k * s * v + c * dv);
                    let psi1 = psi0 + k * h;
                    theta = psi1 + wrap_half(nv.atan2(ndv) - nv.atan2(ndv / k));
                    v = nv;
                    dv = ndv;
                } else {
                    let kappa = (-q).sqrt();
                    let (nv, ndv) = if kappa * h < 1e-8 {
                        (v + h * dv, dv - q * h * v)
                    } else {
                        let (ch, sh) = ((kappa * h).cosh(), (kappa * h).sinh());
                        (ch * v + sh / kappa * dv, kappa * sh * v + ch * dv)
                    };
                    let rho = -(1.0f64).atan2(kappa);
                    let base = rho + PI * ((theta - rho) / PI).floor();
                    let mut r = (nv.atan2(ndv) - base).rem_euclid(PI);
                    if r > PI - 1e-10 {
                        r -= PI;
                    }
                    theta = base + r;
                    v = nv;
                    dv = ndv;
                }
                // keep the amplitude bounded; only the direction matters
                let n = v.hypot(dv);
                if n > 1e100 || n < 1e-100 {
                    v /= n;
                    dv /= n;
                }
            }
            PieceKind::Smooth => {
                let rhs = |x: f64, y: &[f64; 1]| {
                    let (s, c) = y[0].sin_cos();
                    [c * c + (xi - potential.evaluate(x).unwrap_or(0.0)) * s * s]
                };
                let ctrl = StepControl { rtol: 1e-13, atol: 1e-13, h_max: h };
                let out = rk::integrate(rhs, piece.start, piece.end, [theta], ctrl, |_, _| {})
                    .map_err(|e| OdeError::StepUnderflow { x: e.x })?;
                theta = out[0];
                let (s, c) = theta.sin_cos();
                v = s;
                dv = c;
            }
        }
    }
    Ok(theta)
}

/// Number of eigenvalues strictly below `ξ`.
pub fn eigenvalue_count(potential: &Potential, length: f64, xi: f64) -> Result<usize, LabError> {
    let theta = prufer_angle(potential, length, xi)?;
    Ok(count_from_angle(theta))
}

fn count_from_angle(theta: f64) -> usize {
    ((theta - FRAC_PI_2) / PI).ceil().max(0.0) as usize
}

/// Solves `θ(L, ξ) = target` on a bracket by Illinois false position with
/// bisection safeguards, to `1e-12 (1 + |ξ|)`.
fn solve_angle(potential: &Potential, length: f64, target: f64, mut lo: f64, mut hi: f64) -> Result<f64, LabError> {
    let f = |x: f64| prufer_angle(potential, length, x).map(|t| t - target);
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    let mut side = 0i8;
    for it in 0..200 {
        let width = hi - lo;
        if width <= 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mut x = if flo != fhi { lo - flo * width / (fhi - flo) } else { 0.5 * (lo + hi) };
        if it % 4 == 3 || !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Eigenvalues of the truncation in a window with their `μ_L` weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSlice {
    pub length: f64,
    pub window: (f64, f64),
    /// Index `k` of the first eigenvalue in the window (`θ = π/2 + kπ`).
    pub first_index: usize,
    pub eigenvalues: Vec<f64>,
    /// `1 / ∫_0^L v(x, ξ_k)²`.
    pub weights: Vec<f64>,
}

/// All eigenvalues of the Neumann truncation at `L` inside `[lo, hi]`.
pub fn truncation_spectrum(potential: &Potential, length: f64, window: (f64, f64)) -> Result<SpectrumSlice, LabError> {
    let (lo, hi) = window;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(LabError::Window(lo, hi));
    }
    let theta_lo = prufer_angle(potential, length, lo)?;
    let theta_hi = prufer_angle(potential, length, hi)?;
    let k_lo = count_from_angle(theta_lo);
    // eigenvalues ≤ hi: targets π/2 + kπ ≤ θ(hi)
    let k_hi = ((theta_hi - FRAC_PI_2) / PI).floor();
    let mut eigenvalues = Vec::new();
    if k_hi >= k_lo as f64 {
        let count = k_hi as usize + 1 - k_lo;
        // bracket each target by recursive splitting of the window
        let mut brackets = vec![(lo, hi, theta_lo, theta_hi)];
        let mut found: Vec<(usize, f64, f64)> = Vec::with_capacity(count);
        while let Some((a, b, ta, tb)) = brackets.pop() {
            let ka = count_from_angle(ta);
            let kb = ((tb - FRAC_PI_2) / PI).floor();
            if kb < ka as f64 {
                continue;
            }
            if kb as usize == ka {
                found.push((ka, a, b));
                continue;
            }
            let mid = 0.5 * (a + b);
            let tm = prufer_angle(potential, length, mid)?;
            brackets.push((a, mid, ta, tm));
            brackets.push((mid, b, tm, tb));
        }
        found.sort_by(|x, y| x.0.cmp(&y.0));
        found.dedup_by_key(|f| f.0);
        eigenvalues = found
            .par_iter()
            .map(|&(k, a, b)| solve_angle(potential, length, FRAC_PI_2 + k as f64 * PI, a, b))
            .collect::<Result<Vec<_>, _>>()?;
    }
    let weights = eigenvalues
        .par_iter()
        .map(|&xi| christoffel(potential, length, xi).map_err(LabError::from))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpectrumSlice { length, window, first_index: k_lo, eigenvalues, weights })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterlacingReport {
    pub pairs_checked: usize,
    pub violations: usize,
}

/// Between consecutive zeros of `v'(L, ·)` there is exactly one zero of
/// `v(L, ·)`: checked by the sign change of `v(L, ·)` from one eigenvalue to
/// the next and by the Prüfer count of zeros of `v`.
pub fn interlacing_check(potential: &Potential, slice: &SpectrumSlice) -> Result<InterlacingReport, LabError> {
    let solver = Solver::new(potential);
    let signs: Vec<f64> = slice
        .eigenvalues
        .iter()
        .map(|&xi| solver.fundamental(Complex64::new(xi, 0.0), slice.length).map(|p| p.m[(0, 0)].re.signum()))
        .collect::<Result<_, _>>()?;
    let mut violations = 0;
    for (pair, s) in slice.eigenvalues.windows(2).zip(signs.windows(2)) {
        if s[0] == s[1] || !(pair[1] > pair[0]) {
            violations += 1;
            continue;
        }
        // v(L,ξ) = 0 where θ = nπ: exactly one multiple of π strictly between
        let ta = prufer_angle(potential, slice.length, pair[0])?;
        let tb = prufer_angle(potential, slice.length, pair[1])?;
        let zeros = (tb / PI).ceil() - (ta / PI).floor() - 1.0;
        if zeros != 1.0 {
            violations += 1;
        }
    }
    Ok(InterlacingReport { pairs_checked: slice.eigenvalues.len().saturating_sub(1), violations })
}

/// One clock-spacing measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClockSpacing {
    pub j: i64,
    pub xi_j: f64,
    pub xi_next: f64,
    /// `L f_E(ξ_j) (ξ_{j+1} - ξ_j)`.
    pub spacing_normalized: f64,
    /// `L f_E(ξ) (ξ_{j+1} - ξ_j)` with the density at the anchor point.
    pub spacing_at_anchor: f64,
}

/// `L f_E (ξ_{j+1} - ξ_j)` for `j` in `j_range` (inclusive), indexed so that
/// `ξ_{-1} < ξ ≤ ξ_0`.
pub fn clock_spacing_check(
    potential: &Potential,
    length: f64,
    xi: f64,
    j_range: (i64, i64),
    f_e: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<Vec<ClockSpacing>, LabError> {
    let (j_min, j_max) = j_range;
    let f_xi = f_e(xi);
    if !(f_xi > 0.0 && f_xi.is_finite()) {
        return Err(LabError::Density { xi, value: f_xi });
    }
    let step = 1.0 / (length * f_xi);
    let mut reach = 4.0;
    for _ in 0..8 {
        let lo = xi - (j_min.unsigned_abs() as f64 + reach) * step;
        let hi = xi + (j_max.unsigned_abs() as f64 + 1.0 + reach) * step;
        let slice = truncation_spectrum(potential, length, (lo, hi))?;
        let zero = slice.eigenvalues.partition_point(|&e| e < xi) as i64;
        let need_lo = zero + j_min;
        let need_hi = zero + j_max + 1;
        if need_lo < 0 || need_hi >= slice.eigenvalues.len() as i64 || slice.eigenvalues.first().map_or(true, |&e| e < lo) {
            reach *= 2.0;
            continue;
        }
        return (j_min..=j_max)
            .map(|j| {
                let a = slice.eigenvalues[(zero + j) as usize];
                let b = slice.eigenvalues[(zero + j + 1) as usize];
                let f_a = f_e(a);
                if !(f_a > 0.0 && f_a.is_finite()) {
                    return Err(LabError::Density { xi: a, value: f_a });
                }
                Ok(ClockSpacing {
                    j,
                    xi_j: a,
                    xi_next: b,
                    spacing_normalized: length * f_a * (b - a),
                    spacing_at_anchor: length * f_xi * (b - a),
                })
            })
            .collect();
    }
    Err(LabError::WindowUnderflow { xi, missing: if j_min < 0 { j_min } else { j_max + 1 } })
}

/// `sin(πa)/(πa)` for complex `a`.
pub fn sinc(a: Complex64) -> Complex64 {
    let x = a * PI;
    if x.norm() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniversalityGrid {
    pub xi: f64,
    pub length: f64,
    pub f_e: f64,
    pub z_grid: Vec<Complex64>,
    pub w_grid: Vec<Complex64>,
    /// `ratio[i][k] = K_L(ξ + z_i/L, ξ + w_k/L) / K_L(ξ, ξ)`.
    pub ratio: Vec<Vec<Complex64>>,
    pub sinc_ref: Vec<Vec<Complex64>>,
    pub sup_deviation: f64,
}

/// `n` equispaced real points on `[-halfwidth, halfwidth]`.
pub fn symmetric_grid(halfwidth: f64, n: usize) -> Vec<Complex64> {
    (0..n).map(|i| Complex64::new(-halfwidth + 2.0 * halfwidth * i as f64 / (n - 1) as f64, 0.0)).collect()
}

/// Rescaled kernel ratio on explicit grids against the sine kernel with
/// density `f_e`.
pub fn universality_on(potential: &Potential, length: f64, xi: f64, z_grid: &[Complex64], w_grid: &[Complex64], f_e: f64) -> Result<UniversalityGrid, LabError> {
    let x0 = Complex64::new(xi, 0.0);
    let diag = kernel_boundary(potential, length, x0, x0)?.value;
    let ratio = z_grid
        .par_iter()
        .map(|&z| {
            w_grid
                .iter()
                .map(|&w| Ok(kernel_boundary(potential, length, x0 + z / length, x0 + w / length)?.value / diag))
                .collect::<Result<Vec<_>, LabError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sinc_ref: Vec<Vec<Complex64>> = z_grid.iter().map(|&z| w_grid.iter().map(|&w| sinc((z - w.conj()) * f_e)).collect()).collect();
    let sup_deviation = ratio
        .iter()
        .zip(&sinc_ref)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(a, b)| (a - b).norm()))
        .fold(0.0, f64::max);
    Ok(UniversalityGrid { xi, length, f_e, z_grid: z_grid.to_vec(), w_grid: w_grid.to_vec(), ratio, sinc_ref, sup_deviation })
}

/// [`universality_on`] with the same `n`-point real grid on both axes.
pub fn universality_grid(potential: &Potential, length: f64, xi: f64, halfwidth: f64, n: usize, f_e: f64) -> Result<UniversalityGrid, LabError> {
    if n < 3 {
        return Err(LabError::Grid(3));
    }
    let grid = symmetric_grid(halfwidth, n);
    universality_on(potential, length, xi, &grid, &grid, f_e)
}

/// First positive real `z` where `K_L(ξ + z/L, ξ)` changes sign, searched up
/// to `z_max`.
pub fn first_real_zero(potential: &Potential, length: f64, xi: f64, z_max: f64) -> Result<Option<f64>, LabError> {
    let x0 = Complex64::new(xi, 0.0);
    let k = |z: f64| kernel_boundary(potential, length, x0 + z / length, x0).map(|e| e.value.re);
    let n = (z_max * 20.0).ceil().max(10.0) as usize;
    let mut prev = (0.0, k(0.0)?);
    for i in 1..=n {
        let z = z_max * i as f64 / n as f64;
        let val = k(z)?;
        if val.signum() != prev.1.signum() {
            let (mut a, mut b, mut fa) = (prev.0, z, prev.1);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                let fm = k(m)?;
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        prev = (z, val);
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChristoffelRow {
    pub xi: f64,
    pub length: f64,
    pub l_lambda: f64,
    pub reference: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChristoffelTable {
    pub rows: Vec<ChristoffelRow>,
    /// `(L, sup_ξ |L λ_L(ξ) - f_μ/f_E|)` in ladder order.
    pub sup_deviation: Vec<(f64, f64)>,
}

/// `L λ_L(ξ)` against `f_μ(ξ)/f_E(ξ)` over a grid and a ladder of lengths.
pub fn christoffel_sweep(
    potential: &Potential,
    xi_grid: &[f64],
    lengths: &[f64],
    f_mu: &(dyn Fn(f64) -> f64 + Sync),
    f_e: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<ChristoffelTable, LabError> {
    let pairs: Vec<(f64, f64)> = lengths.iter().flat_map(|&l| xi_grid.iter().map(move |&x| (l, x))).collect();
    let rows = pairs
        .par_iter()
        .map(|&(length, xi)| {
            let l_lambda = length * christoffel(potential, length, xi)?;
            let reference = f_mu(xi) / f_e(xi);
            Ok(ChristoffelRow { xi, length, l_lambda, reference, deviation: (l_lambda - reference).abs() })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    let sup_deviation = lengths
        .iter()
        .map(|&l| (l, rows.iter().filter(|r| r.length == l).map(|r| r.deviation).fold(0.0, f64::max)))
        .collect();
    Ok(ChristoffelTable { rows, sup_deviation })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinRow {
    pub lo: f64,
    pub hi: f64,
    pub nu_l: f64,
    pub rho_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingComparison {
    pub bins: Vec<BinRow>,
    /// `Σ |ν_L(bin) - ρ_E(bin)|`.
    pub total_variation: f64,
}

/// `ν_L = (1/L) Σ δ_{ξ_k}` against the Martin measure, bin by bin. The Martin
/// mass of `[a, b]` is `Re(τ(b) - τ(a))/π`.
pub fn counting_measure_compare(slice: &SpectrumSlice, set: &FiniteGapSet, bins: &[(f64, f64)]) -> Result<CountingComparison, LabError> {
    let mut rows = Vec::with_capacity(bins.len());
    for &(lo, hi) in bins {
        if !(lo < hi) || lo < slice.window.0 || hi > slice.window.1 {
            return Err(LabError::Window(lo, hi));
        }
        let count = slice.eigenvalues.iter().filter(|&&e| e >= lo && e < hi).count();
        let rho = (comb_map(set, Complex64::new(hi, 0.0))? - comb_map(set, Complex64::new(lo, 0.0))?).re / PI;
        rows.push(BinRow { lo, hi, nu_l: count as f64 / slice.length, rho_e: rho });
    }
    let total_variation = rows.iter().map(|r| (r.nu_l - r.rho_e).abs()).sum();
    Ok(CountingComparison { bins: rows, total_variation })
}

/// Equal-width bins covering `[lo, hi]`.
pub fn uniform_bins(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let w = (hi - lo) / n as f64;
    (0..n).map(|i| (lo + w * i as f64, if i + 1 == n { hi } else { lo + w * (i + 1) as f64 })).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_f_e(x: f64) -> f64 {
        1.0 / (2.0 * PI * x.sqrt())
    }

    #[test]
    fn free_spectrum_closed_form() {
        let l = 37.0;
        let s = truncation_spectrum(&Potential::Zero, l, (0.3, 5.0)).unwrap();
        let expected: Vec<f64> = (0..200).map(|k| (k as f64 * PI / l).powi(2)).filter(|&e| e >= 0.3 && e <= 5.0).collect();
        assert_eq!(s.eigenvalues.len(), expected.len());
        for (a, b) in s.eigenvalues.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-11 * (1.0 + b), "{a} {b}");
        }
        assert!(s.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn ground_state_at_zero() {
        let s = truncation_spectrum(&Potential::Zero, 10.0, (-1.0, 0.5)).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-12);
        assert_eq!(s.first_index, 0);
    }

    #[test]
    fn shifted_spectrum() {
        let s = truncation_spectrum(&Potential::constant(2.5), 20.0, (2.6, 4.0)).unwrap();
        for (i, e) in s.eigenvalues.iter().enumerate() {
            let k = (s.first_index + i) as f64;
            assert!((e - 2.5 - (k * PI / 20.0).powi(2)).abs() < 1e-11);
        }
    }

    #[test]
    fn smooth_and_step_potentials_interlace() {
        for v in [Potential::cosine(1.0, 0.0, 3.0), Potential::OscillatingExample, Potential::Piecewise { breakpoints: vec![1.0, 2.5], values: vec![-3.0, 4.0, 0.5] }] {
            // above the tail value so no eigenfunction is exponentially small at L
            let s = truncation_spectrum(&v, 12.0, (0.6, 12.0)).unwrap();
            assert!(s.eigenvalues.windows(2).all(|w| w[1] > w[0]));
            let r = interlacing_check(&v, &s).unwrap();
            assert_eq!(r.violations, 0, "{v:?}");
            // derivative of v vanishes at every eigenvalue
            let solver = Solver::new(&v);
            for &e in &s.eigenvalues {
                let f = solver.frame(Complex64::new(e, 0.0), 12.0).unwrap();
                assert!(f.dv.norm() < 1e-8 * (1.0 + f.v.norm() * (1.0 + e.abs()).sqrt()), "{v:?} {e} {}", f.dv);
            }
        }
    }

    #[test]
    fn clock_spacing_free() {
        let out = clock_spacing_check(&Potential::Zero, 200.0, 1.0, (-2, 2), &free_f_e).unwrap();
        for c in &out {
            let k = (c.xi_j.sqrt() * 200.0 / PI).round();
            assert!((c.spacing_normalized - (2.0 * k + 1.0) / (2.0 * k)).abs() < 1e-9);
            assert!((c.spacing_normalized - 1.0).abs() <= 0.01);
        }
        let j0 = out.iter().find(|c| c.j == 0).unwrap();
        assert!(j0.xi_j >= 1.0);
        assert!(out.iter().find(|c| c.j == -1).unwrap().xi_j < 1.0);
    }

    #[test]
    fn universality_free() {
        let g = universality_grid(&Potential::Zero, 500.0, 1.0, 2.0, 11, free_f_e(1.0)).unwrap();
        assert_eq!(g.ratio[5][5], Complex64::new(1.0, 0.0));
        assert!(g.sup_deviation < 0.05);
        for i in 0..11 {
            for k in 0..11 {
                assert!((g.ratio[i][k] - g.ratio[k][i].conj()).norm() < 1e-12);
            }
        }
        let z = first_real_zero(&Potential::Zero, 500.0, 1.0, 8.0).unwrap().unwrap();
        assert!((z - 2.0 * PI).abs() < 0.05);
    }

    #[test]
    fn christoffel_sweep_free() {
        let t = christoffel_sweep(&Potential::Zero, &[0.5, 1.0, 2.0, 4.0], &[100.0, 500.0], &|x| 1.0 / (PI * x.sqrt()), &free_f_e).unwrap();
        assert_eq!(t.rows.len(), 8);
        assert!(t.sup_deviation[1].1 <= 0.02);
        assert!(t.rows.iter().all(|r| (r.reference - 2.0).abs() < 1e-15));
    }

    #[test]
    fn counting_free() {
        let s = truncation_spectrum(&Potential::Zero, 200.0, (0.5, 4.0)).unwrap();
        let set = FiniteGapSet::half_line(0.0);
        let c = counting_measure_compare(&s, &set, &uniform_bins(0.5, 4.0, 7)).unwrap();
        assert!(c.total_variation <= 0.05);
        let fine = counting_measure_compare(&s, &set, &uniform_bins(0.5, 4.0, 14)).unwrap();
        let total = |c: &CountingComparison| c.bins.iter().map(|b| b.nu_l).sum::<f64>();
        assert!((total(&c) - total(&fine)).abs() < 1e-12);
    }
}
