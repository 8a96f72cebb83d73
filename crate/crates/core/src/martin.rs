//! Comb map, Martin function and Martin measure of finite-gap sets
//! `E = [b0, ∞) \ ∪ (a_j, b_j)`.
//!
//! With endpoints `e_0 = b0 < e_1 = a_1 < e_2 = b_1 < ...` the comb map is the
//! abelian integral of
//!
//! ```text
//! τ'(z) = (1/2) Π_j (z - c_j) / Π_k √(z - e_k)
//! ```
//!
//! where every square root takes the branch with `Im ≥ 0`. That branch makes
//! `τ'` positive on bands, purely imaginary in gaps, and `τ(z) ~ √z`.
//! Integrals between endpoints use `ξ = e_k + (e_{k+1} - e_k) sin²φ`, which
//! cancels both inverse square roots; unbounded pieces use `ξ = e ± t²`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::adaptive;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MartinError {
    #[error("endpoints out of order at gap {index}: {left} must be < {right}")]
    Interlacing { index: usize, left: f64, right: f64 },
    #[error("non-finite endpoint in gap {0}")]
    NonFinite(usize),
    #[error("critical points not solved ({have} of {need})")]
    NotSolved { have: usize, need: usize },
    #[error("{xi} is not in the interior of a band")]
    Domain { xi: f64 },
    #[error("critical point solve did not converge; residuals {residuals:?}")]
    NoConvergence { residuals: Vec<f64> },
    #[error("delta must lie in (0, 1), got {0}")]
    Delta(f64),
    #[error("quadrature failed to converge near {at}")]
    Quadrature { at: f64 },
}

/// `[b0, ∞)` with finitely many open gaps removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteGapSet {
    pub b0: f64,
    #[serde(default)]
    pub gaps: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub critical: Vec<f64>,
}

const QUAD_TOL: f64 = 1e-13;

/// `√x` for real `x`, as the `ℂ₊` boundary value.
fn sqrt_plus_real(x: f64) -> Complex64 {
    if x >= 0.0 {
        Complex64::new(x.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-x).sqrt())
    }
}

fn sqrt_plus(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

impl FiniteGapSet {
    pub fn half_line(b0: f64) -> Self {
        FiniteGapSet { b0, gaps: Vec::new(), critical: Vec::new() }
    }

    pub fn new(b0: f64, gaps: Vec<(f64, f64)>) -> Result<Self, MartinError> {
        let set = FiniteGapSet { b0, gaps, critical: Vec::new() };
        set.validate()?;
        Ok(set)
    }

    /// Checks `b0 < a_1 < b_1 < a_2 < ...`.
    pub fn validate(&self) -> Result<(), MartinError> {
        if !self.b0.is_finite() {
            return Err(MartinError::NonFinite(0));
        }
        let mut prev = self.b0;
        for (i, &(a, b)) in self.gaps.iter().enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return Err(MartinError::NonFinite(i + 1));
            }
            if !(prev < a) {
                return Err(MartinError::Interlacing { index: i + 1, left: prev, right: a });
            }
            if !(a < b) {
                return Err(MartinError::Interlacing { index: i + 1, left: a, right: b });
            }
            prev = b;
        }
        Ok(())
    }

    pub fn genus(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_solved(&self) -> bool {
        self.critical.len() == self.gaps.len()
    }

    /// `[b0, a_1, b_1, ..., a_g, b_g]`.
    pub fn edges(&self) -> Vec<f64> {
        let mut e = vec![self.b0];
        for &(a, b) in &self.gaps {
            e.push(a);
            e.push(b);
        }
        e
    }

    /// Bands as `(left, right)`; the last one has `right = ∞`.
    pub fn bands(&self) -> Vec<(f64, f64)> {
        let e = self.edges();
        let mut out = Vec::with_capacity(self.gaps.len() + 1);
        for k in (0..e.len()).step_by(2) {
            out.push((e[k], e.get(k + 1).copied().unwrap_or(f64::INFINITY)));
        }
        out
    }

    pub fn contains(&self, xi: f64) -> bool {
        xi >= self.b0 && !self.gaps.iter().any(|&(a, b)| xi > a && xi < b)
    }

    /// True if `xi` lies strictly inside a band.
    pub fn in_band_interior(&self, xi: f64) -> bool {
        self.bands().iter().any(|&(l, r)| xi > l && xi < r)
    }

    fn require_solved(&self) -> Result<(), MartinError> {
        if self.is_solved() {
            Ok(())
        } else {
            Err(MartinError::NotSolved { have: self.critical.len(), need: self.gaps.len() })
        }
    }
}

/// `τ'(z)` with an explicit set of critical points.
fn tau_prime(edges: &[f64], critical: &[f64], z: Complex64) -> Complex64 {
    let mut num = Complex64::new(0.5, 0.0);
    for &c in critical {
        num *= z - c;
    }
    let mut den = Complex64::new(1.0, 0.0);
    for &e in edges {
        den *= sqrt_plus(z - e);
    }
    num / den
}

/// `Π (ξ - c_j) / Π_{m ∉ skip} √(ξ - e_m)` on the real axis, optionally
/// dropping the critical factor `drop`.
fn reduced(edges: &[f64], critical: &[f64], xi: f64, skip: &[usize], drop: Option<usize>) -> Complex64 {
    let mut out = Complex64::new(1.0, 0.0);
    for (j, &c) in critical.iter().enumerate() {
        if Some(j) != drop {
            out *= xi - c;
        }
    }
    for (m, &e) in edges.iter().enumerate() {
        if !skip.contains(&m) {
            out /= sqrt_plus_real(xi - e);
        }
    }
    out
}

fn integrate(f: impl FnMut(f64) -> Complex64, a: f64, b: f64) -> Result<Complex64, MartinError> {
    let r = adaptive(f, a, b, QUAD_TOL * 1e-2, QUAD_TOL, 4000);
    if r.converged {
        Ok(r.value)
    } else {
        Err(MartinError::Quadrature { at: a })
    }
}

/// `∫_{e_k}^{ξ} τ'` for `e_k ≤ ξ ≤ e_{k+1}`, with `φ` running to `phi_end`.
/// `drop` removes one critical factor (used for the Jacobian).
fn segment_integral(edges: &[f64], critical: &[f64], k: usize, phi_end: f64, drop: Option<usize>) -> Result<Complex64, MartinError> {
    let (lo, hi) = (edges[k], edges[k + 1]);
    let width = hi - lo;
    let skip = [k, k + 1];
    let g = |phi: f64| {
        let s = phi.sin();
        reduced(edges, critical, lo + width * s * s, &skip, drop)
    };
    Ok(Complex64::new(0.0, -1.0) * integrate(g, 0.0, phi_end)?)
}

fn phi_of(lo: f64, hi: f64, xi: f64) -> f64 {
    ((xi - lo) / (hi - lo)).clamp(0.0, 1.0).sqrt().asin()
}

/// Gap residual `Im ∫_{a_j}^{b_j} τ'` for every gap.
fn gap_residuals(edges: &[f64], critical: &[f64]) -> Result<Vec<f64>, MartinError> {
    (0..critical.len())
        .map(|j| Ok(segment_integral(edges, critical, 2 * j + 1, std::f64::consts::FRAC_PI_2, None)?.im))
        .collect()
}

/// Solves the gap conditions `τ(b_j) = τ(a_j)` for the critical points.
///
/// Each condition is affine in its own `c_j` with a coefficient of fixed sign
/// on the gap, so a Gauss-Seidel sweep can solve each coordinate exactly;
/// Newton steps on the full system are tried first and kept when they lower
/// the residual.
pub fn solve_critical_points(set: &FiniteGapSet, tol: f64) -> Result<FiniteGapSet, MartinError> {
    set.validate()?;
    let g = set.genus();
    let edges = set.edges();
    let mut c: Vec<f64> = if set.critical.len() == g {
        set.critical.clone()
    } else {
        set.gaps.iter().map(|&(a, b)| 0.5 * (a + b)).collect()
    };
    if g == 0 {
        return Ok(FiniteGapSet { critical: Vec::new(), ..set.clone() });
    }
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut res = gap_residuals(&edges, &c)?;
    for _ in 0..100 {
        if norm(&res) <= tol {
            return Ok(FiniteGapSet { critical: c, ..set.clone() });
        }
        // Jacobian: ∂F_j/∂c_k = -Im ∫ τ'/(ξ - c_k)
        let mut jac = nalgebra::DMatrix::<f64>::zeros(g, g);
        for j in 0..g {
            for k in 0..g {
                let d = segment_integral(&edges, &c, 2 * j + 1, std::f64::consts::FRAC_PI_2, Some(k))?;
                jac[(j, k)] = -d.im;
            }
        }
        let rhs = nalgebra::DVector::from_iterator(g, res.iter().map(|r| -r));
        let mut accepted = false;
        if let Some(step) = jac.lu().solve(&rhs) {
            let mut lambda = 1.0;
            for _ in 0..8 {
                let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(ci, s)| ci + lambda * s).collect();
                let inside = trial.iter().zip(&set.gaps).all(|(&t, &(a, b))| t > a && t < b);
                if inside {
                    let r = gap_residuals(&edges, &trial)?;
                    if norm(&r) < norm(&res) {
                        c = trial;
                        res = r;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
        }
        if !accepted {
            // coordinate sweep: c_j = ∫ ξ H_j / ∫ H_j with H_j of one sign
            for j in 0..g {
                let (a, b) = set.gaps[j];
                let seg = 2 * j + 1;
                let skip = [seg, seg + 1];
                let width = b - a;
                let h = |phi: f64, weight_by_xi: bool| {
                    let s = phi.sin();
                    let xi = a + width * s * s;
                    let v = reduced(&edges, &c, xi, &skip, Some(j));
                    if weight_by_xi {
                        v * xi
                    } else {
                        v
                    }
                };
                let num = integrate(|p| h(p, true), 0.0, std::f64::consts::FRAC_PI_2)?;
                let den = integrate(|p| h(p, false), 0.0, std::f64::consts::FRAC_PI_2)?;
                let cj = (num / den).re;
                c[j] = cj.clamp(a + 1e-15 * width, b - 1e-15 * width);
            }
            res = gap_residuals(&edges, &c)?;
        }
    }
    if norm(&res) <= tol {
        Ok(FiniteGapSet { critical: c, ..set.clone() })
    } else {
        Err(MartinError::NoConvergence { residuals: res })
    }
}

/// Gap residuals of a solved set.
pub fn gap_condition_residuals(set: &FiniteGapSet) -> Result<Vec<f64>, MartinError> {
    set.require_solved()?;
    gap_residuals(&set.edges(), &set.critical)
}

/// `τ(ξ)` for real `ξ` as the boundary value from `ℂ₊`.
fn comb_map_real(set: &FiniteGapSet, xi: f64) -> Result<Complex64, MartinError> {
    let edges = set.edges();
    let c = &set.critical;
    let last = edges.len() - 1;
    if xi <= set.b0 {
        // ξ = b0 - t²: τ = i ∫_0^T P dt
        let t_end = (set.b0 - xi).sqrt();
        let p = |t: f64| reduced(&edges, c, set.b0 - t * t, &[0], None);
        return Ok(Complex64::new(0.0, 1.0) * integrate(p, 0.0, t_end)?);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..last {
        let (lo, hi) = (edges[k], edges[k + 1]);
        if xi >= hi {
            acc += segment_integral(&edges, c, k, std::f64::consts::FRAC_PI_2, None)?;
        } else {
            return Ok(acc + segment_integral(&edges, c, k, phi_of(lo, hi, xi), None)?);
        }
    }
    // last band: ξ = e_last + t²
    let e = edges[last];
    let q = |t: f64| reduced(&edges, c, e + t * t, &[last], None);
    Ok(acc + integrate(q, 0.0, (xi - e).sqrt())?)
}

/// Comb map `τ_E(z)`: along the real axis from `b0`, then vertically with
/// `Im z = s²` so endpoint singularities stay integrable. Values below the
/// axis use `τ(conj z) = conj τ(z)`.
pub fn comb_map(set: &FiniteGapSet, z: Complex64) -> Result<Complex64, MartinError> {
    set.require_solved()?;
    if z.im < 0.0 {
        return Ok(comb_map(set, z.conj())?.conj());
    }
    let base = comb_map_real(set, z.re)?;
    if z.im == 0.0 {
        return Ok(base);
    }
    let edges = set.edges();
    let x = z.re;
    let leg = |s: f64| tau_prime(&edges, &set.critical, Complex64::new(x, s * s)) * Complex64::new(0.0, 2.0 * s);
    Ok(base + integrate(leg, 0.0, z.im.sqrt())?)
}

/// `M_E(z) = Im τ_E(z)`, symmetric under conjugation and zero on `E`.
pub fn martin_function(set: &FiniteGapSet, z: Complex64) -> Result<f64, MartinError> {
    if z.im == 0.0 && set.contains(z.re) && z.re >= set.b0 {
        set.require_solved()?;
        return Ok(0.0);
    }
    let tau = comb_map(set, Complex64::new(z.re, z.im.abs()))?;
    Ok(tau.im.max(0.0))
}

/// Density `f_E(ξ) = τ'(ξ)/π` of the Martin measure on a band interior.
pub fn martin_density(set: &FiniteGapSet, xi: f64) -> Result<f64, MartinError> {
    set.require_solved()?;
    if !set.in_band_interior(xi) {
        return Err(MartinError::Domain { xi });
    }
    let d = tau_prime(&set.edges(), &set.critical, Complex64::new(xi, 0.0));
    debug_assert!(d.re > 0.0 && d.im.abs() <= 1e-12 * d.re, "density branch: {d}");
    Ok(d.re / std::f64::consts::PI)
}

/// Result of the large-`R` fit of `M_E(-R) - √R ≈ a_E/(2√R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticFit {
    pub a_e: f64,
    pub residual: f64,
    pub warning: bool,
}

/// `M_E(-R) - √R`, computed without cancellation.
fn martin_excess(set: &FiniteGapSet, r: f64) -> Result<f64, MartinError> {
    let t_end = (r + set.b0).sqrt();
    let b0 = set.b0;
    // ln P = Σ_j ½[ln1p((c-a)/(a-ξ)) + ln1p((c-b)/(b-ξ))]
    let p_minus_one = |t: f64| {
        let xi = b0 - t * t;
        let mut lp = 0.0;
        for (&(a, b), &c) in set.gaps.iter().zip(&set.critical) {
            lp += 0.5 * (((c - a) / (a - xi)).ln_1p() + ((c - b) / (b - xi)).ln_1p());
        }
        Complex64::new(lp.exp_m1(), 0.0)
    };
    let r_int = adaptive(p_minus_one, 0.0, t_end, 1e-15, 1e-14, 8000);
    if !r_int.converged {
        return Err(MartinError::Quadrature { at: -r });
    }
    Ok(r_int.value.re + b0 / (t_end + r.sqrt()))
}

pub const FIT_RADII: [f64; 3] = [1e4, 1e5, 1e6];

/// Fits `a_E` from `y(R) = 2√R (M_E(-R) - √R) = a_E + β/R + γ/R²` on
/// [`FIT_RADII`]. The residual compares the three-point and two-point
/// extrapolations.
pub fn asymptotic_ae(set: &FiniteGapSet) -> Result<AsymptoticFit, MartinError> {
    set.require_solved()?;
    if set.genus() == 0 {
        return Ok(AsymptoticFit { a_e: set.b0, residual: 0.0, warning: false });
    }
    let mut y = [0.0; 3];
    for (k, &r) in FIT_RADII.iter().enumerate() {
        y[k] = 2.0 * r.sqrt() * martin_excess(set, r)?;
    }
    let x: Vec<f64> = FIT_RADII.iter().map(|r| 1.0 / r).collect();
    // Lagrange extrapolation to x = 0
    let three: f64 = (0..3)
        .map(|i| {
            let mut w = 1.0;
            for j in 0..3 {
                if j != i {
                    w *= x[j] / (x[j] - x[i]);
                }
            }
            w * y[i]
        })
        .sum();
    let two = (y[2] * x[1] - y[1] * x[2]) / (x[1] - x[2]);
    let residual = (three - two).abs();
    Ok(AsymptoticFit { a_e: three, residual, warning: residual > 1e-3 * (1.0 + three.abs()) })
}

/// Solved set with its large-`z` constant and normalization check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartinData {
    pub set: FiniteGapSet,
    pub a_e: f64,
    pub fit_residual: f64,
    pub normalization_residual: f64,
}

impl MartinData {
    pub fn new(set: &FiniteGapSet, tol: f64) -> Result<Self, MartinError> {
        let set = solve_critical_points(set, tol)?;
        let fit = asymptotic_ae(&set)?;
        let r = 1e6;
        let tau = comb_map(&set, Complex64::new(-r, 0.0))?;
        let normalization_residual = (tau / Complex64::new(0.0, r.sqrt()) - 1.0).norm();
        Ok(MartinData { set, a_e: fit.a_e, fit_residual: fit.residual, normalization_residual })
    }
}

/// `{ξ : dist(ξ, E) < δ} ∪ [1/δ, ∞)` for a finite-gap set.
pub fn delta_extension(set: &FiniteGapSet, delta: f64) -> Result<FiniteGapSet, MartinError> {
    set.validate()?;
    delta_extension_bands(&set.bands(), delta)
}

/// Same as [`delta_extension`] for an arbitrary list of closed bands (the
/// right end may be `∞`). The result always contains `[1/δ, ∞)`.
pub fn delta_extension_bands(bands: &[(f64, f64)], delta: f64) -> Result<FiniteGapSet, MartinError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(MartinError::Delta(delta));
    }
    let mut fat: Vec<(f64, f64)> = bands.iter().map(|&(l, r)| (l - delta, r + delta)).collect();
    fat.push((1.0 / delta, f64::INFINITY));
    fat.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (l, r) in fat {
        match merged.last_mut() {
            // the fattened sets are open, so touching bands merge as well
            Some(last) if l <= last.1 => last.1 = last.1.max(r),
            _ => merged.push((l, r)),
        }
    }
    let b0 = merged[0].0;
    let gaps = merged.windows(2).map(|w| (w[0].1, w[1].0)).collect();
    FiniteGapSet::new(b0, gaps)
}
