//! Weyl disks and the m-function `m(z) = -ψ(0,z)/ψ'(0,z)`, boundary spectral
//! densities, and Floquet data for periodic potentials.
//!
//! With `H = T* j T / (2i)` the disk `D(x, z) = {w : T(x,z)·w ∈ closure ℂ₊}` is
//! `{w : W* H W ≥ 0}` with `W = (w, 1)`. Since `det H = -1/4` it has centre
//! `-h12/h11` and radius `1/(2|h11|)`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::martin::{FiniteGapSet, MartinError};
use crate::ode::{j_matrix, sqrt_upper, Mat2, OdeError, Propagated, Solver};
use crate::potential::Potential;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeylError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("z = {0} is not in the upper half-plane")]
    LowerHalfPlane(Complex64),
    #[error("disk at x = {x} is still a half-plane")]
    HalfPlane { x: f64 },
    #[error("disk radius stalled at {radius:e} (x = {x})")]
    Plateau { x: f64, radius: f64 },
    #[error("radius {radius:e} above tolerance at x_max = {x}")]
    NotConverged { x: f64, radius: f64 },
    #[error("{xi} is within {zone} of the band edge {edge}")]
    BandEdge { xi: f64, edge: f64, zone: f64 },
    #[error("potential is not periodic")]
    NotPeriodic,
    #[error("epsilon ladder must be decreasing, positive, with at least two entries")]
    Ladder,
    #[error("empty or inverted window [{0}, {1}]")]
    Window(f64, f64),
    #[error(transparent)]
    Martin(#[from] MartinError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylDisk {
    pub x: f64,
    pub z: Complex64,
    pub center: Complex64,
    pub radius: f64,
}

fn upper(z: Complex64) -> Result<(), WeylError> {
    if z.im > 0.0 {
        Ok(())
    } else {
        Err(WeylError::LowerHalfPlane(z))
    }
}

/// Disk from a (scaled) fundamental matrix.
fn disk_from(p: &Propagated, x: f64, z: Complex64) -> Result<WeylDisk, WeylError> {
    let phi = p.m;
    // T = S Φ S with S = diag(1, -1)
    let t = Mat2::new(phi[(0, 0)], -phi[(0, 1)], -phi[(1, 0)], phi[(1, 1)]);
    let h = t.adjoint() * j_matrix() * t / Complex64::new(0.0, 2.0);
    let h11 = h[(0, 0)].re;
    let scale = (-2.0 * p.log_scale).exp();
    if !(h11 < 0.0) || !h11.is_finite() {
        return Err(WeylError::HalfPlane { x });
    }
    let radius = scale / (2.0 * h11.abs());
    if !radius.is_finite() {
        return Err(WeylError::HalfPlane { x });
    }
    let center = -h[(0, 1)] / h11;
    Ok(WeylDisk { x, z, center, radius })
}

pub fn weyl_disk(potential: &Potential, z: Complex64, x: f64) -> Result<WeylDisk, WeylError> {
    upper(z)?;
    let p = Solver::new(potential).fundamental(z, x)?;
    disk_from(&p, x, z)
}

/// Disk ladder `x_start · 2^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskSchedule {
    pub x_start: f64,
    pub x_max: f64,
}

impl Default for DiskSchedule {
    fn default() -> Self {
        DiskSchedule { x_start: 10.0, x_max: 1e4 }
    }
}

impl DiskSchedule {
    /// Ladder long enough for the disks at `z` to shrink by `e^{-60}`.
    pub fn for_energy(z: Complex64) -> Self {
        let decay = sqrt_upper(z).im.max(1e-300);
        DiskSchedule { x_start: 10.0, x_max: (60.0 / decay).clamp(1e4, 1e8) }
    }
}

pub const DEFAULT_DISK_TOL: f64 = 1e-8;

/// Centre of the first disk along the schedule with radius `≤ tol`.
pub fn m_function_with(potential: &Potential, z: Complex64, tol: f64, schedule: DiskSchedule) -> Result<Complex64, WeylError> {
    upper(z)?;
    let solver = Solver::new(potential);
    let periodic = potential.period().is_some();
    let mut acc = Propagated::identity();
    let mut pos = 0.0;
    let mut x = schedule.x_start;
    let mut prev_radius = f64::INFINITY;
    let mut stalls = 0;
    loop {
        let p = if periodic {
            solver.fundamental(z, x)?
        } else {
            acc = acc.then(&solver.transfer(z, pos, x)?);
            pos = x;
            acc
        };
        match disk_from(&p, x, z) {
            Ok(d) => {
                if d.radius <= tol {
                    return Ok(d.center);
                }
                if d.radius > 0.9 * prev_radius {
                    stalls += 1;
                    if stalls >= 4 {
                        return Err(WeylError::Plateau { x, radius: d.radius });
                    }
                } else {
                    stalls = 0;
                }
                prev_radius = d.radius;
                if x >= schedule.x_max {
                    return Err(WeylError::NotConverged { x, radius: d.radius });
                }
            }
            Err(WeylError::HalfPlane { .. }) if x < schedule.x_max => {}
            Err(e) => return Err(e),
        }
        x = (2.0 * x).min(schedule.x_max);
    }
}

pub fn m_function(potential: &Potential, z: Complex64, tol: f64) -> Result<Complex64, WeylError> {
    m_function_with(potential, z, tol, DiskSchedule::for_energy(z))
}

/// Period used for Floquet data; constants count as period one.
fn floquet_period(potential: &Potential) -> Option<f64> {
    potential.period().or(match potential {
        Potential::Zero | Potential::Constant { .. } => Some(1.0),
        _ => None,
    })
}

/// Monodromy `Φ(p, z)` over one period.
pub fn monodromy(potential: &Potential, z: Complex64) -> Result<Mat2, WeylError> {
    let p = floquet_period(potential).ok_or(WeylError::NotPeriodic)?;
    Ok(Solver::new(potential).transfer(z, 0.0, p)?.matrix())
}

/// Discriminant `Δ(ξ) = tr Φ(p, ξ)`.
pub fn discriminant(potential: &Potential, xi: f64) -> Result<f64, WeylError> {
    Ok(monodromy(potential, Complex64::new(xi, 0.0))?.trace().re)
}

/// m-function from the decaying Floquet solution.
pub fn floquet_m(potential: &Potential, z: Complex64) -> Result<Complex64, WeylError> {
    upper(z)?;
    let m = monodromy(potential, z)?;
    let half = m.trace() * 0.5;
    let root = (half * half - 1.0).sqrt();
    let (r1, r2) = (half + root, half - root);
    // small eigenvalue as the reciprocal of the large one
    let rho = if r1.norm() >= r2.norm() { 1.0 / r1 } else { 1.0 / r2 };
    let d1 = m[(0, 0)] - rho;
    let d2 = m[(1, 0)];
    Ok(if d1.norm() >= d2.norm() { m[(0, 1)] / d1 } else { (m[(1, 1)] - rho) / d2 })
}

pub const DEFAULT_LADDER: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
pub const BAND_EDGE_ZONE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDensity {
    pub xi: f64,
    pub f_mu: f64,
    pub extrapolation_residual: f64,
    /// Successive ladder differences changed sign.
    pub oscillating: bool,
    pub ladder: Vec<(f64, f64)>,
}

/// Band edges of `potential` known in closed form or detectable next to `xi`.
fn nearby_edges(potential: &Potential, xi: f64) -> Result<Vec<f64>, WeylError> {
    Ok(match potential {
        Potential::Zero => vec![0.0],
        Potential::Constant { value } => vec![*value],
        _ if potential.period().is_some() => {
            let g = |x: f64| discriminant(potential, x).map(|d| d.abs() - 2.0);
            let (a, b, c) = (g(xi - BAND_EDGE_ZONE)?, g(xi)?, g(xi + BAND_EDGE_ZONE)?);
            if a.signum() != b.signum() || b.signum() != c.signum() {
                vec![xi]
            } else {
                Vec::new()
            }
        }
        _ => Vec::new(),
    })
}

/// Richardson extrapolation of `(1/π) Im m(ξ + iε)` over a decreasing ladder.
pub fn spectral_density(potential: &Potential, xi: f64, ladder: &[f64]) -> Result<SpectralDensity, WeylError> {
    if ladder.len() < 2 || ladder.iter().any(|&e| !(e > 0.0)) || ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(WeylError::Ladder);
    }
    if let Some(&edge) = nearby_edges(potential, xi)?.iter().find(|&&e| (e - xi).abs() < BAND_EDGE_ZONE) {
        return Err(WeylError::BandEdge { xi, edge, zone: BAND_EDGE_ZONE });
    }
    let samples: Vec<(f64, f64)> = ladder
        .iter()
        .map(|&eps| {
            let z = Complex64::new(xi, eps);
            Ok((eps, m_function(potential, z, DEFAULT_DISK_TOL * 1e-2)?.im / std::f64::consts::PI))
        })
        .collect::<Result<_, WeylError>>()?;
    let rich = |a: (f64, f64), b: (f64, f64)| (a.0 * b.1 - b.0 * a.1) / (a.0 - b.0);
    let n = samples.len();
    let best = rich(samples[n - 2], samples[n - 1]);
    let residual = if n >= 3 { (best - rich(samples[n - 3], samples[n - 2])).abs() } else { (samples[n - 1].1 - samples[n - 2].1).abs() };
    let diffs: Vec<f64> = samples.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let scale = samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
    let oscillating = diffs
        .windows(2)
        .any(|d| d[0].abs() > 1e-12 * scale && d[1].abs() > 1e-12 * scale && d[0].signum() != d[1].signum());
    Ok(SpectralDensity { xi, f_mu: best, extrapolation_residual: residual, oscillating, ladder: samples })
}

/// Bands of a periodic potential inside a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FloquetBands {
    pub set: FiniteGapSet,
    /// Every open gap found in the window, before truncation.
    pub all_gaps: Vec<(f64, f64)>,
    pub max_edge_residual: f64,
    pub warning: Option<String>,
}

fn bisect(f: &dyn Fn(f64) -> Result<f64, WeylError>, mut lo: f64, mut hi: f64) -> Result<f64, WeylError> {
    let mut flo = f(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section maximum of `f` on `[a, b]`.
fn golden_max(f: &dyn Fn(f64) -> Result<f64, WeylError>, mut a: f64, mut b: f64) -> Result<(f64, f64), WeylError> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > 1e-13 * (1.0 + a.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

/// Locates `{|Δ| ≤ 2}` in `[lo, hi]` and returns the finite-gap set that
/// keeps the first `n_gaps` open gaps (later gaps are closed and the last
/// band runs to `∞`).
pub fn floquet_bands(potential: &Potential, window: (f64, f64), n_gaps: usize) -> Result<FloquetBands, WeylError> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(WeylError::Window(lo, hi));
    }
    let p = floquet_period(potential).ok_or(WeylError::NotPeriodic)?;
    let excess = |x: f64| discriminant(potential, x).map(|d| d.abs() - 2.0);
    // Δ oscillates with phase ≈ p√ξ; resolve it with ~50 samples per π.
    let phase_span = p * ((hi - lo).max(0.0) + hi.abs()).sqrt();
    let n = ((phase_span * 50.0 / std::f64::consts::PI).ceil() as usize).max(400);
    let grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| excess(x)).collect::<Result<_, _>>()?;

    let mut warning = None;
    if vals[0] <= 0.0 {
        warning = Some(format!("window starts inside a band at {lo}; spectrum minimum not bracketed"));
    }
    // transitions: +1 entering a band, -1 leaving
    let mut edges: Vec<(f64, bool)> = Vec::new();
    for i in 0..n {
        let (a, b) = (vals[i], vals[i + 1]);
        if (a > 0.0) != (b > 0.0) {
            let e = bisect(&excess, grid[i], grid[i + 1])?;
            edges.push((e, a > 0.0));
        }
    }
    // gaps too narrow for the grid show up as local maxima of |Δ| just below 2
    for i in 1..n {
        let (a, b, c) = (vals[i - 1], vals[i], vals[i + 1]);
        if b <= 0.0 && a <= 0.0 && c <= 0.0 && b >= a && b >= c && b > -0.05 {
            let (xm, fm) = golden_max(&excess, grid[i - 1], grid[i + 1])?;
            if fm > 1e-10 {
                let left = bisect(&excess, grid[i - 1], xm)?;
                let right = bisect(&excess, xm, grid[i + 1])?;
                edges.push((left, false));
                edges.push((right, true));
            }
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0));
    edges.dedup_by(|x, y| (x.0 - y.0).abs() < 1e-12 * (1.0 + x.0.abs()) && x.1 == y.1);

    let start = if vals[0] <= 0.0 { Some(lo) } else { None };
    let mut b0 = start;
    let mut gaps = Vec::new();
    let mut open_gap: Option<f64> = None;
    for &(e, entering) in &edges {
        if entering {
            match (b0, open_gap.take()) {
                (None, _) => b0 = Some(e),
                (Some(_), Some(a)) => gaps.push((a, e)),
                _ => {}
            }
        } else if b0.is_some() {
            open_gap = Some(e);
        }
    }
    if open_gap.is_some() {
        warning.get_or_insert_with(|| format!("window ends inside a gap at {hi}"));
    }
    let b0 = match b0 {
        Some(b) => b,
        None => {
            return Err(WeylError::Window(lo, hi));
        }
    };
    let max_edge_residual = std::iter::once(b0)
        .chain(gaps.iter().flat_map(|&(a, b)| [a, b]))
        .filter(|&e| e > lo)
        .map(|e| excess(e).map(f64::abs))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let kept: Vec<(f64, f64)> = gaps.iter().copied().take(n_gaps).collect();
    let set = FiniteGapSet::new(b0, kept)?;
    Ok(FloquetBands { set, all_gaps: gaps, max_edge_residual, warning })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_disks_contract_to_closed_form() {
        let z = c(1.0, 1.0);
        let exact = c(0.0, 1.0) / sqrt_upper(z);
        let d10 = weyl_disk(&Potential::Zero, z, 10.0).unwrap();
        let d20 = weyl_disk(&Potential::Zero, z, 20.0).unwrap();
        assert!(d20.radius < d10.radius);
        assert!((d20.center - exact).norm() <= d20.radius * (1.0 + 1e-6));
        let m = m_function(&Potential::Zero, c(0.0, 1.0), 1e-10).unwrap();
        assert!((m - Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-9);
    }

    #[test]
    fn shifted_constant() {
        let z = c(2.0, 0.5);
        let m = m_function(&Potential::constant(1.5), z, 1e-10).unwrap();
        assert!((m - c(0.0, 1.0) / sqrt_upper(z - 1.5)).norm() < 1e-9);
    }

    #[test]
    fn guards_lower_half_plane() {
        assert!(matches!(m_function(&Potential::Zero, c(1.0, -1.0), 1e-8), Err(WeylError::LowerHalfPlane(_))));
        assert!(matches!(weyl_disk(&Potential::Zero, c(1.0, 0.0), 5.0), Err(WeylError::LowerHalfPlane(_))));
    }

    #[test]
    fn nesting_for_oscillating() {
        let z = c(1.0, 1.0);
        let r: Vec<f64> = [5.0, 10.0, 20.0, 40.0].iter().map(|&x| weyl_disk(&Potential::OscillatingExample, z, x).unwrap().radius).collect();
        assert!(r.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn floquet_matches_disks() {
        let v = Potential::cosine(1.0, 0.3, 2.0);
        for &z in &[c(1.0, 0.5), c(7.0, 0.1), c(-2.0, 1.0)] {
            let a = floquet_m(&v, z).unwrap();
            let b = m_function(&v, z, 1e-10).unwrap();
            assert!((a - b).norm() < 1e-6, "{z}: {a} vs {b}");
            assert!(a.im > 0.0);
        }
        let free = floquet_m(&Potential::Zero, c(3.0, 0.2)).unwrap();
        assert!((free - c(0.0, 1.0) / sqrt_upper(c(3.0, 0.2))).norm() < 1e-12);
    }

    #[test]
    fn densities() {
        let d = spectral_density(&Potential::Zero, 4.0, &DEFAULT_LADDER).unwrap();
        assert!((d.f_mu - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-6, "{d:?}");
        let d = spectral_density(&Potential::constant(2.0), 3.0, &DEFAULT_LADDER).unwrap();
        assert!((d.f_mu - 1.0 / std::f64::consts::PI).abs() < 1e-6);
        assert!(!d.oscillating);
        assert!(matches!(spectral_density(&Potential::constant(2.0), 2.0005, &DEFAULT_LADDER), Err(WeylError::BandEdge { .. })));
        assert!(matches!(spectral_density(&Potential::Zero, 1.0, &[1e-2, 1e-1]), Err(WeylError::Ladder)));
    }

    #[test]
    fn free_bands() {
        let b = floquet_bands(&Potential::Zero, (-2.0, 200.0), 3).unwrap();
        assert!(b.set.gaps.is_empty());
        assert!(b.set.b0.abs() < 1e-12);
        let b = floquet_bands(&Potential::constant(1.7), (-2.0, 50.0), 3).unwrap();
        assert!((b.set.b0 - 1.7).abs() < 1e-12);
        assert!(b.set.gaps.is_empty());
        assert!(b.warning.is_none());
    }

    #[test]
    fn cosine_bands() {
        let v = Potential::cosine(1.0, 0.0, 4.0);
        let b = floquet_bands(&v, (-10.0, 120.0), 2).unwrap();
        assert!(b.all_gaps.len() >= 3);
        assert_eq!(b.set.gaps.len(), 2);
        assert!(b.max_edge_residual < 1e-9);
        let b = floquet_bands(&v, (0.0, 120.0), 2).unwrap();
        assert!(b.warning.is_some());
        assert!(matches!(floquet_bands(&Potential::OscillatingExample, (0.0, 1.0), 1), Err(WeylError::NotPeriodic)));
    }
}
