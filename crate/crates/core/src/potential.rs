//! Potentials on the half-line and the global quantities attached to them:
//! the uniform local L1 norm and Cesàro means.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::quadrature::gauss_legendre_20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("position {x} outside the tabulated range [0, {end})")]
    OutOfRange { x: f64, end: f64 },
    #[error("negative position {0}")]
    Negative(f64),
    #[error("breakpoints must be strictly increasing and positive (index {index})")]
    Breakpoints { index: usize },
    #[error("piecewise potential needs {expected} values, got {got}")]
    ValueCount { expected: usize, got: usize },
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("{0} contains a non-finite value")]
    NonFinite(&'static str),
    #[error("periodic sample list is empty")]
    EmptySamples,
}

/// One period of a periodic potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PeriodicProfile {
    /// `mean + amplitude * cos(2πx / period)`.
    Cosine { mean: f64, amplitude: f64 },
    /// Piecewise-constant samples on equal sub-cells of the period.
    Samples { values: Vec<f64> },
}

/// A real potential on `[0, ∞)`.
///
/// Every variant except the cosine profile is piecewise constant, which lets
/// the solvers propagate exactly cell by cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Zero,
    Constant { value: f64 },
    /// `values[i]` on `[breakpoints[i-1], breakpoints[i])` with implicit
    /// breakpoints `0` and `∞`; the last value extends to infinity.
    Piecewise { breakpoints: Vec<f64>, values: Vec<f64> },
    Periodic { period: f64, profile: PeriodicProfile },
    /// `V(x) = (-1)^{⌊2n(x-n)⌋}` on `[n-1, n)`.
    OscillatingExample,
    /// `values[i]` on `[i*step, (i+1)*step)`; undefined beyond the table.
    Grid { step: f64, values: Vec<f64> },
}

/// How the potential behaves on one piece of the line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PieceKind {
    Flat(f64),
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub kind: PieceKind,
}

impl Piece {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }
}

impl Potential {
    pub fn constant(value: f64) -> Self {
        Potential::Constant { value }
    }

    pub fn cosine(period: f64, mean: f64, amplitude: f64) -> Self {
        Potential::Periodic { period, profile: PeriodicProfile::Cosine { mean, amplitude } }
    }

    pub fn validate(&self) -> Result<(), PotentialError> {
        match self {
            Potential::Zero | Potential::OscillatingExample => Ok(()),
            Potential::Constant { value } => finite("constant", std::slice::from_ref(value)),
            Potential::Piecewise { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(PotentialError::ValueCount {
                        expected: breakpoints.len() + 1,
                        got: values.len(),
                    });
                }
                finite("piecewise values", values)?;
                let mut prev = 0.0;
                for (index, &b) in breakpoints.iter().enumerate() {
                    if !(b > prev) || !b.is_finite() {
                        return Err(PotentialError::Breakpoints { index });
                    }
                    prev = b;
                }
                Ok(())
            }
            Potential::Periodic { period, profile } => {
                positive("period", *period)?;
                match profile {
                    PeriodicProfile::Cosine { mean, amplitude } => finite("cosine profile", &[*mean, *amplitude]),
                    PeriodicProfile::Samples { values } => {
                        if values.is_empty() {
                            return Err(PotentialError::EmptySamples);
                        }
                        finite("periodic samples", values)
                    }
                }
            }
            Potential::Grid { step, values } => {
                positive("grid step", *step)?;
                finite("grid values", values)
            }
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            Potential::Periodic { period, .. } => Some(*period),
            _ => None,
        }
    }

    /// End of the domain of definition (`∞` unless tabulated).
    pub fn domain_end(&self) -> f64 {
        match self {
            Potential::Grid { step, values } => *step * values.len() as f64,
            _ => f64::INFINITY,
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<f64, PotentialError> {
        if x < 0.0 {
            return Err(PotentialError::Negative(x));
        }
        Ok(match self {
            Potential::Zero => 0.0,
            Potential::Constant { value } => *value,
            Potential::Piecewise { breakpoints, values } => {
                let idx = breakpoints.partition_point(|&b| b <= x);
                values[idx]
            }
            Potential::Periodic { period, profile } => match profile {
                PeriodicProfile::Cosine { mean, amplitude } => mean + amplitude * (2.0 * PI * x / period).cos(),
                PeriodicProfile::Samples { values } => {
                    let phase = (x / period).fract();
                    let idx = ((phase * values.len() as f64) as usize).min(values.len() - 1);
                    values[idx]
                }
            },
            Potential::OscillatingExample => {
                let n = x.floor() + 1.0;
                let m = (2.0 * n * (x - n)).floor();
                if (m as i64).rem_euclid(2) == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Potential::Grid { step, values } => {
                let end = self.domain_end();
                if x >= end {
                    return Err(PotentialError::OutOfRange { x, end });
                }
                values[((x / step) as usize).min(values.len() - 1)]
            }
        })
    }

    /// Smallest and largest value taken (essential bounds on the whole line).
    pub fn bounds(&self) -> (f64, f64) {
        let minmax = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        match self {
            Potential::Zero => (0.0, 0.0),
            Potential::Constant { value } => (*value, *value),
            Potential::Piecewise { values, .. } | Potential::Grid { values, .. } => minmax(values),
            Potential::Periodic { profile, .. } => match profile {
                PeriodicProfile::Cosine { mean, amplitude } => (mean - amplitude.abs(), mean + amplitude.abs()),
                PeriodicProfile::Samples { values } => minmax(values),
            },
            Potential::OscillatingExample => (-1.0, 1.0),
        }
    }

    /// Decomposes `[a, b]` into pieces on which the potential is either
    /// constant or smooth.
    pub fn pieces(&self, a: f64, b: f64) -> Result<Vec<Piece>, PotentialError> {
        if a < 0.0 {
            return Err(PotentialError::Negative(a));
        }
        let end = self.domain_end();
        if b > end {
            return Err(PotentialError::OutOfRange { x: b, end });
        }
        let mut out = Vec::new();
        if b <= a {
            return Ok(out);
        }
        let mut push = |start: f64, stop: f64, kind: PieceKind| {
            let s = start.max(a);
            let e = stop.min(b);
            if e > s {
                out.push(Piece { start: s, end: e, kind });
            }
        };
        match self {
            Potential::Zero => push(a, b, PieceKind::Flat(0.0)),
            Potential::Constant { value } => push(a, b, PieceKind::Flat(*value)),
            Potential::Piecewise { breakpoints, values } => {
                let mut lo = 0.0;
                for (i, &v) in values.iter().enumerate() {
                    let hi = breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
                    if hi > a && lo < b {
                        push(lo, hi, PieceKind::Flat(v));
                    }
                    lo = hi;
                    if lo >= b {
                        break;
                    }
                }
            }
            Potential::Periodic { period, profile } => {
                let first = (a / period).floor() as i64;
                let last = (b / period).ceil() as i64;
                for k in first..last {
                    let base = k as f64 * period;
                    match profile {
                        PeriodicProfile::Cosine { .. } => push(base, base + period, PieceKind::Smooth),
                        PeriodicProfile::Samples { values } => {
                            let w = period / values.len() as f64;
                            for (i, &v) in values.iter().enumerate() {
                                let lo = base + i as f64 * w;
                                let hi = if i + 1 == values.len() { base + period } else { lo + w };
                                push(lo, hi, PieceKind::Flat(v));
                            }
                        }
                    }
                }
            }
            Potential::OscillatingExample => {
                let first = a.floor() as i64 + 1;
                let last = b.ceil() as i64;
                for n in first..=last.max(first) {
                    let left = (n - 1) as f64;
                    if left >= b {
                        break;
                    }
                    let cells = 2 * n;
                    let w = 1.0 / cells as f64;
                    let i0 = if a > left { (((a - left) / w).floor() as i64).clamp(0, cells - 1) } else { 0 };
                    for i in i0..cells {
                        let lo = left + i as f64 * w;
                        if lo >= b {
                            break;
                        }
                        let hi = if i + 1 == cells { n as f64 } else { left + (i + 1) as f64 * w };
                        let v = if i % 2 == 0 { 1.0 } else { -1.0 };
                        push(lo, hi, PieceKind::Flat(v));
                    }
                }
            }
            Potential::Grid { step, values } => {
                let i0 = (a / step).floor() as usize;
                for (i, &v) in values.iter().enumerate().skip(i0) {
                    let lo = i as f64 * step;
                    if lo >= b {
                        break;
                    }
                    push(lo, lo + step, PieceKind::Flat(v));
                }
            }
        }
        Ok(out)
    }

    /// `∫_a^b V` (signed), exact on constant pieces.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64, PotentialError> {
        if let Potential::Periodic { period, profile: PeriodicProfile::Cosine { mean, amplitude } } = self {
            let anti = |x: f64| mean * x + amplitude * period / (2.0 * PI) * (2.0 * PI * x / period).sin();
            return Ok(anti(b) - anti(a));
        }
        self.piece_integral(a, b, |v| v)
    }

    /// `∫_a^b |V|`.
    pub fn abs_integral(&self, a: f64, b: f64) -> Result<f64, PotentialError> {
        self.piece_integral(a, b, f64::abs)
    }

    fn piece_integral(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> Result<f64, PotentialError> {
        let mut acc = 0.0;
        for p in self.pieces(a, b)? {
            acc += match p.kind {
                PieceKind::Flat(v) => g(v) * p.width(),
                PieceKind::Smooth => self.smooth_integral(p.start, p.end, &g),
            };
        }
        Ok(acc)
    }

    fn smooth_integral(&self, a: f64, b: f64, g: &impl Fn(f64) -> f64) -> f64 {
        let rule = gauss_legendre_20();
        // |cos| has kinks; 16 panels per piece keeps the abs-integral accurate to ~1e-8
        let panels = 16;
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * h;
                rule.integrate(lo, lo + h, |x| {
                    num_complex::Complex64::new(g(self.evaluate(x).unwrap_or(0.0)), 0.0)
                })
                .re
            })
            .sum()
    }

    /// Cesàro mean `(1/L) ∫_0^L V`.
    pub fn cesaro_mean(&self, length: f64) -> Result<f64, PotentialError> {
        positive("length", length)?;
        Ok(self.integral(0.0, length)? / length)
    }

    /// `sup_{0 ≤ x ≤ horizon} ∫_x^{x+1} |V|`.
    ///
    /// For piecewise-constant potentials the window integral is piecewise
    /// linear in `x` with kinks at breakpoints and breakpoints minus one, so
    /// evaluating it at those shifts gives the exact supremum.
    pub fn local_l1_sup(&self, horizon: f64) -> Result<f64, PotentialError> {
        positive("horizon", horizon)?;
        let pieces = self.pieces(0.0, horizon + 1.0)?;
        let mut edges = Vec::with_capacity(pieces.len() + 1);
        let mut cumulative = Vec::with_capacity(pieces.len() + 1);
        edges.push(0.0);
        cumulative.push(0.0);
        let mut acc = 0.0;
        let mut smooth = false;
        for p in &pieces {
            acc += match p.kind {
                PieceKind::Flat(v) => v.abs() * p.width(),
                PieceKind::Smooth => {
                    smooth = true;
                    self.smooth_integral(p.start, p.end, &f64::abs)
                }
            };
            edges.push(p.end);
            cumulative.push(acc);
        }
        let antiderivative = |x: f64| -> f64 {
            let i = edges.partition_point(|&e| e <= x).saturating_sub(1).min(pieces.len().saturating_sub(1));
            let p = &pieces[i];
            let partial = match p.kind {
                PieceKind::Flat(v) => v.abs() * (x - p.start),
                PieceKind::Smooth => self.smooth_integral(p.start, x, &f64::abs),
            };
            cumulative[i] + partial
        };
        let window = |x: f64| antiderivative(x + 1.0) - antiderivative(x);
        let mut candidates = vec![0.0, horizon];
        if smooth {
            let n = (horizon * 64.0).ceil() as usize;
            candidates.extend((0..=n).map(|k| horizon * k as f64 / n as f64));
        }
        for &e in &edges {
            for c in [e, e - 1.0] {
                if (0.0..=horizon).contains(&c) {
                    candidates.push(c);
                }
            }
        }
        Ok(candidates.into_iter().map(window).fold(0.0, f64::max))
    }
}

fn positive(what: &'static str, value: f64) -> Result<(), PotentialError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(PotentialError::NonPositive { what, value })
    }
}

fn finite(what: &'static str, values: &[f64]) -> Result<(), PotentialError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(PotentialError::NonFinite(what))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_examples() {
        assert_eq!(Potential::Zero.evaluate(3.7).unwrap(), 0.0);
        assert_eq!(Potential::OscillatingExample.evaluate(0.1).unwrap(), 1.0);
        assert_eq!(Potential::constant(5.0).evaluate(100.0).unwrap(), 5.0);
    }

    #[test]
    fn oscillating_example_matches_floor_formula() {
        // second cell of [0,1) has width 1/2 and sign -1; on [1,2) cells are 1/4 wide
        let v = Potential::OscillatingExample;
        assert_eq!(v.evaluate(0.6).unwrap(), -1.0);
        assert_eq!(v.evaluate(1.1).unwrap(), 1.0);
        assert_eq!(v.evaluate(1.3).unwrap(), -1.0);
        assert_eq!(v.evaluate(1.6).unwrap(), 1.0);
        for k in 0..2000 {
            let x = k as f64 * 0.00731;
            let p = v.pieces(x, x + 1e-9).unwrap();
            let PieceKind::Flat(val) = p[0].kind else { panic!() };
            assert_eq!(val, v.evaluate(x).unwrap(), "x = {x}");
        }
    }

    #[test]
    fn pieces_cover_the_interval() {
        let v = Potential::OscillatingExample;
        let p = v.pieces(0.3, 3.7).unwrap();
        assert_eq!(p.first().unwrap().start, 0.3);
        assert_eq!(p.last().unwrap().end, 3.7);
        for w in p.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
    }

    #[test]
    fn grid_range_error() {
        let v = Potential::Grid { step: 0.5, values: vec![1.0, 2.0] };
        assert_eq!(v.evaluate(0.7).unwrap(), 2.0);
        assert!(matches!(v.evaluate(1.0), Err(PotentialError::OutOfRange { .. })));
        assert!(v.cesaro_mean(2.0).is_err());
        assert!((v.cesaro_mean(1.0).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn cesaro_examples() {
        assert_eq!(Potential::constant(5.0).cesaro_mean(17.3).unwrap(), 5.0);
        assert_eq!(Potential::Zero.cesaro_mean(10.0).unwrap(), 0.0);
        let m = Potential::OscillatingExample.cesaro_mean(1000.0).unwrap();
        assert!(m.abs() <= 0.02);
        let c = Potential::cosine(2.0, 0.7, 3.0);
        assert!((c.cesaro_mean(10.0).unwrap() - 0.7).abs() < 1e-14);
    }

    #[test]
    fn oscillating_cesaro_decays() {
        let v = Potential::OscillatingExample;
        // whole unit intervals cancel exactly
        for l in [100.0, 300.0, 1000.0] {
            assert!(v.cesaro_mean(l).unwrap().abs() < 1e-12);
        }
        // off-integer lengths pick up at most one cell of width 1/(2n)
        for l in [100.3, 300.3, 1000.3] {
            assert!(v.cesaro_mean(l).unwrap().abs() <= 1.0 / l);
        }
    }

    #[test]
    fn local_l1_examples() {
        assert_eq!(Potential::constant(-2.0).local_l1_sup(50.0).unwrap(), 2.0);
        assert!((Potential::OscillatingExample.local_l1_sup(50.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(Potential::Zero.local_l1_sup(50.0).unwrap(), 0.0);
    }

    #[test]
    fn local_l1_sup_exact_on_bump() {
        // a single bump of height 3 on [2, 2.4) plus 1 on [2.4, 5): best window is [2, 3)
        let v = Potential::Piecewise { breakpoints: vec![2.0, 2.4, 5.0], values: vec![0.0, 3.0, 1.0, 0.0] };
        assert!((v.local_l1_sup(10.0).unwrap() - (1.2 + 0.6)).abs() < 1e-14);
        // window can start no later than 1.5: [1.5, 2.5) holds 0.4 * 3 + 0.1 * 1
        assert!((v.local_l1_sup(1.5).unwrap() - 1.3).abs() < 1e-14);
    }

    #[test]
    fn validation() {
        let bad = Potential::Piecewise { breakpoints: vec![1.0, 1.0], values: vec![0.0; 3] };
        assert_eq!(bad.validate(), Err(PotentialError::Breakpoints { index: 1 }));
        let bad = Potential::Grid { step: 0.0, values: vec![1.0] };
        assert!(bad.validate().is_err());
        let bad = Potential::Piecewise { breakpoints: vec![1.0], values: vec![0.0] };
        assert!(matches!(bad.validate(), Err(PotentialError::ValueCount { .. })));
    }

    #[test]
    fn serde_tags() {
        let v: Potential = serde_json::from_str(r#"{"kind":"oscillating_example"}"#).unwrap();
        assert_eq!(v, Potential::OscillatingExample);
        let v: Potential = serde_json::from_str(r#"{"kind":"periodic","period":1.0,"profile":{"shape":"cosine","mean":0.0,"amplitude":2.0}}"#).unwrap();
        assert_eq!(v, Potential::cosine(1.0, 0.0, 2.0));
    }
}
