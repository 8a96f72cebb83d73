//! Config-driven experiment runner behind the `christoffel-lab` binary.
//!
//! A run reads one TOML document, executes a single experiment and writes
//! `data/*.csv` plus `manifest.json` into the output directory. Data files
//! hold no timing information and are assembled in a fixed order, so they
//! are byte-identical across reruns and thread counts.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::canonical::kernel_via_jform;
use crate::kernel::{kernel_boundary, kernel_quadrature};
use crate::lab::{
    christoffel_sweep, clock_spacing_check, counting_measure_compare, interlacing_check, truncation_spectrum,
    uniform_bins, universality_on, symmetric_grid,
};
use crate::martin::{gap_condition_residuals, martin_density, martin_function, FiniteGapSet, MartinData};
use crate::ode::growth_rate;
use crate::potential::Potential;
use crate::weyl::{floquet_bands, floquet_m, spectral_density, DEFAULT_LADDER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_STRICT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "christoffel-lab", version, about = "Run a Christoffel-function experiment from a TOML config")]
pub struct Args {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the `experiment` key of the config.
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,
    /// Exit with status 2 if any summary deviation exceeds its tolerance.
    #[arg(long)]
    pub strict: bool,
    /// Overrides the `output` key of the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, env = "CHRISTOFFEL_LAB_THREADS", default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Christoffel,
    Universality,
    Clock,
    Martin,
    Kernel,
    Regularity,
}

/// Either `"from_floquet"` or an explicit set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetSpec {
    Named(String),
    Explicit(FiniteGapSet),
}

/// A list of reals, a list of `[re, im]` pairs, or `{ start, stop, n }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Real(Vec<f64>),
    Complex(Vec<[f64; 2]>),
    Linspace { start: f64, stop: f64, n: usize },
}

impl GridSpec {
    fn len(&self) -> usize {
        match self {
            GridSpec::Real(v) => v.len(),
            GridSpec::Complex(v) => v.len(),
            GridSpec::Linspace { n, .. } => *n,
        }
    }

    fn reals(&self) -> Option<Vec<f64>> {
        match self {
            GridSpec::Real(v) => Some(v.clone()),
            GridSpec::Complex(_) => None,
            GridSpec::Linspace { start, stop, n } => Some(match n {
                1 => vec![*start],
                _ => (0..*n).map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64).collect(),
            }),
        }
    }

    fn complexes(&self) -> Vec<Complex64> {
        match self {
            GridSpec::Complex(v) => v.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
            _ => self.reals().unwrap_or_default().into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloquetSpec {
    pub window: (f64, f64),
    #[serde(default = "default_max_gaps")]
    pub max_gaps: usize,
}

fn default_max_gaps() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub potential: Potential,
    #[serde(default)]
    pub set: Option<SetSpec>,
    #[serde(default)]
    pub floquet: Option<FloquetSpec>,
    #[serde(default)]
    pub grids: BTreeMap<String, GridSpec>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Named tolerances with their defaults.
pub const TOLERANCES: &[(&str, f64)] = &[
    ("christoffel_sup", 0.02),
    ("universality_sup", 0.05),
    ("clock_spacing", 0.01),
    ("counting_tv", 0.05),
    ("martin_solve", 1e-12),
    ("gap_residual", 1e-10),
    ("kernel_quadrature", 1e-12),
    ("kernel_agreement", 1e-8),
    ("cesaro", 0.02),
    ("growth", 0.05),
];

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn cfg_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| cfg_err(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.potential.validate().map_err(|e| cfg_err(format!("potential: {e}")))?;
        for (name, grid) in &self.grids {
            if grid.len() == 0 {
                return Err(cfg_err(format!("grids.{name}: grid is empty")));
            }
            let finite = match grid {
                GridSpec::Real(v) => v.iter().all(|x| x.is_finite()),
                GridSpec::Complex(v) => v.iter().flatten().all(|x| x.is_finite()),
                GridSpec::Linspace { start, stop, .. } => start.is_finite() && stop.is_finite(),
            };
            if !finite {
                return Err(cfg_err(format!("grids.{name}: non-finite entry")));
            }
        }
        for (name, &value) in &self.tolerances {
            if !TOLERANCES.iter().any(|(n, _)| n == name) {
                let known: Vec<&str> = TOLERANCES.iter().map(|(n, _)| *n).collect();
                return Err(cfg_err(format!("tolerances.{name}: unknown tolerance (known: {})", known.join(", "))));
            }
            if !(value > 0.0 && value.is_finite()) {
                return Err(cfg_err(format!("tolerances.{name}: must be positive, got {value}")));
            }
        }
        match &self.set {
            Some(SetSpec::Named(n)) if n != "from_floquet" => {
                return Err(cfg_err(format!("set: expected \"from_floquet\" or a table, got \"{n}\"")));
            }
            Some(SetSpec::Explicit(s)) => validate_set(s)?,
            _ => {}
        }
        if let Some(f) = &self.floquet {
            if !(f.window.0 < f.window.1) {
                return Err(cfg_err(format!("floquet.window: [{}, {}] is not increasing", f.window.0, f.window.1)));
            }
        }
        Ok(())
    }
}

fn validate_set(set: &FiniteGapSet) -> Result<(), ConfigError> {
    if !set.b0.is_finite() {
        return Err(cfg_err("set.b0: must be finite"));
    }
    let mut prev = set.b0;
    for (i, &(a, b)) in set.gaps.iter().enumerate() {
        if !(prev < a && a < b) {
            let what = if prev < a { format!("a = {a} must be < b = {b}") } else { format!("a = {a} must be > previous edge {prev}") };
            return Err(cfg_err(format!("set.gaps[{i}] = [{a}, {b}]: invalid gap ordering, {what}")));
        }
        prev = b;
    }
    Ok(())
}

/// Tolerance lookup that records every value it hands out.
struct Tolerances<'a> {
    overrides: &'a BTreeMap<String, f64>,
    used: BTreeMap<String, f64>,
}

impl Tolerances<'_> {
    fn get(&mut self, name: &str) -> f64 {
        let default = TOLERANCES.iter().find(|(n, _)| *n == name).map(|(_, v)| *v).expect("known tolerance");
        let v = self.overrides.get(name).copied().unwrap_or(default);
        self.used.insert(name.to_string(), v);
        v
    }
}

/// Outcome of one experiment before it is written to disk.
pub struct Report {
    pub files: Vec<(String, String)>,
    pub summary: BTreeMap<String, Value>,
    pub tolerances: BTreeMap<String, f64>,
    pub breaches: Vec<String>,
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| e.to_string())?;
    for r in rows {
        w.write_record(r).map_err(|e| e.to_string())?;
    }
    String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    tol: Tolerances<'a>,
    summary: BTreeMap<String, Value>,
    breaches: Vec<String>,
    files: Vec<(String, String)>,
}

impl Ctx<'_> {
    fn reals(&self, name: &str, default: &[f64]) -> Result<Vec<f64>, String> {
        match self.cfg.grids.get(name) {
            None => Ok(default.to_vec()),
            Some(g) => g.reals().ok_or_else(|| format!("grids.{name}: expected real values")),
        }
    }

    fn complexes(&self, name: &str, default: impl FnOnce() -> Vec<Complex64>) -> Vec<Complex64> {
        self.cfg.grids.get(name).map_or_else(default, GridSpec::complexes)
    }

    fn check(&mut self, name: &str, value: f64, limit: f64) {
        if !(value <= limit) {
            self.breaches.push(format!("{name} = {value:e} exceeds {limit:e}"));
        }
    }

    fn write(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), String> {
        self.files.push((name.to_string(), csv_text(header, rows)?));
        Ok(())
    }

    /// The set configured for the run, defaulting to the half-line above the
    /// essential spectrum of simple potentials.
    fn set(&mut self) -> Result<FiniteGapSet, String> {
        let v = &self.cfg.potential;
        match &self.cfg.set {
            Some(SetSpec::Explicit(s)) => Ok(s.clone()),
            Some(SetSpec::Named(_)) => {
                let spec = self.cfg.floquet.clone().unwrap_or_else(|| {
                    let (lo, hi) = v.bounds();
                    FloquetSpec { window: (lo - 1.0, hi + 50.0), max_gaps: default_max_gaps() }
                });
                let bands = floquet_bands(v, spec.window, spec.max_gaps).map_err(|e| e.to_string())?;
                self.summary.insert("floquet_edge_residual".into(), json!(bands.max_edge_residual));
                if let Some(w) = &bands.warning {
                    self.summary.insert("floquet_warning".into(), json!(w));
                }
                Ok(bands.set)
            }
            None => Ok(match v {
                Potential::Constant { value } => FiniteGapSet::half_line(*value),
                _ => FiniteGapSet::half_line(0.0),
            }),
        }
    }

    fn martin(&mut self) -> Result<MartinData, String> {
        let set = self.set()?;
        let tol = self.tol.get("martin_solve");
        MartinData::new(&set, tol).map_err(|e| e.to_string())
    }
}

/// `f_μ(ξ)`: closed form for constants, Floquet boundary value for periodic
/// potentials, ε-ladder extrapolation otherwise.
pub fn reference_density(potential: &Potential, xi: f64) -> Result<f64, String> {
    match potential {
        Potential::Zero => Ok(1.0 / (PI * xi.sqrt())),
        Potential::Constant { value } => Ok(1.0 / (PI * (xi - value).sqrt())),
        _ if potential.period().is_some() => floquet_m(potential, Complex64::new(xi, 1e-12))
            .map(|m| m.im / PI)
            .map_err(|e| e.to_string()),
        _ => spectral_density(potential, xi, &DEFAULT_LADDER).map(|d| d.f_mu).map_err(|e| e.to_string()),
    }
}

fn run_christoffel(ctx: &mut Ctx) -> Result<(), String> {
    let xs = ctx.reals("xi", &[0.5, 1.0, 2.0, 4.0])?;
    let lengths = ctx.reals("lengths", &[500.0])?;
    let data = ctx.martin()?;
    let v = &ctx.cfg.potential;
    let f_mu: Vec<f64> = xs.iter().map(|&x| reference_density(v, x)).collect::<Result<_, _>>()?;
    let f_e: Vec<f64> = xs.iter().map(|&x| martin_density(&data.set, x)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let lookup = |table: &[f64], x: f64| xs.iter().position(|&g| g == x).map_or(f64::NAN, |i| table[i]);
    let table = christoffel_sweep(v, &xs, &lengths, &|x| lookup(&f_mu, x), &|x| lookup(&f_e, x)).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<String>> = table.rows.iter().map(|r| vec![fmt(r.xi), fmt(r.length), fmt(r.l_lambda), fmt(r.reference), fmt(r.deviation)]).collect();
    ctx.write("christoffel.csv", &["xi", "L", "L_lambda", "reference", "deviation"], &rows)?;
    let limit = ctx.tol.get("christoffel_sup");
    let sup: Vec<Value> = table.sup_deviation.iter().map(|(l, d)| json!({ "L": l, "sup_deviation": d })).collect();
    ctx.summary.insert("christoffel".into(), Value::Array(sup));
    if let Some(&(_, d)) = table.sup_deviation.last() {
        ctx.check("christoffel sup deviation at largest L", d, limit);
    }
    Ok(())
}

fn run_universality(ctx: &mut Ctx) -> Result<(), String> {
    let xi = ctx.reals("xi", &[1.0])?[0];
    let lengths = ctx.reals("lengths", &[500.0, 1000.0])?;
    let z = ctx.complexes("z", || symmetric_grid(2.0, 21));
    let w = ctx.complexes("w", || z.clone());
    let data = ctx.martin()?;
    let f_e = martin_density(&data.set, xi).map_err(|e| e.to_string())?;
    let limit = ctx.tol.get("universality_sup");
    let mut rows = Vec::new();
    let mut sups = Vec::new();
    for &l in &lengths {
        let g = universality_on(&ctx.cfg.potential, l, xi, &z, &w, f_e).map_err(|e| e.to_string())?;
        for (i, zi) in z.iter().enumerate() {
            for (k, wk) in w.iter().enumerate() {
                let (r, s) = (g.ratio[i][k], g.sinc_ref[i][k]);
                rows.push(vec![fmt(l), fmt(zi.re), fmt(zi.im), fmt(wk.re), fmt(wk.im), fmt(r.re), fmt(r.im), fmt(s.re), fmt(s.im), fmt((r - s).norm())]);
            }
        }
        sups.push((l, g.sup_deviation));
    }
    ctx.write("universality.csv", &["L", "z_re", "z_im", "w_re", "w_im", "ratio_re", "ratio_im", "sinc_re", "sinc_im", "deviation"], &rows)?;
    ctx.summary.insert("universality".into(), Value::Array(sups.iter().map(|(l, d)| json!({ "L": l, "sup_deviation": d })).collect()));
    ctx.summary.insert("f_E".into(), json!(f_e));
    if let Some(&(_, d)) = sups.last() {
        ctx.check("universality sup deviation at largest L", d, limit);
    }
    let decreasing = sups.windows(2).all(|p| p[1].1 < p[0].1);
    ctx.summary.insert("universality_decreasing".into(), json!(decreasing));
    if !decreasing {
        ctx.breaches.push("universality deviation does not decrease along the length ladder".into());
    }
    Ok(())
}

fn run_clock(ctx: &mut Ctx) -> Result<(), String> {
    let xi = ctx.reals("xi", &[1.0])?[0];
    let lengths = ctx.reals("lengths", &[200.0])?;
    let js = ctx.reals("j", &[-2.0, -1.0, 0.0, 1.0, 2.0])?;
    if js.iter().any(|j| j.fract() != 0.0) {
        return Err("grids.j: indices must be integers".into());
    }
    let j_range = (js.iter().cloned().fold(f64::INFINITY, f64::min) as i64, js.iter().cloned().fold(f64::NEG_INFINITY, f64::max) as i64);
    let bins = ctx.reals("bins", &[])?;
    let data = ctx.martin()?;
    let set = data.set.clone();
    let f_e = |x: f64| martin_density(&set, x).unwrap_or(f64::NAN);
    let spacing_tol = ctx.tol.get("clock_spacing");
    let mut rows = Vec::new();
    let mut count_rows = Vec::new();
    let mut summary = Vec::new();
    for &l in &lengths {
        let out = clock_spacing_check(&ctx.cfg.potential, l, xi, j_range, &f_e).map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        for c in out.iter().filter(|c| js.contains(&(c.j as f64))) {
            rows.push(vec![fmt(l), c.j.to_string(), fmt(c.xi_j), fmt(c.xi_next), fmt(c.spacing_normalized), fmt(c.spacing_at_anchor)]);
            worst = worst.max((c.spacing_normalized - 1.0).abs());
        }
        let lo = out.first().map_or(xi, |c| c.xi_j);
        let hi = out.last().map_or(xi, |c| c.xi_next);
        let slice = truncation_spectrum(&ctx.cfg.potential, l, (lo - 1e-9 * (1.0 + lo.abs()), hi + 1e-9 * (1.0 + hi.abs()))).map_err(|e| e.to_string())?;
        let inter = interlacing_check(&ctx.cfg.potential, &slice).map_err(|e| e.to_string())?;
        let mut entry = json!({ "L": l, "max_spacing_deviation": worst, "interlacing_pairs": inter.pairs_checked, "interlacing_violations": inter.violations });
        ctx.check(&format!("clock spacing deviation at L = {l}"), worst, spacing_tol);
        if inter.violations > 0 {
            ctx.breaches.push(format!("{} interlacing violations at L = {l}", inter.violations));
        }
        if bins.len() >= 2 {
            let (b_lo, b_hi) = (bins[0], bins[bins.len() - 1]);
            let slice = truncation_spectrum(&ctx.cfg.potential, l, (b_lo, b_hi)).map_err(|e| e.to_string())?;
            let edges: Vec<(f64, f64)> = if bins.len() == 2 { uniform_bins(b_lo, b_hi, 10) } else { bins.windows(2).map(|p| (p[0], p[1])).collect() };
            let cmp = counting_measure_compare(&slice, &set, &edges).map_err(|e| e.to_string())?;
            for b in &cmp.bins {
                count_rows.push(vec![fmt(l), fmt(b.lo), fmt(b.hi), fmt(b.nu_l), fmt(b.rho_e)]);
            }
            entry["counting_total_variation"] = json!(cmp.total_variation);
            let tv_tol = ctx.tol.get("counting_tv");
            ctx.check(&format!("counting total variation at L = {l}"), cmp.total_variation, tv_tol);
        }
        summary.push(entry);
    }
    ctx.write("clock.csv", &["L", "j", "xi_j", "xi_next", "spacing_normalized", "spacing_at_anchor"], &rows)?;
    if !count_rows.is_empty() {
        ctx.write("counting.csv", &["L", "lo", "hi", "nu_L", "rho_E"], &count_rows)?;
    }
    ctx.summary.insert("clock".into(), Value::Array(summary));
    Ok(())
}

fn run_martin(ctx: &mut Ctx) -> Result<(), String> {
    let data = ctx.martin()?;
    let set = &data.set;
    let default_grid: Vec<f64> = set
        .bands()
        .iter()
        .flat_map(|&(a, b)| {
            let b = if b.is_finite() { b } else { a + 4.0 };
            (1..10).map(move |i| a + (b - a) * i as f64 / 10.0)
        })
        .collect();
    let xs = ctx.reals("xi", &default_grid)?;
    let mut rows = Vec::new();
    for &x in &xs {
        let f = if set.in_band_interior(x) { martin_density(set, x).map_err(|e| e.to_string())? } else { 0.0 };
        let m = martin_function(set, Complex64::new(x, 0.0)).map_err(|e| e.to_string())?;
        rows.push(vec![fmt(x), fmt(f), fmt(m)]);
    }
    ctx.write("martin.csv", &["xi", "f_E", "M_E"], &rows)?;
    let residuals = gap_condition_residuals(set).map_err(|e| e.to_string())?;
    let worst = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let limit = ctx.tol.get("gap_residual");
    ctx.check("gap-condition residual", worst, limit);
    ctx.summary.insert("critical_points".into(), json!(set.critical));
    for (i, c) in set.critical.iter().enumerate() {
        ctx.summary.insert(format!("c_{}", i + 1), json!(c));
    }
    ctx.summary.insert("gap_residual".into(), json!(worst));
    ctx.summary.insert("a_E".into(), json!(data.a_e));
    ctx.summary.insert("a_E_fit_residual".into(), json!(data.fit_residual));
    ctx.summary.insert("normalization_residual".into(), json!(data.normalization_residual));
    Ok(())
}

fn run_kernel(ctx: &mut Ctx) -> Result<(), String> {
    let lengths = ctx.reals("lengths", &[5.0])?;
    let z = ctx.complexes("z", || vec![Complex64::new(1.0, 0.5), Complex64::new(-2.0, 1.0), Complex64::new(10.0, -0.3)]);
    let w = ctx.complexes("w", || vec![Complex64::new(3.0, 0.2), Complex64::new(0.5, -1.0)]);
    let q_tol = ctx.tol.get("kernel_quadrature");
    let agree = ctx.tol.get("kernel_agreement");
    let v = &ctx.cfg.potential;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &l in &lengths {
        for zi in &z {
            for wk in &w {
                let q = kernel_quadrature(v, l, *zi, *wk, q_tol).map_err(|e| e.to_string())?.value;
                let b = kernel_boundary(v, l, *zi, *wk).map_err(|e| e.to_string())?.value;
                let j = kernel_via_jform(v, l, *zi, *wk).map_err(|e| e.to_string())?;
                let rel = |a: Complex64, c: Complex64| (a - c).norm() / (1.0 + a.norm().max(c.norm()));
                let d = rel(q, b).max(rel(q, j)).max(rel(b, j));
                worst = worst.max(d);
                rows.push(vec![fmt(l), fmt(zi.re), fmt(zi.im), fmt(wk.re), fmt(wk.im), fmt(q.re), fmt(q.im), fmt(b.re), fmt(b.im), fmt(j.re), fmt(j.im), fmt(d)]);
            }
        }
    }
    ctx.write(
        "kernel.csv",
        &["L", "z_re", "z_im", "w_re", "w_im", "quadrature_re", "quadrature_im", "boundary_re", "boundary_im", "jform_re", "jform_im", "max_rel_diff"],
        &rows,
    )?;
    ctx.summary.insert("kernel_max_rel_diff".into(), json!(worst));
    ctx.check("kernel method disagreement", worst, agree);
    Ok(())
}

fn run_regularity(ctx: &mut Ctx) -> Result<(), String> {
    let lengths = ctx.reals("lengths", &[10.0, 100.0, 1000.0])?;
    let xi = ctx.reals("xi", &[2.0])?[0];
    let xs = ctx.reals("x", &(0..=10).map(|i| 100.0 + 10.0 * i as f64).collect::<Vec<_>>())?;
    let data = ctx.martin()?;
    let v = &ctx.cfg.potential;
    let mut rows = Vec::new();
    let mut last_cesaro = 0.0;
    for &l in &lengths {
        let m = v.cesaro_mean(l).map_err(|e| e.to_string())?;
        rows.push(vec![fmt(l), fmt(m), fmt(m - data.a_e)]);
        last_cesaro = m - data.a_e;
    }
    ctx.write("regularity_cesaro.csv", &["L", "cesaro_mean", "minus_a_E"], &rows)?;
    let growth = growth_rate(v, Complex64::new(xi, 0.0), &xs).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<String>> = xs.iter().zip(&growth).map(|(&x, &g)| vec![fmt(x), fmt(g)]).collect();
    ctx.write("regularity_growth.csv", &["x", "growth_rate"], &rows)?;
    let worst_growth = growth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    ctx.summary.insert("a_E".into(), json!(data.a_e));
    ctx.summary.insert("cesaro_minus_a_E_at_largest_L".into(), json!(last_cesaro));
    ctx.summary.insert("max_growth_rate".into(), json!(worst_growth));
    let (c_tol, g_tol) = (ctx.tol.get("cesaro"), ctx.tol.get("growth"));
    ctx.check("Cesaro mean minus a_E at largest L", last_cesaro.abs(), c_tol);
    ctx.check("growth rate", worst_growth, g_tol);
    Ok(())
}

/// Runs the configured experiment and returns its artifacts.
pub fn execute(cfg: &ExperimentConfig) -> Result<Report, String> {
    let mut ctx = Ctx {
        cfg,
        tol: Tolerances { overrides: &cfg.tolerances, used: BTreeMap::new() },
        summary: BTreeMap::new(),
        breaches: Vec::new(),
        files: Vec::new(),
    };
    match cfg.experiment {
        Experiment::Christoffel => run_christoffel(&mut ctx)?,
        Experiment::Universality => run_universality(&mut ctx)?,
        Experiment::Clock => run_clock(&mut ctx)?,
        Experiment::Martin => run_martin(&mut ctx)?,
        Experiment::Kernel => run_kernel(&mut ctx)?,
        Experiment::Regularity => run_regularity(&mut ctx)?,
    }
    Ok(Report { files: ctx.files, summary: ctx.summary, tolerances: ctx.tol.used, breaches: ctx.breaches })
}

fn write_outputs(dir: &Path, cfg: &ExperimentConfig, report: &Report, wall: f64, threads: usize, strict: bool) -> std::io::Result<()> {
    let data = dir.join("data");
    std::fs::create_dir_all(&data)?;
    for (name, text) in &report.files {
        std::fs::write(data.join(name), text)?;
    }
    let manifest = json!({
        "config": cfg,
        "versions": { "christoffel-lab": env!("CARGO_PKG_VERSION") },
        "wall_time_seconds": wall,
        "threads": threads,
        "strict": strict,
        "files": report.files.iter().map(|(n, _)| format!("data/{n}")).collect::<Vec<_>>(),
        "tolerances": report.tolerances,
        "summary": report.summary,
        "breaches": report.breaches,
    });
    let mut text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(dir.join("manifest.json"), text)
}

/// Full command-line entry point; returns the process exit status.
pub fn run(args: &Args) -> i32 {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return EXIT_CONFIG;
        }
    };
    let mut cfg = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return EXIT_CONFIG;
        }
    };
    if let Some(e) = args.experiment {
        cfg.experiment = e;
    }
    if let Some(o) = &args.out {
        cfg.output = o.clone();
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_CONFIG;
        }
    };
    let start = Instant::now();
    let report = match pool.install(|| execute(&cfg)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let wall = start.elapsed().as_secs_f64();
    if let Err(e) = write_outputs(&cfg.output, &cfg, &report, wall, pool.current_num_threads(), args.strict) {
        eprintln!("error: writing {}: {e}", cfg.output.display());
        return EXIT_CONFIG;
    }
    println!("{:?}: wrote {} file(s) to {}", cfg.experiment, report.files.len(), cfg.output.display());
    for b in &report.breaches {
        eprintln!("breach: {b}");
    }
    if args.strict && !report.breaches.is_empty() {
        EXIT_STRICT
    } else {
        EXIT_OK
    }
}
