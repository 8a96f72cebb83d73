//! Gauss-Legendre rules, an adaptive Gauss-Kronrod integrator for complex
//! integrands, and the cumulative (indefinite) Gauss-Legendre matrix used by
//! the Volterra series.

use num_complex::Complex64;
use std::sync::OnceLock;

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Evaluates `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// All Legendre polynomials `P_0(x) ..= P_n(x)`.
fn legendre_all(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
        out.push(p);
    }
    out
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]` with this rule.
    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }

    /// Matrix `S[i][j] = ∫_{-1}^{x_i} ℓ_j(s) ds` where `ℓ_j` is the Lagrange
    /// basis polynomial on the nodes. Exact for polynomials of degree `< n`.
    pub fn cumulative_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        // ℓ_j(s) = w_j Σ_k (k + 1/2) P_k(x_j) P_k(s), so the integral only needs
        // the antiderivatives of P_k at each node.
        let antideriv: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|&x| {
                let p = legendre_all(n, x);
                (0..n)
                    .map(|k| {
                        if k == 0 {
                            x + 1.0
                        } else {
                            (p[k + 1] - p[k - 1]) / (2.0 * k as f64 + 1.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let basis_at_nodes: Vec<Vec<f64>> = self.nodes.iter().map(|&x| legendre_all(n, x)).collect();
        let mut s = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += (k as f64 + 0.5) * basis_at_nodes[j][k] * antideriv[i][k];
                }
                s[i][j] = self.weights[j] * acc;
            }
        }
        s
    }
}

/// Shared 20-point rule used by the panel quadratures.
pub fn gauss_legendre_20() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20))
}

// Kronrod 15-point extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = fc * WG[3];
    let mut kronrod = fc * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    let result = kronrod * half;
    let err = ((kronrod - gauss) * half).norm();
    (result, err)
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: Complex64,
    pub error: f64,
    pub converged: bool,
}

/// Adaptive Gauss-Kronrod integration of a complex integrand over `[a, b]`.
///
/// Intervals are bisected until the summed error estimate satisfies
/// `err <= max(abs_tol, rel_tol * |value|)` or `max_intervals` is reached.
pub fn adaptive<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Integral {
    if a == b {
        return Integral { value: Complex64::new(0.0, 0.0), error: 0.0, converged: true };
    }
    let (v0, e0) = kronrod15(&mut f, a, b);
    // (lo, hi, value, error)
    let mut intervals: Vec<(f64, f64, Complex64, f64)> = vec![(a, b, v0, e0)];
    loop {
        let total: Complex64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Integral { value: total, error: err, converged: true };
        }
        if intervals.len() >= max_intervals {
            return Integral { value: total, error: err, converged: false };
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            let total: Complex64 = intervals.iter().map(|iv| iv.2).sum::<Complex64>();
            return Integral { value: total, error: err, converged: false };
        }
        let (vl, el) = kronrod15(&mut f, lo, mid);
        let (vr, er) = kronrod15(&mut f, mid, hi);
        intervals.push((lo, mid, vl, el));
        intervals.push((mid, hi, vr, er));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(10);
        // degree 19 is the limit for 10 nodes
        let v = rule.integrate(-1.0, 2.0, |x| Complex64::new(x.powi(19), 0.0));
        let exact = (2f64.powi(20) - 1.0) / 20.0;
        assert!((v.re - exact).abs() < 1e-9 * exact);
        let wsum: f64 = rule.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cumulative_matrix_reproduces_antiderivative() {
        let rule = GaussLegendre::new(16);
        let s = rule.cumulative_matrix();
        // ∫_{-1}^{x} cos(3s) ds = (sin 3x + sin 3)/3
        let f: Vec<f64> = rule.nodes.iter().map(|x| (3.0 * x).cos()).collect();
        for (i, &x) in rule.nodes.iter().enumerate() {
            let approx: f64 = (0..16).map(|j| s[i][j] * f[j]).sum();
            let exact = ((3.0 * x).sin() + 3f64.sin()) / 3.0;
            assert!((approx - exact).abs() < 1e-10, "{approx} vs {exact}");
        }
    }

    #[test]
    fn adaptive_handles_inverse_sqrt_singularity() {
        let r = adaptive(|x| Complex64::new(1.0 / x.sqrt(), 0.0), 0.0, 1.0, 1e-10, 1e-12, 2000);
        assert!((r.value.re - 2.0).abs() < 1e-8);
    }

    #[test]
    fn adaptive_oscillatory_complex() {
        let r = adaptive(|x| Complex64::new(0.0, 40.0 * x).exp(), 0.0, 1.0, 1e-14, 1e-13, 500);
        let exact = (Complex64::new(0.0, 40.0).exp() - 1.0) / Complex64::new(0.0, 40.0);
        assert!((r.value - exact).norm() < 1e-12);
        assert!(r.converged);
    }
}
