//! Dormand-Prince 5(4) with step-size control on fixed-size real states.

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Underflow {
    pub x: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error coefficients b - b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(x, y)` from `a` to `b`, calling `on_step` after every
/// accepted step with the new position and state.
pub fn integrate<const N: usize, F, S>(
    mut f: F,
    a: f64,
    b: f64,
    y0: [f64; N],
    ctrl: StepControl,
    mut on_step: S,
) -> Result<[f64; N], Underflow>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]),
{
    let span = b - a;
    if span <= 0.0 {
        return Ok(y0);
    }
    let mut x = a;
    let mut y = y0;
    let mut h = (span / 16.0).min(ctrl.h_max);
    let h_min = 1e-14 * span.max(1.0);
    let mut k1 = f(x, &y);
    while x < b {
        if b - x < h {
            h = b - x;
        }
        let k2 = f(x + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(x + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(x + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(x + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(x + h, &y_new);
        let mut err = 0.0f64;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = ctrl.atol + ctrl.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            return Err(Underflow { x });
        }
        if err <= 1.0 {
            x = if b - x <= h { b } else { x + h };
            y = y_new;
            k1 = k7;
            on_step(x, &y);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(ctrl.h_max);
        if h < h_min && x < b {
            return Err(Underflow { x });
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let ctrl = StepControl { rtol: 1e-12, atol: 1e-12, h_max: 1.0 };
        let y = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, 10.0, [1.0, 0.0], ctrl, |_, _| {}).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-9);
        assert!((y[1] + 10f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn reports_underflow_on_blowup() {
        let ctrl = StepControl { rtol: 1e-10, atol: 1e-10, h_max: 1.0 };
        // y' = y^2 blows up at x = 1
        let r = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, 2.0, [1.0], ctrl, |_, _| {});
        assert!(r.is_err());
        assert!(r.unwrap_err().x < 1.0 + 1e-6);
    }
}
