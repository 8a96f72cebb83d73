//! Regularity diagnostics for the oscillating example: Cesàro means, the
//! growth rate of solutions and the Volterra series on a short interval.

use christoffel_lab::ode::{check_growth_bounds, growth_rate, volterra_series, Solver};
use christoffel_lab::{Complex64, Potential};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v = Potential::OscillatingExample;
    for l in [10.5, 100.5, 1000.0] {
        println!("Cesàro mean at L = {l:>6}: {:.3e}", v.cesaro_mean(l)?);
    }
    println!("sup local L1 norm on [0, 50]: {:.3}", v.local_l1_sup(50.0)?);
    let grid: Vec<f64> = (0..=10).map(|i| 100.0 + 10.0 * i as f64).collect();
    for (x, g) in grid.iter().zip(growth_rate(&v, Complex64::new(2.0, 0.0), &grid)?) {
        println!("  (1/x) log|v(x, 2)| at x = {x}: {g:.4e}");
    }
    for (xi, x) in [(0.5, 4.0), (3.0, 4.0), (3.0, 40.0)] {
        let frame = Solver::new(&v).frame(Complex64::new(xi, 0.0), x)?;
        println!("growth bound at x = {x}, ξ = {xi}: {}", check_growth_bounds(&frame, &v));
    }
    let z = Complex64::new(3.0, 1.0);
    let frame = Solver::new(&v).frame(z, 4.0)?;
    let series = volterra_series(&v, z, 4.0, 60)?;
    println!("Volterra v(4, z) = {:.12} ({} terms, tail {:.1e}); ODE {:.12}", series.value, series.terms, series.tail_bound, frame.v);
    Ok(())
}
