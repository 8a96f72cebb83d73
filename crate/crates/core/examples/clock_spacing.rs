//! Eigenvalues of the truncated problem near ξ = 1: clock spacing,
//! interlacing and the counting measure against the Martin measure.

use christoffel_lab::lab::{clock_spacing_check, counting_measure_compare, interlacing_check, truncation_spectrum, uniform_bins};
use christoffel_lab::martin::{martin_density, FiniteGapSet};
use christoffel_lab::Potential;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let set = FiniteGapSet::half_line(0.0);
    let f_e = |x: f64| martin_density(&set, x).unwrap_or(f64::NAN);
    for v in [Potential::Zero, Potential::OscillatingExample] {
        println!("{v:?}");
        for c in clock_spacing_check(&v, 200.0, 1.0, (-3, 3), &f_e)? {
            println!("  j = {:>2}: ξ_j = {:.10}, L f_E Δ = {:.8}", c.j, c.xi_j, c.spacing_normalized);
        }
        let slice = truncation_spectrum(&v, 200.0, (0.5, 4.0))?;
        let inter = interlacing_check(&v, &slice)?;
        println!("  {} eigenvalues in [0.5, 4], interlacing violations {}", slice.eigenvalues.len(), inter.violations);
        let cmp = counting_measure_compare(&slice, &set, &uniform_bins(0.5, 4.0, 7))?;
        println!("  total variation ν_L vs ρ_E: {:.4e}", cmp.total_variation);
    }
    Ok(())
}
