//! `L λ_L(ξ)` approaching `f_μ(ξ)/f_E(ξ)` for the free operator and for a
//! Mathieu potential whose bands come from the Floquet discriminant.

use christoffel_lab::cli::reference_density;
use christoffel_lab::lab::christoffel_sweep;
use christoffel_lab::martin::{martin_density, solve_critical_points, FiniteGapSet};
use christoffel_lab::weyl::floquet_bands;
use christoffel_lab::Potential;
use std::f64::consts::PI;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let free = FiniteGapSet::half_line(0.0);
    let table = christoffel_sweep(
        &Potential::Zero,
        &[0.5, 1.0, 2.0, 4.0],
        &[50.0, 200.0, 1000.0],
        &|x| 1.0 / (PI * x.sqrt()),
        &|x| martin_density(&free, x).unwrap_or(f64::NAN),
    )?;
    println!("V = 0, reference 2");
    for (l, d) in &table.sup_deviation {
        println!("  L = {l:>6}: sup |L λ_L - 2| = {d:.3e}");
    }

    let mathieu = Potential::cosine(PI, 0.0, 1.0);
    let bands = floquet_bands(&mathieu, (-2.0, 12.0), 3)?;
    let set = solve_critical_points(&bands.set, 1e-12)?;
    println!("V = cos(2x): gaps {:?}, critical points {:?}", set.gaps, set.critical);
    let xs = [0.2, 2.0, 3.0, 5.0];
    let f_mu: Vec<f64> = xs.iter().map(|&x| reference_density(&mathieu, x)).collect::<Result<_, _>>()?;
    let table = christoffel_sweep(
        &mathieu,
        &xs,
        &[50.0, 200.0, 800.0],
        &|x| xs.iter().position(|&g| g == x).map_or(f64::NAN, |i| f_mu[i]),
        &|x| martin_density(&set, x).unwrap_or(f64::NAN),
    )?;
    for r in &table.rows {
        println!("  ξ = {:>4}, L = {:>5}: L λ_L = {:.6}, f_μ/f_E = {:.6}", r.xi, r.length, r.l_lambda, r.reference);
    }
    Ok(())
}
