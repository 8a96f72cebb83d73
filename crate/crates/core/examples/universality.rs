//! Rescaled kernel against the sine kernel near ξ = 1 for the free operator
//! and for the oscillating example.

use christoffel_lab::lab::{first_real_zero, universality_grid};
use christoffel_lab::martin::{martin_density, FiniteGapSet};
use christoffel_lab::Potential;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f_e = martin_density(&FiniteGapSet::half_line(0.0), 1.0)?;
    // the oscillating example has ~L² cells up to L, so its ladder stops earlier
    for (v, lengths) in [(Potential::Zero, [100.0, 500.0, 1000.0]), (Potential::OscillatingExample, [50.0, 100.0, 200.0])] {
        for l in lengths {
            let g = universality_grid(&v, l, 1.0, 2.0, 21, f_e)?;
            println!("{v:?} L = {l:>6}: sup |ratio - sinc| = {:.3e}", g.sup_deviation);
        }
        let z = first_real_zero(&v, lengths[2], 1.0, 10.0)?;
        println!("  first real zero of K(1 + z/L, 1): {z:?} (sine kernel: {})", 1.0 / f_e);
    }
    Ok(())
}
