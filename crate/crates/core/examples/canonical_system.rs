//! j-monotonicity and the Hermite-Biehler property of `E_L = v + i v'`.

use christoffel_lab::canonical::{hb_check, hermite_biehler, j_form};
use christoffel_lab::{Complex64, Potential};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v = Potential::Piecewise { breakpoints: vec![1.0, 2.5], values: vec![-3.0, 4.0, 0.5] };
    let z = Complex64::new(1.5, 0.7);
    for (x1, x2) in [(0.0, 1.0), (1.0, 3.0), (3.0, 10.0)] {
        let f = j_form(&v, z, x1, x2)?;
        println!(
            "[{x1}, {x2}]: min eigenvalue {:.4e}, hermitian defect {:.1e}, vs quadrature {:.1e}",
            f.min_eigenvalue(),
            f.hermitian_defect(),
            f.factorization_defect()
        );
    }
    let samples: Vec<Complex64> = (0..40).map(|k| Complex64::new(-10.0 + 0.5 * k as f64, 0.05 + 0.1 * k as f64)).collect();
    println!("Hermite-Biehler on 40 samples: {}", hb_check(&v, 6.0, &samples)?);
    let hb = hermite_biehler(&v, 6.0, z)?;
    println!("|E#/E| at {z} = {:.6}", hb.ratio());
    Ok(())
}
