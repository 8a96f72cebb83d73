//! Three routes to the Christoffel-Darboux kernel and the free extremal
//! function as twice a constant-potential kernel.

use christoffel_lab::canonical::kernel_via_jform;
use christoffel_lab::kernel::{christoffel, kernel_boundary, kernel_quadrature, minimizer_q, ExtremalFunction};
use christoffel_lab::{Complex64, Potential};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v = Potential::OscillatingExample;
    let (l, z, w) = (7.5, Complex64::new(3.0, 0.4), Complex64::new(-1.0, 2.0));
    let q = kernel_quadrature(&v, l, z, w, 1e-12)?;
    let b = kernel_boundary(&v, l, z, w)?;
    let j = kernel_via_jform(&v, l, z, w)?;
    println!("K_L(z, w), L = {l}, z = {z}, w = {w}");
    println!("  quadrature {:.15e} (err {:.1e})", q.value, q.err_estimate);
    println!("  boundary   {:.15e}", b.value);
    println!("  j-form     {:.15e}", j);

    let xi = 2.0;
    println!("λ_L({xi}) = {:.12}", christoffel(&v, l, xi)?);
    let q_at = minimizer_q(&v, l, xi, Complex64::new(xi + 0.3, 0.0))?;
    println!("minimizer at ξ + 0.3: {q_at:.6}");

    let f = ExtremalFunction::new(1.0, 3.5)?;
    let k = kernel_boundary(&Potential::constant(1.0), f.c, Complex64::new(2.0, 1.0), Complex64::new(3.5, 0.0))?.value;
    println!("c = {:.12}, u0 = {:.12}", f.c, f.u0);
    println!("F_c(2+i) = {:.15e}, 2 K_c(2+i, ξ0) = {:.15e}", f.eval(Complex64::new(2.0, 1.0)), 2.0 * k);
    Ok(())
}
