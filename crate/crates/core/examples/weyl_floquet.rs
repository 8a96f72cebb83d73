//! Weyl m-function by nested disks, its Floquet closed form for a periodic
//! potential, the spectral density by ε-extrapolation and the band structure.

use christoffel_lab::weyl::{discriminant, floquet_bands, floquet_m, m_function, spectral_density, weyl_disk, DEFAULT_LADDER};
use christoffel_lab::{Complex64, Potential};
use std::f64::consts::PI;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v = Potential::cosine(PI, 0.0, 1.0);
    let z = Complex64::new(2.0, 0.5);
    for x in [5.0, 20.0, 80.0] {
        let d = weyl_disk(&v, z, x)?;
        println!("disk at x = {x:>4}: center {:.12}, radius {:.2e}", d.center, d.radius);
    }
    println!("m(z) nested disks {:.12}", m_function(&v, z, 1e-10)?);
    println!("m(z) Floquet      {:.12}", floquet_m(&v, z)?);

    for xi in [0.2, 2.0, 3.0] {
        let s = spectral_density(&v, xi, &DEFAULT_LADDER)?;
        let exact = floquet_m(&v, Complex64::new(xi, 1e-12))?.im / PI;
        println!("f_μ({xi}) = {:.8} (residual {:.1e}), boundary value {exact:.8}", s.f_mu, s.extrapolation_residual);
    }

    let bands = floquet_bands(&v, (-2.0, 20.0), 4)?;
    println!("Δ(0) = {:.6}", discriminant(&v, 0.0)?);
    println!("b0 = {:.10}, gaps {:?}", bands.set.b0, bands.set.gaps);
    println!("edge residual {:.1e}", bands.max_edge_residual);
    Ok(())
}
