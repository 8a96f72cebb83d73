//! Critical points, Martin density and the large-`z` constant `a_E` of a
//! two-gap set, plus a δ-extension.

use christoffel_lab::martin::{
    asymptotic_ae, delta_extension, gap_condition_residuals, martin_density, martin_function, FiniteGapSet, MartinData,
};
use christoffel_lab::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let set = FiniteGapSet::new(0.0, vec![(1.0, 2.0), (3.0, 3.5)])?;
    let data = MartinData::new(&set, 1e-12)?;
    println!("critical points {:?}", data.set.critical);
    println!("gap residuals {:?}", gap_condition_residuals(&data.set)?);
    println!("a_E = {:.10} (fit residual {:.1e}), normalization residual {:.1e}", data.a_e, data.fit_residual, data.normalization_residual);
    for xi in [0.25, 0.75, 1.5, 2.5, 3.25, 5.0] {
        let f = if data.set.in_band_interior(xi) { martin_density(&data.set, xi)? } else { 0.0 };
        let m = martin_function(&data.set, Complex64::new(xi, 0.0))?;
        println!("  ξ = {xi:>5}: f_E = {f:.10}, M_E = {m:.10}");
    }
    let ext = delta_extension(&data.set, 0.1)?;
    println!("δ = 0.1 extension: b0 = {}, gaps {:?}", ext.b0, ext.gaps);
    let ext = christoffel_lab::martin::solve_critical_points(&ext, 1e-12)?;
    println!("  a_E of extension = {:.8}", asymptotic_ae(&ext)?.a_e);
    Ok(())
}
