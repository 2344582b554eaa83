//! Energy-resolved jump operators, KMS rates and relaxation to the Gibbs
//! state for a three-level ladder.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use thermocd::liouville::build_k;
use thermocd::specmat::{eigendecompose, max_abs, CMatrix, HermitianOperator};
use thermocd::thermo::{gibbs_populations, gibbs_state, project_jump, default_gap_tol, Bath, Extrapolation, RateFunction};

fn main() -> thermocd::Result<()> {
    let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0, 2.5]);
    let basis = eigendecompose(&h)?;
    let x = CMatrix::from_fn(3, 3, |i, j| if i.abs_diff(j) == 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let jump = HermitianOperator::new(x)?;

    let projected = project_jump(&jump, &basis, default_gap_tol(&basis))?;
    for b in &projected.buckets {
        println!("gap {:+.2}: |L_gap| = {:.3}", b.gap, max_abs(&b.operator));
    }
    println!("ladder residual {:.1e}, completeness {:.1e}", projected.ladder_residual(&basis), projected.completeness_residual());

    let beta = 1.2;
    let rates = RateFunction::new(beta, 0.05, vec![(1.0, 0.4), (1.5, 0.6)], Extrapolation::Flat)?;
    let bath = Bath::new(vec![jump], rates)?;
    let d = bath.dissipator(&basis)?;
    println!("|D[gibbs]| = {:.2e}", max_abs(&d.apply_matrix(gibbs_state(&basis, beta).matrix())));

    // classical relaxation of the populations, explicit Euler
    let k = build_k(&d);
    let mut p = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    for _ in 0..20000 {
        p += &k * &p * 1e-3;
    }
    println!("p(20)  = {:.6?}", p.as_slice());
    println!("gibbs  = {:.6?}", gibbs_populations(&basis.eigenvalues, beta));
    Ok(())
}
