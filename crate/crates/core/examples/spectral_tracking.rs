//! Follow the eigenbasis of a precessing qubit and compare the analytic
//! eigenstate derivatives with a gauge-aligned finite difference.

use thermocd::protocol::{BlochPath, Protocol};
use thermocd::specmat::{eigendecompose_at, eigenstate_derivative, gauge_align, EigenDerivativeTable, HermitianOperator};

fn main() -> thermocd::Result<()> {
    let path = BlochPath::p1(1.0, 0.1);
    let dt = path.period() / 16.0;
    let mut prev = eigendecompose_at(&HermitianOperator::new(path.hamiltonian(0.0))?, 0.0)?;
    println!("{:>8} {:>10} {:>10} {:>14} {:>12}", "t", "E0", "E1", "|<0|d1>|", "fd - exact");
    for k in 0..=16 {
        let t = k as f64 * dt;
        let raw = eigendecompose_at(&HermitianOperator::new(path.hamiltonian(t))?, t)?;
        // continuity with the previous step, then the derivative table
        let basis = gauge_align(&prev, &raw)?;
        let exact = EigenDerivativeTable::from_hamiltonian_rate(&basis, &path.hamiltonian_rate(t));
        let fd = eigenstate_derivative(&path, t, 1e-4 * path.period())?;
        let err = (fd.entries[(0, 1)].norm() - exact.entries[(0, 1)].norm()).abs();
        println!("{t:8.2} {:10.6} {:10.6} {:14.6e} {err:12.2e}", basis.eigenvalues[0], basis.eigenvalues[1], exact.entries[(0, 1)].norm());
        prev = basis;
    }
    Ok(())
}
