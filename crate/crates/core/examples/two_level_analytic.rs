//! Closed-form qubit rates and first-order state against the generic
//! machinery.

use std::f64::consts::PI;

use thermocd::expansion::first_order;
use thermocd::liouville::assemble_in_basis;
use thermocd::protocol::BlochPath;
use thermocd::specmat::CMatrix;
use thermocd::thermo::{Bath, RateFunction};
use thermocd::twolevel::{analytic_first_order, bloch_basis, extract_rates, swap_levels, JumpKind};

fn main() -> thermocd::Result<()> {
    let rf = RateFunction::new(1.0, 0.1, vec![(1.0, 0.5)], Default::default())?;
    for jump in [JumpKind::Z, JumpKind::X] {
        let bath = Bath::new(vec![jump.operator()], rf.clone())?;
        for (theta, phi) in [(PI / 4.0, 0.0), (PI / 2.0, PI / 3.0), (2.0, 1.0)] {
            let blocks = assemble_in_basis(&bloch_basis(1.0, theta, phi)?, &CMatrix::zeros(2, 2), &bath)?;
            let got = extract_rates(&blocks);
            let want = jump.rates(1.0, theta, phi, 1.0, &rf)?;
            println!("{jump:?} θ={theta:.3} φ={phi:.3}: Γ={:.6} ({:.6}), Γ2={:.6} ({:.6})", got.gamma, want.gamma, got.gamma2, want.gamma2);
        }
    }
    let path = BlochPath::p1(1.0, 0.05);
    let bath = Bath::new(vec![JumpKind::Z.operator()], rf.clone())?;
    for cd in [false, true] {
        let closed = swap_levels(&analytic_first_order(&path, 30.0, 1.0, &rf, JumpKind::Z, cd)?);
        let generic = first_order(&path, 30.0, &bath, cd)?.state(1);
        println!("cd={cd}: coh {:.6e}, |closed - generic| = {:.1e}", closed.coh[0], closed.max_abs_diff(&generic));
    }
    Ok(())
}
