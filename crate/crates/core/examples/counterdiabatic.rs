//! Counterdiabatic term: closed form against the generic gauge potential,
//! cancellation of the drive couplings, and residual coherence.

use thermocd::cd::{gauge_potential, two_level_cd};
use thermocd::liouville::gauge_cancellation_residual;
use thermocd::protocol::{BlochPath, Protocol};
use thermocd::specmat::max_abs_diff;
use thermocd::thermo::{Bath, RateFunction};
use thermocd::twolevel::{analytic_first_order, rates_z, JumpKind};

fn main() -> thermocd::Result<()> {
    let path = BlochPath::p2(1.0, 0.1);
    let rf = RateFunction::flat(1.0, 0.5, 0.0)?;
    let bath = Bath::new(vec![JumpKind::Z.operator()], rf.clone())?;
    for t in [0.0, 7.0, 21.0] {
        let closed = two_level_cd(&path, t);
        let generic = gauge_potential(&path, t)?;
        println!(
            "t={t:5.1}: |H_cd| = {:.4}, |closed - generic| = {:.1e}, residual coupling {:.1e}",
            generic.norm(),
            max_abs_diff(closed.matrix(), &generic.operator),
            gauge_cancellation_residual(&path, t, &bath)?
        );
    }
    let p1 = BlochPath::p1(1.0, 0.1);
    let plain = analytic_first_order(&p1, 5.0, 1.0, &rf, JumpKind::Z, false)?;
    let cd = analytic_first_order(&p1, 5.0, 1.0, &rf, JumpKind::Z, true)?;
    let g2 = rates_z(1.0, std::f64::consts::FRAC_PI_4, 1.0, &rf)?.gamma2;
    println!("coherence {:.4e} -> {:.4e} with CD (ratio {:.4}, G2/h = {:.4})", plain.coh[0].norm(), cd.coh[0].norm(), cd.coh[0].norm() / plain.coh[0].norm(), g2);
    println!("period {:.2}", p1.period());
    Ok(())
}
