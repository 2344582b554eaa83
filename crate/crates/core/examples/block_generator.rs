//! Block structure of the moving-frame generator for the precessing qubit,
//! checked against the brute-force superoperator.

use thermocd::liouville::{assemble_generator, dense_oracle};
use thermocd::protocol::BlochPath;
use thermocd::specmat::max_abs_diff;
use thermocd::thermo::{Bath, RateFunction};
use thermocd::twolevel::JumpKind;

fn main() -> thermocd::Result<()> {
    let path = BlochPath::p1(1.0, 0.2);
    let bath = Bath::new(vec![JumpKind::Z.operator()], RateFunction::flat(1.0, 0.5, 0.0)?)?;
    for with_cd in [false, true] {
        let b = assemble_generator(&path, 3.0, &bath, with_cd)?;
        println!("with_cd = {with_cd}");
        println!("  K      = {:.5}", b.k);
        println!("  K2-iD  = {:.5}", b.kcoh);
        println!("  |A12|, |A21|, |A2| = {:.3e}", b.coupling_norm());
        println!("  |dense - oracle| = {:.2e}", max_abs_diff(&b.dense(), &dense_oracle(&path, 3.0, &bath, with_cd)?));
    }
    Ok(())
}
