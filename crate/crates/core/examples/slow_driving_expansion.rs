//! Slow-driving expansion of the limit cycle: first-order state, the
//! effective population generator and the ω² convergence of the residual.

use thermocd::engine::config::SimConfig;
use thermocd::engine::expand;
use thermocd::expansion::{effective_population_generator, first_order, rate_spectrum};
use thermocd::liouville::assemble_generator;

fn main() -> thermocd::Result<()> {
    let cfg = SimConfig::wobbling_qubit(0.05, thermocd::twolevel::JumpKind::Z, false);
    let (path, bath) = (cfg.path()?, cfg.bath()?);

    let blocks = assemble_generator(&path, 10.0, &bath, false)?;
    let spec = rate_spectrum(&blocks.k)?;
    println!("rate eigenvalues {:.4?}, stationary {:.4?}", spec.eigenvalues, spec.stationary().as_slice());
    println!("K_eff = {:.5}", effective_population_generator(&blocks)?.map(|z| z.re));

    let r = first_order(&path, 10.0, &bath, false)?;
    println!("order 0 pop {:.6?}", r.pop_terms[0]);
    println!("order 1 pop {:?}", r.pop_terms[1]);
    println!("order 1 coh {:?}", r.coh_terms[1]);

    for omega in [0.04, 0.02, 0.01] {
        let mut c = SimConfig::rotating_qubit(omega, false);
        c.periods = 2;
        let d0 = expand(&c, 0)?.max_difference();
        let d1 = expand(&c, 1)?.max_difference();
        let d2 = expand(&c, 2)?.max_difference();
        println!("omega {omega:.2}: |rho - rho_n| = {d0:.3e} (n=0) {d1:.3e} (n=1) {d2:.3e} (n=2)");
    }
    Ok(())
}
