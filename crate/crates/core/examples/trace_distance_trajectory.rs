//! Distance from the instantaneous Gibbs state along the precessing-qubit
//! protocol, with and without the counterdiabatic term.

use thermocd::engine::config::SimConfig;
use thermocd::engine::integrate;

fn main() -> thermocd::Result<()> {
    for omega in [0.05, 0.2, 1.0] {
        for with_cd in [false, true] {
            let cfg = SimConfig::rotating_qubit(omega, with_cd);
            let traj = integrate(&cfg)?;
            let (avg, max) = traj.period_stats(6, 10);
            println!(
                "omega {omega:.2} cd {with_cd:5}: d avg {avg:.4e} max {max:.4e} (steps/period {}, min eig {:.2e})",
                traj.diagnostics.steps_per_period, traj.diagnostics.min_eigenvalue
            );
        }
    }
    // d(t) over the first period, coarse
    let traj = integrate(&SimConfig::rotating_qubit(0.05, true))?;
    for i in (0..=100).step_by(10) {
        println!("t = {:8.2}  d = {:.4e}", traj.times[i], traj.distance[i]);
    }
    Ok(())
}
