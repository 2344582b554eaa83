//! Steady-state distance across drive frequencies and gaps: control works
//! when the drive is slower than the bath and the bath slower than the gap.

use thermocd::engine::config::SimConfig;
use thermocd::engine::scan::{scan, ScanAxis, DEFAULT_H_GRID, DEFAULT_OMEGA_GRID};
use thermocd::twolevel::JumpKind;

fn main() -> thermocd::Result<()> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    for with_cd in [false, true] {
        let base = SimConfig::wobbling_qubit(0.05, JumpKind::Z, with_cd);
        println!("with_cd = {with_cd}");
        for r in scan(&base, ScanAxis::Omega, &DEFAULT_OMEGA_GRID, workers)? {
            println!("  omega {:5.2}: d_avg {:.4e} d_max {:.4e}", r.value, r.d_avg, r.d_max);
        }
        for r in scan(&base, ScanAxis::H, &DEFAULT_H_GRID, workers)? {
            println!("  h     {:5.2}: d_avg {:.4e} d_max {:.4e}", r.value, r.d_avg, r.d_max);
        }
    }
    Ok(())
}
