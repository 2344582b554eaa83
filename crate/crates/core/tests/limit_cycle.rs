use thermocd::engine::config::{InitialState, SimConfig};
use thermocd::engine::integrate;
use thermocd::twolevel::JumpKind;

fn slow_configs() -> Vec<SimConfig> {
    vec![
        SimConfig::rotating_qubit(0.05, false),
        SimConfig::rotating_qubit(0.05, true),
        SimConfig::wobbling_qubit(0.05, JumpKind::X, false),
        SimConfig::wobbling_qubit(0.05, JumpKind::Z, true),
    ]
}

#[test]
fn distance_is_periodic_after_transients() {
    for cfg in slow_configs() {
        let traj = integrate(&cfg).unwrap();
        let per = cfg.samples_per_period;
        let start = 5 * per;
        let worst = (start..traj.distance.len() - per).map(|i| (traj.distance[i + per] - traj.distance[i]).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-4, "{worst}");
        assert!(traj.distance.iter().all(|d| (0.0..=1.0).contains(d)));
        assert!(traj.trace_error.iter().all(|e| *e < 1e-9));
    }
}

#[test]
fn limit_cycle_forgets_the_initial_state() {
    for mut cfg in slow_configs() {
        let ground = integrate(&cfg).unwrap();
        cfg.initial = InitialState { pop: vec![0.0, 1.0], coh: None };
        let excited = integrate(&cfg).unwrap();
        cfg.initial = InitialState { pop: vec![0.5, 0.5], coh: Some(vec![[0.3, 0.2], [0.3, -0.2]]) };
        let tilted = integrate(&cfg).unwrap();
        let last = ground.distance.len() - 1;
        let tail = last - cfg.samples_per_period..=last;
        for i in tail {
            assert!((ground.distance[i] - excited.distance[i]).abs() < 1e-6);
            assert!((ground.distance[i] - tilted.distance[i]).abs() < 1e-6);
        }
    }
}

#[test]
fn cd_helps_only_when_driving_is_slow() {
    let avg = |cfg: SimConfig| integrate(&cfg).unwrap().last_period_stats().0;
    assert!(avg(SimConfig::rotating_qubit(0.05, true)) < avg(SimConfig::rotating_qubit(0.05, false)));
    assert!(avg(SimConfig::rotating_qubit(1.0, true)) > avg(SimConfig::rotating_qubit(0.05, true)));
}
