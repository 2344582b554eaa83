//! Self-validation: the invariant suite with measured residuals.
//!
//! Every check compares the production code path against an independently
//! built quantity (dense oracle, closed form, finite difference or a
//! convergence experiment). Mutation injections flip one sign in the
//! production path; a sound suite must then report a failure.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::SimConfig;
use super::expand::compare;
use super::integrate::Dynamics;
use crate::error::{Error, Result};
use crate::expansion::{first_order, rate_spectrum, reduced_inverse};
use crate::liouville::{assemble_generator, assemble_in_basis, build_k, dense_oracle, gauge_cancellation_residual};
use crate::protocol::{BlochPath, MatrixPath, PeriodicFn, Protocol};
use crate::specmat::{eigendecompose_at, max_abs, max_abs_diff, CMatrix, HermitianOperator};
use crate::thermo::{gibbs_populations, gibbs_state, Bath, Extrapolation, RateFunction};
use crate::twolevel::{analytic_first_order, bloch_basis, extract_rates, swap_levels, JumpKind};

/// One deliberate sign error in the production path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Injection {
    /// Uphill rates use `e^{+βε}` instead of `e^{−βε}`.
    KmsSign,
    /// The basis-rotation term enters with the wrong sign.
    GaugeSign,
    /// The coherence oscillation `−iΔ` enters with the wrong sign.
    DeltaSign,
}

impl Injection {
    pub const ALL: [Injection; 3] = [Injection::KmsSign, Injection::GaugeSign, Injection::DeltaSign];

    pub fn name(self) -> &'static str {
        match self {
            Injection::KmsSign => "kms-sign",
            Injection::GaugeSign => "gauge-sign",
            Injection::DeltaSign => "delta-sign",
        }
    }

    pub fn apply(self, mut bath: Bath) -> Bath {
        match self {
            Injection::KmsSign => bath.rates = bath.rates.with_flipped_kms(),
            Injection::GaugeSign => bath.faults.flip_gauge = true,
            Injection::DeltaSign => bath.faults.flip_delta = true,
        }
        bath
    }
}

impl std::str::FromStr for Injection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Injection::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown injection `{s}` (expected kms-sign, gauge-sign or delta-sign)")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst measured residual (or deviation from the target).
    pub residual: f64,
    pub limit: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub seed: u64,
    pub instances: usize,
    pub injection: Option<Injection>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            s += &format!("{tag} {:<28} residual={:.3e} limit={:.1e} {}\n", c.name, c.residual, c.limit, c.detail);
        }
        s += &format!("{} of {} checks passed\n", self.checks.iter().filter(|c| c.passed).count(), self.checks.len());
        s
    }
}

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub seed: u64,
    /// Random instances per randomized check.
    pub instances: usize,
    pub injection: Option<Injection>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { seed: 20240501, instances: 100, injection: None }
    }
}

/// A random driven system with a random bath, evaluated at time `t`.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub path: MatrixPath,
    pub bath: Bath,
    pub t: f64,
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + a.adjoint()).scale(0.5 * scale)
}

/// Random path `H_0 + A cos ωt + B sin ωt` with spectral width of order one,
/// one or two Hermitian jumps, a three-node rate table and
/// `β ∈ {0.5, 1, 2}`. Draws are repeated until the spectrum at `t` is
/// comfortably nondegenerate.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> RandomInstance {
    loop {
        let base = random_hermitian(rng, n, 1.0);
        let harmonics = vec![(random_hermitian(rng, n, 0.3), random_hermitian(rng, n, 0.3))];
        let omega = rng.gen_range(0.05..0.5);
        let path = MatrixPath::new(base, harmonics, omega).expect("Hermitian coefficients");
        let t = rng.gen_range(0.0..path.period());
        let Ok(basis) = eigendecompose_at(&HermitianOperator::new(path.hamiltonian(t)).expect("Hermitian"), t) else {
            continue;
        };
        let gaps = basis.eigenvalues.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if gaps < 0.05 {
            continue;
        }
        let beta = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
        let mut nodes: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..3.0)).collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let table = nodes.into_iter().map(|g| (g, rng.gen_range(0.1..1.0))).collect();
        let rates = RateFunction::new(beta, rng.gen_range(0.0..0.5), table, Extrapolation::Flat).expect("valid table");
        let jumps = (0..rng.gen_range(1..=2)).map(|_| HermitianOperator::new(random_hermitian(rng, n, 1.0)).expect("Hermitian")).collect();
        let bath = Bath::new(jumps, rates).expect("consistent dimensions");
        return RandomInstance { path, bath, t };
    }
}

struct Tally {
    worst: f64,
    detail: String,
    failure: Option<String>,
}

impl Tally {
    fn new() -> Self {
        Self { worst: 0.0, detail: String::new(), failure: None }
    }

    fn record(&mut self, r: Result<f64>, label: impl FnOnce() -> String) {
        match r {
            Ok(x) if x.is_nan() => self.failure.get_or_insert_with(|| format!("NaN at {}", label())),
            Ok(x) => {
                if x > self.worst {
                    self.worst = x;
                    self.detail = label();
                }
                return;
            }
            Err(e) => self.failure.get_or_insert_with(|| format!("{} at {}", e, label())),
        };
    }

    fn finish(self, name: &str, limit: f64) -> Check {
        let passed = self.failure.is_none() && self.worst < limit;
        let detail = match self.failure {
            Some(f) => f,
            None if self.detail.is_empty() => String::new(),
            None => format!("worst at {}", self.detail),
        };
        Check { name: name.into(), passed, residual: self.worst, limit, detail }
    }
}

fn instances(opts: &ValidateOptions, dims: &[usize], salt: u64) -> Vec<RandomInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ salt);
    (0..opts.instances)
        .map(|i| {
            let mut inst = random_instance(&mut rng, dims[i % dims.len()]);
            if let Some(inj) = opts.injection {
                inst.bath = inj.apply(inst.bath);
            }
            inst
        })
        .collect()
}

fn bare_basis(inst: &RandomInstance) -> Result<crate::specmat::SpectralDecomposition> {
    eigendecompose_at(&HermitianOperator::new(inst.path.hamiltonian(inst.t))?, inst.t)
}

/// `‖D[ρ_Gibbs]‖_max` over random `(H, L)` at `N ∈ {2, 3, 4}`.
pub fn check_stationarity(opts: &ValidateOptions) -> Check {
    let mut tally = Tally::new();
    for (i, inst) in instances(opts, &[2, 3, 4], 1).iter().enumerate() {
        let r = bare_basis(inst).and_then(|basis| {
            let d = inst.bath.dissipator(&basis)?;
            Ok(max_abs(&d.apply_matrix(gibbs_state(&basis, inst.bath.beta()).matrix())))
        });
        tally.record(r, || format!("instance {i}"));
    }
    tally.finish("gibbs_stationarity", 1e-10)
}

/// Detailed balance of the population block and the rate ratio
/// `γ(−ε)/γ(ε) = e^{−βε}`.
pub fn check_kms(opts: &ValidateOptions) -> Check {
    let mut tally = Tally::new();
    for (i, inst) in instances(opts, &[2, 3, 4], 2).iter().enumerate() {
        let r = bare_basis(inst).and_then(|basis| {
            let beta = inst.bath.beta();
            let k = build_k(&inst.bath.dissipator(&basis)?);
            let pi = gibbs_populations(&basis.eigenvalues, beta);
            let n = pi.len();
            let mut worst = 0.0f64;
            for a in 0..n {
                for b in 0..n {
                    worst = worst.max((k[(a, b)] * pi[b] - k[(b, a)] * pi[a]).abs());
                }
                worst = worst.max(k.column(a).sum().abs());
            }
            for eps in [0.1, 0.7, 1.9] {
                let up = inst.bath.rates.rate(-eps)?;
                let down = inst.bath.rates.rate(eps)?;
                worst = worst.max((up - (-beta * eps).exp() * down).abs());
            }
            Ok(worst)
        });
        tally.record(r, || format!("instance {i}"));
    }
    tally.finish("kms_detailed_balance", 1e-12)
}

/// Assembled blocks against the brute-force generator, with and without CD.
pub fn check_block_oracle(opts: &ValidateOptions) -> Check {
    let mut tally = Tally::new();
    for (i, inst) in instances(opts, &[2, 3], 3).iter().enumerate() {
        for cd in [false, true] {
            let r = assemble_generator(&inst.path, inst.t, &inst.bath, cd)
                .and_then(|b| Ok(max_abs_diff(&b.dense(), &dense_oracle(&inst.path, inst.t, &inst.bath, cd)?)));
            tally.record(r, || format!("instance {i}, cd={cd}"));
        }
    }
    tally.finish("block_oracle_equivalence", 1e-10)
}

/// Drive couplings left after adding `−i[H_cd,·]` in the bare eigenbasis.
pub fn check_gauge_cancellation(opts: &ValidateOptions) -> Check {
    let mut tally = Tally::new();
    for (i, inst) in instances(opts, &[2, 3], 3).iter().enumerate() {
        tally.record(gauge_cancellation_residual(&inst.path, inst.t, &inst.bath), || format!("instance {i}"));
    }
    tally.finish("gauge_cancellation", 1e-10)
}

fn qubit_bath(jump: JumpKind, rates: &RateFunction, injection: Option<Injection>) -> Result<Bath> {
    let bath = Bath::new(vec![jump.operator()], rates.clone())?;
    Ok(match injection {
        Some(inj) => inj.apply(bath),
        None => bath,
    })
}

/// Closed-form `Γ`, `Γ₂` against the generic blocks on a 20×20 `(θ, φ)` grid.
pub fn check_two_level_rates(opts: &ValidateOptions) -> Check {
    let mut tally = Tally::new();
    let (h, beta) = (1.0, 1.0);
    let rates = RateFunction::new(beta, 0.2, vec![(0.5, 0.3), (1.0, 0.5), (2.0, 0.6)], Extrapolation::Flat).expect("valid table");
    for jump in [JumpKind::Z, JumpKind::X] {
        let bath = match qubit_bath(jump, &rates, opts.injection) {
            Ok(b) => b,
            Err(e) => return Tally { failure: Some(e.to_string()), ..Tally::new() }.finish("two_level_rates", 1e-10),
        };
        for i in 0..20 {
            for j in 0..20 {
                let theta = PI * (i as f64 + 0.5) / 20.0;
                let phi = 2.0 * PI * j as f64 / 20.0;
                let r = (|| {
                    let basis = bloch_basis(h, theta, phi)?;
                    let blocks = assemble_in_basis(&basis, &CMatrix::zeros(2, 2), &bath)?;
                    let got = extract_rates(&blocks);
                    let want = jump.rates(h, theta, phi, beta, &rates)?;
                    Ok((got.gamma - want.gamma).abs().max((got.gamma2 - want.gamma2).abs()))
                })();
                tally.record(r, || format!("{jump:?} θ={theta:.3} φ={phi:.3}"));
            }
        }
    }
    tally.finish("two_level_rates", 1e-10)
}

fn test_paths(omega: f64) -> Vec<(&'static str, BlochPath)> {
    let breathing = BlochPath::new(
        PeriodicFn { mean: 1.0, winding: 0.0, cos: vec![0.3], sin: vec![] },
        PeriodicFn { mean: PI / 3.0, winding: 0.0, cos: vec![], sin: vec![0.2] },
        PeriodicFn::winding(0.4, 1.0),
        omega,
    )
    .expect("positive gap");
    vec![("p1", BlochPath::p1(1.0, omega)), ("p2", BlochPath::p2(1.0, omega)), ("breathing", breathing)]
}

/// Closed-form first-order qubit state against the generic expansion.
pub fn check_two_level_first_order(opts: &ValidateOptions) -> Check {
    let mut tally = Tally::new();
    for beta in [0.5, 1.0, 2.0] {
        let rates = RateFunction::new(beta, 0.1, vec![(0.7, 0.4), (1.3, 0.5)], Extrapolation::Flat).expect("valid table");
        for omega in [0.03, 0.1] {
            for (name, path) in test_paths(omega) {
                for jump in [JumpKind::Z, JumpKind::X] {
                    let bath = match qubit_bath(jump, &rates, opts.injection) {
                        Ok(b) => b,
                        Err(e) => {
                            tally.record(Err(e), || name.into());
                            continue;
                        }
                    };
                    for cd in [false, true] {
                        for t in [0.3, 1.7, 4.1] {
                            let t = t / omega;
                            let r = (|| {
                                let generic = first_order(&path, t, &bath, cd)?.state(1);
                                let closed = swap_levels(&analytic_first_order(&path, t, beta, &rates, jump, cd)?);
                                Ok(generic.max_abs_diff(&closed))
                            })();
                            tally.record(r, || format!("{name} {jump:?} β={beta} ω={omega} cd={cd}"));
                        }
                    }
                }
            }
        }
    }
    tally.finish("two_level_first_order", 1e-8)
}

/// Spectral identities of random rate matrices.
pub fn check_rate_spectrum(opts: &ValidateOptions) -> Check {
    let mut tally = Tally::new();
    for (i, inst) in instances(opts, &[2, 3, 4], 4).iter().enumerate() {
        let r = bare_basis(inst).and_then(|basis| {
            let k = build_k(&inst.bath.dissipator(&basis)?);
            let spec = rate_spectrum(&k)?;
            let n = k.nrows();
            let pseudo = &k * reduced_inverse(&spec) - (DMatrix::identity(n, n) - spec.kernel_projector());
            let kernel = (&k * spec.stationary()).amax();
            Ok(spec.biorthogonality_error().max(spec.completeness_error()).max(pseudo.amax()).max(kernel))
        });
        tally.record(r, || format!("instance {i}"));
    }
    tally.finish("rate_spectrum_identities", 1e-10)
}

fn dynamics_bath(cfg: &SimConfig, injection: Option<Injection>) -> Result<Bath> {
    let bath = cfg.bath()?;
    Ok(match injection {
        Some(inj) => inj.apply(bath),
        None => bath,
    })
}

/// First-order deviation of the limit cycle when `ω` halves from 0.02 to
/// 0.01; second-order scaling gives a ratio of 4.
pub fn check_expansion_order(opts: &ValidateOptions) -> Check {
    let deviation = |omega: f64| -> Result<f64> {
        let mut cfg = SimConfig::rotating_qubit(omega, false);
        cfg.periods = 2;
        let path = cfg.path()?;
        let bath = dynamics_bath(&cfg, opts.injection)?;
        let dynamics = Dynamics { path: &path, bath: &bath, with_cd: false };
        let traj = dynamics.integrate(&cfg.initial.state()?, cfg.periods, cfg.samples_per_period, &cfg.integrator)?;
        Ok(compare(&path, &bath, false, &traj, 1, cfg.integrator.steps_per_period)?.max_difference())
    };
    let name = "expansion_order";
    match deviation(0.02).and_then(|a| Ok((a, deviation(0.01)?))) {
        Ok((a, b)) => {
            let ratio = a / b;
            Check {
                name: name.into(),
                passed: (3.0..=5.0).contains(&ratio),
                residual: (ratio - 4.0).abs(),
                limit: 1.0,
                detail: format!("ratio={ratio:.4} (deviations {a:.3e}, {b:.3e})"),
            }
        }
        Err(e) => Check { name: name.into(), passed: false, residual: f64::NAN, limit: 1.0, detail: e.to_string() },
    }
}

/// Trace, Hermiticity and positivity over the integration matrix.
pub fn check_conservation(opts: &ValidateOptions) -> Check {
    let mut tally = Tally::new();
    let mut configs = Vec::new();
    for cd in [false, true] {
        configs.push(SimConfig::rotating_qubit(0.05, cd));
        configs.push(SimConfig::rotating_qubit(1.0, cd));
        configs.push(SimConfig::wobbling_qubit(0.05, JumpKind::Z, cd));
        configs.push(SimConfig::wobbling_qubit(0.05, JumpKind::X, cd));
    }
    for cfg in configs.iter_mut() {
        cfg.periods = 3;
        let r = (|| {
            let path = cfg.path()?;
            let bath = dynamics_bath(cfg, opts.injection)?;
            let dynamics = Dynamics { path: &path, bath: &bath, with_cd: cfg.with_cd };
            let dg = dynamics.integrate(&cfg.initial.state()?, cfg.periods, cfg.samples_per_period, &cfg.integrator)?.diagnostics;
            // scaled so every bound maps to 1
            Ok((dg.max_trace_error / 1e-9).max(dg.max_hermiticity_error / 1e-10).max(-dg.min_eigenvalue / 1e-9))
        })();
        tally.record(r, || format!("{:?} ω={} cd={}", cfg.jump, cfg.protocol.omega(), cfg.with_cd));
    }
    let mut c = tally.finish("conservation", 1.0);
    c.detail = format!("{} (trace/1e-9, hermiticity/1e-10, -min_eig/1e-9)", c.detail);
    c
}

pub fn validate(opts: &ValidateOptions) -> Report {
    let checks = vec![
        check_stationarity(opts),
        check_kms(opts),
        check_block_oracle(opts),
        check_gauge_cancellation(opts),
        check_two_level_rates(opts),
        check_two_level_first_order(opts),
        check_rate_spectrum(opts),
        check_expansion_order(opts),
        check_conservation(opts),
    ];
    Report { seed: opts.seed, instances: opts.instances, injection: opts.injection, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(injection: Option<Injection>) -> ValidateOptions {
        ValidateOptions { instances: 12, injection, ..Default::default() }
    }

    #[test]
    fn clean_randomized_checks_pass() {
        let o = quick(None);
        for c in [check_stationarity(&o), check_kms(&o), check_block_oracle(&o), check_gauge_cancellation(&o), check_rate_spectrum(&o)] {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn clean_two_level_checks_pass() {
        let o = quick(None);
        for c in [check_two_level_rates(&o), check_two_level_first_order(&o)] {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn injections_are_caught() {
        let kms = quick(Some(Injection::KmsSign));
        assert!(!check_stationarity(&kms).passed);
        assert!(!check_kms(&kms).passed);
        let gauge = quick(Some(Injection::GaugeSign));
        assert!(!check_gauge_cancellation(&gauge).passed);
        assert!(!check_block_oracle(&gauge).passed);
        assert!(!check_block_oracle(&quick(Some(Injection::DeltaSign))).passed);
    }

    #[test]
    fn random_instances_are_reproducible() {
        let a = random_instance(&mut ChaCha8Rng::seed_from_u64(5), 3);
        let b = random_instance(&mut ChaCha8Rng::seed_from_u64(5), 3);
        assert_eq!(a.path.base, b.path.base);
        assert_eq!(a.t, b.t);
        assert!("gauge-sign".parse::<Injection>().is_ok());
        assert!("bogus".parse::<Injection>().is_err());
    }
}
