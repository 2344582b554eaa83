//! JSON run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::StateVec;
use crate::protocol::{BlochPath, PeriodicFn};
use crate::thermo::{Bath, Extrapolation, RateFunction};
use crate::twolevel::JumpKind;

/// Parameter path of the driven qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProtocolConfig {
    /// `θ = π/4`, `φ = ωt`, constant gap.
    P1 { h0: f64, omega: f64 },
    /// `θ = (π/2)(1 − cos(ωt)/5)`, `φ = ωt`, constant gap.
    P2 { h0: f64, omega: f64 },
    /// Arbitrary Fourier paths for `h`, `θ`, `φ`.
    Bloch { h: PeriodicFn, theta: PeriodicFn, phi: PeriodicFn, omega: f64 },
}

impl ProtocolConfig {
    pub fn build(&self) -> Result<BlochPath> {
        match self {
            ProtocolConfig::P1 { h0, omega } => {
                check_positive("h0", *h0)?;
                check_positive("omega", *omega)?;
                Ok(BlochPath::p1(*h0, *omega))
            }
            ProtocolConfig::P2 { h0, omega } => {
                check_positive("h0", *h0)?;
                check_positive("omega", *omega)?;
                Ok(BlochPath::p2(*h0, *omega))
            }
            ProtocolConfig::Bloch { h, theta, phi, omega } => BlochPath::new(h.clone(), theta.clone(), phi.clone(), *omega),
        }
    }

    pub fn omega(&self) -> f64 {
        match self {
            ProtocolConfig::P1 { omega, .. } | ProtocolConfig::P2 { omega, .. } | ProtocolConfig::Bloch { omega, .. } => *omega,
        }
    }

    pub fn set_omega(&mut self, value: f64) {
        match self {
            ProtocolConfig::P1 { omega, .. } | ProtocolConfig::P2 { omega, .. } | ProtocolConfig::Bloch { omega, .. } => *omega = value,
        }
    }

    /// Set the mean gap; a `bloch` path is rescaled as a whole.
    pub fn set_gap(&mut self, value: f64) {
        match self {
            ProtocolConfig::P1 { h0, .. } | ProtocolConfig::P2 { h0, .. } => *h0 = value,
            ProtocolConfig::Bloch { h, .. } => {
                let s = value / h.mean;
                h.mean = value;
                h.winding *= s;
                h.cos.iter_mut().chain(h.sin.iter_mut()).for_each(|c| *c *= s);
            }
        }
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega()
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

/// Rate function: either constant `gamma` at every positive gap, or an
/// explicit `(gap, rate)` table. `gamma_zero` is the rate at ε = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub gamma_zero: f64,
    #[serde(default)]
    pub table: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub extrapolation: Extrapolation,
}

impl RateConfig {
    pub fn constant(gamma: f64, gamma_zero: f64) -> Self {
        Self { gamma: Some(gamma), gamma_zero, table: None, extrapolation: Extrapolation::Flat }
    }

    pub fn build(&self, beta: f64) -> Result<RateFunction> {
        match (&self.gamma, &self.table) {
            (Some(g), None) => {
                if !(*g >= 0.0) {
                    return Err(Error::InvalidRateTable(format!("gamma must be nonnegative, got {g}")));
                }
                RateFunction::flat(beta, *g, self.gamma_zero)
            }
            (None, Some(t)) => RateFunction::new(beta, self.gamma_zero, t.iter().map(|p| (p[0], p[1])).collect(), self.extrapolation),
            _ => Err(Error::Config("rates need exactly one of `gamma` or `table`".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Initial number of RK4 steps per drive period.
    pub steps_per_period: usize,
    /// Agreement required between one period at `n` and `2n` steps.
    pub tolerance: f64,
    pub max_steps_per_period: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { steps_per_period: 2000, tolerance: 1e-9, max_steps_per_period: 1 << 20 }
    }
}

/// Initial state in the eigenbasis of `H(0)`, ascending energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub pop: Vec<f64>,
    /// `[re, im]` per coherence `(m, n)`, row-major with `m ≠ n`.
    #[serde(default)]
    pub coh: Option<Vec<[f64; 2]>>,
}

impl Default for InitialState {
    /// Ground state.
    fn default() -> Self {
        Self { pop: vec![1.0, 0.0], coh: None }
    }
}

impl InitialState {
    pub fn state(&self) -> Result<StateVec> {
        let n = self.pop.len();
        let mut s = StateVec::from_populations(&self.pop);
        if let Some(c) = &self.coh {
            if c.len() != n * (n - 1) {
                return Err(Error::Config(format!("initial coherences need {} entries, got {}", n * (n - 1), c.len())));
            }
            s.coh = c.iter().map(|z| num_complex::Complex64::new(z[0], z[1])).collect();
        }
        s.validate().map_err(|e| Error::Config(format!("initial state: {e}")))?;
        let ev = crate::specmat::eigenvalues_hermitian(&s.to_matrix());
        if ev[0] < -crate::specmat::DensityMatrix::POSITIVITY_TOL {
            return Err(Error::Config(format!("initial state is not positive (eigenvalue {:.3e})", ev[0])));
        }
        Ok(s)
    }
}

fn default_periods() -> usize {
    10
}

fn default_samples() -> usize {
    100
}

fn default_discard() -> usize {
    5
}

/// One simulation of the driven qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub protocol: ProtocolConfig,
    pub jump: JumpKind,
    pub rates: RateConfig,
    pub beta: f64,
    #[serde(default)]
    pub with_cd: bool,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default = "default_periods")]
    pub periods: usize,
    #[serde(default = "default_samples")]
    pub samples_per_period: usize,
    /// Transient periods excluded from steady-state statistics.
    #[serde(default = "default_discard")]
    pub discard_periods: usize,
    #[serde(default)]
    pub initial: InitialState,
    /// Echoed into output metadata; runs are deterministic.
    #[serde(default)]
    pub seed: u64,
}

impl SimConfig {
    /// Reference qubit: `βh = 1`, phase damping, `γ(h)/h = 0.5`, `γ(0) = 0`,
    /// protocol p1 (axis precessing at fixed tilt), starting in the ground state.
    pub fn rotating_qubit(omega: f64, with_cd: bool) -> Self {
        Self {
            protocol: ProtocolConfig::P1 { h0: 1.0, omega },
            jump: JumpKind::Z,
            rates: RateConfig::constant(0.5, 0.0),
            beta: 1.0,
            with_cd,
            integrator: IntegratorConfig::default(),
            periods: 10,
            samples_per_period: default_samples(),
            discard_periods: 5,
            initial: InitialState::default(),
            seed: 0,
        }
    }

    /// As [`Self::rotating_qubit`] with protocol p2 (nodding tilt) and a choice of jump.
    pub fn wobbling_qubit(omega: f64, jump: JumpKind, with_cd: bool) -> Self {
        Self { protocol: ProtocolConfig::P2 { h0: 1.0, omega }, jump, ..Self::rotating_qubit(omega, with_cd) }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let p = path.as_ref();
        let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Validate every field; all failures are configuration errors.
    pub fn check(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::Config(_) | Error::InvalidRateTable(_) => e,
            other => Error::Config(other.to_string()),
        };
        self.protocol.build().map_err(as_config)?;
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::Config(format!("beta must be finite and nonnegative, got {}", self.beta)));
        }
        self.rates.build(self.beta)?;
        if !(self.rates.gamma_zero >= 0.0) {
            return Err(Error::InvalidRateTable("gamma_zero must be nonnegative".into()));
        }
        let ic = &self.integrator;
        if ic.steps_per_period == 0 || !(ic.tolerance > 0.0) || ic.max_steps_per_period < ic.steps_per_period {
            return Err(Error::Config("integrator needs steps_per_period ≥ 1, tolerance > 0, max_steps_per_period ≥ steps_per_period".into()));
        }
        if self.periods == 0 {
            return Err(Error::Config("periods must be at least 1".into()));
        }
        if self.samples_per_period == 0 || ic.steps_per_period % self.samples_per_period != 0 {
            return Err(Error::Config(format!(
                "samples_per_period ({}) must divide steps_per_period ({})",
                self.samples_per_period, ic.steps_per_period
            )));
        }
        if self.initial.pop.len() != 2 {
            return Err(Error::Config("the qubit needs two initial populations".into()));
        }
        self.initial.state()?;
        Ok(())
    }

    pub fn path(&self) -> Result<BlochPath> {
        self.protocol.build()
    }

    pub fn bath(&self) -> Result<Bath> {
        Bath::new(vec![self.jump.operator()], self.rates.build(self.beta)?)
    }

    pub fn period(&self) -> f64 {
        self.protocol.period()
    }
}
