//! Closed-form results for the driven two-level system.
//!
//! Unlike the rest of the crate, which orders levels by ascending energy,
//! the functions here return states in **(excited, ground)** order. Use
//! [`swap_levels`] to convert between the two.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::{GeneratorBlocks, StateVec};
use crate::protocol::{bloch_operator, pauli, BlochPath, Protocol};
use crate::specmat::{eigendecompose_at, EigenDerivativeTable, HermitianOperator, SpectralDecomposition};
use crate::thermo::RateFunction;

/// `(h/2) n·σ` with `n = (sinθ cosφ, sinθ sinφ, cosθ)`.
pub fn bloch_hamiltonian(h: f64, theta: f64, phi: f64) -> Result<HermitianOperator> {
    if !(h > 0.0) {
        return Err(Error::Config(format!("gap h must be positive, got {h}")));
    }
    let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    HermitianOperator::new(bloch_operator(n.map(|x| 0.5 * h * x)))
}

/// Eigenbasis of [`bloch_hamiltonian`], index 0 = ground.
pub fn bloch_basis(h: f64, theta: f64, phi: f64) -> Result<SpectralDecomposition> {
    eigendecompose_at(&bloch_hamiltonian(h, theta, phi)?, 0.0)
}

/// Hermitian jump operator of the two-level bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JumpKind {
    /// `σ_z`, phase damping.
    Z,
    /// `σ_x`, bit flip.
    X,
}

impl JumpKind {
    pub fn operator(self) -> HermitianOperator {
        let [sx, _, sz] = pauli();
        HermitianOperator::new(match self {
            JumpKind::Z => sz,
            JumpKind::X => sx,
        })
        .expect("Pauli matrices are Hermitian")
    }

    /// Squared transverse component of the jump axis relative to `n`.
    fn transverse(self, theta: f64, phi: f64) -> f64 {
        match self {
            JumpKind::Z => theta.sin().powi(2),
            JumpKind::X => 1.0 - (theta.sin() * phi.cos()).powi(2),
        }
    }

    pub fn rates(self, h: f64, theta: f64, phi: f64, beta: f64, rates: &RateFunction) -> Result<TwoLevelRates> {
        let s = self.transverse(theta, phi);
        let gh = rates.rate(h)?;
        let g0 = rates.rate(0.0)?;
        Ok(TwoLevelRates {
            gamma: gh * s,
            gamma2: 0.5 * (1.0 + (-beta * h).exp()) * gh * s + 2.0 * g0 * (1.0 - s),
        })
    }
}

/// Population relaxation rate `Γ` and coherence decay rate `Γ₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelRates {
    pub gamma: f64,
    pub gamma2: f64,
}

pub fn rates_z(h: f64, theta: f64, beta: f64, rates: &RateFunction) -> Result<TwoLevelRates> {
    JumpKind::Z.rates(h, theta, 0.0, beta, rates)
}

pub fn rates_x(h: f64, theta: f64, phi: f64, beta: f64, rates: &RateFunction) -> Result<TwoLevelRates> {
    JumpKind::X.rates(h, theta, phi, beta, rates)
}

/// Read `Γ` and `Γ₂` off two-level generator blocks (ascending order).
pub fn extract_rates(blocks: &GeneratorBlocks) -> TwoLevelRates {
    // K_{ground←excited} and the (excited, ground) coherence entry
    TwoLevelRates { gamma: blocks.k[(0, 1)], gamma2: -blocks.kcoh[(1, 1)].re }
}

/// Reverse the level order of a two-level state.
pub fn swap_levels(s: &StateVec) -> StateVec {
    let mut pop = s.pop.clone();
    let mut coh = s.coh.clone();
    pop.reverse();
    coh.reverse();
    StateVec { pop, coh }
}

/// First-order slow-driving state in (excited, ground) order, with
/// coherences relative to [`bloch_basis`] at time `t`.
///
/// With `with_cd`, each factor `1/(Γ₂ ± ih)` becomes
/// `1/(Γ₂ ± ih) − 1/(±ih)`.
pub fn analytic_first_order(
    path: &BlochPath,
    t: f64,
    beta: f64,
    rates: &RateFunction,
    jump: JumpKind,
    with_cd: bool,
) -> Result<StateVec> {
    let s = path.state(t);
    let [h, hd, _] = s.h;
    let (theta, phi) = (s.theta[0], s.phi[0]);
    let tr = jump.rates(h, theta, phi, beta, rates)?;

    let th = (0.5 * beta * h).tanh();
    let x = (-beta * h).exp();
    let xd = -beta * hd * x;
    let corr = if xd == 0.0 {
        0.0
    } else if tr.gamma == 0.0 {
        return Err(Error::ZeroRate);
    } else {
        xd / (tr.gamma * (1.0 + x).powi(3))
    };
    let pop = vec![C64::new(0.5 * (1.0 - th) - corr, 0.0), C64::new(0.5 * (1.0 + th) + corr, 0.0)];

    let basis = bloch_basis(h, theta, phi)?;
    let table = EigenDerivativeTable::from_hamiltonian_rate(&basis, &path.hamiltonian_rate(t));
    // ⟨ground|∂_t excited⟩
    let d = table.entries[(0, 1)];
    let ih = C64::new(0.0, h);
    let mut f_plus = (tr.gamma2 + ih).inv();
    let mut f_minus = (tr.gamma2 - ih).inv();
    if with_cd {
        f_plus -= ih.inv();
        f_minus -= (-ih).inv();
    }
    let coh = vec![d.conj() * f_plus * th, d * f_minus * th];
    Ok(StateVec { pop, coh })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specmat::{max_abs_diff, trace};
    use crate::thermo::Extrapolation;
    use std::f64::consts::PI;

    fn half_rate() -> RateFunction {
        RateFunction::new(1.0, 0.0, vec![(1.0, 0.5)], Extrapolation::Flat).unwrap()
    }

    #[test]
    fn bloch_hamiltonian_special_cases() {
        let [sx, _, sz] = pauli();
        assert!(max_abs_diff(bloch_hamiltonian(2.0, 0.0, 0.3).unwrap().matrix(), &sz) < 1e-15);
        assert!(max_abs_diff(bloch_hamiltonian(2.0, PI / 2.0, 0.0).unwrap().matrix(), &sx) < 1e-15);
        let m = bloch_hamiltonian(1.4, 1.1, 2.2).unwrap();
        let a = m.matrix();
        assert!(trace(a).norm() < 1e-15);
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        assert!((det.re + 1.4f64.powi(2) / 4.0).abs() < 1e-14 && det.im.abs() < 1e-15);
        assert!(bloch_hamiltonian(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn rate_formulas() {
        let rf = half_rate();
        let z = rates_z(1.0, PI / 4.0, 1.0, &rf).unwrap();
        assert!((z.gamma - 0.25).abs() < 1e-15);
        assert!((z.gamma2 - 0.5 * (1.0 + (-1.0f64).exp()) * 0.25).abs() < 1e-15);
        assert!((z.gamma2 - 0.17097).abs() < 1e-4);
        let rf0 = RateFunction::new(1.0, 0.3, vec![(1.0, 0.5)], Extrapolation::Flat).unwrap();
        let z0 = rates_z(1.0, 0.0, 1.0, &rf0).unwrap();
        assert_eq!(z0.gamma, 0.0);
        assert!((z0.gamma2 - 0.6).abs() < 1e-15);
        assert!(rates_x(1.0, PI / 2.0, 0.0, 1.0, &rf).unwrap().gamma.abs() < 1e-15);
        assert!((rates_x(1.0, PI / 4.0, 0.0, 1.0, &rf).unwrap().gamma - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constant_gap_gives_gibbs_populations() {
        let p = BlochPath::p1(1.0, 0.1);
        let s = analytic_first_order(&p, 3.0, 1.0, &half_rate(), JumpKind::Z, false).unwrap();
        assert!((s.pop[0].re - 0.2689).abs() < 1e-4);
        assert!((s.pop[1].re - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn coherence_modulus_and_cd_suppression() {
        let p = BlochPath::p1(1.0, 0.1);
        let rf = half_rate();
        let plain = analytic_first_order(&p, 2.0, 1.0, &rf, JumpKind::Z, false).unwrap();
        assert!((plain.coh[0].norm() - 0.0161).abs() < 1e-4);
        assert!((plain.coh[0].norm() - plain.coh[1].norm()).abs() < 1e-15);
        let cd = analytic_first_order(&p, 2.0, 1.0, &rf, JumpKind::Z, true).unwrap();
        let g2 = rates_z(1.0, PI / 4.0, 1.0, &rf).unwrap().gamma2;
        let ratio = cd.coh[0].norm() / plain.coh[0].norm();
        // |1/(Γ₂+ih) − 1/(ih)| · |Γ₂+ih| = Γ₂/h
        assert!((ratio - g2).abs() < 1e-12);
        assert_eq!(cd.pop, plain.pop);
    }

    #[test]
    fn zero_rate_with_moving_gap() {
        use crate::protocol::PeriodicFn;
        let p = BlochPath::new(
            PeriodicFn { mean: 1.0, winding: 0.0, cos: vec![0.2], sin: vec![] },
            PeriodicFn::constant(0.0),
            PeriodicFn::constant(0.0),
            0.1,
        )
        .unwrap();
        let r = analytic_first_order(&p, 3.0, 1.0, &half_rate(), JumpKind::Z, false);
        assert!(matches!(r, Err(Error::ZeroRate)));
    }

    #[test]
    fn swap_is_an_involution() {
        let s = StateVec { pop: vec![C64::new(0.3, 0.0), C64::new(0.7, 0.0)], coh: vec![C64::new(0.1, 0.2), C64::new(0.1, -0.2)] };
        assert_eq!(swap_levels(&swap_levels(&s)), s);
        assert_eq!(swap_levels(&s).pop[0], s.pop[1]);
    }
}
