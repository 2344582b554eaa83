//! Adiabatic gauge potential and counterdiabatic driving.

use crate::error::{Error, Result};
use crate::liouville::StateVec;
use crate::protocol::{bloch_operator, cross, BlochPath, Protocol};
use crate::specmat::{
    eigendecompose_at, hermiticity_deviation, max_abs, CMatrix, EigenDerivativeTable, HermitianOperator,
    SpectralDecomposition, I,
};

/// Counterdiabatic operator `λ̇·Â` together with its time derivative.
#[derive(Debug, Clone)]
pub struct CdTerm {
    pub operator: CMatrix,
    pub rate: CMatrix,
}

/// The contracted gauge potential `λ̇·Â = i Σ_{m≠n} |ε_m⟩⟨ε_m|∂_t ε_n⟩⟨ε_n|`.
#[derive(Debug, Clone)]
pub struct GaugePotential {
    pub operator: CMatrix,
}

impl GaugePotential {
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_deviation(&self.operator)
    }

    /// Largest diagonal element in the eigenbasis of `basis`.
    pub fn max_diagonal_in(&self, basis: &SpectralDecomposition) -> f64 {
        let op = basis.to_eigenbasis(&self.operator);
        op.diagonal().iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    pub fn norm(&self) -> f64 {
        max_abs(&self.operator)
    }
}

/// `i U T U†` for the derivative table `T` of `basis`.
pub fn gauge_operator(basis: &SpectralDecomposition, table: &EigenDerivativeTable) -> CMatrix {
    let mut off = table.entries.clone();
    for k in 0..off.nrows() {
        off[(k, k)] = 0.0.into();
    }
    basis.from_eigenbasis(&off) * I
}

pub fn gauge_potential<P: Protocol + ?Sized>(path: &P, t: f64) -> Result<GaugePotential> {
    let basis = eigendecompose_at(&HermitianOperator::new(path.hamiltonian(t))?, t)?;
    let table = EigenDerivativeTable::from_hamiltonian_rate(&basis, &path.hamiltonian_rate(t));
    Ok(GaugePotential { operator: gauge_operator(&basis, &table) })
}

/// Generic counterdiabatic term; the rate is a central difference with
/// step `1e-4·T₀`.
pub fn generic_counterdiabatic<P: Protocol + ?Sized>(path: &P, t: f64) -> Result<CdTerm> {
    let operator = gauge_potential(path, t)?.operator;
    let dt = 1e-4 * path.period();
    let plus = gauge_potential(path, t + dt)?.operator;
    let minus = gauge_potential(path, t - dt)?.operator;
    Ok(CdTerm { operator, rate: (plus - minus).unscale(2.0 * dt) })
}

/// Closed form `(1/2)(n × ṅ)·σ` for a Bloch path.
pub fn two_level_cd(path: &BlochPath, t: f64) -> HermitianOperator {
    let [n, nd, _] = path.direction(t);
    HermitianOperator::new(bloch_operator(cross(n, nd).map(|x| 0.5 * x))).expect("Pauli combination is Hermitian")
}

/// Hamiltonian that generates the dynamics, and its time derivative:
/// `H` alone or `H + H_cd`.
pub fn generating_hamiltonian<P: Protocol + ?Sized>(path: &P, t: f64, with_cd: bool) -> Result<(HermitianOperator, CMatrix)> {
    let mut h = path.hamiltonian(t);
    let mut hd = path.hamiltonian_rate(t);
    if with_cd {
        let cd = path.counterdiabatic(t)?;
        h += &cd.operator;
        hd += &cd.rate;
    }
    Ok((HermitianOperator::new(h)?, hd))
}

/// Re-express a state given in the eigenbasis `basis_e` in the eigenbasis
/// `basis_eps`: `ρ^ε = O ρ^E O†` with `O_mk = ⟨ε_m|E_k⟩`.
pub fn basis_transform(rho_e: &StateVec, basis_e: &SpectralDecomposition, basis_eps: &SpectralDecomposition) -> Result<StateVec> {
    let n = basis_e.dim();
    if basis_eps.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: basis_eps.dim() });
    }
    if rho_e.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho_e.dim() });
    }
    let o = basis_eps.overlaps(basis_e);
    let m = &o * rho_e.to_matrix() * o.adjoint();
    Ok(StateVec::from_matrix(&m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::vectorize;
    use crate::protocol::{MatrixPath, PeriodicFn};
    use crate::specmat::{eigendecompose, eigenvalues_hermitian, max_abs_diff, trace, DensityMatrix};
    use std::f64::consts::PI;

    #[test]
    fn static_path_has_no_gauge_potential() {
        let h0 = HermitianOperator::from_real_diagonal(&[0.0, 1.0, 2.5]).into_matrix();
        let p = MatrixPath::static_hamiltonian(h0, 0.3);
        assert!(gauge_potential(&p, 0.7).unwrap().norm() < 1e-15);
    }

    #[test]
    fn generic_matches_closed_form_on_p1() {
        let omega = 0.1;
        let p = BlochPath::p1(1.0, omega);
        for k in 0..8 {
            let t = k as f64 * 1.3;
            let g = gauge_potential(&p, t).unwrap();
            let cd = two_level_cd(&p, t);
            assert!(max_abs_diff(&g.operator, cd.matrix()) < 1e-8);
            assert!(g.hermiticity_error() < 1e-12);
        }
        // ‖n × ṅ‖/2 = ω sin(π/4)/2
        let [n, nd, _] = p.direction(0.4);
        let c = cross(n, nd);
        let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt() / 2.0;
        assert!((norm - omega * (PI / 4.0).sin() / 2.0).abs() < 1e-14);
        let expect = [-(PI / 4.0).cos() * (omega * 0.4).cos(), -(PI / 4.0).cos() * (omega * 0.4).sin(), (PI / 4.0).sin()]
            .map(|x| x * omega * (PI / 4.0).sin());
        for i in 0..3 {
            assert!((c[i] - expect[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn cd_is_off_diagonal_and_linear_in_omega() {
        let a = BlochPath::p2(1.0, 0.05);
        let b = BlochPath::p2(1.0, 0.1);
        // same phase of the protocol, twice the speed
        let ga = gauge_potential(&a, 3.0).unwrap();
        let gb = gauge_potential(&b, 1.5).unwrap();
        assert!((gb.norm() - 2.0 * ga.norm()).abs() < 1e-12);
        let basis = eigendecompose(&HermitianOperator::new(a.hamiltonian(3.0)).unwrap()).unwrap();
        assert!(ga.max_diagonal_in(&basis) < 1e-15);
        let cd = two_level_cd(&a, 3.0);
        assert!(trace(cd.matrix()).norm() < 1e-15);
        assert!(GaugePotential { operator: cd.into_matrix() }.max_diagonal_in(&basis) < 1e-14);
        let still = BlochPath::new(PeriodicFn::constant(1.0), PeriodicFn::constant(0.3), PeriodicFn::constant(0.2), 1.0).unwrap();
        assert!(max_abs(two_level_cd(&still, 0.5).matrix()) == 0.0);
    }

    #[test]
    fn generic_cd_rate_matches_closed_form() {
        let p = BlochPath::p2(1.0, 0.2);
        let generic = generic_counterdiabatic(&p, 2.0).unwrap();
        let closed = p.counterdiabatic(2.0).unwrap();
        assert!(max_abs_diff(&generic.operator, &closed.operator) < 1e-10);
        assert!(max_abs_diff(&generic.rate, &closed.rate) < 1e-8);
    }

    #[test]
    fn basis_transform_properties() {
        let p = BlochPath::p1(1.0, 0.3);
        let t = 0.9;
        let (hg, _) = generating_hamiltonian(&p, t, true).unwrap();
        let be = eigendecompose_at(&hg, t).unwrap();
        let beps = eigendecompose_at(&HermitianOperator::new(p.hamiltonian(t)).unwrap(), t).unwrap();

        let pure_e = StateVec::from_populations(&[1.0, 0.0]);
        let same = basis_transform(&pure_e, &be, &be).unwrap();
        assert!(same.max_abs_diff(&pure_e) < 1e-15);

        let moved = basis_transform(&pure_e, &be, &beps).unwrap();
        assert!(moved.coh.iter().any(|c| c.norm() > 1e-3));
        assert!((moved.pop_sum() - 1.0).abs() < 1e-12);
        let ev = eigenvalues_hermitian(&moved.to_matrix());
        assert!((ev[0]).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);

        // consistent with going through the lab frame
        let lab = DensityMatrix::new(be.from_eigenbasis(&pure_e.to_matrix())).unwrap();
        assert!(vectorize(&lab, &beps).unwrap().max_abs_diff(&moved) < 1e-14);
    }

    #[test]
    fn transform_deviation_is_linear_in_omega() {
        let dev = |omega: f64| {
            let p = BlochPath::p1(1.0, omega);
            let t = 0.25 * p.period();
            let (hg, _) = generating_hamiltonian(&p, t, true).unwrap();
            let be = eigendecompose_at(&hg, t).unwrap();
            let beps = eigendecompose_at(&HermitianOperator::new(p.hamiltonian(t)).unwrap(), t).unwrap();
            let s = StateVec::from_populations(&[0.8, 0.2]);
            basis_transform(&s, &be, &beps).unwrap().max_abs_diff(&s)
        };
        let r = dev(0.02) / dev(0.01);
        assert!((r - 2.0).abs() < 0.01, "ratio {r}");
    }
}
