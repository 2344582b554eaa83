//! Thermodynamically consistent dissipator.
//!
//! Jump operators are split into energy-resolved pieces `L^ε` in the
//! instantaneous eigenbasis of the Hamiltonian, and each piece is weighted
//! by a rate `γ(ε)` whose negative branch is fixed by the KMS condition
//! `γ(−ε) = e^{−βε} γ(ε)`. With this structure the instantaneous Gibbs state
//! is a stationary point of the dissipator.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specmat::{anticommutator, max_abs, CMatrix, DensityMatrix, HermitianOperator, SpectralDecomposition};

/// Behaviour of the rate table beyond its last node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Extrapolation {
    /// Hold the last tabulated value.
    #[default]
    Flat,
    /// Reject queries outside the table.
    Error,
}

/// Positive-gap rate table with linear interpolation; the negative branch
/// is always derived from the KMS condition.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction {
    beta: f64,
    zero_rate: f64,
    /// `(gap, rate)` nodes with strictly increasing positive gaps.
    table: Vec<(f64, f64)>,
    extrapolation: Extrapolation,
    kms_sign: f64,
}

impl RateFunction {
    pub fn new(beta: f64, zero_rate: f64, mut table: Vec<(f64, f64)>, extrapolation: Extrapolation) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidRateTable(format!("beta must be finite and nonnegative, got {beta}")));
        }
        if !(zero_rate >= 0.0) {
            return Err(Error::InvalidRateTable(format!("rate at zero gap must be nonnegative, got {zero_rate}")));
        }
        table.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        for (i, &(g, r)) in table.iter().enumerate() {
            if !(g > 0.0) || !(r >= 0.0) || !g.is_finite() || !r.is_finite() {
                return Err(Error::InvalidRateTable(format!("node ({g}, {r}) needs a positive gap and a nonnegative rate")));
            }
            if i > 0 && g <= table[i - 1].0 {
                return Err(Error::InvalidRateTable(format!("duplicate gap {g}")));
            }
        }
        Ok(Self { beta, zero_rate, table, extrapolation, kms_sign: -1.0 })
    }

    /// Same rate `gamma` at every nonzero gap and `zero_rate` at ε = 0.
    pub fn flat(beta: f64, gamma: f64, zero_rate: f64) -> Result<Self> {
        Self::new(beta, zero_rate, vec![(f64::MIN_POSITIVE.sqrt(), gamma)], Extrapolation::Flat)
    }

    /// Mutation hook for `validate`: use `γ(−ε) = e^{+βε}γ(ε)`.
    #[doc(hidden)]
    pub fn with_flipped_kms(mut self) -> Self {
        self.kms_sign = 1.0;
        self
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn zero_rate(&self) -> f64 {
        self.zero_rate
    }

    pub fn table(&self) -> &[(f64, f64)] {
        &self.table
    }

    fn positive_branch(&self, eps: f64) -> Result<f64> {
        debug_assert!(eps >= 0.0);
        if eps == 0.0 {
            return Ok(self.zero_rate);
        }
        let mut lo = (0.0, self.zero_rate);
        for &node in &self.table {
            if eps <= node.0 {
                let w = (eps - lo.0) / (node.0 - lo.0);
                return Ok(lo.1 + w * (node.1 - lo.1));
            }
            lo = node;
        }
        match self.extrapolation {
            Extrapolation::Flat => Ok(lo.1),
            Extrapolation::Error => Err(Error::OutOfRange { eps, max: lo.0 }),
        }
    }

    /// `γ(ε)`; for `ε < 0` this is `e^{βε}γ(−ε)`.
    pub fn rate(&self, eps: f64) -> Result<f64> {
        if eps >= 0.0 {
            self.positive_branch(eps)
        } else {
            Ok((self.kms_sign * self.beta * eps.abs()).exp() * self.positive_branch(-eps)?)
        }
    }
}

/// One energy-resolved piece `L^ε` of a jump operator.
#[derive(Debug, Clone)]
pub struct GapBucket {
    /// Nonnegative Bohr frequency (bucket mean).
    pub gap: f64,
    /// `L^ε` in the eigenbasis coordinates of the projection basis.
    pub eigen: CMatrix,
    /// `L^ε` as an operator on the original space.
    pub operator: CMatrix,
}

/// Energy projections of one Hermitian jump operator. Only `ε ≥ 0` is
/// stored; `L^{−ε} = (L^ε)†`.
#[derive(Debug, Clone)]
pub struct ProjectedJump {
    pub source: HermitianOperator,
    pub buckets: Vec<GapBucket>,
}

impl ProjectedJump {
    /// Largest `‖[H, L^ε] + εL^ε‖_max` over the buckets.
    pub fn ladder_residual(&self, basis: &SpectralDecomposition) -> f64 {
        let h = basis.reconstruct();
        self.buckets
            .iter()
            .map(|b| max_abs(&(&h * &b.operator - &b.operator * &h + b.operator.scale(b.gap))))
            .fold(0.0, f64::max)
    }

    /// `‖Σ_ε L^ε − L‖_max`, summing both signs.
    pub fn completeness_residual(&self) -> f64 {
        let n = self.source.dim();
        let mut sum = CMatrix::zeros(n, n);
        for b in &self.buckets {
            sum += &b.operator;
            if b.gap > 0.0 {
                sum += b.operator.adjoint();
            }
        }
        max_abs(&(sum - self.source.matrix()))
    }
}

#[derive(Debug, Clone)]
pub struct ProjectedJumpSet {
    pub channels: Vec<ProjectedJump>,
}

/// Assign every element `⟨ε_n|L|ε_m⟩` to the bucket `ε = ε_m − ε_n`,
/// merging gaps closer than `gap_tol`.
pub fn project_jump(l: &HermitianOperator, basis: &SpectralDecomposition, gap_tol: f64) -> Result<ProjectedJump> {
    let n = basis.dim();
    if l.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: l.dim() });
    }
    let le = basis.to_eigenbasis(l.matrix());
    let e = &basis.eigenvalues;

    // (gap, row n, column m) with gap = ε_m − ε_n ≥ −tol
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for row in 0..n {
        for col in 0..n {
            let g = e[col] - e[row];
            if g > -gap_tol {
                pairs.push((g, row, col));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut clusters: Vec<Vec<(f64, usize, usize)>> = Vec::new();
    for p in pairs {
        match clusters.last_mut() {
            Some(c) if p.0 - c.last().unwrap().0 < gap_tol => c.push(p),
            _ => clusters.push(vec![p]),
        }
    }

    let buckets = clusters
        .into_iter()
        .filter_map(|c| {
            let has_diag = c.iter().any(|&(_, r, k)| r == k);
            let gap = if has_diag { 0.0 } else { c.iter().map(|p| p.0).sum::<f64>() / c.len() as f64 };
            let mut eigen = CMatrix::zeros(n, n);
            for &(g, r, k) in &c {
                // near-zero negative gaps are the mirror of a stored positive one
                if has_diag || g >= 0.0 {
                    eigen[(r, k)] = le[(r, k)];
                }
            }
            // the zero bucket must stay Hermitian
            if has_diag {
                for &(_, r, k) in &c {
                    eigen[(k, r)] = le[(k, r)];
                }
            }
            if gap < 0.0 {
                return None;
            }
            let operator = basis.from_eigenbasis(&eigen);
            Some(GapBucket { gap, eigen, operator })
        })
        .collect();
    Ok(ProjectedJump { source: l.clone(), buckets })
}

/// Default bucketing tolerance, `1e-8 × spectral range`.
pub fn default_gap_tol(basis: &SpectralDecomposition) -> f64 {
    1e-8 * basis.spectral_range()
}

/// A single energy-resolved Lindblad channel with its rate.
#[derive(Debug, Clone)]
pub(crate) struct Channel {
    pub rate: f64,
    pub eigen: CMatrix,
    pub eigen_dag_l: CMatrix,
}

/// Dissipator projected onto one spectral decomposition.
#[derive(Debug, Clone)]
pub struct ThermalDissipator {
    pub jumps: ProjectedJumpSet,
    pub rates: RateFunction,
    pub basis: SpectralDecomposition,
    channels: Vec<Channel>,
}

impl ThermalDissipator {
    pub fn new(jumps: ProjectedJumpSet, rates: RateFunction, basis: SpectralDecomposition) -> Result<Self> {
        let mut channels = Vec::new();
        for ch in &jumps.channels {
            for b in &ch.buckets {
                let up = rates.rate(b.gap)?;
                channels.push(Channel { rate: up, eigen_dag_l: b.eigen.adjoint() * &b.eigen, eigen: b.eigen.clone() });
                if b.gap > 0.0 {
                    let down = rates.rate(-b.gap)?;
                    let adj = b.eigen.adjoint();
                    channels.push(Channel { rate: down, eigen_dag_l: &b.eigen * &adj, eigen: adj });
                }
            }
        }
        Ok(Self { jumps, rates, basis, channels })
    }

    /// Project `jumps` onto `basis` with the default gap tolerance.
    pub fn build(jumps: &[HermitianOperator], rates: &RateFunction, basis: &SpectralDecomposition) -> Result<Self> {
        let tol = default_gap_tol(basis);
        let channels = jumps.iter().map(|l| project_jump(l, basis, tol)).collect::<Result<Vec<_>>>()?;
        Self::new(ProjectedJumpSet { channels }, rates.clone(), basis.clone())
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub(crate) fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// Dissipator acting on an operator written in eigenbasis coordinates.
    pub fn apply_eigen(&self, x: &CMatrix) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for c in &self.channels {
            if c.rate == 0.0 {
                continue;
            }
            let sandwich = &c.eigen * x * c.eigen.adjoint();
            out += (sandwich - anticommutator(&c.eigen_dag_l, x).scale(0.5)).scale(c.rate);
        }
        out
    }

    /// Dissipator acting on an arbitrary operator on the original space.
    pub fn apply_matrix(&self, x: &CMatrix) -> CMatrix {
        self.basis.from_eigenbasis(&self.apply_eigen(&self.basis.to_eigenbasis(x)))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<HermitianOperator> {
        apply_dissipator(self, rho)
    }
}

pub fn apply_dissipator(d: &ThermalDissipator, rho: &DensityMatrix) -> Result<HermitianOperator> {
    if rho.dim() != d.dim() {
        return Err(Error::DimensionMismatch { expected: d.dim(), found: rho.dim() });
    }
    let out = d.apply_matrix(rho.matrix());
    // exact Hermitization of roundoff
    HermitianOperator::new((&out + out.adjoint()).scale(0.5))
}

/// Boltzmann weights of a spectrum, normalized to unit sum.
pub fn gibbs_populations(eigenvalues: &[f64], beta: f64) -> Vec<f64> {
    let emin = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = eigenvalues.iter().map(|e| (-beta * (e - emin)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// `e^{−βH}/Z`, built in the eigenbasis of `basis`.
pub fn gibbs_state(basis: &SpectralDecomposition, beta: f64) -> DensityMatrix {
    let p = gibbs_populations(&basis.eigenvalues, beta);
    let n = p.len();
    let d = CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(p[i], 0.0) } else { C64::new(0.0, 0.0) });
    let m = basis.from_eigenbasis(&d);
    DensityMatrix::new((&m + m.adjoint()).scale(0.5)).expect("Gibbs state is a valid density matrix")
}

/// Mutation hooks used by `validate`. Every field defaults to off.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Faults {
    pub flip_gauge: bool,
    pub flip_delta: bool,
}

/// Reservoir coupling: Hermitian jump operators sharing one rate function.
#[derive(Debug, Clone)]
pub struct Bath {
    pub jumps: Vec<HermitianOperator>,
    pub rates: RateFunction,
    #[doc(hidden)]
    pub faults: Faults,
}

impl Bath {
    pub fn new(jumps: Vec<HermitianOperator>, rates: RateFunction) -> Result<Self> {
        if jumps.is_empty() {
            return Err(Error::Config("at least one jump operator is required".into()));
        }
        let n = jumps[0].dim();
        if let Some(bad) = jumps.iter().find(|l| l.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.dim() });
        }
        Ok(Self { jumps, rates, faults: Faults::default() })
    }

    pub fn beta(&self) -> f64 {
        self.rates.beta()
    }

    pub fn dissipator(&self, basis: &SpectralDecomposition) -> Result<ThermalDissipator> {
        if basis.dim() != self.jumps[0].dim() {
            return Err(Error::DimensionMismatch { expected: self.jumps[0].dim(), found: basis.dim() });
        }
        ThermalDissipator::build(&self.jumps, &self.rates, basis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::pauli;
    use crate::specmat::{eigendecompose, max_abs_diff, trace};

    fn sz_basis(h: f64) -> SpectralDecomposition {
        eigendecompose(&HermitianOperator::from_real_diagonal(&[h / 2.0, -h / 2.0])).unwrap()
    }

    fn herm(m: CMatrix) -> HermitianOperator {
        HermitianOperator::new(m).unwrap()
    }

    fn half_rate(h: f64) -> RateFunction {
        RateFunction::new(1.0 / h, 0.0, vec![(h, 0.5 * h)], Extrapolation::Error).unwrap()
    }

    #[test]
    fn rate_table_and_kms_branch() {
        let h = 1.0;
        let rf = half_rate(h);
        assert!((rf.rate(h).unwrap() - 0.5).abs() < 1e-15);
        assert!((rf.rate(-h).unwrap() - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((rf.rate(-h).unwrap() - 0.1839).abs() < 1e-4);
        assert_eq!(rf.rate(0.0).unwrap(), 0.0);
        assert!((rf.rate(0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(rf.rate(1.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(rf.rate(-1.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn flat_extrapolation_and_validation() {
        let rf = RateFunction::new(2.0, 0.1, vec![(1.0, 0.3), (2.0, 0.5)], Extrapolation::Flat).unwrap();
        assert!((rf.rate(10.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((rf.rate(1.5).unwrap() - 0.4).abs() < 1e-15);
        assert!(RateFunction::new(1.0, 0.0, vec![(1.0, -0.1)], Extrapolation::Flat).is_err());
        assert!(RateFunction::new(1.0, 0.0, vec![(1.0, 0.1), (1.0, 0.2)], Extrapolation::Flat).is_err());
        assert!(RateFunction::new(-1.0, 0.0, vec![], Extrapolation::Flat).is_err());
    }

    #[test]
    fn sigma_x_projects_to_ladder_pair() {
        let basis = sz_basis(1.0);
        let [sx, _, _] = pauli();
        let pj = project_jump(&herm(sx.clone()), &basis, default_gap_tol(&basis)).unwrap();
        let zero = pj.buckets.iter().find(|b| b.gap == 0.0).unwrap();
        assert!(max_abs(&zero.operator) < 1e-15);
        let down = pj.buckets.iter().find(|b| (b.gap - 1.0).abs() < 1e-12).unwrap();
        // lowering operator |ground⟩⟨excited| = |1⟩⟨0| in the computational basis
        let mut expect = CMatrix::zeros(2, 2);
        expect[(1, 0)] = C64::new(1.0, 0.0);
        assert!(max_abs_diff(&down.operator, &expect) < 1e-15);
        assert!(pj.ladder_residual(&basis) < 1e-14);
        assert!(pj.completeness_residual() < 1e-14);
    }

    #[test]
    fn commuting_and_identity_jumps() {
        let basis = sz_basis(1.0);
        let [_, _, sz] = pauli();
        let pj = project_jump(&herm(sz.clone()), &basis, 1e-9).unwrap();
        let nonzero: Vec<_> = pj.buckets.iter().filter(|b| max_abs(&b.operator) > 1e-15).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].gap, 0.0);
        assert!(max_abs_diff(&nonzero[0].operator, &sz) < 1e-15);

        let id = HermitianOperator::identity(2);
        let d = ThermalDissipator::build(&[id], &RateFunction::flat(1.0, 0.7, 0.9).unwrap(), &basis).unwrap();
        let rho = DensityMatrix::from_populations(&[0.3, 0.7]).unwrap();
        let mut m = rho.matrix().clone();
        m[(0, 1)] = C64::new(0.1, 0.2);
        m[(1, 0)] = C64::new(0.1, -0.2);
        assert!(max_abs(&d.apply_matrix(&m)) < 1e-15);
    }

    #[test]
    fn gibbs_state_is_stationary() {
        let basis = sz_basis(1.0);
        let [sx, _, _] = pauli();
        let d = ThermalDissipator::build(&[herm(sx)], &half_rate(1.0), &basis).unwrap();
        let g = gibbs_state(&basis, 1.0);
        assert!(max_abs(apply_dissipator(&d, &g).unwrap().matrix()) < 1e-15);
    }

    #[test]
    fn infinite_temperature_fixed_point() {
        let basis = sz_basis(1.0);
        let [sx, sy, _] = pauli();
        let rf = RateFunction::flat(0.0, 0.4, 0.2).unwrap();
        let d = ThermalDissipator::build(&[herm(sx), herm(sy)], &rf, &basis).unwrap();
        let out = apply_dissipator(&d, &DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(max_abs(out.matrix()) < 1e-15);
    }

    #[test]
    fn excited_population_decays() {
        let basis = sz_basis(1.0);
        let [sx, _, _] = pauli();
        let d = ThermalDissipator::build(&[herm(sx)], &half_rate(1.0), &basis).unwrap();
        // diag(1,0) populates the excited level of (h/2)σz
        let rho = DensityMatrix::from_populations(&[1.0, 0.0]).unwrap();
        let out = apply_dissipator(&d, &rho).unwrap();
        assert!(out.matrix()[(0, 0)].re < 0.0);
        assert!((out.matrix()[(0, 0)].re + 0.5).abs() < 1e-14);
        assert!(trace(out.matrix()).norm() < 1e-15);
    }

    #[test]
    fn gibbs_limits() {
        let basis = sz_basis(1.0);
        let g = gibbs_state(&basis, 1.0);
        let pg = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((g.matrix()[(1, 1)].re - pg).abs() < 1e-15);
        assert!((pg - 0.7311).abs() < 1e-4);
        let hot = gibbs_state(&basis, 0.0);
        assert!(max_abs_diff(hot.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);
        let cold = gibbs_state(&basis, 50.0);
        assert!((cold.matrix()[(1, 1)].re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kms_flip_breaks_stationarity() {
        let basis = sz_basis(1.0);
        let [sx, _, _] = pauli();
        let d = ThermalDissipator::build(&[herm(sx)], &half_rate(1.0).with_flipped_kms(), &basis).unwrap();
        assert!(max_abs(&d.apply_matrix(gibbs_state(&basis, 1.0).matrix())) > 1e-2);
    }
}
