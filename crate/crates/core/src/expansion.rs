//! Slow-driving expansion of the limit-cycle state.
//!
//! To zeroth order the state is the instantaneous Gibbs state. The first
//! order adds `K̄⁻¹ ∂_t π` to the populations and solves the coherence
//! block against the drive coupling. Second-order population dynamics are
//! exposed through the effective generator `K − A12 (K2 − iΔ)⁻¹ A21`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::liouville::{assemble_generator, GeneratorBlocks, StateVec};
use crate::protocol::Protocol;
use crate::specmat::{jacobi_eigh, CMatrix};
use crate::thermo::{gibbs_populations, Bath};

/// Threshold, relative to `‖K‖_max`, below which a rate eigenvalue counts
/// as zero.
pub const KERNEL_RTOL: f64 = 1e-10;

/// Spectral representation `K = Σ_n Λ_n |R_n⟩⟨L_n|` of a detailed-balance
/// rate matrix. Index 0 is the stationary mode.
#[derive(Debug, Clone)]
pub struct RateSpectrum {
    /// `Λ_0 = 0 ≥ Λ_1 ≥ …`
    pub eigenvalues: Vec<f64>,
    /// Column `n` is `|R_n⟩`; column 0 sums to one.
    pub right: DMatrix<f64>,
    /// Row `n` is `⟨L_n|`; row 0 is all ones.
    pub left: DMatrix<f64>,
}

impl RateSpectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn stationary(&self) -> DVector<f64> {
        self.right.column(0).into_owned()
    }

    /// `|R_0⟩⟨L_0|`.
    pub fn kernel_projector(&self) -> DMatrix<f64> {
        self.right.column(0) * self.left.row(0)
    }

    /// `max |⟨L_m|R_n⟩ − δ_mn|`.
    pub fn biorthogonality_error(&self) -> f64 {
        (&self.left * &self.right - DMatrix::identity(self.dim(), self.dim())).amax()
    }

    /// `max |Σ_n |R_n⟩⟨L_n| − 1|`.
    pub fn completeness_error(&self) -> f64 {
        (&self.right * &self.left - DMatrix::identity(self.dim(), self.dim())).amax()
    }
}

/// Stationary vector of `K` with unit entry sum.
pub fn stationary_vector(k: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = k.nrows();
    let mut a = k.clone();
    let mut rhs = DVector::zeros(n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    rhs[n - 1] = 1.0;
    a.lu().solve(&rhs).ok_or(Error::NonSimpleKernel { count: 2 })
}

pub fn rate_spectrum(k: &DMatrix<f64>) -> Result<RateSpectrum> {
    let n = k.nrows();
    let scale = k.amax();
    if scale == 0.0 {
        return Err(Error::NonSimpleKernel { count: n });
    }
    let pi = stationary_vector(k)?;
    if pi.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::NonSimpleKernel { count: pi.iter().filter(|&&p| !(p > 0.0)).count() + 1 });
    }
    let mut residual: f64 = 0.0;
    for m in 0..n {
        for j in 0..m {
            residual = residual.max((k[(m, j)] * pi[j] - k[(j, m)] * pi[m]).abs());
        }
    }
    if residual > 1e-10 * scale {
        return Err(Error::NotDetailedBalance { residual });
    }
    let sq: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |m, j| {
        let a = k[(m, j)] * sq[j] / sq[m];
        let b = k[(j, m)] * sq[m] / sq[j];
        C64::new(0.5 * (a + b), 0.0)
    });
    let (vals, vecs) = jacobi_eigh(&s);
    let zeros: Vec<usize> = (0..n).filter(|&i| vals[i].abs() <= KERNEL_RTOL * scale).collect();
    if zeros.len() != 1 {
        return Err(Error::NonSimpleKernel { count: zeros.len() });
    }
    // stationary mode first, then decreasing (less negative first)
    let mut order: Vec<usize> = (0..n).filter(|&i| i != zeros[0]).collect();
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());
    order.insert(0, zeros[0]);

    let mut right = DMatrix::zeros(n, n);
    let mut left = DMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (col, &i) in order.iter().enumerate() {
        eigenvalues.push(if col == 0 { 0.0 } else { vals[i] });
        for r in 0..n {
            let v = vecs[(r, i)].re;
            right[(r, col)] = sq[r] * v;
            left[(col, r)] = v / sq[r];
        }
    }
    for r in 0..n {
        right[(r, 0)] = pi[r];
        left[(0, r)] = 1.0;
    }
    Ok(RateSpectrum { eigenvalues, right, left })
}

/// `K̄⁻¹ = Σ_{n≠0} |R_n⟩⟨L_n| / Λ_n`.
pub fn reduced_inverse(spec: &RateSpectrum) -> DMatrix<f64> {
    let n = spec.dim();
    let mut out = DMatrix::zeros(n, n);
    for i in 1..n {
        out += spec.right.column(i) * spec.left.row(i) / spec.eigenvalues[i];
    }
    out
}

/// Group inverse `(K − |π⟩⟨1|)⁻¹ + |π⟩⟨1|`, valid without detailed balance.
pub fn group_inverse(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = k.nrows();
    let pi = stationary_vector(k)?;
    let p = &pi * DVector::from_element(n, 1.0).transpose();
    let inv = (k - &p).try_inverse().ok_or(Error::NonSimpleKernel { count: 2 })?;
    Ok(inv + p)
}

/// Reduced inverse via the spectrum, falling back to the group inverse when
/// `K` lacks detailed balance.
pub fn reduced_inverse_of(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match rate_spectrum(k) {
        Ok(s) => Ok(reduced_inverse(&s)),
        Err(Error::NotDetailedBalance { .. }) => group_inverse(k),
        Err(e) => Err(e),
    }
}

/// Perturbative terms by order; `pop_terms[0]` is the Gibbs vector.
#[derive(Debug, Clone)]
pub struct ExpansionResult {
    pub order: usize,
    pub time: f64,
    pub pop_terms: Vec<Vec<f64>>,
    pub coh_terms: Vec<Vec<C64>>,
    pub cd_applied: bool,
}

impl ExpansionResult {
    /// Sum of all terms up to `order`.
    pub fn state(&self, order: usize) -> StateVec {
        let n = self.pop_terms[0].len();
        let mut pop = vec![C64::new(0.0, 0.0); n];
        let mut coh = vec![C64::new(0.0, 0.0); n * (n - 1)];
        for o in 0..=order.min(self.order) {
            for (a, b) in pop.iter_mut().zip(&self.pop_terms[o]) {
                *a += b;
            }
            for (a, b) in coh.iter_mut().zip(&self.coh_terms[o]) {
                *a += b;
            }
        }
        StateVec { pop, coh }
    }
}

fn minimum_singular_value(m: &CMatrix) -> f64 {
    m.clone().singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Solve `kcoh · x = rhs`, rejecting numerically singular blocks.
pub fn solve_coherence(kcoh: &CMatrix, rhs: &DVector<C64>) -> Result<DVector<C64>> {
    let smin = minimum_singular_value(kcoh);
    let scale = kcoh.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(f64::MIN_POSITIVE);
    if !(smin > 1e-12 * scale) {
        return Err(Error::SingularCoherenceBlock { min_singular: smin });
    }
    kcoh.clone().lu().solve(rhs).ok_or(Error::SingularCoherenceBlock { min_singular: smin })
}

/// `∂_t π` of the Gibbs populations from `ε̇_n = ⟨ε_n|∂_t H|ε_n⟩`.
pub fn gibbs_rate(blocks: &GeneratorBlocks, h_rate: &CMatrix, beta: f64) -> Vec<f64> {
    let e = &blocks.basis.eigenvalues;
    let pi = gibbs_populations(e, beta);
    let hd = blocks.basis.to_eigenbasis(h_rate);
    let ed: Vec<f64> = (0..e.len()).map(|n| hd[(n, n)].re).collect();
    let mean: f64 = pi.iter().zip(&ed).map(|(p, d)| p * d).sum();
    pi.iter().zip(&ed).map(|(p, d)| -beta * p * (d - mean)).collect()
}

/// Zeroth- and first-order terms at time `t`, in the eigenbasis of `H(t)`.
///
/// Without CD the first-order coherence is `−(K2 − iΔ)⁻¹ A21 π`; with CD it
/// is `−[(K2 − iΔ)⁻¹ − (−iΔ)⁻¹] A21 π`. Populations are the same in both.
pub fn first_order<P: Protocol + ?Sized>(path: &P, t: f64, bath: &Bath, with_cd: bool) -> Result<ExpansionResult> {
    let blocks = assemble_generator(path, t, bath, false)?;
    first_order_from_blocks(&blocks, &path.hamiltonian_rate(t), bath.beta(), with_cd)
}

pub fn first_order_from_blocks(blocks: &GeneratorBlocks, h_rate: &CMatrix, beta: f64, with_cd: bool) -> Result<ExpansionResult> {
    let n = blocks.dim();
    let pi = gibbs_populations(&blocks.basis.eigenvalues, beta);
    let kbar = reduced_inverse_of(&blocks.k)?;
    let dpi = DVector::from_vec(gibbs_rate(blocks, h_rate, beta));
    let pop1: Vec<f64> = (&kbar * dpi).iter().cloned().collect();

    let drive = &blocks.a21 * DVector::from_iterator(n, pi.iter().map(|&p| C64::new(p, 0.0)));
    let mut coh1 = -solve_coherence(&blocks.kcoh, &drive)?;
    if with_cd {
        // (−iΔ)⁻¹ is diagonal with nonzero entries by nondegeneracy
        for (c, (d, del)) in coh1.iter_mut().zip(drive.iter().zip(&blocks.delta.diag)) {
            *c += d / C64::new(0.0, -del);
        }
    }
    Ok(ExpansionResult {
        order: 1,
        time: blocks.time,
        pop_terms: vec![pi, pop1],
        coh_terms: vec![vec![C64::new(0.0, 0.0); n * (n - 1)], coh1.iter().cloned().collect()],
        cd_applied: with_cd,
    })
}

/// `K − A12 (K2 − iΔ)⁻¹ A21`; real up to roundoff for Hermitian dynamics.
pub fn effective_population_generator(blocks: &GeneratorBlocks) -> Result<CMatrix> {
    let n = blocks.dim();
    let mut out = blocks.k.map(|x| C64::new(x, 0.0));
    if blocks.a21.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Ok(out);
    }
    let mut x = CMatrix::zeros(blocks.kcoh.nrows(), n);
    for j in 0..n {
        let col = solve_coherence(&blocks.kcoh, &blocks.a21.column(j).into_owned())?;
        x.set_column(j, &col);
    }
    out -= &blocks.a12 * x;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::assemble_generator;
    use crate::protocol::{BlochPath, MatrixPath};
    use crate::specmat::{HermitianOperator, eigendecompose_at};
    use crate::thermo::{Extrapolation, RateFunction};
    use crate::twolevel::JumpKind;

    fn two_level_k(gamma: f64, bh: f64) -> DMatrix<f64> {
        let e = (-bh).exp();
        DMatrix::from_row_slice(2, 2, &[-gamma, gamma * e, gamma, -gamma * e])
    }

    fn half_rate_bath(jump: JumpKind) -> Bath {
        Bath::new(vec![jump.operator()], RateFunction::new(1.0, 0.0, vec![(1.0, 0.5)], Extrapolation::Flat).unwrap()).unwrap()
    }

    #[test]
    fn two_level_spectrum() {
        let k = two_level_k(0.25, 1.0);
        let s = rate_spectrum(&k).unwrap();
        let e = (-1.0f64).exp();
        assert!((s.eigenvalues[1] + 0.25 * (1.0 + e)).abs() < 1e-14);
        // R_0 ∝ (e^{−βh}, 1)
        assert!((s.right[(0, 0)] / s.right[(1, 0)] - e).abs() < 1e-14);
        assert!(s.biorthogonality_error() < 1e-12);
        assert!(s.completeness_error() < 1e-12);
        for j in 0..2 {
            assert_eq!(s.left[(0, j)], 1.0);
        }
        assert!(matches!(rate_spectrum(&DMatrix::zeros(2, 2)), Err(Error::NonSimpleKernel { .. })));
    }

    #[test]
    fn reduced_inverse_identities() {
        let k = two_level_k(0.3, 0.7);
        let s = rate_spectrum(&k).unwrap();
        let kb = reduced_inverse(&s);
        let q = DMatrix::identity(2, 2) - s.kernel_projector();
        assert!((&kb * &k - &q).amax() < 1e-12);
        assert!((&k * &kb - &q).amax() < 1e-12);
        assert!((&kb * s.stationary()).amax() < 1e-14);
        assert!((&kb * &kb * &k * &k - &q).amax() < 1e-12);
        assert!((q.clone() / s.eigenvalues[1] - &kb).amax() < 1e-12);
        assert!((group_inverse(&k).unwrap() - &kb).amax() < 1e-12);
    }

    #[test]
    fn non_detailed_balance_falls_back() {
        // three-state cycle with a net current
        let k = DMatrix::from_row_slice(3, 3, &[-1.0, 0.1, 0.9, 0.9, -1.0, 0.1, 0.1, 0.9, -1.0]);
        assert!(matches!(rate_spectrum(&k), Err(Error::NotDetailedBalance { .. })));
        let kb = reduced_inverse_of(&k).unwrap();
        let pi = stationary_vector(&k).unwrap();
        let q = DMatrix::identity(3, 3) - &pi * DVector::from_element(3, 1.0).transpose();
        assert!((&kb * &k - &q).amax() < 1e-12);
    }

    #[test]
    fn constant_gap_has_no_population_correction() {
        for p in [BlochPath::p1(1.0, 0.05), BlochPath::p2(1.0, 0.05)] {
            let r = first_order(&p, 7.0, &half_rate_bath(JumpKind::X), false).unwrap();
            assert!(r.pop_terms[1].iter().all(|x| x.abs() < 1e-14));
            assert!(r.coh_terms[0].iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn gibbs_rate_matches_finite_difference() {
        let h0 = HermitianOperator::from_real_diagonal(&[0.0, 0.8, 2.0]).into_matrix();
        let mut a = CMatrix::zeros(3, 3);
        a[(0, 0)] = C64::new(0.3, 0.0);
        a[(1, 2)] = C64::new(0.2, 0.1);
        a[(2, 1)] = C64::new(0.2, -0.1);
        let p = MatrixPath::new(h0, vec![(a, CMatrix::zeros(3, 3))], 0.4).unwrap();
        let rf = RateFunction::flat(1.3, 0.5, 0.0).unwrap();
        let bath = Bath::new(vec![HermitianOperator::new(CMatrix::from_element(3, 3, C64::new(1.0, 0.0))).unwrap()], rf).unwrap();
        let t = 1.1;
        let b = assemble_generator(&p, t, &bath, false).unwrap();
        let analytic = gibbs_rate(&b, &p.hamiltonian_rate(t), 1.3);
        let dt = 1e-4 * p.period();
        let pops = |s: f64| {
            let basis = eigendecompose_at(&HermitianOperator::new(p.hamiltonian(s)).unwrap(), s).unwrap();
            gibbs_populations(&basis.eigenvalues, 1.3)
        };
        let (a, c) = (pops(t + dt), pops(t - dt));
        for i in 0..3 {
            assert!((analytic[i] - (a[i] - c[i]) / (2.0 * dt)).abs() < 1e-8);
        }
        let r = first_order(&p, t, &bath, false).unwrap();
        assert!(r.pop_terms[1].iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn effective_generator_properties() {
        let bath = half_rate_bath(JumpKind::Z);
        let still = MatrixPath::static_hamiltonian(HermitianOperator::from_real_diagonal(&[-0.5, 0.5]).into_matrix(), 1.0);
        let b = assemble_generator(&still, 0.0, &bath, false).unwrap();
        assert_eq!(effective_population_generator(&b).unwrap(), b.k.map(|x| C64::new(x, 0.0)));

        let corr = |omega: f64| {
            let p = BlochPath::p1(1.0, omega);
            let b = assemble_generator(&p, 0.0, &bath, false).unwrap();
            let eff = effective_population_generator(&b).unwrap();
            for j in 0..2 {
                assert!(eff.column(j).sum().norm() < 1e-14);
            }
            let c = eff - b.k.map(|x| C64::new(x, 0.0));
            assert!(c.iter().all(|z| z.im.abs() < 1e-14));
            c.iter().fold(0.0f64, |a, z| a.max(z.norm()))
        };
        let r = corr(0.02) / corr(0.01);
        assert!((r - 4.0).abs() < 1e-9, "{r}");
    }

    #[test]
    fn cd_without_dissipation_removes_coherence() {
        let p = BlochPath::p1(1.0, 0.05);
        let off = Bath::new(vec![JumpKind::Z.operator()], RateFunction::flat(1.0, 0.0, 0.0).unwrap()).unwrap();
        // K = 0 has no simple kernel, so work from the blocks directly
        let b = assemble_generator(&p, 1.0, &off, false).unwrap();
        let n = 2;
        let pi = gibbs_populations(&b.basis.eigenvalues, 1.0);
        let drive = &b.a21 * DVector::from_iterator(n, pi.iter().map(|&x| C64::new(x, 0.0)));
        let mut c = -solve_coherence(&b.kcoh, &drive).unwrap();
        for (x, (d, del)) in c.iter_mut().zip(drive.iter().zip(&b.delta.diag)) {
            *x += d / C64::new(0.0, -del);
        }
        assert!(c.iter().all(|z| z.norm() < 1e-16));
    }
}
