//! Vectorized GKLS generator in the instantaneous eigenbasis.
//!
//! A density operator with eigenbasis components `ρ_mn` is stored as
//! a population block `(ρ_00, …, ρ_{N−1,N−1})` followed by a coherence block
//! of all `ρ_mn` with `m ≠ n` in row-major order `(0,1), (0,2), …, (1,0), …`.
//! The generator is split accordingly into
//!
//! ```text
//!     [ K     A12          ]
//!     [ A21   K2 − iΔ + A2 ]
//! ```
//!
//! where `K` is the classical transition-rate matrix, `K2` the coherence part
//! of the dissipator, `Δ_{mn} = ε_m − ε_n`, and the `A` blocks come from the
//! rotation of the eigenbasis along the path.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::cd::{gauge_operator, generating_hamiltonian};
use crate::error::{Error, Result};
use crate::protocol::Protocol;
use crate::specmat::{
    commutator, eigendecompose_at, max_abs, CMatrix, DensityMatrix, EigenDerivativeTable, SpectralDecomposition, I,
};
use crate::thermo::{Bath, ThermalDissipator};

/// Position of `ρ_kl` in the `(pop, coh)` vector of an `n`-level state.
#[inline]
pub fn block_index(n: usize, k: usize, l: usize) -> usize {
    if k == l {
        k
    } else {
        n + k * (n - 1) + if l < k { l } else { l - 1 }
    }
}

/// Coherence index pairs `(m, n)`, `m ≠ n`, in storage order.
pub fn coherence_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|m| (0..n).filter(move |&k| k != m).map(move |k| (m, k))).collect()
}

/// Density operator in eigenbasis coordinates, split into populations and
/// coherences.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVec {
    pub pop: Vec<C64>,
    pub coh: Vec<C64>,
}

impl StateVec {
    pub const POP_TOL: f64 = 1e-9;

    pub fn dim(&self) -> usize {
        self.pop.len()
    }

    /// Diagonal state with the given (real) populations.
    pub fn from_populations(p: &[f64]) -> Self {
        let n = p.len();
        Self { pop: p.iter().map(|&x| C64::new(x, 0.0)).collect(), coh: vec![C64::new(0.0, 0.0); n * (n - 1)] }
    }

    /// Split eigenbasis components `m[(k, l)] = ρ_kl`.
    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        Self { pop: (0..n).map(|k| m[(k, k)]).collect(), coh: coherence_pairs(n).into_iter().map(|kl| m[kl]).collect() }
    }

    pub fn to_matrix(&self) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = self.pop[k];
        }
        for (c, kl) in self.coh.iter().zip(coherence_pairs(n)) {
            m[kl] = *c;
        }
        m
    }

    /// Flat `(pop, coh)` vector.
    pub fn to_vector(&self) -> DVector<C64> {
        DVector::from_iterator(self.pop.len() + self.coh.len(), self.pop.iter().chain(self.coh.iter()).cloned())
    }

    pub fn from_vector(v: &DVector<C64>) -> Result<Self> {
        let len = v.len();
        let n = (len as f64).sqrt().round() as usize;
        if n * n != len {
            return Err(Error::DimensionMismatch { expected: n * n, found: len });
        }
        Ok(Self { pop: v.rows(0, n).iter().cloned().collect(), coh: v.rows(n, len - n).iter().cloned().collect() })
    }

    pub fn pop_sum(&self) -> f64 {
        self.pop.iter().map(|p| p.re).sum()
    }

    pub fn real_populations(&self) -> Vec<f64> {
        self.pop.iter().map(|p| p.re).collect()
    }

    pub fn max_abs_diff(&self, other: &StateVec) -> f64 {
        self.pop.iter().zip(&other.pop).chain(self.coh.iter().zip(&other.coh)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Euclidean norm of the difference of the flat vectors.
    pub fn distance(&self, other: &StateVec) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }

    /// Largest violation of unit trace, real populations, and conjugate
    /// pairing of coherences.
    pub fn consistency_error(&self) -> f64 {
        let n = self.dim();
        let mut err = (self.pop_sum() - 1.0).abs();
        for p in &self.pop {
            err = err.max(p.im.abs());
        }
        let m = self.to_matrix();
        for (k, l) in coherence_pairs(n) {
            err = err.max((m[(k, l)] - m[(l, k)].conj()).norm());
        }
        err
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.consistency_error();
        if e > Self::POP_TOL {
            return Err(Error::InvalidDensityMatrix(format!("state vector inconsistent by {e:.3e}")));
        }
        Ok(())
    }
}

pub fn vectorize(rho: &DensityMatrix, basis: &SpectralDecomposition) -> Result<StateVec> {
    if rho.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: rho.dim() });
    }
    Ok(StateVec::from_matrix(&basis.to_eigenbasis(rho.matrix())))
}

pub fn devectorize(s: &StateVec, basis: &SpectralDecomposition) -> Result<DensityMatrix> {
    if s.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: s.dim() });
    }
    DensityMatrix::new(basis.from_eigenbasis(&s.to_matrix()))
}

/// Bohr frequencies `Δ_{mn} = ε_m − ε_n` in coherence order.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMatrix {
    pub diag: Vec<f64>,
}

impl DeltaMatrix {
    pub fn from_eigenvalues(e: &[f64]) -> Self {
        Self { diag: coherence_pairs(e.len()).into_iter().map(|(m, n)| e[m] - e[n]).collect() }
    }

    /// `−iΔ` as a diagonal matrix.
    pub fn minus_i_delta(&self) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(self.diag.len(), self.diag.iter().map(|&d| C64::new(0.0, -d))))
    }
}

/// The blocks of the vectorized generator at one time. All blocks include
/// the drive velocity, so that `dense()` is the generator itself.
#[derive(Debug, Clone)]
pub struct GeneratorBlocks {
    /// Transition-rate matrix; `k[(m, n)]` is the rate `n → m`.
    pub k: DMatrix<f64>,
    /// Coherence part of the dissipator.
    pub k2: CMatrix,
    pub delta: DeltaMatrix,
    /// `K2 − iΔ`.
    pub kcoh: CMatrix,
    /// Population ← coherence coupling. Also carries dissipative pop↔coh
    /// terms, which vanish unless Bohr frequencies are degenerate.
    pub a12: CMatrix,
    /// Coherence ← population coupling (same remark as `a12`).
    pub a21: CMatrix,
    /// Coherence ← coherence part of the eigenbasis rotation.
    pub a2: CMatrix,
    pub basis: SpectralDecomposition,
    pub time: f64,
}

impl GeneratorBlocks {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Full `N² × N²` generator in `(pop, coh)` order.
    pub fn dense(&self) -> CMatrix {
        let n = self.dim();
        let c = n * (n - 1);
        let mut g = CMatrix::zeros(n * n, n * n);
        g.view_mut((0, 0), (n, n)).copy_from(&self.k.map(|x| C64::new(x, 0.0)));
        g.view_mut((0, n), (n, c)).copy_from(&self.a12);
        g.view_mut((n, 0), (c, n)).copy_from(&self.a21);
        g.view_mut((n, n), (c, c)).copy_from(&(&self.kcoh + &self.a2));
        g
    }

    /// Largest entry of the three drive-coupling blocks.
    pub fn coupling_norm(&self) -> f64 {
        max_abs(&self.a12).max(max_abs(&self.a21)).max(max_abs(&self.a2))
    }

    pub fn apply(&self, s: &StateVec) -> Result<StateVec> {
        if s.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: s.dim() });
        }
        StateVec::from_vector(&(self.dense() * s.to_vector()))
    }
}

/// Superoperator of the dissipator in `(pop, coh)` coordinates of its own
/// projection basis.
pub fn dissipator_superoperator(d: &ThermalDissipator) -> CMatrix {
    let n = d.dim();
    let mut s = CMatrix::zeros(n * n, n * n);
    for ch in d.channels() {
        if ch.rate == 0.0 {
            continue;
        }
        let l = &ch.eigen;
        let ldl = &ch.eigen_dag_l;
        for k in 0..n {
            for lc in 0..n {
                let row = block_index(n, k, lc);
                for a in 0..n {
                    for b in 0..n {
                        // D[E_ab]_{kl} = ρ-independent coefficient of ρ_ab
                        let mut v = l[(k, a)] * l[(lc, b)].conj();
                        if lc == b {
                            v -= 0.5 * ldl[(k, a)];
                        }
                        if k == a {
                            v -= 0.5 * ldl[(b, lc)];
                        }
                        if v != C64::new(0.0, 0.0) {
                            s[(row, block_index(n, a, b))] += v * ch.rate;
                        }
                    }
                }
            }
        }
    }
    s
}

/// Transition-rate matrix `K_mn = Σ γ(ε)|⟨ε_m|L^ε|ε_n⟩|²` (`m ≠ n`) with
/// zero column sums.
pub fn build_k(d: &ThermalDissipator) -> DMatrix<f64> {
    let n = d.dim();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for ch in d.channels() {
        for m in 0..n {
            for j in 0..n {
                if m != j {
                    k[(m, j)] += ch.rate * ch.eigen[(m, j)].norm_sqr();
                }
            }
        }
    }
    for j in 0..n {
        let s: f64 = (0..n).filter(|&m| m != j).map(|m| k[(m, j)]).sum();
        k[(j, j)] = -s;
    }
    k
}

/// Superoperator of `ρ ↦ −[T, ρ]` in `(pop, coh)` coordinates, the
/// contribution of the basis rotation `T_mn = ⟨ε_m|∂_t ε_n⟩`.
fn rotation_superoperator(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let mut g = CMatrix::zeros(n * n, n * n);
    for k in 0..n {
        for l in 0..n {
            let row = block_index(n, k, l);
            for a in 0..n {
                // −T_ka ρ_al + ρ_kb T_bl
                g[(row, block_index(n, a, l))] -= t[(k, a)];
                g[(row, block_index(n, k, a))] += t[(a, l)];
            }
        }
    }
    g
}

/// Assemble the blocks for a given basis, basis-rotation table
/// `connection[(m, n)] = ⟨ε_m|∂_t ε_n⟩` (any gauge) and bath.
pub fn assemble_in_basis(basis: &SpectralDecomposition, connection: &CMatrix, bath: &Bath) -> Result<GeneratorBlocks> {
    let n = basis.dim();
    if connection.nrows() != n || connection.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: connection.nrows() });
    }
    let c = n * (n - 1);
    let d = bath.dissipator(basis)?;
    let dsup = dissipator_superoperator(&d);
    let k = build_k(&d);
    let k2 = dsup.view((n, n), (c, c)).into_owned();
    let mut delta = DeltaMatrix::from_eigenvalues(&basis.eigenvalues);
    if bath.faults.flip_delta {
        delta.diag.iter_mut().for_each(|x| *x = -*x);
    }
    let kcoh = &k2 + delta.minus_i_delta();

    let mut rot = rotation_superoperator(connection);
    if bath.faults.flip_gauge {
        rot = -rot;
    }
    let a12 = rot.view((0, n), (n, c)) + dsup.view((0, n), (n, c));
    let a21 = rot.view((n, 0), (c, n)) + dsup.view((n, 0), (c, n));
    let a2 = rot.view((n, n), (c, c)).into_owned();
    Ok(GeneratorBlocks { k, k2, delta, kcoh, a12, a21, a2, basis: basis.clone(), time: basis.time })
}

/// Generator blocks at time `t`. With `with_cd` the spectrum, dissipator
/// projection, Δ and rotation are all taken from `H + H_cd`.
pub fn assemble_generator<P: Protocol + ?Sized>(path: &P, t: f64, bath: &Bath, with_cd: bool) -> Result<GeneratorBlocks> {
    let (h, hd) = generating_hamiltonian(path, t, with_cd)?;
    let basis = eigendecompose_at(&h, t)?;
    let table = EigenDerivativeTable::from_hamiltonian_rate(&basis, &hd);
    assemble_in_basis(&basis, &table.entries, bath)
}

/// Brute-force generator: applies `−i[H,·] + D[·] + i[λ̇·Â,·]` to every
/// eigenbasis matrix unit on the original space and reads the result back
/// in eigenbasis coordinates.
pub fn dense_oracle_in_basis(basis: &SpectralDecomposition, hamiltonian: &CMatrix, gauge: &CMatrix, d: &ThermalDissipator) -> CMatrix {
    let n = basis.dim();
    let mut g = CMatrix::zeros(n * n, n * n);
    for a in 0..n {
        for b in 0..n {
            let mut unit = CMatrix::zeros(n, n);
            unit[(a, b)] = C64::new(1.0, 0.0);
            let x = basis.from_eigenbasis(&unit);
            let lab = commutator(hamiltonian, &x) * (-I) + d.apply_matrix(&x) + commutator(gauge, &x) * I;
            let out = basis.to_eigenbasis(&lab);
            let col = block_index(n, a, b);
            for k in 0..n {
                for l in 0..n {
                    g[(block_index(n, k, l), col)] = out[(k, l)];
                }
            }
        }
    }
    g
}

pub fn dense_oracle<P: Protocol + ?Sized>(path: &P, t: f64, bath: &Bath, with_cd: bool) -> Result<CMatrix> {
    let (h, hd) = generating_hamiltonian(path, t, with_cd)?;
    let basis = eigendecompose_at(&h, t)?;
    let table = EigenDerivativeTable::from_hamiltonian_rate(&basis, &hd);
    let gauge = gauge_operator(&basis, &table);
    let d = bath.dissipator(&basis)?;
    Ok(dense_oracle_in_basis(&basis, h.matrix(), &gauge, &d))
}

/// Superoperator of `ρ ↦ −i[op, ρ]` in eigenbasis `(pop, coh)` coordinates.
pub fn unitary_superoperator(basis: &SpectralDecomposition, op: &CMatrix) -> CMatrix {
    // −i[op, ρ] = −[T, ρ] with T = i·op in eigenbasis coordinates
    rotation_superoperator(&(basis.to_eigenbasis(op) * I))
}

/// Residual of the drive couplings after adding `−i[H_cd,·]` in the
/// eigenbasis of `H` alone.
pub fn gauge_cancellation_residual<P: Protocol + ?Sized>(path: &P, t: f64, bath: &Bath) -> Result<f64> {
    let blocks = assemble_generator(path, t, bath, false)?;
    let n = blocks.dim();
    let c = n * (n - 1);
    let cd = path.counterdiabatic(t)?;
    let u = unitary_superoperator(&blocks.basis, &cd.operator);
    let r12 = &blocks.a12 + u.view((0, n), (n, c));
    let r21 = &blocks.a21 + u.view((n, 0), (c, n));
    let r2 = &blocks.a2 + u.view((n, n), (c, c));
    Ok(max_abs(&r12).max(max_abs(&r21)).max(max_abs(&r2)))
}
