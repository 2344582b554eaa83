//! Dense Hermitian operator toolkit.
//!
//! Eigendecomposition is done with cyclic complex Jacobi rotations; the
//! dimensions handled here are small (N ≤ 8) so robustness matters more
//! than speed. Eigenvalues come out ascending and each eigenvector carries a
//! canonical phase (its largest component is real and positive) unless a
//! caller re-phases it explicitly.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::protocol::Protocol;

pub type CMatrix = DMatrix<C64>;

/// Relative gap below which a spectrum counts as degenerate.
pub const DEGENERACY_RTOL: f64 = 1e-8;

const HERMITIAN_TOL: f64 = 1e-12;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Largest entry of `m - m†`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// A Hermitian matrix. Construction symmetrizes after checking the input
/// is Hermitian to within 1e-12 (relative to its largest entry).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(CMatrix);

impl HermitianOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let dev = hermiticity_deviation(&m);
        if dev > HERMITIAN_TOL * max_abs(&m).max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let sym = (&m + m.adjoint()).scale(0.5);
        Ok(Self(sym))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self(CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(d[i], 0.0) } else { C64::new(0.0, 0.0) }))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

impl AsRef<CMatrix> for HermitianOperator {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// Eigenvalues and orthonormal eigenvectors (stored as columns) of a
/// Hermitian operator at a given time.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `n` is `|ε_n⟩`.
    pub vectors: CMatrix,
    pub time: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, n: usize) -> nalgebra::DVector<C64> {
        self.vectors.column(n).into_owned()
    }

    pub fn spectral_range(&self) -> f64 {
        let lo = self.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    /// `Σ_n ε_n |ε_n⟩⟨ε_n|`.
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&e| C64::new(e, 0.0)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }

    /// Matrix elements `⟨ε_m|O|ε_n⟩`.
    pub fn to_eigenbasis(&self, op: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * op * &self.vectors
    }

    /// Inverse of [`to_eigenbasis`](Self::to_eigenbasis).
    pub fn from_eigenbasis(&self, op: &CMatrix) -> CMatrix {
        &self.vectors * op * self.vectors.adjoint()
    }

    /// Overlap matrix `O[m][k] = ⟨self_m|other_k⟩`.
    pub fn overlaps(&self, other: &SpectralDecomposition) -> CMatrix {
        self.vectors.adjoint() * &other.vectors
    }

    /// Index of the largest-modulus component of each eigenvector.
    pub fn reference_components(&self) -> Vec<usize> {
        (0..self.dim()).map(|n| leading_component(&self.vectors, n)).collect()
    }

    /// Re-phase every eigenvector so that component `refs[n]` of vector `n`
    /// is real and positive.
    pub fn with_reference_phases(mut self, refs: &[usize]) -> Self {
        for (n, &j) in refs.iter().enumerate() {
            let z = self.vectors[(j, n)];
            if z.norm() > 0.0 {
                let ph = z.conj() / z.norm();
                for r in 0..self.dim() {
                    self.vectors[(r, n)] *= ph;
                }
            }
        }
        self
    }

    /// Largest `|⟨ε_m|ε_n⟩ − δ_mn|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        max_abs_diff(&g, &CMatrix::identity(self.dim(), self.dim()))
    }

    fn min_gap(&self) -> f64 {
        let mut sorted = self.eigenvalues.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

fn leading_component(v: &CMatrix, col: usize) -> usize {
    let max = (0..v.nrows()).map(|r| v[(r, col)].norm()).fold(0.0, f64::max);
    (0..v.nrows()).find(|&r| v[(r, col)].norm() >= max * (1.0 - 1e-9)).unwrap_or(0)
}

/// Raw cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Returns ascending eigenvalues and the unitary whose columns are the
/// corresponding eigenvectors, each with its leading component real and
/// positive. No degeneracy check.
pub fn jacobi_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = CMatrix::identity(n, n);
    let frob = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let floor = f64::MIN_POSITIVE.max(frob * 1e-300);

    for _ in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum();
        if off.sqrt() <= f64::EPSILON * 1e-2 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)];
                let ag = g.norm();
                if ag <= floor {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * ag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let ph = g / ag;
                let phc = ph.conj();

                // A <- A W, V <- V W with W = diag-phase * Givens
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * phc * s;
                    a[(k, q)] = akp * s + akq * phc * c;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * phc * s;
                    v[(k, q)] = vkp * s + vkq * phc * c;
                }
                // A <- W† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * ph * s;
                    a[(q, k)] = apk * s + aqk * ph * c;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &v.column(src));
    }
    for col in 0..n {
        let j = leading_component(&vecs, col);
        let z = vecs[(j, col)];
        if z.norm() > 0.0 {
            let ph = z.conj() / z.norm();
            for r in 0..n {
                vecs[(r, col)] *= ph;
            }
        }
    }
    (vals, vecs)
}

/// Eigenvalues only, ascending.
pub fn eigenvalues_hermitian(m: &CMatrix) -> Vec<f64> {
    jacobi_eigh(m).0
}

/// Spectral decomposition with the nondegeneracy check.
pub fn eigendecompose(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    eigendecompose_at(h, 0.0)
}

pub fn eigendecompose_at(h: &HermitianOperator, time: f64) -> Result<SpectralDecomposition> {
    let (eigenvalues, vectors) = jacobi_eigh(h.matrix());
    let decomp = SpectralDecomposition { eigenvalues, vectors, time };
    let tol = DEGENERACY_RTOL * decomp.spectral_range();
    let gap = decomp.min_gap();
    if gap <= tol {
        return Err(Error::DegenerateSpectrum { gap, tol });
    }
    Ok(decomp)
}

/// Match `cur` to `prev` along a continuous path: reorder by maximal
/// overlap and re-phase so that every `⟨ε_n(prev)|ε_n(cur)⟩` is real and
/// positive.
pub fn gauge_align(prev: &SpectralDecomposition, cur: &SpectralDecomposition) -> Result<SpectralDecomposition> {
    let n = prev.dim();
    if cur.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: cur.dim() });
    }
    let ov = prev.overlaps(cur);
    let mut taken = vec![false; n];
    let mut eigenvalues = Vec::with_capacity(n);
    let mut vectors = CMatrix::zeros(n, n);
    for level in 0..n {
        let (best, overlap) = (0..n)
            .map(|k| (k, ov[(level, k)].norm()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if overlap <= 0.5 || taken[best] {
            return Err(Error::PathDiscontinuity { level, overlap });
        }
        taken[best] = true;
        let ph = ov[(level, best)].conj() / overlap;
        eigenvalues.push(cur.eigenvalues[best]);
        vectors.set_column(level, &(cur.vectors.column(best) * ph));
    }
    Ok(SpectralDecomposition { eigenvalues, vectors, time: cur.time })
}

/// Matrix of `⟨ε_m|∂_t ε_n⟩` in the parallel-transport gauge.
#[derive(Debug, Clone)]
pub struct EigenDerivativeTable {
    pub entries: CMatrix,
    /// Size of the anti-Hermitian/zero-diagonal violation removed from a
    /// finite-difference estimate (zero for the analytic route).
    pub projection_residual: f64,
}

impl EigenDerivativeTable {
    /// `⟨ε_m|∂_t ε_n⟩ = ⟨ε_m|∂_t H|ε_n⟩ / (ε_n − ε_m)` for `m ≠ n`, zero on the
    /// diagonal.
    pub fn from_hamiltonian_rate(basis: &SpectralDecomposition, h_rate: &CMatrix) -> Self {
        let n = basis.dim();
        let hd = basis.to_eigenbasis(h_rate);
        let entries = CMatrix::from_fn(n, n, |m, k| {
            if m == k {
                C64::new(0.0, 0.0)
            } else {
                hd[(m, k)] / (basis.eigenvalues[k] - basis.eigenvalues[m])
            }
        });
        Self { entries, projection_residual: 0.0 }
    }

    pub fn zeros(n: usize) -> Self {
        Self { entries: CMatrix::zeros(n, n), projection_residual: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Largest entry of `T + T†`.
    pub fn anti_hermiticity_error(&self) -> f64 {
        max_abs(&(&self.entries + self.entries.adjoint()))
    }

    pub fn max_diagonal(&self) -> f64 {
        self.entries.diagonal().iter().fold(0.0, |a, z| a.max(z.norm()))
    }
}

/// Central finite difference of gauge-aligned eigenvectors of
/// `protocol.hamiltonian` at `t`.
///
/// The raw estimate is projected onto anti-Hermitian, zero-diagonal
/// matrices; the size of the removed part is kept in
/// `projection_residual` and shrinks as `fd_step²`.
pub fn eigenstate_derivative(protocol: &dyn Protocol, t: f64, fd_step: f64) -> Result<EigenDerivativeTable> {
    if !(fd_step > 0.0) {
        return Err(Error::Config(format!("fd_step must be positive, got {fd_step}")));
    }
    let at = |s: f64| -> Result<SpectralDecomposition> {
        eigendecompose_at(&HermitianOperator::new(protocol.hamiltonian(s))?, s)
    };
    let mid = at(t)?;
    let plus = gauge_align(&mid, &at(t + fd_step)?)?;
    let minus = gauge_align(&mid, &at(t - fd_step)?)?;
    let dv = (&plus.vectors - &minus.vectors).unscale(2.0 * fd_step);
    let raw = mid.vectors.adjoint() * dv;

    let mut proj = (&raw - raw.adjoint()).scale(0.5);
    for k in 0..proj.nrows() {
        proj[(k, k)] = C64::new(0.0, 0.0);
    }
    let projection_residual = max_abs_diff(&raw, &proj);
    Ok(EigenDerivativeTable { entries: proj, projection_residual })
}

/// A density operator: Hermitian, unit trace, positive semidefinite
/// (to the tolerances 1e-10, 1e-9, -1e-9).
#[derive(Debug, Clone)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-9;
    pub const POSITIVITY_TOL: f64 = 1e-9;

    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let dev = hermiticity_deviation(&m);
        if dev > Self::HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (deviation {dev:.3e})")));
        }
        let tr = trace(&m);
        if (tr - C64::new(1.0, 0.0)).norm() > Self::TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} differs from 1")));
        }
        let sym = (&m + m.adjoint()).scale(0.5);
        let min = eigenvalues_hermitian(&sym)[0];
        if min < -Self::POSITIVITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self(sym))
    }

    pub fn from_populations(p: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::from_real_diagonal(p).into_matrix())
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(CMatrix::identity(n, n).unscale(n as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigenvalues_hermitian(&self.0)[0]
    }
}

/// `(1/2) Tr|a − b|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(trace_norm_half(&(a.matrix() - b.matrix())))
}

/// `(1/2) Σ|μ_i|` over the eigenvalues of a Hermitian matrix.
pub(crate) fn trace_norm_half(diff: &CMatrix) -> f64 {
    let sym = (diff + diff.adjoint()).scale(0.5);
    0.5 * eigenvalues_hermitian(&sym).iter().map(|m| m.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{BlochPath, MatrixPath};
    use crate::twolevel::bloch_hamiltonian;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn sigma_z_spectrum() {
        let h = HermitianOperator::from_real_diagonal(&[0.5, -0.5]);
        let d = eigendecompose(&h).unwrap();
        assert!((d.eigenvalues[0] + 0.5).abs() < 1e-15);
        assert!((d.eigenvalues[1] - 0.5).abs() < 1e-15);
        // ground state of +σz/2 is |1⟩
        assert!((d.vectors[(1, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((d.vectors[(0, 1)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn shifted_diagonal() {
        let d = eigendecompose(&HermitianOperator::from_real_diagonal(&[2.0, 0.0])).unwrap();
        assert_eq!(d.eigenvalues, vec![0.0, 2.0]);
    }

    #[test]
    fn bloch_eigenvalues_any_direction() {
        for &(theta, phi) in &[(0.3, 1.1), (PI / 2.0, 0.0), (2.5, -2.0), (PI / 4.0, 0.7)] {
            let h = bloch_hamiltonian(1.0, theta, phi).unwrap();
            let d = eigendecompose(&h).unwrap();
            assert!((d.eigenvalues[0] + 0.5).abs() < 1e-14);
            assert!((d.eigenvalues[1] - 0.5).abs() < 1e-14);
            assert!(d.orthonormality_error() < 1e-14);
            assert!(max_abs_diff(&d.reconstruct(), h.matrix()) < 1e-14);
        }
    }

    #[test]
    fn degenerate_spectrum_rejected() {
        let err = eigendecompose(&HermitianOperator::identity(3)).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum { .. }));
        let err = eigendecompose(&HermitianOperator::from_real_diagonal(&[1.0, 2.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum { .. }));
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn gauge_align_identity_and_phase() {
        let d = eigendecompose(&bloch_hamiltonian(1.0, 0.4, 0.9).unwrap()).unwrap();
        let same = gauge_align(&d, &d).unwrap();
        assert!(max_abs_diff(&same.vectors, &d.vectors) < 1e-15);

        let mut rot = d.clone();
        let ph = C64::from_polar(1.0, PI / 3.0);
        for r in 0..2 {
            rot.vectors[(r, 1)] *= ph;
        }
        let back = gauge_align(&d, &rot).unwrap();
        let ov = d.overlaps(&back);
        assert!((ov[(1, 1)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(max_abs_diff(&back.vectors, &d.vectors) < 1e-14);
    }

    #[test]
    fn gauge_align_reorders_by_overlap() {
        let d = eigendecompose(&HermitianOperator::from_real_diagonal(&[0.0, 1.0, 3.0])).unwrap();
        let mut swapped = d.clone();
        swapped.eigenvalues.swap(0, 2);
        let c0 = swapped.vectors.column(0).into_owned();
        let c2 = swapped.vectors.column(2).into_owned();
        swapped.vectors.set_column(0, &c2);
        swapped.vectors.set_column(2, &c0);
        let aligned = gauge_align(&d, &swapped).unwrap();
        assert_eq!(aligned.eigenvalues, d.eigenvalues);
    }

    #[test]
    fn gauge_align_detects_jumps() {
        let a = eigendecompose(&bloch_hamiltonian(1.0, 0.0, 0.0).unwrap()).unwrap();
        let b = eigendecompose(&bloch_hamiltonian(1.0, PI / 3.0, 0.0).unwrap()).unwrap();
        let c2 = eigendecompose(&bloch_hamiltonian(1.0, PI, 0.0).unwrap()).unwrap();
        // a 60° turn keeps overlaps at cos(π/6); a flip swaps the levels
        assert!(gauge_align(&a, &b).is_ok());
        let flipped = gauge_align(&a, &c2).unwrap();
        assert!((flipped.eigenvalues[0] - 0.5).abs() < 1e-14);
        // a 4-level basis rotated into its discrete Fourier basis has all overlaps 1/2
        let d4 = eigendecompose(&HermitianOperator::from_real_diagonal(&[0.0, 1.0, 2.0, 3.0])).unwrap();
        let f = CMatrix::from_fn(4, 4, |j, k| C64::from_polar(0.5, 2.0 * PI * (j * k) as f64 / 4.0));
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(4, |k, _| c(k as f64, 0.0)));
        let rotated = HermitianOperator::new(&f * diag * f.adjoint()).unwrap();
        let far = eigendecompose(&rotated).unwrap();
        assert!(matches!(gauge_align(&d4, &far), Err(Error::PathDiscontinuity { .. })));
    }

    #[test]
    fn gauge_align_is_idempotent() {
        let a = eigendecompose(&bloch_hamiltonian(1.0, 0.4, 0.1).unwrap()).unwrap();
        let b = eigendecompose(&bloch_hamiltonian(1.0, 0.5, 0.3).unwrap()).unwrap();
        let once = gauge_align(&a, &b).unwrap();
        let twice = gauge_align(&a, &once).unwrap();
        assert!(max_abs_diff(&once.vectors, &twice.vectors) < 1e-15);
    }

    #[test]
    fn derivative_of_static_path_vanishes() {
        let p = MatrixPath::static_hamiltonian(bloch_hamiltonian(1.0, 0.3, 0.2).unwrap().into_matrix(), 0.1);
        let t = eigenstate_derivative(&p, 1.0, 1e-3).unwrap();
        assert!(max_abs(&t.entries) < 1e-12);
    }

    #[test]
    fn rotating_bloch_path_connection() {
        // |⟨ε_2|∂_t ε_1⟩| = (ω/2) sin θ for θ = π/4, φ = ωt
        let omega = 0.2;
        let p = BlochPath::p1(1.0, omega);
        let analytic = omega * (PI / 4.0).sin() / 2.0;
        let fd = eigenstate_derivative(&p, 0.7, 1e-3 / omega).unwrap();
        assert!(fd.projection_residual < 1e-6);
        assert!((fd.entries[(1, 0)].norm() - analytic).abs() < 1e-7);

        let step = 1e-4 * p.period();
        let err = |s: f64| {
            let t = eigenstate_derivative(&p, 0.7, s).unwrap();
            (t.entries[(1, 0)].norm() - analytic).abs()
        };
        let ratio = err(20.0 * step) / err(10.0 * step);
        assert!((ratio - 4.0).abs() < 0.2, "convergence ratio {ratio}");
    }

    #[test]
    fn analytic_and_fd_tables_agree() {
        let p = BlochPath::p2(1.0, 0.1);
        let t = 3.3;
        let h = HermitianOperator::new(p.hamiltonian(t)).unwrap();
        let d = eigendecompose_at(&h, t).unwrap();
        let analytic = EigenDerivativeTable::from_hamiltonian_rate(&d, &p.hamiltonian_rate(t));
        let fd = eigenstate_derivative(&p, t, 1e-4 * p.period()).unwrap();
        assert!(max_abs_diff(&analytic.entries, &fd.entries) < 1e-8);
        assert!(analytic.anti_hermiticity_error() < 1e-14);
    }

    #[test]
    fn trace_distance_examples() {
        let a = DensityMatrix::from_populations(&[1.0, 0.0]).unwrap();
        let b = DensityMatrix::from_populations(&[0.0, 1.0]).unwrap();
        assert!(trace_distance(&a, &a).unwrap().abs() < 1e-15);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);

        let pg = 1.0 / (1.0 + (-1.0f64).exp());
        let g = DensityMatrix::from_populations(&[pg, 1.0 - pg]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        let expected = 0.5 * (0.5f64).tanh();
        assert!((trace_distance(&g, &mixed).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.2311).abs() < 1e-4);

        let three = DensityMatrix::maximally_mixed(3);
        assert!(matches!(trace_distance(&a, &three), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::from_populations(&[0.6, 0.6]).is_err());
        assert!(DensityMatrix::from_populations(&[1.2, -0.2]).is_err());
        let m = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.1), c(0.1, 0.1), c(0.5, 0.0)]);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn jacobi_matches_nalgebra_on_complex_hermitian() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[c(1.0, 0.0), c(0.2, 0.3), c(-0.5, 0.1), c(0.2, -0.3), c(-0.4, 0.0), c(0.0, 0.7), c(-0.5, -0.1), c(0.0, -0.7), c(2.0, 0.0)],
        );
        let (vals, vecs) = jacobi_eigh(&m);
        let mut reference: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().cloned().collect();
        reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in vals.iter().zip(reference.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
        let d = SpectralDecomposition { eigenvalues: vals, vectors: vecs, time: 0.0 };
        assert!(max_abs_diff(&d.reconstruct(), &m) < 1e-13);
    }
}
