//! Periodic parameter paths `λ(t)` and the Hamiltonians they generate.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::cd::{generic_counterdiabatic, CdTerm};
use crate::error::{Error, Result};
use crate::specmat::{CMatrix, I};

/// A periodically driven Hamiltonian with analytic time derivative.
pub trait Protocol: Send + Sync {
    fn dim(&self) -> usize;

    /// Angular drive frequency ω; the period is 2π/ω.
    fn omega(&self) -> f64;

    fn period(&self) -> f64 {
        2.0 * PI / self.omega()
    }

    fn hamiltonian(&self, t: f64) -> CMatrix;

    /// `∂_t H(t)`.
    fn hamiltonian_rate(&self, t: f64) -> CMatrix;

    /// Counterdiabatic term `λ̇·Â` and its time derivative.
    fn counterdiabatic(&self, t: f64) -> Result<CdTerm> {
        generic_counterdiabatic(self, t)
    }
}

/// `mean + winding·ωt + Σ_k (cos_k cos(kωt) + sin_k sin(kωt))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicFn {
    #[serde(default)]
    pub mean: f64,
    /// Linear winding per period (used for azimuthal angles).
    #[serde(default)]
    pub winding: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl PeriodicFn {
    pub fn constant(v: f64) -> Self {
        Self { mean: v, winding: 0.0, cos: vec![], sin: vec![] }
    }

    pub fn winding(mean: f64, winding: f64) -> Self {
        Self { mean, winding, cos: vec![], sin: vec![] }
    }

    /// Value and first two time derivatives at `t`.
    pub fn eval(&self, omega: f64, t: f64) -> [f64; 3] {
        let x = omega * t;
        let mut v = [self.mean + self.winding * x, self.winding * omega, 0.0];
        let terms = self.cos.iter().map(|&a| (a, true)).enumerate().chain(self.sin.iter().map(|&b| (b, false)).enumerate());
        for (k, (amp, is_cos)) in terms {
            let kw = (k + 1) as f64 * omega;
            let (s, c) = (kw * t).sin_cos();
            if is_cos {
                v[0] += amp * c;
                v[1] -= amp * kw * s;
                v[2] -= amp * kw * kw * c;
            } else {
                v[0] += amp * s;
                v[1] += amp * kw * c;
                v[2] -= amp * kw * kw * s;
            }
        }
        v
    }
}

pub fn pauli() -> [CMatrix; 3] {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    [
        CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        CMatrix::from_row_slice(2, 2, &[o, -I, I, o]),
        CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    ]
}

/// `v·σ`.
pub fn bloch_operator(v: [f64; 3]) -> CMatrix {
    let o = C64::new(0.0, 0.0);
    CMatrix::from_row_slice(2, 2, &[C64::new(v[2], 0.0), C64::new(v[0], -v[1]), C64::new(v[0], v[1]), o - v[2]])
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Two-level path `H = (h/2) n·σ` with `n = (sinθ cosφ, sinθ sinφ, cosθ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochPath {
    pub h: PeriodicFn,
    pub theta: PeriodicFn,
    pub phi: PeriodicFn,
    pub omega: f64,
}

/// Instantaneous Bloch parameters with first and second derivatives.
#[derive(Debug, Clone, Copy)]
pub struct BlochState {
    pub h: [f64; 3],
    pub theta: [f64; 3],
    pub phi: [f64; 3],
}

impl BlochPath {
    pub fn new(h: PeriodicFn, theta: PeriodicFn, phi: PeriodicFn, omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::Config(format!("omega must be positive, got {omega}")));
        }
        let path = Self { h, theta, phi, omega };
        // h(t) > 0 across one period
        let t0 = path.period();
        if (0..256).any(|k| path.h.eval(omega, t0 * k as f64 / 256.0)[0] <= 0.0) {
            return Err(Error::Config("h(t) must stay positive".into()));
        }
        Ok(path)
    }

    /// `h` constant, `θ = π/4`, `φ = ωt`.
    pub fn p1(h0: f64, omega: f64) -> Self {
        Self { h: PeriodicFn::constant(h0), theta: PeriodicFn::constant(PI / 4.0), phi: PeriodicFn::winding(0.0, 1.0), omega }
    }

    /// `h` constant, `θ = (π/2)(1 − cos(ωt)/5)`, `φ = ωt`.
    pub fn p2(h0: f64, omega: f64) -> Self {
        Self {
            h: PeriodicFn::constant(h0),
            theta: PeriodicFn { mean: PI / 2.0, winding: 0.0, cos: vec![-PI / 10.0], sin: vec![] },
            phi: PeriodicFn::winding(0.0, 1.0),
            omega,
        }
    }

    pub fn state(&self, t: f64) -> BlochState {
        BlochState { h: self.h.eval(self.omega, t), theta: self.theta.eval(self.omega, t), phi: self.phi.eval(self.omega, t) }
    }

    /// Unit vector `n` and its first two time derivatives.
    pub fn direction(&self, t: f64) -> [[f64; 3]; 3] {
        let s = self.state(t);
        let [th, thd, thdd] = s.theta;
        let [ph, phd, phdd] = s.phi;
        let (st, ct) = th.sin_cos();
        let (sp, cp) = ph.sin_cos();
        let n = [st * cp, st * sp, ct];
        // ∂n/∂θ and ∂n/∂φ
        let e_th = [ct * cp, ct * sp, -st];
        let e_ph = [-st * sp, st * cp, 0.0];
        let nd = [0, 1, 2].map(|i| thd * e_th[i] + phd * e_ph[i]);
        // second derivatives of n with respect to (θ, φ)
        let n_thth = [-st * cp, -st * sp, -ct];
        let n_thph = [-ct * sp, ct * cp, 0.0];
        let n_phph = [-st * cp, -st * sp, 0.0];
        let ndd = [0, 1, 2].map(|i| {
            thdd * e_th[i] + phdd * e_ph[i] + thd * thd * n_thth[i] + 2.0 * thd * phd * n_thph[i] + phd * phd * n_phph[i]
        });
        [n, nd, ndd]
    }
}

impl Protocol for BlochPath {
    fn dim(&self) -> usize {
        2
    }

    fn omega(&self) -> f64 {
        self.omega
    }

    fn hamiltonian(&self, t: f64) -> CMatrix {
        let h = self.h.eval(self.omega, t)[0];
        let [n, _, _] = self.direction(t);
        bloch_operator(n.map(|x| 0.5 * h * x))
    }

    fn hamiltonian_rate(&self, t: f64) -> CMatrix {
        let [h, hd, _] = self.h.eval(self.omega, t);
        let [n, nd, _] = self.direction(t);
        bloch_operator([0, 1, 2].map(|i| 0.5 * (hd * n[i] + h * nd[i])))
    }

    fn counterdiabatic(&self, t: f64) -> Result<CdTerm> {
        let [n, nd, ndd] = self.direction(t);
        Ok(CdTerm { operator: bloch_operator(cross(n, nd).map(|x| 0.5 * x)), rate: bloch_operator(cross(n, ndd).map(|x| 0.5 * x)) })
    }
}

/// Generic N-level path `H(t) = H_0 + Σ_k (A_k cos(kωt) + B_k sin(kωt))`
/// with Hermitian coefficient matrices.
#[derive(Debug, Clone)]
pub struct MatrixPath {
    pub base: CMatrix,
    pub harmonics: Vec<(CMatrix, CMatrix)>,
    pub omega: f64,
}

impl MatrixPath {
    pub fn new(base: CMatrix, harmonics: Vec<(CMatrix, CMatrix)>, omega: f64) -> Result<Self> {
        let n = base.nrows();
        for m in std::iter::once(&base).chain(harmonics.iter().flat_map(|(a, b)| [a, b])) {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: m.nrows() });
            }
            crate::specmat::HermitianOperator::new(m.clone())?;
        }
        if !(omega > 0.0) {
            return Err(Error::Config(format!("omega must be positive, got {omega}")));
        }
        Ok(Self { base, harmonics, omega })
    }

    /// A time-independent Hamiltonian; `omega` only sets the nominal period.
    pub fn static_hamiltonian(base: CMatrix, omega: f64) -> Self {
        Self { base, harmonics: vec![], omega }
    }

    fn series(&self, t: f64, order: usize) -> CMatrix {
        let mut out = if order == 0 { self.base.clone() } else { CMatrix::zeros(self.base.nrows(), self.base.ncols()) };
        for (k, (a, b)) in self.harmonics.iter().enumerate() {
            let kw = (k + 1) as f64 * self.omega;
            let (s, c) = (kw * t).sin_cos();
            let (ca, cb) = match order {
                0 => (c, s),
                1 => (-kw * s, kw * c),
                _ => (-kw * kw * c, -kw * kw * s),
            };
            out += a.scale(ca) + b.scale(cb);
        }
        out
    }

    /// `∂_t² H(t)`.
    pub fn hamiltonian_accel(&self, t: f64) -> CMatrix {
        self.series(t, 2)
    }
}

impl Protocol for MatrixPath {
    fn dim(&self) -> usize {
        self.base.nrows()
    }

    fn omega(&self) -> f64 {
        self.omega
    }

    fn hamiltonian(&self, t: f64) -> CMatrix {
        self.series(t, 0)
    }

    fn hamiltonian_rate(&self, t: f64) -> CMatrix {
        self.series(t, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specmat::max_abs_diff;

    fn fd<F: Fn(f64) -> CMatrix>(f: F, t: f64, h: f64) -> CMatrix {
        (f(t + h) - f(t - h)).unscale(2.0 * h)
    }

    #[test]
    fn periodic_fn_derivatives() {
        let f = PeriodicFn { mean: 0.3, winding: 1.0, cos: vec![0.2, -0.1], sin: vec![0.05] };
        let w = 0.7;
        let t = 1.3;
        let h = 1e-5;
        let [_, d1, d2] = f.eval(w, t);
        let num1 = (f.eval(w, t + h)[0] - f.eval(w, t - h)[0]) / (2.0 * h);
        let num2 = (f.eval(w, t + h)[1] - f.eval(w, t - h)[1]) / (2.0 * h);
        assert!((d1 - num1).abs() < 1e-9);
        assert!((d2 - num2).abs() < 1e-9);
    }

    #[test]
    fn bloch_rates_match_finite_differences() {
        let path = BlochPath::new(
            PeriodicFn { mean: 1.0, winding: 0.0, cos: vec![0.2], sin: vec![] },
            PeriodicFn { mean: 1.0, winding: 0.0, cos: vec![0.3], sin: vec![0.1] },
            PeriodicFn { mean: 0.2, winding: 1.0, cos: vec![], sin: vec![0.4] },
            0.3,
        )
        .unwrap();
        let t = 2.1;
        let num = fd(|s| path.hamiltonian(s), t, 1e-5);
        assert!(max_abs_diff(&num, &path.hamiltonian_rate(t)) < 1e-9);
        let cd = path.counterdiabatic(t).unwrap();
        let num_cd = fd(|s| path.counterdiabatic(s).unwrap().operator, t, 1e-5);
        assert!(max_abs_diff(&num_cd, &cd.rate) < 1e-9);
    }

    #[test]
    fn p2_theta_shape() {
        let p = BlochPath::p2(1.0, 0.5);
        let th0 = p.state(0.0).theta[0];
        assert!((th0 - (PI / 2.0) * (1.0 - 0.2)).abs() < 1e-15);
        let half = p.state(p.period() / 2.0).theta[0];
        assert!((half - (PI / 2.0) * 1.2).abs() < 1e-12);
    }

    #[test]
    fn paths_are_periodic() {
        let p = BlochPath::p2(1.0, 0.37);
        assert!(max_abs_diff(&p.hamiltonian(0.4), &p.hamiltonian(0.4 + p.period())) < 1e-12);
    }

    #[test]
    fn nonpositive_gap_rejected() {
        let r = BlochPath::new(PeriodicFn { mean: 0.1, winding: 0.0, cos: vec![0.5], sin: vec![] }, PeriodicFn::constant(0.3), PeriodicFn::winding(0.0, 1.0), 1.0);
        assert!(r.is_err());
    }
}
