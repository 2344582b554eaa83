//! Fixed-step RK4 propagation in the moving eigenframe.
//!
//! The state is carried as eigenbasis components of the generating
//! Hamiltonian (`H`, or `H + H_cd`). The eigenvector phases follow a
//! reference-component gauge: within a step, component `j_n` of vector `n`
//! is kept real and positive, and the connection diagonal is chosen to
//! match, so that the frame is smooth and RK4 keeps its order. The
//! reference set is renewed when a reference component gets small, and the
//! state is re-phased exactly at that step boundary.

use num_complex::Complex64 as C64;
use nalgebra::DVector;

use super::config::{IntegratorConfig, SimConfig};
use crate::cd::generating_hamiltonian;
use crate::error::{Error, Result};
use crate::liouville::{assemble_in_basis, block_index, StateVec};
use crate::protocol::Protocol;
use crate::specmat::{
    eigendecompose_at, eigenvalues_hermitian, hermiticity_deviation, trace, trace_norm_half, CMatrix, EigenDerivativeTable,
    HermitianOperator, SpectralDecomposition,
};
use crate::thermo::{gibbs_state, Bath};

/// Minimum eigenvalue below which a run is rejected.
pub const POSITIVITY_FAILURE: f64 = -1e-6;

/// Per-run conservation record over every accepted step.
#[derive(Debug, Clone, Copy)]
pub struct Diagnostics {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub steps_per_period: usize,
    pub total_steps: usize,
    /// Lab-frame difference between one period at the accepted step count
    /// and at twice that.
    pub refinement_difference: f64,
}

/// Sampled trajectory, reported in the eigenbasis of `H(t)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub period: f64,
    pub times: Vec<f64>,
    pub states: Vec<StateVec>,
    /// Trace distance to the Gibbs state of `H(t)`.
    pub distance: Vec<f64>,
    pub trace_error: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    /// Trapezoidal time average and maximum of `d` on `[t0, t1]`.
    pub fn window_stats(&self, t0: f64, t1: f64) -> (f64, f64) {
        let eps = 1e-9 * self.period;
        let idx: Vec<usize> = (0..self.times.len()).filter(|&i| self.times[i] >= t0 - eps && self.times[i] <= t1 + eps).collect();
        if idx.len() < 2 {
            let d = idx.first().map(|&i| self.distance[i]).unwrap_or(f64::NAN);
            return (d, d);
        }
        let mut area = 0.0;
        for w in idx.windows(2) {
            area += 0.5 * (self.distance[w[0]] + self.distance[w[1]]) * (self.times[w[1]] - self.times[w[0]]);
        }
        let span = self.times[*idx.last().unwrap()] - self.times[idx[0]];
        let max = idx.iter().map(|&i| self.distance[i]).fold(f64::NEG_INFINITY, f64::max);
        (area / span, max)
    }

    /// Statistics over periods `first..=last` (one-based, inclusive).
    pub fn period_stats(&self, first: usize, last: usize) -> (f64, f64) {
        self.window_stats((first - 1) as f64 * self.period, last as f64 * self.period)
    }

    /// Statistics over the final full period.
    pub fn last_period_stats(&self) -> (f64, f64) {
        let t_end = *self.times.last().unwrap();
        self.window_stats(t_end - self.period, t_end)
    }

    /// Index of the first sample at or after `t`.
    pub fn sample_at(&self, t: f64) -> Option<usize> {
        let eps = 1e-9 * self.period;
        self.times.iter().position(|&s| s >= t - eps)
    }
}

/// What to integrate: a path, a bath, and whether the CD term is added.
pub struct Dynamics<'a> {
    pub path: &'a dyn Protocol,
    pub bath: &'a Bath,
    pub with_cd: bool,
}

struct Frame {
    basis: SpectralDecomposition,
    generator: CMatrix,
}

impl<'a> Dynamics<'a> {
    fn basis_at(&self, t: f64, refs: Option<&[usize]>) -> Result<(SpectralDecomposition, CMatrix)> {
        let (h, hd) = generating_hamiltonian(self.path, t, self.with_cd)?;
        let b = eigendecompose_at(&h, t)?;
        let b = match refs {
            Some(r) => b.with_reference_phases(r),
            None => b,
        };
        Ok((b, hd))
    }

    /// Generator in the reference-component gauge `refs`.
    fn frame(&self, t: f64, refs: &[usize]) -> Result<Frame> {
        let (basis, hd) = self.basis_at(t, Some(refs))?;
        let mut conn = EigenDerivativeTable::from_hamiltonian_rate(&basis, &hd).entries;
        let n = basis.dim();
        for k in 0..n {
            // keep component refs[k] of ∂_t|ε_k⟩ real
            let j = refs[k];
            let mut s = C64::new(0.0, 0.0);
            for m in 0..n {
                if m != k {
                    s += basis.vectors[(j, m)] * conn[(m, k)];
                }
            }
            conn[(k, k)] = C64::new(0.0, -s.im / basis.vectors[(j, k)].re);
        }
        let blocks = assemble_in_basis(&basis, &conn, self.bath)?;
        Ok(Frame { basis, generator: blocks.dense() })
    }

    fn lab(&self, frame: &Frame, y: &DVector<C64>) -> CMatrix {
        frame.basis.from_eigenbasis(&to_matrix(y, frame.basis.dim()))
    }

    fn report(&self, t: f64, lab: &CMatrix) -> Result<(StateVec, f64)> {
        let h = eigendecompose_at(&HermitianOperator::new(self.path.hamiltonian(t))?, t)?;
        let state = StateVec::from_matrix(&h.to_eigenbasis(lab));
        let d = trace_norm_half(&(lab - gibbs_state(&h, self.bath.beta()).matrix()));
        Ok((state, d))
    }

    /// Integrate `steps_per_period · periods` RK4 steps from the state
    /// `initial` (eigenbasis of `H(0)`), sampling every `stride` steps.
    fn run(
        &self,
        initial: &StateVec,
        steps_per_period: usize,
        periods: usize,
        stride: Option<usize>,
    ) -> Result<(CMatrix, Option<Samples>, Diagnostics)> {
        let n = self.path.dim();
        if initial.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: initial.dim() });
        }
        let period = self.path.period();
        let dt = period / steps_per_period as f64;
        let total = steps_per_period * periods;

        let h0 = eigendecompose_at(&HermitianOperator::new(self.path.hamiltonian(0.0))?, 0.0)?;
        let lab0 = h0.from_eigenbasis(&initial.to_matrix());
        let (b0, _) = self.basis_at(0.0, None)?;
        let mut refs = b0.reference_components();
        let mut start = self.frame(0.0, &refs)?;
        let mut y = from_matrix(&start.basis.to_eigenbasis(&lab0));

        let mut diag = Diagnostics {
            max_trace_error: 0.0,
            max_hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
            steps_per_period,
            total_steps: total,
            refinement_difference: f64::NAN,
        };
        let mut samples = stride.map(|_| Samples::default());
        let record = |samples: &mut Option<Samples>, t: f64, lab: &CMatrix, y: &DVector<C64>| -> Result<()> {
            if let Some(s) = samples.as_mut() {
                let (state, d) = self.report(t, lab)?;
                s.times.push(t);
                s.states.push(state);
                s.distance.push(d);
                s.trace_error.push((trace_of(y, n) - 1.0).norm());
            }
            Ok(())
        };
        record(&mut samples, 0.0, &lab0, &y)?;

        for step in 0..total {
            let t0 = step as f64 * dt;
            let t1 = (step + 1) as f64 * dt;
            let mid = self.frame(0.5 * (t0 + t1), &refs)?;
            let mut end = self.frame(t1, &refs)?;
            let h = t1 - t0;
            let k1 = &start.generator * &y;
            let k2 = &mid.generator * (&y + &k1 * C64::new(0.5 * h, 0.0));
            let k3 = &mid.generator * (&y + &k2 * C64::new(0.5 * h, 0.0));
            let k4 = &end.generator * (&y + &k3 * C64::new(h, 0.0));
            y += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);

            // continuity of the level ordering
            for k in 0..n {
                let ov = start.basis.vectors.column(k).dotc(&end.basis.vectors.column(k)).norm();
                if ov <= 0.5 {
                    return Err(Error::PathDiscontinuity { level: k, overlap: ov });
                }
            }

            let rho = to_matrix(&y, n);
            let herm = hermiticity_deviation(&rho);
            let min_eig = eigenvalues_hermitian(&((&rho + rho.adjoint()) * C64::new(0.5, 0.0)))[0];
            diag.max_trace_error = diag.max_trace_error.max((trace(&rho) - 1.0).norm());
            diag.max_hermiticity_error = diag.max_hermiticity_error.max(herm);
            diag.min_eigenvalue = diag.min_eigenvalue.min(min_eig);
            if min_eig < POSITIVITY_FAILURE {
                return Err(Error::PositivityViolation { t: t1, min_eig });
            }

            let threshold = 0.5 / (n as f64).sqrt();
            if (0..n).any(|k| end.basis.vectors[(refs[k], k)].norm() < threshold) {
                let fresh = end.basis.reference_components();
                let next = self.frame(t1, &fresh)?;
                // |new_k⟩ = c_k |old_k⟩, ρ_kl → c̄_k ρ_kl c_l
                let c: Vec<C64> = (0..n).map(|k| end.basis.vectors.column(k).dotc(&next.basis.vectors.column(k))).collect();
                for a in 0..n {
                    for b in 0..n {
                        y[block_index(n, a, b)] *= c[a].conj() * c[b];
                    }
                }
                refs = fresh;
                end = next;
            }

            if let Some(s) = stride {
                if (step + 1) % s == 0 {
                    let lab = self.lab(&end, &y);
                    record(&mut samples, t1, &lab, &y)?;
                }
            }
            start = end;
        }
        let lab = self.lab(&start, &y);
        Ok((lab, samples, diag))
    }

    /// Smallest `n = steps·2^k` for which one period at `n` and `2n` steps
    /// agree to `tolerance` in the lab frame. A trial that loses positivity
    /// or the eigenbasis track counts as unconverged.
    pub fn accepted_steps(&self, initial: &StateVec, cfg: &IntegratorConfig) -> Result<(usize, f64)> {
        let trial = |n: usize| match self.run(initial, n, 1, None) {
            Ok((lab, _, _)) => Ok(Some(lab)),
            Err(Error::PositivityViolation { .. } | Error::PathDiscontinuity { .. }) => Ok(None),
            Err(e) => Err(e),
        };
        let mut n = cfg.steps_per_period;
        let mut coarse = trial(n)?;
        loop {
            if 2 * n > cfg.max_steps_per_period {
                return Err(Error::StepsizeUnderflow { max_steps: cfg.max_steps_per_period });
            }
            let fine = trial(2 * n)?;
            if let (Some(c), Some(f)) = (&coarse, &fine) {
                let diff = crate::specmat::max_abs_diff(c, f);
                if diff <= cfg.tolerance {
                    return Ok((n, diff));
                }
            }
            n *= 2;
            coarse = fine;
        }
    }

    /// Integrate `periods` drive periods with automatic step refinement.
    pub fn integrate(&self, initial: &StateVec, periods: usize, samples_per_period: usize, cfg: &IntegratorConfig) -> Result<Trajectory> {
        if samples_per_period == 0 || cfg.steps_per_period % samples_per_period != 0 {
            return Err(Error::Config("samples_per_period must divide steps_per_period".into()));
        }
        let (n, diff) = self.accepted_steps(initial, cfg)?;
        self.integrate_fixed(initial, periods, samples_per_period, n, diff)
    }

    /// Integrate with exactly `steps_per_period` steps (no refinement).
    pub fn integrate_fixed(
        &self,
        initial: &StateVec,
        periods: usize,
        samples_per_period: usize,
        steps_per_period: usize,
        refinement_difference: f64,
    ) -> Result<Trajectory> {
        if samples_per_period == 0 || steps_per_period % samples_per_period != 0 {
            return Err(Error::Config("samples_per_period must divide steps_per_period".into()));
        }
        let stride = steps_per_period / samples_per_period;
        let (_, samples, mut diagnostics) = self.run(initial, steps_per_period, periods, Some(stride))?;
        diagnostics.refinement_difference = refinement_difference;
        let s = samples.expect("sampling requested");
        Ok(Trajectory {
            period: self.path.period(),
            times: s.times,
            states: s.states,
            distance: s.distance,
            trace_error: s.trace_error,
            diagnostics,
        })
    }
}

#[derive(Default)]
struct Samples {
    times: Vec<f64>,
    states: Vec<StateVec>,
    distance: Vec<f64>,
    trace_error: Vec<f64>,
}

fn to_matrix(y: &DVector<C64>, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |a, b| y[block_index(n, a, b)])
}

fn from_matrix(m: &CMatrix) -> DVector<C64> {
    StateVec::from_matrix(m).to_vector()
}

fn trace_of(y: &DVector<C64>, n: usize) -> C64 {
    (0..n).map(|k| y[k]).sum()
}

/// Run a configuration to completion.
pub fn integrate(config: &SimConfig) -> Result<Trajectory> {
    config.check()?;
    let path = config.path()?;
    let bath = config.bath()?;
    let dynamics = Dynamics { path: &path, bath: &bath, with_cd: config.with_cd };
    dynamics.integrate(&config.initial.state()?, config.periods, config.samples_per_period, &config.integrator)
}
