//! Perturbative states next to the integrated limit cycle.

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use super::config::SimConfig;
use super::integrate::{integrate, Trajectory};
use crate::cd::basis_transform;
use crate::error::{Error, Result};
use crate::expansion::{effective_population_generator, first_order, first_order_from_blocks};
use crate::liouville::{assemble_generator, StateVec};
use crate::protocol::Protocol;
use crate::specmat::{eigendecompose_at, HermitianOperator};
use crate::thermo::{gibbs_populations, Bath};

#[derive(Debug, Clone)]
pub struct ExpandRow {
    pub t: f64,
    pub perturbative: StateVec,
    pub integrated: StateVec,
    /// Euclidean norm of the difference of the `(pop, coh)` vectors.
    pub difference: f64,
}

#[derive(Debug, Clone)]
pub struct ExpandTable {
    pub order: usize,
    pub rows: Vec<ExpandRow>,
}

impl ExpandTable {
    pub fn max_difference(&self) -> f64 {
        self.rows.iter().map(|r| r.difference).fold(0.0, f64::max)
    }
}

/// Order-2 populations: `dp/dt = K_eff(t) p` from the Gibbs vector at
/// `t = 0`, in the eigenbasis of the generating Hamiltonian, with RK4 on the
/// sample grid refined by `substeps`.
fn effective_populations(
    path: &dyn Protocol,
    bath: &Bath,
    with_cd: bool,
    times: &[f64],
    substeps: usize,
) -> Result<Vec<Vec<f64>>> {
    let keff = |t: f64| -> Result<nalgebra::DMatrix<f64>> {
        let b = assemble_generator(path, t, bath, with_cd)?;
        Ok(effective_population_generator(&b)?.map(|z| z.re))
    };
    let b0 = assemble_generator(path, 0.0, bath, with_cd)?;
    let mut p = DVector::from_vec(gibbs_populations(&b0.basis.eigenvalues, bath.beta()));
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    for &target in times {
        let steps = (((target - t) / path.period()) * substeps as f64).round().max(0.0) as usize;
        if steps > 0 {
            let h = (target - t) / steps as f64;
            for _ in 0..steps {
                let k1 = keff(t)? * &p;
                let km = keff(t + 0.5 * h)?;
                let k2 = &km * (&p + &k1 * (0.5 * h));
                let k3 = &km * (&p + &k2 * (0.5 * h));
                let k4 = keff(t + h)? * (&p + &k3 * h);
                p += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
                t += h;
            }
        }
        t = target;
        out.push(p.iter().cloned().collect());
    }
    Ok(out)
}

/// Perturbative state at `t` in the eigenbasis of `H(t)`.
///
/// Orders 0 and 1 use the closed expansion (with the CD-modified coherence
/// when `with_cd`). Order 2 pairs populations propagated under the
/// effective generator with first-order coherences; with CD both are
/// computed in the eigenframe of `H + H_cd` and transformed back.
pub fn perturbative_state(path: &dyn Protocol, bath: &Bath, t: f64, order: usize, with_cd: bool, pop2: Option<&[f64]>) -> Result<StateVec> {
    match order {
        0 | 1 => Ok(first_order(path, t, bath, with_cd)?.state(order)),
        2 => {
            let pop = pop2.ok_or_else(|| Error::Config("order 2 needs propagated populations".into()))?;
            let h_basis = eigendecompose_at(&HermitianOperator::new(path.hamiltonian(t))?, t)?;
            let blocks = assemble_generator(path, t, bath, with_cd)?;
            let (_, hd) = crate::cd::generating_hamiltonian(path, t, with_cd)?;
            let first = first_order_from_blocks(&blocks, &hd, bath.beta(), false)?;
            let s = StateVec { pop: pop.iter().map(|&x| C64::new(x, 0.0)).collect(), coh: first.state(1).coh };
            basis_transform(&s, &blocks.basis, &h_basis)
        }
        other => Err(Error::Config(format!("expansion order must be 0, 1 or 2, got {other}"))),
    }
}

/// Compare the expansion with an integrated trajectory over its final period.
pub fn compare(path: &dyn Protocol, bath: &Bath, with_cd: bool, traj: &Trajectory, order: usize, substeps: usize) -> Result<ExpandTable> {
    let t_end = *traj.times.last().unwrap();
    let start = traj.sample_at(t_end - traj.period).unwrap_or(0);
    let idx: Vec<usize> = (start..traj.times.len()).collect();
    let times: Vec<f64> = idx.iter().map(|&i| traj.times[i]).collect();
    let pops = if order == 2 { Some(effective_populations(path, bath, with_cd, &times, substeps)?) } else { None };
    let rows = idx
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let t = traj.times[i];
            let p = perturbative_state(path, bath, t, order, with_cd, pops.as_ref().map(|v| v[k].as_slice()))?;
            let integrated = traj.states[i].clone();
            Ok(ExpandRow { t, difference: p.distance(&integrated), perturbative: p, integrated })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExpandTable { order, rows })
}

/// Integrate `config` and tabulate the order-`order` expansion against it
/// over the final period.
pub fn expand(config: &SimConfig, order: usize) -> Result<ExpandTable> {
    if order > 2 {
        return Err(Error::Config(format!("expansion order must be 0, 1 or 2, got {order}")));
    }
    let traj = integrate(config)?;
    let path = config.path()?;
    let bath = config.bath()?;
    compare(&path, &bath, config.with_cd, &traj, order, config.integrator.steps_per_period)
}
