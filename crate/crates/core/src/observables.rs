//! Spin projections, time averages and the infinite-time oracle.
//!
//! Expectation values are taken in the normalized state `Ψ / ‖Ψ‖`. For the
//! integrator's output this differs from the raw sum by the recorded norm
//! drift only, and keeps frozen or sector-conserving dynamics exact.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::basis::Basis;
use crate::dynamics::{check_initial, StateVector, Trajectory};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianMatrix, SpinSystem};

/// Eigenvalues closer than this multiple of `‖H‖` share one projector.
pub const DEGENERACY_REL_TOL: f64 = 1e-9;

/// Largest spin count accepted by [`diagonal_ensemble_average`].
pub const MAX_ORACLE_SPINS: usize = 10;

/// `<I_z^i>(t)` for every spin.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinExpectationSeries {
    pub times: Vec<f64>,
    /// `values[i - 1][sample]`.
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AveragingMethod {
    RunningRk4,
    DiagonalEnsemble,
}

impl AveragingMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            AveragingMethod::RunningRk4 => "running-rk4",
            AveragingMethod::DiagonalEnsemble => "diagonal-ensemble",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AverageReport {
    pub per_spin_avg: Vec<f64>,
    /// Averaging window; the oracle reports `[0, inf)`.
    pub window: (f64, f64),
    pub method: AveragingMethod,
    /// Samples that entered the mean (0 for the oracle).
    pub samples: usize,
}

impl AverageReport {
    pub fn mean_over_spins(&self) -> f64 {
        self.per_spin_avg.iter().sum::<f64>() / self.per_spin_avg.len() as f64
    }
}

fn weighted_projection(probs: impl Iterator<Item = f64>, table: &[f64]) -> f64 {
    probs.zip(table).map(|(p, m)| p * m).sum()
}

/// `Σ_n |C_n|^2 m_i(n) / Σ_n |C_n|^2` for 1-based spin `i`.
pub fn iz_expectation(v: &StateVector, i: usize) -> Result<f64> {
    let n = v.n_spins();
    if !(1..=n).contains(&i) {
        return Err(Error::Range {
            what: "spin index",
            value: i as i64,
            min: 1,
            max: n as i64,
        });
    }
    let bit = i - 1;
    let raw: f64 = Basis::new(n)?
        .iter()
        .zip(v.amplitudes())
        .map(|(s, c)| {
            let m = if s.up_bits() >> bit & 1 == 1 {
                0.5
            } else {
                -0.5
            };
            m * c.norm_sqr()
        })
        .sum();
    Ok(raw / v.norm_sqr())
}

/// `<I_z> = Σ_i <I_z^i>`.
pub fn total_iz(v: &StateVector) -> f64 {
    let basis = Basis::new(v.n_spins()).expect("state length validated");
    let raw: f64 = basis
        .iter()
        .zip(v.amplitudes())
        .map(|(s, c)| s.m_total().as_f64() * c.norm_sqr())
        .sum();
    raw / v.norm_sqr()
}

fn per_spin(table: &[Vec<f64>], v: &StateVector) -> Vec<f64> {
    let norm = v.norm_sqr();
    table
        .iter()
        .map(|col| weighted_projection(v.amplitudes().iter().map(|c| c.norm_sqr()), col) / norm)
        .collect()
}

pub fn spin_series(traj: &Trajectory) -> SpinExpectationSeries {
    let table = traj.provenance.system.basis().projection_table();
    let mut values = vec![Vec::with_capacity(traj.len()); table.len()];
    for s in &traj.states {
        for (col, x) in values.iter_mut().zip(per_spin(&table, s)) {
            col.push(x);
        }
    }
    SpinExpectationSeries {
        times: traj.times.clone(),
        values,
    }
}

/// Arithmetic mean of `<I_z^i>` over the recorded samples with `t >= t_start`.
pub fn time_average(traj: &Trajectory, t_start: f64) -> Result<AverageReport> {
    let table = traj.provenance.system.basis().projection_table();
    let mut sums = vec![0.0; table.len()];
    let mut count = 0usize;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        if *t < t_start {
            continue;
        }
        for (acc, x) in sums.iter_mut().zip(per_spin(&table, s)) {
            *acc += x;
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyWindow { t_start });
    }
    let t_last = *traj.times.last().expect("trajectory holds t = 0");
    Ok(AverageReport {
        per_spin_avg: sums.into_iter().map(|s| s / count as f64).collect(),
        window: (t_start, t_last),
        method: AveragingMethod::RunningRk4,
        samples: count,
    })
}

/// Eigenpairs of `H` sorted by eigenvalue; eigenvectors are the columns.
pub(crate) fn eigen_sorted(h: &HamiltonianMatrix) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let d = h.dim();
    let m = DMatrix::from_row_slice(d, d, h.entries());
    let eig = SymmetricEigen::try_new(m, 1e-15, 0)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Groups consecutive sorted eigenvalues closer than `tol`.
pub(crate) fn group_levels(values: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] > tol {
            groups.push(start..k);
            start = k;
        }
    }
    groups
}

/// Exact infinite-time average of `<I_z^i>` from the spectral decomposition.
///
/// Each distinct energy level `E` contributes `<P_E v0| I_z^i |P_E v0>`, so
/// degenerate levels are handled without relying on a particular eigenbasis
/// inside them.
pub fn diagonal_ensemble_average(sys: &SpinSystem, v0: &StateVector) -> Result<AverageReport> {
    if sys.n_spins() > MAX_ORACLE_SPINS {
        return Err(Error::TooLarge(sys.n_spins(), MAX_ORACLE_SPINS));
    }
    let h = HamiltonianMatrix::build(sys);
    check_initial(&h, v0)?;
    let (values, vectors) = eigen_sorted(&h)?;
    let tol = DEGENERACY_REL_TOL * h.norm_bound();
    let table = sys.basis().projection_table();
    let d = h.dim();

    let overlaps: Vec<Complex64> = (0..d)
        .map(|k| {
            vectors
                .column(k)
                .iter()
                .zip(v0.amplitudes())
                .map(|(u, c)| u.conj() * c)
                .sum()
        })
        .collect();

    let mut avg = vec![0.0; table.len()];
    let mut projected = vec![Complex64::new(0.0, 0.0); d];
    for level in group_levels(&values, tol) {
        projected.fill(Complex64::new(0.0, 0.0));
        for k in level {
            for (p, u) in projected.iter_mut().zip(vectors.column(k).iter()) {
                *p += u * overlaps[k];
            }
        }
        for (acc, col) in avg.iter_mut().zip(&table) {
            *acc += weighted_projection(projected.iter().map(|z| z.norm_sqr()), col);
        }
    }

    Ok(AverageReport {
        per_spin_avg: avg,
        window: (0.0, f64::INFINITY),
        method: AveragingMethod::DiagonalEnsemble,
        samples: 0,
    })
}

/// `(Σ|C_n|^2, <Ψ|H|Ψ>)` per recorded sample.
pub fn energy_and_norm(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.norms
        .iter()
        .copied()
        .zip(traj.energies.iter().copied())
        .collect()
}

/// Eigenvector of `H` for the `k`-th lowest eigenvalue (0-based), as a state.
pub fn eigenstate(h: &HamiltonianMatrix, k: usize) -> Result<StateVector> {
    let (_, vectors) = eigen_sorted(h)?;
    if k >= h.dim() {
        return Err(Error::Range {
            what: "eigenstate index",
            value: k as i64,
            min: 0,
            max: h.dim() as i64 - 1,
        });
    }
    StateVector::from_amplitudes(vectors.column(k).iter().copied().collect())
}
