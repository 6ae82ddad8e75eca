//! Energy-conserving quantum jumps and the single-spin thermal fit.
//!
//! A jump replaces the running state by a product state drawn uniformly from
//! the degeneracy class of the initial basis state, so every jump target has
//! the same diagonal energy. Two routes to the jump-averaged `<I_z^i>` are
//! provided:
//!
//! - [`class_ensemble_average`]: the equal-weight mean of plain time averages
//!   started from each class member, the limit of rare jumps.
//! - [`stochastic_ensemble`]: RK4 trajectories interrupted at exponentially
//!   distributed waiting times.
//!
//! The resulting equal per-spin averages are matched to
//! `ρ_i = A exp(-β ω I_z^i)`, for which `<I_z^i> = -tanh(βω/2) / 2`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::dynamics::{evolve_with, integrate, IntegratorConfig, StateVector, StepHook};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianMatrix, SpinSystem};
use crate::observables::{time_average, AverageReport};
use crate::surfaces::{class_of, default_class_tolerance, degeneracy_classes, DegeneracyClass};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpConfig {
    /// Jump rate per unit time.
    pub rate: f64,
    pub seed: u64,
    pub n_trajectories: usize,
    /// Absolute diagonal-energy tolerance for jump targets; `None` uses
    /// `1e-9 · ‖H‖`.
    pub class_tolerance: Option<f64>,
}

impl Default for JumpConfig {
    fn default() -> Self {
        JumpConfig {
            rate: 0.01,
            seed: 0,
            n_trajectories: 64,
            class_tolerance: None,
        }
    }
}

impl JumpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "jump rate {} must be >= 0",
                self.rate
            )));
        }
        if self.n_trajectories == 0 {
            return Err(Error::InvalidParameter(
                "n_trajectories must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEvent {
    pub t: f64,
    /// 1-based basis index of the new state.
    pub target: usize,
}

/// One stochastic trajectory, reduced to its averages.
#[derive(Clone, Debug)]
pub struct JumpTrajectory {
    pub averages: AverageReport,
    pub jumps: Vec<JumpEvent>,
    pub max_norm_drift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EnsembleMethod {
    /// Equal-weight mean over deterministic runs from each class member.
    ClassAverage {
        members: Vec<usize>,
    },
    Stochastic {
        initial: usize,
        config: JumpConfig,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemberRecord {
    /// Starting basis index for class averages, member number for
    /// stochastic ensembles.
    pub label: usize,
    pub per_spin_avg: Vec<f64>,
    pub n_jumps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpEnsemble {
    pub per_spin_avg: Vec<f64>,
    /// Standard error over ensemble members; zero for the deterministic
    /// class average.
    pub per_spin_stderr: Vec<f64>,
    pub records: Vec<MemberRecord>,
    pub method: EnsembleMethod,
}

impl JumpEnsemble {
    pub fn mean_over_spins(&self) -> f64 {
        self.per_spin_avg.iter().sum::<f64>() / self.per_spin_avg.len() as f64
    }
}

fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    (0..rows[0].len())
        .map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / n)
        .collect()
}

fn column_stderr(rows: &[Vec<f64>], means: &[f64]) -> Vec<f64> {
    let n = rows.len();
    if n < 2 {
        return vec![0.0; means.len()];
    }
    means
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let var = rows.iter().map(|r| (r[i] - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        })
        .collect()
}

/// Mean of the time averages started from each member of `class`.
pub fn class_ensemble_average(
    sys: &SpinSystem,
    class: &DegeneracyClass,
    cfg: &IntegratorConfig,
) -> Result<JumpEnsemble> {
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    let h = HamiltonianMatrix::build(sys);
    let records: Vec<MemberRecord> = class
        .members
        .par_iter()
        .map(|&k| {
            let v0 = StateVector::basis(k, sys.n_spins())?;
            let traj = evolve_with(sys, &h, &v0, cfg)?;
            Ok(MemberRecord {
                label: k,
                per_spin_avg: time_average(&traj, 0.0)?.per_spin_avg,
                n_jumps: 0,
            })
        })
        .collect::<Result<_>>()?;

    let rows: Vec<Vec<f64>> = records.iter().map(|r| r.per_spin_avg.clone()).collect();
    Ok(JumpEnsemble {
        per_spin_avg: column_means(&rows),
        per_spin_stderr: vec![0.0; sys.n_spins()],
        records,
        method: EnsembleMethod::ClassAverage {
            members: class.members.clone(),
        },
    })
}

/// The class of `Φ_initial` under `jcfg`'s tolerance.
pub fn jump_class(
    h: &HamiltonianMatrix,
    initial: usize,
    jcfg: &JumpConfig,
) -> Result<DegeneracyClass> {
    let tol = jcfg
        .class_tolerance
        .unwrap_or_else(|| default_class_tolerance(h));
    if !(1..=h.dim()).contains(&initial) {
        return Err(Error::Range {
            what: "basis index",
            value: initial as i64,
            min: 1,
            max: h.dim() as i64,
        });
    }
    let classes = degeneracy_classes(h, tol);
    let (_, class) = class_of(&classes, initial).ok_or(Error::EmptyClass)?;
    Ok(class.clone())
}

struct JumpHook<'a> {
    rng: ChaCha8Rng,
    waiting: Option<Exp<f64>>,
    next_jump: f64,
    targets: &'a [usize],
    diagonal: Vec<f64>,
    energy: f64,
    tolerance: f64,
    events: Vec<JumpEvent>,
}

impl JumpHook<'_> {
    fn draw_wait(&mut self) -> f64 {
        match &self.waiting {
            Some(exp) => exp.sample(&mut self.rng),
            None => f64::INFINITY,
        }
    }
}

impl StepHook for JumpHook<'_> {
    fn after_step(&mut self, t: f64, state: &mut [Complex64]) -> Result<()> {
        if t < self.next_jump {
            return Ok(());
        }
        let mut target = 0;
        while t >= self.next_jump {
            target = self.targets[self.rng.random_range(0..self.targets.len())];
            let shift = (self.diagonal[target - 1] - self.energy).abs();
            if shift > self.tolerance {
                return Err(Error::InvalidParameter(format!(
                    "jump to Φ{target} changes diagonal energy by {shift:e}"
                )));
            }
            self.events.push(JumpEvent { t, target });
            self.next_jump += self.draw_wait();
        }
        state.fill(Complex64::new(0.0, 0.0));
        state[target - 1] = Complex64::new(1.0, 0.0);
        Ok(())
    }
}

/// RNG for ensemble member `member`: one ChaCha stream per member under a
/// shared seed.
pub fn member_rng(seed: u64, member: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member);
    rng
}

/// Unitary evolution from `Φ_initial` interrupted by jumps at rate
/// `jcfg.rate`, reduced to time-averaged `<I_z^i>` over the whole run.
///
/// With `rate = 0` no random numbers are drawn and the result is bitwise
/// identical to `time_average(evolve(..), 0)`.
pub fn stochastic_jump_trajectory(
    sys: &SpinSystem,
    initial: usize,
    jcfg: &JumpConfig,
    cfg: &IntegratorConfig,
    member: u64,
) -> Result<JumpTrajectory> {
    let h = HamiltonianMatrix::build(sys);
    stochastic_with(sys, &h, initial, jcfg, cfg, member)
}

fn stochastic_with(
    sys: &SpinSystem,
    h: &HamiltonianMatrix,
    initial: usize,
    jcfg: &JumpConfig,
    cfg: &IntegratorConfig,
    member: u64,
) -> Result<JumpTrajectory> {
    jcfg.validate()?;
    let class = jump_class(h, initial, jcfg)?;
    let diagonal = h.diagonal();
    let mut hook = JumpHook {
        rng: member_rng(jcfg.seed, member),
        waiting: (jcfg.rate > 0.0).then(|| Exp::new(jcfg.rate).expect("positive finite rate")),
        next_jump: 0.0,
        targets: &class.members,
        energy: diagonal[initial - 1],
        diagonal,
        tolerance: jcfg
            .class_tolerance
            .unwrap_or_else(|| default_class_tolerance(h)),
        events: Vec::new(),
    };
    hook.next_jump = hook.draw_wait();

    let v0 = StateVector::basis(initial, sys.n_spins())?;
    let traj = integrate(sys, h, &v0, cfg, &mut hook)?;
    Ok(JumpTrajectory {
        averages: time_average(&traj, 0.0)?,
        jumps: hook.events,
        max_norm_drift: traj.max_norm_drift(),
    })
}

/// `n_trajectories` independent jump trajectories from `Φ_initial`, run in
/// parallel and reduced in member order.
pub fn stochastic_ensemble(
    sys: &SpinSystem,
    initial: usize,
    jcfg: &JumpConfig,
    cfg: &IntegratorConfig,
) -> Result<JumpEnsemble> {
    jcfg.validate()?;
    let h = HamiltonianMatrix::build(sys);
    let records: Vec<MemberRecord> = (0..jcfg.n_trajectories)
        .into_par_iter()
        .map(|m| {
            let run = stochastic_with(sys, &h, initial, jcfg, cfg, m as u64)?;
            Ok(MemberRecord {
                label: m,
                per_spin_avg: run.averages.per_spin_avg,
                n_jumps: run.jumps.len(),
            })
        })
        .collect::<Result<_>>()?;

    let rows: Vec<Vec<f64>> = records.iter().map(|r| r.per_spin_avg.clone()).collect();
    let means = column_means(&rows);
    Ok(JumpEnsemble {
        per_spin_stderr: column_stderr(&rows, &means),
        per_spin_avg: means,
        records,
        method: EnsembleMethod::Stochastic {
            initial,
            config: *jcfg,
        },
    })
}

/// Single-spin thermal state `ρ = A exp(-β ω I_z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalPrediction {
    pub beta: f64,
    pub omega: f64,
    /// `A = 1 / (2 cosh(βω/2))`.
    pub normalization: f64,
    /// `-tanh(βω/2) / 2`.
    pub predicted_avg: f64,
}

impl ThermalPrediction {
    pub fn from_beta(beta: f64, omega: f64) -> Self {
        let x = beta * omega / 2.0;
        ThermalPrediction {
            beta,
            omega,
            normalization: 1.0 / (2.0 * x.cosh()),
            predicted_avg: -0.5 * x.tanh(),
        }
    }

    /// Negative for population inversion.
    pub fn spin_temperature(&self) -> f64 {
        1.0 / self.beta
    }
}

/// Inverts `<I_z> = -tanh(βω/2) / 2` for `β`.
pub fn fit_beta(avg: f64, omega: f64) -> Result<ThermalPrediction> {
    if avg.is_nan() || avg.abs() >= 0.5 {
        return Err(Error::InfiniteBeta(avg));
    }
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::ZeroFrequency);
    }
    let beta = -(2.0 / omega) * (2.0 * avg).atanh();
    Ok(ThermalPrediction::from_beta(beta, omega))
}

/// `ρ = exp(-βω I_z) / Tr exp(-βω I_z)` in the `(+1/2, -1/2)` basis.
pub fn single_spin_density(beta: f64, omega: f64) -> Matrix2<f64> {
    let iz = Matrix2::new(0.5, 0.0, 0.0, -0.5);
    let unnormalized = (iz * (-beta * omega)).exp();
    unnormalized / unnormalized.trace()
}

/// `Tr(ρ I_z)` evaluated from the matrix exponential.
pub fn thermal_trace_iz(beta: f64, omega: f64) -> f64 {
    let iz = Matrix2::new(0.5, 0.0, 0.0, -0.5);
    (single_spin_density(beta, omega) * iz).trace()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThermalComparison {
    pub prediction: ThermalPrediction,
    pub per_spin_avg: Vec<f64>,
    pub per_spin_stderr: Vec<f64>,
    /// `|avg_i - predicted|`.
    pub residuals: Vec<f64>,
    /// `Tr(ρ I_z)` from the matrix exponential at the fitted `β`.
    pub direct_trace: f64,
    /// `A` read off the normalized matrix exponential.
    pub direct_normalization: f64,
}

impl ThermalComparison {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Fits `β` to the spin-averaged ensemble value and reports per-spin
/// residuals against the thermal prediction.
pub fn thermal_compare(ens: &JumpEnsemble, omega: f64) -> Result<ThermalComparison> {
    let prediction = fit_beta(ens.mean_over_spins(), omega)?;
    let rho = single_spin_density(prediction.beta, omega);
    let x = prediction.beta * omega / 2.0;
    Ok(ThermalComparison {
        residuals: ens
            .per_spin_avg
            .iter()
            .map(|a| (a - prediction.predicted_avg).abs())
            .collect(),
        per_spin_avg: ens.per_spin_avg.clone(),
        per_spin_stderr: ens.per_spin_stderr.clone(),
        direct_trace: thermal_trace_iz(prediction.beta, omega),
        direct_normalization: rho[(0, 0)] / (-x).exp(),
        prediction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve;

    fn reference() -> SpinSystem {
        SpinSystem::uniform(3, 10.0, 1.0, true).unwrap()
    }

    #[test]
    fn fit_beta_reference_value() {
        let p = fit_beta(0.16, 10.0).unwrap();
        // tanh(βω/2) = -0.32, so β = -atanh(0.32) / 5
        let want = -(0.32f64).atanh() / 5.0;
        assert!((p.beta - want).abs() < 1e-15);
        assert!((p.beta - -0.06633).abs() < 1e-5);
        assert!(((p.beta * 10.0 / 2.0).tanh() + 0.32).abs() < 1e-15);
        assert!(p.spin_temperature() < 0.0);
    }

    #[test]
    fn fit_beta_infinite_temperature() {
        let p = fit_beta(0.0, 3.0).unwrap();
        assert_eq!(p.beta, 0.0);
        assert_eq!(p.normalization, 0.5);
    }

    #[test]
    fn fit_beta_errors() {
        assert_eq!(fit_beta(0.5, 10.0), Err(Error::InfiniteBeta(0.5)));
        assert!(fit_beta(-0.7, 10.0).is_err());
        assert_eq!(fit_beta(0.1, 0.0), Err(Error::ZeroFrequency));
    }

    #[test]
    fn density_matrix_normalization() {
        for beta in [-0.3, -0.0663, 0.0, 0.2] {
            let p = ThermalPrediction::from_beta(beta, 10.0);
            let rho = single_spin_density(beta, 10.0);
            assert!((rho.trace() - 1.0).abs() < 1e-15);
            assert!((rho[(0, 0)] - p.normalization * (-beta * 5.0).exp()).abs() < 1e-14);
            assert!((thermal_trace_iz(beta, 10.0) - p.predicted_avg).abs() < 1e-14);
        }
    }

    #[test]
    fn equal_averages_have_zero_residual() {
        let ens = JumpEnsemble {
            per_spin_avg: vec![0.12; 4],
            per_spin_stderr: vec![0.0; 4],
            records: vec![],
            method: EnsembleMethod::ClassAverage { members: vec![] },
        };
        let cmp = thermal_compare(&ens, 10.0).unwrap();
        assert!(cmp.residuals.iter().all(|r| *r < 1e-15));
    }

    #[test]
    fn frozen_singleton_class() {
        let sys = SpinSystem::uniform(3, 10.0, 0.0, true).unwrap();
        let class = DegeneracyClass {
            diagonal_energy: 15.0,
            members: vec![1],
        };
        let ens =
            class_ensemble_average(&sys, &class, &IntegratorConfig::new(1e-3, 2.0, 10)).unwrap();
        assert_eq!(ens.per_spin_avg, vec![0.5, 0.5, 0.5]);
    }

    #[test]
    fn empty_class_rejected() {
        let class = DegeneracyClass {
            diagonal_energy: 0.0,
            members: vec![],
        };
        assert_eq!(
            class_ensemble_average(&reference(), &class, &IntegratorConfig::default()),
            Err(Error::EmptyClass)
        );
    }

    #[test]
    fn zero_rate_matches_plain_evolution_bitwise() {
        let cfg = IntegratorConfig::new(1e-3, 20.0, 10);
        let jcfg = JumpConfig {
            rate: 0.0,
            ..Default::default()
        };
        let run = stochastic_jump_trajectory(&reference(), 2, &jcfg, &cfg, 3).unwrap();
        let plain = evolve(&reference(), &StateVector::basis(2, 3).unwrap(), &cfg).unwrap();
        let plain = time_average(&plain, 0.0).unwrap();
        assert!(run.jumps.is_empty());
        for (a, b) in run.averages.per_spin_avg.iter().zip(&plain.per_spin_avg) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn jumps_stay_in_class_and_are_reproducible() {
        let cfg = IntegratorConfig::new(1e-3, 50.0, 10);
        let jcfg = JumpConfig {
            rate: 0.5,
            seed: 11,
            ..Default::default()
        };
        let a = stochastic_jump_trajectory(&reference(), 2, &jcfg, &cfg, 0).unwrap();
        let b = stochastic_jump_trajectory(&reference(), 2, &jcfg, &cfg, 0).unwrap();
        let c = stochastic_jump_trajectory(&reference(), 2, &jcfg, &cfg, 1).unwrap();
        assert!(!a.jumps.is_empty());
        assert!(a.jumps.iter().all(|j| [2, 3, 5].contains(&j.target)));
        assert_eq!(a.jumps, b.jumps);
        assert_eq!(a.averages, b.averages);
        assert_ne!(a.jumps, c.jumps);
    }

    #[test]
    fn fast_jumps_approach_uniform_class_mean() {
        let cfg = IntegratorConfig::new(1e-3, 50.0, 1);
        let jcfg = JumpConfig {
            rate: 2000.0,
            seed: 5,
            n_trajectories: 4,
            class_tolerance: None,
        };
        let ens = stochastic_ensemble(&reference(), 2, &jcfg, &cfg).unwrap();
        for a in &ens.per_spin_avg {
            assert!((a - 1.0 / 6.0).abs() < 0.01, "{a}");
        }
    }

    #[test]
    fn invalid_jump_configs() {
        let cfg = IntegratorConfig::new(1e-3, 1.0, 10);
        for jcfg in [
            JumpConfig {
                rate: -1.0,
                ..Default::default()
            },
            JumpConfig {
                n_trajectories: 0,
                ..Default::default()
            },
        ] {
            assert!(stochastic_ensemble(&reference(), 2, &jcfg, &cfg).is_err());
        }
        assert!(
            stochastic_jump_trajectory(&reference(), 9, &JumpConfig::default(), &cfg, 0).is_err()
        );
    }
}
