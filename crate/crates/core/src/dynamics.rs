//! Fixed-step RK4 integration of `i dC/dt = H C`.
//!
//! The amplitude equation is often written with the row-vector form
//! `i dC_m/dt = Σ_n C_n H_nm`; for the real symmetric matrices built here that
//! is the same as the column form used below. The integrator never
//! renormalizes: norm and energy drift are recorded so they can be checked.

use num_complex::Complex64;

use crate::basis::{BasisState, MAX_SPINS};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianMatrix, SpinSystem};

/// Recommended upper bound for `dt · ‖H‖`.
pub const RECOMMENDED_STEP_RATIO: f64 = 0.05;

/// Required normalization of initial states.
pub const INITIAL_NORM_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// Amplitudes `C_n` over the product basis, indexed by 0-based offset.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(Vec<Complex64>);

impl StateVector {
    /// Accepts any power-of-two length up to `2^14`. Normalization is not
    /// checked here.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || !(2..=1 << MAX_SPINS).contains(&len) {
            return Err(Error::InvalidParameter(format!(
                "state length {len} is not 2^N for 1 <= N <= {MAX_SPINS}"
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite { t: 0.0 });
        }
        Ok(StateVector(amplitudes))
    }

    /// The product state `Φ_k` (1-based).
    pub fn basis(k: usize, n: usize) -> Result<Self> {
        Ok(Self::from_basis_state(BasisState::from_index(k, n)?))
    }

    pub fn from_basis_state(s: BasisState) -> Self {
        let mut amps = vec![ZERO; 1 << s.n_spins()];
        amps[s.offset()] = ONE;
        StateVector(amps)
    }

    pub fn zeros(dim: usize) -> Self {
        StateVector(vec![ZERO; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn n_spins(&self) -> usize {
        self.0.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.0
    }

    /// `C_k` for 1-based `k`.
    pub fn amplitude(&self, k: usize) -> Complex64 {
        self.0[k - 1]
    }

    /// `|C_k|^2` for 1-based `k`.
    pub fn probability(&self, k: usize) -> f64 {
        self.0[k - 1].norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn conj(&self) -> Self {
        StateVector(self.0.iter().map(|z| z.conj()).collect())
    }

    /// If this is exactly a product state, its 1-based index.
    pub fn as_basis_index(&self) -> Option<usize> {
        let mut nonzero = self.0.iter().enumerate().filter(|(_, z)| **z != ZERO);
        match (nonzero.next(), nonzero.next()) {
            (Some((k, z)), None) if z.norm_sqr() == 1.0 => Some(k + 1),
            _ => None,
        }
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
    /// Largest tolerated `|Σ|C_n|^2 - 1|` before the run is aborted.
    pub abort_threshold: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 1e-3,
            t_end: 1000.0,
            record_stride: 10,
            abort_threshold: 1e-6,
        }
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64, record_stride: usize) -> Self {
        IntegratorConfig {
            dt,
            t_end,
            record_stride,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt = {} must be > 0",
                self.dt
            )));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} must be >= 0",
                self.t_end
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record_stride must be >= 1".into()));
        }
        if self.abort_threshold.is_nan() || self.abort_threshold <= 0.0 {
            return Err(Error::InvalidParameter(
                "abort_threshold must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Number of RK4 steps, `t_end / dt` rounded to the nearest integer.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// `dt · ‖H‖` with the row-sum bound; compare against
    /// [`RECOMMENDED_STEP_RATIO`].
    pub fn step_ratio(&self, h: &HamiltonianMatrix) -> f64 {
        self.dt * h.norm_bound()
    }

    /// Same run with the step halved and the stride doubled, so recorded
    /// times coincide.
    pub fn halved(&self) -> Self {
        IntegratorConfig {
            dt: self.dt / 2.0,
            record_stride: self.record_stride * 2,
            ..*self
        }
    }
}

/// Scratch buffers for one RK4 step.
pub(crate) struct Rk4 {
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

impl Rk4 {
    pub(crate) fn new(dim: usize) -> Self {
        Rk4 {
            k: std::array::from_fn(|_| vec![ZERO; dim]),
            tmp: vec![ZERO; dim],
        }
    }

    fn deriv(h: &HamiltonianMatrix, v: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        h.apply_into(v, out)?;
        for z in out.iter_mut() {
            *z *= MINUS_I;
        }
        Ok(())
    }

    /// Advances `v` in place by one step.
    pub(crate) fn step(
        &mut self,
        h: &HamiltonianMatrix,
        v: &mut [Complex64],
        dt: f64,
    ) -> Result<()> {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        let half = dt / 2.0;

        Self::deriv(h, v, k1)?;
        for ((t, x), d) in tmp.iter_mut().zip(v.iter()).zip(k1.iter()) {
            *t = x + d * half;
        }
        Self::deriv(h, tmp, k2)?;
        for ((t, x), d) in tmp.iter_mut().zip(v.iter()).zip(k2.iter()) {
            *t = x + d * half;
        }
        Self::deriv(h, tmp, k3)?;
        for ((t, x), d) in tmp.iter_mut().zip(v.iter()).zip(k3.iter()) {
            *t = x + d * dt;
        }
        Self::deriv(h, tmp, k4)?;

        let w = dt / 6.0;
        for (i, x) in v.iter_mut().enumerate() {
            *x += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
        }
        Ok(())
    }
}

fn all_finite(v: &[Complex64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// One classical RK4 step of `dC/dt = -i H C`.
pub fn rk4_step(h: &HamiltonianMatrix, v: &StateVector, dt: f64) -> Result<StateVector> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be > 0")));
    }
    if v.dim() != h.dim() {
        return Err(Error::Shape {
            expected: h.dim(),
            got: v.dim(),
        });
    }
    let mut out = v.clone();
    Rk4::new(h.dim()).step(h, &mut out.0, dt)?;
    if !all_finite(&out.0) {
        return Err(Error::NonFinite { t: dt });
    }
    Ok(out)
}

/// Everything needed to regenerate a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub system: SpinSystem,
    pub config: IntegratorConfig,
    pub initial: StateVector,
    /// 1-based basis index when the initial state is a product state.
    pub initial_index: Option<usize>,
}

/// Recorded samples of one integration run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub norms: Vec<f64>,
    pub energies: Vec<f64>,
    pub provenance: Provenance,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_spins(&self) -> usize {
        self.provenance.system.n_spins()
    }

    /// Last *recorded* state; equals the state at `t_end` only when the step
    /// count is a multiple of `record_stride`.
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory always holds t = 0")
    }

    /// Largest `|norm - 1|` over recorded samples.
    pub fn max_norm_drift(&self) -> f64 {
        self.norms
            .iter()
            .map(|n| (n - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|E(t) - E(0)|` over recorded samples.
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies
            .iter()
            .map(|e| (e - e0).abs())
            .fold(0.0, f64::max)
    }
}

/// Hook run after every step; it may overwrite the state (quantum jumps).
pub(crate) trait StepHook {
    fn after_step(&mut self, t: f64, state: &mut [Complex64]) -> Result<()>;
}

pub(crate) struct NoHook;

impl StepHook for NoHook {
    fn after_step(&mut self, _: f64, _: &mut [Complex64]) -> Result<()> {
        Ok(())
    }
}

pub(crate) fn check_initial(h: &HamiltonianMatrix, v0: &StateVector) -> Result<()> {
    if v0.dim() != h.dim() {
        return Err(Error::Shape {
            expected: h.dim(),
            got: v0.dim(),
        });
    }
    let drift = (v0.norm_sqr() - 1.0).abs();
    if drift > INITIAL_NORM_TOLERANCE {
        return Err(Error::NotNormalized { drift });
    }
    Ok(())
}

pub(crate) fn integrate(
    sys: &SpinSystem,
    h: &HamiltonianMatrix,
    v0: &StateVector,
    cfg: &IntegratorConfig,
    hook: &mut impl StepHook,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_initial(h, v0)?;

    let n_steps = cfg.n_steps();
    let n_records = n_steps / cfg.record_stride + 1;
    let mut traj = Trajectory {
        times: Vec::with_capacity(n_records),
        states: Vec::with_capacity(n_records),
        norms: Vec::with_capacity(n_records),
        energies: Vec::with_capacity(n_records),
        provenance: Provenance {
            system: sys.clone(),
            config: *cfg,
            initial: v0.clone(),
            initial_index: v0.as_basis_index(),
        },
    };

    let record = |traj: &mut Trajectory, t: f64, v: &[Complex64], norm: f64| -> Result<()> {
        traj.times.push(t);
        traj.norms.push(norm);
        traj.energies.push(h.expectation(v)?);
        traj.states.push(StateVector(v.to_vec()));
        Ok(())
    };

    let mut v = v0.0.clone();
    record(&mut traj, 0.0, &v, v0.norm_sqr())?;

    let mut rk = Rk4::new(h.dim());
    for step in 1..=n_steps {
        let t = step as f64 * cfg.dt;
        rk.step(h, &mut v, cfg.dt)?;
        if !all_finite(&v) {
            return Err(Error::NonFinite { t });
        }
        hook.after_step(t, &mut v)?;

        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let drift = (norm - 1.0).abs();
        if drift > cfg.abort_threshold {
            return Err(Error::Diverged {
                t,
                drift,
                threshold: cfg.abort_threshold,
            });
        }
        if step % cfg.record_stride == 0 {
            record(&mut traj, t, &v, norm)?;
        }
    }
    Ok(traj)
}

/// Integrates from `v0` over `[0, t_end]`, recording every
/// `record_stride`-th step together with the norm and `<H>`.
pub fn evolve(sys: &SpinSystem, v0: &StateVector, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let h = HamiltonianMatrix::build(sys);
    evolve_with(sys, &h, v0, cfg)
}

/// [`evolve`] with a prebuilt matrix for `sys`.
pub fn evolve_with(
    sys: &SpinSystem,
    h: &HamiltonianMatrix,
    v0: &StateVector,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate(sys, h, v0, cfg, &mut NoHook)
}
