//! Energy classes of basis states and reachability in coefficient space.
//!
//! Two product states in the same [`DegeneracyClass`] have equal diagonal
//! energy `<Φ_k|H|Φ_k>`, so an ensemble argument would treat them as equally
//! likely. Whether the unitary dynamics actually carries one into the other
//! is measured by [`max_overlap_scan`]; the coupling graph records whether
//! the Hamiltonian connects them at all.

use std::collections::{BTreeMap, VecDeque};

use crate::dynamics::{evolve_with, IntegratorConfig, StateVector, Trajectory};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianMatrix, SpinSystem};
use crate::observables::{time_average, AverageReport, DEGENERACY_REL_TOL};

/// A target counts as reached once `max_t |C_k(t)|^2` attains this value.
pub const DEFAULT_OVERLAP_CEILING: f64 = 0.99;

#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracyClass {
    /// Diagonal energy of the lowest-numbered member.
    pub diagonal_energy: f64,
    /// 1-based basis indices, ascending.
    pub members: Vec<usize>,
}

impl DegeneracyClass {
    pub fn contains(&self, k: usize) -> bool {
        self.members.binary_search(&k).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Default class tolerance, `1e-9 · ‖H‖`.
pub fn default_class_tolerance(h: &HamiltonianMatrix) -> f64 {
    DEGENERACY_REL_TOL * h.norm_bound()
}

/// Partitions basis states by diagonal energy.
///
/// States are sorted by energy and consecutive states closer than `tol` are
/// chained into one class. Classes are ordered by their lowest member.
pub fn degeneracy_classes(h: &HamiltonianMatrix, tol: f64) -> Vec<DegeneracyClass> {
    let diag = h.diagonal();
    let mut order: Vec<usize> = (0..diag.len()).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));

    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (pos, &k) in order.iter().enumerate() {
        let joins = pos > 0 && diag[k] - diag[order[pos - 1]] <= tol;
        match classes.last_mut() {
            Some(last) if joins => last.push(k + 1),
            _ => classes.push(vec![k + 1]),
        }
    }
    let mut out: Vec<DegeneracyClass> = classes
        .into_iter()
        .map(|mut members| {
            members.sort_unstable();
            DegeneracyClass {
                diagonal_energy: diag[members[0] - 1],
                members,
            }
        })
        .collect();
    out.sort_by_key(|c| c.members[0]);
    out
}

/// The class containing basis state `k` (1-based).
pub fn class_of(classes: &[DegeneracyClass], k: usize) -> Option<(usize, &DegeneracyClass)> {
    classes.iter().enumerate().find(|(_, c)| c.contains(k))
}

/// `max_t |C_k(t)|^2` over the recorded samples for each 1-based target.
pub fn max_overlap_scan(traj: &Trajectory, targets: &[usize]) -> Result<BTreeMap<usize, f64>> {
    let dim = traj.provenance.system.dim();
    let mut out = BTreeMap::new();
    for &k in targets {
        if !(1..=dim).contains(&k) {
            return Err(Error::Range {
                what: "basis index",
                value: k as i64,
                min: 1,
                max: dim as i64,
            });
        }
        let best = traj
            .states
            .iter()
            .map(|s| s.probability(k))
            .fold(0.0, f64::max);
        out.insert(k, best);
    }
    Ok(out)
}

/// Connected components of the graph with an edge `(n, m)` whenever
/// `|H_nm| > threshold`, `n != m`. Components hold 1-based indices, each
/// sorted, ordered by lowest member.
pub fn coupling_graph_components(h: &HamiltonianMatrix, threshold: f64) -> Vec<Vec<usize>> {
    let dim = h.dim();
    let mut component = vec![usize::MAX; dim];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..dim {
        if component[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![start + 1];
        component[start] = id;
        queue.push_back(start);
        while let Some(r) = queue.pop_front() {
            for (c, z) in h.row_nonzeros(r) {
                if c != r && z.norm() > threshold && component[c] == usize::MAX {
                    component[c] = id;
                    members.push(c + 1);
                    queue.push_back(c);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparabilitySettings {
    pub overlap_ceiling: f64,
    /// Absolute diagonal-energy tolerance; `None` uses
    /// [`default_class_tolerance`].
    pub class_tolerance: Option<f64>,
}

impl Default for SeparabilitySettings {
    fn default() -> Self {
        SeparabilitySettings {
            overlap_ceiling: DEFAULT_OVERLAP_CEILING,
            class_tolerance: None,
        }
    }
}

/// Per-target line of a [`SeparabilityReport`].
#[derive(Clone, Debug, PartialEq)]
pub struct TargetRecord {
    pub index: usize,
    pub class_id: usize,
    pub max_overlap: f64,
    /// `|<Φ_k|H|Φ_initial>|`, nonzero when the Hamiltonian couples the target
    /// directly to the initial state.
    pub direct_coupling: f64,
    pub same_class: bool,
    pub reached: bool,
    /// Same class as the initial state yet never reached.
    pub flagged: bool,
}

#[derive(Clone, Debug)]
pub struct SeparabilityReport {
    pub initial_state: usize,
    pub targets: Vec<TargetRecord>,
    pub classes: Vec<DegeneracyClass>,
    pub components: Vec<Vec<usize>>,
    pub averages: AverageReport,
    pub settings: SeparabilitySettings,
    pub max_norm_drift: f64,
    pub max_energy_drift: f64,
}

impl SeparabilityReport {
    pub fn target(&self, k: usize) -> &TargetRecord {
        &self.targets[k - 1]
    }

    pub fn flagged(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().filter(|t| t.flagged).map(|t| t.index)
    }

    /// True when the per-spin averages are not all equal within `tol`.
    pub fn averages_distinct(&self, tol: f64) -> bool {
        let v = &self.averages.per_spin_avg;
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                (lo.min(*x), hi.max(*x))
            });
        hi - lo > tol
    }
}

/// Evolves from `Φ_initial` and compares reachability with energy classes.
pub fn separability_report(
    sys: &SpinSystem,
    initial: usize,
    cfg: &IntegratorConfig,
    settings: &SeparabilitySettings,
) -> Result<SeparabilityReport> {
    let v0 = StateVector::basis(initial, sys.n_spins())?;
    let h = HamiltonianMatrix::build(sys);
    let tol = settings
        .class_tolerance
        .unwrap_or_else(|| default_class_tolerance(&h));
    let classes = degeneracy_classes(&h, tol);
    let (home, _) = class_of(&classes, initial).expect("classes partition the basis");

    let traj = evolve_with(sys, &h, &v0, cfg)?;
    let all: Vec<usize> = (1..=sys.dim()).collect();
    let overlaps = max_overlap_scan(&traj, &all)?;

    let targets = all
        .iter()
        .map(|&k| {
            let (class_id, _) = class_of(&classes, k).expect("classes partition the basis");
            let max_overlap = overlaps[&k];
            let same_class = class_id == home;
            let reached = max_overlap >= settings.overlap_ceiling;
            TargetRecord {
                index: k,
                class_id,
                max_overlap,
                direct_coupling: h.element(k, initial).norm(),
                same_class,
                reached,
                flagged: k != initial && same_class && !reached,
            }
        })
        .collect();

    Ok(SeparabilityReport {
        initial_state: initial,
        targets,
        components: coupling_graph_components(&h, 0.0),
        classes,
        averages: time_average(&traj, 0.0)?,
        settings: *settings,
        max_norm_drift: traj.max_norm_drift(),
        max_energy_drift: traj.max_energy_drift(),
    })
}
