//! The four batch commands. Each one validates its whole configuration,
//! computes everything in memory and only then hands back the files to
//! write, so a failing run leaves no partial output behind.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use spinsep::dynamics::{evolve_with, RECOMMENDED_STEP_RATIO};
use spinsep::export::{
    fmt_f64, write_diagnostics_csv, write_ensemble_csv, write_header, write_matrix_dump,
    write_separability_csv, write_spin_csv, write_trajectory_csv,
};
use spinsep::jumps::{
    class_ensemble_average, jump_class, stochastic_ensemble, thermal_compare, JumpEnsemble,
    ThermalComparison,
};
use spinsep::observables::{
    diagonal_ensemble_average, spin_series, time_average, MAX_ORACLE_SPINS,
};
use spinsep::surfaces::{separability_report, SeparabilityReport, SeparabilitySettings};
use spinsep::{BasisState, HamiltonianMatrix};

use crate::config::{Command, RunConfig};
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: Vec<u8>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub files: Vec<OutputFile>,
    /// Short human-readable digest for stdout.
    pub summary: String,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&OutputFile> {
        self.files.iter().find(|f| f.name == name)
    }
}

fn header(cfg: &RunConfig, command: Command) -> Vec<String> {
    let mut resolved = cfg.clone();
    resolved.command = Some(command);
    let mut lines = vec![format!("spinsep {VERSION}")];
    lines.extend(resolved.resolved_lines());
    lines
}

fn render<F>(name: &str, f: F) -> Result<OutputFile, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut contents = Vec::new();
    f(&mut contents)?;
    Ok(OutputFile {
        name: name.to_string(),
        contents,
    })
}

fn check_window(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.integrator.validate()?;
    if !(cfg.t_start >= 0.0 && cfg.t_start <= cfg.integrator.t_end) {
        return Err(CliError::Usage(format!(
            "t_start = {} must lie in [0, t_end = {}]",
            cfg.t_start, cfg.integrator.t_end
        )));
    }
    Ok(())
}

fn spins_line(label: &str, values: &[f64]) -> String {
    let mut s = format!("{label:<28}");
    for v in values {
        let _ = write!(s, " {v:>10.6}");
    }
    s
}

fn step_warning(cfg: &RunConfig, h: &HamiltonianMatrix) -> Option<String> {
    let ratio = cfg.integrator.step_ratio(h);
    (ratio > RECOMMENDED_STEP_RATIO).then(|| {
        format!("warning: dt * ‖H‖ = {ratio:.4} exceeds the recommended {RECOMMENDED_STEP_RATIO}")
    })
}

/// Runs `command` and returns the files it would write.
pub fn run(cfg: &RunConfig, command: Command) -> Result<RunOutput, CliError> {
    match command {
        Command::Evolve => cmd_evolve(cfg),
        Command::Separability => cmd_separability(cfg),
        Command::Jumps => cmd_jumps(cfg),
        Command::Oracle => cmd_oracle(cfg),
    }
}

pub fn cmd_evolve(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let sys = cfg.system()?;
    let v0 = cfg.initial_state()?;
    check_window(cfg)?;
    let hdr = header(cfg, Command::Evolve);

    let h = HamiltonianMatrix::build(&sys);
    let traj = evolve_with(&sys, &h, &v0, &cfg.integrator)?;
    let avg = time_average(&traj, cfg.t_start)?;
    let series = spin_series(&traj);

    let mut summary = String::new();
    if let Some(w) = step_warning(cfg, &h) {
        let _ = writeln!(summary, "{w}");
    }
    let _ = writeln!(
        summary,
        "{}",
        spins_line("time-averaged <Iz_i>:", &avg.per_spin_avg)
    );
    let _ = writeln!(
        summary,
        "window: [{}, {}] over {} samples",
        avg.window.0, avg.window.1, avg.samples
    );
    let _ = writeln!(summary, "max |norm - 1|:     {:.3e}", traj.max_norm_drift());
    let _ = writeln!(
        summary,
        "max |E(t) - E(0)|:  {:.3e}",
        traj.max_energy_drift()
    );
    let _ = writeln!(summary, "‖H‖ (max row sum):  {}", h.norm_bound());

    let mut files = vec![
        render("evolve_iz.csv", |w| write_spin_csv(w, &hdr, &series))?,
        render("evolve_diagnostics.csv", |w| {
            write_diagnostics_csv(w, &hdr, &traj)
        })?,
        render("evolve_summary.txt", |w| {
            write_header(w, &hdr)?;
            w.extend_from_slice(summary.as_bytes());
            Ok(())
        })?,
    ];
    if cfg.write_amplitudes {
        files.push(render("evolve_trajectory.csv", |w| {
            write_trajectory_csv(w, &hdr, &traj)
        })?);
    }
    if cfg.write_matrix {
        files.push(render("hamiltonian.txt", |w| {
            write_matrix_dump(w, &hdr, &h)
        })?);
    }
    Ok(RunOutput { files, summary })
}

fn separability_text(rep: &SeparabilityReport, n: usize) -> String {
    let pattern = |k: usize| {
        BasisState::from_index(k, n)
            .map(|s| s.to_string())
            .unwrap_or_default()
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "initial state: Φ{} ({})",
        rep.initial_state,
        pattern(rep.initial_state)
    );
    let _ = writeln!(
        s,
        "reached means max_t |C_k|^2 >= {}; flagged means same energy class as the initial state but never reached",
        rep.settings.overlap_ceiling
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>6}  {:<pw$}  {:>5}  {:>12}  {:>12}  {:>12}  {:>7}  {:>7}",
        "target",
        "spins",
        "class",
        "diag energy",
        "|H_k,init|",
        "max overlap",
        "reached",
        "flagged",
        pw = n
    );
    for t in &rep.targets {
        let energy = rep.classes[t.class_id].diagonal_energy;
        let _ = writeln!(
            s,
            "{:>6}  {:<pw$}  {:>5}  {:>12.6}  {:>12.6}  {:>12.8}  {:>7}  {:>7}",
            format!("Φ{}", t.index),
            pattern(t.index),
            t.class_id,
            energy,
            t.direct_coupling,
            t.max_overlap,
            t.reached,
            t.flagged,
            pw = n
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "energy classes (diagonal energy: members)");
    for (id, c) in rep.classes.iter().enumerate() {
        let _ = writeln!(s, "  {id}: {:.6}: {:?}", c.diagonal_energy, c.members);
    }
    let _ = writeln!(s, "coupling graph components (edges |H_nm| > 0)");
    for c in &rep.components {
        let _ = writeln!(s, "  {c:?}");
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{}",
        spins_line("time-averaged <Iz_i>:", &rep.averages.per_spin_avg)
    );
    let _ = writeln!(s, "max |norm - 1|:     {:.3e}", rep.max_norm_drift);
    let _ = writeln!(s, "max |E(t) - E(0)|:  {:.3e}", rep.max_energy_drift);
    s
}

pub fn cmd_separability(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let sys = cfg.system()?;
    let initial = cfg.initial_index()?;
    cfg.initial_state()?;
    check_window(cfg)?;
    let hdr = header(cfg, Command::Separability);

    let settings = SeparabilitySettings {
        overlap_ceiling: cfg.overlap_ceiling,
        class_tolerance: cfg.class_tolerance,
    };
    let rep = separability_report(&sys, initial, &cfg.integrator, &settings)?;
    let text = separability_text(&rep, sys.n_spins());

    let files = vec![
        render("separability.txt", |w| {
            write_header(w, &hdr)?;
            w.extend_from_slice(text.as_bytes());
            Ok(())
        })?,
        render("separability.csv", |w| {
            write_separability_csv(w, &hdr, &rep)
        })?,
    ];
    Ok(RunOutput {
        files,
        summary: text,
    })
}

fn ensemble_block(s: &mut String, title: &str, ens: &JumpEnsemble, cmp: &ThermalComparison) {
    let _ = writeln!(s, "{title}");
    let _ = writeln!(
        s,
        "{}",
        spins_line("  per-spin <Iz_i>_av:", &ens.per_spin_avg)
    );
    let _ = writeln!(
        s,
        "{}",
        spins_line("  standard error:", &ens.per_spin_stderr)
    );
    let _ = writeln!(
        s,
        "  mean over spins:           {:.6}",
        ens.mean_over_spins()
    );
    let p = &cmp.prediction;
    let _ = writeln!(s, "  fitted beta:               {:.6}", p.beta);
    let _ = writeln!(
        s,
        "  spin temperature 1/beta:   {:.6}",
        p.spin_temperature()
    );
    let _ = writeln!(s, "  normalization A:           {:.6}", p.normalization);
    let _ = writeln!(s, "  predicted -tanh(bw/2)/2:   {:.6}", p.predicted_avg);
    let _ = writeln!(s, "  Tr(rho Iz) via exp:        {:.6}", cmp.direct_trace);
    let _ = writeln!(s, "  max residual:              {:.3e}", cmp.max_residual());
}

pub fn cmd_jumps(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let sys = cfg.system()?;
    let initial = cfg.initial_index()?;
    cfg.initial_state()?;
    check_window(cfg)?;
    let jcfg = cfg.jump_config();
    jcfg.validate()?;
    let hdr = header(cfg, Command::Jumps);

    let h = HamiltonianMatrix::build(&sys);
    let class = jump_class(&h, initial, &jcfg)?;
    let class_ens = class_ensemble_average(&sys, &class, &cfg.integrator)?;
    let class_cmp = thermal_compare(&class_ens, sys.omega())?;

    let basis = sys.basis();
    let uniform_mean: Vec<f64> = (1..=sys.n_spins())
        .map(|i| {
            class
                .members
                .iter()
                .map(|&k| basis.state(k).and_then(|s| s.m(i)).unwrap_or(0.0))
                .sum::<f64>()
                / class.len() as f64
        })
        .collect();

    let stochastic = if cfg.stochastic {
        let ens = stochastic_ensemble(&sys, initial, &jcfg, &cfg.integrator)?;
        let cmp = thermal_compare(&ens, sys.omega())?;
        Some((ens, cmp))
    } else {
        None
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        "jump targets: product states with the same diagonal energy as Φ{initial}; eigenstate targets are not modelled"
    );
    let _ = writeln!(
        s,
        "jump class (diagonal energy {:.6}): {:?}",
        class.diagonal_energy, class.members
    );
    let _ = writeln!(
        s,
        "{}",
        spins_line("uniform basis-state mean:", &uniform_mean)
    );
    let _ = writeln!(s);
    ensemble_block(
        &mut s,
        "class ensemble (rare-jump limit)",
        &class_ens,
        &class_cmp,
    );
    for r in &class_ens.records {
        let _ = writeln!(
            s,
            "{}",
            spins_line(&format!("    from Φ{}:", r.label), &r.per_spin_avg)
        );
    }
    if let Some((ens, cmp)) = &stochastic {
        let _ = writeln!(s);
        let total_jumps: usize = ens.records.iter().map(|r| r.n_jumps).sum();
        ensemble_block(
            &mut s,
            &format!(
                "stochastic ensemble (rate {}, {} trajectories, {} jumps total)",
                jcfg.rate, jcfg.n_trajectories, total_jumps
            ),
            ens,
            cmp,
        );
    }

    let mut files = vec![
        render("jumps.txt", |w| {
            write_header(w, &hdr)?;
            w.extend_from_slice(s.as_bytes());
            Ok(())
        })?,
        render("jumps.csv", |w| write_ensemble_csv(w, &hdr, &class_cmp))?,
    ];
    if let Some((_, cmp)) = &stochastic {
        files.push(render("jumps_stochastic.csv", |w| {
            write_ensemble_csv(w, &hdr, cmp)
        })?);
    }
    Ok(RunOutput { files, summary: s })
}

pub fn cmd_oracle(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let sys = cfg.system()?;
    if sys.n_spins() > MAX_ORACLE_SPINS {
        return Err(CliError::Resource(format!(
            "oracle needs a dense eigendecomposition; N = {} exceeds {MAX_ORACLE_SPINS}",
            sys.n_spins()
        )));
    }
    let v0 = cfg.initial_state()?;
    check_window(cfg)?;
    let hdr = header(cfg, Command::Oracle);

    let oracle = diagonal_ensemble_average(&sys, &v0)?;
    let h = HamiltonianMatrix::build(&sys);
    let traj = evolve_with(&sys, &h, &v0, &cfg.integrator)?;
    let avg = time_average(&traj, cfg.t_start)?;

    let mut s = String::new();
    let _ = writeln!(s, "{}", spins_line("RK4 time average:", &avg.per_spin_avg));
    let _ = writeln!(
        s,
        "{}",
        spins_line("diagonal ensemble:", &oracle.per_spin_avg)
    );
    let diffs: Vec<f64> = avg
        .per_spin_avg
        .iter()
        .zip(&oracle.per_spin_avg)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let _ = writeln!(
        s,
        "max |difference|:            {:.3e}",
        diffs.iter().copied().fold(0.0, f64::max)
    );

    let csv = render("oracle.csv", |w| {
        write_header(w, &hdr)?;
        w.extend_from_slice(b"spin,time_average,diagonal_ensemble,abs_diff\n");
        for (i, d) in diffs.iter().enumerate() {
            let line = format!(
                "{},{},{},{}\n",
                i + 1,
                fmt_f64(avg.per_spin_avg[i]),
                fmt_f64(oracle.per_spin_avg[i]),
                fmt_f64(*d)
            );
            w.extend_from_slice(line.as_bytes());
        }
        Ok(())
    })?;
    let txt = render("oracle.txt", |w| {
        write_header(w, &hdr)?;
        w.extend_from_slice(s.as_bytes());
        Ok(())
    })?;
    Ok(RunOutput {
        files: vec![csv, txt],
        summary: s,
    })
}

/// Creates `dir` if needed and writes every file into it.
pub fn write_outputs(dir: &Path, files: &[OutputFile]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for f in files {
        fs::write(dir.join(&f.name), &f.contents)?;
    }
    Ok(())
}
