//! Plain-text and CSV writers.
//!
//! Numbers are written with 17 significant digits in scientific notation,
//! which round-trips every `f64` exactly. Lines end with `\n`. Every file
//! starts with `#` comment lines carrying caller-supplied provenance.

use std::io::{self, Write};

use crate::dynamics::Trajectory;
use crate::hamiltonian::HamiltonianMatrix;
use crate::jumps::ThermalComparison;
use crate::observables::SpinExpectationSeries;
use crate::surfaces::SeparabilityReport;

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_header(w: &mut impl Write, header: &[String]) -> io::Result<()> {
    for line in header {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

fn write_row(w: &mut impl Write, fields: impl IntoIterator<Item = String>) -> io::Result<()> {
    let mut first = true;
    for f in fields {
        if !first {
            w.write_all(b",")?;
        }
        w.write_all(f.as_bytes())?;
        first = false;
    }
    w.write_all(b"\n")
}

/// `t,re_C1,im_C1,...,norm,energy`.
pub fn write_trajectory_csv(
    w: &mut impl Write,
    header: &[String],
    traj: &Trajectory,
) -> io::Result<()> {
    write_header(w, header)?;
    let dim = traj.provenance.system.dim();
    let mut cols = vec!["t".to_string()];
    for k in 1..=dim {
        cols.push(format!("re_C{k}"));
        cols.push(format!("im_C{k}"));
    }
    cols.extend(["norm".to_string(), "energy".to_string()]);
    write_row(w, cols)?;
    for (i, s) in traj.states.iter().enumerate() {
        let mut row = vec![fmt_f64(traj.times[i])];
        for c in s.amplitudes() {
            row.push(fmt_f64(c.re));
            row.push(fmt_f64(c.im));
        }
        row.push(fmt_f64(traj.norms[i]));
        row.push(fmt_f64(traj.energies[i]));
        write_row(w, row)?;
    }
    Ok(())
}

/// `t,Iz1,...,IzN`.
pub fn write_spin_csv(
    w: &mut impl Write,
    header: &[String],
    series: &SpinExpectationSeries,
) -> io::Result<()> {
    write_header(w, header)?;
    let n = series.values.len();
    write_row(
        w,
        std::iter::once("t".to_string()).chain((1..=n).map(|i| format!("Iz{i}"))),
    )?;
    for (s, t) in series.times.iter().enumerate() {
        write_row(
            w,
            std::iter::once(fmt_f64(*t)).chain(series.values.iter().map(|col| fmt_f64(col[s]))),
        )?;
    }
    Ok(())
}

/// `t,norm,energy`.
pub fn write_diagnostics_csv(
    w: &mut impl Write,
    header: &[String],
    traj: &Trajectory,
) -> io::Result<()> {
    write_header(w, header)?;
    write_row(w, ["t", "norm", "energy"].map(String::from))?;
    for i in 0..traj.len() {
        write_row(
            w,
            [traj.times[i], traj.norms[i], traj.energies[i]].map(fmt_f64),
        )?;
    }
    Ok(())
}

/// One `row col real imag` line per nonzero, 1-based indices.
pub fn write_matrix_dump(
    w: &mut impl Write,
    header: &[String],
    h: &HamiltonianMatrix,
) -> io::Result<()> {
    write_header(w, header)?;
    for r in 0..h.dim() {
        for (c, z) in h.row_nonzeros(r) {
            writeln!(w, "{} {} {} {}", r + 1, c + 1, fmt_f64(z.re), fmt_f64(z.im))?;
        }
    }
    Ok(())
}

/// `target_index,class_id,max_overlap,flagged`.
pub fn write_separability_csv(
    w: &mut impl Write,
    header: &[String],
    rep: &SeparabilityReport,
) -> io::Result<()> {
    write_header(w, header)?;
    write_row(
        w,
        ["target_index", "class_id", "max_overlap", "flagged"].map(String::from),
    )?;
    for t in &rep.targets {
        write_row(
            w,
            [
                t.index.to_string(),
                t.class_id.to_string(),
                fmt_f64(t.max_overlap),
                t.flagged.to_string(),
            ],
        )?;
    }
    Ok(())
}

/// `spin,avg,stderr,beta,predicted,residual`.
pub fn write_ensemble_csv(
    w: &mut impl Write,
    header: &[String],
    cmp: &ThermalComparison,
) -> io::Result<()> {
    write_header(w, header)?;
    write_row(
        w,
        ["spin", "avg", "stderr", "beta", "predicted", "residual"].map(String::from),
    )?;
    for (i, avg) in cmp.per_spin_avg.iter().enumerate() {
        write_row(
            w,
            [
                (i + 1).to_string(),
                fmt_f64(*avg),
                fmt_f64(cmp.per_spin_stderr[i]),
                fmt_f64(cmp.prediction.beta),
                fmt_f64(cmp.prediction.predicted_avg),
                fmt_f64(cmp.residuals[i]),
            ],
        )?;
    }
    Ok(())
}
