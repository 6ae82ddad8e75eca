//! Flat `key = value` run configuration.
//!
//! ```text
//! # three spins, reference parameters
//! N = 3
//! omega = 10
//! a = 1            # uniform coupling
//! a_1_3 = 0.7      # per-pair override
//! include_P = true
//! initial = 2
//! ```
//!
//! Everything after `#` on a line is ignored. Keys are case-sensitive and may
//! appear once. Only `N` is required; every other key has the default listed
//! in [`KEYS`].

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use spinsep::dynamics::IntegratorConfig;
use spinsep::jumps::JumpConfig;
use spinsep::surfaces::DEFAULT_OVERLAP_CEILING;
use spinsep::{SpinSystem, StateVector};

use crate::error::CliError;

/// Amplitude lists must be normalized this well before they are accepted.
pub const AMPLITUDE_NORM_TOLERANCE: f64 = 1e-9;

/// Recognized keys and their defaults.
pub const KEYS: &[(&str, &str)] = &[
    ("N", "required"),
    ("omega", "10"),
    ("a", "1"),
    ("a_<i>_<j>", "a"),
    ("include_P", "true"),
    ("initial", "2"),
    ("amplitudes", "unset; overrides initial"),
    ("dt", "0.001"),
    ("t_end", "1000"),
    ("record_stride", "10"),
    ("abort_threshold", "1e-6"),
    ("t_start", "0"),
    ("command", "unset"),
    ("out", "out"),
    ("seed", "0"),
    ("rate", "0.01"),
    ("n_trajectories", "64"),
    ("stochastic", "false"),
    ("class_tolerance", "1e-9 * ‖H‖"),
    ("overlap_ceiling", "0.99"),
    ("write_amplitudes", "false"),
    ("write_matrix", "false"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Evolve,
    Separability,
    Jumps,
    Oracle,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Separability => "separability",
            Command::Jumps => "jumps",
            Command::Oracle => "oracle",
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "evolve" => Ok(Command::Evolve),
            "separability" => Ok(Command::Separability),
            "jumps" => Ok(Command::Jumps),
            "oracle" => Ok(Command::Oracle),
            other => Err(CliError::Usage(format!(
                "unknown command `{other}`; expected evolve, separability, jumps or oracle"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Initial {
    /// 1-based product state.
    Basis(usize),
    Amplitudes(Vec<Complex64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub omega: f64,
    pub a: f64,
    /// Per-pair overrides `(i, j, a_ij)` in file order.
    pub pair_couplings: Vec<(usize, usize, f64)>,
    pub include_p: bool,
    pub initial: Initial,
    pub integrator: IntegratorConfig,
    pub t_start: f64,
    pub command: Option<Command>,
    pub out: PathBuf,
    pub seed: u64,
    pub rate: f64,
    pub n_trajectories: usize,
    pub stochastic: bool,
    pub class_tolerance: Option<f64>,
    pub overlap_ceiling: f64,
    pub write_amplitudes: bool,
    pub write_matrix: bool,
}

impl RunConfig {
    /// Reference configuration with `n` spins.
    pub fn with_spins(n: usize) -> Self {
        RunConfig {
            n,
            omega: 10.0,
            a: 1.0,
            pair_couplings: Vec::new(),
            include_p: true,
            initial: Initial::Basis(2),
            integrator: IntegratorConfig::default(),
            t_start: 0.0,
            command: None,
            out: PathBuf::from("out"),
            seed: 0,
            rate: 0.01,
            n_trajectories: 64,
            stochastic: false,
            class_tolerance: None,
            overlap_ceiling: DEFAULT_OVERLAP_CEILING,
            write_amplitudes: false,
            write_matrix: false,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut seen: Vec<String> = Vec::new();
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = lineno + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "line {lineno}: expected `key = value`, got `{line}`"
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(CliError::Usage(format!("line {lineno}: empty key")));
            }
            if seen.iter().any(|k| k == key) {
                return Err(CliError::Usage(format!(
                    "line {lineno}: duplicate key `{key}`"
                )));
            }
            seen.push(key.to_string());
            entries.push((lineno, key.to_string(), value.to_string()));
        }

        let n = entries
            .iter()
            .find(|(_, k, _)| k == "N")
            .map(|(l, _, v)| parse_value::<usize>(*l, "N", v))
            .transpose()?
            .ok_or_else(|| CliError::Usage("missing required key `N`".into()))?;

        let mut cfg = RunConfig::with_spins(n);
        for (l, key, v) in &entries {
            let l = *l;
            match key.as_str() {
                "N" => {}
                "omega" => cfg.omega = parse_value(l, key, v)?,
                "a" => cfg.a = parse_value(l, key, v)?,
                "include_P" => cfg.include_p = parse_value(l, key, v)?,
                "initial" => {
                    if !matches!(cfg.initial, Initial::Amplitudes(_)) {
                        cfg.initial = Initial::Basis(parse_value(l, key, v)?);
                    }
                }
                "amplitudes" => cfg.initial = Initial::Amplitudes(parse_amplitudes(l, v)?),
                "dt" => cfg.integrator.dt = parse_value(l, key, v)?,
                "t_end" => cfg.integrator.t_end = parse_value(l, key, v)?,
                "record_stride" => cfg.integrator.record_stride = parse_value(l, key, v)?,
                "abort_threshold" => cfg.integrator.abort_threshold = parse_value(l, key, v)?,
                "t_start" => cfg.t_start = parse_value(l, key, v)?,
                "command" => cfg.command = Some(v.parse()?),
                "out" => cfg.out = PathBuf::from(v),
                "seed" => cfg.seed = parse_value(l, key, v)?,
                "rate" => cfg.rate = parse_value(l, key, v)?,
                "n_trajectories" => cfg.n_trajectories = parse_value(l, key, v)?,
                "stochastic" => cfg.stochastic = parse_value(l, key, v)?,
                "class_tolerance" => cfg.class_tolerance = Some(parse_value(l, key, v)?),
                "overlap_ceiling" => cfg.overlap_ceiling = parse_value(l, key, v)?,
                "write_amplitudes" => cfg.write_amplitudes = parse_value(l, key, v)?,
                "write_matrix" => cfg.write_matrix = parse_value(l, key, v)?,
                other => match parse_pair_key(other) {
                    Some((i, j)) => cfg.pair_couplings.push((i, j, parse_value(l, key, v)?)),
                    None => {
                        return Err(CliError::Usage(format!("line {l}: unknown key `{other}`")))
                    }
                },
            }
        }
        Ok(cfg)
    }

    pub fn system(&self) -> Result<SpinSystem, CliError> {
        let mut sys = SpinSystem::uniform(self.n, self.omega, self.a, self.include_p)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        for &(i, j, a) in &self.pair_couplings {
            sys.set_coupling(i, j, a)
                .map_err(|e| CliError::Usage(format!("a_{i}_{j}: {e}")))?;
        }
        Ok(sys)
    }

    /// The initial state, normalized exactly when given as amplitudes.
    pub fn initial_state(&self) -> Result<StateVector, CliError> {
        match &self.initial {
            Initial::Basis(k) => {
                StateVector::basis(*k, self.n).map_err(|e| CliError::Usage(format!("initial: {e}")))
            }
            Initial::Amplitudes(amps) => {
                let dim = 1usize << self.n;
                if amps.len() != dim {
                    return Err(CliError::Usage(format!(
                        "amplitudes: expected {dim} entries for N = {}, got {}",
                        self.n,
                        amps.len()
                    )));
                }
                let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
                if (norm - 1.0).abs() > AMPLITUDE_NORM_TOLERANCE {
                    return Err(CliError::Usage(format!(
                        "amplitudes: squared norm {norm} differs from 1 by more than {AMPLITUDE_NORM_TOLERANCE:e}"
                    )));
                }
                let scale = norm.sqrt();
                StateVector::from_amplitudes(amps.iter().map(|z| z / scale).collect())
                    .map_err(|e| CliError::Usage(format!("amplitudes: {e}")))
            }
        }
    }

    /// Basis index of the initial state, required by the separability and
    /// jump commands.
    pub fn initial_index(&self) -> Result<usize, CliError> {
        match self.initial {
            Initial::Basis(k) => Ok(k),
            Initial::Amplitudes(_) => Err(CliError::Usage(
                "this command needs a basis-state `initial`, not `amplitudes`".into(),
            )),
        }
    }

    pub fn jump_config(&self) -> JumpConfig {
        JumpConfig {
            rate: self.rate,
            seed: self.seed,
            n_trajectories: self.n_trajectories,
            class_tolerance: self.class_tolerance,
        }
    }

    /// Every setting after defaults and overrides, one `key = value` per line.
    pub fn resolved_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("N = {}", self.n),
            format!("omega = {}", self.omega),
            format!("a = {}", self.a),
        ];
        for (i, j, a) in &self.pair_couplings {
            lines.push(format!("a_{i}_{j} = {a}"));
        }
        lines.push(format!("include_P = {}", self.include_p));
        match &self.initial {
            Initial::Basis(k) => lines.push(format!("initial = {k}")),
            Initial::Amplitudes(amps) => {
                let mut s = String::from("amplitudes = ");
                for (n, z) in amps.iter().enumerate() {
                    if n > 0 {
                        s.push_str(", ");
                    }
                    let _ = write!(s, "{} {}", z.re, z.im);
                }
                lines.push(s);
            }
        }
        let ic = &self.integrator;
        lines.extend([
            format!("dt = {}", ic.dt),
            format!("t_end = {}", ic.t_end),
            format!("record_stride = {}", ic.record_stride),
            format!("abort_threshold = {}", ic.abort_threshold),
            format!("t_start = {}", self.t_start),
            format!(
                "command = {}",
                self.command.map_or("unset", Command::as_str)
            ),
            format!("seed = {}", self.seed),
            format!("rate = {}", self.rate),
            format!("n_trajectories = {}", self.n_trajectories),
            format!("stochastic = {}", self.stochastic),
            match self.class_tolerance {
                Some(t) => format!("class_tolerance = {t}"),
                None => "class_tolerance = default".to_string(),
            },
            format!("overlap_ceiling = {}", self.overlap_ceiling),
            format!("write_amplitudes = {}", self.write_amplitudes),
            format!("write_matrix = {}", self.write_matrix),
        ]);
        lines
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Usage(format!("line {line}: cannot parse `{v}` for `{key}`")))
}

fn parse_pair_key(key: &str) -> Option<(usize, usize)> {
    let rest = key.strip_prefix("a_")?;
    let (i, j) = rest.split_once('_')?;
    Some((i.parse().ok()?, j.parse().ok()?))
}

/// Comma-separated entries, each `re` or `re im`.
fn parse_amplitudes(line: usize, v: &str) -> Result<Vec<Complex64>, CliError> {
    v.split(',')
        .map(|entry| {
            let parts: Vec<&str> = entry.split_whitespace().collect();
            let num = |s: &str| parse_value::<f64>(line, "amplitudes", s);
            match parts.as_slice() {
                [re] => Ok(Complex64::new(num(re)?, 0.0)),
                [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
                _ => Err(CliError::Usage(format!(
                    "line {line}: amplitude entry `{}` must be `re` or `re im`",
                    entry.trim()
                ))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::parse("N = 3\nomega = 10\na = 1\ninitial = 2\n").unwrap();
        assert_eq!(cfg, RunConfig::with_spins(3));
    }

    #[test]
    fn comments_and_pairs() {
        let cfg = RunConfig::parse(
            "# header\nN = 4   # spins\n\na_1_3 = 0.7\ninclude_P = false\ncommand = oracle\n",
        )
        .unwrap();
        assert_eq!(cfg.pair_couplings, vec![(1, 3, 0.7)]);
        assert!(!cfg.include_p);
        assert_eq!(cfg.command, Some(Command::Oracle));
        assert_eq!(cfg.system().unwrap().coupling(3, 1).unwrap(), 0.7);
    }

    #[test]
    fn malformed_inputs() {
        for text in [
            "",
            "omega = 10",
            "N = 3\nN = 3",
            "N = three",
            "N = 3\nfoo = 1",
            "N = 3\njust a line",
            "N = 3\ncommand = plot",
            "N = 3\ndt = fast",
        ] {
            assert!(
                matches!(RunConfig::parse(text), Err(CliError::Usage(_))),
                "{text:?}"
            );
        }
    }

    #[test]
    fn out_of_range_values_rejected_at_resolution() {
        let cfg = RunConfig::parse("N = 3\ninitial = 9").unwrap();
        assert!(cfg.initial_state().is_err());
        let cfg = RunConfig::parse("N = 3\na_1_4 = 1").unwrap();
        assert!(cfg.system().is_err());
        let cfg = RunConfig::parse("N = 1").unwrap();
        assert!(cfg.system().is_err());
    }

    #[test]
    fn amplitude_lists() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let text = format!("N = 2\namplitudes = 0, {r} 0, 0 {r}, 0");
        let cfg = RunConfig::parse(&text).unwrap();
        let v = cfg.initial_state().unwrap();
        assert!((v.norm_sqr() - 1.0).abs() < 1e-15);
        assert!((v.amplitude(3).im - r).abs() < 1e-15);
        assert!(cfg.initial_index().is_err());

        let cfg = RunConfig::parse("N = 2\namplitudes = 1, 0, 0, 1e-4").unwrap();
        assert!(cfg.initial_state().is_err());
        let cfg = RunConfig::parse("N = 2\namplitudes = 1, 0, 0").unwrap();
        assert!(cfg.initial_state().is_err());
        assert!(RunConfig::parse("N = 2\namplitudes = 1 0 0, 0, 0, 0").is_err());
    }

    #[test]
    fn resolved_lines_round_trip() {
        let mut cfg = RunConfig::with_spins(4);
        cfg.pair_couplings.push((2, 4, -0.3));
        cfg.command = Some(Command::Jumps);
        cfg.class_tolerance = Some(1e-6);
        let text: String = cfg
            .resolved_lines()
            .into_iter()
            .map(|l| l + "\n")
            .collect::<String>()
            .replace("command = jumps", "command = jumps\nout = out");
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }
}
