//! Argument and config-file handling for the `qsl-ibie` binary.
//!
//! Config files are TOML with flat keys named like the long flags
//! (underscores instead of dashes):
//!
//! ```toml
//! n = 100
//! j = 1.0
//! h = 1.0
//! gamma_field = 1.0
//! eps_beta = 0.01
//! sweep = "eps_gamma:0.02:1.5707:64"
//! format = "csv"
//! ```
//!
//! Flags given on the command line win over the file.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use qsl_ibie::anneal::{AnnealParams, Protocol};
use qsl_ibie::propagator::DEFAULT_STEPS;
use qsl_ibie::report::{self, ModelParams, Row, SweepSpec};
use qsl_ibie::stirap::StirapParams;
use qsl_ibie::{selftest, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SINGULAR: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ScheduleSingularity { .. } => EXIT_SINGULAR,
            Error::CertificationViolation { .. } => EXIT_VIOLATION,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qsl-ibie", version, about = "Speed-limit fidelity certificates for invariant-designed controls")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Detuned three-level STIRAP designed on resonance.
    Stirap {
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long)]
        omega0: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Infinite-range Ising annealing designed with the mean-field invariant.
    Anneal {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        j: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        h: Option<f64>,
        #[arg(long)]
        gamma_field: Option<f64>,
        #[arg(long)]
        eps_gamma: Option<f64>,
        #[arg(long)]
        eps_beta: Option<f64>,
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long)]
        h0: Option<f64>,
        #[arg(long, value_enum)]
        protocol: Option<ProtocolArg>,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the internal consistency checks.
    Selftest {
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Quadrature (and initial propagation) steps; rounded up to even.
    #[arg(long)]
    steps: Option<usize>,
    /// Also propagate the true dynamics and check the bound.
    #[arg(long)]
    certify: bool,
    /// name:start:stop:count[:log]
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Linear,
    Smooth,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    delta: Option<f64>,
    epsilon: Option<f64>,
    t_final: Option<f64>,
    omega0: Option<f64>,
    n: Option<usize>,
    j: Option<f64>,
    h: Option<f64>,
    gamma_field: Option<f64>,
    eps_gamma: Option<f64>,
    eps_beta: Option<f64>,
    h0: Option<f64>,
    protocol: Option<String>,
    steps: Option<usize>,
    certify: Option<bool>,
    sweep: Option<String>,
    format: Option<Format>,
    output: Option<PathBuf>,
}

fn read_config(path: &Option<PathBuf>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| {
        let first = e.to_string().lines().next().unwrap_or("").to_string();
        CliError::usage(format!("invalid config {}: {}", path.display(), first.trim()))
    })
}

/// Fully resolved and validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub steps: usize,
    pub certify: bool,
    pub sweep: Option<SweepSpec>,
    pub format: Format,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Run(RunConfig),
    Selftest(Format),
}

fn invalid(e: Error) -> CliError {
    CliError::usage(e.to_string())
}

/// Parses arguments (including the program name) and the optional config
/// file into a validated command.
pub fn parse_config<I, T>(args: I) -> Result<Command, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        CliError {
            code,
            message: e.render().to_string(),
        }
    })?;

    let (params, common, file) = match cli.command {
        Cmd::Selftest { format } => return Ok(Command::Selftest(format.unwrap_or_default())),
        Cmd::Stirap {
            delta,
            epsilon,
            t_final,
            omega0,
            common,
        } => {
            let file = read_config(&common.config)?;
            if file.n.is_some() || file.j.is_some() || file.eps_gamma.is_some() {
                return Err(CliError::usage("config sets anneal parameters for a stirap run"));
            }
            let p = StirapParams {
                delta: delta.or(file.delta).unwrap_or(0.0),
                epsilon: epsilon.or(file.epsilon).unwrap_or(0.1),
                t_final: t_final.or(file.t_final).unwrap_or(10.0),
                omega0: omega0.or(file.omega0).unwrap_or(1.0),
            };
            p.validate().map_err(invalid)?;
            (ModelParams::Stirap(p), common, file)
        }
        Cmd::Anneal {
            n,
            j,
            h,
            gamma_field,
            eps_gamma,
            eps_beta,
            t_final,
            h0,
            protocol,
            common,
        } => {
            let file = read_config(&common.config)?;
            if file.delta.is_some() || file.epsilon.is_some() {
                return Err(CliError::usage("config sets stirap parameters for an anneal run"));
            }
            let d = AnnealParams::default();
            let protocol = match protocol {
                Some(ProtocolArg::Linear) => Protocol::Linear,
                Some(ProtocolArg::Smooth) => Protocol::Smooth,
                None => match &file.protocol {
                    Some(s) => s.parse().map_err(invalid)?,
                    None => d.protocol,
                },
            };
            let p = AnnealParams {
                n_qubits: n.or(file.n).unwrap_or(d.n_qubits),
                coupling: j.or(file.j).unwrap_or(d.coupling),
                longitudinal: h.or(file.h).unwrap_or(d.longitudinal),
                transverse: gamma_field.or(file.gamma_field).unwrap_or(d.transverse),
                eps_gamma: eps_gamma.or(file.eps_gamma).unwrap_or(d.eps_gamma),
                eps_beta: eps_beta.or(file.eps_beta).unwrap_or(d.eps_beta),
                t_final: t_final.or(file.t_final).unwrap_or(d.t_final),
                protocol,
                h0: h0.or(file.h0).unwrap_or(d.h0),
            };
            (ModelParams::Anneal(p.checked().map_err(invalid)?), common, file)
        }
    };

    let steps = common.steps.or(file.steps).unwrap_or(DEFAULT_STEPS);
    if steps < 2 {
        return Err(CliError::usage("--steps must be at least 2"));
    }
    let sweep = match common.sweep.or(file.sweep) {
        Some(s) => {
            let spec = SweepSpec::parse(&s).map_err(invalid)?;
            if !params.fields().contains(&spec.param.as_str()) {
                return Err(CliError::usage(format!(
                    "cannot sweep `{}`; {} sweeps accept {}",
                    spec.param,
                    params.name(),
                    params.fields().join(", ")
                )));
            }
            Some(spec)
        }
        None => None,
    };
    Ok(Command::Run(RunConfig {
        params,
        steps,
        certify: common.certify || file.certify.unwrap_or(false),
        sweep,
        format: common.format.or(file.format).unwrap_or_default(),
        output: common.output.or(file.output),
    }))
}

/// Evaluates the configured point or sweep.
pub fn evaluate(cfg: &RunConfig) -> Result<Vec<Row>, CliError> {
    let rows = match &cfg.sweep {
        Some(spec) => report::run_sweep(cfg.params, spec, cfg.steps, cfg.certify)?,
        None => vec![Row::evaluate(cfg.params, None, cfg.steps, cfg.certify)?],
    };
    Ok(rows)
}

pub fn render(rows: &[Row], format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => Ok(report::to_csv(rows)?),
        Format::Json => Ok(report::to_json(rows)),
    }
}

fn emit(text: &str, output: &Option<PathBuf>) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::usage(format!("cannot write output: {e}")))
        }
    }
}

fn run_selftest(format: Format) -> i32 {
    let checks = selftest::run_all();
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&checks).expect("checks serialize") + "\n",
        Format::Csv => {
            let mut s = String::from("check,passed,value,tolerance\n");
            for c in &checks {
                s += &format!("{},{},{},{}\n", c.name, c.passed, report::num(c.value), report::num(c.tolerance));
            }
            s
        }
    };
    if let Err(e) = emit(&text, &None) {
        eprintln!("qsl-ibie: {e}");
        return EXIT_USAGE;
    }
    if checks.iter().all(|c| c.passed) {
        EXIT_OK
    } else {
        EXIT_USAGE
    }
}

/// Runs the tool and returns the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_config(args).and_then(|cmd| match cmd {
        Command::Selftest(format) => Ok(run_selftest(format)),
        Command::Run(cfg) => {
            let rows = evaluate(&cfg)?;
            emit(&render(&rows, cfg.format)?, &cfg.output)?;
            Ok(EXIT_OK)
        }
    });
    match result {
        Ok(code) => code,
        Err(e) if e.code == EXIT_OK => {
            print!("{}", e.message);
            EXIT_OK
        }
        Err(e) => {
            let msg = e.message.trim_end();
            if e.code == EXIT_USAGE && msg.starts_with("error:") {
                eprintln!("{msg}");
            } else {
                eprintln!("qsl-ibie: {msg}");
            }
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> RunConfig {
        let mut v = vec!["qsl-ibie"];
        v.extend_from_slice(args);
        match parse_config(v).unwrap() {
            Command::Run(c) => c,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stirap_flags_map_directly() {
        let c = run(&["stirap", "--delta", "0.5", "--epsilon", "0.1", "--t-final", "10"]);
        assert_eq!(c.params, ModelParams::Stirap(StirapParams::new(0.5, 0.1, 10.0).unwrap()));
        assert_eq!((c.steps, c.certify, c.format), (DEFAULT_STEPS, false, Format::Csv));
    }

    #[test]
    fn fig1_configuration() {
        let c = run(&[
            "anneal", "--n", "100", "--j", "1", "--h", "1", "--gamma-field", "1", "--eps-beta", "0.01", "--sweep",
            "eps_gamma:0.02:1.5707:64",
        ]);
        let ModelParams::Anneal(p) = c.params else { panic!() };
        assert_eq!((p.n_qubits, p.coupling, p.longitudinal, p.eps_beta), (100, 1.0, 1.0, 0.01));
        assert_eq!(c.sweep.unwrap().count, 64);
    }

    #[test]
    fn usage_errors() {
        for args in [
            vec!["qsl-ibie", "anneal", "--eps-gamma", "0"],
            vec!["qsl-ibie", "anneal", "--bogus", "1"],
            vec!["qsl-ibie", "stirap", "--epsilon", "1.0"],
            vec!["qsl-ibie", "stirap", "--sweep", "n:1:2:3"],
            vec!["qsl-ibie", "stirap", "--sweep", "delta:0:1:1"],
            vec!["qsl-ibie", "anneal", "--config", "/nonexistent/cfg.toml"],
        ] {
            let e = parse_config(args.clone()).unwrap_err();
            assert_eq!(e.code, EXIT_USAGE, "{args:?}: {e}");
        }
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::ScheduleSingularity { time: 1.0, reason: "x".into() }).code, EXIT_SINGULAR);
        let v = Error::CertificationViolation {
            true_overlap: 0.1,
            lower_bound: 0.5,
            margin: -0.4,
        };
        assert_eq!(CliError::from(v).code, EXIT_VIOLATION);
    }
}
