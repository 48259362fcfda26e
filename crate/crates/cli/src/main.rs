//! `gelshoot`: command-line access to the profile, stability, Green's
//! function, fixed-point, asymptotic and simulation routines.
//!
//! Exit codes: 0 success, 1 bad input, 2 numerical failure. Errors are
//! reported as a JSON object on stderr.

mod commands;
mod config;
mod output;
mod selftest;

use clap::{Parser, Subcommand, ValueEnum};
use config::RunConfig;
use gelshoot::exec::with_jobs;
use gelshoot::{Error, Result};
use output::{parse_format, render, Provenance};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "gelshoot", version, about = "Self-similar gelling profiles for the diagonal coagulation kernel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, ValueEnum)]
pub enum Command {
    /// Derived model parameters.
    Params,
    /// Profile H(y) and phi from the origin to --y-max.
    Profile,
    /// Long-time class of the profile for (gamma, b).
    Classify,
    /// Classify over a grid of b.
    ScanB,
    /// Bisection bracket of the critical b.
    BracketBbar,
    /// Stability boundary b*(gamma).
    BStar,
    /// Argument-principle winding count.
    Winding,
    /// Winding numbers over a grid of b.
    StabilityScan,
    /// Table of Q(xi).
    GreensQ,
    /// Compare the three routes to G(x, xi).
    GreensVerify,
    /// Picard iteration of the fixed-point map at (eps, eta).
    Fixedpoint,
    /// Root eps(eta) of the solvability functional.
    EpsOfEta,
    /// Critical b for large gamma with its profile.
    Bbar,
    /// gamma = 1 series profile continued numerically.
    Gamma1,
    /// Log-ratio of Psi against its Laplace prediction.
    PsiAsym,
    /// Laplace constants t*, W, D, U.
    Laplace,
    /// Far-field exponents and the critical perturbation.
    Tails,
    /// Dyadic-chain simulation towards gelation.
    Simulate,
    /// Curve data for the winding picture.
    Fig2,
    /// phi against z and H against y.
    Fig3,
}

#[derive(Debug, clap::Args)]
struct Opts {
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, global = true)]
    tol: Option<String>,
    #[arg(long, global = true)]
    y_max: Option<String>,
    /// lo:hi:n, or lo:hi:n:log for log spacing.
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for scans (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// csv or json; each subcommand has its own default.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Flat key=value file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run the example table of the subcommand's module.
    #[arg(long, global = true)]
    selftest: bool,
    /// Decimals printed by b-star.
    #[arg(long, global = true)]
    digits: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    eps: Option<String>,
    #[arg(long, global = true)]
    eta: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    a1: Option<String>,
    #[arg(long, global = true)]
    x: Option<String>,
    #[arg(long, global = true)]
    xi: Option<String>,
    #[arg(long, global = true)]
    x_end: Option<String>,
    #[arg(long, global = true)]
    chains: Option<String>,
    #[arg(long, global = true)]
    levels: Option<String>,
    #[arg(long, global = true)]
    t_end: Option<String>,
    /// monodisperse or exponential.
    #[arg(long, global = true)]
    init: Option<String>,
    /// Series terms or curve samples.
    #[arg(long, global = true)]
    terms: Option<String>,
}

impl Opts {
    fn overrides(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("gamma", &self.gamma),
            ("b", &self.b),
            ("tol", &self.tol),
            ("y_max", &self.y_max),
            ("grid", &self.grid),
            ("format", &self.format),
            ("digits", &self.digits),
            ("eps", &self.eps),
            ("eta", &self.eta),
            ("a1", &self.a1),
            ("x", &self.x),
            ("xi", &self.xi),
            ("x_end", &self.x_end),
            ("chains", &self.chains),
            ("levels", &self.levels),
            ("t_end", &self.t_end),
            ("init", &self.init),
            ("terms", &self.terms),
        ]
    }
}

fn name(cmd: Command) -> String {
    cmd.to_possible_value().expect("named").get_name().to_string()
}

fn dispatch(cmd: Command, c: &RunConfig) -> Result<output::Output> {
    use commands::*;
    match cmd {
        Command::Params => params_cmd(c),
        Command::Profile => profile(c),
        Command::Classify => classify_cmd(c),
        Command::ScanB => scan_b_cmd(c),
        Command::BracketBbar => bracket_cmd(c),
        Command::BStar => b_star_cmd(c),
        Command::Winding => winding_cmd(c),
        Command::StabilityScan => stability_scan_cmd(c),
        Command::GreensQ => greens_q(c),
        Command::GreensVerify => greens_verify(c),
        Command::Fixedpoint => fixedpoint_cmd(c),
        Command::EpsOfEta => eps_of_eta_cmd(c),
        Command::Bbar => bbar_cmd(c),
        Command::Gamma1 => gamma1_cmd(c),
        Command::PsiAsym => psi_asym(c),
        Command::Laplace => laplace_cmd(c),
        Command::Tails => tails_cmd(c),
        Command::Simulate => simulate_cmd(c),
        Command::Fig2 => fig2(c),
        Command::Fig3 => fig3(c),
    }
}

fn init_logging() -> Result<()> {
    let level = match std::env::var("GELSHOOT_LOG").as_deref() {
        Err(_) => log::LevelFilter::Warn,
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        Ok(o) => return Err(Error::domain(format!("GELSHOOT_LOG='{o}': expected quiet, info or debug"))),
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).target(env_logger::Target::Stderr).init();
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_logging()?;
    let mut cfg = match &cli.opts.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for (k, v) in cli.opts.overrides() {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    let fmt = parse_format(cfg.get("format"))?;
    let cmd_name = name(cli.command);
    if cli.opts.selftest {
        let (report, ok) = with_jobs(cli.opts.jobs, || selftest::run(cli.command));
        print!("{report}");
        return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) });
    }
    log::info!("gelshoot {} {cmd_name} {}", env!("CARGO_PKG_VERSION"), cfg.echo());
    let out = with_jobs(cli.opts.jobs, || dispatch(cli.command, &cfg))?;
    let text = render(&out, fmt, &Provenance { command: &cmd_name, config: &cfg })?;
    match &cli.opts.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::domain(format!("cannot write {}: {e}", p.display())))?,
        None => {
            use std::io::Write;
            let mut so = std::io::stdout().lock();
            // A closed pipe (e.g. `| head`) is not an error.
            if let Err(e) = so.write_all(text.as_bytes()).and_then(|_| so.flush()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(Error::domain(format!("cannot write to stdout: {e}")));
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", serde_json::json!({"error": kind, "message": message, "exit_code": code}));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { ExitCode::from(1) } else { ExitCode::SUCCESS };
            }
            return fail("Usage", e.to_string().trim(), 1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => fail(e.kind(), &e.to_string(), if e.is_domain() { 1 } else { 2 }),
    }
}
