//! Command-line front end. Exit codes: 0 when every verdict passes, 1 when a
//! verdict fails or a run aborts, 2 for configuration errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::Error;
use crate::experiments;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "bergtoep",
    version,
    about = "Bergman-space geometry, Carleson measures and Toeplitz operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimality, reproducing property, Jacobian identities, distance
    /// axioms and kernel comparability.
    VerifyGeometry(Flags),
    /// Lattice, Carleson and vanishing certificates, Berezin and averaging
    /// profiles, pointwise domination for one measure.
    CarlesonReport(Flags),
    /// Boundedness and compactness diagnostics for every catalog measure.
    EquivalenceReport(Flags),
    /// Truncated Toeplitz matrices, spectra and Berezin comparisons.
    ToeplitzSpectrum(Flags),
}

#[derive(Debug, clap::Args)]
struct Flags {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// disk, ball(n), bidisk or polydisk(n).
    #[arg(long)]
    domain: Option<String>,
    /// Catalog name such as power_vanishing(1), or measure JSON.
    #[arg(long)]
    measure: Option<String>,
    /// Metric ball radius r.
    #[arg(long)]
    radius: Option<f64>,
    /// Boundary margin delta.
    #[arg(long)]
    margin: Option<f64>,
    /// Quadrature resolution of the whole-domain rule
    #[arg(long)]
    resolution: Option<usize>,
    /// Comma-separated truncation degrees, increasing.
    #[arg(long, value_delimiter = ',')]
    degrees: Option<Vec<u32>>,
    /// Output directory (default: out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (default: 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Sample count (lattice certification, geometry suites).
    #[arg(long)]
    samples: Option<usize>,
    /// Number of interior test points
    #[arg(long)]
    test_points: Option<usize>,
}

impl Flags {
    fn config(self) -> Result<ExperimentConfig, Error> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        Ok(base.merged(ExperimentConfig {
            domain: self.domain,
            measure: self.measure.map(serde_json::Value::String),
            radius: self.radius,
            margin: self.margin,
            resolution: self.resolution,
            degrees: self.degrees,
            directions: None,
            out: self.out,
            seed: self.seed,
            samples: self.samples,
            test_points: self.test_points,
        }))
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::GridTooCoarse { .. } | Error::CandidateBudget { .. } => {
            EXIT_CONFIG
        }
        _ => EXIT_FAIL,
    }
}

/// Parses `args` (program name first), runs the experiment, writes the
/// outputs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_PASS
            };
        }
    };
    let (experiment, flags) = match cli.command {
        Command::VerifyGeometry(f) => (Experiment::VerifyGeometry, f),
        Command::CarlesonReport(f) => (Experiment::CarlesonReport, f),
        Command::EquivalenceReport(f) => (Experiment::EquivalenceReport, f),
        Command::ToeplitzSpectrum(f) => (Experiment::ToeplitzSpectrum, f),
    };
    let settings = match flags.config().and_then(|c| c.resolve(experiment)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcome = match experiments::run(&settings) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {experiment} aborted: {e}");
            return exit_code(&e);
        }
    };
    if let Err(e) = outcome.save(&settings.out) {
        eprintln!(
            "error: cannot write results to {}: {e}",
            settings.out.display()
        );
        return EXIT_FAIL;
    }
    for v in &outcome.report.verdicts {
        let status = if v.passed { "PASS" } else { "FAIL" };
        println!("{status} {} = {:e}", v.name, v.measured);
    }
    for c in &outcome.report.classifications {
        println!(
            "     {} {} [{}]: {}",
            c.subject, c.property, c.diagnostic, c.holds
        );
    }
    println!("wrote {}", settings.out.join("report.json").display());
    if outcome.report.passed {
        EXIT_PASS
    } else {
        for v in outcome.report.failures() {
            eprintln!("failed: {} ({})", v.name, v.detail);
        }
        EXIT_FAIL
    }
}
