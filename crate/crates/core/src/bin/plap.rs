use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use plap::report::{cmd_certify, cmd_cheeger, cmd_solve, parse_vertex_function, RunOptions, RunReport, DEFAULT_P_LIST};
use plap::{parse_graph, Error, Graph, MuMode};

/// Graph p-Laplacian eigenpairs, nodal domains and Cheeger certificates.
///
/// Exit codes: 0 all certified, 1 certificate failure, 2 usage or parse
/// error, 3 solver non-convergence.
#[derive(Parser)]
#[command(name = "plap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenpairs at one exponent.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        p: f64,
    },
    /// Spectra, nodal bounds, nodal spans and Cheeger certificates.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated exponents.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_P_LIST)]
        p: Vec<f64>,
        /// Random coefficient vectors per nodal span.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Also run the exact 1-Laplacian enumeration (n <= 6).
        #[arg(long)]
        one_laplacian: bool,
    },
    /// Multiway Cheeger constants h_1..h_k.
    Cheeger {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: usize,
        /// Vertex function for a sweep cut, one value per line.
        #[arg(long)]
        sweep: Option<PathBuf>,
        /// Exponent of the sweep cut.
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Spectral bisection above the exact cap.
        #[arg(long)]
        approx: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Edge-list file.
    graph: PathBuf,
    #[arg(long, value_enum, default_value_t = MuMode::Unit)]
    mu: MuMode,
    /// Initial continuation steps.
    #[arg(long, default_value_t = 16)]
    steps: usize,
    /// Target eigen-residual.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Smallest exponent reached by continuation.
    #[arg(long, default_value_t = 1.05)]
    p_min: f64,
    /// Seed for the random spot checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write spectra, or Cheeger constants for `cheeger`, as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Add wall-clock timings to the report.
    #[arg(long)]
    timings: bool,
}

impl Common {
    fn options(&self) -> RunOptions {
        let mut opts = RunOptions {
            seed: self.seed,
            timings: self.timings,
            ..RunOptions::default()
        };
        let c = &mut opts.spectrum.continuation;
        c.steps = self.steps;
        c.target_residual = self.tol;
        c.p_min = self.p_min;
        opts
    }

    fn graph(&self) -> Result<Graph, Error> {
        parse_graph(&read(&self.graph)?, self.mu)
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Solver(_) => 3,
        _ => 2,
    }
}

fn emit(report: &RunReport, common: &Common, cheeger_table: bool) -> Result<(), Error> {
    let json = report.to_json();
    match &common.json {
        Some(path) => fs::write(path, json + "\n")?,
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{json}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    if let Some(path) = &common.csv {
        let out = BufWriter::new(File::create(path)?);
        if cheeger_table {
            report.write_cheeger_csv(out)?;
        } else {
            report.write_spectra_csv(out)?;
        }
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in report.failures() {
        let at = match (c.p, c.k) {
            (Some(p), Some(k)) => format!(" (p = {p}, k = {k})"),
            (Some(p), None) => format!(" (p = {p})"),
            _ => String::new(),
        };
        eprintln!("FAILED {}{at}: {}", c.name, c.detail);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    let (report, common, table) = match &cli.command {
        Command::Solve { common, p } => (cmd_solve(&common.graph()?, *p, &common.options())?, common, false),
        Command::Certify {
            common,
            p,
            samples,
            one_laplacian,
        } => {
            let mut opts = common.options();
            opts.nodal_span_samples = *samples;
            opts.one_laplacian = *one_laplacian;
            (cmd_certify(&common.graph()?, p, &opts)?, common, false)
        }
        Command::Cheeger {
            common,
            k,
            sweep,
            p,
            approx,
        } => {
            let g = common.graph()?;
            let mut opts = common.options();
            opts.approx = *approx;
            let f = sweep.as_deref().map(read).transpose()?.map(|t| parse_vertex_function(&t)).transpose()?;
            let sweep = f.as_deref().map(|f| (f, *p));
            (cmd_cheeger(&g, *k, sweep, &opts)?, common, true)
        }
    };
    emit(&report, common, table)?;
    Ok(report.status.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
