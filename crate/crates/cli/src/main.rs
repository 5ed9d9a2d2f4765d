use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sphere_covering::meanfield::Domain;
use sphere_covering::{Error, RadialProfile};
use sphere_covering_cli::commands::{self, Outcome, Source};
use sphere_covering_cli::json::render;
use sphere_covering_cli::suite::{self, SuiteConfig, DEFAULT_CORPUS_SIZE, DEFAULT_QUADRATURE_TOL};

const USAGE: u8 = 2;
const NUMERICAL: u8 = 1;

#[derive(Parser)]
#[command(name = "scov", version, about = "Bubble identities, Bol deficits, rearrangements and mean field thresholds")]
struct Cli {
    /// Add `<key>_over_pi` companions to every float in JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Masses, boundary integral and Bol deficit of one bubble.
    Bubble {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// The paired scale through the same boundary value, and the mass sum.
    Pair {
        #[arg(long)]
        lambda1: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Bol deficit of a profile CSV (`r,value`).
    Bol {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long)]
        radius: f64,
        /// Treat the profile as living on `|x| >= radius`.
        #[arg(long)]
        exterior: bool,
    },
    /// Rearrange a profile CSV onto a bubble measure.
    Rearrange {
        #[arg(long)]
        phi: PathBuf,
        /// `bubble`, `lebesgue`, or a density CSV (`r,value`) with respect to dx.
        #[arg(long)]
        source: String,
        /// Scale of a bubble source; defaults to the target scale.
        #[arg(long)]
        source_lambda: Option<f64>,
        #[arg(long)]
        target_lambda: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        /// Write the rearranged profile here as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Uniqueness and existence thresholds for conical orders.
    Thresholds {
        /// Comma-separated orders, e.g. `-0.5,-0.5,-0.5`; omit for none.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alphas: Vec<f64>,
        #[arg(long, value_enum)]
        domain: DomainArg,
    },
    /// Radial shooting for the disk or sphere problem at total mass rho.
    Shoot {
        #[arg(long, value_enum)]
        domain: DomainArg,
        /// Conical order at the origin (disk only).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        rho: f64,
        /// Also scan the center value for a second solution (sphere only).
        #[arg(long)]
        scan: bool,
        /// Write the profile here as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The Onsager symmetry record.
    Onsager {
        #[arg(long = "beta-over-8pi")]
        beta_over_8pi: f64,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
    },
    /// Run every verification suite and write one JSON report per suite.
    VerifyAll {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "scov-reports")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_QUADRATURE_TOL)]
        quadrature_tol: f64,
        /// Bol corpus draws per alpha.
        #[arg(long, default_value_t = DEFAULT_CORPUS_SIZE)]
        corpus_size: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Sphere,
    Disk,
}

impl From<DomainArg> for Domain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Sphere => Domain::Sphere,
            DomainArg::Disk => Domain::Disk,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::OrderOutOfRange { .. } | Error::RhoOutOfRange { .. } => USAGE,
            _ => NUMERICAL,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: USAGE,
        message: message.into(),
    }
}

fn read_profile(path: &Path) -> Result<RadialProfile, Failure> {
    let file = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    RadialProfile::read_csv(file).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_profile(profile: &RadialProfile, path: &Path) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    profile.write_csv(BufWriter::new(file)).map_err(Failure::from)
}

fn emit(outcome: Outcome, out: Option<&Path>, pretty: bool) -> Result<bool, Failure> {
    if let (Some(path), Some(profile)) = (out, &outcome.profile) {
        write_profile(profile, path)?;
    }
    print!("{}", render(&outcome.json, pretty));
    Ok(outcome.ok)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let pretty = cli.pretty;
    match cli.command {
        Command::Bubble { lambda, alpha, radius } => emit(commands::bubble(lambda, alpha, radius)?, None, pretty),
        Command::Pair { lambda1, alpha, radius } => emit(commands::pair(lambda1, alpha, radius)?, None, pretty),
        Command::Bol {
            profile,
            alpha,
            radius,
            exterior,
        } => {
            let psi = read_profile(&profile)?;
            emit(commands::bol(&psi, alpha, radius, exterior)?, None, pretty)
        }
        Command::Rearrange {
            phi,
            source,
            source_lambda,
            target_lambda,
            alpha,
            out,
        } => {
            let phi = read_profile(&phi)?;
            let source = match source.as_str() {
                "bubble" => Source::Bubble(source_lambda.unwrap_or(target_lambda)),
                "lebesgue" => Source::Lebesgue,
                path => Source::Density(read_profile(Path::new(path))?),
            };
            emit(commands::rearrange(&phi, &source, target_lambda, alpha)?, out.as_deref(), pretty)
        }
        Command::Thresholds { alphas, domain } => emit(commands::thresholds(&alphas, domain.into())?, None, pretty),
        Command::Shoot {
            domain,
            alpha,
            rho,
            scan,
            out,
        } => {
            let outcome = match domain {
                DomainArg::Disk => {
                    if scan {
                        return Err(usage("--scan applies to the sphere only"));
                    }
                    commands::shoot_disk(alpha.unwrap_or(0.0), rho)?
                }
                DomainArg::Sphere => {
                    if alpha.is_some_and(|a| a != 0.0) {
                        return Err(usage("the sphere problem takes no conical order"));
                    }
                    commands::shoot_sphere(rho, scan)?
                }
            };
            emit(outcome, out.as_deref(), pretty)
        }
        Command::Onsager { beta_over_8pi, gamma } => emit(commands::onsager(beta_over_8pi, gamma)?, None, pretty),
        Command::VerifyAll {
            seed,
            out,
            quadrature_tol,
            corpus_size,
        } => {
            let config = SuiteConfig {
                seed,
                quadrature_tol,
                corpus_size,
                ..SuiteConfig::default()
            };
            let outcome = suite::run_suite(&config);
            suite::write_reports(&outcome, &out, pretty).map_err(|e| Failure {
                code: NUMERICAL,
                message: format!("{}: {e}", out.display()),
            })?;
            print!("{}", render(&outcome.summary(), pretty));
            if let Some(first) = outcome.first_failure() {
                eprint!("{}", render(first, pretty));
            }
            Ok(outcome.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(NUMERICAL),
        Err(f) => {
            eprintln!("scov: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
