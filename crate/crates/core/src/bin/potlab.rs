use clap::{Parser, Subcommand};
use potlab::scenario::{self, EXIT_CONFIG};
use potlab::{PlanarDomain, PolarGrid};
use std::path::PathBuf;
use std::process::ExitCode;

/// Potential-theory audits on disc domains: scenario runs and test-class
/// verification.
#[derive(Parser)]
#[command(name = "potlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write CSV reports.
    Run {
        /// Scenario file ([domain]/[grid]/[subject]/[family]/[audit]/[output]).
        scenario: PathBuf,
    },
    /// Classify a CSV-encoded grid field and print the verdict.
    VerifyClass {
        /// Field CSV with header `r,theta,value`, row-major by radius.
        field_csv: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long, default_value_t = 0.5)]
        r0: f64,
        /// Sup bound on the band eps <= |z| <= r0.
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 256)]
        n_r: usize,
        #[arg(long, default_value_t = 512)]
        n_theta: usize,
        /// Pole-exclusion radius; defaults to eps/8.
        #[arg(long)]
        delta: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { scenario } => match scenario::run(&scenario) {
            Ok(out) => {
                for l in &out.summary_lines {
                    println!("{l}");
                }
                out.exit
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_CONFIG
            }
        },
        Command::VerifyClass {
            field_csv,
            radius,
            eps,
            r0,
            b,
            n_r,
            n_theta,
            delta,
        } => {
            let res = (|| {
                let dom = PlanarDomain::new(radius, eps, r0)?;
                let grid =
                    PolarGrid::new(n_r, n_theta, delta.unwrap_or(dom.default_delta()), radius)?;
                scenario::verify_class(&field_csv, dom, grid, b)
            })();
            match res {
                Ok((verdict, code)) => {
                    println!("{verdict}");
                    code
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_CONFIG
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
