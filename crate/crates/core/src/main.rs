use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kam_core::factory::GeneratorSpec;
use kam_core::runner::{
    cmd_gen, cmd_run, cmd_verify, format_table, parse_eigen, parse_matrix, run_selftest, CliError, GenArgs,
};
use kam_core::torus_algebra::EigenSelector;

type Rows = Vec<Vec<i64>>;

#[derive(Parser)]
#[command(name = "kam", version, about = "KAM conjugacy engine for perturbed affine actions on tori")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scheme on a TOML experiment config.
    Run { config: PathBuf },
    /// Run the embedded invariant suites.
    Selftest,
    /// Generate a conjugated perturbation with its ground truth.
    Gen {
        /// Rows separated by ';', entries by ','.
        #[arg(long, default_value = "2,1;1,1", value_parser = parse_matrix)]
        matrix: Rows,
        /// largest | smallest | largest_abs | index:<i>
        #[arg(long, default_value = "largest", value_parser = parse_eigen)]
        eigen: EigenSelector,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        max_mode: u32,
        #[arg(long, default_value_t = 1e-3)]
        amplitude: f64,
        #[arg(long, default_value_t = 1.0)]
        decay: f64,
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
        #[arg(long, default_value_t = 64)]
        cutoff: u32,
        #[arg(long, default_value = "gen")]
        out: PathBuf,
    },
    /// Check a conjugacy against an action pair.
    Verify {
        pair: PathBuf,
        conjugacy: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {}", e.message);
    ExitCode::from(e.code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Command::Run { config } => match cmd_run(&config) {
            Ok(rep) => {
                let s = &rep.summary;
                if let Some(e) = &s.error {
                    eprintln!("error: {e}");
                }
                println!(
                    "converged={} steps={} eps0+eta0={:e} output={}",
                    s.converged,
                    s.steps,
                    s.final_norms.map_or(f64::NAN, |n| n.c0_total()),
                    rep.out_dir.display()
                );
                if let Some(v) = &s.v_star_physical {
                    println!("v* = {v:?}");
                }
                ExitCode::from(rep.code as u8)
            }
            Err(e) => fail(e),
        },
        Command::Selftest => {
            let rows = run_selftest();
            print!("{}", format_table(&rows));
            if rows.iter().all(|r| r.passed()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Gen { matrix, eigen, seed, max_mode, amplitude, decay, time_scale, cutoff, out } => {
            let spec = GeneratorSpec { seed, max_mode, amplitude, decay, time_scale };
            match cmd_gen(&GenArgs { matrix, eigen, spec, cutoff, out: out.clone() }) {
                Ok(m) => {
                    println!("wrote {} (relation residual {:e})", out.display(), m.relation_residual);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Verify { pair, conjugacy, tol } => match cmd_verify(&pair, &conjugacy, tol) {
            Ok(rep) => {
                println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
                if rep.pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                }
            }
            Err(e) => fail(e),
        },
    }
}
