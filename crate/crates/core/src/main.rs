use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use brightbeam::harness::{
    compare_methods, format_sig, load_scenario, oracle_check, run_scenario, sweep, write_csv, ReportRow, Scenario,
    SweepParam,
};
use brightbeam::{Error, Result};

const FIXTURES_ENV: &str = "BRIGHTBEAM_FIXTURES";
/// Agreement threshold of `validate`, in standard errors.
const ORACLE_SIGMAS: f64 = 3.0;

#[derive(Parser)]
#[command(name = "brightbeam", version, about = "Entanglement verification for bright squeezed beams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print its report.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        mc_samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Vary one parameter over a grid and write CSV.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// Output file; standard output when omitted or `-`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the bundled reference scenarios.
    Table1 {
        /// Directory with `scenario_*.cfg` files.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Compare analytic variances with Monte-Carlo estimates.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Simulate { scenario, mc_samples, seed, json } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(n) = mc_samples {
                s.mc_samples = n;
            }
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let row = run_scenario(&s)?;
            let stdout = io::stdout();
            let mut out = stdout.lock();
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&row.to_json()).expect("plain JSON"))?;
            } else {
                print_row(&mut out, &row)?;
            }
        }
        Command::Sweep { scenario, param, from, to, steps, out } => {
            let param: SweepParam = param.parse()?;
            let s = load_scenario(&scenario)?;
            let points = sweep(&s, param, from, to, steps)?;
            match out.as_deref() {
                Some(p) if p != Path::new("-") => {
                    let mut w = BufWriter::new(File::create(p)?);
                    write_csv(&mut w, &s, param, &points)?;
                    w.flush()?;
                }
                _ => write_csv(io::stdout().lock(), &s, param, &points)?,
            }
        }
        Command::Table1 { fixtures } => {
            let dir = fixtures_dir(fixtures);
            let scenarios = load_fixtures(&dir)?;
            print!("{}", compare_methods(&scenarios)?);
        }
        Command::Validate { scenario, mc_samples, seed } => {
            let s = load_scenario(&scenario)?;
            let checks = oracle_check(&s, mc_samples, seed)?;
            println!("{:<14} {:>10} {:>10} {:>10} {:>10}  agrees", "probe", "analytic", "estimate", "stderr", "z");
            let mut all = true;
            for c in &checks {
                let z = c.z_score();
                let ok = z.abs() <= ORACLE_SIGMAS;
                all &= ok;
                println!(
                    "{:<14} {:>10} {:>10} {:>10} {:>10}  {}",
                    c.name,
                    format_sig(c.analytic),
                    format_sig(c.estimate),
                    format_sig(c.stderr),
                    format_sig(z),
                    ok
                );
            }
            if !all {
                eprintln!("oracle disagrees by more than {ORACLE_SIGMAS} standard errors");
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_row(out: &mut impl Write, row: &ReportRow) -> io::Result<()> {
    let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), format_sig);
    writeln!(out, "method      {}", row.method)?;
    writeln!(out, "v_sq_plus   {}", opt(row.v_sq_plus))?;
    writeln!(out, "v_sq_minus  {}", opt(row.v_sq_minus))?;
    writeln!(out, "sum         {}", format_sig(row.sum))?;
    writeln!(out, "bound       {}", format_sig(row.bound))?;
    writeln!(out, "witnessed   {}", row.witnessed)?;
    if let Some([gx, gy]) = row.gain {
        writeln!(out, "gain        {} {}", format_sig(gx), format_sig(gy))?;
    }
    if let Some(mc) = row.mc {
        writeln!(out, "mc_sum      {} +- {}", format_sig(mc.sum), format_sig(mc.stderr))?;
    }
    for d in &row.detections {
        writeln!(
            out,
            "  {:<18} normalized {}  ({} dB)",
            d.name,
            format_sig(d.result.normalized),
            format_sig(d.result.rel_db)
        )?;
    }
    Ok(())
}

/// Flag, then environment, then the fixtures shipped with the crate.
fn fixtures_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(FIXTURES_ENV).map(PathBuf::from))
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"))
}

fn load_fixtures(dir: &Path) -> Result<Vec<(String, Scenario)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.starts_with("scenario_") && name.ends_with(".cfg")
        })
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().and_then(|n| n.to_str()).unwrap_or("?").trim_start_matches("scenario_").to_string();
            load_scenario(&p).map(|s| (name, s))
        })
        .collect()
}
