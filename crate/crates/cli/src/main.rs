//! `petzstab` command-line front end.
//!
//! Exit codes: 0 on success, 2 when input fails to parse or validate, 3 on a
//! numerical failure or when a sweep records a violation. Errors are reported
//! on stderr as `{"error": {"kind": ..., "message": ...}}`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use petzstab::harness::{
    run_oracle, run_ssa, run_sweep, AlgebraSource, InstanceReport, OracleConfig, Profile, RankPolicy, SsaConfig,
    SweepConfig,
};
use petzstab::io::{read_algebra, read_algebra_spec, read_density, read_tolerances, write_atomic, MatrixJson};
use petzstab::recovery::{PairContext, RecoveryContext};
use petzstab::rng::CounterRng;
use petzstab::structure::build_structure;
use petzstab::{gns, Error, Result, Tolerances};

#[derive(Parser)]
#[command(name = "petzstab", version, about = "Stability of the data processing inequality for conditional expectations")]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON file overriding any subset of the numerical tolerances.
    #[arg(long, global = true, value_name = "FILE")]
    tol_overrides: Option<PathBuf>,
    /// Worker threads for sweeps (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output file; written atomically. Defaults to stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PairFiles {
    #[arg(long, value_name = "FILE")]
    rho: PathBuf,
    #[arg(long, value_name = "FILE")]
    sigma: PathBuf,
    #[arg(long, value_name = "FILE")]
    algebra: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Gap, every stability bound and the equality diagnostics for one pair.
    Check {
        #[command(flatten)]
        files: PairFiles,
        /// Also evaluate the resolvent gap identity on the t-grid.
        #[arg(long)]
        identities: bool,
    },
    /// Seeded ensemble sweep written as CSV.
    Sweep {
        #[arg(long)]
        dim: usize,
        /// Profile name (diagonal, tensor_factor, random_two_generator) or an algebra JSON file.
        #[arg(long)]
        algebra: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// `full` or a rank k; reduced-rank states are mixed with a small multiple of the identity.
        #[arg(long, default_value = "full")]
        rank: String,
        #[arg(long)]
        identities: bool,
        /// t-grid for the identity check as MIN,MAX,POINTS.
        #[arg(long, value_name = "MIN,MAX,POINTS")]
        t_grid: Option<String>,
    },
    /// Fixed-point algebra, its block structure and a sampled equality state.
    Structure {
        #[arg(long, value_name = "FILE")]
        rho: PathBuf,
        #[arg(long, value_name = "FILE")]
        algebra: PathBuf,
    },
    /// Realness, modular invariance and conditional-expectation flags of the GNS projection.
    Takesaki {
        #[arg(long, value_name = "FILE")]
        rho: PathBuf,
        #[arg(long, value_name = "FILE")]
        algebra: PathBuf,
    },
    /// Strong subadditivity suite on random tripartite states.
    Ssa {
        /// Subsystem dimensions as D1,D2,D3.
        #[arg(long, default_value = "2,2,2")]
        dims: String,
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
    /// Quantum pipeline on diagonal inputs against the classical formulas.
    Oracle {
        #[arg(long)]
        omega: usize,
        /// Number of partition cells; random when omitted.
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

/// Successful run: the text to emit and whether a violation was recorded.
struct Output {
    text: String,
    violation: bool,
}

fn json_output(value: Value, violation: bool) -> Output {
    let mut text = serde_json::to_string_pretty(&value).expect("JSON values serialize");
    text.push('\n');
    Output { text, violation }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| Error::Parse(format!("bad {what} '{s}'"))))
        .collect()
}

fn apply_t_grid(spec: &str, tol: &mut Tolerances) -> Result<()> {
    let parts: Vec<&str> = spec.split(',').collect();
    let bad = || Error::Parse(format!("t-grid must be MIN,MAX,POINTS with 0 < MIN <= MAX, got '{spec}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && lo <= hi && hi.is_finite() && k >= 1) {
        return Err(bad());
    }
    tol.t_grid_min = lo;
    tol.t_grid_max = hi;
    tol.t_grid_points = k;
    Ok(())
}

fn algebra_source(arg: &str) -> Result<AlgebraSource> {
    match arg.parse::<Profile>() {
        Ok(p) => Ok(AlgebraSource::Profile(p)),
        Err(_) if Path::new(arg).exists() => Ok(AlgebraSource::Spec(read_algebra_spec(Path::new(arg))?)),
        Err(_) => Err(Error::Parse(format!(
            "'{arg}' is neither an algebra profile (diagonal, tensor_factor, random_two_generator) nor a file"
        ))),
    }
}

fn check(cli: &Cli, files: &PairFiles, identities: bool, tol: &Tolerances) -> Result<Output> {
    let rho = read_density(&files.rho, tol)?;
    let sigma = read_density(&files.sigma, tol)?;
    let alg = read_algebra(&files.algebra)?;
    let report = InstanceReport::evaluate(0, cli.seed, rho, sigma, &alg, identities, tol)?;
    let violation = report.is_violation(tol);
    let mut value = serde_json::to_value(report).expect("reports serialize");
    value["violation"] = json!(violation);
    Ok(json_output(value, violation))
}

fn structure(cli: &Cli, rho: &Path, algebra: &Path, tol: &Tolerances) -> Result<Output> {
    let rho = read_density(rho, tol)?;
    let alg = read_algebra(algebra)?;
    let mut rng = CounterRng::new(cli.seed);
    let ctx = RecoveryContext::new(rho, &alg, tol)?;
    let s = build_structure(&ctx, &mut rng)?;

    let blocks: Vec<Value> = s
        .profile()
        .iter()
        .zip(&s.gammas)
        .map(|(b, g)| {
            json!({
                "d_left": b.d_left,
                "d_right": b.d_right,
                "weight": b.weight,
                "gamma": MatrixJson::from_matrix(g.matrix()),
            })
        })
        .collect();
    let sigma = s.sample_equality_state(&mut rng, tol)?;
    let pair = PairContext::from_context(ctx, sigma.clone())?;
    let trivial = s.algebra.dim() == 1;
    let mut value = json!({
        "n": s.dim(),
        "algebra_dim": alg.dim(),
        "fixed_point_dim": s.algebra.dim(),
        "fixed_point_equals_algebra": s.algebra.dim() == alg.dim(),
        "blocks": blocks,
        "diagnostics": s.diagnostics,
        "equality_sample": {
            "sigma": MatrixJson::from_matrix(sigma.matrix()),
            "gap": pair.gap()?,
            "residuals": pair.petz_residuals()?,
        },
    });
    if trivial {
        value["message"] = json!("equality forces σ = ρ");
    }
    Ok(json_output(value, false))
}

fn takesaki(cli: &Cli, rho: &Path, algebra: &Path, tol: &Tolerances) -> Result<Output> {
    let rho = read_density(rho, tol)?;
    let alg = read_algebra(algebra)?;
    let mut rng = CounterRng::new(cli.seed);
    let report = gns::takesaki_check(&rho, &alg, &mut rng, tol)?;
    let mut value = serde_json::to_value(report).expect("reports serialize");
    value["conditional_expectation_flag"] = json!(report.conditional_expectation.flag());
    value["flags_agree"] = json!(report.flags_agree());
    Ok(json_output(value, false))
}

fn run(cli: &Cli) -> Result<Output> {
    let mut tol = match &cli.tol_overrides {
        Some(path) => read_tolerances(path)?,
        None => Tolerances::DEFAULT,
    };
    match &cli.command {
        Command::Check { files, identities } => check(cli, files, *identities, &tol),
        Command::Sweep {
            dim,
            algebra,
            samples,
            rank,
            identities,
            t_grid,
        } => {
            if let Some(spec) = t_grid {
                apply_t_grid(spec, &mut tol)?;
            }
            let mut config = SweepConfig::new(*dim, algebra_source(algebra)?, *samples, cli.seed);
            config.rank = rank.parse::<RankPolicy>()?;
            config.identities = *identities;
            config.tolerances = tol;
            let outcome = run_sweep(&config, cli.threads)?;
            Ok(Output {
                text: outcome.to_csv(),
                violation: outcome.summary.violations > 0,
            })
        }
        Command::Structure { rho, algebra } => structure(cli, rho, algebra, &tol),
        Command::Takesaki { rho, algebra } => takesaki(cli, rho, algebra, &tol),
        Command::Ssa { dims, samples } => {
            let d: Vec<usize> = parse_list(dims, "dims")?;
            let dims: [usize; 3] = d
                .try_into()
                .map_err(|_| Error::Parse(format!("dims must have three entries, got '{dims}'")))?;
            let config = SsaConfig {
                dims,
                samples: *samples,
                seed: cli.seed,
                tolerances: tol,
            };
            let outcome = run_ssa(&config, cli.threads)?;
            Ok(Output {
                text: outcome.to_csv(),
                violation: outcome.summary.violations > 0,
            })
        }
        Command::Oracle { omega, cells, samples } => {
            let config = OracleConfig {
                omega_size: *omega,
                cells: *cells,
                samples: *samples,
                seed: cli.seed,
                tolerances: tol,
            };
            let outcome = run_oracle(&config, cli.threads)?;
            Ok(Output {
                text: outcome.to_csv(),
                violation: outcome.summary.violations > 0,
            })
        }
    }
}

fn emit(cli: &Cli, out: &Output) -> Result<()> {
    match &cli.out {
        Some(path) => write_atomic(path, out.text.as_bytes()),
        None => {
            print!("{}", out.text);
            Ok(())
        }
    }
}

fn fail(e: &Error) -> ExitCode {
    let obj = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
    eprintln!("{obj}");
    ExitCode::from(if e.is_validation() { 2 } else { 3 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out = match run(&cli) {
        Ok(out) => out,
        Err(e) => return fail(&e),
    };
    if let Err(e) = emit(&cli, &out) {
        return fail(&e);
    }
    if out.violation {
        let obj = json!({ "error": { "kind": "violation", "message": "at least one instance violates a proven inequality" } });
        eprintln!("{obj}");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
