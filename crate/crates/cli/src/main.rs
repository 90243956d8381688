use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use schottky_core::igusa::schottky_igusa;
use schottky_core::io::{MatrixFile, ReportFile};
use schottky_core::siegel::{siegel_reduce, SymplecticTransform};
use schottky_core::solver::{precision_sweep, schottky_test, SolverConfig, StartStrategy};
use schottky_core::{zoo, Error, RiemannMatrix};

#[derive(Parser)]
#[command(name = "schottky", version, about = "Numerical test for the Jacobi locus of Riemann matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a matrix lies in the Jacobi locus (exit 0 yes, 1 no, 2 input error).
    Check(CheckArgs),
    /// Siegel-reduce a matrix and report the transform.
    Reduce(ReduceArgs),
    /// Evaluate the genus-4 Schottky-Igusa form (exit 0 if |Σ| <= delta, else 1).
    Igusa(IgusaArgs),
    /// Smallest residual against the size of a perturbation, written as CSV.
    Sweep(SweepArgs),
    /// List the built-in matrices, or print one as a matrix file.
    Zoo(ZooArgs),
}

#[derive(Args)]
struct Source {
    /// JSON matrix file.
    matrix: Option<PathBuf>,
    /// Built-in matrix instead of a file (see `schottky zoo`).
    #[arg(long, conflicts_with = "matrix")]
    zoo: Option<String>,
    /// Parameter of the `rm_tau` family, e.g. `1+1i`.
    #[arg(long, default_value = "1+1i", value_parser = parse_complex)]
    tau: Complex64,
    /// Add `s * diag[w]` with the default weights for the genus.
    #[arg(long, allow_hyphen_values = true)]
    perturb_diag: Option<f64>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    ell0: f64,
    #[arg(long, default_value_t = 0.1)]
    dell: f64,
    #[arg(long, default_value_t = 0.5)]
    ellmax: f64,
    #[arg(long, default_value_t = 100)]
    nmax: usize,
    #[arg(long, default_value = "half_period", value_parser = parse_strategy)]
    strategy: StartStrategy,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            delta: self.delta,
            ell0: self.ell0,
            d_ell: self.dell,
            ell_max: self.ellmax,
            n_max: self.nmax,
            start_strategy: self.strategy,
            seed: self.seed,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct IgusaArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 1e-10)]
    delta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Perturbation {
    /// `B + s (M + iM)` with `M_jk = (j+k)/5`.
    Symmetric,
    /// `B + s diag[w]`.
    Diag,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "rm_tau")]
    zoo: String,
    #[arg(long, default_value = "1+1i", value_parser = parse_complex)]
    tau: Complex64,
    /// Comma-separated values, or `log:A:B` for 10^A, 10^(A+1), …, 10^B.
    #[arg(long, allow_hyphen_values = true)]
    s_grid: String,
    #[arg(long, value_enum, default_value_t = Perturbation::Symmetric)]
    perturbation: Perturbation,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ZooArgs {
    name: Option<String>,
    #[arg(long, default_value = "1+1i", value_parser = parse_complex)]
    tau: Complex64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    s.replace(' ', "")
        .parse::<Complex64>()
        .map_err(|_| format!("not a complex number: {s:?}"))
}

fn parse_strategy(s: &str) -> Result<StartStrategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_grid(s: &str) -> anyhow::Result<Vec<f64>> {
    if let Some(rest) = s.strip_prefix("log:") {
        let (a, b) = rest.split_once(':').ok_or_else(|| anyhow!("expected log:A:B, got {s:?}"))?;
        let a: i32 = a.trim().parse().with_context(|| format!("bad exponent in {s:?}"))?;
        let b: i32 = b.trim().parse().with_context(|| format!("bad exponent in {s:?}"))?;
        if a > b {
            bail!("empty grid {s:?}");
        }
        return Ok((a..=b).map(|k| 10f64.powi(k)).collect());
    }
    let vals = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad grid value {t:?}")))
        .collect::<anyhow::Result<Vec<f64>>>()?;
    if vals.is_empty() || vals.iter().any(|v| !v.is_finite()) {
        bail!("grid must contain finite numbers");
    }
    Ok(vals)
}

fn load(source: &Source) -> anyhow::Result<MatrixFile> {
    let mut file = match (&source.matrix, &source.zoo) {
        (Some(path), None) => MatrixFile::read(path).with_context(|| format!("reading {}", path.display()))?,
        (None, Some(name)) => MatrixFile::from_record(&zoo::by_name(name, source.tau)?),
        _ => bail!("give a matrix file or --zoo NAME"),
    };
    if let Some(s) = source.perturb_diag {
        let b = zoo::diagonal_perturbation(&file.to_matrix()?, s, None)?;
        let name = file.name.take().map(|n| format!("{n}+diag({s})"));
        file = MatrixFile::from_matrix(&b, name, file.stated_accuracy);
    }
    file.to_matrix()?;
    Ok(file)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)
        .with_context(|| format!("writing {}", path.display()))
}

fn check(args: &CheckArgs) -> anyhow::Result<ExitCode> {
    let input = load(&args.source)?;
    let b = input.to_matrix()?;
    let config = args.solver.config();
    let t0 = Instant::now();
    let verdict = schottky_test(&b, &config)?;
    let wall_time_s = t0.elapsed().as_secs_f64();
    println!("verdict: {}", if verdict.in_locus { "in_locus" } else { "not_in_locus" });
    println!("precision: {:e}", verdict.precision);
    println!("delta_min: {:e}", verdict.best_delta);
    println!("best_residual: {:e}", verdict.best_residual);
    println!("iterations: {}", verdict.iterations());
    println!("starts: {}", verdict.traces.len());
    let code = if verdict.in_locus { 0 } else { 1 };
    if let Some(path) = &args.json {
        let report = ReportFile {
            input,
            config,
            verdict,
            wall_time_s,
        };
        report.write(path)?;
    }
    Ok(ExitCode::from(code))
}

#[derive(Serialize)]
struct ReduceReport {
    input: MatrixFile,
    reduced: MatrixFile,
    transform: SymplecticTransform,
    input_ymin: f64,
    output_ymin: f64,
    iterations: usize,
}

fn reduce(args: &ReduceArgs) -> anyhow::Result<ExitCode> {
    let input = load(&args.source)?;
    let (red, rep) = siegel_reduce(&input.to_matrix()?)?;
    println!("y_min before: {:.12}", rep.input_ymin);
    println!("y_min after: {:.12}", rep.output_ymin);
    println!("iterations: {}", rep.iterations);
    let out = ReduceReport {
        reduced: MatrixFile::from_matrix(&red, input.name.clone(), input.stated_accuracy),
        input,
        transform: rep.transform,
        input_ymin: rep.input_ymin,
        output_ymin: rep.output_ymin,
        iterations: rep.iterations,
    };
    match &args.json {
        Some(path) => write_json(path, &out)?,
        None => println!("{}", serde_json::to_string_pretty(&out.reduced)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn igusa(args: &IgusaArgs) -> anyhow::Result<ExitCode> {
    let b = load(&args.source)?.to_matrix()?;
    let sigma = schottky_igusa(&b)?;
    println!("sigma: {:e}{:+e}i", sigma.re, sigma.im);
    println!("abs_sigma: {:e}", sigma.norm());
    println!("precision: {:e}", args.delta);
    Ok(ExitCode::from(if sigma.norm() <= args.delta { 0 } else { 1 }))
}

fn sweep(args: &SweepArgs) -> anyhow::Result<ExitCode> {
    let grid = parse_grid(&args.s_grid)?;
    let base = zoo::by_name(&args.zoo, args.tau)?.matrix;
    let cfg = args.solver.config();
    let m = zoo::symmetric_perturbation_matrix(base.genus());
    let rows = precision_sweep(
        |s| match args.perturbation {
            Perturbation::Symmetric => {
                let mc = m.map(|x| Complex64::new(s * x, s * x));
                RiemannMatrix::new(base.matrix() + mc)
            }
            Perturbation::Diag => zoo::diagonal_perturbation(&base, s, None),
        },
        &grid,
        &cfg,
    )?;
    let sink: Box<dyn std::io::Write> = match &args.csv {
        Some(path) => Box::new(
            std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        ),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn zoo_cmd(args: &ZooArgs) -> anyhow::Result<ExitCode> {
    let Some(name) = &args.name else {
        for n in zoo::EMBEDDED_NAMES {
            let r = zoo::embedded(n)?;
            println!("{n}\tg={}\tprinted", r.genus);
        }
        println!("rm_tau\tg=4\texact (--tau)");
        println!("hyperelliptic<g>\tg>=1\texact");
        return Ok(ExitCode::SUCCESS);
    };
    let file = MatrixFile::from_record(&zoo::by_name(name, args.tau)?);
    match &args.out {
        Some(path) => file.write(path)?,
        None => println!("{}", serde_json::to_string_pretty(&file)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SCHOTTKY_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow!("SCHOTTKY_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            bail!("SCHOTTKY_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = init_threads().and_then(|_| match &cli.command {
        Command::Check(a) => check(a),
        Command::Reduce(a) => reduce(a),
        Command::Igusa(a) => igusa(a),
        Command::Sweep(a) => sweep(a),
        Command::Zoo(a) => zoo_cmd(a),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
