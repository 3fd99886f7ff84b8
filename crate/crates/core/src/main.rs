use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use twistlab::config::{RunConfig, THREADS_ENV};
use twistlab::diophantine::{find_approx_sequence, from_quotients, ApproxConfig, MAX_DEPTH};
use twistlab::experiments::density::{AbelianLattice, DensityConfig, WalkMode, DEFAULT_GRID};
use twistlab::experiments::{check_suite_with, lemma_experiment, lemma_with_retry, orbit_density, LemmaConfig};
use twistlab::io::{output_paths, write_json, write_with, Sidecar};
use twistlab::mapping_class::{commutator_element, StandardTwists, TwistCurve};
use twistlab::surface::{self, fingerprint, has_dense_image, is_irreducible, SurfaceRep};
use twistlab::{CurveHandle, Error, MappingClass, Word};

const EXIT_USAGE: u8 = 64;
const EXIT_DOMAIN: u8 = 65;
const EXIT_NO_INPUT: u8 = 66;
const EXIT_IO: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "twistlab",
    version,
    about = "Twist flows, Dehn twists and orbit experiments on SU(2) character varieties"
)]
struct Cli {
    /// Surface genus (defaults to 2, or to the genus of --rep).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(2..=32))]
    genus: Option<u32>,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads; also the number of walk chains.
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=1024))]
    threads: u32,

    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Tolerance override, e.g. `--tol crucial=1e-8` (repeatable).
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a representation from Haar measure on the relator variety.
    Sample(SampleArgs),
    /// Convergence of tau_gamma^q tau_delta^-q towards tau_gamma.
    Lemma(LemmaArgs),
    /// Random-walk occupancy of the (theta, theta) square.
    Density(DensityArgs),
    /// Denominators q with small q||q alpha|| and ||(q-1) beta||.
    Dioph(DiophArgs),
    /// Run the invariant suite.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Output file (default: <out-dir>/rep.json).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write the trace fingerprint as CSV.
    #[arg(long)]
    fingerprint: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LemmaArgs {
    /// Representation file; sampled from --seed when absent.
    #[arg(long)]
    rep: Option<PathBuf>,
    #[arg(long, default_value = "a1")]
    gamma: String,
    #[arg(long, default_value = "Tb1")]
    phi: String,
    #[arg(long, default_value_t = 10_000_000)]
    qmax: u64,
    #[arg(long, default_value_t = 0.05)]
    kh: f64,
    #[arg(long, default_value_t = 0.05)]
    hl: f64,
    /// When sampling, move to the next seed until this many rows appear.
    #[arg(long, default_value_t = 1)]
    min_rows: usize,
    #[arg(long, default_value_t = 100_000)]
    max_retries: u64,
    /// Output file stem inside --out-dir.
    #[arg(short, long, default_value = "lemma")]
    output: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Full,
    Normal,
}

#[derive(Args, Debug)]
struct DensityArgs {
    #[arg(long)]
    rep: Option<PathBuf>,
    /// Start from an exact abelian representation with angles in (pi / N) Z.
    #[arg(long, value_name = "N", conflicts_with = "rep")]
    abelian: Option<u32>,
    #[arg(long, default_value_t = 100_000)]
    steps: u64,
    #[arg(long, value_enum, default_value_t = Mode::Full)]
    mode: Mode,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// Two curve words, comma separated.
    #[arg(long, default_value = "a1,b1")]
    observables: String,
    /// Normal-closure mode: the witness is tau_gamma^n phi tau_gamma^-n phi^-1.
    #[arg(long, default_value = "Tb1")]
    phi: String,
    #[arg(long, default_value = "a1")]
    gamma: String,
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(short, long, default_value = "density")]
    output: String,
}

#[derive(Args, Debug)]
struct DiophArgs {
    #[arg(long, conflicts_with = "quotients", required_unless_present = "quotients")]
    alpha: Option<f64>,
    /// Continued fraction quotients; a trailing `...` repeats them up to 40 terms.
    #[arg(long)]
    quotients: Option<String>,
    /// Defaults to alpha.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 10_000_000)]
    qmax: u64,
    #[arg(long, default_value_t = 0.05)]
    kh: f64,
    #[arg(long, default_value_t = 0.05)]
    hl: f64,
    /// Also scan every q up to min(qmax, 10^6).
    #[arg(long)]
    exhaustive: bool,
    #[arg(short, long, default_value = "dioph")]
    output: String,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(short, long, default_value = "check")]
    output: String,
}

enum Failure {
    Lib(Error),
    MissingInput(PathBuf),
    ChecksFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::Parse(_) | Error::GenusMismatch { .. } => EXIT_USAGE,
        Error::SingularAxis { .. }
        | Error::SingularFlow { .. }
        | Error::Domain(_)
        | Error::Normalization(_)
        | Error::CommutatorRetries(_)
        | Error::Json(_) => EXIT_DOMAIN,
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::MissingInput(p)) => {
            eprintln!("error: input file {} does not exist", p.display());
            ExitCode::from(EXIT_NO_INPUT)
        }
        Err(Failure::ChecksFailed) => ExitCode::from(EXIT_CHECK_FAILED),
    }
}

fn base_config(cli: &Cli) -> std::result::Result<RunConfig, Failure> {
    let mut cfg = RunConfig {
        genus: cli.genus.unwrap_or(2) as usize,
        seed: cli.seed,
        workers: cli.threads as usize,
        ..Default::default()
    };
    for t in &cli.tol {
        cfg.set_tolerance(t)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CmdResult {
    let mut cfg = base_config(&cli)?;
    // a second initialization (e.g. in tests) keeps the existing pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
    std::fs::create_dir_all(&cli.out_dir).map_err(Error::from)?;
    match &cli.command {
        Command::Sample(a) => cmd_sample(&cli, &mut cfg, a),
        Command::Lemma(a) => cmd_lemma(&cli, &mut cfg, a),
        Command::Density(a) => cmd_density(&cli, &mut cfg, a),
        Command::Dioph(a) => cmd_dioph(&cli, &mut cfg, a),
        Command::Check(a) => cmd_check(&cli, &mut cfg, a),
    }
}

/// Loads `path`, reconciling its genus with `--genus`.
fn load_rep(cli: &Cli, cfg: &mut RunConfig, path: &Path) -> std::result::Result<SurfaceRep, Failure> {
    if !path.exists() {
        return Err(Failure::MissingInput(path.to_path_buf()));
    }
    let rep = SurfaceRep::load(path)?;
    if let Some(g) = cli.genus {
        if g as usize != rep.genus() {
            return Err(Error::GenusMismatch { expected: g as usize, found: rep.genus() }.into());
        }
    }
    cfg.genus = rep.genus();
    Ok(rep)
}

fn cmd_sample(cli: &Cli, cfg: &mut RunConfig, a: &SampleArgs) -> CmdResult {
    cfg.validate()?;
    let rep = surface::sample_seeded(cfg.genus, cfg.seed)?;
    let path = a.output.clone().unwrap_or_else(|| cli.out_dir.join("rep.json"));
    rep.save(&path)?;
    if let Some(fp) = &a.fingerprint {
        write_with(fp, |w| fingerprint(&rep).write_csv(w))?;
    }
    println!("wrote {}", path.display());
    println!("relator defect: {:.3e}", rep.relator_defect());
    println!("irreducible: {}", is_irreducible(&rep, 1e-6));
    println!("dense image: {}", has_dense_image(&rep, 200, 1e-6));
    Ok(())
}

fn cmd_lemma(cli: &Cli, cfg: &mut RunConfig, a: &LemmaArgs) -> CmdResult {
    cfg.q_max = a.qmax;
    cfg.kh_threshold = a.kh;
    cfg.hl_threshold = a.hl;
    let rep = match &a.rep {
        Some(p) => Some(load_rep(cli, cfg, p)?),
        None => None,
    };
    cfg.validate()?;
    let gamma = CurveHandle::parse(&a.gamma, cfg.genus)?;
    let phi = MappingClass::parse(&a.phi, cfg.genus)?;
    let lcfg = LemmaConfig {
        q_max: cfg.q_max,
        kh_threshold: cfg.kh_threshold,
        hl_threshold: cfg.hl_threshold,
        ..Default::default()
    };
    let (report, retries) = match &rep {
        Some(r) => (lemma_experiment(r, &gamma, &phi, &lcfg)?, 0),
        None => lemma_with_retry(cfg.genus, cfg.seed, &gamma, &phi, &lcfg, a.min_rows, a.max_retries)?,
    };
    let (csv, side) = output_paths(&cli.out_dir, &a.output);
    write_with(&csv, |w| report.write_csv(w))?;
    let fit = report.fit();
    let final_d = report.final_d();
    let summary = json!({
        "gamma": report.gamma,
        "phi": report.phi,
        "delta": report.delta,
        "delta_word": report.delta_word,
        "alpha": report.alpha,
        "beta": report.beta,
        "period": report.period,
        "degenerate": report.degenerate,
        "rep_seed": report.rep_seed,
        "retries": retries,
        "candidates": report.candidates,
        "kh_floor": report.kh_floor,
        "hl_floor": report.hl_floor,
        "rows": report.rows.len(),
        "monotone_in_s": report.monotone_in_s(),
        "final_d": final_d,
        "final_d_below_1e-2": final_d.is_some_and(|d| d <= 1e-2),
        "fit": fit,
        "bound_holds": fit.is_some_and(|f| report.bound_holds(f.envelope)),
        "fmap_max_gap": report.fmap_max_gap,
    });
    let seeds = report.rep_seed.into_iter().collect();
    write_json(&side, &Sidecar::new("lemma", cfg, seeds, summary))?;
    println!("gamma {} delta {} alpha {:.12} beta {:.12}", report.gamma, report.delta, report.alpha, report.beta);
    if report.degenerate {
        println!("degenerate pair: delta is gamma up to orientation and conjugacy");
    }
    if let Some(s) = report.rep_seed {
        println!("rep seed {s} after {retries} retries");
    }
    println!("{} rows, kh floor {:.3e}", report.rows.len(), report.kh_floor);
    for r in report.rows_by_s() {
        println!("q {:>12}  s {:.4e}  d {:.4e}", r.q, r.s, r.d);
    }
    println!("wrote {} and {}", csv.display(), side.display());
    Ok(())
}

fn parse_observables(s: &str) -> Result<(Word, Word), Error> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Parse(format!("expected two comma-separated curve words, got '{s}'")));
    }
    Ok((parts[0].trim().parse()?, parts[1].trim().parse()?))
}

fn parse_twist_curve(s: &str, genus: usize) -> Result<TwistCurve, Error> {
    let m = MappingClass::parse(&format!("T{}", s.trim()), genus)?;
    match m.twists() {
        [t] if !t.inverse => Ok(t.curve),
        _ => Err(Error::Parse(format!("'{s}' is not a twist curve"))),
    }
}

fn cmd_density(cli: &Cli, cfg: &mut RunConfig, a: &DensityArgs) -> CmdResult {
    let rep = match &a.rep {
        Some(p) => Some(load_rep(cli, cfg, p)?),
        None => None,
    };
    cfg.validate()?;
    let mode = match a.mode {
        Mode::Full => WalkMode::Full,
        Mode::Normal => {
            let phi = MappingClass::parse(&a.phi, cfg.genus)?;
            let gamma = parse_twist_curve(&a.gamma, cfg.genus)?;
            WalkMode::NormalClosure(commutator_element(&phi, gamma, a.n)?)
        }
    };
    let dcfg = DensityConfig {
        mode,
        steps: a.steps,
        grid: a.grid,
        observables: parse_observables(&a.observables)?,
        seed: cfg.seed,
        chains: cfg.workers,
    };
    let (report, start) = match (a.abelian, rep) {
        (Some(n), _) => {
            let lat = AbelianLattice::random(cfg.genus, n, cfg.seed)?;
            (orbit_density(&lat, &dcfg)?, format!("abelian lattice, multiples of pi/{n}: {:?}", lat.multiples()))
        }
        (None, Some(r)) => (orbit_density(&r, &dcfg)?, "file".to_string()),
        (None, None) => {
            let r = surface::sample_seeded(cfg.genus, cfg.seed)?;
            (orbit_density(&r, &dcfg)?, format!("sampled from seed {}", cfg.seed))
        }
    };
    let (csv, side) = output_paths(&cli.out_dir, &a.output);
    write_with(&csv, |w| report.write_csv(w))?;
    let summary = json!({
        "start": start,
        "walk": report.walk,
        "observables": report.observables,
        "grid": report.grid,
        "chains": report.chains,
        "steps": report.steps,
        "final_occupancy": report.final_occupancy(),
        "skipped": report.checkpoints.last().map(|p| p.skipped),
    });
    write_json(&side, &Sidecar::new("density", cfg, vec![cfg.seed], summary))?;
    println!("{} steps, occupancy {:.4}", report.steps, report.final_occupancy());
    println!("wrote {} and {}", csv.display(), side.display());
    Ok(())
}

/// `1,2,3` or `1,1,...` (repeat the listed quotients up to the depth limit).
fn parse_quotients(s: &str) -> Result<Vec<u64>, Error> {
    let s = s.trim();
    let (body, repeat) = match s.strip_suffix("...") {
        Some(b) => (b.trim_end_matches([',', ' ']), true),
        None => (s, false),
    };
    let base: Vec<u64> = body
        .split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad quotient '{t}'"))))
        .collect::<Result<_, _>>()?;
    if base.is_empty() {
        return Err(Error::Parse("no quotients given".into()));
    }
    Ok(if repeat { base.iter().copied().cycle().take(MAX_DEPTH).collect() } else { base })
}

fn cmd_dioph(cli: &Cli, cfg: &mut RunConfig, a: &DiophArgs) -> CmdResult {
    cfg.q_max = a.qmax;
    cfg.kh_threshold = a.kh;
    cfg.hl_threshold = a.hl;
    cfg.validate()?;
    let alpha = match (&a.quotients, a.alpha) {
        (Some(q), _) => from_quotients(&parse_quotients(q)?)?,
        (None, Some(x)) => x,
        (None, None) => return Err(Error::InvalidInput("give --alpha or --quotients".into()).into()),
    };
    let beta = a.beta.unwrap_or(alpha);
    let acfg = ApproxConfig { q_max: a.qmax, kh_threshold: a.kh, hl_threshold: a.hl, exhaustive: a.exhaustive };
    let seq = find_approx_sequence(alpha, beta, &acfg)?;
    let (csv, side) = output_paths(&cli.out_dir, &a.output);
    write_with(&csv, |w| seq.write_csv(w))?;
    let summary = json!({
        "alpha": alpha,
        "beta": beta,
        "exhaustive": a.exhaustive,
        "entries": seq.entries.len(),
        "candidates": seq.candidates,
        "kh_floor": seq.kh_floor,
        "hl_floor": seq.hl_floor,
    });
    write_json(&side, &Sidecar::new("dioph", cfg, vec![], summary))?;
    println!("alpha {alpha:.17} beta {beta:.17}: {} entries (kh floor {:.3e})", seq.entries.len(), seq.kh_floor);
    println!("wrote {} and {}", csv.display(), side.display());
    Ok(())
}

fn cmd_check(cli: &Cli, cfg: &mut RunConfig, a: &CheckArgs) -> CmdResult {
    cfg.validate()?;
    let report = check_suite_with(&StandardTwists, cfg.genus, a.trials, cfg.seed, &cfg.tolerances)?;
    let (csv, side) = output_paths(&cli.out_dir, &a.output);
    write_with(&csv, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["check", "max_deviation", "tolerance", "pass"])?;
        for r in &report.checks {
            c.serialize((&r.name, r.max_deviation, r.tolerance, r.pass))?;
        }
        c.flush()?;
        Ok(())
    })?;
    let summary = json!({
        "trials": report.trials,
        "measured_period": report.measured_period,
        "all_pass": report.all_pass(),
        "checks": report.checks,
    });
    write_json(&side, &Sidecar::new("check", cfg, vec![cfg.seed], summary))?;
    for r in &report.checks {
        println!(
            "{:<32} {:>10.3e} <= {:<8.1e} {}",
            r.name,
            r.max_deviation,
            r.tolerance,
            if r.pass { "ok" } else { "FAIL" }
        );
    }
    match report.measured_period {
        Some(p) => println!("measured flow period on characters: {p}"),
        None => println!("measured flow period on characters: neither 1 nor 2"),
    }
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure::ChecksFailed)
    }
}
