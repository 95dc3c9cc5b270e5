//! Command-line front end for `cellmeasure`.

pub mod demo;
pub mod inputs;
pub mod spacetime;

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use cellmeasure::ca::parse_word;
use cellmeasure::cesaro::{cesaro_cylinder_estimate, convergence_diag, empirical_measure, sample_mu_c_approx};
use cellmeasure::entropy::{column_entropy, column_entropy_from_windows, entropy_rate_estimate, nats_to_bits};
use cellmeasure::gilman::{classify, estimate_ratio, ClassifyParams};
use cellmeasure::periodic::{density_check, find_periodic_points, PeriodicSearch};
use cellmeasure::cesaro::EmpiricalCylinderMeasure;
use cellmeasure::{RandomStream, WindowConfig};
use clap::{Args, Parser, Subcommand};

use crate::inputs::{check_alphabets, check_output, emit, resolve_measure, resolve_rule};
use crate::spacetime::Mode;

#[derive(Debug, Parser)]
#[command(name = "cellmeasure", version, about = "Exact simulation and Monte Carlo measure estimates for 1D cellular automata")]
pub struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the ratio μ(C_n(x) ∩ B_m^T(x)) / μ(C_n(x)) at sampled points x.
    Ratio(RatioArgs),
    /// Cesàro means of a cylinder, or the empirical measure on all length-L words.
    Cesaro(CesaroArgs),
    /// Column-word entropy trace.
    Entropy(EntropyArgs),
    /// Spatially periodic F-periodic points and their density in a support.
    Periodic(PeriodicArgs),
    /// Heuristic equicontinuity class, as JSON.
    Classify(ClassifyArgs),
    /// Space-time diagram as a binary PGM image.
    Spacetime(SpacetimeArgs),
    /// Reproduce the claims about Gilman's automaton F_s.
    DemoFs(DemoArgs),
}

#[derive(Debug, Args)]
pub struct Source {
    /// Rule: fs, identity:<k>, shift:<k>, eca:<code>, or a rule file.
    #[arg(long)]
    pub rule: String,
    /// Measure: bernoulli:<k>:<p..>, markov:<k>:<P..>, markov:<k>:<file>, or a measure file.
    #[arg(long)]
    pub measure: String,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RatioArgs {
    #[command(flatten)]
    pub source: Source,
    /// Half-width of the compared column.
    #[arg(long)]
    pub m: usize,
    /// Half-width of the conditioning cylinder; repeat for a grid.
    #[arg(long = "n", required = true)]
    pub n: Vec<usize>,
    /// Time horizon.
    #[arg(long = "T")]
    pub horizon: usize,
    /// Conditional samples per (x, n).
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    /// Reference points x drawn from the measure.
    #[arg(long, default_value_t = 1)]
    pub x_count: usize,
    /// CSV output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CesaroArgs {
    #[command(flatten)]
    pub source: Source,
    /// Cylinder word, one character per symbol; writes `t,per_time,cesaro`.
    #[arg(long, conflicts_with = "word_len", required_unless_present = "word_len")]
    pub word: Option<String>,
    /// Word length; writes the empirical measure file.
    #[arg(long = "L")]
    pub word_len: Option<usize>,
    /// Horizon: times 0..n are averaged.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub source: Source,
    /// Partition half-width.
    #[arg(long, default_value_t = 0)]
    pub p: usize,
    /// Largest column height.
    #[arg(long = "T")]
    pub horizon: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    /// Sample x from the Cesàro mean μ_n with this n instead of the measure.
    #[arg(long)]
    pub mu_c_n: Option<usize>,
    /// CSV output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PeriodicArgs {
    /// Rule: fs, identity:<k>, shift:<k>, eca:<code>, or a rule file.
    #[arg(long)]
    pub rule: String,
    /// Largest spatial period.
    #[arg(long = "Lmax")]
    pub l_max: usize,
    /// Largest temporal period searched per orbit (default: min(k^L, 10^7)).
    #[arg(long)]
    pub time_bound: Option<usize>,
    /// Words sampled per length when k^L exceeds 10^7.
    #[arg(long, default_value_t = 10_000)]
    pub sample_budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Empirical measure file whose support is checked for coverage.
    #[arg(long)]
    pub density: Option<PathBuf>,
    /// Frequency above which a support word is checked.
    #[arg(long, default_value_t = 0.0, requires = "density")]
    pub threshold: f64,
    /// Coverage CSV output (default: stderr summary only).
    #[arg(long, requires = "density")]
    pub density_out: Option<PathBuf>,
    /// Report CSV output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub source: Source,
    /// Grid of cylinder half-widths; repeat the flag.
    #[arg(long = "n", required = true)]
    pub n: Vec<usize>,
    #[arg(long)]
    pub m: usize,
    #[arg(long = "T")]
    pub horizon: usize,
    #[arg(long, default_value_t = 2_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 10)]
    pub x_count: usize,
    /// Random perturbations tried when exhaustive witness search is too large.
    #[arg(long, default_value_t = 1_000)]
    pub witness_budget: u64,
    /// JSON output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpacetimeArgs {
    /// Rule: fs, identity:<k>, shift:<k>, eca:<code>, or a rule file.
    #[arg(long)]
    pub rule: String,
    /// Initial cells, one character per symbol.
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    pub cells: Option<String>,
    /// Draw the initial cells from this measure.
    #[arg(long, requires = "width")]
    pub random: Option<String>,
    /// Number of random cells.
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = Mode::Lightcone)]
    pub mode: Mode,
    /// PGM output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 0.2)]
    pub p0: f64,
    #[arg(long, default_value_t = 0.3)]
    pub p1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p2: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Conditional samples per reference point.
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    /// Reference points.
    #[arg(long, default_value_t = 50)]
    pub x_count: usize,
}

/// Runs a parsed command line. The returned code is 0 on success.
pub fn run(cli: Cli) -> Result<i32> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads as usize)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Ratio(a) => cmd_ratio(a),
        Command::Cesaro(a) => cmd_cesaro(a),
        Command::Entropy(a) => cmd_entropy(a),
        Command::Periodic(a) => cmd_periodic(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Spacetime(a) => cmd_spacetime(a),
        Command::DemoFs(a) => cmd_demo_fs(a),
    }
}

fn cmd_ratio(a: RatioArgs) -> Result<i32> {
    let rule = resolve_rule(&a.source.rule)?;
    let measure = resolve_measure(&a.source.measure)?;
    check_alphabets(&rule, &measure)?;
    check_output(a.out.as_ref())?;
    if let Some(&n) = a.n.iter().find(|&&n| n < a.m) {
        bail!("every n must be at least m; got n={n}, m={}", a.m);
    }
    if a.samples == 0 || a.x_count == 0 {
        bail!("--samples and --x-count must be positive");
    }
    let n_max = *a.n.iter().max().expect("required");
    let reach = (n_max + rule.rule.radius() * a.horizon) as i64;
    let root = RandomStream::new(a.source.seed);
    let (x_streams, ratio_streams) = (root.substream(0), root.substream(1));
    let mut csv = String::from("x_id,m,n,T,samples,estimate,wilson_lo,wilson_hi\n");
    for j in 0..a.x_count {
        let x = measure.sample_window(-reach, reach, &x_streams.substream(j as u64))?;
        for (i, &n) in a.n.iter().enumerate() {
            let s = ratio_streams.substream(j as u64).substream(i as u64);
            let r = estimate_ratio(&rule.rule, &measure, &x, a.m, n, a.horizon, a.samples, &s)?;
            let _ = writeln!(
                csv,
                "{j},{},{},{},{},{},{},{}",
                r.m, r.n, r.horizon, r.samples, r.estimate, r.wilson_lo, r.wilson_hi
            );
        }
    }
    emit(a.out.as_ref(), csv.as_bytes())?;
    Ok(0)
}

fn cmd_cesaro(a: CesaroArgs) -> Result<i32> {
    let rule = resolve_rule(&a.source.rule)?;
    let measure = resolve_measure(&a.source.measure)?;
    check_alphabets(&rule, &measure)?;
    check_output(a.out.as_ref())?;
    let word = a.word.as_deref().map(parse_word).transpose()?;
    if a.n == 0 || a.samples == 0 {
        bail!("--n and --samples must be positive");
    }
    let stream = RandomStream::new(a.source.seed);
    if let Some(word) = word {
        if word.is_empty() {
            bail!("--word must be nonempty");
        }
        rule.rule.check_symbols(&word)?;
        let series = cesaro_cylinder_estimate(&rule.rule, &measure, &word, a.n, a.samples, &stream)?;
        let mut csv = String::from("t,per_time,cesaro\n");
        for (t, (p, c)) in series.per_time.iter().zip(&series.cesaro).enumerate() {
            let _ = writeln!(csv, "{t},{p},{c}");
        }
        emit(a.out.as_ref(), csv.as_bytes())?;
        if series.cesaro.len() >= 4 {
            let d = convergence_diag(&series.cesaro, series.final_standard_error())?;
            eprintln!(
                "convergence: final gap {:.6}, max gap {:.6}, last value {:.6}, converging {}",
                d.final_gap, d.max_gap, d.last_value, d.converging
            );
        }
    } else {
        let len = a.word_len.expect("clap enforces --word or --L");
        if len == 0 || len > 8 {
            bail!("--L must be between 1 and 8");
        }
        let e = empirical_measure(&rule.rule, &measure, len, a.n, a.samples, &stream)?.with_rule_id(&rule.id);
        emit(a.out.as_ref(), e.to_file_string().as_bytes())?;
    }
    Ok(0)
}

fn cmd_entropy(a: EntropyArgs) -> Result<i32> {
    let rule = resolve_rule(&a.source.rule)?;
    let measure = resolve_measure(&a.source.measure)?;
    check_alphabets(&rule, &measure)?;
    check_output(a.out.as_ref())?;
    if a.horizon == 0 || a.samples == 0 {
        bail!("--T and --samples must be positive");
    }
    if a.mu_c_n == Some(0) {
        bail!("--mu-c-n must be positive");
    }
    let stream = RandomStream::new(a.source.seed);
    let trace = match a.mu_c_n {
        None => column_entropy(&rule.rule, &measure, a.p, a.horizon, a.samples, &stream)?,
        Some(n) => {
            let width = 2 * (a.p + rule.rule.radius() * a.horizon) + 1;
            let windows = sample_mu_c_approx(&rule.rule, &measure, n, width, a.samples as usize, &stream)?;
            column_entropy_from_windows(&rule.rule, &windows, a.p, a.horizon)?
        }
    };
    emit(a.out.as_ref(), trace.to_csv().as_bytes())?;
    if trace.undersampled {
        eprintln!("warning: more than samples/10 distinct column words; estimates are undersampled");
    }
    if let Ok(rate) = entropy_rate_estimate(&trace) {
        eprintln!(
            "rate: difference {:.6} nats ({:.6} bits), ratio {:.6} nats; recommended: difference",
            rate.by_difference,
            nats_to_bits(rate.by_difference),
            rate.by_ratio
        );
    }
    Ok(0)
}

fn cmd_periodic(a: PeriodicArgs) -> Result<i32> {
    let rule = resolve_rule(&a.rule)?;
    check_output(a.out.as_ref())?;
    check_output(a.density_out.as_ref())?;
    if a.l_max == 0 {
        bail!("--Lmax must be positive");
    }
    if a.time_bound == Some(0) {
        bail!("--time-bound must be positive");
    }
    let support = a
        .density
        .as_ref()
        .map(|path| -> Result<EmpiricalCylinderMeasure> {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            EmpiricalCylinderMeasure::parse_file(&text).with_context(|| format!("parsing {}", path.display()))
        })
        .transpose()?;
    let search = PeriodicSearch {
        time_bound: a.time_bound,
        sample_budget: a.sample_budget,
        stream: RandomStream::new(a.seed),
    };
    let report = find_periodic_points(&rule.rule, a.l_max, &search)?;
    emit(a.out.as_ref(), report.to_csv().as_bytes())?;
    if report.partial || report.unresolved > 0 {
        eprintln!(
            "partial search: {} starts searched, {} unresolved within the time bound",
            report.searched, report.unresolved
        );
    }
    if let Some(support) = support {
        let d = density_check(&rule.rule, &report.points, &support, a.threshold);
        eprintln!("coverage {}/{} = {}", d.covered, d.total, d.coverage);
        if let Some(path) = a.density_out.as_ref() {
            emit(Some(path), d.to_csv().as_bytes())?;
        }
    }
    Ok(0)
}

fn cmd_classify(a: ClassifyArgs) -> Result<i32> {
    let rule = resolve_rule(&a.source.rule)?;
    let measure = resolve_measure(&a.source.measure)?;
    check_alphabets(&rule, &measure)?;
    check_output(a.out.as_ref())?;
    let params = ClassifyParams {
        n_grid: a.n,
        m: a.m,
        horizon: a.horizon,
        samples: a.samples,
        x_count: a.x_count,
        witness_budget: a.witness_budget,
    };
    if params.n_grid.windows(2).any(|w| w[0] >= w[1]) || params.m > params.n_grid[0] {
        bail!("the --n grid must be increasing and start at or above --m");
    }
    if params.samples == 0 || params.x_count == 0 {
        bail!("--samples and --x-count must be positive");
    }
    let c = classify(&rule.rule, &measure, &params, &RandomStream::new(a.source.seed))?;
    let json = serde_json::json!({
        "rule": rule.id,
        "measure": measure.to_string(),
        "seed": a.source.seed,
        "label": c.label,
        "params": c.params,
        "mean_ratios": c.mean_ratios,
        "per_point": c.per_point,
        "witnesses": c.witnesses,
    });
    let mut text = serde_json::to_string_pretty(&json)?;
    text.push('\n');
    emit(a.out.as_ref(), text.as_bytes())?;
    Ok(0)
}

fn cmd_spacetime(a: SpacetimeArgs) -> Result<i32> {
    let rule = resolve_rule(&a.rule)?;
    check_output(Some(&a.out))?;
    let initial = match (&a.cells, &a.random) {
        (Some(cells), _) => {
            let cells = parse_word(cells)?;
            if cells.is_empty() {
                bail!("--cells must be nonempty");
            }
            WindowConfig::new(0, cells)?
        }
        (None, Some(measure)) => {
            let measure = resolve_measure(measure)?;
            check_alphabets(&rule, &measure)?;
            let width = a.width.expect("clap enforces --width");
            if width == 0 {
                bail!("--width must be positive");
            }
            measure.sample_window(0, width as i64 - 1, &RandomStream::new(a.seed))?
        }
        (None, None) => bail!("give --cells or --random"),
    };
    let pgm = spacetime::render(&rule.rule, &initial, a.steps, a.mode)?;
    emit(Some(&a.out), &pgm.to_bytes())?;
    Ok(0)
}

fn cmd_demo_fs(a: DemoArgs) -> Result<i32> {
    let params = demo::DemoParams {
        p: [a.p0, a.p1, a.p2],
        seed: a.seed,
        samples: a.samples,
        x_count: a.x_count,
        ..demo::DemoParams::default()
    };
    demo::validate(&params)?;
    let report = demo::run(&params)?;
    print!("{}", report.summary());
    Ok(if report.all_hold() { 0 } else { 1 })
}
