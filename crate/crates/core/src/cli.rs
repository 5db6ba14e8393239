//! Command-line surface: argument parsing, config merging and job dispatch.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use ticksize::distfit::{fit_density, DensityKind, FitOptions, Histogram, JointMode, Weighting};
use ticksize::epps::{corrected_corr_price_changes, corrected_corr_returns, Form, TermSet};
use ticksize::io::{
    aligned_returns, ensemble_mean, grid_prices, load_ticks, segment_returns, write_curve, CurvePoint,
    GridSegment, PairSpec, RunConfig, TickFile,
};
use ticksize::microstructure::{decompose, summary, write_summary_csv};
use ticksize::sim::{
    epps_experiment, tail_experiment, write_curve_csv, write_tail_csv, write_theta_csv, ChangeLaw, GbmForm,
};
use ticksize::TickSize;

#[derive(Debug, Parser)]
#[command(name = "ticksize", version, about = "Tick-size effects on return distributions and correlations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tick size as an exact decimal.
    #[arg(long, global = true)]
    q: Option<TickSize>,
    /// Return intervals in grid steps, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    dt: Option<Vec<u32>>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, global = true, value_enum)]
    density: Option<DensityArg>,
    #[arg(long, global = true, value_enum)]
    joint: Option<JointArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Dominant,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DensityArg {
    Gaussian,
    Powerlaw,
    Tabulated,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum JointArg {
    Tabulated,
    Gaussian,
    Separable,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormArg {
    Returns,
    PriceChanges,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LawArg {
    Gaussian,
    Powerlaw,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GbmArg {
    Exponential,
    Multiplicative,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate correlated rounded prices and write Epps curves.
    Simulate(SimulateArgs),
    /// Tail experiment: price changes divided by random prices.
    Tails(TailsArgs),
    /// Decompose returns of tick files by price change.
    Microstructure(FileArgs),
    /// Fit a density to the price changes of tick files.
    Fit(FileArgs),
    /// Compensated correlation reports for a pair of tick files.
    Compensate(PairArgs),
    /// Raw and compensated Epps curves for one or more pairs.
    EppsCurve(PairArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["S1", "S2"])]
    s0: Option<Vec<f64>>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, value_enum)]
    gbm: Option<GbmArg>,
    /// One trading year of one-second steps.
    #[arg(long)]
    year: bool,
}

#[derive(Debug, Args)]
pub struct TailsArgs {
    #[arg(long, value_enum)]
    law: Option<LawArg>,
    #[arg(long, default_value_t = 3.0)]
    tail_index: f64,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    s_min: Option<f64>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FileArgs {
    /// Tick CSV files.
    #[arg(long = "a", num_args = 1..)]
    files: Vec<PathBuf>,
    /// Grid step in seconds.
    #[arg(long)]
    step: Option<i64>,
    #[arg(long, value_delimiter = ',')]
    splits: Option<Vec<i64>>,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long)]
    a: Option<PathBuf>,
    #[arg(long)]
    b: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    step: Option<i64>,
    #[arg(long, value_delimiter = ',')]
    splits: Option<Vec<i64>>,
    #[arg(long, value_enum)]
    form: Option<FormArg>,
    /// Logarithmic start-price bins for the return tensors.
    #[arg(long)]
    price_bins: Option<usize>,
    /// Add curves divided by their value at the largest interval.
    #[arg(long)]
    normalize: bool,
}

/// Outcome of one job: a summary line or an error.
type JobResult = std::result::Result<String, anyhow::Error>;

fn base_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.q.is_some() {
        cfg.q = common.q;
    }
    if let Some(dt) = &common.dt {
        cfg.dt = dt.clone();
    }
    if let Some(m) = common.mode {
        cfg.mode = match m {
            ModeArg::Full => TermSet::Full,
            ModeArg::Dominant => TermSet::Dominant,
        };
    }
    if let Some(d) = common.density {
        cfg.density = match d {
            DensityArg::Gaussian => DensityKind::Gaussian,
            DensityArg::Powerlaw => DensityKind::Powerlaw,
            DensityArg::Tabulated => DensityKind::Tabulated,
        };
    }
    if let Some(j) = common.joint {
        cfg.joint = match j {
            JointArg::Tabulated => JointMode::Tabulated,
            JointArg::Gaussian => JointMode::Gaussian,
            JointArg::Separable => JointMode::Separable,
        };
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("ticksize-out"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Run the parsed command. Returns the summary lines of all jobs; any job
/// error makes the whole run fail after the other jobs finished.
pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = base_config(&cli.common)?;
    let results: Vec<(String, JobResult)> = match cli.command {
        Command::Simulate(a) => simulate(&mut cfg, &cli.common, a)?,
        Command::Tails(a) => vec![("tails".into(), tails(&mut cfg, &cli.common, a))],
        Command::Microstructure(a) => file_jobs(&mut cfg, a, microstructure_job)?,
        Command::Fit(a) => file_jobs(&mut cfg, a, fit_job)?,
        Command::Compensate(a) => pair_jobs(&mut cfg, a, false)?,
        Command::EppsCurve(a) => pair_jobs(&mut cfg, a, true)?,
    };
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(line) => println!("{name}: {line}"),
            Err(e) => {
                failed += 1;
                println!("{name}: error: {e:#}");
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} jobs failed", results.len());
    }
    Ok(())
}

fn simulate(cfg: &mut RunConfig, common: &Common, a: SimulateArgs) -> Result<Vec<(String, JobResult)>> {
    let mut sim = if a.year {
        ticksize::sim::SimConfig {
            steps: 7_200_000,
            ..cfg.simulate.clone()
        }
    } else {
        cfg.simulate.clone()
    };
    if let Some(c) = a.c {
        sim.c = c;
    }
    if let Some(s0) = a.s0 {
        sim.s0 = [s0[0], s0[1]];
    }
    if let Some(s) = a.steps {
        sim.steps = s;
    }
    if let Some(s) = a.sigma {
        sim.sigma = s;
    }
    if let Some(g) = a.gbm {
        sim.gbm = match g {
            GbmArg::Exponential => GbmForm::Exponential,
            GbmArg::Multiplicative => GbmForm::Multiplicative,
        };
    }
    if let Some(q) = common.q {
        let d = q.decimal().normalized();
        if d.scale != 0 {
            bail!("simulated tick size must be a whole number of price units, got {q}");
        }
        sim.q = u32::try_from(d.mantissa).context("tick size too large")?;
    }
    if let Some(dt) = &common.dt {
        sim.intervals = dt.clone();
    }
    if let Some(s) = common.seed {
        sim.seed = s;
    }
    if common.density.is_some() {
        sim.density = cfg.density;
    }
    if common.joint.is_some() {
        sim.joint = cfg.joint;
    }
    if common.mode.is_some() {
        sim.term_set = cfg.mode;
    }
    sim.validate()?;
    let dir = out_dir(cfg)?;
    let seeds: Vec<u64> = (0..a.seeds.max(1)).map(|i| sim.seed + i).collect();
    Ok(seeds
        .par_iter()
        .map(|&seed| {
            let c = ticksize::sim::SimConfig { seed, ..sim.clone() };
            let job = || -> Result<String> {
                let e = epps_experiment(&c)?;
                write_curve_csv(&e.points, create(&dir.join(format!("epps_seed{seed}.csv")))?)?;
                write_theta_csv(&e.theta, create(&dir.join(format!("theta_seed{seed}.csv")))?)?;
                let first = e.points.first().expect("intervals validated");
                let last = e.points.last().expect("intervals validated");
                Ok(format!(
                    "dt {}..{} raw {:.4}->{:.4} compensated {:.4}->{:.4} theta rms {:.4}",
                    first.dt,
                    last.dt,
                    first.raw,
                    last.raw,
                    first.compensated,
                    last.compensated,
                    e.theta_rms()
                ))
            };
            (format!("simulate seed {seed}"), job())
        })
        .collect())
}

fn tails(cfg: &mut RunConfig, common: &Common, a: TailsArgs) -> JobResult {
    let mut t = cfg.tails.clone();
    if let Some(l) = a.law {
        t.law = match l {
            LawArg::Gaussian => ChangeLaw::Gaussian,
            LawArg::Powerlaw => ChangeLaw::Powerlaw { tail_index: a.tail_index },
        };
    }
    if let Some(q) = common.q {
        t.q = q.to_f64();
    }
    if let Some(s) = a.sigma {
        t.sigma = s;
    }
    if let Some(s) = a.s_min {
        t.s_min = s;
    }
    if let Some(r) = a.ratio {
        t.ratio = r;
    }
    if let Some(n) = a.samples {
        t.samples = n;
    }
    if let Some(s) = common.seed {
        t.seed = s;
    }
    let r = tail_experiment(&t)?;
    write_tail_csv(&r, create(&out_dir(cfg)?.join("tails.csv"))?)?;
    Ok(format!(
        "total variation {:.4}, excess kurtosis changes {:.3} returns {:.3}",
        r.total_variation(),
        r.changes_excess_kurtosis,
        r.returns_excess_kurtosis
    ))
}

fn load(cfg: &RunConfig, path: &Path, q: Option<TickSize>) -> Result<TickFile> {
    let q = q.or(cfg.q).context("no tick size given (use --q)")?;
    let mut f = load_ticks(path, q, cfg.load_options()).with_context(|| format!("loading {}", path.display()))?;
    f.split_at(&cfg.splits);
    Ok(f)
}

fn grid(cfg: &RunConfig, path: &Path, q: Option<TickSize>) -> Result<(TickFile, Vec<GridSegment>)> {
    let f = load(cfg, path, q)?;
    let segs = grid_prices(&f, cfg.step)?;
    Ok((f, segs))
}

fn file_jobs(
    cfg: &mut RunConfig,
    a: FileArgs,
    job: fn(&RunConfig, &PairSpec, &Path) -> Result<String>,
) -> Result<Vec<(String, JobResult)>> {
    if let Some(s) = a.step {
        cfg.step = s;
    }
    if let Some(s) = a.splits {
        cfg.splits = s;
    }
    for f in a.files {
        cfg.pairs.push(PairSpec {
            label: None,
            a: f,
            b: None,
            q_a: None,
            q_b: None,
        });
    }
    if cfg.pairs.is_empty() {
        bail!("no input files (use --a)");
    }
    cfg.validate()?;
    let dir = out_dir(cfg)?;
    let cfg = &*cfg;
    Ok(cfg
        .pairs
        .par_iter()
        .map(|p| (p.label(), job(cfg, p, &dir)))
        .collect())
}

fn microstructure_job(cfg: &RunConfig, p: &PairSpec, dir: &Path) -> Result<String> {
    let (_, segs) = grid(cfg, &p.a, p.q_a)?;
    let mut parts = Vec::new();
    for &dt in &cfg.dt {
        let dec = decompose(&segment_returns(&segs, dt)?)?;
        let rows = summary(&dec)?;
        write_summary_csv(&rows, create(&dir.join(format!("{}_microstructure_dt{dt}.csv", p.label())))?)?;
        parts.push(format!("dt {dt}: {} returns in {} subsets", dec.total(), rows.len()));
    }
    Ok(parts.join("; "))
}

fn fit_job(cfg: &RunConfig, p: &PairSpec, dir: &Path) -> Result<String> {
    let (f, segs) = grid(cfg, &p.a, p.q_a)?;
    let mut parts = Vec::new();
    for &dt in &cfg.dt {
        let r = segment_returns(&segs, dt)?;
        let hist = Histogram::from_cells(f.q.to_f64(), r.changes());
        let d = fit_density(&hist, cfg.density, Weighting::Triangular, &FitOptions::default())?;
        fs::write(dir.join(format!("{}_fit_dt{dt}.json", p.label())), d.to_json()?)?;
        let flags = if d.flags.is_empty() { String::new() } else { format!(" [{}]", d.flags.join(",")) };
        parts.push(format!("dt {dt}: residual {:.3e}{flags}", d.residual));
    }
    Ok(parts.join("; "))
}

fn pair_jobs(cfg: &mut RunConfig, a: PairArgs, curve: bool) -> Result<Vec<(String, JobResult)>> {
    if let Some(s) = a.step {
        cfg.step = s;
    }
    if let Some(s) = a.splits {
        cfg.splits = s;
    }
    if let Some(f) = a.form {
        cfg.form = match f {
            FormArg::Returns => Form::Returns,
            FormArg::PriceChanges => Form::PriceChanges,
        };
    }
    if a.price_bins.is_some() {
        cfg.price_bins = a.price_bins;
    }
    cfg.normalize |= a.normalize;
    match (a.a, a.b) {
        (Some(x), Some(y)) => cfg.pairs.push(PairSpec {
            label: a.label,
            a: x,
            b: Some(y),
            q_a: None,
            q_b: None,
        }),
        (None, None) => {}
        _ => bail!("--a and --b must be given together"),
    }
    if cfg.pairs.is_empty() {
        bail!("no input pair (use --a and --b, or a config with pairs)");
    }
    if let Some(p) = cfg.pairs.iter().find(|p| p.b.is_none()) {
        bail!("pair {} has no second file", p.label());
    }
    cfg.validate()?;
    let dir = out_dir(cfg)?;
    let cfg = &*cfg;
    let outcomes: Vec<(String, Result<Vec<CurvePoint>>)> = cfg
        .pairs
        .par_iter()
        .map(|p| (p.label(), pair_job(cfg, p, &dir, curve)))
        .collect();
    let curves: Vec<Vec<CurvePoint>> = outcomes.iter().filter_map(|(_, r)| r.as_ref().ok().cloned()).collect();
    let mut results: Vec<(String, JobResult)> = outcomes
        .into_iter()
        .map(|(label, r)| (label, r.map(|pts| describe(&pts))))
        .collect();
    if curve && cfg.pairs.len() > 1 && !curves.is_empty() {
        let mean = ensemble_mean(&curves);
        let written = create(&dir.join("ensemble_epps.csv"))
            .and_then(|w| Ok(write_curve(&mean, cfg.normalize, w)?))
            .map(|_| format!("{} pairs, {}", curves.len(), describe(&mean)));
        results.push(("ensemble".into(), written));
    }
    Ok(results)
}

fn describe(points: &[CurvePoint]) -> String {
    points
        .iter()
        .map(|p| format!("dt {} raw {:.4} compensated {:.4}", p.dt, p.raw, p.compensated))
        .collect::<Vec<_>>()
        .join("; ")
}

fn pair_job(cfg: &RunConfig, p: &PairSpec, dir: &Path, curve: bool) -> Result<Vec<CurvePoint>> {
    let b = p.b.as_deref().expect("checked by caller");
    let (fa, sa) = grid(cfg, &p.a, p.q_a)?;
    let (fb, sb) = grid(cfg, b, p.q_b)?;
    let label = p.label();
    let opts = cfg.correction_options(&label);
    let mut points = Vec::with_capacity(cfg.dt.len());
    for &dt in &cfg.dt {
        let (ra, rb) = aligned_returns(&sa, &sb, fa.labelled && fb.labelled, dt)?;
        let report = match cfg.form {
            Form::PriceChanges => corrected_corr_price_changes(&ra, &rb, &opts)?,
            _ => corrected_corr_returns(&ra, &rb, &opts)?,
        };
        if !curve {
            fs::write(dir.join(format!("{label}_dt{dt}.json")), report.to_json()?)?;
        }
        points.push(CurvePoint::from(&report));
    }
    if curve {
        write_curve(&points, cfg.normalize, create(&dir.join(format!("{label}_epps.csv")))?)?;
    }
    Ok(points)
}
