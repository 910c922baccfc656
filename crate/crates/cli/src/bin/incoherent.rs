use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use incoherent_cli::config::{echo_config, load_config, LoadedConfig};
use incoherent_cli::matrix_csv::{read_matrix, write_matrix};
use incoherent_cli::reports::{self, create_dir, emit_reports, write_text};
use incoherent_core::altproj::{altproj_optimize, AltProjConfig};
use incoherent_core::coherence::{coherence_report, offdiag_histogram};
use incoherent_core::dictlearn::{
    coupled_ksvd, initial_dictionary, ksvd, planted_training_set, two_ortho_dictionary, CoupledConfig,
    KsvdConfig, ProjectionDesigner, TrainingSet,
};
use incoherent_core::elad::{elad_optimize, EladConfig, ThresholdMode};
use incoherent_core::harness::{run_sweep, ExperimentConfig};
use incoherent_core::linalg::gram;
use incoherent_core::rng::{gaussian_matrix, rng_from_seed};
use incoherent_core::sapiro::sapiro_optimize;
use incoherent_core::{Dictionary, ProjectionMatrix};

#[derive(Parser)]
#[command(name = "incoherent", version, about = "Sensing-matrix design and sparse recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a projection matrix for a dictionary.
    Design(DesignArgs),
    /// Run a recovery sweep from a config file.
    Bench(BenchArgs),
    /// Histogram of off-diagonal Gram magnitudes of D or PD.
    Hist(HistArgs),
    /// Learn a dictionary with K-SVD.
    Ksvd(KsvdArgs),
    /// Learn a projection and a dictionary together.
    Coupled(CoupledArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Random,
    Elad,
    Sapiro,
    Altproj,
}

#[derive(Args)]
struct DictArgs {
    /// Dictionary CSV; a Gaussian dictionary is generated when omitted.
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    dict_seed: u64,
}

impl DictArgs {
    fn load(&self) -> Result<(Dictionary, bool)> {
        match &self.dict {
            Some(path) => Ok((Dictionary::new(read_matrix(path)?)?, false)),
            None => Ok((Dictionary::new(gaussian_matrix(self.n, self.k, &mut rng_from_seed(self.dict_seed)))?, true)),
        }
    }
}

#[derive(Args)]
struct OptimizerArgs {
    /// Rows of P.
    #[arg(long, default_value_t = 12)]
    m: usize,
    /// Iteration count; defaults to 100 for elad and 1000 for altproj.
    #[arg(long)]
    iterations: Option<usize>,
    /// Elad threshold as `fixed:<t>` or `relative:<percent>`.
    #[arg(long, default_value = "relative:26", value_parser = parse_threshold)]
    threshold: ThresholdMode,
    #[arg(long, default_value_t = 0.6)]
    gamma: f64,
    /// Altproj off-diagonal target.
    #[arg(long, default_value_t = 0.3)]
    t: f64,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long, value_enum)]
    method: Method,
    #[command(flatten)]
    dict: DictArgs,
    #[command(flatten)]
    opt: OptimizerArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// `key = value` config; built-in defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the full-size configuration instead of the desk-scale one.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct HistArgs {
    #[arg(long)]
    dict: PathBuf,
    /// Projection CSV; the histogram is then taken over PD.
    #[arg(long)]
    proj: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Threshold for the reported t-averaged coherence.
    #[arg(long, default_value_t = 0.3)]
    t: f64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Planted {
    Gaussian,
    TwoOrtho,
}

#[derive(Args)]
struct DataArgs {
    /// Training signals, one per column. Planted synthetic data is generated when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Planted::TwoOrtho)]
    planted: Planted,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 400)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    data_seed: u64,
}

impl DataArgs {
    /// Training matrix, plus the planted dictionary when synthesized.
    fn load(&self, atoms: usize, sparsity: usize) -> Result<(DMatrix<f64>, Option<Dictionary>)> {
        if let Some(path) = &self.data {
            return Ok((read_matrix(path)?, None));
        }
        let dict = match self.planted {
            Planted::Gaussian => Dictionary::new(initial_dictionary(self.n, atoms, self.data_seed))?,
            Planted::TwoOrtho => {
                if atoms != 2 * self.n {
                    bail!("two-ortho planted data needs --atoms = 2n = {}", 2 * self.n);
                }
                two_ortho_dictionary(self.n, self.data_seed)?
            }
        };
        let (x, _) = planted_training_set(&dict, sparsity, self.samples, self.data_seed);
        Ok((x, Some(dict)))
    }
}

#[derive(Args)]
struct KsvdArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 16)]
    atoms: usize,
    #[arg(long, default_value_t = 2)]
    sparsity: usize,
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CoupledArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Measurements Y matching the data columns; formed as PX + N when omitted.
    #[arg(long)]
    measurements: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Sapiro)]
    method: Method,
    #[command(flatten)]
    opt: OptimizerArgs,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 16)]
    atoms: usize,
    #[arg(long, default_value_t = 2)]
    sparsity: usize,
    #[arg(long, default_value_t = 10)]
    outer_iterations: usize,
    /// Noise level for synthesized measurements.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_threshold(s: &str) -> std::result::Result<ThresholdMode, String> {
    let (kind, v) = s.split_once(':').ok_or("expected fixed:<t> or relative:<percent>")?;
    let v: f64 = v.parse().map_err(|e| format!("{e}"))?;
    match kind {
        "fixed" => Ok(ThresholdMode::Fixed(v)),
        "relative" => Ok(ThresholdMode::Relative(v)),
        _ => Err(format!("unknown threshold mode '{kind}'")),
    }
}

fn elad_config(opt: &OptimizerArgs, seed: u64) -> EladConfig {
    EladConfig {
        threshold: opt.threshold,
        gamma: opt.gamma,
        iterations: opt.iterations.unwrap_or(100),
        m: opt.m,
        seed,
    }
}

fn altproj_config(opt: &OptimizerArgs, seed: u64) -> AltProjConfig {
    AltProjConfig { t: opt.t, m: opt.m, iterations: opt.iterations.unwrap_or(1000), seed }
}

fn design(args: &DesignArgs) -> Result<()> {
    let (dict, generated) = args.dict.load()?;
    create_dir(&args.out)?;
    if generated {
        write_matrix(&args.out.join("dictionary.csv"), dict.as_matrix())?;
    }
    let (projection, trace) = match args.method {
        Method::Random => {
            let n = dict.signal_dim();
            (ProjectionMatrix::new(gaussian_matrix(args.opt.m, n, &mut rng_from_seed(args.seed)))?, None)
        }
        Method::Elad => {
            let out = elad_optimize(&dict, &elad_config(&args.opt, args.seed))?;
            let trace = reports::format_elad_trace(&out.trace);
            (out.projection, Some(trace))
        }
        Method::Sapiro => {
            let out = sapiro_optimize(&dict, args.opt.m, args.seed)?;
            let trace = reports::format_sapiro_trace(out.initial_objective, &out.trace);
            (out.projection, Some(trace))
        }
        Method::Altproj => {
            let out = altproj_optimize(&dict, &altproj_config(&args.opt, args.seed))?;
            let trace = reports::format_altproj_trace(&out.trace);
            (out.projection, Some(trace))
        }
    };
    write_matrix(&args.out.join("projection.csv"), projection.as_matrix())?;
    if let Some(trace) = trace {
        write_text(&args.out.join("trace.csv"), &trace)?;
    }
    let g = gram(&(projection.as_matrix() * dict.as_matrix()))?;
    let hist = offdiag_histogram(&g, args.bins);
    write_text(&args.out.join("gram_hist.csv"), &reports::format_histogram(&hist))?;
    let mu = incoherent_core::coherence::gram_coherence(&g).mu;
    println!("mu(PD) = {mu}");
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<()> {
    let base = if args.paper_scale { ExperimentConfig::paper_scale() } else { ExperimentConfig::desk_scale() };
    let loaded = match &args.config {
        Some(path) => load_config(path, base)?,
        None => LoadedConfig::from_base(base),
    };
    let output = run_sweep(&loaded.experiment)?;
    emit_reports(&output, &echo_config(&loaded), &args.out)?;
    for arm in &output.arms {
        println!("{:8} mu(PD) = {:.6}", arm.name, arm.mu);
    }
    print!("{}", reports::format_summary(&output.summary));
    Ok(())
}

fn hist(args: &HistArgs) -> Result<()> {
    let d = read_matrix(&args.dict)?;
    let effective = match &args.proj {
        Some(path) => {
            let p = read_matrix(path)?;
            if p.ncols() != d.nrows() {
                bail!("projection has {} columns but the dictionary has {} rows", p.ncols(), d.nrows());
            }
            p * d
        }
        None => d,
    };
    let report = coherence_report(&effective, args.t, args.bins)?;
    let csv = reports::format_histogram(&report.histogram);
    match &args.out {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    eprintln!(
        "mu = {} at {:?}; mu_t(t = {}) = {}",
        report.mu,
        report.argmax_pair,
        report.t,
        report.mu_t.map_or("undefined".to_string(), |v| v.to_string())
    );
    Ok(())
}

fn write_planted(out: &Path, planted: &Option<Dictionary>, x: &DMatrix<f64>) -> Result<()> {
    if let Some(d) = planted {
        write_matrix(&out.join("planted_dictionary.csv"), d.as_matrix())?;
        write_matrix(&out.join("training.csv"), x)?;
    }
    Ok(())
}

fn ksvd_cmd(args: &KsvdArgs) -> Result<()> {
    let (x, planted) = args.data.load(args.atoms, args.sparsity)?;
    create_dir(&args.out)?;
    write_planted(&args.out, &planted, &x)?;
    let cfg = KsvdConfig { atoms: args.atoms, sparsity: args.sparsity, iterations: args.iterations, seed: args.seed };
    let result = ksvd(&TrainingSet::new(x.clone()), &cfg)?;
    write_matrix(&args.out.join("dictionary.csv"), result.dictionary.as_matrix())?;
    write_text(&args.out.join("trace.csv"), &reports::format_ksvd_trace(&result.trace))?;
    let last = result.trace.last().copied().unwrap_or(f64::NAN);
    println!("iterations = {}, objective / |X|^2 = {:e}", result.trace.len(), last / x.norm_squared());
    Ok(())
}

fn coupled_cmd(args: &CoupledArgs) -> Result<()> {
    let (x, planted) = args.data.load(args.atoms, args.sparsity)?;
    create_dir(&args.out)?;
    write_planted(&args.out, &planted, &x)?;
    let designer = match args.method {
        Method::Elad => ProjectionDesigner::Elad(elad_config(&args.opt, args.seed)),
        Method::Sapiro => ProjectionDesigner::Sapiro { m: args.opt.m, seed: args.seed },
        Method::Altproj => ProjectionDesigner::AltProj(altproj_config(&args.opt, args.seed)),
        Method::Random => ProjectionDesigner::Fixed(ProjectionMatrix::new(gaussian_matrix(
            args.opt.m,
            x.nrows(),
            &mut rng_from_seed(args.seed),
        ))?),
    };
    let mut training = TrainingSet::new(x);
    training.sigma = args.sigma;
    if let Some(path) = &args.measurements {
        training.y = Some(read_matrix(path).with_context(|| "reading measurements")?);
    }
    let cfg = CoupledConfig {
        lambda: args.lambda,
        atoms: args.atoms,
        sparsity: args.sparsity,
        max_outer_iterations: args.outer_iterations,
        designer,
        seed: args.seed,
    };
    let result = coupled_ksvd(&training, &cfg)?;
    write_matrix(&args.out.join("projection.csv"), result.projection.as_matrix())?;
    write_matrix(&args.out.join("dictionary.csv"), result.dictionary.as_matrix())?;
    write_text(&args.out.join("trace.csv"), &reports::format_coupled_trace(&result.trace))?;
    if let Some(last) = result.trace.last() {
        println!("iterations = {}, term1 = {:e}, term2 = {:e}", result.trace.len(), last.term1, last.term2);
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Design(a) => design(&a),
        Command::Bench(a) => bench(&a),
        Command::Hist(a) => hist(&a),
        Command::Ksvd(a) => ksvd_cmd(&a),
        Command::Coupled(a) => coupled_cmd(&a),
    }
}
