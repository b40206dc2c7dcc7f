mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use kronsketch::bounds::{self, BoundInputs, LogBase};
use kronsketch::cp::{cp_als, AlsOptions, CpTensor};
use kronsketch::experiment::{
    gen_input, row_reduction, run_experiment1, run_experiment2, write_csv, Distribution,
    ExperimentConfig,
};
use kronsketch::idx::{build_digit_tensor, read_idx};
use kronsketch::regress::{audit_perp, solve_sketched, LsProblem};
use kronsketch::rng::{derive_seed, rng_from_seed};
use kronsketch::{Error, KrMatrix, KronVector, Shape, SketchKind, SketchOperator, SketchOptions};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use config::{parse_grid, parse_list, Config};

#[derive(Parser)]
#[command(
    name = "kronsketch",
    version,
    about = "Sketching Kronecker vectors and Khatri-Rao matrices"
)]
struct Cli {
    /// Flat `key = value` file; keys mirror long flag names.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distortion of random Kronecker-vector pairs over a J grid.
    Exp1(Exp1Args),
    /// Distortion of a fixed pair of CP tensors over a J grid.
    Exp2(Exp2Args),
    /// Embedding-dimension bounds over an (eps, delta) sweep.
    Bounds(BoundsArgs),
    /// Sketched least squares with a Khatri-Rao design.
    Lsq(LsqArgs),
    /// Apply one sketch to one Kronecker vector.
    Sketch(SketchArgs),
    /// Inspect or convert an IDX file.
    Idx(IdxArgs),
}

#[derive(Args)]
struct Common {
    /// Mode sizes, e.g. 16,16,16.
    #[arg(long)]
    shape: Option<String>,
    /// Sketch kinds: gaussian, kfjlt, trp, tensorsketch, sampling.
    #[arg(long)]
    kinds: Option<String>,
    /// J values as a list (100,200) or a range (100:1000:100).
    #[arg(long)]
    jgrid: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Force sampling with (true) or without (false) replacement.
    #[arg(long)]
    replacement: Option<bool>,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Exp1Args {
    #[command(flatten)]
    common: Common,
    /// normal, sparse3 or spike.
    #[arg(long)]
    dist: Option<String>,
}

#[derive(Args)]
struct Exp2Args {
    #[command(flatten)]
    common: Common,
    /// CP rank of the fitted (or synthetic) tensors.
    #[arg(long)]
    rank: Option<usize>,
    /// MNIST image file (IDX); needs --labels.
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// The two digits to compare.
    #[arg(long)]
    digits: Option<String>,
    /// Images per digit.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    als_iters: Option<usize>,
    /// Precomputed CP tensor directories (factor_<p>.bin files).
    #[arg(long, requires = "cp_b")]
    cp_a: Option<PathBuf>,
    #[arg(long, requires = "cp_a")]
    cp_b: Option<PathBuf>,
    /// Write the two CP tensors used to <dir>/a and <dir>/b.
    #[arg(long)]
    save_cp: Option<PathBuf>,
    /// Run the dense Gaussian baseline too (small shapes only).
    #[arg(long)]
    include_gaussian: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    rank: Option<usize>,
    /// Number of points N.
    #[arg(long)]
    points: Option<usize>,
    /// Comma-separated eps values.
    #[arg(long)]
    eps: Option<String>,
    /// Comma-separated delta values.
    #[arg(long)]
    delta: Option<String>,
    /// Constants of the simplified bound.
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    /// Constant of the comparison bound.
    #[arg(long)]
    c: Option<f64>,
    /// Log base for the constant-laden bounds: e, 2 or 10.
    #[arg(long)]
    log_base: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LsqArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    rank: Option<usize>,
}

#[derive(Args)]
struct SketchArgs {
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replacement: Option<bool>,
    /// Text file with one comma-separated factor per line. Without it the
    /// input is drawn from --dist with --input-seed.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    input_seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IdxArgs {
    #[command(subcommand)]
    action: IdxAction,
}

#[derive(Subcommand)]
enum IdxAction {
    /// Print the element type and dims.
    Inspect { file: PathBuf },
    /// Write the payload as CSV, one row per leading index.
    Convert {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

struct Resolved {
    dims: Vec<usize>,
    kinds: Vec<SketchKind>,
    jgrid: Vec<usize>,
    trials: usize,
    seed: u64,
    replacement: Option<bool>,
    out: Option<PathBuf>,
}

fn resolve(
    cfg: &Config,
    c: Common,
    shape: &str,
    kinds: &str,
    jgrid: &str,
    trials: usize,
) -> Result<Resolved> {
    Ok(Resolved {
        dims: parse_list(&cfg.get_or(c.shape, "shape", shape.to_string())?)?,
        kinds: parse_list(&cfg.get_or(c.kinds, "kinds", kinds.to_string())?)?,
        jgrid: parse_grid(&cfg.get_or(c.jgrid, "jgrid", jgrid.to_string())?)?,
        trials: cfg.get_or(c.trials, "trials", trials)?,
        seed: cfg.get_or(c.seed, "seed", 0)?,
        replacement: cfg.pick(c.replacement, "replacement")?,
        out: cfg.pick(c.out, "out")?,
    })
}

fn log_row_reduction(jgrid: &[usize], total: usize) {
    for &j in jgrid {
        log::info!(
            "J = {j}: {:.1}% row reduction from {total}",
            100.0 * row_reduction(j, total)
        );
    }
}

fn exp1(cfg: &Config, a: Exp1Args) -> Result<()> {
    let r = resolve(
        cfg,
        a.common,
        "16,16,16",
        "gaussian,kfjlt,trp,tensorsketch,sampling",
        "100:1000:100",
        1000,
    )?;
    let dist: Distribution = cfg.get_or(a.dist, "dist", "normal".to_string())?.parse()?;
    let ecfg = ExperimentConfig {
        dist,
        dims: r.dims,
        jgrid: r.jgrid,
        trials: r.trials,
        seed: r.seed,
        kinds: r.kinds,
        replacement: r.replacement,
    };
    log_row_reduction(&ecfg.jgrid, ecfg.validate()?.total());
    let stats = run_experiment1(&ecfg)?;
    write_csv(output(r.out.as_deref())?, &stats)?;
    Ok(())
}

fn random_cp(dims: &[usize], rank: usize, seed: u64) -> Result<CpTensor> {
    let mut rng = rng_from_seed(seed);
    Ok(CpTensor::new(
        dims.iter()
            .map(|&d| DMatrix::from_fn(d, rank, |_, _| rng.sample(StandardNormal)))
            .collect(),
    )?)
}

fn exp2(cfg: &Config, a: Exp2Args) -> Result<()> {
    let mnist = cfg.pick(a.images, "images")?;
    let (default_shape, default_grid) = if mnist.is_some() {
        ("32,32,100", "100:5000:100")
    } else {
        ("8,8,20", "100:1000:100")
    };
    let r = resolve(
        cfg,
        a.common,
        default_shape,
        "kfjlt,trp,tensorsketch,sampling",
        default_grid,
        100,
    )?;
    let rank = cfg.get_or(a.rank, "rank", if mnist.is_some() { 10 } else { 3 })?;
    let cp_a = cfg.pick(a.cp_a, "cp-a")?;
    let cp_b = cfg.pick(a.cp_b, "cp-b")?;
    let (ta, tb) = match (cp_a, cp_b, mnist) {
        (Some(pa), Some(pb), _) => (CpTensor::load(&pa)?, CpTensor::load(&pb)?),
        (None, None, Some(images)) => {
            let labels = cfg
                .pick(a.labels, "labels")?
                .context("--images needs --labels")?;
            let digits: Vec<u8> =
                parse_list(&cfg.get_or(a.digits, "digits", "4,9".to_string())?)?;
            if digits.len() != 2 {
                bail!("--digits takes exactly two digits");
            }
            let count = cfg.get_or(a.count, "count", 100)?;
            let iters = cfg.get_or(a.als_iters, "als-iters", 50)?;
            let (images, labels) = (read_idx(&images)?, read_idx(&labels)?);
            let fit = |digit: u8, k: u64| -> Result<CpTensor> {
                let t = build_digit_tensor(&images, &labels, digit, count)?;
                let opts = AlsOptions {
                    max_iters: iters,
                    seed: derive_seed(r.seed, &[0xa15, k]),
                    ..Default::default()
                };
                let res = cp_als(&t, rank, &opts)?;
                log::info!(
                    "digit {digit}: rank-{rank} fit, relative error {:.4} after {} sweeps",
                    res.errors.last().copied().unwrap_or(f64::NAN),
                    res.errors.len()
                );
                Ok(res.tensor)
            };
            (fit(digits[0], 0)?, fit(digits[1], 1)?)
        }
        (None, None, None) => (
            random_cp(&r.dims, rank, derive_seed(r.seed, &[0xc9, 0]))?,
            random_cp(&r.dims, rank, derive_seed(r.seed, &[0xc9, 1]))?,
        ),
        _ => bail!("--cp-a and --cp-b go together"),
    };
    if let Some(dir) = cfg.pick(a.save_cp, "save-cp")? {
        ta.save(&dir.join("a"))?;
        tb.save(&dir.join("b"))?;
    }
    let ecfg = ExperimentConfig {
        dist: Distribution::Normal,
        dims: ta.shape().dims().to_vec(),
        jgrid: r.jgrid,
        trials: r.trials,
        seed: r.seed,
        kinds: r.kinds,
        replacement: r.replacement,
    };
    log_row_reduction(&ecfg.jgrid, ta.shape().total());
    let include_gaussian = a.include_gaussian || cfg.get_or(None, "include-gaussian", false)?;
    let stats = match run_experiment2(&ecfg, &ta, &tb, include_gaussian) {
        Err(Error::ZeroDistance) => {
            bail!("zero distance: the two CP tensors are identical, distortion is undefined")
        }
        other => other?,
    };
    write_csv(output(r.out.as_deref())?, &stats)?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:e}"))
}

fn cmd_bounds(cfg: &Config, a: BoundsArgs) -> Result<()> {
    let dims: Vec<usize> = parse_list(&cfg.get_or(a.shape, "shape", "16,16,16".to_string())?)?;
    let rank = cfg.get_or(a.rank, "rank", 2)?;
    let points = cfg.get_or(a.points, "points", 10)?;
    let eps: Vec<f64> = parse_list(&cfg.get_or(a.eps, "eps", "0.5,0.25,0.125".to_string())?)?;
    let deltas: Vec<f64> = parse_list(&cfg.get_or(a.delta, "delta", "0.01".to_string())?)?;
    let c1 = cfg.get_or(a.c1, "c1", 1.0)?;
    let c2 = cfg.get_or(a.c2, "c2", 1.0)?;
    let c = cfg.get_or(a.c, "c", 1.0)?;
    let base: LogBase = cfg
        .get_or(a.log_base, "log-base", "e".to_string())?
        .parse()?;
    let mut out = output(cfg.pick(a.out, "out")?.as_deref())?;
    writeln!(out, "eps,delta,subspace,jlt,simplified,jin,min")?;
    for &d in &deltas {
        for &e in &eps {
            let b = BoundInputs::new(&dims, rank, points, e, d, d)?;
            let cols = [
                Some(bounds::j_subspace(&b)),
                Some(bounds::j_jlt(&b)),
                bounds::j_simplified(&b, c1, c2, base).ok(),
                bounds::j_jin(&b, c, base).ok(),
            ];
            let min = cols.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            let cells: Vec<String> = cols.iter().map(|v| fmt_opt(*v)).collect();
            writeln!(out, "{e},{d},{},{min:e}", cells.join(","))?;
        }
    }
    Ok(())
}

fn cmd_lsq(cfg: &Config, a: LsqArgs) -> Result<()> {
    let r = resolve(cfg, a.common, "16,16,16", "kfjlt", "2048", 100)?;
    let rank = cfg.get_or(a.rank, "rank", 5)?;
    let shape = Shape::new(r.dims.clone())?;
    let mut out = output(r.out.as_deref())?;
    writeln!(
        out,
        "kind,J,seed,sketched_residual,true_residual,opt,ratio,sigma_min_sq,perp_ratio"
    )?;
    for trial in 0..r.trials as u64 {
        let pseed = derive_seed(r.seed, &[0x15, trial]);
        let mut rng = rng_from_seed(pseed);
        let design = KrMatrix::new(
            r.dims
                .iter()
                .map(|&d| DMatrix::from_fn(d, rank, |_, _| rng.sample(StandardNormal)))
                .collect(),
        )?;
        let rhs = (0..shape.total())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let problem = LsProblem::new(design, rhs)?;
        for &kind in &r.kinds {
            for &j in &r.jgrid {
                let seed = derive_seed(r.seed, &[kind.id(), j as u64, trial]);
                let opts = SketchOptions {
                    replacement: r.replacement,
                    sampling_target: Some(problem.design()),
                    ..Default::default()
                };
                let op = SketchOperator::with_options(kind, &shape, j, seed, &opts)?;
                let rep = solve_sketched(&problem, &op)?;
                let audit = audit_perp(&problem, &op).ok();
                writeln!(
                    out,
                    "{kind},{j},{seed},{:e},{:e},{},{},{},{}",
                    rep.sketched_residual,
                    rep.true_residual,
                    fmt_opt(rep.opt),
                    fmt_opt(rep.ratio),
                    fmt_opt(audit.map(|x| x.sigma_min_sq)),
                    fmt_opt(audit.map(|x| x.perp_ratio)),
                )?;
            }
        }
    }
    Ok(())
}

fn read_factors(path: &Path) -> Result<KronVector> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let factors = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(parse_list::<f64>)
        .collect::<Result<Vec<_>>>()?;
    Ok(KronVector::new(factors)?)
}

fn cmd_sketch(cfg: &Config, a: SketchArgs) -> Result<()> {
    let kind: SketchKind = cfg.get_or(a.kind, "kind", "kfjlt".to_string())?.parse()?;
    let j = cfg.get_or(a.j, "j", 100)?;
    let seed = cfg.get_or(a.seed, "seed", 0)?;
    let x = match cfg.pick(a.input, "input")? {
        Some(p) => read_factors(&p)?,
        None => {
            let dims: Vec<usize> =
                parse_list(&cfg.get_or(a.shape, "shape", "16,16,16".to_string())?)?;
            let dist: Distribution = cfg.get_or(a.dist, "dist", "normal".to_string())?.parse()?;
            gen_input(
                dist,
                &Shape::new(dims)?,
                cfg.get_or(a.input_seed, "input-seed", 1)?,
            )?
        }
    };
    let opts = SketchOptions {
        replacement: cfg.pick(a.replacement, "replacement")?,
        ..Default::default()
    };
    let op = SketchOperator::with_options(kind, x.shape(), j, seed, &opts)?;
    let y = op.apply_kron(&x)?;
    let mut out = output(cfg.pick(a.out, "out")?.as_deref())?;
    for v in y {
        writeln!(out, "{v:e}")?;
    }
    log::info!("input norm {:e}", x.norm());
    Ok(())
}

fn cmd_idx(a: IdxArgs) -> Result<()> {
    match a.action {
        IdxAction::Inspect { file } => {
            let f = read_idx(&file)?;
            let dims: Vec<String> = f.dims.iter().map(u32::to_string).collect();
            println!(
                "type=u8 ndims={} dims={} elements={}",
                f.dims.len(),
                dims.join("x"),
                f.payload.len()
            );
        }
        IdxAction::Convert { file, out } => {
            let f = read_idx(&file)?;
            let row = if f.dims.len() <= 1 {
                f.payload.len().max(1)
            } else {
                f.payload.len() / f.dims[0].max(1) as usize
            };
            let mut w = output(out.as_deref())?;
            for chunk in f.payload.chunks(row.max(1)) {
                let cells: Vec<String> = chunk.iter().map(u8::to_string).collect();
                writeln!(w, "{}", cells.join(","))?;
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = Config::load(cli.config.as_deref())?;
    log::debug!("config keys: {:?}", cfg.keys().collect::<Vec<_>>());
    match cli.cmd {
        Command::Exp1(a) => exp1(&cfg, a),
        Command::Exp2(a) => exp2(&cfg, a),
        Command::Bounds(a) => cmd_bounds(&cfg, a),
        Command::Lsq(a) => cmd_lsq(&cfg, a),
        Command::Sketch(a) => cmd_sketch(&cfg, a),
        Command::Idx(a) => cmd_idx(a),
    }
}
