//! Monte Carlo distortion experiments.
//!
//! Both experiments report the distortion `| ||f(x) − f(y)||₂ / ||x − y||₂ − 1 |`
//! summarized per `(kind, J)`. Experiment 1 draws a fresh Kronecker pair and a
//! fresh operator every trial; experiment 2 fixes a pair of CP tensors and
//! redraws only the operator.
//!
//! Seeds: the trial input seed is `derive_seed(master, [0, J, trial])`, shared
//! by all kinds so they see identical inputs; the operator seed is
//! `derive_seed(master, [kind.id(), J, trial])`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Normal, StandardNormal};

use crate::cp::{cp_distance_exact, stack, CpTensor};
use crate::error::{Error, Result};
use crate::kron::{KrMatrix, KronVector, Shape};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sketch::{SketchKind, SketchOperator, SketchOptions};

/// Bumped whenever the CSV columns change.
pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "kind,J,trials,mean,std,max,seed,wallclock_ms";

const INPUT_LABEL: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distribution {
    /// i.i.d. standard normal factor entries.
    Normal,
    /// Three nonzeros per factor at distinct uniform positions, N(0, 100²).
    Sparse3,
    /// One entry equal to 100 per factor at a uniform position.
    Spike,
}

impl Distribution {
    pub fn name(self) -> &'static str {
        match self {
            Distribution::Normal => "normal",
            Distribution::Sparse3 => "sparse3",
            Distribution::Spike => "spike",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(Distribution::Normal),
            "sparse3" => Ok(Distribution::Sparse3),
            "spike" => Ok(Distribution::Spike),
            other => Err(Error::InvalidArgument(format!(
                "unknown distribution {other:?} (normal, sparse3, spike)"
            ))),
        }
    }
}

pub fn gen_input(dist: Distribution, shape: &Shape, seed: u64) -> Result<KronVector> {
    let mut rng = rng_from_seed(seed);
    let factors = shape
        .dims()
        .iter()
        .map(|&d| match dist {
            Distribution::Normal => Ok((0..d).map(|_| rng.sample(StandardNormal)).collect()),
            Distribution::Sparse3 => {
                if d < 3 {
                    return Err(Error::InvalidShape(format!(
                        "sparse3 needs every mode size >= 3, got {d}"
                    )));
                }
                let normal = Normal::new(0.0, 100.0).expect("valid std");
                let mut f = vec![0.0; d];
                for i in sample(&mut rng, d, 3) {
                    f[i] = rng.sample(normal);
                }
                Ok(f)
            }
            Distribution::Spike => {
                let mut f = vec![0.0; d];
                f[rng.random_range(0..d)] = 100.0;
                Ok(f)
            }
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    KronVector::new(factors)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialStats {
    pub kind: SketchKind,
    pub j: usize,
    /// Trials that contributed (pairs with zero distance are skipped).
    pub trials: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator; 0 for one trial).
    pub std: f64,
    pub max: f64,
    pub seed: u64,
    pub wallclock_ms: u128,
    pub values: Vec<f64>,
}

impl TrialStats {
    pub fn from_values(kind: SketchKind, j: usize, seed: u64, values: Vec<f64>) -> Self {
        let n = values.len();
        let mean = if n == 0 {
            0.0
        } else {
            values.iter().sum::<f64>() / n as f64
        };
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        let max = values.iter().copied().fold(0.0, f64::max);
        TrialStats {
            kind,
            j,
            trials: n,
            mean,
            std,
            max,
            seed,
            wallclock_ms: 0,
            values,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:e},{:e},{:e},{},{}",
            self.kind,
            self.j,
            self.trials,
            self.mean,
            self.std,
            self.max,
            self.seed,
            self.wallclock_ms
        )
    }
}

pub fn write_csv<W: Write>(mut out: W, stats: &[TrialStats]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for s in stats {
        writeln!(out, "{}", s.csv_row())?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub dist: Distribution,
    pub dims: Vec<usize>,
    pub jgrid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub kinds: Vec<SketchKind>,
    /// Overrides each kind's default sampling mode.
    pub replacement: Option<bool>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<Shape> {
        if self.jgrid.is_empty() {
            return Err(Error::InvalidArgument("J grid is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        if self.kinds.is_empty() {
            return Err(Error::InvalidArgument("no sketch kinds selected".into()));
        }
        Shape::new(self.dims.clone())
    }

    fn operator(
        &self,
        kind: SketchKind,
        shape: &Shape,
        j: usize,
        trial: usize,
        target: &KrMatrix,
    ) -> Result<SketchOperator> {
        let seed = derive_seed(self.seed, &[kind.id(), j as u64, trial as u64]);
        let opts = SketchOptions {
            replacement: self.replacement,
            sampling_target: Some(target),
            ..Default::default()
        };
        SketchOperator::with_options(kind, shape, j, seed, &opts)
    }
}

/// Fraction of rows removed by sketching `Ĩ` rows down to `J`.
pub fn row_reduction(j: usize, total: usize) -> f64 {
    1.0 - j as f64 / total as f64
}

/// `||S [X, Y] u||₂` for a stacked pair.
fn sketched_difference(op: &SketchOperator, m: &KrMatrix, signs: &[f64]) -> Result<f64> {
    Ok((op.apply_kr(m)? * DVector::from_column_slice(signs)).norm())
}

/// Experiment 1: Kronecker-vector pairs drawn fresh every trial.
pub fn run_experiment1(cfg: &ExperimentConfig) -> Result<Vec<TrialStats>> {
    let shape = cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.kinds.len() * cfg.jgrid.len());
    for &kind in &cfg.kinds {
        for &j in &cfg.jgrid {
            let start = Instant::now();
            let mut values = Vec::with_capacity(cfg.trials);
            for trial in 0..cfg.trials {
                let input_seed = derive_seed(cfg.seed, &[INPUT_LABEL, j as u64, trial as u64]);
                let x = gen_input(cfg.dist, &shape, derive_seed(input_seed, &[0]))?;
                let y = gen_input(cfg.dist, &shape, derive_seed(input_seed, &[1]))?;
                let pair = KrMatrix::from_columns(&[x, y])?;
                let g = pair.gram();
                let dist2 = g[(0, 0)] + g[(1, 1)] - 2.0 * g[(0, 1)];
                if pair.factors().iter().all(|f| f.column(0) == f.column(1)) || dist2 <= 0.0 {
                    log::info!("{kind} J={j} trial {trial}: x = y, skipped");
                    continue;
                }
                let op = cfg.operator(kind, &shape, j, trial, &pair)?;
                let num = sketched_difference(&op, &pair, &[1.0, -1.0])?;
                values.push((num / dist2.sqrt() - 1.0).abs());
            }
            let mut stats = TrialStats::from_values(kind, j, cfg.seed, values);
            stats.wallclock_ms = start.elapsed().as_millis();
            out.push(stats);
        }
    }
    Ok(out)
}

/// Experiment 2: one fixed pair of CP tensors, fresh operators per trial.
///
/// Gaussian is dropped from `cfg.kinds` unless `include_gaussian` is set.
/// KFJLT runs on the zero-padded pair when a mode size is not a power of
/// two; padding leaves the exact distance unchanged.
pub fn run_experiment2(
    cfg: &ExperimentConfig,
    a: &CpTensor,
    b: &CpTensor,
    include_gaussian: bool,
) -> Result<Vec<TrialStats>> {
    let shape = a.shape().clone();
    let mut cfg = cfg.clone();
    cfg.dims = shape.dims().to_vec();
    cfg.validate()?;
    let exact = cp_distance_exact(a, b)?;
    if exact == 0.0 {
        return Err(Error::ZeroDistance);
    }
    let stacked = stack(a, b)?;
    let padded = if shape.all_pow2() {
        None
    } else {
        Some(stack(&a.pad_pow2(), &b.pad_pow2())?)
    };
    let kinds: Vec<SketchKind> = cfg
        .kinds
        .iter()
        .copied()
        .filter(|&k| include_gaussian || k != SketchKind::Gaussian)
        .collect();
    let mut out = Vec::with_capacity(kinds.len() * cfg.jgrid.len());
    for &kind in &kinds {
        for &j in &cfg.jgrid {
            let start = Instant::now();
            let pair = match (&padded, kind) {
                (Some(p), SketchKind::Kfjlt) => p,
                _ => &stacked,
            };
            let values = (0..cfg.trials)
                .map(|trial| {
                    let op = cfg.operator(kind, pair.matrix.shape(), j, trial, &pair.matrix)?;
                    let num = sketched_difference(&op, &pair.matrix, &pair.signs)?;
                    Ok((num / exact - 1.0).abs())
                })
                .collect::<Result<Vec<_>>>()?;
            let mut stats = TrialStats::from_values(kind, j, cfg.seed, values);
            stats.wallclock_ms = start.elapsed().as_millis();
            out.push(stats);
        }
    }
    Ok(out)
}
