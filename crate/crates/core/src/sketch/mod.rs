//! Sketch operators for Kronecker-structured inputs.
//!
//! Five kinds share one interface: a dense Gaussian baseline, the Kronecker
//! fast JL transform (per-mode randomized Hadamard transforms followed by
//! row sampling of the implicit Kronecker product), the tensor random
//! projection, TensorSketch, and sampling from a product of per-mode
//! leverage-score distributions.
//!
//! Every operator is fully determined by `(kind, shape, J, seed, options)`
//! and is immutable once built.

mod tensorsketch;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub use tensorsketch::{poly_eval, HashPair, MERSENNE_61};

use crate::error::{Error, Result};
use crate::hadamard::Rht;
use crate::kron::{KrMatrix, KronVector, Shape, DEFAULT_MATERIALIZATION_CAP};
use crate::leverage::{draw_sample_plan, leverage_scores, SamplePlan, SamplingDistribution};
use crate::rng::{derive_seed, rng_from_seed};

// Sub-stream labels for seed derivation.
const STREAM_RHT: u64 = 1;
const STREAM_PLAN: u64 = 2;
const STREAM_GAUSSIAN: u64 = 3;
const STREAM_TRP: u64 = 4;
const STREAM_HASH: u64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SketchKind {
    Gaussian,
    Kfjlt,
    Trp,
    TensorSketch,
    Sampling,
}

impl SketchKind {
    pub const ALL: [SketchKind; 5] = [
        SketchKind::Gaussian,
        SketchKind::Kfjlt,
        SketchKind::Trp,
        SketchKind::TensorSketch,
        SketchKind::Sampling,
    ];

    /// The four kinds that never materialize their input.
    pub const STRUCTURED: [SketchKind; 4] = [
        SketchKind::Kfjlt,
        SketchKind::Trp,
        SketchKind::TensorSketch,
        SketchKind::Sampling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SketchKind::Gaussian => "gaussian",
            SketchKind::Kfjlt => "kfjlt",
            SketchKind::Trp => "trp",
            SketchKind::TensorSketch => "tensorsketch",
            SketchKind::Sampling => "sampling",
        }
    }

    /// Stable numeric label used in seed derivation.
    pub fn id(self) -> u64 {
        match self {
            SketchKind::Gaussian => 1,
            SketchKind::Kfjlt => 2,
            SketchKind::Trp => 3,
            SketchKind::TensorSketch => 4,
            SketchKind::Sampling => 5,
        }
    }

    /// Whether the kind samples with replacement unless told otherwise.
    pub fn default_replacement(self) -> bool {
        !matches!(self, SketchKind::Kfjlt)
    }
}

impl fmt::Display for SketchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SketchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SketchKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sketch kind {s:?}")))
    }
}

/// Optional knobs for [`SketchOperator::with_options`].
#[derive(Clone, Debug)]
pub struct SketchOptions<'a> {
    /// Overrides the kind's default sampling mode (KFJLT and sampling only).
    pub replacement: Option<bool>,
    /// Matrix whose per-mode leverage scores drive the sampling kind. Without
    /// one, the sampling kind uses uniform marginals.
    pub sampling_target: Option<&'a KrMatrix>,
    /// Materialization cap for the Gaussian baseline (entries of `J × Ĩ`).
    pub cap: usize,
}

impl Default for SketchOptions<'_> {
    fn default() -> Self {
        SketchOptions {
            replacement: None,
            sampling_target: None,
            cap: DEFAULT_MATERIALIZATION_CAP,
        }
    }
}

/// Kind-specific random parameters of an operator.
#[derive(Clone, Debug, PartialEq)]
pub enum SketchParams {
    /// `J × Ĩ` matrix, already scaled by `1/√J`.
    Gaussian {
        matrix: DMatrix<f64>,
    },
    Kfjlt {
        rhts: Vec<Rht>,
        plan: SamplePlan,
    },
    /// One `I_p × J` standard-normal block per mode. Row `j` of the sketch
    /// is `(1/√J) ⊗_p block_p[:, j]ᵀ`.
    Trp {
        blocks: Vec<DMatrix<f64>>,
    },
    TensorSketch {
        hashes: Vec<HashPair>,
    },
    Sampling {
        plan: SamplePlan,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SketchOperator {
    kind: SketchKind,
    shape: Shape,
    j: usize,
    seed: u64,
    params: SketchParams,
    // Digits of each sampled row, flattened `J × P`, for the sampling kinds.
    sampled_digits: Vec<usize>,
}

impl SketchOperator {
    pub fn new(kind: SketchKind, shape: &Shape, j: usize, seed: u64) -> Result<Self> {
        Self::with_options(kind, shape, j, seed, &SketchOptions::default())
    }

    pub fn with_options(
        kind: SketchKind,
        shape: &Shape,
        j: usize,
        seed: u64,
        opts: &SketchOptions<'_>,
    ) -> Result<Self> {
        if j == 0 {
            return Err(Error::InvalidArgument(
                "embedding dimension J must be >= 1".into(),
            ));
        }
        let replacement = opts.replacement.unwrap_or(kind.default_replacement());
        let params = match kind {
            SketchKind::Gaussian => {
                let total = shape.total();
                let entries = total.checked_mul(j).ok_or(Error::DimensionOverflow)?;
                if entries > opts.cap {
                    return Err(Error::TooLarge {
                        entries,
                        cap: opts.cap,
                    });
                }
                let mut rng = rng_from_seed(derive_seed(seed, &[STREAM_GAUSSIAN]));
                let scale = 1.0 / (j as f64).sqrt();
                let matrix = DMatrix::from_fn(j, total, |_, _| {
                    scale * rng.sample::<f64, _>(StandardNormal)
                });
                SketchParams::Gaussian { matrix }
            }
            SketchKind::Kfjlt => {
                if !shape.all_pow2() {
                    return Err(Error::InvalidShape(format!(
                        "KFJLT needs power-of-two mode sizes, got {:?}; pad with pad_pow2",
                        shape.dims()
                    )));
                }
                let rhts = kfjlt_rhts(shape, seed)?;
                let q = SamplingDistribution::uniform(shape.total())?;
                let plan = draw_sample_plan(&q, j, replacement, derive_seed(seed, &[STREAM_PLAN]))?;
                SketchParams::Kfjlt { rhts, plan }
            }
            SketchKind::Trp => {
                let blocks = shape
                    .dims()
                    .iter()
                    .enumerate()
                    .map(|(p, &ip)| {
                        let mut rng = rng_from_seed(derive_seed(seed, &[STREAM_TRP, p as u64]));
                        DMatrix::from_fn(ip, j, |_, _| rng.sample(StandardNormal))
                    })
                    .collect();
                SketchParams::Trp { blocks }
            }
            SketchKind::TensorSketch => {
                let hashes = shape
                    .dims()
                    .iter()
                    .enumerate()
                    .map(|(p, &ip)| {
                        HashPair::from_seed(ip, j, derive_seed(seed, &[STREAM_HASH, p as u64]))
                    })
                    .collect();
                SketchParams::TensorSketch { hashes }
            }
            SketchKind::Sampling => {
                let q = match opts.sampling_target {
                    Some(m) => {
                        if m.shape() != shape {
                            return Err(Error::InvalidShape(format!(
                                "sampling target shape {:?} differs from operator shape {:?}",
                                m.shape().dims(),
                                shape.dims()
                            )));
                        }
                        sampling_distribution(m)?
                    }
                    None => SamplingDistribution::factored(
                        shape.dims().iter().map(|&d| vec![1.0; d]).collect(),
                    )?,
                };
                let plan = draw_sample_plan(&q, j, replacement, derive_seed(seed, &[STREAM_PLAN]))?;
                SketchParams::Sampling { plan }
            }
        };
        Ok(Self::assemble(kind, shape, j, seed, params))
    }

    /// KFJLT whose sampling step is the given plan. With
    /// [`SamplePlan::full`] the operator is the orthogonal map `Φ` itself.
    pub fn kfjlt_with_plan(shape: &Shape, seed: u64, plan: SamplePlan) -> Result<Self> {
        if !shape.all_pow2() {
            return Err(Error::InvalidShape(format!(
                "KFJLT needs power-of-two mode sizes, got {:?}",
                shape.dims()
            )));
        }
        if plan.indices().iter().any(|&i| i >= shape.total()) {
            return Err(Error::InvalidArgument("sample plan indexes past Ĩ".into()));
        }
        let rhts = kfjlt_rhts(shape, seed)?;
        let j = plan.len();
        Ok(Self::assemble(
            SketchKind::Kfjlt,
            shape,
            j,
            seed,
            SketchParams::Kfjlt { rhts, plan },
        ))
    }

    fn assemble(
        kind: SketchKind,
        shape: &Shape,
        j: usize,
        seed: u64,
        params: SketchParams,
    ) -> Self {
        let sampled_digits = match &params {
            SketchParams::Kfjlt { plan, .. } | SketchParams::Sampling { plan } => {
                let p = shape.order();
                let mut digits = vec![0; plan.len() * p];
                for (chunk, &i) in digits.chunks_exact_mut(p).zip(plan.indices()) {
                    shape.fill_digits(i, chunk);
                }
                digits
            }
            _ => Vec::new(),
        };
        SketchOperator {
            kind,
            shape: shape.clone(),
            j,
            seed,
            params,
            sampled_digits,
        }
    }

    pub fn kind(&self) -> SketchKind {
        self.kind
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Output dimension `J`.
    pub fn output_dim(&self) -> usize {
        self.j
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &SketchParams {
        &self.params
    }

    fn check_shape(&self, shape: &Shape) -> Result<()> {
        if shape != &self.shape {
            return Err(Error::InvalidShape(format!(
                "operator expects shape {:?}, input has {:?}",
                self.shape.dims(),
                shape.dims()
            )));
        }
        Ok(())
    }

    /// Sketch of a Kronecker vector, computed from its factors.
    pub fn apply_kron(&self, v: &KronVector) -> Result<Vec<f64>> {
        self.check_shape(v.shape())?;
        match &self.params {
            SketchParams::Gaussian { matrix } => {
                let x = DVector::from_vec(v.materialize()?);
                Ok((matrix * x).data.into())
            }
            SketchParams::Kfjlt { rhts, plan } => {
                let mixed = rhts
                    .iter()
                    .zip(v.factors())
                    .map(|(t, f)| t.apply(f))
                    .collect::<Result<Vec<_>>>()?;
                Ok(self.gather_sampled(&mixed, plan.rescale()))
            }
            SketchParams::Sampling { plan } => Ok(self.gather_sampled(v.factors(), plan.rescale())),
            SketchParams::Trp { blocks } => {
                let mut out = vec![1.0 / (self.j as f64).sqrt(); self.j];
                for (block, f) in blocks.iter().zip(v.factors()) {
                    let proj = block.tr_mul(&DVector::from_column_slice(f));
                    out.iter_mut().zip(proj.iter()).for_each(|(o, p)| *o *= p);
                }
                Ok(out)
            }
            SketchParams::TensorSketch { hashes } => {
                let parts: Vec<Vec<f64>> = hashes
                    .iter()
                    .zip(v.factors())
                    .map(|(h, f)| h.count_sketch(f, self.j))
                    .collect();
                Ok(tensorsketch::circular_convolve(&parts))
            }
        }
    }

    fn gather_sampled(&self, factors: &[Vec<f64>], rescale: &[f64]) -> Vec<f64> {
        let p = self.shape.order();
        self.sampled_digits
            .chunks_exact(p)
            .zip(rescale)
            .map(|(digits, &s)| {
                s * factors
                    .iter()
                    .zip(digits)
                    .map(|(f, &d)| f[d])
                    .product::<f64>()
            })
            .collect()
    }

    /// Column-wise sketch of a Khatri-Rao matrix; returns `J × R`.
    pub fn apply_kr(&self, m: &KrMatrix) -> Result<DMatrix<f64>> {
        self.check_shape(m.shape())?;
        let mut out = DMatrix::zeros(self.j, m.ncols());
        for r in 0..m.ncols() {
            let col = self.apply_kron(&m.column(r))?;
            out.column_mut(r).copy_from_slice(&col);
        }
        Ok(out)
    }

    /// Sketch of an arbitrary dense vector of length `Ĩ` (row-major
    /// Kronecker ordering).
    pub fn apply_dense(&self, x: &[f64]) -> Result<Vec<f64>> {
        let total = self.shape.total();
        if x.len() != total {
            return Err(Error::LengthMismatch {
                expected: total,
                found: x.len(),
            });
        }
        match &self.params {
            SketchParams::Gaussian { matrix } => {
                Ok((matrix * DVector::from_column_slice(x)).data.into())
            }
            SketchParams::Kfjlt { rhts, plan } => {
                let mut mixed = x.to_vec();
                for (p, t) in rhts.iter().enumerate() {
                    apply_along_mode(&self.shape, p, &mut mixed, |fiber| t.apply_in_place(fiber))?;
                }
                Ok(gather_dense(&mixed, plan))
            }
            SketchParams::Sampling { plan } => Ok(gather_dense(x, plan)),
            SketchParams::Trp { blocks } => Ok(trp_dense(&self.shape, blocks, self.j, x)),
            SketchParams::TensorSketch { hashes } => {
                let mut out = vec![0.0; self.j];
                let mut digits = vec![0; self.shape.order()];
                for (i, &v) in x.iter().enumerate() {
                    if v == 0.0 {
                        continue;
                    }
                    self.shape.fill_digits(i, &mut digits);
                    let mut bucket = 0;
                    let mut sign = 1.0;
                    for (h, &d) in hashes.iter().zip(&digits) {
                        bucket += h.buckets()[d];
                        sign *= h.signs()[d];
                    }
                    out[bucket % self.j] += sign * v;
                }
                Ok(out)
            }
        }
    }

    /// Sketch of each column of a dense `Ĩ × R` matrix.
    pub fn apply_dense_matrix(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.j, a.ncols());
        for r in 0..a.ncols() {
            let col: Vec<f64> = a.column(r).iter().copied().collect();
            out.column_mut(r).copy_from_slice(&self.apply_dense(&col)?);
        }
        Ok(out)
    }
}

fn kfjlt_rhts(shape: &Shape, seed: u64) -> Result<Vec<Rht>> {
    shape
        .dims()
        .iter()
        .enumerate()
        .map(|(p, &ip)| Rht::from_seed(ip, derive_seed(seed, &[STREAM_RHT, p as u64])))
        .collect()
}

fn gather_dense(x: &[f64], plan: &SamplePlan) -> Vec<f64> {
    plan.indices()
        .iter()
        .zip(plan.rescale())
        .map(|(&i, &s)| s * x[i])
        .collect()
}

/// Applies `f` to every mode-`p` fiber of the row-major tensor `x`.
fn apply_along_mode(
    shape: &Shape,
    p: usize,
    x: &mut [f64],
    mut f: impl FnMut(&mut [f64]) -> Result<()>,
) -> Result<()> {
    let size = shape.dims()[p];
    let stride: usize = shape.dims()[p + 1..].iter().product();
    let block = size * stride;
    let mut fiber = vec![0.0; size];
    for outer in x.chunks_exact_mut(block) {
        for s in 0..stride {
            for (k, v) in fiber.iter_mut().enumerate() {
                *v = outer[k * stride + s];
            }
            f(&mut fiber)?;
            for (k, v) in fiber.iter().enumerate() {
                outer[k * stride + s] = *v;
            }
        }
    }
    Ok(())
}

/// `(1/√J) Σ_i x_i ∏_p B_p[i_p, j]`, contracting the last mode first.
fn trp_dense(shape: &Shape, blocks: &[DMatrix<f64>], j: usize, x: &[f64]) -> Vec<f64> {
    let dims = shape.dims();
    let last = dims.len() - 1;
    let rest = shape.total() / dims[last];
    // acc[(r, col)] over remaining leading index r
    let xm = DMatrix::from_row_slice(rest, dims[last], x);
    let mut acc = xm * &blocks[last];
    let mut rest = rest;
    for p in (0..last).rev() {
        let outer = rest / dims[p];
        let mut next = DMatrix::zeros(outer, j);
        for o in 0..outer {
            for k in 0..dims[p] {
                let row = o * dims[p] + k;
                for c in 0..j {
                    next[(o, c)] += acc[(row, c)] * blocks[p][(k, c)];
                }
            }
        }
        acc = next;
        rest = outer;
    }
    let scale = 1.0 / (j as f64).sqrt();
    acc.row(0).iter().map(|v| v * scale).collect()
}

/// Product-of-leverage-scores distribution over the rows of a Khatri-Rao
/// matrix, kept in factored form.
///
/// Mode `p` contributes the marginal `ℓ(X^(p)) / rank(X^(p))`. A factor
/// with rank below `R` is logged; a zero factor falls back to a uniform
/// marginal.
pub fn sampling_distribution(m: &KrMatrix) -> Result<SamplingDistribution> {
    let r = m.ncols();
    let marginals = m
        .factors()
        .iter()
        .enumerate()
        .map(|(p, f)| {
            let prof = leverage_scores(f)?;
            if prof.rank() == 0 {
                log::warn!("factor {p} is zero; using a uniform marginal");
                return Ok(vec![1.0; f.nrows()]);
            }
            if prof.rank() < r {
                log::warn!(
                    "factor {p} has rank {} < R = {r}; marginal renormalized",
                    prof.rank()
                );
            }
            Ok(prof.scores().to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    SamplingDistribution::factored(marginals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    fn random_kron(seed: u64, dims: &[usize]) -> KronVector {
        let mut rng = rng_from_seed(seed);
        KronVector::new(
            dims.iter()
                .map(|&d| (0..d).map(|_| rng.sample(StandardNormal)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn kind_names_round_trip() {
        for k in SketchKind::ALL {
            assert_eq!(k.name().parse::<SketchKind>().unwrap(), k);
        }
        assert!("fourier".parse::<SketchKind>().is_err());
    }

    #[test]
    fn kfjlt_requires_pow2() {
        assert!(matches!(
            SketchOperator::new(SketchKind::Kfjlt, &shape(&[12, 16]), 10, 0),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn without_replacement_caps_j() {
        assert!(matches!(
            SketchOperator::new(SketchKind::Kfjlt, &shape(&[4, 4]), 17, 0),
            Err(Error::TooManySamples {
                requested: 17,
                available: 16
            })
        ));
        let with = SketchOptions {
            replacement: Some(true),
            ..Default::default()
        };
        assert!(
            SketchOperator::with_options(SketchKind::Kfjlt, &shape(&[4, 4]), 17, 0, &with).is_ok()
        );
    }

    #[test]
    fn gaussian_guarded_by_cap() {
        let opts = SketchOptions {
            cap: 1000,
            ..Default::default()
        };
        assert!(matches!(
            SketchOperator::with_options(SketchKind::Gaussian, &shape(&[16, 16]), 10, 0, &opts),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let op = SketchOperator::new(SketchKind::Trp, &shape(&[4, 4]), 5, 0).unwrap();
        let v = random_kron(0, &[4, 8]);
        assert!(matches!(op.apply_kron(&v), Err(Error::InvalidShape(_))));
        assert!(matches!(
            op.apply_dense(&[0.0; 3]),
            Err(Error::LengthMismatch {
                expected: 16,
                found: 3
            })
        ));
    }

    #[test]
    fn dense_path_matches_factored_path() {
        let s = shape(&[4, 8, 2]);
        let v = random_kron(7, &[4, 8, 2]);
        let dense = v.materialize().unwrap();
        for kind in SketchKind::ALL {
            let op = SketchOperator::new(kind, &s, 20, 3).unwrap();
            let a = op.apply_kron(&v).unwrap();
            let b = op.apply_dense(&dense).unwrap();
            let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-12 * scale, "{kind}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn tensorsketch_of_basis_vector_is_one_hot() {
        let s = shape(&[16, 16]);
        let op = SketchOperator::new(SketchKind::TensorSketch, &s, 50, 11).unwrap();
        let mut e1 = vec![0.0; 16];
        e1[3] = 1.0;
        let mut e2 = vec![0.0; 16];
        e2[9] = 1.0;
        let out = op
            .apply_kron(&KronVector::new(vec![e1, e2]).unwrap())
            .unwrap();
        let nz: Vec<f64> = out.into_iter().filter(|&v| v != 0.0).collect();
        assert_eq!(nz.len(), 1);
        assert_eq!(nz[0].abs(), 1.0);
    }

    #[test]
    fn full_plan_kfjlt_is_orthogonal() {
        let s = shape(&[8, 4, 16]);
        let op =
            SketchOperator::kfjlt_with_plan(&s, 5, SamplePlan::full(s.total()).unwrap()).unwrap();
        let v = random_kron(2, &[8, 4, 16]);
        let out = op.apply_kron(&v).unwrap();
        let n = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - v.norm()).abs() <= 1e-10 * v.norm());
    }

    #[test]
    fn deterministic_from_seed() {
        let s = shape(&[8, 8]);
        let v = random_kron(1, &[8, 8]);
        for kind in SketchKind::ALL {
            let a = SketchOperator::new(kind, &s, 12, 77).unwrap();
            let b = SketchOperator::new(kind, &s, 12, 77).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.apply_kron(&v).unwrap(), b.apply_kron(&v).unwrap());
            let c = SketchOperator::new(kind, &s, 12, 78).unwrap();
            assert_ne!(a.apply_kron(&v).unwrap(), c.apply_kron(&v).unwrap());
        }
    }

    #[test]
    fn uniform_marginals_without_target() {
        let s = shape(&[4, 4]);
        let op = SketchOperator::new(SketchKind::Sampling, &s, 8, 0).unwrap();
        match op.params() {
            SketchParams::Sampling { plan } => {
                assert!(plan.replacement());
                assert!(plan
                    .rescale()
                    .iter()
                    .all(|r| (r - (16.0f64 / 8.0).sqrt()).abs() < 1e-12));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn sampling_distribution_of_flat_factors_is_uniform() {
        let h = DMatrix::from_row_slice(4, 2, &[0.5, 0.5, 0.5, -0.5, 0.5, 0.5, 0.5, -0.5]);
        let m = KrMatrix::new(vec![h.clone(), h]).unwrap();
        let q = sampling_distribution(&m).unwrap();
        for i in 0..16 {
            assert!((q.prob(i) - 1.0 / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_distribution_matches_materialized_product() {
        let mut rng = rng_from_seed(8);
        let a = DMatrix::from_fn(4, 2, |_, _| rng.sample(StandardNormal));
        let b = DMatrix::from_fn(8, 2, |_, _| rng.sample(StandardNormal));
        let la = leverage_scores(&a).unwrap();
        let lb = leverage_scores(&b).unwrap();
        let m = KrMatrix::new(vec![a, b]).unwrap();
        let q = sampling_distribution(&m).unwrap();
        let mut total = 0.0;
        for i in 0..4 {
            for k in 0..8 {
                let expected = la.scores()[i] * lb.scores()[k] / 4.0;
                assert!((q.prob(i * 8 + k) - expected).abs() < 1e-12);
                total += q.prob(i * 8 + k);
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_mode_sampling_is_exact_leverage() {
        let mut rng = rng_from_seed(9);
        let a = DMatrix::from_fn(10, 3, |_, _| rng.sample(StandardNormal));
        let l = leverage_scores(&a).unwrap();
        let q = sampling_distribution(&KrMatrix::new(vec![a]).unwrap()).unwrap();
        for i in 0..10 {
            assert!((q.prob(i) - l.scores()[i] / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_factor_still_normalized() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 0.0, 0.0]);
        let q = sampling_distribution(&KrMatrix::new(vec![a]).unwrap()).unwrap();
        let total: f64 = (0..3).map(|i| q.prob(i)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(q.prob(2), 0.0);
    }
}
