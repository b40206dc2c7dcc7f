//! Leverage scores, coherence, and row-sampling matrices `S_q = R Ω`.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::kron::{KrMatrix, RowSource, Shape};
use crate::rng::{rng_from_seed, SketchRng};

/// Relative singular-value threshold below which a direction counts as null.
pub const RANK_RTOL: f64 = 1e-12;

/// Per-row leverage scores of a matrix together with its numerical rank and
/// coherence.
#[derive(Clone, Debug, PartialEq)]
pub struct LeverageProfile {
    scores: Vec<f64>,
    rank: usize,
    coherence: f64,
}

impl LeverageProfile {
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn coherence(&self) -> f64 {
        self.coherence
    }
}

/// Orthonormal basis of `range(a)` from a thin SVD, truncated at the
/// numerical rank `max(I, R) · σ_max · 1e-12`.
pub fn orthonormal_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    let tol_scale = a.nrows().max(a.ncols()) as f64 * RANK_RTOL;
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| sigma_max > 0.0 && s > tol_scale * sigma_max)
        .map(|(k, _)| k)
        .collect();
    u.select_columns(&keep)
}

pub fn leverage_scores(a: &DMatrix<f64>) -> Result<LeverageProfile> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidShape(format!(
            "leverage scores need a nonempty matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let basis = orthonormal_basis(a);
    let scores: Vec<f64> = basis
        .row_iter()
        .map(|row| row.iter().map(|v| v * v).sum())
        .collect();
    let coherence = scores.iter().copied().fold(0.0, f64::max);
    Ok(LeverageProfile {
        scores,
        rank: basis.ncols(),
        coherence,
    })
}

/// Upper bound `∏_p μ(X^(p))` on the coherence of a Khatri-Rao product.
pub fn kr_leverage_upper(m: &KrMatrix) -> Result<f64> {
    m.factors()
        .iter()
        .map(|f| leverage_scores(f).map(|p| p.coherence()))
        .product()
}

/// A probability distribution over row indices `0..size`.
#[derive(Clone, Debug, PartialEq)]
pub enum SamplingDistribution {
    /// Uniform over `0..size`, kept symbolic so `size` may exceed any
    /// materialization cap.
    Uniform { size: usize },
    /// Explicit probabilities.
    Dense(Vec<f64>),
    /// Product distribution over a Kronecker index space: the probability of
    /// multi-index `(i_1, …, i_P)` is `∏_p marginals[p][i_p]`.
    Factored {
        shape: Shape,
        marginals: Vec<Vec<f64>>,
    },
}

fn normalized(weights: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "probabilities must be finite and nonnegative, got {bad}"
        )));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidDistribution("total mass is zero".into()));
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

impl SamplingDistribution {
    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        Ok(SamplingDistribution::Uniform { size })
    }

    /// Explicit distribution; rejects negative mass and rescales to sum 1.
    pub fn dense(weights: Vec<f64>) -> Result<Self> {
        Ok(SamplingDistribution::Dense(normalized(weights)?))
    }

    /// Product distribution; each marginal is validated and rescaled.
    pub fn factored(marginals: Vec<Vec<f64>>) -> Result<Self> {
        let shape = Shape::new(marginals.iter().map(Vec::len).collect())?;
        let marginals = marginals
            .into_iter()
            .map(normalized)
            .collect::<Result<Vec<_>>>()?;
        Ok(SamplingDistribution::Factored { shape, marginals })
    }

    pub fn size(&self) -> usize {
        match self {
            SamplingDistribution::Uniform { size } => *size,
            SamplingDistribution::Dense(q) => q.len(),
            SamplingDistribution::Factored { shape, .. } => shape.total(),
        }
    }

    pub fn prob(&self, i: usize) -> f64 {
        match self {
            SamplingDistribution::Uniform { size } => 1.0 / *size as f64,
            SamplingDistribution::Dense(q) => q[i],
            SamplingDistribution::Factored { shape, marginals } => {
                let mut digits = vec![0; shape.order()];
                shape.fill_digits(i, &mut digits);
                marginals.iter().zip(&digits).map(|(m, &d)| m[d]).product()
            }
        }
    }

    /// Number of indices with positive probability.
    pub fn support_size(&self) -> usize {
        match self {
            SamplingDistribution::Uniform { size } => *size,
            SamplingDistribution::Dense(q) => q.iter().filter(|&&v| v > 0.0).count(),
            SamplingDistribution::Factored { marginals, .. } => marginals
                .iter()
                .map(|m| m.iter().filter(|&&v| v > 0.0).count())
                .product(),
        }
    }
}

/// The random part of a sampling matrix: which rows are kept and how each
/// is rescaled.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePlan {
    indices: Vec<usize>,
    rescale: Vec<f64>,
    distribution: SamplingDistribution,
    replacement: bool,
}

impl SamplePlan {
    /// Plan that keeps every row once, in order, with unit rescaling.
    pub fn full(size: usize) -> Result<Self> {
        Ok(SamplePlan {
            indices: (0..size).collect(),
            rescale: vec![1.0; size],
            distribution: SamplingDistribution::uniform(size)?,
            replacement: false,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn rescale(&self) -> &[f64] {
        &self.rescale
    }

    pub fn distribution(&self) -> &SamplingDistribution {
        &self.distribution
    }

    pub fn replacement(&self) -> bool {
        self.replacement
    }

    /// Number of sampled rows `J`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Draws `j` row indices from `q` and attaches the rescaling
/// `1/√(J q_i)`.
///
/// Without replacement, indices are drawn one at a time from `q`
/// renormalized over the rows not yet chosen. The rescaling still uses the
/// original `q`; this matches common benchmark practice but is not unbiased.
pub fn draw_sample_plan(
    q: &SamplingDistribution,
    j: usize,
    replacement: bool,
    seed: u64,
) -> Result<SamplePlan> {
    if j == 0 {
        return Err(Error::InvalidArgument("J must be at least 1".into()));
    }
    if !replacement {
        let available = q.support_size();
        if j > available {
            return Err(Error::TooManySamples {
                requested: j,
                available,
            });
        }
    }
    let mut rng = rng_from_seed(seed);
    let indices = if replacement {
        draw_with_replacement(q, j, &mut rng)?
    } else {
        draw_without_replacement(q, j, &mut rng)?
    };
    let jf = j as f64;
    let rescale = indices
        .iter()
        .map(|&i| 1.0 / (jf * q.prob(i)).sqrt())
        .collect();
    Ok(SamplePlan {
        indices,
        rescale,
        distribution: q.clone(),
        replacement,
    })
}

fn weighted(weights: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(weights).map_err(|e| Error::InvalidDistribution(e.to_string()))
}

fn draw_with_replacement(
    q: &SamplingDistribution,
    j: usize,
    rng: &mut SketchRng,
) -> Result<Vec<usize>> {
    Ok(match q {
        SamplingDistribution::Uniform { size } => {
            (0..j).map(|_| rng.random_range(0..*size)).collect()
        }
        SamplingDistribution::Dense(w) => {
            let d = weighted(w)?;
            (0..j).map(|_| d.sample(rng)).collect()
        }
        SamplingDistribution::Factored { shape, marginals } => {
            let ds = marginals
                .iter()
                .map(|m| weighted(m))
                .collect::<Result<Vec<_>>>()?;
            (0..j)
                .map(|_| {
                    ds.iter()
                        .zip(shape.dims())
                        .fold(0usize, |acc, (d, &size)| acc * size + d.sample(rng))
                })
                .collect()
        }
    })
}

fn draw_without_replacement(
    q: &SamplingDistribution,
    j: usize,
    rng: &mut SketchRng,
) -> Result<Vec<usize>> {
    match q {
        SamplingDistribution::Uniform { size } => Ok(index::sample(rng, *size, j).into_vec()),
        SamplingDistribution::Dense(w) => {
            let mut remaining = w.clone();
            let mut d = weighted(&remaining)?;
            let mut out = Vec::with_capacity(j);
            for k in 0..j {
                let i = d.sample(rng);
                out.push(i);
                remaining[i] = 0.0;
                if k + 1 < j {
                    d = weighted(&remaining)?;
                }
            }
            Ok(out)
        }
        SamplingDistribution::Factored { .. } => {
            // Rejecting repeats of an i.i.d. stream from q is the same as
            // drawing from q renormalized over the remaining rows.
            let mut seen = std::collections::HashSet::with_capacity(j);
            let mut out = Vec::with_capacity(j);
            while out.len() < j {
                let i = draw_with_replacement(q, 1, rng)?[0];
                if seen.insert(i) {
                    out.push(i);
                }
            }
            Ok(out)
        }
    }
}

/// Returns `S_q A`: row `j` is `rescale_j` times row `indices_j` of `a`.
/// Only the sampled rows of `a` are ever evaluated.
pub fn apply_sample_plan<A: RowSource + ?Sized>(plan: &SamplePlan, a: &A) -> Result<DMatrix<f64>> {
    let ncols = a.ncols();
    let mut out = DMatrix::zeros(plan.len(), ncols);
    let mut row = vec![0.0; ncols];
    for (j, (&i, &s)) in plan.indices.iter().zip(&plan.rescale).enumerate() {
        if i >= a.nrows() {
            return Err(Error::IndexOutOfRange {
                index: i,
                bound: a.nrows(),
            });
        }
        a.row_into(i, &mut row);
        for (r, v) in row.iter().enumerate() {
            out[(j, r)] = s * v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn randn(rng: &mut SketchRng, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn orthonormal_columns() {
        let mut a = DMatrix::zeros(4, 2);
        a[(0, 0)] = 1.0;
        a[(1, 1)] = 1.0;
        let p = leverage_scores(&a).unwrap();
        assert_eq!(p.rank(), 2);
        for (s, e) in p.scores().iter().zip([1.0, 1.0, 0.0, 0.0]) {
            assert!((s - e).abs() < 1e-12);
        }
        assert!((p.coherence() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_column_attains_lower_bound() {
        let a = DMatrix::from_element(4, 1, 0.5);
        let p = leverage_scores(&a).unwrap();
        assert_eq!(p.rank(), 1);
        assert!(p.scores().iter().all(|s| (s - 0.25).abs() < 1e-12));
        assert!((p.coherence() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_rank_zero() {
        let p = leverage_scores(&DMatrix::zeros(5, 3)).unwrap();
        assert_eq!(p.rank(), 0);
        assert_eq!(p.coherence(), 0.0);
        assert!(p.scores().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn rank_deficient_detected() {
        let mut rng = rng_from_seed(11);
        let a = randn(&mut rng, 10, 2);
        let mut b = DMatrix::zeros(10, 3);
        b.columns_mut(0, 2).copy_from(&a);
        let c = a.column(0) * 2.0 - a.column(1);
        b.set_column(2, &c);
        let p = leverage_scores(&b).unwrap();
        assert_eq!(p.rank(), 2);
        assert!((p.scores().iter().sum::<f64>() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn svd_scores_match_pivoted_qr() {
        for seed in 0..5 {
            let mut rng = rng_from_seed(seed);
            let a = randn(&mut rng, 8, 3);
            let p = leverage_scores(&a).unwrap();
            let qr = a.clone().col_piv_qr();
            let q = qr.q();
            for i in 0..8 {
                let s: f64 = (0..3).map(|k| q[(i, k)] * q[(i, k)]).sum();
                assert!((s - p.scores()[i]).abs() < 1e-10);
            }
            let sum: f64 = p.scores().iter().sum();
            assert!((sum - 3.0).abs() < 1e-8);
            assert!(p.coherence() >= 3.0 / 8.0 - 1e-12 && p.coherence() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn kr_upper_simple_cases() {
        // orthonormal flat-row factors: 4x2 and 8x2 Hadamard-like columns
        let h4 = DMatrix::from_row_slice(4, 2, &[0.5, 0.5, 0.5, -0.5, 0.5, 0.5, 0.5, -0.5]);
        let s8 = 1.0 / 8f64.sqrt();
        let h8 = DMatrix::from_fn(8, 2, |i, r| if r == 1 && i % 2 == 1 { -s8 } else { s8 });
        let m = KrMatrix::new(vec![h4.clone(), h8]).unwrap();
        let upper = kr_leverage_upper(&m).unwrap();
        assert!((upper - (2.0 / 4.0) * (2.0 / 8.0)).abs() < 1e-12);

        let single = KrMatrix::new(vec![h4.clone()]).unwrap();
        assert_eq!(
            kr_leverage_upper(&single).unwrap(),
            leverage_scores(&h4).unwrap().coherence()
        );
    }

    #[test]
    fn kr_upper_dominates_materialized() {
        let mut rng = rng_from_seed(21);
        let m = KrMatrix::new(vec![randn(&mut rng, 4, 2), randn(&mut rng, 8, 2)]).unwrap();
        let exact = leverage_scores(&m.materialize().unwrap())
            .unwrap()
            .coherence();
        assert!(kr_leverage_upper(&m).unwrap() >= exact - 1e-12);
    }

    #[test]
    fn uniform_with_replacement_rescale() {
        let q = SamplingDistribution::uniform(4096).unwrap();
        let plan = draw_sample_plan(&q, 100, true, 3).unwrap();
        let expected = (4096.0f64 / 100.0).sqrt();
        assert!(plan.rescale().iter().all(|r| (r - expected).abs() < 1e-12));
    }

    #[test]
    fn point_mass_is_deterministic() {
        let mut w = vec![0.0; 6];
        w[3] = 1.0;
        let q = SamplingDistribution::dense(w).unwrap();
        let plan = draw_sample_plan(&q, 2, true, 99).unwrap();
        assert_eq!(plan.indices(), &[3, 3]);
        let s = 1.0 / 2f64.sqrt();
        assert!(plan.rescale().iter().all(|r| (r - s).abs() < 1e-15));
    }

    #[test]
    fn uniform_frequencies() {
        let q = SamplingDistribution::uniform(16).unwrap();
        let n = 100_000;
        let plan = draw_sample_plan(&q, n, true, 5).unwrap();
        let mut counts = [0usize; 16];
        for &i in plan.indices() {
            counts[i] += 1;
        }
        let p = 1.0 / 16.0;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - p).abs() <= 3.0 * se, "count {c}");
        }
    }

    #[test]
    fn without_replacement_distinct() {
        let q = SamplingDistribution::dense(vec![0.4, 0.1, 0.1, 0.2, 0.2]).unwrap();
        let plan = draw_sample_plan(&q, 5, false, 8).unwrap();
        let mut idx = plan.indices().to_vec();
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 1, 2, 3, 4]);
        assert!(!plan.replacement());
        // rescale uses the original q
        for (&i, &r) in plan.indices().iter().zip(plan.rescale()) {
            assert!((r - 1.0 / (5.0 * q.prob(i)).sqrt()).abs() < 1e-12);
        }

        let f = SamplingDistribution::factored(vec![vec![1.0, 1.0], vec![1.0, 0.0, 3.0]]).unwrap();
        let plan = draw_sample_plan(&f, 4, false, 1).unwrap();
        let mut idx = plan.indices().to_vec();
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 2, 3, 5]);
    }

    #[test]
    fn sampling_errors() {
        let q = SamplingDistribution::uniform(4).unwrap();
        assert!(matches!(
            draw_sample_plan(&q, 5, false, 0),
            Err(Error::TooManySamples {
                requested: 5,
                available: 4
            })
        ));
        assert!(matches!(
            SamplingDistribution::dense(vec![0.5, -0.1, 0.6]),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(draw_sample_plan(&q, 0, true, 0).is_err());
    }

    #[test]
    fn full_plan_reproduces_matrix() {
        let mut rng = rng_from_seed(31);
        let a = randn(&mut rng, 6, 3);
        let plan =
            draw_sample_plan(&SamplingDistribution::uniform(6).unwrap(), 6, false, 0).unwrap();
        assert!(plan.rescale().iter().all(|&r| (r - 1.0).abs() < 1e-15));
        let full = SamplePlan::full(6).unwrap();
        assert_eq!(apply_sample_plan(&full, &a).unwrap(), a);
    }

    #[test]
    fn identity_rows_are_rescaled_basis_vectors() {
        let id = DMatrix::<f64>::identity(5, 5);
        let q = SamplingDistribution::dense(vec![0.1, 0.2, 0.3, 0.2, 0.2]).unwrap();
        let plan = draw_sample_plan(&q, 7, true, 2).unwrap();
        let out = apply_sample_plan(&plan, &id).unwrap();
        for j in 0..7 {
            for c in 0..5 {
                let e = if c == plan.indices()[j] {
                    plan.rescale()[j]
                } else {
                    0.0
                };
                assert_eq!(out[(j, c)], e);
            }
        }
    }

    #[test]
    fn matches_explicit_r_omega() {
        let mut rng = rng_from_seed(41);
        let a = randn(&mut rng, 9, 2);
        let q = SamplingDistribution::dense((1..=9).map(|v| v as f64).collect()).unwrap();
        let plan = draw_sample_plan(&q, 4, true, 6).unwrap();
        let mut omega = DMatrix::zeros(4, 9);
        let mut rdiag = DMatrix::zeros(4, 4);
        for j in 0..4 {
            omega[(j, plan.indices()[j])] = 1.0;
            rdiag[(j, j)] = 1.0 / (4.0 * q.prob(plan.indices()[j])).sqrt();
        }
        let oracle = rdiag * omega * &a;
        let out = apply_sample_plan(&plan, &a).unwrap();
        assert!((out - oracle).norm() < 1e-12);
    }

    #[test]
    fn out_of_range_plan() {
        let plan = SamplePlan::full(5).unwrap();
        let small = DMatrix::<f64>::zeros(2, 1);
        assert!(matches!(
            apply_sample_plan(&plan, &small),
            Err(Error::IndexOutOfRange { index: 2, bound: 2 })
        ));
    }
}
