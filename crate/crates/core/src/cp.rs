//! CP-format tensors: exact and sketched distances, and a small CP-ALS.
//!
//! A rank-`R` CP tensor `Σ_r a_r^(1) ∘ … ∘ a_r^(P)` vectorizes (row-major)
//! to `X 1` with `X = A^(1) ⊙ … ⊙ A^(P)`, so the Frobenius distance between
//! two CP tensors is `||[X, Y] u||₂` with `u = (1, …, 1, -1, …, -1)`.
//!
//! On-disk layout (see [`CpTensor::save`]): a directory with one file
//! `factor_<p>.bin` per mode, each holding two little-endian `u64` dims
//! (rows, cols) followed by the column-major entries as little-endian `f64`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kron::{KrMatrix, Shape, DEFAULT_MATERIALIZATION_CAP};
use crate::rng::rng_from_seed;
use crate::sketch::SketchOperator;

/// Dense tensor in row-major order (last mode fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if data.len() != shape.total() {
            return Err(Error::LengthMismatch {
                expected: shape.total(),
                found: data.len(),
            });
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let data = vec![0.0; shape.total()];
        Ok(DenseTensor { shape, data })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Rank-`R` CP tensor; any weights live in the first factor.
#[derive(Clone, Debug, PartialEq)]
pub struct CpTensor {
    kr: KrMatrix,
}

impl CpTensor {
    pub fn new(factors: Vec<DMatrix<f64>>) -> Result<Self> {
        Ok(CpTensor {
            kr: KrMatrix::new(factors)?,
        })
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        self.kr.factors()
    }

    pub fn shape(&self) -> &Shape {
        self.kr.shape()
    }

    pub fn rank(&self) -> usize {
        self.kr.ncols()
    }

    /// The Khatri-Rao matrix whose column sum is the vectorized tensor.
    pub fn khatri_rao(&self) -> &KrMatrix {
        &self.kr
    }

    /// Appends zero rows so every mode size is a power of two. The tensor's
    /// nonzero entries, norms and distances are unchanged.
    pub fn pad_pow2(&self) -> CpTensor {
        let factors = self
            .factors()
            .iter()
            .map(|f| {
                f.clone()
                    .resize_vertically(f.nrows().next_power_of_two(), 0.0)
            })
            .collect();
        CpTensor::new(factors).expect("padding keeps R")
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        let m = self.kr.materialize_with_cap(DEFAULT_MATERIALIZATION_CAP)?;
        let data = m.column_sum().data.into();
        DenseTensor::new(self.shape().dims().to_vec(), data)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (p, f) in self.factors().iter().enumerate() {
            let mut bytes = Vec::with_capacity(16 + 8 * f.len());
            bytes.extend_from_slice(&(f.nrows() as u64).to_le_bytes());
            bytes.extend_from_slice(&(f.ncols() as u64).to_le_bytes());
            for v in f.iter() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            fs::File::create(dir.join(format!("factor_{p}.bin")))?.write_all(&bytes)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let mut factors = Vec::new();
        loop {
            let path = dir.join(format!("factor_{}.bin", factors.len()));
            if !path.exists() {
                break;
            }
            let mut bytes = Vec::new();
            fs::File::open(&path)?.read_to_end(&mut bytes)?;
            factors.push(decode_matrix(&bytes)?);
        }
        if factors.is_empty() {
            return Err(Error::InvalidShape(format!(
                "no factor_0.bin in {}",
                dir.display()
            )));
        }
        CpTensor::new(factors)
    }
}

fn decode_matrix(bytes: &[u8]) -> Result<DMatrix<f64>> {
    let word = |k: usize| -> Result<[u8; 8]> {
        bytes
            .get(8 * k..8 * k + 8)
            .map(|s| s.try_into().expect("slice of length 8"))
            .ok_or(Error::Truncated {
                expected: 8 * k + 8,
                found: bytes.len(),
            })
    };
    let rows = u64::from_le_bytes(word(0)?) as usize;
    let cols = u64::from_le_bytes(word(1)?) as usize;
    let count = rows.checked_mul(cols).ok_or(Error::DimensionOverflow)?;
    let expected = 16 + 8 * count;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::TrailingBytes(bytes.len() - expected));
    }
    let data = (0..count)
        .map(|k| word(k + 2).map(f64::from_le_bytes))
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_vec(rows, cols, data))
}

/// `[X, Y]` together with the sign vector `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedKr {
    pub matrix: KrMatrix,
    pub signs: Vec<f64>,
}

pub fn stack(a: &CpTensor, b: &CpTensor) -> Result<StackedKr> {
    if a.shape() != b.shape() {
        return Err(Error::InvalidShape(format!(
            "CP shapes differ: {:?} vs {:?}",
            a.shape().dims(),
            b.shape().dims()
        )));
    }
    let matrix = a.kr.hstack(&b.kr)?;
    let mut signs = vec![1.0; a.rank()];
    signs.resize(a.rank() + b.rank(), -1.0);
    Ok(StackedKr { matrix, signs })
}

/// `||Â - B̂||_F` via `uᵀ G u`, where `G` is the entrywise product of the
/// per-mode Gram matrices of `[A^(p), B^(p)]`. Negative round-off is
/// clamped to zero before the square root.
pub fn cp_distance_exact(a: &CpTensor, b: &CpTensor) -> Result<f64> {
    let s = stack(a, b)?;
    let g = s.matrix.gram();
    let u = DVector::from_column_slice(&s.signs);
    Ok(u.dot(&(g * &u)).max(0.0).sqrt())
}

/// `||S [X, Y] u||₂` for a sketch `S`.
pub fn cp_distance_sketched(a: &CpTensor, b: &CpTensor, op: &SketchOperator) -> Result<f64> {
    let s = stack(a, b)?;
    let sketched = op.apply_kr(&s.matrix)?;
    Ok((sketched * DVector::from_column_slice(&s.signs)).norm())
}

#[derive(Clone, Debug)]
pub struct AlsOptions {
    pub max_iters: usize,
    /// Stop once the relative change in fit drops below this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for AlsOptions {
    fn default() -> Self {
        AlsOptions {
            max_iters: 50,
            tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AlsResult {
    pub tensor: CpTensor,
    /// `||T - T̂||_F / ||T||_F` after each sweep (absolute error when `T = 0`).
    pub errors: Vec<f64>,
}

/// `X_(n) (⊙_{q≠n} A^(q))`, accumulated entry by entry.
fn mttkrp(t: &DenseTensor, factors: &[DMatrix<f64>], n: usize) -> DMatrix<f64> {
    let shape = t.shape();
    let r = factors[0].ncols();
    let mut out = DMatrix::zeros(shape.dims()[n], r);
    let mut digits = vec![0; shape.order()];
    let mut w = vec![0.0; r];
    for (i, &v) in t.data().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        shape.fill_digits(i, &mut digits);
        w.fill(v);
        for (q, f) in factors.iter().enumerate() {
            if q == n {
                continue;
            }
            for (c, wc) in w.iter_mut().enumerate() {
                *wc *= f[(digits[q], c)];
            }
        }
        for (c, wc) in w.iter().enumerate() {
            out[(digits[n], c)] += wc;
        }
    }
    out
}

/// Pseudo-inverse solve `M V⁺` for symmetric PSD `V`, clamping singular
/// values below `1e-12 σ_max`.
fn solve_gram(m: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = v.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = 1e-12 * smax;
    if svd.singular_values.iter().any(|&s| s <= cutoff) {
        log::warn!("singular Gram system in CP-ALS; clamping at 1e-12 σ_max");
    }
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let inv_s =
        DMatrix::from_diagonal(
            &svd.singular_values
                .map(|s| if s > cutoff { 1.0 / s } else { 0.0 }),
        );
    m * (vt.transpose() * inv_s * u.transpose())
}

fn reconstruction_error(t: &DenseTensor, factors: &[DMatrix<f64>]) -> f64 {
    let kr = KrMatrix::new(factors.to_vec()).expect("factor shapes fixed by ALS");
    let mut digits = vec![0; t.shape().order()];
    let mut row = vec![0.0; kr.ncols()];
    let mut err = 0.0;
    for (i, &v) in t.data().iter().enumerate() {
        t.shape().fill_digits(i, &mut digits);
        kr.row_at_digits(&digits, &mut row);
        let d = v - row.iter().sum::<f64>();
        err += d * d;
    }
    err.sqrt()
}

/// Rank-`R` CP decomposition by alternating least squares.
///
/// Factors start as seeded standard normals. Each sweep solves every mode
/// through the entrywise product of the other modes' Grams, then
/// normalizes the columns of factors `2..P` and pushes the norms into
/// factor 1.
pub fn cp_als(t: &DenseTensor, rank: usize, opts: &AlsOptions) -> Result<AlsResult> {
    if rank == 0 {
        return Err(Error::InvalidArgument("CP rank must be >= 1".into()));
    }
    let dims = t.shape().dims().to_vec();
    let entries = t.shape().total();
    if entries > DEFAULT_MATERIALIZATION_CAP {
        return Err(Error::TooLarge {
            entries,
            cap: DEFAULT_MATERIALIZATION_CAP,
        });
    }
    let mut rng = rng_from_seed(opts.seed);
    let mut factors: Vec<DMatrix<f64>> = dims
        .iter()
        .map(|&d| DMatrix::from_fn(d, rank, |_, _| rng.sample(StandardNormal)))
        .collect();
    let tnorm = t.norm();
    let scale = if tnorm > 0.0 { tnorm } else { 1.0 };
    let mut errors = Vec::with_capacity(opts.max_iters);
    let mut grams: Vec<DMatrix<f64>> = factors.iter().map(|f| f.transpose() * f).collect();
    for _ in 0..opts.max_iters {
        for n in 0..dims.len() {
            let mut v = DMatrix::from_element(rank, rank, 1.0);
            for (q, g) in grams.iter().enumerate() {
                if q != n {
                    v.component_mul_assign(g);
                }
            }
            let m = mttkrp(t, &factors, n);
            factors[n] = solve_gram(&m, &v);
            grams[n] = factors[n].transpose() * &factors[n];
        }
        normalize_into_first(&mut factors);
        for (g, f) in grams.iter_mut().zip(&factors) {
            *g = f.transpose() * f;
        }
        let err = reconstruction_error(t, &factors) / scale;
        let converged = errors.last().is_some_and(|&prev: &f64| {
            (prev - err).abs() <= opts.tol * prev.max(f64::MIN_POSITIVE)
        }) || err == 0.0;
        errors.push(err);
        if converged {
            break;
        }
    }
    Ok(AlsResult {
        tensor: CpTensor::new(factors)?,
        errors,
    })
}

fn normalize_into_first(factors: &mut [DMatrix<f64>]) {
    let (first, rest) = factors.split_first_mut().expect("at least one factor");
    for f in rest {
        for c in 0..f.ncols() {
            let norm = f.column(c).norm();
            if norm > 0.0 {
                f.column_mut(c).scale_mut(1.0 / norm);
                first.column_mut(c).scale_mut(norm);
            }
        }
    }
}
