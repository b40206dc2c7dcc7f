#![allow(dead_code)]

use kronsketch::rng::rng_from_seed;
use kronsketch::{KrMatrix, KronVector};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn random_matrix(seed: u64, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_vec(rows, cols, normals(seed, rows * cols))
}

pub fn random_kron(seed: u64, dims: &[usize]) -> KronVector {
    let factors = dims
        .iter()
        .enumerate()
        .map(|(p, &d)| normals(seed.wrapping_mul(31).wrapping_add(p as u64), d))
        .collect();
    KronVector::new(factors).unwrap()
}

pub fn random_kr(seed: u64, dims: &[usize], r: usize) -> KrMatrix {
    let factors = dims
        .iter()
        .enumerate()
        .map(|(p, &d)| random_matrix(seed.wrapping_mul(31).wrapping_add(p as u64), d, r))
        .collect();
    KrMatrix::new(factors).unwrap()
}

/// Normalized Sylvester Hadamard matrix, entry `(-1)^popcount(i & j) / √n`.
pub fn hadamard_matrix(n: usize) -> DMatrix<f64> {
    let s = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(
        n,
        n,
        |i, j| if (i & j).count_ones() % 2 == 0 { s } else { -s },
    )
}

/// Row-major Kronecker product of dense matrices, by definition.
pub fn kron_dense(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows() * b.nrows(), a.ncols() * b.ncols(), |i, j| {
        a[(i / b.nrows(), j / b.ncols())] * b[(i % b.nrows(), j % b.ncols())]
    })
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
