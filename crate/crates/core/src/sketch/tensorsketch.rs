//! Hash families and the count-sketch/convolution kernel behind TensorSketch.

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::rng::rng_from_seed;

/// Mersenne prime 2^61 - 1.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

fn mod_mersenne(x: u128) -> u64 {
    let p = MERSENNE_61 as u128;
    let folded = (x & p) + (x >> 61);
    let folded = (folded & p) + (folded >> 61);
    let r = folded as u64;
    if r >= MERSENNE_61 {
        r - MERSENNE_61
    } else {
        r
    }
}

/// Evaluates the polynomial with coefficients `coeffs` (constant term first)
/// at `x` over GF(2^61 - 1).
pub fn poly_eval(coeffs: &[u64], x: u64) -> u64 {
    let x = x % MERSENNE_61;
    coeffs.iter().rev().fold(0u64, |acc, &c| {
        mod_mersenne(acc as u128 * x as u128 + c as u128)
    })
}

/// Bucket and sign hashes for one mode.
///
/// The bucket hash is a random degree-1 polynomial (pairwise independent)
/// reduced mod `J`; the sign hash is a random degree-3 polynomial (4-wise
/// independent) whose low bit picks the sign. Both are tabulated over
/// `0..I_p` at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HashPair {
    bucket_coeffs: [u64; 2],
    sign_coeffs: [u64; 4],
    buckets: Vec<usize>,
    signs: Vec<f64>,
}

impl HashPair {
    pub fn from_seed(domain: usize, range: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let bucket_coeffs = [
            rng.random_range(0..MERSENNE_61),
            rng.random_range(1..MERSENNE_61),
        ];
        let sign_coeffs = [
            rng.random_range(0..MERSENNE_61),
            rng.random_range(0..MERSENNE_61),
            rng.random_range(0..MERSENNE_61),
            rng.random_range(1..MERSENNE_61),
        ];
        let buckets = (0..domain as u64)
            .map(|i| (poly_eval(&bucket_coeffs, i) % range as u64) as usize)
            .collect();
        let signs = (0..domain as u64)
            .map(|i| {
                if poly_eval(&sign_coeffs, i) & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        HashPair {
            bucket_coeffs,
            sign_coeffs,
            buckets,
            signs,
        }
    }

    pub fn bucket_coeffs(&self) -> &[u64; 2] {
        &self.bucket_coeffs
    }

    pub fn sign_coeffs(&self) -> &[u64; 4] {
        &self.sign_coeffs
    }

    /// `h_p(i)` for every `i` in the mode.
    pub fn buckets(&self) -> &[usize] {
        &self.buckets
    }

    /// `s_p(i)` for every `i` in the mode.
    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub(crate) fn count_sketch(&self, x: &[f64], j: usize) -> Vec<f64> {
        let mut out = vec![0.0; j];
        for ((&b, &s), &v) in self.buckets.iter().zip(&self.signs).zip(x) {
            out[b] += s * v;
        }
        out
    }
}

/// Circular convolution of several length-`J` vectors.
///
/// Sparse operands (few nonzeros relative to `log J`) are folded in
/// directly, which keeps exact zeros exact; otherwise all operands go
/// through one forward FFT each and a single inverse FFT.
pub(crate) fn circular_convolve(parts: &[Vec<f64>]) -> Vec<f64> {
    let j = parts[0].len();
    let sparse_limit = 4 * (usize::BITS - j.leading_zeros()) as usize;
    let nnz_max = parts[1..]
        .iter()
        .map(|p| p.iter().filter(|&&v| v != 0.0).count())
        .max()
        .unwrap_or(0);
    if nnz_max <= sparse_limit {
        direct_convolve(parts)
    } else {
        fft_convolve(parts)
    }
}

pub(crate) fn direct_convolve(parts: &[Vec<f64>]) -> Vec<f64> {
    let j = parts[0].len();
    let mut acc = parts[0].clone();
    for part in &parts[1..] {
        let mut next = vec![0.0; j];
        for (b, &w) in part.iter().enumerate().filter(|(_, &w)| w != 0.0) {
            for (k, &a) in acc.iter().enumerate() {
                next[(k + b) % j] += a * w;
            }
        }
        acc = next;
    }
    acc
}

pub(crate) fn fft_convolve(parts: &[Vec<f64>]) -> Vec<f64> {
    let j = parts[0].len();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(j);
    let inverse = planner.plan_fft_inverse(j);
    let mut product = vec![Complex::new(1.0, 0.0); j];
    let mut buf = vec![Complex::new(0.0, 0.0); j];
    for part in parts {
        for (b, &v) in buf.iter_mut().zip(part) {
            *b = Complex::new(v, 0.0);
        }
        forward.process(&mut buf);
        for (p, b) in product.iter_mut().zip(&buf) {
            *p *= b;
        }
    }
    inverse.process(&mut product);
    let scale = 1.0 / j as f64;
    product.iter().map(|c| c.re * scale).collect()
}
