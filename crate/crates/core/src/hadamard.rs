//! Normalized fast Walsh-Hadamard transform and the randomized Hadamard
//! transform `x ↦ H D x`.
//!
//! `H` is the Sylvester-ordered Hadamard matrix scaled by `1/√I`, so entry
//! `(i, j)` is `(-1)^popcount(i & j) / √I`. It is symmetric and orthogonal.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

fn require_pow2(len: usize) -> Result<()> {
    if len.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::NotPowerOfTwo {
            len,
            padded: len.max(1).next_power_of_two(),
        })
    }
}

/// In-place normalized FWHT. `O(I log I)`.
pub fn fwht_in_place(x: &mut [f64]) -> Result<()> {
    let n = x.len();
    require_pow2(n)?;
    let mut h = 1;
    while h < n {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    x.iter_mut().for_each(|v| *v *= scale);
    Ok(())
}

/// Returns `H x`.
pub fn fwht(x: &[f64]) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

/// Zero-pads `x` to the next power of two; a power-of-two length is returned
/// unchanged. An empty input pads to length 1.
pub fn pad_pow2(x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    out.resize(x.len().max(1).next_power_of_two(), 0.0);
    out
}

/// Diagonal of i.i.d. Rademacher signs.
#[derive(Clone, Debug, PartialEq)]
pub struct RademacherDiagonal {
    signs: Vec<f64>,
    seed: Option<u64>,
}

impl RademacherDiagonal {
    pub fn from_seed(len: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let signs = (0..len)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        RademacherDiagonal {
            signs,
            seed: Some(seed),
        }
    }

    /// Builds a diagonal from explicit signs, each of which must be `±1`.
    pub fn from_signs(signs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1.0 && s != -1.0) {
            return Err(Error::InvalidArgument(format!(
                "Rademacher sign must be +1 or -1, got {bad}"
            )));
        }
        Ok(RademacherDiagonal { signs, seed: None })
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }
}

/// Randomized Hadamard transform of size `I = 2^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rht {
    diag: RademacherDiagonal,
}

impl Rht {
    pub fn new(diag: RademacherDiagonal) -> Result<Self> {
        require_pow2(diag.len())?;
        Ok(Rht { diag })
    }

    pub fn from_seed(size: usize, seed: u64) -> Result<Self> {
        require_pow2(size)?;
        Ok(Rht {
            diag: RademacherDiagonal::from_seed(size, seed),
        })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &RademacherDiagonal {
        &self.diag
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = x.to_vec();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.size() {
            return Err(Error::LengthMismatch {
                expected: self.size(),
                found: x.len(),
            });
        }
        x.iter_mut()
            .zip(self.diag.signs())
            .for_each(|(v, s)| *v *= s);
        fwht_in_place(x)
    }
}
