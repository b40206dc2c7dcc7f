//! Embedding-dimension calculators.
//!
//! Each function returns the right-hand side `T` of a sufficient condition
//! `J > T`. Natural logarithms are used wherever the bound is stated with
//! `ln`; the two asymptotic bounds with unspecified absolute constants
//! ([`j_simplified`], [`j_jin`]) take the log base as a parameter, and
//! comparisons between them at default constants are only qualitative.

use crate::error::{Error, Result};

/// Log base for the asymptotic bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogBase {
    #[default]
    E,
    Two,
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::E => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "e" | "ln" | "natural" => Ok(LogBase::E),
            "2" => Ok(LogBase::Two),
            "10" => Ok(LogBase::Ten),
            other => Err(Error::InvalidArgument(format!(
                "unknown log base {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundInputs {
    dims: Vec<f64>,
    rank: f64,
    points: f64,
    eps: f64,
    delta: f64,
    eta: f64,
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must lie in (0, 1), got {v}"
        )))
    }
}

impl BoundInputs {
    /// `dims` are the mode sizes `I_p`, `rank` is `R`, `points` is `N`.
    pub fn new(
        dims: &[usize],
        rank: usize,
        points: usize,
        eps: f64,
        delta: f64,
        eta: f64,
    ) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one mode is required".into(),
            ));
        }
        if dims.contains(&0) || rank == 0 || points == 0 {
            return Err(Error::InvalidArgument("all dimensions must be >= 1".into()));
        }
        open_unit("epsilon", eps)?;
        open_unit("delta", delta)?;
        open_unit("eta", eta)?;
        Ok(BoundInputs {
            dims: dims.iter().map(|&d| d as f64).collect(),
            rank: rank as f64,
            points: points as f64,
            eps,
            delta,
            eta,
        })
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[f64] {
        &self.dims
    }

    pub fn rank(&self) -> f64 {
        self.rank
    }

    pub fn points(&self) -> f64 {
        self.points
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        open_unit("epsilon", eps)?;
        Ok(BoundInputs {
            eps,
            ..self.clone()
        })
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        open_unit("delta", delta)?;
        Ok(BoundInputs {
            delta,
            ..self.clone()
        })
    }

    pub fn with_rank(&self, rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidArgument("R must be >= 1".into()));
        }
        Ok(BoundInputs {
            rank: rank as f64,
            ..self.clone()
        })
    }
}

// Formula kernels, kept separate from input validation so degenerate
// algebraic cases can be evaluated directly.

fn subspace_formula(dims: &[f64], r: f64, eps: f64, delta: f64) -> f64 {
    let p = dims.len() as f64;
    let head = 8.0 / 3.0 * 2f64.powf(p) * r.powf(p + 1.0) / (eps * eps);
    let lead_log = (2.0 * r * (p + 1.0) / delta).ln();
    dims.iter().fold(head * lead_log, |acc, &i| {
        acc * (2.0 * i * r * (p + 1.0) / delta).ln()
    })
}

fn jlt_formula(dims: &[f64], n: f64, eps: f64, delta: f64) -> f64 {
    let p = dims.len() as f64;
    let n2 = n * n;
    let head = 16.0 / 3.0 * 4f64.powf(p) / (eps * eps);
    let lead_log = (4.0 * n2 * (p + 1.0) / delta).ln();
    dims.iter().fold(head * lead_log, |acc, &i| {
        acc * (4.0 * i * n2 * (p + 1.0) / delta).ln()
    })
}

fn simplified_formula(
    dims: &[f64],
    n: f64,
    eps: f64,
    delta: f64,
    c1: f64,
    c2: f64,
    base: LogBase,
) -> f64 {
    let p = dims.len() as f64;
    let head = c1 / (eps * eps) * c2.powf(p) * base.log(n / delta);
    dims.iter()
        .fold(head, |acc, &i| acc * base.log(i * n / delta))
}

fn jin_formula(dims: &[f64], n: f64, eps: f64, delta: f64, c: f64, base: LogBase) -> f64 {
    let p = dims.len() as f64;
    let l = base.log(p * n / delta);
    let inner = base.log(l.powf(p) / eps);
    let log_prod: f64 = dims.iter().map(|&i| base.log(i)).sum();
    c / (eps * eps) * l.powf(2.0 * p - 1.0) * inner.powi(4) * log_prod
}

fn beta_inverse_formula(dims: &[f64], r: f64, eta: f64) -> f64 {
    dims.iter()
        .map(|&i| 2.0 * r * (2.0 * i * r / eta).ln())
        .product()
}

/// Subspace-embedding bound:
/// `(8/3) 2^P R^(P+1) ε^-2 ln(2R(P+1)/δ) ∏_p ln(2 I_p R (P+1)/δ)`.
pub fn j_subspace(b: &BoundInputs) -> f64 {
    subspace_formula(&b.dims, b.rank, b.eps, b.delta)
}

/// JLT bound for `N` points:
/// `(16/3) 4^P ε^-2 ln(4N²(P+1)/δ) ∏_p ln(4 I_p N² (P+1)/δ)`.
pub fn j_jlt(b: &BoundInputs) -> f64 {
    jlt_formula(&b.dims, b.points, b.eps, b.delta)
}

/// Per-pair bound with failure probability `eta`: the subspace bound at
/// `R = 2`, `δ = η`. Substituting `η = δ/N²` reproduces [`j_jlt`].
pub fn j_pair(b: &BoundInputs, eta: f64) -> f64 {
    subspace_formula(&b.dims, 2.0, b.eps, eta)
}

/// Simplified JLT bound `C₁ ε^-2 C₂^P log(N/δ) ∏_p log(I_p N/δ)`, valid
/// under `N > max(P, 4)`.
pub fn j_simplified(b: &BoundInputs, c1: f64, c2: f64, base: LogBase) -> Result<f64> {
    let p = b.order() as f64;
    if b.points <= p.max(4.0) {
        return Err(Error::Precondition(format!(
            "simplified bound assumes N > max(P, 4); got N = {}, P = {}",
            b.points,
            b.order()
        )));
    }
    Ok(simplified_formula(
        &b.dims, b.points, b.eps, b.delta, c1, c2, base,
    ))
}

/// Comparison bound of Jin et al.:
/// `C ε^-2 log^(2P-1)(PN/δ) log⁴(ε^-1 log^P(PN/δ)) log(∏_p I_p)`.
///
/// The bound is asymptotic, so every log argument must exceed 1.
pub fn j_jin(b: &BoundInputs, c: f64, base: LogBase) -> Result<f64> {
    let p = b.order() as f64;
    let arg1 = p * b.points / b.delta;
    if arg1 <= 1.0 {
        return Err(Error::Precondition(format!(
            "log argument PN/δ = {arg1} must exceed 1"
        )));
    }
    let arg2 = base.log(arg1).powf(p) / b.eps;
    if arg2 <= 1.0 {
        return Err(Error::Precondition(format!(
            "log argument ε^-1 log^P(PN/δ) = {arg2} must exceed 1"
        )));
    }
    let prod: f64 = b.dims.iter().product();
    if prod <= 1.0 {
        return Err(Error::Precondition(format!(
            "log argument ∏ I_p = {prod} must exceed 1"
        )));
    }
    Ok(jin_formula(&b.dims, b.points, b.eps, b.delta, c, base))
}

/// `min(j_jlt, j_jin)`: either sufficient condition guarantees the JLT
/// property, so the smaller one wins.
pub fn j_combined(b: &BoundInputs, c: f64, base: LogBase) -> Result<f64> {
    Ok(j_jlt(b).min(j_jin(b, c, base)?))
}

/// Sampling bound for leverage-score sampling with quality `β`:
/// `(8/3) R ln(2R/η) / (β ε²)`.
pub fn j_leverage_sampling(rank: usize, eps: f64, eta: f64, beta: f64) -> f64 {
    let r = rank as f64;
    8.0 / 3.0 * r * (2.0 * r / eta).ln() / (beta * eps * eps)
}

/// `β = 1 / ∏_p 2R ln(2 I_p R / η)` before clamping.
pub fn beta_kfjlt_unclamped(b: &BoundInputs) -> f64 {
    1.0 / beta_inverse_formula(&b.dims, b.rank, b.eta)
}

/// `β` clamped into `(0, 1]`; tiny `I_p`, `R` can push the raw formula
/// above 1, which is logged.
pub fn beta_kfjlt(b: &BoundInputs) -> f64 {
    let beta = beta_kfjlt_unclamped(b);
    if beta > 1.0 {
        log::info!("beta formula gave {beta} > 1; clamped to 1");
        1.0
    } else {
        beta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn inputs() -> BoundInputs {
        BoundInputs::new(&[16, 16, 16], 2, 2, 0.5, 0.01, 0.01).unwrap()
    }

    #[test]
    fn unit_logs_give_sixteen_thirds() {
        // P = 1, R = 1, ε = 1: 2R(P+1)/δ = e and 2 I R (P+1)/δ = e
        let delta = 4.0 / E;
        let v = subspace_formula(&[1.0], 1.0, 1.0, delta);
        assert!((v - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn eps_scaling() {
        let b = inputs();
        let half = b.with_eps(0.25).unwrap();
        assert!((j_subspace(&half) / j_subspace(&b) - 4.0).abs() < 1e-12);
        assert!((j_jlt(&half) / j_jlt(&b) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn simplified_unit_case_and_c2_scaling() {
        // all log factors 1: N/δ = e and I_p N/δ = e
        let v = simplified_formula(&[1.0], E, 0.5, 1.0, 1.0, 1.0, LogBase::E);
        assert!((v - 4.0).abs() < 1e-12);
        let dims = [1.0, 1.0, 1.0];
        let a = simplified_formula(&dims, 20.0, 0.5, 0.1, 1.0, 1.0, LogBase::E);
        let b = simplified_formula(&dims, 20.0, 0.5, 0.1, 1.0, 2.0, LogBase::E);
        assert!((b / a - 8.0).abs() < 1e-12);
    }

    #[test]
    fn simplified_precondition() {
        let b = BoundInputs::new(&[16, 16, 16], 2, 4, 0.5, 0.01, 0.01).unwrap();
        assert!(matches!(
            j_simplified(&b, 1.0, 1.0, LogBase::E),
            Err(Error::Precondition(_))
        ));
        let b = BoundInputs::new(&[16, 16, 16], 2, 5, 0.5, 0.01, 0.01).unwrap();
        assert!(j_simplified(&b, 1.0, 1.0, LogBase::E).is_ok());
    }

    #[test]
    fn jin_log_of_product_is_sum() {
        let b = inputs();
        let doubled = BoundInputs::new(&[32, 32, 32], 2, 2, 0.5, 0.01, 0.01).unwrap();
        let ratio = j_jin(&doubled, 1.0, LogBase::E).unwrap() / j_jin(&b, 1.0, LogBase::E).unwrap();
        let expected = (3.0 * 16f64.ln() + 3.0 * 2f64.ln()) / (3.0 * 16f64.ln());
        assert!((ratio - expected).abs() < 1e-12);
    }

    #[test]
    fn jin_rejects_small_log_arguments() {
        let b = BoundInputs::new(&[1], 1, 1, 0.5, 0.9, 0.1).unwrap();
        assert!(matches!(
            j_jin(&b, 1.0, LogBase::E),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn beta_values() {
        // 2R ln(2 I R / η) = 4 with R = 1 needs ln(2I/η) = 2
        let eta = 0.5;
        let i = E * E * eta / 2.0;
        assert!((1.0 / beta_inverse_formula(&[i], 1.0, eta) - 0.25).abs() < 1e-12);
        // each factor is at least 2 ln 2 > 1 for valid inputs, so the smallest
        // admissible case stays below the clamp
        let small = BoundInputs::new(&[1], 1, 1, 0.5, 0.5, 0.999).unwrap();
        let b = beta_kfjlt(&small);
        assert!(b > 0.0 && b <= 1.0);
        assert_eq!(b, beta_kfjlt_unclamped(&small));
        let b8 = BoundInputs::new(&[8, 16], 2, 2, 0.5, 0.01, 0.01).unwrap();
        let b16 = BoundInputs::new(&[16, 16], 2, 2, 0.5, 0.01, 0.01).unwrap();
        assert!(beta_kfjlt(&b16) < beta_kfjlt(&b8));
    }

    #[test]
    fn input_validation() {
        assert!(BoundInputs::new(&[16], 1, 1, 1.0, 0.1, 0.1).is_err());
        assert!(BoundInputs::new(&[16], 1, 1, 0.5, 0.0, 0.1).is_err());
        assert!(BoundInputs::new(&[0], 1, 1, 0.5, 0.1, 0.1).is_err());
        assert!(BoundInputs::new(&[], 1, 1, 0.5, 0.1, 0.1).is_err());
    }

    #[test]
    fn log_base_switch() {
        let b = BoundInputs::new(&[16, 16, 16], 2, 10, 0.5, 0.01, 0.01).unwrap();
        let e = j_simplified(&b, 1.0, 1.0, LogBase::E).unwrap();
        let two = j_simplified(&b, 1.0, 1.0, LogBase::Two).unwrap();
        assert!((two / e - 2f64.ln().recip().powi(4)).abs() < 1e-9);
    }
}
