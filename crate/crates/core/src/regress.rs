//! Sketched least squares with a Khatri-Rao design matrix.
//!
//! `ẑ = argmin_z ||S (X z - y)||₂` is solved through a QR factorization of
//! the sketched design `S X`. At desk scale the exact optimum `OPT` is also
//! computed so the guarantee `||X ẑ - y||₂ ≤ (1 + ε) OPT` can be audited.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kron::{KrMatrix, DEFAULT_MATERIALIZATION_CAP};
use crate::leverage::orthonormal_basis;
use crate::sketch::SketchOperator;

const RANK_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LsProblem {
    design: KrMatrix,
    rhs: Vec<f64>,
}

impl LsProblem {
    /// Checks that `rhs` has length `Ĩ` and that the design has full column
    /// rank (via the spectrum of its Gram matrix).
    pub fn new(design: KrMatrix, rhs: Vec<f64>) -> Result<Self> {
        let total = design.shape().total();
        if rhs.len() != total {
            return Err(Error::LengthMismatch {
                expected: total,
                found: rhs.len(),
            });
        }
        let eig = design.gram().symmetric_eigenvalues();
        let lmax = eig.max();
        let lmin = eig.min();
        let tol = total.max(design.ncols()) as f64 * RANK_RTOL;
        if lmax <= 0.0 || lmin.max(0.0).sqrt() <= tol * lmax.sqrt() {
            return Err(Error::RankDeficient(
                "least-squares design must have full column rank".into(),
            ));
        }
        Ok(LsProblem { design, rhs })
    }

    pub fn design(&self) -> &KrMatrix {
        &self.design
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsReport {
    pub zhat: Vec<f64>,
    /// `||S X ẑ - S y||₂`.
    pub sketched_residual: f64,
    /// `||X ẑ - y||₂`.
    pub true_residual: f64,
    /// `min_z ||X z - y||₂`, present only when `X` fits under the cap.
    pub opt: Option<f64>,
    /// `true_residual / opt`; absent when `opt` is absent or zero.
    pub ratio: Option<f64>,
}

/// Least-squares solve through Householder QR. Fails when `R` has a
/// (relatively) vanishing diagonal entry.
fn qr_solve(a: DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let (rows, cols) = a.shape();
    if rows < cols {
        return Err(Error::RankDeficient(format!(
            "{what} has {rows} rows but {cols} columns"
        )));
    }
    let qr = a.qr();
    let r = qr.r();
    let diag_max = r.diagonal().amax();
    let tol = rows.max(cols) as f64 * RANK_RTOL * diag_max;
    if diag_max == 0.0 || r.diagonal().iter().any(|d| d.abs() <= tol) {
        return Err(Error::RankDeficient(format!(
            "{what} is numerically rank deficient"
        )));
    }
    let qtb = qr.q().tr_mul(b);
    r.solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::RankDeficient(format!("{what}: triangular solve failed")))
}

/// Exact solution and `OPT` from the materialized design.
pub fn exact_solve(p: &LsProblem) -> Result<(Vec<f64>, f64)> {
    let x = p.design.materialize_with_cap(DEFAULT_MATERIALIZATION_CAP)?;
    let y = DVector::from_column_slice(&p.rhs);
    let z = qr_solve(x.clone(), &y, "design")?;
    let opt = (x * &z - y).norm();
    Ok((z.data.into(), opt))
}

pub fn solve_sketched(p: &LsProblem, op: &SketchOperator) -> Result<LsReport> {
    let r = p.design.ncols();
    if op.output_dim() < r {
        return Err(Error::InvalidArgument(format!(
            "sketch dimension J = {} is below R = {r}",
            op.output_dim()
        )));
    }
    let sx = op.apply_kr(&p.design)?;
    let sy = DVector::from_vec(op.apply_dense(&p.rhs)?);
    let z = qr_solve(
        sx.clone(),
        &sy,
        "sketched design (J too small or unlucky seed)",
    )?;
    let sketched_residual = (sx * &z - sy).norm();

    let xz = p.design.mul_vec(z.as_slice())?;
    let true_residual = xz
        .iter()
        .zip(&p.rhs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();

    let opt = match exact_solve(p) {
        Ok((_, opt)) => Some(opt),
        Err(Error::TooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    let ratio = opt.filter(|&o| o > 0.0).map(|o| true_residual / o);
    Ok(LsReport {
        zhat: z.data.into(),
        sketched_residual,
        true_residual,
        opt,
        ratio,
    })
}

/// The two quantities behind the residual guarantee.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerpAudit {
    /// `σ_R²(S U)` for an orthonormal basis `U` of `range(X)`.
    pub sigma_min_sq: f64,
    /// `||Uᵀ Sᵀ S y_⊥||₂² / OPT²`.
    pub perp_ratio: f64,
}

/// Desk-scale diagnostic; needs the design under the materialization cap.
pub fn audit_perp(p: &LsProblem, op: &SketchOperator) -> Result<PerpAudit> {
    let x = p.design.materialize_with_cap(DEFAULT_MATERIALIZATION_CAP)?;
    let u = orthonormal_basis(&x);
    let y = DVector::from_column_slice(&p.rhs);
    let y_perp = &y - &u * u.tr_mul(&y);
    let opt = y_perp.norm();
    if opt <= 1e-14 * y.norm() || opt == 0.0 {
        return Err(Error::ConsistentSystem);
    }
    let su = op.apply_dense_matrix(&u)?;
    let sigma_min = su.singular_values().min();
    let sy = DVector::from_vec(op.apply_dense(y_perp.as_slice())?);
    let w = su.tr_mul(&sy);
    Ok(PerpAudit {
        sigma_min_sq: sigma_min * sigma_min,
        perp_ratio: w.norm_squared() / (opt * opt),
    })
}
