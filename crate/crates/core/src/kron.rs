//! Kronecker vectors, Khatri-Rao matrices and mixed-radix row addressing.
//!
//! Ordering is row-major: the leftmost factor varies slowest, so for
//! `x = a ⊗ b` the entry at digits `(i, j)` sits at linear index
//! `i * len(b) + j`. All indices here are 0-based.
//!
//! Dense matrices are `nalgebra::DMatrix<f64>`, stored column-major.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default cap on the number of entries any dense materialization may allocate.
pub const DEFAULT_MATERIALIZATION_CAP: usize = 1 << 24;

/// Mode sizes `(I_1, …, I_P)` of a Kronecker-structured space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    dims: Vec<usize>,
    total: usize,
}

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("at least one mode is required".into()));
        }
        if let Some(p) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("mode {p} has size 0")));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or(Error::DimensionOverflow)?;
        Ok(Shape { dims, total })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of modes `P`.
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Ambient dimension `Ĩ = ∏ I_p`.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn multi_index(&self, linear: usize) -> Result<MultiIndex> {
        if linear >= self.total {
            return Err(Error::IndexOutOfRange {
                index: linear,
                bound: self.total,
            });
        }
        let mut digits = vec![0; self.dims.len()];
        self.fill_digits(linear, &mut digits);
        Ok(MultiIndex { digits, linear })
    }

    pub fn multi_index_from_digits(&self, digits: Vec<usize>) -> Result<MultiIndex> {
        if digits.len() != self.dims.len() {
            return Err(Error::LengthMismatch {
                expected: self.dims.len(),
                found: digits.len(),
            });
        }
        let mut linear = 0usize;
        for (&d, &size) in digits.iter().zip(&self.dims) {
            if d >= size {
                return Err(Error::IndexOutOfRange {
                    index: d,
                    bound: size,
                });
            }
            linear = linear * size + d;
        }
        Ok(MultiIndex { digits, linear })
    }

    /// Writes the digits of `linear` into `out` without allocating.
    /// `linear` must be below `total()`.
    pub(crate) fn fill_digits(&self, mut linear: usize, out: &mut [usize]) {
        for (slot, &size) in out.iter_mut().zip(&self.dims).rev() {
            *slot = linear % size;
            linear /= size;
        }
    }

    /// True when every mode size is a power of two.
    pub fn all_pow2(&self) -> bool {
        self.dims.iter().all(|d| d.is_power_of_two())
    }
}

/// A position in a Kronecker-structured space, carried both as per-mode
/// digits and as the linear row index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    digits: Vec<usize>,
    linear: usize,
}

impl MultiIndex {
    pub fn digits(&self) -> &[usize] {
        &self.digits
    }

    pub fn linear(&self) -> usize {
        self.linear
    }
}

fn check_cap(entries: usize, cap: usize) -> Result<()> {
    if entries > cap {
        Err(Error::TooLarge { entries, cap })
    } else {
        Ok(())
    }
}

/// A vector `x = x^(1) ⊗ … ⊗ x^(P)` stored by its factors.
#[derive(Clone, Debug, PartialEq)]
pub struct KronVector {
    factors: Vec<Vec<f64>>,
    shape: Shape,
}

impl KronVector {
    pub fn new(factors: Vec<Vec<f64>>) -> Result<Self> {
        let shape = Shape::new(factors.iter().map(Vec::len).collect())?;
        Ok(KronVector { factors, shape })
    }

    pub fn factors(&self) -> &[Vec<f64>] {
        &self.factors
    }

    pub fn factor(&self, p: usize) -> &[f64] {
        &self.factors[p]
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// `||x||₂`, computed as the product of the factor norms.
    pub fn norm(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| f.iter().map(|v| v * v).sum::<f64>().sqrt())
            .product()
    }

    /// Entry of the full vector at `index`, in `O(P)`.
    pub fn kron_row(&self, index: &MultiIndex) -> Result<f64> {
        if index.digits.len() != self.factors.len() {
            return Err(Error::LengthMismatch {
                expected: self.factors.len(),
                found: index.digits.len(),
            });
        }
        let mut value = 1.0;
        for (f, &d) in self.factors.iter().zip(&index.digits) {
            value *= *f.get(d).ok_or(Error::IndexOutOfRange {
                index: d,
                bound: f.len(),
            })?;
        }
        Ok(value)
    }

    pub(crate) fn entry_at_digits(&self, digits: &[usize]) -> f64 {
        self.factors
            .iter()
            .zip(digits)
            .map(|(f, &d)| f[d])
            .product()
    }

    pub fn materialize(&self) -> Result<Vec<f64>> {
        self.materialize_with_cap(DEFAULT_MATERIALIZATION_CAP)
    }

    pub fn materialize_with_cap(&self, cap: usize) -> Result<Vec<f64>> {
        check_cap(self.shape.total(), cap)?;
        let mut out = Vec::with_capacity(self.shape.total());
        out.push(1.0);
        for factor in &self.factors {
            out = kron_vec(&out, factor);
        }
        Ok(out)
    }
}

fn kron_vec(left: &[f64], right: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(left.len() * right.len());
    for &a in left {
        out.extend(right.iter().map(|&b| a * b));
    }
    out
}

/// A Khatri-Rao product `X = X^(1) ⊙ … ⊙ X^(P)` stored by its factors, each
/// `I_p × R`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrMatrix {
    factors: Vec<DMatrix<f64>>,
    shape: Shape,
}

impl KrMatrix {
    pub fn new(factors: Vec<DMatrix<f64>>) -> Result<Self> {
        let shape = Shape::new(factors.iter().map(|f| f.nrows()).collect())?;
        let ncols = factors[0].ncols();
        if ncols == 0 {
            return Err(Error::InvalidShape(
                "Khatri-Rao factors need R >= 1 columns".into(),
            ));
        }
        for f in &factors[1..] {
            if f.ncols() != ncols {
                return Err(Error::ColumnMismatch {
                    expected: ncols,
                    found: f.ncols(),
                });
            }
        }
        Ok(KrMatrix { factors, shape })
    }

    /// Stacks column vectors given as Kronecker vectors of a common shape.
    pub fn from_columns(columns: &[KronVector]) -> Result<Self> {
        let first = columns
            .first()
            .ok_or_else(|| Error::InvalidShape("no columns".into()))?;
        for c in columns {
            if c.shape() != first.shape() {
                return Err(Error::InvalidShape(format!(
                    "column shapes differ: {:?} vs {:?}",
                    first.shape().dims(),
                    c.shape().dims()
                )));
            }
        }
        let factors = (0..first.shape().order())
            .map(|p| {
                DMatrix::from_fn(first.shape().dims()[p], columns.len(), |i, r| {
                    columns[r].factor(p)[i]
                })
            })
            .collect();
        KrMatrix::new(factors)
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn factor(&self, p: usize) -> &DMatrix<f64> {
        &self.factors[p]
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Column count `R`.
    pub fn ncols(&self) -> usize {
        self.factors[0].ncols()
    }

    pub fn column(&self, r: usize) -> KronVector {
        let factors = self
            .factors
            .iter()
            .map(|f| f.column(r).iter().copied().collect())
            .collect();
        KronVector {
            factors,
            shape: self.shape.clone(),
        }
    }

    /// `[self, other]`, the column-wise concatenation.
    pub fn hstack(&self, other: &KrMatrix) -> Result<KrMatrix> {
        if self.shape != other.shape {
            return Err(Error::InvalidShape(format!(
                "cannot stack shapes {:?} and {:?}",
                self.shape.dims(),
                other.shape.dims()
            )));
        }
        let factors = self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| {
                let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
                m.columns_mut(0, a.ncols()).copy_from(a);
                m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
                m
            })
            .collect();
        KrMatrix::new(factors)
    }

    /// `XᵀX`, the entrywise product of the factor Gram matrices.
    pub fn gram(&self) -> DMatrix<f64> {
        let r = self.ncols();
        let mut g = DMatrix::from_element(r, r, 1.0);
        for f in &self.factors {
            g.component_mul_assign(&(f.transpose() * f));
        }
        g
    }

    /// `X z` evaluated lazily row by row; only the output is dense.
    pub fn mul_vec(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.ncols() {
            return Err(Error::LengthMismatch {
                expected: self.ncols(),
                found: z.len(),
            });
        }
        let mut digits = vec![0; self.shape.order()];
        let mut row = vec![0.0; self.ncols()];
        Ok((0..self.shape.total())
            .map(|i| {
                self.shape.fill_digits(i, &mut digits);
                self.row_at_digits(&digits, &mut row);
                row.iter().zip(z).map(|(a, b)| a * b).sum()
            })
            .collect())
    }

    pub(crate) fn row_at_digits(&self, digits: &[usize], out: &mut [f64]) {
        out.fill(1.0);
        for (f, &d) in self.factors.iter().zip(digits) {
            for (r, o) in out.iter_mut().enumerate() {
                *o *= f[(d, r)];
            }
        }
    }

    pub fn materialize(&self) -> Result<DMatrix<f64>> {
        self.materialize_with_cap(DEFAULT_MATERIALIZATION_CAP)
    }

    pub fn materialize_with_cap(&self, cap: usize) -> Result<DMatrix<f64>> {
        let entries = self
            .shape
            .total()
            .checked_mul(self.ncols())
            .ok_or(Error::DimensionOverflow)?;
        check_cap(entries, cap)?;
        let mut out = DMatrix::zeros(self.shape.total(), self.ncols());
        for r in 0..self.ncols() {
            let col = self.column(r).materialize_with_cap(cap)?;
            out.column_mut(r).copy_from_slice(&col);
        }
        Ok(out)
    }
}

/// Read access to individual rows of a (possibly implicit) matrix.
pub trait RowSource {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// Writes row `i` into `out`, which has length `ncols()`.
    fn row_into(&self, i: usize, out: &mut [f64]);
}

impl RowSource for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn row_into(&self, i: usize, out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self[(i, r)];
        }
    }
}

impl RowSource for [f64] {
    fn nrows(&self) -> usize {
        self.len()
    }

    fn ncols(&self) -> usize {
        1
    }

    fn row_into(&self, i: usize, out: &mut [f64]) {
        out[0] = self[i];
    }
}

impl RowSource for KronVector {
    fn nrows(&self) -> usize {
        self.shape.total()
    }

    fn ncols(&self) -> usize {
        1
    }

    fn row_into(&self, i: usize, out: &mut [f64]) {
        let mut digits = vec![0; self.shape.order()];
        self.shape.fill_digits(i, &mut digits);
        out[0] = self.entry_at_digits(&digits);
    }
}

impl RowSource for KrMatrix {
    fn nrows(&self) -> usize {
        self.shape.total()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn row_into(&self, i: usize, out: &mut [f64]) {
        let mut digits = vec![0; self.shape.order()];
        self.shape.fill_digits(i, &mut digits);
        self.row_at_digits(&digits, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn basis_kronecker() {
        let v = KronVector::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(v.materialize().unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn scalar_factors_multiply() {
        let v = KronVector::new(vec![vec![2.0], vec![3.0], vec![5.0]]).unwrap();
        assert_eq!(v.materialize().unwrap(), vec![30.0]);
    }

    #[test]
    fn materialize_matches_double_loop() {
        let mut rng = rng_from_seed(1);
        let a = random_vec(&mut rng, 3);
        let b = random_vec(&mut rng, 4);
        let v = KronVector::new(vec![a.clone(), b.clone()]).unwrap();
        let dense = v.materialize().unwrap();
        for i in 0..3 {
            for j in 0..4 {
                assert_eq!(dense[i * 4 + j], a[i] * b[j]);
            }
        }
    }

    #[test]
    fn kron_row_examples() {
        let v = KronVector::new(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        // 1-based (2,1) is 0-based (1,0)
        let i = v.shape().multi_index_from_digits(vec![1, 0]).unwrap();
        assert_eq!(v.kron_row(&i).unwrap(), 6.0);

        let z = KronVector::new(vec![vec![1.0, 0.0], vec![3.0, 4.0]]).unwrap();
        for j in 0..2 {
            let i = z.shape().multi_index_from_digits(vec![1, j]).unwrap();
            assert_eq!(z.kron_row(&i).unwrap(), 0.0);
        }
    }

    #[test]
    fn kron_row_full_sweep() {
        let mut rng = rng_from_seed(2);
        let v = KronVector::new(vec![
            random_vec(&mut rng, 3),
            random_vec(&mut rng, 5),
            random_vec(&mut rng, 2),
        ])
        .unwrap();
        let dense = v.materialize().unwrap();
        for (l, &d) in dense.iter().enumerate() {
            let i = v.shape().multi_index(l).unwrap();
            assert_eq!(v.kron_row(&i).unwrap(), d);
        }
    }

    #[test]
    fn kron_row_rejects_bad_index() {
        let v = KronVector::new(vec![vec![1.0, 2.0], vec![3.0]]).unwrap();
        let other = Shape::new(vec![3, 1]).unwrap();
        let i = other.multi_index_from_digits(vec![2, 0]).unwrap();
        assert!(matches!(
            v.kron_row(&i),
            Err(Error::IndexOutOfRange { index: 2, bound: 2 })
        ));
        assert!(v.shape().multi_index(2).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let v = KronVector::new(vec![vec![1.0; 64], vec![1.0; 64]]).unwrap();
        assert!(matches!(
            v.materialize_with_cap(1000),
            Err(Error::TooLarge {
                entries: 4096,
                cap: 1000
            })
        ));
    }

    #[test]
    fn shape_rejects_degenerate_and_overflow() {
        assert!(Shape::new(vec![]).is_err());
        assert!(Shape::new(vec![3, 0]).is_err());
        assert!(matches!(
            Shape::new(vec![usize::MAX, 2]),
            Err(Error::DimensionOverflow)
        ));
    }

    #[test]
    fn multi_index_round_trip_exhaustive() {
        for dims in [
            vec![4096],
            vec![16, 16, 16],
            vec![2, 3, 5, 7],
            vec![8, 1, 512],
        ] {
            let s = Shape::new(dims).unwrap();
            assert!(s.total() <= 4096);
            for l in 0..s.total() {
                let m = s.multi_index(l).unwrap();
                let back = s.multi_index_from_digits(m.digits().to_vec()).unwrap();
                assert_eq!(back.linear(), l);
            }
        }
    }

    #[test]
    fn khatri_rao_of_identities() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let m = KrMatrix::new(vec![i2.clone(), i2]).unwrap();
        let dense = m.materialize().unwrap();
        let mut expected = DMatrix::zeros(4, 2);
        expected[(0, 0)] = 1.0;
        expected[(3, 1)] = 1.0;
        assert_eq!(dense, expected);
    }

    #[test]
    fn khatri_rao_single_factor_unchanged() {
        let f = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let m = KrMatrix::new(vec![f.clone()]).unwrap();
        assert_eq!(m.materialize().unwrap(), f);
    }

    #[test]
    fn khatri_rao_matches_column_oracle() {
        let mut rng = rng_from_seed(3);
        let a = DMatrix::from_fn(3, 2, |_, _| rng.sample(StandardNormal));
        let b = DMatrix::from_fn(4, 2, |_, _| rng.sample(StandardNormal));
        let m = KrMatrix::new(vec![a.clone(), b.clone()]).unwrap();
        let dense = m.materialize().unwrap();
        for r in 0..2 {
            for i in 0..3 {
                for j in 0..4 {
                    assert_eq!(dense[(i * 4 + j, r)], a[(i, r)] * b[(j, r)]);
                }
            }
        }
    }

    #[test]
    fn mismatched_columns_rejected() {
        let a = DMatrix::<f64>::zeros(3, 2);
        let b = DMatrix::<f64>::zeros(4, 3);
        assert!(matches!(
            KrMatrix::new(vec![a, b]),
            Err(Error::ColumnMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn gram_and_lazy_products_match_dense() {
        let mut rng = rng_from_seed(4);
        let m = KrMatrix::new(vec![
            DMatrix::from_fn(3, 4, |_, _| rng.sample(StandardNormal)),
            DMatrix::from_fn(5, 4, |_, _| rng.sample(StandardNormal)),
        ])
        .unwrap();
        let dense = m.materialize().unwrap();
        let g = m.gram();
        let g_dense = dense.transpose() * &dense;
        assert!((g - &g_dense).norm() <= 1e-12 * g_dense.norm());

        let z = random_vec(&mut rng, 4);
        let lazy = m.mul_vec(&z).unwrap();
        let mut row = vec![0.0; 4];
        for i in 0..15 {
            m.row_into(i, &mut row);
            for r in 0..4 {
                assert_eq!(row[r], dense[(i, r)]);
            }
        }
        let zv = nalgebra::DVector::from_vec(z);
        let expected = &dense * zv;
        for (a, b) in lazy.iter().zip(expected.iter()) {
            assert!((a - b).abs() <= 1e-12 * expected.norm());
        }
    }

    proptest! {
        #[test]
        fn materialized_norm_is_product_of_norms(
            a in prop::collection::vec(-10.0f64..10.0, 1..6),
            b in prop::collection::vec(-10.0f64..10.0, 1..6),
            c in prop::collection::vec(-10.0f64..10.0, 1..6),
        ) {
            let v = KronVector::new(vec![a, b, c]).unwrap();
            let dense = v.materialize().unwrap();
            let n = dense.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((n - v.norm()).abs() <= 1e-12 * n.max(1e-300));
        }

        #[test]
        fn matrix_times_z_is_sum_of_columns(seed in 0u64..1000, r in 1usize..4) {
            let mut rng = rng_from_seed(seed);
            let m = KrMatrix::new(vec![
                DMatrix::from_fn(3, r, |_, _| rng.sample(StandardNormal)),
                DMatrix::from_fn(2, r, |_, _| rng.sample(StandardNormal)),
                DMatrix::from_fn(4, r, |_, _| rng.sample(StandardNormal)),
            ]).unwrap();
            let z: Vec<f64> = random_vec(&mut rng, r);
            let prod = m.materialize().unwrap() * nalgebra::DVector::from_column_slice(&z);
            let mut sum = vec![0.0; 24];
            for (k, &zk) in z.iter().enumerate() {
                for (s, c) in sum.iter_mut().zip(m.column(k).materialize().unwrap()) {
                    *s += zk * c;
                }
            }
            let scale = prod.norm().max(1e-300);
            for (a, b) in prod.iter().zip(&sum) {
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
        }
    }
}
