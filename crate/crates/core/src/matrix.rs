//! Dense exact matrices.
//!
//! Entry access (`m[(r, c)]`, `row`, `column`, pivot lists) is 0-based as
//! usual in Rust. The matrix-unit constructors [`Matrix::elementary`] and
//! [`ColumnVector::unit`] are 1-based, matching the `E_{i,j}` / `e_i`
//! notation used throughout the crate and in human-readable messages.

use std::fmt;
use std::ops::Index;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::field::{rational_parts, FieldElement, FieldSpec};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColumnVector {
    spec: FieldSpec,
    entries: Vec<FieldElement>,
}

impl ColumnVector {
    pub fn new(spec: FieldSpec, entries: Vec<FieldElement>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DimensionMismatch("empty column vector".into()));
        }
        if let Some(bad) = entries.iter().find(|e| e.spec() != spec) {
            return Err(Error::FieldMismatch {
                left: spec,
                right: bad.spec(),
            });
        }
        Ok(ColumnVector { spec, entries })
    }

    pub fn zeros(spec: FieldSpec, dim: usize) -> Self {
        assert!(dim > 0, "column vectors have positive dimension");
        ColumnVector {
            spec,
            entries: vec![spec.zero(); dim],
        }
    }

    /// The standard basis vector `e_i` (1-based).
    pub fn unit(spec: FieldSpec, dim: usize, i: usize) -> Result<Self> {
        if i == 0 || i > dim {
            return Err(Error::IndexOutOfRange { i, j: 1, n: dim });
        }
        let mut v = Self::zeros(spec, dim);
        v.entries[i - 1] = spec.one();
        Ok(v)
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[FieldElement] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(FieldElement::is_zero)
    }

    pub fn scale(&self, s: &FieldElement) -> Self {
        ColumnVector {
            spec: self.spec,
            entries: self.entries.iter().map(|e| e * s).collect(),
        }
    }
}

impl Index<usize> for ColumnVector {
    type Output = FieldElement;

    fn index(&self, i: usize) -> &FieldElement {
        &self.entries[i]
    }
}

/// Reduced row echelon form together with its pivot columns (0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    pub reduced: Matrix,
    pub pivots: Vec<usize>,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix {
    spec: FieldSpec,
    rows: usize,
    cols: usize,
    entries: Vec<FieldElement>,
}

impl Matrix {
    pub fn zeros(spec: FieldSpec, rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrices have positive dimensions");
        Matrix {
            spec,
            rows,
            cols,
            entries: vec![spec.zero(); rows * cols],
        }
    }

    pub fn identity(spec: FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(spec, n, n);
        for k in 0..n {
            m.entries[k * n + k] = spec.one();
        }
        m
    }

    pub fn from_fn(
        spec: FieldSpec,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> FieldElement,
    ) -> Self {
        assert!(rows > 0 && cols > 0, "matrices have positive dimensions");
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let e = f(r, c);
                assert_eq!(e.spec(), spec, "entry field differs from matrix field");
                entries.push(e);
            }
        }
        Matrix {
            spec,
            rows,
            cols,
            entries,
        }
    }

    pub fn from_rows(spec: FieldSpec, rows: Vec<Vec<FieldElement>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(Error::DimensionMismatch("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let nrows = rows.len();
        let entries: Vec<FieldElement> = rows.into_iter().flatten().collect();
        if let Some(bad) = entries.iter().find(|e| e.spec() != spec) {
            return Err(Error::FieldMismatch {
                left: spec,
                right: bad.spec(),
            });
        }
        Ok(Matrix {
            spec,
            rows: nrows,
            cols,
            entries,
        })
    }

    /// Convenience constructor from small integers.
    pub fn from_i64_rows(spec: FieldSpec, rows: &[&[i64]]) -> Result<Self> {
        Self::from_rows(
            spec,
            rows.iter()
                .map(|r| r.iter().map(|&v| spec.from_i64(v)).collect())
                .collect(),
        )
    }

    /// The matrix unit `E_{i,j}` of size `n` (1-based indices).
    pub fn elementary(spec: FieldSpec, n: usize, i: usize, j: usize) -> Result<Self> {
        if n == 0 || i == 0 || j == 0 || i > n || j > n {
            return Err(Error::IndexOutOfRange { i, j, n });
        }
        let mut m = Self::zeros(spec, n, n);
        m.entries[(i - 1) * n + (j - 1)] = spec.one();
        Ok(m)
    }

    /// `S = E_{1,2} + E_{2,3} + ... + E_{n-1,n}`; the 1x1 zero matrix when `n = 1`.
    pub fn shift(spec: FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(spec, n, n);
        for k in 0..n.saturating_sub(1) {
            m.entries[k * n + k + 1] = spec.one();
        }
        m
    }

    /// Matrix whose `k`-th column is `cols[k]`.
    pub fn from_columns(cols: &[ColumnVector]) -> Result<Self> {
        let first = cols
            .first()
            .ok_or_else(|| Error::DimensionMismatch("no columns".into()))?;
        let (spec, dim) = (first.spec, first.dim());
        for c in cols {
            if c.spec != spec {
                return Err(Error::FieldMismatch {
                    left: spec,
                    right: c.spec,
                });
            }
            if c.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "column of length {} among columns of length {dim}",
                    c.dim()
                )));
            }
        }
        Ok(Self::from_fn(spec, dim, cols.len(), |r, c| {
            cols[c].entries[r].clone()
        }))
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[FieldElement] {
        &self.entries
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> ColumnVector {
        ColumnVector {
            spec: self.spec,
            entries: (0..self.rows).map(|r| self[(r, c)].clone()).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<FieldElement>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(FieldElement::is_zero)
    }

    fn nonzeros(&self) -> usize {
        self.entries.iter().filter(|e| !e.is_zero()).count()
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && self.entries.iter().enumerate().all(|(k, e)| {
                if k / self.cols == k % self.cols {
                    e.is_one()
                } else {
                    e.is_zero()
                }
            })
    }

    /// `Some(c)` when the matrix equals `c * I`.
    pub fn as_scalar(&self) -> Option<FieldElement> {
        if !self.is_square() {
            return None;
        }
        let c = self[(0, 0)].clone();
        let ok = self.entries.iter().enumerate().all(|(k, e)| {
            if k / self.cols == k % self.cols {
                *e == c
            } else {
                e.is_zero()
            }
        });
        ok.then_some(c)
    }

    fn ensure_field(&self, other: FieldSpec) -> Result<()> {
        if self.spec == other {
            Ok(())
        } else {
            Err(Error::FieldMismatch {
                left: self.spec,
                right: other,
            })
        }
    }

    fn ensure_same_shape(&self, other: &Matrix) -> Result<()> {
        self.ensure_field(other.spec)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    fn ensure_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.ensure_same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.ensure_same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(
        &self,
        other: &Matrix,
        f: impl Fn(&FieldElement, &FieldElement) -> FieldElement,
    ) -> Matrix {
        Matrix {
            spec: self.spec,
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: &FieldElement) -> Result<Matrix> {
        self.ensure_field(s.spec())?;
        Ok(Matrix {
            spec: self.spec,
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e * s).collect(),
        })
    }

    pub fn transpose(&self) -> Matrix {
        Self::from_fn(self.spec, self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        self.ensure_field(other.spec)?;
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        // the per-term loop below wins when either side is very sparse,
        // e.g. a matrix unit
        if self.spec == FieldSpec::Rationals
            && self.nonzeros() > self.rows
            && other.nonzeros() > other.cols
        {
            return Ok(self.mul_rational(other));
        }
        let zero = self.spec.zero();
        let mut out = vec![zero.clone(); self.rows * other.cols];
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.entries[r * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = &other.entries[k * other.cols + c];
                    if !b.is_zero() {
                        let slot = &mut out[r * other.cols + c];
                        *slot = &*slot + &(a * b);
                    }
                }
            }
        }
        Ok(Matrix {
            spec: self.spec,
            rows: self.rows,
            cols: other.cols,
            entries: out,
        })
    }

    // Rows of `self` and columns of `other` are scaled to integers by the lcm
    // of their denominators, so each entry costs one reduction instead of one
    // per term.
    fn mul_rational(&self, other: &Matrix) -> Matrix {
        let integral = |line: Vec<&FieldElement>| -> (Vec<BigInt>, BigInt) {
            let parts: Vec<_> = line
                .iter()
                .map(|e| rational_parts(e.as_rational().expect("rational entry")))
                .collect();
            let lcm = parts.iter().fold(BigInt::one(), |acc, (_, d)| acc.lcm(d));
            let ints = parts.iter().map(|(num, den)| num * (&lcm / den)).collect();
            (ints, lcm)
        };
        let left: Vec<_> = (0..self.rows)
            .map(|r| integral(self.row(r).iter().collect()))
            .collect();
        let right: Vec<_> = (0..other.cols)
            .map(|c| integral((0..other.rows).map(|k| &other[(k, c)]).collect()))
            .collect();
        Self::from_fn(self.spec, self.rows, other.cols, |r, c| {
            let (a, da) = &left[r];
            let (b, db) = &right[c];
            let num: BigInt = a
                .iter()
                .zip(b)
                .filter(|(x, y)| !x.is_zero() && !y.is_zero())
                .map(|(x, y)| x * y)
                .sum();
            if num.is_zero() {
                self.spec.zero()
            } else {
                FieldElement::from_ratio(self.spec, &num, &(da * db)).expect("nonzero denominator")
            }
        })
    }

    pub fn mul_vec(&self, v: &ColumnVector) -> Result<ColumnVector> {
        self.ensure_field(v.spec)?;
        if self.cols != v.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by a vector of length {}",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        let entries = (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(&v.entries)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(self.spec.zero(), |acc, (a, b)| acc + a * b)
            })
            .collect();
        Ok(ColumnVector {
            spec: self.spec,
            entries,
        })
    }

    /// `A^k` by repeated squaring; `A^0 = I`.
    pub fn power(&self, mut k: u64) -> Result<Matrix> {
        self.ensure_square()?;
        let mut acc = Self::identity(self.spec, self.rows);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Gauss-Jordan elimination; the pivot in each column is the first
    /// nonzero entry at or below the current row.
    pub fn rref(&self) -> Rref {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(row, p);
            let inv = m[(row, col)].inv().expect("pivot is nonzero");
            m.scale_row(row, &inv);
            for r in 0..m.rows {
                if r != row && !m[(r, col)].is_zero() {
                    let factor = m[(r, col)].clone();
                    m.sub_row_multiple(r, row, &factor);
                }
            }
            pivots.push(col);
            row += 1;
        }
        let rank = pivots.len();
        Rref {
            reduced: m,
            pivots,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// Basis of `{v : Av = 0}`, one vector per free column in increasing
    /// order, each scaled so that its first nonzero coordinate is 1.
    pub fn nullspace_basis(&self) -> Vec<ColumnVector> {
        let Rref {
            reduced, pivots, ..
        } = self.rref();
        let free = (0..self.cols).filter(|c| !pivots.contains(c));
        free.map(|f| {
            let mut entries = vec![self.spec.zero(); self.cols];
            entries[f] = self.spec.one();
            for (r, &pc) in pivots.iter().enumerate() {
                entries[pc] = -&reduced[(r, f)];
            }
            let v = ColumnVector {
                spec: self.spec,
                entries,
            };
            let lead = v
                .entries
                .iter()
                .find(|e| !e.is_zero())
                .expect("free coordinate is 1")
                .inv()
                .expect("nonzero");
            v.scale(&lead)
        })
        .collect()
    }

    /// Determinant by Gaussian elimination with exact division.
    pub fn det(&self) -> Result<FieldElement> {
        self.ensure_square()?;
        let mut m = self.clone();
        let n = m.rows;
        let mut det = self.spec.one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !m[(r, col)].is_zero()) else {
                return Ok(self.spec.zero());
            };
            if p != col {
                m.swap_rows(col, p);
                det = -det;
            }
            let pivot = m[(col, col)].clone();
            det = det * &pivot;
            let inv = pivot.inv().expect("pivot is nonzero");
            for r in col + 1..n {
                if !m[(r, col)].is_zero() {
                    let factor = &m[(r, col)] * &inv;
                    m.sub_row_multiple(r, col, &factor);
                }
            }
        }
        Ok(det)
    }

    /// Fraction-free (Bareiss) determinant. Rational rows are first scaled
    /// to integers; residues are lifted to integers and the result reduced.
    pub fn det_bareiss(&self) -> Result<FieldElement> {
        self.ensure_square()?;
        let n = self.rows;
        let mut scale = BigInt::one();
        let mut a: Vec<Vec<BigInt>> = Vec::with_capacity(n);
        for r in 0..n {
            let row = self.row(r);
            match self.spec {
                FieldSpec::Rationals => {
                    let parts: Vec<_> = row
                        .iter()
                        .map(|e| rational_parts(e.as_rational().expect("rational entry")))
                        .collect();
                    let lcm = parts.iter().fold(BigInt::one(), |acc, (_, d)| acc.lcm(d));
                    a.push(parts.iter().map(|(num, den)| num * (&lcm / den)).collect());
                    scale *= lcm;
                }
                FieldSpec::PrimeField(_) => {
                    a.push(
                        row.iter()
                            .map(|e| BigInt::from(e.residue().expect("residue entry")))
                            .collect(),
                    );
                }
            }
        }
        let det_int = bareiss_integer(a);
        match self.spec {
            FieldSpec::Rationals => FieldElement::from_ratio(self.spec, &det_int, &scale),
            FieldSpec::PrimeField(_) => Ok(FieldElement::from_bigint(self.spec, &det_int)),
        }
    }

    /// Inverse via Gauss-Jordan on `[A | I]`.
    pub fn inverse(&self) -> Result<Matrix> {
        self.ensure_square()?;
        let n = self.rows;
        let aug = Self::from_fn(self.spec, n, 2 * n, |r, c| {
            if c < n {
                self[(r, c)].clone()
            } else if c - n == r {
                self.spec.one()
            } else {
                self.spec.zero()
            }
        });
        let Rref {
            reduced, pivots, ..
        } = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::SingularMatrix);
        }
        Ok(Self::from_fn(self.spec, n, n, |r, c| {
            reduced[(r, c + n)].clone()
        }))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.entries.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn scale_row(&mut self, r: usize, s: &FieldElement) {
        for c in 0..self.cols {
            let k = r * self.cols + c;
            self.entries[k] = &self.entries[k] * s;
        }
    }

    // row[target] -= factor * row[source]
    fn sub_row_multiple(&mut self, target: usize, source: usize, factor: &FieldElement) {
        for c in 0..self.cols {
            let s = &self.entries[source * self.cols + c];
            if s.is_zero() {
                continue;
            }
            let delta = factor * s;
            let k = target * self.cols + c;
            self.entries[k] = &self.entries[k] - &delta;
        }
    }
}

fn bareiss_integer(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let mut sign = false;
    let mut prev = BigInt::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&r| !a[r][k].is_zero()) else {
            return BigInt::zero();
        };
        if p != k {
            a.swap(p, k);
            sign = !sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if sign {
        -det
    } else {
        det
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = FieldElement;

    fn index(&self, (r, c): (usize, usize)) -> &FieldElement {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        &self.entries[r * self.cols + c]
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (c, e) in self.row(r).iter().enumerate() {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}
