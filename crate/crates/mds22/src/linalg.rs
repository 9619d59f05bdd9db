//! Dense small-matrix algebra over GF(q).
//!
//! Everything in this crate is at most 4 x n small, so matrices are plain
//! row-major vectors with value semantics. Row reduction is exact; RREF is
//! the canonical representative of a row space (two matrices have equal
//! row spaces iff equal RREF), which the repair oracle relies on.

use std::fmt;
use std::ops::Range;

use thiserror::Error;

use crate::gf::{Field, FieldElem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("matrices belong to different fields")]
    FieldMismatch,
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix is singular")]
    Singular,
}

/// Dense matrix over a shared [`Field`], row-major.
#[derive(Clone)]
pub struct Mat {
    rows: usize,
    cols: usize,
    entries: Vec<FieldElem>,
    field: Field,
}

impl PartialEq for Mat {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && *self.field == *other.field
            && self.entries == other.entries
    }
}
impl Eq for Mat {}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat{}x{}[", self.rows, self.cols)?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
        }
        write!(f, "]")
    }
}

impl Mat {
    pub fn zeros(field: &Field, rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            entries: vec![FieldElem(0); rows * cols],
            field: field.clone(),
        }
    }

    pub fn identity(field: &Field, n: usize) -> Mat {
        let mut m = Mat::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn from_elems(field: &Field, rows: usize, cols: usize, entries: Vec<FieldElem>) -> Mat {
        assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
        Mat {
            rows,
            cols,
            entries,
            field: field.clone(),
        }
    }

    /// Build from integer literals, each reduced into the field.
    pub fn from_ints(field: &Field, rows: &[&[u64]]) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            entries.extend(row.iter().map(|&v| field.from_int(v)));
        }
        Mat {
            rows: r,
            cols: c,
            entries,
            field: field.clone(),
        }
    }

    /// A 2x1 column vector.
    pub fn col2(field: &Field, top: FieldElem, bottom: FieldElem) -> Mat {
        Mat::from_elems(field, 2, 1, vec![top, bottom])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElem {
        self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElem) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn entries(&self) -> &[FieldElem] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.0 == 0)
    }

    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> Mat {
        let mut out = Mat::zeros(&self.field, rows.len(), cols.len());
        for (ri, r) in rows.clone().enumerate() {
            for (ci, c) in cols.clone().enumerate() {
                out.set(ri, ci, self.get(r, c));
            }
        }
        out
    }

    pub fn select_cols(&self, cols: &[usize]) -> Mat {
        let mut out = Mat::zeros(&self.field, self.rows, cols.len());
        for r in 0..self.rows {
            for (ci, &c) in cols.iter().enumerate() {
                out.set(r, ci, self.get(r, c));
            }
        }
        out
    }

    fn check_same_field(&self, other: &Mat) -> Result<(), LinalgError> {
        if *self.field != *other.field {
            return Err(LinalgError::FieldMismatch);
        }
        Ok(())
    }

    fn dim_err(&self, other: &Mat) -> LinalgError {
        LinalgError::DimensionMismatch {
            left_rows: self.rows,
            left_cols: self.cols,
            right_rows: other.rows,
            right_cols: other.cols,
        }
    }

    pub fn mul(&self, other: &Mat) -> Result<Mat, LinalgError> {
        self.check_same_field(other)?;
        if self.cols != other.rows {
            return Err(self.dim_err(other));
        }
        let f = &self.field;
        let mut out = Mat::zeros(f, self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = f.zero();
                for t in 0..self.cols {
                    acc = f.add(acc, f.mul(self.get(r, t), other.get(t, c)));
                }
                out.set(r, c, acc);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Mat) -> Result<Mat, LinalgError> {
        self.check_same_field(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(self.dim_err(other));
        }
        let f = &self.field;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| f.add(a, b))
            .collect();
        Ok(Mat::from_elems(f, self.rows, self.cols, entries))
    }

    pub fn neg(&self) -> Mat {
        let f = &self.field;
        let entries = self.entries.iter().map(|&a| f.neg(a)).collect();
        Mat::from_elems(f, self.rows, self.cols, entries)
    }

    /// Row rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Number of columns with at least one nonzero entry.
    pub fn nonzero_columns(&self) -> usize {
        (0..self.cols)
            .filter(|&c| (0..self.rows).any(|r| self.get(r, c).0 != 0))
            .count()
    }

    /// Reduced row-echelon form plus the pivot column list. Pivots are
    /// normalized to 1 and fully cleared above and below, so equal row
    /// spaces yield identical output.
    pub fn rref(&self) -> (Mat, Vec<usize>) {
        let f = self.field.clone();
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&pr| m.get(pr, c).0 != 0) else {
                continue;
            };
            if pr != r {
                for j in 0..m.cols {
                    let (a, b) = (m.get(r, j), m.get(pr, j));
                    m.set(r, j, b);
                    m.set(pr, j, a);
                }
            }
            let inv = f.inv(m.get(r, c)).expect("pivot is nonzero");
            for j in 0..m.cols {
                m.set(r, j, f.mul(m.get(r, j), inv));
            }
            for r2 in 0..m.rows {
                let factor = m.get(r2, c);
                if r2 == r || factor.0 == 0 {
                    continue;
                }
                for j in 0..m.cols {
                    let v = f.sub(m.get(r2, j), f.mul(factor, m.get(r, j)));
                    m.set(r2, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn inverse(&self) -> Result<Mat, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare);
        }
        let aug = Mat::hstack(&[self, &Mat::identity(&self.field, self.rows)])?;
        let (red, pivots) = aug.rref();
        if pivots.len() != self.rows || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return Err(LinalgError::Singular);
        }
        Ok(red.submatrix(0..self.rows, self.cols..2 * self.cols))
    }

    /// Solves a*x = b for square invertible a.
    pub fn solve(&self, b: &Mat) -> Result<Mat, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare);
        }
        self.check_same_field(b)?;
        if b.rows != self.rows {
            return Err(self.dim_err(b));
        }
        let aug = Mat::hstack(&[self, b])?;
        let (red, pivots) = aug.rref();
        if pivots.len() != self.rows || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return Err(LinalgError::Singular);
        }
        Ok(red.submatrix(0..self.rows, self.cols..self.cols + b.cols))
    }

    /// Rank factorization a = L*R where L keeps the leftmost maximal
    /// independent column set of a (original values) and R is the first
    /// rank rows of rref(a). Zero columns of a stay zero in R, so
    /// nonzero_columns(R) = nonzero_columns(a).
    pub fn column_factorize(&self) -> (Mat, Mat) {
        let (red, pivots) = self.rref();
        let r = pivots.len();
        let l = self.select_cols(&pivots);
        let right = red.submatrix(0..r, 0..self.cols);
        (l, right)
    }

    pub fn hstack(parts: &[&Mat]) -> Result<Mat, LinalgError> {
        assert!(!parts.is_empty());
        let rows = parts[0].rows;
        let field = parts[0].field.clone();
        for p in parts.iter().skip(1) {
            parts[0].check_same_field(p)?;
            if p.rows != rows {
                return Err(parts[0].dim_err(p));
            }
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Mat::zeros(&field, rows, cols);
        let mut base = 0;
        for p in parts {
            for r in 0..rows {
                for c in 0..p.cols {
                    out.set(r, base + c, p.get(r, c));
                }
            }
            base += p.cols;
        }
        Ok(out)
    }

    pub fn vstack(parts: &[&Mat]) -> Result<Mat, LinalgError> {
        assert!(!parts.is_empty());
        let cols = parts[0].cols;
        let field = parts[0].field.clone();
        for p in parts.iter().skip(1) {
            parts[0].check_same_field(p)?;
            if p.cols != cols {
                return Err(parts[0].dim_err(p));
            }
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut out = Mat::zeros(&field, rows, cols);
        let mut base = 0;
        for p in parts {
            for r in 0..p.rows {
                for c in 0..cols {
                    out.set(base + r, c, p.get(r, c));
                }
            }
            base += p.rows;
        }
        Ok(out)
    }

    /// 2D block composition: each inner slice is one block row.
    pub fn block(rows: &[&[&Mat]]) -> Result<Mat, LinalgError> {
        let mut stacked = Vec::with_capacity(rows.len());
        for row in rows {
            stacked.push(Mat::hstack(row)?);
        }
        let refs: Vec<&Mat> = stacked.iter().collect();
        Mat::vstack(&refs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldSpec;
    use rand::{Rng, SeedableRng};

    fn gf(p: u32) -> Field {
        FieldSpec::prime(p).unwrap()
    }

    fn random_mat(field: &Field, rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
        let entries = (0..rows * cols)
            .map(|_| field.elem(rng.gen_range(0..field.order())))
            .collect();
        Mat::from_elems(field, rows, cols, entries)
    }

    #[test]
    fn mul_examples() {
        let f = gf(5);
        let x = Mat::from_ints(&f, &[&[1, 2], &[3, 4]]);
        let i = Mat::identity(&f, 2);
        assert_eq!(i.mul(&x).unwrap(), x);
        let v = Mat::from_ints(&f, &[&[1], &[1]]);
        assert_eq!(x.mul(&v).unwrap(), Mat::from_ints(&f, &[&[3], &[2]]));
        let z = Mat::zeros(&f, 2, 2);
        assert!(z.mul(&x).unwrap().is_zero());
        assert!(x.mul(&Mat::zeros(&f, 3, 1)).is_err());
    }

    #[test]
    fn field_mismatch_detected() {
        let a = Mat::identity(&gf(5), 2);
        let b = Mat::identity(&gf(7), 2);
        assert_eq!(a.mul(&b).unwrap_err(), LinalgError::FieldMismatch);
    }

    #[test]
    fn rank_examples() {
        let f = gf(5);
        assert_eq!(Mat::identity(&f, 2).rank(), 2);
        assert_eq!(Mat::from_ints(&f, &[&[1, 2], &[2, 4]]).rank(), 1);
        assert_eq!(Mat::zeros(&f, 2, 2).rank(), 0);
    }

    #[test]
    fn nonzero_columns_examples() {
        let f = gf(5);
        assert_eq!(Mat::zeros(&f, 2, 2).nonzero_columns(), 0);
        assert_eq!(Mat::from_ints(&f, &[&[1, 0], &[0, 0]]).nonzero_columns(), 1);
        assert_eq!(Mat::from_ints(&f, &[&[0, 3], &[0, 4]]).nonzero_columns(), 1);
    }

    #[test]
    fn inverse_examples() {
        let f = gf(11);
        assert_eq!(Mat::identity(&f, 4).inverse().unwrap(), Mat::identity(&f, 4));
        let a = Mat::from_ints(&f, &[&[1, 1], &[1, 2]]);
        let inv = a.inverse().unwrap();
        assert_eq!(inv, Mat::from_ints(&f, &[&[2, 10], &[10, 1]]));
        assert_eq!(a.mul(&inv).unwrap(), Mat::identity(&f, 2));

        let f5 = gf(5);
        let s = Mat::from_ints(&f5, &[&[1, 2], &[2, 4]]);
        assert_eq!(s.inverse().unwrap_err(), LinalgError::Singular);
        assert_eq!(
            Mat::zeros(&f5, 2, 3).inverse().unwrap_err(),
            LinalgError::NotSquare
        );
    }

    #[test]
    fn rref_examples() {
        let f2 = gf(2);
        let a = Mat::from_ints(&f2, &[&[1, 1, 0, 0], &[1, 1, 1, 0]]);
        let (red, pivots) = a.rref();
        assert_eq!(red, Mat::from_ints(&f2, &[&[1, 1, 0, 0], &[0, 0, 1, 0]]));
        assert_eq!(pivots, vec![0, 2]);

        let f = gf(5);
        let padded = Mat::from_ints(&f, &[&[1, 0, 0, 0], &[0, 1, 0, 0]]);
        let (red, pivots) = padded.rref();
        assert_eq!(red, padded);
        assert_eq!(pivots, vec![0, 1]);

        let z = Mat::zeros(&f, 2, 2);
        let (red, pivots) = z.rref();
        assert!(red.is_zero());
        assert!(pivots.is_empty());
    }

    #[test]
    fn column_factorize_examples() {
        let f = gf(5);
        let i = Mat::identity(&f, 2);
        assert_eq!(i.column_factorize(), (i.clone(), i.clone()));

        let a = Mat::from_ints(&f, &[&[1, 0], &[2, 0]]);
        let (l, r) = a.column_factorize();
        assert_eq!(l, Mat::from_ints(&f, &[&[1], &[2]]));
        assert_eq!(r, Mat::from_ints(&f, &[&[1, 0]]));

        let z = Mat::zeros(&f, 2, 2);
        let (l, r) = z.column_factorize();
        assert_eq!((l.rows(), l.cols()), (2, 0));
        assert_eq!((r.rows(), r.cols()), (0, 2));
        assert_eq!(l.mul(&r).unwrap(), z);
    }

    #[test]
    fn solve_examples() {
        let f = gf(11);
        let a = Mat::from_ints(&f, &[&[1, 1], &[1, 2]]);
        let b = Mat::from_ints(&f, &[&[3], &[5]]);
        let x = a.solve(&b).unwrap();
        assert_eq!(x, Mat::from_ints(&f, &[&[1], &[2]]));
        assert_eq!(a.mul(&x).unwrap(), b);
        assert_eq!(Mat::identity(&f, 2).solve(&b).unwrap(), b);

        let f5 = gf(5);
        let s = Mat::from_ints(&f5, &[&[1, 2], &[2, 4]]);
        let b5 = Mat::from_ints(&f5, &[&[1], &[1]]);
        assert_eq!(s.solve(&b5).unwrap_err(), LinalgError::Singular);
    }

    #[test]
    fn stack_examples() {
        let f = gf(7);
        let i = Mat::identity(&f, 2);
        let h = Mat::hstack(&[&i, &i]).unwrap();
        assert_eq!((h.rows(), h.cols()), (2, 4));
        let lambda = Mat::from_ints(&f, &[&[1], &[3]]);
        let z = Mat::zeros(&f, 2, 1);
        let v = Mat::vstack(&[&lambda, &z]).unwrap();
        assert_eq!((v.rows(), v.cols()), (4, 1));
        assert_eq!(v.get(1, 0), f.elem(3));
        assert!(Mat::hstack(&[&i, &Mat::zeros(&f, 3, 1)]).is_err());

        let b = Mat::block(&[&[&lambda, &lambda], &[&z, &lambda]]).unwrap();
        assert_eq!((b.rows(), b.cols()), (4, 2));
        assert_eq!(b.get(2, 0), f.zero());
        assert_eq!(b.get(3, 1), f.elem(3));
    }

    #[test]
    fn factorization_properties_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(42);
        for field in [gf(2), gf(5), gf(13), FieldSpec::binary_default(4).unwrap()] {
            for _ in 0..300 {
                let a = random_mat(&field, 2, 4, &mut rng);
                let (l, r) = a.column_factorize();
                assert_eq!(l.mul(&r).unwrap(), a);
                assert_eq!(r.rank(), a.rank());
                assert_eq!(r.nonzero_columns(), a.nonzero_columns());
                let (red, pivots) = a.rref();
                assert_eq!(pivots.len(), a.rank());
                assert_eq!(red.rank(), a.rank());
            }
        }
    }

    #[test]
    fn row_space_canonicalization_random() {
        // rref(a) must be invariant under left multiplication by any
        // invertible matrix: it canonicalizes the row space.
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for field in [gf(3), gf(13), FieldSpec::binary_default(3).unwrap()] {
            for _ in 0..300 {
                let a = random_mat(&field, 2, 4, &mut rng);
                let lambda = loop {
                    let l = random_mat(&field, 2, 2, &mut rng);
                    if l.rank() == 2 {
                        break l;
                    }
                };
                let la = lambda.mul(&a).unwrap();
                assert_eq!(a.rref().0, la.rref().0);
            }
        }
    }

    #[test]
    fn inverse_round_trip_random() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let f = gf(13);
        for _ in 0..200 {
            let a = loop {
                let c = random_mat(&f, 4, 4, &mut rng);
                if c.rank() == 4 {
                    break c;
                }
            };
            let inv = a.inverse().unwrap();
            assert_eq!(a.mul(&inv).unwrap(), Mat::identity(&f, 4));
            assert_eq!(inv.mul(&a).unwrap(), Mat::identity(&f, 4));
        }
    }
}
