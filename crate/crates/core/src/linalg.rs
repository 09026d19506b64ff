//! Dense matrices over an exact field and Gauss–Jordan elimination. Pivots are
//! always the first nonzero entry in row-major order, so every result is
//! deterministic.

use std::fmt;

use num_traits::{One, Zero};

use crate::rational::Rational;

/// An element of an exact field. Zero and one are produced from an existing
/// element because tower elements need their tower to build constants.
pub trait Scalar: Clone + PartialEq + fmt::Debug {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn is_zero_elt(&self) -> bool;
    fn add_elt(&self, o: &Self) -> Self;
    fn sub_elt(&self, o: &Self) -> Self;
    fn mul_elt(&self, o: &Self) -> Self;
    fn neg_elt(&self) -> Self;
    /// Multiplicative inverse; only called on nonzero elements.
    fn inv_elt(&self) -> Self;
}

impl Scalar for Rational {
    fn zero_like(&self) -> Self {
        Rational::zero()
    }
    fn one_like(&self) -> Self {
        Rational::one()
    }
    fn is_zero_elt(&self) -> bool {
        self.is_zero()
    }
    fn add_elt(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_elt(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_elt(&self, o: &Self) -> Self {
        self * o
    }
    fn neg_elt(&self) -> Self {
        -self
    }
    fn inv_elt(&self) -> Self {
        self.recip()
    }
}

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut l = f.debug_list();
        for r in 0..self.rows {
            l.entry(&&self.data[r * self.cols..(r + 1) * self.cols]);
        }
        l.finish()
    }
}

/// Result of row reduction: the reduced row echelon form, pivot columns and
/// the accumulated left transform `t` with `t · original = rref`.
pub struct Rref<T> {
    pub rref: Matrix<T>,
    pub pivots: Vec<usize>,
    pub transform: Matrix<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn filled(rows: usize, cols: usize, v: T) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }

    pub fn identity(n: usize, proto: &T) -> Self {
        let (z, o) = (proto.zero_like(), proto.one_like());
        Self::from_fn(n, n, |r, c| if r == c { o.clone() } else { z.clone() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).clone())
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_rows(idx.iter().map(|&i| self.row(i).to_vec()).collect())
    }

    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Self::from_fn(r1 - r0, c1 - c0, |r, c| self.get(r0 + r, c0 + c).clone())
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        Self::from_fn(self.rows, self.cols + other.cols, |r, c| {
            if c < self.cols {
                self.get(r, c).clone()
            } else {
                other.get(r, c - self.cols).clone()
            }
        })
    }

    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        Self::from_fn(self.rows + other.rows, self.cols, |r, c| {
            if r < self.rows {
                self.get(r, c).clone()
            } else {
                other.get(r - self.rows, c).clone()
            }
        })
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.add_elt(b)).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.sub_elt(b)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.map(T::neg_elt)
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| s.mul_elt(x))
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "dimension mismatch in product");
        let proto = self.data.first().or(o.data.first()).expect("empty product");
        let zero = proto.zero_like();
        Self::from_fn(self.rows, o.cols, |r, c| {
            let mut acc = zero.clone();
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero_elt() {
                    continue;
                }
                let b = o.get(k, c);
                if b.is_zero_elt() {
                    continue;
                }
                acc = acc.add_elt(&a.mul_elt(b));
            }
            acc
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(T::is_zero_elt)
    }

    /// Gauss–Jordan elimination with the first nonzero pivot in each column.
    pub fn rref(&self) -> Rref<T> {
        let proto = self.data.first().expect("rref of empty matrix");
        let mut m = self.clone();
        let mut t = Matrix::identity(self.rows, proto);
        let mut pivots = Vec::new();
        let mut pr = 0;
        for c in 0..self.cols {
            if pr == self.rows {
                break;
            }
            let Some(p) = (pr..self.rows).find(|&r| !m.get(r, c).is_zero_elt()) else {
                continue;
            };
            m.swap_rows(p, pr);
            t.swap_rows(p, pr);
            let inv = m.get(pr, c).inv_elt();
            m.scale_row(pr, &inv);
            t.scale_row(pr, &inv);
            for r in 0..self.rows {
                if r != pr && !m.get(r, c).is_zero_elt() {
                    let f = m.get(r, c).clone();
                    m.axpy_row(r, pr, &f);
                    t.axpy_row(r, pr, &f);
                }
            }
            pivots.push(c);
            pr += 1;
        }
        Rref {
            rref: m,
            pivots,
            transform: t,
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn scale_row(&mut self, r: usize, s: &T) {
        for c in 0..self.cols {
            let v = s.mul_elt(self.get(r, c));
            self.set(r, c, v);
        }
    }

    /// row[r] -= f · row[p]
    /// Row `r` -= `f` · row `p`, on columns `from..`.
    fn axpy_row_from(&mut self, r: usize, p: usize, f: &T, from: usize) {
        for c in from..self.cols {
            if self.get(p, c).is_zero_elt() {
                continue;
            }
            let v = self.get(r, c).sub_elt(&f.mul_elt(self.get(p, c)));
            self.set(r, c, v);
        }
    }

    fn axpy_row(&mut self, r: usize, p: usize, f: &T) {
        self.axpy_row_from(r, p, f, 0);
    }

    /// Forward elimination only.
    pub fn rank(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        let mut m = self.clone();
        let mut pr = 0;
        for c in 0..self.cols {
            if pr == self.rows {
                break;
            }
            let Some(p) = (pr..self.rows).find(|&r| !m.get(r, c).is_zero_elt()) else {
                continue;
            };
            m.swap_rows(p, pr);
            let inv = m.get(pr, c).inv_elt();
            for r in pr + 1..self.rows {
                if !m.get(r, c).is_zero_elt() {
                    let f = m.get(r, c).mul_elt(&inv);
                    m.axpy_row_from(r, pr, &f, c);
                }
            }
            pr += 1;
        }
        pr
    }

    pub fn det(&self) -> T {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let proto = self.data.first().expect("det of empty matrix");
        let mut m = self.clone();
        let mut det = proto.one_like();
        for c in 0..self.cols {
            let Some(p) = (c..self.rows).find(|&r| !m.get(r, c).is_zero_elt()) else {
                return proto.zero_like();
            };
            if p != c {
                m.swap_rows(p, c);
                det = det.neg_elt();
            }
            let piv = m.get(c, c).clone();
            det = det.mul_elt(&piv);
            let inv = piv.inv_elt();
            for r in c + 1..self.rows {
                if !m.get(r, c).is_zero_elt() {
                    let f = m.get(r, c).mul_elt(&inv);
                    m.axpy_row_from(r, c, &f, c);
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "inverse of non-square matrix");
        let red = self.rref();
        (red.pivots.len() == self.rows).then_some(red.transform)
    }

    /// Basis (as rows) of `{ x : x · self = 0 }`, in reduced form.
    pub fn left_kernel(&self) -> Vec<Vec<T>> {
        let red = self.rref();
        let r = red.pivots.len();
        (r..self.rows).map(|i| red.transform.row(i).to_vec()).collect()
    }

    /// Solves `x · self = b` for a row vector `x`, if solvable.
    pub fn solve_left(&self, b: &[T]) -> Option<Vec<T>> {
        assert_eq!(b.len(), self.cols);
        // x·A = b  <=>  Aᵀ xᵀ = bᵀ
        let at = self.transpose();
        let aug = at.hstack(&Matrix::from_rows(b.iter().map(|v| vec![v.clone()]).collect()));
        let red = aug.rref();
        if red.pivots.last() == Some(&self.rows) {
            return None;
        }
        let zero = b[0].zero_like();
        let mut x = vec![zero; self.rows];
        for (i, &pc) in red.pivots.iter().enumerate() {
            x[pc] = red.rref.get(i, self.rows).clone();
        }
        Some(x)
    }
}

pub fn vec_is_zero<T: Scalar>(v: &[T]) -> bool {
    v.iter().all(T::is_zero_elt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn q(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect())
    }

    #[test]
    fn rank_det_inverse() {
        let a = q(&[&[1, 2], &[3, 4]]);
        assert_eq!(a.rank(), 2);
        assert_eq!(a.det(), int(-2));
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), Matrix::identity(2, &int(0)));
        let s = q(&[&[1, 2], &[2, 4]]);
        assert_eq!(s.rank(), 1);
        assert_eq!(s.det(), int(0));
        assert!(s.inverse().is_none());
    }

    #[test]
    fn kernel_and_solve() {
        let a = q(&[&[1, 2], &[2, 4], &[0, 1]]);
        let k = a.left_kernel();
        assert_eq!(k.len(), 1);
        let km = Matrix::from_rows(k);
        assert!(km.mul(&a).is_zero());
        let x = a.solve_left(&[int(3), int(7)]).unwrap();
        let xm = Matrix::from_rows(vec![x]);
        assert_eq!(xm.mul(&a), q(&[&[3, 7]]));
        let b = q(&[&[1, 1], &[1, 1]]);
        assert!(b.solve_left(&[int(1), int(0)]).is_none());
    }
}
