//! Dense exact linear algebra over a coefficient field, and subspaces kept in a
//! canonical reduced form so that equality of subspaces is equality of values.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::scalar::{Coeff, Rational};

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix<C: Coeff = Rational> {
    rows: usize,
    cols: usize,
    data: Vec<C>,
}

impl<C: Coeff> Matrix<C> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![C::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { C::one() } else { C::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds from row vectors; all rows must have equal length.
    pub fn from_rows(rows: Vec<Vec<C>>) -> Option<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return None;
        }
        Some(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Builds from column vectors of length `rows`.
    pub fn from_cols(rows: usize, cols: &[Vec<C>]) -> Self {
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i].clone())
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

    pub fn row(&self, i: usize) -> Vec<C> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<C> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<C>> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(C::is_zero)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn conj(&self) -> Self {
        self.map(C::conj)
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Matrix<D> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "matrix add shape");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(C::neg)
    }

    pub fn scale(&self, k: &C) -> Self {
        self.map(|x| x.mul(k))
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "matrix mul shape");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = &o[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)].add_assign(&a.mul(b));
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C]) -> Vec<C> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape");
        (0..self.rows)
            .map(|i| {
                let mut s = C::zero();
                for (j, x) in v.iter().enumerate() {
                    if !x.is_zero() {
                        s.add_assign(&self[(i, j)].mul(x));
                    }
                }
                s
            })
            .collect()
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.rows);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn commutator(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }

    /// Horizontal concatenation.
    pub fn hcat(&self, o: &Self) -> Self {
        assert_eq!(self.rows, o.rows, "hcat shape");
        Self::from_fn(self.rows, self.cols + o.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                o[(i, j - self.cols)].clone()
            }
        })
    }

    /// Columns `cols` of `self`.
    pub fn select_cols(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])].clone())
    }

    /// Reduced row echelon form and pivot columns. Pivots are taken from the
    /// first row (smallest index) with a nonzero entry.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else { continue };
            m.swap_rows(p, r);
            let inv = m[(r, c)].inv().expect("field element");
            for j in c..m.cols {
                m[(r, j)] = m[(r, j)].mul(&inv);
            }
            for i in 0..m.rows {
                if i == r || m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone();
                for j in c..m.cols {
                    let d = m[(r, j)].mul(&f);
                    m[(i, j)] = m[(i, j)].sub(&d);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel, one column per free variable.
    pub fn kernel(&self) -> Vec<Vec<C>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![C::zero(); self.cols];
                v[f] = C::one();
                for (k, &p) in pivots.iter().enumerate() {
                    v[p] = r[(k, f)].neg();
                }
                v
            })
            .collect()
    }

    /// One solution of `self · x = b`, if any.
    pub fn solve(&self, b: &[C]) -> Option<Vec<C>> {
        assert_eq!(b.len(), self.rows, "solve shape");
        let aug = self.hcat(&Matrix::from_cols(self.rows, &[b.to_vec()]));
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![C::zero(); self.cols];
        for (k, &p) in pivots.iter().enumerate() {
            x[p] = r[(k, self.cols)].clone();
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Self> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let (r, pivots) = self.hcat(&Self::identity(n)).rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(Self::from_fn(n, n, |i, j| r[(i, n + j)].clone()))
    }

    pub fn det(&self) -> C {
        assert!(self.is_square(), "det of non-square matrix");
        let mut m = self.clone();
        let n = self.rows;
        let mut det = C::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else { return C::zero() };
            if p != c {
                m.swap_rows(p, c);
                det = det.neg();
            }
            let piv = m[(c, c)].clone();
            det = det.mul(&piv);
            let inv = piv.inv().expect("field element");
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].mul(&inv);
                for j in c..n {
                    let d = m[(c, j)].mul(&f);
                    m[(i, j)] = m[(i, j)].sub(&d);
                }
            }
        }
        det
    }

    /// True when some power of the matrix vanishes.
    pub fn is_nilpotent(&self) -> bool {
        self.is_square() && self.pow(self.rows as u32).is_zero()
    }

    /// Smallest `k` with `self^k = 0`.
    pub fn nilpotency_index(&self) -> Option<u32> {
        if !self.is_square() {
            return None;
        }
        let mut p = Self::identity(self.rows);
        for k in 0..=self.rows as u32 {
            if p.is_zero() {
                return Some(k);
            }
            p = p.mul(self);
        }
        None
    }
}

impl<C: Coeff> Index<(usize, usize)> for Matrix<C> {
    type Output = C;
    fn index(&self, (i, j): (usize, usize)) -> &C {
        &self.data[i * self.cols + j]
    }
}

impl<C: Coeff> IndexMut<(usize, usize)> for Matrix<C> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C {
        &mut self.data[i * self.cols + j]
    }
}

impl<C: Coeff> fmt::Debug for Matrix<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries((0..self.rows).map(|i| self.row(i))).finish()
    }
}

/// A subspace of `C^dim`, stored as the nonzero rows of the RREF of any
/// spanning set. Two subspaces are equal iff their canonical bases are.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Subspace<C: Coeff = Rational> {
    dim: usize,
    basis: Vec<Vec<C>>,
}

impl<C: Coeff> Subspace<C> {
    pub fn zero(dim: usize) -> Self {
        Subspace { dim, basis: Vec::new() }
    }

    pub fn full(dim: usize) -> Self {
        Self::span(dim, Matrix::<C>::identity(dim).columns())
    }

    pub fn span(dim: usize, vectors: impl IntoIterator<Item = Vec<C>>) -> Self {
        let rows: Vec<Vec<C>> = vectors.into_iter().collect();
        if rows.is_empty() {
            return Self::zero(dim);
        }
        assert!(rows.iter().all(|v| v.len() == dim), "vector length");
        let (r, pivots) = Matrix::from_rows(rows).expect("rectangular").rref();
        Subspace { dim, basis: (0..pivots.len()).map(|i| r.row(i)).collect() }
    }

    /// Column span of `m`.
    pub fn col_span(m: &Matrix<C>) -> Self {
        Self::span(m.rows(), m.columns())
    }

    pub fn ambient(&self) -> usize {
        self.dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[Vec<C>] {
        &self.basis
    }

    /// Basis vectors as columns of a `dim × k` matrix.
    pub fn matrix(&self) -> Matrix<C> {
        Matrix::from_cols(self.dim, &self.basis)
    }

    pub fn contains(&self, v: &[C]) -> bool {
        if v.iter().all(C::is_zero) {
            return true;
        }
        self.sum(&Self::span(self.dim, [v.to_vec()])).dim() == self.dim()
    }

    pub fn is_subspace_of(&self, o: &Self) -> bool {
        self.basis.iter().all(|v| o.contains(v))
    }

    pub fn sum(&self, o: &Self) -> Self {
        Self::span(self.dim, self.basis.iter().chain(&o.basis).cloned())
    }

    pub fn intersect(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.dim);
        }
        let a = self.matrix();
        let b = o.matrix();
        let k = a.cols();
        let ker = a.hcat(&b.neg()).kernel();
        Self::span(self.dim, ker.into_iter().map(|x| a.mul_vec(&x[..k])))
    }

    /// `m(self)`.
    pub fn image(&self, m: &Matrix<C>) -> Self {
        Self::span(m.rows(), self.basis.iter().map(|v| m.mul_vec(v)))
    }

    /// `{v : m v ∈ self}`.
    pub fn preimage(&self, m: &Matrix<C>) -> Self {
        let ann = self.annihilator();
        if ann.is_empty() {
            return Self::full(m.cols());
        }
        let a = Matrix::from_rows(ann).expect("rectangular").mul(m);
        Self::span(m.cols(), a.kernel())
    }

    /// Linear forms (as row vectors) vanishing on the subspace.
    fn annihilator(&self) -> Vec<Vec<C>> {
        if self.is_zero() {
            return Matrix::<C>::identity(self.dim).columns();
        }
        Matrix::from_rows(self.basis.clone()).expect("rectangular").kernel()
    }

    pub fn kernel_of(m: &Matrix<C>) -> Self {
        Self::span(m.cols(), m.kernel())
    }

    pub fn image_of(m: &Matrix<C>) -> Self {
        Self::col_span(m)
    }

    pub fn conj(&self) -> Self {
        Self::span(self.dim, self.basis.iter().map(|v| v.iter().map(C::conj).collect()))
    }

    /// Vectors from `candidates`, taken greedily in order, that extend `self`
    /// to `self + span(candidates)`.
    pub fn complement_from(&self, candidates: &[Vec<C>]) -> Vec<Vec<C>> {
        let mut acc = self.clone();
        let mut out = Vec::new();
        for v in candidates {
            let next = acc.sum(&Self::span(self.dim, [v.clone()]));
            if next.dim() > acc.dim() {
                acc = next;
                out.push(v.clone());
            }
        }
        out
    }

    /// Complement spanned by the earliest standard basis vectors.
    pub fn std_complement(&self) -> Self {
        let c = self.complement_from(&Matrix::<C>::identity(self.dim).columns());
        Self::span(self.dim, c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn m(rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()).unwrap()
    }

    #[test]
    fn inverse_and_det() {
        let a = m(&[&[2, 1], &[1, 1]]);
        assert_eq!(a.det(), int(1));
        assert_eq!(a.mul(&a.inverse().unwrap()), Matrix::identity(2));
        assert!(m(&[&[1, 2], &[2, 4]]).inverse().is_none());
        assert_eq!(m(&[&[0, 1], &[1, 0]]).det(), int(-1));
    }

    #[test]
    fn kernel_and_solve() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6]]);
        let k = a.kernel();
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(a.mul_vec(v).iter().all(|x| x == &int(0)));
        }
        let x = a.solve(&[int(1), int(2)]).unwrap();
        assert_eq!(a.mul_vec(&x), vec![int(1), int(2)]);
        assert!(a.solve(&[int(1), int(3)]).is_none());
    }

    #[test]
    fn subspace_lattice() {
        let e = |i: usize| -> Vec<Rational> { (0..3).map(|j| int((i == j) as i64)).collect() };
        let a = Subspace::span(3, [e(0), e(1)]);
        let b = Subspace::span(3, [e(1), e(2)]);
        assert_eq!(a.intersect(&b), Subspace::span(3, [e(1)]));
        assert_eq!(a.sum(&b), Subspace::full(3));
        assert_eq!(a.std_complement(), Subspace::span(3, [e(2)]));
        let n = m(&[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0]]);
        assert_eq!(Subspace::kernel_of(&n), Subspace::span(3, [e(2)]));
        assert_eq!(Subspace::span(3, [e(2)]).preimage(&n), Subspace::span(3, [e(1), e(2)]));
        let v = vec![rat(1, 2), rat(1, 3), int(0)];
        assert!(a.contains(&v));
        assert_eq!(n.nilpotency_index(), Some(3));
    }
}
