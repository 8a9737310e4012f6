//! Matrices whose entries are truncated series over one shared variable set.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::linalg::Matrix;
use crate::scalar::{Coeff, Rational};
use crate::series::{min_bounds, SeriesError, SeriesResult, TruncatedSeries, VariableSet};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MatrixSeries<C: Coeff = Rational> {
    rows: usize,
    cols: usize,
    entries: Vec<TruncatedSeries<C>>,
}

fn dim_err(what: &str, a: (usize, usize), b: (usize, usize)) -> SeriesError {
    SeriesError::Dimension(format!("{what}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1))
}

impl<C: Coeff> MatrixSeries<C> {
    pub fn zero(rows: usize, cols: usize, vars: &Arc<VariableSet>, bounds: &[i32]) -> Self {
        let z = TruncatedSeries::zero(vars, bounds);
        MatrixSeries { rows, cols, entries: vec![z; rows * cols] }
    }

    pub fn identity(n: usize, vars: &Arc<VariableSet>, bounds: &[i32]) -> Self {
        Self::from_constant(&Matrix::identity(n), vars, bounds)
    }

    pub fn from_constant(m: &Matrix<C>, vars: &Arc<VariableSet>, bounds: &[i32]) -> Self {
        let mut out = Self::zero(m.rows(), m.cols(), vars, bounds);
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                out.entries[i * m.cols() + j] = TruncatedSeries::constant(vars, bounds, m[(i, j)].clone());
            }
        }
        out
    }

    /// Row-major entries; all must share variables and bounds.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<TruncatedSeries<C>>) -> SeriesResult<Self> {
        if rows * cols != entries.len() || rows == 0 || cols == 0 {
            return Err(SeriesError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        for e in &entries[1..] {
            entries[0].same_shape(e)?;
        }
        Ok(MatrixSeries { rows, cols, entries })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        f: impl Fn(usize, usize) -> TruncatedSeries<C>,
    ) -> SeriesResult<Self> {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self::from_entries(rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn vars(&self) -> &Arc<VariableSet> {
        self.entries[0].vars()
    }

    pub fn bounds(&self) -> &[i32] {
        self.entries[0].bounds()
    }

    pub fn get(&self, i: usize, j: usize) -> &TruncatedSeries<C> {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, s: TruncatedSeries<C>) -> SeriesResult<()> {
        self.entries[0].same_shape(&s)?;
        self.entries[i * self.cols + j] = s;
        Ok(())
    }

    pub fn entries(&self) -> &[TruncatedSeries<C>] {
        &self.entries
    }

    pub fn column(&self, j: usize) -> Vec<TruncatedSeries<C>> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(TruncatedSeries::is_zero)
    }

    /// Total number of stored coefficients.
    pub fn nonzero_terms(&self) -> usize {
        self.entries.iter().map(TruncatedSeries::len).sum()
    }

    pub fn constant_matrix(&self) -> Matrix<C> {
        Matrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).constant_term())
    }

    pub fn same_shape(&self, o: &Self) -> SeriesResult<()> {
        if (self.rows, self.cols) != (o.rows, o.cols) {
            return Err(dim_err("shape", (self.rows, self.cols), (o.rows, o.cols)));
        }
        self.entries[0].same_shape(&o.entries[0])
    }

    fn zip_with(
        &self,
        o: &Self,
        f: impl Fn(&TruncatedSeries<C>, &TruncatedSeries<C>) -> SeriesResult<TruncatedSeries<C>>,
    ) -> SeriesResult<Self> {
        self.same_shape(o)?;
        let entries = self.entries.iter().zip(&o.entries).map(|(a, b)| f(a, b)).collect::<Result<_, _>>()?;
        Ok(MatrixSeries { rows: self.rows, cols: self.cols, entries })
    }

    pub fn map_entries(&self, f: impl Fn(&TruncatedSeries<C>) -> TruncatedSeries<C>) -> Self {
        MatrixSeries { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }

    pub fn try_map_entries(
        &self,
        f: impl Fn(&TruncatedSeries<C>) -> SeriesResult<TruncatedSeries<C>>,
    ) -> SeriesResult<Self> {
        let entries = self.entries.iter().map(f).collect::<Result<_, _>>()?;
        Ok(MatrixSeries { rows: self.rows, cols: self.cols, entries })
    }

    pub fn add(&self, o: &Self) -> SeriesResult<Self> {
        self.zip_with(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &Self) -> SeriesResult<Self> {
        self.zip_with(o, |a, b| a.sub(b))
    }

    pub fn neg(&self) -> Self {
        self.map_entries(TruncatedSeries::neg)
    }

    pub fn scale(&self, k: &C) -> Self {
        self.map_entries(|e| e.scale(k))
    }

    pub fn scale_series(&self, s: &TruncatedSeries<C>) -> SeriesResult<Self> {
        self.try_map_entries(|e| e.mul(s))
    }

    pub fn mul(&self, o: &Self) -> SeriesResult<Self> {
        if self.cols != o.rows {
            return Err(dim_err("product", (self.rows, self.cols), (o.rows, o.cols)));
        }
        self.entries[0].same_shape(&o.entries[0])?;
        let mut entries = Vec::with_capacity(self.rows * o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut acc = TruncatedSeries::zero(self.vars(), self.bounds());
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    let b = o.get(k, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(b)?)?;
                }
                entries.push(acc);
            }
        }
        Ok(MatrixSeries { rows: self.rows, cols: o.cols, entries })
    }

    pub fn align(&self, o: &Self) -> SeriesResult<(Self, Self)> {
        let b = min_bounds([self.bounds(), o.bounds()]);
        Ok((self.restrict_bounds(&b)?, o.restrict_bounds(&b)?))
    }

    pub fn add_common(&self, o: &Self) -> SeriesResult<Self> {
        let (a, b) = self.align(o)?;
        a.add(&b)
    }

    pub fn sub_common(&self, o: &Self) -> SeriesResult<Self> {
        let (a, b) = self.align(o)?;
        a.sub(&b)
    }

    pub fn mul_common(&self, o: &Self) -> SeriesResult<Self> {
        let (a, b) = self.align(o)?;
        a.mul(&b)
    }

    /// Sum of matrices of equal size after restricting all to common bounds.
    pub fn sum_common(terms: &[Self]) -> SeriesResult<Self> {
        let b = min_bounds(terms.iter().map(|m| m.bounds()));
        let mut acc = terms[0].restrict_bounds(&b)?;
        for t in &terms[1..] {
            acc = acc.add(&t.restrict_bounds(&b)?)?;
        }
        Ok(acc)
    }

    /// `[self, o] = self·o − o·self`.
    pub fn commutator(&self, o: &Self) -> SeriesResult<Self> {
        self.mul(o)?.sub(&o.mul(self)?)
    }

    pub fn commutator_common(&self, o: &Self) -> SeriesResult<Self> {
        let (a, b) = self.align(o)?;
        a.commutator(&b)
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        MatrixSeries { rows: self.cols, cols: self.rows, entries }
    }

    pub fn mul_vec(&self, v: &[TruncatedSeries<C>]) -> SeriesResult<Vec<TruncatedSeries<C>>> {
        if v.len() != self.cols {
            return Err(dim_err("matrix-vector", (self.rows, self.cols), (v.len(), 1)));
        }
        (0..self.rows)
            .map(|i| {
                let mut acc = TruncatedSeries::zero(self.vars(), self.bounds());
                for (k, x) in v.iter().enumerate() {
                    let a = self.get(i, k);
                    if !a.is_zero() && !x.is_zero() {
                        acc = acc.add(&a.mul(x)?)?;
                    }
                }
                Ok(acc)
            })
            .collect()
    }

    pub fn partial_derivative(&self, i: usize) -> SeriesResult<Self> {
        self.try_map_entries(|e| e.partial_derivative(i))
    }

    pub fn log_derivative(&self, i: usize) -> SeriesResult<Self> {
        self.try_map_entries(|e| e.log_derivative(i))
    }

    pub fn frame_derivative(&self, i: usize) -> SeriesResult<Self> {
        self.try_map_entries(|e| e.frame_derivative(i))
    }

    pub fn restrict_bounds(&self, bounds: &[i32]) -> SeriesResult<Self> {
        self.try_map_entries(|e| e.restrict_bounds(bounds))
    }

    pub fn raise_bounds(&self, bounds: &[i32]) -> Self {
        self.map_entries(|e| e.raise_bounds(bounds))
    }

    pub fn embed(&self, vars: &Arc<VariableSet>, bounds: &[i32]) -> SeriesResult<Self> {
        self.try_map_entries(|e| e.embed(vars, bounds))
    }

    pub fn at_zero(&self, i: usize) -> Self {
        self.map_entries(|e| e.at_zero(i))
    }

    pub fn zero_along(&self, i: usize) -> Self {
        self.map_entries(|e| e.zero_along(i))
    }

    pub fn layer(&self, i: usize, k: u32) -> Self {
        self.map_entries(|e| e.layer(i, k))
    }

    /// Inverse of a matrix whose constant term is invertible, by the Neumann
    /// series `Σ_k X^k A₀⁻¹` with `X = −A₀⁻¹(A − A₀)`.
    pub fn invert_unit(&self) -> SeriesResult<Self> {
        if self.rows != self.cols {
            return Err(dim_err("invert_unit", (self.rows, self.cols), (self.cols, self.rows)));
        }
        let a0 = self.constant_matrix();
        let a0_inv = a0.inverse().ok_or(SeriesError::NotAUnit)?;
        let (vars, bounds) = (self.vars().clone(), self.bounds().to_vec());
        let inv0 = Self::from_constant(&a0_inv, &vars, &bounds);
        let nil = self.sub(&Self::from_constant(&a0, &vars, &bounds))?;
        let x = inv0.mul(&nil)?.neg();
        let mut term = inv0.clone();
        let mut acc = inv0;
        loop {
            term = x.mul(&term)?;
            if term.is_zero() {
                return Ok(acc);
            }
            acc = acc.add(&term)?;
        }
    }

    /// Solves `self · x = b` for a square `self` with invertible constant
    /// term, iterating `x ← A₀⁻¹(b − (A − A₀)x)` to its fixed point.
    pub fn solve_unit(&self, b: &[TruncatedSeries<C>]) -> SeriesResult<Vec<TruncatedSeries<C>>> {
        if self.rows != self.cols || b.len() != self.rows {
            return Err(dim_err("solve_unit", (self.rows, self.cols), (b.len(), 1)));
        }
        let a0 = self.constant_matrix();
        let a0_inv = a0.inverse().ok_or(SeriesError::NotAUnit)?;
        let (vars, bounds) = (self.vars().clone(), self.bounds().to_vec());
        let inv0 = Self::from_constant(&a0_inv, &vars, &bounds);
        let nil = self.sub(&Self::from_constant(&a0, &vars, &bounds))?;
        let mut x = inv0.mul_vec(b)?;
        loop {
            let nx = nil.mul_vec(&x)?;
            let rhs: Vec<_> = b.iter().zip(&nx).map(|(bi, ni)| bi.sub(ni)).collect::<Result<_, _>>()?;
            let next = inv0.mul_vec(&rhs)?;
            if next == x {
                return Ok(x);
            }
            x = next;
        }
    }
}

impl MatrixSeries<Rational> {
    /// Entry-wise polynomial strings, row-major.
    pub fn to_poly_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).to_poly_string()).collect()).collect()
    }
}

/// Matrix with entries that are finite Laurent polynomials in a spectral
/// parameter z over series coefficients: `Σ_k z^k M_k`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LaurentMatrix<C: Coeff = Rational> {
    n: usize,
    vars: Arc<VariableSet>,
    bounds: Vec<i32>,
    coeffs: BTreeMap<i32, MatrixSeries<C>>,
}

impl<C: Coeff> LaurentMatrix<C> {
    pub fn zero(n: usize, vars: &Arc<VariableSet>, bounds: &[i32]) -> Self {
        LaurentMatrix { n, vars: vars.clone(), bounds: bounds.to_vec(), coeffs: BTreeMap::new() }
    }

    /// `z^k · m`.
    pub fn monomial(k: i32, m: MatrixSeries<C>) -> Self {
        let mut out = Self::zero(m.rows(), m.vars(), m.bounds());
        if !m.is_zero() {
            out.coeffs.insert(k, m);
        }
        out
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn vars(&self) -> &Arc<VariableSet> {
        &self.vars
    }

    pub fn bounds(&self) -> &[i32] {
        &self.bounds
    }

    pub fn coeffs(&self) -> &BTreeMap<i32, MatrixSeries<C>> {
        &self.coeffs
    }

    pub fn coeff(&self, k: i32) -> MatrixSeries<C> {
        self.coeffs.get(&k).cloned().unwrap_or_else(|| MatrixSeries::zero(self.n, self.n, &self.vars, &self.bounds))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn min_power(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_power(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn add_term(&mut self, k: i32, m: &MatrixSeries<C>) -> SeriesResult<()> {
        let sum = self.coeff(k).add(m)?;
        if sum.is_zero() {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, sum);
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> SeriesResult<Self> {
        let mut out = self.clone();
        for (k, m) in &o.coeffs {
            out.add_term(*k, m)?;
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> SeriesResult<Self> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|_, m| m.neg())
    }

    fn map(&self, f: impl Fn(i32, &MatrixSeries<C>) -> MatrixSeries<C>) -> Self {
        let mut out = Self::zero(self.n, &self.vars, &self.bounds);
        for (k, m) in &self.coeffs {
            let v = f(*k, m);
            if !v.is_zero() {
                out.coeffs.insert(*k, v);
            }
        }
        out
    }

    fn try_map(&self, f: impl Fn(i32, &MatrixSeries<C>) -> SeriesResult<MatrixSeries<C>>) -> SeriesResult<Self> {
        let mut out = Self::zero(self.n, &self.vars, &self.bounds);
        for (k, m) in &self.coeffs {
            let v = f(*k, m)?;
            if !v.is_zero() {
                if out.coeffs.is_empty() {
                    out.bounds = v.bounds().to_vec();
                }
                out.coeffs.insert(*k, v);
            }
        }
        if out.coeffs.is_empty() {
            if let Some(m) = self.coeffs.values().next() {
                out.bounds = f(0, m)?.bounds().to_vec();
            }
        }
        Ok(out)
    }

    pub fn mul(&self, o: &Self) -> SeriesResult<Self> {
        let mut out = Self::zero(self.n, &self.vars, &self.bounds);
        for (a, ma) in &self.coeffs {
            for (b, mb) in &o.coeffs {
                out.add_term(a + b, &ma.mul(mb)?)?;
            }
        }
        Ok(out)
    }

    /// Left multiplication by a z-free matrix.
    pub fn lmul(&self, m: &MatrixSeries<C>) -> SeriesResult<Self> {
        self.try_map(|_, c| m.mul(c))
    }

    pub fn rmul(&self, m: &MatrixSeries<C>) -> SeriesResult<Self> {
        self.try_map(|_, c| c.mul(m))
    }

    pub fn transpose(&self) -> Self {
        self.map(|_, m| m.transpose())
    }

    /// `M(z) ↦ M(−z)`.
    pub fn reflect(&self) -> Self {
        self.map(|k, m| if k.rem_euclid(2) == 1 { m.neg() } else { m.clone() })
    }

    /// Multiplies by `z^k`.
    pub fn shift(&self, k: i32) -> Self {
        let mut out = Self::zero(self.n, &self.vars, &self.bounds);
        for (p, m) in &self.coeffs {
            out.coeffs.insert(p + k, m.clone());
        }
        out
    }

    /// `z ∂_z`.
    pub fn z_euler(&self) -> Self {
        self.map(|k, m| m.scale(&C::from_int(k as i64)))
    }

    pub fn frame_derivative(&self, i: usize) -> SeriesResult<Self> {
        let mut out = self.try_map(|_, m| m.frame_derivative(i))?;
        let mut b = self.bounds.clone();
        if self.vars.class(i) != crate::series::VarClass::Log {
            b[i] = (b[i] - 1).max(-1);
        }
        out.bounds = b;
        Ok(out)
    }

    pub fn restrict_bounds(&self, bounds: &[i32]) -> SeriesResult<Self> {
        let mut out = self.try_map(|_, m| m.restrict_bounds(bounds))?;
        out.bounds = bounds.to_vec();
        Ok(out)
    }

    pub fn embed(&self, vars: &Arc<VariableSet>, bounds: &[i32]) -> SeriesResult<Self> {
        let mut out = self.try_map(|_, m| m.embed(vars, bounds))?;
        out.vars = vars.clone();
        out.bounds = bounds.to_vec();
        Ok(out)
    }

    pub fn at_zero(&self, i: usize) -> Self {
        let mut out = self.map(|_, m| m.at_zero(i));
        out.vars = Arc::new(self.vars.without(i));
        out.bounds.remove(i);
        out
    }

    pub fn map_coeff_matrices(&self, f: impl Fn(&MatrixSeries<C>) -> MatrixSeries<C>) -> Self {
        self.map(|_, m| f(m))
    }

    pub fn nonzero_terms(&self) -> usize {
        self.coeffs.values().map(MatrixSeries::nonzero_terms).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};
    use crate::series::VarClass;

    fn setup(b: i32) -> (Arc<VariableSet>, Vec<i32>) {
        (Arc::new(VariableSet::new([("t", VarClass::Log)]).unwrap()), vec![b])
    }

    fn e(i: usize, j: usize) -> Matrix {
        Matrix::from_fn(2, 2, |a, b| int((a == i && b == j) as i64))
    }

    #[test]
    fn commutator_examples() {
        let (v, b) = setup(2);
        let id = MatrixSeries::identity(2, &v, &b);
        let x = MatrixSeries::from_constant(&e(0, 1), &v, &b);
        assert!(id.commutator(&x).unwrap().is_zero());
        let y = MatrixSeries::from_constant(&e(1, 0), &v, &b);
        let expect = MatrixSeries::from_constant(&e(0, 0).sub(&e(1, 1)), &v, &b);
        assert_eq!(x.commutator(&y).unwrap(), expect);
    }

    #[test]
    fn nilpotent_product_is_identity() {
        let (v, b) = setup(3);
        let t = TruncatedSeries::variable(&v, &b, "t").unwrap();
        let n = MatrixSeries::from_constant(&e(0, 1), &v, &b).scale_series(&t).unwrap();
        let id = MatrixSeries::identity(2, &v, &b);
        assert_eq!(id.add(&n).unwrap().mul(&id.sub(&n).unwrap()).unwrap(), id);
    }

    #[test]
    fn invert_unit_examples() {
        let (v, b) = setup(3);
        let id = MatrixSeries::<Rational>::identity(2, &v, &b);
        assert_eq!(id.invert_unit().unwrap(), id);
        assert_eq!(id.scale(&int(2)).invert_unit().unwrap(), id.scale(&rat(1, 2)));
        let t = TruncatedSeries::variable(&v, &b, "t").unwrap();
        let n = MatrixSeries::from_constant(&e(0, 1), &v, &b).scale_series(&t).unwrap();
        assert_eq!(id.add(&n).unwrap().invert_unit().unwrap(), id.sub(&n).unwrap());
        let sing = MatrixSeries::from_constant(&e(0, 0), &v, &b);
        assert!(matches!(sing.invert_unit(), Err(SeriesError::NotAUnit)));
    }

    #[test]
    fn solve_unit_matches_inverse() {
        let (v, b) = setup(4);
        let t = TruncatedSeries::variable(&v, &b, "t").unwrap();
        let one = TruncatedSeries::constant(&v, &b, int(1));
        let a = MatrixSeries::from_entries(2, 2, vec![one.add(&t).unwrap(), t.clone(), t.scale(&int(3)), one.scale(&int(2))])
            .unwrap();
        let rhs = vec![one.clone(), t.clone()];
        let x = a.solve_unit(&rhs).unwrap();
        assert_eq!(a.mul_vec(&x).unwrap(), rhs);
        assert_eq!(a.invert_unit().unwrap().mul_vec(&rhs).unwrap(), x);
    }
}
