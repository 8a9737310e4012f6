//! Multivariate truncated power series with per-variable exponent bounds.
//!
//! A series with bound `b` in a variable knows every coefficient whose exponent
//! in that variable is at most `b`. A bound of `-1` means nothing is known in
//! that direction (for instance after differentiating a series of bound 0).
//! Arithmetic only combines series with identical variables and bounds; callers
//! that need to compare series of different bounds restrict explicitly.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::{format_rational, int, Coeff, Rational};

static MAX_TERMS: AtomicUsize = AtomicUsize::new(10_000_000);

/// Caps the number of stored coefficients of any single series result.
pub fn set_max_terms(n: usize) {
    MAX_TERMS.store(n, Ordering::Relaxed);
}

pub fn max_terms() -> usize {
    MAX_TERMS.load(Ordering::Relaxed)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("variable sets differ: [{0}] vs [{1}]")]
    VarMismatch(String, String),
    #[error("truncation bounds differ: {0:?} vs {1:?}")]
    BoundMismatch(Vec<i32>, Vec<i32>),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` is not tagged log")]
    NotLog(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("more than one variable is tagged z")]
    MultipleZ,
    #[error("exponent vector has length {got}, expected {expected}")]
    Arity { got: usize, expected: usize },
    #[error("exponent {exps:?} exceeds bounds {bounds:?}")]
    OutOfBounds { exps: Vec<u32>, bounds: Vec<i32> },
    #[error("requested bounds {requested:?} exceed available {available:?}")]
    BoundsExceed { requested: Vec<i32>, available: Vec<i32> },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("constant term is not invertible")]
    NotAUnit,
    #[error("series has {0} stored terms, above the limit of {1}")]
    TermLimit(usize, usize),
}

pub type SeriesResult<T> = Result<T, SeriesError>;

/// Role of a coordinate.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum VarClass {
    /// Coordinate t_i whose zero set is a divisor component; frame field t_i ∂_{t_i}.
    Log,
    /// Ordinary coordinate; frame field ∂_t.
    Hol,
    /// Unfolding parameter y_α; behaves like `Hol` in the frame.
    Unfold,
    /// Spectral parameter.
    Z,
}

impl VarClass {
    pub fn as_str(self) -> &'static str {
        match self {
            VarClass::Log => "log",
            VarClass::Hol => "hol",
            VarClass::Unfold => "unfold",
            VarClass::Z => "z",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "log" => Some(VarClass::Log),
            "hol" | "holomorphic" => Some(VarClass::Hol),
            "unfold" | "unfolding" => Some(VarClass::Unfold),
            "z" => Some(VarClass::Z),
            _ => None,
        }
    }
}

/// Ordered, uniquely named coordinates with their classes.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct VariableSet {
    names: Vec<String>,
    classes: Vec<VarClass>,
}

impl VariableSet {
    pub fn new<S: Into<String>>(vars: impl IntoIterator<Item = (S, VarClass)>) -> SeriesResult<Self> {
        let mut set = VariableSet::default();
        for (n, c) in vars {
            set = set.with(n, c)?;
        }
        Ok(set)
    }

    pub fn empty() -> Self {
        VariableSet::default()
    }

    /// Appends a variable.
    pub fn with(mut self, name: impl Into<String>, class: VarClass) -> SeriesResult<Self> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(SeriesError::DuplicateVariable(name));
        }
        if class == VarClass::Z && self.classes.contains(&VarClass::Z) {
            return Err(SeriesError::MultipleZ);
        }
        self.names.push(name);
        self.classes.push(class);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn classes(&self) -> &[VarClass] {
        &self.classes
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn class(&self, i: usize) -> VarClass {
        self.classes[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn require(&self, name: &str) -> SeriesResult<usize> {
        self.index_of(name).ok_or_else(|| SeriesError::UnknownVariable(name.to_string()))
    }

    /// Indices of the variables with the given class, in order.
    pub fn indices_of(&self, class: VarClass) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.classes[i] == class).collect()
    }

    /// The same set without variable `i`.
    pub fn without(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.names.remove(i);
        s.classes.remove(i);
        s
    }

    fn describe(&self) -> String {
        self.names
            .iter()
            .zip(&self.classes)
            .map(|(n, c)| format!("{n}:{}", c.as_str()))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Elementwise minimum of bound vectors of equal length.
pub fn min_bounds<'a>(bs: impl IntoIterator<Item = &'a [i32]>) -> Vec<i32> {
    let mut it = bs.into_iter();
    let mut out = it.next().expect("at least one bound vector").to_vec();
    for b in it {
        for (o, x) in out.iter_mut().zip(b) {
            *o = (*o).min(*x);
        }
    }
    out
}

/// Sparse truncated series. Stored exponents never exceed the bounds and no
/// stored coefficient is zero.
#[derive(Clone, PartialEq, Eq)]
pub struct TruncatedSeries<C: Coeff = Rational> {
    vars: Arc<VariableSet>,
    bounds: Arc<[i32]>,
    terms: BTreeMap<Vec<u32>, C>,
}

fn fits(exps: &[u32], bounds: &[i32]) -> bool {
    exps.iter().zip(bounds).all(|(&e, &b)| (e as i64) <= b as i64)
}

impl<C: Coeff> TruncatedSeries<C> {
    pub fn zero(vars: &Arc<VariableSet>, bounds: &[i32]) -> Self {
        assert_eq!(vars.len(), bounds.len(), "bounds must match variables");
        TruncatedSeries { vars: vars.clone(), bounds: bounds.into(), terms: BTreeMap::new() }
    }

    pub fn constant(vars: &Arc<VariableSet>, bounds: &[i32], c: C) -> Self {
        let exps = vec![0; vars.len()];
        Self::monomial(vars, bounds, exps, c)
    }

    /// `c · x^exps`, or zero when the monomial lies outside the bounds.
    pub fn monomial(vars: &Arc<VariableSet>, bounds: &[i32], exps: Vec<u32>, c: C) -> Self {
        let mut s = Self::zero(vars, bounds);
        assert_eq!(exps.len(), vars.len(), "exponent arity");
        if !c.is_zero() && fits(&exps, bounds) {
            s.terms.insert(exps, c);
        }
        s
    }

    /// The coordinate function of variable `name`.
    pub fn variable(vars: &Arc<VariableSet>, bounds: &[i32], name: &str) -> SeriesResult<Self> {
        let i = vars.require(name)?;
        let mut e = vec![0; vars.len()];
        e[i] = 1;
        Ok(Self::monomial(vars, bounds, e, C::one()))
    }

    /// Collects terms, summing repeats and dropping anything beyond the bounds.
    pub fn from_terms(
        vars: &Arc<VariableSet>,
        bounds: &[i32],
        terms: impl IntoIterator<Item = (Vec<u32>, C)>,
    ) -> SeriesResult<Self> {
        let mut s = Self::zero(vars, bounds);
        for (e, c) in terms {
            if e.len() != vars.len() {
                return Err(SeriesError::Arity { got: e.len(), expected: vars.len() });
            }
            if fits(&e, bounds) {
                s.accumulate(e, &c);
            }
        }
        s.terms.retain(|_, c| !c.is_zero());
        Ok(s)
    }

    /// Like `from_terms` but rejects terms outside the bounds.
    pub fn from_terms_strict(
        vars: &Arc<VariableSet>,
        bounds: &[i32],
        terms: impl IntoIterator<Item = (Vec<u32>, C)>,
    ) -> SeriesResult<Self> {
        let terms: Vec<_> = terms.into_iter().collect();
        for (e, _) in &terms {
            if e.len() == vars.len() && !fits(e, bounds) {
                return Err(SeriesError::OutOfBounds { exps: e.clone(), bounds: bounds.to_vec() });
            }
        }
        Self::from_terms(vars, bounds, terms)
    }

    fn accumulate(&mut self, e: Vec<u32>, c: &C) {
        match self.terms.get_mut(&e) {
            Some(v) => v.add_assign(c),
            None => {
                self.terms.insert(e, c.clone());
            }
        }
    }

    pub fn vars(&self) -> &Arc<VariableSet> {
        &self.vars
    }

    pub fn bounds(&self) -> &[i32] {
        &self.bounds
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exps: &[u32]) -> C {
        self.terms.get(exps).cloned().unwrap_or_else(C::zero)
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&vec![0; self.vars.len()])
    }

    /// True when the only stored monomial is the constant one (or none).
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x == 0))
    }

    /// Errors unless both series share variables and bounds.
    pub fn same_shape(&self, o: &Self) -> SeriesResult<()> {
        if !Arc::ptr_eq(&self.vars, &o.vars) && *self.vars != *o.vars {
            return Err(SeriesError::VarMismatch(self.vars.describe(), o.vars.describe()));
        }
        if self.bounds != o.bounds {
            return Err(SeriesError::BoundMismatch(self.bounds.to_vec(), o.bounds.to_vec()));
        }
        Ok(())
    }

    fn with_terms(&self, terms: BTreeMap<Vec<u32>, C>) -> Self {
        TruncatedSeries { vars: self.vars.clone(), bounds: self.bounds.clone(), terms }
    }

    pub fn add(&self, o: &Self) -> SeriesResult<Self> {
        self.same_shape(o)?;
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.accumulate(e.clone(), c);
            if out.terms[e].is_zero() {
                out.terms.remove(e);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> SeriesResult<Self> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.with_terms(self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect())
    }

    pub fn scale(&self, k: &C) -> Self {
        if k.is_zero() {
            return self.with_terms(BTreeMap::new());
        }
        self.with_terms(
            self.terms
                .iter()
                .map(|(e, c)| (e.clone(), c.mul(k)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        )
    }

    /// Cauchy product truncated to the shared bounds.
    pub fn mul(&self, o: &Self) -> SeriesResult<Self> {
        self.same_shape(o)?;
        if self.is_zero() || o.is_zero() {
            return Ok(self.with_terms(BTreeMap::new()));
        }
        let n = self.vars.len();
        let mut acc: HashMap<Vec<u32>, C> = HashMap::new();
        let mut e = vec![0u32; n];
        for (ea, ca) in &self.terms {
            'inner: for (eb, cb) in &o.terms {
                for k in 0..n {
                    let s = ea[k] + eb[k];
                    if s as i64 > self.bounds[k] as i64 {
                        continue 'inner;
                    }
                    e[k] = s;
                }
                let p = ca.mul(cb);
                match acc.get_mut(&e) {
                    Some(v) => v.add_assign(&p),
                    None => {
                        acc.insert(e.clone(), p);
                    }
                }
            }
        }
        let terms: BTreeMap<_, _> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        let limit = max_terms();
        if terms.len() > limit {
            return Err(SeriesError::TermLimit(terms.len(), limit));
        }
        Ok(self.with_terms(terms))
    }

    /// Both operands restricted to their elementwise-minimal bounds.
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

    /// Formal ∂/∂x_i. The bound in x_i drops by one.
    pub fn partial_derivative(&self, i: usize) -> SeriesResult<Self> {
        if i >= self.vars.len() {
            return Err(SeriesError::UnknownVariable(format!("#{i}")));
        }
        let mut bounds = self.bounds.to_vec();
        bounds[i] = (bounds[i] - 1).max(-1);
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut f = e.clone();
            f[i] -= 1;
            terms.insert(f, c.mul(&C::from_int(e[i] as i64)));
        }
        Ok(TruncatedSeries { vars: self.vars.clone(), bounds: bounds.into(), terms })
    }

    pub fn partial_derivative_by_name(&self, name: &str) -> SeriesResult<Self> {
        self.partial_derivative(self.vars.require(name)?)
    }

    /// x_i ∂/∂x_i for a log variable; bounds are unchanged.
    pub fn log_derivative(&self, i: usize) -> SeriesResult<Self> {
        if i >= self.vars.len() {
            return Err(SeriesError::UnknownVariable(format!("#{i}")));
        }
        if self.vars.class(i) != VarClass::Log {
            return Err(SeriesError::NotLog(self.vars.name(i).to_string()));
        }
        Ok(self.euler_scaled(i))
    }

    fn euler_scaled(&self, i: usize) -> Self {
        self.with_terms(
            self.terms
                .iter()
                .filter(|(e, _)| e[i] != 0)
                .map(|(e, c)| (e.clone(), c.mul(&C::from_int(e[i] as i64))))
                .collect(),
        )
    }

    /// Derivative along the i-th frame field: x_i∂_{x_i} for log variables,
    /// ∂_{x_i} otherwise.
    pub fn frame_derivative(&self, i: usize) -> SeriesResult<Self> {
        if self.vars.class(i) == VarClass::Log {
            self.log_derivative(i)
        } else {
            self.partial_derivative(i)
        }
    }

    /// Multiplies each monomial by `Σ_i w_i e_i` (a weighted Euler operator).
    pub fn weighted_euler(&self, weights: &[Rational]) -> Self {
        self.map_terms(|e, c| {
            let w: Rational = e.iter().zip(weights).map(|(&x, w)| w * int(x as i64)).sum();
            Some(c.mul(&C::from_rational(&w)))
        })
    }

    /// Applies `f` to every term; `None` or zero drops it.
    pub fn map_terms(&self, f: impl Fn(&[u32], &C) -> Option<C>) -> Self {
        self.with_terms(
            self.terms
                .iter()
                .filter_map(|(e, c)| f(e, c).filter(|v| !v.is_zero()).map(|v| (e.clone(), v)))
                .collect(),
        )
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> TruncatedSeries<D> {
        TruncatedSeries {
            vars: self.vars.clone(),
            bounds: self.bounds.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), f(c)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    /// Raises bounds, declaring every newly exposed coefficient zero.
    pub fn raise_bounds(&self, bounds: &[i32]) -> Self {
        assert!(bounds.len() == self.bounds.len() && bounds.iter().zip(self.bounds.iter()).all(|(a, b)| a >= b));
        TruncatedSeries { vars: self.vars.clone(), bounds: bounds.into(), terms: self.terms.clone() }
    }

    /// Lowers bounds (never raises them) and drops terms beyond the new bounds.
    pub fn restrict_bounds(&self, bounds: &[i32]) -> SeriesResult<Self> {
        if bounds.len() != self.bounds.len() || bounds.iter().zip(self.bounds.iter()).any(|(a, b)| a > b)
        {
            return Err(SeriesError::BoundsExceed {
                requested: bounds.to_vec(),
                available: self.bounds.to_vec(),
            });
        }
        if bounds == &*self.bounds {
            return Ok(self.clone());
        }
        Ok(TruncatedSeries {
            vars: self.vars.clone(),
            bounds: bounds.into(),
            terms: self.terms.iter().filter(|(e, _)| fits(e, bounds)).map(|(e, c)| (e.clone(), c.clone())).collect(),
        })
    }

    /// Re-expresses the series over a superset of its variables. Existing
    /// variables may only keep or lower their bounds; new variables get the
    /// requested bound and the series is constant along them.
    pub fn embed(&self, vars: &Arc<VariableSet>, bounds: &[i32]) -> SeriesResult<Self> {
        if vars.len() != bounds.len() {
            return Err(SeriesError::Dimension("bounds do not match variables".into()));
        }
        let mut map = Vec::with_capacity(self.vars.len());
        for (k, name) in self.vars.names().iter().enumerate() {
            let j = vars.require(name)?;
            if bounds[j] > self.bounds[k] {
                return Err(SeriesError::BoundsExceed {
                    requested: bounds.to_vec(),
                    available: self.bounds.to_vec(),
                });
            }
            map.push(j);
        }
        let mut out = TruncatedSeries::zero(vars, bounds);
        for (e, c) in &self.terms {
            let mut f = vec![0u32; vars.len()];
            for (k, &j) in map.iter().enumerate() {
                f[j] = e[k];
            }
            if fits(&f, bounds) {
                out.terms.insert(f, c.clone());
            }
        }
        Ok(out)
    }

    /// Restriction to the hyperplane x_i = 0; the variable is removed.
    pub fn at_zero(&self, i: usize) -> Self {
        let vars = Arc::new(self.vars.without(i));
        let mut bounds = self.bounds.to_vec();
        bounds.remove(i);
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[i] == 0)
            .map(|(e, c)| {
                let mut f = e.clone();
                f.remove(i);
                (f, c.clone())
            })
            .collect();
        TruncatedSeries { vars, bounds: bounds.into(), terms }
    }

    /// Sets x_i = 0 but keeps the variable (with the same bound).
    pub fn zero_along(&self, i: usize) -> Self {
        self.with_terms(self.terms.iter().filter(|(e, _)| e[i] == 0).map(|(e, c)| (e.clone(), c.clone())).collect())
    }

    /// Terms of exact degree `k` in x_i.
    pub fn layer(&self, i: usize, k: u32) -> Self {
        self.with_terms(self.terms.iter().filter(|(e, _)| e[i] == k).map(|(e, c)| (e.clone(), c.clone())).collect())
    }

    /// Given the degree-`k` layer in x_i of some g, returns the degree-(k+1)
    /// layer of ∫_0^{x_i} g. Terms of other degrees are ignored.
    pub fn integrate_layer(&self, i: usize, k: u32) -> Self {
        let denom = C::from_int(k as i64 + 1).inv().expect("nonzero integer");
        self.with_terms(
            self.terms
                .iter()
                .filter(|(e, _)| e[i] == k && (k as i64) < self.bounds[i] as i64)
                .map(|(e, c)| {
                    let mut f = e.clone();
                    f[i] += 1;
                    (f, c.mul(&denom))
                })
                .collect(),
        )
    }

    /// Highest exponent of x_i among stored terms.
    pub fn degree_in(&self, i: usize) -> Option<u32> {
        self.terms.keys().map(|e| e[i]).max()
    }

    /// Evaluation with every variable set to zero except those in `keep`.
    pub fn constant_in(&self, keep: &[usize]) -> Self {
        self.with_terms(
            self.terms
                .iter()
                .filter(|(e, _)| e.iter().enumerate().all(|(k, &x)| x == 0 || keep.contains(&k)))
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        )
    }
}

impl TruncatedSeries<Rational> {
    /// Renders the series as a polynomial, e.g. `1 + 3/2*t^2*y`.
    pub fn to_poly_string(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (e, c)) in self.terms.iter().enumerate() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &x)| x > 0)
                .map(|(i, &x)| if x == 1 { self.vars.name(i).to_string() } else { format!("{}^{x}", self.vars.name(i)) })
                .collect();
            let neg = c < &int(0);
            let mag = if neg { -c } else { c.clone() };
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let is_one = mag == int(1);
            match (mono.is_empty(), is_one) {
                (true, _) => out.push_str(&format_rational(&mag)),
                (false, true) => out.push_str(&mono.join("*")),
                (false, false) => {
                    out.push_str(&format_rational(&mag));
                    out.push('*');
                    out.push_str(&mono.join("*"));
                }
            }
        }
        out
    }
}

impl<C: Coeff> fmt::Debug for TruncatedSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Series[{}; {:?}]{{", self.vars.describe(), self.bounds)?;
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e:?}: {c:?}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn tv(b: i32) -> (Arc<VariableSet>, Vec<i32>) {
        (Arc::new(VariableSet::new([("t", VarClass::Log), ("y", VarClass::Unfold)]).unwrap()), vec![b, b])
    }

    fn s(v: &Arc<VariableSet>, b: &[i32], terms: &[([u32; 2], i64)]) -> TruncatedSeries {
        TruncatedSeries::from_terms(v, b, terms.iter().map(|(e, c)| (e.to_vec(), int(*c)))).unwrap()
    }

    #[test]
    fn add_examples() {
        let (v, b) = tv(3);
        let a = s(&v, &b, &[([0, 0], 1), ([1, 0], 1)]);
        let c = s(&v, &b, &[([1, 0], 2)]);
        assert_eq!(a.add(&c).unwrap(), s(&v, &b, &[([0, 0], 1), ([1, 0], 3)]));
        assert_eq!(a.add(&TruncatedSeries::zero(&v, &b)).unwrap(), a);
        let sq = s(&v, &b, &[([2, 0], 1)]);
        assert!(sq.add(&sq.neg()).unwrap().is_zero());
    }

    #[test]
    fn mul_examples() {
        let (v, _) = tv(2);
        let b = [2, 2];
        let p = s(&v, &b, &[([0, 0], 1), ([1, 0], 1)]);
        let m = s(&v, &b, &[([0, 0], 1), ([1, 0], -1)]);
        assert_eq!(p.mul(&m).unwrap(), s(&v, &b, &[([0, 0], 1), ([2, 0], -1)]));
        let b1 = [1, 1];
        let t = s(&v, &b1, &[([1, 0], 1)]);
        assert!(t.mul(&t).unwrap().is_zero());
        let y = s(&v, &b, &[([0, 0], 1), ([0, 1], 1)]);
        assert_eq!(y.mul(&y).unwrap(), s(&v, &b, &[([0, 0], 1), ([0, 1], 2), ([0, 2], 1)]));
    }

    #[test]
    fn mismatched_shapes_are_errors() {
        let (v, b) = tv(2);
        let other = Arc::new(VariableSet::new([("t", VarClass::Log), ("x", VarClass::Hol)]).unwrap());
        let a = TruncatedSeries::<Rational>::constant(&v, &b, int(1));
        let c = TruncatedSeries::<Rational>::constant(&other, &b, int(1));
        assert!(matches!(a.add(&c), Err(SeriesError::VarMismatch(..))));
        let d = TruncatedSeries::<Rational>::constant(&v, &[2, 1], int(1));
        assert!(matches!(a.mul(&d), Err(SeriesError::BoundMismatch(..))));
    }

    #[test]
    fn derivative_examples() {
        let (v, b) = tv(3);
        let t2 = s(&v, &b, &[([2, 0], 1)]);
        let d = t2.partial_derivative(0).unwrap();
        assert_eq!(d.bounds(), &[2, 3]);
        assert_eq!(d.coeff(&[1, 0]), int(2));
        assert!(s(&v, &b, &[([1, 0], 1)]).partial_derivative(1).unwrap().is_zero());
        let ty = s(&v, &b, &[([1, 1], 1)]);
        assert_eq!(ty.partial_derivative(0).unwrap().coeff(&[0, 1]), int(1));

        let t3 = s(&v, &b, &[([3, 0], 1)]);
        assert_eq!(t3.log_derivative(0).unwrap(), t3.scale(&int(3)));
        assert!(s(&v, &b, &[([0, 0], 1)]).log_derivative(0).unwrap().is_zero());
        let ty2 = s(&v, &b, &[([1, 2], 1)]);
        assert_eq!(ty2.log_derivative(0).unwrap(), ty2);
        assert!(matches!(ty2.log_derivative(1), Err(SeriesError::NotLog(_))));
    }

    #[test]
    fn integrate_layer_inverts_derivative() {
        let (v, b) = tv(4);
        let g = s(&v, &b, &[([1, 2], 3), ([0, 2], 1), ([0, 1], 5)]);
        let h = g.integrate_layer(1, 2);
        assert_eq!(h.coeff(&[1, 3]), int(1));
        assert_eq!(h.coeff(&[0, 3]), rat(1, 3));
        assert_eq!(h.len(), 2);
    }

    #[test]
    fn embed_and_restrict() {
        let v1 = Arc::new(VariableSet::new([("t", VarClass::Log)]).unwrap());
        let a = TruncatedSeries::from_terms(&v1, &[3], [(vec![1], int(2)), (vec![3], int(1))]).unwrap();
        let (v2, _) = tv(0);
        let e = a.embed(&v2, &[2, 4]).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.coeff(&[1, 0]), int(2));
        assert!(a.embed(&v2, &[4, 4]).is_err());
        assert_eq!(e.at_zero(1), a.restrict_bounds(&[2]).unwrap());
    }

    #[test]
    fn poly_string() {
        let (v, b) = tv(3);
        let a = TruncatedSeries::from_terms(&v, &b, [(vec![0, 0], int(1)), (vec![2, 1], rat(-3, 2))]).unwrap();
        assert_eq!(a.to_poly_string(), "1 - 3/2*t^2*y");
    }
}
