//! Sparse polynomials with rational coefficients in indexed unknowns `x_0, x_1, …`,
//! used as series coefficients when invariants are still undetermined.

use std::collections::BTreeMap;
use std::fmt;

use crate::scalar::{Coeff, Rational};

/// A monomial as a sorted list of unknown indices with repetition.
pub type Mono = Vec<u32>;

#[derive(Clone, PartialEq, Eq, Default)]
pub struct SymPoly {
    terms: BTreeMap<Mono, Rational>,
}

fn merge(a: &[u32], b: &[u32]) -> Mono {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl SymPoly {
    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !Coeff::is_zero(&c) {
            terms.insert(vec![], c);
        }
        SymPoly { terms }
    }

    /// The unknown `x_i`.
    pub fn var(i: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![i], Coeff::one());
        SymPoly { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Rational)> {
        self.terms.iter()
    }

    pub fn constant_term(&self) -> Rational {
        self.terms.get(&vec![]).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_empty())
    }

    /// Unknowns that occur, sorted and without repetition.
    pub fn unknowns(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.terms.keys().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Substitutes every unknown with a known value.
    pub fn substitute(&self, values: &[Option<Rational>]) -> Self {
        let mut out: BTreeMap<Mono, Rational> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut c = c.clone();
            let mut rest = Vec::new();
            for &x in m {
                match &values[x as usize] {
                    Some(v) => c *= v,
                    None => rest.push(x),
                }
            }
            if Coeff::is_zero(&c) {
                continue;
            }
            *out.entry(rest).or_insert_with(Coeff::zero) += c;
        }
        out.retain(|_, c| !Coeff::is_zero(c));
        SymPoly { terms: out }
    }

    /// For a polynomial `a·x + b` in the single unknown `x`, returns `(x, a, b)`.
    pub fn as_linear(&self) -> Option<(u32, Rational, Rational)> {
        let mut x = None;
        let mut a = None;
        for m in self.terms.keys() {
            match m.len() {
                0 => {}
                1 if x.is_none() || x == Some(m[0]) => {
                    x = Some(m[0]);
                    a = Some(self.terms[m].clone());
                }
                _ => return None,
            }
        }
        Some((x?, a?, self.constant_term()))
    }
}

impl Coeff for SymPoly {
    fn zero() -> Self {
        SymPoly::default()
    }
    fn one() -> Self {
        SymPoly::constant(Coeff::one())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(o);
        out
    }
    fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    fn mul(&self, o: &Self) -> Self {
        let mut terms: BTreeMap<Mono, Rational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                *terms.entry(merge(ma, mb)).or_insert_with(Coeff::zero) += ca * cb;
            }
        }
        terms.retain(|_, c| !Coeff::is_zero(c));
        SymPoly { terms }
    }
    fn neg(&self) -> Self {
        SymPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
    fn inv(&self) -> Option<Self> {
        if self.is_constant() {
            Coeff::inv(&self.constant_term()).map(SymPoly::constant)
        } else {
            None
        }
    }
    fn from_rational(r: &Rational) -> Self {
        SymPoly::constant(r.clone())
    }
    fn add_assign(&mut self, o: &Self) {
        for (m, c) in &o.terms {
            let e = self.terms.entry(m.clone()).or_insert_with(Coeff::zero);
            *e += c;
            if Coeff::is_zero(e) {
                self.terms.remove(m);
            }
        }
    }
}

impl fmt::Debug for SymPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let xs: Vec<String> = m.iter().map(|x| format!("x{x}")).collect();
                if xs.is_empty() { c.to_string() } else { format!("{c}*{}", xs.join("*")) }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
