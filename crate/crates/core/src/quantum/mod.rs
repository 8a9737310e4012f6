//! Gromov–Witten potentials on even cohomology, big quantum products, the
//! Euler grading, WDVV residuals and reconstruction of invariants.
//!
//! Coordinates: `t_0` for the unit, `q_s = e^{t_s}` for a basis of `H²`
//! (logarithmic variables named `q1, q2, …`) and `t_k` for every other class
//! (holomorphic variables named `t{k}` after the class index). The classical
//! cubic is kept as its constant third-derivative tensor. The quantum part
//! is a series in the `q` and `t_k` only.

mod reconstruct;
mod sympoly;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use thiserror::Error;

pub use reconstruct::{reconstruct, ReconstructError};
pub use sympoly::SymPoly;

use crate::frobenius::FTSData;
use crate::linalg::Matrix;
use crate::matrix::MatrixSeries;
use crate::report::ConditionReport;
use crate::scalar::{int, rat, Coeff, Rational};
use crate::series::{min_bounds, SeriesError, TruncatedSeries, VarClass, VariableSet};

type Series = TruncatedSeries<Rational>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("invalid cohomology model: {0}")]
    Model(String),
    #[error("inadmissible invariants: {}", .0.join("; "))]
    Inadmissible(Vec<String>),
    #[error("invalid potential: {0}")]
    Potential(String),
    #[error("{0}")]
    Invalid(String),
}

pub type QuantumResult<T> = Result<T, QuantumError>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohClass {
    pub name: String,
    /// Real degree (twice the complex degree).
    pub deg: u32,
    pub h2: bool,
}

/// Even cohomology ring with pairing, first Chern class and the pairing of
/// Mori cone generators with the `H²` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CohModel {
    pub dim_x: u32,
    pub classes: Vec<CohClass>,
    /// `cup[i][j][k]`: `T_i ∪ T_j = Σ_k cup[i][j][k] T_k`.
    pub cup: Vec<Vec<Vec<Rational>>>,
    pub pairing: Matrix,
    /// Coefficients of `c₁(X)` in the `H²` basis, in class order.
    pub c1: Vec<Rational>,
    pub mori_rank: usize,
    /// `beta_pairing[s][j] = (β_s, T_{h2[j]})`.
    pub beta_pairing: Vec<Vec<u32>>,
}

fn model_err(msg: impl Into<String>) -> QuantumError {
    QuantumError::Model(msg.into())
}

impl CohModel {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }

    /// Indices of the `H²` classes, in order.
    pub fn h2(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.classes[i].h2).collect()
    }

    /// Indices of classes that are neither the unit nor in `H²`.
    pub fn others(&self) -> Vec<usize> {
        (1..self.len()).filter(|&i| !self.classes[i].h2).collect()
    }

    /// Checks unit, pairing, degrees, commutativity, associativity and effectivity.
    pub fn validate(&self) -> QuantumResult<()> {
        let n = self.len();
        if n == 0 {
            return Err(model_err("no classes"));
        }
        if self.classes[0].deg != 0 {
            return Err(model_err("T_0 must be the degree-0 unit class"));
        }
        for c in &self.classes {
            if c.deg % 2 != 0 || c.deg > 2 * self.dim_x {
                return Err(model_err(format!("class {} has degree {} outside 0..=2·dimX or odd", c.name, c.deg)));
            }
            if c.h2 != (c.deg == 2) {
                return Err(model_err(format!("class {}: h2 flag disagrees with degree {}", c.name, c.deg)));
            }
        }
        let mut names: Vec<&str> = self.classes.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != n {
            return Err(model_err("class names are not unique"));
        }
        if self.cup.len() != n || self.cup.iter().any(|r| r.len() != n || r.iter().any(|c| c.len() != n)) {
            return Err(model_err("cup tensor must be n×n×n"));
        }
        if self.pairing.rows() != n || self.pairing.cols() != n || self.pairing.det().is_zero() {
            return Err(model_err("pairing must be a nondegenerate n×n matrix"));
        }
        let r = self.h2().len();
        if self.c1.len() != r {
            return Err(model_err(format!("c1 has {} entries for {r} H² classes", self.c1.len())));
        }
        if self.beta_pairing.len() != self.mori_rank || self.beta_pairing.iter().any(|row| row.len() != r) {
            return Err(model_err("beta_pairing must be mori_rank × #H²"));
        }
        for i in 0..n {
            for j in 0..n {
                let unit = if i == j { int(1) } else { int(0) };
                if self.cup[0][i][j] != unit || self.cup[i][0][j] != unit {
                    return Err(model_err("T_0 is not a unit for cup"));
                }
                if self.pairing[(i, j)] != self.pairing[(j, i)] {
                    return Err(model_err("pairing is not symmetric"));
                }
                if !self.pairing[(i, j)].is_zero() && self.classes[i].deg + self.classes[j].deg != 2 * self.dim_x {
                    return Err(model_err(format!("pairing g_{i}{j} is not degree-complementary")));
                }
                for k in 0..n {
                    if self.cup[i][j][k] != self.cup[j][i][k] {
                        return Err(model_err("cup is not commutative"));
                    }
                    if !self.cup[i][j][k].is_zero() && self.classes[i].deg + self.classes[j].deg != self.classes[k].deg {
                        return Err(model_err(format!("cup constant c_{i}{j}^{k} violates grading")));
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let a: Rational = (0..n).map(|m| &self.cup[i][j][m] * &self.cup[m][k][l]).sum();
                        let b: Rational = (0..n).map(|m| &self.cup[j][k][m] * &self.cup[i][m][l]).sum();
                        if a != b {
                            return Err(model_err("cup is not associative"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `I_{ijk} = ∫ T_i ∪ T_j ∪ T_k`.
    pub fn triple_intersections(&self) -> Vec<Vec<Vec<Rational>>> {
        let n = self.len();
        let mut out = vec![vec![vec![int(0); n]; n]; n];
        for (i, oi) in out.iter_mut().enumerate() {
            for (j, oij) in oi.iter_mut().enumerate() {
                for (k, x) in oij.iter_mut().enumerate() {
                    *x = (0..n).map(|l| &self.cup[i][j][l] * &self.pairing[(l, k)]).sum();
                }
            }
        }
        out
    }

    /// `∫_β c₁(X)`.
    pub fn c1_degree(&self, beta: &[u32]) -> Rational {
        self.q_exponents(beta).iter().zip(&self.c1).map(|(&e, r)| r * int(e as i64)).sum()
    }

    /// The exponents `(β, T_j)` of `q_j`.
    pub fn q_exponents(&self, beta: &[u32]) -> Vec<u32> {
        let r = self.h2().len();
        (0..r).map(|j| beta.iter().zip(&self.beta_pairing).map(|(&d, row)| d * row[j]).sum()).collect()
    }

    /// Coordinates of the series ring carrying the quantum part.
    pub fn chart(&self) -> Arc<VariableSet> {
        let mut vars: Vec<(String, VarClass)> =
            (0..self.h2().len()).map(|s| (format!("q{}", s + 1), VarClass::Log)).collect();
        vars.extend(self.others().into_iter().map(|k| (format!("t{k}"), VarClass::Hol)));
        Arc::new(VariableSet::new(vars).expect("distinct chart names"))
    }

    /// Chart variable index of class `i` (`None` for the unit).
    pub fn chart_index(&self, i: usize) -> Option<usize> {
        if i == 0 {
            return None;
        }
        let h2 = self.h2();
        match h2.iter().position(|&j| j == i) {
            Some(s) => Some(s),
            None => self.others().iter().position(|&j| j == i).map(|k| h2.len() + k),
        }
    }

    /// Euler weights of the chart variables: `r^s` for `q_s`, `1 − deg/2` for `t_k`.
    pub fn euler_weights(&self) -> Vec<Rational> {
        let mut w = self.c1.clone();
        w.extend(self.others().into_iter().map(|k| int(1) - rat(self.classes[k].deg as i64, 2)));
        w
    }

    /// Inverse of the pairing matrix, `g^{ij}`.
    pub fn dual_pairing(&self) -> Matrix {
        self.pairing.inverse().expect("validated pairing is invertible")
    }
}

/// `½Σ deg(T_{a_i}) = dimX + ∫_β c₁ + n − 3` for the insertion degrees `degrees`.
pub fn admissible(model: &CohModel, beta: &[u32], degrees: &[u32]) -> bool {
    let half: Rational = degrees.iter().map(|&d| rat(d as i64, 2)).sum();
    half == int(model.dim_x as i64) + model.c1_degree(beta) + int(degrees.len() as i64) - int(3)
}

/// An invariant `⟨I_{0,n,β}⟩` in divisor-normal form: `ins[k]` insertions of
/// the `k`-th class of [`CohModel::others`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GWKey {
    pub beta: Vec<u32>,
    pub ins: Vec<u32>,
}

impl GWKey {
    pub fn degrees(&self, model: &CohModel) -> Vec<u32> {
        let others = model.others();
        self.ins.iter().zip(&others).flat_map(|(&j, &k)| std::iter::repeat(model.classes[k].deg).take(j as usize)).collect()
    }

    pub fn is_admissible(&self, model: &CohModel) -> bool {
        self.beta.iter().any(|&d| d > 0) && admissible(model, &self.beta, &self.degrees(model))
    }

    /// `j! = Π_k j_k!`.
    pub fn factorial(&self) -> Rational {
        let mut f = BigInt::from(1);
        for &j in &self.ins {
            for x in 2..=j {
                f *= x;
            }
        }
        Rational::from_integer(f)
    }

    pub fn describe(&self, model: &CohModel) -> String {
        let others = model.others();
        let ins: Vec<String> = self
            .ins
            .iter()
            .zip(&others)
            .filter(|(&j, _)| j > 0)
            .map(|(&j, &k)| if j == 1 { model.classes[k].name.clone() } else { format!("{}^{j}", model.classes[k].name) })
            .collect();
        format!("beta={:?} [{}]", self.beta, ins.join(" "))
    }
}

/// A table of genus-zero invariants keyed by curve class and non-divisor insertions.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GWTable {
    pub entries: BTreeMap<GWKey, Rational>,
}

impl GWTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: GWKey, value: Rational) {
        if value.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, value);
        }
    }

    pub fn get(&self, key: &GWKey) -> Rational {
        self.entries.get(key).cloned().unwrap_or_else(|| int(0))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `Φ = Φ_class + Φ_quantum`: the classical cubic as its third-derivative tensor
/// and the quantum part as a series on [`CohModel::chart`].
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSeries<C: Coeff = Rational> {
    pub classical: Vec<Vec<Vec<Rational>>>,
    pub quantum: TruncatedSeries<C>,
}

/// Every admissible key with `Σβ_s ≤ max_degree`, in increasing order of `(Σβ, key)`.
pub fn admissible_keys(model: &CohModel, max_degree: u32) -> Vec<GWKey> {
    let others = model.others();
    let weights: Vec<i64> = others.iter().map(|&k| model.classes[k].deg as i64 / 2 - 1).collect();
    let mut out = Vec::new();
    let mut betas = vec![vec![]];
    for _ in 0..model.mori_rank {
        betas = betas
            .into_iter()
            .flat_map(|b: Vec<u32>| (0..=max_degree).map(move |d| [b.clone(), vec![d]].concat()))
            .collect();
    }
    betas.retain(|b| b.iter().sum::<u32>() <= max_degree && b.iter().any(|&d| d > 0));
    betas.sort_by_key(|b| (b.iter().sum::<u32>(), b.clone()));
    for beta in betas {
        let target = model.dim_x as i64 - 3 + model.c1_degree(&beta).to_integer().to_i64().unwrap_or(i64::MIN);
        if !model.c1_degree(&beta).is_integer() || target < 0 {
            continue;
        }
        let mut acc = vec![0u32; others.len()];
        enumerate_insertions(&weights, 0, target, &mut acc, &mut |ins| {
            out.push(GWKey { beta: beta.clone(), ins: ins.to_vec() });
        });
    }
    out.retain(|k| k.is_admissible(model));
    out
}

fn enumerate_insertions(w: &[i64], i: usize, left: i64, acc: &mut Vec<u32>, f: &mut dyn FnMut(&[u32])) {
    if i == w.len() {
        if left == 0 {
            f(acc);
        }
        return;
    }
    if w[i] == 0 {
        // weight-0 classes (degree 2 outside H²) cannot occur in a validated model
        acc[i] = 0;
        enumerate_insertions(w, i + 1, left, acc, f);
        return;
    }
    let mut j = 0;
    while j as i64 * w[i] <= left {
        acc[i] = j;
        enumerate_insertions(w, i + 1, left - j as i64 * w[i], acc, f);
        j += 1;
    }
    acc[i] = 0;
}

/// Bounds on the chart that hold every admissible monomial with `Σβ ≤ max_degree`.
pub fn chart_bounds(model: &CohModel, max_degree: u32) -> Vec<i32> {
    let r = model.h2().len();
    let mut b = vec![0i32; r + model.others().len()];
    for key in admissible_keys(model, max_degree) {
        for (x, e) in b.iter_mut().zip(model.q_exponents(&key.beta).into_iter().chain(key.ins.iter().copied())) {
            *x = (*x).max(e as i32);
        }
    }
    b
}

/// `Φ_quantum = Σ ⟨I_{0,n,β}⟩ q^{(β,T)} t^j / j!` plus the classical cubic.
/// Monomials beyond `bounds` are dropped.
pub fn potential_assemble(model: &CohModel, gw: &GWTable, bounds: &[i32]) -> QuantumResult<PotentialSeries> {
    model.validate()?;
    let vars = model.chart();
    if bounds.len() != vars.len() {
        return Err(QuantumError::Invalid(format!("{} bounds for {} chart variables", bounds.len(), vars.len())));
    }
    let bad: Vec<String> = gw
        .entries
        .keys()
        .filter(|k| k.beta.len() != model.mori_rank || k.ins.len() != model.others().len() || !k.is_admissible(model))
        .map(|k| k.describe(model))
        .collect();
    if !bad.is_empty() {
        return Err(QuantumError::Inadmissible(bad));
    }
    let terms = gw.entries.iter().map(|(k, v)| {
        let e: Vec<u32> = model.q_exponents(&k.beta).into_iter().chain(k.ins.iter().copied()).collect();
        (e, v / k.factorial())
    });
    let quantum = Series::from_terms(&vars, bounds, terms)?;
    Ok(PotentialSeries { classical: model.triple_intersections(), quantum })
}

/// Reads `⟨I_{0,n,β}⟩ = j!·[q^{(β,T)} t^j]Φ_quantum` back; inverse of [`potential_assemble`].
pub fn extract_invariants(model: &CohModel, phi: &PotentialSeries) -> QuantumResult<GWTable> {
    model.validate()?;
    let r = model.h2().len();
    let bp = Matrix::from_fn(r, model.mori_rank, |j, s| int(model.beta_pairing[s][j] as i64));
    let mut out = GWTable::new();
    for (e, c) in phi.quantum.terms() {
        let qe: Vec<Rational> = e[..r].iter().map(|&x| int(x as i64)).collect();
        let beta = bp
            .solve(&qe)
            .filter(|b| b.iter().all(|x| x.is_integer() && *x >= int(0)))
            .ok_or_else(|| QuantumError::Potential(format!("q-exponents {:?} are not the pairing of an effective class", &e[..r])))?;
        let beta: Vec<u32> = beta.iter().map(|x| x.to_integer().to_u32().expect("small")).collect();
        if model.q_exponents(&beta) != e[..r] {
            return Err(QuantumError::Potential(format!("q-exponents {:?} do not come from a unique class", &e[..r])));
        }
        let key = GWKey { beta, ins: e[r..].to_vec() };
        let v = c * key.factorial();
        out.insert(key, v);
    }
    Ok(out)
}

/// `D_i`: zero for the unit, `q_s∂_{q_s}` for `H²`, `∂_{t_k}` otherwise.
fn class_derivative<C: Coeff>(model: &CohModel, i: usize, s: &TruncatedSeries<C>) -> QuantumResult<Option<TruncatedSeries<C>>> {
    Ok(match model.chart_index(i) {
        None => None,
        Some(v) if model.classes[i].h2 => Some(s.log_derivative(v)?),
        Some(v) => Some(s.partial_derivative(v)?),
    })
}

/// `Φ_{ijk} = I_{ijk} + D_iD_jD_kΦ_quantum`, all on common bounds.
pub fn third_derivatives<C: Coeff>(model: &CohModel, phi: &PotentialSeries<C>) -> QuantumResult<Vec<Vec<Vec<TruncatedSeries<C>>>>> {
    let n = model.len();
    let q = &phi.quantum;
    let mut first = Vec::with_capacity(n);
    for i in 0..n {
        first.push(class_derivative(model, i, q)?);
    }
    let mut raw = vec![vec![vec![None; n]; n]; n];
    for i in 0..n {
        let Some(di) = &first[i] else { continue };
        for j in i..n {
            let Some(dij) = class_derivative(model, j, di)? else { continue };
            for k in j..n {
                raw[i][j][k] = class_derivative(model, k, &dij)?;
            }
        }
    }
    let mut b = q.bounds().to_vec();
    for x in raw.iter().flatten().flatten().flatten() {
        b = min_bounds([&b[..], x.bounds()]);
    }
    let mut out = vec![vec![vec![TruncatedSeries::zero(q.vars(), &b); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = [i, j, k];
                s.sort_unstable();
                let cl = TruncatedSeries::constant(q.vars(), &b, C::from_rational(&phi.classical[i][j][k]));
                out[i][j][k] = match &raw[s[0]][s[1]][s[2]] {
                    Some(x) => x.restrict_bounds(&b)?.add(&cl)?,
                    None => cl,
                };
            }
        }
    }
    Ok(out)
}

/// Structure constants `a_{ij}^k` of the big quantum product: `T_i ∗ T_j = Σ_k a[i][j][k] T_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductTensor<C: Coeff = Rational> {
    pub vars: Arc<VariableSet>,
    pub a: Vec<Vec<Vec<TruncatedSeries<C>>>>,
}

impl<C: Coeff> ProductTensor<C> {
    pub fn bounds(&self) -> &[i32] {
        self.a[0][0][0].bounds()
    }

    /// The matrix of `T_i ∗` acting on the class basis (column `j` is `T_i ∗ T_j`).
    pub fn left_mult(&self, i: usize) -> QuantumResult<MatrixSeries<C>> {
        let n = self.a.len();
        Ok(MatrixSeries::from_fn(n, n, |k, j| self.a[i][j][k].clone())?)
    }
}

/// `a_{ij}^k = Σ_l Φ_{ijl} g^{lk}`.
pub fn quantum_product<C: Coeff>(model: &CohModel, phi: &PotentialSeries<C>) -> QuantumResult<ProductTensor<C>> {
    let n = model.len();
    let d3 = third_derivatives(model, phi)?;
    let ginv = model.dual_pairing();
    let mut a = d3.clone();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = TruncatedSeries::zero(d3[0][0][0].vars(), d3[0][0][0].bounds());
                for l in 0..n {
                    let g = &ginv[(l, k)];
                    if !g.is_zero() {
                        acc = acc.add(&d3[i][j][l].scale(&C::from_rational(g)))?;
                    }
                }
                a[i][j][k] = acc;
            }
        }
    }
    Ok(ProductTensor { vars: phi.quantum.vars().clone(), a })
}

/// The nonzero components of the associator `(T_i∗T_j)∗T_k − T_i∗(T_j∗T_k)`,
/// keyed by `(i, j, k, l)` with `l` the output component.
#[derive(Clone, Debug, PartialEq)]
pub struct WdvvResidual<C: Coeff = Rational> {
    pub components: Vec<((usize, usize, usize, usize), TruncatedSeries<C>)>,
}

impl<C: Coeff> WdvvResidual<C> {
    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    /// Smallest total `q`-degree among nonzero coefficients, over the first `r` chart variables.
    pub fn lowest_q_degree(&self, r: usize) -> Option<u32> {
        self.components.iter().flat_map(|(_, s)| s.terms().map(|(e, _)| e[..r].iter().sum())).min()
    }
}

pub fn associator<C: Coeff>(prod: &ProductTensor<C>) -> QuantumResult<WdvvResidual<C>> {
    let a = &prod.a;
    let n = a.len();
    let mut components = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                // commutativity makes (i,j,k) and (k,j,i) equivalent
                if k < i {
                    continue;
                }
                for l in 0..n {
                    let mut acc = TruncatedSeries::zero(&prod.vars, prod.bounds());
                    for m in 0..n {
                        if !(a[i][j][m].is_zero() || a[m][k][l].is_zero()) {
                            acc = acc.add(&a[i][j][m].mul(&a[m][k][l])?)?;
                        }
                        if !(a[j][k][m].is_zero() || a[i][m][l].is_zero()) {
                            acc = acc.sub(&a[j][k][m].mul(&a[i][m][l])?)?;
                        }
                    }
                    if !acc.is_zero() {
                        components.push(((i, j, k, l), acc));
                    }
                }
            }
        }
    }
    Ok(WdvvResidual { components })
}

pub fn wdvv_residual<C: Coeff>(model: &CohModel, phi: &PotentialSeries<C>) -> QuantumResult<WdvvResidual<C>> {
    associator(&quantum_product(model, phi)?)
}

/// Euler weight of a chart monomial.
fn monomial_weight(weights: &[Rational], e: &[u32]) -> Rational {
    e.iter().zip(weights).map(|(&x, w)| w * int(x as i64)).sum()
}

/// Grading checks: every monomial of `Φ_quantum` has weight `3 − dimX`, and
/// every monomial of `Φ_{ijk}` has weight `(deg_i + deg_j + deg_k)/2 − dimX`.
pub fn euler_check(model: &CohModel, phi: &PotentialSeries) -> QuantumResult<ConditionReport> {
    let weights = model.euler_weights();
    let mut rep = ConditionReport::new();
    let target = int(3) - int(model.dim_x as i64);
    let bad: Vec<(Vec<u32>, Rational)> = phi
        .quantum
        .terms()
        .map(|(e, _)| (e.clone(), monomial_weight(&weights, e)))
        .filter(|(_, w)| *w != target)
        .collect();
    let detail = match bad.first() {
        Some((e, w)) => format!("monomial {e:?} has weight {w}, expected {target}"),
        None => format!("weight {target}"),
    };
    rep.push_count("euler_potential", bad.len(), detail);

    let d3 = third_derivatives(model, phi)?;
    let n = model.len();
    let mut count = 0;
    let mut first = None;
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let degs = model.classes[i].deg + model.classes[j].deg + model.classes[k].deg;
                let want = rat(degs as i64, 2) - int(model.dim_x as i64);
                for (e, _) in d3[i][j][k].terms() {
                    let w = monomial_weight(&weights, e);
                    if w != want {
                        count += 1;
                        first.get_or_insert_with(|| format!("Phi_{i}{j}{k} monomial {e:?} has weight {w}, expected {want}"));
                    }
                }
            }
        }
    }
    rep.push_count("euler_third_derivatives", count, first.unwrap_or_default());
    Ok(rep)
}

/// The Frobenius type structure of the quantum cohomology germ restricted to
/// the coordinates of the classes in `w` (which must contain `H²`):
/// `𝒞_X = −X∗`, `𝒰 = E∗`, `𝒱 = diag((dimX − deg)/2)`, `g` the pairing,
/// `ξ = T_0`, `w = d = dimX`, `∇^r = 0` in the flat frame.
pub fn qc_to_fts(model: &CohModel, phi: &PotentialSeries, w: &[usize]) -> QuantumResult<FTSData> {
    model.validate()?;
    let n = model.len();
    let h2 = model.h2();
    if let Some(i) = h2.iter().find(|i| !w.contains(i)) {
        return Err(QuantumError::Invalid(format!("W must contain H²; {} is missing", model.classes[*i].name)));
    }
    if let Some(i) = w.iter().find(|&&i| i >= n) {
        return Err(QuantumError::Invalid(format!("class index {i} out of range")));
    }
    let prod = quantum_product(model, phi)?;
    // restrict to t_k = 0 for classes outside W
    let mut drop: Vec<usize> =
        model.others().into_iter().filter(|k| !w.contains(k)).filter_map(|k| model.chart_index(k)).collect();
    drop.sort_unstable_by(|a, b| b.cmp(a));
    let restrict = |s: &Series| drop.iter().fold(s.clone(), |acc, &v| acc.at_zero(v));
    let mut fts_vars: Vec<(String, VarClass)> = Vec::new();
    let mut var_class = Vec::new();
    for (s, &i) in h2.iter().enumerate() {
        fts_vars.push((format!("q{}", s + 1), VarClass::Log));
        var_class.push(i);
    }
    let mut ws: Vec<usize> = w.iter().copied().filter(|i| !model.classes[*i].h2).collect();
    ws.sort_unstable();
    ws.dedup();
    for &i in &ws {
        fts_vars.push((format!("t{i}"), VarClass::Hol));
        var_class.push(i);
    }
    let vars = Arc::new(VariableSet::new(fts_vars).map_err(QuantumError::Series)?);
    let sample = restrict(&prod.a[0][0][0]);
    // the product does not depend on t0; 𝒰 is linear in it
    let t0_bound = sample.bounds().iter().copied().min().unwrap_or(1).max(1);
    let bounds: Vec<i32> = vars
        .names()
        .iter()
        .map(|name| sample.vars().index_of(name).map_or(t0_bound, |j| sample.bounds()[j]))
        .collect();
    let lift = |s: &Series| restrict(s).embed(&vars, &bounds);
    let mult = |i: usize| -> QuantumResult<MatrixSeries> {
        Ok(MatrixSeries::from_fn(n, n, |k, j| lift(&prod.a[i][j][k]).expect("embedding into fts chart"))?)
    };
    let zero = MatrixSeries::zero(n, n, &vars, &bounds);
    let mut higgs = Vec::with_capacity(vars.len());
    for &i in &var_class {
        higgs.push(mult(i)?.neg());
    }
    let mut u = zero.clone();
    for (s, &i) in h2.iter().enumerate() {
        u = u.add(&mult(i)?.scale(&model.c1[s]))?;
    }
    for (a, &i) in var_class.iter().enumerate().skip(h2.len()) {
        let coeff = int(1) - rat(model.classes[i].deg as i64, 2);
        let t = Series::variable(&vars, &bounds, vars.name(a))?.scale(&coeff);
        u = u.add(&mult(i)?.scale_series(&t)?)?;
    }
    let dim = int(model.dim_x as i64);
    let v = MatrixSeries::from_constant(
        &Matrix::from_fn(n, n, |i, j| if i == j { (&dim - int(model.classes[i].deg as i64)) / int(2) } else { int(0) }),
        &vars,
        &bounds,
    );
    let fts = FTSData {
        rank: n,
        vars: vars.clone(),
        rconn: vec![zero.clone(); vars.len()],
        higgs,
        u,
        v,
        g: MatrixSeries::from_constant(&model.pairing, &vars, &bounds),
        xi: (0..n).map(|i| Series::constant(&vars, &bounds, int((i == 0) as i64))).collect(),
        w: model.dim_x as i32,
        d: dim,
    };
    Ok(fts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{p1xp1_model, p2_model};

    fn key(beta: &[u32], ins: &[u32]) -> GWKey {
        GWKey { beta: beta.to_vec(), ins: ins.to_vec() }
    }

    #[test]
    fn admissibility_examples() {
        let m = p2_model();
        assert!(admissible(&m, &[1], &[4, 4]));
        assert!(!admissible(&m, &[1], &[4]));
        let keys = admissible_keys(&m, 3);
        assert_eq!(keys, vec![key(&[1], &[2]), key(&[2], &[5]), key(&[3], &[8])]);
        let k = admissible_keys(&p1xp1_model(), 2);
        assert!(k.contains(&key(&[1, 1], &[3])));
        assert!(k.contains(&key(&[1, 0], &[1])));
    }

    #[test]
    fn assemble_p2_low_degree() {
        let m = p2_model();
        let mut gw = GWTable::new();
        gw.insert(key(&[1], &[2]), int(1));
        gw.insert(key(&[2], &[5]), int(1));
        let phi = potential_assemble(&m, &gw, &[2, 5]).unwrap();
        assert_eq!(phi.quantum.to_poly_string(), "1/2*q1*t2^2 + 1/120*q1^2*t2^5");
        assert_eq!(extract_invariants(&m, &phi).unwrap(), gw);
        let empty = potential_assemble(&m, &GWTable::new(), &[2, 5]).unwrap();
        assert!(empty.quantum.is_zero());
        let mut bad = GWTable::new();
        bad.insert(key(&[1], &[1]), int(1));
        assert!(matches!(potential_assemble(&m, &bad, &[2, 5]), Err(QuantumError::Inadmissible(_))));
    }

    #[test]
    fn p2_products_at_the_origin() {
        let m = p2_model();
        let mut gw = GWTable::new();
        gw.insert(key(&[1], &[2]), int(1));
        let phi = potential_assemble(&m, &gw, &[3, 6]).unwrap();
        let p = quantum_product(&m, &phi).unwrap();
        let at = |s: &Series| s.at_zero(1);
        let q = Series::variable(&m.chart().without(1).into(), &[3], "q1").unwrap();
        // T1∗T1 = T2 + (q t2-terms); at t2 = 0 exactly T2
        assert_eq!(at(&p.a[1][1][2]), Series::constant(q.vars(), &[3], int(1)));
        assert!(at(&p.a[1][1][0]).is_zero());
        // T1∗T2 = q T0, T2∗T2 = q T1 at t2 = 0
        assert_eq!(at(&p.a[1][2][0]), q);
        assert_eq!(at(&p.a[2][2][1]), q);
        assert!(at(&p.a[2][2][0]).is_zero());
    }
}
