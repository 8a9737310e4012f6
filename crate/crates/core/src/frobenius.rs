//! Logarithmic Frobenius type structures, their (logD-trTLEP(w)) counterparts,
//! the isomorphism-case germ construction and the Frobenius-manifold axioms.
//!
//! Everything is presented in a fixed frame. The frame field attached to a
//! variable `x` is `x∂_x` when `x` is logarithmic and `∂_x` otherwise, so all
//! frame fields commute and covariant derivatives reduce to
//! `D_a + (matrix)` with `D_a` the corresponding series derivative.

use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{Matrix, Subspace};
use crate::matrix::{LaurentMatrix, MatrixSeries};
use crate::report::ConditionReport;
use crate::scalar::{int, rat, Rational};
use crate::series::{min_bounds, SeriesError, TruncatedSeries, VarClass, VariableSet};
use crate::unfolding::ConnectionForm;

pub type Series = TruncatedSeries<Rational>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrobeniusError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("malformed structure: {0}")]
    Malformed(String),
    #[error("structure fails conditions: {}", .0.join(", "))]
    ConditionsFailed(Vec<String>),
    #[error("connection has a holomorphic component along `{0}`; only logarithmic components are representable")]
    UnsupportedFrame(String),
    #[error("malformed pairing: {0}")]
    MalformedPairing(String),
    #[error("not in the isomorphism case: {0}")]
    NotIsomorphismCase(String),
}

pub type FrobeniusResult<T> = Result<T, FrobeniusError>;

/// A logarithmic Frobenius type structure `(K, ∇^r, 𝒞, 𝒰, 𝒱, g)` in a frame,
/// with a distinguished section `ξ`, weight `w` and eigenvalue datum `d`.
///
/// `rconn[a]` and `higgs[a]` are the coefficients of the frame 1-form dual to
/// variable `a` (`dt/t` for log variables, `dt` otherwise).
#[derive(Clone, Debug, PartialEq)]
pub struct FTSData {
    pub rank: usize,
    pub vars: Arc<VariableSet>,
    pub rconn: Vec<MatrixSeries>,
    pub higgs: Vec<MatrixSeries>,
    pub u: MatrixSeries,
    pub v: MatrixSeries,
    pub g: MatrixSeries,
    pub xi: Vec<Series>,
    pub w: i32,
    pub d: Rational,
}

fn malformed(msg: impl Into<String>) -> FrobeniusError {
    FrobeniusError::Malformed(msg.into())
}

impl FTSData {
    pub fn validate(&self) -> FrobeniusResult<()> {
        let n = self.rank;
        let m = self.vars.len();
        if n == 0 {
            return Err(malformed("rank must be positive"));
        }
        if self.vars.classes().contains(&VarClass::Z) {
            return Err(malformed("a Frobenius type structure has no z variable"));
        }
        if self.rconn.len() != m || self.higgs.len() != m {
            return Err(malformed(format!(
                "{} variables but {} connection and {} Higgs components",
                m,
                self.rconn.len(),
                self.higgs.len()
            )));
        }
        let all = self.rconn.iter().chain(&self.higgs).chain([&self.u, &self.v, &self.g]);
        for mat in all {
            if mat.rows() != n || mat.cols() != n {
                return Err(malformed(format!("expected {n}x{n} matrices, found {}x{}", mat.rows(), mat.cols())));
            }
            if **mat.vars() != *self.vars {
                return Err(malformed("matrix variables differ from the structure's variables"));
            }
        }
        if self.xi.len() != n {
            return Err(malformed(format!("xi has {} entries, expected {n}", self.xi.len())));
        }
        if self.xi.iter().any(|s| **s.vars() != *self.vars) {
            return Err(malformed("xi variables differ from the structure's variables"));
        }
        let g0 = self.g.constant_matrix();
        if g0 != g0.transpose() || self.g != self.g.transpose() {
            return Err(malformed("g is not symmetric"));
        }
        if g0.inverse().is_none() {
            return Err(malformed("g(0) is degenerate"));
        }
        Ok(())
    }

    /// Elementwise minimum of all component bounds.
    pub fn bounds(&self) -> Vec<i32> {
        let all = self.rconn.iter().chain(&self.higgs).chain([&self.u, &self.v, &self.g]);
        min_bounds(all.map(|m| m.bounds()).chain(self.xi.iter().map(|s| s.bounds())))
    }

    pub fn restrict_bounds(&self, b: &[i32]) -> FrobeniusResult<Self> {
        let r = |m: &MatrixSeries| m.restrict_bounds(b);
        Ok(FTSData {
            rank: self.rank,
            vars: self.vars.clone(),
            rconn: self.rconn.iter().map(r).collect::<Result<_, _>>()?,
            higgs: self.higgs.iter().map(r).collect::<Result<_, _>>()?,
            u: r(&self.u)?,
            v: r(&self.v)?,
            g: r(&self.g)?,
            xi: self.xi.iter().map(|s| s.restrict_bounds(b)).collect::<Result<_, _>>()?,
            w: self.w,
            d: self.d.clone(),
        })
    }

    /// The same structure in the frame `P` (constant): endomorphisms become
    /// `P⁻¹MP`, the pairing `PᵀGP`, and sections `P⁻¹ξ`.
    pub fn change_frame(&self, p: &Matrix) -> FrobeniusResult<Self> {
        let pinv = p.inverse().ok_or_else(|| malformed("frame change is singular"))?;
        let lift = |m: &Matrix, like: &MatrixSeries| MatrixSeries::from_constant(m, like.vars(), like.bounds());
        let conj = |m: &MatrixSeries| -> FrobeniusResult<MatrixSeries> {
            Ok(lift(&pinv, m).mul(m)?.mul(&lift(p, m))?)
        };
        let xi_m = MatrixSeries::from_entries(self.rank, 1, self.xi.clone())?;
        Ok(FTSData {
            rank: self.rank,
            vars: self.vars.clone(),
            rconn: self.rconn.iter().map(conj).collect::<Result<_, _>>()?,
            higgs: self.higgs.iter().map(conj).collect::<Result<_, _>>()?,
            u: conj(&self.u)?,
            v: conj(&self.v)?,
            g: lift(&p.transpose(), &self.g).mul(&self.g)?.mul(&lift(p, &self.g))?,
            xi: lift(&pinv, &xi_m).mul(&xi_m)?.column(0),
            w: self.w,
            d: self.d.clone(),
        })
    }
}

fn vec_as_column(v: &[Series]) -> FrobeniusResult<MatrixSeries> {
    Ok(MatrixSeries::from_entries(v.len(), 1, v.to_vec())?)
}

/// Residual report of every defining condition of a Frobenius type structure.
pub fn check_fts(fts: &FTSData) -> FrobeniusResult<ConditionReport> {
    fts.validate()?;
    let m = fts.vars.len();
    let a = &fts.rconn;
    let c = &fts.higgs;
    let d = |x: &MatrixSeries, i: usize| x.frame_derivative(i);
    let mut rep = ConditionReport::new();
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            pairs.push((i, j));
        }
    }
    let push_all = |name: &str, items: Vec<MatrixSeries>, rep: &mut ConditionReport| {
        let first_bad = items.iter().find(|x| !x.is_zero()).cloned();
        match first_bad.or_else(|| items.first().cloned()) {
            Some(mat) => rep.push_matrix(name, mat),
            None => rep.push_flag(name, true, "vacuous"),
        }
    };

    let mut flat = Vec::new();
    let mut comm = Vec::new();
    let mut fts1 = Vec::new();
    for &(i, j) in &pairs {
        flat.push(MatrixSeries::sum_common(&[d(&a[j], i)?, d(&a[i], j)?.neg(), a[i].commutator_common(&a[j])?])?);
        comm.push(c[i].commutator_common(&c[j])?);
        fts1.push(MatrixSeries::sum_common(&[
            d(&c[j], i)?,
            a[i].commutator_common(&c[j])?,
            d(&c[i], j)?.neg(),
            a[j].commutator_common(&c[i])?.neg(),
        ])?);
    }
    push_all("rconn_flat", flat, &mut rep);
    push_all("higgs_commute", comm, &mut rep);
    push_all("fts1", fts1, &mut rep);

    let mut fts2 = Vec::new();
    let mut vflat = Vec::new();
    let mut gflat = Vec::new();
    let mut gc = Vec::new();
    let mut uc = Vec::new();
    for i in 0..m {
        fts2.push(MatrixSeries::sum_common(&[
            d(&fts.u, i)?,
            a[i].commutator_common(&fts.u)?,
            c[i].commutator_common(&fts.v)?.neg(),
            c[i].clone(),
        ])?);
        vflat.push(d(&fts.v, i)?.add_common(&a[i].commutator_common(&fts.v)?)?);
        gflat.push(MatrixSeries::sum_common(&[
            d(&fts.g, i)?,
            a[i].transpose().mul_common(&fts.g)?.neg(),
            fts.g.mul_common(&a[i])?.neg(),
        ])?);
        gc.push(c[i].transpose().mul_common(&fts.g)?.sub_common(&fts.g.mul_common(&c[i])?)?);
        uc.push(fts.u.commutator_common(&c[i])?);
    }
    push_all("fts2", fts2, &mut rep);
    push_all("v_flat", vflat, &mut rep);
    push_all("g_flat", gflat, &mut rep);
    push_all("g_higgs_symmetric", gc, &mut rep);
    rep.push_matrix("g_u_symmetric", fts.u.transpose().mul(&fts.g)?.sub(&fts.g.mul(&fts.u)?)?);
    rep.push_matrix("g_v_antisymmetric", fts.v.transpose().mul(&fts.g)?.add(&fts.g.mul(&fts.v)?)?);
    push_all("higgs_u_commute", uc, &mut rep);
    Ok(rep)
}

/// A (logD-trTLEP(w))-structure: the connection form `Ω` on `ℙ¹ × M` and the
/// pairing matrix `P(z)`. `xi` and `d` ride along so that the correspondence
/// with Frobenius type structures is a bijection on the data this crate uses.
#[derive(Clone, Debug, PartialEq)]
pub struct TrTLEPData {
    pub rank: usize,
    pub omega: ConnectionForm,
    pub pmat: LaurentMatrix,
    pub w: i32,
    pub xi: Vec<Series>,
    pub d: Rational,
}

impl TrTLEPData {
    /// `P(−z)ᵀ = (−1)^w P(z)`.
    pub fn pairing_symmetric(&self) -> bool {
        let lhs = self.pmat.reflect().transpose();
        let rhs = if self.w.rem_euclid(2) == 1 { self.pmat.neg() } else { self.pmat.clone() };
        lhs == rhs
    }
}

fn half_w_identity(n: usize, w: i32, like: &MatrixSeries) -> MatrixSeries {
    MatrixSeries::identity(n, like.vars(), like.bounds()).scale(&rat(w as i64, 2))
}

/// `∇ = ∇^r + z⁻¹𝒞 + (z⁻¹𝒰 − 𝒱 + (w/2)·id) dz/z` and `P = z^w g`.
pub fn fts_to_trtlep(fts: &FTSData) -> FrobeniusResult<TrTLEPData> {
    let rep = check_fts(fts)?;
    if !rep.all_pass() {
        return Err(FrobeniusError::ConditionsFailed(rep.failures().iter().map(|s| s.to_string()).collect()));
    }
    let vars = &fts.vars;
    let mut omega = ConnectionForm::empty(fts.rank, vars.clone(), fts.u.clone(), fts.v.clone());
    for a in 0..vars.len() {
        match vars.class(a) {
            VarClass::Log => {
                omega.a_log.push(fts.rconn[a].clone());
                omega.c_log.push(fts.higgs[a].clone());
            }
            VarClass::Hol | VarClass::Unfold => {
                if !fts.rconn[a].is_zero() {
                    return Err(FrobeniusError::UnsupportedFrame(vars.name(a).to_string()));
                }
                if vars.class(a) == VarClass::Hol {
                    omega.c_hol.push(fts.higgs[a].clone());
                } else {
                    omega.f_unf.push(fts.higgs[a].clone());
                }
            }
            VarClass::Z => unreachable!("validated"),
        }
    }
    omega.v = half_w_identity(fts.rank, fts.w, &fts.v).sub(&fts.v)?;
    Ok(TrTLEPData {
        rank: fts.rank,
        omega,
        pmat: LaurentMatrix::monomial(fts.w, fts.g.clone()),
        w: fts.w,
        xi: fts.xi.clone(),
        d: fts.d.clone(),
    })
}

/// Reads `𝒞`, `𝒰`, `𝒱` and `g = z^{−w}P|_{z=0}` back from a trTLEP structure.
pub fn trtlep_to_fts(tr: &TrTLEPData) -> FrobeniusResult<FTSData> {
    let w = tr.w;
    if let Some(k) = tr.pmat.min_power() {
        if k < w {
            return Err(FrobeniusError::MalformedPairing(format!("P has a z^{k} term below z^{w}")));
        }
    }
    if !tr.pairing_symmetric() {
        return Err(FrobeniusError::MalformedPairing(format!("P(-z)^T != (-1)^{w} P(z)")));
    }
    let om = &tr.omega;
    let vars = om.vars.clone();
    let (mut il, mut ih, mut iu) = (0, 0, 0);
    let mut rconn = Vec::new();
    let mut higgs = Vec::new();
    for a in 0..vars.len() {
        let h = match vars.class(a) {
            VarClass::Log => {
                rconn.push(om.a_log[il].clone());
                il += 1;
                om.c_log[il - 1].clone()
            }
            VarClass::Hol => {
                ih += 1;
                om.c_hol[ih - 1].clone()
            }
            VarClass::Unfold => {
                iu += 1;
                om.f_unf[iu - 1].clone()
            }
            VarClass::Z => return Err(malformed("connection variables contain z")),
        };
        if vars.class(a) != VarClass::Log {
            rconn.push(MatrixSeries::zero(tr.rank, tr.rank, &vars, h.bounds()));
        }
        higgs.push(h);
    }
    let g = tr.pmat.coeff(w);
    let v = half_w_identity(tr.rank, w, &om.v).sub(&om.v)?;
    let fts = FTSData {
        rank: tr.rank,
        vars,
        rconn,
        higgs,
        u: om.u.clone(),
        v,
        g,
        xi: tr.xi.clone(),
        w,
        d: tr.d.clone(),
    };
    fts.validate()?;
    Ok(fts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    pub ic: bool,
    pub gc: bool,
    pub ec: bool,
    pub d: Rational,
    /// Rank of `X ↦ 𝒞_X ξ|₀`.
    pub ic_rank: usize,
    /// Dimension of the span generated from `ξ|₀`.
    pub gc_rank: usize,
    /// `∇^r ξ = 0`.
    pub xi_flat: bool,
}

impl HypothesisReport {
    pub fn all_hold(&self) -> bool {
        self.ic && self.gc && self.ec && self.xi_flat
    }
}

fn constant_vec(v: &[Series]) -> Vec<Rational> {
    v.iter().map(Series::constant_term).collect()
}

/// Breadth-first closure of `span(v)` under the given matrices.
pub fn closure(start: &[Rational], gens: &[Matrix]) -> Subspace {
    let n = start.len();
    let mut span = Subspace::span(n, [start.to_vec()]);
    let mut frontier = vec![start.to_vec()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for v in &frontier {
            for g in gens {
                let gv = g.mul_vec(v);
                if !span.contains(&gv) {
                    span = span.sum(&Subspace::span(n, [gv.clone()]));
                    next.push(gv);
                }
            }
        }
        frontier = next;
    }
    span
}

/// Conditions (IC), (GC), (EC) and flatness of `ξ`.
pub fn check_hypotheses(fts: &FTSData) -> FrobeniusResult<HypothesisReport> {
    fts.validate()?;
    let n = fts.rank;
    let m = fts.vars.len();
    let xi0 = constant_vec(&fts.xi);
    let cols: Vec<Vec<Rational>> = fts.higgs.iter().map(|c| c.constant_matrix().mul_vec(&xi0)).collect();
    let ic_rank = if cols.is_empty() { 0 } else { Matrix::from_cols(n, &cols).rank() };
    let mut gens: Vec<Matrix> = fts.higgs.iter().map(MatrixSeries::constant_matrix).collect();
    gens.push(fts.u.constant_matrix());
    let gc_rank = if xi0.iter().all(|x| x == &int(0)) { 0 } else { closure(&xi0, &gens).dim() };
    let xi = vec_as_column(&fts.xi)?;
    let half_d = fts.d.clone() / int(2);
    let ec = fts.v.mul(&xi)?.sub(&xi.scale(&half_d))?.is_zero();
    let mut xi_flat = true;
    for a in 0..m {
        let r = xi.frame_derivative(a)?.add_common(&fts.rconn[a].mul(&xi)?)?;
        xi_flat &= r.is_zero();
    }
    Ok(HypothesisReport { ic: ic_rank == m, gc: gc_rank == n, ec, d: fts.d.clone(), ic_rank, gc_rank, xi_flat })
}

/// A formal Frobenius manifold germ in the logarithmic frame of its
/// coordinates: `X_a ∘ X_b = Σ_c mult[a][b][c] X_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrobeniusGerm {
    pub dim: usize,
    pub vars: Arc<VariableSet>,
    pub mult: Vec<Vec<Vec<Series>>>,
    pub unit: Vec<Series>,
    pub euler: Vec<Series>,
    pub metric: MatrixSeries,
    pub d: Rational,
}

impl FrobeniusGerm {
    pub fn restrict_bounds(&self, b: &[i32]) -> FrobeniusResult<Self> {
        let r = |s: &Series| s.restrict_bounds(b);
        Ok(FrobeniusGerm {
            dim: self.dim,
            vars: self.vars.clone(),
            mult: self
                .mult
                .iter()
                .map(|x| x.iter().map(|y| y.iter().map(r).collect::<Result<Vec<_>, _>>()).collect())
                .collect::<Result<_, _>>()?,
            unit: self.unit.iter().map(r).collect::<Result<_, _>>()?,
            euler: self.euler.iter().map(r).collect::<Result<_, _>>()?,
            metric: self.metric.restrict_bounds(b)?,
            d: self.d.clone(),
        })
    }

    pub fn bounds(&self) -> Vec<i32> {
        self.metric.bounds().to_vec()
    }
}

/// `v(X∘Y) = 𝒞_X𝒞_Yξ`, `e = v⁻¹(ξ)`, `E = v⁻¹(𝒰ξ)`, `g̃ = v*g` with
/// `v(X) = −𝒞_Xξ`.
pub fn isocase_build(fts: &FTSData) -> FrobeniusResult<FrobeniusGerm> {
    fts.validate()?;
    let n = fts.rank;
    let m = fts.vars.len();
    if n != m {
        return Err(FrobeniusError::NotIsomorphismCase(format!("rank {n} but {m} base directions")));
    }
    let xi = vec_as_column(&fts.xi)?;
    let cols: Vec<MatrixSeries> = fts.higgs.iter().map(|c| c.mul(&xi).map(|v| v.neg())).collect::<Result<_, _>>()?;
    let vmat = MatrixSeries::from_fn(n, n, |i, j| cols[j].get(i, 0).clone())?;
    let vinv = vmat.invert_unit().map_err(|e| match e {
        SeriesError::NotAUnit => FrobeniusError::NotIsomorphismCase("X -> -C_X xi is not invertible at 0".into()),
        other => other.into(),
    })?;
    let mut mult = Vec::with_capacity(n);
    for a in 0..n {
        let mut row = Vec::with_capacity(n);
        for b in 0..n {
            let prod = vinv.mul(&fts.higgs[a].mul(&fts.higgs[b])?.mul(&xi)?)?;
            row.push(prod.column(0));
        }
        mult.push(row);
    }
    Ok(FrobeniusGerm {
        dim: n,
        vars: fts.vars.clone(),
        mult,
        unit: vinv.mul(&xi)?.column(0),
        euler: vinv.mul(&fts.u.mul(&xi)?)?.column(0),
        metric: vmat.transpose().mul(&fts.g)?.mul(&vmat)?,
        d: fts.d.clone(),
    })
}

struct Residual {
    terms: usize,
    first: Option<String>,
}

impl Residual {
    fn new() -> Self {
        Residual { terms: 0, first: None }
    }

    fn record(&mut self, s: &Series, at: impl FnOnce() -> String) {
        if !s.is_zero() {
            self.terms += s.len();
            if self.first.is_none() {
                let (e, c) = s.terms().next().expect("nonzero");
                self.first = Some(format!("{} at exponent {e:?}: {c}", at()));
            }
        }
    }

    fn push(self, rep: &mut ConditionReport, name: &str) {
        rep.push_count(name, self.terms, self.first.unwrap_or_default());
    }
}

fn sum_series(terms: &[Series]) -> FrobeniusResult<Series> {
    let b = min_bounds(terms.iter().map(|s| s.bounds()));
    let mut acc = Series::zero(terms[0].vars(), &b);
    for t in terms {
        acc = acc.add(&t.restrict_bounds(&b)?)?;
    }
    Ok(acc)
}

/// Residuals of the Frobenius-manifold axioms with logarithmic poles, after
/// restricting the germ to `order` when given.
pub fn check_frobenius_axioms(germ: &FrobeniusGerm, order: Option<&[i32]>) -> FrobeniusResult<ConditionReport> {
    let germ = match order {
        Some(b) => germ.restrict_bounds(&min_bounds([b, &germ.bounds()]))?,
        None => germ.clone(),
    };
    let n = germ.dim;
    let a = &germ.mult;
    let g = &germ.metric;
    let zero = Series::zero(&germ.vars, &germ.bounds());
    let d = |s: &Series, i: usize| s.frame_derivative(i);
    let mut rep = ConditionReport::new();

    let mut res = Residual::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                res.record(&a[i][j][k].sub(&a[j][i][k])?, || format!("a[{i}][{j}][{k}]"));
            }
        }
    }
    res.push(&mut rep, "commutative");

    let mut res = Residual::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for e in 0..n {
                    let mut acc = zero.clone();
                    for l in 0..n {
                        acc = acc.add(&a[i][j][l].mul(&a[l][k][e])?)?;
                        acc = acc.sub(&a[j][k][l].mul(&a[i][l][e])?)?;
                    }
                    res.record(&acc, || format!("({i},{j},{k})->{e}"));
                }
            }
        }
    }
    res.push(&mut rep, "associative");

    let mut res = Residual::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = zero.clone();
                for l in 0..n {
                    acc = acc.add(&a[i][j][l].mul(g.get(l, k))?)?;
                    acc = acc.sub(&a[j][k][l].mul(g.get(i, l))?)?;
                }
                res.record(&acc, || format!("({i},{j},{k})"));
            }
        }
    }
    res.push(&mut rep, "metric_invariant");

    let mut res = Residual::new();
    for i in 0..n {
        for j in 0..n {
            res.record(&g.get(i, j).sub(g.get(j, i))?, || format!("g[{i}][{j}]"));
        }
    }
    res.push(&mut rep, "metric_symmetric");

    let ginv = g.invert_unit().map_err(|_| FrobeniusError::Malformed("metric is degenerate at 0".into()))?;
    let dg: Vec<MatrixSeries> = (0..n).map(|i| g.frame_derivative(i)).collect::<Result<_, _>>()?;
    // gamma[a][b][c] = Γ_ab^c
    let mut gamma = vec![vec![Vec::with_capacity(n); n]; n];
    for i in 0..n {
        for j in 0..n {
            for c in 0..n {
                let mut parts = Vec::new();
                for l in 0..n {
                    let inner = sum_series(&[dg[i].get(j, l).clone(), dg[j].get(i, l).clone(), dg[l].get(i, j).neg()])?;
                    parts.push(ginv.get(c, l).mul_common(&inner)?);
                }
                gamma[i][j].push(sum_series(&parts)?.scale(&rat(1, 2)));
            }
        }
    }

    let mut res = Residual::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for e in 0..n {
                    let mut parts = vec![d(&gamma[j][k][e], i)?, d(&gamma[i][k][e], j)?.neg()];
                    for l in 0..n {
                        parts.push(gamma[j][k][l].mul_common(&gamma[i][l][e])?);
                        parts.push(gamma[i][k][l].mul_common(&gamma[j][l][e])?.neg());
                    }
                    res.record(&sum_series(&parts)?, || format!("R[{i}][{j}][{k}][{e}]"));
                }
            }
        }
    }
    res.push(&mut rep, "metric_flat");

    let mut res = Residual::new();
    for i in 0..n {
        for c in 0..n {
            let mut parts = vec![d(&germ.unit[c], i)?];
            for b in 0..n {
                parts.push(germ.unit[b].mul_common(&gamma[i][b][c])?);
            }
            res.record(&sum_series(&parts)?, || format!("nabla_{i} e^{c}"));
        }
    }
    res.push(&mut rep, "unit_flat");

    let nabla_mult = |i: usize, j: usize, k: usize, e: usize| -> FrobeniusResult<Series> {
        let mut parts = vec![d(&a[j][k][e], i)?];
        for l in 0..n {
            parts.push(a[j][k][l].mul_common(&gamma[i][l][e])?);
            parts.push(gamma[i][j][l].mul_common(&a[l][k][e])?.neg());
            parts.push(gamma[i][k][l].mul_common(&a[j][l][e])?.neg());
        }
        sum_series(&parts)
    };
    let mut res = Residual::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                for e in 0..n {
                    let r = nabla_mult(i, j, k, e)?.sub_common(&nabla_mult(j, i, k, e)?)?;
                    res.record(&r, || format!("({i},{j},{k})->{e}"));
                }
            }
        }
    }
    res.push(&mut rep, "potentiality");

    let ee = &germ.euler;
    let along_e = |s: &Series| -> FrobeniusResult<Series> {
        let parts: Vec<Series> = (0..n).map(|c| ee[c].mul_common(&d(s, c)?)).collect::<Result<_, _>>()?;
        sum_series(&parts)
    };
    let de: Vec<Vec<Series>> =
        (0..n).map(|i| (0..n).map(|c| d(&ee[c], i)).collect::<Result<_, _>>()).collect::<Result<_, _>>()?;
    let mut res = Residual::new();
    for i in 0..n {
        for j in 0..n {
            for e in 0..n {
                let mut parts = vec![along_e(&a[i][j][e])?, a[i][j][e].neg()];
                for c in 0..n {
                    parts.push(a[i][j][c].mul_common(&de[c][e])?.neg());
                    parts.push(de[i][c].mul_common(&a[c][j][e])?);
                    parts.push(de[j][c].mul_common(&a[i][c][e])?);
                }
                res.record(&sum_series(&parts)?, || format!("({i},{j})->{e}"));
            }
        }
    }
    res.push(&mut rep, "euler_product");

    let two_minus_d = int(2) - &germ.d;
    let mut res = Residual::new();
    for i in 0..n {
        for j in 0..n {
            let mut parts = vec![along_e(g.get(i, j))?, g.get(i, j).scale(&two_minus_d).neg()];
            for c in 0..n {
                parts.push(de[i][c].mul_common(g.get(c, j))?);
                parts.push(de[j][c].mul_common(g.get(i, c))?);
            }
            res.record(&sum_series(&parts)?, || format!("g[{i}][{j}]"));
        }
    }
    res.push(&mut rep, "euler_metric");

    let mut res = Residual::new();
    for j in 0..n {
        for k in 0..n {
            let mut acc = if j == k { Series::constant(&germ.vars, &germ.bounds(), int(1)) } else { zero.clone() };
            for i in 0..n {
                acc = acc.sub(&germ.unit[i].mul(&a[i][j][k])?)?;
            }
            res.record(&acc, || format!("e o X_{j} -> {k}"));
        }
    }
    res.push(&mut rep, "unit");

    rep.push_flag(
        "log_vector_fields",
        true,
        "e and E are series in the logarithmic frame, hence tangent to the divisor",
    );
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var(class: VarClass, b: i32) -> (Arc<VariableSet>, Vec<i32>) {
        (Arc::new(VariableSet::new([("t", class)]).unwrap()), vec![b])
    }

    fn scalar(v: &Arc<VariableSet>, b: &[i32], s: Series) -> MatrixSeries {
        let _ = (v, b);
        MatrixSeries::from_entries(1, 1, vec![s]).unwrap()
    }

    fn rank_one(c: i64, u: Series, v: &Arc<VariableSet>, b: &[i32]) -> FTSData {
        let k = |x: i64| Series::constant(v, b, int(x));
        FTSData {
            rank: 1,
            vars: v.clone(),
            rconn: vec![scalar(v, b, k(0))],
            higgs: vec![scalar(v, b, k(c))],
            u: scalar(v, b, u),
            v: scalar(v, b, k(0)),
            g: scalar(v, b, k(1)),
            xi: vec![k(1)],
            w: 0,
            d: int(0),
        }
    }

    #[test]
    fn rank_one_fts2() {
        let (v, b) = one_var(VarClass::Log, 3);
        let t = Series::variable(&v, &b, "t").unwrap();
        // t∂_t u = −c with c = 2t; a constant c would force u = −c log t
        let mut good = rank_one(0, t.scale(&int(-2)), &v, &b);
        good.higgs = vec![scalar(&v, &b, t.scale(&int(2)))];
        assert!(check_fts(&good).unwrap().all_pass());
        let bad = rank_one(2, Series::zero(&v, &b), &v, &b);
        let rep = check_fts(&bad).unwrap();
        let fts2 = rep.get("fts2").unwrap();
        assert!(!fts2.pass);
        assert_eq!(fts2.residual.as_ref().unwrap().get(0, 0), &Series::constant(&v, &b, int(2)));
        let h = check_hypotheses(&bad).unwrap();
        assert!(h.ic && h.gc);
    }

    #[test]
    fn rank_one_isocase() {
        let (v, b) = one_var(VarClass::Hol, 3);
        let u = Series::variable(&v, &b, "t").unwrap().scale(&int(5));
        // C ξ = −ξ, 𝒰 = u
        let mut f = rank_one(-1, u.clone(), &v, &b);
        f.u = scalar(&v, &b, u.clone());
        let germ = isocase_build(&f).unwrap();
        assert_eq!(germ.mult[0][0][0], Series::constant(&v, &b, int(1)));
        assert_eq!(germ.unit[0], Series::constant(&v, &b, int(1)));
        // E = v⁻¹(𝒰ξ) = u·∂ since v(∂) = ξ
        assert_eq!(germ.euler[0], u);
        let zero = rank_one(0, Series::zero(&v, &b), &v, &b);
        assert!(matches!(isocase_build(&zero), Err(FrobeniusError::NotIsomorphismCase(_))));
    }

    #[test]
    fn trivial_germ_euler_weight() {
        let (v, b) = one_var(VarClass::Hol, 3);
        let k = |x: i64| Series::constant(&v, &b, int(x));
        let t = Series::variable(&v, &b, "t").unwrap();
        let germ = |d: i64| FrobeniusGerm {
            dim: 1,
            vars: v.clone(),
            mult: vec![vec![vec![k(1)]]],
            unit: vec![k(1)],
            euler: vec![t.clone()],
            metric: scalar(&v, &b, k(1)),
            d: int(d),
        };
        // E = t∂_t gives Lie_E g = 2g, so d = 0.
        assert!(check_frobenius_axioms(&germ(0), None).unwrap().all_pass());
        let rep = check_frobenius_axioms(&germ(2), None).unwrap();
        assert_eq!(rep.failures(), vec!["euler_metric"]);
    }

    #[test]
    fn perturbed_metric_is_curved() {
        let v = Arc::new(VariableSet::new([("x", VarClass::Hol), ("y", VarClass::Hol)]).unwrap());
        let b = [3, 3];
        let k = |x: i64| Series::constant(&v, &b, int(x));
        let x = Series::variable(&v, &b, "x").unwrap();
        let y = Series::variable(&v, &b, "y").unwrap();
        let g = MatrixSeries::from_entries(2, 2, vec![k(1).add(&x.mul(&x).unwrap()).unwrap(), k(0), k(0), k(1).add(&x.mul(&y).unwrap()).unwrap()]).unwrap();
        let germ = FrobeniusGerm {
            dim: 2,
            vars: v.clone(),
            mult: vec![vec![vec![k(1), k(0)], vec![k(0), k(1)]], vec![vec![k(0), k(1)], vec![k(0), k(0)]]],
            unit: vec![k(1), k(0)],
            euler: vec![k(0), k(0)],
            metric: g,
            d: int(0),
        };
        let rep = check_frobenius_axioms(&germ, None).unwrap();
        assert!(!rep.get("metric_flat").unwrap().pass);
    }
}
