//! Limiting mixed Hodge structures: monodromy weight filtrations, polarization
//! checks, Deligne's `I^{p,q}`, opposite filtrations, and the passage from a
//! nilpotent orbit to a logarithmic Frobenius type structure.
//!
//! Vectors live in `ℚ(i)^n` with entrywise conjugation; the pairing `S` and
//! the monodromy logarithms `N_j` are rational. Work happens in the flat
//! (twisted) frame, where the connection is `∇ = d − Σ_j N_j dq_j/q_j`. Its
//! residues are therefore `R_j = −N_j`, and the Higgs field of the resulting
//! structure is `−N_j` in the adapted frame. Rescaling `q_j` absorbs the
//! `2πi`; no filtration or splitting depends on it.
//!
//! Where several `N_j` are given, the weight filtration and the primitive
//! decomposition use `N = Σ_j N_j`, a point of the open monodromy cone.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::frobenius::{check_fts, FTSData, FrobeniusError};
use crate::linalg::{Matrix, Subspace};
use crate::matrix::MatrixSeries;
use crate::report::ConditionReport;
use crate::scalar::{int, rat, Coeff, GaussianRational, Rational};
use crate::series::{SeriesError, TruncatedSeries, VarClass, VariableSet};
use crate::unfolding::{universal_unfold, UnfoldError, UniversalUnfolding};

pub type GQ = GaussianRational;
pub type GSubspace = Subspace<GQ>;
pub type GMatrix = Matrix<GQ>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HodgeError {
    #[error("matrix is not nilpotent")]
    NotNilpotent,
    #[error("N_{0} and N_{1} do not commute")]
    NotCommuting(usize, usize),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("not a mixed Hodge structure: {0}")]
    NotMHS(String),
    #[error("data are not split over Q(i): {0}")]
    NotSplitOverQ(String),
    #[error("Griffiths transversality fails: {0}")]
    NotGriffiths(String),
    #[error("filtrations are not opposite: {0}")]
    NotOpposite(String),
    #[error("hypothesis fails: {0}")]
    Hypothesis(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Frobenius(#[from] FrobeniusError),
    #[error(transparent)]
    Unfold(#[from] UnfoldError),
}

pub type HodgeResult<T> = Result<T, HodgeError>;

fn malformed(msg: impl Into<String>) -> HodgeError {
    HodgeError::Malformed(msg.into())
}

pub fn lift(m: &Matrix) -> GMatrix {
    m.map(|x| GQ::real(x.clone()))
}

pub fn lift_vec(v: &[Rational]) -> Vec<GQ> {
    v.iter().map(|x| GQ::real(x.clone())).collect()
}

fn real_vec(v: &[GQ]) -> Option<Vec<Rational>> {
    v.iter().map(|x| x.is_real().then(|| x.re.clone())).collect()
}

/// Rational basis of a subspace with a real canonical basis.
pub fn real_basis(s: &GSubspace) -> Option<Vec<Vec<Rational>>> {
    s.basis().iter().map(|v| real_vec(v)).collect()
}

fn bilinear(s: &Matrix, a: &[GQ], b: &[GQ]) -> GQ {
    let mut acc = GQ::zero();
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if !s[(i, j)].is_zero() && !bj.is_zero() {
                acc = acc.add(&ai.mul(bj).mul(&GQ::real(s[(i, j)].clone())));
            }
        }
    }
    acc
}

fn pairs_zero(s: &Matrix, a: &GSubspace, b: &GSubspace) -> bool {
    a.basis().iter().all(|x| b.basis().iter().all(|y| bilinear(s, x, y).is_zero()))
}

/// Sum of `parts` if it is direct.
fn direct_sum(dim: usize, parts: &[&GSubspace]) -> Option<GSubspace> {
    let total = parts.iter().fold(GSubspace::zero(dim), |acc, p| acc.sum(p));
    (total.dim() == parts.iter().map(|p| p.dim()).sum::<usize>()).then_some(total)
}

/// `(H, S, w)`: a nondegenerate `(−1)^w`-symmetric rational pairing.
#[derive(Clone, Debug, PartialEq)]
pub struct BilinearSpace {
    pub dim: usize,
    pub s: Matrix,
    pub w: i32,
}

impl BilinearSpace {
    pub fn new(s: Matrix, w: i32) -> HodgeResult<Self> {
        if !s.is_square() || s.rows() == 0 {
            return Err(malformed("S must be a nonempty square matrix"));
        }
        if s.det().is_zero() {
            return Err(malformed("S is degenerate"));
        }
        let want = if w.rem_euclid(2) == 0 { s.clone() } else { s.neg() };
        if s.transpose() != want {
            return Err(malformed(format!("S is not (-1)^{w}-symmetric")));
        }
        Ok(BilinearSpace { dim: s.rows(), s, w })
    }

    pub fn pair(&self, a: &[GQ], b: &[GQ]) -> GQ {
        bilinear(&self.s, a, b)
    }
}

/// A decreasing filtration `F^•` given on a contiguous range of indices;
/// `F^p = H` below the range and `0` above it.
#[derive(Clone, Debug, PartialEq)]
pub struct DecFiltration {
    dim: usize,
    steps: BTreeMap<i32, GSubspace>,
}

impl DecFiltration {
    pub fn new(dim: usize, steps: BTreeMap<i32, GSubspace>) -> HodgeResult<Self> {
        check_steps(dim, &steps)?;
        for (p, s) in &steps {
            if let Some(next) = steps.get(&(p + 1)) {
                if !next.is_subspace_of(s) {
                    return Err(malformed(format!("F^{} is not contained in F^{p}", p + 1)));
                }
            }
        }
        Ok(DecFiltration { dim, steps })
    }

    pub fn from_rational(dim: usize, steps: BTreeMap<i32, Vec<Vec<Rational>>>) -> HodgeResult<Self> {
        Self::new(dim, steps.into_iter().map(|(p, b)| (p, GSubspace::span(dim, b.iter().map(|v| lift_vec(v))))).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> &BTreeMap<i32, GSubspace> {
        &self.steps
    }

    pub fn get(&self, p: i32) -> GSubspace {
        let (lo, hi) = self.declared();
        if p < lo {
            GSubspace::full(self.dim)
        } else if p > hi {
            GSubspace::zero(self.dim)
        } else {
            self.steps[&p].clone()
        }
    }

    fn declared(&self) -> (i32, i32) {
        (*self.steps.keys().next().expect("nonempty"), *self.steps.keys().next_back().expect("nonempty"))
    }

    /// `(p_min, p_max)` with `F^{p_min} = H` maximal and `F^{p_max} ≠ 0` maximal.
    pub fn span_range(&self) -> (i32, i32) {
        let (lo, hi) = self.declared();
        let pmin = (lo - 1..=hi).rev().find(|&p| self.get(p).dim() == self.dim).expect("F^{lo-1} = H");
        let pmax = (lo - 1..=hi).rev().find(|&p| !self.get(p).is_zero()).unwrap_or(lo - 1);
        (pmin, pmax)
    }
}

fn check_steps(dim: usize, steps: &BTreeMap<i32, GSubspace>) -> HodgeResult<()> {
    if dim == 0 || steps.is_empty() {
        return Err(malformed("a filtration needs a positive dimension and at least one step"));
    }
    let keys: Vec<i32> = steps.keys().copied().collect();
    if keys.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(malformed("filtration indices must be contiguous"));
    }
    if steps.values().any(|s| s.ambient() != dim) {
        return Err(malformed("filtration step in the wrong ambient dimension"));
    }
    Ok(())
}

/// An increasing filtration `W_•` (or `U_•`) on a contiguous range;
/// `0` below the range and `H` above it. Stored without redundant end steps,
/// so equal filtrations compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct IncFiltration {
    dim: usize,
    steps: BTreeMap<i32, GSubspace>,
}

impl IncFiltration {
    pub fn new(dim: usize, mut steps: BTreeMap<i32, GSubspace>) -> HodgeResult<Self> {
        check_steps(dim, &steps)?;
        for (l, s) in &steps {
            if let Some(next) = steps.get(&(l + 1)) {
                if !s.is_subspace_of(next) {
                    return Err(malformed(format!("W_{l} is not contained in W_{}", l + 1)));
                }
            }
        }
        loop {
            let mut it = steps.iter();
            match (it.next(), it.next()) {
                (Some((&l, a)), Some((_, b))) if a.is_zero() && b.is_zero() => {
                    steps.remove(&l);
                }
                _ => break,
            }
        }
        loop {
            let mut it = steps.iter().rev();
            match (it.next(), it.next()) {
                (Some((&l, a)), Some((_, b))) if a.dim() == dim && b.dim() == dim => {
                    steps.remove(&l);
                }
                _ => break,
            }
        }
        Ok(IncFiltration { dim, steps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> &BTreeMap<i32, GSubspace> {
        &self.steps
    }

    pub fn range(&self) -> (i32, i32) {
        (*self.steps.keys().next().expect("nonempty"), *self.steps.keys().next_back().expect("nonempty"))
    }

    pub fn get(&self, l: i32) -> GSubspace {
        let (lo, hi) = self.range();
        if l < lo {
            GSubspace::zero(self.dim)
        } else if l > hi {
            GSubspace::full(self.dim)
        } else {
            self.steps[&l].clone()
        }
    }
}

/// The monodromy weight filtration of a nilpotent `N`, centred at `w`.
///
/// With `k` minimal such that `N^{k+1}A ⊆ B` on a subquotient `A/B`, the
/// filtration has `W_{w+k} = A`, `W_{w−k−1} = B`, and continues on
/// `(A ∩ N^{−k}B) / (N^k A + B)`.
pub fn weight_filtration(n: &Matrix, w: i32) -> HodgeResult<IncFiltration> {
    if !n.is_square() || n.rows() == 0 {
        return Err(malformed("N must be a nonempty square matrix"));
    }
    if !n.is_nilpotent() {
        return Err(HodgeError::NotNilpotent);
    }
    let dim = n.rows();
    let ng = lift(n);
    let mut steps = BTreeMap::new();
    weight_step(&ng, w, GSubspace::full(dim), GSubspace::zero(dim), None, &mut steps);
    let wf = IncFiltration::new(dim, steps)?;
    let rep = check_weight_properties(n, w, &wf);
    if !rep.all_pass() {
        return Err(HodgeError::Internal(format!("weight filtration fails {}", rep.failures().join(", "))));
    }
    Ok(wf)
}

fn weight_step(n: &GMatrix, w: i32, a: GSubspace, b: GSubspace, top: Option<i32>, steps: &mut BTreeMap<i32, GSubspace>) {
    let mut k = 0;
    let mut img = a.image(n);
    while !img.is_subspace_of(&b) {
        k += 1;
        img = img.image(n);
    }
    let top = top.unwrap_or(w + k);
    for l in w + k..=top {
        steps.insert(l, a.clone());
    }
    for l in 2 * w - top - 1..w - k {
        steps.insert(l, b.clone());
    }
    if k > 0 {
        let nk = n.pow(k as u32);
        let a2 = a.intersect(&b.preimage(&nk));
        let b2 = a.image(&nk).sum(&b);
        weight_step(n, w, a2, b2, Some(w + k - 1), steps);
    }
}

/// `N(W_l) ⊆ W_{l−2}` and `N^l : Gr_{w+l} ≅ Gr_{w−l}` for `l ≥ 0`.
pub fn check_weight_properties(n: &Matrix, w: i32, wf: &IncFiltration) -> ConditionReport {
    let ng = lift(n);
    let (lo, hi) = wf.range();
    let mut rep = ConditionReport::new();
    let bad = (lo..=hi + 2).find(|&l| !wf.get(l).image(&ng).is_subspace_of(&wf.get(l - 2)));
    rep.push_flag("n_lowers_weight", bad.is_none(), bad.map(|l| format!("N(W_{l}) not in W_{}", l - 2)).unwrap_or_default());
    let reach = (hi - w).max(w - lo).max(0) + 1;
    let bad = (0..=reach).find(|&l| !lefschetz_iso(&ng, w, l, wf));
    rep.push_flag("lefschetz_iso", bad.is_none(), bad.map(|l| format!("N^{l} on Gr_{}", w + l)).unwrap_or_default());
    rep
}

fn lefschetz_iso(n: &GMatrix, w: i32, l: i32, wf: &IncFiltration) -> bool {
    let top = wf.get(w + l);
    let gr_top = top.dim() - wf.get(w + l - 1).dim();
    let below = wf.get(w - l - 1);
    let gr_bottom = wf.get(w - l).dim() - below.dim();
    let rank = top.image(&n.pow(l as u32)).sum(&below).dim() - below.dim();
    rank == gr_top && rank == gr_bottom
}

/// All filtrations built from sums of `ker N^a ∩ im N^b` that satisfy the
/// two defining properties; an exhaustive search, independent of
/// [`weight_filtration`]. Exactly one is expected.
pub fn weight_filtration_by_search(n: &Matrix, w: i32) -> HodgeResult<Vec<IncFiltration>> {
    if !n.is_square() || !n.is_nilpotent() {
        return Err(HodgeError::NotNilpotent);
    }
    let dim = n.rows();
    let ng = lift(n);
    let mut lattice: Vec<GSubspace> = Vec::new();
    for a in 0..=dim as u32 {
        for b in 0..=dim as u32 {
            let s = GSubspace::kernel_of(&ng.pow(a)).intersect(&GSubspace::image_of(&ng.pow(b)));
            if !lattice.contains(&s) {
                lattice.push(s);
            }
        }
    }
    loop {
        let mut grown = false;
        for i in 0..lattice.len() {
            for j in i + 1..lattice.len() {
                let s = lattice[i].sum(&lattice[j]);
                if !lattice.contains(&s) {
                    lattice.push(s);
                    grown = true;
                }
            }
        }
        if !grown {
            break;
        }
    }
    let (lo, hi) = (w - dim as i32, w + dim as i32);
    let zero = lattice.iter().position(|s| s.dim() == 0).expect("zero subspace is in the lattice");
    let images: Vec<GSubspace> = lattice.iter().map(|c| c.image(&ng)).collect();
    let sub: Vec<Vec<bool>> = lattice.iter().map(|a| lattice.iter().map(|b| a.is_subspace_of(b)).collect()).collect();
    let maps: Vec<Vec<bool>> = images.iter().map(|a| lattice.iter().map(|b| a.is_subspace_of(b)).collect()).collect();
    let search = LatticeSearch { n: &ng, w, lo, hi, lattice: &lattice, sub, maps, zero };
    let mut found = Vec::new();
    search.walk(&mut Vec::new(), &mut found)?;
    Ok(found)
}

struct LatticeSearch<'a> {
    n: &'a GMatrix,
    w: i32,
    lo: i32,
    hi: i32,
    lattice: &'a [GSubspace],
    sub: Vec<Vec<bool>>,
    maps: Vec<Vec<bool>>,
    zero: usize,
}

impl LatticeSearch<'_> {
    fn walk(&self, chain: &mut Vec<usize>, found: &mut Vec<IncFiltration>) -> HodgeResult<()> {
        let dim = self.n.rows();
        let l = self.lo + chain.len() as i32;
        if l > self.hi {
            if chain.last().map_or(false, |&s| self.lattice[s].dim() == dim) {
                let steps: BTreeMap<i32, GSubspace> =
                    chain.iter().enumerate().map(|(i, &s)| (self.lo + i as i32, self.lattice[s].clone())).collect();
                let wf = IncFiltration::new(dim, steps)?;
                let reach = (self.hi - self.w).max(0) + 1;
                if (0..=reach).all(|k| lefschetz_iso(self.n, self.w, k, &wf)) {
                    found.push(wf);
                }
            }
            return Ok(());
        }
        let at = |k: i32| if k < self.lo { self.zero } else { chain[(k - self.lo) as usize] };
        let (prev, lowered) = (at(l - 1), at(l - 2));
        for c in 0..self.lattice.len() {
            if self.sub[prev][c] && self.maps[c][lowered] {
                chain.push(c);
                self.walk(chain, found)?;
                chain.pop();
            }
        }
        Ok(())
    }
}

/// `None` if every `Gr^W_k` carries a Hodge structure of weight `k`,
/// otherwise the first failing piece.
pub fn mhs_failure(f: &DecFiltration, wf: &IncFiltration) -> Option<String> {
    let (wlo, whi) = wf.range();
    let (pmin, pmax) = f.span_range();
    for k in wlo..=whi + 1 {
        let wk = wf.get(k);
        let wk1 = wf.get(k - 1);
        if wk.dim() == wk1.dim() {
            continue;
        }
        for p in pmin..=pmax + 1 {
            let a = f.get(p).intersect(&wk).sum(&wk1);
            let b = f.get(k + 1 - p).conj().intersect(&wk).sum(&wk1);
            if a.sum(&b) != wk || a.intersect(&b) != wk1 {
                return Some(format!("Gr^W_{k} at p = {p}"));
            }
        }
    }
    None
}

pub type Ipq = BTreeMap<(i32, i32), GSubspace>;

/// Deligne's splitting `I^{p,q}` of a mixed Hodge structure; only nonzero
/// pieces are kept.
pub fn deligne_splitting(f: &DecFiltration, wf: &IncFiltration) -> HodgeResult<Ipq> {
    if f.dim() != wf.dim() {
        return Err(malformed("F and W live in different dimensions"));
    }
    if let Some(at) = mhs_failure(f, wf) {
        return Err(HodgeError::NotMHS(at));
    }
    let dim = f.dim();
    let (pmin, pmax) = f.span_range();
    let wlo = wf.range().0;
    let mut out = Ipq::new();
    for p in pmin..=pmax {
        for q in pmin..=pmax {
            let l = p + q;
            let mut other = f.get(q).conj().intersect(&wf.get(l));
            let mut j = 1;
            while l - j - 1 >= wlo {
                other = other.sum(&f.get(q - j).conj().intersect(&wf.get(l - j - 1)));
                j += 1;
            }
            let piece = f.get(p).intersect(&wf.get(l)).intersect(&other);
            if !piece.is_zero() {
                out.insert((p, q), piece);
            }
        }
    }
    let total: usize = out.values().map(|s| s.dim()).sum();
    if total != dim {
        return Err(HodgeError::Internal(format!("I^(p,q) have total dimension {total}, expected {dim}")));
    }
    Ok(out)
}

/// `I₀^{p,q} = ker(N^{p+q−w+1}) ∩ I^{p,q}`, zero when `p + q < w`.
pub fn primitive_pieces(ipq: &Ipq, n: &Matrix, w: i32) -> Ipq {
    let ng = lift(n);
    ipq.iter()
        .filter_map(|(&(p, q), s)| {
            let e = p + q - w + 1;
            if e <= 0 {
                return None;
            }
            let k = s.intersect(&GSubspace::kernel_of(&ng.pow(e as u32)));
            (!k.is_zero()).then_some(((p, q), k))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Splitting {
    pub ipq: Ipq,
    pub i0pq: Ipq,
}

/// A candidate polarized mixed Hodge structure: pairing, commuting nilpotent
/// isometries `N_j`, limit Hodge filtration, and the derived weight
/// filtration and splitting. `splitting` is `None` when `(F, W)` is not a
/// mixed Hodge structure; `mhs_failure` then says where.
#[derive(Clone, Debug, PartialEq)]
pub struct PMHSData {
    pub space: BilinearSpace,
    pub nlist: Vec<Matrix>,
    pub flim: DecFiltration,
    pub weight: IncFiltration,
    pub splitting: Option<Splitting>,
    pub mhs_failure: Option<String>,
}

fn check_nilpotents(dim: usize, nlist: &[Matrix]) -> HodgeResult<()> {
    for n in nlist {
        if n.rows() != dim || n.cols() != dim {
            return Err(malformed(format!("N must be {dim}x{dim}")));
        }
        if !n.is_nilpotent() {
            return Err(HodgeError::NotNilpotent);
        }
    }
    for i in 0..nlist.len() {
        for j in i + 1..nlist.len() {
            if !nlist[i].commutator(&nlist[j]).is_zero() {
                return Err(HodgeError::NotCommuting(i + 1, j + 1));
            }
        }
    }
    Ok(())
}

fn cone_sum(dim: usize, nlist: &[Matrix], weights: Option<&[Rational]>) -> Matrix {
    nlist.iter().enumerate().fold(Matrix::zeros(dim, dim), |acc, (j, n)| match weights {
        Some(l) => acc.add(&n.scale(&l[j])),
        None => acc.add(n),
    })
}

impl PMHSData {
    pub fn new(space: BilinearSpace, nlist: Vec<Matrix>, flim: DecFiltration) -> HodgeResult<Self> {
        let dim = space.dim;
        if flim.dim() != dim {
            return Err(malformed("F lives in the wrong dimension"));
        }
        check_nilpotents(dim, &nlist)?;
        for (j, n) in nlist.iter().enumerate() {
            if !n.transpose().mul(&space.s).add(&space.s.mul(n)).is_zero() {
                return Err(malformed(format!("N_{} is not an infinitesimal isometry of S", j + 1)));
            }
        }
        let n = cone_sum(dim, &nlist, None);
        let weight = weight_filtration(&n, space.w)?;
        let (splitting, mhs_failure) = match deligne_splitting(&flim, &weight) {
            Ok(ipq) => {
                let i0pq = primitive_pieces(&ipq, &n, space.w);
                (Some(Splitting { ipq, i0pq }), None)
            }
            Err(HodgeError::NotMHS(at)) => (None, Some(at)),
            Err(e) => return Err(e),
        };
        Ok(PMHSData { space, nlist, flim, weight, splitting, mhs_failure })
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    /// `N = Σ_j N_j`.
    pub fn central_n(&self) -> Matrix {
        cone_sum(self.dim(), &self.nlist, None)
    }

    pub fn splitting(&self) -> HodgeResult<&Splitting> {
        self.splitting.as_ref().ok_or_else(|| HodgeError::NotMHS(self.mhs_failure.clone().unwrap_or_default()))
    }
}

fn flag_first<T>(rep: &mut ConditionReport, name: &str, bad: Option<T>, describe: impl Fn(T) -> String) {
    match bad {
        Some(b) => rep.push_flag(name, false, describe(b)),
        None => rep.push_flag(name, true, ""),
    }
}

/// Checks the identities satisfied by Deligne's splitting of a PMHS.
pub fn deligne_identities(pm: &PMHSData) -> HodgeResult<ConditionReport> {
    let sp = pm.splitting()?;
    let dim = pm.dim();
    let w = pm.space.w;
    let s = &pm.space.s;
    let n = lift(&pm.central_n());
    let zero = GSubspace::zero(dim);
    let i = |p: i32, q: i32| sp.ipq.get(&(p, q)).unwrap_or(&zero);
    let i0 = |p: i32, q: i32| sp.i0pq.get(&(p, q)).unwrap_or(&zero);
    let keys: Vec<(i32, i32)> = sp.ipq.keys().copied().collect();
    let (pmin, pmax) = pm.flim.span_range();
    let (wlo, whi) = pm.weight.range();
    let mut rep = ConditionReport::new();

    let bad = (pmin..=pmax + 1).find(|&p| {
        let parts: Vec<&GSubspace> = sp.ipq.iter().filter(|((a, _), _)| *a >= p).map(|(_, s)| s).collect();
        direct_sum(dim, &parts).as_ref() != Some(&pm.flim.get(p))
    });
    flag_first(&mut rep, "deligne_f", bad, |p| format!("F^{p}"));

    let bad = (wlo - 1..=whi + 1).find(|&l| {
        let parts: Vec<&GSubspace> = sp.ipq.iter().filter(|((a, b), _)| a + b <= l).map(|(_, s)| s).collect();
        direct_sum(dim, &parts).as_ref() != Some(&pm.weight.get(l))
    });
    flag_first(&mut rep, "deligne_w", bad, |l| format!("W_{l}"));

    let bad = pm.nlist.iter().enumerate().find_map(|(j, nj)| {
        let nj = lift(nj);
        keys.iter().find(|&&(p, q)| !i(p, q).image(&nj).is_subspace_of(i(p - 1, q - 1))).map(|k| (j, *k))
    });
    flag_first(&mut rep, "deligne_n", bad, |(j, (p, q))| format!("N_{}(I^({p},{q}))", j + 1));

    let bad = keys.iter().find(|&&(p, q)| {
        let mut parts = Vec::new();
        let mut nj = GMatrix::identity(dim);
        for j in 0..=dim as i32 {
            parts.push(i0(p + j, q + j).image(&nj));
            nj = n.mul(&nj);
        }
        let refs: Vec<&GSubspace> = parts.iter().collect();
        direct_sum(dim, &refs).as_ref() != Some(i(p, q))
    });
    flag_first(&mut rep, "deligne_primitive", bad, |(p, q)| format!("I^({p},{q})"));

    let bad = keys.iter().flat_map(|&a| keys.iter().map(move |&b| (a, b))).find(|&((p, q), (r, t))| {
        (r, t) != (w - p, w - q) && !pairs_zero(s, i(p, q), i(r, t))
    });
    flag_first(&mut rep, "deligne_s", bad, |((p, q), (r, t))| format!("S(I^({p},{q}), I^({r},{t}))"));

    let pkeys: Vec<(i32, i32)> = sp.i0pq.keys().copied().collect();
    let powers: Vec<GMatrix> = (0..=dim as u32).map(|k| n.pow(k)).collect();
    let mut bad = None;
    'outer: for &(p, q) in &pkeys {
        for &(r, t) in &pkeys {
            for (a, na) in powers.iter().enumerate() {
                for (b, nb) in powers.iter().enumerate() {
                    if (r, t, (a + b) as i32) == (q, p, p + q - w) {
                        continue;
                    }
                    if !pairs_zero(s, &i0(p, q).image(na), &i0(r, t).image(nb)) {
                        bad = Some(((p, q), (r, t), a, b));
                        break 'outer;
                    }
                }
            }
        }
    }
    flag_first(&mut rep, "deligne_s_primitive", bad, |((p, q), (r, t), a, b)| {
        format!("S(N^{a} I0^({p},{q}), N^{b} I0^({r},{t}))")
    });

    let conj_ok = |pieces: &dyn Fn(i32, i32) -> GSubspace, p: i32, q: i32| {
        let wl = pm.weight.get(p + q - 2);
        pieces(q, p).sum(&wl) == pieces(p, q).conj().sum(&wl)
    };
    let full = |p: i32, q: i32| i(p, q).clone();
    let prim = |p: i32, q: i32| i0(p, q).clone();
    let bad = keys.iter().find(|&&(p, q)| !conj_ok(&full, p, q));
    flag_first(&mut rep, "deligne_conj", bad, |(p, q)| format!("I^({p},{q})"));
    let bad = keys.iter().find(|&&(p, q)| !conj_ok(&prim, p, q));
    flag_first(&mut rep, "deligne_conj_primitive", bad, |(p, q)| format!("I0^({p},{q})"));
    Ok(rep)
}

/// Leading principal minors of a Hermitian matrix, all required real and positive.
fn hermitian_positive(h: &GMatrix) -> Result<bool, String> {
    for k in 1..=h.rows() {
        let idx: Vec<usize> = (0..k).collect();
        let minor = Matrix::from_fn(k, k, |a, b| h[(idx[a], idx[b])].clone()).det();
        if !minor.is_real() {
            return Err(format!("leading minor {k} is {minor}"));
        }
        if minor.re <= int(0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The PMHS conditions. The Hodge decomposition of each `Gr^W_k` is checked
/// first; positivity needs it.
pub fn check_polarization(pm: &PMHSData) -> ConditionReport {
    let w = pm.space.w;
    let s = &pm.space.s;
    let f = &pm.flim;
    let wf = &pm.weight;
    let n = lift(&pm.central_n());
    let (pmin, pmax) = f.span_range();
    let (wlo, whi) = wf.range();
    let mut rep = ConditionReport::new();

    rep.push_flag("hodge_decomposition", pm.mhs_failure.is_none(), pm.mhs_failure.clone().unwrap_or_default());

    let bad = pm.nlist.iter().enumerate().find_map(|(j, nj)| {
        let nj = lift(nj);
        (pmin..=pmax + 1).find(|&p| !f.get(p).image(&nj).is_subspace_of(&f.get(p - 1))).map(|p| (j, p))
    });
    flag_first(&mut rep, "n_transversal", bad, |(j, p)| format!("N_{}(F^{p})", j + 1));

    let bad = (pmin..=pmax + 1).find(|&p| !pairs_zero(s, &f.get(p), &f.get(w + 1 - p)));
    flag_first(&mut rep, "s_f_orthogonal", bad, |p| format!("S(F^{p}, F^{})", w + 1 - p));

    let bad = (wlo..=whi).flat_map(|a| (wlo..=whi).map(move |b| (a, b))).find(|&(a, b)| a + b < w && !pairs_zero(s, &wf.get(a), &wf.get(b)));
    flag_first(&mut rep, "s_w_orthogonal", bad, |(a, b)| format!("S(W_{a}, W_{b})"));

    // representatives of P_{w+l} inside W_{w+l}
    let prim = |l: i32| -> GSubspace {
        if l < 0 {
            return wf.get(w + l - 1);
        }
        wf.get(w + l).intersect(&wf.get(w - l - 3).preimage(&n.pow(l as u32 + 1)))
    };
    let reach = (whi - w).max(w - wlo).max(0) + 1;
    let mut decomp_bad = None;
    let mut orth_bad = None;
    for l in -reach..=reach {
        let below = wf.get(w + l - 1);
        let gr = wf.get(w + l).dim() - below.dim();
        let mut pieces = Vec::new();
        for i in (-l).max(0)..=reach {
            pieces.push((i, prim(l + 2 * i).image(&n.pow(i as u32)).sum(&below)));
        }
        let total: usize = pieces.iter().map(|(_, p)| p.dim() - below.dim()).sum();
        let span = pieces.iter().fold(below.clone(), |acc, (_, p)| acc.sum(p));
        if total != gr || span != wf.get(w + l) {
            decomp_bad.get_or_insert(l);
        }
        if l >= 0 {
            let nl = n.pow(l as u32);
            for (i, a) in &pieces {
                for (j, b) in &pieces {
                    if i != j && !pairs_zero(s, a, &b.image(&nl)) {
                        orth_bad.get_or_insert((l, *i, *j));
                    }
                }
            }
        }
    }
    flag_first(&mut rep, "primitive_decomposition", decomp_bad, |l| format!("Gr_{}", w + l));
    flag_first(&mut rep, "primitive_orthogonal", orth_bad, |(l, i, j)| format!("S_{l} between N^{i}P and N^{j}P"));

    let mut bad = None;
    'outer: for l in 0..=reach {
        let p_l = prim(l);
        let nl = n.pow(l as u32);
        for p in pmin..=pmax + 1 {
            let a = f.get(p).intersect(&p_l);
            let b = f.get(w + l + 1 - p).intersect(&p_l).image(&nl);
            if !pairs_zero(s, &a, &b) {
                bad = Some((l, p));
                break 'outer;
            }
        }
    }
    flag_first(&mut rep, "polarized_orthogonal", bad, |(l, p)| format!("S_{l}(F^p P, F^{} P) at p = {p}", w + l + 1 - p));

    match &pm.splitting {
        None => rep.push_flag("positivity", false, "requires a mixed Hodge structure"),
        Some(sp) => {
            let mut verdict: Result<(), String> = Ok(());
            for (&(p, q), piece) in &sp.i0pq {
                let l = p + q - w;
                if l < 0 {
                    continue;
                }
                let nl = n.pow(l as u32);
                let factor = GQ::i_pow((p - q) as i64);
                let basis = piece.basis();
                let h = Matrix::from_fn(basis.len(), basis.len(), |a, b| {
                    let nb: Vec<GQ> = nl.mul_vec(&basis[b].iter().map(Coeff::conj).collect::<Vec<_>>());
                    factor.mul(&bilinear(s, &basis[a], &nb))
                });
                match hermitian_positive(&h) {
                    Ok(true) => {}
                    Ok(false) => {
                        verdict = Err(format!("I0^({p},{q}) on P_{}", w + l));
                        break;
                    }
                    Err(e) => {
                        verdict = Err(HodgeError::NotSplitOverQ(format!("I0^({p},{q}): {e}")).to_string());
                        break;
                    }
                }
            }
            match verdict {
                Ok(()) => rep.push_flag("positivity", true, ""),
                Err(d) => rep.push_flag("positivity", false, d),
            }
        }
    }
    rep
}

/// `U_p = ⊕_{i ≤ p} I^{i,q}` with its oppositeness report.
#[derive(Clone, Debug, PartialEq)]
pub struct OppositeFiltration {
    pub u: IncFiltration,
    pub report: ConditionReport,
}

pub fn opposite_filtration(pm: &PMHSData) -> HodgeResult<OppositeFiltration> {
    let sp = pm.splitting()?;
    let dim = pm.dim();
    let (pmin, pmax) = pm.flim.span_range();
    let mut steps = BTreeMap::new();
    for p in pmin - 1..=pmax {
        let u = sp.ipq.iter().filter(|((i, _), _)| *i <= p).fold(GSubspace::zero(dim), |acc, (_, s)| acc.sum(s));
        steps.insert(p, u);
    }
    let u = IncFiltration::new(dim, steps)?;
    let mut report = ConditionReport::new();
    let bad = (pmin..=pmax + 1).find(|&p| {
        let (fp, up) = (pm.flim.get(p), u.get(p - 1));
        !fp.intersect(&up).is_zero() || fp.dim() + up.dim() != dim
    });
    flag_first(&mut report, "opposite", bad, |p| format!("F^{p} + U_{}", p - 1));
    let bad = pm.nlist.iter().enumerate().find_map(|(j, nj)| {
        let nj = lift(nj);
        (pmin - 1..=pmax).find(|&p| !u.get(p).image(&nj).is_subspace_of(&u.get(p - 1))).map(|p| (j, p))
    });
    flag_first(&mut report, "n_lowers_u", bad, |(j, p)| format!("N_{}(U_{p})", j + 1));
    Ok(OppositeFiltration { u, report })
}

/// Whether `W(Σ λ_j N_j)` is the same for every sample `λ`.
pub fn cone_agreement(nlist: &[Matrix], w: i32, samples: &[Vec<Rational>]) -> HodgeResult<bool> {
    let dim = nlist.first().map(|n| n.rows()).ok_or_else(|| malformed("no nilpotent matrices"))?;
    check_nilpotents(dim, nlist)?;
    let mut first: Option<IncFiltration> = None;
    for l in samples {
        if l.len() != nlist.len() || l.iter().any(|x| *x <= int(0)) {
            return Err(malformed("cone samples need one positive weight per N_j"));
        }
        let wf = weight_filtration(&cone_sum(dim, nlist, Some(l)), w)?;
        match &first {
            None => first = Some(wf),
            Some(f) if *f != wf => return Ok(false),
            Some(_) => {}
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq)]
pub struct H2Generation {
    /// `⊕_p F^p/F^{p+1}` is reached from `F^top` by words in the `N_j`.
    pub generated: bool,
    /// `dim F^{top−1} = 1 + #N_j`.
    pub rank_condition: bool,
}

pub fn h2_generation(flim: &DecFiltration, nlist: &[Matrix]) -> HodgeResult<H2Generation> {
    let dim = flim.dim();
    check_nilpotents(dim, nlist)?;
    let (pmin, top) = flim.span_range();
    let ftop = flim.get(top);
    if ftop.dim() != 1 {
        return Err(HodgeError::Hypothesis(format!("dim F^{top} = {}, expected 1", ftop.dim())));
    }
    let ns: Vec<GMatrix> = nlist.iter().map(lift).collect();
    let mut level = vec![ftop.basis()[0].clone()];
    let mut generated = true;
    for p in (pmin..=top).rev() {
        let reached = GSubspace::span(dim, level.iter().cloned()).sum(&flim.get(p + 1));
        if !flim.get(p).is_subspace_of(&reached) {
            generated = false;
            break;
        }
        level = level.iter().flat_map(|v| ns.iter().map(move |n| n.mul_vec(v))).collect();
        level = GSubspace::span(dim, level).basis().to_vec();
    }
    let rank_condition = flim.get(top - 1).dim() == 1 + nlist.len();
    Ok(H2Generation { generated, rank_condition })
}

/// A variation of the Hodge filtration over the log variables `q_1..q_r`:
/// `steps[p]` has columns spanning `F^p(q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FFamily {
    pub steps: BTreeMap<i32, MatrixSeries>,
}

fn q_vars(r: usize) -> Arc<VariableSet> {
    Arc::new(VariableSet::new((1..=r).map(|j| (format!("q{j}"), VarClass::Log))).expect("distinct names"))
}

/// The logarithmic Frobenius type structure of a nilpotent orbit (or of an
/// explicit family `F(q)`), in the frame adapted to `⊕_p F^p ∩ U_p` ordered by
/// decreasing `p`: `∇^r` is the block-diagonal part, the Higgs field the
/// block-subdiagonal part, `𝒰 = 0`, `𝒱 = p − w/2` on the `p`-th block and
/// `g = (−1)^p S` there. `ξ` is the first frame vector and `d = w`.
pub fn split_connection(pm: &PMHSData, family: Option<&FFamily>, bound: i32) -> HodgeResult<FTSData> {
    let sp = pm.splitting()?;
    let opp = opposite_filtration(pm)?;
    if !opp.report.all_pass() {
        return Err(HodgeError::NotOpposite(opp.report.failures().join(", ")));
    }
    let dim = pm.dim();
    let r = pm.nlist.len();
    let w = pm.space.w;
    let vars = q_vars(r);
    let bounds = vec![bound; r];
    let (pmin, pmax) = pm.flim.span_range();

    if let Some(fam) = family {
        for (p, m) in &fam.steps {
            if **m.vars() != *vars {
                return Err(malformed(format!("F^{p}(q) must use the variables q1..q{r}")));
            }
            let at0 = GSubspace::col_span(&lift(&m.constant_matrix()));
            if at0 != pm.flim.get(*p) || m.cols() != at0.dim() {
                return Err(malformed(format!("F^{p}(q) does not restrict to a basis of F^{p}_lim")));
            }
        }
    }

    let mut frame: Vec<Vec<TruncatedSeries<Rational>>> = Vec::new();
    let mut grades = Vec::new();
    for p in (pmin..=pmax).rev() {
        let piece = sp.ipq.iter().filter(|((i, _), _)| *i == p).fold(GSubspace::zero(dim), |acc, (_, s)| acc.sum(s));
        let basis = real_basis(&piece).ok_or_else(|| HodgeError::NotSplitOverQ(format!("F^{p} ∩ U_{p}")))?;
        let fam_step = family.and_then(|fam| fam.steps.get(&p)).filter(|_| p > pmin);
        for e in basis {
            let col = match fam_step {
                None => e.iter().map(|x| TruncatedSeries::constant(&vars, &bounds, x.clone())).collect(),
                Some(b) => {
                    let b = b.restrict_bounds(&bounds)?;
                    let ub = real_basis(&opp.u.get(p - 1)).ok_or_else(|| HodgeError::NotSplitOverQ(format!("U_{}", p - 1)))?;
                    let k = b.cols();
                    if k + ub.len() != dim {
                        return Err(HodgeError::NotOpposite(format!("dim F^{p} + dim U_{} != {dim}", p - 1)));
                    }
                    let m = MatrixSeries::from_fn(dim, dim, |i, j| {
                        if j < k {
                            b.get(i, j).clone()
                        } else {
                            TruncatedSeries::constant(&vars, &bounds, ub[j - k][i].clone())
                        }
                    })?;
                    let rhs: Vec<_> = e.iter().map(|x| TruncatedSeries::constant(&vars, &bounds, x.clone())).collect();
                    let x = m.solve_unit(&rhs).map_err(|_| HodgeError::NotOpposite(format!("F^{p}(0) + U_{}", p - 1)))?;
                    b.mul_vec(&x[..k])?
                }
            };
            frame.push(col);
            grades.push(p);
        }
    }
    let phi = MatrixSeries::from_fn(dim, dim, |i, j| frame[j][i].clone())?;
    let phi_inv = phi.invert_unit().map_err(|_| HodgeError::NotOpposite("adapted frame is degenerate".into()))?;

    let mut rconn = Vec::with_capacity(r);
    let mut higgs = Vec::with_capacity(r);
    for (j, nj) in pm.nlist.iter().enumerate() {
        let nphi = MatrixSeries::from_constant(nj, &vars, &bounds).mul(&phi)?;
        let omega = phi_inv.mul_common(&phi.frame_derivative(j)?.sub_common(&nphi)?)?;
        let zero = TruncatedSeries::zero(omega.vars(), omega.bounds());
        for a in 0..dim {
            for b in 0..dim {
                let x = omega.get(a, b);
                if x.is_zero() {
                    continue;
                }
                if grades[a] < grades[b] - 1 {
                    return Err(HodgeError::NotGriffiths(format!("∇_(q{}) maps F^{} past F^{}", j + 1, grades[b], grades[b] - 1)));
                }
                if grades[a] > grades[b] {
                    return Err(HodgeError::NotOpposite(format!("∇_(q{}) does not preserve U_{}", j + 1, grades[b])));
                }
            }
        }
        rconn.push(MatrixSeries::from_fn(dim, dim, |a, b| if grades[a] == grades[b] { omega.get(a, b).clone() } else { zero.clone() })?);
        higgs.push(MatrixSeries::from_fn(dim, dim, |a, b| if grades[a] + 1 == grades[b] { omega.get(a, b).clone() } else { zero.clone() })?);
    }
    let b = crate::series::min_bounds(rconn.iter().chain(&higgs).map(|m| m.bounds()).chain([phi.bounds()]));
    let rconn = rconn.iter().map(|m| m.restrict_bounds(&b)).collect::<Result<Vec<_>, _>>()?;
    let higgs = higgs.iter().map(|m| m.restrict_bounds(&b)).collect::<Result<Vec<_>, _>>()?;
    let phi = phi.restrict_bounds(&b)?;
    let v = MatrixSeries::from_constant(&Matrix::from_fn(dim, dim, |a, c| if a == c { int(grades[a] as i64) - rat(w as i64, 2) } else { int(0) }), &vars, &b);
    let sgn = MatrixSeries::from_constant(&Matrix::from_fn(dim, dim, |a, c| if a == c { int(if grades[a].rem_euclid(2) == 0 { 1 } else { -1 }) } else { int(0) }), &vars, &b);
    let smat = MatrixSeries::from_constant(&pm.space.s, &vars, &b);
    let g = sgn.mul(&phi.transpose().mul(&smat)?.mul(&phi)?)?;
    let xi = (0..dim).map(|a| TruncatedSeries::constant(&vars, &b, int((a == 0) as i64))).collect();
    Ok(FTSData { rank: dim, u: MatrixSeries::zero(dim, dim, &vars, &b), vars, rconn, higgs, v, g, xi, w, d: int(w as i64) })
}

/// `check_fts` plus the properties specific to structures from a PMHS:
/// `𝒰 = 0`, `spec(𝒱) ⊆ w/2 + ℤ`, vanishing `∇^r` residues, and
/// `dim ker(𝒱 − (w/2 − 1)) = dim M`.
pub fn split_checks(fts: &FTSData) -> HodgeResult<ConditionReport> {
    let mut rep = check_fts(fts)?;
    rep.push_matrix("u_zero", fts.u.clone());
    let v0 = fts.v.constant_matrix();
    let half = rat(fts.w as i64, 2);
    let diag_ok = fts.v.entries().iter().all(|e| e.is_constant())
        && (0..fts.rank).all(|a| (0..fts.rank).all(|c| a == c || v0[(a, c)].is_zero()))
        && (0..fts.rank).all(|a| (&v0[(a, a)] - &half).is_integer());
    rep.push_flag("v_spectrum", diag_ok, if diag_ok { String::new() } else { format!("V(0) = {v0:?}") });
    let residues: Vec<MatrixSeries> = fts.rconn.iter().enumerate().map(|(j, a)| a.at_zero(j)).collect();
    match residues.iter().find(|m| !m.is_zero()).or_else(|| residues.first()) {
        Some(m) => rep.push_matrix("rconn_residues", m.clone()),
        None => rep.push_flag("rconn_residues", true, "no logarithmic variables"),
    }
    let shifted = v0.sub(&Matrix::identity(fts.rank).scale(&(&half - int(1))));
    let kernel = fts.rank - shifted.rank();
    rep.push_flag(
        "euler_kernel",
        kernel == fts.vars.len(),
        format!("dim ker(V - (w/2 - 1)) = {kernel}, dim M = {}", fts.vars.len()),
    );
    Ok(rep)
}

/// The result of running a PMHS through to a Frobenius manifold germ.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub fts: FTSData,
    pub checks: ConditionReport,
    pub h2: H2Generation,
    pub unfolding: UniversalUnfolding,
}

/// PMHS → Frobenius type structure → universal unfolding, with every
/// unfolding parameter solved to `order`.
pub fn vphs_to_frobenius(pm: &PMHSData, family: Option<&FFamily>, bound: i32, order: u32) -> HodgeResult<PipelineOutput> {
    let h2 = h2_generation(&pm.flim, &pm.nlist)?;
    if !h2.generated {
        return Err(HodgeError::Hypothesis("F^top and its N-images do not generate".into()));
    }
    let fts = split_connection(pm, family, bound)?;
    let checks = split_checks(&fts)?;
    if !checks.all_pass() {
        return Err(HodgeError::Internal(format!("split structure fails {}", checks.failures().join(", "))));
    }
    let l = fts.rank - fts.vars.len();
    let unfolding = universal_unfold(&fts, &vec![order; l])?;
    Ok(PipelineOutput { fts, checks, h2, unfolding })
}
