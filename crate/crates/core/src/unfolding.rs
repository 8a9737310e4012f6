//! Flat logarithmic connection forms on `ℙ¹ × M × (ℂ^l, 0)` and their
//! unfoldings.
//!
//! A [`ConnectionForm`] stores the matrices of
//!
//! ```text
//! Ω = Σ_i (A_i + C_i/z) dt_i/t_i + Σ_k C_k/z dt_k + Σ_α F_α/z dy_α + (U/z² + V/z) dz
//! ```
//!
//! with `i` over log variables, `k` over holomorphic ones and `α` over
//! unfolding parameters. The spectral parameter `z` is implicit.

use std::sync::Arc;

use thiserror::Error;

use crate::frobenius::{
    check_fts, check_frobenius_axioms, check_hypotheses, fts_to_trtlep, isocase_build, trtlep_to_fts, FTSData,
    FrobeniusError, FrobeniusGerm, TrTLEPData,
};
use crate::linalg::{Matrix, Subspace};
use crate::matrix::{LaurentMatrix, MatrixSeries};
use crate::report::ConditionReport;
use crate::scalar::{int, Rational};
use crate::series::{min_bounds, SeriesError, TruncatedSeries, VarClass, VariableSet};

type Series = TruncatedSeries<Rational>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnfoldError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Frobenius(#[from] FrobeniusError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("words in the generators do not span at order {order} in `{variable}`: rank {rank} of {needed}")]
    GenerationFailure { variable: String, order: u32, rank: usize, needed: usize },
    #[error("unfolded connection is not flat: {}", .0.join(", "))]
    InternalConsistency(Vec<String>),
    #[error("pairing leaves z^w O at order {order} in `{variable}` (nonzero z^{power} coefficient)")]
    PairingEscape { variable: String, order: u32, power: i32 },
    #[error("hypothesis fails: {0}")]
    Hypothesis(String),
    #[error("germ fails Frobenius axioms: {}", .0.join(", "))]
    AxiomsFailed(Vec<String>),
}

pub type UnfoldResult<T> = Result<T, UnfoldError>;

fn invalid(msg: impl Into<String>) -> UnfoldError {
    UnfoldError::Invalid(msg.into())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionForm {
    pub rank: usize,
    /// Coordinates of `M × (ℂ^l, 0)`; `z` is not listed.
    pub vars: Arc<VariableSet>,
    pub a_log: Vec<MatrixSeries>,
    pub c_log: Vec<MatrixSeries>,
    pub c_hol: Vec<MatrixSeries>,
    pub f_unf: Vec<MatrixSeries>,
    pub u: MatrixSeries,
    pub v: MatrixSeries,
}

impl ConnectionForm {
    /// A form with only `U` and `V` set; callers push the remaining parts.
    pub fn empty(rank: usize, vars: Arc<VariableSet>, u: MatrixSeries, v: MatrixSeries) -> Self {
        ConnectionForm { rank, vars, a_log: vec![], c_log: vec![], c_hol: vec![], f_unf: vec![], u, v }
    }

    /// `Ω = 0`.
    pub fn zero(rank: usize, vars: Arc<VariableSet>, bounds: &[i32]) -> Self {
        let z = MatrixSeries::zero(rank, rank, &vars, bounds);
        let count = |c| vars.indices_of(c).len();
        ConnectionForm {
            rank,
            a_log: vec![z.clone(); count(VarClass::Log)],
            c_log: vec![z.clone(); count(VarClass::Log)],
            c_hol: vec![z.clone(); count(VarClass::Hol)],
            f_unf: vec![z.clone(); count(VarClass::Unfold)],
            u: z.clone(),
            v: z,
            vars,
        }
    }

    pub fn matrices(&self) -> impl Iterator<Item = &MatrixSeries> {
        self.a_log.iter().chain(&self.c_log).chain(&self.c_hol).chain(&self.f_unf).chain([&self.u, &self.v])
    }

    pub fn validate(&self) -> UnfoldResult<()> {
        let n = self.rank;
        if n == 0 {
            return Err(invalid("rank must be positive"));
        }
        if self.vars.classes().contains(&VarClass::Z) {
            return Err(invalid("component matrices must not depend on z"));
        }
        let count = |c| self.vars.indices_of(c).len();
        if self.a_log.len() != count(VarClass::Log)
            || self.c_log.len() != count(VarClass::Log)
            || self.c_hol.len() != count(VarClass::Hol)
            || self.f_unf.len() != count(VarClass::Unfold)
        {
            return Err(invalid("component counts do not match variable classes"));
        }
        for m in self.matrices() {
            if m.rows() != n || m.cols() != n {
                return Err(invalid(format!("expected {n}x{n} matrices, found {}x{}", m.rows(), m.cols())));
            }
            if **m.vars() != *self.vars {
                return Err(invalid("component variables differ from the form's variables"));
            }
        }
        Ok(())
    }

    pub fn bounds(&self) -> Vec<i32> {
        min_bounds(self.matrices().map(|m| m.bounds()))
    }

    pub fn map(&self, f: impl Fn(&MatrixSeries) -> Result<MatrixSeries, SeriesError>) -> UnfoldResult<Self> {
        let all = |v: &[MatrixSeries]| v.iter().map(&f).collect::<Result<Vec<_>, _>>();
        Ok(ConnectionForm {
            rank: self.rank,
            vars: self.vars.clone(),
            a_log: all(&self.a_log)?,
            c_log: all(&self.c_log)?,
            c_hol: all(&self.c_hol)?,
            f_unf: all(&self.f_unf)?,
            u: f(&self.u)?,
            v: f(&self.v)?,
        })
    }

    pub fn restrict_bounds(&self, b: &[i32]) -> UnfoldResult<Self> {
        self.map(|m| m.restrict_bounds(b))
    }

    /// Every component restricted to the common bounds.
    pub fn uniform(&self) -> UnfoldResult<Self> {
        self.restrict_bounds(&self.bounds())
    }

    /// Restriction to `y = 0` for the unfolding variable at index `i`.
    pub fn at_zero(&self, i: usize) -> UnfoldResult<Self> {
        if self.vars.class(i) != VarClass::Unfold {
            return Err(invalid(format!("`{}` is not an unfolding variable", self.vars.name(i))));
        }
        let pos = self.vars.indices_of(VarClass::Unfold).iter().position(|&j| j == i).expect("unfold index");
        let mut out = ConnectionForm {
            rank: self.rank,
            vars: Arc::new(self.vars.without(i)),
            a_log: self.a_log.iter().map(|m| m.at_zero(i)).collect(),
            c_log: self.c_log.iter().map(|m| m.at_zero(i)).collect(),
            c_hol: self.c_hol.iter().map(|m| m.at_zero(i)).collect(),
            f_unf: self.f_unf.iter().map(|m| m.at_zero(i)).collect(),
            u: self.u.at_zero(i),
            v: self.v.at_zero(i),
        };
        out.f_unf.remove(pos);
        Ok(out)
    }

    /// Restriction to `y = 0` for all unfolding variables.
    pub fn base_restriction(&self) -> UnfoldResult<Self> {
        let mut out = self.clone();
        while let Some(&i) = out.vars.indices_of(VarClass::Unfold).last() {
            out = out.at_zero(i)?;
        }
        Ok(out)
    }

    /// The Higgs-type coefficient (`C_i`, `C_k` or `F_α`) of variable `a`.
    pub fn higgs_for(&self, a: usize) -> &MatrixSeries {
        let class = self.vars.class(a);
        let pos = self.vars.indices_of(class).iter().position(|&j| j == a).expect("variable index");
        match class {
            VarClass::Log => &self.c_log[pos],
            VarClass::Hol => &self.c_hol[pos],
            VarClass::Unfold => &self.f_unf[pos],
            VarClass::Z => unreachable!("no z components"),
        }
    }
}

fn sum(terms: &[MatrixSeries]) -> UnfoldResult<MatrixSeries> {
    Ok(MatrixSeries::sum_common(terms)?)
}

/// Pushes the first nonzero instance of a family of residuals, or the first
/// instance when all vanish.
fn push_family(rep: &mut ConditionReport, name: &str, items: Vec<MatrixSeries>) {
    let bad = items.iter().position(|m| !m.is_zero()).unwrap_or(0);
    match items.into_iter().nth(bad) {
        Some(m) => rep.push_matrix(name, m),
        None => rep.push_flag(name, true, "no instances"),
    }
}

/// Names of the residual families reported by [`flatness_residuals`], in order.
pub const FLATNESS_RESIDUALS: [&str; 20] = [
    "A_log_hol",
    "A_log_unf",
    "A_log_log",
    "C_commute",
    "C_F_commute",
    "F_commute",
    "C_log_log",
    "C_log_hol",
    "C_hol_hol",
    "C_log_unf",
    "C_hol_unf",
    "F_unf_unf",
    "U_C_commute",
    "U_F_commute",
    "U_log",
    "U_hol",
    "U_unf",
    "V_log",
    "V_hol",
    "V_unf",
];

/// The coefficient equations of `dΩ + Ω∧Ω = 0`, one residual family each.
pub fn flatness_residuals(om: &ConnectionForm) -> UnfoldResult<ConditionReport> {
    om.validate()?;
    let vars = &om.vars;
    let li = vars.indices_of(VarClass::Log);
    let hi = vars.indices_of(VarClass::Hol);
    let yi = vars.indices_of(VarClass::Unfold);
    let (a, cl, ch, f, u, v) = (&om.a_log, &om.c_log, &om.c_hol, &om.f_unf, &om.u, &om.v);
    let dl = |m: &MatrixSeries, i: usize| m.log_derivative(li[i]);
    let dh = |m: &MatrixSeries, k: usize| m.partial_derivative(hi[k]);
    let dy = |m: &MatrixSeries, al: usize| m.partial_derivative(yi[al]);
    let higgs: Vec<&MatrixSeries> = cl.iter().chain(ch.iter()).collect();

    let mut fam: Vec<Vec<MatrixSeries>> = vec![Vec::new(); FLATNESS_RESIDUALS.len()];
    for i in 0..li.len() {
        for k in 0..hi.len() {
            fam[0].push(dh(&a[i], k)?);
            fam[7].push(sum(&[dh(&cl[i], k)?, dl(&ch[k], i)?.neg(), a[i].commutator_common(&ch[k])?.neg()])?);
        }
        for al in 0..yi.len() {
            fam[1].push(dy(&a[i], al)?);
            fam[9].push(sum(&[dy(&cl[i], al)?, dl(&f[al], i)?.neg(), a[i].commutator_common(&f[al])?.neg()])?);
        }
        for j in i + 1..li.len() {
            fam[2].push(sum(&[a[i].commutator_common(&a[j])?, dl(&a[j], i)?, dl(&a[i], j)?.neg()])?);
            fam[6].push(sum(&[
                dl(&cl[i], j)?,
                a[j].commutator_common(&cl[i])?,
                dl(&cl[j], i)?.neg(),
                a[i].commutator_common(&cl[j])?.neg(),
            ])?);
        }
        fam[14].push(sum(&[dl(u, i)?, v.commutator_common(&cl[i])?.neg(), cl[i].clone(), u.commutator_common(&a[i])?.neg()])?);
        fam[17].push(sum(&[dl(v, i)?, v.commutator_common(&a[i])?.neg()])?);
    }
    for x in 0..higgs.len() {
        for y in x + 1..higgs.len() {
            fam[3].push(higgs[x].commutator_common(higgs[y])?);
        }
        for al in 0..yi.len() {
            fam[4].push(higgs[x].commutator_common(&f[al])?);
        }
        fam[12].push(u.commutator_common(higgs[x])?);
    }
    for k in 0..hi.len() {
        for l in k + 1..hi.len() {
            fam[8].push(sum(&[dh(&ch[l], k)?, dh(&ch[k], l)?.neg()])?);
        }
        for al in 0..yi.len() {
            fam[10].push(sum(&[dy(&ch[k], al)?, dh(&f[al], k)?.neg()])?);
        }
        fam[15].push(sum(&[dh(u, k)?, v.commutator_common(&ch[k])?.neg(), ch[k].clone()])?);
        fam[18].push(dh(v, k)?);
    }
    for al in 0..yi.len() {
        for be in al + 1..yi.len() {
            fam[5].push(f[al].commutator_common(&f[be])?);
            fam[11].push(sum(&[dy(&f[al], be)?, dy(&f[be], al)?.neg()])?);
        }
        fam[13].push(u.commutator_common(&f[al])?);
        fam[16].push(sum(&[dy(u, al)?, v.commutator_common(&f[al])?.neg(), f[al].clone()])?);
        fam[19].push(dy(v, al)?);
    }
    let mut rep = ConditionReport::new();
    for (name, items) in FLATNESS_RESIDUALS.iter().zip(fam) {
        push_family(&mut rep, name, items);
    }
    Ok(rep)
}

/// Extension data for an unfolding: `dfs[α][i] = ∂f_i/∂y_α`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnfoldingProblem {
    pub base: ConnectionForm,
    pub unfold_vars: Vec<String>,
    pub dfs: Vec<Vec<Series>>,
    pub order: Vec<u32>,
}

/// Matrices that generate the algebra acting on the first basis vector:
/// `C_i`, `C_k`, `U`.
fn generators(om: &ConnectionForm) -> Vec<MatrixSeries> {
    om.c_log.iter().chain(&om.c_hol).chain([&om.u]).cloned().collect()
}

/// Non-decreasing index sequences over `g` generators, breadth first, until
/// the first columns of the corresponding constant products span `ℚ^n`.
/// Returns the chosen words and the rank reached.
pub fn spanning_words(gens: &[Matrix], n: usize, max_len: usize) -> (Vec<Vec<usize>>, usize) {
    let e1: Vec<Rational> = (0..n).map(|i| int((i == 0) as i64)).collect();
    let mut span = Subspace::<Rational>::zero(n);
    let mut chosen = Vec::new();
    let mut level: Vec<(Vec<usize>, Vec<Rational>)> = vec![(vec![], e1)];
    for _ in 0..=max_len {
        let mut next = Vec::new();
        for (word, col) in &level {
            if !span.contains(col) {
                span = span.sum(&Subspace::span(n, [col.clone()]));
                chosen.push(word.clone());
                if span.dim() == n {
                    return (chosen, n);
                }
            }
            let start = word.last().copied().unwrap_or(0);
            for (g, m) in gens.iter().enumerate().skip(start) {
                let mut w = word.clone();
                w.push(g);
                next.push((w, m.mul_vec(col)));
            }
        }
        level = next;
    }
    let rank = span.dim();
    (chosen, rank)
}

/// The product `G_{w_0} ⋯ G_{w_k}` (the identity for the empty word).
fn word_matrix(word: &[usize], gens: &[MatrixSeries]) -> UnfoldResult<MatrixSeries> {
    let g0 = &gens[0];
    let mut acc = MatrixSeries::identity(g0.rows(), g0.vars(), g0.bounds());
    for &g in word {
        acc = acc.mul(&gens[g])?;
    }
    Ok(acc)
}

/// The unique matrix in the algebra spanned by `words` whose first column is `col`.
fn matrix_with_first_column(words: &[MatrixSeries], col: &[Series]) -> UnfoldResult<MatrixSeries> {
    let n = words.len();
    let gamma = MatrixSeries::from_fn(n, n, |i, j| words[j].get(i, 0).clone())?;
    let c = gamma.solve_unit(col)?;
    let mut acc = MatrixSeries::zero(n, n, gamma.vars(), gamma.bounds());
    for (w, cj) in words.iter().zip(&c) {
        acc = acc.add(&w.scale_series(cj)?)?;
    }
    Ok(acc)
}

fn with_bound(b: &[i32], i: usize, v: i32) -> Vec<i32> {
    let mut out = b.to_vec();
    out[i] = v;
    out
}

/// The unique flat extension of `base` over `y_1, …, y_l` whose unfolding
/// matrices have first columns `dfs`, constructed order by order in each
/// `y_α` in turn.
pub fn solve_unfolding(p: &UnfoldingProblem) -> UnfoldResult<ConnectionForm> {
    let base = &p.base;
    base.validate()?;
    let n = base.rank;
    let l = p.unfold_vars.len();
    if !base.vars.indices_of(VarClass::Unfold).is_empty() {
        return Err(invalid("base already has unfolding variables"));
    }
    if p.dfs.len() != l || p.order.len() != l {
        return Err(invalid(format!(
            "{l} unfolding variables but {} df vectors and {} orders",
            p.dfs.len(),
            p.order.len()
        )));
    }
    let flat = flatness_residuals(base)?;
    if !flat.all_pass() {
        return Err(invalid(format!("base connection is not flat: {}", flat.failures().join(", "))));
    }

    let mut vs = (*base.vars).clone();
    for y in &p.unfold_vars {
        vs = vs.with(y.clone(), VarClass::Unfold)?;
    }
    let vars = Arc::new(vs);
    let m = base.vars.len();
    let yidx: Vec<usize> = (m..m + l).collect();
    let base_b = base.bounds();
    let target: Vec<i32> = base_b.iter().copied().chain(p.order.iter().map(|&k| k as i32)).collect();

    let mut dfs: Vec<Vec<Series>> = Vec::with_capacity(l);
    for (al, col) in p.dfs.iter().enumerate() {
        if col.len() != n {
            return Err(invalid(format!("df vector {al} has length {}, expected {n}", col.len())));
        }
        let mut out = Vec::with_capacity(n);
        for s in col {
            let mut b = target.clone();
            for (k, name) in s.vars().names().iter().enumerate() {
                let j = vars.require(name)?;
                b[j] = b[j].min(s.bounds()[k]);
            }
            if (0..l).any(|a| b[m + a] < target[m + a]) {
                return Err(invalid(format!("df vector {al} is truncated below the requested order")));
            }
            out.push(s.embed(&vars, &b)?);
        }
        let common = min_bounds(out.iter().map(|s| s.bounds()));
        dfs.push(out.iter().map(|s| s.restrict_bounds(&common)).collect::<Result<_, _>>()?);
    }
    for a in 0..l {
        for b in a + 1..l {
            for i in 0..n {
                let lhs = dfs[a][i].partial_derivative(yidx[b])?;
                let rhs = dfs[b][i].partial_derivative(yidx[a])?;
                if !lhs.sub_common(&rhs)?.is_zero() {
                    return Err(invalid(format!(
                        "df vectors are not closed: d/d{} df_{a} != d/d{} df_{b} in component {i}",
                        p.unfold_vars[b], p.unfold_vars[a]
                    )));
                }
            }
        }
    }

    let start_b: Vec<i32> = base_b.iter().copied().chain(std::iter::repeat(0).take(l)).collect();
    let mut om = base.map(|mat| mat.embed(&vars, &start_b))?;
    om.vars = vars.clone();
    let const_gens: Vec<Matrix> = generators(base).iter().map(MatrixSeries::constant_matrix).collect();
    let (words, rank) = spanning_words(&const_gens, n, n * n);
    if rank < n {
        return Err(UnfoldError::GenerationFailure {
            variable: p.unfold_vars.first().cloned().unwrap_or_default(),
            order: 0,
            rank,
            needed: n,
        });
    }
    let li = vars.indices_of(VarClass::Log);
    let hi = vars.indices_of(VarClass::Hol);

    for al in 0..l {
        let y = yidx[al];
        let k_max = p.order[al];
        let raise = |mat: &MatrixSeries| mat.raise_bounds(&with_bound(mat.bounds(), y, k_max as i32));
        om = om.map(|mat| Ok(raise(mat)))?;
        om.f_unf.resize(al + 1, MatrixSeries::zero(n, n, &vars, &om.u.bounds().to_vec()));
        for w in 0..=k_max {
            let bw = with_bound(&om.bounds(), y, w as i32);
            let gens: Vec<MatrixSeries> =
                generators(&om).iter().map(|g| g.restrict_bounds(&bw)).collect::<Result<_, _>>()?;
            let wm: Vec<MatrixSeries> = words.iter().map(|wd| word_matrix(wd, &gens)).collect::<Result<_, _>>()?;
            for be in 0..=al {
                let mut col_b = bw.clone();
                for a in 0..l {
                    col_b[m + a] = if a > al { 0 } else { bw[m + a] };
                }
                let col: Vec<Series> = dfs[be]
                    .iter()
                    .map(|s| s.restrict_bounds(&min_bounds([s.bounds(), &col_b[..]])))
                    .collect::<Result<_, _>>()?;
                let cb = min_bounds(col.iter().map(|s| s.bounds()).chain([&bw[..]]));
                let wm_b: Vec<MatrixSeries> = wm.iter().map(|x| x.restrict_bounds(&cb)).collect::<Result<_, _>>()?;
                let col: Vec<Series> = col.iter().map(|s| s.restrict_bounds(&cb)).collect::<Result<_, _>>()?;
                om.f_unf[be] = matrix_with_first_column(&wm_b, &col)?;
            }
            if w == k_max {
                break;
            }
            let f = om.f_unf[al].clone();
            let step = |rhs: MatrixSeries| -> MatrixSeries {
                raise(&rhs).map_entries(|e| e.integrate_layer(y, w))
            };
            for (i, &t) in li.iter().enumerate() {
                let rhs = sum(&[f.log_derivative(t)?, om.a_log[i].commutator_common(&f)?])?;
                om.c_log[i] = om.c_log[i].add_common(&step(rhs))?;
            }
            for (k, &t) in hi.iter().enumerate() {
                let rhs = f.partial_derivative(t)?;
                om.c_hol[k] = om.c_hol[k].add_common(&step(rhs))?;
            }
            let rhs = om.v.commutator_common(&f)?.sub_common(&f)?;
            om.u = om.u.add_common(&step(rhs))?;
            let keep_f: Vec<MatrixSeries> = om.f_unf.clone();
            om.f_unf.clear();
            om = om.uniform()?;
            let ub = om.u.bounds().to_vec();
            om.f_unf = keep_f.iter().map(|x| x.restrict_bounds(&min_bounds([x.bounds(), &ub[..]]))).collect::<Result<_, _>>()?;
            om.f_unf = om.f_unf.iter().map(|x| Ok(x.raise_bounds(&ub))).collect::<Result<_, SeriesError>>()?;
        }
        om = om.uniform()?;
    }
    let om = om.uniform()?;
    let rep = flatness_residuals(&om)?;
    if !rep.all_pass() {
        return Err(UnfoldError::InternalConsistency(rep.failures().iter().map(|s| s.to_string()).collect()));
    }
    Ok(om)
}

/// The pairing matrix `R = (P(ṽ_i, ṽ_j))` over `z`, the base and the
/// unfolding parameters, with residuals of its flatness equations.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingData {
    pub r: LaurentMatrix,
    pub w: i32,
    pub report: ConditionReport,
}

/// The flatness equations of `R` with respect to `Ω`:
/// `z∂_zR = z⁻¹(UᵀR − RU) + VᵀR + RV`,
/// `t_i∂_iR = z⁻¹(C_iᵀR − RC_i) + A_iᵀR + RA_i`,
/// `∂_kR = z⁻¹(C_kᵀR − RC_k)` and `∂_αR = z⁻¹(F_αᵀR − RF_α)`.
pub fn pairing_residuals(om: &ConnectionForm, r: &LaurentMatrix) -> UnfoldResult<ConditionReport> {
    let b = min_bounds([&om.bounds()[..], r.bounds()]);
    let om = om.restrict_bounds(&b)?;
    let r = r.restrict_bounds(&b)?;
    let twist = |m: &MatrixSeries, sign_plus: bool| -> UnfoldResult<LaurentMatrix> {
        let left = r.lmul(&m.transpose())?;
        let right = r.rmul(m)?;
        Ok(if sign_plus { left.add(&right)? } else { left.sub(&right)? })
    };
    let fold = |lhs: LaurentMatrix, rhs: LaurentMatrix| -> UnfoldResult<usize> {
        let rb = min_bounds([lhs.bounds(), rhs.bounds()]);
        Ok(lhs.restrict_bounds(&rb)?.sub(&rhs.restrict_bounds(&rb)?)?.nonzero_terms())
    };
    let mut rep = ConditionReport::new();
    let rhs = twist(&om.u, false)?.shift(-1).add(&twist(&om.v, true)?)?;
    rep.push_count("pairing_z", fold(r.z_euler(), rhs)?, "");
    let li = om.vars.indices_of(VarClass::Log);
    let mut terms = 0;
    for (i, &t) in li.iter().enumerate() {
        let rhs = twist(&om.c_log[i], false)?.shift(-1).add(&twist(&om.a_log[i], true)?)?;
        terms += fold(r.frame_derivative(t)?, rhs)?;
    }
    rep.push_count("pairing_log", terms, "");
    let mut terms = 0;
    for (k, &t) in om.vars.indices_of(VarClass::Hol).iter().enumerate() {
        terms += fold(r.frame_derivative(t)?, twist(&om.c_hol[k], false)?.shift(-1))?;
    }
    rep.push_count("pairing_hol", terms, "");
    let mut terms = 0;
    for (al, &t) in om.vars.indices_of(VarClass::Unfold).iter().enumerate() {
        terms += fold(r.frame_derivative(t)?, twist(&om.f_unf[al], false)?.shift(-1))?;
    }
    rep.push_count("pairing_unf", terms, "");
    Ok(rep)
}

/// Extends the pairing `r0` given on `y = 0` over the unfolding parameters
/// by integrating `∂_αR = z⁻¹(F_αᵀR − RF_α)`, checking at each order that `R`
/// stays in `z^w O`.
pub fn extend_pairing(om: &ConnectionForm, r0: &LaurentMatrix, w: i32) -> UnfoldResult<PairingData> {
    om.validate()?;
    let vars = &om.vars;
    let yi = vars.indices_of(VarClass::Unfold);
    let full_b = om.bounds();
    let mut start_b = full_b.clone();
    for &y in &yi {
        start_b[y] = 0;
    }
    let mut r0b = start_b.clone();
    for (k, name) in r0.vars().names().iter().enumerate() {
        let j = vars.require(name)?;
        r0b[j] = r0b[j].min(r0.bounds()[k]);
    }
    let mut r = r0.embed(vars, &r0b)?;
    if let Some(k) = r.min_power() {
        if k < w {
            return Err(UnfoldError::PairingEscape { variable: "(initial)".into(), order: 0, power: k });
        }
    }
    for (al, &y) in yi.iter().enumerate() {
        let k_max = full_b[y] as u32;
        let mut rb = r.bounds().to_vec();
        rb[y] = k_max as i32;
        r = r.map_coeff_matrices(|m| m.raise_bounds(&rb));
        let mut rr = LaurentMatrix::zero(om.rank, vars, &rb);
        for (k, mtx) in r.coeffs() {
            rr.add_term(*k, &mtx.raise_bounds(&rb))?;
        }
        r = rr;
        let f = om.f_unf[al].restrict_bounds(&min_bounds([om.f_unf[al].bounds(), &rb[..]]))?;
        for wo in 0..k_max {
            let bw = with_bound(r.bounds(), y, wo as i32);
            let rw = r.restrict_bounds(&bw)?;
            let fw = f.restrict_bounds(&bw)?;
            let rhs = rw.lmul(&fw.transpose())?.sub(&rw.rmul(&fw)?)?.shift(-1);
            let mut layer = LaurentMatrix::zero(om.rank, vars, r.bounds());
            for (k, mtx) in rhs.coeffs() {
                let lifted = mtx.raise_bounds(r.bounds()).map_entries(|e| e.integrate_layer(y, wo));
                layer.add_term(*k, &lifted)?;
            }
            r = r.add(&layer)?;
            if let Some(k) = r.min_power() {
                if k < w {
                    return Err(UnfoldError::PairingEscape { variable: vars.name(y).to_string(), order: wo + 1, power: k });
                }
            }
        }
    }
    let mut report = pairing_residuals(om, &r)?;
    report.push_flag("z_power_membership", r.min_power().map_or(true, |k| k >= w), format!("w = {w}"));
    Ok(PairingData { r, w, report })
}

/// Output of [`universal_unfold`].
#[derive(Clone, Debug)]
pub struct UniversalUnfolding {
    pub germ: FrobeniusGerm,
    /// The unfolded Frobenius type structure the germ was built from.
    pub fts: FTSData,
    pub omega: ConnectionForm,
    pub pairing: Option<PairingData>,
    /// Frame index attached to each unfolding parameter.
    pub chosen: Vec<usize>,
    pub axioms: ConditionReport,
}

/// Greedy choice of unfolding directions: walk the breadth-first words in the
/// constant Higgs fields and `𝒰` applied to `ξ|₀`; each word whose column
/// leaves the current span contributes the first non-pivot coordinate of its
/// reduction. The span starts at the Higgs first columns.
pub fn greedy_directions(fts: &FTSData) -> Vec<usize> {
    let n = fts.rank;
    let xi0: Vec<Rational> = fts.xi.iter().map(Series::constant_term).collect();
    let mut gens: Vec<Matrix> = fts.higgs.iter().map(MatrixSeries::constant_matrix).collect();
    gens.push(fts.u.constant_matrix());
    let mut span = Subspace::span(n, gens[..gens.len() - 1].iter().map(|c| c.mul_vec(&xi0)));
    let mut chosen = Vec::new();
    let mut level: Vec<(Vec<usize>, Vec<Rational>)> = vec![(vec![], xi0)];
    for _ in 0..=n * n {
        let mut next = Vec::new();
        for (word, col) in &level {
            if span.dim() == n {
                return chosen;
            }
            if !span.contains(col) {
                let mut red = col.clone();
                for row in span.basis() {
                    let p = row.iter().position(|x| x != &int(0)).expect("nonzero basis row");
                    let f = red[p].clone();
                    for (r, x) in red.iter_mut().zip(row) {
                        *r -= &f * x;
                    }
                }
                let p = red.iter().position(|x| x != &int(0)).expect("vector outside span");
                let mut e = vec![int(0); n];
                e[p] = int(1);
                span = span.sum(&Subspace::span(n, [e]));
                chosen.push(p);
            }
            let start = word.last().copied().unwrap_or(0);
            for (g, m) in gens.iter().enumerate().skip(start) {
                let mut w = word.clone();
                w.push(g);
                next.push((w, m.mul_vec(col)));
            }
        }
        level = next;
    }
    chosen
}

fn fresh_names(vars: &VariableSet, l: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(l);
    let mut k = 1;
    while out.len() < l {
        let name = format!("y{k}");
        if vars.index_of(&name).is_none() {
            out.push(name);
        }
        k += 1;
    }
    out
}

/// The germ of the universal unfolding of `fts`: unfold along greedily chosen
/// directions up to `order` in each new parameter, extend the pairing, read
/// the Frobenius type structure back, build the germ and check its axioms.
pub fn universal_unfold(fts: &FTSData, order: &[u32]) -> UnfoldResult<UniversalUnfolding> {
    let rep = check_fts(fts)?;
    if !rep.all_pass() {
        return Err(UnfoldError::Hypothesis(format!("structure conditions fail: {}", rep.failures().join(", "))));
    }
    let h = check_hypotheses(fts)?;
    for (ok, name) in [(h.ic, "IC"), (h.gc, "GC"), (h.ec, "EC"), (h.xi_flat, "flat xi")] {
        if !ok {
            return Err(UnfoldError::Hypothesis(name.into()));
        }
    }
    let n = fts.rank;
    let l = n - fts.vars.len();
    if l == 0 {
        let germ = isocase_build(fts)?;
        let axioms = check_frobenius_axioms(&germ, None)?;
        if !axioms.all_pass() {
            return Err(UnfoldError::AxiomsFailed(axioms.failures().iter().map(|s| s.to_string()).collect()));
        }
        let omega = fts_to_trtlep(fts)?.omega;
        return Ok(UniversalUnfolding { germ, fts: fts.clone(), omega, pairing: None, chosen: vec![], axioms });
    }
    if order.len() != l {
        return Err(invalid(format!("{l} unfolding parameters need {l} orders, got {}", order.len())));
    }
    if fts.xi.iter().any(|s| !s.is_constant()) {
        return Err(invalid("xi must be constant in the given frame"));
    }
    let xi0: Vec<Rational> = fts.xi.iter().map(Series::constant_term).collect();
    let e1: Vec<Rational> = (0..n).map(|i| int((i == 0) as i64)).collect();
    let fts = if xi0 == e1 {
        fts.clone()
    } else {
        let rest = Subspace::span(n, [xi0.clone()]).complement_from(&Matrix::<Rational>::identity(n).columns());
        let mut cols = vec![xi0];
        cols.extend(rest);
        fts.change_frame(&Matrix::from_cols(n, &cols))?
    };
    let chosen = greedy_directions(&fts);
    if chosen.len() != l {
        return Err(UnfoldError::GenerationFailure {
            variable: "(greedy selection)".into(),
            order: 0,
            rank: fts.vars.len() + chosen.len(),
            needed: n,
        });
    }
    let tr = fts_to_trtlep(&fts)?;
    let names = fresh_names(&fts.vars, l);
    let bounds = fts.bounds();
    let dfs: Vec<Vec<Series>> = chosen
        .iter()
        .map(|&p| (0..n).map(|i| Series::constant(&fts.vars, &bounds, int(-((i == p) as i64)))).collect())
        .collect();
    let problem = UnfoldingProblem { base: tr.omega.clone(), unfold_vars: names, dfs, order: order.to_vec() };
    let omega = solve_unfolding(&problem)?;
    let pairing = extend_pairing(&omega, &tr.pmat, tr.w)?;
    if !pairing.report.all_pass() {
        return Err(UnfoldError::InternalConsistency(pairing.report.failures().iter().map(|s| s.to_string()).collect()));
    }
    let b = omega.bounds();
    let xi = (0..n).map(|i| Series::constant(&omega.vars, &b, int((i == 0) as i64))).collect();
    let r = pairing.r.restrict_bounds(&min_bounds([&b[..], pairing.r.bounds()]))?;
    let omega_b = omega.restrict_bounds(r.bounds())?;
    let tr_u = TrTLEPData { rank: n, omega: omega_b, pmat: r, w: tr.w, xi, d: tr.d.clone() };
    let tr_u = TrTLEPData { xi: tr_u.xi.iter().map(|s| s.restrict_bounds(tr_u.pmat.bounds())).collect::<Result<_, _>>()?, ..tr_u };
    let fts_u = trtlep_to_fts(&tr_u)?;
    let germ = isocase_build(&fts_u)?;
    let axioms = check_frobenius_axioms(&germ, None)?;
    if !axioms.all_pass() {
        return Err(UnfoldError::AxiomsFailed(axioms.failures().iter().map(|s| s.to_string()).collect()));
    }
    Ok(UniversalUnfolding { germ, fts: fts_u, omega, pairing: Some(pairing), chosen, axioms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn e(i: usize, j: usize, n: usize) -> Matrix {
        Matrix::from_fn(n, n, |a, b| int((a == i && b == j) as i64))
    }

    #[test]
    fn zero_form_is_flat() {
        let v = Arc::new(VariableSet::new([("t", VarClass::Log), ("s", VarClass::Hol), ("y", VarClass::Unfold)]).unwrap());
        let om = ConnectionForm::zero(2, v, &[2, 2, 2]);
        let rep = flatness_residuals(&om).unwrap();
        assert_eq!(rep.len(), 20);
        assert!(rep.all_pass());
    }

    #[test]
    fn hol_example_and_commutator_perturbation() {
        let v = Arc::new(VariableSet::new([("s1", VarClass::Hol), ("s2", VarClass::Hol)]).unwrap());
        let b = [3, 3];
        let c1 = MatrixSeries::from_constant(&e(1, 0, 2), &v, &b);
        let c2 = MatrixSeries::from_constant(&e(1, 0, 2).scale(&int(2)), &v, &b);
        let s1 = Series::variable(&v, &b, "s1").unwrap();
        let s2 = Series::variable(&v, &b, "s2").unwrap();
        let u0 = MatrixSeries::from_constant(&Matrix::identity(2), &v, &b);
        let u = u0.sub(&c1.scale_series(&s1).unwrap()).unwrap().sub(&c2.scale_series(&s2).unwrap()).unwrap();
        let mut om = ConnectionForm::zero(2, v.clone(), &b);
        om.c_hol = vec![c1.clone(), c2];
        om.u = u;
        assert!(flatness_residuals(&om).unwrap().all_pass());
        let c2p = MatrixSeries::from_constant(&e(0, 1, 2), &v, &b);
        om.c_hol[1] = c2p.clone();
        let rep = flatness_residuals(&om).unwrap();
        let c = rep.get("C_commute").unwrap();
        assert!(!c.pass);
        assert_eq!(c.residual.as_ref().unwrap(), &c1.commutator(&c2p).unwrap());
    }

    #[test]
    fn spanning_words_prefers_short() {
        let u = e(1, 0, 2);
        let (w, r) = spanning_words(&[u], 2, 4);
        assert_eq!(r, 2);
        assert_eq!(w, vec![vec![], vec![0]]);
        let (_, r) = spanning_words(&[Matrix::zeros(2, 2)], 2, 4);
        assert_eq!(r, 1);
    }

    #[test]
    fn scalar_unfolding() {
        // n = 1: F = ∂f/∂y, U = u₀ − f, C picks up ∫ t∂_t(∂f/∂y) dy
        let v = Arc::new(VariableSet::new([("t", VarClass::Log)]).unwrap());
        let b = [3];
        let k = |x: Rational| MatrixSeries::from_constant(&Matrix::from_fn(1, 1, |_, _| x.clone()), &v, &b);
        let mut base = ConnectionForm::zero(1, v.clone(), &b);
        base.c_log = vec![k(int(2)).scale_series(&Series::variable(&v, &b, "t").unwrap()).unwrap()];
        base.u = k(int(0)).sub(&k(int(2)).scale_series(&Series::variable(&v, &b, "t").unwrap()).unwrap()).unwrap();
        base.v = k(rat(1, 3));
        assert!(flatness_residuals(&base).unwrap().all_pass());
        let t = Series::variable(&v, &b, "t").unwrap();
        let one = Series::constant(&v, &b, int(1));
        // f = y·(1 + t), so ∂f/∂y = 1 + t
        let df = one.add(&t).unwrap();
        let p = UnfoldingProblem { base, unfold_vars: vec!["y".into()], dfs: vec![vec![df]], order: vec![3] };
        let om = solve_unfolding(&p).unwrap();
        let y = Series::variable(&om.vars, &om.bounds(), "y").unwrap();
        let tt = Series::variable(&om.vars, &om.bounds(), "t").unwrap();
        let c = |x: i64| Series::constant(&om.vars, &om.bounds(), int(x));
        let f = y.mul(&c(1).add(&tt).unwrap()).unwrap();
        assert_eq!(om.f_unf[0].get(0, 0), &c(1).add(&tt).unwrap());
        assert_eq!(om.u.get(0, 0), &tt.scale(&int(-2)).sub(&f).unwrap());
        assert_eq!(om.c_log[0].get(0, 0), &tt.scale(&int(2)).add(&tt.mul(&y).unwrap()).unwrap());
    }
}
