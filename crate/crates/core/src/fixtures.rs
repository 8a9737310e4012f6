//! Small worked examples shared by tests, the CLI and the acceptance suite.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::hodge::{BilinearSpace, DecFiltration, GSubspace, PMHSData, GQ};
use crate::linalg::Matrix;
use crate::matrix::{LaurentMatrix, MatrixSeries};
use crate::quantum::{CohClass, CohModel, GWKey, GWTable};
use crate::scalar::{int, rat, Rational};
use crate::series::{TruncatedSeries, VarClass, VariableSet};
use crate::unfolding::ConnectionForm;

fn unit(i: usize, j: usize, n: usize) -> Matrix {
    Matrix::from_fn(n, n, |a, b| int((a == i && b == j) as i64))
}

/// Flat 2×2 form over one log variable `t`: `A = 0`, `C = −(1+t)E₂₁`,
/// `U = E₂₁`, `V = diag(−1/2, 1/2)`, with the antidiagonal pairing in weight 0.
/// The first basis vector is cyclic for `{C(0), U(0)}`.
pub fn unfolding_base_2x2(bound: i32) -> (ConnectionForm, LaurentMatrix, i32) {
    let vars = Arc::new(VariableSet::new([("t", VarClass::Log)]).expect("valid variables"));
    let b = [bound];
    let t = TruncatedSeries::variable(&vars, &b, "t").expect("t");
    let one = TruncatedSeries::constant(&vars, &b, int(1));
    let e21 = MatrixSeries::from_constant(&unit(1, 0, 2), &vars, &b);
    let c = e21.scale_series(&one.add(&t).expect("same shape")).expect("same shape").neg();
    let v = MatrixSeries::from_constant(&Matrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => rat(-1, 2),
        (1, 1) => rat(1, 2),
        _ => int(0),
    }), &vars, &b);
    let mut om = ConnectionForm::zero(2, vars.clone(), &b);
    om.c_log = vec![c];
    om.u = e21;
    om.v = v;
    let g = Matrix::from_fn(2, 2, |i, j| int((i != j) as i64));
    let r0 = LaurentMatrix::monomial(0, MatrixSeries::from_constant(&g, &vars, &b));
    (om, r0, 0)
}

/// The antidiagonal matrix with entries `entries[i]` at `(i, n−1−i)`.
pub fn antidiagonal(entries: &[Rational]) -> Matrix {
    let n = entries.len();
    Matrix::from_fn(n, n, |i, j| if i + j + 1 == n { entries[i].clone() } else { int(0) })
}

fn model(dim_x: u32, classes: &[(&str, u32)], products: &[(usize, usize, usize, i64)], pairs: &[(usize, usize)], c1: &[i64], beta: Vec<Vec<u32>>) -> CohModel {
    let n = classes.len();
    let mut cup = vec![vec![vec![int(0); n]; n]; n];
    for i in 0..n {
        cup[0][i][i] = int(1);
        cup[i][0][i] = int(1);
    }
    for &(i, j, k, c) in products {
        cup[i][j][k] = int(c);
        cup[j][i][k] = int(c);
    }
    let mut g = Matrix::zeros(n, n);
    for &(i, j) in pairs {
        g = g.add(&unit(i, j, n));
        if i != j {
            g = g.add(&unit(j, i, n));
        }
    }
    CohModel {
        dim_x,
        classes: classes.iter().map(|&(name, deg)| CohClass { name: name.into(), deg, h2: deg == 2 }).collect(),
        cup,
        pairing: g,
        c1: c1.iter().map(|&c| int(c)).collect(),
        mori_rank: beta.len(),
        beta_pairing: beta,
    }
}

/// `ℙ²` with basis `1, H, H²` and `c₁ = 3H`.
pub fn p2_model() -> CohModel {
    model(2, &[("T0", 0), ("T1", 2), ("T2", 4)], &[(1, 1, 2, 1)], &[(0, 2), (1, 1)], &[3], vec![vec![1]])
}

/// `ℙ¹×ℙ¹` with basis `1, H₁, H₂, H₁H₂` and `c₁ = 2H₁ + 2H₂`.
pub fn p1xp1_model() -> CohModel {
    model(
        2,
        &[("T0", 0), ("T1", 2), ("T2", 2), ("T3", 4)],
        &[(1, 2, 3, 1)],
        &[(0, 3), (1, 2)],
        &[2, 2],
        vec![vec![1, 0], vec![0, 1]],
    )
}

/// A Calabi–Yau threefold model with `H³ = 5` and `c₁ = 0`.
pub fn quintic_model() -> CohModel {
    model(3, &[("T0", 0), ("H", 2), ("T2", 4), ("T3", 6)], &[(1, 1, 2, 5), (1, 2, 3, 1)], &[(0, 3), (1, 2)], &[0], vec![vec![1]])
}

/// Rational curves on `ℙ²` through `3d − 1` points, `d = 1..=6`.
pub const P2_NUMBERS: [i64; 6] = [1, 1, 12, 620, 87304, 26312976];

/// `N_d` for `d ≤ max_degree` as a table.
pub fn p2_table(max_degree: u32) -> GWTable {
    let mut t = GWTable::new();
    for d in 1..=max_degree.min(P2_NUMBERS.len() as u32) {
        t.insert(GWKey { beta: vec![d], ins: vec![3 * d - 1] }, int(P2_NUMBERS[d as usize - 1]));
    }
    t
}

/// Known `ℙ¹×ℙ¹` numbers for bidegrees with `a + b ≤ 4`, `a, b ≤ 2`.
pub fn p1xp1_table() -> GWTable {
    let mut t = GWTable::new();
    for (a, b, v) in [(1, 0, 1), (0, 1, 1), (1, 1, 1), (1, 2, 1), (2, 1, 1), (2, 2, 12)] {
        t.insert(GWKey { beta: vec![a, b], ins: vec![2 * a + 2 * b - 1] }, int(v));
    }
    t
}

/// Degree-one and degree-two counts on the quintic-type model.
pub fn quintic_table() -> GWTable {
    let mut t = GWTable::new();
    t.insert(GWKey { beta: vec![1], ins: vec![0, 0] }, int(2875));
    t.insert(GWKey { beta: vec![2], ins: vec![0, 0] }, rat(4876875, 8));
    t
}

/// Nilpotent matrix in Jordan form with blocks of the given sizes;
/// within a block `e_i ↦ e_{i+1}`.
pub fn jordan_nilpotent(sizes: &[usize]) -> Matrix {
    let n = sizes.iter().sum();
    let mut m = Matrix::zeros(n, n);
    let mut start = 0;
    for &k in sizes {
        for i in start..start + k - 1 {
            m[(i + 1, i)] = int(1);
        }
        start += k;
    }
    m
}

fn e(n: usize, i: usize) -> Vec<Rational> {
    (0..n).map(|j| int((i == j) as i64)).collect()
}

fn pmhs(s: Matrix, w: i32, nlist: Vec<Matrix>, f: &[(i32, &[usize])]) -> PMHSData {
    let n = s.rows();
    let steps: BTreeMap<i32, Vec<Vec<Rational>>> = f.iter().map(|&(p, idx)| (p, idx.iter().map(|&i| e(n, i)).collect())).collect();
    let flim = DecFiltration::from_rational(n, steps).expect("valid filtration");
    PMHSData::new(BilinearSpace::new(s, w).expect("valid pairing"), nlist, flim).expect("valid data")
}

/// Limit of the Tate curve: `w = 1`, `S(e₁,e₂) = sign`, `N e₁ = e₂`, `F¹ = ⟨e₁⟩`.
pub fn tate_pmhs(sign: i64) -> PMHSData {
    let s = Matrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => int(sign),
        (1, 0) => int(-sign),
        _ => int(0),
    });
    pmhs(s, 1, vec![jordan_nilpotent(&[2])], &[(1, &[0])])
}

/// A pure weight-one structure with `F¹ = ⟨e₁ + i e₂⟩` and `N = 0`.
pub fn elliptic_pmhs() -> PMHSData {
    let s = Matrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => int(1),
        (1, 0) => int(-1),
        _ => int(0),
    });
    let v = vec![GQ::real(int(1)), GQ::i()];
    let flim = DecFiltration::new(2, BTreeMap::from([(1, GSubspace::span(2, [v]))])).expect("valid filtration");
    PMHSData::new(BilinearSpace::new(s, 1).expect("valid pairing"), vec![Matrix::zeros(2, 2)], flim).expect("valid data")
}

/// Maximal unipotent degeneration of weight 3: `N e_i = e_{i+1}`,
/// `F^p = ⟨e₀, …, e_{3−p}⟩`, `S(e₀,e₃) = −S(e₁,e₂) = 1`.
pub fn rank4_pmhs() -> PMHSData {
    let s = antidiagonal(&[int(1), int(-1), int(1), int(-1)]);
    pmhs(s, 3, vec![jordan_nilpotent(&[4])], &[(0, &[0, 1, 2, 3]), (1, &[0, 1, 2]), (2, &[0, 1]), (3, &[0])])
}

/// Two commuting nilpotents on `⟨1, H₁, H₂, H₁H₂⟩` given by cup product
/// with `H₁` and `H₂`.
pub fn cone_pair() -> Vec<Matrix> {
    let mut n1 = Matrix::zeros(4, 4);
    n1[(1, 0)] = int(1);
    n1[(3, 2)] = int(1);
    let mut n2 = Matrix::zeros(4, 4);
    n2[(2, 0)] = int(1);
    n2[(3, 1)] = int(1);
    vec![n1, n2]
}

/// The weight-2 PMHS on the [`cone_pair`] with `F² = ⟨e₀⟩`, `F¹ = ⟨e₀, e₁, e₂⟩`.
pub fn cone_pmhs() -> PMHSData {
    let s = antidiagonal(&[int(1), int(-1), int(-1), int(1)]);
    pmhs(s, 2, cone_pair(), &[(1, &[0, 1, 2]), (2, &[0])])
}

/// The standard unfolding problem on [`unfolding_base_2x2`]: one parameter
/// `y` with `∂f/∂y = (1 + 2t, t²)`.
pub fn unfolding_problem_2x2(order: u32) -> crate::unfolding::UnfoldingProblem {
    let (base, _, _) = unfolding_base_2x2(6);
    let b = base.bounds();
    let t = TruncatedSeries::variable(&base.vars, &b, "t").expect("t");
    let one = TruncatedSeries::constant(&base.vars, &b, int(1));
    let a = one.add(&t.scale(&int(2))).expect("same shape");
    let tt = t.mul(&t).expect("same shape");
    crate::unfolding::UnfoldingProblem { base, unfold_vars: vec!["y".into()], dfs: vec![vec![a, tt]], order: vec![order] }
}
