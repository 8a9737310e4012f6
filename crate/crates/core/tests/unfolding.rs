use std::sync::Arc;

use frobforge::fixtures::unfolding_base_2x2;
use frobforge::matrix::MatrixSeries;
use frobforge::unfolding::{
    extend_pairing, flatness_residuals, solve_unfolding, ConnectionForm, UnfoldError, UnfoldingProblem,
};
use frobforge::{int, Rational, TruncatedSeries, VarClass, VariableSet};

type Series = TruncatedSeries<Rational>;

fn base_series(om: &ConnectionForm, terms: &[(&[u32], i64)]) -> Series {
    Series::from_terms(&om.vars, &om.bounds(), terms.iter().map(|(e, c)| (e.to_vec(), int(*c)))).unwrap()
}

fn problem(a: Series, b: Series, order: u32) -> UnfoldingProblem {
    let (base, _, _) = unfolding_base_2x2(6);
    UnfoldingProblem { base, unfold_vars: vec!["y".into()], dfs: vec![vec![a, b]], order: vec![order] }
}

/// Integral from 0 in variable `y`, layer by layer.
trait IntegrateAll {
    fn integrate_all(&self, y: usize) -> Self;
}

impl IntegrateAll for Series {
    fn integrate_all(&self, y: usize) -> Self {
        let mut out = Series::zero(self.vars(), self.bounds());
        for k in 0..=self.bounds()[y].max(0) as u32 {
            out = out.add(&self.integrate_layer(y, k)).unwrap();
        }
        out
    }
}

#[test]
fn two_by_two_matches_hand_integration() {
    let (base, _, _) = unfolding_base_2x2(6);
    // a = 1 + t + y², b = t·y + 2y³
    let a = base_series(&base, &[(&[0], 1), (&[1], 1)]);
    let b = base_series(&base, &[]);
    let vy = Arc::new(VariableSet::new([("t", VarClass::Log), ("y", VarClass::Unfold)]).unwrap());
    let bb = [6, 6];
    let ext = |s: &Series| s.embed(&vy, &bb).unwrap();
    let y = Series::variable(&vy, &bb, "y").unwrap();
    let t = Series::variable(&vy, &bb, "t").unwrap();
    let a = ext(&a).add(&y.mul(&y).unwrap()).unwrap();
    let b = ext(&b).add(&t.mul(&y).unwrap()).unwrap().add(&y.mul(&y).unwrap().mul(&y).unwrap().scale(&int(2))).unwrap();
    let om = solve_unfolding(&problem(a.clone(), b.clone(), 4)).unwrap();
    let ob = om.bounds();
    let r = |s: &Series| s.restrict_bounds(&ob).unwrap();
    let yi = om.vars.index_of("y").unwrap();
    let ti = om.vars.index_of("t").unwrap();

    // F = aI + bE₂₁
    let f = &om.f_unf[0];
    assert_eq!(f.get(0, 0), &r(&a));
    assert_eq!(f.get(1, 1), &r(&a));
    assert_eq!(f.get(1, 0), &r(&b));
    assert!(f.get(0, 1).is_zero());

    // C = −(1+t)E₂₁ + (∫ t∂_t a) I + (∫ t∂_t b) E₂₁
    let ca = r(&a.log_derivative(ti).unwrap().integrate_all(yi));
    let cb = r(&b.log_derivative(ti).unwrap().integrate_all(yi));
    let one_t = r(&Series::constant(&vy, &bb, int(1)).add(&t).unwrap());
    let c = &om.c_log[0];
    assert_eq!(c.get(0, 0), &ca);
    assert_eq!(c.get(1, 1), &ca);
    assert_eq!(c.get(1, 0), &cb.sub(&one_t).unwrap());
    assert!(c.get(0, 1).is_zero());

    // U = E₂₁ − (∫ a) I
    let ua = r(&a.integrate_all(yi)).neg();
    assert_eq!(om.u.get(0, 0), &ua);
    assert_eq!(om.u.get(1, 1), &ua);
    assert_eq!(om.u.get(1, 0), &r(&Series::constant(&vy, &bb, int(1))));
    assert!(om.a_log[0].is_zero());
}

fn standard_problem(order: u32) -> UnfoldingProblem {
    let (base, _, _) = unfolding_base_2x2(6);
    let a = base_series(&base, &[(&[0], 1), (&[1], 2)]);
    let b = base_series(&base, &[(&[2], 1)]);
    problem(a, b, order)
}

#[test]
fn solver_output_properties() {
    let p = standard_problem(4);
    let om = solve_unfolding(&p).unwrap();
    let rep = flatness_residuals(&om).unwrap();
    assert!(rep.all_pass(), "{rep}");
    assert_eq!(rep.len(), 20);

    let restricted = om.base_restriction().unwrap();
    let base = p.base.restrict_bounds(&restricted.bounds()).unwrap();
    assert_eq!(restricted, base);

    for i in 0..2 {
        let want = p.dfs[0][i].embed(&om.vars, &om.bounds()).unwrap();
        assert_eq!(om.f_unf[0].get(i, 0), &want);
    }
    assert_eq!(solve_unfolding(&p).unwrap(), om);
}

#[test]
fn zero_dfs_extend_constantly() {
    let (base, _, _) = unfolding_base_2x2(4);
    let z = Series::zero(&base.vars, &base.bounds());
    let p = UnfoldingProblem { base: base.clone(), unfold_vars: vec!["y".into()], dfs: vec![vec![z.clone(), z]], order: vec![3] };
    let om = solve_unfolding(&p).unwrap();
    assert!(om.f_unf[0].is_zero());
    let lifted = base.map(|m| m.embed(&om.vars, &om.bounds())).unwrap();
    assert_eq!(om.c_log, lifted.c_log);
    assert_eq!(om.u, lifted.u);
}

#[test]
fn pairing_extension_stays_regular() {
    let p = standard_problem(4);
    let om = solve_unfolding(&p).unwrap();
    let (_, r0, w) = unfolding_base_2x2(6);
    let pd = extend_pairing(&om, &r0, w).unwrap();
    assert!(pd.report.all_pass(), "{}", pd.report);
    assert!(pd.r.min_power().unwrap() >= w);
    let at0 = pd.r.at_zero(om.vars.index_of("y").unwrap());
    let want = r0.restrict_bounds(at0.bounds()).unwrap();
    assert_eq!(at0, want);
}

#[test]
fn non_cyclic_base_is_rejected() {
    let (mut base, _, _) = unfolding_base_2x2(3);
    let b = base.bounds();
    base.c_log[0] = MatrixSeries::zero(2, 2, &base.vars, &b);
    base.u = MatrixSeries::zero(2, 2, &base.vars, &b);
    base.v = MatrixSeries::zero(2, 2, &base.vars, &b);
    let z = Series::zero(&base.vars, &b);
    let p = UnfoldingProblem { base, unfold_vars: vec!["y".into()], dfs: vec![vec![z.clone(), z]], order: vec![2] };
    match solve_unfolding(&p) {
        Err(UnfoldError::GenerationFailure { rank, order, .. }) => {
            assert_eq!(rank, 1);
            assert_eq!(order, 0);
        }
        other => panic!("expected GenerationFailure, got {other:?}"),
    }
}

#[test]
fn two_parameter_order_insensitive() {
    let (base, _, _) = unfolding_base_2x2(5);
    let v2 = Arc::new(
        VariableSet::new([("t", VarClass::Log), ("y1", VarClass::Unfold), ("y2", VarClass::Unfold)]).unwrap(),
    );
    let bb = [5, 3, 3];
    let s = |name: &str| Series::variable(&v2, &bb, name).unwrap();
    let k = |c: i64| Series::constant(&v2, &bb, int(c));
    // f₁ = y1 + y1·y2, f₂ = t·y2 + y1²  (closed by construction)
    let df1 = vec![k(1).add(&s("y2")).unwrap(), s("y1").scale(&int(2))];
    let df2 = vec![s("y1"), s("t")];
    let p12 = UnfoldingProblem {
        base: base.clone(),
        unfold_vars: vec!["y1".into(), "y2".into()],
        dfs: vec![df1.clone(), df2.clone()],
        order: vec![3, 3],
    };
    let p21 = UnfoldingProblem { base, unfold_vars: vec!["y2".into(), "y1".into()], dfs: vec![df2, df1], order: vec![3, 3] };
    let a = solve_unfolding(&p12).unwrap();
    let b = solve_unfolding(&p21).unwrap();
    assert!(flatness_residuals(&a).unwrap().all_pass());
    let common: Vec<i32> = a.vars.names().iter().map(|n| {
        a.bounds()[a.vars.index_of(n).unwrap()].min(b.bounds()[b.vars.index_of(n).unwrap()])
    }).collect();
    let a = a.restrict_bounds(&common).unwrap();
    let b = b.map(|m| m.embed(&a.vars, &common)).unwrap();
    assert_eq!(a.c_log, b.c_log);
    assert_eq!(a.u, b.u);
    assert_eq!(a.f_unf[0], b.f_unf[1]);
    assert_eq!(a.f_unf[1], b.f_unf[0]);
}

#[test]
fn non_closed_dfs_are_rejected() {
    let (base, _, _) = unfolding_base_2x2(3);
    let v2 = Arc::new(
        VariableSet::new([("t", VarClass::Log), ("y1", VarClass::Unfold), ("y2", VarClass::Unfold)]).unwrap(),
    );
    let bb = [3, 2, 2];
    let z = Series::zero(&v2, &bb);
    let p = UnfoldingProblem {
        base,
        unfold_vars: vec!["y1".into(), "y2".into()],
        dfs: vec![vec![Series::variable(&v2, &bb, "y2").unwrap(), z.clone()], vec![z.clone(), z]],
        order: vec![2, 2],
    };
    assert!(matches!(solve_unfolding(&p), Err(UnfoldError::Invalid(_))));
}
