use std::sync::Arc;

use frobforge::{int, rat, Coeff, GaussianRational, MatrixSeries, Rational, TruncatedSeries, VarClass, VariableSet};
use proptest::prelude::*;

type Series = TruncatedSeries<Rational>;

fn vars(n: usize) -> Arc<VariableSet> {
    let classes = [VarClass::Log, VarClass::Hol, VarClass::Unfold];
    Arc::new(VariableSet::new((0..n).map(|i| (format!("x{i}"), classes[i % 3]))).unwrap())
}

/// Shape: up to three variables with bounds at most 3.
fn shape() -> impl Strategy<Value = (Arc<VariableSet>, Vec<i32>)> {
    (1usize..=3).prop_flat_map(|n| proptest::collection::vec(0i32..=3, n).prop_map(move |b| (vars(n), b)))
}

fn coeff() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| rat(n, d))
}

fn series_of(vars: Arc<VariableSet>, bounds: Vec<i32>) -> impl Strategy<Value = Series> {
    let n = vars.len();
    let term = (proptest::collection::vec(0u32..=3, n), coeff());
    proptest::collection::vec(term, 0..8).prop_map(move |ts| {
        let ts: Vec<_> = ts.into_iter().filter(|(e, _)| e.iter().zip(&bounds).all(|(&k, &b)| k as i32 <= b)).collect();
        let mut s = Series::zero(&vars, &bounds);
        for (e, c) in ts {
            s = s.add(&Series::monomial(&vars, &bounds, e, c)).unwrap();
        }
        s
    })
}

fn triple() -> impl Strategy<Value = (Series, Series, Series)> {
    shape().prop_flat_map(|(v, b)| (series_of(v.clone(), b.clone()), series_of(v.clone(), b.clone()), series_of(v, b)))
}

fn unit_matrix() -> impl Strategy<Value = MatrixSeries> {
    (1usize..=3, shape()).prop_flat_map(|(n, (v, b))| {
        let entries = proptest::collection::vec(series_of(v.clone(), b.clone()), n * n);
        let diag = proptest::collection::vec(prop_oneof![(1i64..=3), (-3i64..=-1)], n);
        (entries, diag).prop_map(move |(es, d)| {
            let mut m = MatrixSeries::from_entries(n, n, es).unwrap();
            for (i, k) in d.into_iter().enumerate() {
                let s = m.get(i, i);
                let fixed = s.sub(&Series::constant(&v, &b, s.constant_term())).unwrap().add(&Series::constant(&v, &b, int(k))).unwrap();
                m.set(i, i, fixed).unwrap();
            }
            // strictly lower constant part so that A₀ stays invertible
            for i in 0..n {
                for j in i + 1..n {
                    let s = m.get(i, j);
                    let fixed = s.sub(&Series::constant(&v, &b, s.constant_term())).unwrap();
                    m.set(i, j, fixed).unwrap();
                }
            }
            m
        })
    })
}

fn stored_within_bounds(s: &Series) -> bool {
    s.terms().all(|(e, c)| !c.is_zero() && e.iter().zip(s.bounds()).all(|(&k, &b)| k as i32 <= b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn ring_axioms((a, b, c) in triple()) {
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(a.mul(&b.add(&c).unwrap()).unwrap(), a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
        prop_assert!(a.sub(&a).unwrap().is_zero());
        let one = Series::constant(a.vars(), a.bounds(), int(1));
        prop_assert_eq!(a.mul(&one).unwrap(), a.clone());
        for s in [a.mul(&b).unwrap(), a.add(&c).unwrap(), b.sub(&c).unwrap()] {
            prop_assert!(stored_within_bounds(&s));
        }
    }

    #[test]
    fn leibniz((a, b, _) in triple(), pick in 0usize..3) {
        let i = pick % a.vars().len();
        let lhs = a.mul(&b).unwrap().partial_derivative(i).unwrap();
        let rhs = a.partial_derivative(i).unwrap().mul_common(&b).unwrap()
            .add_common(&a.mul_common(&b.partial_derivative(i).unwrap()).unwrap()).unwrap();
        prop_assert_eq!(lhs.bounds()[i], a.bounds()[i] - 1);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn log_derivative_is_x_times_derivative((a, _, _) in triple()) {
        let x = a.vars().indices_of(VarClass::Log)[0];
        let log = a.log_derivative(x).unwrap();
        prop_assert_eq!(log.bounds(), a.bounds());
        for (e, c) in a.terms() {
            prop_assert_eq!(log.coeff(e), c * int(e[x] as i64));
        }
        let xv = Series::variable(a.vars(), a.bounds(), "x0").unwrap();
        let via_product = xv.mul_common(&a.partial_derivative(x).unwrap()).unwrap();
        prop_assert_eq!(log.restrict_bounds(via_product.bounds()).unwrap(), via_product);
    }

    #[test]
    fn invert_unit_is_inverse(m in unit_matrix()) {
        let inv = m.invert_unit().unwrap();
        let id = MatrixSeries::identity(m.rows(), m.vars(), m.bounds());
        prop_assert_eq!(inv.mul(&m).unwrap(), id.clone());
        prop_assert_eq!(m.mul(&inv).unwrap(), id);
    }

    #[test]
    fn gaussian_conjugation_is_an_involution(re in coeff(), im in coeff()) {
        let z = GaussianRational::new(re.clone(), im.clone());
        prop_assert_eq!(z.conj().conj(), z.clone());
        prop_assert_eq!(z.conj() == z, im == int(0));
        let n = z.mul(&z.conj());
        prop_assert!(n.is_real());
        if let Some(w) = z.inv() {
            prop_assert_eq!(w.mul(&z), GaussianRational::one());
        }
    }

    #[test]
    fn rationals_are_reduced(n in -50i64..50, d in 1i64..50) {
        let r = rat(n, d);
        prop_assert!(*r.denom() > 0.into());
        prop_assert_eq!(num_integer::Integer::gcd(r.numer(), r.denom()), if n == 0 { r.denom().clone() } else { 1.into() });
        if n == 0 {
            prop_assert_eq!(r, Rational::from_integer(0.into()));
        }
    }
}

#[test]
fn invert_examples() {
    let v = vars(1);
    let b = [4];
    let id = MatrixSeries::identity(2, &v, &b);
    assert_eq!(id.invert_unit().unwrap(), id);
    let t = Series::variable(&v, &b, "x0").unwrap();
    let zero = Series::zero(&v, &b);
    let one = Series::constant(&v, &b, int(1));
    let m = MatrixSeries::from_entries(2, 2, vec![one.clone(), t.clone(), zero.clone(), one.clone()]).unwrap();
    let want = MatrixSeries::from_entries(2, 2, vec![one.clone(), t.neg(), zero, one]).unwrap();
    assert_eq!(m.invert_unit().unwrap(), want);
    let two = id.scale(&int(2));
    assert_eq!(two.invert_unit().unwrap(), id.scale(&rat(1, 2)));
}
