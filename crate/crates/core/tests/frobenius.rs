use frobforge::fixtures::{cone_pmhs, p1xp1_model, p1xp1_table, p2_model, p2_table, quintic_model, quintic_table, rank4_pmhs, tate_pmhs};
use frobforge::frobenius::{
    check_frobenius_axioms, check_fts, check_hypotheses, closure, fts_to_trtlep, isocase_build, trtlep_to_fts, FTSData,
};
use frobforge::hodge::split_connection;
use frobforge::quantum::{chart_bounds, potential_assemble, qc_to_fts};
use frobforge::{int, Matrix, Rational};
use proptest::prelude::*;

fn corpus() -> Vec<(&'static str, FTSData)> {
    let mut out = Vec::new();
    for (name, m, t) in [("P2", p2_model(), p2_table(3)), ("P1xP1", p1xp1_model(), p1xp1_table()), ("quintic", quintic_model(), quintic_table())] {
        let phi = potential_assemble(&m, &t, &chart_bounds(&m, 3)).unwrap();
        out.push((name, qc_to_fts(&m, &phi, &m.h2()).unwrap()));
    }
    for (name, pm) in [("Tate", tate_pmhs(1)), ("rank-4", rank4_pmhs()), ("cone", cone_pmhs())] {
        out.push((name, split_connection(&pm, None, 3).unwrap()));
    }
    out
}

fn char_poly_at(v: &Matrix, x: &Rational) -> Rational {
    let n = v.rows();
    Matrix::identity(n).scale(x).sub(v).det()
}

#[test]
fn corpus_passes_check_fts() {
    for (name, f) in corpus() {
        let rep = check_fts(&f).unwrap();
        assert!(rep.all_pass(), "{name}: {:?}", rep.failures());
    }
}

#[test]
fn round_trip_on_corpus() {
    for (name, f) in corpus() {
        let tr = fts_to_trtlep(&f).unwrap();
        assert!(tr.pairing_symmetric(), "{name}");
        assert_eq!(trtlep_to_fts(&tr).unwrap(), f, "{name}");
    }
}

#[test]
fn v_spectrum_is_symmetric() {
    // spec(V₀) = −spec(V₀) as multisets iff det(x − V₀) = det(x + V₀) for all x
    for (name, f) in corpus() {
        let v0 = f.v.constant_matrix();
        let n = v0.rows() as i64;
        for k in -n..=n + 1 {
            let x = int(k) / int(3);
            assert_eq!(char_poly_at(&v0, &x), char_poly_at(&v0.neg(), &x), "{name} at x = {x}");
        }
    }
}

#[test]
fn full_w_is_isomorphism_case() {
    let m = p2_model();
    let phi = potential_assemble(&m, &p2_table(3), &chart_bounds(&m, 3)).unwrap();
    let all: Vec<usize> = (0..m.classes.len()).collect();
    let f = qc_to_fts(&m, &phi, &all).unwrap();
    let h = check_hypotheses(&f).unwrap();
    assert!(h.all_hold());
    assert_eq!(h.ic_rank, f.rank);
    let germ = isocase_build(&f).unwrap();
    let rep = check_frobenius_axioms(&germ, None).unwrap();
    assert!(rep.all_pass(), "{:?}", rep.failures());
}

fn small_matrix(n: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-2i64..=2, n * n).prop_map(move |v| Matrix::from_fn(n, n, |i, j| int(v[i * n + j])))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gc_closure_is_monotone(
        start in proptest::collection::vec(-2i64..=2, 4),
        gens in proptest::collection::vec(small_matrix(4), 0..3),
        extra in small_matrix(4),
    ) {
        let start: Vec<Rational> = start.into_iter().map(int).collect();
        let before = closure(&start, &gens);
        let mut more = gens.clone();
        more.push(extra);
        let after = closure(&start, &more);
        prop_assert!(before.is_subspace_of(&after));
        for g in &more {
            prop_assert!(after.image(g).is_subspace_of(&after));
        }
    }

    #[test]
    fn frame_change_commutes_with_round_trip(entries in proptest::collection::vec(-1i64..=1, 3)) {
        // unipotent upper triangular frame change
        let p = Matrix::from_fn(3, 3, |i, j| match (i, j) {
            _ if i == j => int(1),
            (0, 1) => int(entries[0]),
            (0, 2) => int(entries[1]),
            (1, 2) => int(entries[2]),
            _ => int(0),
        });
        let m = p2_model();
        let phi = potential_assemble(&m, &p2_table(3), &chart_bounds(&m, 3)).unwrap();
        let f = qc_to_fts(&m, &phi, &m.h2()).unwrap().change_frame(&p).unwrap();
        prop_assert!(check_fts(&f).unwrap().all_pass());
        prop_assert!(check_hypotheses(&f).unwrap().all_hold());
        prop_assert_eq!(trtlep_to_fts(&fts_to_trtlep(&f).unwrap()).unwrap(), f);
    }
}
