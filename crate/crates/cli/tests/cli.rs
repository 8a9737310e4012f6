use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use frobforge::fixtures::{p2_model, p2_table, rank4_pmhs, tate_pmhs, unfolding_base_2x2};
use frobforge::hodge::weight_filtration;
use frobforge::io;
use frobforge::quantum::{chart_bounds, potential_assemble};
use frobforge::unfolding::UnfoldingProblem;
use frobforge::{MatrixSeries, TruncatedSeries};
use frobforge_cli::fixture_documents;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn scratch(name: &str, doc: &Value) -> String {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(doc).unwrap()).unwrap();
    p.display().to_string()
}

fn frobforge(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_frobforge"));
    c.args(args).env_remove("FORGE_MAX_TERMS");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn json_of(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let out = frobforge(&full, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn non_nilpotent_n_is_a_validation_error() {
    let mut doc = io::write_pmhs(&tate_pmhs(1));
    doc["N"] = json!([[["1", "0"], ["1", "0"]]]);
    let p = scratch("bad_n.json", &doc);
    let out = frobforge(&["hodge-pmhs", "--pmhs", &p], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("N[0]"), "{}", stderr(&out));
}

#[test]
fn incompatible_pairing_names_the_entry() {
    let mut doc = io::write_model(&p2_model());
    doc["pairing"][0][1] = json!("1");
    doc["pairing"][1][0] = json!("1");
    let p = scratch("bad_pairing.json", &doc);
    let out = frobforge(&["validate", "model", &p], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("pairing") && err.contains("(0,1)"), "{err}");
}

#[test]
fn failed_polarization_is_a_condition_failure() {
    let p = scratch("tate_minus.json", &io::write_pmhs(&tate_pmhs(-1)));
    let out = frobforge(&["hodge-pmhs", "--pmhs", &p], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn term_limit_is_a_solver_failure() {
    let args = ["unfold", "--base", &fixture("unfold.json")];
    assert_eq!(frobforge(&args, &[]).status.code(), Some(0));
    let out = frobforge(&args, &[("FORGE_MAX_TERMS", "4")]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    let bad = frobforge(&args, &[("FORGE_MAX_TERMS", "lots")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn non_cyclic_unfolding_is_a_solver_failure() {
    let (mut base, _, _) = unfolding_base_2x2(3);
    let b = base.bounds();
    base.c_log[0] = MatrixSeries::zero(2, 2, &base.vars, &b);
    base.u = MatrixSeries::zero(2, 2, &base.vars, &b);
    base.v = MatrixSeries::zero(2, 2, &base.vars, &b);
    let z = TruncatedSeries::zero(&base.vars, &b);
    let p = UnfoldingProblem { base, unfold_vars: vec!["y".into()], dfs: vec![vec![z.clone(), z]], order: vec![2] };
    let path = scratch("non_cyclic.json", &io::write_unfolding(&p));
    let out = frobforge(&["unfold", "--base", &path], &[]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn missing_file_and_bad_json_are_validation_errors() {
    assert_eq!(frobforge(&["hodge-weight", "--pmhs", "/nonexistent.json"], &[]).status.code(), Some(2));
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("broken.json");
    std::fs::write(&p, "{ not json").unwrap();
    assert_eq!(frobforge(&["validate", "model", p.to_str().unwrap()], &[]).status.code(), Some(2));
}

#[test]
fn outputs_match_library_serialization() {
    let w = json_of(&["hodge-weight", "--pmhs", &fixture("rank4.json")]);
    let pm = rank4_pmhs();
    let n = pm.nlist[0].clone();
    let wf = weight_filtration(&n, pm.space.w).unwrap();
    assert_eq!(w["W"], io::write_inc_filtration(&wf));

    let m = p2_model();
    let phi = potential_assemble(&m, &p2_table(5), &chart_bounds(&m, 5)).unwrap();
    let out = json_of(&["qc-potential", "--model", &fixture("p2.json"), "--gw", &fixture("p2_gw.json"), "--max-degree", "5"]);
    assert_eq!(out, io::write_potential(&phi));

    let rec = json_of(&["qc-reconstruct", "--model", &fixture("p2.json"), "--seed", &fixture("n1.json"), "--max-degree", "5"]);
    assert_eq!(rec, io::write_gw(&m, &p2_table(5)));
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["--format", "json", "pipeline-vphs-to-frobenius", "--pmhs", &fixture("rank4.json"), "--order", "3"];
    let a = frobforge(&args, &[]);
    let b = frobforge(&args, &[]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn fts_round_trip_through_files() {
    let fts = json_of(&["qc-to-fts", "--model", &fixture("p2.json"), "--gw", &fixture("p2_gw.json"), "--max-degree", "3"]);
    let fp = scratch("p2_fts.json", &fts);
    let tr = json_of(&["fts-to-trtlep", "--fts", &fp]);
    let tp = scratch("p2_trtlep.json", &tr);
    let back = json_of(&["fts-to-trtlep", "--trtlep", &tp]);
    assert_eq!(back["fts"], fts["fts"]);
}

#[test]
fn checked_in_fixtures_are_current() {
    for (name, doc) in fixture_documents() {
        let text = std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let on_disk: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(on_disk, doc, "{name} is stale; rerun `frobforge emit-fixtures crates/cli/fixtures`");
    }
}

#[test]
fn text_output_has_verdicts() {
    let out = frobforge(&["unfold", "--base", &fixture("unfold.json")], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS") && !text.contains("FAIL"), "{text}");
}
