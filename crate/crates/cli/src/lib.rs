//! Batch driver: every pipeline as a subcommand over JSON documents.
//!
//! [`run`] parses arguments, dispatches, and returns a [`RunReport`] holding
//! the JSON result, its text rendering and the exit class. The binary only
//! prints and exits.

mod errors;
mod render;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use frobforge::fixtures;
use frobforge::frobenius::{check_fts, check_hypotheses, fts_to_trtlep, trtlep_to_fts, FrobeniusGerm};
use frobforge::hodge::{
    check_polarization, check_weight_properties, cone_agreement, deligne_identities, h2_generation, opposite_filtration,
    split_checks, split_connection, vphs_to_frobenius, weight_filtration, PMHSData,
};
use frobforge::io::{self, IoError, Node};
use frobforge::quantum::{
    chart_bounds, euler_check, potential_assemble, qc_to_fts, quantum_product, reconstruct, wdvv_residual, CohModel,
    PotentialSeries,
};
use frobforge::report::ConditionReport;
use frobforge::unfolding::{extend_pairing, flatness_residuals, solve_unfolding, universal_unfold};
use frobforge::{Matrix, Rational};

pub use errors::{Exit, Failure};
use render::{report_text, table_text};

#[derive(Parser, Debug)]
#[command(name = "frobforge", version, about = "Exact computations for logarithmic Frobenius manifolds")]
pub struct Cli {
    /// Text to stdout (default) or the JSON result to stdout.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Also write the JSON result to this file.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for the library's parallel loops.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Model,
    Gw,
    Fts,
    Trtlep,
    Omega,
    Unfold,
    Pmhs,
}

#[derive(clap::Args, Debug, Clone)]
pub struct QcArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub gw: PathBuf,
    /// Largest curve degree kept; sets the chart bounds.
    #[arg(long)]
    pub max_degree: u32,
    /// Explicit chart bounds, comma separated, overriding `--max-degree`.
    #[arg(long, value_delimiter = ',')]
    pub bounds: Option<Vec<i32>>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a document against its schema and invariants.
    Validate {
        #[arg(value_enum)]
        kind: Kind,
        path: PathBuf,
        /// Model needed to read a `gw` table.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Flatness, FTS and metric conditions of a Frobenius type structure.
    CheckFts {
        #[arg(long)]
        fts: PathBuf,
        /// Also require the IC, GC and EC hypotheses.
        #[arg(long)]
        hypotheses: bool,
    },
    /// Frobenius type structure to (trTLEP)-structure, or back with `--trtlep`.
    FtsToTrtlep {
        #[arg(long, conflicts_with = "trtlep", required_unless_present = "trtlep")]
        fts: Option<PathBuf>,
        #[arg(long)]
        trtlep: Option<PathBuf>,
    },
    /// Flatness residuals of a connection form.
    Flatness {
        #[arg(long)]
        omega: PathBuf,
    },
    /// Solve the unfolding equations order by order.
    Unfold {
        /// A full `unfold.json`, or the base form when `--dfs` is given.
        #[arg(long)]
        base: PathBuf,
        /// `{"dfs": …}` or a bare `[[series…]…]`.
        #[arg(long)]
        dfs: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<u32>>,
    },
    /// Extend a pairing over the unfolding parameters of a form.
    ExtendPairing {
        #[arg(long)]
        omega: PathBuf,
        #[arg(long)]
        pairing: PathBuf,
    },
    /// Unfold a Frobenius type structure to a Frobenius germ.
    UniversalUnfold {
        #[arg(long)]
        fts: PathBuf,
        /// Order per unfolding parameter; a single value applies to all.
        #[arg(long, value_delimiter = ',')]
        order: Vec<u32>,
    },
    /// Assemble the genus-zero potential.
    QcPotential(QcArgs),
    /// Structure constants of the big quantum product.
    QcProduct(QcArgs),
    /// WDVV residual of the assembled potential.
    QcWdvv(QcArgs),
    /// Euler grading of the potential and of its third derivatives.
    QcEuler(QcArgs),
    /// Reconstruct invariants from a seed by WDVV.
    QcReconstruct {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        seed: PathBuf,
        #[arg(long)]
        max_degree: u32,
        /// Classes treated as given; default all of `H²`.
        #[arg(long, value_delimiter = ',')]
        w: Option<Vec<String>>,
    },
    /// Frobenius type structure on the small quantum locus.
    QcToFts {
        #[command(flatten)]
        qc: QcArgs,
        #[arg(long, value_delimiter = ',')]
        w: Option<Vec<String>>,
    },
    /// Monodromy weight filtration of `N = ΣN_j`.
    HodgeWeight {
        #[arg(long)]
        pmhs: PathBuf,
    },
    /// Deligne splitting and its identities.
    HodgeIpq {
        #[arg(long)]
        pmhs: PathBuf,
    },
    /// Opposite filtration `U_•`.
    HodgeOpposite {
        #[arg(long)]
        pmhs: PathBuf,
    },
    /// Polarized mixed Hodge structure conditions.
    HodgePmhs {
        #[arg(long)]
        pmhs: PathBuf,
    },
    /// Weight filtrations agree across the open cone.
    HodgeCone {
        #[arg(long)]
        pmhs: PathBuf,
        /// Cone points `a,b;c,d`; default a fixed spread of points.
        #[arg(long)]
        samples: Option<String>,
    },
    /// Frobenius type structure of the split nilpotent orbit.
    HodgeToFts {
        #[arg(long)]
        pmhs: PathBuf,
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        bound: i32,
    },
    /// PMHS to Frobenius germ.
    PipelineVphsToFrobenius {
        #[arg(long)]
        pmhs: PathBuf,
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        bound: i32,
        #[arg(long, default_value_t = 4)]
        order: u32,
    },
    /// Write the built-in example documents to a directory.
    EmitFixtures { dir: PathBuf },
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub exit: Exit,
    pub json: Value,
    pub text: String,
}

impl RunReport {
    fn new(json: Value, text: String, pass: bool) -> Self {
        RunReport { exit: if pass { Exit::Success } else { Exit::Condition }, json, text }
    }

    fn failure(f: &Failure) -> Self {
        RunReport {
            exit: f.exit,
            json: json!({"error": {"class": f.exit.name(), "message": f.message}}),
            text: format!("error ({}): {}\n", f.exit.name(), f.message),
        }
    }

    /// What to print on stdout for `format`.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.text.clone(),
            Format::Json => to_pretty(&self.json),
        }
    }
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

/// Applies `FORGE_MAX_TERMS` (default 10⁷).
pub fn apply_term_limit() -> Result<(), Failure> {
    match std::env::var("FORGE_MAX_TERMS") {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| Failure::validation(format!("FORGE_MAX_TERMS=`{v}` is not a count")))?;
            frobforge::series::set_max_terms(n);
        }
        Err(_) => frobforge::series::set_max_terms(10_000_000),
    }
    Ok(())
}

/// Parses `argv` (program name first) and runs the command; the JSON result
/// is also written to `--output` when given.
pub fn run<I, T>(argv: I) -> (RunReport, Format)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let exit = if e.use_stderr() { Exit::Validation } else { Exit::Success };
            return (RunReport { exit, json: Value::Null, text: e.to_string() }, Format::Text);
        }
    };
    let format = cli.format;
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(f) => RunReport::failure(&f),
    };
    if let Some(path) = &cli.output {
        if let Err(e) = fs::write(path, to_pretty(&report.json)) {
            let f = Failure::validation(format!("cannot write {}: {e}", path.display()));
            return (RunReport::failure(&f), format);
        }
    }
    (report, format)
}

pub fn execute(cli: &Cli) -> Result<RunReport, Failure> {
    apply_term_limit()?;
    if let Some(j) = cli.jobs {
        // a second build in the same process is refused; the first setting stays
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match &cli.command {
        Command::Validate { kind, path, model } => validate(*kind, path, model.as_deref()),
        Command::CheckFts { fts, hypotheses } => cmd_check_fts(fts, *hypotheses),
        Command::FtsToTrtlep { fts, trtlep } => cmd_fts_to_trtlep(fts.as_deref(), trtlep.as_deref()),
        Command::Flatness { omega } => {
            let om = read_wrapped(omega, "omega", io::read_omega)?;
            let rep = flatness_residuals(&om)?;
            Ok(RunReport::new(json!({"report": io::write_report(&rep)}), report_text("flatness", &rep), rep.all_pass()))
        }
        Command::Unfold { base, dfs, order } => cmd_unfold(base, dfs.as_deref(), order.as_deref()),
        Command::ExtendPairing { omega, pairing } => cmd_extend_pairing(omega, pairing),
        Command::UniversalUnfold { fts, order } => cmd_universal_unfold(fts, order),
        Command::QcPotential(a) => {
            let (m, phi) = potential(a)?;
            let text = format!("potential over {:?} with bounds {:?}: {} quantum terms\n", m.chart().names(), phi.quantum.bounds(), phi.quantum.len());
            Ok(RunReport::new(io::write_potential(&phi), text, true))
        }
        Command::QcProduct(a) => cmd_qc_product(a),
        Command::QcWdvv(a) => cmd_qc_wdvv(a),
        Command::QcEuler(a) => {
            let (m, phi) = potential(a)?;
            let rep = euler_check(&m, &phi)?;
            Ok(RunReport::new(json!({"report": io::write_report(&rep)}), report_text("euler grading", &rep), rep.all_pass()))
        }
        Command::QcReconstruct { model, seed, max_degree, w } => cmd_qc_reconstruct(model, seed, *max_degree, w.as_deref()),
        Command::QcToFts { qc, w } => {
            let (m, phi) = potential(qc)?;
            let wi = w_classes(&m, w.as_deref())?;
            let fts = qc_to_fts(&m, &phi, &wi)?;
            fts_report(&fts)
        }
        Command::HodgeWeight { pmhs } => cmd_hodge_weight(pmhs),
        Command::HodgeIpq { pmhs } => {
            let pm = read_doc(pmhs, io::read_pmhs)?;
            let sp = pm.splitting()?;
            let rep = deligne_identities(&pm)?;
            let json = json!({"I": io::write_ipq(&sp.ipq), "I0": io::write_ipq(&sp.i0pq), "report": io::write_report(&rep)});
            let mut text = String::from("I^{p,q} dimensions:\n");
            for ((p, q), s) in &sp.ipq {
                text.push_str(&format!("  ({p},{q})  {}\n", s.dim()));
            }
            text.push_str(&report_text("deligne identities", &rep));
            Ok(RunReport::new(json, text, rep.all_pass()))
        }
        Command::HodgeOpposite { pmhs } => {
            let pm = read_doc(pmhs, io::read_pmhs)?;
            let o = opposite_filtration(&pm)?;
            let json = json!({"U": io::write_inc_filtration(&o.u), "report": io::write_report(&o.report)});
            Ok(RunReport::new(json, report_text("opposite filtration", &o.report), o.report.all_pass()))
        }
        Command::HodgePmhs { pmhs } => {
            let pm = read_doc(pmhs, io::read_pmhs)?;
            let rep = check_polarization(&pm);
            let json = json!({"W": io::write_inc_filtration(&pm.weight), "mhs_failure": pm.mhs_failure, "report": io::write_report(&rep)});
            Ok(RunReport::new(json, report_text("polarized mixed Hodge structure", &rep), rep.all_pass()))
        }
        Command::HodgeCone { pmhs, samples } => cmd_hodge_cone(pmhs, samples.as_deref()),
        Command::HodgeToFts { pmhs, family, bound } => {
            let (pm, fam) = read_pmhs_family(pmhs, family.as_deref())?;
            let fts = split_connection(&pm, fam.as_ref(), *bound)?;
            let rep = split_checks(&fts)?;
            let json = json!({"fts": io::write_fts(&fts), "report": io::write_report(&rep)});
            Ok(RunReport::new(json, report_text("split structure", &rep), rep.all_pass()))
        }
        Command::PipelineVphsToFrobenius { pmhs, family, bound, order } => cmd_pipeline(pmhs, family.as_deref(), *bound, *order),
        Command::EmitFixtures { dir } => emit_fixtures(dir),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::validation(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Value, Failure> {
    io::parse_json(&read_text(path)?).map_err(|e| Failure::input(path, e))
}

fn read_doc<T>(path: &Path, f: impl Fn(&Node) -> Result<T, IoError>) -> Result<T, Failure> {
    let v = load(path)?;
    f(&Node::root(&v)).map_err(|e| Failure::input(path, e))
}

/// A document, or a command output wrapping it under `key`.
fn read_wrapped<T>(path: &Path, key: &str, f: impl Fn(&Node) -> Result<T, IoError>) -> Result<T, Failure> {
    let v = load(path)?;
    let root = Node::root(&v);
    let node = if root.opt("rank").is_none() { root.opt(key).unwrap_or(root) } else { root };
    f(&node).map_err(|e| Failure::input(path, e))
}

fn read_fts_doc(path: &Path) -> Result<frobforge::frobenius::FTSData, Failure> {
    read_wrapped(path, "fts", io::read_fts)
}

fn validate(kind: Kind, path: &Path, model: Option<&Path>) -> Result<RunReport, Failure> {
    let summary = match kind {
        Kind::Model => {
            let m = read_doc(path, io::read_model)?;
            format!("model with {} classes, dimX = {}", m.len(), m.dim_x)
        }
        Kind::Gw => {
            let mp = model.ok_or_else(|| Failure::validation("validating a gw table needs --model"))?;
            let m = read_doc(mp, io::read_model)?;
            let t = read_doc(path, |n| io::read_gw(n, &m))?;
            format!("{} invariants", t.len())
        }
        Kind::Fts => format!("rank {} structure", read_fts_doc(path)?.rank),
        Kind::Trtlep => format!("rank {} trTLEP structure", read_doc(path, io::read_trtlep)?.rank),
        Kind::Omega => format!("rank {} connection form", read_wrapped(path, "omega", io::read_omega)?.rank),
        Kind::Unfold => format!("{} unfolding parameters", read_doc(path, io::read_unfolding)?.dfs.len()),
        Kind::Pmhs => format!("dimension {} PMHS candidate", read_doc(path, io::read_pmhs)?.dim()),
    };
    Ok(RunReport::new(json!({"valid": true, "summary": summary}), format!("valid: {summary}\n"), true))
}

fn fts_report(fts: &frobforge::frobenius::FTSData) -> Result<RunReport, Failure> {
    let rep = check_fts(fts)?;
    let json = json!({"fts": io::write_fts(fts), "report": io::write_report(&rep)});
    Ok(RunReport::new(json, report_text("frobenius type structure", &rep), rep.all_pass()))
}

fn cmd_check_fts(path: &Path, hypotheses: bool) -> Result<RunReport, Failure> {
    let fts = read_fts_doc(path)?;
    let rep = check_fts(&fts)?;
    let h = check_hypotheses(&fts)?;
    let hyp = json!({"IC": h.ic, "GC": h.gc, "EC": h.ec, "xi_flat": h.xi_flat, "d": io::JsonCoeff::write(&h.d)});
    let mut text = report_text("frobenius type structure", &rep);
    text.push_str(&format!("hypotheses: IC {}  GC {}  EC {}  xi flat {}  d = {}\n", h.ic, h.gc, h.ec, h.xi_flat, h.d));
    let pass = rep.all_pass() && (!hypotheses || h.all_hold());
    Ok(RunReport::new(json!({"report": io::write_report(&rep), "hypotheses": hyp}), text, pass))
}

fn cmd_fts_to_trtlep(fts: Option<&Path>, trtlep: Option<&Path>) -> Result<RunReport, Failure> {
    match (fts, trtlep) {
        (Some(p), _) => {
            let f = read_fts_doc(p)?;
            let t = fts_to_trtlep(&f)?;
            let back = trtlep_to_fts(&t)?;
            let ok = back == f;
            let text = format!("trTLEP structure of rank {}, weight {}; round trip {}\n", t.rank, t.w, if ok { "exact" } else { "FAILED" });
            Ok(RunReport::new(json!({"trtlep": io::write_trtlep(&t), "round_trip": ok}), text, ok))
        }
        (None, Some(p)) => {
            let t = read_wrapped(p, "trtlep", io::read_trtlep)?;
            let f = trtlep_to_fts(&t)?;
            let ok = fts_to_trtlep(&f)? == t;
            let text = format!("Frobenius type structure of rank {}; round trip {}\n", f.rank, if ok { "exact" } else { "FAILED" });
            Ok(RunReport::new(json!({"fts": io::write_fts(&f), "round_trip": ok}), text, ok))
        }
        (None, None) => Err(Failure::validation("one of --fts or --trtlep is required")),
    }
}

fn cmd_unfold(base: &Path, dfs: Option<&Path>, order: Option<&[u32]>) -> Result<RunReport, Failure> {
    let mut problem = match dfs {
        None => read_doc(base, io::read_unfolding)?,
        Some(d) => {
            let b = load(base)?;
            let dv = load(d)?;
            let dfs_value = match &dv {
                Value::Object(o) => o.get("dfs").cloned().ok_or_else(|| Failure::input(d, Node::root(&dv).schema("missing field `dfs`")))?,
                other => other.clone(),
            };
            let mut doc = json!({"base": b, "dfs": dfs_value});
            let k = dfs_value.as_array().map_or(0, Vec::len);
            doc["order"] = dv.get("order").cloned().unwrap_or_else(|| json!(vec![0; k]));
            if let Some(u) = dv.get("unfold_vars") {
                doc["unfold_vars"] = u.clone();
            }
            io::read_unfolding(&Node::root(&doc)).map_err(|e| Failure::input(d, e))?
        }
    };
    if let Some(o) = order {
        problem.order = match o {
            [k] => vec![*k; problem.dfs.len()],
            _ if o.len() == problem.dfs.len() => o.to_vec(),
            _ => return Err(Failure::validation(format!("{} orders for {} unfolding parameters", o.len(), problem.dfs.len()))),
        };
    }
    let om = solve_unfolding(&problem)?;
    let rep = flatness_residuals(&om)?;
    let json = json!({"omega": io::write_omega(&om), "report": io::write_report(&rep)});
    let mut text = format!("unfolded along {:?} to orders {:?}; bounds {:?}\n", problem.unfold_vars, problem.order, om.bounds());
    text.push_str(&report_text("flatness", &rep));
    Ok(RunReport::new(json, text, rep.all_pass()))
}

fn cmd_extend_pairing(omega: &Path, pairing: &Path) -> Result<RunReport, Failure> {
    let om = read_wrapped(omega, "omega", io::read_omega)?;
    let (r0, w) = read_doc(pairing, |n| io::read_pairing(n, om.rank))?;
    let pd = extend_pairing(&om, &r0, w)?;
    let json = json!({"w": pd.w, "R": io::write_laurent(&pd.r), "min_z_power": pd.r.min_power(), "report": io::write_report(&pd.report)});
    let mut text = format!("pairing extended; lowest z power {:?} (weight {w})\n", pd.r.min_power());
    text.push_str(&report_text("pairing", &pd.report));
    Ok(RunReport::new(json, text, pd.report.all_pass()))
}

fn write_germ(g: &FrobeniusGerm) -> Value {
    let mult: Vec<Value> = g.mult.iter().map(|a| json!(a.iter().map(|b| io::write_series_vec(b)).collect::<Vec<_>>())).collect();
    json!({
        "dim": g.dim,
        "vars": g.vars.names(),
        "bounds": g.bounds(),
        "mult": mult,
        "unit": io::write_series_vec(&g.unit),
        "euler": io::write_series_vec(&g.euler),
        "metric": io::write_matrix_series(&g.metric),
        "d": io::JsonCoeff::write(&g.d),
    })
}

fn cmd_universal_unfold(path: &Path, order: &[u32]) -> Result<RunReport, Failure> {
    let fts = read_fts_doc(path)?;
    let l = fts.rank.saturating_sub(fts.vars.len());
    let order = match order {
        [k] => vec![*k; l],
        o => o.to_vec(),
    };
    let uf = universal_unfold(&fts, &order)?;
    let json = json!({"germ": write_germ(&uf.germ), "chosen": uf.chosen, "axioms": io::write_report(&uf.axioms)});
    let mut text = format!("germ of dimension {} over {:?}, bounds {:?}, d = {}\n", uf.germ.dim, uf.germ.vars.names(), uf.germ.bounds(), uf.germ.d);
    text.push_str(&report_text("frobenius axioms", &uf.axioms));
    Ok(RunReport::new(json, text, uf.axioms.all_pass()))
}

fn potential(a: &QcArgs) -> Result<(CohModel, PotentialSeries), Failure> {
    let m = read_doc(&a.model, io::read_model)?;
    let t = read_doc(&a.gw, |n| io::read_gw(n, &m))?;
    let bounds = match &a.bounds {
        Some(b) if b.len() == m.len() - 1 => b.clone(),
        Some(b) => return Err(Failure::validation(format!("{} bounds for {} chart variables", b.len(), m.len() - 1))),
        None => chart_bounds(&m, a.max_degree),
    };
    let phi = potential_assemble(&m, &t, &bounds)?;
    Ok((m, phi))
}

fn cmd_qc_product(a: &QcArgs) -> Result<RunReport, Failure> {
    let (m, phi) = potential(a)?;
    let p = quantum_product(&m, &phi)?;
    let names: Vec<&str> = m.classes.iter().map(|c| c.name.as_str()).collect();
    let mut entries = serde_json::Map::new();
    let mut rows = Vec::new();
    for (i, ai) in p.a.iter().enumerate() {
        for (j, aij) in ai.iter().enumerate().skip(i) {
            for (k, s) in aij.iter().enumerate() {
                if !s.is_zero() {
                    let key = format!("{}*{}->{}", names[i], names[j], names[k]);
                    rows.push(vec![format!("{} * {}", names[i], names[j]), names[k].to_string(), s.to_poly_string()]);
                    entries.insert(key, io::write_series(s));
                }
            }
        }
    }
    let text = table_text(&["product", "coefficient of", "series"], &rows);
    Ok(RunReport::new(json!({"vars": p.vars.names(), "bounds": p.bounds(), "structure_constants": entries}), text, true))
}

fn cmd_qc_wdvv(a: &QcArgs) -> Result<RunReport, Failure> {
    let (m, phi) = potential(a)?;
    let res = wdvv_residual(&m, &phi)?;
    let mut rep = ConditionReport::new();
    let terms: usize = res.components.iter().map(|(_, s)| s.len()).sum();
    let first = res.components.iter().find(|(_, s)| !s.is_zero()).map(|((i, j, k, l), s)| {
        let lead = s.terms().next().map(|(e, c)| format!("{e:?}: {c}")).unwrap_or_default();
        format!("({i},{j},{k},{l}) {lead}")
    });
    rep.push_count("wdvv", terms, first.unwrap_or_default());
    let r = m.h2().len();
    let lowest: Vec<Option<u32>> = (0..r).map(|i| res.lowest_q_degree(i + 1)).collect();
    let json = json!({"report": io::write_report(&rep), "lowest_q_degree": lowest, "bounds": phi.quantum.bounds()});
    let mut text = report_text("WDVV", &rep);
    if !res.is_zero() {
        text.push_str(&format!("lowest q-degree of the residual: {lowest:?}\n"));
    }
    Ok(RunReport::new(json, text, res.is_zero()))
}

fn w_classes(m: &CohModel, w: Option<&[String]>) -> Result<Vec<usize>, Failure> {
    match w {
        None => Ok(m.h2()),
        Some(names) => names
            .iter()
            .map(|n| m.index_of(n).ok_or_else(|| Failure::validation(format!("unknown class `{n}` in --w"))))
            .collect(),
    }
}

fn cmd_qc_reconstruct(model: &Path, seed: &Path, max_degree: u32, w: Option<&[String]>) -> Result<RunReport, Failure> {
    let m = read_doc(model, io::read_model)?;
    let s = read_doc(seed, |n| io::read_gw(n, &m))?;
    let wi = w_classes(&m, w)?;
    let t = reconstruct(&m, &s, &wi, max_degree)?;
    let others = m.others();
    let rows: Vec<Vec<String>> = t
        .entries
        .iter()
        .map(|(k, v)| {
            let ins: Vec<String> =
                k.ins.iter().zip(&others).filter(|(&j, _)| j > 0).map(|(&j, &c)| format!("{}^{j}", m.classes[c].name)).collect();
            vec![format!("{:?}", k.beta), ins.join(" "), v.to_string()]
        })
        .collect();
    let text = table_text(&["beta", "insertions", "value"], &rows);
    Ok(RunReport::new(io::write_gw(&m, &t), text, true))
}

fn cmd_hodge_weight(path: &Path) -> Result<RunReport, Failure> {
    let v = load(path)?;
    let root = Node::root(&v);
    let parsed = (|| -> Result<(Matrix, i32), IoError> {
        let w = root.field("w")?.i32()?;
        let nn = root.field("N")?;
        let mut total: Option<Matrix> = None;
        for x in nn.items()? {
            let m: Matrix = io::read_matrix(&x, None)?;
            if !m.is_square() || m.rows() == 0 || total.as_ref().is_some_and(|t| t.rows() != m.rows()) {
                return Err(x.schema("N matrices must be square of one size"));
            }
            if !m.is_nilpotent() {
                return Err(x.invariant(frobforge::hodge::HodgeError::NotNilpotent.to_string()));
            }
            total = Some(match total {
                Some(t) => t.add(&m),
                None => m,
            });
        }
        let dim = match root.opt("dim") {
            Some(d) => d.usize()?,
            None => total.as_ref().map_or(0, Matrix::rows),
        };
        Ok((total.unwrap_or_else(|| Matrix::zeros(dim, dim)), w))
    })()
    .map_err(|e| Failure::input(path, e))?;
    let (n, w) = parsed;
    let wf = weight_filtration(&n, w)?;
    let rep = check_weight_properties(&n, w, &wf);
    let mut text = String::from("W_l dimensions:\n");
    let (lo, hi) = wf.range();
    for l in lo..=hi {
        text.push_str(&format!("  W_{l}  {}\n", wf.get(l).dim()));
    }
    text.push_str(&report_text("weight filtration", &rep));
    Ok(RunReport::new(json!({"W": io::write_inc_filtration(&wf), "report": io::write_report(&rep)}), text, rep.all_pass()))
}

fn default_samples(r: usize) -> Vec<Vec<Rational>> {
    let ones = vec![frobforge::int(1); r];
    let up = (1..=r as i64).map(frobforge::int).collect();
    let down = (1..=r as i64).rev().map(|k| frobforge::int(2 * k + 1)).collect();
    vec![ones, up, down]
}

fn cmd_hodge_cone(path: &Path, samples: Option<&str>) -> Result<RunReport, Failure> {
    let pm = read_doc(path, io::read_pmhs)?;
    let r = pm.nlist.len();
    let pts = match samples {
        None => default_samples(r),
        Some(s) => s
            .split(';')
            .map(|pt| {
                let v = pt.split(',').map(|x| frobforge::scalar::parse_rational(x)).collect::<Option<Vec<_>>>();
                match v {
                    Some(v) if v.len() == r && v.iter().all(|x| *x > frobforge::int(0)) => Ok(v),
                    _ => Err(Failure::validation(format!("`{pt}` is not a point with {r} positive coordinates"))),
                }
            })
            .collect::<Result<_, _>>()?,
    };
    let ok = cone_agreement(&pm.nlist, pm.space.w, &pts)?;
    let text = format!("weight filtration constant on {} cone points: {ok}\n", pts.len());
    let json = json!({"agree": ok, "samples": pts.iter().map(|p| p.iter().map(io::JsonCoeff::write).collect::<Vec<_>>()).collect::<Vec<_>>()});
    Ok(RunReport::new(json, text, ok))
}

fn read_pmhs_family(pmhs: &Path, family: Option<&Path>) -> Result<(PMHSData, Option<frobforge::hodge::FFamily>), Failure> {
    let pm = read_doc(pmhs, io::read_pmhs)?;
    let fam = family.map(|f| read_doc(f, |n| io::read_family(n, pm.dim()))).transpose()?;
    Ok((pm, fam))
}

fn cmd_pipeline(pmhs: &Path, family: Option<&Path>, bound: i32, order: u32) -> Result<RunReport, Failure> {
    let (pm, fam) = read_pmhs_family(pmhs, family)?;
    let h2 = h2_generation(&pm.flim, &pm.nlist)?;
    let out = vphs_to_frobenius(&pm, fam.as_ref(), bound, order)?;
    let spec: Vec<Value> = (0..out.fts.rank).map(|i| io::JsonCoeff::write(&out.fts.v.get(i, i).constant_term())).collect();
    let v0 = out.fts.v.constant_matrix();
    let v_diag = (0..v0.rows()).all(|i| (0..v0.cols()).all(|j| i == j || v0[(i, j)] == frobforge::int(0)));
    let json = json!({
        "fts": io::write_fts(&out.fts),
        "checks": io::write_report(&out.checks),
        "h2_generation": {"generated": h2.generated, "rank_condition": h2.rank_condition},
        "v_diagonal": v_diag,
        "v_spectrum": spec,
        "germ": write_germ(&out.unfolding.germ),
        "axioms": io::write_report(&out.unfolding.axioms),
    });
    let mut text = format!(
        "split structure of rank {} over {:?}; h2 generation {}; germ over {:?}\n",
        out.fts.rank,
        out.fts.vars.names(),
        h2.generated,
        out.unfolding.germ.vars.names()
    );
    text.push_str(&report_text("split structure", &out.checks));
    text.push_str(&report_text("frobenius axioms", &out.unfolding.axioms));
    let pass = out.checks.all_pass() && out.unfolding.axioms.all_pass() && h2.generated;
    Ok(RunReport::new(json, text, pass))
}

/// The example documents shipped with the crate, by file name.
pub fn fixture_documents() -> Vec<(&'static str, Value)> {
    let p2 = fixtures::p2_model();
    let mut seed = frobforge::quantum::GWTable::new();
    seed.insert(frobforge::quantum::GWKey { beta: vec![1], ins: vec![2] }, frobforge::int(1));
    let p1 = fixtures::p1xp1_model();
    let quintic = fixtures::quintic_model();
    let (base, r0, w) = fixtures::unfolding_base_2x2(6);
    let problem = fixtures::unfolding_problem_2x2(4);
    let nilpotent = |m: &Matrix, w: i32| json!({"N": [io::write_matrix(m)], "w": w});
    vec![
        ("p2.json", io::write_model(&p2)),
        ("p2_gw.json", io::write_gw(&p2, &fixtures::p2_table(5))),
        ("n1.json", io::write_gw(&p2, &seed)),
        ("p1xp1.json", io::write_model(&p1)),
        ("p1xp1_gw.json", io::write_gw(&p1, &fixtures::p1xp1_table())),
        ("quintic.json", io::write_model(&quintic)),
        ("quintic_gw.json", io::write_gw(&quintic, &fixtures::quintic_table())),
        ("omega.json", io::write_omega(&base)),
        ("dfs.json", json!({"dfs": problem.dfs.iter().map(|v| io::write_series_vec(v)).collect::<Vec<_>>(), "unfold_vars": problem.unfold_vars})),
        ("unfold.json", io::write_unfolding(&problem)),
        ("pairing.json", io::write_pairing(&r0, w)),
        ("tate.json", io::write_pmhs(&fixtures::tate_pmhs(1))),
        ("elliptic.json", io::write_pmhs(&fixtures::elliptic_pmhs())),
        ("rank4.json", io::write_pmhs(&fixtures::rank4_pmhs())),
        ("cone.json", io::write_pmhs(&fixtures::cone_pmhs())),
        ("jordan_3_1.json", nilpotent(&fixtures::jordan_nilpotent(&[3, 1]), 2)),
    ]
}

fn emit_fixtures(dir: &Path) -> Result<RunReport, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::validation(format!("cannot create {}: {e}", dir.display())))?;
    let docs = fixture_documents();
    for (name, v) in &docs {
        let p = dir.join(name);
        fs::write(&p, to_pretty(v)).map_err(|e| Failure::validation(format!("cannot write {}: {e}", p.display())))?;
    }
    let names: Vec<&str> = docs.iter().map(|(n, _)| *n).collect();
    Ok(RunReport::new(json!({"written": names}), format!("wrote {} files to {}\n", names.len(), dir.display()), true))
}
