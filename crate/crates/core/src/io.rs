//! JSON encodings of the library types.
//!
//! Readers walk a [`serde_json::Value`] through [`Node`], which carries the
//! path of the value being read, so every failure names its location, e.g.
//! `rconn[0][1][0].terms[2].c` or `N[0]`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::frobenius::{FTSData, TrTLEPData};
use crate::hodge::{BilinearSpace, DecFiltration, FFamily, GSubspace, HodgeError, IncFiltration, Ipq, PMHSData, GQ};
use crate::linalg::Matrix;
use crate::matrix::{LaurentMatrix, MatrixSeries};
use crate::quantum::{CohClass, CohModel, GWKey, GWTable, PotentialSeries};
use crate::report::ConditionReport;
use crate::scalar::{format_rational, parse_rational, Coeff, GaussianRational, Rational};
use crate::series::{TruncatedSeries, VarClass, VariableSet};
use crate::unfolding::{ConnectionForm, UnfoldingProblem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema violation at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("invariant violation at {path}: {msg}")]
    Invariant { path: String, msg: String },
}

pub type IoResult<T> = Result<T, IoError>;

pub fn parse_json(text: &str) -> IoResult<Value> {
    serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))
}

/// A JSON value together with its location in the document.
#[derive(Clone, Debug)]
pub struct Node<'a> {
    pub value: &'a Value,
    pub path: String,
}

impl<'a> Node<'a> {
    pub fn root(value: &'a Value) -> Self {
        Node { value, path: String::new() }
    }

    fn at(&self, value: &'a Value, path: String) -> Self {
        Node { value, path }
    }

    pub fn location(&self) -> String {
        if self.path.is_empty() {
            "(root)".into()
        } else {
            self.path.clone()
        }
    }

    pub fn schema(&self, msg: impl Into<String>) -> IoError {
        IoError::Schema { path: self.location(), msg: msg.into() }
    }

    pub fn invariant(&self, msg: impl Into<String>) -> IoError {
        IoError::Invariant { path: self.location(), msg: msg.into() }
    }

    fn key_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    pub fn opt(&self, key: &str) -> Option<Node<'a>> {
        self.value.as_object()?.get(key).map(|v| self.at(v, self.key_path(key)))
    }

    pub fn field(&self, key: &str) -> IoResult<Node<'a>> {
        if !self.value.is_object() {
            return Err(self.schema("expected an object"));
        }
        self.opt(key).ok_or_else(|| self.schema(format!("missing field `{key}`")))
    }

    pub fn items(&self) -> IoResult<Vec<Node<'a>>> {
        let arr = self.value.as_array().ok_or_else(|| self.schema("expected an array"))?;
        Ok(arr.iter().enumerate().map(|(i, v)| self.at(v, format!("{}[{i}]", self.path))).collect())
    }

    pub fn items_len(&self, len: usize) -> IoResult<Vec<Node<'a>>> {
        let items = self.items()?;
        if items.len() != len {
            return Err(self.schema(format!("expected {len} entries, found {}", items.len())));
        }
        Ok(items)
    }

    pub fn entries(&self) -> IoResult<Vec<(&'a str, Node<'a>)>> {
        let obj = self.value.as_object().ok_or_else(|| self.schema("expected an object"))?;
        Ok(obj.iter().map(|(k, v)| (k.as_str(), self.at(v, self.key_path(k)))).collect())
    }

    pub fn str(&self) -> IoResult<&'a str> {
        self.value.as_str().ok_or_else(|| self.schema("expected a string"))
    }

    pub fn bool(&self) -> IoResult<bool> {
        self.value.as_bool().ok_or_else(|| self.schema("expected a boolean"))
    }

    pub fn i64(&self) -> IoResult<i64> {
        self.value.as_i64().ok_or_else(|| self.schema("expected an integer"))
    }

    pub fn i32(&self) -> IoResult<i32> {
        i32::try_from(self.i64()?).map_err(|_| self.schema("integer out of range"))
    }

    pub fn u32(&self) -> IoResult<u32> {
        u32::try_from(self.i64()?).map_err(|_| self.schema("expected a nonnegative integer"))
    }

    pub fn usize(&self) -> IoResult<usize> {
        usize::try_from(self.i64()?).map_err(|_| self.schema("expected a nonnegative integer"))
    }

    /// `"p/q"`, `"p"` or a JSON integer.
    pub fn rational(&self) -> IoResult<Rational> {
        match self.value {
            Value::String(s) => parse_rational(s).ok_or_else(|| self.schema(format!("`{s}` is not a rational p/q"))),
            Value::Number(n) if n.is_i64() => Ok(Rational::from_integer(n.as_i64().expect("i64").into())),
            _ => Err(self.schema("expected a rational string \"p/q\" or an integer")),
        }
    }
}

/// Coefficient types with a JSON form.
pub trait JsonCoeff: Coeff {
    fn read(n: &Node) -> IoResult<Self>;
    fn write(&self) -> Value;
}

impl JsonCoeff for Rational {
    fn read(n: &Node) -> IoResult<Self> {
        n.rational()
    }
    fn write(&self) -> Value {
        Value::String(format_rational(self))
    }
}

/// `{"re": "p/q", "im": "p/q"}`, or a plain rational for real values.
impl JsonCoeff for GaussianRational {
    fn read(n: &Node) -> IoResult<Self> {
        if n.value.is_object() {
            let re = n.opt("re").map(|x| x.rational()).transpose()?.unwrap_or_else(|| crate::int(0));
            let im = n.opt("im").map(|x| x.rational()).transpose()?.unwrap_or_else(|| crate::int(0));
            Ok(GaussianRational::new(re, im))
        } else {
            n.rational().map(GaussianRational::real)
        }
    }
    fn write(&self) -> Value {
        if self.is_real() {
            self.re.write()
        } else {
            json!({"re": self.re.write(), "im": self.im.write()})
        }
    }
}

/// Shared variables and bounds of a document.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub vars: Arc<VariableSet>,
    pub bounds: Vec<i32>,
}

pub fn read_frame(n: &Node) -> IoResult<Frame> {
    let names = n.field("vars")?.items()?;
    let classes = n.field("classes")?.items_len(names.len())?;
    let bounds = n.field("bounds")?.items_len(names.len())?;
    let mut pairs = Vec::new();
    for (name, class) in names.iter().zip(&classes) {
        let c = class.str()?;
        let c = VarClass::parse(c).ok_or_else(|| class.schema(format!("unknown variable class `{c}`")))?;
        pairs.push((name.str()?.to_string(), c));
    }
    let vars = VariableSet::new(pairs).map_err(|e| n.field("vars").map_or_else(|x| x, |v| v.invariant(e.to_string())))?;
    let bounds = bounds.iter().map(|b| b.i32()).collect::<IoResult<Vec<_>>>()?;
    if let Some((i, _)) = bounds.iter().enumerate().find(|(_, &b)| b < 0) {
        return Err(n.schema(format!("bounds[{i}] is negative")));
    }
    Ok(Frame { vars: Arc::new(vars), bounds })
}

fn frame_json(vars: &VariableSet, bounds: &[i32]) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("vars".into(), json!(vars.names()));
    m.insert("classes".into(), json!(vars.classes().iter().map(|c| c.as_str()).collect::<Vec<_>>()));
    m.insert("bounds".into(), json!(bounds));
    m
}

fn read_terms<C: JsonCoeff>(n: &Node, frame: &Frame) -> IoResult<TruncatedSeries<C>> {
    let mut terms = Vec::new();
    for t in n.items()? {
        let e = t.field("e")?;
        let exps = e.items_len(frame.vars.len())?.iter().map(|x| x.u32()).collect::<IoResult<Vec<_>>>()?;
        if exps.iter().zip(&frame.bounds).any(|(&x, &b)| x as i64 > b as i64) {
            return Err(e.invariant(format!("exponent {exps:?} exceeds bounds {:?}", frame.bounds)));
        }
        terms.push((exps, C::read(&t.field("c")?)?));
    }
    TruncatedSeries::from_terms(&frame.vars, &frame.bounds, terms).map_err(|e| n.invariant(e.to_string()))
}

/// A series literal `{"vars", "classes", "bounds", "terms"}`. Inside a
/// document with a shared frame, an entry may also be `{"terms": …}`, a bare
/// term list, or a constant.
pub fn read_series<C: JsonCoeff>(n: &Node, frame: Option<&Frame>) -> IoResult<TruncatedSeries<C>> {
    match (n.value, frame) {
        (Value::Object(o), _) if o.contains_key("vars") => {
            let own = read_frame(n)?;
            if let Some(f) = frame {
                if *f.vars != *own.vars || f.bounds != own.bounds {
                    return Err(n.schema("series variables or bounds differ from the document's"));
                }
            }
            read_terms(&n.field("terms")?, &own)
        }
        (Value::Object(o), Some(f)) if o.contains_key("terms") => read_terms(&n.field("terms")?, f),
        (Value::Array(_), Some(f)) => read_terms(n, f),
        (Value::String(_) | Value::Number(_) | Value::Object(_), Some(f)) => {
            Ok(TruncatedSeries::constant(&f.vars, &f.bounds, C::read(n)?))
        }
        _ => Err(n.schema("expected a series literal")),
    }
}

pub fn write_series<C: JsonCoeff>(s: &TruncatedSeries<C>) -> Value {
    let mut m = frame_json(s.vars(), s.bounds());
    let terms: Vec<Value> = s.terms().map(|(e, c)| json!({"e": e, "c": c.write()})).collect();
    m.insert("terms".into(), Value::Array(terms));
    Value::Object(m)
}

pub fn read_series_vec(n: &Node, frame: &Frame, len: Option<usize>) -> IoResult<Vec<TruncatedSeries<Rational>>> {
    let items = match len {
        Some(l) => n.items_len(l)?,
        None => n.items()?,
    };
    items.iter().map(|x| read_series(x, Some(frame))).collect()
}

pub fn write_series_vec<C: JsonCoeff>(v: &[TruncatedSeries<C>]) -> Value {
    Value::Array(v.iter().map(write_series).collect())
}

/// A row-major array of rows of series entries.
pub fn read_matrix_series<C: JsonCoeff>(n: &Node, frame: &Frame, shape: Option<(usize, usize)>) -> IoResult<MatrixSeries<C>> {
    let rows = n.items()?;
    let nr = shape.map_or(rows.len(), |s| s.0);
    if rows.len() != nr {
        return Err(n.schema(format!("expected {nr} rows, found {}", rows.len())));
    }
    let nc = match shape {
        Some((_, c)) => c,
        None => rows.first().map(|r| r.items().map(|x| x.len())).transpose()?.unwrap_or(0),
    };
    let mut entries = Vec::with_capacity(nr * nc);
    for r in &rows {
        for x in r.items_len(nc)? {
            entries.push(read_series(&x, Some(frame))?);
        }
    }
    MatrixSeries::from_entries(nr, nc, entries).map_err(|e| n.invariant(e.to_string()))
}

pub fn write_matrix_series<C: JsonCoeff>(m: &MatrixSeries<C>) -> Value {
    Value::Array((0..m.rows()).map(|i| Value::Array((0..m.cols()).map(|j| write_series(m.get(i, j))).collect())).collect())
}

fn read_matrix_list(n: &Node, frame: &Frame, count: usize, size: usize) -> IoResult<Vec<MatrixSeries>> {
    n.items_len(count)?.iter().map(|x| read_matrix_series(x, frame, Some((size, size)))).collect()
}

fn write_matrix_list(v: &[MatrixSeries]) -> Value {
    Value::Array(v.iter().map(write_matrix_series).collect())
}

/// A row-major constant matrix.
pub fn read_matrix<C: JsonCoeff>(n: &Node, shape: Option<(usize, usize)>) -> IoResult<Matrix<C>> {
    let rows = n.items()?;
    let nr = shape.map_or(rows.len(), |s| s.0);
    if rows.len() != nr {
        return Err(n.schema(format!("expected {nr} rows, found {}", rows.len())));
    }
    let nc = match shape {
        Some((_, c)) => c,
        None => rows.first().map(|r| r.items().map(|x| x.len())).transpose()?.unwrap_or(0),
    };
    let mut data = Vec::with_capacity(nr);
    for r in &rows {
        data.push(r.items_len(nc)?.iter().map(C::read).collect::<IoResult<Vec<_>>>()?);
    }
    Ok(Matrix::from_fn(nr, nc, |i, j| data[i][j].clone()))
}

pub fn write_matrix<C: JsonCoeff>(m: &Matrix<C>) -> Value {
    Value::Array((0..m.rows()).map(|i| Value::Array((0..m.cols()).map(|j| m[(i, j)].write()).collect())).collect())
}

/// `{"k": matrix-series, …}` keyed by the power of `z`.
pub fn read_laurent(n: &Node, frame: &Frame, size: usize) -> IoResult<LaurentMatrix> {
    let mut out = LaurentMatrix::zero(size, &frame.vars, &frame.bounds);
    for (k, x) in n.entries()? {
        let power: i32 = k.parse().map_err(|_| x.schema(format!("`{k}` is not an integer power of z")))?;
        let m = read_matrix_series(&x, frame, Some((size, size)))?;
        out.add_term(power, &m).map_err(|e| x.invariant(e.to_string()))?;
    }
    Ok(out)
}

pub fn write_laurent(l: &LaurentMatrix) -> Value {
    Value::Object(l.coeffs().iter().map(|(k, m)| (k.to_string(), write_matrix_series(m))).collect())
}

pub fn write_report(rep: &ConditionReport) -> Value {
    Value::Array(
        rep.conditions
            .iter()
            .map(|c| {
                let mut m = Map::new();
                m.insert("condition".into(), json!(c.name));
                m.insert("pass".into(), json!(c.pass));
                m.insert("residual_nonzero_terms".into(), json!(c.nonzero_terms));
                if !c.detail.is_empty() {
                    m.insert("detail".into(), json!(c.detail));
                }
                Value::Object(m)
            })
            .collect(),
    )
}

/// `fts.json`.
pub fn read_fts(n: &Node) -> IoResult<FTSData> {
    let frame = read_frame(n)?;
    let rank = n.field("rank")?.usize()?;
    let m = frame.vars.len();
    let fts = FTSData {
        rank,
        vars: frame.vars.clone(),
        rconn: read_matrix_list(&n.field("rconn")?, &frame, m, rank)?,
        higgs: read_matrix_list(&n.field("higgs")?, &frame, m, rank)?,
        u: read_matrix_series(&n.field("u")?, &frame, Some((rank, rank)))?,
        v: read_matrix_series(&n.field("v")?, &frame, Some((rank, rank)))?,
        g: read_matrix_series(&n.field("g")?, &frame, Some((rank, rank)))?,
        xi: read_series_vec(&n.field("xi")?, &frame, Some(rank))?,
        w: n.field("w")?.i32()?,
        d: n.field("d")?.rational()?,
    };
    fts.validate().map_err(|e| n.invariant(e.to_string()))?;
    Ok(fts)
}

pub fn write_fts(f: &FTSData) -> Value {
    let mut m = frame_json(&f.vars, &f.bounds());
    m.insert("rank".into(), json!(f.rank));
    m.insert("rconn".into(), write_matrix_list(&f.rconn));
    m.insert("higgs".into(), write_matrix_list(&f.higgs));
    m.insert("u".into(), write_matrix_series(&f.u));
    m.insert("v".into(), write_matrix_series(&f.v));
    m.insert("g".into(), write_matrix_series(&f.g));
    m.insert("xi".into(), write_series_vec(&f.xi));
    m.insert("w".into(), json!(f.w));
    m.insert("d".into(), f.d.write());
    Value::Object(m)
}

/// `omega.json`: `{"rank", "vars", "classes", "bounds", "a_log", "c_log",
/// "c_hol", "f_unf", "u", "v"}`; absent component lists are zero.
pub fn read_omega(n: &Node) -> IoResult<ConnectionForm> {
    let frame = read_frame(n)?;
    let rank = n.field("rank")?.usize()?;
    let count = |c| frame.vars.indices_of(c).len();
    let list = |key: &str, c: VarClass| -> IoResult<Vec<MatrixSeries>> {
        match n.opt(key) {
            Some(x) => read_matrix_list(&x, &frame, count(c), rank),
            None => Ok(vec![MatrixSeries::zero(rank, rank, &frame.vars, &frame.bounds); count(c)]),
        }
    };
    let om = ConnectionForm {
        rank,
        vars: frame.vars.clone(),
        a_log: list("a_log", VarClass::Log)?,
        c_log: list("c_log", VarClass::Log)?,
        c_hol: list("c_hol", VarClass::Hol)?,
        f_unf: list("f_unf", VarClass::Unfold)?,
        u: read_matrix_series(&n.field("u")?, &frame, Some((rank, rank)))?,
        v: read_matrix_series(&n.field("v")?, &frame, Some((rank, rank)))?,
    };
    om.validate().map_err(|e| n.invariant(e.to_string()))?;
    Ok(om)
}

pub fn write_omega(om: &ConnectionForm) -> Value {
    let mut m = frame_json(&om.vars, &om.bounds());
    m.insert("rank".into(), json!(om.rank));
    m.insert("a_log".into(), write_matrix_list(&om.a_log));
    m.insert("c_log".into(), write_matrix_list(&om.c_log));
    m.insert("c_hol".into(), write_matrix_list(&om.c_hol));
    m.insert("f_unf".into(), write_matrix_list(&om.f_unf));
    m.insert("u".into(), write_matrix_series(&om.u));
    m.insert("v".into(), write_matrix_series(&om.v));
    Value::Object(m)
}

/// `unfold.json`: `{"base": omega, "dfs": [[series…]…], "order": [K…]}`,
/// with optional `"unfold_vars"` (default `y`, or `y1, y2, …`).
pub fn read_unfolding(n: &Node) -> IoResult<UnfoldingProblem> {
    let base_node = n.field("base")?;
    let base = read_omega(&base_node)?;
    let frame = Frame { vars: base.vars.clone(), bounds: base.bounds() };
    let dfs_node = n.field("dfs")?;
    let mut dfs = Vec::new();
    for col in dfs_node.items()? {
        let entries = col.items_len(base.rank)?;
        dfs.push(entries.iter().map(|x| read_series(x, if x.opt("vars").is_some() { None } else { Some(&frame) })).collect::<IoResult<Vec<_>>>()?);
    }
    let order = n.field("order")?.items_len(dfs.len())?.iter().map(|x| x.u32()).collect::<IoResult<Vec<_>>>()?;
    let unfold_vars = match n.opt("unfold_vars") {
        Some(x) => x.items_len(dfs.len())?.iter().map(|v| v.str().map(String::from)).collect::<IoResult<Vec<_>>>()?,
        None if dfs.len() == 1 => vec!["y".into()],
        None => (1..=dfs.len()).map(|i| format!("y{i}")).collect(),
    };
    Ok(UnfoldingProblem { base, unfold_vars, dfs, order })
}

pub fn write_unfolding(p: &UnfoldingProblem) -> Value {
    json!({
        "base": write_omega(&p.base),
        "dfs": p.dfs.iter().map(|v| write_series_vec(v)).collect::<Vec<_>>(),
        "order": p.order,
        "unfold_vars": p.unfold_vars,
    })
}

/// `{"vars", "classes", "bounds", "w", "r0": {"k": matrix-series}}`.
pub fn read_pairing(n: &Node, size: usize) -> IoResult<(LaurentMatrix, i32)> {
    let frame = read_frame(n)?;
    Ok((read_laurent(&n.field("r0")?, &frame, size)?, n.field("w")?.i32()?))
}

pub fn write_pairing(r: &LaurentMatrix, w: i32) -> Value {
    let mut m = frame_json(r.vars(), r.bounds());
    m.insert("w".into(), json!(w));
    m.insert("r0".into(), write_laurent(r));
    Value::Object(m)
}

pub fn read_trtlep(n: &Node) -> IoResult<TrTLEPData> {
    let omega = read_omega(&n.field("omega")?)?;
    let frame = Frame { vars: omega.vars.clone(), bounds: omega.bounds() };
    Ok(TrTLEPData {
        rank: omega.rank,
        pmat: read_laurent(&n.field("pmat")?, &frame, omega.rank)?,
        w: n.field("w")?.i32()?,
        xi: read_series_vec(&n.field("xi")?, &frame, Some(omega.rank))?,
        d: n.field("d")?.rational()?,
        omega,
    })
}

pub fn write_trtlep(t: &TrTLEPData) -> Value {
    json!({
        "rank": t.rank,
        "omega": write_omega(&t.omega),
        "pmat": write_laurent(&t.pmat),
        "w": t.w,
        "xi": write_series_vec(&t.xi),
        "d": t.d.write(),
    })
}

fn class_index(n: &Node, names: &[String]) -> IoResult<usize> {
    match n.value {
        Value::String(s) => names.iter().position(|c| c == s).ok_or_else(|| n.schema(format!("unknown class `{s}`"))),
        _ => {
            let i = n.usize()?;
            if i >= names.len() {
                return Err(n.schema(format!("class index {i} out of range")));
            }
            Ok(i)
        }
    }
}

/// `model.json`: `{"dimX", "classes": [{"name", "deg", "h2"}], "cup":
/// [[i, j, k, c]…], "pairing", "c1", "mori_rank", "beta_pairing"}`. Cup
/// triples are symmetrized; products with the degree-0 unit `T_0` may be
/// omitted. Class references are indices or names.
pub fn read_model(n: &Node) -> IoResult<CohModel> {
    let dim_x = n.field("dimX")?.u32()?;
    let class_nodes = n.field("classes")?.items()?;
    let mut classes = Vec::new();
    for c in &class_nodes {
        let deg = c.field("deg")?.u32()?;
        let h2 = match c.opt("h2") {
            Some(x) => x.bool()?,
            None => deg == 2,
        };
        classes.push(CohClass { name: c.field("name")?.str()?.to_string(), deg, h2 });
    }
    let len = classes.len();
    if len == 0 {
        return Err(n.field("classes")?.schema("at least one class is required"));
    }
    let names: Vec<String> = classes.iter().map(|c| c.name.clone()).collect();
    let zero = crate::int(0);
    let mut cup = vec![vec![vec![zero.clone(); len]; len]; len];
    for i in 0..len {
        cup[0][i][i] = crate::int(1);
        cup[i][0][i] = crate::int(1);
    }
    let cup_node = n.field("cup")?;
    let mut seen: BTreeMap<(usize, usize, usize), Rational> = BTreeMap::new();
    for t in cup_node.items()? {
        let parts = t.items_len(4)?;
        let (i, j, k) = (class_index(&parts[0], &names)?, class_index(&parts[1], &names)?, class_index(&parts[2], &names)?);
        let c = parts[3].rational()?;
        let key = (i.min(j), i.max(j), k);
        if let Some(old) = seen.insert(key, c.clone()) {
            if old != c {
                return Err(t.invariant(format!("conflicting cup constants for ({i},{j},{k})")));
            }
        }
        cup[i][j][k] = c.clone();
        cup[j][i][k] = c;
    }
    let pairing_node = n.field("pairing")?;
    let pairing: Matrix = read_matrix(&pairing_node, Some((len, len)))?;
    for i in 0..len {
        for j in 0..len {
            if !pairing[(i, j)].is_zero() && classes[i].deg + classes[j].deg != 2 * dim_x {
                return Err(pairing_node.invariant(format!(
                    "entry ({i},{j}) pairs degrees {} and {}, not complementary",
                    classes[i].deg, classes[j].deg
                )));
            }
        }
    }
    let c1 = n.field("c1")?.items()?.iter().map(|x| x.rational()).collect::<IoResult<Vec<_>>>()?;
    let mori_rank = n.field("mori_rank")?.usize()?;
    let beta_pairing = n
        .field("beta_pairing")?
        .items_len(mori_rank)?
        .iter()
        .map(|row| row.items()?.iter().map(|x| x.u32()).collect::<IoResult<Vec<_>>>())
        .collect::<IoResult<Vec<_>>>()?;
    let model = CohModel { dim_x, classes, cup, pairing, c1, mori_rank, beta_pairing };
    model.validate().map_err(|e| n.invariant(e.to_string()))?;
    Ok(model)
}

pub fn write_model(m: &CohModel) -> Value {
    let n = m.len();
    let mut cup = Vec::new();
    for i in 1..n {
        for j in i..n {
            for k in 0..n {
                if !m.cup[i][j][k].is_zero() {
                    cup.push(json!([i, j, k, m.cup[i][j][k].write()]));
                }
            }
        }
    }
    json!({
        "dimX": m.dim_x,
        "classes": m.classes.iter().map(|c| json!({"name": c.name, "deg": c.deg, "h2": c.h2})).collect::<Vec<_>>(),
        "cup": cup,
        "pairing": write_matrix(&m.pairing),
        "c1": m.c1.iter().map(|c| c.write()).collect::<Vec<_>>(),
        "mori_rank": m.mori_rank,
        "beta_pairing": m.beta_pairing,
    })
}

/// `gw.json`: `[{"beta": [d…], "insertions": {"T2": j…}, "value": "p/q"}]`.
/// Insertions name non-unit classes outside `H²`.
pub fn read_gw(n: &Node, model: &CohModel) -> IoResult<GWTable> {
    let others = model.others();
    let mut table = GWTable::new();
    for e in n.items()? {
        let beta_node = e.field("beta")?;
        let beta = beta_node.items_len(model.mori_rank)?.iter().map(|x| x.u32()).collect::<IoResult<Vec<_>>>()?;
        let mut ins = vec![0u32; others.len()];
        if let Some(insn) = e.opt("insertions") {
            for (name, x) in insn.entries()? {
                let pos = others
                    .iter()
                    .position(|&k| model.classes[k].name == name)
                    .ok_or_else(|| x.schema(format!("`{name}` is not a non-unit class outside H²")))?;
                ins[pos] = x.u32()?;
            }
        }
        let key = GWKey { beta, ins };
        if !key.is_admissible(model) {
            return Err(e.invariant(format!("{} fails the dimension constraint", key.describe(model))));
        }
        if table.entries.contains_key(&key) {
            return Err(e.invariant(format!("duplicate entry {}", key.describe(model))));
        }
        table.insert(key, e.field("value")?.rational()?);
    }
    Ok(table)
}

pub fn write_gw(model: &CohModel, t: &GWTable) -> Value {
    let others = model.others();
    Value::Array(
        t.entries
            .iter()
            .map(|(k, v)| {
                let ins: Map<String, Value> =
                    k.ins.iter().zip(&others).filter(|(&j, _)| j > 0).map(|(&j, &c)| (model.classes[c].name.clone(), json!(j))).collect();
                json!({"beta": k.beta, "insertions": ins, "value": v.write()})
            })
            .collect(),
    )
}

pub fn write_potential(p: &PotentialSeries) -> Value {
    let n = p.classical.len();
    let mut classical = Vec::new();
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                if !p.classical[i][j][k].is_zero() {
                    classical.push(json!([i, j, k, p.classical[i][j][k].write()]));
                }
            }
        }
    }
    json!({"classical": classical, "quantum": write_series(&p.quantum)})
}

fn hodge_invariant(n: &Node, e: HodgeError) -> IoError {
    n.invariant(e.to_string())
}

/// A column-major basis: a list of vectors.
pub fn read_basis(n: &Node, dim: usize) -> IoResult<GSubspace> {
    let mut vecs = Vec::new();
    for col in n.items()? {
        vecs.push(col.items_len(dim)?.iter().map(GQ::read).collect::<IoResult<Vec<_>>>()?);
    }
    Ok(GSubspace::span(dim, vecs))
}

pub fn write_basis(s: &GSubspace) -> Value {
    Value::Array(s.basis().iter().map(|v| Value::Array(v.iter().map(|c| c.write()).collect())).collect())
}

pub fn write_dec_filtration(f: &DecFiltration) -> Value {
    Value::Object(f.steps().iter().map(|(p, s)| (p.to_string(), write_basis(s))).collect())
}

pub fn write_inc_filtration(f: &IncFiltration) -> Value {
    Value::Object(f.steps().iter().map(|(l, s)| (l.to_string(), write_basis(s))).collect())
}

pub fn write_ipq(ipq: &Ipq) -> Value {
    Value::Object(ipq.iter().map(|((p, q), s)| (format!("{p},{q}"), write_basis(s))).collect())
}

fn read_steps(n: &Node, dim: usize) -> IoResult<BTreeMap<i32, GSubspace>> {
    let mut steps = BTreeMap::new();
    for (k, x) in n.entries()? {
        let p: i32 = k.parse().map_err(|_| x.schema(format!("`{k}` is not an integer index")))?;
        steps.insert(p, read_basis(&x, dim)?);
    }
    Ok(steps)
}

/// `pmhs.json`: `{"dim", "w", "S", "N": [matrix…], "F": {"p": basis, …}}`.
pub fn read_pmhs(n: &Node) -> IoResult<PMHSData> {
    let dim = n.field("dim")?.usize()?;
    let w = n.field("w")?.i32()?;
    let s_node = n.field("S")?;
    let space = BilinearSpace::new(read_matrix(&s_node, Some((dim, dim)))?, w).map_err(|e| hodge_invariant(&s_node, e))?;
    let n_node = n.field("N")?;
    let mut nlist = Vec::new();
    for x in n_node.items()? {
        let m: Matrix = read_matrix(&x, Some((dim, dim)))?;
        if !m.is_nilpotent() {
            return Err(hodge_invariant(&x, HodgeError::NotNilpotent));
        }
        nlist.push(m);
    }
    let f_node = n.field("F")?;
    let flim = DecFiltration::new(dim, read_steps(&f_node, dim)?).map_err(|e| hodge_invariant(&f_node, e))?;
    PMHSData::new(space, nlist, flim).map_err(|e| match e {
        HodgeError::NotCommuting(..) => hodge_invariant(&n_node, e),
        other => hodge_invariant(n, other),
    })
}

pub fn write_pmhs(pm: &PMHSData) -> Value {
    json!({
        "dim": pm.dim(),
        "w": pm.space.w,
        "S": write_matrix(&pm.space.s),
        "N": pm.nlist.iter().map(write_matrix).collect::<Vec<_>>(),
        "F": write_dec_filtration(&pm.flim),
    })
}

/// A varying limit filtration: `{"vars", "classes", "bounds", "F": {"p":
/// matrix-series n×k}}` with one log variable per nilpotent.
pub fn read_family(n: &Node, dim: usize) -> IoResult<FFamily> {
    let frame = read_frame(n)?;
    let mut steps = BTreeMap::new();
    for (k, x) in n.field("F")?.entries()? {
        let p: i32 = k.parse().map_err(|_| x.schema(format!("`{k}` is not an integer index")))?;
        let m = read_matrix_series(&x, &frame, None)?;
        if m.rows() != dim {
            return Err(x.schema(format!("basis vectors must have {dim} entries")));
        }
        steps.insert(p, m);
    }
    Ok(FFamily { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{p2_model, p2_table, rank4_pmhs, tate_pmhs, unfolding_base_2x2};
    use crate::{int, rat};

    #[test]
    fn series_round_trip() {
        let (om, _, _) = unfolding_base_2x2(3);
        let s = om.c_log[0].get(1, 0).scale(&rat(3, 2));
        let v = write_series(&s);
        assert_eq!(read_series::<Rational>(&Node::root(&v), None).unwrap(), s);
        assert_eq!(v["terms"][0]["c"], json!("-3/2"));
    }

    #[test]
    fn omega_and_model_round_trip() {
        let (om, r0, w) = unfolding_base_2x2(3);
        let v = write_omega(&om);
        assert_eq!(read_omega(&Node::root(&v)).unwrap(), om);
        let p = write_pairing(&r0, w);
        assert_eq!(read_pairing(&Node::root(&p), 2).unwrap(), (r0, w));
        let m = p2_model();
        let mv = write_model(&m);
        assert_eq!(read_model(&Node::root(&mv)).unwrap(), m);
        let t = p2_table(3);
        assert_eq!(read_gw(&Node::root(&write_gw(&m, &t)), &m).unwrap(), t);
    }

    #[test]
    fn pmhs_round_trip_and_errors() {
        for pm in [tate_pmhs(1), rank4_pmhs()] {
            assert_eq!(read_pmhs(&Node::root(&write_pmhs(&pm))).unwrap(), pm);
        }
        let mut v = write_pmhs(&tate_pmhs(1));
        v["N"][0] = json!([["1", "0"], ["0", "0"]]);
        match read_pmhs(&Node::root(&v)) {
            Err(IoError::Invariant { path, msg }) => {
                assert_eq!(path, "N[0]");
                assert!(msg.contains("nilpotent"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_carry_paths() {
        let (om, _, _) = unfolding_base_2x2(2);
        let mut v = write_omega(&om);
        v["c_log"][0][1][0]["terms"][0]["c"] = json!("1/0");
        assert!(matches!(read_omega(&Node::root(&v)), Err(IoError::Schema { path, .. }) if path == "c_log[0][1][0].terms[0].c"));
        let mut m = write_model(&p2_model());
        m["pairing"][1][0] = json!("1");
        match read_model(&Node::root(&m)) {
            Err(IoError::Invariant { path, msg }) => {
                assert_eq!(path, "pairing");
                assert!(msg.contains("(1,0)"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(Node::root(&json!("7")).rational().unwrap(), int(7));
    }
}
