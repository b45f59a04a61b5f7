//! JSON system files, check orchestration and deterministic reports.
//!
//! System file layout (`"format": "netctrl-system/1"`):
//!
//! ```json
//! {
//!   "format": "netctrl-system/1",
//!   "dims": {"N": 2, "n": 2, "m": 1},
//!   "node_matrices": [[[1, 1], [0, 1]], [[1, 1], [0, 1]]],
//!   "B": [[0], [1]],
//!   "H": [[1, 0], [0, 0]],
//!   "C": [[0, 1], [1, 0]],
//!   "d": [1, 0]
//! }
//! ```
//!
//! `C[i][j]` is the weight of the edge j -> i (row i lists the in-weights
//! of node i). With `"homogeneous": true`, `node_matrices` is a single
//! matrix shared by all `N` nodes. Entries are JSON numbers, strings
//! holding an integer, decimal or `p/q`, or `[re, im]` pairs. Optional
//! keys: `T` (a transform to use instead of the built-in search),
//! `tolerances` (`rank_rel`, `eig_cluster_rel`, `residual_rel`),
//! `description`, `edge_convention`, `provenance`.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde_json::{json, Map, Number, Value};
use sha2::{Digest, Sha256};

use crate::classical::{kalman_controllable, kalman_rank, pbh_controllable, Method, Status, Verdict, Witness, DEFAULT_KALMAN_CAP};
use crate::error::{Error, Result};
use crate::matrix::{Matrix, Tolerances, C64};
use crate::network::{
    corollary_etd, homogeneous_verdict, sink_node_check, source_node_check, theorem1_verdict, ConditionOutcome,
    SpectralSummary, TheoremReport,
};
use crate::oracle::{BatchReport, CrossReport, GenSpec, MethodResult};
use crate::rational::{format_rational, parse_rational, rational_to_f64, Rational, RationalMatrix};
use crate::spectral::TransformPair;
use crate::system::NetworkedSystem;

pub const SYSTEM_FORMAT: &str = "netctrl-system/1";
pub const REPORT_FORMAT: &str = "netctrl-report/1";
pub const BATCH_FORMAT: &str = "netctrl-oracle/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const EDGE_CONVENTION: &str = "C[i][j] is the weight of the edge j -> i";

const KNOWN_KEYS: &[&str] = &[
    "format",
    "description",
    "edge_convention",
    "provenance",
    "dims",
    "homogeneous",
    "node_matrices",
    "B",
    "H",
    "C",
    "d",
    "T",
    "tolerances",
];

/// A parsed system file.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemFile {
    pub system: NetworkedSystem,
    pub transform: Option<Matrix>,
    pub tolerances: Option<Tolerances>,
    pub description: Option<String>,
}

impl SystemFile {
    pub fn new(system: NetworkedSystem) -> Self {
        Self {
            system,
            transform: None,
            tolerances: None,
            description: None,
        }
    }
}

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.into(),
    }
}

fn json_err(e: serde_json::Error) -> Error {
    parse_err(format!("line {}, column {}", e.line(), e.column()), e.to_string())
}

/// One parsed matrix entry, with its exact value when it is real.
struct Entry {
    value: C64,
    exact: Option<Rational>,
}

fn parse_real(v: &Value, path: &str) -> Result<(f64, Option<Rational>)> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.trim().to_string(),
        _ => return Err(parse_err(path, "expected a number, a numeric string or [re, im]")),
    };
    let exact = parse_rational(&text).ok_or_else(|| parse_err(path, format!("not a number: {text:?}")))?;
    let value = if text.contains('/') {
        rational_to_f64(&exact)
    } else {
        text.parse::<f64>()
            .map_err(|_| parse_err(path, format!("not a number: {text:?}")))?
    };
    if !value.is_finite() {
        return Err(parse_err(path, format!("entry {text:?} is not finite in double precision")));
    }
    Ok((value, Some(exact)))
}

fn parse_entry(v: &Value, path: &str) -> Result<Entry> {
    match v {
        Value::Array(parts) => {
            if parts.len() != 2 {
                return Err(parse_err(path, "complex entries are [re, im] pairs"));
            }
            let (re, re_exact) = parse_real(&parts[0], &format!("{path}[0]"))?;
            let (im, _) = parse_real(&parts[1], &format!("{path}[1]"))?;
            Ok(Entry {
                value: C64::new(re, im),
                exact: if im == 0.0 { re_exact } else { None },
            })
        }
        _ => {
            let (re, exact) = parse_real(v, path)?;
            Ok(Entry {
                value: C64::new(re, 0.0),
                exact,
            })
        }
    }
}

/// Parses a row-major matrix, returning exact entries when all are real.
fn parse_matrix(v: &Value, path: &str) -> Result<(Matrix, Option<RationalMatrix>)> {
    let rows = v
        .as_array()
        .ok_or_else(|| parse_err(path, "expected a matrix as an array of rows"))?;
    if rows.is_empty() {
        return Err(parse_err(path, "matrix has no rows"));
    }
    let mut cols = None;
    let mut data = Vec::new();
    let mut exact = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let rpath = format!("{path}[{i}]");
        let row = row.as_array().ok_or_else(|| parse_err(&rpath, "expected a row array"))?;
        match cols {
            None if row.is_empty() => return Err(parse_err(&rpath, "matrix has no columns")),
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(parse_err(&rpath, format!("row has {} entries, expected {c}", row.len())))
            }
            _ => {}
        }
        for (j, x) in row.iter().enumerate() {
            let e = parse_entry(x, &format!("{rpath}[{j}]"))?;
            data.push(e.value);
            exact.push(e.exact);
        }
    }
    let (r, c) = (rows.len(), cols.unwrap_or(0));
    let m = Matrix::new(r, c, data).map_err(|e| parse_err(path, e.to_string()))?;
    let exact = exact
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .map(|d| RationalMatrix::new(r, c, d).expect("shape checked"));
    Ok((m, exact))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| parse_err(key, "missing field"))
}

fn parse_dim(dims: &Map<String, Value>, key: &str) -> Result<usize> {
    let path = format!("dims.{key}");
    let v = dims.get(key).ok_or_else(|| parse_err(&path, "missing field"))?;
    v.as_u64()
        .filter(|&x| x > 0)
        .map(|x| x as usize)
        .ok_or_else(|| parse_err(&path, "expected a positive integer"))
}

fn parse_tolerances(v: &Value) -> Result<Tolerances> {
    let obj = v
        .as_object()
        .ok_or_else(|| parse_err("tolerances", "expected an object"))?;
    let mut tol = Tolerances::default();
    for (key, value) in obj {
        let path = format!("tolerances.{key}");
        let x = value
            .as_f64()
            .ok_or_else(|| parse_err(&path, "expected a number"))?;
        match key.as_str() {
            "rank_rel" => tol.rank_rel = x,
            "eig_cluster_rel" => tol.eig_cluster_rel = x,
            "residual_rel" => tol.residual_rel = x,
            _ => return Err(parse_err(&path, "unknown tolerance")),
        }
    }
    tol.validate().map_err(|e| parse_err("tolerances", e.to_string()))?;
    Ok(tol)
}

/// Parses and validates a system file.
pub fn parse_system_str(text: &str) -> Result<SystemFile> {
    let doc: Value = serde_json::from_str(text).map_err(json_err)?;
    let obj = doc
        .as_object()
        .ok_or_else(|| parse_err("$", "expected a JSON object"))?;
    if let Some(key) = obj.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(parse_err(key.as_str(), "unknown field"));
    }
    match obj.get("format") {
        Some(Value::String(f)) if f == SYSTEM_FORMAT => {}
        Some(other) => {
            return Err(parse_err(
                "format",
                format!("unsupported format {other}, expected {SYSTEM_FORMAT:?}"),
            ))
        }
        None => return Err(parse_err("format", "missing field")),
    }
    let dims = field(obj, "dims")?
        .as_object()
        .ok_or_else(|| parse_err("dims", "expected an object with N, n, m"))?;
    let (nodes, n, m) = (parse_dim(dims, "N")?, parse_dim(dims, "n")?, parse_dim(dims, "m")?);

    let homogeneous = match obj.get("homogeneous") {
        None => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(parse_err("homogeneous", "expected true or false")),
    };
    let node_value = field(obj, "node_matrices")?;
    let node_matrices = if homogeneous {
        let (a, _) = parse_matrix(node_value, "node_matrices")?;
        vec![a; nodes]
    } else {
        let list = node_value
            .as_array()
            .ok_or_else(|| parse_err("node_matrices", "expected a list of matrices"))?;
        if list.len() != nodes {
            return Err(parse_err(
                "node_matrices",
                format!("{} matrices given but dims.N = {nodes}", list.len()),
            ));
        }
        list.iter()
            .enumerate()
            .map(|(i, a)| parse_matrix(a, &format!("node_matrices[{i}]")).map(|(a, _)| a))
            .collect::<Result<Vec<_>>>()?
    };
    let (b, _) = parse_matrix(field(obj, "B")?, "B")?;
    if b.shape() != (n, m) {
        return Err(parse_err(
            "B",
            format!("expected {n}x{m} from dims, got {}x{}", b.rows(), b.cols()),
        ));
    }
    let (h, _) = parse_matrix(field(obj, "H")?, "H")?;
    let (c, exact_c) = parse_matrix(field(obj, "C")?, "C")?;
    let d = field(obj, "d")?
        .as_array()
        .ok_or_else(|| parse_err("d", "expected a list of 0/1 entries"))?
        .iter()
        .enumerate()
        .map(|(i, x)| parse_real(x, &format!("d[{i}]")).map(|(v, _)| v))
        .collect::<Result<Vec<_>>>()?;

    let mut system = NetworkedSystem::new(node_matrices, b, h, c, d);
    // Keep the exact topology only when it carries more than the floats.
    if let Some(exact) = exact_c {
        if RationalMatrix::from_matrix(&system.c).as_ref() != Some(&exact) {
            system = system.with_exact_topology(exact);
        }
    }
    system.validate().map_err(Error::InvalidSystem)?;

    let transform = obj.get("T").map(|t| parse_matrix(t, "T").map(|(t, _)| t)).transpose()?;
    let tolerances = obj.get("tolerances").map(parse_tolerances).transpose()?;
    let description = match obj.get("description") {
        None => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(parse_err("description", "expected a string")),
    };
    Ok(SystemFile {
        system,
        transform,
        tolerances,
        description,
    })
}

pub fn parse_system(path: &std::path::Path) -> Result<SystemFile> {
    parse_system_str(&std::fs::read_to_string(path)?)
}

/// Parses a transform given either as a bare matrix or as an object with
/// a `T` field.
pub fn parse_transform_str(text: &str) -> Result<Matrix> {
    let doc: Value = serde_json::from_str(text).map_err(json_err)?;
    match &doc {
        Value::Object(obj) => parse_matrix(field(obj, "T")?, "T").map(|(t, _)| t),
        _ => parse_matrix(&doc, "T").map(|(t, _)| t),
    }
}

fn real_number(x: f64) -> Value {
    // Integral values print as integers; everything else uses the shortest
    // representation that reads back to the same double.
    let text = if x.fract() == 0.0 && x.abs() < 9.0e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:?}")
    };
    Value::Number(Number::from_str(&text).expect("finite float formats as a JSON number"))
}

fn entry_value(z: C64) -> Value {
    if z.im == 0.0 {
        real_number(z.re)
    } else {
        Value::Array(vec![real_number(z.re), real_number(z.im)])
    }
}

fn matrix_value(m: &Matrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array((0..m.cols()).map(|j| entry_value(m.get(i, j))).collect()))
            .collect(),
    )
}

fn rational_value(r: &Rational) -> Value {
    if r.denom() == &num_bigint::BigInt::from(1) {
        Value::Number(Number::from_str(&r.numer().to_string()).expect("integer is a JSON number"))
    } else {
        Value::String(format_rational(r))
    }
}

fn rational_matrix_value(m: &RationalMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array((0..m.cols()).map(|j| rational_value(m.get(i, j))).collect()))
            .collect(),
    )
}

/// Renders a system file. Parsing the result gives back the same system.
pub fn render_system(file: &SystemFile) -> String {
    render_system_with(file, None)
}

pub fn render_system_with(file: &SystemFile, provenance: Option<Value>) -> String {
    let sys = &file.system;
    let dims = sys.dims();
    let mut obj = Map::new();
    obj.insert("format".into(), json!(SYSTEM_FORMAT));
    obj.insert("edge_convention".into(), json!(EDGE_CONVENTION));
    if let Some(d) = &file.description {
        obj.insert("description".into(), json!(d));
    }
    obj.insert(
        "dims".into(),
        json!({"N": sys.node_matrices.len(), "n": dims.state, "m": dims.input}),
    );
    if sys.is_homogeneous() && sys.node_matrices.len() > 1 {
        obj.insert("homogeneous".into(), json!(true));
        obj.insert("node_matrices".into(), matrix_value(&sys.node_matrices[0]));
    } else {
        obj.insert(
            "node_matrices".into(),
            Value::Array(sys.node_matrices.iter().map(matrix_value).collect()),
        );
    }
    obj.insert("B".into(), matrix_value(&sys.b));
    obj.insert("H".into(), matrix_value(&sys.h));
    let c = match &sys.exact_c {
        Some(exact) => rational_matrix_value(exact),
        None => matrix_value(&sys.c),
    };
    obj.insert("C".into(), c);
    obj.insert("d".into(), Value::Array(sys.d.iter().map(|&x| real_number(x)).collect()));
    if let Some(t) = &file.transform {
        obj.insert("T".into(), matrix_value(t));
    }
    if let Some(tol) = &file.tolerances {
        obj.insert("tolerances".into(), tolerances_value(tol));
    }
    if let Some(p) = provenance {
        obj.insert("provenance".into(), p);
    }
    let mut out = serde_json::to_string_pretty(&Value::Object(obj)).expect("JSON values serialize");
    out.push('\n');
    out
}

// ---- reports -------------------------------------------------------------

/// A float with 17 significant digits; non-finite values become null.
pub fn report_number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(Number::from_str(&format!("{x:.16e}")).expect("formatted float is a JSON number"))
}

fn complex_value(z: C64) -> Value {
    Value::Array(vec![report_number(z.re), report_number(z.im)])
}

fn vector_value(v: &[C64]) -> Value {
    Value::Array(v.iter().map(|&z| complex_value(z)).collect())
}

fn report_matrix(m: &Matrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array((0..m.cols()).map(|j| complex_value(m.get(i, j))).collect()))
            .collect(),
    )
}

fn tolerances_value(tol: &Tolerances) -> Value {
    json!({
        "rank_rel": report_number(tol.rank_rel),
        "eig_cluster_rel": report_number(tol.eig_cluster_rel),
        "residual_rel": report_number(tol.residual_rel),
    })
}

fn witness_value(w: &Option<Witness>) -> Value {
    match w {
        Some(w) => json!({"eigenvalue": complex_value(w.value), "vector": vector_value(&w.vector)}),
        None => Value::Null,
    }
}

fn verdict_value(v: &Verdict) -> Map<String, Value> {
    let mut obj = Map::new();
    obj.insert("method".into(), json!(v.method.as_str()));
    obj.insert("status".into(), json!(v.status.as_str()));
    obj.insert("detail".into(), json!(v.detail));
    obj.insert("margin".into(), report_number(v.margin));
    obj.insert("fragile".into(), json!(v.is_fragile()));
    obj.insert("witness".into(), witness_value(&v.witness));
    obj
}

fn condition_value(c: &ConditionOutcome) -> Value {
    let mut obj = Map::new();
    obj.insert("outcome".into(), json!(c.as_str()));
    if let Some(f) = c.failure() {
        obj.insert("detail".into(), json!(f.detail));
        obj.insert("node".into(), f.node.map_or(Value::Null, |i| json!(i + 1)));
        obj.insert(
            "eigenvalue".into(),
            f.eigenvalue.map_or(Value::Null, complex_value),
        );
        obj.insert("witness".into(), witness_value(&f.witness));
    }
    Value::Object(obj)
}

fn transform_value(tp: &TransformPair) -> Value {
    json!({
        "origin": tp.origin.as_str(),
        "T": report_matrix(&tp.t),
        "J": report_matrix(&tp.j),
        "lambdas": Value::Array(tp.lambdas.iter().map(|&z| complex_value(z)).collect()),
        "jordan_blocks": Value::Array(tp.blocks.iter().map(|b| json!({"start": b.start + 1, "size": b.len})).collect()),
    })
}

fn summary_value(s: &SpectralSummary) -> Value {
    let nodes: Vec<Value> = s
        .nodes
        .iter()
        .enumerate()
        .map(|(i, ns)| {
            json!({
                "node": i + 1,
                "lambda": complex_value(ns.lambda),
                "eigenvalues": Value::Array(ns.pairs.iter().map(|p| json!({
                    "value": complex_value(p.value),
                    "algebraic_multiplicity": p.alg_mult,
                    "geometric_multiplicity": p.geom_mult,
                    "left_eigenvectors": Value::Array(p.vectors.iter().map(|v| vector_value(v)).collect()),
                })).collect()),
            })
        })
        .collect();
    let groups: Vec<Value> = s
        .common_groups
        .iter()
        .map(|g| {
            json!({
                "value": complex_value(g.value),
                "nodes": Value::Array(g.members.iter().map(|&(i, _)| json!(i + 1)).collect()),
                "fragile": g.fragile,
            })
        })
        .collect();
    json!({
        "nodes": nodes,
        "sigma_F": Value::Array(s.sigma_f.iter().map(|&z| complex_value(z)).collect()),
        "common_groups": groups,
        "grouping_margin": report_number(s.grouping_margin),
    })
}

fn theorem_value(r: &TheoremReport) -> Value {
    let mut obj = verdict_value(&r.verdict);
    let conditions: Map<String, Value> = r
        .conditions
        .entries()
        .iter()
        .map(|(name, c)| (name.to_string(), condition_value(c)))
        .collect();
    obj.insert("conditions".into(), Value::Object(conditions));
    obj.insert(
        "transform".into(),
        r.transform.as_ref().map_or(Value::Null, transform_value),
    );
    obj.insert(
        "spectral_summary".into(),
        r.summary.as_ref().map_or(Value::Null, summary_value),
    );
    obj.insert(
        "cd_controllable".into(),
        r.cd_controllable.map_or(Value::Null, Value::Bool),
    );
    Value::Object(obj)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodSelection {
    Theorem,
    Kalman,
    Pbh,
    All,
}

impl MethodSelection {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Theorem => "theorem",
            Self::Kalman => "kalman",
            Self::Pbh => "pbh",
            Self::All => "all",
        }
    }

    fn includes(self, other: Self) -> bool {
        self == Self::All || self == other
    }
}

impl FromStr for MethodSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem" => Ok(Self::Theorem),
            "kalman" => Ok(Self::Kalman),
            "pbh" => Ok(Self::Pbh),
            "all" => Ok(Self::All),
            other => Err(Error::InvalidInput(format!(
                "unknown method {other:?}; expected theorem, kalman, pbh or all"
            ))),
        }
    }
}

/// Results of `check` on one system.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub selection: MethodSelection,
    pub tolerances: Tolerances,
    pub input_sha256: String,
    pub description: Option<String>,
    pub dims: crate::system::Dims,
    pub node_classes: Vec<usize>,
    pub theorem: Option<TheoremReport>,
    /// Present for homogeneous systems.
    pub homogeneous: Option<TheoremReport>,
    pub kalman: Option<(Verdict, Option<usize>)>,
    pub pbh: Option<Verdict>,
    pub corollary_etd: Option<Verdict>,
    pub source_node: Option<Verdict>,
    pub sink_node: Option<Verdict>,
}

impl CheckReport {
    /// Every verdict produced, in report order.
    pub fn verdicts(&self) -> Vec<&Verdict> {
        let mut out = Vec::new();
        out.extend(self.theorem.as_ref().map(|r| &r.verdict));
        out.extend(self.homogeneous.as_ref().map(|r| &r.verdict));
        out.extend(self.kalman.as_ref().map(|(v, _)| v));
        out.extend(self.pbh.as_ref());
        out.extend(self.corollary_etd.as_ref());
        out.extend(self.source_node.as_ref());
        out.extend(self.sink_node.as_ref());
        out
    }

    /// True iff all decided verdicts coincide.
    pub fn consistent(&self) -> bool {
        let decided: Vec<Status> = self
            .verdicts()
            .iter()
            .map(|v| v.status)
            .filter(|s| s.is_decided())
            .collect();
        decided.windows(2).all(|w| w[0] == w[1])
    }

    /// The agreed status of the decided verdicts, if any and consistent.
    pub fn overall(&self) -> Status {
        if !self.consistent() {
            return Status::NotApplicable;
        }
        self.verdicts()
            .iter()
            .map(|v| v.status)
            .find(|s| s.is_decided())
            .unwrap_or(Status::NotApplicable)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Per-field tolerance overrides, applied on top of a base set.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ToleranceOverrides {
    pub rank_rel: Option<f64>,
    pub eig_cluster_rel: Option<f64>,
    pub residual_rel: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base: Tolerances) -> Result<Tolerances> {
        let tol = Tolerances {
            rank_rel: self.rank_rel.unwrap_or(base.rank_rel),
            eig_cluster_rel: self.eig_cluster_rel.unwrap_or(base.eig_cluster_rel),
            residual_rel: self.residual_rel.unwrap_or(base.residual_rel),
        };
        tol.validate()?;
        Ok(tol)
    }
}

/// Runs the selected methods on a system file given as text. The user
/// transform `t` replaces one embedded in the file; `overrides` apply on
/// top of the file's tolerances (or the defaults).
pub fn run_check(
    text: &str,
    selection: MethodSelection,
    t: Option<Matrix>,
    overrides: &ToleranceOverrides,
) -> Result<CheckReport> {
    let file = parse_system_str(text)?;
    let tol = overrides.apply(file.tolerances.unwrap_or_default())?;
    let user_t = t.or(file.transform);
    let sys = &file.system;

    let mut report = CheckReport {
        selection,
        tolerances: tol,
        input_sha256: sha256_hex(text.as_bytes()),
        description: file.description.clone(),
        dims: sys.dims(),
        node_classes: sys.node_classes(),
        theorem: None,
        homogeneous: None,
        kalman: None,
        pbh: None,
        corollary_etd: None,
        source_node: None,
        sink_node: None,
    };
    if selection.includes(MethodSelection::Theorem) {
        let th = theorem1_verdict(sys, &tol, user_t.as_ref())?;
        if selection == MethodSelection::All {
            report.corollary_etd = Some(match &th.transform {
                Some(tp) => corollary_etd(sys, tp, &tol)?,
                None => Verdict::not_applicable(Method::CorollaryEtd, "no admissible transform"),
            });
            report.source_node = Some(source_node_check(sys, &tol)?);
            report.sink_node = Some(sink_node_check(sys, &tol)?);
        }
        if sys.is_homogeneous() {
            report.homogeneous = Some(homogeneous_verdict(sys, &tol, user_t.as_ref())?);
        }
        report.theorem = Some(th);
    }
    if selection.includes(MethodSelection::Kalman) || selection.includes(MethodSelection::Pbh) {
        let pair = sys.assemble()?;
        if selection.includes(MethodSelection::Kalman) {
            let verdict = kalman_controllable(&pair, &tol)?;
            let rank = if pair.state_dim() <= DEFAULT_KALMAN_CAP {
                Some(kalman_rank(&pair, &tol)?.rank)
            } else {
                None
            };
            report.kalman = Some((verdict, rank));
        }
        if selection.includes(MethodSelection::Pbh) {
            report.pbh = Some(pbh_controllable(&pair, &tol)?);
        }
    }
    Ok(report)
}

fn tool_value() -> Value {
    json!({"name": "netctrl", "version": TOOL_VERSION})
}

/// Deterministic JSON rendering of a check report.
pub fn render_check_report(r: &CheckReport) -> String {
    let mut methods = Map::new();
    if let Some(th) = &r.theorem {
        methods.insert("theorem".into(), theorem_value(th));
    }
    if let Some(h) = &r.homogeneous {
        methods.insert("homogeneous".into(), theorem_value(h));
    }
    if let Some((v, rank)) = &r.kalman {
        let mut obj = verdict_value(v);
        obj.insert("rank".into(), rank.map_or(Value::Null, |k| json!(k)));
        obj.insert("dimension".into(), json!(r.dims.nodes * r.dims.state));
        methods.insert("kalman".into(), Value::Object(obj));
    }
    for (key, v) in [
        ("pbh", &r.pbh),
        ("corollary_etd", &r.corollary_etd),
        ("source_node", &r.source_node),
        ("sink_node", &r.sink_node),
    ] {
        if let Some(v) = v {
            methods.insert(key.into(), Value::Object(verdict_value(v)));
        }
    }
    let verdicts: BTreeMap<String, Value> = r
        .verdicts()
        .iter()
        .map(|v| (v.method.as_str().to_string(), json!(v.status.as_str())))
        .collect();
    let doc = json!({
        "format": REPORT_FORMAT,
        "tool": tool_value(),
        "input": {
            "sha256": r.input_sha256,
            "description": r.description,
            "dims": {"N": r.dims.nodes, "n": r.dims.state, "m": r.dims.input},
            "node_classes": Value::Array(r.node_classes.iter().map(|&k| json!(k + 1)).collect()),
        },
        "method_selection": r.selection.as_str(),
        "tolerances": tolerances_value(&r.tolerances),
        "verdicts": verdicts,
        "consistent": r.consistent(),
        "overall": r.overall().as_str(),
        "methods": Value::Object(methods),
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
    out.push('\n');
    out
}

pub fn gen_spec_value(spec: &GenSpec) -> Value {
    json!({
        "seed": spec.seed,
        "max_nodes": spec.max_nodes,
        "node_dim": spec.node_dim,
        "input_dim": spec.input_dim,
        "entry_bound": spec.entry_bound,
        "homogeneous": spec.homogeneous,
        "ensure_diagonalizable_c": spec.ensure_diagonalizable_c,
        "plant_jordan": spec.plant_jordan,
        "control_density": report_number(spec.control_density),
    })
}

fn method_result_value(m: &MethodResult) -> Value {
    json!({
        "method": m.method.as_str(),
        "status": m.status.as_str(),
        "margin": report_number(m.margin),
        "fragile": m.is_fragile(),
        "errored": m.errored,
        "detail": m.detail,
    })
}

fn cross_value(r: &CrossReport) -> Value {
    json!({
        "id": r.id,
        "seed": r.spec.as_ref().map(|s| s.seed),
        "theorem": method_result_value(&r.theorem),
        "kalman": method_result_value(&r.kalman),
        "pbh": method_result_value(&r.pbh),
        "agreement": r.agreement,
        "fragile": r.fragile,
        "fallback": r.fallback,
    })
}

/// Deterministic JSON rendering of a batch: summary first, then one
/// record per trial ordered by id.
pub fn render_batch_report(b: &BatchReport, tol: &Tolerances) -> String {
    let s = &b.summary;
    let doc = json!({
        "format": BATCH_FORMAT,
        "tool": tool_value(),
        "spec": gen_spec_value(&b.spec),
        "tolerances": tolerances_value(tol),
        "summary": {
            "trials": s.trials,
            "status_counts": s.status_counts,
            "agreements": s.agreements,
            "disagreements": s.disagreements,
            "non_fragile_disagreements": s.hard_disagreements,
            "fragile": s.fragile,
            "fragile_rate": report_number(s.fragile_rate()),
            "theorem_not_applicable": s.fallbacks,
            "generation_errors": s.generation_errors,
            "method_errors": s.method_errors,
        },
        "generation_failures": Value::Array(b.generation_failures.iter().map(|(id, m)| json!({"id": id, "message": m})).collect()),
        "records": Value::Array(b.records.iter().map(cross_value).collect()),
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
    out.push('\n');
    out
}

/// A disagreement as a self-contained system file: the instance, the
/// tolerances in force and the seeds that regenerate it.
pub fn disagreement_fixture(sys: &NetworkedSystem, record: &CrossReport, tol: &Tolerances) -> String {
    let file = SystemFile {
        system: sys.clone(),
        transform: None,
        tolerances: Some(*tol),
        description: Some(format!("oracle disagreement, trial {}", record.id)),
    };
    let provenance = json!({
        "trial": record.id,
        "spec": record.spec.as_ref().map(gen_spec_value),
        "statuses": {
            "theorem": record.theorem.status.as_str(),
            "kalman": record.kalman.status.as_str(),
            "pbh": record.pbh.status.as_str(),
        },
    });
    render_system_with(&file, Some(provenance))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX4: &str = r#"{
        "format": "netctrl-system/1",
        "dims": {"N": 2, "n": 2, "m": 1},
        "homogeneous": true,
        "node_matrices": [[1, 1], [0, 1]],
        "B": [[0], [1]],
        "H": [[1, 0], [0, 0]],
        "C": [[0, 1], [1, 0]],
        "d": [1, 0]
    }"#;

    #[test]
    fn parses_homogeneous_file() {
        let f = parse_system_str(EX4).unwrap();
        assert_eq!(f.system.node_matrices.len(), 2);
        assert!(f.system.is_homogeneous());
        assert_eq!(f.system.d, vec![1.0, 0.0]);
        assert!(f.system.exact_c.is_none());
        assert!(f.transform.is_none());
    }

    #[test]
    fn missing_field_is_named() {
        let text = EX4.replace(r#""H": [[1, 0], [0, 0]],"#, "");
        match parse_system_str(&text) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "H"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line() {
        match parse_system_str("{\n  \"format\": ,\n}") {
            Err(Error::Parse { location, .. }) => assert!(location.starts_with("line 2"), "{location}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_entry_path() {
        let text = EX4.replace(r#""C": [[0, 1], [1, 0]]"#, r#""C": [[0, 1], [1, "x"]]"#);
        match parse_system_str(&text) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "C[1][1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rational_entries_are_kept_exactly() {
        let text = EX4.replace(r#""C": [[0, 1], [1, 0]]"#, r#""C": [["1/3", 1], [1, 0.1]]"#);
        let f = parse_system_str(&text).unwrap();
        let exact = f.system.exact_c.as_ref().unwrap();
        assert_eq!(exact.get(0, 0), &Rational::new(1.into(), 3.into()));
        assert_eq!(exact.get(1, 1), &Rational::new(1.into(), 10.into()));
        assert_eq!(f.system.c.get(0, 0).re, 1.0 / 3.0);
        assert_eq!(f.system.c.get(1, 1).re, 0.1);
        let back = parse_system_str(&render_system(&f)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn validation_failures_are_echoed() {
        let text = EX4.replace(r#""d": [1, 0]"#, r#""d": [1, 0.5]"#);
        match parse_system_str(&text) {
            Err(Error::InvalidSystem(v)) => assert_eq!(v[0].path, "control_selection[1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_and_formats_are_rejected() {
        let text = EX4.replace(r#""d": [1, 0]"#, r#""d": [1, 0], "D": 1"#);
        assert!(matches!(parse_system_str(&text), Err(Error::Parse { .. })));
        let text = EX4.replace("netctrl-system/1", "netctrl-system/9");
        assert!(matches!(parse_system_str(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn complex_entries_and_transform() {
        let text = EX4.replace(r#""d": [1, 0]"#, r#""d": [1, 0], "T": [[[1, 0], [0, 1]], [0, 1]]"#);
        let f = parse_system_str(&text).unwrap();
        let t = f.transform.unwrap();
        assert_eq!(t.get(0, 1), C64::new(0.0, 1.0));
        assert_eq!(parse_transform_str("[[1, 0], [0, 2]]").unwrap().get(1, 1).re, 2.0);
    }

    #[test]
    fn report_numbers_have_17_digits() {
        assert_eq!(report_number(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(report_number(1.0).to_string(), "1.0000000000000000e+0");
        assert_eq!(report_number(f64::INFINITY), Value::Null);
    }

    #[test]
    fn check_report_is_byte_stable() {
        let a = render_check_report(&run_check(EX4, MethodSelection::All, None, &ToleranceOverrides::default()).unwrap());
        let b = render_check_report(&run_check(EX4, MethodSelection::All, None, &ToleranceOverrides::default()).unwrap());
        assert_eq!(a, b);
        let v: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["methods"]["kalman"]["rank"], json!(3));
        assert_eq!(v["input"]["sha256"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn single_method_selection() {
        let r = run_check(EX4, MethodSelection::Pbh, None, &ToleranceOverrides::default()).unwrap();
        assert!(r.pbh.is_some() && r.kalman.is_none() && r.theorem.is_none());
        assert!("bogus".parse::<MethodSelection>().is_err());
    }
}
