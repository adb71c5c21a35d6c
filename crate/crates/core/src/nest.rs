//! In-memory model of an affine loop nest and its JSON ingestion.
//!
//! A nest is a set of statements, each with a parametric iteration domain,
//! plus arrays, affine accesses `F·J + G·N + f` and affine dependences
//! `I = Φ·J + Ψ·N − φ`. Dependences are supplied by the user; [`load_nest`]
//! checks them against the statement domains at the minimal parameter values.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, IntMatrix, IntVector};

/// Default cap on the number of points [`enumerate_domain`] will produce.
pub const DEFAULT_POINT_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum NestError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dangling reference: {0}")]
    Dangling(String),
    #[error("duplicate id `{0}`")]
    Duplicate(String),
    #[error("no statements")]
    NoStatements,
    #[error("domain empty at minimal parameters: {0}")]
    EmptyDomain(String),
    #[error("inconsistent dependence {0}")]
    Inconsistent(String),
    #[error("explicit-vertex domains cannot be enumerated")]
    VertexDomain,
    #[error("domain has more than {0} points")]
    PointCap(usize),
    #[error("parameter vector has length {got}, expected {expected}")]
    ParamLength { got: usize, expected: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

pub type Result<T> = std::result::Result<T, NestError>;

// ---------------------------------------------------------------------------
// Domain types

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OuterVars {
    pub names: Vec<String>,
    pub minima: IntVector,
}

impl OuterVars {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// `coeffs · N + constant`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineBound {
    pub coeffs: IntVector,
    #[serde(rename = "const")]
    pub constant: i64,
}

impl AffineBound {
    pub fn eval(&self, params: &[i64]) -> Result<i64> {
        Ok(self
            .coeffs
            .dot(params)?
            .checked_add(self.constant)
            .ok_or(AlgebraError::Overflow("bound"))?)
    }
}

/// Parametric vertex `R·N + ω`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub r: IntMatrix,
    pub omega: IntVector,
}

impl Vertex {
    pub fn at(&self, params: &[i64]) -> Result<IntVector> {
        Ok(self.r.matvec(params)?.add(&self.omega)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Box(Vec<(AffineBound, AffineBound)>),
    Vertices(Vec<Vertex>),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Box(b) => b.len(),
            Domain::Vertices(v) => v.first().map_or(0, |v| v.omega.len()),
        }
    }

    /// Membership test; only decidable for box domains.
    pub fn contains(&self, point: &[i64], params: &[i64]) -> Result<bool> {
        match self {
            Domain::Box(bounds) => {
                if point.len() != bounds.len() {
                    return Err(NestError::Shape(format!(
                        "point of length {} in {}-dimensional domain",
                        point.len(),
                        bounds.len()
                    )));
                }
                for (x, (lo, hi)) in point.iter().zip(bounds) {
                    if *x < lo.eval(params)? || *x > hi.eval(params)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Domain::Vertices(_) => Err(NestError::VertexDomain),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependenceKind {
    Flow,
    Anti,
    Out,
    In,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub id: String,
    pub depth: usize,
    pub domain: Domain,
    pub order: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayDecl {
    pub id: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Access {
    pub array: usize,
    pub statement: usize,
    pub slot: u32,
    pub kind: AccessKind,
    pub f_matrix: IntMatrix,
    pub g_matrix: IntMatrix,
    pub offset: IntVector,
}

impl Access {
    /// Array index touched at iteration `j`.
    pub fn index_at(&self, j: &[i64], params: &[i64]) -> Result<IntVector> {
        Ok(self
            .f_matrix
            .matvec(j)?
            .add(&self.g_matrix.matvec(params)?)?
            .add(&self.offset)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dependence {
    pub source: usize,
    pub target: usize,
    pub kind: DependenceKind,
    pub phi_matrix: IntMatrix,
    pub psi_matrix: IntMatrix,
    pub phi_offset: IntVector,
    pub domain: Domain,
    /// Read access `(array, slot)` of the target statement this flow feeds.
    pub produced_by: Option<(usize, u32)>,
}

impl Dependence {
    /// Source iteration of target iteration `j`.
    pub fn source_of(&self, j: &[i64], params: &[i64]) -> Result<IntVector> {
        Ok(self
            .phi_matrix
            .matvec(j)?
            .add(&self.psi_matrix.matvec(params)?)?
            .sub(&self.phi_offset)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopNest {
    pub params: OuterVars,
    pub statements: Vec<Statement>,
    pub arrays: Vec<ArrayDecl>,
    pub accesses: Vec<Access>,
    pub dependences: Vec<Dependence>,
}

impl LoopNest {
    /// Maximal statement depth.
    pub fn n(&self) -> usize {
        self.statements.iter().map(|s| s.depth).max().unwrap_or(0)
    }

    pub fn e(&self) -> usize {
        self.params.len()
    }

    pub fn statement_index(&self, id: &str) -> Option<usize> {
        self.statements.iter().position(|s| s.id == id)
    }

    pub fn array_index(&self, id: &str) -> Option<usize> {
        self.arrays.iter().position(|a| a.id == id)
    }

    pub fn find_access(&self, array: usize, statement: usize, slot: u32) -> Option<usize> {
        self.accesses
            .iter()
            .position(|a| a.array == array && a.statement == statement && a.slot == slot)
    }

    /// `array:statement:slot` label of an access.
    pub fn access_label(&self, idx: usize) -> String {
        let a = &self.accesses[idx];
        format!(
            "{}:{}:{}",
            self.arrays[a.array].id, self.statements[a.statement].id, a.slot
        )
    }

    pub fn dependence_label(&self, idx: usize) -> String {
        let d = &self.dependences[idx];
        let kind = match d.kind {
            DependenceKind::Flow => "flow",
            DependenceKind::Anti => "anti",
            DependenceKind::Out => "out",
            DependenceKind::In => "in",
        };
        format!(
            "{kind}:{}->{}#{idx}",
            self.statements[d.source].id, self.statements[d.target].id
        )
    }

    pub fn check_params(&self, params: &[i64]) -> Result<()> {
        if params.len() != self.e() {
            return Err(NestError::ParamLength {
                got: params.len(),
                expected: self.e(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("nest serializes")
    }

    fn to_raw(&self) -> RawNest {
        let stmts = &self.statements;
        let arrays = &self.arrays;
        RawNest {
            params: self
                .params
                .names
                .iter()
                .zip(self.params.minima.iter())
                .map(|(n, &m)| RawParam {
                    name: n.clone(),
                    min: m,
                })
                .collect(),
            statements: stmts
                .iter()
                .map(|s| RawStatement {
                    id: s.id.clone(),
                    depth: s.depth,
                    domain: RawDomain::from(&s.domain),
                    order: s.order,
                })
                .collect(),
            arrays: arrays
                .iter()
                .map(|a| RawArray {
                    id: a.id.clone(),
                    dim: a.dim,
                })
                .collect(),
            accesses: self
                .accesses
                .iter()
                .map(|a| RawAccess {
                    array: arrays[a.array].id.clone(),
                    statement: stmts[a.statement].id.clone(),
                    slot: a.slot,
                    kind: a.kind,
                    f_matrix: a.f_matrix.to_rows(),
                    g_matrix: Some(a.g_matrix.to_rows()),
                    offset: a.offset.to_vec(),
                })
                .collect(),
            dependences: self
                .dependences
                .iter()
                .map(|d| RawDependence {
                    source: stmts[d.source].id.clone(),
                    target: stmts[d.target].id.clone(),
                    kind: d.kind,
                    phi_matrix: d.phi_matrix.to_rows(),
                    psi_matrix: Some(d.psi_matrix.to_rows()),
                    phi_offset: d.phi_offset.to_vec(),
                    domain: RawDomain::from(&d.domain),
                    produced_by: d.produced_by.map(|(l, q)| RawAccessRef {
                        array: arrays[l].id.clone(),
                        slot: q,
                    }),
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// JSON schema

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNest {
    #[serde(default)]
    params: Vec<RawParam>,
    statements: Vec<RawStatement>,
    arrays: Vec<RawArray>,
    #[serde(default)]
    accesses: Vec<RawAccess>,
    #[serde(default)]
    dependences: Vec<RawDependence>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParam {
    name: String,
    min: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStatement {
    id: String,
    depth: usize,
    domain: RawDomain,
    #[serde(default)]
    order: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArray {
    id: String,
    dim: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAccess {
    array: String,
    statement: String,
    slot: u32,
    kind: AccessKind,
    #[serde(rename = "F")]
    f_matrix: Vec<Vec<i64>>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    g_matrix: Option<Vec<Vec<i64>>>,
    #[serde(rename = "f")]
    offset: Vec<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAccessRef {
    array: String,
    slot: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDependence {
    source: String,
    target: String,
    kind: DependenceKind,
    #[serde(rename = "Phi")]
    phi_matrix: Vec<Vec<i64>>,
    #[serde(rename = "Psi", default, skip_serializing_if = "Option::is_none")]
    psi_matrix: Option<Vec<Vec<i64>>>,
    #[serde(rename = "phi")]
    phi_offset: Vec<i64>,
    domain: RawDomain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    produced_by: Option<RawAccessRef>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBound {
    #[serde(default)]
    coeffs: Vec<i64>,
    #[serde(rename = "const", default)]
    constant: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRange {
    lower: RawBound,
    upper: RawBound,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVertex {
    #[serde(rename = "R")]
    r: Vec<Vec<i64>>,
    omega: Vec<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
enum RawDomain {
    #[serde(rename = "box")]
    Box(Vec<RawRange>),
    #[serde(rename = "vertices")]
    Vertices(Vec<RawVertex>),
}

impl From<&Domain> for RawDomain {
    fn from(d: &Domain) -> Self {
        match d {
            Domain::Box(b) => RawDomain::Box(
                b.iter()
                    .map(|(lo, hi)| RawRange {
                        lower: RawBound {
                            coeffs: lo.coeffs.to_vec(),
                            constant: lo.constant,
                        },
                        upper: RawBound {
                            coeffs: hi.coeffs.to_vec(),
                            constant: hi.constant,
                        },
                    })
                    .collect(),
            ),
            Domain::Vertices(vs) => RawDomain::Vertices(
                vs.iter()
                    .map(|v| RawVertex {
                        r: v.r.to_rows(),
                        omega: v.omega.to_vec(),
                    })
                    .collect(),
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// Loading and validation

/// Parses and validates a nest from JSON text.
pub fn parse_nest(text: &str) -> Result<LoopNest> {
    let raw: RawNest = serde_json::from_str(text).map_err(|e| NestError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    build(raw)
}

/// Reads and validates a nest file.
pub fn load_nest(path: impl AsRef<Path>) -> Result<LoopNest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| NestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_nest(&text)
}

fn matrix(rows: &[Vec<i64>], r: usize, c: usize, what: &str) -> Result<IntMatrix> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(NestError::Shape(format!("{what} must be {r}x{c}")));
    }
    IntMatrix::from_rows(rows, c).map_err(Into::into)
}

fn optional_matrix(
    rows: &Option<Vec<Vec<i64>>>,
    r: usize,
    c: usize,
    what: &str,
) -> Result<IntMatrix> {
    match rows {
        None => Ok(IntMatrix::zeros(r, c)),
        Some(rows) if c == 0 && rows.is_empty() => Ok(IntMatrix::zeros(r, 0)),
        Some(rows) => matrix(rows, r, c, what),
    }
}

fn vector(v: &[i64], len: usize, what: &str) -> Result<IntVector> {
    if v.len() != len {
        return Err(NestError::Shape(format!(
            "{what} must have length {len}, got {}",
            v.len()
        )));
    }
    Ok(IntVector::new(v.to_vec()))
}

fn bound(b: &RawBound, e: usize, what: &str) -> Result<AffineBound> {
    let coeffs = if b.coeffs.is_empty() {
        IntVector::zeros(e)
    } else {
        vector(&b.coeffs, e, what)?
    };
    Ok(AffineBound {
        coeffs,
        constant: b.constant,
    })
}

fn domain(raw: &RawDomain, dim: usize, e: usize, what: &str) -> Result<Domain> {
    match raw {
        RawDomain::Box(ranges) => {
            if ranges.len() != dim {
                return Err(NestError::Shape(format!(
                    "{what}: box has {} ranges, expected {dim}",
                    ranges.len()
                )));
            }
            let b = ranges
                .iter()
                .map(|r| Ok((bound(&r.lower, e, what)?, bound(&r.upper, e, what)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Domain::Box(b))
        }
        RawDomain::Vertices(vs) => {
            if vs.is_empty() {
                return Err(NestError::Shape(format!("{what}: empty vertex list")));
            }
            let v = vs
                .iter()
                .map(|v| {
                    Ok(Vertex {
                        r: if e == 0 && v.r.iter().all(|r| r.is_empty()) {
                            IntMatrix::zeros(dim, 0)
                        } else {
                            matrix(&v.r, dim, e, &format!("{what}: vertex R"))?
                        },
                        omega: vector(&v.omega, dim, &format!("{what}: vertex omega"))?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Domain::Vertices(v))
        }
    }
}

fn check_nonempty(d: &Domain, params: &[i64], what: &str) -> Result<()> {
    if let Domain::Box(b) = d {
        for (k, (lo, hi)) in b.iter().enumerate() {
            if lo.eval(params)? > hi.eval(params)? {
                return Err(NestError::EmptyDomain(format!("{what}, dimension {k}")));
            }
        }
    }
    Ok(())
}

fn build(raw: RawNest) -> Result<LoopNest> {
    if raw.statements.is_empty() {
        return Err(NestError::NoStatements);
    }
    let e = raw.params.len();
    let params = OuterVars {
        names: raw.params.iter().map(|p| p.name.clone()).collect(),
        minima: raw.params.iter().map(|p| p.min).collect(),
    };
    let mut seen = HashMap::new();
    for p in &params.names {
        if seen.insert(p.clone(), ()).is_some() {
            return Err(NestError::Duplicate(p.clone()));
        }
    }
    let n0 = params.minima.to_vec();

    let mut stmt_ix = HashMap::new();
    let mut statements = Vec::new();
    for (i, s) in raw.statements.iter().enumerate() {
        if stmt_ix.insert(s.id.clone(), i).is_some() {
            return Err(NestError::Duplicate(s.id.clone()));
        }
        let d = domain(&s.domain, s.depth, e, &format!("statement {}", s.id))?;
        if s.depth == 0 {
            return Err(NestError::Shape(format!("statement {} has depth 0", s.id)));
        }
        check_nonempty(&d, &n0, &format!("statement {}", s.id))?;
        statements.push(Statement {
            id: s.id.clone(),
            depth: s.depth,
            domain: d,
            order: s.order,
        });
    }

    let mut arr_ix = HashMap::new();
    let mut arrays = Vec::new();
    for (i, a) in raw.arrays.iter().enumerate() {
        if arr_ix.insert(a.id.clone(), i).is_some() {
            return Err(NestError::Duplicate(a.id.clone()));
        }
        if a.dim == 0 {
            return Err(NestError::Shape(format!("array {} has dimension 0", a.id)));
        }
        arrays.push(ArrayDecl {
            id: a.id.clone(),
            dim: a.dim,
        });
    }

    let stmt = |id: &str| {
        stmt_ix
            .get(id)
            .copied()
            .ok_or_else(|| NestError::Dangling(format!("statement `{id}`")))
    };
    let arr = |id: &str| {
        arr_ix
            .get(id)
            .copied()
            .ok_or_else(|| NestError::Dangling(format!("array `{id}`")))
    };

    let mut accesses = Vec::new();
    for a in &raw.accesses {
        let (l, b) = (arr(&a.array)?, stmt(&a.statement)?);
        let what = format!("access {}:{}:{}", a.array, a.statement, a.slot);
        let (nu, nb) = (arrays[l].dim, statements[b].depth);
        let acc = Access {
            array: l,
            statement: b,
            slot: a.slot,
            kind: a.kind,
            f_matrix: matrix(&a.f_matrix, nu, nb, &format!("{what}: F"))?,
            g_matrix: optional_matrix(&a.g_matrix, nu, e, &format!("{what}: G"))?,
            offset: vector(&a.offset, nu, &format!("{what}: f"))?,
        };
        if accesses
            .iter()
            .any(|x: &Access| x.array == l && x.statement == b && x.slot == a.slot)
        {
            return Err(NestError::Duplicate(what));
        }
        accesses.push(acc);
    }

    let mut dependences = Vec::new();
    for (k, d) in raw.dependences.iter().enumerate() {
        let (src, tgt) = (stmt(&d.source)?, stmt(&d.target)?);
        let what = format!("dependence #{k} ({} -> {})", d.source, d.target);
        let (na, nb) = (statements[src].depth, statements[tgt].depth);
        let produced_by = match &d.produced_by {
            None => None,
            Some(r) => {
                let l = arr(&r.array)?;
                let found = accesses.iter().any(|a| {
                    a.array == l
                        && a.statement == tgt
                        && a.slot == r.slot
                        && a.kind == AccessKind::Read
                });
                if !found {
                    return Err(NestError::Dangling(format!(
                        "{what}: produced_by {}:{} is not a read of the target",
                        r.array, r.slot
                    )));
                }
                Some((l, r.slot))
            }
        };
        let dep = Dependence {
            source: src,
            target: tgt,
            kind: d.kind,
            phi_matrix: matrix(&d.phi_matrix, na, nb, &format!("{what}: Phi"))?,
            psi_matrix: optional_matrix(&d.psi_matrix, na, e, &format!("{what}: Psi"))?,
            phi_offset: vector(&d.phi_offset, na, &format!("{what}: phi"))?,
            domain: domain(&d.domain, nb, e, &what)?,
            produced_by,
        };
        check_nonempty(&dep.domain, &n0, &what)?;
        // Dependence domain must lie in the target domain and map into the source domain.
        for v in vertices(&dep.domain) {
            let p = v.at(&n0)?;
            if let Domain::Box(_) = statements[tgt].domain {
                if !statements[tgt].domain.contains(&p, &n0)? {
                    return Err(NestError::Inconsistent(format!(
                        "{what}: vertex {p} outside the target domain"
                    )));
                }
            }
            let i = dep.source_of(&p, &n0)?;
            if let Domain::Box(_) = statements[src].domain {
                if !statements[src].domain.contains(&i, &n0)? {
                    return Err(NestError::Inconsistent(format!(
                        "{what}: vertex {p} maps to {i}, outside the source domain"
                    )));
                }
            }
        }
        dependences.push(dep);
    }

    Ok(LoopNest {
        params,
        statements,
        arrays,
        accesses,
        dependences,
    })
}

// ---------------------------------------------------------------------------
// Vertices and enumeration

/// Parametric vertices of a domain. Box domains yield their corners in
/// lexicographic (lower-before-upper) order with duplicates removed.
pub fn vertices(d: &Domain) -> Vec<Vertex> {
    match d {
        Domain::Vertices(v) => v.clone(),
        Domain::Box(bounds) => {
            let dim = bounds.len();
            let e = bounds.first().map_or(0, |(lo, _)| lo.coeffs.len());
            let mut out: Vec<Vertex> = Vec::new();
            for mask in 0..(1usize << dim) {
                let mut r = IntMatrix::zeros(dim, e);
                let mut omega = IntVector::zeros(dim);
                for k in 0..dim {
                    let upper = mask & (1 << (dim - 1 - k)) != 0;
                    let b = if upper { &bounds[k].1 } else { &bounds[k].0 };
                    for p in 0..e {
                        r[(k, p)] = b.coeffs[p];
                    }
                    omega[k] = b.constant;
                }
                let v = Vertex { r, omega };
                if !out.contains(&v) {
                    out.push(v);
                }
            }
            out
        }
    }
}

/// All integer points of a box domain at concrete parameters, in
/// lexicographic order.
pub fn enumerate_domain(d: &Domain, params: &[i64], cap: usize) -> Result<Vec<IntVector>> {
    let Domain::Box(bounds) = d else {
        return Err(NestError::VertexDomain);
    };
    let mut ranges = Vec::with_capacity(bounds.len());
    let mut total: u128 = 1;
    for (k, (lo, hi)) in bounds.iter().enumerate() {
        let (lo, hi) = (lo.eval(params)?, hi.eval(params)?);
        if lo > hi {
            return Err(NestError::EmptyDomain(format!(
                "dimension {k}: {lo} > {hi}"
            )));
        }
        total = total.saturating_mul((hi - lo + 1) as u128);
        ranges.push((lo, hi));
    }
    if total > cap as u128 {
        return Err(NestError::PointCap(cap));
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        out.push(IntVector::new(cur.clone()));
        let mut k = ranges.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if cur[k] < ranges[k].1 {
                cur[k] += 1;
                for j in k + 1..ranges.len() {
                    cur[j] = ranges[j].0;
                }
                break;
            }
        }
    }
}
