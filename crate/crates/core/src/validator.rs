//! Enumeration-based plan checker and exhaustive solver oracle.
//!
//! Everything here evaluates schedules and placements pointwise at concrete
//! parameter values; no legality decision goes through the constraint
//! columns.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{dot, lex_compare, rank, AlgebraError, IntMatrix, Rational};
use crate::comm::{detect_broadcast, nondegenerate_at, BroadcastCase};
use crate::constraints::{truncated_access_matrix, ConstraintSystem, Sense};
use crate::nest::{
    enumerate_domain, AccessKind, DependenceKind, Domain, LoopNest, NestError, DEFAULT_POINT_CAP,
};
use crate::procedure::{first_system, PlanError, ProcedureConfig, ProcedureError, TransformPlan};

/// Largest extended length the exhaustive oracle accepts by default.
pub const ORACLE_MAX_LEN: usize = 14;

#[derive(Debug, Error)]
pub enum ValidatorError {
    #[error("parameter {name} = {got} is below its minimum {min}")]
    BelowMinimum { name: String, got: i64, min: i64 },
    #[error("enumeration exceeds {0} points")]
    PointCap(usize),
    #[error("extended vector length {len} exceeds the oracle cap {cap}")]
    OracleCap { len: usize, cap: usize },
    #[error("explicit-vertex domains cannot be enumerated")]
    VertexDomain,
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Nest(NestError),
    #[error(transparent)]
    Procedure(#[from] ProcedureError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

impl From<NestError> for ValidatorError {
    fn from(e: NestError) -> Self {
        match e {
            NestError::PointCap(c) => ValidatorError::PointCap(c),
            NestError::VertexDomain => ValidatorError::VertexDomain,
            other => ValidatorError::Nest(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub dependence: String,
    pub source: Vec<i64>,
    pub target: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowLocalityCheck {
    pub access: String,
    pub depth: usize,
    /// Largest number of distinct rows touched with the outer coordinates fixed.
    pub metric: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BroadcastCheck {
    pub access: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub problems: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankFailure {
    pub statement: String,
    pub rank: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationReport {
    pub params: Vec<i64>,
    pub legality: Vec<PairRecord>,
    pub lex_equal_warnings: Vec<PairRecord>,
    pub comm_count: u64,
    pub comm_by_access: BTreeMap<String, u64>,
    pub row_locality: Vec<RowLocalityCheck>,
    pub broadcast_checks: Vec<BroadcastCheck>,
    pub rank_failures: Vec<RankFailure>,
    /// Reuse distance (in distinct time steps of the consumer) to count.
    pub reuse_histogram: BTreeMap<u64, u64>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.legality.is_empty()
            && self.rank_failures.is_empty()
            && self.row_locality.iter().all(|r| r.pass)
            && self.broadcast_checks.iter().all(|b| b.pass)
    }
}

fn affine(m: &IntMatrix, v: &[i64]) -> Vec<i64> {
    (0..m.rows())
        .map(|i| m.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

struct Eval<'a> {
    plan: &'a TransformPlan,
    nest: &'a LoopNest,
    params: &'a [i64],
}

impl Eval<'_> {
    /// `T·J + B·N + a`.
    fn time(&self, beta: usize, j: &[i64]) -> Vec<i64> {
        let s = &self.plan.statements[beta];
        let tj = affine(&s.t, j);
        let bn = affine(&s.b, self.params);
        (0..s.t.rows())
            .map(|x| tj[x] + bn.get(x).copied().unwrap_or(0) + s.a[x])
            .collect()
    }

    fn element(&self, acc: usize, j: &[i64]) -> Vec<i64> {
        let a = &self.nest.accesses[acc];
        let fj = affine(&a.f_matrix, j);
        let gn = affine(&a.g_matrix, self.params);
        (0..fj.len())
            .map(|k| fj[k] + gn.get(k).copied().unwrap_or(0) + a.offset[k])
            .collect()
    }

    fn owner(&self, l: usize, x: &[i64]) -> Vec<i64> {
        let al = &self.plan.arrays[l];
        let hx = affine(&al.h, x);
        let zn = affine(&al.z, self.params);
        (0..al.h.rows())
            .map(|k| hx[k] + zn.get(k).copied().unwrap_or(0) + al.y[k])
            .collect()
    }

    fn source(&self, dep: usize, j: &[i64]) -> Vec<i64> {
        let d = &self.nest.dependences[dep];
        let pj = affine(&d.phi_matrix, j);
        let pn = affine(&d.psi_matrix, self.params);
        (0..pj.len())
            .map(|k| pj[k] + pn.get(k).copied().unwrap_or(0) - d.phi_offset[k])
            .collect()
    }
}

fn points(
    dom: &Domain,
    params: &[i64],
    budget: &mut usize,
) -> Result<Vec<Vec<i64>>, ValidatorError> {
    let pts = enumerate_domain(dom, params, *budget)?;
    *budget -= pts.len().min(*budget);
    Ok(pts.into_iter().map(|p| p.into_inner()).collect())
}

/// Checks `plan` against `nest` at one parameter valuation.
pub fn validate(
    nest: &LoopNest,
    plan: &TransformPlan,
    params: &[i64],
) -> Result<ValidationReport, ValidatorError> {
    validate_with_cap(nest, plan, params, DEFAULT_POINT_CAP)
}

pub fn validate_with_cap(
    nest: &LoopNest,
    plan: &TransformPlan,
    params: &[i64],
    cap: usize,
) -> Result<ValidationReport, ValidatorError> {
    nest.check_params(params)?;
    for (k, (&got, &min)) in params.iter().zip(nest.params.minima.iter()).enumerate() {
        if got < min {
            return Err(ValidatorError::BelowMinimum {
                name: nest.params.names[k].clone(),
                got,
                min,
            });
        }
    }
    plan.check_shapes(nest)?;
    let ev = Eval { plan, nest, params };
    let r = plan.r_space;
    let mut budget = cap;

    let stmt_points: Vec<Vec<Vec<i64>>> = nest
        .statements
        .iter()
        .map(|s| points(&s.domain, params, &mut budget))
        .collect::<Result<_, _>>()?;

    // Legality: pointwise lexicographic order of source before target.
    let mut legality = Vec::new();
    let mut lex_equal = Vec::new();
    for (di, d) in nest.dependences.iter().enumerate() {
        if d.kind == DependenceKind::In {
            continue;
        }
        for j in points(&d.domain, params, &mut budget)? {
            let i = ev.source(di, &j);
            let tj = ev.time(d.target, &j);
            let ti = ev.time(d.source, &i);
            let rec = || PairRecord {
                dependence: nest.dependence_label(di),
                source: i.clone(),
                target: j.clone(),
            };
            match lex_compare(&tj, &ti)? {
                Ordering::Less => legality.push(rec()),
                Ordering::Equal => lex_equal.push(rec()),
                Ordering::Greater => {}
            }
        }
    }

    // Communication: distinct (element, consumer, time) triples read off-processor.
    let mut comm_by_access = BTreeMap::new();
    let mut reuse: BTreeMap<u64, u64> = BTreeMap::new();
    for (ai, a) in nest.accesses.iter().enumerate() {
        if a.kind != AccessKind::Read {
            continue;
        }
        let mut transfers = BTreeSet::new();
        let mut reads: BTreeMap<(Vec<i64>, Vec<i64>), BTreeSet<Vec<i64>>> = BTreeMap::new();
        for j in &stmt_points[a.statement] {
            let x = ev.element(ai, j);
            let t = ev.time(a.statement, j);
            let consumer = t[..r].to_vec();
            let time = t[r..].to_vec();
            if r > 0 && ev.owner(a.array, &x) != consumer {
                transfers.insert((x.clone(), consumer.clone(), time.clone()));
            }
            reads.entry((x, consumer)).or_default().insert(time);
        }
        comm_by_access.insert(nest.access_label(ai), transfers.len() as u64);
        // Time steps at which each processor runs this statement.
        let mut steps: BTreeMap<Vec<i64>, BTreeSet<Vec<i64>>> = BTreeMap::new();
        for j in &stmt_points[a.statement] {
            let t = ev.time(a.statement, j);
            steps
                .entry(t[..r].to_vec())
                .or_default()
                .insert(t[r..].to_vec());
        }
        for ((_, consumer), times) in &reads {
            let order: Vec<&Vec<i64>> = steps[consumer].iter().collect();
            let pos: Vec<usize> = times
                .iter()
                .map(|t| order.binary_search(&t).unwrap_or(0))
                .collect();
            for w in pos.windows(2) {
                *reuse.entry((w[1] - w[0]) as u64).or_default() += 1;
            }
        }
    }
    let comm_count = comm_by_access.values().sum();

    // Row locality for every access with a claimed depth.
    let mut row_locality = Vec::new();
    for rec in &plan.diagnostics.locality {
        let Some(depth) = rec.depth else { continue };
        let Some(ai) = (0..nest.accesses.len()).find(|&i| nest.access_label(i) == rec.access)
        else {
            continue;
        };
        let a = &nest.accesses[ai];
        let ft = truncated_access_matrix(&a.f_matrix, plan.diagnostics.last_index_contiguous);
        let keep: Vec<usize> = if plan.diagnostics.last_index_contiguous {
            (0..ft.rows()).collect()
        } else {
            (1..a.f_matrix.rows()).collect()
        };
        let mut groups: BTreeMap<Vec<i64>, BTreeSet<Vec<i64>>> = BTreeMap::new();
        for j in &stmt_points[a.statement] {
            let t = ev.time(a.statement, j);
            let x = ev.element(ai, j);
            groups
                .entry(t[..depth].to_vec())
                .or_default()
                .insert(keep.iter().map(|&k| x[k]).collect());
        }
        let metric = groups.values().map(|g| g.len()).max().unwrap_or(0);
        row_locality.push(RowLocalityCheck {
            access: rec.access.clone(),
            depth,
            metric,
            pass: metric <= 1,
        });
    }

    // Broadcast claims.
    let mut broadcast_checks = Vec::new();
    for (ai, a) in nest.accesses.iter().enumerate() {
        if a.kind != AccessKind::Read {
            continue;
        }
        let finding = detect_broadcast(plan, nest, ai).map_err(|e| match e {
            crate::comm::CommError::Algebra(e) => ValidatorError::Algebra(e),
            crate::comm::CommError::Nest(e) => ValidatorError::from(e),
            crate::comm::CommError::WriteAccess(_) => unreachable!("reads only"),
        })?;
        if !finding.eligible {
            continue;
        }
        let mut problems = Vec::new();
        let t = &plan.statements[a.statement].t;
        for x in r..t.rows() {
            for u in &finding.kernel_basis {
                let v = dot(t.row(x), u)?;
                if v != 0 {
                    problems.push(format!("time row {} has τ·u = {v} for u = {u}", x + 1));
                }
            }
        }
        if nondegenerate_at(nest, ai, &finding.kernel_basis, params) != Some(true) {
            problems.push("no iteration pair J, J+u inside the domain".into());
        }
        let mut by_element: BTreeMap<Vec<i64>, BTreeSet<Vec<i64>>> = BTreeMap::new();
        for j in &stmt_points[a.statement] {
            by_element
                .entry(ev.element(ai, j))
                .or_default()
                .insert(ev.time(a.statement, j)[r..].to_vec());
        }
        for (x, times) in &by_element {
            if times.len() > 1 {
                problems.push(format!(
                    "element {x:?} is read at {} distinct time vectors",
                    times.len()
                ));
            }
        }
        if finding.case == Some(BroadcastCase::FlowProduced) {
            let mut writers: BTreeMap<Vec<i64>, BTreeSet<Vec<i64>>> = BTreeMap::new();
            for (di, d) in nest.dependences.iter().enumerate() {
                if d.kind != DependenceKind::Flow
                    || d.target != a.statement
                    || d.produced_by != Some((a.array, a.slot))
                {
                    continue;
                }
                for j in points(&d.domain, params, &mut budget)? {
                    let i = ev.source(di, &j);
                    if lex_compare(&ev.time(d.source, &i), &ev.time(d.target, &j))?
                        != Ordering::Less
                    {
                        problems.push(format!(
                            "element read at {j:?} is not produced before it is read"
                        ));
                    }
                    let mut w = vec![d.source as i64];
                    w.extend(i);
                    writers.entry(ev.element(ai, &j)).or_default().insert(w);
                }
            }
            for (x, w) in &writers {
                if w.len() > 1 {
                    problems.push(format!("element {x:?} has {} writers", w.len()));
                }
            }
        }
        broadcast_checks.push(BroadcastCheck {
            access: finding.access,
            pass: problems.is_empty(),
            problems,
        });
    }

    let rank_failures = nest
        .statements
        .iter()
        .zip(&plan.statements)
        .filter_map(|(s, p)| {
            let rk = rank(&p.t);
            (rk != s.depth).then(|| RankFailure {
                statement: s.id.clone(),
                rank: rk,
                depth: s.depth,
            })
        })
        .collect();

    Ok(ValidationReport {
        params: params.to_vec(),
        legality,
        lex_equal_warnings: lex_equal,
        comm_count,
        comm_by_access,
        row_locality,
        broadcast_checks,
        rank_failures,
        reuse_histogram: reuse,
    })
}

/// Default parameter settings: every minimum raised by 2, then by 4.
pub fn default_params(nest: &LoopNest) -> [Vec<i64>; 2] {
    let m = nest.params.minima.as_slice();
    [
        m.iter().map(|v| v + 2).collect(),
        m.iter().map(|v| v + 4).collect(),
    ]
}

/// Exhaustive minimum of the objective over `[−B, B]^M`.
///
/// Feasibility is checked without the solver's machinery: `Geq0` columns must
/// be nonnegative, `Eq0` columns zero, and every statement that must gain rank
/// must actually do so.
pub fn brute_force_system(
    system: &ConstraintSystem,
    bound: i64,
    max_len: usize,
) -> Result<Option<(Rational, Vec<i64>)>, ValidatorError> {
    let m = system.layout.len();
    if m > max_len {
        return Err(ValidatorError::OracleCap {
            len: m,
            cap: max_len,
        });
    }
    let den = system.columns.iter().fold(1i64, |acc, c| {
        let d = c.weight.denom();
        acc / crate::algebra::gcd(acc as i128, d as i128) as i64 * d
    });
    let weights: Vec<i64> = system
        .columns
        .iter()
        .map(|c| c.weight.numer() * (den / c.weight.denom()))
        .collect();
    let coeffs: Vec<&[i64]> = system.columns.iter().map(|c| c.coeffs.as_slice()).collect();
    let base: Vec<usize> = system
        .witnesses
        .iter()
        .map(|g| rank(&g.previous_rows))
        .collect();

    let mut x = vec![-bound; m];
    let mut vals: Vec<i64> = coeffs
        .iter()
        .map(|c| c.iter().zip(&x).map(|(a, b)| a * b).sum())
        .collect();
    let mut best: Option<(i64, Vec<i64>)> = None;
    loop {
        let mut ok = true;
        let mut obj = 0i64;
        for (k, c) in system.columns.iter().enumerate() {
            let v = vals[k];
            let z = match c.sense {
                Sense::Geq0 if v < 0 => {
                    ok = false;
                    break;
                }
                Sense::Eq0 if v != 0 => {
                    ok = false;
                    break;
                }
                Sense::Geq0 => v,
                _ => v.abs(),
            };
            obj += weights[k] * z;
        }
        if ok && best.as_ref().is_none_or(|(b, _)| obj < *b) {
            let grows = system.witnesses.iter().zip(&base).all(|(g, &rk)| {
                let row = &x[system.layout.tau(g.statement)];
                g.previous_rows
                    .with_row(row)
                    .is_ok_and(|m| rank(&m) == rk + 1)
            });
            if grows {
                best = Some((obj, x.clone()));
            }
        }
        // Odometer step with incremental column update.
        let mut i = 0;
        loop {
            if i == m {
                return Ok(
                    best.map(|(o, x)| (Rational::new(o, den).expect("positive denominator"), x))
                );
            }
            let delta = if x[i] < bound {
                x[i] += 1;
                1
            } else {
                let d = -2 * bound;
                x[i] = -bound;
                d
            };
            for (k, c) in coeffs.iter().enumerate() {
                vals[k] += c[i] * delta;
            }
            if delta == 1 {
                break;
            }
            i += 1;
        }
    }
}

/// Exhaustive optimum of the first recursion of the procedure.
pub fn brute_force_best_alignment(
    nest: &LoopNest,
    r_space: usize,
    bound: i64,
) -> Result<Option<Rational>, ValidatorError> {
    let cfg = ProcedureConfig {
        r_space,
        ..Default::default()
    };
    let system = first_system(nest, &cfg)?;
    Ok(brute_force_system(&system, bound, ORACLE_MAX_LEN)?.map(|(o, _)| o))
}
