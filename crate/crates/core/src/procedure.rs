//! The recursive scheduling and allocation procedure.
//!
//! Recursion `ξ` solves for one row of every statement schedule (and, while
//! `ξ ≤ r`, one row of every array allocation), then updates the active
//! constraint sets: dependences strictly separated at a time dimension are
//! retired, input dependences likewise, accesses whose row locality is
//! complete leave the space set, and the set of statements that must gain
//! rank next time is recomputed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{integer_kernel_basis, rank, AlgebraError, IntMatrix, IntVector, Rational};
use crate::constraints::{
    build_alignment_columns, build_legality_columns, build_space_locality_columns, locality_kernel,
    rank_witnesses, ColumnTag, ConstraintColumn, ConstraintError, ConstraintSystem, ExtendedLayout,
    Family, Sense,
};
use crate::nest::{DependenceKind, LoopNest};
use crate::solver::{solve, Solution, SolveError, SolverConfig};

/// Objective weight per column family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weights {
    /// `τ − ηF` columns.
    pub align_linear: Rational,
    /// `b − ηG − z` columns.
    pub align_param: Rational,
    /// `a − ηf − y` columns.
    pub align_const: Rational,
    /// Ordering dependences (flow, anti, out).
    pub dependence: Rational,
    /// Input dependences.
    pub in_dependence: Rational,
    /// Space-locality columns.
    pub space: Rational,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            align_linear: Rational::integer(64),
            align_param: Rational::integer(64),
            align_const: Rational::integer(64),
            dependence: Rational::integer(1),
            in_dependence: Rational::integer(4),
            space: Rational::integer(2),
        }
    }
}

impl Weights {
    /// Applies a `name=value` override.
    pub fn set(&mut self, name: &str, value: Rational) -> Result<(), String> {
        if value.is_negative() || value.is_zero() {
            return Err(format!("weight {name} must be positive"));
        }
        let slot = match name {
            "align_linear" => &mut self.align_linear,
            "align_param" => &mut self.align_param,
            "align_const" => &mut self.align_const,
            "dependence" => &mut self.dependence,
            "in_dependence" => &mut self.in_dependence,
            "space" => &mut self.space,
            _ => return Err(format!("unknown weight `{name}`")),
        };
        *slot = value;
        Ok(())
    }

    fn for_family(&self, family: Family, input_dep: bool) -> Rational {
        match family {
            Family::LegalityConst | Family::LegalityParam if input_dep => self.in_dependence,
            Family::LegalityConst | Family::LegalityParam => self.dependence,
            Family::AlignF => self.align_linear,
            Family::AlignG => self.align_param,
            Family::AlignConst => self.align_const,
            Family::SpaceLoc => self.space,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcedureConfig {
    pub r_space: usize,
    pub weights: Weights,
    pub solver: SolverConfig,
    /// Retire input dependences only once `ξ > r`.
    pub guard_indep_drop: bool,
    pub last_index_contiguous: bool,
}

impl Default for ProcedureConfig {
    fn default() -> Self {
        ProcedureConfig {
            r_space: 1,
            weights: Weights::default(),
            solver: SolverConfig::default(),
            guard_indep_drop: false,
            last_index_contiguous: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum ProcedureError {
    #[error("r must be < n (got r = {r}, n = {n})")]
    BadSpatialDims { r: usize, n: usize },
    #[error("recursion {xi} is infeasible ({context}): {source}")]
    Infeasible {
        xi: usize,
        context: String,
        source: SolveError,
    },
    #[error("statement {statement}: final schedule rank {rank} < depth {depth}")]
    RankDeficiency {
        statement: String,
        rank: usize,
        depth: usize,
    },
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementSchedule {
    pub id: String,
    #[serde(rename = "T")]
    pub t: IntMatrix,
    #[serde(rename = "B")]
    pub b: IntMatrix,
    pub a: IntVector,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayAllocation {
    pub id: String,
    #[serde(rename = "H")]
    pub h: IntMatrix,
    #[serde(rename = "Z")]
    pub z: IntMatrix,
    pub y: IntVector,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub statement: String,
    pub s: IntVector,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecursionDiagnostics {
    pub xi: usize,
    pub objective: Rational,
    /// Slack per column label.
    pub slacks: BTreeMap<String, i64>,
    pub must_grow: Vec<String>,
    pub witnesses: Vec<WitnessRecord>,
    pub active_dependences: Vec<String>,
    pub active_in_dependences: Vec<String>,
    pub active_space: Vec<String>,
    /// Dependences retired after this recursion.
    pub dropped: Vec<String>,
}

/// Row-locality bookkeeping for one access.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalityRecord {
    pub access: String,
    /// Rank of the access matrix without its contiguous row.
    pub r_access: usize,
    /// First recursion at which enough locality rows were found.
    pub depth: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub recursions: Vec<RecursionDiagnostics>,
    pub locality: Vec<LocalityRecord>,
    pub warnings: Vec<String>,
    #[serde(default = "default_true")]
    pub last_index_contiguous: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformPlan {
    pub r_space: usize,
    pub statements: Vec<StatementSchedule>,
    pub arrays: Vec<ArrayAllocation>,
    pub diagnostics: Diagnostics,
    pub weights: Weights,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("plan parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("plan does not match the nest: {0}")]
    Mismatch(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unknown {0}")]
    Unknown(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

impl TransformPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    /// Parses a plan and checks its shapes against `nest`.
    pub fn from_json(text: &str, nest: &LoopNest) -> Result<Self, PlanError> {
        let plan: TransformPlan = serde_json::from_str(text).map_err(|e| PlanError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        plan.check_shapes(nest)?;
        Ok(plan)
    }

    pub fn check_shapes(&self, nest: &LoopNest) -> Result<(), PlanError> {
        let (n, e, r) = (nest.n(), nest.e(), self.r_space);
        if self.statements.len() != nest.statements.len() || self.arrays.len() != nest.arrays.len()
        {
            return Err(PlanError::Mismatch(
                "statement or array count differs".into(),
            ));
        }
        for (s, st) in self.statements.iter().zip(&nest.statements) {
            if s.id != st.id {
                return Err(PlanError::Mismatch(format!(
                    "statement `{}` vs `{}`",
                    s.id, st.id
                )));
            }
            if s.t.rows() != n
                || s.t.cols() != st.depth
                || s.b.rows() != n
                || (e > 0 && s.b.cols() != e)
                || s.a.len() != n
            {
                return Err(PlanError::Mismatch(format!(
                    "statement `{}` has malformed T/B/a",
                    s.id
                )));
            }
        }
        for (a, ad) in self.arrays.iter().zip(&nest.arrays) {
            if a.id != ad.id {
                return Err(PlanError::Mismatch(format!(
                    "array `{}` vs `{}`",
                    a.id, ad.id
                )));
            }
            if a.h.rows() != r
                || (r > 0 && a.h.cols() != ad.dim)
                || a.z.rows() != r
                || (r > 0 && e > 0 && a.z.cols() != e)
                || a.y.len() != r
            {
                return Err(PlanError::Mismatch(format!(
                    "array `{}` has malformed H/Z/y",
                    a.id
                )));
            }
        }
        Ok(())
    }

    pub fn statement(&self, id: &str) -> Option<&StatementSchedule> {
        self.statements.iter().find(|s| s.id == id)
    }

    pub fn array(&self, id: &str) -> Option<&ArrayAllocation> {
        self.arrays.iter().find(|a| a.id == id)
    }

    pub fn locality(&self, access: &str) -> Option<&LocalityRecord> {
        self.diagnostics
            .locality
            .iter()
            .find(|l| l.access == access)
    }
}

/// Transformed index vector `T·J + B·N + a` of statement `beta`.
pub fn schedule_of(
    plan: &TransformPlan,
    beta: usize,
    j: &[i64],
    params: &[i64],
) -> Result<IntVector, PlanError> {
    let s = plan
        .statements
        .get(beta)
        .ok_or_else(|| PlanError::Unknown(format!("statement #{beta}")))?;
    if j.len() != s.t.cols() {
        return Err(PlanError::Dimension(format!(
            "iteration of length {}, expected {}",
            j.len(),
            s.t.cols()
        )));
    }
    let bn = if s.b.cols() == 0 {
        IntVector::zeros(s.b.rows())
    } else {
        s.b.matvec(params)?
    };
    Ok(s.t.matvec(j)?.add(&bn)?.add(&s.a)?)
}

/// Owning processor `H·F + Z·N + y` of element `index` of array `l`.
pub fn placement_of(
    plan: &TransformPlan,
    l: usize,
    index: &[i64],
    params: &[i64],
) -> Result<IntVector, PlanError> {
    let a = plan
        .arrays
        .get(l)
        .ok_or_else(|| PlanError::Unknown(format!("array #{l}")))?;
    if plan.r_space == 0 {
        return Ok(IntVector::zeros(0));
    }
    if index.len() != a.h.cols() {
        return Err(PlanError::Dimension(format!(
            "index of length {}, expected {}",
            index.len(),
            a.h.cols()
        )));
    }
    let zn = if a.z.cols() == 0 {
        IntVector::zeros(a.z.rows())
    } else {
        a.z.matvec(params)?
    };
    Ok(a.h.matvec(index)?.add(&zn)?.add(&a.y)?)
}

/// One solved recursion, kept for inspection and oracle checks.
#[derive(Debug, Clone)]
pub struct RecursionTrace {
    pub xi: usize,
    pub system: ConstraintSystem,
    pub solution: Solution,
}

struct SpaceState {
    access: usize,
    r_access: usize,
    kernel: Vec<IntVector>,
    rows: Vec<Vec<i64>>,
    depth: Option<usize>,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Diagnostics {
            recursions: Vec::new(),
            locality: Vec::new(),
            warnings: Vec::new(),
            last_index_contiguous: true,
        }
    }
}

impl SpaceState {
    fn rank(&self, nb: usize) -> usize {
        rank(&IntMatrix::from_rows(&self.rows, nb).expect("row width"))
    }
}

fn must_grow(nest: &LoopNest, tacc: &[IntMatrix], xi: usize) -> Vec<usize> {
    let n = nest.n();
    (0..nest.statements.len())
        .filter(|&b| {
            n + 1 - xi == nest.statements[b].depth - rank(&tacc[b]).min(nest.statements[b].depth)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    nest: &LoopNest,
    cfg: &ProcedureConfig,
    layout: &ExtendedLayout,
    xi: usize,
    active: &[usize],
    active_in: &[usize],
    active_space: &[usize],
    tacc: &[IntMatrix],
    lset: &[usize],
) -> Result<ConstraintSystem, ProcedureError> {
    let mut columns: Vec<ConstraintColumn> = Vec::new();
    let weigh = |mut cols: Vec<ConstraintColumn>, input: bool| {
        for c in &mut cols {
            c.weight = cfg.weights.for_family(c.family, input);
        }
        cols
    };
    for &d in active {
        columns.extend(weigh(
            build_legality_columns(nest, d, layout, Sense::Geq0)?,
            false,
        ));
    }
    for &d in active_in {
        columns.extend(weigh(
            build_legality_columns(nest, d, layout, Sense::AbsSlack)?,
            true,
        ));
    }
    if xi <= cfg.r_space {
        for a in 0..nest.accesses.len() {
            columns.extend(weigh(build_alignment_columns(nest, a, layout)?, false));
        }
    }
    for &a in active_space {
        let (cols, _) = build_space_locality_columns(nest, a, layout, cfg.last_index_contiguous)?;
        columns.extend(weigh(cols, false));
    }
    let witnesses = rank_witnesses(nest, tacc, lset, layout)?;
    Ok(ConstraintSystem {
        layout: layout.clone(),
        columns,
        witnesses,
    })
}

/// The system of the first recursion: every dependence and every
/// space-localizable access active, every full-depth statement gaining rank.
pub fn first_system(
    nest: &LoopNest,
    cfg: &ProcedureConfig,
) -> Result<ConstraintSystem, ProcedureError> {
    let n = nest.n();
    if cfg.r_space >= n {
        return Err(ProcedureError::BadSpatialDims { r: cfg.r_space, n });
    }
    let layout = ExtendedLayout::new(nest);
    let (ord, inp): (Vec<usize>, Vec<usize>) =
        (0..nest.dependences.len()).partition(|&d| nest.dependences[d].kind != DependenceKind::In);
    let space: Vec<usize> = (0..nest.accesses.len())
        .filter(|&a| locality_kernel(nest, a, cfg.last_index_contiguous).is_some())
        .collect();
    let tacc: Vec<IntMatrix> = nest
        .statements
        .iter()
        .map(|s| IntMatrix::zeros(0, s.depth))
        .collect();
    let lset = must_grow(nest, &tacc, 1);
    assemble(nest, cfg, &layout, 1, &ord, &inp, &space, &tacc, &lset)
}

pub fn run_procedure(
    nest: &LoopNest,
    cfg: &ProcedureConfig,
) -> Result<TransformPlan, ProcedureError> {
    run_traced(nest, cfg).map(|(p, _)| p)
}

/// Runs all `n` recursions and returns the plan plus per-recursion systems.
pub fn run_traced(
    nest: &LoopNest,
    cfg: &ProcedureConfig,
) -> Result<(TransformPlan, Vec<RecursionTrace>), ProcedureError> {
    let n = nest.n();
    let r = cfg.r_space;
    if r >= n {
        return Err(ProcedureError::BadSpatialDims { r, n });
    }
    let e = nest.e();
    let layout = ExtendedLayout::new(nest);

    let mut active: Vec<usize> = (0..nest.dependences.len())
        .filter(|&d| nest.dependences[d].kind != DependenceKind::In)
        .collect();
    let mut active_in: Vec<usize> = (0..nest.dependences.len())
        .filter(|&d| nest.dependences[d].kind == DependenceKind::In)
        .collect();
    let mut never_separated = vec![true; nest.dependences.len()];
    let mut space: Vec<SpaceState> = (0..nest.accesses.len())
        .filter_map(|a| {
            locality_kernel(nest, a, cfg.last_index_contiguous).map(|(r_access, kernel)| {
                SpaceState {
                    access: a,
                    r_access,
                    kernel,
                    rows: Vec::new(),
                    depth: None,
                }
            })
        })
        .collect();
    let mut tacc: Vec<IntMatrix> = nest
        .statements
        .iter()
        .map(|s| IntMatrix::zeros(0, s.depth))
        .collect();
    let mut rows_t: Vec<Vec<Vec<i64>>> = vec![Vec::new(); nest.statements.len()];
    let mut rows_b: Vec<Vec<Vec<i64>>> = vec![Vec::new(); nest.statements.len()];
    let mut rows_a: Vec<Vec<i64>> = vec![Vec::new(); nest.statements.len()];
    let mut rows_h: Vec<Vec<Vec<i64>>> = vec![Vec::new(); nest.arrays.len()];
    let mut rows_z: Vec<Vec<Vec<i64>>> = vec![Vec::new(); nest.arrays.len()];
    let mut rows_y: Vec<Vec<i64>> = vec![Vec::new(); nest.arrays.len()];
    let mut diagnostics = Diagnostics {
        recursions: Vec::new(),
        locality: Vec::new(),
        warnings: Vec::new(),
        last_index_contiguous: cfg.last_index_contiguous,
    };
    let mut trace = Vec::new();

    for xi in 1..=n {
        let lset = must_grow(nest, &tacc, xi);
        let active_space: Vec<usize> = space
            .iter()
            .filter(|s| s.depth.is_none())
            .map(|s| s.access)
            .collect();
        let system = assemble(
            nest,
            cfg,
            &layout,
            xi,
            &active,
            &active_in,
            &active_space,
            &tacc,
            &lset,
        )?;

        let solution = solve(&system, &cfg.solver).map_err(|source| ProcedureError::Infeasible {
            xi,
            context: format!(
                "{} ordering and {} input dependences active, {} space accesses, statements needing rank: [{}]",
                active.len(),
                active_in.len(),
                active_space.len(),
                lset.iter().map(|&b| nest.statements[b].id.as_str()).collect::<Vec<_>>().join(", ")
            ),
            source,
        })?;
        let x = solution.tau.as_slice();

        for b in 0..nest.statements.len() {
            let t = x[layout.tau(b)].to_vec();
            tacc[b] = tacc[b].with_row(&t)?;
            rows_t[b].push(t);
            rows_b[b].push(x[layout.b(b)].to_vec());
            rows_a[b].push(x[layout.a(b)]);
        }
        if xi <= r {
            for l in 0..nest.arrays.len() {
                rows_h[l].push(x[layout.eta(l)].to_vec());
                rows_z[l].push(x[layout.z(l)].to_vec());
                rows_y[l].push(x[layout.y(l)]);
            }
        }

        // Separation per dependence from its constant-part columns.
        let mut dep_values: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
        let mut dep_nonzero: BTreeMap<usize, bool> = BTreeMap::new();
        for (c, &z) in system.columns.iter().zip(&solution.slacks) {
            if let ColumnTag::Dependence { dep, param, .. } = c.tag {
                if z != 0 {
                    dep_nonzero.insert(dep, true);
                }
                if param.is_none() {
                    dep_values.entry(dep).or_default().push(z);
                }
            }
        }
        for (&d, &nz) in &dep_nonzero {
            if nz {
                never_separated[d] = false;
            }
        }
        let strictly = |d: usize| {
            dep_values
                .get(&d)
                .is_some_and(|v| v.iter().all(|&z| z >= 1))
        };

        let mut dropped = Vec::new();
        if xi > r {
            active.retain(|&d| {
                let keep = !strictly(d);
                if !keep {
                    dropped.push(nest.dependence_label(d));
                }
                keep
            });
        }
        if !cfg.guard_indep_drop || xi > r {
            active_in.retain(|&d| {
                let keep = !strictly(d);
                if !keep {
                    dropped.push(nest.dependence_label(d));
                }
                keep
            });
        }
        for s in &mut space {
            let b = nest.accesses[s.access].statement;
            let row = &x[layout.tau(b)];
            if s.kernel
                .iter()
                .all(|d| crate::algebra::dot(row, d) == Ok(0))
            {
                s.rows.push(row.to_vec());
                if s.depth.is_none() && s.rank(row.len()) >= s.r_access {
                    s.depth = Some(xi);
                }
            }
        }

        let label = |c: &ConstraintColumn| c.tag.label(nest, c.family);
        diagnostics.recursions.push(RecursionDiagnostics {
            xi,
            objective: solution.objective,
            slacks: system
                .columns
                .iter()
                .zip(&solution.slacks)
                .map(|(c, &z)| (label(c), z))
                .collect(),
            must_grow: lset
                .iter()
                .map(|&b| nest.statements[b].id.clone())
                .collect(),
            witnesses: solution
                .witness_used
                .iter()
                .zip(&system.witnesses)
                .map(|(w, g)| WitnessRecord {
                    statement: nest.statements[g.statement].id.clone(),
                    s: g.candidates[w.candidate].s.clone(),
                    sign: w.sign,
                })
                .collect(),
            active_dependences: system_deps(nest, &system, false),
            active_in_dependences: system_deps(nest, &system, true),
            active_space: active_space.iter().map(|&a| nest.access_label(a)).collect(),
            dropped,
        });
        trace.push(RecursionTrace {
            xi,
            system,
            solution,
        });
    }

    for (b, s) in nest.statements.iter().enumerate() {
        let rk = rank(&tacc[b]);
        if rk < s.depth {
            return Err(ProcedureError::RankDeficiency {
                statement: s.id.clone(),
                rank: rk,
                depth: s.depth,
            });
        }
    }
    for &d in &active {
        let msg = if never_separated[d] {
            format!(
                "{}: zero separation at every level; instances are ordered only by textual order",
                nest.dependence_label(d)
            )
        } else {
            format!("{}: never strictly separated at a time dimension; lex-equal instances rely on textual order", nest.dependence_label(d))
        };
        diagnostics.warnings.push(msg);
    }
    diagnostics.locality = space
        .iter()
        .map(|s| LocalityRecord {
            access: nest.access_label(s.access),
            r_access: s.r_access,
            depth: s.depth,
        })
        .collect();

    let mat = |rows: &[Vec<i64>], cols: usize| IntMatrix::from_rows(rows, cols);
    let statements = nest
        .statements
        .iter()
        .enumerate()
        .map(|(b, s)| {
            Ok(StatementSchedule {
                id: s.id.clone(),
                t: mat(&rows_t[b], s.depth)?,
                b: mat(&rows_b[b], e)?,
                a: IntVector::new(rows_a[b].clone()),
            })
        })
        .collect::<Result<Vec<_>, AlgebraError>>()?;
    let arrays = nest
        .arrays
        .iter()
        .enumerate()
        .map(|(l, a)| {
            Ok(ArrayAllocation {
                id: a.id.clone(),
                h: mat(&rows_h[l], a.dim)?,
                z: mat(&rows_z[l], e)?,
                y: IntVector::new(rows_y[l].clone()),
            })
        })
        .collect::<Result<Vec<_>, AlgebraError>>()?;
    Ok((
        TransformPlan {
            r_space: r,
            statements,
            arrays,
            diagnostics,
            weights: cfg.weights,
        },
        trace,
    ))
}

fn system_deps(nest: &LoopNest, system: &ConstraintSystem, input: bool) -> Vec<String> {
    let mut out: Vec<usize> = system
        .columns
        .iter()
        .filter_map(|c| match c.tag {
            ColumnTag::Dependence { dep, .. }
                if (nest.dependences[dep].kind == DependenceKind::In) == input =>
            {
                Some(dep)
            }
            _ => None,
        })
        .collect();
    out.dedup();
    out.into_iter().map(|d| nest.dependence_label(d)).collect()
}

/// Recursion at which the schedule rows of `beta` first satisfy the
/// locality condition of `access` with full rank, recomputed from the plan.
pub fn locality_depth_from_plan(
    nest: &LoopNest,
    plan: &TransformPlan,
    access: usize,
    last_index_contiguous: bool,
) -> Option<(usize, Option<usize>)> {
    let (r_access, kernel) = locality_kernel(nest, access, last_index_contiguous)?;
    let b = nest.accesses[access].statement;
    let t = &plan.statements[b].t;
    let mut rows = Vec::new();
    for xi in 0..t.rows() {
        let row = t.row(xi);
        if kernel.iter().all(|d| crate::algebra::dot(row, d) == Ok(0)) {
            rows.push(row.to_vec());
            if rank(&IntMatrix::from_rows(&rows, t.cols()).expect("width")) >= r_access {
                return Some((r_access, Some(xi + 1)));
            }
        }
    }
    Some((r_access, None))
}

/// Kernel basis of the full access matrix, as used by broadcast analysis.
pub fn access_kernel(nest: &LoopNest, access: usize) -> Vec<IntVector> {
    integer_kernel_basis(&nest.accesses[access].f_matrix)
}
