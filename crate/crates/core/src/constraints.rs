//! Constraint columns over the extended coefficient vector of one recursion.
//!
//! Every condition the scheduler imposes is a linear form `c · x` over the
//! extended vector `x` of unknown schedule and allocation coefficients. The
//! layout of `x` is fixed by [`ExtendedLayout`]; builders here only emit the
//! forms and never look at a candidate assignment.

use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{integer_kernel_basis, rank, AlgebraError, IntMatrix, IntVector, Rational};
use crate::nest::{vertices, LoopNest, NestError};

#[derive(Debug, Error)]
pub enum ConstraintError {
    #[error("statement {0} has an empty rank-witness set")]
    EmptyKernel(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Nest(#[from] NestError),
}

pub type Result<T> = std::result::Result<T, ConstraintError>;

/// Offsets of the blocks `τ^(β) η^(l) b^(β) z^(l) a_β y_l` inside the
/// extended vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedLayout {
    tau: Vec<Range<usize>>,
    eta: Vec<Range<usize>>,
    b: Vec<Range<usize>>,
    z: Vec<Range<usize>>,
    a: Vec<usize>,
    y: Vec<usize>,
    len: usize,
}

impl ExtendedLayout {
    pub fn new(nest: &LoopNest) -> Self {
        let e = nest.e();
        let mut off = 0;
        let mut take = |n: usize| {
            let r = off..off + n;
            off += n;
            r
        };
        let tau = nest.statements.iter().map(|s| take(s.depth)).collect();
        let eta = nest.arrays.iter().map(|a| take(a.dim)).collect();
        let b = nest.statements.iter().map(|_| take(e)).collect();
        let z = nest.arrays.iter().map(|_| take(e)).collect();
        let a = nest.statements.iter().map(|_| take(1).start).collect();
        let y = nest.arrays.iter().map(|_| take(1).start).collect();
        ExtendedLayout {
            tau,
            eta,
            b,
            z,
            a,
            y,
            len: off,
        }
    }

    /// Total length `M`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn tau(&self, stmt: usize) -> Range<usize> {
        self.tau[stmt].clone()
    }

    pub fn eta(&self, array: usize) -> Range<usize> {
        self.eta[array].clone()
    }

    pub fn b(&self, stmt: usize) -> Range<usize> {
        self.b[stmt].clone()
    }

    pub fn z(&self, array: usize) -> Range<usize> {
        self.z[array].clone()
    }

    pub fn a(&self, stmt: usize) -> usize {
        self.a[stmt]
    }

    pub fn y(&self, array: usize) -> usize {
        self.y[array]
    }

    /// Human-readable name of entry `i`, e.g. `tau[S1][0]`.
    pub fn entry_name(&self, nest: &LoopNest, i: usize) -> String {
        let find = |blocks: &[Range<usize>]| blocks.iter().position(|r| r.contains(&i));
        if let Some(k) = find(&self.tau) {
            return format!("tau[{}][{}]", nest.statements[k].id, i - self.tau[k].start);
        }
        if let Some(k) = find(&self.eta) {
            return format!("eta[{}][{}]", nest.arrays[k].id, i - self.eta[k].start);
        }
        if let Some(k) = find(&self.b) {
            return format!("b[{}][{}]", nest.statements[k].id, i - self.b[k].start);
        }
        if let Some(k) = find(&self.z) {
            return format!("z[{}][{}]", nest.arrays[k].id, i - self.z[k].start);
        }
        if let Some(k) = self.a.iter().position(|&x| x == i) {
            return format!("a[{}]", nest.statements[k].id);
        }
        if let Some(k) = self.y.iter().position(|&x| x == i) {
            return format!("y[{}]", nest.arrays[k].id);
        }
        format!("x[{i}]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    /// `c·x ≥ 0`, slack `z = c·x`.
    Geq0,
    /// slack `z = |c·x|`.
    AbsSlack,
    /// `c·x = 0`.
    Eq0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    LegalityConst,
    LegalityParam,
    AlignF,
    AlignG,
    AlignConst,
    SpaceLoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnTag {
    /// Dependence index, vertex index, and parameter coordinate for `D` columns.
    Dependence {
        dep: usize,
        vertex: usize,
        param: Option<usize>,
    },
    /// Access index and component within the family.
    Access { access: usize, component: usize },
}

impl ColumnTag {
    pub fn label(&self, nest: &LoopNest, family: Family) -> String {
        match *self {
            ColumnTag::Dependence { dep, vertex, param } => match param {
                None => format!("{}/phi/v{vertex}", nest.dependence_label(dep)),
                Some(p) => format!(
                    "{}/param/v{vertex}/{}",
                    nest.dependence_label(dep),
                    nest.params.names[p]
                ),
            },
            ColumnTag::Access { access, component } => {
                let fam = match family {
                    Family::AlignF => "F",
                    Family::AlignG => "G",
                    Family::AlignConst => "f",
                    Family::SpaceLoc => "space",
                    _ => "?",
                };
                format!("{}/{fam}/{component}", nest.access_label(access))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintColumn {
    pub coeffs: IntVector,
    pub sense: Sense,
    pub family: Family,
    pub tag: ColumnTag,
    pub weight: Rational,
}

impl ConstraintColumn {
    fn new(len: usize, sense: Sense, family: Family, tag: ColumnTag) -> Self {
        ConstraintColumn {
            coeffs: IntVector::zeros(len),
            sense,
            family,
            tag,
            weight: Rational::ONE,
        }
    }

    fn add(&mut self, idx: usize, v: i64) -> Result<()> {
        self.coeffs[idx] = self.coeffs[idx]
            .checked_add(v)
            .ok_or(AlgebraError::Overflow("column"))?;
        Ok(())
    }

    pub fn eval(&self, x: &[i64]) -> Result<i64> {
        Ok(self.coeffs.dot(x)?)
    }

    /// Slack contributed to the objective at `x`.
    pub fn slack(&self, x: &[i64]) -> Result<i64> {
        let v = self.eval(x)?;
        Ok(match self.sense {
            Sense::Geq0 => v,
            Sense::AbsSlack | Sense::Eq0 => v.abs(),
        })
    }
}

/// `s_β` together with its embedding into the extended vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankWitness {
    pub statement: usize,
    pub s: IntVector,
    pub s_tilde: IntVector,
}

/// Candidate witnesses for one statement that must gain rank this recursion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessGroup {
    pub statement: usize,
    /// Schedule rows accumulated before this recursion.
    pub previous_rows: IntMatrix,
    pub candidates: Vec<RankWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSystem {
    pub layout: ExtendedLayout,
    pub columns: Vec<ConstraintColumn>,
    pub witnesses: Vec<WitnessGroup>,
}

/// Legality columns of one dependence: per vertex one constant-part column
/// (evaluated at the minimal parameters) and `e` parameter-coefficient
/// columns. `sense` is `Geq0` for ordering dependences and `AbsSlack` for
/// input dependences.
pub fn build_legality_columns(
    nest: &LoopNest,
    dep_idx: usize,
    layout: &ExtendedLayout,
    sense: Sense,
) -> Result<Vec<ConstraintColumn>> {
    let dep = &nest.dependences[dep_idx];
    let (alpha, beta) = (dep.source, dep.target);
    let n0 = nest.params.minima.to_vec();
    let e = nest.e();
    let m = layout.len();
    let tau_a = layout.tau(alpha);
    let tau_b = layout.tau(beta);
    // Φ·R + Ψ is constant per vertex; compute once per vertex below.
    let mut const_cols = Vec::new();
    let mut param_cols = Vec::new();
    for (vi, v) in vertices(&dep.domain).iter().enumerate() {
        let j0 = v.at(&n0)?;
        let i0 = dep.source_of(&j0, &n0)?;
        // t^β(J0) − t^α(I0) as a linear form.
        let mut c = ConstraintColumn::new(
            m,
            sense,
            Family::LegalityConst,
            ColumnTag::Dependence {
                dep: dep_idx,
                vertex: vi,
                param: None,
            },
        );
        for k in 0..j0.len() {
            c.add(tau_b.start + k, j0[k])?;
        }
        for k in 0..i0.len() {
            c.add(tau_a.start + k, -i0[k])?;
        }
        for p in 0..e {
            c.add(layout.b(beta).start + p, n0[p])?;
            c.add(layout.b(alpha).start + p, -n0[p])?;
        }
        c.add(layout.a(beta), 1)?;
        c.add(layout.a(alpha), -1)?;
        const_cols.push(c);

        // Coefficient of N_p: (τ^β − τ^α Φ) R_p + b^β_p − b^α_p − τ^α Ψ_p.
        let src_r = dep.phi_matrix.matmul(&v.r)?.add(&dep.psi_matrix)?;
        for p in 0..e {
            let mut c = ConstraintColumn::new(
                m,
                sense,
                Family::LegalityParam,
                ColumnTag::Dependence {
                    dep: dep_idx,
                    vertex: vi,
                    param: Some(p),
                },
            );
            for k in 0..v.r.rows() {
                c.add(tau_b.start + k, v.r[(k, p)])?;
            }
            for k in 0..src_r.rows() {
                c.add(tau_a.start + k, -src_r[(k, p)])?;
            }
            c.add(layout.b(beta).start + p, 1)?;
            c.add(layout.b(alpha).start + p, -1)?;
            param_cols.push(c);
        }
    }
    const_cols.extend(param_cols);
    Ok(const_cols)
}

/// Communication-free allocation columns of one access:
/// `τ − ηF` (n_β columns), `b − ηG − z` (e columns), `a − ηf − y` (one column).
pub fn build_alignment_columns(
    nest: &LoopNest,
    acc_idx: usize,
    layout: &ExtendedLayout,
) -> Result<Vec<ConstraintColumn>> {
    let acc = &nest.accesses[acc_idx];
    let (l, beta) = (acc.array, acc.statement);
    let m = layout.len();
    let eta = layout.eta(l);
    let nu = nest.arrays[l].dim;
    let mut cols = Vec::new();
    let tag = |component| ColumnTag::Access {
        access: acc_idx,
        component,
    };
    for k in 0..nest.statements[beta].depth {
        let mut c = ConstraintColumn::new(m, Sense::AbsSlack, Family::AlignF, tag(k));
        c.add(layout.tau(beta).start + k, 1)?;
        for i in 0..nu {
            c.add(eta.start + i, -acc.f_matrix[(i, k)])?;
        }
        cols.push(c);
    }
    for p in 0..nest.e() {
        let mut c = ConstraintColumn::new(m, Sense::AbsSlack, Family::AlignG, tag(p));
        c.add(layout.b(beta).start + p, 1)?;
        for i in 0..nu {
            c.add(eta.start + i, -acc.g_matrix[(i, p)])?;
        }
        c.add(layout.z(l).start + p, -1)?;
        cols.push(c);
    }
    let mut c = ConstraintColumn::new(m, Sense::AbsSlack, Family::AlignConst, tag(0));
    c.add(layout.a(beta), 1)?;
    for i in 0..nu {
        c.add(eta.start + i, -acc.offset[i])?;
    }
    c.add(layout.y(l), -1)?;
    cols.push(c);
    Ok(cols)
}

/// Access matrix with the contiguous dimension removed.
pub fn truncated_access_matrix(f: &IntMatrix, last_index_contiguous: bool) -> IntMatrix {
    if last_index_contiguous {
        f.without_row(f.rows() - 1)
    } else {
        f.without_row(0)
    }
}

/// Directions `d` with `F̃·d = 0` for an access, or `None` when the access
/// takes no part in space localization (1-D array or full-rank `F̃`).
pub fn locality_kernel(
    nest: &LoopNest,
    acc_idx: usize,
    last_index_contiguous: bool,
) -> Option<(usize, Vec<IntVector>)> {
    let acc = &nest.accesses[acc_idx];
    if nest.arrays[acc.array].dim < 2 {
        return None;
    }
    let ft = truncated_access_matrix(&acc.f_matrix, last_index_contiguous);
    let r = rank(&ft);
    if r >= nest.statements[acc.statement].depth {
        return None;
    }
    Some((r, integer_kernel_basis(&ft)))
}

/// Space-locality columns `τ^(β)·d^(γ)` plus the rank `r(l,β,q)` of `F̃`.
pub fn build_space_locality_columns(
    nest: &LoopNest,
    acc_idx: usize,
    layout: &ExtendedLayout,
    last_index_contiguous: bool,
) -> Result<(Vec<ConstraintColumn>, Option<usize>)> {
    let Some((r, kernel)) = locality_kernel(nest, acc_idx, last_index_contiguous) else {
        return Ok((Vec::new(), None));
    };
    let beta = nest.accesses[acc_idx].statement;
    let tau = layout.tau(beta);
    let cols = kernel
        .iter()
        .enumerate()
        .map(|(g, d)| {
            let mut c = ConstraintColumn::new(
                layout.len(),
                Sense::AbsSlack,
                Family::SpaceLoc,
                ColumnTag::Access {
                    access: acc_idx,
                    component: g,
                },
            );
            for k in 0..d.len() {
                c.coeffs[tau.start + k] = d[k];
            }
            c
        })
        .collect();
    Ok((cols, Some(r)))
}

/// Candidate rank witnesses for every statement in `lset`: the integer
/// kernel basis of its accumulated schedule rows.
pub fn rank_witnesses(
    nest: &LoopNest,
    previous: &[IntMatrix],
    lset: &[usize],
    layout: &ExtendedLayout,
) -> Result<Vec<WitnessGroup>> {
    lset.iter()
        .map(|&beta| {
            let prev = &previous[beta];
            let basis = integer_kernel_basis(prev);
            if basis.is_empty() {
                return Err(ConstraintError::EmptyKernel(
                    nest.statements[beta].id.clone(),
                ));
            }
            let tau = layout.tau(beta);
            let candidates = basis
                .into_iter()
                .map(|s| {
                    let mut s_tilde = IntVector::zeros(layout.len());
                    for k in 0..s.len() {
                        s_tilde[tau.start + k] = s[k];
                    }
                    RankWitness {
                        statement: beta,
                        s,
                        s_tilde,
                    }
                })
                .collect();
            Ok(WitnessGroup {
                statement: beta,
                previous_rows: prev.clone(),
                candidates,
            })
        })
        .collect()
}
