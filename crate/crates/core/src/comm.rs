//! Residual data exchanges of a plan and broadcast detection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{dot, integer_kernel_basis, AlgebraError, IntMatrix, IntVector};
use crate::nest::{
    enumerate_domain, AccessKind, DependenceKind, Domain, LoopNest, NestError, DEFAULT_POINT_CAP,
};
use crate::procedure::TransformPlan;

#[derive(Debug, Error)]
pub enum CommError {
    #[error("access {0} is a write; broadcast applies to reads only")]
    WriteAccess(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Nest(#[from] NestError),
}

/// Alignment residuals of one access at one spatial recursion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentResidual {
    pub xi: usize,
    /// `τ − ηF`.
    #[serde(rename = "F")]
    pub f: IntVector,
    /// `b − ηG − z`.
    #[serde(rename = "G")]
    pub g: IntVector,
    /// `a − ηf − y`.
    #[serde(rename = "f")]
    pub c: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SlackFamily {
    F,
    G,
    #[serde(rename = "f")]
    Const,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeRequirement {
    pub access: String,
    pub array: String,
    pub statement: String,
    pub reason: Vec<SlackFamily>,
    pub per_recursion: Vec<AlignmentResidual>,
    /// Owner of an element: `H·x + Z·N + y` of this array.
    pub owner: String,
    /// Consumer of an iteration: the first `r` schedule rows of the statement.
    pub consumer_rows: IntMatrix,
    pub classification: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailedCondition {
    Degenerate,
    TimeVariance,
    WritePresent,
    FlowKernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nondegeneracy {
    /// Holds for every admissible parameter value.
    Verified,
    /// Holds for no admissible parameter value.
    Failed,
    /// Depends on the parameters; checked by enumeration at validation time.
    Pending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BroadcastCase {
    /// The array is never written.
    ReadOnly,
    /// Every producing flow dependence annihilates the kernel.
    FlowProduced,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BroadcastFinding {
    pub access: String,
    pub kernel_basis: Vec<IntVector>,
    pub eligible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_condition: Option<FailedCondition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nondegeneracy: Option<Nondegeneracy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<BroadcastCase>,
    /// Destination processors: the first `r` schedule rows over the
    /// iterations reading one element.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub destination_rows: Option<IntMatrix>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommReport {
    pub exchanges: Vec<ExchangeRequirement>,
    pub broadcasts: Vec<BroadcastFinding>,
}

impl CommReport {
    pub fn communication_free(&self) -> bool {
        self.exchanges.is_empty()
    }
}

/// Alignment residuals of access `acc` for `ξ ≤ r`, from the plan rows.
pub fn alignment_residuals(
    plan: &TransformPlan,
    nest: &LoopNest,
    acc: usize,
) -> Result<Vec<AlignmentResidual>, AlgebraError> {
    let a = &nest.accesses[acc];
    let s = &plan.statements[a.statement];
    let al = &plan.arrays[a.array];
    let e = nest.e();
    (0..plan.r_space)
        .map(|x| {
            let eta = al.h.row(x);
            let f = s.t.row_vector(x).sub(&a.f_matrix.vecmat(eta)?)?;
            let g = if e == 0 {
                IntVector::zeros(0)
            } else {
                s.b.row_vector(x)
                    .sub(&a.g_matrix.vecmat(eta)?)?
                    .sub(&al.z.row_vector(x))?
            };
            let c = s.a[x] - dot(eta, &a.offset)? - al.y[x];
            Ok(AlignmentResidual { xi: x + 1, f, g, c })
        })
        .collect()
}

/// Read accesses whose alignment does not hold at some spatial recursion.
pub fn exchange_requirements(
    plan: &TransformPlan,
    nest: &LoopNest,
) -> Result<Vec<ExchangeRequirement>, CommError> {
    let mut out = Vec::new();
    for (i, a) in nest.accesses.iter().enumerate() {
        if a.kind != AccessKind::Read {
            continue;
        }
        let per = alignment_residuals(plan, nest, i)?;
        let mut reason = Vec::new();
        if per.iter().any(|r| !r.f.is_zero()) {
            reason.push(SlackFamily::F);
        }
        if per.iter().any(|r| !r.g.is_zero()) {
            reason.push(SlackFamily::G);
        }
        if per.iter().any(|r| r.c != 0) {
            reason.push(SlackFamily::Const);
        }
        if reason.is_empty() {
            continue;
        }
        let bc = detect_broadcast(plan, nest, i)?;
        out.push(ExchangeRequirement {
            access: nest.access_label(i),
            array: nest.arrays[a.array].id.clone(),
            statement: nest.statements[a.statement].id.clone(),
            reason,
            per_recursion: per,
            owner: format!("allocation of {}", nest.arrays[a.array].id),
            consumer_rows: plan.statements[a.statement].t.top_rows(plan.r_space),
            classification: if bc.eligible {
                "broadcast".into()
            } else {
                "unclassified point-to-point".into()
            },
        });
    }
    Ok(out)
}

/// Whether some iteration `J₀` and `J₀ + u` both lie in the statement domain,
/// for every kernel vector `u`. `None` if the domain cannot be enumerated.
pub fn nondegenerate_at(
    nest: &LoopNest,
    acc: usize,
    kernel: &[IntVector],
    params: &[i64],
) -> Option<bool> {
    let a = &nest.accesses[acc];
    let dom = &nest.statements[a.statement].domain;
    let points = enumerate_domain(dom, params, DEFAULT_POINT_CAP).ok()?;
    let mut all = true;
    for u in kernel {
        let mut found = false;
        for p in &points {
            let q: Vec<i64> = p.iter().zip(u.iter()).map(|(x, y)| x + y).collect();
            if dom.contains(&q, params).ok()? {
                found = true;
                break;
            }
        }
        all &= found;
    }
    Some(all)
}

/// Non-degeneracy over all `N ≥ N₀` for box domains.
///
/// A box is a product of intervals, so `J₀, J₀ + u` both fit iff every
/// interval width is at least `|u_k|`. Widths are affine in `N`.
pub fn nondegeneracy(nest: &LoopNest, acc: usize, kernel: &[IntVector]) -> Nondegeneracy {
    let a = &nest.accesses[acc];
    let Domain::Box(bounds) = &nest.statements[a.statement].domain else {
        return Nondegeneracy::Pending;
    };
    let n0 = nest.params.minima.as_slice();
    let mut always = true;
    for u in kernel {
        for (k, (lo, hi)) in bounds.iter().enumerate() {
            let need = u[k].abs();
            let width: Vec<i64> = hi
                .coeffs
                .iter()
                .zip(lo.coeffs.iter())
                .map(|(h, l)| h - l)
                .collect();
            let (Ok(h0), Ok(l0)) = (hi.eval(n0), lo.eval(n0)) else {
                return Nondegeneracy::Pending;
            };
            let w0 = h0 - l0;
            let grows = width.iter().all(|&c| c >= 0);
            let shrinks = width.iter().all(|&c| c <= 0);
            if w0 < need && shrinks {
                return Nondegeneracy::Failed;
            }
            if !(w0 >= need && grows) {
                always = false;
            }
        }
    }
    if always {
        Nondegeneracy::Verified
    } else {
        Nondegeneracy::Pending
    }
}

/// Broadcast eligibility of a read access.
pub fn detect_broadcast(
    plan: &TransformPlan,
    nest: &LoopNest,
    acc: usize,
) -> Result<BroadcastFinding, CommError> {
    let a = &nest.accesses[acc];
    if a.kind == AccessKind::Write {
        return Err(CommError::WriteAccess(nest.access_label(acc)));
    }
    let kernel = integer_kernel_basis(&a.f_matrix);
    let mut finding = BroadcastFinding {
        access: nest.access_label(acc),
        kernel_basis: kernel.clone(),
        eligible: false,
        failed_condition: None,
        nondegeneracy: None,
        case: None,
        destination_rows: None,
    };
    if kernel.is_empty() {
        finding.failed_condition = Some(FailedCondition::Degenerate);
        return Ok(finding);
    }
    let nd = nondegeneracy(nest, acc, &kernel);
    finding.nondegeneracy = Some(nd);
    if nd == Nondegeneracy::Failed {
        finding.failed_condition = Some(FailedCondition::Degenerate);
        return Ok(finding);
    }

    let t = &plan.statements[a.statement].t;
    for x in plan.r_space..t.rows() {
        for u in &kernel {
            if dot(t.row(x), u)? != 0 {
                finding.failed_condition = Some(FailedCondition::TimeVariance);
                return Ok(finding);
            }
        }
    }

    let written = nest
        .accesses
        .iter()
        .any(|b| b.array == a.array && b.kind == AccessKind::Write);
    if written {
        let producers: Vec<_> = nest
            .dependences
            .iter()
            .filter(|d| {
                d.kind == DependenceKind::Flow
                    && d.target == a.statement
                    && d.produced_by == Some((a.array, a.slot))
            })
            .collect();
        if producers.is_empty() {
            finding.failed_condition = Some(FailedCondition::WritePresent);
            return Ok(finding);
        }
        for d in producers {
            for u in &kernel {
                if !d.phi_matrix.matvec(u)?.is_zero() {
                    finding.failed_condition = Some(FailedCondition::FlowKernel);
                    return Ok(finding);
                }
            }
        }
        finding.case = Some(BroadcastCase::FlowProduced);
    } else {
        finding.case = Some(BroadcastCase::ReadOnly);
    }
    finding.eligible = true;
    finding.destination_rows = Some(t.top_rows(plan.r_space));
    Ok(finding)
}

/// Exchanges plus a broadcast finding for every read access.
pub fn comm_report(plan: &TransformPlan, nest: &LoopNest) -> Result<CommReport, CommError> {
    let exchanges = exchange_requirements(plan, nest)?;
    let broadcasts = (0..nest.accesses.len())
        .filter(|&i| nest.accesses[i].kind == AccessKind::Read)
        .map(|i| detect_broadcast(plan, nest, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CommReport {
        exchanges,
        broadcasts,
    })
}
