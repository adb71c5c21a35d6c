//! Exact bounded-integer optimizer for one recursion.
//!
//! Every entry of the extended vector ranges over `[-B, B]`. The objective
//! is `Σ w·z` where `z = c·x` for `Geq0` columns (which also impose
//! `c·x ≥ 0`) and `z = |c·x|` for `AbsSlack` columns. Each rank-witness group
//! contributes a disjunction `x·s̃ ≥ 1 ∨ x·s̃ ≤ −1` over its candidates; the
//! solver branches over `(candidate, sign)` per group and runs a depth-first
//! branch-and-bound inside each branch.
//!
//! Ties are resolved deterministically: earlier branches win (candidates in
//! basis order, `+1` before `−1`), then the assignment that comes first when
//! every coordinate is ordered `0, 1, −1, 2, −2, …`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicI64, Ordering as AtomicOrdering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, IntVector, Rational};
use crate::constraints::{ConstraintSystem, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    BranchAndBound,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub coeff_bound: i64,
    pub time_limit: Option<Duration>,
    pub strategy: Strategy,
    /// Worker threads for branch exploration; `None` uses the rayon default.
    pub threads: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            coeff_bound: 2,
            time_limit: None,
            strategy: Strategy::BranchAndBound,
            threads: None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("no feasible assignment with coefficients in [-{0}, {0}]; try a larger bound")]
    InfeasibleAtBound(i64),
    #[error("solver time limit of {0:?} exceeded")]
    Timeout(Duration),
    #[error("statement #{0} has no rank-witness candidates")]
    EmptyWitness(usize),
    #[error("coefficient bound must be at least 1, got {0}")]
    BadBound(i64),
    #[error("weight overflow while scaling the objective")]
    WeightOverflow,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WitnessChoice {
    pub statement: usize,
    pub candidate: usize,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub tau: IntVector,
    pub objective: Rational,
    /// Slack per system column, in column order.
    pub slacks: Vec<i64>,
    pub witness_used: Vec<WitnessChoice>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Geq,
    Abs,
    Eq,
    /// Hard `c·x ≥ 1`, used for the active witness branch.
    AtLeastOne,
}

struct Compiled {
    m: usize,
    kinds: Vec<Kind>,
    weights: Vec<i64>,
    /// Per variable, the columns it appears in.
    by_var: Vec<Vec<(usize, i64)>>,
    /// `suffix[col][d] = Σ_{k ≥ d} |c_k|`.
    suffix: Vec<Vec<i64>>,
}

fn lcm(a: i64, b: i64) -> Option<i64> {
    let g = crate::algebra::gcd(a as i128, b as i128) as i64;
    (a / g).checked_mul(b)
}

/// Integer weights (common-denominator scaled) and the denominator.
fn scaled_weights(system: &ConstraintSystem) -> Result<(Vec<i64>, i64), SolveError> {
    let mut den = 1i64;
    for c in &system.columns {
        den = lcm(den, c.weight.denom()).ok_or(SolveError::WeightOverflow)?;
    }
    let w = system
        .columns
        .iter()
        .map(|c| {
            c.weight
                .numer()
                .checked_mul(den / c.weight.denom())
                .ok_or(SolveError::WeightOverflow)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((w, den))
}

fn compile(system: &ConstraintSystem, weights: &[i64], extra: &[IntVector]) -> Compiled {
    let m = system.layout.len();
    let mut merged: Vec<(Vec<i64>, Kind, i64)> = Vec::new();
    let mut index: HashMap<(Vec<i64>, u8), usize> = HashMap::new();
    for (c, &w) in system.columns.iter().zip(weights) {
        if c.coeffs.is_zero() {
            continue;
        }
        let kind = match c.sense {
            Sense::Geq0 => Kind::Geq,
            Sense::AbsSlack => Kind::Abs,
            Sense::Eq0 => Kind::Eq,
        };
        let key = (c.coeffs.to_vec(), kind as u8);
        match index.get(&key) {
            Some(&i) => merged[i].2 += w,
            None => {
                index.insert(key, merged.len());
                merged.push((c.coeffs.to_vec(), kind, w));
            }
        }
    }
    for s in extra {
        merged.push((s.to_vec(), Kind::AtLeastOne, 0));
    }
    let mut by_var = vec![Vec::new(); m];
    let mut suffix = Vec::with_capacity(merged.len());
    for (j, (coeffs, _, _)) in merged.iter().enumerate() {
        let mut s = vec![0i64; m + 1];
        for d in (0..m).rev() {
            s[d] = s[d + 1] + coeffs[d].abs();
            if coeffs[d] != 0 {
                by_var[d].push((j, coeffs[d]));
            }
        }
        suffix.push(s);
    }
    Compiled {
        m,
        kinds: merged.iter().map(|c| c.1).collect(),
        weights: merged.iter().map(|c| c.2).collect(),
        by_var,
        suffix,
    }
}

/// Coordinate value order `0, 1, −1, 2, −2, …`.
fn value_order(bound: i64) -> Vec<i64> {
    let mut v = vec![0];
    for k in 1..=bound {
        v.push(k);
        v.push(-k);
    }
    v
}

struct Search<'a> {
    prob: &'a Compiled,
    bound: i64,
    prune: bool,
    values: Vec<i64>,
    partial: Vec<i64>,
    /// Lower-bound contribution and infeasibility flag per column.
    contrib: Vec<i64>,
    bad: Vec<bool>,
    lb: i64,
    n_bad: usize,
    x: Vec<i64>,
    best: Option<(i64, Vec<i64>)>,
    shared: &'a AtomicI64,
    stop: &'a AtomicBool,
    deadline: Option<Instant>,
    nodes: u64,
}

impl<'a> Search<'a> {
    fn new(
        prob: &'a Compiled,
        cfg: &SolverConfig,
        shared: &'a AtomicI64,
        stop: &'a AtomicBool,
        deadline: Option<Instant>,
    ) -> Self {
        let cols = prob.kinds.len();
        let mut s = Search {
            prob,
            bound: cfg.coeff_bound,
            prune: cfg.strategy == Strategy::BranchAndBound,
            values: value_order(cfg.coeff_bound),
            partial: vec![0; cols],
            contrib: vec![0; cols],
            bad: vec![false; cols],
            lb: 0,
            n_bad: 0,
            x: vec![0; prob.m],
            best: None,
            shared,
            stop,
            deadline,
            nodes: 0,
        };
        for j in 0..cols {
            let (c, b) = s.evaluate(j, 0);
            s.contrib[j] = c;
            s.bad[j] = b;
            s.lb += c;
            s.n_bad += b as usize;
        }
        s
    }

    /// Bound contribution of column `j` once variables `< depth` are fixed.
    fn evaluate(&self, j: usize, depth: usize) -> (i64, bool) {
        let p = self.partial[j];
        let r = self.bound * self.prob.suffix[j][depth];
        let w = self.prob.weights[j];
        match self.prob.kinds[j] {
            Kind::Geq => (w * (p - r).max(0), p + r < 0),
            Kind::Abs => (w * (p.abs() - r).max(0), false),
            Kind::Eq => (0, p.abs() > r),
            Kind::AtLeastOne => (0, p + r < 1),
        }
    }

    fn set(&mut self, d: usize, v: i64) {
        let delta = v - self.x[d];
        self.x[d] = v;
        let prob = self.prob;
        for &(j, c) in &prob.by_var[d] {
            self.partial[j] += c * delta;
            let (nc, nb) = self.evaluate(j, d + 1);
            self.lb += nc - self.contrib[j];
            self.n_bad = self.n_bad + nb as usize - self.bad[j] as usize;
            self.contrib[j] = nc;
            self.bad[j] = nb;
        }
    }

    fn unset(&mut self, d: usize) {
        let delta = -self.x[d];
        self.x[d] = 0;
        let prob = self.prob;
        for &(j, c) in &prob.by_var[d] {
            self.partial[j] += c * delta;
            let (nc, nb) = self.evaluate(j, d);
            self.lb += nc - self.contrib[j];
            self.n_bad = self.n_bad + nb as usize - self.bad[j] as usize;
            self.contrib[j] = nc;
            self.bad[j] = nb;
        }
    }

    fn worth_descending(&self) -> bool {
        if !self.prune {
            return true;
        }
        if self.n_bad > 0 {
            return false;
        }
        if let Some((b, _)) = &self.best {
            if self.lb >= *b {
                return false;
            }
        }
        self.lb <= self.shared.load(AtomicOrdering::Relaxed)
    }

    fn run(&mut self, d: usize) {
        if self.stop.load(AtomicOrdering::Relaxed) {
            return;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(4096) {
            if let Some(dl) = self.deadline {
                if Instant::now() > dl {
                    self.stop.store(true, AtomicOrdering::Relaxed);
                    return;
                }
            }
        }
        if d == self.prob.m {
            if self.n_bad == 0 && self.best.as_ref().is_none_or(|(b, _)| self.lb < *b) {
                self.best = Some((self.lb, self.x.clone()));
                self.shared.fetch_min(self.lb, AtomicOrdering::Relaxed);
            }
            return;
        }
        for k in 0..self.values.len() {
            let v = self.values[k];
            self.set(d, v);
            if self.worth_descending() {
                self.run(d + 1);
            }
            self.unset(d);
        }
    }
}

type Branch = Vec<WitnessChoice>;

fn branches(system: &ConstraintSystem) -> Result<Vec<Branch>, SolveError> {
    let mut out: Vec<Branch> = vec![Vec::new()];
    for g in &system.witnesses {
        if g.candidates.is_empty() {
            return Err(SolveError::EmptyWitness(g.statement));
        }
        let mut next = Vec::with_capacity(out.len() * g.candidates.len() * 2);
        for prefix in &out {
            for c in 0..g.candidates.len() {
                for sign in [1i8, -1] {
                    let mut b = prefix.clone();
                    b.push(WitnessChoice {
                        statement: g.statement,
                        candidate: c,
                        sign,
                    });
                    next.push(b);
                }
            }
        }
        out = next;
    }
    Ok(out)
}

/// Minimizes the weighted slack objective over the bounded integer box.
pub fn solve(system: &ConstraintSystem, cfg: &SolverConfig) -> Result<Solution, SolveError> {
    if cfg.coeff_bound < 1 {
        return Err(SolveError::BadBound(cfg.coeff_bound));
    }
    let (weights, den) = scaled_weights(system)?;
    let branch_list = branches(system)?;
    let shared = AtomicI64::new(i64::MAX);
    let stop = AtomicBool::new(false);
    let deadline = cfg.time_limit.map(|t| Instant::now() + t);

    let explore = |branch: &Branch| -> Option<(i64, Vec<i64>)> {
        let extra: Vec<IntVector> = branch
            .iter()
            .zip(&system.witnesses)
            .map(|(ch, g)| {
                g.candidates[ch.candidate]
                    .s_tilde
                    .scale(ch.sign as i64)
                    .expect("small witness")
            })
            .collect();
        let prob = compile(system, &weights, &extra);
        let mut search = Search::new(&prob, cfg, &shared, &stop, deadline);
        search.run(0);
        search.best
    };

    let results: Vec<Option<(i64, Vec<i64>)>> = match cfg.threads {
        Some(1) => branch_list.iter().map(explore).collect(),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .expect("thread pool");
            pool.install(|| branch_list.par_iter().map(explore).collect())
        }
        None => branch_list.par_iter().map(explore).collect(),
    };
    if stop.load(AtomicOrdering::Relaxed) {
        return Err(SolveError::Timeout(cfg.time_limit.unwrap_or_default()));
    }

    let mut winner: Option<(usize, i64, Vec<i64>)> = None;
    for (i, r) in results.into_iter().enumerate() {
        if let Some((obj, x)) = r {
            if winner.as_ref().is_none_or(|(_, b, _)| obj < *b) {
                winner = Some((i, obj, x));
            }
        }
    }
    let Some((bi, obj, x)) = winner else {
        return Err(SolveError::InfeasibleAtBound(cfg.coeff_bound));
    };
    let slacks = system
        .columns
        .iter()
        .map(|c| {
            let v = c.coeffs.dot(&x)?;
            Ok(if c.sense == Sense::Geq0 { v } else { v.abs() })
        })
        .collect::<Result<Vec<_>, AlgebraError>>()?;
    Ok(Solution {
        tau: IntVector::new(x),
        objective: Rational::new(obj, den)?,
        slacks,
        witness_used: branch_list[bi].clone(),
    })
}

/// Weighted objective of an assignment, recomputed from the columns.
pub fn objective_of(system: &ConstraintSystem, x: &[i64]) -> Result<Rational, AlgebraError> {
    let mut total = Rational::ZERO;
    for c in &system.columns {
        let v = c.coeffs.dot(x)?;
        let z = match c.sense {
            Sense::Geq0 => v,
            Sense::AbsSlack | Sense::Eq0 => v.abs(),
        };
        total = total.checked_add(c.weight.scale(z)?)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub violations: Vec<String>,
    pub objective: Option<Rational>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-checks a solution against the system column by column.
pub fn verify(solution: &Solution, system: &ConstraintSystem) -> VerifyReport {
    let mut violations = Vec::new();
    let x = solution.tau.as_slice();
    if x.len() != system.layout.len() {
        violations.push(format!(
            "extended vector has length {}, expected {}",
            x.len(),
            system.layout.len()
        ));
        return VerifyReport {
            violations,
            objective: None,
        };
    }
    if solution.slacks.len() != system.columns.len() {
        violations.push("slack list does not match the column list".into());
    }
    for (i, c) in system.columns.iter().enumerate() {
        let v = match c.coeffs.dot(x) {
            Ok(v) => v,
            Err(e) => {
                violations.push(format!("column {i}: {e}"));
                continue;
            }
        };
        match c.sense {
            Sense::Geq0 if v < 0 => {
                violations.push(format!("column {i} ({:?}) evaluates to {v} < 0", c.family))
            }
            Sense::Eq0 if v != 0 => {
                violations.push(format!("column {i} ({:?}) evaluates to {v} != 0", c.family))
            }
            _ => {}
        }
        let z = if c.sense == Sense::Geq0 { v } else { v.abs() };
        if let Some(&s) = solution.slacks.get(i) {
            if s != z {
                violations.push(format!("column {i}: recorded slack {s}, actual {z}"));
            }
        }
    }
    for g in &system.witnesses {
        match solution
            .witness_used
            .iter()
            .find(|w| w.statement == g.statement)
        {
            None => violations.push(format!("no witness chosen for statement #{}", g.statement)),
            Some(w) => match g.candidates.get(w.candidate) {
                None => violations.push(format!(
                    "statement #{}: witness index out of range",
                    g.statement
                )),
                Some(cand) => {
                    let v = cand.s_tilde.dot(x).unwrap_or(0) * w.sign as i64;
                    if v < 1 {
                        violations.push(format!(
                            "statement #{}: witness inequality fails ({} · s̃ = {})",
                            g.statement,
                            w.sign,
                            v * w.sign as i64
                        ));
                    }
                }
            },
        }
    }
    let objective = objective_of(system, x).ok();
    match objective {
        Some(o) if o != solution.objective => violations.push(format!(
            "objective mismatch: recorded {}, actual {o}",
            solution.objective
        )),
        None => violations.push("objective overflow".into()),
        _ => {}
    }
    VerifyReport {
        violations,
        objective,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::IntMatrix;
    use crate::constraints::{
        build_alignment_columns, build_legality_columns, rank_witnesses, ExtendedLayout,
    };
    use crate::fixtures;

    fn chain_system() -> ConstraintSystem {
        let nest = fixtures::chain();
        let layout = ExtendedLayout::new(&nest);
        let columns = build_legality_columns(&nest, 0, &layout, Sense::Geq0).unwrap();
        let witnesses = rank_witnesses(&nest, &[IntMatrix::zeros(0, 1)], &[0], &layout).unwrap();
        ConstraintSystem {
            layout,
            columns,
            witnesses,
        }
    }

    fn exhaustive(cfg: &SolverConfig) -> SolverConfig {
        SolverConfig {
            strategy: Strategy::Exhaustive,
            ..cfg.clone()
        }
    }

    #[test]
    fn chain_picks_forward_schedule() {
        let sys = chain_system();
        let cfg = SolverConfig {
            coeff_bound: 1,
            ..Default::default()
        };
        let sol = solve(&sys, &cfg).unwrap();
        assert_eq!(sol.tau[sys.layout.tau(0).start], 1);
        // Two dependence vertices, each separated by exactly 1.
        assert_eq!(sol.objective, Rational::integer(2));
        assert!(verify(&sol, &sys).ok());
        assert_eq!(solve(&sys, &exhaustive(&cfg)).unwrap(), sol);
    }

    #[test]
    fn pure_disjunction_prefers_positive() {
        let nest = fixtures::chain();
        let layout = ExtendedLayout::new(&nest);
        let witnesses = rank_witnesses(&nest, &[IntMatrix::zeros(0, 1)], &[0], &layout).unwrap();
        let sys = ConstraintSystem {
            layout,
            columns: vec![],
            witnesses,
        };
        let sol = solve(
            &sys,
            &SolverConfig {
                coeff_bound: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(sol.tau[0], 1);
        assert_eq!(sol.objective, Rational::ZERO);
        assert_eq!(sol.witness_used[0].sign, 1);
    }

    #[test]
    fn vector_add_is_communication_free() {
        let nest = fixtures::vector_add();
        let layout = ExtendedLayout::new(&nest);
        let mut columns = Vec::new();
        for a in 0..nest.accesses.len() {
            columns.extend(build_alignment_columns(&nest, a, &layout).unwrap());
        }
        let witnesses = rank_witnesses(&nest, &[IntMatrix::zeros(0, 1)], &[0], &layout).unwrap();
        let sys = ConstraintSystem {
            layout: layout.clone(),
            columns,
            witnesses,
        };
        let cfg = SolverConfig {
            coeff_bound: 1,
            ..Default::default()
        };
        let sol = solve(&sys, &cfg).unwrap();
        assert_eq!(sol.objective, Rational::ZERO);
        assert_eq!(sol.tau[layout.tau(0).start], 1);
        for l in 0..3 {
            assert_eq!(sol.tau[layout.eta(l).start], 1);
            assert_eq!(sol.tau[layout.y(l)], 0);
        }
        assert_eq!(solve(&sys, &exhaustive(&cfg)).unwrap(), sol);
    }

    #[test]
    fn verify_flags_corruption() {
        let sys = chain_system();
        let sol = solve(
            &sys,
            &SolverConfig {
                coeff_bound: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let mut bad = sol.clone();
        bad.tau[sys.layout.tau(0).start] = -1;
        let r = verify(&bad, &sys);
        assert!(
            r.violations.iter().any(|v| v.contains("< 0")),
            "{:?}",
            r.violations
        );

        let mut low = sol.clone();
        low.objective = Rational::ZERO;
        assert!(verify(&low, &sys)
            .violations
            .iter()
            .any(|v| v.contains("objective mismatch")));
    }

    #[test]
    fn infeasible_and_bad_bound() {
        let mut sys = chain_system();
        // Force τ ≤ -1 and τ ≥ 0 simultaneously.
        sys.witnesses[0].candidates[0].s_tilde =
            sys.witnesses[0].candidates[0].s_tilde.scale(1).unwrap();
        let mut neg = sys.columns[0].clone();
        neg.coeffs = neg.coeffs.scale(-1).unwrap();
        sys.columns.push(neg);
        assert_eq!(
            solve(
                &sys,
                &SolverConfig {
                    coeff_bound: 1,
                    ..Default::default()
                }
            ),
            Err(SolveError::InfeasibleAtBound(1))
        );
        assert_eq!(
            solve(
                &sys,
                &SolverConfig {
                    coeff_bound: 0,
                    ..Default::default()
                }
            ),
            Err(SolveError::BadBound(0))
        );
        sys.witnesses[0].candidates.clear();
        assert_eq!(
            solve(&sys, &SolverConfig::default()),
            Err(SolveError::EmptyWitness(0))
        );
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let nest = fixtures::matvec();
        let layout = ExtendedLayout::new(&nest);
        let mut columns = Vec::new();
        for a in 0..nest.accesses.len() {
            columns.extend(build_alignment_columns(&nest, a, &layout).unwrap());
        }
        columns.extend(build_legality_columns(&nest, 0, &layout, Sense::Geq0).unwrap());
        let witnesses = rank_witnesses(&nest, &[IntMatrix::zeros(0, 2)], &[0], &layout).unwrap();
        let sys = ConstraintSystem {
            layout,
            columns,
            witnesses,
        };
        let one = solve(
            &sys,
            &SolverConfig {
                threads: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        let many = solve(
            &sys,
            &SolverConfig {
                threads: Some(4),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(one, many);
    }
}
