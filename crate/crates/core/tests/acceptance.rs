//! Acceptance suite: one line per criterion, nonzero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use affsched::algebra::{integer_kernel_basis, rank, IntMatrix, IntVector};
use affsched::comm::{detect_broadcast, FailedCondition};
use affsched::constraints::{build_legality_columns, ColumnTag, ExtendedLayout, Family, Sense};
use affsched::fixtures;
use affsched::nest::{enumerate_domain, Access, AccessKind, Dependence, DependenceKind, LoopNest};
use affsched::procedure::{run_procedure, run_traced, ProcedureConfig, TransformPlan};
use affsched::solver::{solve, SolverConfig};
use affsched::validator::{
    brute_force_best_alignment, brute_force_system, default_params, validate, ORACLE_MAX_LEN,
};
use common::{gcd, minors, rank_by_minors};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn default_r(nest: &LoopNest) -> usize {
    usize::from(nest.n() > 1)
}

fn plan_for(nest: &LoopNest, r: usize) -> TransformPlan {
    run_procedure(
        nest,
        &ProcedureConfig {
            r_space: r,
            ..Default::default()
        },
    )
    .expect("procedure succeeds")
}

const LEGALITY_SET: [&str; 6] = [
    "vector_add",
    "elementwise_add_2d",
    "chain",
    "jacobi",
    "matvec",
    "matmul",
];

fn legality() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for name in LEGALITY_SET {
        let nest = fixtures::by_name(name).unwrap();
        let plan = plan_for(&nest, default_r(&nest));
        for params in default_params(&nest) {
            let rep = validate(&nest, &plan, &params).map_err(|e| format!("{name}: {e}"))?;
            ensure!(
                rep.legality.is_empty(),
                "{name} at {params:?}: {} violations",
                rep.legality.len()
            );
            checked += 1;
        }
    }
    let t = start.elapsed();
    ensure!(t < Duration::from_secs(10), "took {t:?}");
    Ok(format!("{checked} fixture/parameter settings, {t:.2?}"))
}

fn rank_suite() -> Outcome {
    let mut n = 0;
    for name in LEGALITY_SET {
        let nest = fixtures::by_name(name).unwrap();
        let plan = plan_for(&nest, default_r(&nest));
        for (s, st) in plan.statements.iter().zip(&nest.statements) {
            let rk = rank_by_minors(&s.t);
            ensure!(
                rk == st.depth,
                "{name}/{}: rank {rk} != depth {}",
                st.id,
                st.depth
            );
            n += 1;
        }
    }
    Ok(format!("{n} statement schedules full rank"))
}

fn communication_free() -> Outcome {
    let nest = fixtures::elementwise_add_2d();
    let cfg = ProcedureConfig {
        r_space: 1,
        ..Default::default()
    };
    let (plan, trace) = run_traced(&nest, &cfg).map_err(|e| e.to_string())?;
    let mut align_cols = 0;
    for tr in &trace {
        for (c, &z) in tr.system.columns.iter().zip(&tr.solution.slacks) {
            if matches!(
                c.family,
                Family::AlignF | Family::AlignG | Family::AlignConst
            ) {
                align_cols += 1;
                ensure!(z == 0, "recursion {}: alignment slack {z}", tr.xi);
            }
        }
    }
    ensure!(align_cols > 0, "no alignment columns assembled");
    let rep = validate(&nest, &plan, &[5]).map_err(|e| e.to_string())?;
    ensure!(rep.comm_count == 0, "commCount = {}", rep.comm_count);
    Ok(format!(
        "{align_cols} alignment slacks all 0, commCount 0 at N=5"
    ))
}

fn solver_optimality() -> Outcome {
    let start = Instant::now();
    let mut systems = 0;
    for name in [
        "vector_add",
        "chain",
        "jacobi",
        "matvec",
        "elementwise_add_2d",
        "matmul",
    ] {
        let nest = fixtures::by_name(name).unwrap();
        if ExtendedLayout::new(&nest).len() > ORACLE_MAX_LEN {
            continue;
        }
        let r = default_r(&nest);
        let cfg = ProcedureConfig {
            r_space: r,
            ..Default::default()
        };
        let (_, trace) = run_traced(&nest, &cfg).map_err(|e| format!("{name}: {e}"))?;
        let b1 = SolverConfig {
            coeff_bound: 1,
            ..Default::default()
        };
        for tr in &trace {
            let solved = solve(&tr.system, &b1).ok().map(|s| s.objective);
            let best = brute_force_system(&tr.system, 1, ORACLE_MAX_LEN)
                .map_err(|e| e.to_string())?
                .map(|(o, _)| o);
            ensure!(
                best == solved,
                "{name} recursion {}: oracle {best:?} vs solver {solved:?}",
                tr.xi
            );
            if tr.xi == 1 {
                let first = brute_force_best_alignment(&nest, r, 1).map_err(|e| e.to_string())?;
                ensure!(
                    first == solved,
                    "{name}: first-recursion oracle {first:?} vs solver {solved:?}"
                );
            }
            systems += 1;
        }
    }
    let t = start.elapsed();
    ensure!(t < Duration::from_secs(60), "took {t:?}");
    Ok(format!(
        "{systems} recursion systems match the exhaustive optimum, {t:.2?}"
    ))
}

fn drop_rule() -> Outcome {
    let nest = fixtures::matmul();
    let cfg = ProcedureConfig {
        r_space: 1,
        ..Default::default()
    };
    let (plan, trace) = run_traced(&nest, &cfg).map_err(|e| e.to_string())?;
    let dep = (0..nest.dependences.len())
        .find(|&d| nest.dependences[d].kind == DependenceKind::Flow)
        .unwrap();
    let label = nest.dependence_label(dep);
    let phi_all_positive = |xi: usize| -> Option<bool> {
        let tr = &trace[xi - 1];
        let vals: Vec<i64> = tr
            .system
            .columns
            .iter()
            .zip(&tr.solution.slacks)
            .filter(|(c, _)| matches!(c.tag, ColumnTag::Dependence { dep: d, param: None, .. } if d == dep))
            .map(|(_, &z)| z)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().all(|&z| z >= 1))
    };
    let first = (cfg.r_space + 1..=nest.n()).find(|&xi| phi_all_positive(xi) == Some(true));
    ensure!(
        first == Some(2),
        "first strictly satisfying recursion {first:?}"
    );
    for d in &plan.diagnostics.recursions {
        let active = d.active_dependences.contains(&label);
        let dropped_here = d.dropped.contains(&label);
        ensure!(
            active == (d.xi <= 2),
            "recursion {}: active = {active}",
            d.xi
        );
        ensure!(
            dropped_here == (d.xi == 2),
            "recursion {}: dropped = {dropped_here}",
            d.xi
        );
    }
    Ok(format!(
        "{label} retired at recursion 2 and absent afterwards"
    ))
}

fn row_locality() -> Outcome {
    let nest = fixtures::matmul();
    let cfg = ProcedureConfig {
        r_space: 1,
        ..Default::default()
    };
    let (plan, trace) = run_traced(&nest, &cfg).map_err(|e| e.to_string())?;
    let rep = validate(&nest, &plan, &[4]).map_err(|e| e.to_string())?;
    let mut n = 0;
    for rec in &plan.diagnostics.locality {
        let Some(depth) = rec.depth else { continue };
        let acc = (0..nest.accesses.len())
            .find(|&a| nest.access_label(a) == rec.access)
            .unwrap();
        let tr = &trace[depth - 1];
        let zeroed = tr
            .system
            .columns
            .iter()
            .zip(&tr.solution.slacks)
            .filter(|(c, _)| {
                c.family == Family::SpaceLoc
                    && matches!(c.tag, ColumnTag::Access { access, .. } if access == acc)
            })
            .all(|(_, &z)| z == 0);
        ensure!(
            zeroed,
            "{}: space columns not zero at depth {depth}",
            rec.access
        );
        let check = rep
            .row_locality
            .iter()
            .find(|r| r.access == rec.access)
            .ok_or("missing row-locality check")?;
        ensure!(check.metric == 1, "{}: metric {}", rec.access, check.metric);
        n += 1;
    }
    ensure!(n >= 3, "only {n} accesses reached row locality");
    Ok(format!(
        "{n} accesses touch one row at fixed outer indices, N=4"
    ))
}

fn b_access(nest: &LoopNest) -> usize {
    (0..nest.accesses.len())
        .find(|&a| nest.arrays[nest.accesses[a].array].id == "B")
        .unwrap()
}

fn broadcast() -> Outcome {
    let nest = fixtures::matmul();
    let plan = plan_for(&nest, 1);
    let acc = b_access(&nest);
    let f = detect_broadcast(&plan, &nest, acc).map_err(|e| e.to_string())?;
    ensure!(
        f.eligible,
        "B access not eligible: {:?}",
        f.failed_condition
    );
    ensure!(
        f.kernel_basis == integer_kernel_basis(&nest.accesses[acc].f_matrix),
        "kernel basis differs"
    );
    let t = &plan.statements[0].t;
    for x in plan.r_space..t.rows() {
        for u in &f.kernel_basis {
            ensure!(
                u.dot(t.row(x)).unwrap() == 0,
                "time row {} moves along {u}",
                x + 1
            );
        }
    }
    let rep = validate(&nest, &plan, &[3]).map_err(|e| e.to_string())?;
    let check = rep
        .broadcast_checks
        .iter()
        .find(|b| b.access == f.access)
        .ok_or("no broadcast check")?;
    ensure!(check.pass, "validator: {:?}", check.problems);

    // Direct: every element of B is read at one time vector.
    let pts = enumerate_domain(&nest.statements[0].domain, &[3], 1000).unwrap();
    let mut times =
        std::collections::BTreeMap::<Vec<i64>, std::collections::BTreeSet<Vec<i64>>>::new();
    for j in &pts {
        let el = nest.accesses[acc].index_at(j, &[3]).unwrap().into_inner();
        let tv: Vec<i64> = (plan.r_space..t.rows())
            .map(|x| t.row_vector(x).dot(j).unwrap() + plan.statements[0].a[x])
            .collect();
        times.entry(el).or_default().insert(tv);
    }
    ensure!(
        times.values().all(|s| s.len() == 1),
        "some element read at several times"
    );

    let mut negatives = Vec::new();

    let mut skewed = plan.clone();
    skewed.statements[0].t[(plan.r_space, 0)] += 1;
    negatives.push((
        "time-variance",
        FailedCondition::TimeVariance,
        nest.clone(),
        skewed,
    ));

    let mut written = nest.clone();
    let mut w: Access = written.accesses[acc].clone();
    w.kind = AccessKind::Write;
    w.slot = 99;
    written.accesses.push(w);
    negatives.push((
        "write-present",
        FailedCondition::WritePresent,
        written.clone(),
        plan.clone(),
    ));

    let mut flowed = written;
    let dim = nest.statements[0].depth;
    let mut dep: Dependence = flowed.dependences[0].clone();
    dep.kind = DependenceKind::Flow;
    dep.phi_matrix = IntMatrix::identity(dim);
    dep.phi_offset = IntVector::new(vec![1, 0, 0]);
    dep.produced_by = Some((nest.accesses[acc].array, nest.accesses[acc].slot));
    flowed.dependences.push(dep);
    negatives.push((
        "flow-kernel",
        FailedCondition::FlowKernel,
        flowed,
        plan.clone(),
    ));

    let mut thin = nest.clone();
    if let affsched::nest::Domain::Box(b) = &mut thin.statements[0].domain {
        b[0].1.coeffs = IntVector::new(vec![0]);
        b[0].1.constant = b[0].0.constant;
    }
    negatives.push((
        "degenerate",
        FailedCondition::Degenerate,
        thin,
        plan.clone(),
    ));

    for (name, want, n, p) in &negatives {
        let f = detect_broadcast(p, n, acc).map_err(|e| e.to_string())?;
        ensure!(
            !f.eligible && f.failed_condition == Some(*want),
            "{name}: got {:?}",
            f.failed_condition
        );
    }
    Ok(format!(
        "B eligible and confirmed at N=3; {} negative variants flip",
        negatives.len()
    ))
}

fn soundness() -> Outcome {
    let nest = fixtures::jacobi();
    let layout = ExtendedLayout::new(&nest);
    let ordering: Vec<usize> = (0..nest.dependences.len())
        .filter(|&d| nest.dependences[d].kind != DependenceKind::In)
        .collect();
    let cols: Vec<_> = ordering
        .iter()
        .flat_map(|&d| build_legality_columns(&nest, d, &layout, Sense::Geq0).unwrap())
        .collect();
    let settings = default_params(&nest);
    let pairs: Vec<Vec<(usize, Vec<i64>, Vec<i64>, Vec<i64>)>> = settings
        .iter()
        .map(|p| {
            ordering
                .iter()
                .flat_map(|&d| {
                    let dep = &nest.dependences[d];
                    enumerate_domain(&dep.domain, p, 100_000)
                        .unwrap()
                        .into_iter()
                        .map(|j| {
                            (
                                d,
                                dep.source_of(&j, p).unwrap().into_inner(),
                                j.into_inner(),
                                p.clone(),
                            )
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    let eval = |x: &[i64], beta: usize, j: &[i64], p: &[i64]| -> i64 {
        let tau = &x[layout.tau(beta)];
        let b = &x[layout.b(beta)];
        tau.iter().zip(j).map(|(a, b)| a * b).sum::<i64>()
            + b.iter().zip(p).map(|(a, b)| a * b).sum::<i64>()
            + x[layout.a(beta)]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut found, mut tries, mut pointwise) = (0, 0u64, 0u64);
    while found < 100 {
        tries += 1;
        ensure!(
            tries < 5_000_000,
            "only {found} feasible samples in {tries} draws"
        );
        let mut x = vec![0i64; layout.len()];
        let shared: Vec<i64> = (0..2).map(|_| rng.gen_range(-2..=2)).collect();
        for s in 0..nest.statements.len() {
            for (k, i) in layout.tau(s).enumerate() {
                x[i] = if rng.gen_bool(0.5) {
                    shared[k]
                } else {
                    rng.gen_range(-2..=2)
                };
            }
            for i in layout.b(s) {
                x[i] = rng.gen_range(-1..=1);
            }
            x[layout.a(s)] = rng.gen_range(-2..=2);
        }
        if !cols.iter().all(|c| c.eval(&x).unwrap() >= 0) {
            continue;
        }
        found += 1;
        for set in &pairs {
            for (d, i, j, p) in set {
                let dep = &nest.dependences[*d];
                let diff = eval(&x, dep.target, j, p) - eval(&x, dep.source, i, p);
                ensure!(
                    diff >= 0,
                    "counterexample: x = {x:?}, dep {d}, I = {i:?}, J = {j:?}, N = {p:?}"
                );
                pointwise += 1;
            }
        }
    }
    Ok(format!(
        "100 feasible samples ({tries} draws), {pointwise} pointwise checks, no counterexample"
    ))
}

fn algebra_sweep() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..10_000 {
        let rows: Vec<Vec<i64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.gen_range(-1..=1)).collect())
            .collect();
        let m = IntMatrix::from_rows(&rows, 3).unwrap();
        let rk = rank_by_minors(&m);
        ensure!(
            rank(&m) == rk,
            "case {case}: rank {} vs minors {rk} for {rows:?}",
            rank(&m)
        );
        let basis = integer_kernel_basis(&m);
        ensure!(
            basis.len() == 3 - rk,
            "case {case}: kernel size {}",
            basis.len()
        );
        for u in &basis {
            ensure!(
                m.matvec(u).unwrap().is_zero(),
                "case {case}: {u} not in kernel"
            );
        }
        if !basis.is_empty() {
            let b = IntMatrix::from_row_vectors(&basis, 3).unwrap();
            let g = minors(&b, basis.len()).into_iter().fold(0, gcd);
            ensure!(g == 1, "case {case}: kernel lattice index {g} for {rows:?}");
        }
    }
    Ok("10000 random 3x3 matrices over {-1,0,1}".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        (
            "legality of every fixture plan at two parameter settings",
            legality,
        ),
        ("schedule rank equals statement depth", rank_suite),
        ("communication-free elementwise add", communication_free),
        ("solver matches exhaustive optimum", solver_optimality),
        ("drop rule for the matmul flow dependence", drop_rule),
        ("row locality of matmul accesses", row_locality),
        ("broadcast of B in matmul", broadcast),
        ("vertex legality implies pointwise order", soundness),
        ("kernel and rank algebra sweep", algebra_sweep),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match out {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all {} acceptance criteria passed", criteria.len());
}
