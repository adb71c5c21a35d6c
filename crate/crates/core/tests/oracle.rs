use affsched::fixtures;
use affsched::procedure::{first_system, run_traced, ProcedureConfig};
use affsched::solver::{solve, SolverConfig, Strategy};
use affsched::validator::brute_force_system;

#[test]
fn matmul_first_recursion_matches_exhaustive() {
    let nest = fixtures::matmul();
    let system = first_system(&nest, &ProcedureConfig::default()).unwrap();
    assert_eq!(system.layout.len(), 17);
    let (best, _) = brute_force_system(&system, 1, 17).unwrap().unwrap();
    let got = solve(
        &system,
        &SolverConfig {
            coeff_bound: 1,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(got.objective, best);
    assert_eq!(best.to_string(), "98");
}

#[test]
fn exhaustive_strategy_agrees_with_branch_and_bound() {
    for name in ["chain", "matvec", "jacobi", "elementwise_add_2d"] {
        let nest = fixtures::by_name(name).unwrap();
        let r = usize::from(nest.n() > 1);
        let (_, trace) = run_traced(
            &nest,
            &ProcedureConfig {
                r_space: r,
                ..Default::default()
            },
        )
        .unwrap();
        for tr in &trace {
            let b1 = SolverConfig {
                coeff_bound: 1,
                ..Default::default()
            };
            let bnb = solve(&tr.system, &b1).map(|s| s.objective);
            let ex = solve(
                &tr.system,
                &SolverConfig {
                    strategy: Strategy::Exhaustive,
                    ..b1
                },
            )
            .map(|s| s.objective);
            assert_eq!(bnb, ex, "{name} recursion {}", tr.xi);
        }
    }
}
