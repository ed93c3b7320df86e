//! The MILP solved by branch and bound against exhaustive enumeration with
//! the greedy flow evaluator.

use edopt_core::milp::{
    build_deterministic_equivalent, check_solution, extract_schedule, DEFAULT_TOL,
};
use edopt_core::model::Schedule;
use edopt_core::sim::{brute_force_optimum, evaluate_expected, SimError};
use edopt_core::solver::{solve_milp, MilpStatus, SolveOptions};
use edopt_core::stochastic::{random_instance, TinyDims};

fn dims_for(seed: u64) -> TinyDims {
    TinyDims {
        horizon: 2 + (seed % 2) as usize,
        resources: 1 + (seed / 2 % 2) as usize,
        queues: 2 + (seed / 4 % 2) as usize,
        max_staff: 2,
        scenarios: 1 + (seed / 8 % 2) as usize,
    }
}

#[test]
fn seed_zero_tiny_instance() {
    let dims = TinyDims {
        horizon: 2,
        resources: 1,
        queues: 2,
        max_staff: 2,
        scenarios: 1,
    };
    let (inst, scen) = random_instance(dims, 0);
    let (oracle, best) = brute_force_optimum(&inst, &scen, 1 << 20).unwrap();
    let model = build_deterministic_equivalent(&inst, &scen).unwrap();
    let res = solve_milp(&model, &SolveOptions::default());
    assert_eq!(res.status, MilpStatus::Optimal);
    assert!((res.objective.unwrap() - best).abs() <= 1e-6);
    let sched = extract_schedule(&model, res.assignment.as_ref().unwrap(), DEFAULT_TOL).unwrap();
    let canonical = Schedule::from_staffing(&inst, sched.p.clone(), sched.b.clone());
    let value = evaluate_expected(&canonical, &scen, &inst).unwrap().mean;
    assert!((value - best).abs() <= 1e-6);
    let _ = oracle;
}

#[test]
fn random_tiny_instances_match_enumeration() {
    let mut feasible = 0;
    for seed in 0..200 {
        let (inst, scen) = random_instance(dims_for(seed), seed);
        let model = build_deterministic_equivalent(&inst, &scen).unwrap();
        let res = solve_milp(&model, &SolveOptions::default());
        match brute_force_optimum(&inst, &scen, 1 << 20) {
            Ok((_, best)) => {
                feasible += 1;
                assert_eq!(res.status, MilpStatus::Optimal, "seed {seed}");
                let z = res.objective.unwrap();
                assert!(
                    (z - best).abs() <= 1e-6,
                    "seed {seed}: milp {z} vs oracle {best}"
                );
                let x = res.assignment.as_ref().unwrap();
                assert!(check_solution(&model, x, DEFAULT_TOL)
                    .unwrap()
                    .is_feasible());
            }
            Err(SimError::NoFeasibleSchedule) => {
                assert_eq!(res.status, MilpStatus::Infeasible, "seed {seed}");
            }
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    eprintln!("{feasible} feasible of 200");
    assert!(feasible >= 50);
}

#[test]
fn bed_queue_instances_match_enumeration() {
    let mut infeasible = 0;
    for seed in 0..40 {
        let dims = TinyDims {
            horizon: 2 + (seed % 2) as usize,
            resources: 1,
            queues: 5,
            max_staff: 2,
            scenarios: 1 + (seed / 2 % 2) as usize,
        };
        let (inst, scen) = random_instance(dims, 1000 + seed);
        let model = build_deterministic_equivalent(&inst, &scen).unwrap();
        let res = solve_milp(&model, &SolveOptions::default());
        match brute_force_optimum(&inst, &scen, 1 << 24) {
            Ok((_, best)) => {
                assert_eq!(res.status, MilpStatus::Optimal, "seed {seed}");
                let z = res.objective.unwrap();
                assert!(
                    (z - best).abs() <= 1e-6,
                    "seed {seed}: milp {z} vs oracle {best}"
                );
            }
            Err(SimError::NoFeasibleSchedule) => {
                infeasible += 1;
                assert_eq!(res.status, MilpStatus::Infeasible, "seed {seed}");
            }
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    eprintln!("{infeasible} infeasible of 40");
}
