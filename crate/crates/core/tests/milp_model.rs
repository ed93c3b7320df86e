use std::collections::{BTreeMap, BTreeSet};

use edopt_core::milp::{
    assemble_assignment, build_deterministic_equivalent, build_with_options, check_solution,
    extract_schedule, BuildOptions, MilpError, MilpModel, Relation, VarKind, DEFAULT_TOL,
};
use edopt_core::model::{
    build_default_instance, Instance, ResourceType, RoutingCoefficients, Scenario, Schedule,
    ShiftBounds,
};
use edopt_core::sim::{brute_force_optimum, evaluate_schedule};
use edopt_core::stochastic::{
    default_arrival_model, default_capacity_model, generate_scenarios, random_instance, TinyDims,
};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn two_queue_instance(horizon: usize, max_staff: u32) -> Instance {
    Instance {
        horizon,
        num_queues: 2,
        resource_types: vec![ResourceType::new("nurse")],
        queue_operators: vec![vec![0], vec![0]],
        max_staff: vec![vec![max_staff, max_staff]],
        routing: RoutingCoefficients {
            alpha: [0.5, 0.5],
            beta: [0.3, 0.3, 0.4],
            gamma: [0.3, 0.3, 0.4],
            lambda: [0.5, 0.5],
        },
        work_budget: vec![horizon as u32 * max_staff],
        shift_bounds: ShiftBounds { lower: 1, upper: 1 },
        bed_stock: 0,
        bed_release: vec![0; horizon],
    }
}

fn flat_scenario(inst: &Instance, arrivals: u32, per_server: u32) -> Scenario {
    let pairs = inst.staffed_pairs();
    Scenario {
        arrivals: vec![arrivals; inst.horizon],
        capacity: pairs
            .iter()
            .map(|&pair| {
                vec![
                    (1..=inst.max_staff_of(pair))
                        .map(|n| n * per_server)
                        .collect();
                    inst.horizon
                ]
            })
            .collect(),
    }
}

fn feasible_point(inst: &Instance, scen: &[Scenario]) -> (MilpModel, Schedule, Vec<f64>) {
    let (sched, _) = brute_force_optimum(inst, scen, 1 << 24).unwrap();
    let model = build_deterministic_equivalent(inst, scen).unwrap();
    let traces: Vec<_> = scen
        .iter()
        .map(|s| evaluate_schedule(&sched, s, inst).unwrap())
        .collect();
    let values = assemble_assignment(&model, &sched, &traces).unwrap();
    (model, sched, values)
}

#[test]
fn variable_census_of_smallest_model() {
    // x: 2 pairs * 2 periods * 1 level = 4; p, s, e: 3 * 2 * 2 = 12;
    // no beds; W, S: 2 * 2 periods * 2 queues = 8
    let inst = two_queue_instance(2, 1);
    let model = build_deterministic_equivalent(&inst, &[flat_scenario(&inst, 1, 1)]).unwrap();
    assert_eq!(model.variables.len(), 24);
    let binaries = model
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .count();
    assert_eq!(binaries, 4);
}

#[test]
fn objective_weights_and_bounds_per_scenario() {
    let inst = build_default_instance();
    let scen = generate_scenarios(
        &inst,
        &default_arrival_model(&inst),
        &default_capacity_model(&inst),
        4,
        3,
    )
    .unwrap();
    let model = build_deterministic_equivalent(&inst, &scen).unwrap();
    let serve_le_wait = model
        .constraints
        .iter()
        .filter(|c| c.name.starts_with("serve_le_wait["))
        .count();
    assert_eq!(serve_le_wait, 4 * inst.horizon * inst.num_queues);
    for &(v, c) in &model.objective {
        let name = &model.variables[v].name;
        if name.starts_with('W') {
            assert_eq!(c, 0.25);
        } else {
            assert!(name.starts_with('S'));
            assert_eq!(c, -0.25);
        }
    }
    assert_eq!(
        model.objective.len(),
        2 * 4 * inst.horizon * inst.num_queues
    );
    // no staffing variables for the bed queue
    assert!(model
        .variables
        .iter()
        .filter(|v| v.name.starts_with("x[") || v.name.starts_with("p["))
        .all(|v| !v.name.contains("[q=5]")));
    // every constraint refers to declared variables
    assert!(model
        .constraints
        .iter()
        .all(|c| c.terms.iter().all(|&(v, _)| v < model.variables.len())));
}

#[test]
fn mismatched_scenario_rejected() {
    let inst = build_default_instance();
    let other = two_queue_instance(6, 2);
    let bad = flat_scenario(&other, 1, 1);
    assert_eq!(
        build_deterministic_equivalent(&inst, &[bad]),
        Err(MilpError::ScenarioMismatch(0))
    );
    assert_eq!(
        build_deterministic_equivalent(&inst, &[]),
        Err(MilpError::NoScenarios)
    );
}

#[test]
fn zero_assignment_violates_staff_floor() {
    let inst = two_queue_instance(2, 1);
    let model = build_deterministic_equivalent(&inst, &[flat_scenario(&inst, 1, 1)]).unwrap();
    let report = check_solution(&model, &vec![0.0; model.variables.len()], DEFAULT_TOL).unwrap();
    assert!(report
        .violations
        .iter()
        .any(|v| v.constraint.starts_with("p_floor[")));
    assert_eq!(
        check_solution(&model, &[0.0], DEFAULT_TOL),
        Err(MilpError::MissingVariables {
            expected: 24,
            found: 1
        })
    );
}

#[test]
fn oracle_schedule_expands_to_feasible_point() {
    for seed in 0..20 {
        let dims = TinyDims {
            horizon: 3,
            resources: 1 + (seed % 2) as usize,
            queues: if seed % 3 == 0 { 5 } else { 3 },
            max_staff: 2,
            scenarios: 2,
        };
        let (inst, scen) = random_instance(dims, seed);
        let (model, sched, values) = feasible_point(&inst, &scen);
        let report = check_solution(&model, &values, DEFAULT_TOL).unwrap();
        assert!(report.is_feasible(), "seed {seed}: {:?}", report.violations);
        let back = extract_schedule(&model, &values, DEFAULT_TOL).unwrap();
        assert_eq!(back, sched);
    }
}

#[test]
fn perturbed_waiting_reports_its_recursions() {
    let inst = two_queue_instance(3, 2);
    let scen = vec![flat_scenario(&inst, 3, 1)];
    let (model, _, mut values) = feasible_point(&inst, &scen);
    let w = model.variable_index("W[w=1][t=2][q=1]").unwrap();
    values[w] += 2.0 * DEFAULT_TOL;
    let report = check_solution(&model, &values, DEFAULT_TOL).unwrap();
    let names: BTreeSet<&str> = report
        .violations
        .iter()
        .map(|v| v.constraint.as_str())
        .collect();
    assert_eq!(
        names,
        BTreeSet::from(["flow[w=1][t=2][q=1]", "flow[w=1][t=3][q=1]"])
    );
}

#[test]
fn extract_reads_levels_and_rejects_splits() {
    let inst = two_queue_instance(3, 2);
    let scen = vec![flat_scenario(&inst, 0, 1)];
    let model = build_deterministic_equivalent(&inst, &scen).unwrap();
    let sched = Schedule::from_staffing(&inst, vec![vec![2, 2, 2], vec![1, 1, 1]], vec![]);
    let traces = vec![evaluate_schedule(&sched, &scen[0], &inst).unwrap()];
    let mut values = assemble_assignment(&model, &sched, &traces).unwrap();
    let x2 = model.variable_index("x[i=1][n=2][t=3][q=1]").unwrap();
    assert_eq!(values[x2], 1.0);
    let back = extract_schedule(&model, &values, DEFAULT_TOL).unwrap();
    assert_eq!(back.p[0][2], 2);

    let x1 = model.variable_index("x[i=1][n=1][t=3][q=1]").unwrap();
    values[x1] = 0.5;
    values[x2] = 0.5;
    assert!(matches!(
        extract_schedule(&model, &values, DEFAULT_TOL),
        Err(MilpError::Integrality { .. })
    ));
}

#[test]
fn printed_start_balance_differs_only_in_that_row() {
    let inst = build_default_instance();
    let scen = generate_scenarios(
        &inst,
        &default_arrival_model(&inst),
        &default_capacity_model(&inst),
        1,
        0,
    )
    .unwrap();
    let a = build_deterministic_equivalent(&inst, &scen).unwrap();
    let b = build_with_options(
        &inst,
        &scen,
        BuildOptions {
            printed_start_balance: true,
        },
    )
    .unwrap();
    assert_eq!(a.variables, b.variables);
    for (ca, cb) in a.constraints.iter().zip(&b.constraints) {
        assert_eq!(ca.name, cb.name);
        if !ca.name.starts_with("start_end") {
            assert_eq!(ca, cb);
        } else {
            assert!(cb
                .terms
                .iter()
                .all(|&(v, _)| !b.variables[v].name.starts_with('e')));
        }
    }
}

/// Renumbers scenario indices after dropping scenario `drop` (1-based).
fn rename(name: &str, drop: usize) -> Option<String> {
    let Some(start) = name.find("[w=") else {
        return Some(name.to_string());
    };
    let rest = &name[start + 3..];
    let end = rest.find(']').unwrap();
    let w: usize = rest[..end].parse().unwrap();
    match w.cmp(&drop) {
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Less => Some(name.to_string()),
        std::cmp::Ordering::Greater => Some(format!(
            "{}[w={}]{}",
            &name[..start],
            w - 1,
            &rest[end + 1..]
        )),
    }
}

type Row = (Relation, String, Vec<(String, String)>);

fn keyed(model: &MilpModel, drop: Option<usize>) -> (Vec<String>, Vec<Row>, BTreeMap<String, f64>) {
    let names: Vec<Option<String>> = model
        .variables
        .iter()
        .map(|v| match drop {
            Some(d) => rename(&v.name, d),
            None => Some(v.name.clone()),
        })
        .collect();
    let vars = names.iter().flatten().cloned().collect();
    let mut rows = Vec::new();
    for c in &model.constraints {
        let kept = match drop {
            Some(d) => rename(&c.name, d),
            None => Some(c.name.clone()),
        };
        let Some(row_name) = kept else { continue };
        let terms = c
            .terms
            .iter()
            .map(|&(v, a)| (names[v].clone().unwrap(), format!("{a:e}")))
            .collect();
        rows.push((c.relation, format!("{row_name}:{:e}", c.rhs), terms));
    }
    let objective = model
        .objective
        .iter()
        .filter_map(|&(v, c)| names[v].clone().map(|n| (n, c)))
        .collect();
    (vars, rows, objective)
}

#[test]
fn dropping_a_scenario_matches_rebuilding_without_it() {
    let inst = build_default_instance();
    let scen = generate_scenarios(
        &inst,
        &default_arrival_model(&inst),
        &default_capacity_model(&inst),
        3,
        11,
    )
    .unwrap();
    let full = build_deterministic_equivalent(&inst, &scen).unwrap();
    let fewer = build_deterministic_equivalent(&inst, &[scen[0].clone(), scen[2].clone()]).unwrap();
    let (va, ra, oa) = keyed(&full, Some(2));
    let (vb, rb, ob) = keyed(&fewer, None);
    assert_eq!(va, vb);
    assert_eq!(ra, rb);
    assert_eq!(oa.len(), ob.len());
    for (name, c) in &oa {
        assert!((c * 3.0 / 2.0 - ob[name]).abs() < 1e-12, "{name}");
    }
}

/// Independent feasibility test straight from the constraint rows.
fn satisfies_all(model: &MilpModel, x: &[f64], tol: f64) -> bool {
    let rows_ok = model.constraints.iter().all(|c| {
        let lhs: f64 = c.terms.iter().map(|&(v, a)| a * x[v]).sum();
        match c.relation {
            Relation::Le => lhs <= c.rhs + tol,
            Relation::Ge => lhs >= c.rhs - tol,
            Relation::Eq => (lhs - c.rhs).abs() <= tol,
        }
    });
    let vars_ok = model.variables.iter().zip(x).all(|(v, &val)| {
        val >= v.lower - tol
            && val <= v.upper + tol
            && (v.kind == VarKind::Continuous || (val - val.round()).abs() <= tol)
    });
    rows_ok && vars_ok
}

#[test]
fn random_perturbations_round_trip() {
    let (inst, scen) = random_instance(
        TinyDims {
            horizon: 3,
            resources: 2,
            queues: 5,
            max_staff: 2,
            scenarios: 2,
        },
        5,
    );
    let (model, _, base) = feasible_point(&inst, &scen);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut infeasible = 0;
    for _ in 0..1000 {
        let mut x = base.clone();
        let moves = 1 + rng.next_u32() % 3;
        for _ in 0..moves {
            let v = (rng.next_u64() % x.len() as u64) as usize;
            let scale = [0.5e-6, 2e-6, 0.3, 1.0][(rng.next_u32() % 4) as usize];
            let sign = if rng.next_u32() % 2 == 0 { 1.0 } else { -1.0 };
            x[v] += sign * scale;
        }
        let report = check_solution(&model, &x, DEFAULT_TOL).unwrap();
        let expected = satisfies_all(&model, &x, DEFAULT_TOL);
        assert_eq!(report.is_feasible(), expected);
        infeasible += usize::from(!expected);
    }
    assert!(infeasible > 100 && infeasible < 1000);
}
