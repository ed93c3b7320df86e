use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{MilpError, MilpModel, ModelLayout, Relation, VarKind};
use crate::model::{
    inflow_composition, shift_window, validate_instance, FlowSource, Instance, Scenario, StaffPair,
    BED_QUEUE,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildOptions {
    /// Emit the start/staff balance as `sum_t (s - p) = 0` instead of
    /// `sum_t s = sum_t e`. The printed form rules out shifts longer than one
    /// period and is only useful for comparison.
    pub printed_start_balance: bool,
}

/// Builds the deterministic equivalent over `scenarios`, each weighted
/// `1/K` in the objective.
pub fn build_deterministic_equivalent(
    inst: &Instance,
    scenarios: &[Scenario],
) -> Result<MilpModel, MilpError> {
    build_with_options(inst, scenarios, BuildOptions::default())
}

fn pair_tag(pair: StaffPair) -> String {
    format!("[i={}]", pair.resource + 1)
}

pub fn build_with_options(
    inst: &Instance,
    scenarios: &[Scenario],
    opts: BuildOptions,
) -> Result<MilpModel, MilpError> {
    let report = validate_instance(inst);
    if let Some(issue) = report.issues.first() {
        return Err(MilpError::InvalidInstance(format!(
            "{}: {}",
            issue.path, issue.message
        )));
    }
    if scenarios.is_empty() {
        return Err(MilpError::NoScenarios);
    }
    if let Some(w) = scenarios.iter().position(|s| !s.matches(inst)) {
        return Err(MilpError::ScenarioMismatch(w));
    }

    let horizon = inst.horizon;
    let pairs = inst.staffed_pairs();
    let k_count = scenarios.len();
    let mut m = MilpModel::new("edopt");

    // first-stage variables
    let mut x = Vec::with_capacity(pairs.len());
    for &pair in &pairs {
        let max_n = inst.max_staff_of(pair);
        let mut per_t = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let levels: Vec<usize> = (1..=max_n)
                .map(|n| {
                    m.add_variable(
                        format!(
                            "x{}[n={}][t={}][q={}]",
                            pair_tag(pair),
                            n,
                            t + 1,
                            pair.queue + 1
                        ),
                        VarKind::Binary,
                        0.0,
                        1.0,
                    )
                })
                .collect();
            per_t.push(levels);
        }
        x.push(per_t);
    }
    let staff_table = |m: &mut MilpModel, symbol: &str, lower: f64| -> Vec<Vec<usize>> {
        pairs
            .iter()
            .map(|&pair| {
                let max_n = f64::from(inst.max_staff_of(pair));
                (0..horizon)
                    .map(|t| {
                        m.add_variable(
                            format!(
                                "{symbol}{}[t={}][q={}]",
                                pair_tag(pair),
                                t + 1,
                                pair.queue + 1
                            ),
                            VarKind::Integer,
                            lower,
                            max_n,
                        )
                    })
                    .collect()
            })
            .collect()
    };
    // p in [1, N] follows from the one-hot linkage
    let p = staff_table(&mut m, "p", 1.0);
    let s = staff_table(&mut m, "s", 0.0);
    let e = staff_table(&mut m, "e", 0.0);

    let (b, sb, eb) = if inst.has_bed_queue() {
        let stock = f64::from(inst.bed_stock);
        let max_release = f64::from(inst.bed_release.iter().copied().max().unwrap_or(0));
        let b: Vec<usize> = (0..horizon)
            .map(|t| m.add_variable(format!("b[t={}]", t + 1), VarKind::Integer, 0.0, stock))
            .collect();
        let sb: Vec<usize> = (0..horizon)
            .map(|t| {
                m.add_variable(
                    format!("sb[t={}]", t + 1),
                    VarKind::Integer,
                    0.0,
                    stock + max_release,
                )
            })
            .collect();
        let eb: Vec<usize> = (0..horizon)
            .map(|t| {
                m.add_variable(
                    format!("eb[t={}]", t + 1),
                    VarKind::Integer,
                    0.0,
                    max_release,
                )
            })
            .collect();
        (b, sb, eb)
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };

    // second-stage variables
    let mut waiting = Vec::with_capacity(k_count);
    let mut served = Vec::with_capacity(k_count);
    for w in 0..k_count {
        let mut wt = Vec::with_capacity(horizon);
        let mut st = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let mut wq = Vec::with_capacity(inst.num_queues);
            let mut sq = Vec::with_capacity(inst.num_queues);
            for q in 0..inst.num_queues {
                let tag = format!("[w={}][t={}][q={}]", w + 1, t + 1, q + 1);
                wq.push(m.add_variable(format!("W{tag}"), VarKind::Continuous, 0.0, f64::INFINITY));
                sq.push(m.add_variable(format!("S{tag}"), VarKind::Continuous, 0.0, f64::INFINITY));
            }
            wt.push(wq);
            st.push(sq);
        }
        waiting.push(wt);
        served.push(st);
    }

    let weight = 1.0 / k_count as f64;
    for w in 0..k_count {
        for t in 0..horizon {
            for q in 0..inst.num_queues {
                m.objective.push((waiting[w][t][q], weight));
                m.objective.push((served[w][t][q], -weight));
            }
        }
    }

    // staffing: budget, start/end bookkeeping, shift windows, one-hot
    // linkage and operational floors
    let bounds = inst.shift_bounds;
    for (k, &pair) in pairs.iter().enumerate() {
        let tag = pair_tag(pair);
        let q_tag = format!("[q={}]", pair.queue + 1);
        m.add_constraint(
            format!("budget{tag}{q_tag}"),
            p[k].iter().map(|&v| (v, 1.0)).collect(),
            Relation::Le,
            f64::from(inst.work_budget[pair.resource]),
        );
        let balance: Vec<(usize, f64)> = if opts.printed_start_balance {
            (0..horizon)
                .flat_map(|t| [(s[k][t], 1.0), (p[k][t], -1.0)])
                .collect()
        } else {
            (0..horizon)
                .flat_map(|t| [(s[k][t], 1.0), (e[k][t], -1.0)])
                .collect()
        };
        m.add_constraint(format!("start_end{tag}{q_tag}"), balance, Relation::Eq, 0.0);
        for t in 1..horizon {
            m.add_constraint(
                format!("staff_balance{tag}[t={}]{q_tag}", t + 1),
                vec![
                    (p[k][t], 1.0),
                    (p[k][t - 1], -1.0),
                    (s[k][t], -1.0),
                    (e[k][t], 1.0),
                ],
                Relation::Eq,
                0.0,
            );
        }
        m.add_constraint(
            format!("staff_cycle{tag}{q_tag}"),
            vec![
                (p[k][0], 1.0),
                (p[k][horizon - 1], -1.0),
                (s[k][0], -1.0),
                (e[k][0], 1.0),
            ],
            Relation::Eq,
            0.0,
        );
        for t in 0..horizon {
            let t_tag = format!("[t={}]", t + 1);
            let mut short: Vec<(usize, f64)> = shift_window(t, bounds.lower, horizon)
                .map(|u| (e[k][u], 1.0))
                .collect();
            short.push((s[k][t], 1.0));
            short.push((p[k][t], -1.0));
            m.add_constraint(
                format!("min_shift{tag}{t_tag}{q_tag}"),
                short,
                Relation::Le,
                0.0,
            );
            let mut long: Vec<(usize, f64)> = shift_window(t, bounds.upper + 1, horizon)
                .map(|u| (e[k][u], 1.0))
                .collect();
            long.push((p[k][t], -1.0));
            m.add_constraint(
                format!("max_shift{tag}{t_tag}{q_tag}"),
                long,
                Relation::Le,
                0.0,
            );

            let mut level: Vec<(usize, f64)> = x[k][t]
                .iter()
                .enumerate()
                .map(|(n, &v)| (v, (n + 1) as f64))
                .collect();
            level.push((p[k][t], -1.0));
            m.add_constraint(
                format!("staff_level{tag}{t_tag}{q_tag}"),
                level,
                Relation::Eq,
                0.0,
            );
            m.add_constraint(
                format!("one_level{tag}{t_tag}{q_tag}"),
                x[k][t].iter().map(|&v| (v, 1.0)).collect(),
                Relation::Eq,
                1.0,
            );
            m.add_constraint(
                format!("p_floor{tag}{t_tag}{q_tag}"),
                vec![(p[k][t], 1.0)],
                Relation::Ge,
                1.0,
            );
            m.add_constraint(
                format!("start_floor{tag}{t_tag}{q_tag}"),
                vec![(p[k][t], 1.0), (s[k][t], -1.0)],
                Relation::Ge,
                1.0,
            );
        }
    }

    // beds
    if inst.has_bed_queue() {
        m.add_constraint(
            "bed_init".into(),
            vec![(b[0], 1.0)],
            Relation::Eq,
            f64::from(inst.bed_stock),
        );
        m.add_constraint(
            "bed_release_init".into(),
            vec![(eb[0], 1.0)],
            Relation::Eq,
            0.0,
        );
        m.add_constraint(
            "bed_occupy_init".into(),
            vec![(sb[0], 1.0)],
            Relation::Eq,
            0.0,
        );
        for t in 1..horizon {
            m.add_constraint(
                format!("bed_release[t={}]", t + 1),
                vec![(eb[t], 1.0)],
                Relation::Eq,
                f64::from(inst.bed_release[t]),
            );
            m.add_constraint(
                format!("bed_balance[t={}]", t + 1),
                vec![(b[t], 1.0), (b[t - 1], -1.0), (eb[t], -1.0), (sb[t], 1.0)],
                Relation::Eq,
                0.0,
            );
        }
    }

    // per-scenario flow
    let inflows: Vec<_> = (0..inst.num_queues)
        .map(|q| inflow_composition(inst, q).expect("validated queue"))
        .collect();
    for (w, scen) in scenarios.iter().enumerate() {
        let wv = &waiting[w];
        let sv = &served[w];
        for q in 0..inst.num_queues {
            let tag = format!("[w={}][q={}]", w + 1, q + 1);
            let init = if q == 0 {
                f64::from(scen.arrivals[0])
            } else {
                0.0
            };
            m.add_constraint(
                format!("init_W{tag}"),
                vec![(wv[0][q], 1.0)],
                Relation::Eq,
                init,
            );
            m.add_constraint(
                format!("init_S{tag}"),
                vec![(sv[0][q], 1.0)],
                Relation::Eq,
                0.0,
            );
        }
        for t in 1..horizon {
            for q in 0..inst.num_queues {
                let mut terms = vec![(wv[t][q], 1.0), (wv[t - 1][q], -1.0), (sv[t - 1][q], 1.0)];
                let mut rhs = 0.0;
                for &(src, coef) in &inflows[q] {
                    match src {
                        FlowSource::Arrivals => rhs += f64::from(scen.arrivals[t]),
                        FlowSource::Served(from) => terms.push((sv[t - 1][from], -coef)),
                    }
                }
                m.add_constraint(
                    format!("flow[w={}][t={}][q={}]", w + 1, t + 1, q + 1),
                    terms,
                    Relation::Eq,
                    rhs,
                );
            }
        }
        for t in 0..horizon {
            for q in 0..inst.num_queues {
                m.add_constraint(
                    format!("serve_le_wait[w={}][t={}][q={}]", w + 1, t + 1, q + 1),
                    vec![(sv[t][q], 1.0), (wv[t][q], -1.0)],
                    Relation::Le,
                    0.0,
                );
            }
            for (k, &pair) in pairs.iter().enumerate() {
                let mut terms = vec![(sv[t][pair.queue], 1.0)];
                for (n, &v) in x[k][t].iter().enumerate() {
                    terms.push((v, -f64::from(scen.capacity_of(k, n as u32 + 1, t))));
                }
                m.add_constraint(
                    format!(
                        "capacity[w={}][t={}][q={}]{}",
                        w + 1,
                        t + 1,
                        pair.queue + 1,
                        pair_tag(pair)
                    ),
                    terms,
                    Relation::Le,
                    0.0,
                );
            }
            if inst.has_bed_queue() {
                m.add_constraint(
                    format!("bed_capacity[w={}][t={}]", w + 1, t + 1),
                    vec![(sv[t][BED_QUEUE], 1.0), (b[t], -1.0)],
                    Relation::Le,
                    0.0,
                );
                if t + 1 < horizon {
                    m.add_constraint(
                        format!("bed_occupy[w={}][t={}]", w + 1, t + 2),
                        vec![(sb[t + 1], 1.0), (sv[t][BED_QUEUE], -1.0)],
                        Relation::Ge,
                        0.0,
                    );
                }
            }
        }
    }

    m.layout = Some(ModelLayout {
        instance: inst.clone(),
        scenarios: k_count,
        x,
        p,
        s,
        e,
        b,
        sb,
        eb,
        waiting,
        served,
    });
    Ok(m)
}
