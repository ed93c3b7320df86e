//! Random bounded LPs checked against brute-force vertex enumeration.

use edopt_core::solver::{solve_lp, LpProblem, LpRow, LpStatus};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Solves the square system by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Minimum over all feasible vertices of `{a x <= b}` (box rows included).
fn vertex_oracle(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let n = c.len();
    let mut best: Option<f64> = None;
    for active in combinations(a.len(), n) {
        let sys: Vec<Vec<f64>> = active.iter().map(|&r| a[r].clone()).collect();
        let rhs: Vec<f64> = active.iter().map(|&r| b[r]).collect();
        let Some(x) = solve_square(sys, rhs) else {
            continue;
        };
        let feasible = a
            .iter()
            .zip(b)
            .all(|(row, &bi)| row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= bi + 1e-9);
        if feasible {
            let z: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
            best = Some(best.map_or(z, |v: f64| v.min(z)));
        }
    }
    best
}

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut infeasible_seen = 0;
    for case in 0..100 {
        let n = 2 + (rng.next_u32() % 3) as usize;
        let m = 1 + (rng.next_u32() % 4) as usize;
        let c: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -5.0, 5.0)).collect();
        let upper: Vec<f64> = (0..n).map(|_| uniform(&mut rng, 1.0, 6.0)).collect();
        let mut rows = Vec::new();
        let mut dense_a = Vec::new();
        let mut dense_b = Vec::new();
        for _ in 0..m {
            let coef: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -3.0, 3.0)).collect();
            let rhs = uniform(&mut rng, -4.0, 8.0);
            // alternate between <=, >= and ranged rows
            let kind = rng.next_u32() % 3;
            let (lo, up) = match kind {
                0 => (f64::NEG_INFINITY, rhs),
                1 => (rhs - 6.0, f64::INFINITY),
                _ => (rhs - 3.0, rhs),
            };
            if up.is_finite() {
                dense_a.push(coef.clone());
                dense_b.push(up);
            }
            if lo.is_finite() {
                dense_a.push(coef.iter().map(|v| -v).collect());
                dense_b.push(-lo);
            }
            rows.push(LpRow {
                terms: coef.iter().copied().enumerate().collect(),
                lower: lo,
                upper: up,
            });
        }
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            dense_a.push(e.clone());
            dense_b.push(upper[j]);
            e[j] = -1.0;
            dense_a.push(e);
            dense_b.push(0.0);
        }
        let lp = LpProblem {
            objective: c.clone(),
            col_lower: vec![0.0; n],
            col_upper: upper,
            rows,
        };
        let res = solve_lp(&lp);
        match vertex_oracle(&dense_a, &dense_b, &c) {
            Some(z) => {
                assert_eq!(res.status, LpStatus::Optimal, "case {case}");
                assert!(
                    (res.objective - z).abs() <= 1e-8 * (1.0 + z.abs()),
                    "case {case}: simplex {} vs oracle {z}",
                    res.objective
                );
            }
            None => {
                infeasible_seen += 1;
                assert_eq!(res.status, LpStatus::Infeasible, "case {case}");
            }
        }
    }
    assert!(infeasible_seen < 100);
}
