//! Sparse LU factorization of simplex bases with product-form updates.
//!
//! Column and row singletons are eliminated first without fill; the
//! remaining nucleus is factored densely with partial pivoting. LP bases in
//! this crate are close to triangular, so the nucleus stays small.

use alloc::vec;
use alloc::vec::Vec;

/// Smallest pivot accepted in the dense nucleus.
const NUCLEUS_PIVOT_TOL: f64 = 1e-11;
/// Singleton pivots below this magnitude are treated as zero.
const SINGLETON_PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Singular {
    /// Basis positions that could not be pivoted.
    pub positions: Vec<usize>,
    /// Rows left without a pivot, as many as `positions`.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct LuFactors {
    m: usize,
    // row operations `v[row] -= mult * v[pivot_row]`, grouped per step
    l_pivot: Vec<usize>,
    l_start: Vec<usize>,
    l_row: Vec<usize>,
    l_mult: Vec<f64>,
    // U rows in pivot order: pivot (row, col, value) plus off-diagonal
    // entries in later-pivoted columns
    u_prow: Vec<usize>,
    u_pcol: Vec<usize>,
    u_piv: Vec<f64>,
    u_start: Vec<usize>,
    u_col: Vec<usize>,
    u_val: Vec<f64>,
    // product-form updates
    eta_pos: Vec<usize>,
    eta_piv: Vec<f64>,
    eta_start: Vec<usize>,
    eta_idx: Vec<usize>,
    eta_val: Vec<f64>,
}

impl LuFactors {
    pub fn num_updates(&self) -> usize {
        self.eta_pos.len()
    }

    fn push_l(&mut self, pivot_row: usize, ops: &[(usize, f64)]) {
        if ops.is_empty() {
            return;
        }
        self.l_pivot.push(pivot_row);
        self.l_start.push(self.l_row.len());
        for &(r, mult) in ops {
            self.l_row.push(r);
            self.l_mult.push(mult);
        }
    }

    fn push_u(
        &mut self,
        row: usize,
        col: usize,
        piv: f64,
        rest: impl Iterator<Item = (usize, f64)>,
    ) {
        self.u_prow.push(row);
        self.u_pcol.push(col);
        self.u_piv.push(piv);
        self.u_start.push(self.u_col.len());
        for (c, v) in rest {
            self.u_col.push(c);
            self.u_val.push(v);
        }
    }

    /// Factors the `m x m` matrix whose column `j` is `columns[j]`, given as
    /// `(row, value)` pairs.
    pub fn factor(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut lu = LuFactors {
            m,
            ..Default::default()
        };

        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for (j, col) in columns.iter().enumerate() {
            for &(r, v) in col {
                if v != 0.0 {
                    rows[r].push((j, v));
                }
            }
        }
        let mut row_active = vec![true; m];
        let mut col_active = vec![true; m];
        let mut row_count: Vec<usize> = rows.iter().map(|r| r.len()).collect();
        let mut col_count: Vec<usize> = columns
            .iter()
            .map(|c| c.iter().filter(|&&(_, v)| v != 0.0).count())
            .collect();

        let mut col_stack: Vec<usize> = (0..m).filter(|&j| col_count[j] == 1).collect();
        let mut row_stack: Vec<usize> = (0..m).filter(|&r| row_count[r] == 1).collect();
        let mut pivots = 0usize;
        let mut ops: Vec<(usize, f64)> = Vec::new();

        loop {
            if let Some(j) = col_stack.pop() {
                if !col_active[j] || col_count[j] != 1 {
                    continue;
                }
                let Some(&(r, v)) = columns[j].iter().find(|&&(r, v)| row_active[r] && v != 0.0)
                else {
                    continue;
                };
                if v.abs() < SINGLETON_PIVOT_TOL {
                    continue;
                }
                row_active[r] = false;
                col_active[j] = false;
                let rest: Vec<(usize, f64)> = rows[r]
                    .iter()
                    .copied()
                    .filter(|&(c, _)| c != j && col_active[c])
                    .collect();
                for &(c, _) in &rest {
                    col_count[c] -= 1;
                    if col_count[c] == 1 {
                        col_stack.push(c);
                    }
                }
                lu.push_u(r, j, v, rest.into_iter());
                pivots += 1;
                continue;
            }
            if let Some(r) = row_stack.pop() {
                if !row_active[r] || row_count[r] != 1 {
                    continue;
                }
                let Some(&(j, v)) = rows[r].iter().find(|&&(c, _)| col_active[c]) else {
                    continue;
                };
                if v.abs() < SINGLETON_PIVOT_TOL {
                    continue;
                }
                row_active[r] = false;
                col_active[j] = false;
                ops.clear();
                for &(i, a) in &columns[j] {
                    if i != r && row_active[i] && a != 0.0 {
                        ops.push((i, a / v));
                        row_count[i] -= 1;
                        if row_count[i] == 1 {
                            row_stack.push(i);
                        }
                    }
                }
                lu.push_l(r, &ops);
                lu.push_u(r, j, v, core::iter::empty());
                pivots += 1;
                continue;
            }
            break;
        }

        if pivots < m {
            lu.factor_nucleus(&rows, &row_active, &col_active)?;
        }
        Ok(lu)
    }

    fn factor_nucleus(
        &mut self,
        rows: &[Vec<(usize, f64)>],
        row_active: &[bool],
        col_active: &[bool],
    ) -> Result<(), Singular> {
        let m = self.m;
        let nrows: Vec<usize> = (0..m).filter(|&r| row_active[r]).collect();
        let ncols: Vec<usize> = (0..m).filter(|&c| col_active[c]).collect();
        let size = ncols.len();
        debug_assert_eq!(nrows.len(), size);
        let mut col_slot = vec![usize::MAX; m];
        for (k, &c) in ncols.iter().enumerate() {
            col_slot[c] = k;
        }
        let mut dense = vec![0.0f64; size * size];
        for (a, &r) in nrows.iter().enumerate() {
            for &(c, v) in &rows[r] {
                if col_slot[c] != usize::MAX {
                    dense[a * size + col_slot[c]] = v;
                }
            }
        }
        let mut row_done = vec![false; size];
        let mut failed_cols = Vec::new();
        let mut ops: Vec<(usize, f64)> = Vec::new();
        for k in 0..size {
            let mut best = None;
            let mut best_abs = NUCLEUS_PIVOT_TOL;
            for a in 0..size {
                if !row_done[a] {
                    let v = dense[a * size + k].abs();
                    if v > best_abs {
                        best_abs = v;
                        best = Some(a);
                    }
                }
            }
            let Some(pa) = best else {
                failed_cols.push(ncols[k]);
                continue;
            };
            row_done[pa] = true;
            let piv = dense[pa * size + k];
            ops.clear();
            for a in 0..size {
                if row_done[a] {
                    continue;
                }
                let f = dense[a * size + k];
                if f == 0.0 {
                    continue;
                }
                let mult = f / piv;
                ops.push((nrows[a], mult));
                dense[a * size + k] = 0.0;
                for c in k + 1..size {
                    let u = dense[pa * size + c];
                    if u != 0.0 {
                        dense[a * size + c] -= mult * u;
                    }
                }
            }
            self.push_l(nrows[pa], &ops);
            let rest: Vec<(usize, f64)> = (k + 1..size)
                .filter(|&c| dense[pa * size + c] != 0.0)
                .map(|c| (ncols[c], dense[pa * size + c]))
                .collect();
            self.push_u(nrows[pa], ncols[k], piv, rest.into_iter());
        }
        if failed_cols.is_empty() {
            Ok(())
        } else {
            let rows_left: Vec<usize> = (0..size)
                .filter(|&a| !row_done[a])
                .map(|a| nrows[a])
                .collect();
            Err(Singular {
                positions: failed_cols,
                rows: rows_left,
            })
        }
    }

    /// Solves `B x = rhs`; `rhs` is indexed by row and is overwritten with
    /// `x`, indexed by basis position.
    pub fn ftran(&self, rhs: &mut [f64], work: &mut Vec<f64>) {
        for (k, &pr) in self.l_pivot.iter().enumerate() {
            let v = rhs[pr];
            if v == 0.0 {
                continue;
            }
            let end = self.l_start.get(k + 1).copied().unwrap_or(self.l_row.len());
            for idx in self.l_start[k]..end {
                rhs[self.l_row[idx]] -= self.l_mult[idx] * v;
            }
        }
        work.clear();
        work.resize(self.m, 0.0);
        for k in (0..self.u_prow.len()).rev() {
            let mut v = rhs[self.u_prow[k]];
            let end = self.u_start.get(k + 1).copied().unwrap_or(self.u_col.len());
            for idx in self.u_start[k]..end {
                v -= self.u_val[idx] * work[self.u_col[idx]];
            }
            work[self.u_pcol[k]] = v / self.u_piv[k];
        }
        rhs.copy_from_slice(work);
        for k in 0..self.eta_pos.len() {
            let p = self.eta_pos[k];
            let xp = rhs[p] / self.eta_piv[k];
            if xp != 0.0 {
                let end = self
                    .eta_start
                    .get(k + 1)
                    .copied()
                    .unwrap_or(self.eta_idx.len());
                for idx in self.eta_start[k]..end {
                    rhs[self.eta_idx[idx]] -= self.eta_val[idx] * xp;
                }
            }
            rhs[p] = xp;
        }
    }

    /// Solves `y^T B = c^T`; `c` is indexed by basis position and is
    /// overwritten with `y`, indexed by row.
    pub fn btran(&self, c: &mut [f64], work: &mut Vec<f64>) {
        for k in (0..self.eta_pos.len()).rev() {
            let p = self.eta_pos[k];
            let end = self
                .eta_start
                .get(k + 1)
                .copied()
                .unwrap_or(self.eta_idx.len());
            let mut v = c[p];
            for idx in self.eta_start[k]..end {
                v -= self.eta_val[idx] * c[self.eta_idx[idx]];
            }
            c[p] = v / self.eta_piv[k];
        }
        work.clear();
        work.resize(self.m, 0.0);
        for k in 0..self.u_prow.len() {
            let z = c[self.u_pcol[k]] / self.u_piv[k];
            work[self.u_prow[k]] = z;
            if z != 0.0 {
                let end = self.u_start.get(k + 1).copied().unwrap_or(self.u_col.len());
                for idx in self.u_start[k]..end {
                    c[self.u_col[idx]] -= z * self.u_val[idx];
                }
            }
        }
        for k in (0..self.l_pivot.len()).rev() {
            let end = self.l_start.get(k + 1).copied().unwrap_or(self.l_row.len());
            let mut acc = 0.0;
            for idx in self.l_start[k]..end {
                acc += self.l_mult[idx] * work[self.l_row[idx]];
            }
            work[self.l_pivot[k]] -= acc;
        }
        c.copy_from_slice(work);
    }

    /// Records the replacement of the column at basis position `pos` by a
    /// column whose representation in the current basis is `alpha`.
    pub fn update(&mut self, pos: usize, alpha: &[f64]) {
        self.eta_pos.push(pos);
        self.eta_piv.push(alpha[pos]);
        self.eta_start.push(self.eta_idx.len());
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a != 0.0 {
                self.eta_idx.push(i);
                self.eta_val.push(a);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_to_columns(a: &[&[f64]]) -> Vec<Vec<(usize, f64)>> {
        let m = a.len();
        (0..m)
            .map(|j| {
                (0..m)
                    .filter(|&i| a[i][j] != 0.0)
                    .map(|i| (i, a[i][j]))
                    .collect()
            })
            .collect()
    }

    fn mat_vec(a: &[&[f64]], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(x).map(|(u, v)| u * v).sum())
            .collect()
    }

    fn check_solves(a: &[&[f64]]) {
        let m = a.len();
        let lu = LuFactors::factor(m, &dense_to_columns(a)).unwrap();
        let x_true: Vec<f64> = (0..m).map(|i| 1.0 + i as f64 * 0.5).collect();
        let mut rhs = mat_vec(a, &x_true);
        let mut work = Vec::new();
        lu.ftran(&mut rhs, &mut work);
        for i in 0..m {
            assert!((rhs[i] - x_true[i]).abs() < 1e-10, "ftran {rhs:?}");
        }
        // y^T A = c^T  <=>  A^T y = c
        let y_true: Vec<f64> = (0..m).map(|i| 2.0 - i as f64 * 0.25).collect();
        let mut c: Vec<f64> = (0..m)
            .map(|j| (0..m).map(|i| a[i][j] * y_true[i]).sum())
            .collect();
        lu.btran(&mut c, &mut work);
        for i in 0..m {
            assert!((c[i] - y_true[i]).abs() < 1e-10, "btran {c:?}");
        }
    }

    #[test]
    fn triangular_and_dense() {
        check_solves(&[&[2.0, 0.0, 0.0], &[1.0, 3.0, 0.0], &[0.0, -1.0, 4.0]]);
        check_solves(&[&[0.0, 1.0, 2.0], &[1.0, 0.0, 3.0], &[4.0, -3.0, 8.0]]);
        check_solves(&[
            &[1.0, 0.0, 0.0, 2.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[3.0, 1.0, 0.0, 0.0],
            &[0.0, 2.0, 0.0, 1.0],
        ]);
    }

    #[test]
    fn singular_is_reported() {
        let a: &[&[f64]] = &[&[1.0, 2.0], &[2.0, 4.0]];
        let err = LuFactors::factor(2, &dense_to_columns(a)).unwrap_err();
        assert_eq!(err.positions.len(), 1);
        assert_eq!(err.rows.len(), 1);
    }

    #[test]
    fn eta_update_matches_refactor() {
        let a: &[&[f64]] = &[&[2.0, 1.0, 0.0], &[0.0, 3.0, 1.0], &[1.0, 0.0, 1.0]];
        let mut lu = LuFactors::factor(3, &dense_to_columns(a)).unwrap();
        let new_col = [1.0, -1.0, 2.0];
        let mut alpha = new_col.to_vec();
        let mut work = Vec::new();
        lu.ftran(&mut alpha, &mut work);
        lu.update(1, &alpha);
        let b: &[&[f64]] = &[&[2.0, 1.0, 0.0], &[0.0, -1.0, 1.0], &[1.0, 2.0, 1.0]];
        let x_true = [0.5, -1.0, 2.0];
        let mut rhs = mat_vec(b, &x_true);
        lu.ftran(&mut rhs, &mut work);
        for i in 0..3 {
            assert!((rhs[i] - x_true[i]).abs() < 1e-12);
        }
        let y_true = [1.0, 2.0, -1.0];
        let mut c: Vec<f64> = (0..3)
            .map(|j| (0..3).map(|i| b[i][j] * y_true[i]).sum())
            .collect();
        lu.btran(&mut c, &mut work);
        for i in 0..3 {
            assert!((c[i] - y_true[i]).abs() < 1e-12);
        }
    }
}
