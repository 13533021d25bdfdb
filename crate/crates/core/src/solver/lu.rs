//! Left-looking sparse LU factorization of a simplex basis.
//!
//! Columns are processed sparsest first. Each column is reduced against the
//! previously computed `L` columns (a sparse triangular solve whose pattern
//! is found by depth-first search), then a pivot row is chosen among the
//! unpivoted rows: any entry within a factor of ten of the largest qualifies,
//! and the one whose row is sparsest in the basis wins.

/// A basis column in original row coordinates.
pub(crate) struct ColumnRef<'a> {
    pub rows: &'a [usize],
    pub vals: &'a [f64],
}

#[derive(Debug)]
pub(crate) struct Singular {
    /// Basis positions whose columns could not be pivoted.
    pub positions: Vec<usize>,
    /// Rows left without a pivot, same count as `positions`.
    pub rows: Vec<usize>,
}

const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;

#[derive(Debug, Default)]
pub(crate) struct LuFactors {
    m: usize,
    /// Pivot row of each step.
    prow: Vec<usize>,
    /// Basis position eliminated at each step.
    qpos: Vec<usize>,
    l_start: Vec<usize>,
    l_row: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_step: Vec<usize>,
    u_val: Vec<f64>,
    diag: Vec<f64>,
    work: Vec<f64>,
}

impl LuFactors {
    pub fn factorize(m: usize, cols: &[ColumnRef<'_>]) -> Result<LuFactors, Singular> {
        debug_assert_eq!(cols.len(), m);
        let mut row_count = vec![0usize; m];
        for c in cols {
            for &i in c.rows {
                row_count[i] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&k| (cols[k].rows.len(), k));

        let mut f = LuFactors {
            m,
            prow: Vec::with_capacity(m),
            qpos: Vec::with_capacity(m),
            l_start: vec![0],
            u_start: vec![0],
            work: vec![0.0; m],
            ..Default::default()
        };
        let mut row_step = vec![usize::MAX; m];
        let mut work = vec![0.0; m];
        let mut in_pattern = vec![false; m];
        let mut pattern: Vec<usize> = Vec::new();
        let mut visited = vec![false; m];
        let mut topo: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut singular = Vec::new();

        for &pos in &order {
            let col = &cols[pos];
            pattern.clear();
            topo.clear();
            for (&i, &v) in col.rows.iter().zip(col.vals) {
                work[i] += v;
                if !in_pattern[i] {
                    in_pattern[i] = true;
                    pattern.push(i);
                }
            }
            // reach of the column through L, in reverse topological order
            for idx in 0..col.rows.len() {
                let s0 = row_step[col.rows[idx]];
                if s0 == usize::MAX || visited[s0] {
                    continue;
                }
                visited[s0] = true;
                stack.push((s0, f.l_start[s0]));
                while let Some(top) = stack.last_mut() {
                    let s = top.0;
                    let end = f.l_start[s + 1];
                    let mut next = None;
                    while top.1 < end {
                        let i = f.l_row[top.1];
                        top.1 += 1;
                        let s2 = row_step[i];
                        if s2 != usize::MAX && !visited[s2] {
                            next = Some(s2);
                            break;
                        }
                    }
                    match next {
                        Some(s2) => {
                            visited[s2] = true;
                            stack.push((s2, f.l_start[s2]));
                        }
                        None => {
                            topo.push(s);
                            stack.pop();
                        }
                    }
                }
            }
            for &s in topo.iter().rev() {
                visited[s] = false;
                let ws = work[f.prow[s]];
                if ws == 0.0 {
                    continue;
                }
                for p in f.l_start[s]..f.l_start[s + 1] {
                    let i = f.l_row[p];
                    work[i] -= f.l_val[p] * ws;
                    if !in_pattern[i] {
                        in_pattern[i] = true;
                        pattern.push(i);
                    }
                }
            }

            // split into U part (pivoted rows) and candidates
            let mut max_abs = 0.0f64;
            for &i in &pattern {
                if row_step[i] == usize::MAX {
                    max_abs = max_abs.max(work[i].abs());
                }
            }
            if max_abs < SINGULAR_TOL {
                for &i in &pattern {
                    work[i] = 0.0;
                    in_pattern[i] = false;
                }
                singular.push(pos);
                continue;
            }
            let mut best: Option<usize> = None;
            for &i in &pattern {
                if row_step[i] != usize::MAX || work[i].abs() < PIVOT_THRESHOLD * max_abs {
                    continue;
                }
                best = match best {
                    None => Some(i),
                    Some(b) => {
                        let key = (row_count[i], i);
                        let bkey = (row_count[b], b);
                        if key < bkey { Some(i) } else { Some(b) }
                    }
                };
            }
            let piv_row = best.expect("max entry qualifies");
            let piv = work[piv_row];
            let k = f.prow.len();
            for &i in &pattern {
                let v = work[i];
                let s = row_step[i];
                if s != usize::MAX {
                    if v != 0.0 {
                        f.u_step.push(s);
                        f.u_val.push(v);
                    }
                } else if i != piv_row && v != 0.0 {
                    f.l_row.push(i);
                    f.l_val.push(v / piv);
                }
                work[i] = 0.0;
                in_pattern[i] = false;
            }
            f.l_start.push(f.l_row.len());
            f.u_start.push(f.u_step.len());
            f.diag.push(piv);
            f.prow.push(piv_row);
            f.qpos.push(pos);
            row_step[piv_row] = k;
        }

        if !singular.is_empty() {
            let rows = (0..m).filter(|&i| row_step[i] == usize::MAX).collect();
            return Err(Singular { positions: singular, rows });
        }
        Ok(f)
    }

    /// Solves `B y = v`; `v` is indexed by row on entry and by basis position
    /// on exit.
    pub fn ftran(&mut self, v: &mut [f64]) {
        let m = self.m;
        for s in 0..m {
            let ws = v[self.prow[s]];
            if ws != 0.0 {
                for p in self.l_start[s]..self.l_start[s + 1] {
                    v[self.l_row[p]] -= self.l_val[p] * ws;
                }
            }
        }
        let tmp = &mut self.work;
        for s in 0..m {
            tmp[s] = v[self.prow[s]];
        }
        for k in (0..m).rev() {
            let wk = tmp[k] / self.diag[k];
            tmp[k] = wk;
            if wk != 0.0 {
                for p in self.u_start[k]..self.u_start[k + 1] {
                    tmp[self.u_step[p]] -= self.u_val[p] * wk;
                }
            }
        }
        for k in 0..m {
            v[self.qpos[k]] = tmp[k];
        }
    }

    /// Solves `Bᵀ y = c`; `c` is indexed by basis position on entry and by
    /// row on exit.
    pub fn btran(&mut self, c: &mut [f64]) {
        let m = self.m;
        let r = &mut self.work;
        for k in 0..m {
            let mut acc = c[self.qpos[k]];
            for p in self.u_start[k]..self.u_start[k + 1] {
                acc -= self.u_val[p] * r[self.u_step[p]];
            }
            r[k] = acc / self.diag[k];
        }
        for s in (0..m).rev() {
            let mut acc = r[s];
            for p in self.l_start[s]..self.l_start[s + 1] {
                acc -= self.l_val[p] * c[self.l_row[p]];
            }
            // rows of L column s are pivoted after s, so already final in c
            c[self.prow[s]] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_cols(a: &[Vec<f64>]) -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
        let m = a.len();
        let mut rows = vec![Vec::new(); m];
        let mut vals = vec![Vec::new(); m];
        for j in 0..m {
            for i in 0..m {
                if a[i][j] != 0.0 {
                    rows[j].push(i);
                    vals[j].push(a[i][j]);
                }
            }
        }
        (rows, vals)
    }

    fn factor(a: &[Vec<f64>]) -> Result<LuFactors, Singular> {
        let (rows, vals) = dense_cols(a);
        let cols: Vec<ColumnRef> = rows.iter().zip(&vals).map(|(r, v)| ColumnRef { rows: r, vals: v }).collect();
        LuFactors::factorize(a.len(), &cols)
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let m = a.len();
        (0..m).map(|i| (0..m).map(|j| a[j][i]).collect()).collect()
    }

    #[test]
    fn solves_both_directions() {
        let a = vec![
            vec![2.0, 0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0, 3.0],
            vec![4.0, 0.0, 0.0, 1.0],
            vec![0.0, 5.0, 1.0, 0.0],
        ];
        let mut lu = factor(&a).unwrap();
        let b = vec![1.0, -2.0, 0.5, 3.0];
        let mut y = b.clone();
        lu.ftran(&mut y);
        for (p, q) in matvec(&a, &y).iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
        let mut z = b.clone();
        lu.btran(&mut z);
        for (p, q) in matvec(&transpose(&a), &z).iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn random_sparse_systems() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = rng.random_range(1..25);
            let mut a = vec![vec![0.0; m]; m];
            for (i, row) in a.iter_mut().enumerate() {
                row[i] = rng.random_range(1.0..3.0);
                for _ in 0..2 {
                    let j = rng.random_range(0..m);
                    row[j] += rng.random_range(-1.0..1.0);
                }
            }
            let mut lu = factor(&a).unwrap();
            let b: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut y = b.clone();
            lu.ftran(&mut y);
            for (p, q) in matvec(&a, &y).iter().zip(&b) {
                assert!((p - q).abs() < 1e-9);
            }
            let mut z = b.clone();
            lu.btran(&mut z);
            for (p, q) in matvec(&transpose(&a), &z).iter().zip(&b) {
                assert!((p - q).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reports_singular_columns() {
        let a = vec![vec![1.0, 2.0, 0.0], vec![2.0, 4.0, 0.0], vec![0.0, 0.0, 1.0]];
        let err = factor(&a).unwrap_err();
        assert_eq!(err.positions.len(), 1);
        assert_eq!(err.rows.len(), 1);
    }
}
