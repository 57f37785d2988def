//! Left-looking sparse LU (Gilbert–Peierls) with threshold partial pivoting.
//!
//! Columns are visited in nested-dissection order; within each column the
//! diagonal is kept as pivot whenever it is within `PIVOT_TOL` of the largest
//! candidate, which preserves the ordering's sparsity on these nearly
//! diagonally dominant systems.

use super::ordering::nested_dissection;
use super::SparseMatrix;
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 0.1;

#[derive(Clone, Copy, Debug)]
pub struct LuOptions {
    /// Pivots smaller than `singular_tol * max|A|` are reported as singular.
    pub singular_tol: f64,
    /// Use the nested-dissection column ordering (otherwise natural order).
    pub reorder: bool,
}

impl Default for LuOptions {
    fn default() -> Self {
        Self {
            singular_tol: 1e-14,
            reorder: true,
        }
    }
}

/// P A Q = L U with L unit lower triangular. Immutable once built.
#[derive(Clone, Debug)]
pub struct LuFactorization {
    n: usize,
    /// column permutation: step k eliminates original column q[k]
    q: Vec<usize>,
    /// row permutation: original row i becomes pivot row pinv[i]
    pinv: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
}

pub fn lu_factor(a: &SparseMatrix) -> Result<LuFactorization> {
    lu_factor_with(a, LuOptions::default())
}

pub fn lu_factor_with(a: &SparseMatrix, opts: LuOptions) -> Result<LuFactorization> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    let q = if opts.reorder {
        nested_dissection(a)
    } else {
        (0..n).collect()
    };
    // column access to A
    let at = a.transpose();
    let thresh = opts.singular_tol * a.max_abs().max(f64::MIN_POSITIVE);

    let mut pinv = vec![usize::MAX; n];
    let cap = 4 * a.nnz() + n;
    let (mut lp, mut li, mut lx) = (
        Vec::with_capacity(n + 1),
        Vec::with_capacity(cap),
        Vec::with_capacity(cap),
    );
    let (mut up, mut ui, mut ux) = (
        Vec::with_capacity(n + 1),
        Vec::with_capacity(cap),
        Vec::with_capacity(cap),
    );
    let mut x = vec![0.0; n];
    let mut mark = vec![usize::MAX; n];
    let mut reach: Vec<usize> = Vec::with_capacity(n);
    let mut stack: Vec<(usize, usize)> = Vec::new();

    for (k, &col) in q.iter().enumerate() {
        lp.push(li.len());
        up.push(ui.len());
        let (bi, bx) = at.row(col);

        // symbolic: topological order of rows reachable from the pattern of A(:,col)
        reach.clear();
        for &i in bi {
            if mark[i] == k {
                continue;
            }
            mark[i] = k;
            stack.push((i, 0));
            while let Some(&mut (j, ref mut pos)) = stack.last_mut() {
                let jc = pinv[j];
                let (start, end) = if jc == usize::MAX {
                    (0, 0)
                } else {
                    (lp[jc] + 1, lp[jc + 1])
                };
                let mut pushed = false;
                while start + *pos < end {
                    let r = li[start + *pos];
                    *pos += 1;
                    if mark[r] != k {
                        mark[r] = k;
                        stack.push((r, 0));
                        pushed = true;
                        break;
                    }
                }
                if !pushed {
                    stack.pop();
                    reach.push(j);
                }
            }
        }

        // numeric: sparse triangular solve L x = A(:,col)
        for (&i, &v) in bi.iter().zip(bx) {
            x[i] = v;
        }
        for &j in reach.iter().rev() {
            let jc = pinv[j];
            if jc == usize::MAX {
                continue;
            }
            let xj = x[j];
            for p in lp[jc] + 1..lp[jc + 1] {
                x[li[p]] -= lx[p] * xj;
            }
        }

        // pivot choice with diagonal preference
        let mut ipiv = usize::MAX;
        let mut amax = -1.0f64;
        for &i in reach.iter().rev() {
            if pinv[i] == usize::MAX {
                let t = x[i].abs();
                if t > amax {
                    amax = t;
                    ipiv = i;
                }
            } else {
                ui.push(pinv[i]);
                ux.push(x[i]);
            }
        }
        if ipiv == usize::MAX || amax <= thresh {
            return Err(Error::SingularMatrix {
                col,
                pivot: amax.max(0.0),
            });
        }
        if pinv[col] == usize::MAX && mark[col] == k && x[col].abs() >= PIVOT_TOL * amax {
            ipiv = col;
        }
        let pivot = x[ipiv];
        ui.push(k);
        ux.push(pivot);
        pinv[ipiv] = k;
        li.push(ipiv);
        lx.push(1.0);
        for &i in &reach {
            if pinv[i] == usize::MAX {
                li.push(i);
                lx.push(x[i] / pivot);
            }
            x[i] = 0.0;
        }
    }
    lp.push(li.len());
    up.push(ui.len());
    for r in li.iter_mut() {
        *r = pinv[*r];
    }
    Ok(LuFactorization {
        n,
        q,
        pinv,
        lp,
        li,
        lx,
        up,
        ui,
        ux,
    })
}

impl LuFactorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of L plus U.
    pub fn fill(&self) -> usize {
        self.lx.len() + self.ux.len()
    }

    pub fn solve_in_place(&self, b: &mut [f64], work: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        assert_eq!(work.len(), n);
        for i in 0..n {
            work[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let xj = work[j];
            if xj != 0.0 {
                for p in self.lp[j] + 1..self.lp[j + 1] {
                    work[self.li[p]] -= self.lx[p] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let last = self.up[j + 1] - 1;
            work[j] /= self.ux[last];
            let xj = work[j];
            if xj != 0.0 {
                for p in self.up[j]..last {
                    work[self.ui[p]] -= self.ux[p] * xj;
                }
            }
        }
        for k in 0..n {
            b[self.q[k]] = work[k];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        let mut work = vec![0.0; self.n];
        self.solve_in_place(&mut x, &mut work);
        x
    }
}
