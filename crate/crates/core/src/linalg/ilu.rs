use super::{Preconditioner, SparseMatrix};
use crate::error::{Error, Result};

/// ILU(0): L and U share the sparsity pattern of A (L unit, stored strictly below
/// the diagonal; U on and above it).
#[derive(Clone, Debug)]
pub struct Ilu0 {
    lu: SparseMatrix,
    diag: Vec<usize>,
}

pub fn ilu0(a: &SparseMatrix) -> Result<Ilu0> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    let indptr = a.indptr().to_vec();
    let indices = a.indices().to_vec();
    let mut vals = a.values().to_vec();
    let mut diag = vec![usize::MAX; n];
    for i in 0..n {
        if let Ok(p) = indices[indptr[i]..indptr[i + 1]].binary_search(&i) {
            diag[i] = indptr[i] + p;
        } else {
            return Err(Error::ZeroPivot { row: i });
        }
    }
    let tiny = 1e-300_f64.max(f64::EPSILON * a.max_abs() * 1e-6);
    let mut pos = vec![usize::MAX; n];
    for i in 0..n {
        let (s, e) = (indptr[i], indptr[i + 1]);
        for p in s..e {
            pos[indices[p]] = p;
        }
        for p in s..diag[i] {
            let k = indices[p];
            let lik = vals[p] / vals[diag[k]];
            vals[p] = lik;
            for q in diag[k] + 1..indptr[k + 1] {
                let j = indices[q];
                if pos[j] != usize::MAX {
                    vals[pos[j]] -= lik * vals[q];
                }
            }
        }
        if vals[diag[i]].abs() <= tiny {
            return Err(Error::ZeroPivot { row: i });
        }
        for p in s..e {
            pos[indices[p]] = usize::MAX;
        }
    }
    let lu = SparseMatrix::from_csr_unchecked(n, n, indptr, indices, vals);
    Ok(Ilu0 { lu, diag })
}

impl Ilu0 {
    pub fn factors(&self) -> &SparseMatrix {
        &self.lu
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (ptr, idx, val) = (self.lu.indptr(), self.lu.indices(), self.lu.values());
        let n = x.len();
        for i in 0..n {
            let mut s = x[i];
            for p in ptr[i]..self.diag[i] {
                s -= val[p] * x[idx[p]];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in self.diag[i] + 1..ptr[i + 1] {
                s -= val[p] * x[idx[p]];
            }
            x[i] = s / val[self.diag[i]];
        }
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        self.solve_in_place(z);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lu_factor;

    #[test]
    fn diagonal_is_exact() {
        let a = SparseMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let f = ilu0(&a).unwrap();
        assert_eq!(f.factors(), &a);
        let mut z = vec![0.0; 2];
        f.apply(&[2.0, 2.0], &mut z);
        assert_eq!(z, vec![1.0, 0.5]);
    }

    #[test]
    fn tridiagonal_equals_full_lu() {
        let a = crate::discretize::laplacian(1, 12);
        let b: Vec<f64> = (0..a.nrows()).map(|i| (i as f64).sin()).collect();
        let mut z = vec![0.0; b.len()];
        ilu0(&a).unwrap().apply(&b, &mut z);
        let x = lu_factor(&a).unwrap().solve(&b);
        for (u, v) in z.iter().zip(&x) {
            assert!((u - v).abs() <= 1e-12 * v.abs().max(1e-3));
        }
    }

    #[test]
    fn missing_diagonal_is_zero_pivot() {
        let a = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(ilu0(&a), Err(Error::ZeroPivot { row: 0 })));
    }
}
