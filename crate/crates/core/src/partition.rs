//! Strip decomposition of the interior time levels and the interface coarse space.
//!
//! Levels are 1-based, 1..=N−1. With `m = (N−1)/K` the base blocks are
//! `[i·m+1, (i+1)·m]`. An overlap of `ov` steps widens block i to
//! `[s−2ov, e+ov]`, and ownership shifts left by `ov` at every interior
//! interface so each owned range sits inside its extended range with the
//! interface levels of both neighbours available.

use crate::discretize::BlockSystem;
use crate::error::{Error, Result};
use crate::linalg::{bicgstab, ilu0, lu_factor, Ilu0, KrylovConfig, LuFactorization, SparseMatrix, Triplets};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimePartition {
    /// interior time levels, N − 1
    pub levels: usize,
    pub k: usize,
    pub overlap: usize,
    /// inclusive ranges
    pub owned: Vec<(usize, usize)>,
    pub extended: Vec<(usize, usize)>,
    pub virtual_left: Vec<Option<usize>>,
    pub virtual_right: Vec<Option<usize>>,
}

impl TimePartition {
    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }
}

pub fn partition_time(n: usize, k: usize, overlap: usize) -> Result<TimePartition> {
    if n < 2 || k == 0 {
        return Err(Error::InvalidConfig(format!(
            "cannot split N = {n} into K = {k} subdomains"
        )));
    }
    let levels = n - 1;
    if !levels.is_multiple_of(k) {
        return Err(Error::IndivisibleGrid { interior: levels, k });
    }
    let m = levels / k;
    if k > 1 && m <= 2 * overlap {
        return Err(Error::OverlapTooLarge { overlap, size: m });
    }
    let mut part = TimePartition {
        levels,
        k,
        overlap,
        owned: Vec::with_capacity(k),
        extended: Vec::with_capacity(k),
        virtual_left: Vec::with_capacity(k),
        virtual_right: Vec::with_capacity(k),
    };
    for i in 0..k {
        let (s, e) = (i * m + 1, (i + 1) * m);
        let lo = s.saturating_sub(2 * overlap).max(1);
        let hi = (e + overlap).min(levels);
        let own_lo = if i == 0 { 1 } else { s - overlap };
        let own_hi = if i + 1 == k { levels } else { e - overlap };
        part.owned.push((own_lo, own_hi));
        part.extended.push((lo, hi));
        part.virtual_left.push((lo > 1).then(|| lo - 1));
        part.virtual_right.push((hi < levels).then(|| hi + 1));
    }
    Ok(part)
}

/// Interface nodes: the two owned levels meeting at each interface, plus the
/// first and last interior levels.
pub fn select_coarse_nodes(part: &TimePartition) -> Vec<usize> {
    let mut nodes = vec![1, part.levels];
    for w in part.owned.windows(2) {
        nodes.push(w[0].1);
        nodes.push(w[1].0);
    }
    nodes.sort_unstable();
    nodes.dedup();
    nodes
}

/// Temporal extension (levels × coarse nodes): linear interpolation between
/// bracketing coarse nodes, constant outside their hull.
pub fn build_extension(coarse_nodes: &[usize], levels: usize) -> SparseMatrix {
    assert!(!coarse_nodes.is_empty());
    let nc = coarse_nodes.len();
    let mut t = Triplets::new(levels, nc);
    let mut j = 0;
    for n in 1..=levels {
        while j + 1 < nc && coarse_nodes[j + 1] <= n {
            j += 1;
        }
        let cj = coarse_nodes[j];
        if n <= coarse_nodes[0] {
            t.push(n - 1, 0, 1.0);
        } else if n == cj || j + 1 == nc {
            t.push(n - 1, j, 1.0);
        } else {
            let cn = coarse_nodes[j + 1];
            let d = (cn - cj) as f64;
            t.push(n - 1, j, (cn - n) as f64 / d);
            t.push(n - 1, j + 1, (n - cj) as f64 / d);
        }
    }
    t.build().expect("in range")
}

/// Rows of Eᵀ scaled to sum to one.
pub fn row_normalized_transpose(e: &SparseMatrix) -> SparseMatrix {
    let et = e.transpose();
    let mut t = Triplets::with_capacity(et.nrows(), et.ncols(), et.nnz());
    for i in 0..et.nrows() {
        let (cols, vals) = et.row(i);
        let sum: f64 = vals.iter().sum();
        for (&j, &v) in cols.iter().zip(vals) {
            t.push(i, j, v / sum);
        }
    }
    t.build().expect("in range")
}

/// Replicates a temporal operator over spatial nodes and both fields.
pub fn tensorize(time_op: &SparseMatrix, spatial: usize) -> SparseMatrix {
    SparseMatrix::identity(2).kron(&time_op.kron(&SparseMatrix::identity(spatial)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoarseSolver {
    Direct,
    /// ILU(0)-preconditioned BiCGStab at rel_tol 1e-4, at most 200 iterations.
    IluBicgstab,
}

#[derive(Clone, Debug)]
enum CoarseFactor {
    Direct(LuFactorization),
    Iterative(Ilu0, KrylovConfig),
}

#[derive(Clone, Debug)]
pub struct CoarseSpace {
    pub coarse_nodes: Vec<usize>,
    pub e_time: SparseMatrix,
    pub r_time: SparseMatrix,
    pub e: SparseMatrix,
    pub r: SparseMatrix,
    pub lc: SparseMatrix,
    factor: CoarseFactor,
}

pub fn build_coarse_space(part: &TimePartition, sys: &BlockSystem, solver: CoarseSolver) -> Result<CoarseSpace> {
    if part.levels != sys.layout.nt {
        return Err(Error::DimensionMismatch {
            expected: sys.layout.nt,
            found: part.levels,
        });
    }
    let coarse_nodes = select_coarse_nodes(part);
    let e_time = build_extension(&coarse_nodes, part.levels);
    let r_time = row_normalized_transpose(&e_time);
    let e = tensorize(&e_time, sys.layout.s);
    let r = tensorize(&r_time, sys.layout.s);
    let lc = r.matmul(&sys.l.matmul(&e)?)?;
    let factor = match solver {
        CoarseSolver::Direct => CoarseFactor::Direct(lu_factor(&lc)?),
        CoarseSolver::IluBicgstab => CoarseFactor::Iterative(ilu0(&lc)?, KrylovConfig::coarse()),
    };
    Ok(CoarseSpace {
        coarse_nodes,
        e_time,
        r_time,
        e,
        r,
        lc,
        factor,
    })
}

impl CoarseSpace {
    pub fn dim(&self) -> usize {
        self.lc.nrows()
    }

    /// z ≈ Lc⁻¹ rc
    pub fn solve(&self, rc: &[f64]) -> Result<Vec<f64>> {
        match &self.factor {
            CoarseFactor::Direct(lu) => Ok(lu.solve(rc)),
            CoarseFactor::Iterative(ilu, cfg) => match bicgstab(&self.lc, ilu, rc, None, cfg) {
                Ok((z, _)) => Ok(z),
                Err(e) => Err(Error::CoarseSolveFailed(Box::new(e))),
            },
        }
    }

    /// w ← w + E·Lc⁻¹·R·(b − L w)
    pub fn correct(&self, l: &SparseMatrix, b: &[f64], w: &mut [f64]) -> Result<()> {
        let mut r = l.mul_vec(w);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        let z = self.solve(&self.r.mul_vec(&r))?;
        let ez = self.e.mul_vec(&z);
        w.iter_mut().zip(&ez).for_each(|(wi, d)| *wi += d);
        Ok(())
    }
}

/// Two-level correction of `w1` for the system itself.
pub fn coarse_correct(sys: &BlockSystem, cs: &CoarseSpace, w1: &[f64]) -> Result<Vec<f64>> {
    let mut w = w1.to_vec();
    cs.correct(&sys.l, &sys.b, &mut w)?;
    Ok(w)
}
