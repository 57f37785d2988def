//! Space-time finite differences for the optimality system
//!
//! ```text
//!   −∂t y + Δy − p/γ = f,   y(0) = y0
//!    ∂t p + Δp + y   = g,   p(T) = 0
//! ```
//!
//! Leapfrog in time with one-sided BDF2 rows closing the state at t_{N−1} and
//! the adjoint at t_1. Unknowns are Y^1..Y^{N−1} and P^1..P^{N−1} on interior
//! spatial nodes, ordered field-major, then time, then space (x fastest).

use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, Triplets};
use std::io::Write;
use std::sync::Arc;

pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub dim: usize,
    /// spatial subdivisions per axis, h = 1/M
    pub m: usize,
    /// time subdivisions, τ = T/N
    pub n: usize,
    pub t_final: f64,
}

impl Grid {
    pub fn new(dim: usize, m: usize, n: usize, t_final: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not supported")));
        }
        if m < 3 || n < 5 {
            return Err(Error::InvalidGrid(format!(
                "need M >= 3 and N >= 5, got M = {m}, N = {n}"
            )));
        }
        if t_final.is_nan() || t_final <= 0.0 {
            return Err(Error::InvalidGrid(format!("final time {t_final} must be positive")));
        }
        Ok(Self { dim, m, n, t_final })
    }

    /// τ = h, i.e. N = T·M.
    pub fn matched(dim: usize, m: usize, t_final: f64) -> Result<Self> {
        Self::new(dim, m, (t_final * m as f64).round() as usize, t_final)
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.n as f64
    }

    /// Interior spatial nodes S = (M−1)^dim.
    pub fn spatial_count(&self) -> usize {
        (self.m - 1).pow(self.dim as u32)
    }

    /// Unknown time levels 1..N−1.
    pub fn time_levels(&self) -> usize {
        self.n - 1
    }

    pub fn unknowns(&self) -> usize {
        2 * self.time_levels() * self.spatial_count()
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau()
    }

    /// Coordinates of interior spatial node `s`.
    pub fn point(&self, s: usize) -> Vec<f64> {
        let h = self.h();
        let w = self.m - 1;
        match self.dim {
            1 => vec![(s + 1) as f64 * h],
            _ => vec![(s % w + 1) as f64 * h, (s / w + 1) as f64 * h],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    State = 0,
    Adjoint = 1,
}

/// Continuous problem data. `exact` holds (y, p) for manufactured cases.
#[derive(Clone)]
pub struct ProblemSpec {
    pub dim: usize,
    pub t_final: f64,
    pub gamma: f64,
    pub f: SpaceTimeFn,
    pub g: SpaceTimeFn,
    pub y0: SpaceFn,
    pub exact: Option<(SpaceTimeFn, SpaceTimeFn)>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("dim", &self.dim)
            .field("t_final", &self.t_final)
            .field("gamma", &self.gamma)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    /// f = g = y0 = 0.
    pub fn homogeneous(dim: usize, t_final: f64, gamma: f64) -> Self {
        let zero: SpaceTimeFn = Arc::new(|_, _| 0.0);
        Self {
            dim,
            t_final,
            gamma,
            f: zero.clone(),
            g: zero,
            y0: Arc::new(|_| 0.0),
            exact: None,
        }
    }
}

/// Unknown layout shared by every assembled operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    /// time levels in the block
    pub nt: usize,
    /// spatial nodes per level
    pub s: usize,
}

impl Layout {
    #[inline]
    pub fn index(&self, field: Field, level: usize, node: usize) -> usize {
        debug_assert!(level >= 1 && level <= self.nt && node < self.s);
        (field as usize) * self.nt * self.s + (level - 1) * self.s + node
    }

    pub fn len(&self) -> usize {
        2 * self.nt * self.s
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Inverse of `index`.
    pub fn locate(&self, idx: usize) -> (Field, usize, usize) {
        let block = self.nt * self.s;
        let field = if idx < block { Field::State } else { Field::Adjoint };
        let r = idx % block;
        (field, r / self.s + 1, r % self.s)
    }
}

/// Assembled discrete system L w = b.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub grid: Grid,
    pub gamma: f64,
    pub layout: Layout,
    pub l: SparseMatrix,
    pub b: Vec<f64>,
}

impl BlockSystem {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn index(&self, field: Field, level: usize, node: usize) -> usize {
        self.layout.index(field, level, node)
    }

    /// Contiguous global range of one field at levels `lo..=hi`.
    pub fn range(&self, field: Field, lo: usize, hi: usize) -> std::ops::Range<usize> {
        self.index(field, lo, 0)..self.index(field, hi, self.layout.s - 1) + 1
    }
}

/// Dirichlet Laplacian on the (M−1)^dim interior nodes, scaled by 1/h².
pub fn laplacian(dim: usize, m: usize) -> SparseMatrix {
    let w = m - 1;
    let h2 = (m * m) as f64;
    let mut t = Triplets::new(w, w);
    for i in 0..w {
        t.push(i, i, -2.0 * h2);
        if i > 0 {
            t.push(i, i - 1, h2);
        }
        if i + 1 < w {
            t.push(i, i + 1, h2);
        }
    }
    let t1 = t.build().expect("in range");
    match dim {
        1 => t1,
        2 => {
            let id = SparseMatrix::identity(w);
            let a = id.kron(&t1);
            let b = t1.kron(&id);
            let mut t = Triplets::new(a.nrows(), a.ncols());
            for (i, j, v) in a.triplets().chain(b.triplets()) {
                t.push(i, j, v);
            }
            t.build().expect("in range")
        }
        _ => panic!("laplacian: dimension {dim} not supported"),
    }
}

/// Temporal stencils over a window of `nt` consecutive levels, closed the way
/// the global scheme is closed: BDF2 on the last state row and on the first
/// adjoint row. Couplings to levels outside the window are left out.
///
/// Returns (state, adjoint) as `nt × nt` matrices in units of 1.
pub fn time_stencils(nt: usize, tau: f64) -> (SparseMatrix, SparseMatrix) {
    assert!(nt >= 2, "a window needs at least two time levels");
    let c = 0.5 / tau;
    let mut a = Triplets::new(nt, nt);
    let mut d = Triplets::new(nt, nt);
    for n in 0..nt - 1 {
        if n > 0 {
            a.push(n, n - 1, c);
        }
        a.push(n, n + 1, -c);
    }
    let last = nt - 1;
    if nt >= 3 {
        a.push(last, last - 2, -c);
    }
    a.push(last, last - 1, 4.0 * c);
    a.push(last, last, -3.0 * c);

    d.push(0, 0, -3.0 * c);
    d.push(0, 1, 4.0 * c);
    if nt >= 3 {
        d.push(0, 2, -c);
    }
    for n in 1..nt {
        d.push(n, n - 1, -c);
        if n + 1 < nt {
            d.push(n, n + 1, c);
        }
    }
    (a.build().expect("in range"), d.build().expect("in range"))
}

/// [A, −I/γ; I, D] for a window of `nt` levels with the given temporal stencils.
pub fn block_operator(time_a: &SparseMatrix, time_d: &SparseMatrix, lap: &SparseMatrix, gamma: f64) -> SparseMatrix {
    let nt = time_a.nrows();
    let s = lap.nrows();
    let blk = nt * s;
    let id_t = SparseMatrix::identity(nt);
    let id_s = SparseMatrix::identity(s);
    let mut t = Triplets::with_capacity(2 * blk, 2 * blk, 2 * nt * (lap.nnz() + 3 * s) + 2 * blk);
    for (k, tm) in [time_a, time_d].into_iter().enumerate() {
        let off = k * blk;
        for (i, j, v) in id_t.kron(lap).triplets().chain(tm.kron(&id_s).triplets()) {
            t.push(off + i, off + j, v);
        }
    }
    for i in 0..blk {
        t.push(i, blk + i, -1.0 / gamma);
        t.push(blk + i, i, 1.0);
    }
    t.build().expect("in range")
}

pub fn assemble_system(spec: &ProblemSpec, grid: &Grid) -> Result<BlockSystem> {
    let grid = Grid::new(grid.dim, grid.m, grid.n, grid.t_final)?;
    if spec.dim != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: grid.dim,
            found: spec.dim,
        });
    }
    if spec.gamma.is_nan() || spec.gamma <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "gamma must be positive, got {}",
            spec.gamma
        )));
    }
    let nt = grid.time_levels();
    let s = grid.spatial_count();
    let layout = Layout { nt, s };
    let lap = laplacian(grid.dim, grid.m);
    let (ta, td) = time_stencils(nt, grid.tau());
    let l = block_operator(&ta, &td, &lap, spec.gamma);

    let mut b = vec![0.0; layout.len()];
    let points: Vec<Vec<f64>> = (0..s).map(|k| grid.point(k)).collect();
    for n in 1..=nt {
        let t = grid.time(n);
        for (k, x) in points.iter().enumerate() {
            b[layout.index(Field::State, n, k)] = (spec.f)(x, t);
            b[layout.index(Field::Adjoint, n, k)] = (spec.g)(x, t);
        }
    }
    // known Y^0 moves to the right-hand side of the first state row
    let c = 0.5 / grid.tau();
    for (k, x) in points.iter().enumerate() {
        b[layout.index(Field::State, 1, k)] -= c * (spec.y0)(x);
    }
    Ok(BlockSystem {
        grid,
        gamma: spec.gamma,
        layout,
        l,
        b,
    })
}

/// b − L w
pub fn residual(sys: &BlockSystem, w: &[f64]) -> Result<Vec<f64>> {
    if w.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: w.len(),
        });
    }
    let mut r = sys.l.mul_vec(w);
    r.iter_mut().zip(&sys.b).for_each(|(ri, bi)| *ri = bi - *ri);
    Ok(r)
}

/// u = p/γ on every adjoint unknown.
pub fn extract_control(sys: &BlockSystem, w: &[f64]) -> Vec<f64> {
    let half = sys.dim() / 2;
    w[half..].iter().map(|p| p / sys.gamma).collect()
}

/// Writes "row col value" lines after a one-line JSON-style header.
pub fn dump_triplets<W: Write>(sys: &BlockSystem, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "{{\"dim\": {}, \"M\": {}, \"N\": {}, \"gamma\": {:e}, \"rows\": {}, \"nnz\": {}}}",
        sys.grid.dim,
        sys.grid.m,
        sys.grid.n,
        sys.gamma,
        sys.l.nrows(),
        sys.l.nnz()
    )?;
    for (i, j, v) in sys.l.triplets() {
        writeln!(out, "{i} {j} {v:e}")?;
    }
    Ok(())
}
