use super::{LocalForm, SchwarzConfig, SubdomainSolver};
use crate::discretize::{block_operator, laplacian, time_stencils, BlockSystem, Field};
use crate::error::{Error, Result};
use crate::linalg::{bicgstab, ilu0, lu_factor, Ilu0, KrylovConfig, LuFactorization, SparseMatrix, Triplets};
use crate::par;
use crate::partition::TimePartition;

#[derive(Clone, Debug)]
enum LocalSolver {
    Direct(LuFactorization),
    Iterative(Ilu0, KrylovConfig),
}

/// One time strip: its local operator, the couplings to levels outside the
/// strip (moved to the right-hand side each sweep) and its owned levels.
#[derive(Clone, Debug)]
pub struct SubdomainSystem {
    pub id: usize,
    /// extended window, inclusive
    pub lo: usize,
    pub hi: usize,
    /// owned window, inclusive
    pub own_lo: usize,
    pub own_hi: usize,
    pub local: SparseMatrix,
    /// (local row, global column, coefficient)
    pub couplings: Vec<(usize, usize, f64)>,
    spatial: usize,
    global_levels: usize,
    solver: LocalSolver,
}

impl SubdomainSystem {
    fn window_levels(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn dim(&self) -> usize {
        self.local.nrows()
    }

    /// Global index of local unknown `i`.
    pub fn global_index(&self, i: usize) -> usize {
        let blk = self.window_levels() * self.spatial;
        let (f, r) = (i / blk, i % blk);
        f * self.global_levels * self.spatial + (self.lo - 1) * self.spatial + r
    }

    /// Global indices of all local unknowns, in local order.
    pub fn global_indices(&self) -> Vec<usize> {
        (0..self.dim()).map(|i| self.global_index(i)).collect()
    }

    /// Local right-hand side: b restricted to the window minus the couplings
    /// evaluated on `w`.
    pub fn local_rhs(&self, b: &[f64], w: &[f64]) -> Vec<f64> {
        let s = self.spatial;
        let blk = self.window_levels() * s;
        let mut rhs = Vec::with_capacity(2 * blk);
        for f in 0..2 {
            let start = f * self.global_levels * s + (self.lo - 1) * s;
            rhs.extend_from_slice(&b[start..start + blk]);
        }
        for &(row, col, v) in &self.couplings {
            rhs[row] -= v * w[col];
        }
        rhs
    }

    /// Solves the local problem with interface data read from `w`.
    pub fn solve(&self, b: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let rhs = self.local_rhs(b, w);
        match &self.solver {
            LocalSolver::Direct(lu) => Ok(lu.solve(&rhs)),
            LocalSolver::Iterative(ilu, cfg) => {
                let x0 = self.restrict(w);
                match bicgstab(&self.local, ilu, &rhs, Some(&x0), cfg) {
                    Ok((x, _)) => Ok(x),
                    Err(Error::Breakdown { iterate, .. }) => Ok(iterate),
                    Err(e) => Err(Error::SubdomainSolveFailed {
                        id: self.id,
                        source: Box::new(e),
                    }),
                }
            }
        }
    }

    pub fn restrict(&self, w: &[f64]) -> Vec<f64> {
        let s = self.spatial;
        let blk = self.window_levels() * s;
        let mut out = Vec::with_capacity(2 * blk);
        for f in 0..2 {
            let start = f * self.global_levels * s + (self.lo - 1) * s;
            out.extend_from_slice(&w[start..start + blk]);
        }
        out
    }

    /// Copies the owned levels of a local solution into the global vector.
    pub fn write_owned(&self, x: &[f64], w: &mut [f64]) {
        let s = self.spatial;
        let blk = self.window_levels() * s;
        let len = (self.own_hi - self.own_lo + 1) * s;
        for f in 0..2 {
            let src = f * blk + (self.own_lo - self.lo) * s;
            let dst = f * self.global_levels * s + (self.own_lo - 1) * s;
            w[dst..dst + len].copy_from_slice(&x[src..src + len]);
        }
    }
}

/// Local matrix and (local row, global column, coefficient) couplings.
type LocalParts = (SparseMatrix, Vec<(usize, usize, f64)>);

fn restricted_local(sys: &BlockSystem, lo: usize, hi: usize) -> LocalParts {
    let mut rows: Vec<usize> = sys.range(Field::State, lo, hi).collect();
    rows.extend(sys.range(Field::Adjoint, lo, hi));
    let local = sys.l.submatrix(&rows, &rows);
    let inside =
        |c: usize| sys.range(Field::State, lo, hi).contains(&c) || sys.range(Field::Adjoint, lo, hi).contains(&c);
    let mut couplings = Vec::new();
    for (li, &g) in rows.iter().enumerate() {
        let (cols, vals) = sys.l.row(g);
        for (&c, &v) in cols.iter().zip(vals) {
            if !inside(c) {
                couplings.push((li, c, v));
            }
        }
    }
    (local, couplings)
}

/// The global scheme replayed on the window: BDF2 closures at the strip ends,
/// with only Y at the left virtual level and P at the right one taken from
/// the neighbours.
fn closure_local(sys: &BlockSystem, lo: usize, hi: usize) -> Result<LocalParts> {
    let nt = hi - lo + 1;
    if nt < 2 {
        return Err(Error::InvalidConfig(format!(
            "strip {lo}..={hi} is too short for the BDF2 closures"
        )));
    }
    let grid = &sys.grid;
    let (ta, td) = time_stencils(nt, grid.tau());
    let local = block_operator(&ta, &td, &laplacian(grid.dim, grid.m), sys.gamma);
    let s = sys.layout.s;
    let c = 0.5 / grid.tau();
    let mut couplings = Vec::new();
    if lo > 1 {
        for k in 0..s {
            couplings.push((k, sys.index(Field::State, lo - 1, k), c));
        }
    }
    if hi < sys.layout.nt {
        let base = nt * s + (nt - 1) * s;
        for k in 0..s {
            couplings.push((base + k, sys.index(Field::Adjoint, hi + 1, k), c));
        }
    }
    Ok((local, couplings))
}

pub fn build_subdomains(sys: &BlockSystem, part: &TimePartition, cfg: &SchwarzConfig) -> Result<Vec<SubdomainSystem>> {
    if part.levels != sys.layout.nt {
        return Err(Error::DimensionMismatch {
            expected: sys.layout.nt,
            found: part.levels,
        });
    }
    let build = |i: usize| -> Result<SubdomainSystem> {
        let (lo, hi) = part.extended[i];
        let (own_lo, own_hi) = part.owned[i];
        let (local, couplings) = match cfg.form {
            LocalForm::Restricted => restricted_local(sys, lo, hi),
            LocalForm::Closure => closure_local(sys, lo, hi)?,
        };
        let solver = match cfg.subdomain_solver {
            SubdomainSolver::Direct => LocalSolver::Direct(lu_factor(&local)?),
            SubdomainSolver::IluBicgstab => LocalSolver::Iterative(ilu0(&local)?, KrylovConfig::new(1e-8, 1000)),
        };
        Ok(SubdomainSystem {
            id: i,
            lo,
            hi,
            own_lo,
            own_hi,
            local,
            couplings,
            spatial: sys.layout.s,
            global_levels: sys.layout.nt,
            solver,
        })
    };
    par::map_indexed(part.k, cfg.parallel, build).into_iter().collect()
}

/// All strips read interface data from the same input `w`; each owned range
/// of the result comes from the strip that owns it.
pub fn sweep_additive(subs: &[SubdomainSystem], b: &[f64], w: &[f64], parallel: bool) -> Result<Vec<f64>> {
    let locals = par::map_indexed(subs.len(), parallel, |i| subs[i].solve(b, w));
    let mut out = w.to_vec();
    for (sub, x) in subs.iter().zip(locals) {
        sub.write_owned(&x?, &mut out);
    }
    Ok(out)
}

/// Strips in order, each reading the latest values. With `two_color`, even
/// then odd strip indices are solved as two additive groups.
pub fn sweep_multiplicative(
    subs: &[SubdomainSystem],
    b: &[f64],
    w: &mut [f64],
    two_color: bool,
    parallel: bool,
) -> Result<()> {
    if two_color {
        for color in 0..2 {
            let group: Vec<&SubdomainSystem> = subs.iter().filter(|s| s.id % 2 == color).collect();
            let locals = par::map_indexed(group.len(), parallel, |i| group[i].solve(b, w));
            for (sub, x) in group.iter().zip(locals) {
                sub.write_owned(&x?, w);
            }
        }
    } else {
        for sub in subs {
            let x = sub.solve(b, w)?;
            sub.write_owned(&x, w);
        }
    }
    Ok(())
}

/// Scatters local matrices and couplings of a nonoverlapping decomposition into
/// one global operator whose solution is the fixed point of the sweeps. For
/// the restricted form this reproduces L itself.
pub fn hybrid_operator(subs: &[SubdomainSystem], n: usize) -> Result<SparseMatrix> {
    let mut t = Triplets::new(n, n);
    for sub in subs {
        if (sub.lo, sub.hi) != (sub.own_lo, sub.own_hi) {
            return Err(Error::InvalidConfig(
                "hybrid operator needs a nonoverlapping decomposition".into(),
            ));
        }
        let g = sub.global_indices();
        for (i, j, v) in sub.local.triplets() {
            t.push(g[i], g[j], v);
        }
        for &(i, c, v) in &sub.couplings {
            t.push(g[i], c, v);
        }
    }
    t.build()
}
