//! One- and two-level Schwarz iterations in time: MSN, ASN, MSO, ASO.
//!
//! A sweep solves every time strip with interface data from the current
//! iterate (additive: all from the previous iterate; multiplicative: left to
//! right with the newest values). Two-level variants follow each sweep with
//! the Galerkin coarse correction.

mod probe;
mod subdomain;

pub use probe::{monotonicity_probe, ProbeRecord};
pub use subdomain::{build_subdomains, hybrid_operator, sweep_additive, sweep_multiplicative, SubdomainSystem};

use crate::discretize::{residual, BlockSystem};
use crate::error::{Error, Result};
use crate::linalg::{gmres, norm2, Identity, IterationReport, KrylovConfig, Preconditioner, Status};
use crate::partition::{build_coarse_space, partition_time, CoarseSolver, CoarseSpace, TimePartition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Msn,
    Asn,
    Mso,
    Aso,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Msn, Variant::Asn, Variant::Mso, Variant::Aso];

    pub fn is_additive(self) -> bool {
        matches!(self, Variant::Asn | Variant::Aso)
    }

    pub fn is_overlapping(self) -> bool {
        matches!(self, Variant::Mso | Variant::Aso)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Msn => "MSN",
            Variant::Asn => "ASN",
            Variant::Mso => "MSO",
            Variant::Aso => "ASO",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "msn" => Ok(Variant::Msn),
            "asn" => Ok(Variant::Asn),
            "mso" => Ok(Variant::Mso),
            "aso" => Ok(Variant::Aso),
            _ => Err(Error::InvalidConfig(format!("unknown variant {s:?}"))),
        }
    }
}

/// How a strip sees its neighbours.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalForm {
    /// Each strip repeats the global scheme on its window (BDF2 closures at
    /// both ends) and receives Y from the left neighbour and P from the right.
    /// Fixed point differs from the global solution by O(τ²).
    Closure,
    /// The strip keeps the exact rows of L; all entries reaching outside are
    /// couplings. Block Jacobi / Gauss–Seidel on L, fixed point is exact.
    Restricted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubdomainSolver {
    Direct,
    /// ILU(0)-BiCGStab to rel_tol 1e-8.
    IluBicgstab,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchwarzConfig {
    pub variant: Variant,
    pub levels: usize,
    pub k: usize,
    pub overlap: usize,
    pub rel_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub subdomain_solver: SubdomainSolver,
    pub coarse_solver: CoarseSolver,
    pub form: LocalForm,
    pub two_color: bool,
    /// Run independent strip solves on the rayon pool (needs the `parallel` feature).
    pub parallel: bool,
}

impl SchwarzConfig {
    /// Defaults: overlap 1 for overlapping variants, tolerance 1e-7, 500
    /// iterations, direct solves, closure form.
    pub fn new(variant: Variant, levels: usize, k: usize) -> Self {
        Self {
            variant,
            levels,
            k,
            overlap: usize::from(variant.is_overlapping()),
            rel_tol: 1e-7,
            max_iters: 500,
            seed: 0,
            subdomain_solver: SubdomainSolver::Direct,
            coarse_solver: CoarseSolver::Direct,
            form: LocalForm::Closure,
            two_color: false,
            parallel: true,
        }
    }

    /// Iterative local and coarse solves, as used for 2D problems.
    pub fn iterative(mut self) -> Self {
        self.subdomain_solver = SubdomainSolver::IluBicgstab;
        self.coarse_solver = CoarseSolver::IluBicgstab;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(1..=2).contains(&self.levels) {
            return bad(format!("levels must be 1 or 2, got {}", self.levels));
        }
        if self.k == 0 {
            return bad("K must be positive".into());
        }
        if self.variant.is_overlapping() && self.overlap == 0 {
            return bad(format!("{} needs an overlap of at least one step", self.variant));
        }
        if !self.variant.is_overlapping() && self.overlap != 0 {
            return bad(format!(
                "{} is nonoverlapping, got overlap {}",
                self.variant, self.overlap
            ));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 || self.max_iters == 0 {
            return bad("rel_tol and max_iters must be positive".into());
        }
        Ok(())
    }
}

/// Everything a sweep needs, built once per system and configuration.
#[derive(Debug)]
pub struct Schwarz<'a> {
    pub sys: &'a BlockSystem,
    pub cfg: SchwarzConfig,
    pub partition: TimePartition,
    pub subdomains: Vec<SubdomainSystem>,
    pub coarse: Option<CoarseSpace>,
}

impl<'a> Schwarz<'a> {
    pub fn new(sys: &'a BlockSystem, cfg: SchwarzConfig) -> Result<Self> {
        cfg.validate()?;
        let partition = partition_time(sys.grid.n, cfg.k, cfg.overlap)?;
        let subdomains = build_subdomains(sys, &partition, &cfg)?;
        let coarse = if cfg.levels == 2 {
            Some(build_coarse_space(&partition, sys, cfg.coarse_solver)?)
        } else {
            None
        };
        Ok(Self {
            sys,
            cfg,
            partition,
            subdomains,
            coarse,
        })
    }

    /// One sweep for L w = rhs, in place.
    pub fn sweep(&self, rhs: &[f64], w: &mut Vec<f64>) -> Result<()> {
        if self.cfg.variant.is_additive() {
            *w = sweep_additive(&self.subdomains, rhs, w, self.cfg.parallel)?;
        } else {
            sweep_multiplicative(&self.subdomains, rhs, w, self.cfg.two_color, self.cfg.parallel)?;
        }
        Ok(())
    }

    /// Sweep followed by the coarse correction when two-level. A failed
    /// coarse solve leaves the sweep result in place.
    pub fn iterate(&self, rhs: &[f64], w: &mut Vec<f64>) -> Result<()> {
        self.sweep(rhs, w)?;
        if let Some(cs) = &self.coarse {
            let before = w.clone();
            if let Err(Error::CoarseSolveFailed(_)) = cs.correct(&self.sys.l, rhs, w) {
                *w = before;
            }
        }
        Ok(())
    }

    /// The stand-alone iteration from a seeded uniform [0, 1) start.
    pub fn solve(&self) -> Result<(Vec<f64>, IterationReport)> {
        self.solve_from(random_guess(self.sys.dim(), self.cfg.seed), Some(self.cfg.seed))
    }

    pub fn solve_from(&self, mut w: Vec<f64>, seed: Option<u64>) -> Result<(Vec<f64>, IterationReport)> {
        let start = Instant::now();
        let r0 = norm2(&residual(self.sys, &w)?);
        let mut report = IterationReport {
            history: vec![1.0],
            initial_residual: r0,
            iterations: 0,
            status: Status::MaxIters,
            wall_seconds: 0.0,
            seed,
        };
        if r0 == 0.0 {
            report.history[0] = 0.0;
            report.status = Status::Converged;
            return Ok((w, report));
        }
        while report.iterations < self.cfg.max_iters {
            self.iterate(&self.sys.b, &mut w)?;
            report.iterations += 1;
            let rel = norm2(&residual(self.sys, &w)?) / r0;
            report.history.push(rel);
            if rel < self.cfg.rel_tol {
                report.status = Status::Converged;
                break;
            }
            if !rel.is_finite() || rel > 1e30 {
                break;
            }
        }
        report.wall_seconds = start.elapsed().as_secs_f64();
        if report.converged() {
            Ok((w, report))
        } else {
            Err(Error::MaxItersExceeded(Box::new(report)))
        }
    }

    pub fn preconditioner(&self) -> SchwarzPreconditioner<'_, 'a> {
        SchwarzPreconditioner { schwarz: self }
    }
}

/// Seeded uniform [0, 1) vector.
pub fn random_guess(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// Stand-alone Schwarz solve of `sys`.
pub fn solve_stationary(sys: &BlockSystem, cfg: &SchwarzConfig) -> Result<(Vec<f64>, IterationReport)> {
    Schwarz::new(sys, cfg.clone())?.solve()
}

/// z = one Schwarz iteration for L z = r started from z = 0. Linear in r when
/// local and coarse solves are direct.
#[derive(Clone, Copy, Debug)]
pub struct SchwarzPreconditioner<'s, 'a> {
    schwarz: &'s Schwarz<'a>,
}

impl Preconditioner for SchwarzPreconditioner<'_, '_> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let mut w = vec![0.0; r.len()];
        self.schwarz
            .iterate(r, &mut w)
            .unwrap_or_else(|e| panic!("Schwarz preconditioner failed: {e}"));
        z.copy_from_slice(&w);
    }
}

pub fn apply_preconditioner(schwarz: &Schwarz<'_>, r: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; r.len()];
    schwarz.preconditioner().apply(r, &mut z);
    z
}

/// GMRES on the full system from a seeded random start, optionally
/// right-preconditioned by a Schwarz iteration.
pub fn gmres_solve(
    sys: &BlockSystem,
    precond: Option<&Schwarz<'_>>,
    cfg: &KrylovConfig,
    seed: u64,
) -> Result<(Vec<f64>, IterationReport)> {
    let x0 = random_guess(sys.dim(), seed);
    let out = match precond {
        Some(s) => gmres(&sys.l, &s.preconditioner(), &sys.b, &x0, cfg),
        None => gmres(&sys.l, &Identity, &sys.b, &x0, cfg),
    };
    out.map(|(x, mut rep)| {
        rep.seed = Some(seed);
        (x, rep)
    })
}
