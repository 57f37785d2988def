use super::{hybrid_operator, random_guess, Schwarz, SchwarzConfig};
use crate::discretize::{residual, BlockSystem, Field};
use crate::error::{Error, Result};
use crate::linalg::{lu_factor, norm2};

/// Interface quantities for two strips meeting between levels T₁ and T₁+1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRecord {
    pub iteration: usize,
    /// γ‖e_y(T₁)‖² + ‖e_p(T₁+1)‖²
    pub m_asn: f64,
    /// ‖e_p(T₁+1)‖²
    pub m_msn: f64,
    pub rel_residual: f64,
}

/// Runs a one-level K = 2 nonoverlapping iteration and records the interface
/// error energies against the fixed point of the same decomposition (the
/// direct solve of L for the restricted form).
pub fn monotonicity_probe(sys: &BlockSystem, cfg: &SchwarzConfig, iterations: usize) -> Result<Vec<ProbeRecord>> {
    if cfg.k != 2 || cfg.variant.is_overlapping() {
        return Err(Error::RequiresTwoSubdomains);
    }
    let mut cfg = cfg.clone();
    cfg.levels = 1;
    let schwarz = Schwarz::new(sys, cfg)?;
    let fixed = hybrid_operator(&schwarz.subdomains, sys.dim())?;
    let reference = lu_factor(&fixed)?.solve(&sys.b);

    let t1 = schwarz.partition.owned[0].1;
    let s = sys.layout.s;
    let weight = sys.grid.h().powi(sys.grid.dim as i32);
    let energy = |w: &[f64], field: Field, level: usize| -> f64 {
        let start = sys.index(field, level, 0);
        (start..start + s).map(|i| (w[i] - reference[i]).powi(2)).sum::<f64>() * weight
    };
    let mut w = random_guess(sys.dim(), schwarz.cfg.seed);
    let r0 = norm2(&residual(sys, &w)?);
    let mut out = Vec::with_capacity(iterations + 1);
    for it in 0..=iterations {
        if it > 0 {
            schwarz.iterate(&sys.b, &mut w)?;
        }
        let ey = energy(&w, Field::State, t1);
        let ep = energy(&w, Field::Adjoint, t1 + 1);
        out.push(ProbeRecord {
            iteration: it,
            m_asn: sys.gamma * ey + ep,
            m_msn: ep,
            rel_residual: norm2(&residual(sys, &w)?) / r0,
        });
    }
    Ok(out)
}
