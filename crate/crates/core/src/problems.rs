//! Manufactured test cases with closed-form (y, p).

use crate::discretize::{BlockSystem, Field, Grid, ProblemSpec, SpaceTimeFn};
use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct ManufacturedCase {
    pub name: &'static str,
    pub spec: ProblemSpec,
}

impl ManufacturedCase {
    fn exact(&self) -> &(SpaceTimeFn, SpaceTimeFn) {
        self.spec
            .exact
            .as_ref()
            .expect("manufactured cases carry their solution")
    }

    pub fn exact_y(&self, x: &[f64], t: f64) -> f64 {
        (self.exact().0)(x, t)
    }

    pub fn exact_p(&self, x: &[f64], t: f64) -> f64 {
        (self.exact().1)(x, t)
    }

    pub fn grid(&self, m: usize, n: usize) -> Result<Grid> {
        Grid::new(self.spec.dim, m, n, self.spec.t_final)
    }

    /// Same solution with another γ; f is re-derived since it contains p/γ.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        build(self.name, self.spec.dim, gamma)
    }
}

/// y = cos(πt)·s(x), p = sin(πt)·s(x) with s a product of sines, so Δs = −dπ²s.
fn build(name: &'static str, dim: usize, gamma: f64) -> ManufacturedCase {
    let shape = move |x: &[f64]| x[..dim].iter().map(|xi| (PI * xi).sin()).product::<f64>();
    let lam = dim as f64 * PI * PI;
    let f: SpaceTimeFn = Arc::new(move |x, t| {
        let s = shape(x);
        PI * (PI * t).sin() * s - lam * (PI * t).cos() * s - (PI * t).sin() * s / gamma
    });
    let g: SpaceTimeFn = Arc::new(move |x, t| {
        let s = shape(x);
        PI * (PI * t).cos() * s - lam * (PI * t).sin() * s + (PI * t).cos() * s
    });
    let y: SpaceTimeFn = Arc::new(move |x, t| (PI * t).cos() * shape(x));
    let p: SpaceTimeFn = Arc::new(move |x, t| (PI * t).sin() * shape(x));
    ManufacturedCase {
        name,
        spec: ProblemSpec {
            dim,
            t_final: 4.0,
            gamma,
            f,
            g,
            y0: Arc::new(shape),
            exact: Some((y, p)),
        },
    }
}

/// Ω = (0,1), T = 4, γ = 1e-2.
pub fn example1() -> ManufacturedCase {
    build("example1", 1, 1e-2)
}

/// Ω = (0,1)², T = 4, γ = 1e-2.
pub fn example2() -> ManufacturedCase {
    build("example2", 2, 1e-2)
}

/// Exact (y, p) sampled at the unknowns of `grid` in system ordering.
pub fn sample_exact(case: &ManufacturedCase, grid: &Grid) -> Vec<f64> {
    let layout = crate::discretize::Layout {
        nt: grid.time_levels(),
        s: grid.spatial_count(),
    };
    let mut w = vec![0.0; layout.len()];
    for k in 0..layout.s {
        let x = grid.point(k);
        for n in 1..=layout.nt {
            let t = grid.time(n);
            w[layout.index(Field::State, n, k)] = case.exact_y(&x, t);
            w[layout.index(Field::Adjoint, n, k)] = case.exact_p(&x, t);
        }
    }
    w
}

/// Discrete max-norm errors (y, p) against the exact solution.
pub fn error_norms(case: &ManufacturedCase, sys: &BlockSystem, w: &[f64]) -> Result<(f64, f64)> {
    if w.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: w.len(),
        });
    }
    let exact = sample_exact(case, &sys.grid);
    let half = w.len() / 2;
    let maxdiff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    Ok((maxdiff(&w[..half], &exact[..half]), maxdiff(&w[half..], &exact[half..])))
}
