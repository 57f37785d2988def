use super::{axpy, dot, norm2, LinearOperator, Preconditioner};
use crate::error::{Error, Result};
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIters,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIters => "max_iters",
        }
    }
}

/// Residual history and bookkeeping of one iterative solve.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationReport {
    /// ‖r_k‖ / ‖r_0‖, starting with the initial guess.
    pub history: Vec<f64>,
    pub initial_residual: f64,
    pub iterations: usize,
    pub status: Status,
    pub wall_seconds: f64,
    /// Seed of the random initial guess, when there was one.
    pub seed: Option<u64>,
}

impl IterationReport {
    pub fn final_relative(&self) -> f64 {
        *self.history.last().unwrap_or(&0.0)
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn absolute_history(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.iter().map(move |r| r * self.initial_residual)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovConfig {
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Restart length; `None` runs full GMRES.
    pub restart: Option<usize>,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-7,
            max_iters: 500,
            restart: None,
        }
    }
}

impl KrylovConfig {
    pub fn new(rel_tol: f64, max_iters: usize) -> Self {
        Self {
            rel_tol,
            max_iters,
            restart: None,
        }
    }

    /// Settings used for coarse solves: 1e-4, at most 200 iterations.
    pub fn coarse() -> Self {
        Self::new(1e-4, 200)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 || self.max_iters == 0 || self.restart == Some(0) {
            return Err(Error::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

fn residual(a: &dyn LinearOperator, b: &[f64], x: &[f64], r: &mut [f64]) {
    a.apply(x, r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
}

fn check_dims(a: &dyn LinearOperator, b: &[f64], x0: &[f64]) -> Result<()> {
    let n = a.dim();
    for len in [b.len(), x0.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    Ok(())
}

/// Right-preconditioned GMRES: minimizes ‖b − A x‖ over x0 + M·K_k(A M, r0).
///
/// The history holds the Arnoldi residual estimate, which equals the true
/// residual for right preconditioning; the final entry is recomputed from x.
pub fn gmres(
    a: &dyn LinearOperator,
    m: &dyn Preconditioner,
    b: &[f64],
    x0: &[f64],
    cfg: &KrylovConfig,
) -> Result<(Vec<f64>, IterationReport)> {
    cfg.validate()?;
    check_dims(a, b, x0)?;
    let start = Instant::now();
    let n = b.len();
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    residual(a, b, &x, &mut r);
    let beta0 = norm2(&r);
    let mut report = IterationReport {
        history: vec![1.0],
        initial_residual: beta0,
        iterations: 0,
        status: Status::Converged,
        wall_seconds: 0.0,
        seed: None,
    };
    if beta0 == 0.0 {
        report.history[0] = 0.0;
        return Ok((x, report));
    }
    let cycle = cfg.restart.unwrap_or(cfg.max_iters).min(cfg.max_iters);
    let mut z = vec![0.0; n];
    loop {
        let beta = norm2(&r);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        let mut breakdown = false;
        for j in 0..cycle {
            m.apply(&v[j], &mut z);
            let mut w = vec![0.0; n];
            a.apply(&z, &mut w);
            let before = norm2(&w);
            let mut hj = vec![0.0; j + 2];
            for (i, vi) in v.iter().enumerate() {
                let c = dot(&w, vi);
                hj[i] = c;
                axpy(-c, vi, &mut w);
            }
            let mut hn = norm2(&w);
            if hn < 0.7 * before {
                for (i, vi) in v.iter().enumerate() {
                    let c = dot(&w, vi);
                    hj[i] += c;
                    axpy(-c, vi, &mut w);
                }
                hn = norm2(&w);
            }
            for i in 0..j {
                let t = cs[i] * hj[i] + sn[i] * hj[i + 1];
                hj[i + 1] = -sn[i] * hj[i] + cs[i] * hj[i + 1];
                hj[i] = t;
            }
            let d = hj[j].hypot(hn);
            let (c, s) = if d == 0.0 { (1.0, 0.0) } else { (hj[j] / d, hn / d) };
            cs.push(c);
            sn.push(s);
            hj[j] = d;
            hj[j + 1] = 0.0;
            g.push(-s * g[j]);
            g[j] *= c;
            h.push(hj);
            report.iterations += 1;
            let rel = g[j + 1].abs() / beta0;
            report.history.push(rel);
            if rel < cfg.rel_tol {
                break;
            }
            if hn <= f64::EPSILON * before.max(f64::MIN_POSITIVE) {
                breakdown = true;
                break;
            }
            if report.iterations >= cfg.max_iters {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        // y = H⁻¹ g, then x += M (V y)
        let k = h.len();
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|l| h[l][i] * y[l]).sum();
            y[i] = if h[i][i] != 0.0 { (g[i] - s) / h[i][i] } else { 0.0 };
        }
        let mut u = vec![0.0; n];
        for (vi, yi) in v.iter().zip(&y) {
            axpy(*yi, vi, &mut u);
        }
        m.apply(&u, &mut z);
        axpy(1.0, &z, &mut x);
        residual(a, b, &x, &mut r);
        let true_rel = norm2(&r) / beta0;
        *report.history.last_mut().unwrap() = true_rel;
        report.wall_seconds = start.elapsed().as_secs_f64();
        if true_rel < cfg.rel_tol {
            report.status = Status::Converged;
            return Ok((x, report));
        }
        if breakdown {
            return Err(Error::Breakdown {
                solver: "gmres",
                iterate: x,
                report: Box::new(report),
            });
        }
        if report.iterations >= cfg.max_iters {
            report.status = Status::MaxIters;
            return Ok((x, report));
        }
        // not done: restart the Arnoldi process from the current iterate
    }
}

/// BiCGStab with right preconditioning. Starts from `x0` or zero.
pub fn bicgstab(
    a: &dyn LinearOperator,
    m: &dyn Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &KrylovConfig,
) -> Result<(Vec<f64>, IterationReport)> {
    cfg.validate()?;
    let n = b.len();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    check_dims(a, b, &x)?;
    let start = Instant::now();
    let mut r = vec![0.0; n];
    residual(a, b, &x, &mut r);
    let r0 = norm2(&r);
    let mut report = IterationReport {
        history: vec![1.0],
        initial_residual: r0,
        iterations: 0,
        status: Status::Converged,
        wall_seconds: 0.0,
        seed: None,
    };
    if r0 == 0.0 {
        report.history[0] = 0.0;
        return Ok((x, report));
    }
    let rhat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0f64, 1.0f64, 1.0f64);
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut best = (1.0, x.clone());
    let breakdown = |x: Vec<f64>, mut report: IterationReport| {
        report.wall_seconds = start.elapsed().as_secs_f64();
        Err(Error::Breakdown {
            solver: "bicgstab",
            iterate: x,
            report: Box::new(report),
        })
    };
    while report.iterations < cfg.max_iters {
        let rho_new = dot(&rhat, &r);
        if rho_new.abs() < 1e-300 || omega == 0.0 {
            return breakdown(best.1, report);
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        m.apply(&p, &mut phat);
        a.apply(&phat, &mut v);
        let rv = dot(&rhat, &v);
        if rv == 0.0 {
            return breakdown(best.1, report);
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        report.iterations += 1;
        if norm2(&s) / r0 < cfg.rel_tol {
            axpy(alpha, &phat, &mut x);
            residual(a, b, &x, &mut r);
            let rel = norm2(&r) / r0;
            report.history.push(rel);
            if rel < cfg.rel_tol {
                report.wall_seconds = start.elapsed().as_secs_f64();
                return Ok((x, report));
            }
            continue;
        }
        m.apply(&s, &mut shat);
        a.apply(&shat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt == 0.0 { 0.0 } else { dot(&t, &s) / tt };
        axpy(alpha, &phat, &mut x);
        axpy(omega, &shat, &mut x);
        for i in 0..n {
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm2(&r) / r0;
        report.history.push(rel);
        if rel < best.0 {
            best = (rel, x.clone());
        }
        if rel < cfg.rel_tol {
            residual(a, b, &x, &mut r);
            let true_rel = norm2(&r) / r0;
            *report.history.last_mut().unwrap() = true_rel;
            if true_rel < cfg.rel_tol {
                report.wall_seconds = start.elapsed().as_secs_f64();
                return Ok((x, report));
            }
        }
    }
    residual(a, b, &x, &mut r);
    *report.history.last_mut().unwrap() = norm2(&r) / r0;
    report.status = Status::MaxIters;
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok((x, report))
}
