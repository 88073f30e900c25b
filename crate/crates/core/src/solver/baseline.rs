//! Comparison methods: HSDM, HCGM, scaled-form ADMM, the Condat primal-dual
//! method, Chambolle-Pock and FISTA.
//!
//! The constraint `x in Fix T` enters ADMM, the primal-dual methods and FISTA
//! through the projection `P_{Fix T}`, so those require `T` to be a projection.
//! ADMM and Chambolle-Pock handle the whole objective through the prox of `g`
//! and therefore require `f = 0` (absorb `f` into `g` first).

use super::trace::{Recorder, SolverTrace};
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::Problem;

fn require_projection(problem: &Problem, method: &str) -> Result<()> {
    if problem.constraint().is_projection() {
        Ok(())
    } else {
        Err(Error::UnsupportedProblem(format!(
            "{method} needs a constraint map that is a projection"
        )))
    }
}

fn require_zero_smooth(problem: &Problem, method: &str) -> Result<()> {
    if problem.smooth().is_zero() {
        Ok(())
    } else {
        Err(Error::UnsupportedProblem(format!(
            "{method} needs the smooth term absorbed into the prox term"
        )))
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(name, v, "> 0"))
    }
}

/// `T' = T` when `g = 0`, else `prox_g o T` for a `g` whose prox ignores the step.
fn composite_map<'a>(problem: &'a Problem, method: &str) -> Result<impl Fn(&[f64], &mut [f64], &mut [f64]) + 'a> {
    let prox = problem.prox();
    if !prox.is_zero() && !prox.is_lambda_invariant() {
        return Err(Error::UnsupportedProblem(format!(
            "{method} folds g into the constraint map and needs g to be an indicator"
        )));
    }
    let t = problem.constraint();
    let skip = prox.is_zero();
    Ok(move |x: &[f64], scratch: &mut [f64], out: &mut [f64]| {
        if skip {
            t.apply_into(x, out);
        } else {
            t.apply_into(x, scratch);
            prox.prox_into(1.0, scratch, out);
        }
    })
}

/// `x_{n+1} = T' x_n - lambda_n grad f(T' x_n)` with `lambda_n = c / (n + 1)`.
pub(super) fn hsdm(problem: &Problem, config: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    let map = composite_map(problem, "hsdm")?;
    let smooth = problem.smooth();
    let c = match config.baseline.hsdm_c {
        Some(c) if c >= 0.0 => c,
        Some(c) => return Err(Error::param("hsdm_c", c, ">= 0")),
        None => 2.0 * (1.0 - config.alpha) / smooth.lipschitz(),
    };
    let n = problem.dim();
    let mut rec = Recorder::new(problem, config);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; n];
    let mut tx = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    rec.push(0, &x, None)?;
    for k in 0..config.max_iters {
        let step = c / (k + 1) as f64;
        map(&x, &mut scratch, &mut tx);
        smooth.gradient_into(&tx, &mut grad);
        for i in 0..n {
            next[i] = tx[i] - step * grad[i];
        }
        std::mem::swap(&mut x, &mut next);
        rec.push(k + 1, &x, None)?;
        if rec.converged(linalg::dist(&x, &next)) {
            break;
        }
    }
    Ok(rec.finish(x))
}

/// `x_{n+1} = T'(x_n + mu lambda_n d_n)`, `d_{n+1} = -grad f(x_{n+1}) + beta_{n+1} d_n`,
/// with `lambda_n = 1/(n+1)`, `beta_n = 1/(n+1)^2` and `d_0 = -grad f(x_0)`.
pub(super) fn hcgm(problem: &Problem, config: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    let map = composite_map(problem, "hcgm")?;
    let smooth = problem.smooth();
    let mu = positive("hcgm_mu", config.baseline.hcgm_mu.unwrap_or(1.0 / smooth.lipschitz()))?;
    let n = problem.dim();
    let mut rec = Recorder::new(problem, config);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; n];
    let mut moved = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut d = smooth.gradient(&x);
    d.iter_mut().for_each(|v| *v = -*v);
    let mut grad = vec![0.0; n];
    rec.push(0, &x, None)?;
    for k in 0..config.max_iters {
        let step = mu / (k + 1) as f64;
        for i in 0..n {
            moved[i] = x[i] + step * d[i];
        }
        map(&moved, &mut scratch, &mut next);
        std::mem::swap(&mut x, &mut next);
        rec.push(k + 1, &x, None)?;
        if rec.converged(linalg::dist(&x, &next)) {
            break;
        }
        let beta = 1.0 / ((k + 2) as f64).powi(2);
        smooth.gradient_into(&x, &mut grad);
        for i in 0..n {
            d[i] = -grad[i] + beta * d[i];
        }
    }
    Ok(rec.finish(x))
}

/// Scaled-form ADMM for `min g(x)` s.t. `x = z`, `z in Fix T`:
/// `x = prox_{g/rho}(z - u)`, `z = P(x + u)`, `u += x - z`. Reports `z`.
pub(super) fn admm(problem: &Problem, config: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    require_zero_smooth(problem, "admm")?;
    require_projection(problem, "admm")?;
    let rho = positive("admm_rho", config.baseline.admm_rho)?;
    let t = problem.constraint();
    let prox = problem.prox();
    let n = problem.dim();
    let mut rec = Recorder::new(problem, config);
    let mut z = x0.to_vec();
    let mut z_prev = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut buf = vec![0.0; n];
    rec.push(0, &z, None)?;
    for k in 0..config.max_iters {
        for i in 0..n {
            buf[i] = z[i] - u[i];
        }
        prox.prox_into(1.0 / rho, &buf, &mut x);
        for i in 0..n {
            buf[i] = x[i] + u[i];
        }
        std::mem::swap(&mut z, &mut z_prev);
        t.apply_into(&buf, &mut z);
        for i in 0..n {
            u[i] += x[i] - z[i];
        }
        rec.push(k + 1, &z, None)?;
        if rec.converged(linalg::dist(&z, &z_prev)) {
            break;
        }
    }
    Ok(rec.finish(z))
}

// prox_{sigma h*}(w) for h the indicator of Fix T = P(affine) with T x = Q x + pi:
// w - sigma P(w / sigma) = w - Q w - sigma pi.
fn conjugate_prox(problem: &Problem, sigma: f64, w: &[f64], qw: &mut [f64], out: &mut [f64]) {
    let t = problem.constraint();
    t.q().apply_into(w, qw);
    for ((o, wi), (q, p)) in out.iter_mut().zip(w).zip(qw.iter().zip(t.pi())) {
        *o = wi - q - sigma * p;
    }
}

/// Condat's primal-dual method with `K = I` and `h` the indicator of `Fix T`:
/// `x' = prox_{tau g}(x - tau grad f(x) - tau y)`,
/// `y' = prox_{sigma h*}(y + sigma (2x' - x))`. Default `tau = 0.99 / (L/2 + sigma)`.
pub(super) fn pd_condat(problem: &Problem, config: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    require_projection(problem, "pd-condat")?;
    let smooth = problem.smooth();
    let prox = problem.prox();
    let sigma = positive("pd_sigma", config.baseline.pd_sigma)?;
    let lip = if smooth.is_zero() { 0.0 } else { smooth.lipschitz() };
    let tau_max = 1.0 / (lip / 2.0 + sigma);
    let tau = match config.baseline.pd_tau {
        Some(t) if t > 0.0 && t <= tau_max => t,
        Some(t) => return Err(Error::param("pd_tau", t, format!("in (0, 1/(L/2 + sigma)] = (0, {tau_max}]"))),
        None => 0.99 * tau_max,
    };
    let n = problem.dim();
    let mut rec = Recorder::new(problem, config);
    let mut x = x0.to_vec();
    let mut x_new = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut buf = vec![0.0; n];
    let mut qw = vec![0.0; n];
    rec.push(0, &x, None)?;
    for k in 0..config.max_iters {
        smooth.gradient_into(&x, &mut grad);
        for i in 0..n {
            buf[i] = x[i] - tau * grad[i] - tau * y[i];
        }
        prox.prox_into(tau, &buf, &mut x_new);
        for i in 0..n {
            buf[i] = y[i] + sigma * (2.0 * x_new[i] - x[i]);
        }
        conjugate_prox(problem, sigma, &buf, &mut qw, &mut y);
        std::mem::swap(&mut x, &mut x_new);
        rec.push(k + 1, &x, None)?;
        if rec.converged(linalg::dist(&x, &x_new)) {
            break;
        }
    }
    Ok(rec.finish(x))
}

/// Chambolle-Pock with `K = I`, `G = g` and `F` the indicator of `Fix T`:
/// `y = prox_{sigma F*}(y + sigma xbar)`, `x' = prox_{tau G}(x - tau y)`,
/// `theta = 1/sqrt(1 + 2 gamma tau)`, `tau <- theta tau`, `sigma <- sigma / theta`,
/// `xbar = x' + theta (x' - x)`. With `gamma = 0` the steps stay fixed.
pub(super) fn pd_cp(problem: &Problem, config: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    require_zero_smooth(problem, "pd-cp")?;
    require_projection(problem, "pd-cp")?;
    let mut sigma = positive("pd_sigma", config.baseline.pd_sigma)?;
    let mut tau = match config.baseline.pd_tau {
        Some(t) => positive("pd_tau", t)?,
        None => 0.99 / sigma,
    };
    if tau * sigma >= 1.0 {
        return Err(Error::param("pd_tau * pd_sigma", tau * sigma, "< 1"));
    }
    let gamma = config.baseline.cp_gamma;
    if !(gamma >= 0.0) {
        return Err(Error::param("cp_gamma", gamma, ">= 0"));
    }
    let prox = problem.prox();
    let n = problem.dim();
    let mut rec = Recorder::new(problem, config);
    let mut x = x0.to_vec();
    let mut x_new = vec![0.0; n];
    let mut xbar = x0.to_vec();
    let mut y = vec![0.0; n];
    let mut buf = vec![0.0; n];
    let mut qw = vec![0.0; n];
    rec.push(0, &x, None)?;
    for k in 0..config.max_iters {
        for i in 0..n {
            buf[i] = y[i] + sigma * xbar[i];
        }
        conjugate_prox(problem, sigma, &buf, &mut qw, &mut y);
        for i in 0..n {
            buf[i] = x[i] - tau * y[i];
        }
        prox.prox_into(tau, &buf, &mut x_new);
        let theta = 1.0 / (1.0 + 2.0 * gamma * tau).sqrt();
        tau *= theta;
        sigma /= theta;
        for i in 0..n {
            xbar[i] = x_new[i] + theta * (x_new[i] - x[i]);
        }
        std::mem::swap(&mut x, &mut x_new);
        rec.push(k + 1, &x, None)?;
        if rec.converged(linalg::dist(&x, &x_new)) {
            break;
        }
    }
    Ok(rec.finish(x))
}

/// FISTA on `min f` over `Fix T` with the projection `T` as prox and step `1/L`.
pub(super) fn fista(problem: &Problem, config: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    if !problem.prox().is_zero() {
        return Err(Error::UnsupportedProblem("fista needs g = 0 (the constraint is the prox)".into()));
    }
    require_projection(problem, "fista")?;
    let smooth = problem.smooth();
    let step = positive("fista_step", config.baseline.fista_step.unwrap_or(1.0 / smooth.lipschitz()))?;
    let t = problem.constraint();
    let n = problem.dim();
    let mut rec = Recorder::new(problem, config);
    let mut x = x0.to_vec();
    let mut x_new = vec![0.0; n];
    let mut y = x0.to_vec();
    let mut grad = vec![0.0; n];
    let mut buf = vec![0.0; n];
    let mut tk = 1.0_f64;
    rec.push(0, &x, None)?;
    for k in 0..config.max_iters {
        smooth.gradient_into(&y, &mut grad);
        for i in 0..n {
            buf[i] = y[i] - step * grad[i];
        }
        t.apply_into(&buf, &mut x_new);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        let momentum = (tk - 1.0) / t_next;
        for i in 0..n {
            y[i] = x_new[i] + momentum * (x_new[i] - x[i]);
        }
        tk = t_next;
        std::mem::swap(&mut x, &mut x_new);
        rec.push(k + 1, &x, None)?;
        if rec.converged(linalg::dist(&x, &x_new)) {
            break;
        }
    }
    Ok(rec.finish(x))
}
