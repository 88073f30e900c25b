use super::trace::{Observer, Recorder, SolverTrace, Step};
use super::{validate_step_size, SolverConfig, Variant};
use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::Problem;

/// Shared driver for the four FM-HSDM recursions.
///
/// With `A_n = T_a x_n - lam grad f(p_n)` and `B_{n+1} = T x_{n+1} - lam grad f(q_{n+1})`:
///
/// ```text
/// x_{1/2}   = A_0                      x_1     = prox(x_{1/2})
/// x_{n+3/2} = x_{n+1/2} - A_n + B_{n+1}   x_{n+2} = prox(x_{n+3/2})
/// ```
///
/// where `p_n = q_n = x_n`, except in the third variant where both are `T_a x_n`.
/// The `f = 0` variant drops the gradient and the `g = 0` variants drop the prox.
pub(super) fn run<'a>(
    problem: &'a Problem,
    config: &SolverConfig,
    x0: &[f64],
    observer: Option<Observer<'a>>,
) -> Result<SolverTrace> {
    let variant = config.variant;
    let smooth = problem.smooth();
    let prox = problem.prox();
    match variant {
        Variant::FmHsdmF0 if !smooth.is_zero() => {
            return Err(Error::VariantMismatch("fm-hsdm-f0 requires a zero smooth term".into()));
        }
        Variant::FmHsdmG0 | Variant::FmHsdmIii if !prox.is_zero() => {
            return Err(Error::VariantMismatch(format!("{variant} requires a zero prox term")));
        }
        _ => {}
    }
    let (alpha, lambda) = (config.alpha, config.lambda);
    validate_step_size(variant, alpha, lambda, smooth.lipschitz())?;

    let use_grad = variant != Variant::FmHsdmF0;
    let use_prox = matches!(variant, Variant::FmHsdm | Variant::FmHsdmF0);
    let grad_at_averaged = variant == Variant::FmHsdmIii;
    let t = problem.constraint();
    let n = problem.dim();

    let mut rec = Recorder::with_observer(problem, config, observer);
    let dual = if rec.track_duals() {
        let w = t.fixed_point_witness()?;
        let u = t.sqrt_i_minus_q()?;
        Some((w, u))
    } else {
        None
    };
    let mut v = vec![0.0; n];
    let mut shifted = vec![0.0; n];
    let mut uv = vec![0.0; n];

    let mut tx = vec![0.0; n];
    let mut ta = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut bracket_a = vec![0.0; n];
    let mut half = vec![0.0; n];
    let mut x_prev = x0.to_vec();
    let mut x = vec![0.0; n];

    // Fills `ta = T_a x` and `grad = grad f(x or T_a x)` from `tx = T x`.
    let averaged_and_gradient = |x: &[f64], tx: &[f64], ta: &mut [f64], grad: &mut [f64]| {
        for ((a, t), xi) in ta.iter_mut().zip(tx).zip(x) {
            *a = alpha * t + (1.0 - alpha) * xi;
        }
        if use_grad {
            smooth.gradient_into(if grad_at_averaged { ta } else { x }, grad);
        }
    };

    t.apply_into(x0, &mut tx);
    rec.push(0, x0, Some(&tx))?;
    rec.push_dual(&v);
    if dual.is_some() {
        rec.emit(Step { n: 0, x: x0, half: None, v: &v })?;
    }
    averaged_and_gradient(x0, &tx, &mut ta, &mut grad);
    for i in 0..n {
        bracket_a[i] = ta[i] - lambda * grad[i];
    }
    half.copy_from_slice(&bracket_a);
    apply_prox(use_prox, prox, lambda, &half, &mut x);

    for k in 0..config.max_iters {
        // x = x_{k+1}, half = x_{k+1/2}, bracket_a = A_k
        t.apply_into(&x, &mut tx);
        rec.push(k + 1, &x, Some(&tx))?;
        rec.push_half(&half);
        if let Some((w, u)) = &dual {
            for i in 0..n {
                shifted[i] = x[i] - w[i];
            }
            u.apply_into(&shifted, &mut uv);
            linalg::axpy(1.0 - alpha, &uv, &mut v);
            rec.push_dual(&v);
            rec.emit(Step { n: k + 1, x: &x, half: Some(&half), v: &v })?;
        }
        if rec.converged(linalg::dist(&x, &x_prev)) || k + 1 == config.max_iters {
            break;
        }
        averaged_and_gradient(&x, &tx, &mut ta, &mut grad);
        for i in 0..n {
            // x_{k+3/2} = x_{k+1/2} - A_k + B_{k+1}
            half[i] = half[i] - bracket_a[i] + (tx[i] - lambda * grad[i]);
            bracket_a[i] = ta[i] - lambda * grad[i];
        }
        std::mem::swap(&mut x_prev, &mut x);
        apply_prox(use_prox, prox, lambda, &half, &mut x);
    }
    Ok(rec.finish(x))
}

fn apply_prox(use_prox: bool, prox: &dyn crate::objective::ProxTerm, lambda: f64, half: &[f64], out: &mut [f64]) {
    if use_prox {
        prox.prox_into(lambda, half, out);
    } else {
        out.copy_from_slice(half);
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::super::{run, SolverConfig, Variant};
    use crate::affine::AffineFneMap;
    use crate::linalg::{BlockLayout, SymOperator, Vector};
    use crate::objective::{make_quadratic, make_zero_term, Problem};

    // f(x) = x^2 / 2 on R with T x = 1, so x* = 1.
    fn scalar_problem() -> Problem {
        let t = AffineFneMap::new(SymOperator::zero(1), vec![1.0]).unwrap();
        let f = make_quadratic(SymOperator::diagonal(vec![1.0]).unwrap()).unwrap();
        Problem::new(Arc::new(f), Arc::new(make_zero_term(1)), t, BlockLayout::single(1).unwrap())
            .unwrap()
            .with_minimizer(Vector::new(vec![1.0]).unwrap())
            .unwrap()
    }

    #[test]
    fn scalar_closed_form() {
        let p = scalar_problem();
        for variant in [Variant::FmHsdm, Variant::FmHsdmG0] {
            let cfg = SolverConfig::new(variant, 0.5, 0.5, 40).with_certificates();
            let tr = run(&p, &cfg, &[0.0]).unwrap();
            for (n, x) in tr.iterates.iter().enumerate() {
                let want = 1.0 - 0.5f64.powi(n as i32);
                assert!((x[0] - want).abs() < 1e-12, "{variant} n={n}: {} vs {want}", x[0]);
                let v = tr.duals[n][0];
                let want_v = -0.5 + 0.5 * 0.5f64.powi(n as i32);
                assert!((v - want_v).abs() < 1e-12, "dual n={n}: {v} vs {want_v}");
            }
        }
    }

    #[test]
    fn third_variant_first_steps() {
        // x_{1/2} = T_a x0 - lam f'(T_a x0) = 0.5 - 0.125, then
        // x_{3/2} = x_{1/2} - x_{1/2} + (T x1 - lam f'(T_a x1)) = 1 - 0.25 * 0.6875.
        let p = scalar_problem();
        let cfg = SolverConfig { store_iterates: true, ..SolverConfig::new(Variant::FmHsdmIii, 0.5, 0.25, 2) };
        let tr = run(&p, &cfg, &[0.0]).unwrap();
        assert!((tr.iterates[1][0] - 0.375).abs() < 1e-15);
        assert!((tr.iterates[2][0] - 0.828125).abs() < 1e-15);
    }

    #[test]
    fn variant_requirements() {
        let p = scalar_problem();
        let cfg = SolverConfig::new(Variant::FmHsdmF0, 0.5, 0.5, 5);
        assert!(run(&p, &cfg, &[0.0]).is_err());
        let cfg = SolverConfig::new(Variant::FmHsdm, 0.5, 1.0, 5);
        assert!(run(&p, &cfg, &[0.0]).is_err());
    }
}
