//! Runtime checks of the convergence guarantees: the dual sequence `v_n`,
//! Fejér monotonicity of `(x_n, v_n)` in the `Theta` (or `Upsilon`) norm,
//! membership residuals for optimal pairs and `O(1/(n+1))` rate certificates.

use serde::Serialize;

use crate::affine::{AffineFneMap, FIXED_POINT_TOL};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, SymOperator, Vector};
use crate::objective::Problem;
use crate::solver::{SolverTrace, Step, Variant};

/// Relative per-step slack of the Fejér test.
pub const FEJER_SLACK: f64 = 1e-10;
/// Relative per-step slack of the `||y_{n+1} - y_n||` monotonicity test.
pub const DELTA_SLACK: f64 = 1e-12;
/// First index of the sup-ratio window for the rate certificates.
pub const RATE_WINDOW_START: usize = 10;
/// Sums below this are treated as zero by the sup-ratio test.
pub const RATE_FLOOR: f64 = 1e-14;

/// `v_{n+1} = v_n + (1 - alpha) U (x_{n+1} - w*)`, starting from `v_0 = 0`.
#[derive(Debug, Clone)]
pub struct DualState {
    pub v: Vec<f64>,
    pub w_star: Vector,
    pub alpha: f64,
    pub u: SymOperator,
}

impl DualState {
    pub fn new(map: &AffineFneMap, alpha: f64) -> Result<Self> {
        Self::with_witness(map, map.fixed_point_witness()?, alpha)
    }

    pub fn with_witness(map: &AffineFneMap, w_star: Vector, alpha: f64) -> Result<Self> {
        check_dim(map.dim(), w_star.len())?;
        let r = map.fixed_point_residual(&w_star);
        let tolerance = FIXED_POINT_TOL * (1.0 + linalg::norm(map.pi()));
        if r > tolerance {
            return Err(Error::EmptyFixedPointSet { residual: r, tolerance });
        }
        Ok(DualState {
            v: vec![0.0; map.dim()],
            w_star,
            alpha,
            u: map.sqrt_i_minus_q()?.clone(),
        })
    }
}

pub fn update_dual(state: &DualState, x_next: &[f64]) -> Result<DualState> {
    check_dim(state.v.len(), x_next.len())?;
    let shifted = linalg::sub(x_next, &state.w_star);
    let mut next = state.clone();
    linalg::axpy(1.0 - state.alpha, &state.u.apply(&shifted), &mut next.v);
    Ok(next)
}

/// Weighted norm on primal-dual pairs.
///
/// `Theta (x, v) = (Q_a x, v / (1 - alpha))` serves the first, second and
/// fourth variants; the third uses `Upsilon (x, v) = (Q_a^2 x, Q_a v / (1 - alpha))`.
#[derive(Debug, Clone)]
pub struct ThetaMetric {
    pub q_alpha: SymOperator,
    pub alpha: f64,
    q_alpha_sq: Option<SymOperator>,
}

impl ThetaMetric {
    pub fn theta(map: &AffineFneMap, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param("alpha", alpha, "in (0, 1)"));
        }
        let q_alpha = map.q().affine(alpha, 1.0 - alpha);
        let min = q_alpha.min_eigenvalue()?;
        if min < (1.0 - alpha) - 1e-10 {
            return Err(Error::NotStronglyPositive { min_eigenvalue: min, delta: 1.0 - alpha });
        }
        Ok(ThetaMetric { q_alpha, alpha, q_alpha_sq: None })
    }

    pub fn upsilon(map: &AffineFneMap, alpha: f64) -> Result<Self> {
        let mut m = Self::theta(map, alpha)?;
        m.q_alpha_sq = Some(m.q_alpha.square()?);
        Ok(m)
    }

    /// The metric under which `variant` is Fejér monotone.
    pub fn for_variant(map: &AffineFneMap, variant: Variant, alpha: f64) -> Result<Self> {
        match variant {
            Variant::FmHsdmIii => Self::upsilon(map, alpha),
            _ => Self::theta(map, alpha),
        }
    }

    pub fn is_upsilon(&self) -> bool {
        self.q_alpha_sq.is_some()
    }

    pub fn norm(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        check_dim(self.q_alpha.dim(), x.len())?;
        check_dim(self.q_alpha.dim(), v.len())?;
        let primal = self.q_alpha_sq.as_ref().unwrap_or(&self.q_alpha).quadratic_form(x);
        let dual = if self.is_upsilon() { self.q_alpha.quadratic_form(v) } else { linalg::dot(v, v) };
        let sq = primal + dual / (1.0 - self.alpha);
        if sq < -1e-12 {
            return Err(Error::MetricCorruption(sq));
        }
        Ok(sq.max(0.0).sqrt())
    }
}

pub fn theta_norm(metric: &ThetaMetric, x: &[f64], v: &[f64]) -> Result<f64> {
    metric.norm(x, v)
}

/// A point of the primal-dual solution set for step `lambda`.
#[derive(Debug, Clone)]
pub struct OptimalPair {
    pub x_star: Vector,
    pub v_star: Vector,
    pub lambda: f64,
}

impl OptimalPair {
    /// Validates `(x, v)` against `problem`: `x` must be a fixed point and the
    /// membership residual at most `1e-6`.
    pub fn new(problem: &Problem, x_star: Vector, v_star: Vector, lambda: f64) -> Result<Self> {
        check_dim(problem.dim(), x_star.len())?;
        check_dim(problem.dim(), v_star.len())?;
        if !(lambda > 0.0) {
            return Err(Error::param("lambda", lambda, "> 0"));
        }
        let t = problem.constraint();
        let fp = t.fixed_point_residual(&x_star);
        if fp > FIXED_POINT_TOL * (1.0 + linalg::norm(t.pi())) {
            return Err(Error::Malformed(format!("x_star is not a fixed point (residual {fp:e})")));
        }
        let r = upsilon_residual(&x_star, &v_star, lambda, problem)?;
        if r > 1e-6 {
            return Err(Error::Malformed(format!("(x_star, v_star) is not optimal (residual {r:e})")));
        }
        Ok(OptimalPair { x_star, v_star, lambda })
    }

    /// Builds the pair from the problem's minimizer and KKT subgradient:
    /// `v* = -lambda U^+ s`.
    pub fn from_problem(problem: &Problem, lambda: f64) -> Result<Self> {
        let x = problem
            .known_minimizer()
            .ok_or_else(|| Error::MissingData("problem has no known minimizer".into()))?
            .clone();
        let v = problem.dual_witness(lambda)?;
        Self::new(problem, x, v, lambda)
    }
}

/// `||(I - T) x|| + ||x - prox_{lambda g}(x - lambda grad f(x) - U v)||`.
pub fn upsilon_residual(x: &[f64], v: &[f64], lambda: f64, problem: &Problem) -> Result<f64> {
    let n = problem.dim();
    check_dim(n, x.len())?;
    check_dim(n, v.len())?;
    let t = problem.constraint();
    let u = t.sqrt_i_minus_q()?;
    let fp = t.fixed_point_residual(x);
    let grad = problem.smooth().gradient(x);
    let uv = u.apply(v);
    let arg: Vec<f64> = (0..n).map(|i| x[i] - lambda * grad[i] - uv[i]).collect();
    let p = problem.prox().prox(lambda, &arg);
    Ok(fp + linalg::dist(x, &p))
}

#[derive(Debug, Clone, Serialize)]
pub struct FejerReport {
    /// `distances[n] = ||(x_n, v_n) - (x*, v*)||`.
    pub distances: Vec<f64>,
    /// Largest `D_{n+1} - D_n` over `n >= 2`.
    pub max_increment: f64,
    /// Largest increment relative to `1 + D_n`.
    pub max_relative_increment: f64,
    pub passed: bool,
}

/// Streaming form of [`fejer_check`].
#[derive(Debug, Clone)]
pub struct FejerTracker {
    pair: OptimalPair,
    metric: ThetaMetric,
    distances: Vec<f64>,
}

impl FejerTracker {
    pub fn new(pair: OptimalPair, metric: ThetaMetric) -> Self {
        FejerTracker { pair, metric, distances: Vec::new() }
    }

    /// Feeds `(x_n, v_n)`; steps must arrive in order starting from `n = 0`.
    pub fn observe(&mut self, step: &Step<'_>) -> Result<()> {
        if step.n != self.distances.len() {
            return Err(Error::Malformed(format!("expected step {}, got {}", self.distances.len(), step.n)));
        }
        let dx = linalg::sub(step.x, &self.pair.x_star);
        let dv = linalg::sub(step.v, &self.pair.v_star);
        self.distances.push(self.metric.norm(&dx, &dv)?);
        Ok(())
    }

    pub fn finish(self) -> FejerReport {
        let d = self.distances;
        let mut max_increment = f64::NEG_INFINITY;
        let mut max_relative_increment = f64::NEG_INFINITY;
        for n in 2..d.len().saturating_sub(1) {
            let inc = d[n + 1] - d[n];
            max_increment = max_increment.max(inc);
            max_relative_increment = max_relative_increment.max(inc / (1.0 + d[n]));
        }
        let passed = max_relative_increment <= FEJER_SLACK;
        FejerReport { distances: d, max_increment, max_relative_increment, passed }
    }
}

fn stored_steps(trace: &SolverTrace) -> Result<impl Iterator<Item = Step<'_>>> {
    if !trace.has_certificates() {
        return Err(Error::MissingData("trace has no dual iterates".into()));
    }
    if trace.duals.len() != trace.iterates.len() || trace.half_iterates.len() + 1 != trace.iterates.len() {
        return Err(Error::MissingData("trace is missing half-iterates".into()));
    }
    Ok(trace.iterates.iter().zip(&trace.duals).enumerate().map(|(n, (x, v))| Step {
        n,
        x,
        half: n.checked_sub(1).map(|k| trace.half_iterates[k].as_slice()),
        v,
    }))
}

/// Checks `D_{n+1} <= D_n` for `n >= 2`, with slack `FEJER_SLACK (1 + D_n)`.
pub fn fejer_check(trace: &SolverTrace, pair: &OptimalPair, metric: &ThetaMetric) -> Result<FejerReport> {
    let mut tracker = FejerTracker::new(pair.clone(), metric.clone());
    for step in stored_steps(trace)? {
        tracker.observe(&step)?;
    }
    Ok(tracker.finish())
}

/// Partial sums `S_n = sum_{nu=0}^n q_nu` and their sup-ratio test.
#[derive(Debug, Clone, Serialize)]
pub struct RateSeries {
    pub name: &'static str,
    /// `values[n]`: `S_n` for averaged certificates, `(n+1) q_n` for per-iterate ones.
    pub values: Vec<f64>,
    /// `max_{n in [10, N]} values[n] / values[10]`.
    pub sup_ratio: f64,
    pub bound: f64,
    pub passed: bool,
}

impl RateSeries {
    fn new(name: &'static str, values: Vec<f64>, bound: f64) -> Self {
        let (sup_ratio, passed) = match values.get(RATE_WINDOW_START) {
            None => (f64::NAN, false),
            Some(&base) => {
                let sup = values[RATE_WINDOW_START..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let ratio = if base > 0.0 { sup / base } else if sup > 0.0 { f64::INFINITY } else { 1.0 };
                (ratio, sup <= bound * base + RATE_FLOOR)
            }
        };
        RateSeries { name, values, sup_ratio, bound, passed }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    /// Running sums of `<e, (I - Q) e>`, `||U v + lambda (grad f + xi)||^2` and `||(I - T) x||^2`.
    pub averaged: Vec<RateSeries>,
    /// The `f = 0` variant only: `(n+1)`-scaled per-iterate quantities.
    pub per_iterate: Vec<RateSeries>,
    /// The `f = 0` variant only: `||y_{n+1} - y_n||_Theta` for `n >= 0`.
    pub delta_y: Vec<f64>,
    /// Whether `delta_y` is nonincreasing from `n = 2` on within `DELTA_SLACK (1 + D_n)`.
    pub delta_y_monotone: Option<bool>,
}

impl RateReport {
    /// The averaged bounds are asserted for the variants with a gradient step.
    /// The `f = 0` variant is held to its per-iterate fixed-point bound and the
    /// monotonicity of `delta_y` instead; its running sums are informational.
    pub fn passed(&self) -> bool {
        match self.delta_y_monotone {
            None => self.averaged.iter().all(|s| s.passed),
            Some(monotone) => monotone && self.per_iterate.iter().filter(|s| s.name == "fixed_point").all(|s| s.passed),
        }
    }
}

/// Streaming form of [`rate_certificate`].
///
/// `x*` is the problem's known minimizer when attached, else the fixed-point
/// witness. `xi_{nu+1} = (x_{nu+1/2} - x_{nu+1}) / lambda`.
pub struct RateTracker<'p> {
    problem: &'p Problem,
    u: &'p SymOperator,
    x_star: Vec<f64>,
    variant: Variant,
    alpha: f64,
    lambda: f64,
    theta: Option<ThetaMetric>,
    prev: Option<(Vec<f64>, Vec<f64>)>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    dy: Vec<f64>,
    buf: Vec<f64>,
    grad: Vec<f64>,
}

impl<'p> RateTracker<'p> {
    pub fn new(problem: &'p Problem, variant: Variant, alpha: f64, lambda: f64) -> Result<Self> {
        if !variant.is_fm_hsdm() {
            return Err(Error::VariantMismatch(format!("{variant} has no rate certificates")));
        }
        let t = problem.constraint();
        let x_star = match problem.known_minimizer() {
            Some(x) => x.to_vec(),
            None => t.fixed_point_witness()?.to_vec(),
        };
        let theta = match variant {
            Variant::FmHsdmF0 => Some(ThetaMetric::theta(t, alpha)?),
            _ => None,
        };
        let n = problem.dim();
        Ok(RateTracker {
            problem,
            u: t.sqrt_i_minus_q()?,
            x_star,
            variant,
            alpha,
            lambda,
            theta,
            prev: None,
            a: Vec::new(),
            b: Vec::new(),
            c: Vec::new(),
            dy: Vec::new(),
            buf: vec![0.0; n],
            grad: vec![0.0; n],
        })
    }

    /// Feeds step `n`; steps must arrive in order starting from `n = 0`.
    pub fn observe(&mut self, step: &Step<'_>) -> Result<()> {
        if step.n != self.a.len() + usize::from(self.prev.is_some()) {
            return Err(Error::Malformed(format!("unexpected step {}", step.n)));
        }
        if let Some((x, v)) = self.prev.take() {
            let half = step.half.ok_or_else(|| Error::MissingData("step is missing its half-iterate".into()))?;
            self.push_terms(&x, &v, step.x, half, step.v)?;
        }
        self.prev = Some((step.x.to_vec(), step.v.to_vec()));
        Ok(())
    }

    // Terms of index nu from x = x_nu, v = v_nu and the next step.
    fn push_terms(&mut self, x: &[f64], v: &[f64], x_next: &[f64], half: &[f64], v_next: &[f64]) -> Result<()> {
        let t = self.problem.constraint();
        let n = x.len();
        let e = linalg::sub(x_next, &self.x_star);
        t.q().apply_into(&e, &mut self.buf);
        self.a.push(linalg::dot(&e, &e) - linalg::dot(&e, &self.buf));

        match self.variant {
            Variant::FmHsdmF0 => self.grad.iter_mut().for_each(|g| *g = 0.0),
            Variant::FmHsdmIii => {
                t.apply_into(x, &mut self.buf);
                for i in 0..n {
                    self.buf[i] = self.alpha * self.buf[i] + (1.0 - self.alpha) * x[i];
                }
                self.problem.smooth().gradient_into(&self.buf, &mut self.grad);
            }
            _ => self.problem.smooth().gradient_into(x, &mut self.grad),
        }
        self.u.apply_into(v_next, &mut self.buf);
        let mut s = 0.0;
        for i in 0..n {
            // lambda xi = x_{nu+1/2} - x_{nu+1}
            let r = self.buf[i] + self.lambda * self.grad[i] + (half[i] - x_next[i]);
            s += r * r;
        }
        self.b.push(s);

        t.apply_into(x_next, &mut self.buf);
        self.c.push(linalg::dist(x_next, &self.buf).powi(2));

        if let Some(theta) = &self.theta {
            let dx = linalg::sub(x_next, x);
            let dv = linalg::sub(v_next, v);
            self.dy.push(theta.norm(&dx, &dv)?);
        }
        Ok(())
    }

    pub fn finish(self) -> RateReport {
        let partial = |q: &[f64]| {
            q.iter()
                .scan(0.0, |acc, v| {
                    *acc += v;
                    Some(*acc)
                })
                .collect::<Vec<f64>>()
        };
        let averaged = vec![
            RateSeries::new("i_minus_q", partial(&self.a), 2.0),
            RateSeries::new("qualification", partial(&self.b), 2.0),
            RateSeries::new("fixed_point", partial(&self.c), 2.0),
        ];
        if self.theta.is_none() {
            return RateReport { averaged, per_iterate: Vec::new(), delta_y: Vec::new(), delta_y_monotone: None };
        }
        let scaled = |q: &[f64]| q.iter().enumerate().map(|(k, v)| (k + 1) as f64 * v).collect::<Vec<f64>>();
        let per_iterate = vec![
            RateSeries::new("i_minus_q", scaled(&self.a), 10.0),
            RateSeries::new("qualification", scaled(&self.b), 10.0),
            RateSeries::new("fixed_point", scaled(&self.c), 10.0),
        ];
        let dy = self.dy;
        let monotone = (2..dy.len()).all(|k| dy[k] <= dy[k - 1] + DELTA_SLACK * (1.0 + dy[k - 1]));
        RateReport { averaged, per_iterate, delta_y: dy, delta_y_monotone: Some(monotone) }
    }
}

/// Rate certificates of an FM-HSDM trace recorded with certificates on.
pub fn rate_certificate(trace: &SolverTrace, problem: &Problem) -> Result<RateReport> {
    let mut tracker = RateTracker::new(problem, trace.variant, trace.alpha, trace.lambda)?;
    for step in stored_steps(trace)? {
        tracker.observe(&step)?;
    }
    Ok(tracker.finish())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::affine::make_consensus_projection;
    use crate::linalg::BlockLayout;
    use crate::objective::{make_quadratic, make_zero_term};
    use crate::solver::{run, SolverConfig};

    fn constant_map() -> AffineFneMap {
        AffineFneMap::new(SymOperator::zero(1), vec![1.0]).unwrap()
    }

    fn scalar_problem() -> Problem {
        let f = make_quadratic(SymOperator::diagonal(vec![1.0]).unwrap()).unwrap();
        Problem::new(Arc::new(f), Arc::new(make_zero_term(1)), constant_map(), BlockLayout::single(1).unwrap())
            .unwrap()
            .with_minimizer(Vector::new(vec![1.0]).unwrap())
            .unwrap()
            .with_kkt_subgradient(Vector::new(vec![1.0]).unwrap())
            .unwrap()
    }

    #[test]
    fn dual_update_examples() {
        let s = DualState::new(&constant_map(), 0.5).unwrap();
        let s1 = update_dual(&s, &[0.5]).unwrap();
        assert!((s1.v[0] + 0.25).abs() < 1e-15);
        let s2 = update_dual(&s1, &[1.0]).unwrap();
        assert_eq!(s2.v, s1.v);
    }

    #[test]
    fn dual_independent_of_witness() {
        let map = make_consensus_projection(3, 2).unwrap();
        let w1 = Vector::new(vec![0.0; 6]).unwrap();
        let w2 = Vector::new(vec![1.0, -2.0, 1.0, -2.0, 1.0, -2.0]).unwrap();
        let mut s1 = DualState::with_witness(&map, w1, 0.7).unwrap();
        let mut s2 = DualState::with_witness(&map, w2, 0.7).unwrap();
        for k in 0..5 {
            let x: Vec<f64> = (0..6).map(|i| ((i * 7 + k * 3) % 5) as f64 - 2.0).collect();
            s1 = update_dual(&s1, &x).unwrap();
            s2 = update_dual(&s2, &x).unwrap();
            assert!(linalg::dist(&s1.v, &s2.v) < 1e-12);
        }
    }

    #[test]
    fn theta_norm_examples() {
        let zero = ThetaMetric::theta(&constant_map(), 0.5).unwrap();
        assert!((zero.norm(&[2.0], &[1.0]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(zero.norm(&[0.0], &[0.0]).unwrap(), 0.0);
        let ident = ThetaMetric::theta(&AffineFneMap::identity(1), 0.5).unwrap();
        assert!((ident.norm(&[1.0], &[0.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_residual_and_fejer() {
        let p = scalar_problem();
        let pair = OptimalPair::from_problem(&p, 0.5).unwrap();
        assert!((pair.v_star[0] + 0.5).abs() < 1e-15);
        assert!(upsilon_residual(&[1.0], &[-0.5], 0.5, &p).unwrap() < 1e-15);
        assert!(upsilon_residual(&[0.0], &[-0.5], 0.5, &p).unwrap() >= 1.0);

        let cfg = SolverConfig::new(Variant::FmHsdm, 0.5, 0.5, 30).with_certificates();
        let tr = run(&p, &cfg, &[0.0]).unwrap();
        let metric = ThetaMetric::theta(p.constraint(), 0.5).unwrap();
        let rep = fejer_check(&tr, &pair, &metric).unwrap();
        assert!(rep.passed);
        assert!(rep.distances.windows(2).take(25).all(|w| w[1] < w[0]));

        let rate = rate_certificate(&tr, &p).unwrap();
        assert!(rate.passed());
        // sum_k 4^{-k} over k >= 1 is 1/3
        let c = &rate.averaged[2].values;
        assert!(c.iter().all(|&s| s < 1.0 / 3.0 + 1e-15));
    }

    #[test]
    fn stationary_trace_has_zero_certificates() {
        let p = scalar_problem();
        let mut tr = run(&p, &SolverConfig::new(Variant::FmHsdm, 0.5, 0.5, 20).with_certificates(), &[0.0]).unwrap();
        tr.iterates.iter_mut().for_each(|x| x[0] = 1.0);
        tr.half_iterates.iter_mut().for_each(|x| x[0] = 1.0);
        tr.duals.iter_mut().for_each(|v| v[0] = -0.5);
        let pair = OptimalPair::from_problem(&p, 0.5).unwrap();
        let metric = ThetaMetric::theta(p.constraint(), 0.5).unwrap();
        let rep = fejer_check(&tr, &pair, &metric).unwrap();
        assert!(rep.passed && rep.distances.iter().all(|&d| d == 0.0));
        let rate = rate_certificate(&tr, &p).unwrap();
        assert!(rate.passed());
        assert!(rate.averaged.iter().all(|s| s.values.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn missing_duals_are_reported() {
        let p = scalar_problem();
        let tr = run(&p, &SolverConfig::new(Variant::FmHsdm, 0.5, 0.5, 5), &[0.0]).unwrap();
        let pair = OptimalPair::from_problem(&p, 0.5).unwrap();
        let metric = ThetaMetric::theta(p.constraint(), 0.5).unwrap();
        assert!(matches!(fejer_check(&tr, &pair, &metric), Err(Error::MissingData(_))));
        assert!(matches!(rate_certificate(&tr, &p), Err(Error::MissingData(_))));
    }
}
