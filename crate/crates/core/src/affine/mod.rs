//! Affine firmly nonexpansive mappings `T x = Q x + pi` and their algebra.

mod catalog;
mod ls;

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, dot, norm, SymOperator, Vector, PSD_SLACK};

pub use catalog::{make_consensus_projection, make_hyperplane_projection};
pub use ls::{make_constrained_ls_map, make_ls_map, ConstrainedLsVariant, LsVariant};

/// Slack on `min eig(Q) >= 0` and `||Q|| <= 1`.
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Relative tolerance on `||(I - Q) w - pi|| <= tol * (1 + ||pi||)`.
pub const FIXED_POINT_TOL: f64 = 1e-8;
/// Convex weights may overshoot 1 (singly or in sum) by this much.
const WEIGHT_SUM_TOL: f64 = 1e-12;

const FIRM_PROBES: usize = 100;
const FIRM_SLACK: f64 = 1e-8;
const PROBE_SEED: u64 = 0xf1e7;
// Relative eigenvalue cutoff when solving (I - Q) w = pi.
const PINV_CUTOFF: f64 = 1e-10;

/// A member of the class of affine firmly nonexpansive mappings.
#[derive(Debug, Clone)]
pub struct AffineFneMap {
    q: SymOperator,
    pi: Vec<f64>,
    witness: Option<Vector>,
    u: OnceLock<SymOperator>,
}

/// An affine nonexpansive map with symmetric linear part; the outer factors of
/// [`sandwich_compose`] need not have a positive `Q`.
#[derive(Debug, Clone)]
pub struct AffineMap {
    q: SymOperator,
    pi: Vec<f64>,
}

impl AffineMap {
    pub fn new(q: SymOperator, pi: Vec<f64>) -> Result<Self> {
        check_dim(q.dim(), pi.len())?;
        let n = q.spectral_norm()?;
        if n > 1.0 + MEMBERSHIP_TOL {
            return Err(Error::param("||Q||", n, "<= 1 for a nonexpansive factor"));
        }
        Ok(AffineMap { q, pi })
    }

    pub fn q(&self) -> &SymOperator {
        &self.q
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.q.apply(x);
        linalg::axpy(1.0, &self.pi, &mut out);
        out
    }
}

impl From<&AffineFneMap> for AffineMap {
    fn from(m: &AffineFneMap) -> Self {
        AffineMap {
            q: m.q.clone(),
            pi: m.pi.clone(),
        }
    }
}

/// Outcome of [`AffineFneMap::validate_membership`].
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub asymmetry: f64,
    pub min_eigenvalue: f64,
    pub spectral_norm: f64,
    /// Largest `||T d||^2 - <d, T d>` over unit probe differences.
    pub worst_firm_excess: f64,
    pub failures: Vec<String>,
}

impl MembershipReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl AffineFneMap {
    /// Builds a map and checks class membership.
    pub fn new(q: SymOperator, pi: Vec<f64>) -> Result<Self> {
        let map = Self::new_unchecked(q, pi)?;
        let report = map.validate_membership();
        if !report.passed() {
            return Err(Error::Malformed(format!(
                "not an affine firmly nonexpansive map: {}",
                report.failures.join("; ")
            )));
        }
        Ok(map)
    }

    /// Builds a map checking only dimensions and finiteness; use
    /// [`validate_membership`](Self::validate_membership) to diagnose it.
    pub fn new_unchecked(q: SymOperator, pi: Vec<f64>) -> Result<Self> {
        check_dim(q.dim(), pi.len())?;
        if let Some(index) = pi.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(AffineFneMap {
            q,
            pi,
            witness: None,
            u: OnceLock::new(),
        })
    }

    /// Identity map on `dim` coordinates.
    pub fn identity(dim: usize) -> Self {
        AffineFneMap {
            q: SymOperator::identity(dim),
            pi: vec![0.0; dim],
            witness: Some(Vector::zeros(dim)),
            u: OnceLock::new(),
        }
    }

    /// Attaches a known fixed point after checking its residual.
    pub fn with_witness(mut self, w: Vector) -> Result<Self> {
        check_dim(self.dim(), w.len())?;
        let r = self.fixed_point_residual(&w);
        let tol = FIXED_POINT_TOL * (1.0 + norm(&self.pi));
        if r > tol {
            return Err(Error::EmptyFixedPointSet {
                residual: r,
                tolerance: tol,
            });
        }
        self.witness = Some(w);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    pub fn q(&self) -> &SymOperator {
        &self.q
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn witness(&self) -> Option<&Vector> {
        self.witness.as_ref()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// `out = Q x + pi` without dimension checks; `out` must not alias `x`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.q.apply_into(x, out);
        for (o, p) in out.iter_mut().zip(&self.pi) {
            *o += p;
        }
    }

    /// `||(I - Q) x - pi|| = ||x - T x||`.
    pub fn fixed_point_residual(&self, x: &[f64]) -> f64 {
        let mut tx = vec![0.0; x.len()];
        self.apply_into(x, &mut tx);
        linalg::dist(x, &tx)
    }

    /// The averaged map `alpha T + (1 - alpha) I`.
    pub fn averaged(&self, alpha: f64) -> Result<AffineFneMap> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param("alpha", alpha, "in (0, 1)"));
        }
        let u = OnceLock::new();
        if let Some(cached) = self.u.get() {
            // I - Q_alpha = alpha (I - Q)
            let _ = u.set(cached.affine(alpha.sqrt(), 0.0));
        }
        Ok(AffineFneMap {
            q: self.q.affine(alpha, 1.0 - alpha),
            pi: linalg::scale(&self.pi, alpha),
            witness: self.witness.clone(),
            u,
        })
    }

    /// `sum_j w_j T_j` for weights in `(0, 1]` summing to one.
    pub fn convex_combine(maps: &[AffineFneMap], weights: &[f64]) -> Result<AffineFneMap> {
        if maps.is_empty() {
            return Err(Error::Empty("map list"));
        }
        check_dim(maps.len(), weights.len())?;
        let n = maps[0].dim();
        for m in maps {
            check_dim(n, m.dim())?;
        }
        for &w in weights {
            if !(w > 0.0 && w <= 1.0 + WEIGHT_SUM_TOL) {
                return Err(Error::param("weight", w, "in (0, 1]"));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::param("sum of weights", total, "equal to 1 within 1e-12"));
        }
        if maps.len() == 1 {
            return Ok(maps[0].clone());
        }
        let terms: Vec<(f64, &SymOperator)> = weights.iter().zip(maps).map(|(&w, m)| (w, &m.q)).collect();
        let q = SymOperator::weighted_sum(&terms)?;
        let mut pi = vec![0.0; n];
        for (w, m) in weights.iter().zip(maps) {
            linalg::axpy(*w, &m.pi, &mut pi);
        }
        let mut out = AffineFneMap::new(q, pi)?;
        out.witness = common_witness(maps);
        Ok(out)
    }

    /// Checks symmetry, spectrum bounds and firm nonexpansiveness on random pairs.
    pub fn validate_membership(&self) -> MembershipReport {
        let mut failures = Vec::new();
        let asymmetry = match &self.q {
            SymOperator::Dense(m) => m.asymmetry(),
            _ => 0.0,
        };
        if asymmetry > 1e-12 {
            failures.push(format!("Q is not symmetric (asymmetry {asymmetry:e})"));
        }
        let (min_eigenvalue, spectral_norm) = match (self.q.min_eigenvalue(), self.q.spectral_norm()) {
            (Ok(lo), Ok(n)) => (lo, n),
            (Err(e), _) | (_, Err(e)) => {
                failures.push(format!("spectrum unavailable: {e}"));
                (f64::NAN, f64::NAN)
            }
        };
        if min_eigenvalue < -MEMBERSHIP_TOL {
            failures.push(format!("Q is not positive semidefinite (min eigenvalue {min_eigenvalue:e})"));
        }
        if spectral_norm > 1.0 + MEMBERSHIP_TOL {
            failures.push(format!("||Q|| = {spectral_norm} exceeds 1"));
        }

        // T x - T x' = Q (x - x'), so pairs reduce to differences.
        let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
        let n = self.dim();
        let mut worst = f64::NEG_INFINITY;
        let mut qd = vec![0.0; n];
        for _ in 0..FIRM_PROBES {
            let mut d: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let nd = norm(&d);
            if nd == 0.0 {
                continue;
            }
            d.iter_mut().for_each(|v| *v /= nd);
            self.q.apply_into(&d, &mut qd);
            worst = worst.max(dot(&qd, &qd) - dot(&d, &qd));
        }
        if worst > FIRM_SLACK {
            failures.push(format!("firm nonexpansiveness violated by {worst:e}"));
        }
        MembershipReport {
            asymmetry,
            min_eigenvalue,
            spectral_norm,
            worst_firm_excess: worst,
            failures,
        }
    }

    /// A point of `Fix T`: the attached witness, else `(I - Q)^+ pi`.
    pub fn fixed_point_witness(&self) -> Result<Vector> {
        if let Some(w) = &self.witness {
            return Ok(w.clone());
        }
        let i_minus_q = self.q.affine(-1.0, 1.0);
        let w = i_minus_q.pseudo_inverse(PINV_CUTOFF)?.apply(&self.pi);
        let r = self.fixed_point_residual(&w);
        let tol = FIXED_POINT_TOL * (1.0 + norm(&self.pi));
        if r > tol || !linalg::all_finite(&w) {
            return Err(Error::EmptyFixedPointSet {
                residual: r,
                tolerance: tol,
            });
        }
        Vector::new(w)
    }

    /// The positive square root `U` of `I - Q`, computed once and cached.
    pub fn sqrt_i_minus_q(&self) -> Result<&SymOperator> {
        if let Some(u) = self.u.get() {
            return Ok(u);
        }
        let u = self.q.affine(-1.0, 1.0).psd_sqrt()?;
        Ok(self.u.get_or_init(|| u))
    }

    /// Whether `T` is an orthogonal projection onto its fixed-point set.
    pub fn is_projection(&self) -> bool {
        if !self.q.is_idempotent() {
            return false;
        }
        let qp = self.q.apply(&self.pi);
        norm(&qp) <= FIXED_POINT_TOL * (1.0 + norm(&self.pi))
    }

    /// Whether `T` is the identity (stored as a scaled identity with zero offset).
    pub fn is_identity(&self) -> bool {
        matches!(&self.q, SymOperator::ScaledIdentity { scale, .. } if (scale - 1.0).abs() <= PSD_SLACK)
            && self.pi.iter().all(|&p| p == 0.0)
    }
}

fn common_witness(maps: &[AffineFneMap]) -> Option<Vector> {
    let w = maps[0].witness.as_ref()?;
    let ok = maps.iter().all(|m| {
        m.witness.is_some() && m.fixed_point_residual(w) <= FIXED_POINT_TOL * (1.0 + norm(&m.pi))
    });
    ok.then(|| w.clone())
}

/// Expands `T_J ... T_1 T_0 T_1 ... T_J` into a single affine map.
///
/// With `core = (Q_0, pi_0)` and `outer[j-1] = (Q_j, pi_j)`:
/// `Q = Q_J..Q_1 Q_0 Q_1..Q_J` and
/// `pi = sum_j Q_J..Q_1 Q_0 Q_1..Q_{j-1} pi_j + sum_j Q_J..Q_j pi_{j-1} + pi_J`.
pub fn sandwich_compose(core: &AffineFneMap, outer: &[AffineMap]) -> Result<AffineFneMap> {
    let n = core.dim();
    for m in outer {
        check_dim(n, m.pi.len())?;
        let norm_q = m.q.spectral_norm()?;
        if norm_q > 1.0 + MEMBERSHIP_TOL {
            return Err(Error::param("||Q_j||", norm_q, "<= 1 for a nonexpansive factor"));
        }
    }
    if outer.is_empty() {
        return Ok(core.clone());
    }
    let qs: Vec<&SymOperator> = outer.iter().map(|m| &m.q).collect();
    let mut q = core.q.clone();
    for qj in &qs {
        q = q.sandwich(qj)?;
    }

    // Q_J..Q_k x
    let left = |mut x: Vec<f64>, from: usize| {
        for qj in &qs[from - 1..] {
            x = qj.apply(&x);
        }
        x
    };
    let big_j = outer.len();
    let mut pi = outer[big_j - 1].pi.clone();
    for j in 1..=big_j {
        // right-hand offsets: Q_1..Q_{j-1} pi_j, then Q_0, then Q_1..Q_J
        let mut t = outer[j - 1].pi.clone();
        for k in (1..j).rev() {
            t = qs[k - 1].apply(&t);
        }
        t = core.q.apply(&t);
        linalg::axpy(1.0, &left(t, 1), &mut pi);
        // left-hand offsets: Q_J..Q_j pi_{j-1}
        let prev = if j == 1 { core.pi.clone() } else { outer[j - 2].pi.clone() };
        linalg::axpy(1.0, &left(prev, j), &mut pi);
    }
    let mut out = AffineFneMap::new(q, pi)?;
    if let Some(w) = &core.witness {
        let fixed_by_all = outer
            .iter()
            .all(|m| linalg::dist(&m.apply(w), w) <= FIXED_POINT_TOL * (1.0 + norm(&m.pi)));
        if fixed_by_all {
            out.witness = Some(w.clone());
        }
    }
    Ok(out)
}
