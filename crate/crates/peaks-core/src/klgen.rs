//! Bound functions γ(s, t), increasing in s and decreasing in t, and the conversions between
//! (γ, θ) upper bounds and useful pairs.

use std::fmt;
use std::sync::Arc;

use crate::error::{PeaksError, Result};
use crate::pairs::{verify_pair, MonotoneBijection, UsefulPair};
use crate::scalar::{bisect_increasing, from_usize, linspace, lit, PointFn, RealFn, Scalar};
use crate::seq::BoundedSequence;
use crate::systems::{solve_peaks, DynamicalSystem};

/// Horizon on which infima over t ≥ 0 are estimated.
pub const T_MAX: f64 = 1e4;

pub type BivariateFn<S> = Arc<dyn Fn(S, S) -> S + Send + Sync>;

#[derive(Clone)]
pub struct KLGenFunction<S> {
    eval: BivariateFn<S>,
    limit: Option<RealFn<S>>,
    pub monotonicity_checked: bool,
    pub label: String,
}

impl<S: fmt::Debug> fmt::Debug for KLGenFunction<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KLGenFunction({}, checked = {})", self.label, self.monotonicity_checked)
    }
}

impl<S: Scalar> KLGenFunction<S> {
    pub fn new(label: impl Into<String>, f: impl Fn(S, S) -> S + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(f), limit: None, monotonicity_checked: false, label: label.into() }
    }

    pub fn from_arc(label: impl Into<String>, f: BivariateFn<S>) -> Self {
        Self { eval: f, limit: None, monotonicity_checked: false, label: label.into() }
    }

    /// Analytic s ↦ lim_{t→∞} γ(s, t), used in place of the grid estimate.
    pub fn with_limit(mut self, lim: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        self.limit = Some(Arc::new(lim));
        self
    }

    pub fn eval(&self, s: S, t: S) -> S {
        (self.eval)(s, t)
    }

    /// Samples monotonicity on `s_grid × t_grid` and sets the flag.
    pub fn check_monotonicity(mut self, s_grid: &[S], t_grid: &[S]) -> Result<Self> {
        let tol = lit::<S>(1e-12);
        for &t in t_grid {
            for w in s_grid.windows(2) {
                let (a, b) = (self.eval(w[0], t), self.eval(w[1], t));
                if a > b + tol * S::one().max(a.abs()) {
                    return Err(PeaksError::Precondition(format!(
                        "{}: decreasing in s at s = {}, t = {t}",
                        self.label, w[0]
                    )));
                }
            }
        }
        for &s in s_grid {
            for w in t_grid.windows(2) {
                let (a, b) = (self.eval(s, w[0]), self.eval(s, w[1]));
                if b > a + tol * S::one().max(a.abs()) {
                    return Err(PeaksError::Precondition(format!(
                        "{}: increasing in t at s = {s}, t = {}",
                        self.label, w[0]
                    )));
                }
            }
        }
        self.monotonicity_checked = true;
        Ok(self)
    }

    /// inf_{t ≥ 0} γ(s, t).
    pub fn infimum_in_t(&self, s: S) -> S {
        if let Some(lim) = &self.limit {
            return lim(s);
        }
        t_grid::<S>().into_iter().map(|t| self.eval(s, t)).fold(S::infinity(), S::min)
    }
}

/// Integers up to 100, then a geometric grid up to T_MAX.
fn t_grid<S: Scalar>() -> Vec<S> {
    let mut out: Vec<S> = (0..=100).map(from_usize).collect();
    let mut t = 100.0_f64;
    while t < T_MAX {
        t = (t * 1.25).min(T_MAX);
        out.push(lit(t));
    }
    out
}

/// (γ, θ) with φ(T^k x) ≤ γ(θ(x), k), plus θ̄ ≥ sup θ over X^in.
#[derive(Clone)]
pub struct KLGenUpperBound<S> {
    pub gamma: KLGenFunction<S>,
    theta: PointFn<S>,
    pub theta_sup: S,
    pub useful_flag: bool,
    /// X^in samples whose θ fell back on the pair's tail bound.
    pub uncertified_samples: usize,
}

impl<S: fmt::Debug> fmt::Debug for KLGenUpperBound<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KLGenUpperBound({:?}, theta_sup = {:?}, useful = {})", self.gamma, self.theta_sup, self.useful_flag)
    }
}

impl<S: Scalar> KLGenUpperBound<S> {
    pub fn new(gamma: KLGenFunction<S>, theta: PointFn<S>, theta_sup: S) -> Self {
        Self { gamma, theta, theta_sup, useful_flag: false, uncertified_samples: 0 }
    }

    pub fn theta(&self, x: &[S]) -> S {
        (self.theta)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MajorantBranch {
    /// m ≥ f(0): g = m + 1/(x+1).
    Constant,
    /// Staircase through the integer values of f.
    Staircase,
}

/// Strictly decreasing continuous g ≥ f with inf g = m.
#[derive(Clone)]
pub struct Majorant<S> {
    g: RealFn<S>,
    pub m: S,
    pub inf_estimate: S,
    pub branch: MajorantBranch,
}

impl<S: fmt::Debug> fmt::Debug for Majorant<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Majorant(m = {:?}, branch = {:?})", self.m, self.branch)
    }
}

impl<S: Scalar> Majorant<S> {
    pub fn eval(&self, x: S) -> S {
        (self.g)(x)
    }

    pub fn as_fn(&self) -> RealFn<S> {
        self.g.clone()
    }
}

/// f(0) on [0,1], f(n−1) on [n, n+½], affine from f(n−1) to f(n) on [n+½, n+1].
fn staircase<S: Scalar>(f: &RealFn<S>, x: S) -> S {
    if x <= S::one() {
        return f(S::zero());
    }
    let n = x.floor();
    let frac = x - n;
    let half = lit::<S>(0.5);
    let prev = f(n - S::one());
    if frac <= half {
        prev
    } else {
        prev + (f(n) - prev) * (frac - half) / half
    }
}

/// lim f at +∞ for decreasing f. Samples at T_MAX·4^j and applies Aitken's Δ² to the last
/// three, which is exact for L + c·t^{−q} tails and harmless once the tail is flat.
fn tail_limit<S: Scalar>(f: &RealFn<S>) -> S {
    let ts: Vec<S> = (0..=8).map(|j| lit(T_MAX * 4f64.powi(j))).collect();
    let v: Vec<S> = ts.iter().map(|&t| f(t)).collect();
    let (a, b, c) = (v[6], v[7], v[8]);
    let (d1, d2) = (b - a, c - b);
    let denom = d2 - d1;
    let scale = S::one().max(c.abs());
    if !c.is_finite() || denom.abs() <= S::epsilon() * lit(16.0) * scale {
        return c;
    }
    c.min(c - d2 * d2 / denom)
}

/// `m = −∞` is allowed and yields the plain staircase.
pub fn majorize_decreasing<S: Scalar>(f: RealFn<S>, m: S) -> Result<Majorant<S>> {
    let xs = linspace(S::zero(), lit(50.0), 201).into_iter().chain((51..=1000).map(from_usize));
    let xs: Vec<S> = xs.collect();
    for w in xs.windows(2) {
        let (a, b) = (f(w[0]), f(w[1]));
        if b > a + lit::<S>(1e-12) * S::one().max(a.abs()) {
            return Err(PeaksError::Precondition(format!("f increases between {} and {}", w[0], w[1])));
        }
    }
    let inf_estimate = tail_limit(&f);
    if m.is_finite() && m < inf_estimate - lit::<S>(1e-6) * S::one().max(inf_estimate.abs()) {
        return Err(PeaksError::Parameter(format!("m = {m} is below the infimum estimate {inf_estimate}")));
    }
    if m.is_nan() || m == S::infinity() {
        return Err(PeaksError::Parameter(format!("m = {m} must be finite or -inf")));
    }
    let one = S::one();
    if m >= f(S::zero()) {
        return Ok(Majorant {
            g: Arc::new(move |x| m + one / (x + one)),
            m,
            inf_estimate,
            branch: MajorantBranch::Constant,
        });
    }
    let g: RealFn<S> = if m.is_finite() {
        Arc::new(move |x| (staircase(&f, x) + one / (x + one)).max(m + one / (x + one)))
    } else {
        Arc::new(move |x| staircase(&f, x) + one / (x + one))
    };
    Ok(Majorant { g, m, inf_estimate, branch: MajorantBranch::Staircase })
}

/// h ∈ Ω([0,1]) with γ(s, t) ≤ h(e^{−t}) and h(0) = m.
pub fn sontag_extension<S: Scalar>(gamma: &KLGenFunction<S>, s: S, m: S) -> Result<MonotoneBijection<S>> {
    if !m.is_finite() {
        return Err(PeaksError::Parameter("m must be finite".into()));
    }
    let g = gamma.clone();
    let sigma = majorize_decreasing(Arc::new(move |t| g.eval(s, t)), m)?;
    let (s1, s2) = (sigma.clone(), sigma.clone());
    // σ is inverted in t = −ln r so that r near 0 keeps full precision.
    let ln_inv = move |y: S| -> S {
        if y <= m {
            return S::neg_infinity();
        }
        if y >= s2.eval(S::zero()) {
            return S::zero();
        }
        let mut hi = S::one();
        for _ in 0..2000 {
            if s2.eval(hi) <= y {
                break;
            }
            hi = hi + hi;
        }
        let t = bisect_increasing(|t| -s2.eval(t), -y, S::zero(), hi, S::epsilon() * hi.max(S::one()));
        -t
    };
    let ln_inv2 = ln_inv.clone();
    Ok(MonotoneBijection::new(format!("sontag({}, s = {s}, m = {m})", gamma.label), move |r: S| {
        if r <= S::zero() {
            m
        } else {
            s1.eval(-r.ln())
        }
    })
    .with_h0(m)
    .with_inverse(move |y| ln_inv2(y).exp())
    .with_log_inverse(ln_inv))
}

/// (sontag_extension(γ, θ̄, m), e^{−1}), verified against `seq` on [0, horizon].
pub fn pair_from_klgen<S: Scalar>(
    bound: &KLGenUpperBound<S>,
    seq: &mut BoundedSequence<S>,
    m: S,
    horizon: usize,
) -> Result<UsefulPair<S>> {
    let h = sontag_extension(&bound.gamma, bound.theta_sup, m)?;
    verify_pair(seq, h, (-S::one()).exp(), horizon)
}

/// γ(s,t) = min{s, h(β^t)} and θ(x) = sup_k φ(T^k x), closed by the pair's tail bound.
///
/// θ(x) is the exact orbit supremum once the running maximum reaches h(β^{k+1}); otherwise it is
/// the sound upper bound max(running, h(β^{horizon+1})). θ̄ also includes ν_opt from `solve_peaks`.
pub fn klgen_from_pair<S: Scalar>(
    pair: &UsefulPair<S>,
    system: &DynamicalSystem<S>,
    horizon: usize,
) -> Result<KLGenUpperBound<S>> {
    if !pair.verified {
        return Err(PeaksError::CertificateRequired("klgen_from_pair needs a verified pair".into()));
    }
    let (h, beta) = (pair.h.clone(), pair.beta);
    let hg = h.clone();
    let ln_beta = beta.ln();
    let h0 = h.h0();
    let gamma = KLGenFunction::new(format!("min(s, {}(beta^t))", h.label), move |s: S, t: S| {
        s.min(hg.eval((t * ln_beta).exp()))
    })
    .with_limit(move |s| s.min(h0));
    let map = system.map_arc();
    let phi = system.phi_arc();
    let ht = h.clone();
    let tol = lit::<S>(1e-12);
    let orbit_sup = move |x: &[S]| -> (S, bool) {
        let mut y = x.to_vec();
        let mut run = S::neg_infinity();
        for k in 0..=horizon {
            if k > 0 {
                y = map(&y);
            }
            run = run.max(phi(&y));
            let next = ht.eval(beta.powf(from_usize(k + 1)));
            if run >= next - tol * S::one().max(next.abs()) {
                return (run, true);
            }
        }
        (run.max(ht.eval(beta.powf(from_usize(horizon + 1)))), false)
    };
    let samples = system.initial_set.samples(201);
    let mut theta_sup = S::neg_infinity();
    let mut uncertified = 0;
    for x in &samples {
        let (v, ok) = orbit_sup(x);
        theta_sup = theta_sup.max(v);
        if !ok {
            uncertified += 1;
        }
    }
    if pair.is_useful() {
        let sol = solve_peaks(system, pair, 101, 4)?;
        theta_sup = theta_sup.max(sol.nu_opt);
    }
    let theta: PointFn<S> = Arc::new(move |x: &[S]| orbit_sup(x).0);
    Ok(KLGenUpperBound { gamma, theta, theta_sup, useful_flag: pair.is_useful(), uncertified_samples: uncertified })
}

#[derive(Debug, Clone)]
pub struct KLGenReport<S> {
    /// min over sampled (x, k) of γ(θ(x), k) − φ(T^k x).
    pub worst_margin: S,
    pub witness: Option<(Vec<S>, usize)>,
    /// inf_t γ(θ̄, t) below the sampled ν_k for some k.
    pub useful: bool,
    pub checked: usize,
    pub passed: bool,
}

pub fn verify_klgen_bound<S: Scalar>(
    bound: &KLGenUpperBound<S>,
    system: &DynamicalSystem<S>,
    horizon: usize,
    samples: usize,
) -> Result<KLGenReport<S>> {
    let mut worst = S::infinity();
    let mut witness = None;
    let mut checked = 0;
    let mut nu_hat = vec![S::neg_infinity(); horizon + 1];
    for x in system.initial_set.samples(samples.max(1)) {
        let th = bound.theta(&x);
        if th > bound.theta_sup + lit::<S>(1e-9) * S::one().max(th.abs()) {
            return Err(PeaksError::Precondition(format!(
                "theta({x:?}) = {th} exceeds theta_sup = {}",
                bound.theta_sup
            )));
        }
        for (k, y) in system.orbit(&x, horizon).iter().enumerate() {
            let v = system.phi(y);
            nu_hat[k] = nu_hat[k].max(v);
            let g = bound.gamma.eval(th, from_usize(k));
            let margin = g - v;
            checked += 1;
            if margin < worst {
                worst = margin;
                let tol = lit::<S>(1e-12) * S::one().max(g.abs());
                if margin < -tol {
                    witness = Some((x.clone(), k));
                }
            }
        }
    }
    let inf = bound.gamma.infimum_in_t(bound.theta_sup);
    let useful = nu_hat.iter().any(|&u| inf < u);
    Ok(KLGenReport { worst_margin: worst, passed: witness.is_none(), witness, useful, checked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{closed_forms, pair_b, worked_system, ExampleParams};
    use crate::pairs::solve_stop;

    #[test]
    fn constant_branch() {
        let g = majorize_decreasing(Arc::new(|_| 3.0_f64), 3.0).unwrap();
        assert_eq!(g.branch, MajorantBranch::Constant);
        for x in [0.0, 1.0, 7.5] {
            assert_eq!(g.eval(x), 3.0 + 1.0 / (x + 1.0));
        }
    }

    #[test]
    fn step_function_majorant() {
        let f: RealFn<f64> = Arc::new(|x: f64| (5.0 - x).floor());
        let m = f(T_MAX);
        let g = majorize_decreasing(f.clone(), m).unwrap();
        let xs = linspace(0.0, 40.0, 4001);
        for w in xs.windows(2) {
            assert!(g.eval(w[1]) < g.eval(w[0]));
            assert!(g.eval(w[0]) >= f(w[0]));
        }
    }

    #[test]
    fn tail_reaches_m_plus_reciprocal() {
        let f: RealFn<f64> = Arc::new(|x: f64| (-x).exp());
        let g = majorize_decreasing(f, 0.5).unwrap();
        assert_eq!(g.eval(30.0), 0.5 + 1.0 / 31.0);
        assert!((g.eval(1e9) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn rejects_increasing_and_low_m() {
        assert!(majorize_decreasing(Arc::new(|x: f64| x), 0.0).is_err());
        assert!(matches!(majorize_decreasing(Arc::new(|x: f64| 1.0 + (-x).exp()), 0.5), Err(PeaksError::Parameter(_))));
    }

    #[test]
    fn sontag_geometric() {
        let gamma = KLGenFunction::new("s*2^-t", |s: f64, t: f64| s * 2f64.powf(-t));
        let h = sontag_extension(&gamma, 4.0, 0.0).unwrap();
        assert_eq!(h.eval(0.0), 0.0);
        for i in 0..=500 {
            let t: f64 = i as f64 / 10.0;
            assert!(h.eval((-t).exp()) >= 4.0 * 2f64.powf(-t));
        }
    }

    #[test]
    fn sontag_inverse_roundtrip_near_zero() {
        let gamma = KLGenFunction::new("min", |s: f64, t: f64| s.min(10.0 / (t + 1.0)));
        let h = sontag_extension(&gamma, 3.0, 0.0).unwrap();
        for &t in &[0.3_f64, 5.0, 40.0, 600.0] {
            let y = h.eval((-t).exp());
            let back = h.ln_inverse(y).unwrap();
            assert!((back + t).abs() < 1e-6 * t.max(1.0), "t = {t}, back = {back}");
        }
    }

    #[test]
    fn worked_example_klgen_route() {
        let params = ExampleParams::new(9.0_f64, 0.1).unwrap();
        let cf = closed_forms(params);
        let n0 = cf.n_zero as f64;
        let c = 81.0 * (n0 + 1.0) / 3.0;
        let gamma = KLGenFunction::new("min(s, c/(t+1))", move |s: f64, t: f64| s.min(c / (t + 1.0)))
            .with_limit(|_| f64::NEG_INFINITY);
        let bound = KLGenUpperBound::new(gamma, Arc::new(|_: &[f64]| 27.0), 27.0);
        let mut seq = cf.sequence();
        let pair = pair_from_klgen(&bound, &mut seq, 1.0, 200).unwrap();
        assert!(pair.is_useful());
        assert!((pair.beta - (-1.0_f64).exp()).abs() < 1e-15);
        let sol = solve_stop(&seq, &pair).unwrap();
        assert_eq!(*sol.argmax.last().unwrap(), cf.k_s());
    }

    #[test]
    fn pair_to_klgen_theta_sup() {
        let params = ExampleParams::new(30.0_f64, 1.0 / 3.0).unwrap();
        let cf = closed_forms(params);
        let mut seq = cf.sequence();
        let raw = crate::gallery::pair_a(params, 10);
        let pair = verify_pair(&mut seq, raw.h, raw.beta, 100).unwrap();
        let sys = worked_system(params);
        let b = klgen_from_pair(&pair, &sys, 60).unwrap();
        assert!((b.theta_sup - 300.0).abs() < 1e-6);
        assert!(b.useful_flag);
        let r = verify_klgen_bound(&b, &sys, 50, 500).unwrap();
        assert!(r.passed && r.useful);
    }

    #[test]
    fn shrunk_gamma_violates() {
        let params = ExampleParams::new(30.0_f64, 1.0 / 3.0).unwrap();
        let cf = closed_forms(params);
        let mut seq = cf.sequence();
        let raw = pair_b(params, cf.n_zero);
        let pair = verify_pair(&mut seq, raw.h, raw.beta, 100).unwrap();
        let sys = worked_system(params);
        let b = klgen_from_pair(&pair, &sys, 60).unwrap();
        let g = b.gamma.clone();
        let shrunk = KLGenUpperBound::new(
            KLGenFunction::new("0.99 gamma", move |s, t| 0.99 * g.eval(s, t)),
            b.theta.clone(),
            b.theta_sup,
        );
        let r = verify_klgen_bound(&shrunk, &sys, 50, 500).unwrap();
        assert!(!r.passed && r.witness.is_some());
    }

    #[test]
    fn no_decay_never_useful() {
        let gamma = KLGenFunction::new("s", |s: f64, _| s);
        let mut seq = BoundedSequence::new("u", |k| if k == 3 { 2.0 } else { 1.0 });
        let bound = KLGenUpperBound::new(gamma, Arc::new(|_: &[f64]| 2.0), 2.0);
        let pair = pair_from_klgen(&bound, &mut seq, 2.0, 50).unwrap();
        assert!(!pair.is_useful());
    }
}
