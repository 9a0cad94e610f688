//! Opt-Lyapunov functions, operator ratios, compatibility certificates, and the routes
//! between them and useful pairs.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::{PeaksError, Result};
use crate::pairs::{verify_pair, MonotoneBijection, UsefulPair};
use crate::scalar::{
    bisect_increasing, bisection_tol, default_tol, from_usize, linspace, lit, to_f64, Ext, RealFn, Scalar,
};
use crate::seq::BoundedSequence;
use crate::systems::{DynamicalSystem, OVERFLOW_GUARD};

pub type ExtPointFn<S> = Arc<dyn Fn(&[S]) -> Ext<S> + Send + Sync>;

/// Threshold for approximate fixed points, ‖T(x) − x‖ ≤ δ.
pub const FIXED_POINT_DELTA: f64 = 1e-8;
/// Orbit depth used when probing the ambient space from X^in.
pub const PROBE_ORBIT_DEPTH: usize = 15;
/// Default truncation of the converse construction.
pub const YOSHIZAWA_K_MAX: usize = 1000;

/// x ↦ [0, +∞].
#[derive(Clone)]
pub struct PsdFunction<S> {
    eval: ExtPointFn<S>,
    pub witness: Option<Vec<S>>,
    pub label: String,
}

impl<S: fmt::Debug> fmt::Debug for PsdFunction<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PsdFunction({})", self.label)
    }
}

impl<S: Scalar> PsdFunction<S> {
    pub fn new(label: impl Into<String>, f: impl Fn(&[S]) -> Ext<S> + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(f), witness: None, label: label.into() }
    }

    pub fn from_arc(label: impl Into<String>, f: ExtPointFn<S>) -> Self {
        Self { eval: f, witness: None, label: label.into() }
    }

    /// A finite-valued function.
    pub fn finite(label: impl Into<String>, f: impl Fn(&[S]) -> S + Send + Sync + 'static) -> Self {
        Self::new(label, move |x| Ext::Finite(f(x)))
    }

    pub fn with_witness(mut self, x: Vec<S>) -> Self {
        self.witness = Some(x);
        self
    }

    pub fn eval(&self, x: &[S]) -> Ext<S> {
        (self.eval)(x)
    }

    fn positive_finite(&self, x: &[S]) -> Option<S> {
        self.eval(x).finite().filter(|&v| v > S::zero())
    }
}

fn finite_point<S: Scalar>(x: &[S]) -> bool {
    let guard = lit::<S>(OVERFLOW_GUARD);
    x.iter().all(|v| v.is_finite() && v.abs() <= guard)
}

/// X^in samples, their orbits to a short depth, and a grid on [−R, R]^d with R = 2·max|x|.
pub fn ambient_probe<S: Scalar>(system: &DynamicalSystem<S>, samples: usize) -> Vec<Vec<S>> {
    let base = system.initial_set.samples(samples.max(2));
    let mut out = Vec::new();
    for x in &base {
        out.extend(system.orbit(x, PROBE_ORBIT_DEPTH));
    }
    let r = base.iter().flatten().fold(S::zero(), |m, v| m.max(v.abs())) * lit(2.0);
    let r = if r > S::zero() { r } else { S::one() };
    let d = system.dim;
    let per_axis = ((samples.max(2) as f64).powf(1.0 / d as f64).round() as usize).clamp(3, 101) | 1;
    let axis = linspace(-r, r, per_axis);
    let mut idx = vec![0usize; d];
    loop {
        out.push(idx.iter().map(|&i| axis[i]).collect());
        let mut j = 0;
        while j < d {
            idx[j] += 1;
            if idx[j] < per_axis {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == d {
            break;
        }
    }
    out.retain(|x| finite_point(x));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioReport<S> {
    /// Sampled sup of P(T^k x)/P(x) over P(x) ∈ (0, ∞); +∞ if some image is +∞.
    pub ratio: S,
    /// P(T(x)) = 0 ⇒ P(T²(x)) = 0 on every probe point.
    pub n_condition: bool,
    pub positive_samples: usize,
}

fn ratio_on<S: Scalar>(
    p: &PsdFunction<S>,
    system: &DynamicalSystem<S>,
    k: usize,
    probe: &[Vec<S>],
) -> Result<RatioReport<S>> {
    let mut ratio = S::zero();
    let mut positive = 0;
    let mut n_condition = true;
    for x in probe {
        let t1 = system.map(x);
        if finite_point(&t1) && p.eval(&t1) == Ext::Finite(S::zero()) {
            let t2 = system.map(&t1);
            if finite_point(&t2) && p.eval(&t2) != Ext::Finite(S::zero()) {
                n_condition = false;
            }
        }
        let Some(px) = p.positive_finite(x) else { continue };
        let Ok(y) = system.iterate(x, k) else { continue };
        positive += 1;
        match p.eval(&y) {
            Ext::Infinite => ratio = S::infinity(),
            Ext::Finite(py) => ratio = ratio.max(py / px),
        }
    }
    if positive == 0 {
        return Err(PeaksError::Degenerate(format!("no sample with {} in (0, inf)", p.label)));
    }
    Ok(RatioReport { ratio, n_condition, positive_samples: positive })
}

/// Sampled N̂_{T^k}(P) together with the 𝒩(T) sample check.
pub fn operator_ratio<S: Scalar>(
    p: &PsdFunction<S>,
    system: &DynamicalSystem<S>,
    k: usize,
    samples: usize,
) -> Result<RatioReport<S>> {
    let mut probe = ambient_probe(system, samples);
    if let Some(w) = &p.witness {
        probe.push(w.clone());
    }
    ratio_on(p, system, k, &probe)
}

#[derive(Debug, Clone)]
pub struct OptLyapunovCandidate<S> {
    pub v: PsdFunction<S>,
    pub lambda: S,
    pub v_sup: S,
    pub ratio: S,
    pub n_condition: bool,
}

fn check_unit_open<S: Scalar>(name: &str, v: S) -> Result<()> {
    if v > S::zero() && v < S::one() {
        Ok(())
    } else {
        Err(PeaksError::Parameter(format!("{name} = {v} must lie in (0,1)")))
    }
}

fn sup_over<S: Scalar>(v: &PsdFunction<S>, points: &[Vec<S>]) -> Ext<S> {
    points.iter().fold(Ext::Finite(S::zero()), |m, x| m.max(v.eval(x)))
}

/// Samples decrement, nonnegativity, V_sup ∈ (0,1], orbit containment and fixed-point values.
pub fn verify_opt_lyapunov<S: Scalar>(
    v: PsdFunction<S>,
    system: &DynamicalSystem<S>,
    lambda: S,
    samples: usize,
) -> Result<OptLyapunovCandidate<S>> {
    check_unit_open("lambda", lambda)?;
    let tol = default_tol::<S>().max(lit(1e-10));
    let delta = lit::<S>(FIXED_POINT_DELTA);
    let mut probe = ambient_probe(system, samples);
    if let Some(w) = &v.witness {
        probe.push(w.clone());
    }
    for x in &probe {
        let vx = v.eval(x);
        if let Ext::Finite(a) = vx {
            if a < -tol {
                return Err(PeaksError::Precondition(format!("{} = {a} < 0 at {x:?}", v.label)));
            }
        }
        let tx = system.map(x);
        if !finite_point(&tx) {
            continue;
        }
        if let Ext::Finite(a) = vx {
            let bound = lambda * a;
            let image = v.eval(&tx);
            let exceeded = match image {
                Ext::Infinite => true,
                Ext::Finite(b) => b > bound + tol * S::one().max(a),
            };
            if exceeded {
                return Err(PeaksError::Decrement {
                    point: x.iter().map(|&c| to_f64(c)).collect(),
                    image: to_f64(image.to_float()),
                    bound: to_f64(bound),
                });
            }
            let gap = tx.iter().zip(x).fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs()));
            if gap <= delta && a > delta.sqrt() {
                return Err(PeaksError::Precondition(format!(
                    "approximate fixed point {x:?} has V = {a}, expected 0 or +inf"
                )));
            }
        }
    }
    let base = system.initial_set.samples(samples.max(2));
    let v_sup = match sup_over(&v, &base) {
        Ext::Infinite => return Err(PeaksError::Domain { value: f64::INFINITY, lo: 0.0, hi: 1.0 }),
        Ext::Finite(s) => s,
    };
    if !(v_sup > S::zero()) || v_sup > S::one() + tol {
        return Err(PeaksError::Domain { value: to_f64(v_sup), lo: 0.0, hi: 1.0 });
    }
    for x in &base {
        for (k, y) in system.orbit(x, PROBE_ORBIT_DEPTH).iter().enumerate() {
            if v.eval(y) > Ext::Finite(S::one() + tol) {
                return Err(PeaksError::Precondition(format!("orbit of {x:?} leaves V <= 1 at step {k}")));
            }
        }
    }
    let r = ratio_on(&v, system, 1, &probe)?;
    Ok(OptLyapunovCandidate {
        v,
        lambda,
        v_sup: v_sup.min(S::one()),
        ratio: r.ratio.min(lambda),
        n_condition: r.n_condition,
    })
}

/// α with α(I) = [0,1]; `checked_domain` is where monotonicity was last sampled.
#[derive(Clone)]
pub struct CompatibilityCertificate<S> {
    alpha: RealFn<S>,
    alpha_inverse: Option<RealFn<S>>,
    pub interval: (S, S),
    pub checked_domain: (S, S),
    pub label: String,
}

impl<S: fmt::Debug> fmt::Debug for CompatibilityCertificate<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CompatibilityCertificate({}, I = [{:?}, {:?}])", self.label, self.interval.0, self.interval.1)
    }
}

impl<S: Scalar> CompatibilityCertificate<S> {
    /// Checks α(min I) = 0, α(max I) = 1 and strict increase on I.
    pub fn new(label: impl Into<String>, alpha: RealFn<S>, interval: (S, S)) -> Result<Self> {
        let label = label.into();
        let (a, b) = interval;
        if !(a < b) {
            return Err(PeaksError::Parameter(format!("interval [{a}, {b}] is empty")));
        }
        let tol = lit::<S>(1e-9);
        if alpha(a).abs() > tol || (alpha(b) - S::one()).abs() > tol {
            return Err(PeaksError::Parameter(format!(
                "{label}: alpha(I) = [{}, {}], expected [0, 1]",
                alpha(a),
                alpha(b)
            )));
        }
        let cert = Self { alpha, alpha_inverse: None, interval, checked_domain: interval, label };
        cert.check_monotone(a, b, 257)?;
        Ok(cert)
    }

    pub fn with_inverse(mut self, inv: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        self.alpha_inverse = Some(Arc::new(inv));
        self
    }

    pub fn alpha(&self, s: S) -> S {
        (self.alpha)(s)
    }

    pub fn alpha_arc(&self) -> RealFn<S> {
        self.alpha.clone()
    }

    /// α⁻¹(y), closed form when available, else bisection with bracket doubling.
    pub fn alpha_inverse(&self, y: S) -> Result<S> {
        if let Some(inv) = &self.alpha_inverse {
            return Ok(inv(y));
        }
        let (mut lo, mut hi) = self.interval;
        let mut w = hi - lo;
        for _ in 0..200 {
            if self.alpha(lo) <= y {
                break;
            }
            lo = lo - w;
            w = w + w;
        }
        let mut w = self.interval.1 - self.interval.0;
        for _ in 0..200 {
            if self.alpha(hi) >= y {
                break;
            }
            hi = hi + w;
            w = w + w;
        }
        if !(self.alpha(lo) <= y && self.alpha(hi) >= y) {
            return Err(PeaksError::Domain {
                value: to_f64(y),
                lo: to_f64(self.alpha(lo)),
                hi: to_f64(self.alpha(hi)),
            });
        }
        Ok(bisect_increasing(|s| self.alpha(s), y, lo, hi, bisection_tol::<S>() * S::one().max(hi.abs())))
    }

    fn check_monotone(&self, a: S, b: S, n: usize) -> Result<()> {
        let xs = linspace(a, b, n);
        for w in xs.windows(2) {
            if !(self.alpha(w[0]) < self.alpha(w[1])) {
                return Err(PeaksError::Precondition(format!(
                    "{}: alpha not strictly increasing on [{}, {}]",
                    self.label, w[0], w[1]
                )));
            }
        }
        Ok(())
    }
}

/// α(s) = s − ν_opt + min{η, ε}.
pub fn certificate_from_margins<S: Scalar>(nu_opt: S, epsilon: S, eta: S) -> Result<CompatibilityCertificate<S>> {
    if !(epsilon > S::zero() && eta > S::zero()) {
        return Err(PeaksError::Parameter(format!("margins must be positive, got epsilon = {epsilon}, eta = {eta}")));
    }
    let m = epsilon.min(eta);
    let lo = nu_opt - m;
    let cert = CompatibilityCertificate {
        alpha: Arc::new(move |s| (s - nu_opt) + m),
        alpha_inverse: None,
        interval: (lo, lo + S::one()),
        checked_domain: (lo, lo + S::one()),
        label: format!("s - {nu_opt} + {m}"),
    };
    Ok(cert.with_inverse(move |y| y + nu_opt - m))
}

#[derive(Debug, Clone)]
pub struct CertificateReport<S> {
    /// min over sampled (x, k) of V(T^k x) − α(φ(T^k x)).
    pub worst_margin: S,
    pub witness: Option<(Vec<S>, usize)>,
    pub monotone: bool,
    /// Least k ≤ horizon with α(ν_k) > 0.
    pub positive_at: Option<usize>,
    /// [min, max] of ν over the prefix.
    pub nu_range: (S, S),
    /// α at the tail bound τ(horizon), when the sequence has one.
    pub limsup_alpha: Option<S>,
    pub passed: bool,
}

/// Checks α∘φ ≤ V along sampled orbits, monotonicity of α on conv(I ∪ range ν) and α(ν_k) > 0 somewhere.
pub fn verify_certificate<S: Scalar>(
    cert: &CompatibilityCertificate<S>,
    v: &PsdFunction<S>,
    system: &DynamicalSystem<S>,
    seq: &BoundedSequence<S>,
    horizon: usize,
    samples: usize,
) -> Result<CertificateReport<S>> {
    let tol = default_tol::<S>().max(lit(1e-10));
    let nu = seq.prefix(horizon)?;
    let lo = nu.iter().copied().fold(S::infinity(), S::min);
    let hi = nu.iter().copied().fold(S::neg_infinity(), S::max);
    let positive_at = nu.iter().position(|&u| cert.alpha(u) > S::zero());
    // Monotonicity is sampled where ν lives, clipped so that diverging tails stay testable.
    let span = (cert.interval.1 - cert.interval.0).max(S::one());
    let d_lo = cert.interval.0.min(lo.max(cert.interval.0 - lit::<S>(1e6) * span));
    let d_hi = cert.interval.1.max(hi);
    let monotone = cert.check_monotone(d_lo, d_hi, 1025).is_ok();
    let mut worst = S::infinity();
    let mut witness = None;
    for x in system.initial_set.samples(samples.max(2)) {
        for (k, y) in system.orbit(&x, horizon).iter().enumerate() {
            let a = cert.alpha(system.phi(y));
            let margin = match v.eval(y) {
                Ext::Infinite => continue,
                Ext::Finite(b) => b - a,
            };
            if margin < worst {
                worst = margin;
                if margin < -tol * S::one().max(a.abs()) {
                    witness = Some((x.clone(), k));
                }
            }
        }
    }
    let limsup_alpha = seq.tail_bound(horizon).map(|t| cert.alpha(t));
    let limsup_ok = limsup_alpha.is_none_or(|a| a <= tol);
    let passed = witness.is_none() && monotone && positive_at.is_some() && limsup_ok;
    Ok(CertificateReport {
        worst_margin: worst,
        witness,
        monotone,
        positive_at,
        nu_range: (lo, hi),
        limsup_alpha,
        passed,
    })
}

#[derive(Debug, Clone)]
pub enum DirectOutcome<S> {
    Pair(UsefulPair<S>),
    /// N̂_T(V) = 0: the maximum is attained at k = 0.
    ImmediateOptimum {
        k_s: usize,
        nu_opt: S,
    },
}

/// (α⁻¹(x·V̄), N̂_T(V)), falling back to the declared λ when the sampled ratio does not verify.
pub fn pair_from_lyapunov<S: Scalar>(
    cand: &OptLyapunovCandidate<S>,
    cert: &CompatibilityCertificate<S>,
    seq: &mut BoundedSequence<S>,
    horizon: usize,
) -> Result<DirectOutcome<S>> {
    if cand.ratio == S::zero() {
        return Ok(DirectOutcome::ImmediateOptimum { k_s: 0, nu_opt: seq.eval(0)? });
    }
    let v_sup = cand.v_sup;
    let c1 = cert.clone();
    let c2 = cert.clone();
    let c3 = cert.clone();
    let h = MonotoneBijection::new(format!("alpha^-1(x*{v_sup})"), move |x| {
        c1.alpha_inverse(x * v_sup).unwrap_or(S::nan())
    })
    .with_inverse(move |y| c2.alpha(y) / v_sup)
    .with_log_inverse(move |y| c3.alpha(y).ln() - v_sup.ln());
    if h.h0().is_nan() || h.h1().is_nan() {
        return Err(PeaksError::Domain { value: to_f64(v_sup), lo: 0.0, hi: 1.0 });
    }
    let mut betas = vec![cand.ratio];
    if cand.lambda > cand.ratio {
        betas.push(cand.lambda);
    }
    let mut last_err = None;
    for beta in betas {
        let mut s = seq.clone();
        match verify_pair(&mut s, h.clone(), beta, horizon) {
            Ok(pair) if pair.is_useful() => {
                *seq = s;
                return Ok(DirectOutcome::Pair(pair));
            }
            Ok(_) => last_err = Some(PeaksError::NotUseful { horizon }),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one beta tried"))
}

/// Output of the converse construction.
#[derive(Clone)]
pub struct YoshizawaResult<S> {
    pub v: PsdFunction<S>,
    pub h_hat: CompatibilityCertificate<S>,
    truncations: Arc<AtomicUsize>,
}

impl<S> fmt::Debug for YoshizawaResult<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "YoshizawaResult(truncations = {})", self.truncations())
    }
}

impl<S> YoshizawaResult<S> {
    /// Evaluations so far whose supremum still had a positive term in the last window before k_max.
    pub fn truncations(&self) -> usize {
        self.truncations.load(Ordering::Relaxed)
    }
}

/// V(x) = sup_{k ≤ k_max} β^{−k}·h⁻¹(ω(φ(T^k x))) and the certificate ĥ.
pub fn yoshizawa_construct<S: Scalar>(
    pair: &UsefulPair<S>,
    system: &DynamicalSystem<S>,
    k_max: usize,
) -> Result<YoshizawaResult<S>> {
    if !pair.verified {
        return Err(PeaksError::CertificateRequired("the pair must be verified first".into()));
    }
    if !pair.is_useful() {
        return Err(PeaksError::NotUseful { horizon: pair.verified_horizon });
    }
    let h = pair.h.clone();
    let (h0, h1) = (h.h0(), h.h1());
    let ln_beta = pair.beta.ln();
    let map = system.map_arc();
    let phi = system.phi_arc();
    let window = (k_max / 10).max(1);
    let truncations = Arc::new(AtomicUsize::new(0));
    let counter = truncations.clone();
    let hv = h.clone();
    let v = PsdFunction::new("yoshizawa", move |x: &[S]| {
        let mut y = x.to_vec();
        let mut best = S::zero();
        let mut late_positive = false;
        for k in 0..=k_max {
            if k > 0 {
                y = map(&y);
                if !finite_point(&y) {
                    break;
                }
            }
            let w = phi(&y).max(h0).min(h1);
            if w <= h0 {
                continue;
            }
            let Ok(l) = hv.ln_inverse(w) else { continue };
            let term = (l - from_usize::<S>(k) * ln_beta).exp();
            best = best.max(term);
            if k + window > k_max {
                late_positive = true;
            }
        }
        if late_positive {
            counter.fetch_add(1, Ordering::Relaxed);
        }
        Ext::Finite(best)
    });
    let (hi1, hi2) = (h.clone(), h.clone());
    let alpha: RealFn<S> = Arc::new(move |s| {
        if s <= h0 {
            s - h0
        } else if s <= h1 {
            hi1.inverse_eval(s).unwrap_or(S::nan())
        } else {
            S::one() + (s - h1)
        }
    });
    let h_hat = CompatibilityCertificate::new("h_hat", alpha, (h0, h1))?.with_inverse(move |y| {
        if y <= S::zero() {
            y + h0
        } else if y <= S::one() {
            hi2.eval(y)
        } else {
            h1 + (y - S::one())
        }
    });
    Ok(YoshizawaResult { v, h_hat, truncations })
}

/// Solution g of g(f(x)) = factor·g(x) with g(0) = 0, built cell by cell from an affine seed.
///
/// Expansion mode needs factor > 1 and f(x) > x; contraction mode needs factor ∈ (0,1), f(x) < x.
pub fn kappa_conjugacy<S: Scalar>(f: RealFn<S>, factor: S, contraction: bool, x_max: S) -> Result<RealFn<S>> {
    let xs: Vec<S> = linspace(S::zero(), x_max, 1001).into_iter().skip(1).collect();
    if contraction {
        check_unit_open("factor", factor)?;
    } else if !(factor > S::one()) {
        return Err(PeaksError::Parameter(format!("factor = {factor} must exceed 1")));
    }
    for &x in &xs {
        let fx = f(x);
        let wrong_side = if contraction { !(fx < x) } else { !(fx > x) };
        if wrong_side {
            return Err(PeaksError::Precondition(format!(
                "f({x}) = {fx} is on the wrong side of x for {} mode",
                if contraction { "contraction" } else { "expansion" }
            )));
        }
    }
    for w in xs.windows(2) {
        if !(f(w[0]) < f(w[1])) {
            return Err(PeaksError::Precondition(format!("f is not strictly increasing near {}", w[0])));
        }
    }
    if contraction && !(f(S::zero()).abs() <= default_tol::<S>()) {
        return Err(PeaksError::Precondition("f(0) must be 0 in contraction mode".into()));
    }
    const MAX_STEPS: usize = 1_000_000;
    let one = S::one();
    let f1 = f(one);
    let inverse = {
        let f = f.clone();
        move |y: S| -> S {
            // f⁻¹(y), lower bracket 0, upper bracket grown by doubling.
            let mut hi = y.abs().max(one);
            for _ in 0..2000 {
                if f(hi) >= y {
                    break;
                }
                hi = hi + hi;
            }
            bisect_increasing(|x| f(x), y, S::zero(), hi, S::epsilon() * hi)
        }
    };
    let g: RealFn<S> = if !contraction {
        let slope = (factor - one) / (f1 - one);
        Arc::new(move |x: S| {
            if x <= S::zero() {
                return S::zero();
            }
            let seed = |z: S| one + slope * (z - one);
            let mut z = x;
            let mut scale = one;
            let mut steps = 0;
            while z >= f1 && steps < MAX_STEPS {
                z = inverse(z);
                scale = scale * factor;
                steps += 1;
            }
            while z < one && steps < MAX_STEPS {
                z = f(z);
                scale = scale / factor;
                steps += 1;
            }
            if steps >= MAX_STEPS {
                return S::nan();
            }
            scale * seed(z)
        })
    } else {
        let r1 = f1;
        let slope = (one - factor) / (one - r1);
        Arc::new(move |x: S| {
            if x <= S::zero() {
                return S::zero();
            }
            let seed = |z: S| factor + slope * (z - r1);
            let mut z = x;
            let mut scale = one;
            let mut steps = 0;
            while z >= one && steps < MAX_STEPS {
                z = f(z);
                scale = scale / factor;
                steps += 1;
            }
            while z < r1 && steps < MAX_STEPS {
                z = inverse(z);
                scale = scale * factor;
                steps += 1;
            }
            if steps >= MAX_STEPS {
                return S::nan();
            }
            scale * seed(z)
        })
    };
    Ok(g)
}

/// From W∘T ≤ ρ∘W to an Opt-Lyapunov candidate with decrement λ: V = g∘W / sup_{X^in} g∘W.
pub fn normalize_rho_decrease<S: Scalar>(
    w: &PsdFunction<S>,
    rho: RealFn<S>,
    system: &DynamicalSystem<S>,
    lambda: S,
    samples: usize,
) -> Result<OptLyapunovCandidate<S>> {
    check_unit_open("lambda", lambda)?;
    let probe = ambient_probe(system, samples);
    let w_max = match sup_over(w, &probe) {
        Ext::Infinite => return Err(PeaksError::Precondition("W must be finite on the probe".into())),
        Ext::Finite(m) => m,
    };
    let x_max = lit::<S>(10.0).max(w_max * lit(2.0));
    if rho(S::zero()).abs() > default_tol::<S>() {
        return Err(PeaksError::Precondition("rho(0) must be 0".into()));
    }
    let g = kappa_conjugacy(rho.clone(), lambda, true, x_max)?;
    let tol = default_tol::<S>().max(lit(1e-10));
    for x in &probe {
        let (Ext::Finite(a), tx) = (w.eval(x), system.map(x)) else { continue };
        if !finite_point(&tx) {
            continue;
        }
        if let Ext::Finite(b) = w.eval(&tx) {
            if b > rho(a) + tol * S::one().max(a) {
                return Err(PeaksError::Decrement {
                    point: x.iter().map(|&c| to_f64(c)).collect(),
                    image: to_f64(b),
                    bound: to_f64(rho(a)),
                });
            }
        }
    }
    let base = system.initial_set.samples(samples.max(2));
    let gw = |x: &[S]| w.eval(x).finite().map(|a| g(a));
    let sup = base.iter().filter_map(|x| gw(x)).fold(S::zero(), S::max);
    if !(sup > S::zero() && sup.is_finite()) {
        return Err(PeaksError::Degenerate(format!("sup of g(W) over X^in is {sup}")));
    }
    let wc = w.clone();
    let v = PsdFunction::new(format!("g({})/{sup}", w.label), move |x: &[S]| match wc.eval(x) {
        Ext::Infinite => Ext::Infinite,
        Ext::Finite(a) => Ext::Finite(g(a) / sup),
    });
    let v = match &w.witness {
        Some(p) => v.with_witness(p.clone()),
        None => v,
    };
    verify_opt_lyapunov(v, system, lambda, samples)
}

/// Unit-ball directions for the ball supremum: a radial grid in dimension 1 and 2, the cube grid otherwise.
fn unit_ball_grid<S: Scalar>(d: usize, n: usize) -> Vec<Vec<S>> {
    match d {
        1 => linspace(-S::one(), S::one(), 2 * n + 1).into_iter().map(|u| vec![u]).collect(),
        2 => {
            let mut out = vec![vec![S::zero(), S::zero()]];
            let dirs = 4 * n;
            for i in 0..dirs {
                let a = lit::<S>(std::f64::consts::TAU * i as f64 / dirs as f64);
                for j in 1..=n {
                    let r = from_usize::<S>(j) / from_usize(n);
                    out.push(vec![r * a.cos(), r * a.sin()]);
                }
            }
            out
        }
        _ => {
            let axis = linspace(-S::one(), S::one(), 9);
            let mut out = vec![];
            let mut idx = vec![0usize; d];
            loop {
                let u: Vec<S> = idx.iter().map(|&i| axis[i]).collect();
                if u.iter().fold(S::zero(), |m, &c| m + c * c) <= S::one() {
                    out.push(u);
                }
                let mut j = 0;
                while j < d {
                    idx[j] += 1;
                    if idx[j] < axis.len() {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == d {
                    break;
                }
            }
            out
        }
    }
}

/// α^φ(s) ≈ sup_{‖y‖ ≤ s} φ(y), sampled.
pub fn ball_sup<S: Scalar>(system: &DynamicalSystem<S>, grid: usize) -> RealFn<S> {
    let dirs = Arc::new(unit_ball_grid::<S>(system.dim, grid.max(2)));
    let phi = system.phi_arc();
    Arc::new(move |s: S| {
        dirs.iter()
            .map(|u| {
                let y: Vec<S> = u.iter().map(|&c| c * s).collect();
                phi(&y)
            })
            .fold(S::neg_infinity(), S::max)
    })
}

/// The classical route: h(x) = α(α₁⁻¹(x·V̄)) with α = ball sup of φ plus ψ, β = N̂_T(V).
pub fn hahn_majorant_pair<S: Scalar>(
    system: &DynamicalSystem<S>,
    v: &PsdFunction<S>,
    alpha1: RealFn<S>,
    psi: RealFn<S>,
    samples: usize,
    seq: &mut BoundedSequence<S>,
    horizon: usize,
) -> Result<UsefulPair<S>> {
    let origin = vec![S::zero(); system.dim];
    let tol = default_tol::<S>().max(lit(1e-10));
    if system.phi(&origin).abs() > tol {
        return Err(PeaksError::Precondition("phi(0) must be 0; shift the objective first".into()));
    }
    let probe = ambient_probe(system, samples);
    for x in &probe {
        let norm = x.iter().fold(S::zero(), |m, &c| m + c * c).sqrt();
        if let Ext::Finite(vx) = v.eval(x) {
            if alpha1(norm) > vx + tol * S::one().max(vx) {
                return Err(PeaksError::Precondition(format!("alpha1(|x|) > V(x) at {x:?}")));
            }
        }
    }
    let v_sup = match sup_over(v, &system.initial_set.samples(samples.max(2))) {
        Ext::Finite(s) if s > S::zero() => s,
        other => return Err(PeaksError::Degenerate(format!("sup of V over X^in is {other}"))),
    };
    let beta = ratio_on(v, system, 1, &probe)?.ratio;
    check_unit_open("beta (sampled ratio of V)", beta)?;
    let ball = ball_sup(system, 100);
    let alpha = move |s: S| ball(s) + psi(s);
    let a1 = alpha1.clone();
    let a1_inv = move |y: S| -> S {
        if y <= a1(S::zero()) {
            return S::zero();
        }
        let mut hi = S::one();
        for _ in 0..2000 {
            if a1(hi) >= y {
                break;
            }
            hi = hi + hi;
        }
        bisect_increasing(|s| a1(s), y, S::zero(), hi, bisection_tol::<S>() * hi)
    };
    let h = MonotoneBijection::new("alpha(alpha1^-1(x*V_sup))", move |x| alpha(a1_inv(x * v_sup)));
    let pair = verify_pair(seq, h, beta, horizon)?;
    Ok(pair)
}
