//! Envelope functions h on [0,1], useful pairs (h, β), the stopping formula 𝔉 and the
//! optimal affine envelope.

use std::fmt;
use std::sync::Arc;

use crate::error::{PeaksError, Result};
use crate::scalar::{
    bisect_increasing, bisection_tol, default_tol, from_usize, linspace, lit, to_f64, Ext, RealFn, Scalar,
};
use crate::seq::BoundedSequence;

/// Strictly increasing continuous h on [0,1], invertible on [h(0), h(1)].
#[derive(Clone)]
pub struct MonotoneBijection<S> {
    eval: RealFn<S>,
    inverse_hint: Option<RealFn<S>>,
    // ln h⁻¹(y), for envelopes whose inverse underflows near h(0).
    log_inverse_hint: Option<RealFn<S>>,
    // The closed inverse is exact next to h(0), so S(u,h) needs no tolerance band.
    sharp_h0: bool,
    h0: S,
    h1: S,
    pub label: String,
}

impl<S: fmt::Debug> fmt::Debug for MonotoneBijection<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MonotoneBijection({}, h0 = {:?}, h1 = {:?})", self.label, self.h0, self.h1)
    }
}

impl<S: Scalar> MonotoneBijection<S> {
    pub fn new(label: impl Into<String>, f: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        let h0 = f(S::zero());
        let h1 = f(S::one());
        Self {
            eval: Arc::new(f),
            inverse_hint: None,
            log_inverse_hint: None,
            sharp_h0: false,
            h0,
            h1,
            label: label.into(),
        }
    }

    pub fn from_arc(label: impl Into<String>, f: RealFn<S>) -> Self {
        let (h0, h1) = (f(S::zero()), f(S::one()));
        Self { eval: f, inverse_hint: None, log_inverse_hint: None, sharp_h0: false, h0, h1, label: label.into() }
    }

    pub fn with_inverse(mut self, inv: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        self.inverse_hint = Some(Arc::new(inv));
        self
    }

    pub fn with_log_inverse(mut self, linv: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        self.log_inverse_hint = Some(Arc::new(linv));
        self
    }

    /// Declares the log-inverse exact near h(0). Membership in S(u,h) is then
    /// ln h⁻¹(u) > −∞ rather than u clearing h(0) by a relative tolerance.
    pub fn with_sharp_h0(mut self) -> Self {
        self.sharp_h0 = self.log_inverse_hint.is_some();
        self
    }

    /// Overrides h(0); used when the closed form at 0 is a limit.
    pub(crate) fn with_h0(mut self, h0: S) -> Self {
        self.h0 = h0;
        self
    }

    /// x ↦ a·x.
    pub fn linear(a: S) -> Self {
        Self::affine(a, S::zero())
    }

    /// x ↦ a·x + c with a > 0.
    pub fn affine(a: S, c: S) -> Self {
        Self::new(format!("{a}*x + {c}"), move |x| a * x + c).with_inverse(move |y| (y - c) / a)
    }

    pub fn eval(&self, x: S) -> S {
        if x == S::zero() {
            return self.h0;
        }
        (self.eval)(x)
    }

    pub fn h0(&self) -> S {
        self.h0
    }

    pub fn h1(&self) -> S {
        self.h1
    }

    pub fn has_closed_inverse(&self) -> bool {
        self.inverse_hint.is_some()
    }

    fn endpoint_slack(&self) -> S {
        let scale = S::one().max(self.h0.abs()).max(self.h1.abs());
        S::epsilon() * lit(8.0) * scale
    }

    /// h⁻¹ on [h(0), h(1)].
    pub fn inverse_eval(&self, y: S) -> Result<S> {
        let slack = self.endpoint_slack();
        if y.is_nan() || y < self.h0 - slack || y > self.h1 + slack {
            return Err(PeaksError::Domain { value: to_f64(y), lo: to_f64(self.h0), hi: to_f64(self.h1) });
        }
        if y >= self.h1 {
            return Ok(S::one());
        }
        if y <= self.h0 {
            return Ok(S::zero());
        }
        if let Some(inv) = &self.inverse_hint {
            return Ok(inv(y).max(S::zero()).min(S::one()));
        }
        if let Some(linv) = &self.log_inverse_hint {
            return Ok(linv(y).exp().min(S::one()));
        }
        Ok(bisect_increasing(|x| self.eval(x), y, S::zero(), S::one(), bisection_tol::<S>()))
    }

    /// ln h⁻¹(y); −∞ at y = h(0).
    pub fn ln_inverse(&self, y: S) -> Result<S> {
        if let Some(linv) = &self.log_inverse_hint {
            let slack = self.endpoint_slack();
            if y.is_nan() || y < self.h0 - slack || y > self.h1 + slack {
                return Err(PeaksError::Domain { value: to_f64(y), lo: to_f64(self.h0), hi: to_f64(self.h1) });
            }
            if y >= self.h1 {
                return Ok(S::zero());
            }
            if y <= self.h0 {
                return Ok(S::neg_infinity());
            }
            return Ok(linv(y).min(S::zero()));
        }
        Ok(self.inverse_eval(y)?.ln())
    }

    /// Sampled invariants: strict increase, a continuity proxy and inverse roundtrip.
    pub fn check(&self, samples: usize) -> Result<()> {
        let xs = linspace(S::zero(), S::one(), samples.max(2));
        let delta = lit::<S>(1e-9);
        let span = (self.h1 - self.h0).abs().max(S::one());
        for w in xs.windows(2) {
            let (a, b) = (self.eval(w[0]), self.eval(w[1]));
            if !(a < b) {
                return Err(PeaksError::Precondition(format!(
                    "{} not strictly increasing between {} and {}",
                    self.label, w[0], w[1]
                )));
            }
            let x = w[0];
            if (self.eval(x + delta) - a).abs() > span * lit(1e-3) {
                return Err(PeaksError::Precondition(format!("{} looks discontinuous at {x}", self.label)));
            }
        }
        let tol = span * lit::<S>(1e-9).max(S::epsilon() * lit(64.0));
        for &x in &xs {
            let y = self.eval(x);
            let back = self.eval(self.inverse_eval(y)?);
            if (back - y).abs() > tol {
                return Err(PeaksError::Precondition(format!("{} inverse roundtrip fails at {x}", self.label)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    Min,
    Max,
    Convex,
}

/// Pointwise min, max or convex combination t·h1 + (1−t)·h2.
pub fn combine<S: Scalar>(
    h1: &MonotoneBijection<S>,
    h2: &MonotoneBijection<S>,
    mode: CombineMode,
    t: Option<S>,
) -> Result<MonotoneBijection<S>> {
    let (a, b) = (h1.clone(), h2.clone());
    let out = match (mode, t) {
        (CombineMode::Min, None) => {
            MonotoneBijection::new(format!("min({}, {})", a.label, b.label), move |x| a.eval(x).min(b.eval(x)))
        }
        (CombineMode::Max, None) => {
            MonotoneBijection::new(format!("max({}, {})", a.label, b.label), move |x| a.eval(x).max(b.eval(x)))
        }
        (CombineMode::Convex, Some(t)) if t >= S::zero() && t <= S::one() => {
            if t == S::one() {
                return Ok(h1.clone());
            }
            if t == S::zero() {
                return Ok(h2.clone());
            }
            MonotoneBijection::new(format!("{t}*{} + (1-{t})*{}", a.label, b.label), move |x| {
                t * a.eval(x) + (S::one() - t) * b.eval(x)
            })
        }
        (CombineMode::Convex, Some(t)) => {
            return Err(PeaksError::Parameter(format!("convex weight {t} outside [0,1]")))
        }
        (CombineMode::Convex, None) => return Err(PeaksError::Parameter("convex combination needs t".into())),
        (_, Some(_)) => return Err(PeaksError::Parameter("t is only meaningful for convex mode".into())),
    };
    Ok(out)
}

/// (h, β) plus what verification established about it.
#[derive(Debug, Clone)]
pub struct UsefulPair<S> {
    pub h: MonotoneBijection<S>,
    pub beta: S,
    pub verified_horizon: usize,
    /// Least k ≤ verified_horizon with u_k > h(0).
    pub useful_witness: Option<usize>,
    pub verified: bool,
    /// S(u,h) ∩ [0, verified_horizon].
    pub s_indices: Vec<usize>,
    /// u_0 = h(1), hence u_0 is the maximum.
    pub u0_is_max: bool,
}

impl<S: Scalar> UsefulPair<S> {
    /// An unverified candidate; solve loops check domination as they go.
    pub fn candidate(h: MonotoneBijection<S>, beta: S) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self {
            h,
            beta,
            verified_horizon: 0,
            useful_witness: None,
            verified: false,
            s_indices: vec![],
            u0_is_max: false,
        })
    }

    /// h(β^k).
    pub fn envelope(&self, k: usize) -> S {
        envelope(&self.h, self.beta, k)
    }

    pub fn is_useful(&self) -> bool {
        self.useful_witness.is_some()
    }
}

fn check_beta<S: Scalar>(beta: S) -> Result<()> {
    if beta > S::zero() && beta < S::one() {
        Ok(())
    } else {
        Err(PeaksError::Parameter(format!("beta = {beta} must lie in (0,1)")))
    }
}

pub(crate) fn envelope<S: Scalar>(h: &MonotoneBijection<S>, beta: S, k: usize) -> S {
    h.eval(beta.powf(from_usize(k)))
}

pub(crate) fn domination_slack<S: Scalar>(bound: S) -> S {
    default_tol::<S>() * S::one().max(bound.abs())
}

/// k ∈ S(u,h), with values within tolerance of h(0) excluded unless h is sharp there.
pub(crate) fn in_s<S: Scalar>(u: S, h: &MonotoneBijection<S>) -> bool {
    let h0 = h.h0();
    if h.sharp_h0 {
        return u > h0 && h.ln_inverse(u).is_ok_and(|l| l.is_finite());
    }
    u > h0 + default_tol::<S>() * S::one().max(h0.abs())
}

/// Checks u_k ≤ h(β^k) on [0, K], records S(u,h) and installs τ(k) = h(β^{k+1}) on `seq`.
pub fn verify_pair<S: Scalar>(
    seq: &mut BoundedSequence<S>,
    h: MonotoneBijection<S>,
    beta: S,
    horizon: usize,
) -> Result<UsefulPair<S>> {
    check_beta(beta)?;
    let mut s_indices = Vec::new();
    let mut u0 = S::zero();
    for k in 0..=horizon {
        let u = seq.eval(k)?;
        let bound = envelope(&h, beta, k);
        if u > bound + domination_slack(bound) {
            return Err(PeaksError::Violation { k, value: to_f64(u), bound: to_f64(bound) });
        }
        if in_s(u, &h) {
            s_indices.push(k);
        }
        if k == 0 {
            u0 = u;
        }
    }
    let u0_is_max = (u0 - h.h1()).abs() <= domination_slack(h.h1());
    let tail_h = h.clone();
    *seq = seq.clone().with_tail_bound(move |k| envelope(&tail_h, beta, k + 1));
    Ok(UsefulPair {
        h,
        beta,
        verified_horizon: horizon,
        useful_witness: s_indices.first().copied(),
        verified: true,
        s_indices,
        u0_is_max,
    })
}

/// β̲_{u,h}: the least β that the prefix [0, K] allows for this h.
pub fn beta_infimum<S: Scalar>(seq: &BoundedSequence<S>, h: &MonotoneBijection<S>, horizon: usize) -> Result<S> {
    let mut best = S::zero();
    for k in 0..=horizon {
        let u = seq.eval(k)?;
        let over = if k == 0 { u > h.h1() + domination_slack(h.h1()) } else { u >= h.h1() };
        if over {
            return Err(PeaksError::NotInEnvelope { k, value: to_f64(u), h1: to_f64(h.h1()) });
        }
        if k >= 1 && in_s(u, h) {
            let v = (h.ln_inverse(u)? / from_usize(k)).exp();
            best = best.max(v);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingReport<S> {
    pub f_value: Ext<S>,
    /// ⌊𝔉⌋; `None` stands for +∞.
    pub floor_f: Option<usize>,
    /// min{j : h(β^j) < u_k} = floor_f + 1.
    pub minimal_drop_index: Option<usize>,
    pub input_k: usize,
}

// Drop scans past this many steps mean the formula and the envelope disagree badly.
const DROP_CORRECTION_STEPS: usize = 64;

pub(crate) fn stopping_report<S: Scalar>(
    h: &MonotoneBijection<S>,
    beta: S,
    u: S,
    k: usize,
) -> Result<StoppingReport<S>> {
    if !in_s(u, h) {
        return Ok(StoppingReport { f_value: Ext::Infinite, floor_f: None, minimal_drop_index: None, input_k: k });
    }
    let kk = from_usize::<S>(k);
    let f = if k == 0 && (u - h.h1()).abs() <= domination_slack(h.h1()) {
        S::zero()
    } else {
        let ln_x = h.ln_inverse(u.min(h.h1()))?;
        // 𝔉 ≥ k for any dominating pair; rounding can only push it below.
        (ln_x / beta.ln()).max(kk)
    };
    if !f.is_finite() {
        return Ok(StoppingReport { f_value: Ext::Infinite, floor_f: None, minimal_drop_index: None, input_k: k });
    }
    let mut fl = f.floor().to_usize().unwrap_or(usize::MAX - 1).max(k);
    // Align the floor with the envelope as actually evaluated, so that
    // h(β^{fl+1}) < u_k ≤ h(β^fl). A sharp h is compared in log space already:
    // there h(β^k) can round onto u_k even though β^k < h⁻¹(u_k).
    let steps = if h.sharp_h0 { 0 } else { DROP_CORRECTION_STEPS };
    for _ in 0..steps {
        if fl > k && envelope(h, beta, fl) < u {
            fl -= 1;
        } else {
            break;
        }
    }
    for _ in 0..steps {
        if envelope(h, beta, fl + 1) >= u {
            fl += 1;
        } else {
            break;
        }
    }
    Ok(StoppingReport { f_value: Ext::Finite(f), floor_f: Some(fl), minimal_drop_index: Some(fl + 1), input_k: k })
}

/// 𝔉_u(k, h, β) for a verified pair.
pub fn formula_f<S: Scalar>(seq: &BoundedSequence<S>, k: usize, pair: &UsefulPair<S>) -> Result<StoppingReport<S>> {
    if !pair.verified {
        return Err(PeaksError::CertificateRequired("formula_f needs a verified pair".into()));
    }
    let u = seq.eval(k)?;
    stopping_report(&pair.h, pair.beta, u, k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopSolution<S> {
    /// Final stopping index; every term up to it was evaluated.
    pub k_stop: usize,
    pub max_value: S,
    pub argmax: Vec<usize>,
    /// (k, ⌊𝔉(k)⌋) at each strict record inside S(u,h).
    pub records: Vec<(usize, usize)>,
}

/// Evaluates u_0, u_1, … and recomputes 𝔉 only at strict records. It stops at the current
/// stopping index. With `check`, domination is verified on the fly.
pub(crate) fn adaptive_stop<S: Scalar>(
    seq: &BoundedSequence<S>,
    h: &MonotoneBijection<S>,
    beta: S,
    max_k: usize,
    check: bool,
) -> Result<StopSolution<S>> {
    let tol = default_tol::<S>();
    let mut best: Option<S> = None;
    let mut argmax = Vec::new();
    let mut stop: Option<usize> = None;
    let mut records = Vec::new();
    let mut k = 0usize;
    loop {
        if k > max_k {
            return Err(PeaksError::NotUseful { horizon: max_k });
        }
        let u = seq.eval(k)?;
        if check {
            let bound = envelope(h, beta, k);
            if u > bound + domination_slack(bound) {
                return Err(PeaksError::Violation { k, value: to_f64(u), bound: to_f64(bound) });
            }
        }
        match best {
            Some(b) if (u - b).abs() <= tol * S::one().max(b.abs()) => argmax.push(k),
            Some(b) if u < b => {}
            _ => {
                best = Some(u);
                argmax = vec![k];
                let rep = stopping_report(h, beta, u, k)?;
                if let Some(fl) = rep.floor_f {
                    stop = Some(stop.map_or(fl, |s| s.min(fl)));
                    records.push((k, fl));
                }
            }
        }
        if stop.is_some_and(|s| k >= s) {
            break;
        }
        k += 1;
    }
    Ok(StopSolution {
        k_stop: stop.expect("loop exits with a stop"),
        max_value: best.expect("nonempty"),
        argmax,
        records,
    })
}

/// Solves sup_n u_n: the maximum, all maximizers and the stopping index used.
pub fn solve_stop<S: Scalar>(seq: &BoundedSequence<S>, pair: &UsefulPair<S>) -> Result<StopSolution<S>> {
    if !pair.verified {
        return Err(PeaksError::CertificateRequired("solve_stop needs a verified pair".into()));
    }
    let Some(w) = pair.useful_witness else {
        return Err(PeaksError::NotUseful { horizon: pair.verified_horizon });
    };
    // The record standing at the witness lies in S, so a stopping index exists by step w.
    let _ = w;
    adaptive_stop(seq, &pair.h, pair.beta, usize::MAX, true)
}

/// Coefficients (a, b) of the optimal affine envelope u_k ≤ a·b^k + c, touching at K_s.
pub fn optimal_affine<S: Scalar>(prefix: &[S], k_s: usize, n_c: usize, c: S) -> Result<(S, S)> {
    let tol = default_tol::<S>();
    if n_c >= prefix.len() {
        return Err(PeaksError::Parameter(format!("prefix of length {} does not cover N_c = {n_c}", prefix.len())));
    }
    if k_s >= n_c {
        return Err(PeaksError::Parameter(format!("N_c = {n_c} must exceed K_s = {k_s}")));
    }
    let max = prefix.iter().copied().fold(S::neg_infinity(), S::max);
    let top = prefix[k_s];
    if (top - max).abs() > tol * S::one().max(max.abs()) {
        return Err(PeaksError::Precondition(format!("u_{k_s} = {top} is not the prefix maximum {max}")));
    }
    if let Some(j) = (k_s + 1..prefix.len()).find(|&j| (prefix[j] - max).abs() <= tol * S::one().max(max.abs())) {
        return Err(PeaksError::Precondition(format!("K_s = {k_s} is not the greatest maximizer ({j} is)")));
    }
    if !(c < top) {
        return Err(PeaksError::Parameter(format!("c = {c} must be below u_Ks = {top}")));
    }
    if let Some(j) = (n_c..prefix.len()).find(|&j| prefix[j] > c) {
        return Err(PeaksError::Parameter(format!("u_{j} = {} exceeds c = {c} past N_c", prefix[j])));
    }
    let ks = from_usize::<S>(k_s);
    let gamma = (k_s + 1..=n_c).map(|k| (top - prefix[k]) / (ks - from_usize(k))).fold(S::neg_infinity(), S::max);
    let d = top - c;
    let b = (gamma / d).exp();
    let a = d * (-ks * gamma / d).exp();
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{closed_forms, ExampleParams};

    fn nu(p: f64, mu: f64) -> BoundedSequence<f64> {
        closed_forms(ExampleParams::<f64>::new(p, mu).unwrap()).sequence()
    }

    #[test]
    fn inverse_linear_closed_form() {
        let h = MonotoneBijection::linear(900.0_f64);
        assert!((h.inverse_eval(29.25).unwrap() - 0.0325).abs() < 1e-15);
        assert_eq!(h.inverse_eval(h.h1()).unwrap(), 1.0);
    }

    #[test]
    fn inverse_by_bisection() {
        let h = MonotoneBijection::new("(x^3+x)/2", |x: f64| (x * x * x + x) / 2.0);
        let y = h.eval(0.5);
        assert!((h.inverse_eval(y).unwrap() - 0.5).abs() < 1e-9);
        assert!(matches!(h.inverse_eval(2.0), Err(PeaksError::Domain { .. })));
        h.check(200).unwrap();
    }

    #[test]
    fn check_rejects_flat_function() {
        let h = MonotoneBijection::new("flat", |x: f64| x.min(0.5));
        assert!(h.check(100).is_err());
    }

    #[test]
    fn verify_table_pair_a() {
        let mut s = nu(30.0, 1.0 / 3.0);
        let pair = verify_pair(&mut s, MonotoneBijection::linear(900.0_f64), (2.0_f64 / 3.0).powf(0.1), 30).unwrap();
        assert_eq!(pair.useful_witness, Some(0));
        assert!(s.has_tail_bound());
    }

    #[test]
    fn zero_sequence_verified_not_useful() {
        let mut s = BoundedSequence::new("zero", |_| 0.0_f64);
        let pair = verify_pair(&mut s, MonotoneBijection::affine(1.0, 1.0), 0.3, 20).unwrap();
        assert!(!pair.is_useful());
        assert!(matches!(solve_stop(&s, &pair), Err(PeaksError::NotUseful { .. })));
    }

    #[test]
    fn exact_touch_everywhere_useful() {
        let h = MonotoneBijection::affine(2.0, 1.0);
        let hh = h.clone();
        let mut s = BoundedSequence::new("touch", move |k| hh.eval(0.5_f64.powi(k as i32)));
        let pair = verify_pair(&mut s, h, 0.5, 20).unwrap();
        assert_eq!(pair.s_indices, (0..=20).collect::<Vec<_>>());
        for k in [0, 3, 7] {
            let r = formula_f(&s, k, &pair).unwrap();
            assert_eq!(r.f_value, Ext::Finite(k as f64));
            assert_eq!(r.floor_f, Some(k));
        }
    }

    #[test]
    fn violation_and_beta_range() {
        let mut s = BoundedSequence::new("one", |_| 1.0_f64);
        assert!(matches!(
            verify_pair(&mut s, MonotoneBijection::linear(2.0), 0.5, 5),
            Err(PeaksError::Violation { k: 2, .. })
        ));
        assert!(matches!(verify_pair(&mut s, MonotoneBijection::linear(2.0), 1.0, 5), Err(PeaksError::Parameter(_))));
    }

    #[test]
    fn beta_infimum_cases() {
        let s = BoundedSequence::new("neg", |_| -1.0_f64);
        assert_eq!(beta_infimum(&s, &MonotoneBijection::linear(1.0), 5).unwrap(), 0.0);
        let s = BoundedSequence::new("one-term", |k| if k == 1 { 0.25_f64 } else { 0.0 });
        let b = beta_infimum(&s, &MonotoneBijection::linear(1.0), 5).unwrap();
        assert!((b - 0.25).abs() < 1e-15);
    }

    #[test]
    fn beta_infimum_worked_example_matches_enumeration() {
        let s = nu(3.0, 1.0 / 3.0);
        let h = MonotoneBijection::linear(9.0);
        let b = beta_infimum(&s, &h, 12).unwrap();
        let oracle = (1..=12)
            .map(|k| s.eval(k).unwrap())
            .enumerate()
            .filter(|&(_, v)| v > 0.0)
            .map(|(i, v)| (v / 9.0).powf(1.0 / (i + 1) as f64))
            .fold(0.0, f64::max);
        assert!((b - oracle).abs() < 1e-14);
        // The supremum sits at k = 3, slightly above the k = 2 term.
        assert!(b > (3.0_f64 / 9.0).sqrt());
        let mut s2 = s.clone();
        assert!(verify_pair(&mut s2, h.clone(), b * (1.0 + 1e-12), 12).is_ok());
        assert!(verify_pair(&mut s2, h, b * 0.999, 12).is_err());
    }

    #[test]
    fn beta_infimum_rejects_terms_above_h1() {
        let s = BoundedSequence::new("big", |k| if k == 2 { 5.0_f64 } else { 0.0 });
        assert!(matches!(
            beta_infimum(&s, &MonotoneBijection::linear(1.0), 4),
            Err(PeaksError::NotInEnvelope { k: 2, .. })
        ));
    }

    #[test]
    fn combine_modes() {
        let a = MonotoneBijection::linear(2.0_f64);
        let b = MonotoneBijection::affine(1.0, 0.5);
        let m = combine(&a, &b, CombineMode::Min, None).unwrap();
        assert_eq!(m.eval(0.25), 0.5);
        let c = combine(&a, &b, CombineMode::Convex, Some(1.0)).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(c.eval(x), a.eval(x));
        }
        let mx = combine(&a, &a, CombineMode::Max, None).unwrap();
        assert_eq!(mx.eval(0.7), a.eval(0.7));
        assert!(combine(&a, &b, CombineMode::Convex, None).is_err());
        m.check(100).unwrap();
    }

    #[test]
    fn formula_table_entries() {
        let mut s = nu(30.0, 1.0 / 3.0);
        let pa = verify_pair(&mut s, MonotoneBijection::linear(900.0_f64), (2.0_f64 / 3.0).powf(0.1), 40).unwrap();
        assert_eq!(formula_f(&s, 0, &pa).unwrap().floor_f, Some(84));
        let mut s = nu(30.0, 1.0 / 3.0);
        let pb = verify_pair(&mut s, MonotoneBijection::linear(600.0), 0.5_f64.powf(0.1), 40).unwrap();
        assert_eq!(formula_f(&s, 0, &pb).unwrap().floor_f, Some(43));
        assert_eq!(formula_f(&s, 8, &pb).unwrap().floor_f, Some(9));
    }

    #[test]
    fn formula_outside_s_is_infinite() {
        let mut s = BoundedSequence::new("s", |k| if k == 0 { 2.0_f64 } else { 0.0 });
        let pair = verify_pair(&mut s, MonotoneBijection::affine(1.5, 0.5), 0.5, 10).unwrap();
        let r = formula_f(&s, 3, &pair).unwrap();
        assert_eq!(r.f_value, Ext::Infinite);
        assert_eq!(r.floor_f, None);
        // u_0 = h(1): 𝔉 vanishes.
        let r0 = formula_f(&s, 0, &pair).unwrap();
        assert_eq!(r0.f_value, Ext::Finite(0.0));
        assert!(pair.u0_is_max);
    }

    #[test]
    fn formula_needs_verified_pair() {
        let s = BoundedSequence::new("s", |_| 0.0_f64);
        let cand = UsefulPair::candidate(MonotoneBijection::linear(1.0), 0.5).unwrap();
        assert!(matches!(formula_f(&s, 0, &cand), Err(PeaksError::CertificateRequired(_))));
    }

    #[test]
    fn solve_stop_worked_examples() {
        let mut s = nu(3.0, 1.0 / 3.0);
        let pair = verify_pair(&mut s, MonotoneBijection::linear(6.0), 0.5_f64.powf(0.25), 30).unwrap();
        let sol = solve_stop(&s, &pair).unwrap();
        assert!(sol.k_stop <= 5);
        assert_eq!(sol.argmax, vec![2]);
        assert!((sol.max_value - 3.0).abs() < 1e-12);

        let mut s = nu(9.0, 0.1);
        let pair = verify_pair(&mut s, MonotoneBijection::linear(162.0), 0.5_f64.powf(0.1), 40).unwrap();
        let sol = solve_stop(&s, &pair).unwrap();
        assert!((sol.max_value - 27.0).abs() < 1e-9);
        assert_eq!(*sol.argmax.last().unwrap(), 8);
        assert_eq!(crate::seq::greatest_maximizer(&s, &pair).unwrap(), 8);
    }

    #[test]
    fn solve_stop_immediate_maximizer() {
        let mut s = BoundedSequence::new("seven", |k| if k == 0 { 7.0_f64 } else { 0.0 });
        let pair = verify_pair(&mut s, MonotoneBijection::affine(8.0, 1.0), 0.5, 30).unwrap();
        let sol = solve_stop(&s, &pair).unwrap();
        let f0 = formula_f(&s, 0, &pair).unwrap().floor_f.unwrap();
        assert_eq!(sol.k_stop, f0);
        assert_eq!(sol.argmax, vec![0]);
    }

    #[test]
    fn optimal_affine_examples() {
        let u = [0.0_f64, 2.0, 1.0, 0.5, 0.25, 0.1, 0.05];
        let (a, b) = optimal_affine(&u, 1, 4, 0.3).unwrap();
        assert!((a * b + 0.3 - 2.0).abs() < 1e-14);
        for (k, &v) in u.iter().enumerate() {
            assert!(v <= a * b.powi(k as i32) + 0.3 + 1e-14);
        }

        let u = [5.0_f64, 0.0, 0.0];
        let (a, b) = optimal_affine(&u, 0, 1, 1.0).unwrap();
        assert!((b - (-1.25_f64).exp()).abs() < 1e-15);
        assert!((a - 4.0).abs() < 1e-15);

        let mut s = BoundedSequence::from_head("u", vec![0.0_f64, 2.0, 1.0, 0.5, 0.25], 0.1);
        let (a, b) = optimal_affine(&s.prefix(6).unwrap(), 1, 4, 0.3).unwrap();
        let pair = verify_pair(&mut s, MonotoneBijection::affine(a, 0.3), b, 50).unwrap();
        let r = formula_f(&s, 1, &pair).unwrap();
        assert_eq!(r.floor_f, Some(1));
        match r.f_value {
            Ext::Finite(f) => assert!((f - 1.0).abs() < 1e-12),
            Ext::Infinite => panic!("finite expected"),
        }
    }

    #[test]
    fn optimal_affine_preconditions() {
        let u = [1.0, 2.0, 2.0, 0.0];
        assert!(matches!(optimal_affine(&u, 1, 3, 0.5), Err(PeaksError::Precondition(_))));
        let u = [1.0, 2.0, 0.0, 0.0];
        assert!(matches!(optimal_affine(&u, 1, 3, 2.5), Err(PeaksError::Parameter(_))));
    }

    #[test]
    fn f32_pair_roundtrip() {
        let h = MonotoneBijection::<f32>::affine(3.0, 0.5);
        let hh = h.clone();
        let mut s = BoundedSequence::new("f32", move |k| hh.eval(0.5_f32.powi(k as i32)) - 0.01);
        let pair = verify_pair(&mut s, h, 0.5, 10).unwrap();
        let r = formula_f(&s, 2, &pair).unwrap();
        assert_eq!(r.floor_f, Some(2));
    }
}
