//! Finite-horizon analysis of sequences bounded above.
//!
//! Suprema over infinitely many terms are replaced by a certified tail bound
//! τ(k) ≥ sup_{j>k} u_j. Without one, reports say "uncertified" instead of truncating quietly.

use std::fmt;
use std::sync::Arc;

use crate::error::{PeaksError, Result};
use crate::pairs::{solve_stop, UsefulPair};
use crate::scalar::{default_tol, Scalar};

pub type SeqEval<S> = Arc<dyn Fn(usize) -> Result<S> + Send + Sync>;
pub type TailBound<S> = Arc<dyn Fn(usize) -> S + Send + Sync>;

/// k ↦ u_k, optionally with a certified tail bound.
#[derive(Clone)]
pub struct BoundedSequence<S> {
    eval: SeqEval<S>,
    tail_bound: Option<TailBound<S>>,
    pub label: String,
}

impl<S: fmt::Debug> fmt::Debug for BoundedSequence<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundedSequence")
            .field("label", &self.label)
            .field("tail_bound", &self.tail_bound.is_some())
            .finish()
    }
}

impl<S: Scalar> BoundedSequence<S> {
    pub fn new(label: impl Into<String>, f: impl Fn(usize) -> S + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(move |k| Ok(f(k))), tail_bound: None, label: label.into() }
    }

    pub fn fallible(label: impl Into<String>, f: impl Fn(usize) -> Result<S> + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(f), tail_bound: None, label: label.into() }
    }

    /// Finite head followed by a constant. The constant doubles as the tail bound past the head.
    pub fn from_head(label: impl Into<String>, head: Vec<S>, rest: S) -> Self {
        let head = Arc::new(head);
        let h2 = head.clone();
        Self::new(label, move |k| head.get(k).copied().unwrap_or(rest))
            .with_tail_bound(move |k| h2.iter().skip(k + 1).fold(rest, |m, &v| m.max(v)))
    }

    /// Installs τ. An existing bound is kept and the pointwise minimum is used.
    pub fn with_tail_bound(mut self, tau: impl Fn(usize) -> S + Send + Sync + 'static) -> Self {
        self.tail_bound = Some(match self.tail_bound.take() {
            Some(old) => Arc::new(move |k| old(k).min(tau(k))),
            None => Arc::new(tau),
        });
        self
    }

    pub fn eval(&self, k: usize) -> Result<S> {
        let v = (self.eval)(k)?;
        if v.is_nan() {
            return Err(PeaksError::Evaluation { k, reason: "NaN".into() });
        }
        Ok(v)
    }

    pub fn tail_bound(&self, k: usize) -> Option<S> {
        self.tail_bound.as_ref().map(|t| t(k))
    }

    pub fn has_tail_bound(&self) -> bool {
        self.tail_bound.is_some()
    }

    pub fn prefix(&self, last: usize) -> Result<Vec<S>> {
        (0..=last).map(|k| self.eval(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArgmaxReport<S> {
    pub horizon: usize,
    pub prefix_max: S,
    pub prefix_argmax_set: Vec<usize>,
    pub k_s_candidate: Option<usize>,
    pub certified: bool,
    /// Estimates of k_u and k_u^s, using τ(horizon) in place of the limsup.
    pub limsup_hit_first: Option<usize>,
    pub limsup_exceed_first: Option<usize>,
}

impl<S: Scalar> ArgmaxReport<S> {
    /// K_u restricted to the prefix.
    pub fn least_maximizer(&self) -> usize {
        self.prefix_argmax_set[0]
    }
}

pub fn prefix_argmax<S: Scalar>(seq: &BoundedSequence<S>, horizon: usize) -> Result<ArgmaxReport<S>> {
    let tol = default_tol::<S>();
    let values = seq.prefix(horizon)?;
    let max = values.iter().copied().fold(S::neg_infinity(), S::max);
    let set: Vec<usize> = (0..=horizon).filter(|&k| (values[k] - max).abs() <= tol).collect();
    let tau = seq.tail_bound(horizon);
    let certified = tau.is_some_and(|t| t < max);
    let (hit, exceed) = match tau {
        Some(l) => (values.iter().position(|&v| v >= l), values.iter().position(|&v| v > l)),
        None => (None, None),
    };
    Ok(ArgmaxReport {
        horizon,
        prefix_max: max,
        k_s_candidate: set.last().copied(),
        prefix_argmax_set: set,
        certified,
        limsup_hit_first: hit,
        limsup_exceed_first: exceed,
    })
}

/// k ∈ Δ_u (or Δ_u^s when `strict`), judged against τ(k). `false` means "not certifiable".
pub fn is_in_delta<S: Scalar>(seq: &BoundedSequence<S>, k: usize, strict: bool) -> Result<bool> {
    let tau =
        seq.tail_bound(k).ok_or_else(|| PeaksError::CertificateRequired("Δ membership needs a tail bound".into()))?;
    let m = seq.prefix(k)?.into_iter().fold(S::neg_infinity(), S::max);
    Ok(if strict { m > tau } else { m >= tau })
}

/// K_u^s, found by running the stopping loop of `pair` and taking the last maximizer.
pub fn greatest_maximizer<S: Scalar>(seq: &BoundedSequence<S>, pair: &UsefulPair<S>) -> Result<usize> {
    let sol = solve_stop(seq, pair)?;
    Ok(*sol.argmax.last().expect("stopping loop always records a maximizer"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairs::{verify_pair, MonotoneBijection};

    fn bump() -> BoundedSequence<f64> {
        BoundedSequence::new("bump", |k| -((k as f64 - 3.0).powi(2))).with_tail_bound(|k| {
            if k >= 3 {
                -((k as f64 + 1.0 - 3.0).powi(2))
            } else {
                0.0
            }
        })
    }

    #[test]
    fn bump_argmax_certified() {
        let r = prefix_argmax(&bump(), 10).unwrap();
        assert_eq!(r.prefix_argmax_set, vec![3]);
        assert_eq!(r.prefix_max, 0.0);
        assert!(r.certified);
    }

    #[test]
    fn constant_sequence_uncertified() {
        let s = BoundedSequence::new("five", |_| 5.0_f64);
        let r = prefix_argmax(&s, 4).unwrap();
        assert_eq!(r.prefix_argmax_set, vec![0, 1, 2, 3, 4]);
        assert!(!r.certified);
        assert_eq!(r.k_s_candidate, Some(4));
    }

    #[test]
    fn geometric_tail_strict_membership() {
        let s = BoundedSequence::new("geo", |k| 10.0 * 0.5_f64.powi(k as i32))
            .with_tail_bound(|k| 10.0 * 0.5_f64.powi(k as i32 + 1));
        assert!(is_in_delta(&s, 0, true).unwrap());
    }

    #[test]
    fn increasing_head_not_in_delta() {
        let s = BoundedSequence::new("inc", |k| k.min(5) as f64).with_tail_bound(|_| 5.0);
        assert!(!is_in_delta(&s, 0, false).unwrap());
        assert!(is_in_delta(&s, 5, false).unwrap());
        assert!(!is_in_delta(&s, 5, true).unwrap());
    }

    #[test]
    fn membership_needs_tail() {
        let s = BoundedSequence::new("x", |_| 1.0_f64);
        assert!(matches!(is_in_delta(&s, 0, false), Err(PeaksError::CertificateRequired(_))));
    }

    #[test]
    fn evaluation_error_carries_k() {
        let s = BoundedSequence::<f64>::fallible("bad", |k| {
            if k == 3 {
                Err(PeaksError::Evaluation { k, reason: "boom".into() })
            } else {
                Ok(0.0)
            }
        });
        assert!(matches!(prefix_argmax(&s, 5), Err(PeaksError::Evaluation { k: 3, .. })));
    }

    #[test]
    fn single_spike_greatest_maximizer() {
        let mut s = BoundedSequence::new("spike", |k| if k == 1 { 7.0_f64 } else { 0.0 });
        let pair = verify_pair(&mut s, MonotoneBijection::linear(16.0), 0.5, 50).unwrap();
        assert_eq!(greatest_maximizer(&s, &pair).unwrap(), 1);
    }

    #[test]
    fn diagnostics_chain_on_bump() {
        let r = prefix_argmax(&bump(), 10).unwrap();
        let (ku, kus) = (r.limsup_hit_first.unwrap(), r.limsup_exceed_first.unwrap());
        assert!(ku <= kus && ku <= r.least_maximizer() && kus <= r.k_s_candidate.unwrap());
    }

    #[test]
    fn works_in_f32() {
        let s = BoundedSequence::new("f32", |k| -((k as f32 - 2.0).powi(2))).with_tail_bound(|k| {
            if k >= 2 {
                -((k as f32 - 1.0).powi(2))
            } else {
                0.0
            }
        });
        let r = prefix_argmax(&s, 6).unwrap();
        assert_eq!(r.prefix_argmax_set, vec![2]);
        assert!(r.certified);
    }
}
