//! Randomized checks of the stopping formula against brute force over a long prefix.

use peaks_core::{
    beta_infimum, formula_f, is_in_delta, optimal_affine, prefix_argmax, solve_stop, verify_pair, Envelope, Pair,
    Sequence,
};
use proptest::prelude::*;

const HORIZON: usize = 1000;

#[derive(Debug, Clone)]
struct Case {
    head: Vec<f64>,
    amp: f64,
    rho: f64,
    c_frac: f64,
    a_slack: f64,
    beta_frac: f64,
}

impl Case {
    fn sequence(&self) -> Sequence {
        let (head, amp, rho) = (self.head.clone(), self.amp, self.rho);
        Sequence::new("random", move |k| if k < head.len() { head[k] } else { amp * rho.powi(k as i32) })
    }

    /// An affine pair with c below the maximum, a covering h(1) and β above both β̲ and ρ.
    fn pair(&self, seq: &mut Sequence) -> Pair {
        let max = self.head.iter().copied().fold(0.0, f64::max).max(self.amp);
        let c = self.c_frac * max;
        let a = (max - c).max(self.amp) * (1.0 + self.a_slack);
        let h = Envelope::affine(a, c);
        let lo = beta_infimum(seq, &h, HORIZON).unwrap().max(self.rho);
        let beta = lo + self.beta_frac * (1.0 - lo);
        verify_pair(seq, h, beta.min(1.0 - 1e-9), HORIZON).unwrap()
    }
}

fn case() -> impl Strategy<Value = Case> {
    (
        prop::collection::vec(0.0..10.0f64, 20),
        prop::option::of((0..20usize, 0..20usize)),
        0.1..10.0f64,
        0.3..0.95f64,
        0.0..0.5f64,
        0.0..1.0f64,
        0.01..0.9f64,
    )
        .prop_map(|(mut head, tie, amp, rho, c_frac, a_slack, beta_frac)| {
            // Some cases carry a repeated maximum so that K^s differs from the least maximizer.
            if let Some((i, j)) = tie {
                let m = head.iter().copied().fold(0.0, f64::max);
                head[i] = m;
                head[j] = m;
            }
            Case { head, amp: amp.min(9.0), rho, c_frac, a_slack, beta_frac }
        })
}

fn brute_force_ks(prefix: &[f64]) -> usize {
    let max = prefix.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    prefix.iter().rposition(|&v| v == max).unwrap()
}

/// min{j : h(β^j) < u}, scanned.
fn drop_index(pair: &Pair, u: f64) -> usize {
    (0..).find(|&j| pair.envelope(j) < u).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn floor_bounds_greatest_maximizer(c in case()) {
        let mut seq = c.sequence();
        let pair = c.pair(&mut seq);
        let prefix = seq.prefix(HORIZON).unwrap();
        let ks = brute_force_ks(&prefix);
        for &k in &pair.s_indices {
            let fl = formula_f(&seq, k, &pair).unwrap().floor_f.unwrap();
            prop_assert!(ks <= fl, "k = {k}: K^s = {ks} > floor = {fl}");
        }
    }

    #[test]
    fn floor_plus_one_is_minimal_drop(c in case()) {
        let mut seq = c.sequence();
        let pair = c.pair(&mut seq);
        for &k in pair.s_indices.iter().take(40) {
            let rep = formula_f(&seq, k, &pair).unwrap();
            let u = seq.eval(k).unwrap();
            prop_assert_eq!(rep.minimal_drop_index, Some(drop_index(&pair, u)));
            prop_assert_eq!(rep.floor_f.map(|f| f + 1), rep.minimal_drop_index);
        }
    }

    #[test]
    fn formula_monotone_in_beta(c in case(), bump in 0.0..1.0f64) {
        let mut seq = c.sequence();
        let pair = c.pair(&mut seq);
        let wider = pair.beta + bump * (1.0 - pair.beta) * 0.999;
        let mut seq2 = c.sequence();
        let pair2 = verify_pair(&mut seq2, pair.h.clone(), wider, HORIZON).unwrap();
        for &k in pair.s_indices.iter().take(40) {
            let f1 = formula_f(&seq, k, &pair).unwrap().f_value.finite().unwrap();
            let f2 = formula_f(&seq2, k, &pair2).unwrap().f_value.finite().unwrap();
            prop_assert!(f2 >= f1 * (1.0 - 1e-12), "k = {k}: {f2} < {f1}");
        }
    }

    #[test]
    fn stop_loop_finds_brute_force_argmax(c in case()) {
        let mut seq = c.sequence();
        let pair = c.pair(&mut seq);
        let prefix = seq.prefix(HORIZON).unwrap();
        let sol = solve_stop(&seq, &pair).unwrap();
        let max = prefix.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(sol.max_value, max);
        prop_assert_eq!(*sol.argmax.last().unwrap(), brute_force_ks(&prefix));
        prop_assert!(sol.k_stop >= brute_force_ks(&prefix));
        // Δ membership at K^s: everything after stays strictly below the max.
        prop_assert!(is_in_delta(&seq, sol.k_stop, false).unwrap());
        let r = prefix_argmax(&seq, sol.k_stop).unwrap();
        prop_assert!(r.certified);
        prop_assert!(r.prefix_argmax_set.iter().all(|k| sol.argmax.contains(k)));
    }

    #[test]
    fn optimal_affine_is_tight(c in case(), c_pos in 0.05..0.95f64) {
        let seq = c.sequence();
        let prefix = seq.prefix(HORIZON).unwrap();
        let ks = brute_force_ks(&prefix);
        let top = prefix[ks];
        let rest = prefix[ks + 1..].iter().copied().fold(0.0, f64::max);
        let floor_c = 0.05 * top;
        let cc = floor_c.max(rest * c_pos);
        prop_assume!(cc < top);
        let n_c = prefix.iter().rposition(|&v| v > cc).map_or(ks + 1, |j| j + 1).max(ks + 1);
        prop_assume!(n_c < prefix.len());
        let (a, b) = optimal_affine(&prefix, ks, n_c, cc).unwrap();
        let mut s = seq.clone();
        let pair = verify_pair(&mut s, Envelope::affine(a, cc), b, HORIZON).unwrap();
        let fl = formula_f(&s, ks, &pair).unwrap().floor_f;
        prop_assert_eq!(fl, Some(ks));
    }
}

#[test]
fn f32_agrees_with_f64_on_a_simple_pair() {
    let s64 = Sequence::new("2^-k", |k| 0.5_f64.powi(k as i32));
    let s32 = peaks_core::BoundedSequence::<f32>::new("2^-k", |k| 0.5_f32.powi(k as i32));
    let mut a = s64.clone();
    let mut b = s32.clone();
    let p64 = verify_pair(&mut a, Envelope::affine(2.0, 0.0), 0.6, 50).unwrap();
    let p32 = verify_pair(&mut b, peaks_core::MonotoneBijection::<f32>::affine(2.0, 0.0), 0.6, 50).unwrap();
    let f64_floor = formula_f(&a, 0, &p64).unwrap().floor_f;
    let f32_floor = formula_f(&b, 0, &p32).unwrap().floor_f;
    assert_eq!(f64_floor, Some(1));
    assert_eq!(f64_floor, f32_floor);
    assert_eq!(solve_stop(&b, &p32).unwrap().argmax, vec![0]);
}
