//! Sampled pointwise inequalities with explicit constants.
//!
//! The bounds below compare powers of positive numbers and cut-off values
//! in `[0,1]`. They carry printed constants, so a single violated sample is
//! a genuine failure, up to the relative floating-point slack. Everything
//! is written as `small <= big` and the margin of a sample is
//! `(big - small) / (|big| + |small|)`.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::{log_uniform, InequalityReport};
use crate::num::j_p;

/// The sampled inequality families. `E` abbreviates the fractional power
/// `(p - 1 - t) / p`, which is negative throughout since `t > p - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgebraicLemma {
    /// `t (p/(t-p+1))^p |a^E - b^E|^p <= J_p(b - a) (a^{-t} - b^{-t})`:
    /// the signed chord of `x -> x^{-t}` controls the matching
    /// fractional-power chord.
    ChordLower,
    /// `|b-a|^{p-1} min(a^{-t}, b^{-t}) <= (p/(t-p+1))^{p-1}
    /// |a^E - b^E|^{p-1} min(a^E, b^E)`: the min-weighted variant.
    ChordMin,
    /// `|t1^p - t2^p| <= p |t1 - t2| max(t1, t2)^{p-1}` on `[0,1]`.
    PowerDifference,
    /// `2^{1-p} |t1 a^E - t2 b^E|^p - |t1-t2|^p max(a^{p-1-t}, b^{p-1-t})
    /// <= min(t1, t2)^p |a^E - b^E|^p`: peeling the cut-off off a weighted
    /// difference, lower form.
    SplitLower,
    /// `max(t1, t2)^p |a^E - b^E|^p <= 2^{p-1} |t1 a^E - t2 b^E|^p
    /// + 2^{p-1} |t1-t2|^p max(a^{p-1-t}, b^{p-1-t})`: upper form.
    SplitUpper,
    /// `c1 |t1 a^E - t2 b^E|^p - c2 |t1-t2|^p (a^{p-1-t} + b^{p-1-t})
    /// <= J_p(b - a) (t1^p a^{-t} - t2^p b^{-t})` with the constants from
    /// [`lemma_constants`]: the combined weighted chord bound that drives
    /// the negative-moment iteration.
    WeightedChord,
}

impl AlgebraicLemma {
    pub fn all() -> [AlgebraicLemma; 6] {
        [
            AlgebraicLemma::ChordLower,
            AlgebraicLemma::ChordMin,
            AlgebraicLemma::PowerDifference,
            AlgebraicLemma::SplitLower,
            AlgebraicLemma::SplitUpper,
            AlgebraicLemma::WeightedChord,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            AlgebraicLemma::ChordLower => "chord-lower",
            AlgebraicLemma::ChordMin => "chord-min",
            AlgebraicLemma::PowerDifference => "power-difference",
            AlgebraicLemma::SplitLower => "split-lower",
            AlgebraicLemma::SplitUpper => "split-upper",
            AlgebraicLemma::WeightedChord => "weighted-chord",
        }
    }
}

/// The constants of the combined bound:
/// `c1 = 2^{1-p} p^p / (t-p+1)^{p-1}` and
/// `c2 = (t + 2^{1-p}(p-1)) (p/(t-p+1))^p + 2^{2(p-1)^2}`.
/// Both blow up as `t` approaches `p - 1`: `c1` exactly like
/// `(t-p+1)^{1-p}`.
pub fn lemma_constants(p: f64, t: f64) -> (f64, f64) {
    let shift = t - p + 1.0;
    let c1 = 2f64.powf(1.0 - p) * p.powf(p) / shift.powf(p - 1.0);
    let c2 = (t + 2f64.powf(1.0 - p) * (p - 1.0)) * (p / shift).powf(p)
        + 2f64.powf(2.0 * (p - 1.0) * (p - 1.0));
    (c1, c2)
}

/// Relative margin of one sample, `(big - small) / (|big| + |small|)`;
/// zero when both sides vanish.
fn margin(lemma: AlgebraicLemma, a: f64, b: f64, t1: f64, t2: f64, p: f64, t: f64) -> f64 {
    let e = (p - 1.0 - t) / p;
    let (ae, be) = (a.powf(e), b.powf(e));
    let shift = t - p + 1.0;
    let (small, big) = match lemma {
        AlgebraicLemma::ChordLower => (
            t * (p / shift).powf(p) * (ae - be).abs().powf(p),
            j_p(b - a, p) * (a.powf(-t) - b.powf(-t)),
        ),
        AlgebraicLemma::ChordMin => (
            (b - a).abs().powf(p - 1.0) * a.powf(-t).min(b.powf(-t)),
            (p / shift).powf(p - 1.0) * (ae - be).abs().powf(p - 1.0) * ae.min(be),
        ),
        AlgebraicLemma::PowerDifference => (
            (t1.powf(p) - t2.powf(p)).abs(),
            p * (t1 - t2).abs() * t1.max(t2).powf(p - 1.0),
        ),
        AlgebraicLemma::SplitLower => (
            2f64.powf(1.0 - p) * (t1 * ae - t2 * be).abs().powf(p)
                - (t1 - t2).abs().powf(p) * a.powf(p - 1.0 - t).max(b.powf(p - 1.0 - t)),
            t1.min(t2).powf(p) * (ae - be).abs().powf(p),
        ),
        AlgebraicLemma::SplitUpper => (
            t1.max(t2).powf(p) * (ae - be).abs().powf(p),
            2f64.powf(p - 1.0)
                * ((t1 * ae - t2 * be).abs().powf(p)
                    + (t1 - t2).abs().powf(p) * a.powf(p - 1.0 - t).max(b.powf(p - 1.0 - t))),
        ),
        AlgebraicLemma::WeightedChord => {
            let (c1, c2) = lemma_constants(p, t);
            (
                c1 * (t1 * ae - t2 * be).abs().powf(p)
                    - c2 * (t1 - t2).abs().powf(p) * (a.powf(p - 1.0 - t) + b.powf(p - 1.0 - t)),
                j_p(b - a, p) * (t1.powf(p) * a.powf(-t) - t2.powf(p) * b.powf(-t)),
            )
        }
    };
    let scale = small.abs() + big.abs();
    if scale == 0.0 {
        0.0
    } else {
        (big - small) / scale
    }
}

/// Samples the inequality on random tuples: `a, b` log-uniform in
/// `(1e-3, 1e3)`, cut-off values uniform in `[0,1]`, `p` in `(1, 5]`,
/// `t` in `(p - 1 + 1e-2, 10]`. Passes when no relative margin drops below
/// `-1e-12`. The witness stores the worst tuple.
pub fn check_algebraic(lemma: AlgebraicLemma, samples: usize, seed: u64) -> InequalityReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut witness = vec![0.0f64; 6];
    for _ in 0..samples {
        let a = log_uniform(&mut rng, 1e-3, 1e3);
        let b = log_uniform(&mut rng, 1e-3, 1e3);
        let t1: f64 = rng.gen_range(0.0..=1.0);
        let t2: f64 = rng.gen_range(0.0..=1.0);
        let p: f64 = rng.gen_range(1.0 + 1e-6..=5.0);
        let t: f64 = rng.gen_range(p - 1.0 + 1e-2..=10.0);
        let m = margin(lemma, a, b, t1, t2, p, t);
        if m < worst {
            worst = m;
            witness = vec![a, b, t1, t2, p, t];
        }
    }
    let (c1, c2) = lemma_constants(witness[4].max(1.0 + 1e-6), witness[5].max(1e-2));
    InequalityReport {
        name: lemma.name().into(),
        samples: samples as u64,
        worst_margin: worst,
        pass: worst >= -1e-12,
        witness: vec![
            ("a".into(), witness[0]),
            ("b".into(), witness[1]),
            ("tau1".into(), witness[2]),
            ("tau2".into(), witness[3]),
            ("p".into(), witness[4]),
            ("t".into(), witness[5]),
        ],
        constants: vec![("c1".into(), c1), ("c2".into(), c2)],
        series: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_sides_vanish_together_on_the_diagonal() {
        for lemma in AlgebraicLemma::all() {
            let m = margin(lemma, 2.5, 2.5, 0.7, 0.7, 2.0, 3.0);
            assert_eq!(m, 0.0, "{}", lemma.name());
        }
    }

    #[test]
    fn full_cutoff_reduces_to_the_plain_chord_bound() {
        // with both cut-off values 1 the combined bound keeps only its c1
        // term, which is weaker than the plain chord bound since
        // c1 = 1 <= 3 = t (p/(t-p+1))^p at p = 2, t = 3
        let (c1, _) = lemma_constants(2.0, 3.0);
        assert!((c1 - 1.0).abs() <= 1e-15);
        let front = 3.0 * (2.0f64 / 2.0).powf(2.0);
        assert!(front >= c1);
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..2000 {
            let a = log_uniform(&mut rng, 1e-3, 1e3);
            let b = log_uniform(&mut rng, 1e-3, 1e3);
            assert!(margin(AlgebraicLemma::ChordLower, a, b, 1.0, 1.0, 2.0, 3.0) >= -1e-12);
            assert!(margin(AlgebraicLemma::WeightedChord, a, b, 1.0, 1.0, 2.0, 3.0) >= -1e-12);
        }
    }

    #[test]
    fn sampled_suites_hold_with_the_printed_constants() {
        for lemma in AlgebraicLemma::all() {
            let rep = check_algebraic(lemma, 20_000, 7);
            assert!(
                rep.pass,
                "{} failed with margin {} at {:?}",
                rep.name, rep.worst_margin, rep.witness
            );
            assert_eq!(rep.samples, 20_000);
        }
    }

    #[test]
    fn constants_blow_up_at_the_printed_rate() {
        // c1(t) grows like (t-p+1)^{1-p}, so moving t from p to p-1+1e-3
        // multiplies it by exactly 10^{3(p-1)}
        for p in [1.5, 2.0, 3.0] {
            let near = lemma_constants(p, p - 1.0 + 1e-3).0;
            let far = lemma_constants(p, p).0;
            let want = 10f64.powf(3.0 * (p - 1.0));
            let got = near / far;
            assert!(
                (got / want - 1.0).abs() <= 1e-9,
                "p={p}: ratio {got} vs {want}"
            );
            // c2 grows at least as fast in the same move
            let c2_ratio = lemma_constants(p, p - 1.0 + 1e-3).1 / lemma_constants(p, p).1;
            assert!(c2_ratio >= want * 0.9, "p={p}: c2 ratio {c2_ratio}");
        }
    }

    #[test]
    fn repeated_seeds_replay_exactly() {
        let a = check_algebraic(AlgebraicLemma::WeightedChord, 5_000, 42);
        let b = check_algebraic(AlgebraicLemma::WeightedChord, 5_000, 42);
        assert_eq!(a.worst_margin, b.worst_margin);
        assert_eq!(a.witness, b.witness);
    }
}
