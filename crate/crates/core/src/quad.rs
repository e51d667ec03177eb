//! Adaptive quadrature.
//!
//! Used as an independent cross-check for closed-form kernel masses and as
//! the evaluation engine for the local-limit experiment. Nothing here knows
//! about the closed forms it is checked against.

/// Adaptive Simpson integration of `f` on `[a, b]` to absolute tolerance
/// `tol`. Recursion depth is capped; the cap is generous enough for the
/// smooth integrands used in this crate.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    simpson_step(f, a, b, fa, fb, fm, simpson(a, b, fa, fm, fb), tol, 52)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1)
    }
}

/// Integrates `f` over `[a, inf)` by adaptive Simpson on dyadic blocks
/// `[a 2^j, a 2^{j+1}]`, stopping once a block contributes less than
/// `tol` and the running tail estimate is negligible. Requires `a > 0` and
/// an integrand that decays at least like a negative power. Not suitable
/// for oscillatory integrands: late blocks are exponentially wide, so an
/// O(1)-period oscillation would need unbounded resolution; use
/// [`integrate_blocks`] to a finite endpoint plus an analytic remainder
/// bracket instead.
pub fn integrate_dyadic_tail(f: &dyn Fn(f64) -> f64, a: f64, tol: f64) -> f64 {
    assert!(a > 0.0, "dyadic tail integration needs a positive left end");
    let mut total = 0.0;
    let mut lo = a;
    for _ in 0..120 {
        let hi = 2.0 * lo;
        let block = adaptive_simpson(f, lo, hi, tol / 8.0);
        total += block;
        if block.abs() < tol && lo > 64.0 * a {
            break;
        }
        lo = hi;
    }
    total
}

/// Adaptive Simpson over blocks of `[a, b]` that grow dyadically but never
/// exceed `max_step`, each block to absolute tolerance `tol` (total error
/// grows with the block count). The cap matters for oscillatory integrands:
/// blocks much wider than the oscillation scale can alias, with sample
/// points hitting equal phases and the error estimate collapsing early.
/// Requires `0 < a < b` and `max_step > 0`.
pub fn integrate_blocks(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_step: f64) -> f64 {
    assert!(a > 0.0 && b > a, "block integration needs 0 < a < b");
    assert!(max_step > 0.0, "block integration needs max_step > 0");
    let mut total = 0.0;
    let mut lo = a;
    while lo < b {
        let hi = (2.0 * lo).min(lo + max_step).min(b);
        total += adaptive_simpson(f, lo, hi, tol);
        lo = hi;
    }
    total
}
