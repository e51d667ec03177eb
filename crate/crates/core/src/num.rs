//! Small numeric helpers shared across modules.

/// Signed power `J_p(t) = |t|^{p-2} t`, the odd nonlinearity of the operator.
///
/// Fast paths cover the exponents exercised by the heavy experiments; the
/// generic branch is a single `powf`.
#[inline]
pub fn j_p(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        t
    } else if p == 3.0 {
        t * t.abs()
    } else if p == 1.5 {
        t.signum() * t.abs().sqrt()
    } else {
        t.abs().powf(p - 1.0).copysign(t)
    }
}

/// Derivative `J_p'(t) = (p-1) |t|^{p-2}`. Unbounded at 0 for `p < 2`;
/// callers must guard against non-finite values.
#[inline]
pub fn j_p_deriv(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        return 1.0;
    }
    let a = t.abs();
    if p == 3.0 {
        2.0 * a
    } else {
        (p - 1.0) * a.powf(p - 2.0)
    }
}

/// `|t|^p` with the same fast paths as [`j_p`].
#[inline]
pub fn abs_pow(t: f64, p: f64) -> f64 {
    let a = t.abs();
    if p == 2.0 {
        a * a
    } else if p == 3.0 {
        a * a * a
    } else if p == 1.5 {
        a * a.sqrt()
    } else {
        a.powf(p)
    }
}

/// Formats with 17 significant digits, enough to round-trip any f64.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Relative gap `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_gap(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_p_fast_paths_match_generic() {
        for &p in &[1.5f64, 2.0, 3.0] {
            for &t in &[-2.7f64, -1.0, -1e-3, 0.0, 1e-3, 0.4, 10.0] {
                let generic = if t == 0.0 {
                    0.0
                } else {
                    t.abs().powf(p - 1.0).copysign(t)
                };
                assert!((j_p(t, p) - generic).abs() <= 1e-15 * generic.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn j_p_is_odd() {
        for &p in &[1.2, 1.5, 2.0, 2.5, 3.0, 4.8] {
            for &t in &[1e-8, 0.3, 1.0, 42.0] {
                assert_eq!(j_p(-t, p), -j_p(t, p));
            }
        }
    }

    #[test]
    fn fmt17_round_trips() {
        for &x in &[0.1, -3.5e-17, 2.0f64.sqrt(), 1e300] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }
}
