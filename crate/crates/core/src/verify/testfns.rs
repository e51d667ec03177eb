//! Manufactured grid functions with zero exterior and support clearing the
//! box face, the shape the whole-space energy and the functional estimates
//! require.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::grid::{ExteriorRule, GridFunction};

fn check_shrink(shrink: f64) -> Result<()> {
    if !shrink.is_finite() || shrink <= 0.0 || shrink > 1.0 {
        return Err(Error::invalid("shrink", "need a support fraction in (0,1]"));
    }
    Ok(())
}

/// Product of per-axis mollifier profiles `exp(1 - 1/(1 - t^2))`, supported
/// on the box shrunk by `shrink` per axis. The profile is exactly zero from
/// the support edge outward, so the outermost node layer vanishes and the
/// peak value at the center is exactly `1`.
pub fn smooth_bump(bx: &Rect, sizes: &[usize], shrink: f64) -> Result<GridFunction> {
    check_shrink(shrink)?;
    let center = bx.center().to_vec();
    let hw: Vec<f64> = bx.half_widths().iter().map(|&w| w * shrink).collect();
    GridFunction::from_fn(bx.clone(), sizes, ExteriorRule::Zero, move |pos| {
        let mut v = 1.0;
        for k in 0..pos.len() {
            let t = (pos[k] - center[k]) / hw[k];
            let t2 = t * t;
            if t2 >= 1.0 {
                return 0.0;
            }
            v *= (1.0 - 1.0 / (1.0 - t2)).exp();
        }
        v
    })
}

/// Product of per-axis linear tents `max(0, 1 - |t|)` on the box shrunk by
/// `shrink`. In one dimension this is the single hat function.
pub fn tent(bx: &Rect, sizes: &[usize], shrink: f64) -> Result<GridFunction> {
    check_shrink(shrink)?;
    let center = bx.center().to_vec();
    let hw: Vec<f64> = bx.half_widths().iter().map(|&w| w * shrink).collect();
    GridFunction::from_fn(bx.clone(), sizes, ExteriorRule::Zero, move |pos| {
        let mut v = 1.0;
        for k in 0..pos.len() {
            let t = (pos[k] - center[k]).abs() / hw[k];
            if t >= 1.0 {
                return 0.0;
            }
            v *= 1.0 - t;
        }
        v
    })
}

/// Independent uniform values in `[-1, 1]` on the interior nodes, zero on
/// the outermost layer. Deterministic in the seed.
pub fn random_interior(bx: &Rect, sizes: &[usize], seed: u64) -> Result<GridFunction> {
    let total: usize = sizes.iter().product();
    let zero = GridFunction::constant(bx.clone(), sizes, 0.0, ExteriorRule::Zero)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut values = vec![0.0f64; total];
    for (flat, v) in values.iter_mut().enumerate() {
        let draw: f64 = rng.gen_range(-1.0..1.0);
        if zero.is_interior(&zero.multi(flat)) {
            *v = draw;
        }
    }
    GridFunction::new(bx.clone(), sizes, values, ExteriorRule::Zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Anisotropy;

    fn setup() -> (Anisotropy, Rect) {
        let a = Anisotropy::new(2.0, vec![0.5, 0.8], 0.4, 1.0).unwrap();
        let bx = GridFunction::default_box(&a);
        (a, bx)
    }

    #[test]
    fn shapes_peak_at_the_center_and_clear_the_face() {
        let (_, bx) = setup();
        for u in [
            smooth_bump(&bx, &[9, 11], 1.0).unwrap(),
            tent(&bx, &[9, 11], 0.8).unwrap(),
        ] {
            let peak = u.flat(&[4, 5]);
            assert_eq!(u.values()[peak], 1.0);
            for flat in 0..u.len() {
                let idx = u.multi(flat);
                assert!((0.0..=1.0).contains(&u.values()[flat]));
                if !u.is_interior(&idx) {
                    assert_eq!(u.values()[flat], 0.0, "face node {idx:?}");
                }
            }
        }
        assert!(smooth_bump(&bx, &[9, 9], 0.0).is_err());
        assert!(tent(&bx, &[9, 9], 1.5).is_err());
    }

    #[test]
    fn random_fields_replay_and_stay_interior() {
        let (_, bx) = setup();
        let u = random_interior(&bx, &[7, 7], 5).unwrap();
        let v = random_interior(&bx, &[7, 7], 5).unwrap();
        let w = random_interior(&bx, &[7, 7], 6).unwrap();
        assert_eq!(u.values(), v.values());
        assert_ne!(u.values(), w.values());
        for flat in 0..u.len() {
            if !u.is_interior(&u.multi(flat)) {
                assert_eq!(u.values()[flat], 0.0);
            }
        }
        assert!(u.values().iter().any(|&x| x != 0.0));
    }
}
