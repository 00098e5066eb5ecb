//! C^∞ bump primitives built from `exp(-1/t)`.

/// `e^{-1/t}` for `t > 0`, zero otherwise.
#[inline]
pub fn psi0(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, C^∞ in between.
#[inline]
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = psi0(t);
    let b = psi0(1.0 - t);
    a / (a + b)
}

/// Standard bump `exp(-1/(1-|x|^2))` on the open unit ball.
#[inline]
pub fn unit_bump(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

/// Smooth indicator of `[-a, a]`: 1 on `|t| <= a`, 0 on `|t| >= a + delta`.
#[inline]
pub fn plateau(t: f64, a: f64, delta: f64) -> f64 {
    smoothstep((a + delta - t.abs()) / delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_symmetry() {
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert!((smoothstep(t) + smoothstep(1.0 - t) - 1.0).abs() < 1e-15);
        }
        assert_eq!(smoothstep(-0.1), 0.0);
        assert_eq!(smoothstep(1.1), 1.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn plateau_edges() {
        assert_eq!(plateau(0.3, 0.5, 0.1), 1.0);
        assert_eq!(plateau(-0.5, 0.5, 0.1), 1.0);
        assert_eq!(plateau(0.6, 0.5, 0.1), 0.0);
        let mid = plateau(0.55, 0.5, 0.1);
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bump_support() {
        assert_eq!(unit_bump(&[1.0]), 0.0);
        assert_eq!(unit_bump(&[0.6, 0.8]), 0.0);
        assert!((unit_bump(&[0.0]) - (-1.0f64).exp()).abs() < 1e-15);
    }
}
