//! Size profiles `φ: ℝ → ℝ` used in separable kernels and test functionals.

use std::fmt;

/// A differentiable real function of one variable with known derivative.
pub trait Profile: Send + Sync + fmt::Debug {
    fn value(&self, x: f64) -> f64;

    fn derivative(&self, x: f64) -> f64;

    /// Closed interval outside which the profile vanishes, if compact.
    fn support(&self) -> Option<(f64, f64)> {
        None
    }
}

/// `3s² - 2s³` clamped to `[0, 1]`.
pub fn smoothstep3(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    (s * s * (3.0 - 2.0 * s)).min(1.0)
}

pub fn smoothstep3_derivative(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        6.0 * s * (1.0 - s)
    }
}

/// `6s⁵ - 15s⁴ + 10s³` clamped to `[0, 1]`.
pub fn smoothstep5(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    (s * s * s * (s * (6.0 * s - 15.0) + 10.0)).min(1.0)
}

pub fn smoothstep5_derivative(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        30.0 * s * s * (1.0 - s) * (1.0 - s)
    }
}

/// `height · exp(1 - 1/(1 - u²))` with `u = (x - center)/half_width`:
/// smooth, compactly supported, equal to `height` at the center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpBump {
    pub center: f64,
    pub half_width: f64,
    pub height: f64,
}

impl Profile for ExpBump {
    fn value(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.half_width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        self.height * (1.0 - 1.0 / (1.0 - u * u)).exp()
    }

    fn derivative(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.half_width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - u * u;
        self.height * (1.0 - 1.0 / q).exp() * (-2.0 * u / (q * q)) / self.half_width
    }

    fn support(&self) -> Option<(f64, f64)> {
        Some((self.center - self.half_width, self.center + self.half_width))
    }
}

/// `height · S(1 - |u|)` with the cubic smoothstep `S`: C¹, compactly supported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicBump {
    pub center: f64,
    pub half_width: f64,
    pub height: f64,
}

impl Profile for CubicBump {
    fn value(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.half_width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        self.height * smoothstep3(1.0 - u.abs())
    }

    fn derivative(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.half_width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        -self.height * smoothstep3_derivative(1.0 - u.abs()) * u.signum() / self.half_width
    }

    fn support(&self) -> Option<(f64, f64)> {
        Some((self.center - self.half_width, self.center + self.half_width))
    }
}

/// `x ↦ x·φ(x)` for a profile `φ`.
#[derive(Debug, Clone)]
pub struct TimesIdentity(pub std::sync::Arc<dyn Profile>);

impl Profile for TimesIdentity {
    fn value(&self, x: f64) -> f64 {
        x * self.0.value(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        self.0.value(x) + x * self.0.derivative(x)
    }

    fn support(&self) -> Option<(f64, f64)> {
        self.0.support()
    }
}

/// Sup-norms of `φ`, `φ′`, `ψ(x) = xφ(x)` and `ψ′`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileBounds {
    pub phi: f64,
    pub dphi: f64,
    pub psi: f64,
    pub dpsi: f64,
}

impl ProfileBounds {
    /// Scans the support on a fine grid and inflates the maxima by 0.1 %.
    /// Returns `None` for profiles without compact support.
    pub fn scan(profile: &dyn Profile) -> Option<Self> {
        let (lo, hi) = profile.support()?;
        const POINTS: usize = 100_000;
        let mut b = ProfileBounds {
            phi: 0.0,
            dphi: 0.0,
            psi: 0.0,
            dpsi: 0.0,
        };
        for i in 0..=POINTS {
            let x = lo + (hi - lo) * i as f64 / POINTS as f64;
            let v = profile.value(x);
            let d = profile.derivative(x);
            b.phi = b.phi.max(v.abs());
            b.dphi = b.dphi.max(d.abs());
            b.psi = b.psi.max((x * v).abs());
            b.dpsi = b.dpsi.max((v + x * d).abs());
        }
        let inflate = 1.0 + 1e-3;
        Some(ProfileBounds {
            phi: b.phi * inflate,
            dphi: b.dphi * inflate,
            psi: b.psi * inflate,
            dpsi: b.dpsi * inflate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_derivative(p: &dyn Profile) {
        let (lo, hi) = p.support().unwrap();
        for i in 1..200 {
            let x = lo + (hi - lo) * i as f64 / 200.0 + 1e-3;
            let h = 1e-6;
            let fd = (p.value(x + h) - p.value(x - h)) / (2.0 * h);
            assert!((fd - p.derivative(x)).abs() < 1e-5, "x = {x}");
        }
    }

    #[test]
    fn exp_bump_shape() {
        let b = ExpBump {
            center: 1.0,
            half_width: 0.5,
            height: 0.7,
        };
        assert_eq!(b.value(1.0), 0.7);
        assert_eq!(b.value(0.5), 0.0);
        assert_eq!(b.value(1.5), 0.0);
        assert_eq!(b.value(2.0), 0.0);
        check_derivative(&b);
    }

    #[test]
    fn cubic_bump_shape() {
        let b = CubicBump {
            center: -0.3,
            half_width: 0.8,
            height: 2.0,
        };
        assert_eq!(b.value(-0.3), 2.0);
        assert_eq!(b.value(0.5), 0.0);
        check_derivative(&b);
    }

    #[test]
    fn smoothsteps() {
        for s in [0.0, 0.25, 0.5, 0.9, 1.0] {
            assert!((smoothstep3(s) + smoothstep3(1.0 - s) - 1.0).abs() < 1e-15);
            assert!((smoothstep5(s) + smoothstep5(1.0 - s) - 1.0).abs() < 1e-15);
        }
        assert_eq!(smoothstep5_derivative(0.5), 1.875);
        assert_eq!(smoothstep3_derivative(0.5), 1.5);
    }

    #[test]
    fn bounds_dominate_samples() {
        let b = ExpBump {
            center: 1.0,
            half_width: 0.5,
            height: 0.7,
        };
        let bounds = ProfileBounds::scan(&b).unwrap();
        assert!((bounds.phi - 0.7 * 1.001).abs() < 1e-12);
        for i in 0..1000 {
            let x = 0.5 + i as f64 / 1000.0 + 0.000_37;
            assert!(b.derivative(x).abs() <= bounds.dphi);
            assert!((b.value(x) + x * b.derivative(x)).abs() <= bounds.dpsi);
        }
    }
}
