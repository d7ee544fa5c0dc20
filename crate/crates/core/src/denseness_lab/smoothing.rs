//! Smooth stand-ins for indicators and the cutoff plateau.

use crate::error::{Error, Result};
use crate::levy_model::{mu_open, JumpMeasure, LevyTriplet};
use crate::profile::{smoothstep5, smoothstep5_derivative, Profile};
use crate::quadrature::composite_checked;

/// Largest number of ramp-halving steps when fitting a smooth indicator.
const MAX_HALVINGS: usize = 60;

/// Smooth `φ_A` for `A = (a, b]`: quintic ramps of width `2w` centered at
/// the endpoints, so `φ_A = 1` on `C = [a + w, b - w]` and
/// `supp φ_A ⊆ [a - w, b + w] ⊂ U = (a - 2w, b + 2w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothIndicator {
    a: f64,
    b: f64,
    w: f64,
    slack: f64,
}

impl SmoothIndicator {
    /// Uses ramp half-width `w ≤ (b - a)/4`.
    pub fn with_ramp(triplet: &LevyTriplet, a: f64, b: f64, w: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("interval", format!("({a}, {b}]")));
        }
        if !(w > 0.0 && w <= 0.25 * (b - a)) {
            return Err(Error::invalid("ramp", format!("{w} must lie in (0, (b - a)/4]")));
        }
        if !(a - 2.0 * w < a && a + w > a && b - w < b && b + 2.0 * w > b) {
            return Err(Error::invalid("ramp", format!("{w} is below the resolution of ({a}, {b}]")));
        }
        let slack = mu_open(triplet, a - 2.0 * w, a + w)? + mu_open(triplet, b - w, b + 2.0 * w)?;
        Ok(Self { a, b, w, slack })
    }

    /// Halves the ramp from `min(δ, (b - a)/4)` until `μ(U∖C) ≤ δ`.
    pub fn fit(triplet: &LevyTriplet, a: f64, b: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::invalid("slack", format!("{delta} (must be positive)")));
        }
        let mut w = delta.min(0.25 * (b - a));
        for _ in 0..MAX_HALVINGS {
            let Ok(s) = Self::with_ramp(triplet, a, b, w) else {
                break;
            };
            if s.slack <= delta {
                return Ok(s);
            }
            w *= 0.5;
        }
        Err(Error::invalid(
            "slack",
            format!("cannot reach μ(U∖C) <= {delta} for ({a}, {b}]: μ has an atom at an endpoint"),
        ))
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn ramp(&self) -> f64 {
        self.w
    }

    /// Inner compact set `C`.
    pub fn inner(&self) -> (f64, f64) {
        (self.a + self.w, self.b - self.w)
    }

    /// Outer open set `U`.
    pub fn outer(&self) -> (f64, f64) {
        (self.a - 2.0 * self.w, self.b + 2.0 * self.w)
    }

    /// `μ(U∖C)`.
    pub fn slack(&self) -> f64 {
        self.slack
    }

    fn edges(&self) -> [f64; 6] {
        [self.a - self.w, self.a, self.a + self.w, self.b - self.w, self.b, self.b + self.w]
    }

    fn indicator(&self, x: f64) -> f64 {
        if self.a < x && x <= self.b {
            1.0
        } else {
            0.0
        }
    }

    /// `‖1_A - φ_A‖²_{L₂(μ)}`; exact for atomic `ν`.
    pub fn l2_error_sq(&self, triplet: &LevyTriplet) -> Result<f64> {
        mu_integral(triplet, |x| (self.indicator(x) - self.value(x)).powi(2), &self.edges())
    }

    /// `(‖1_A‖², ⟨1_A, φ_A⟩, ‖φ_A‖²)` in `L₂(μ)`.
    pub fn mu_moments(&self, triplet: &LevyTriplet) -> Result<(f64, f64, f64)> {
        let e = self.edges();
        Ok((
            mu_integral(triplet, |x| self.indicator(x), &e)?,
            mu_integral(triplet, |x| self.indicator(x) * self.value(x), &e)?,
            mu_integral(triplet, |x| self.value(x).powi(2), &e)?,
        ))
    }
}

/// `∫ h dμ = σ²h(0) + ∫ x²h(x) dν(x)`, with density panels split at `breaks`.
fn mu_integral<H: Fn(f64) -> f64>(triplet: &LevyTriplet, h: H, breaks: &[f64]) -> Result<f64> {
    let gaussian = triplet.sigma() * triplet.sigma() * h(0.0);
    let jump = match triplet.nu() {
        JumpMeasure::Atoms(atoms) => atoms
            .iter()
            .map(|at| at.intensity * at.position * at.position * h(at.position))
            .sum(),
        JumpMeasure::Density(d) => {
            let (lo, hi) = d.support();
            let mut edges = vec![lo, hi];
            edges.extend(breaks.iter().copied().filter(|e| *e > lo && *e < hi));
            edges.sort_by(f64::total_cmp);
            edges.dedup();
            let mut acc = 0.0;
            for win in edges.windows(2) {
                acc += composite_checked(|x| d.density(x) * x * x * h(x), win[0], win[1], d.panels(), 1e-10)?;
            }
            acc
        }
    };
    Ok(gaussian + jump)
}

impl Profile for SmoothIndicator {
    fn value(&self, x: f64) -> f64 {
        if self.a + self.w <= x && x <= self.b - self.w {
            return 1.0;
        }
        if x <= self.a - self.w || x >= self.b + self.w {
            return 0.0;
        }
        let rise = smoothstep5((x - (self.a - self.w)) / (2.0 * self.w));
        let fall = smoothstep5(((self.b + self.w) - x) / (2.0 * self.w));
        (rise * fall).min(1.0)
    }

    fn derivative(&self, x: f64) -> f64 {
        let s_rise = (x - (self.a - self.w)) / (2.0 * self.w);
        let s_fall = ((self.b + self.w) - x) / (2.0 * self.w);
        let scale = 0.5 / self.w;
        smoothstep5_derivative(s_rise) * scale * smoothstep5(s_fall)
            - smoothstep5(s_rise) * smoothstep5_derivative(s_fall) * scale
    }

    fn support(&self) -> Option<(f64, f64)> {
        Some((self.a - self.w, self.b + self.w))
    }
}

/// `β_N`: equal to 1 on `[-N, N]`, a quintic ramp of width 2 on each side,
/// zero outside `[-N-2, N+2]`; slope at most 15/16.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffFn {
    level: f64,
}

impl CutoffFn {
    pub fn new(level: f64) -> Result<Self> {
        if !(level >= 0.0 && level.is_finite()) {
            return Err(Error::invalid("cutoff level", format!("{level}")));
        }
        Ok(Self { level })
    }

    pub fn level(&self) -> f64 {
        self.level
    }
}

impl Profile for CutoffFn {
    fn value(&self, x: f64) -> f64 {
        smoothstep5(1.0 - (x.abs() - self.level) / 2.0)
    }

    fn derivative(&self, x: f64) -> f64 {
        -0.5 * smoothstep5_derivative(1.0 - (x.abs() - self.level) / 2.0) * x.signum()
    }

    fn support(&self) -> Option<(f64, f64)> {
        Some((-self.level - 2.0, self.level + 2.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::JumpDensity;

    fn triplet() -> LevyTriplet {
        LevyTriplet::new(0.0, 0.5, JumpMeasure::atoms([(1.0, 2.0), (-0.5, 1.0)]).unwrap()).unwrap()
    }

    #[test]
    fn sandwich_and_exact_error() {
        let tr = triplet();
        for (a, b) in [(0.5, 1.5), (-1.0, -0.25), (-0.3, 0.4)] {
            let s = SmoothIndicator::fit(&tr, a, b, 0.05).unwrap();
            let (c0, c1) = s.inner();
            let (u0, u1) = s.outer();
            for i in 0..=10_000 {
                let x = -2.0 + 4.0 * i as f64 / 10_000.0;
                let v = s.value(x);
                assert!((0.0..=1.0).contains(&v));
                if c0 <= x && x <= c1 {
                    assert_eq!(v, 1.0);
                }
                if x <= u0 || x >= u1 {
                    assert_eq!(v, 0.0);
                }
            }
            assert!(s.slack() <= 0.05);
            assert!(s.l2_error_sq(&tr).unwrap() <= s.slack() + 1e-15);
        }
    }

    #[test]
    fn atom_at_endpoint_cannot_be_fitted() {
        let tr = triplet();
        assert!(SmoothIndicator::fit(&tr, 1.0, 2.0, 0.01).is_err());
    }

    #[test]
    fn density_error_below_slack() {
        let nu = JumpMeasure::Density(JumpDensity::uniform(3.0, 1.0, 2.0, 8).unwrap());
        let tr = LevyTriplet::new(0.0, 0.0, nu).unwrap();
        let s = SmoothIndicator::fit(&tr, 1.2, 1.7, 0.1).unwrap();
        let err = s.l2_error_sq(&tr).unwrap();
        assert!(err > 0.0 && err <= s.slack());
    }

    #[test]
    fn cutoff_properties() {
        for level in [0.0, 1.0, 4.0] {
            let beta = CutoffFn::new(level).unwrap();
            for i in 0..=10_000 {
                let x = -(level + 3.0) + 2.0 * (level + 3.0) * i as f64 / 10_000.0;
                let v = beta.value(x);
                assert!((0.0..=1.0).contains(&v));
                if x.abs() <= level {
                    assert_eq!(v, 1.0);
                }
                if x.abs() >= level + 2.0 {
                    assert_eq!(v, 0.0);
                }
                assert!(beta.derivative(x).abs() <= 1.0);
            }
        }
    }
}
