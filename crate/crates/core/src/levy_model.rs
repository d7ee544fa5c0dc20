//! Lévy triplets, the measures `μ` and `𝕞`, and integration against `ν`.
//!
//! Only finite-activity jump measures are supported: `ν(ℝ) < ∞`, so every
//! path carries finitely many jumps on a bounded horizon. The process is
//! parametrized by its genuine linear drift `b`,
//!
//! ```text
//! X_t = b·t + σ·W_t + Σ_{s ≤ t} ΔX_s,
//! ```
//!
//! and [`LevyTriplet::gamma`] converts to the drift `γ` of the usual
//! truncated representation (truncation at `|x| ≤ 1`).
//!
//! The size measure is `dμ(x) = σ² dδ₀(x) + x² dν(x)` and the time–size
//! measure is `d𝕞(t, x) = dt dμ(x)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature::{composite, composite_checked, composite_nodes, panel_rule};

/// Relative tolerance of the panel-doubling check on `ν` integrals.
pub const NU_QUADRATURE_TOL: f64 = 1e-10;

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub intensity: f64,
}

/// Absolutely continuous jump measure with compact support away from zero.
#[derive(Clone)]
pub struct JumpDensity {
    shape: DensityFn,
    lo: f64,
    hi: f64,
    exclusion: f64,
    panels: usize,
    cumulative: Vec<f64>,
    first_moment: f64,
    second_moment: f64,
}

impl fmt::Debug for JumpDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JumpDensity")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("exclusion", &self.exclusion)
            .field("panels", &self.panels)
            .field("mass", &self.mass())
            .finish()
    }
}

impl JumpDensity {
    /// `shape` is the density of `ν` on `[lo, hi]`; the support must avoid
    /// `(-exclusion, exclusion)`.
    pub fn new(shape: DensityFn, lo: f64, hi: f64, exclusion: f64, panels: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid("density support", format!("[{lo}, {hi}]")));
        }
        if !(exclusion > 0.0) {
            return Err(Error::invalid("exclusion", "must be positive"));
        }
        if !(hi <= -exclusion || lo >= exclusion) {
            return Err(Error::invalid(
                "density support",
                format!("[{lo}, {hi}] meets the excluded neighbourhood (-{exclusion}, {exclusion}) of 0"),
            ));
        }
        if panels == 0 {
            return Err(Error::invalid("panels", "must be at least 1"));
        }
        for (x, _) in composite_nodes(lo, hi, 2 * panels, &[]) {
            let v = shape(x);
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid("density", format!("value {v} at {x}")));
            }
        }
        let mass = composite_checked(|x| shape(x), lo, hi, panels, NU_QUADRATURE_TOL)?;
        if !(mass > 0.0) {
            return Err(Error::invalid("density", "total mass must be positive"));
        }
        let width = (hi - lo) / panels as f64;
        let mut cumulative = Vec::with_capacity(panels + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for p in 0..panels {
            let a = lo + width * p as f64;
            let b = if p + 1 == panels { hi } else { a + width };
            acc += composite(|x| shape(x), a, b, 2);
            cumulative.push(acc);
        }
        let first_moment = composite_checked(|x| x * shape(x), lo, hi, panels, NU_QUADRATURE_TOL)?;
        let second_moment =
            composite_checked(|x| x * x * shape(x), lo, hi, panels, NU_QUADRATURE_TOL)?;
        Ok(Self {
            shape,
            lo,
            hi,
            exclusion,
            panels,
            cumulative,
            first_moment,
            second_moment,
        })
    }

    /// `rate` times the uniform law on `(lo, hi]`.
    pub fn uniform(rate: f64, lo: f64, hi: f64, panels: usize) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::invalid("rate", "must be positive"));
        }
        let height = rate / (hi - lo);
        let exclusion = if lo > 0.0 { lo } else { -hi };
        Self::new(Arc::new(move |_| height), lo, hi, exclusion, panels)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            (self.shape)(x)
        }
    }

    pub fn mass(&self) -> f64 {
        *self.cumulative.last().expect("cumulative table is never empty")
    }

    fn integrate_over<H: Fn(f64) -> f64>(&self, a: f64, b: f64, h: H) -> Result<f64> {
        let lo = a.max(self.lo);
        let hi = b.min(self.hi);
        if lo >= hi {
            return Ok(0.0);
        }
        let share = ((hi - lo) / (self.hi - self.lo) * self.panels as f64).ceil().max(1.0) as usize;
        composite_checked(|x| h(x) * (self.shape)(x), lo, hi, share, NU_QUADRATURE_TOL)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let target = rng.random::<f64>() * self.mass();
        let panel = self
            .cumulative
            .partition_point(|&c| c <= target)
            .saturating_sub(1)
            .min(self.panels - 1);
        let width = (self.hi - self.lo) / self.panels as f64;
        let edge = self.lo + width * panel as f64;
        let residual = target - self.cumulative[panel];
        let rule = panel_rule();
        let (mut a, mut b) = (edge, edge + width);
        for _ in 0..64 {
            let mid = 0.5 * (a + b);
            let mass = rule.integrate(|x| (self.shape)(x), edge, mid);
            if mass < residual {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }
}

/// The Lévy measure `ν` of a finite-activity process.
#[derive(Debug, Clone)]
pub enum JumpMeasure {
    Atoms(Vec<Atom>),
    Density(JumpDensity),
}

impl JumpMeasure {
    /// Atomic measure `Σ λ_k δ_{x_k}` from `(x_k, λ_k)` pairs.
    pub fn atoms<I: IntoIterator<Item = (f64, f64)>>(atoms: I) -> Result<Self> {
        let mut out: Vec<Atom> = Vec::new();
        for (position, intensity) in atoms {
            if !position.is_finite() || position == 0.0 {
                return Err(Error::invalid("atom position", format!("{position} (must be finite and nonzero)")));
            }
            if !(intensity.is_finite() && intensity > 0.0) {
                return Err(Error::invalid("atom intensity", format!("{intensity} (must be positive)")));
            }
            if out.iter().any(|a| a.position == position) {
                return Err(Error::invalid("atom position", format!("duplicate atom at {position}")));
            }
            out.push(Atom { position, intensity });
        }
        Ok(JumpMeasure::Atoms(out))
    }

    pub fn empty() -> Self {
        JumpMeasure::Atoms(Vec::new())
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, JumpMeasure::Atoms(_))
    }

    /// The atoms of an atomic measure; empty for a density.
    pub fn atom_list(&self) -> &[Atom] {
        match self {
            JumpMeasure::Atoms(a) => a,
            JumpMeasure::Density(_) => &[],
        }
    }

    /// `ν(ℝ)`.
    pub fn total_mass(&self) -> f64 {
        match self {
            JumpMeasure::Atoms(a) => a.iter().map(|a| a.intensity).sum(),
            JumpMeasure::Density(d) => d.mass(),
        }
    }

    /// `∫ x dν(x)`.
    pub fn first_moment(&self) -> f64 {
        match self {
            JumpMeasure::Atoms(a) => a.iter().map(|a| a.position * a.intensity).sum(),
            JumpMeasure::Density(d) => d.first_moment,
        }
    }

    /// `∫ x² dν(x)`.
    pub fn second_moment(&self) -> f64 {
        match self {
            JumpMeasure::Atoms(a) => a.iter().map(|a| a.position * a.position * a.intensity).sum(),
            JumpMeasure::Density(d) => d.second_moment,
        }
    }

    /// `∫_(a,b] h dν`.
    pub fn integrate_over<H: Fn(f64) -> f64>(&self, a: f64, b: f64, h: H) -> Result<f64> {
        if a >= b {
            return Ok(0.0);
        }
        match self {
            JumpMeasure::Atoms(atoms) => Ok(atoms
                .iter()
                .filter(|at| at.position > a && at.position <= b)
                .map(|at| at.intensity * h(at.position))
                .sum()),
            JumpMeasure::Density(d) => d.integrate_over(a, b, h),
        }
    }

    /// `∫_(a,b) h dν` over the open interval.
    pub fn integrate_open<H: Fn(f64) -> f64>(&self, a: f64, b: f64, h: H) -> Result<f64> {
        if a >= b {
            return Ok(0.0);
        }
        match self {
            JumpMeasure::Atoms(atoms) => Ok(atoms
                .iter()
                .filter(|at| at.position > a && at.position < b)
                .map(|at| at.intensity * h(at.position))
                .sum()),
            JumpMeasure::Density(d) => d.integrate_over(a, b, h),
        }
    }

    /// `∫ h dν` over the whole line.
    pub fn integrate<H: Fn(f64) -> f64>(&self, h: H) -> Result<f64> {
        match self {
            JumpMeasure::Atoms(_) => self.integrate_over(f64::NEG_INFINITY, f64::INFINITY, h),
            JumpMeasure::Density(d) => {
                composite_checked(|x| h(x) * (d.shape)(x), d.lo, d.hi, d.panels, NU_QUADRATURE_TOL)
            }
        }
    }

    /// Node/weight pairs `(x, w)` with `Σ w·h(x) ≈ ∫ h dν`; exact for atoms.
    /// Density panels are split at `breakpoints`.
    pub fn quadrature_nodes(&self, breakpoints: &[f64]) -> Vec<(f64, f64)> {
        match self {
            JumpMeasure::Atoms(atoms) => atoms.iter().map(|a| (a.position, a.intensity)).collect(),
            JumpMeasure::Density(d) => composite_nodes(d.lo, d.hi, d.panels, breakpoints)
                .into_iter()
                .map(|(x, w)| (x, w * (d.shape)(x)))
                .collect(),
        }
    }

    /// Draws a jump size from `ν / ν(ℝ)`.
    pub fn sample_size<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpMeasure::Atoms(atoms) => {
                let total = self.total_mass();
                let target = rng.random::<f64>() * total;
                let mut acc = 0.0;
                for a in atoms {
                    acc += a.intensity;
                    if target < acc {
                        return a.position;
                    }
                }
                atoms.last().expect("sampling requires a nonempty measure").position
            }
            JumpMeasure::Density(d) => d.sample(rng),
        }
    }
}

/// Drift, Gaussian volatility and jump measure.
#[derive(Debug, Clone)]
pub struct LevyTriplet {
    drift: f64,
    sigma: f64,
    nu: JumpMeasure,
}

impl LevyTriplet {
    pub fn new(drift: f64, sigma: f64, nu: JumpMeasure) -> Result<Self> {
        ensure_finite("drift", drift)?;
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid("sigma", format!("{sigma} (must be finite and >= 0)")));
        }
        if sigma == 0.0 && !(nu.total_mass() > 0.0) {
            return Err(Error::invalid(
                "nu",
                "a process without Gaussian part needs a jump measure of positive mass",
            ));
        }
        Ok(Self { drift, sigma, nu })
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn nu(&self) -> &JumpMeasure {
        &self.nu
    }

    /// Drift `γ = b + ∫_{|x|≤1} x dν(x)` of the representation truncated at 1.
    pub fn gamma(&self) -> Result<f64> {
        let small = match &self.nu {
            JumpMeasure::Atoms(atoms) => atoms
                .iter()
                .filter(|a| a.position.abs() <= 1.0)
                .map(|a| a.position * a.intensity)
                .sum(),
            JumpMeasure::Density(_) => self.nu.integrate_over(-1.0, 1.0, |x| x)?,
        };
        Ok(self.drift + small)
    }

    /// `𝔼X_1 = b + ∫ x dν`.
    pub fn mean_rate(&self) -> f64 {
        self.drift + self.nu.first_moment()
    }

    /// `Var X_1 = σ² + ∫ x² dν = μ(ℝ)`.
    pub fn variance_rate(&self) -> f64 {
        self.sigma * self.sigma + self.nu.second_moment()
    }

    /// Characteristic exponent: `𝔼 e^{iuX_t} = exp(t·Ψ(u))`.
    pub fn char_exponent(&self, u: f64) -> Result<Complex64> {
        let re = self.nu.integrate(|x| (u * x).cos() - 1.0)?;
        let im = self.nu.integrate(|x| (u * x).sin())?;
        Ok(Complex64::new(
            -0.5 * self.sigma * self.sigma * u * u + re,
            u * self.drift + im,
        ))
    }
}

/// Half-open rectangle `(t_lo, t_hi] × (x_lo, x_hi]` in time–size space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    t_lo: f64,
    t_hi: f64,
    x_lo: f64,
    x_hi: f64,
}

impl Rect {
    pub fn new(t_lo: f64, t_hi: f64, x_lo: f64, x_hi: f64) -> Result<Self> {
        if !(t_lo.is_finite() && t_hi.is_finite() && 0.0 <= t_lo && t_lo < t_hi) {
            return Err(Error::invalid("rect time interval", format!("({t_lo}, {t_hi}]")));
        }
        if !(x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi) {
            return Err(Error::invalid("rect size interval", format!("({x_lo}, {x_hi}]")));
        }
        Ok(Self { t_lo, t_hi, x_lo, x_hi })
    }

    pub fn t_lo(&self) -> f64 {
        self.t_lo
    }

    pub fn t_hi(&self) -> f64 {
        self.t_hi
    }

    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }

    pub fn x_hi(&self) -> f64 {
        self.x_hi
    }

    pub fn time_len(&self) -> f64 {
        self.t_hi - self.t_lo
    }

    /// Whether the Gaussian atom `x = 0` lies in `(x_lo, x_hi]`.
    pub fn contains_zero(&self) -> bool {
        self.x_lo < 0.0 && 0.0 <= self.x_hi
    }

    pub fn contains_time(&self, t: f64) -> bool {
        self.t_lo < t && t <= self.t_hi
    }

    pub fn contains_size(&self, x: f64) -> bool {
        self.x_lo < x && x <= self.x_hi
    }

    pub fn contains(&self, t: f64, x: f64) -> bool {
        self.contains_time(t) && self.contains_size(x)
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let t_lo = self.t_lo.max(other.t_lo);
        let t_hi = self.t_hi.min(other.t_hi);
        let x_lo = self.x_lo.max(other.x_lo);
        let x_hi = self.x_hi.min(other.x_hi);
        (t_lo < t_hi && x_lo < x_hi).then_some(Rect { t_lo, t_hi, x_lo, x_hi })
    }

    pub fn time_overlaps(&self, other: &Rect) -> bool {
        self.t_lo.max(other.t_lo) < self.t_hi.min(other.t_hi)
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}]x({}, {}]", self.t_lo, self.t_hi, self.x_lo, self.x_hi)
    }
}

/// Which part of `μ` to integrate against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurePart {
    /// `σ²δ₀ + x²ν`.
    All,
    /// The Gaussian atom `σ²δ₀` only.
    Gaussian,
    /// The jump part `x²ν` only.
    Jump,
}

/// `μ((a, b])`.
pub fn mu_measure(triplet: &LevyTriplet, a: f64, b: f64) -> Result<f64> {
    mu_measure_part(triplet, a, b, MeasurePart::All)
}

pub fn mu_measure_part(triplet: &LevyTriplet, a: f64, b: f64, part: MeasurePart) -> Result<f64> {
    if !(a < b) {
        return Err(Error::invalid("interval", format!("({a}, {b}] is empty")));
    }
    let gaussian = if a < 0.0 && 0.0 <= b {
        triplet.sigma * triplet.sigma
    } else {
        0.0
    };
    let value = match part {
        MeasurePart::Gaussian => gaussian,
        MeasurePart::Jump => triplet.nu.integrate_over(a, b, |x| x * x)?,
        MeasurePart::All => gaussian + triplet.nu.integrate_over(a, b, |x| x * x)?,
    };
    ensure_finite("mu measure", value)
}

/// `μ((a, b))` over the open interval.
pub fn mu_open(triplet: &LevyTriplet, a: f64, b: f64) -> Result<f64> {
    if a >= b {
        return Ok(0.0);
    }
    let gaussian = if a < 0.0 && 0.0 < b {
        triplet.sigma * triplet.sigma
    } else {
        0.0
    };
    ensure_finite("mu measure", gaussian + triplet.nu.integrate_open(a, b, |x| x * x)?)
}

/// `𝕞(r) = |T|·μ(A)`.
pub fn m_measure(triplet: &LevyTriplet, r: &Rect) -> Result<f64> {
    Ok(r.time_len() * mu_measure(triplet, r.x_lo, r.x_hi)?)
}

pub fn m_measure_part(triplet: &LevyTriplet, r: &Rect, part: MeasurePart) -> Result<f64> {
    Ok(r.time_len() * mu_measure_part(triplet, r.x_lo, r.x_hi, part)?)
}

/// `𝕞(r₁ ∩ r₂)`, zero for disjoint rectangles.
pub fn m_intersection(triplet: &LevyTriplet, r1: &Rect, r2: &Rect, part: MeasurePart) -> Result<f64> {
    match r1.intersect(r2) {
        Some(r) => m_measure_part(triplet, &r, part),
        None => Ok(0.0),
    }
}

/// `∫ h dν`.
pub fn nu_integral<H: Fn(f64) -> f64>(triplet: &LevyTriplet, h: H) -> Result<f64> {
    ensure_finite("nu integral", triplet.nu.integrate(h)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms(list: &[(f64, f64)]) -> JumpMeasure {
        JumpMeasure::atoms(list.iter().copied()).unwrap()
    }

    #[test]
    fn mu_gaussian_atom_only() {
        let tr = LevyTriplet::new(0.0, 1.0, atoms(&[(1.0, 2.0)])).unwrap();
        assert_eq!(mu_measure(&tr, -0.5, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn mu_single_atom() {
        let tr = LevyTriplet::new(0.0, 0.0, atoms(&[(1.0, 2.0)])).unwrap();
        assert_eq!(mu_measure(&tr, 0.5, 1.5).unwrap(), 2.0);
    }

    #[test]
    fn mu_uniform_density_closed_form() {
        let nu = JumpMeasure::Density(JumpDensity::uniform(3.0, 1.0, 2.0, 8).unwrap());
        let tr = LevyTriplet::new(0.0, 0.0, nu).unwrap();
        // 3 ∫₁² x² dx = 7
        assert!((mu_measure(&tr, 1.0, 2.0).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn mu_rejects_empty_interval() {
        let tr = LevyTriplet::new(0.0, 1.0, JumpMeasure::empty()).unwrap();
        assert!(mu_measure(&tr, 1.0, 1.0).is_err());
    }

    #[test]
    fn shifting_away_from_zero_drops_sigma_squared() {
        let tr = LevyTriplet::new(0.0, 0.7, atoms(&[(0.3, 1.5)])).unwrap();
        let with_zero = mu_measure(&tr, -0.1, 0.5).unwrap();
        let without = mu_measure(&tr, 0.0, 0.5).unwrap();
        assert!((with_zero - without - 0.49).abs() < 1e-15);
    }

    #[test]
    fn m_measure_examples() {
        let tr = LevyTriplet::new(0.0, 1.0, atoms(&[(1.0, 2.0)])).unwrap();
        let r = Rect::new(0.0, 2.0, -0.5, 0.5).unwrap();
        assert_eq!(m_measure(&tr, &r).unwrap(), 2.0);

        let tr = LevyTriplet::new(0.0, 0.0, atoms(&[(1.0, 2.0)])).unwrap();
        let r = Rect::new(1.0, 3.0, 0.5, 1.5).unwrap();
        assert_eq!(m_measure(&tr, &r).unwrap(), 4.0);

        let a = Rect::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let b = Rect::new(1.0, 2.0, 0.0, 1.0).unwrap();
        assert_eq!(m_intersection(&tr, &a, &b, MeasurePart::All).unwrap(), 0.0);
    }

    #[test]
    fn nu_integral_examples() {
        let tr = LevyTriplet::new(0.0, 0.0, atoms(&[(1.0, 2.0)])).unwrap();
        let phi = |x: f64| if x == 1.0 { 0.7 } else { 0.0 };
        assert!((nu_integral(&tr, |x| x * phi(x)).unwrap() - 1.4).abs() < 1e-15);

        let tr = LevyTriplet::new(0.0, 0.0, atoms(&[(1.0, 2.0), (-1.0, 1.0)])).unwrap();
        assert_eq!(nu_integral(&tr, |x| x * x).unwrap(), 3.0);

        let nu = JumpMeasure::Density(JumpDensity::uniform(3.0, 1.0, 2.0, 8).unwrap());
        let tr = LevyTriplet::new(0.0, 0.0, nu).unwrap();
        assert!((nu_integral(&tr, |x| x).unwrap() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn atomic_integral_is_independent_of_quadrature_settings() {
        let nu = atoms(&[(0.4, 1.0), (-1.3, 0.5)]);
        let coarse: f64 = nu.quadrature_nodes(&[]).iter().map(|(x, w)| w * x.cos()).sum();
        let fine: f64 = nu.quadrature_nodes(&[0.1, 0.2]).iter().map(|(x, w)| w * x.cos()).sum();
        assert_eq!(coarse, fine);
    }

    #[test]
    fn density_with_insufficient_panels_is_reported() {
        let wiggly: DensityFn = Arc::new(|x: f64| 1.0 + (80.0 * x).sin());
        let d = JumpDensity::new(wiggly, 1.0, 2.0, 0.5, 1);
        assert!(matches!(d, Err(Error::Quadrature(_))));
    }

    #[test]
    fn triplet_validation() {
        assert!(LevyTriplet::new(0.0, 0.0, JumpMeasure::empty()).is_err());
        assert!(LevyTriplet::new(0.0, -1.0, JumpMeasure::empty()).is_err());
        assert!(JumpMeasure::atoms([(0.0, 1.0)]).is_err());
        assert!(JumpMeasure::atoms([(1.0, 0.0)]).is_err());
        assert!(JumpDensity::uniform(1.0, -0.5, 0.5, 4).is_err());
    }

    #[test]
    fn gamma_uses_unit_truncation() {
        let tr = LevyTriplet::new(0.3, 0.0, atoms(&[(0.5, 2.0), (3.0, 1.0)])).unwrap();
        assert!((tr.gamma().unwrap() - 1.3).abs() < 1e-15);
    }

    #[test]
    fn char_exponent_of_poisson() {
        let tr = LevyTriplet::new(0.0, 0.0, atoms(&[(1.0, 2.0)])).unwrap();
        let psi = tr.char_exponent(0.7).unwrap();
        let want = Complex64::new(2.0 * (0.7f64.cos() - 1.0), 2.0 * 0.7f64.sin());
        assert!((psi - want).norm() < 1e-15);
    }

    #[test]
    fn density_sampler_matches_uniform_law() {
        use rand::SeedableRng;
        let d = JumpDensity::uniform(3.0, 1.0, 2.0, 8).unwrap();
        let nu = JumpMeasure::Density(d);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| nu.sample_size(&mut rng)).sum::<f64>() / n as f64;
        // uniform on (1, 2]: mean 1.5, sd 0.2887
        assert!((mean - 1.5).abs() < 4.0 * 0.2887 / (n as f64).sqrt());
    }
}
