//! The random measure `M`, first integrals `I₁` and products of first
//! integrals over time-disjoint kernels.
//!
//! For a rectangle `B = (s, u] × (a, b]`,
//!
//! ```text
//! M(B) = σ·(W_u - W_s)·1{a < 0 ≤ b} + Σ_{jumps (τ, ξ) ∈ B} ξ - (u - s)·∫_(a,b] x dν(x).
//! ```
//!
//! Finite activity makes the jump sum finite, so no truncation limit is
//! needed.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::levy_model::{m_measure, LevyTriplet, Rect};
use crate::path_sim::Path;
use crate::profile::{Profile, ProfileBounds};

fn check_horizon(path: &Path, t_hi: f64) -> Result<()> {
    if t_hi > path.horizon() {
        return Err(Error::BeyondHorizon {
            time: t_hi,
            horizon: path.horizon(),
        });
    }
    Ok(())
}

/// `M(r)` on one path.
pub fn eval_m(path: &Path, r: &Rect) -> Result<f64> {
    check_horizon(path, r.t_hi())?;
    let tr = path.triplet();
    let mut value = 0.0;
    if r.contains_zero() && tr.sigma() > 0.0 {
        value += tr.sigma() * (path.brownian_at(r.t_hi())? - path.brownian_at(r.t_lo())?);
    }
    for j in path.jumps_in(r.t_lo(), r.t_hi()) {
        if r.contains_size(j.size) {
            value += j.size;
        }
    }
    let compensator = tr.nu().integrate_over(r.x_lo(), r.x_hi(), |x| x)?;
    Ok(value - r.time_len() * compensator)
}

/// A linear combination of indicators of pairwise disjoint rectangles.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel {
    terms: Vec<(f64, Rect)>,
}

impl StepKernel {
    pub fn new(terms: Vec<(f64, Rect)>) -> Result<Self> {
        for (i, (c, a)) in terms.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::invalid("coefficient", format!("{c}")));
            }
            for (_, b) in &terms[i + 1..] {
                if a.intersect(b).is_some() {
                    return Err(Error::invalid("step kernel", format!("rectangles {a} and {b} overlap")));
                }
            }
        }
        Ok(Self { terms })
    }

    pub fn indicator(r: Rect) -> Self {
        Self { terms: vec![(1.0, r)] }
    }

    pub fn terms(&self) -> &[(f64, Rect)] {
        &self.terms
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.terms
            .iter()
            .find(|(_, r)| r.contains(t, x))
            .map_or(0.0, |(c, _)| *c)
    }

    /// `‖k‖²_{L₂(𝕞)} = Σ c²·𝕞(rect)`.
    pub fn l2_norm_sq(&self, triplet: &LevyTriplet) -> Result<f64> {
        let mut acc = 0.0;
        for (c, r) in &self.terms {
            acc += c * c * m_measure(triplet, r)?;
        }
        Ok(acc)
    }
}

/// `1_(s,u](t)·φ(x)`.
#[derive(Debug, Clone)]
pub struct SeparableKernel {
    s: f64,
    u: f64,
    profile: Arc<dyn Profile>,
    bounds: Option<ProfileBounds>,
}

impl SeparableKernel {
    pub fn new(s: f64, u: f64, profile: Arc<dyn Profile>) -> Result<Self> {
        if !(s.is_finite() && u.is_finite() && 0.0 <= s && s < u) {
            return Err(Error::invalid("time interval", format!("({s}, {u}]")));
        }
        let bounds = ProfileBounds::scan(profile.as_ref());
        Ok(Self { s, u, profile, bounds })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.s, self.u)
    }

    pub fn profile(&self) -> &Arc<dyn Profile> {
        &self.profile
    }

    /// Sup-norms of the profile; `None` when it is not compactly supported.
    pub fn bounds(&self) -> Option<ProfileBounds> {
        self.bounds
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        if self.s < t && t <= self.u {
            self.profile.value(x)
        } else {
            0.0
        }
    }

    /// `(u - s)·(σ²φ(0)² + ∫ x²φ(x)² dν)`.
    pub fn l2_norm_sq(&self, triplet: &LevyTriplet) -> Result<f64> {
        let phi0 = self.profile.value(0.0);
        let jump = triplet.nu().integrate(|x| {
            let v = x * self.profile.value(x);
            v * v
        })?;
        Ok((self.u - self.s) * (triplet.sigma() * triplet.sigma() * phi0 * phi0 + jump))
    }
}

/// A first-chaos kernel.
#[derive(Debug, Clone)]
pub enum Kernel {
    Step(StepKernel),
    Separable(SeparableKernel),
}

impl From<StepKernel> for Kernel {
    fn from(k: StepKernel) -> Self {
        Kernel::Step(k)
    }
}

impl From<SeparableKernel> for Kernel {
    fn from(k: SeparableKernel) -> Self {
        Kernel::Separable(k)
    }
}

impl Kernel {
    pub fn value(&self, t: f64, x: f64) -> f64 {
        match self {
            Kernel::Step(k) => k.value(t, x),
            Kernel::Separable(k) => k.value(t, x),
        }
    }

    /// Time intervals `(lo, hi]` on which the kernel may be nonzero.
    pub fn time_intervals(&self) -> Vec<(f64, f64)> {
        match self {
            Kernel::Step(k) => k.terms.iter().map(|(_, r)| (r.t_lo(), r.t_hi())).collect(),
            Kernel::Separable(k) => vec![(k.s, k.u)],
        }
    }

    /// Every time at which the kernel's value may change.
    pub fn time_breakpoints(&self) -> Vec<f64> {
        self.time_intervals().into_iter().flat_map(|(a, b)| [a, b]).collect()
    }

    /// Size values at which the kernel is discontinuous.
    pub fn size_breakpoints(&self) -> Vec<f64> {
        match self {
            Kernel::Step(k) => k.terms.iter().flat_map(|(_, r)| [r.x_lo(), r.x_hi()]).collect(),
            Kernel::Separable(_) => Vec::new(),
        }
    }

    pub fn l2_norm_sq(&self, triplet: &LevyTriplet) -> Result<f64> {
        match self {
            Kernel::Step(k) => k.l2_norm_sq(triplet),
            Kernel::Separable(k) => k.l2_norm_sq(triplet),
        }
    }
}

/// `I₁(k)` on one path.
pub fn eval_i1(path: &Path, kernel: &Kernel) -> Result<f64> {
    match kernel {
        Kernel::Step(k) => {
            let mut acc = 0.0;
            for (c, r) in &k.terms {
                acc += c * eval_m(path, r)?;
            }
            Ok(acc)
        }
        Kernel::Separable(k) => {
            check_horizon(path, k.u)?;
            let tr = path.triplet();
            let phi = &k.profile;
            let mut value = 0.0;
            if tr.sigma() > 0.0 {
                value += tr.sigma()
                    * phi.value(0.0)
                    * (path.brownian_at(k.u)? - path.brownian_at(k.s)?);
            }
            for j in path.jumps_in(k.s, k.u) {
                value += j.size * phi.value(j.size);
            }
            let compensator = tr.nu().integrate(|x| x * phi.value(x))?;
            Ok(value - (k.u - k.s) * compensator)
        }
    }
}

/// `k₁ ⊗ ⋯ ⊗ k_N` with pairwise disjoint time projections.
#[derive(Debug, Clone)]
pub struct TensorKernel {
    factors: Vec<Kernel>,
}

impl TensorKernel {
    pub fn new(factors: Vec<Kernel>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::invalid("tensor kernel", "needs at least one factor"));
        }
        let spans: Vec<Vec<(f64, f64)>> = factors.iter().map(Kernel::time_intervals).collect();
        for i in 0..spans.len() {
            for j in i + 1..spans.len() {
                for &(a0, a1) in &spans[i] {
                    for &(b0, b1) in &spans[j] {
                        if a0.max(b0) < a1.min(b1) {
                            return Err(Error::invalid(
                                "tensor kernel",
                                format!("factors {i} and {j} overlap in time"),
                            ));
                        }
                    }
                }
            }
        }
        Ok(Self { factors })
    }

    /// Product of rectangle indicators.
    pub fn of_rects(rects: &[Rect]) -> Result<Self> {
        Self::new(rects.iter().map(|r| Kernel::Step(StepKernel::indicator(*r))).collect())
    }

    pub fn factors(&self) -> &[Kernel] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn time_breakpoints(&self) -> Vec<f64> {
        self.factors.iter().flat_map(Kernel::time_breakpoints).collect()
    }

    pub fn size_breakpoints(&self) -> Vec<f64> {
        self.factors.iter().flat_map(Kernel::size_breakpoints).collect()
    }

    /// First integrals of the factors.
    pub fn first_integrals(&self, path: &Path) -> Result<Vec<f64>> {
        self.factors.iter().map(|k| eval_i1(path, k)).collect()
    }

    /// `Σ_i k_i(t, x)·Π_{j≠i} I₁(k_j)` from precomputed first integrals.
    pub fn derivative_from_integrals(&self, integrals: &[f64], t: f64, x: f64) -> f64 {
        let mut acc = 0.0;
        for (i, k) in self.factors.iter().enumerate() {
            let v = k.value(t, x);
            if v != 0.0 {
                let rest: f64 = integrals
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, w)| w)
                    .product();
                acc += v * rest;
            }
        }
        acc
    }
}

/// `I_N(k₁ ⊗ ⋯ ⊗ k_N) = Π I₁(k_i)` for time-disjoint factors.
pub fn eval_in(path: &Path, tk: &TensorKernel) -> Result<f64> {
    Ok(tk.first_integrals(path)?.iter().product())
}

/// Chaos derivative `D_{t,x} I_N(k₁ ⊗ ⋯ ⊗ k_N)`.
pub fn derivative_of_elementary(path: &Path, tk: &TensorKernel, t: f64, x: f64) -> Result<f64> {
    let integrals = tk.first_integrals(path)?;
    Ok(tk.derivative_from_integrals(&integrals, t, x))
}
