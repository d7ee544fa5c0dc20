//! `D_{1,2}` norms: exact integration of `|D_{t,x}F|²` against `𝕞` on each
//! path, averaged over paths.
//!
//! `D_{t,x}F` is constant in `t` between consecutive time breakpoints, so
//! the time integral is a finite sum of piece lengths times the value at
//! the piece midpoint. In `x` the measure `μ` is the Gaussian atom `σ²δ₀`
//! plus `x²ν`, integrated exactly for atoms and by quadrature for densities.

use std::sync::Arc;

use super::functional::{Combination, Functional, Realized};
use crate::chaos_oracle::Flavor;
use crate::error::{Error, Result};
use crate::levy_model::LevyTriplet;
use crate::path_sim::{mc_run_vec, MCEstimate, PathSampler};

/// Integrates `|D_{t,x}F|²` against `𝕞` for one functional's breakpoints.
#[derive(Debug, Clone)]
pub struct MIntegrator {
    pieces: Vec<(f64, f64)>,
    gaussian_weight: f64,
    jump_nodes: Vec<(f64, f64)>,
}

impl MIntegrator {
    pub fn new(triplet: &LevyTriplet, time_breakpoints: &[f64], size_breakpoints: &[f64]) -> Self {
        let mut times: Vec<f64> = time_breakpoints.iter().copied().filter(|t| *t > 0.0).collect();
        times.push(0.0);
        times.sort_by(f64::total_cmp);
        times.dedup();
        let pieces = times
            .windows(2)
            .map(|w| (w[1] - w[0], 0.5 * (w[0] + w[1])))
            .collect();
        let jump_nodes = triplet
            .nu()
            .quadrature_nodes(size_breakpoints)
            .into_iter()
            .map(|(x, w)| (x, w * x * x))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        Self {
            pieces,
            gaussian_weight: triplet.sigma() * triplet.sigma(),
            jump_nodes,
        }
    }

    pub fn for_functional(triplet: &LevyTriplet, f: &dyn Functional) -> Self {
        Self::new(triplet, &f.time_breakpoints(), &f.size_breakpoints())
    }

    /// Time pieces as `(length, midpoint)`.
    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    /// Size nodes as `(x, weight)` for `x²ν`.
    pub fn jump_nodes(&self) -> &[(f64, f64)] {
        &self.jump_nodes
    }

    /// `σ²∫|D_{t,0}F|² dt`.
    pub fn zero_part(&self, field: &dyn Realized) -> f64 {
        if self.gaussian_weight == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for &(len, mid) in &self.pieces {
            let d = field.derivative(mid, 0.0);
            acc += len * d * d;
        }
        self.gaussian_weight * acc
    }

    /// `∫∫ |D_{t,x}F|² x² dν(x) dt`.
    pub fn jump_part(&self, field: &dyn Realized) -> f64 {
        let mut acc = 0.0;
        for &(len, mid) in &self.pieces {
            let mut inner = 0.0;
            for &(x, w) in &self.jump_nodes {
                let d = field.derivative(mid, x);
                inner += w * d * d;
            }
            acc += len * inner;
        }
        acc
    }

    /// `∫ |D_{t,x}F|² d𝕞` in a single pass over all size nodes.
    pub fn full(&self, field: &dyn Realized) -> f64 {
        let mut acc = 0.0;
        for &(len, mid) in &self.pieces {
            let d0 = field.derivative(mid, 0.0);
            let mut inner = self.gaussian_weight * d0 * d0;
            for &(x, w) in &self.jump_nodes {
                let d = field.derivative(mid, x);
                inner += w * d * d;
            }
            acc += len * inner;
        }
        acc
    }

    /// Derivative part of the norm for `flavor`.
    pub fn derivative_part(&self, field: &dyn Realized, flavor: Flavor) -> f64 {
        match flavor {
            Flavor::Full => self.full(field),
            Flavor::ZeroPart => self.zero_part(field),
            Flavor::JumpPart => self.jump_part(field),
        }
    }
}

/// Per-path pieces of the norm: `|F|²` and the three derivative integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathNorm {
    pub l2: f64,
    pub zero: f64,
    pub jump: f64,
    pub full: f64,
}

impl PathNorm {
    /// `|F|² + derivative part` for `flavor`.
    pub fn flavored(&self, flavor: Flavor) -> f64 {
        self.l2
            + match flavor {
                Flavor::Full => self.full,
                Flavor::ZeroPart => self.zero,
                Flavor::JumpPart => self.jump,
            }
    }
}

pub fn path_norm(field: &dyn Realized, integrator: &MIntegrator) -> PathNorm {
    let v = field.value();
    PathNorm {
        l2: v * v,
        zero: integrator.zero_part(field),
        jump: integrator.jump_part(field),
        full: integrator.full(field),
    }
}

/// `‖F_i‖²` for several functionals, all on the same paths.
///
/// When `F_i` contains an estimated centering constant with standard error
/// `s`, the bias it induces in `𝔼|F_i|²` is first order `2|𝔼F_i|·s`; that
/// term is added in quadrature to the Monte Carlo standard error.
pub fn d12_norms_mc(
    functionals: &[&dyn Functional],
    triplet: Arc<LevyTriplet>,
    horizon: f64,
    n_reps: u64,
    seed: u64,
    flavor: Flavor,
) -> Result<Vec<MCEstimate>> {
    let mut required = Vec::new();
    for f in functionals {
        for t in f.required_times() {
            if t > horizon {
                return Err(Error::BeyondHorizon { time: t, horizon });
            }
            required.push(t);
        }
    }
    let integrators: Vec<MIntegrator> = functionals
        .iter()
        .map(|f| MIntegrator::for_functional(&triplet, *f))
        .collect();
    let sampler = PathSampler::new(triplet, horizon, &required)?;
    let k = functionals.len();
    let raw = mc_run_vec(&sampler, n_reps, seed, 2 * k, |path, out| {
        for (i, (f, integ)) in functionals.iter().zip(&integrators).enumerate() {
            let field = f.realize(path)?;
            let v = field.value();
            out[2 * i] = v * v + integ.derivative_part(field.as_ref(), flavor);
            out[2 * i + 1] = v;
        }
        Ok(())
    })?;
    Ok(functionals
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut est = raw[2 * i];
            let s = f.centering_stderr();
            if s > 0.0 {
                let bias = 2.0 * raw[2 * i + 1].mean.abs() * s + s * s;
                est.stderr = (est.stderr * est.stderr + bias * bias).sqrt();
            }
            est
        })
        .collect())
}

/// `‖F‖²` in `D_{1,2}` (or one of its seminorm flavors) by Monte Carlo.
pub fn d12_norm_sq_mc(
    f: &dyn Functional,
    triplet: Arc<LevyTriplet>,
    horizon: f64,
    n_reps: u64,
    seed: u64,
    flavor: Flavor,
) -> Result<MCEstimate> {
    Ok(d12_norms_mc(&[f], triplet, horizon, n_reps, seed, flavor)?[0])
}

/// `‖F_a - F_b‖²_{D_{1,2}}` by Monte Carlo.
pub fn d12_distance_sq(
    a: Arc<dyn Functional>,
    b: Arc<dyn Functional>,
    triplet: Arc<LevyTriplet>,
    horizon: f64,
    n_reps: u64,
    seed: u64,
) -> Result<MCEstimate> {
    let diff = Combination::difference(a, b);
    d12_norm_sq_mc(&diff, triplet, horizon, n_reps, seed, Flavor::Full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos_oracle::{d12_norm_sq, ChaosSum, ElementaryChaos};
    use crate::levy_model::{m_measure, JumpMeasure, Rect};
    use crate::malliavin_op::{SmoothFunctional, SmoothnessClass};
    use crate::random_measure::{Kernel, StepKernel, TensorKernel};

    fn triplet() -> Arc<LevyTriplet> {
        Arc::new(LevyTriplet::new(0.0, 0.8, JumpMeasure::atoms([(1.0, 2.0), (-0.5, 1.0)]).unwrap()).unwrap())
    }

    #[test]
    fn constant_has_no_derivative() {
        let tr = triplet();
        let f = SmoothFunctional::new(
            vec![1.0],
            Arc::new(|_| 1.5),
            Arc::new(|_, g| g[0] = 0.0),
            SmoothnessClass::C1Extended,
        )
        .unwrap();
        let est = d12_norm_sq_mc(&f, tr, 1.0, 100, 1, Flavor::Full).unwrap();
        assert_eq!(est.mean, 2.25);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn identity_norm_matches_oracle() {
        let tr = triplet();
        let f = SmoothFunctional::identity(1.0).unwrap();
        let est = d12_norm_sq_mc(&f, tr.clone(), 1.0, 200_000, 2, Flavor::Full).unwrap();
        // b = 0 but 𝔼X₁ = ∫x dν = 1.5, so ‖X₁‖² = 1.5² + 2·𝕞((0,1]×ℝ).
        let m = tr.variance_rate();
        let want = 1.5 * 1.5 + 2.0 * m;
        assert!(est.within(want, 4.0), "{est:?} vs {want}");
    }

    #[test]
    fn horizon_too_short() {
        let f = SmoothFunctional::identity(2.0).unwrap();
        assert!(matches!(
            d12_norm_sq_mc(&f, triplet(), 1.0, 10, 1, Flavor::Full),
            Err(Error::BeyondHorizon { .. })
        ));
    }

    #[test]
    fn tensor_norm_matches_oracle() {
        let tr = triplet();
        let b1 = Rect::new(0.0, 1.0, -1.0, 1.5).unwrap();
        let b2 = Rect::new(1.0, 2.0, -0.7, 0.3).unwrap();
        let tk = TensorKernel::of_rects(&[b1, b2]).unwrap();
        let oracle = d12_norm_sq(
            &tr,
            &ChaosSum::new(0.0, vec![ElementaryChaos::new(1.0, vec![b1, b2]).unwrap()]),
            Flavor::Full,
        )
        .unwrap();
        let est = d12_norm_sq_mc(&tk, tr.clone(), 2.0, 100_000, 3, Flavor::Full).unwrap();
        assert!(est.within(oracle, 4.0), "{est:?} vs {oracle}");
        assert!((oracle - 3.0 * m_measure(&tr, &b1).unwrap() * m_measure(&tr, &b2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn distance_to_self_is_zero() {
        let tr = triplet();
        let k: Arc<dyn Functional> = Arc::new(Kernel::Step(StepKernel::indicator(Rect::new(0.0, 1.0, -1.0, 1.5).unwrap())));
        let est = d12_distance_sq(k.clone(), k, tr, 1.0, 100, 4).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn smooth_and_chaos_first_chaos_agree() {
        let tr = Arc::new(LevyTriplet::new(0.3, 0.8, JumpMeasure::atoms([(1.0, 2.0)]).unwrap()).unwrap());
        let centered = SmoothFunctional::new(
            vec![1.0],
            Arc::new(|y| y[0] - 2.3),
            Arc::new(|_, g| g[0] = 1.0),
            SmoothnessClass::C1Extended,
        )
        .unwrap();
        let kernel = Kernel::Step(StepKernel::indicator(Rect::new(0.0, 1.0, -5.0, 5.0).unwrap()));
        let sampler = PathSampler::new(tr, 1.0, &[1.0]).unwrap();
        for r in 0..50 {
            let p = sampler.sample(r, 8);
            let a = centered.realize(&p).unwrap();
            let b = kernel.realize(&p).unwrap();
            assert!((a.value() - b.value()).abs() <= 1e-12 * (1.0 + a.value().abs()));
            for (t, x) in [(0.5, 0.0), (0.5, 1.0), (0.9, -0.5), (1.5, 1.0)] {
                assert!((a.derivative(t, x) - b.derivative(t, x)).abs() <= 1e-12);
            }
        }
    }
}
