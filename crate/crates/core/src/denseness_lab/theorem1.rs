//! Approximating `Π_i M(T_i × A_i)` by smooth cut-off functionals: smooth
//! each indicator, replace each `I₁(1_{T_i} ⊗ φ_i)` by a partition sum,
//! multiply, and truncate with `α_N(x_0, …, x_n) = Π β_N(x_i - x_{i-1})`.

use std::sync::Arc;

use super::gn::{sum_expectation, GnOptions};
use super::partition::Partition;
use super::smoothing::{CutoffFn, SmoothIndicator};
use crate::chaos_oracle::Flavor;
use crate::error::{Error, Result};
use crate::levy_model::{LevyTriplet, Rect};
use crate::malliavin_op::{
    d12_norms_mc, Combination, Functional, IncrementFactor, IncrementForm, Realized, SmoothFunctional, SmoothnessClass,
};
use crate::path_sim::{MCEstimate, Path};
use crate::profile::{Profile, TimesIdentity};
use crate::random_measure::TensorKernel;

/// One setting of the three approximation knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    /// Largest allowed `μ(U_i ∖ C_i)`.
    pub delta: f64,
    /// Partition mesh.
    pub mesh: f64,
    /// Cutoff level `N` of `β_N`.
    pub cutoff: f64,
}

/// `α_N·Π_i Gⁿ_i` as a functional.
#[derive(Debug, Clone)]
pub struct PipelineApproximant {
    pub functional: SmoothFunctional,
    centering_stderr: f64,
}

impl Functional for PipelineApproximant {
    fn required_times(&self) -> Vec<f64> {
        self.functional.required_times()
    }

    fn time_breakpoints(&self) -> Vec<f64> {
        self.functional.time_breakpoints()
    }

    fn centering_stderr(&self) -> f64 {
        self.centering_stderr
    }

    fn realize<'a>(&'a self, path: &'a Path) -> Result<Box<dyn Realized + 'a>> {
        self.functional.realize(path)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineStage {
    pub stage: Stage,
    pub indicators: Vec<SmoothIndicator>,
    pub partition: Partition,
    pub approximant: PipelineApproximant,
    /// Exact `‖Π M(T_i × A_i) - Π I₁(1_{T_i} ⊗ φ_i)‖²_{D_{1,2}}`.
    pub smoothing_error: f64,
    /// `(n+1)!·Π|T_i|·‖1_{A_1 × ⋯ × A_n} - φ_1 ⊗ ⋯ ⊗ φ_n‖²`.
    pub exact_bound: f64,
    /// The previous bound with each `‖1_{A_i} - φ_i‖²` replaced by its slack.
    pub slack_bound: f64,
}

impl PipelineStage {
    /// `smoothing_error ≤ exact_bound ≤ slack_bound`, up to rounding.
    pub fn bounds_respected(&self) -> bool {
        let tol = 1e-12 * self.slack_bound.abs().max(1e-300);
        self.smoothing_error <= self.exact_bound + tol && self.exact_bound <= self.slack_bound + tol
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Builds the smooth approximant of `Π M(rects_i)` for one stage.
pub fn build_stage(
    rects: &[Rect],
    stage: Stage,
    triplet: &Arc<LevyTriplet>,
    options: GnOptions,
) -> Result<PipelineStage> {
    if rects.is_empty() {
        return Err(Error::invalid("target", "needs at least one factor"));
    }
    for (i, a) in rects.iter().enumerate() {
        if rects[i + 1..].iter().any(|b| a.time_overlaps(b)) {
            return Err(Error::invalid("target", "factors must be time-disjoint"));
        }
    }
    let n = rects.len();
    let indicators = rects
        .iter()
        .map(|r| SmoothIndicator::fit(triplet, r.x_lo(), r.x_hi(), stage.delta))
        .collect::<Result<Vec<_>>>()?;

    // Step 1: the exact smoothing error and its bounds.
    let mut time_product = 1.0;
    let (mut ind, mut cross, mut smooth) = (1.0, 1.0, 1.0);
    let mut norms = Vec::with_capacity(n);
    for (r, s) in rects.iter().zip(&indicators) {
        time_product *= r.time_len();
        let (i2, c, s2) = s.mu_moments(triplet)?;
        ind *= i2;
        cross *= c;
        smooth *= s2;
        norms.push((i2.sqrt(), s2.sqrt(), s.slack().sqrt()));
    }
    let tensor_gap = (ind - 2.0 * cross + smooth).max(0.0);
    let smoothing_error = (n as f64 + 1.0) * time_product * tensor_gap;
    let exact_bound = factorial(n + 1) * time_product * tensor_gap;
    let telescoped: f64 = (0..n)
        .map(|i| {
            let before: f64 = norms[..i].iter().map(|v| v.1).product();
            let after: f64 = norms[i + 1..].iter().map(|v| v.0).product();
            norms[i].2 * before * after
        })
        .sum();
    let slack_bound = factorial(n + 1) * time_product * telescoped * telescoped;

    // Step 2: partition sums on a common partition, then the cutoff.
    let intervals: Vec<(f64, f64)> = rects.iter().map(|r| (r.t_lo(), r.t_hi())).collect();
    let partition = Partition::covering(&intervals, stage.mesh, &[])?;
    let points = partition.points();
    let tol = 1e-12;
    let mut factors = Vec::with_capacity(n);
    let mut sups = Vec::with_capacity(n);
    let mut stderrs = Vec::with_capacity(n);
    for (r, s) in rects.iter().zip(&indicators) {
        let cells: Vec<usize> = (1..points.len())
            .filter(|&j| points[j - 1] >= r.t_lo() - tol && points[j] <= r.t_hi() + tol)
            .collect();
        let sub = Partition::new(points[cells[0] - 1..=*cells.last().expect("cells are nonempty")].to_vec())?;
        let phi: Arc<dyn Profile> = Arc::new(*s);
        let psi: Arc<dyn Profile> = Arc::new(TimesIdentity(phi));
        let (e, se, _) = sum_expectation(triplet, &psi, &sub, options)?;
        let (lo, hi) = s.support().expect("smooth indicators are compactly supported");
        let psi_sup = lo.abs().max(hi.abs());
        sups.push(cells.len() as f64 * psi_sup + e.abs());
        stderrs.push(se);
        factors.push(IncrementFactor {
            profile: psi,
            cells,
            centering: e,
        });
    }
    let centering_stderr: f64 = (0..n)
        .map(|i| stderrs[i] * sups.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).product::<f64>())
        .sum();
    let cutoff = CutoffFn::new(stage.cutoff)?;
    let bound = points.len() as f64 * (stage.cutoff + 2.0);
    let form = IncrementForm::new(points.to_vec(), factors, Some(Arc::new(cutoff)))?;
    let functional = SmoothFunctional::from_increments(form, SmoothnessClass::CompactSupportSmooth { bound })?;
    Ok(PipelineStage {
        stage,
        indicators,
        partition,
        approximant: PipelineApproximant {
            functional,
            centering_stderr,
        },
        smoothing_error,
        exact_bound,
        slack_bound,
    })
}

/// Builds every stage and measures `‖Π M - α_N Π Gⁿ_i‖²_{D_{1,2}}` for all
/// of them on the same paths.
pub fn theorem1_schedule(
    rects: &[Rect],
    stages: &[Stage],
    triplet: Arc<LevyTriplet>,
    horizon: f64,
    n_reps: u64,
    seed: u64,
    options: GnOptions,
) -> Result<Vec<(PipelineStage, MCEstimate)>> {
    let target: Arc<dyn Functional> = Arc::new(TensorKernel::of_rects(rects)?);
    let built = stages
        .iter()
        .map(|&s| build_stage(rects, s, &triplet, options))
        .collect::<Result<Vec<_>>>()?;
    let diffs: Vec<Combination> = built
        .iter()
        .map(|b| Combination::difference(target.clone(), Arc::new(b.approximant.clone())))
        .collect();
    let refs: Vec<&dyn Functional> = diffs.iter().map(|d| d as &dyn Functional).collect();
    let est = d12_norms_mc(&refs, triplet, horizon, n_reps, seed, Flavor::Full)?;
    Ok(built.into_iter().zip(est).collect())
}

/// A single stage of [`theorem1_schedule`].
pub fn theorem1_pipeline(
    rects: &[Rect],
    stage: Stage,
    triplet: Arc<LevyTriplet>,
    horizon: f64,
    n_reps: u64,
    seed: u64,
) -> Result<(PipelineStage, MCEstimate)> {
    let mut out = theorem1_schedule(rects, &[stage], triplet, horizon, n_reps, seed, GnOptions::default())?;
    Ok(out.remove(0))
}
