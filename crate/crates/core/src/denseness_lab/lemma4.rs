//! First-chaos approximation by partition sums: `Gⁿ → I₁(1_{(s,u]} ⊗ φ)`.

use std::sync::Arc;

use super::gn::{build_gn, GnOptions};
use super::partition::Partition;
use crate::chaos_oracle::Flavor;
use crate::error::{Error, Result};
use crate::levy_model::{JumpMeasure, LevyTriplet};
use crate::malliavin_op::{d12_norms_mc, Combination, Functional};
use crate::path_sim::{mc_run_vec, MCEstimate, PathSampler};
use crate::profile::{Profile, ProfileBounds, TimesIdentity};
use crate::random_measure::{Kernel, SeparableKernel};

/// Pathwise domination is checked on at least this many points.
pub const DOMINATION_POINTS: usize = 10_000;
const POISSON_TAIL: f64 = 1e-16;

/// `I₁(1_{(s,u]} ⊗ φ)` as a functional.
pub fn first_chaos_target(phi: Arc<dyn Profile>, interval: (f64, f64)) -> Result<Kernel> {
    Ok(Kernel::Separable(SeparableKernel::new(interval.0, interval.1, phi)?))
}

/// `‖G - Gⁿ‖²_{D_{1,2}}` for each partition, all on the same paths.
pub fn lemma4_distances(
    phi: Arc<dyn Profile>,
    partitions: &[Partition],
    triplet: Arc<LevyTriplet>,
    horizon: f64,
    n_reps: u64,
    seed: u64,
    options: GnOptions,
) -> Result<Vec<MCEstimate>> {
    let first = partitions
        .first()
        .ok_or_else(|| Error::invalid("partitions", "need at least one partition"))?;
    let interval = (first.start(), first.end());
    if partitions.iter().any(|p| (p.start(), p.end()) != interval) {
        return Err(Error::invalid("partitions", "must all cover the same interval"));
    }
    let target: Arc<dyn Functional> = Arc::new(first_chaos_target(phi.clone(), interval)?);
    let diffs = partitions
        .iter()
        .map(|p| {
            let gn: Arc<dyn Functional> = Arc::new(build_gn(phi.clone(), p, &triplet, options)?);
            Ok(Combination::difference(target.clone(), gn))
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&dyn Functional> = diffs.iter().map(|d| d as &dyn Functional).collect();
    d12_norms_mc(&refs, triplet, horizon, n_reps, seed, Flavor::Full)
}

/// Result of checking the pointwise dominating bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominationReport {
    pub points: usize,
    pub violations: usize,
    /// Largest observed `integrand / bound`.
    pub max_ratio: f64,
}

impl DominationReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// The two error integrals of the first-chaos approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma4Terms {
    /// `σ²·𝔼Σ_j |cell_j|·(φ(0) - ψ′(ΔX_j))²`.
    pub zero_part: MCEstimate,
    /// `𝔼Σ_j |cell_j|·∫(ψ(ΔX_j + x) - ψ(ΔX_j) - ψ(x))² dν(x)`.
    pub jump_part: MCEstimate,
    pub domination: DominationReport,
}

/// Estimates both error integrals and checks the dominating bounds
/// `(‖φ‖ + ‖ψ′‖)²` and `(‖ψ′‖ + ‖φ‖ + 3‖ψ‖)²·(|x| ∧ 1)²` pathwise.
pub fn lemma4_error_terms(
    phi: Arc<dyn Profile>,
    partition: &Partition,
    triplet: Arc<LevyTriplet>,
    horizon: f64,
    n_reps: u64,
    seed: u64,
) -> Result<Lemma4Terms> {
    let bounds = ProfileBounds::scan(phi.as_ref()).ok_or_else(|| Error::invalid("φ", "must be compactly supported"))?;
    let psi = TimesIdentity(phi.clone());
    let phi0 = phi.value(0.0);
    let sigma2 = triplet.sigma() * triplet.sigma();
    let (lo, hi) = phi.support().unwrap_or((0.0, 0.0));
    let nodes = triplet.nu().quadrature_nodes(&[lo, hi]);
    let points = partition.points().to_vec();
    let lengths = partition.lengths();
    let zero_bound = (bounds.phi + bounds.dpsi).powi(2);
    let jump_const = (bounds.dpsi + bounds.phi + 3.0 * bounds.psi).powi(2);

    let sampler = PathSampler::new(triplet.clone(), horizon, &points)?;
    let est = mc_run_vec(&sampler, n_reps, seed, 2, |path, out| {
        let (mut zero, mut jump) = (0.0, 0.0);
        for (w, len) in points.windows(2).zip(&lengths) {
            let d = path.increment(w[0], w[1])?;
            if sigma2 > 0.0 {
                zero += len * (phi0 - psi.derivative(d)).powi(2);
            }
            let base = psi.value(d);
            let inner: f64 = nodes
                .iter()
                .map(|&(x, wt)| wt * (psi.value(d + x) - base - psi.value(x)).powi(2))
                .sum();
            jump += len * inner;
        }
        out[0] = sigma2 * zero;
        out[1] = jump;
        Ok(())
    })?;

    let mut report = DominationReport {
        points: 0,
        violations: 0,
        max_ratio: 0.0,
    };
    let mut replicate = 0;
    while report.points < DOMINATION_POINTS && replicate < n_reps.max(1) * 1000 {
        let path = sampler.sample(replicate, seed);
        replicate += 1;
        for w in points.windows(2) {
            let d = path.increment(w[0], w[1])?;
            let mut check = |value: f64, bound: f64| {
                report.points += 1;
                if bound > 0.0 {
                    report.max_ratio = report.max_ratio.max(value / bound);
                }
                if value > bound {
                    report.violations += 1;
                }
            };
            check((phi0 - psi.derivative(d)).powi(2), zero_bound);
            let base = psi.value(d);
            for &(x, _) in &nodes {
                let value = (psi.value(d + x) - base - psi.value(x)).powi(2);
                check(value, jump_const * x.abs().min(1.0).powi(2));
            }
        }
    }
    Ok(Lemma4Terms {
        zero_part: est[0],
        jump_part: est[1],
        domination: report,
    })
}

fn poisson_pmf(rate: f64) -> Vec<f64> {
    let mut p = (-rate).exp();
    let mut pmf = vec![p];
    let mut mass = p;
    let mut k = 0usize;
    while 1.0 - mass > POISSON_TAIL && k < 10_000 {
        k += 1;
        p *= rate / k as f64;
        pmf.push(p);
        mass += p;
    }
    pmf
}

/// Exact `‖G - Gⁿ‖²_{D_{1,2}}` when `σ = 0` and `ν = λδ_a`.
///
/// Per cell of length `h` the jump count `k` is Poisson(`λh`) and the
/// increment is `bh + ak`. The `L₂` part is `Σ_j Var(akφ(a) - ψ(bh + ak))`
/// and the derivative part is
/// `Σ_j λh·𝔼[(ψ(a) - ψ(bh + a(k+1)) + ψ(bh + ak))²]`.
pub fn pure_jump_distance_oracle(phi: &dyn Profile, triplet: &LevyTriplet, partition: &Partition) -> Result<f64> {
    if triplet.sigma() != 0.0 {
        return Err(Error::invalid("σ", "the pure-jump oracle needs σ = 0"));
    }
    let atom = match triplet.nu() {
        JumpMeasure::Atoms(atoms) if atoms.len() == 1 => atoms[0],
        _ => return Err(Error::invalid("ν", "the pure-jump oracle needs a single atom")),
    };
    let psi = |x: f64| x * phi.value(x);
    let (a, rate) = (atom.position, atom.intensity);
    let mut total = 0.0;
    for h in partition.lengths() {
        let shift = triplet.drift() * h;
        let pmf = poisson_pmf(rate * h);
        let (mut m1, mut m2, mut deriv) = (0.0, 0.0, 0.0);
        for (k, p) in pmf.iter().enumerate() {
            let k = k as f64;
            let inc = shift + a * k;
            let y = a * k * phi.value(a) - psi(inc);
            m1 += p * y;
            m2 += p * y * y;
            deriv += p * (psi(a) - psi(inc + a) + psi(inc)).powi(2);
        }
        total += (m2 - m1 * m1) + rate * h * deriv;
    }
    Ok(total)
}
