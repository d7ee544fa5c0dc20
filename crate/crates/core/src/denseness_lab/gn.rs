//! Centered partition sums `Σ_j ψ(X_{t_j} - X_{t_{j-1}}) - 𝔼Σ_j ψ(…)` with
//! `ψ(x) = xφ(x)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use super::partition::Partition;
use crate::error::{Error, Result};
use crate::levy_model::{JumpMeasure, LevyTriplet};
use crate::malliavin_op::{Functional, IncrementFactor, IncrementForm, Realized, SmoothFunctional, SmoothnessClass};
use crate::path_sim::{derive_seed, mc_run_with, Path, PathSampler};
use crate::profile::{Profile, TimesIdentity};
use crate::quadrature::composite_converged;

/// Poisson mass left out of the conditioning series, per atom.
const POISSON_TAIL: f64 = 1e-16;
/// Gaussian integrals are cut at this many standard deviations.
const GAUSS_SPAN: f64 = 12.0;
const GAUSS_TOL: f64 = 1e-12;
const GAUSS_MAX_PANELS: usize = 1 << 14;
/// Tag mixed into the seed of the auxiliary centering run.
const CENTERING_TAG: u64 = 0x6e_c3e7;

/// How the centering constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenteringMethod {
    /// Poisson conditioning on the jump counts, exact up to quadrature.
    Exact,
    /// An independent Monte Carlo run.
    MonteCarlo,
}

/// Settings for the Monte Carlo centering fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnOptions {
    pub mc_reps: u64,
    pub seed: u64,
    /// Largest acceptable standard error of the centering constant.
    pub budget: f64,
}

impl Default for GnOptions {
    fn default() -> Self {
        Self {
            mc_reps: 100_000,
            seed: 0,
            budget: 1e-2,
        }
    }
}

/// `𝔼ψ(X_h)` for one cell length `h`, exact for atomic `ν`.
pub fn increment_expectation(triplet: &LevyTriplet, psi: &dyn Profile, h: f64) -> Result<f64> {
    let JumpMeasure::Atoms(atoms) = triplet.nu() else {
        return Err(Error::invalid("ν", "exact centering needs an atomic Lévy measure"));
    };
    let drift = triplet.drift() * h;
    let sd = triplet.sigma() * h.sqrt();
    let gaussian = |shift: f64| -> Result<f64> {
        if sd == 0.0 {
            return Ok(psi.value(shift));
        }
        let (mut lo, mut hi) = (shift - GAUSS_SPAN * sd, shift + GAUSS_SPAN * sd);
        if let Some((a, b)) = psi.support() {
            lo = lo.max(a);
            hi = hi.min(b);
        }
        if lo >= hi {
            return Ok(0.0);
        }
        let norm = 1.0 / (sd * (2.0 * PI).sqrt());
        composite_converged(
            |x| {
                let z = (x - shift) / sd;
                psi.value(x) * norm * (-0.5 * z * z).exp()
            },
            lo,
            hi,
            16,
            GAUSS_TOL,
            GAUSS_MAX_PANELS,
        )
    };
    // Per-atom count distributions, truncated where the tail is negligible.
    let mut pmfs: Vec<Vec<f64>> = Vec::with_capacity(atoms.len());
    for at in atoms {
        let rate = at.intensity * h;
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
        pmfs.push(pmf);
    }
    let mut counts = vec![0usize; atoms.len()];
    let mut total = 0.0;
    loop {
        let mut weight = 1.0;
        let mut jump = 0.0;
        for (i, &k) in counts.iter().enumerate() {
            weight *= pmfs[i][k];
            jump += atoms[i].position * k as f64;
        }
        if weight > 0.0 {
            total += weight * gaussian(drift + jump)?;
        }
        let mut i = 0;
        loop {
            if i == counts.len() {
                return Ok(total);
            }
            counts[i] += 1;
            if counts[i] < pmfs[i].len() {
                break;
            }
            counts[i] = 0;
            i += 1;
        }
    }
}

/// `(𝔼Σ_j ψ(ΔX_j), stderr, method)` over the cells of `partition`.
pub fn sum_expectation(
    triplet: &Arc<LevyTriplet>,
    psi: &Arc<dyn Profile>,
    partition: &Partition,
    options: GnOptions,
) -> Result<(f64, f64, CenteringMethod)> {
    if triplet.nu().is_atomic() {
        let mut cache: BTreeMap<u64, f64> = BTreeMap::new();
        let mut total = 0.0;
        for h in partition.lengths() {
            let e = match cache.get(&h.to_bits()) {
                Some(e) => *e,
                None => {
                    let e = increment_expectation(triplet, psi.as_ref(), h)?;
                    cache.insert(h.to_bits(), e);
                    e
                }
            };
            total += e;
        }
        return Ok((total, 0.0, CenteringMethod::Exact));
    }
    let points = partition.points().to_vec();
    let sampler = PathSampler::new(Arc::clone(triplet), partition.end(), &points)?;
    let est = mc_run_with(&sampler, options.mc_reps, derive_seed(options.seed, CENTERING_TAG), |path| {
        let mut acc = 0.0;
        for w in points.windows(2) {
            acc += psi.value(path.increment(w[0], w[1])?);
        }
        Ok(acc)
    })?;
    if est.stderr > options.budget {
        return Err(Error::VarianceBudget(format!(
            "centering stderr {} exceeds {} with {} replicates",
            est.stderr, options.budget, options.mc_reps
        )));
    }
    Ok((est.mean, est.stderr, CenteringMethod::MonteCarlo))
}

/// `Gⁿ` together with its centering constant.
#[derive(Debug, Clone)]
pub struct BuiltGn {
    pub functional: SmoothFunctional,
    pub expectation: f64,
    pub stderr: f64,
    pub method: CenteringMethod,
}

impl Functional for BuiltGn {
    fn required_times(&self) -> Vec<f64> {
        self.functional.required_times()
    }

    fn time_breakpoints(&self) -> Vec<f64> {
        self.functional.time_breakpoints()
    }

    fn centering_stderr(&self) -> f64 {
        self.stderr
    }

    fn realize<'a>(&'a self, path: &'a Path) -> Result<Box<dyn Realized + 'a>> {
        self.functional.realize(path)
    }
}

/// Builds `Gⁿ = Σ_j ψ(ΔX_j) - 𝔼Σ_j ψ(ΔX_j)` over the cells of `partition`.
pub fn build_gn(
    phi: Arc<dyn Profile>,
    partition: &Partition,
    triplet: &Arc<LevyTriplet>,
    options: GnOptions,
) -> Result<BuiltGn> {
    if phi.support().is_none() {
        return Err(Error::invalid("φ", "must be compactly supported"));
    }
    if partition.start() < 0.0 {
        return Err(Error::invalid("partition", "must start at a nonnegative time"));
    }
    let psi: Arc<dyn Profile> = Arc::new(TimesIdentity(phi));
    let (expectation, stderr, method) = sum_expectation(triplet, &psi, partition, options)?;
    let form = IncrementForm::new(
        partition.points().to_vec(),
        vec![IncrementFactor {
            profile: psi,
            cells: (1..=partition.cells()).collect(),
            centering: expectation,
        }],
        None,
    )?;
    let functional = SmoothFunctional::from_increments(form, SmoothnessClass::C1Extended)?;
    Ok(BuiltGn {
        functional,
        expectation,
        stderr,
        method,
    })
}
