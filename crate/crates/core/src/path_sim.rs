//! Path simulation and the deterministic Monte Carlo engine.
//!
//! Replicate `i` of a run with master seed `s` draws from the ChaCha8 stream
//! `i` of the generator keyed by `s`, so a path is a pure function of
//! `(s, i)`. Replicates are reduced in fixed-size chunks of consecutive
//! indices and the chunk summaries are merged in index order, which makes
//! every estimate independent of the thread count.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::levy_model::LevyTriplet;

/// Replicates per reduction chunk.
const CHUNK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

/// One simulated trajectory on `[0, H]`.
#[derive(Debug, Clone)]
pub struct Path {
    horizon: f64,
    triplet: Arc<LevyTriplet>,
    grid: Vec<f64>,
    brownian: Vec<f64>,
    jumps: Vec<Jump>,
    jump_prefix: Vec<f64>,
}

fn grid_tolerance(horizon: f64) -> f64 {
    1e-12 * horizon.max(1.0)
}

impl Path {
    /// Assembles a path from explicit data; `grid` must start at 0, end at
    /// `horizon` and contain every jump time.
    pub fn from_parts(
        triplet: Arc<LevyTriplet>,
        horizon: f64,
        grid: Vec<f64>,
        brownian: Vec<f64>,
        jumps: Vec<Jump>,
    ) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("{horizon}")));
        }
        if grid.len() != brownian.len() || grid.len() < 2 {
            return Err(Error::invalid("grid", "needs matching grid and Brownian values"));
        }
        if grid[0] != 0.0 || brownian[0] != 0.0 || *grid.last().unwrap() != horizon {
            return Err(Error::invalid("grid", "must run from 0 (with W(0) = 0) to the horizon"));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("grid", "times must be strictly increasing"));
        }
        for w in jumps.windows(2) {
            if !(w[0].time < w[1].time) {
                return Err(Error::invalid("jumps", "jump times must be strictly increasing"));
            }
        }
        for j in &jumps {
            if !(j.time > 0.0 && j.time <= horizon) || j.size == 0.0 || !j.size.is_finite() {
                return Err(Error::invalid("jumps", format!("bad jump {j:?}")));
            }
        }
        let mut path = Self {
            horizon,
            triplet,
            grid,
            brownian,
            jumps,
            jump_prefix: Vec::new(),
        };
        for j in &path.jumps {
            path.grid_index(j.time)?;
        }
        path.jump_prefix = prefix_sums(&path.jumps);
        Ok(path)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn triplet(&self) -> &LevyTriplet {
        &self.triplet
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    fn grid_index(&self, t: f64) -> Result<usize> {
        if t > self.horizon + grid_tolerance(self.horizon) {
            return Err(Error::BeyondHorizon {
                time: t,
                horizon: self.horizon,
            });
        }
        let tol = grid_tolerance(self.horizon);
        let i = self.grid.partition_point(|&g| g < t - tol);
        if i < self.grid.len() && (self.grid[i] - t).abs() <= tol {
            Ok(i)
        } else {
            Err(Error::OffGrid { time: t })
        }
    }

    pub fn on_grid(&self, t: f64) -> bool {
        self.grid_index(t).is_ok()
    }

    /// `W(t)` at a grid time.
    pub fn brownian_at(&self, t: f64) -> Result<f64> {
        Ok(self.brownian[self.grid_index(t)?])
    }

    /// `Σ_{τ ≤ t} ξ`.
    pub fn jump_sum_to(&self, t: f64) -> f64 {
        let k = self.jumps.partition_point(|j| j.time <= t);
        self.jump_prefix[k]
    }

    /// `X(t)` at a grid time.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let w = self.brownian_at(t)?;
        Ok(self.triplet.drift() * t + self.triplet.sigma() * w + self.jump_sum_to(t))
    }

    /// `X(t) - X(s)` for grid times `s < t`.
    pub fn increment(&self, s: f64, t: f64) -> Result<f64> {
        if !(s < t) {
            return Err(Error::invalid("increment", format!("needs s < t, got s = {s}, t = {t}")));
        }
        let ws = self.brownian_at(s)?;
        let wt = self.brownian_at(t)?;
        let drift = self.triplet.drift() * (t - s);
        let jumps = self.jump_sum_to(t) - self.jump_sum_to(s);
        Ok(drift + self.triplet.sigma() * (wt - ws) + jumps)
    }

    /// Jumps with time in `(lo, hi]`.
    pub fn jumps_in(&self, lo: f64, hi: f64) -> &[Jump] {
        let a = self.jumps.partition_point(|j| j.time <= lo);
        let b = self.jumps.partition_point(|j| j.time <= hi);
        &self.jumps[a..b.max(a)]
    }
}

fn prefix_sums(jumps: &[Jump]) -> Vec<f64> {
    let mut out = Vec::with_capacity(jumps.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for j in jumps {
        acc += j.size;
        out.push(acc);
    }
    out
}

/// Draws paths for a fixed triplet, horizon and query-time set.
#[derive(Debug, Clone)]
pub struct PathSampler {
    triplet: Arc<LevyTriplet>,
    horizon: f64,
    required: Vec<f64>,
    jump_count: Option<Poisson<f64>>,
}

impl PathSampler {
    pub fn new(triplet: Arc<LevyTriplet>, horizon: f64, required_times: &[f64]) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("{horizon} (must be positive)")));
        }
        let tol = grid_tolerance(horizon);
        let mut required = Vec::with_capacity(required_times.len() + 2);
        for &t in required_times {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::invalid("required time", format!("{t}")));
            }
            if t > horizon + tol {
                return Err(Error::BeyondHorizon { time: t, horizon });
            }
            if t > tol && t < horizon - tol {
                required.push(t);
            }
        }
        required.push(0.0);
        required.push(horizon);
        required.sort_by(f64::total_cmp);
        required.dedup_by(|a, b| (*a - *b).abs() <= tol);
        let rate = triplet.nu().total_mass() * horizon;
        let jump_count = if rate > 0.0 {
            Some(Poisson::new(rate).map_err(|e| Error::invalid("jump intensity", e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            triplet,
            horizon,
            required,
            jump_count,
        })
    }

    pub fn triplet(&self) -> &Arc<LevyTriplet> {
        &self.triplet
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Draws replicate `replicate` of the run keyed by `master_seed`.
    pub fn sample(&self, replicate: u64, master_seed: u64) -> Path {
        let mut rng = replicate_rng(master_seed, replicate);
        self.sample_with(&mut rng)
    }

    fn sample_with<R: Rng>(&self, rng: &mut R) -> Path {
        let count = match &self.jump_count {
            Some(p) => p.sample(rng) as usize,
            None => 0,
        };
        let mut times: Vec<f64> = Vec::with_capacity(count);
        for _ in 0..count {
            times.push(self.horizon * (1.0 - rng.random::<f64>()));
        }
        times.sort_by(f64::total_cmp);
        while let Some(i) = (1..times.len()).find(|&i| times[i] == times[i - 1]) {
            times[i] = self.horizon * (1.0 - rng.random::<f64>());
            times.sort_by(f64::total_cmp);
        }
        let jumps: Vec<Jump> = times
            .into_iter()
            .map(|time| Jump {
                time,
                size: self.triplet.nu().sample_size(rng),
            })
            .collect();

        let mut grid = Vec::with_capacity(self.required.len() + jumps.len());
        let (mut i, mut k) = (0, 0);
        while i < self.required.len() || k < jumps.len() {
            let take_required = k >= jumps.len()
                || (i < self.required.len() && self.required[i] <= jumps[k].time);
            let t = if take_required {
                i += 1;
                self.required[i - 1]
            } else {
                k += 1;
                jumps[k - 1].time
            };
            if grid.last() != Some(&t) {
                grid.push(t);
            }
        }
        let mut brownian = Vec::with_capacity(grid.len());
        brownian.push(0.0);
        let mut w = 0.0;
        for win in grid.windows(2) {
            let z: f64 = StandardNormal.sample(rng);
            w += (win[1] - win[0]).sqrt() * z;
            brownian.push(w);
        }
        let jump_prefix = prefix_sums(&jumps);
        Path {
            horizon: self.horizon,
            triplet: Arc::clone(&self.triplet),
            grid,
            brownian,
            jumps,
            jump_prefix,
        }
    }
}

/// The generator of replicate `replicate` under `master_seed`.
pub fn replicate_rng(master_seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    rng
}

/// A seed for an auxiliary run, decorrelated from `master_seed` by `tag`.
pub fn derive_seed(master_seed: u64, tag: u64) -> u64 {
    let mut z = master_seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws one path; a pure function of `(master_seed, replicate)`.
pub fn simulate_path(
    triplet: Arc<LevyTriplet>,
    horizon: f64,
    required_times: &[f64],
    replicate: u64,
    master_seed: u64,
) -> Result<Path> {
    Ok(PathSampler::new(triplet, horizon, required_times)?.sample(replicate, master_seed))
}

/// Mean and standard error of a Monte Carlo quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
}

impl MCEstimate {
    /// Whether `target` lies within `k` standard errors.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    fn estimate(&self, seed: u64) -> MCEstimate {
        let n = self.count as f64;
        let var = (self.m2 / (n - 1.0)).max(0.0);
        MCEstimate {
            mean: self.mean,
            stderr: (var / n).sqrt(),
            n: self.count,
            seed,
        }
    }
}

/// Runs `estimator` on `n` replicates and reduces each output component.
///
/// The estimator writes `dims` values per path. A non-finite output aborts
/// the run with the lowest offending replicate index.
pub fn mc_run_vec<E>(
    sampler: &PathSampler,
    n: u64,
    master_seed: u64,
    dims: usize,
    estimator: E,
) -> Result<Vec<MCEstimate>>
where
    E: Fn(&Path, &mut [f64]) -> Result<()> + Sync,
{
    if n < 2 {
        return Err(Error::invalid("replicates", format!("{n} (need at least 2)")));
    }
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<Result<Vec<Moments>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Moments::default(); dims];
            let mut out = vec![0.0; dims];
            for r in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let path = sampler.sample(r, master_seed);
                estimator(&path, &mut out)?;
                if out.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { replicate: r });
                }
                for (m, &v) in acc.iter_mut().zip(&out) {
                    m.push(v);
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![Moments::default(); dims];
    for chunk in partial {
        for (t, m) in total.iter_mut().zip(&chunk?) {
            t.merge(m);
        }
    }
    Ok(total.iter().map(|m| m.estimate(master_seed)).collect())
}

/// Scalar Monte Carlo over paths drawn by `sampler`.
pub fn mc_run_with<E>(sampler: &PathSampler, n: u64, master_seed: u64, estimator: E) -> Result<MCEstimate>
where
    E: Fn(&Path) -> Result<f64> + Sync,
{
    let out = mc_run_vec(sampler, n, master_seed, 1, |path, out| {
        out[0] = estimator(path)?;
        Ok(())
    })?;
    Ok(out[0])
}

/// Scalar Monte Carlo with a sampler built from `(triplet, horizon, required_times)`.
pub fn mc_run<E>(
    estimator: E,
    n: u64,
    master_seed: u64,
    triplet: Arc<LevyTriplet>,
    horizon: f64,
    required_times: &[f64],
) -> Result<MCEstimate>
where
    E: Fn(&Path) -> Result<f64> + Sync,
{
    let sampler = PathSampler::new(triplet, horizon, required_times)?;
    mc_run_with(&sampler, n, master_seed, estimator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::JumpMeasure;

    fn triplet(drift: f64, sigma: f64, atoms: &[(f64, f64)]) -> Arc<LevyTriplet> {
        Arc::new(LevyTriplet::new(drift, sigma, JumpMeasure::atoms(atoms.iter().copied()).unwrap()).unwrap())
    }

    #[test]
    fn jump_count_is_poisson() {
        let tr = triplet(0.0, 0.0, &[(1.0, 3.0)]);
        let sampler = PathSampler::new(tr, 1.0, &[]).unwrap();
        let est = mc_run_with(&sampler, 100_000, 11, |p| Ok(p.jumps().len() as f64)).unwrap();
        assert!(est.within(3.0, 4.0), "{est:?}");
    }

    #[test]
    fn gaussian_variance() {
        let tr = triplet(0.4, 1.0, &[(1.0, 1e-9)]);
        let sampler = PathSampler::new(tr, 1.0, &[1.0]).unwrap();
        let est = mc_run_with(&sampler, 100_000, 12, |p| {
            let x = p.value_at(1.0)? - 0.4;
            Ok(x * x)
        })
        .unwrap();
        assert!(est.within(1.0, 4.0), "{est:?}");
    }

    #[test]
    fn replicates_are_deterministic() {
        let tr = triplet(0.1, 0.5, &[(1.0, 2.0), (-0.5, 1.0)]);
        let sampler = PathSampler::new(tr, 2.0, &[0.5, 1.0]).unwrap();
        let a = sampler.sample(17, 5);
        let b = sampler.sample(17, 5);
        assert_eq!(a.grid(), b.grid());
        assert_eq!(a.jumps(), b.jumps());
        assert_eq!(a.value_at(1.0).unwrap().to_bits(), b.value_at(1.0).unwrap().to_bits());
        let c = sampler.sample(18, 5);
        assert_ne!(a.value_at(2.0).unwrap(), c.value_at(2.0).unwrap());
    }

    #[test]
    fn single_jump_bookkeeping() {
        let tr = triplet(0.0, 0.0, &[(1.0, 1.0)]);
        let grid = vec![0.0, 0.5, 0.6, 1.0];
        let path = Path::from_parts(tr, 1.0, grid, vec![0.0; 4], vec![Jump { time: 0.5, size: 1.0 }]).unwrap();
        assert_eq!(path.increment(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(path.increment(0.6, 1.0).unwrap(), 0.0);
        assert!(path.increment(1.0, 1.0).is_err());
        assert!(matches!(path.increment(0.0, 0.7), Err(Error::OffGrid { .. })));
    }

    #[test]
    fn increments_telescope() {
        let tr = triplet(0.3, 0.8, &[(1.0, 2.0)]);
        let sampler = PathSampler::new(tr, 2.0, &[0.25, 1.5]).unwrap();
        for r in 0..50 {
            let p = sampler.sample(r, 3);
            let whole = p.increment(0.25, 2.0).unwrap();
            let parts = p.increment(0.25, 1.5).unwrap() + p.increment(1.5, 2.0).unwrap();
            assert!((whole - parts).abs() <= 1e-14 * (1.0 + whole.abs()));
        }
    }

    #[test]
    fn required_times_are_validated() {
        let tr = triplet(0.0, 1.0, &[(1.0, 1.0)]);
        assert!(matches!(
            PathSampler::new(tr.clone(), 1.0, &[1.5]),
            Err(Error::BeyondHorizon { .. })
        ));
        assert!(PathSampler::new(tr, 0.0, &[]).is_err());
    }

    #[test]
    fn mean_matches_first_moment() {
        let tr = triplet(0.3, 0.0, &[(1.0, 2.0)]);
        let est = mc_run(|p| p.value_at(1.0), 50_000, 4, tr, 1.0, &[1.0]).unwrap();
        assert!(est.within(2.3, 4.0), "{est:?}");
    }

    #[test]
    fn constant_estimator() {
        let tr = triplet(0.0, 1.0, &[(1.0, 1.0)]);
        let est = mc_run(|_| Ok(1.0), 3000, 4, tr, 1.0, &[]).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.n, 3000);
    }

    #[test]
    fn non_finite_reports_first_replicate() {
        let tr = triplet(0.0, 1.0, &[(1.0, 1.0)]);
        let sampler = PathSampler::new(tr, 1.0, &[]).unwrap();
        let err = mc_run_with(&sampler, 5000, 1, |p| {
            Ok(if p.jumps().len() >= 3 { f64::NAN } else { 0.0 })
        })
        .unwrap_err();
        let first = (0..5000).find(|&r| sampler.sample(r, 1).jumps().len() >= 3).unwrap();
        assert!(matches!(err, Error::NonFinite { replicate } if replicate == first));
    }

    #[test]
    fn thread_count_does_not_change_estimates() {
        let tr = triplet(0.1, 0.7, &[(1.0, 2.0), (-0.5, 1.0)]);
        let sampler = PathSampler::new(tr, 1.0, &[1.0]).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_run_with(&sampler, 10_000, 9, |p| p.value_at(1.0)).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn increments_are_uncorrelated() {
        let tr = triplet(0.0, 0.6, &[(1.0, 1.5)]);
        let sampler = PathSampler::new(tr, 2.0, &[1.0]).unwrap();
        let mean = 1.5;
        let est = mc_run_with(&sampler, 50_000, 8, |p| {
            Ok((p.increment(0.0, 1.0)? - mean) * (p.increment(1.0, 2.0)? - mean))
        })
        .unwrap();
        assert!(est.within(0.0, 4.0), "{est:?}");
    }
}
