//! Products of partition sums over disjoint time intervals: the product
//! rule cross terms vanish and the factors are uncorrelated.

use std::sync::Arc;

use rand::Rng;

use super::gn::BuiltGn;
use crate::error::{Error, Result};
use crate::levy_model::LevyTriplet;
use crate::malliavin_op::Functional;
use crate::path_sim::{derive_seed, mc_run_with, replicate_rng, MCEstimate, PathSampler};

/// Relative tolerance of the assembled product rule.
pub const PRODUCT_RULE_TOL: f64 = 1e-12;
const SAMPLE_TAG: u64 = 0x1d_e9e7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependenceReport {
    pub points: usize,
    /// Largest `|x·D_{t,x}G_a·D_{t,x}G_b|` over all pairs `a < b`.
    pub max_cross_term: f64,
    /// Largest `|D(ΠG) - Σ_i Π_{j≠i} G_j·DG_i| / (1 + |D(ΠG)|)`.
    pub max_product_rule_gap: f64,
    /// `𝔼[G_1 G_2]` for the first two factors.
    pub correlation: MCEstimate,
}

impl IndependenceReport {
    pub fn holds(&self, k: f64) -> bool {
        self.max_cross_term == 0.0
            && self.max_product_rule_gap <= PRODUCT_RULE_TOL
            && self.correlation.within(0.0, k)
    }
}

/// Checks the factors pathwise at `points` sampled `(t, x, path)` triples,
/// with `x` running over `0` and every jump-size node, and estimates the
/// correlation of the first two factors from `n_reps` paths.
pub fn product_independence_check(
    factors: &[BuiltGn],
    triplet: Arc<LevyTriplet>,
    horizon: f64,
    points: usize,
    n_reps: u64,
    seed: u64,
) -> Result<IndependenceReport> {
    if factors.len() < 2 {
        return Err(Error::invalid("factors", "need at least two factors"));
    }
    let spans: Vec<(f64, f64)> = factors
        .iter()
        .map(|g| {
            let t = g.functional.times();
            (t[0], t[t.len() - 1])
        })
        .collect();
    for (i, a) in spans.iter().enumerate() {
        if spans[i + 1..].iter().any(|b| a.0 < b.1 && b.0 < a.1) {
            return Err(Error::invalid("factors", "time intervals must be disjoint"));
        }
    }
    let product = factors[1..]
        .iter()
        .try_fold(factors[0].functional.clone(), |acc, g| acc.product(&g.functional))?;
    let mut sizes = vec![0.0];
    sizes.extend(triplet.nu().quadrature_nodes(&[]).into_iter().map(|(x, _)| x));

    let required: Vec<f64> = product.times().to_vec();
    let sampler = PathSampler::new(triplet.clone(), horizon, &required)?;
    let mut rng = replicate_rng(derive_seed(seed, SAMPLE_TAG), 0);
    let (mut checked, mut replicate) = (0usize, 0u64);
    let (mut max_cross, mut max_gap) = (0.0f64, 0.0f64);
    while checked < points {
        let path = sampler.sample(replicate, seed);
        replicate += 1;
        let fields = factors.iter().map(|g| g.realize(&path)).collect::<Result<Vec<_>>>()?;
        let whole = product.derivative_field(&path)?;
        let values: Vec<f64> = fields.iter().map(|f| f.value()).collect();
        for _ in 0..sizes.len().max(8) {
            let t = horizon * (1.0 - rng.random::<f64>());
            for &x in &sizes {
                let d: Vec<f64> = fields.iter().map(|f| f.derivative(t, x)).collect();
                for a in 0..d.len() {
                    for b in a + 1..d.len() {
                        max_cross = max_cross.max((x * d[a] * d[b]).abs());
                    }
                }
                let rhs: f64 = (0..d.len())
                    .map(|i| d[i] * values.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).product::<f64>())
                    .sum();
                let lhs = whole.eval(t, x);
                max_gap = max_gap.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
                checked += 1;
            }
        }
    }

    let (g1, g2) = (&factors[0], &factors[1]);
    let mut times = g1.required_times();
    times.extend(g2.required_times());
    let pair = PathSampler::new(triplet, horizon, &times)?;
    let correlation = mc_run_with(&pair, n_reps, seed, |path| {
        Ok(g1.realize(path)?.value() * g2.realize(path)?.value())
    })?;
    Ok(IndependenceReport {
        points: checked,
        max_cross_term: max_cross,
        max_product_rule_gap: max_gap,
        correlation,
    })
}
