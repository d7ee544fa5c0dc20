//! The experiments behind `levy-lab run`.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{
    build_rect, CenteredParams, ChainRuleParams, ChaosParams, DecompositionParams, ErrorTermsParams, ExperimentConfig,
    IsometryParams, Lemma4Params, MollifierParams, Params, ProductRuleParams, S2Params, Theorem1Params,
};
use super::report::ResultRow;
use crate::chaos_oracle::{
    d12_norm_sq, l2_norm_sq, s2_constant, s2_norm_direct, s2_norm_formula, ChaosSum, ElementaryChaos, Flavor,
};
use crate::denseness_lab::{
    build_gn, disjointify, lemma4_distances, lemma4_error_terms, pure_jump_distance_oracle, theorem1_schedule, trend,
    GnOptions, Partition, Stage,
};
use crate::error::{Error, Result};
use crate::levy_model::{m_intersection, LevyTriplet, MeasurePart, Rect};
use crate::malliavin_op::{
    chain_rule_jump, chain_rule_zero, d12_norms_mc, jump_domination_slack, mollify, path_norm, Combination, Functional,
    LipschitzFn, MIntegrator, RectProduct, SmoothFunctional, SmoothnessClass,
};
use crate::path_sim::{derive_seed, mc_run_vec, replicate_rng, MCEstimate, PathSampler};
use crate::profile::{ExpBump, Profile};
use crate::random_measure::eval_m;

const RECT_TAG: u64 = 0x4ec7;
const FUNCTIONAL_TAG: u64 = 0xf0c7;
const POINT_TAG: u64 = 0x9017;

/// Runs the experiment named in `config` and returns its rows.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let triplet = config.build_triplet()?;
    let ctx = Ctx { config, triplet };
    match &config.params {
        Params::Isometry(p) => ctx.isometry(p),
        Params::ProductRule(p) => ctx.product_rule(p),
        Params::ChainRule(p) => ctx.chain_rule(p),
        Params::Chaos(p) => ctx.chaos(p),
        Params::S2(p) => ctx.s2(p),
        Params::Lemma4(p) => ctx.lemma4(p),
        Params::ErrorTerms(p) => ctx.error_terms(p),
        Params::Theorem1(p) => ctx.theorem1(p),
        Params::Decomposition(p) => ctx.decomposition(p),
        Params::Centered(p) => ctx.centered(p),
        Params::Mollifier(p) => ctx.mollifier(p),
    }
}

/// Runs `f` and stamps its wall-clock time on every row it returns.
fn timed(f: impl FnOnce() -> Result<Vec<ResultRow>>) -> Result<Vec<ResultRow>> {
    let start = Instant::now();
    let mut rows = f()?;
    let seconds = start.elapsed().as_secs_f64();
    for r in &mut rows {
        r.seconds = seconds;
    }
    Ok(rows)
}

fn fmt_rect(r: &Rect) -> String {
    format!("({},{}]x({},{}]", r.t_lo(), r.t_hi(), r.x_lo(), r.x_hi())
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// A point of `(lo, hi]`.
fn uniform_open_left(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    hi - (hi - lo) * rng.random::<f64>()
}

fn random_interval(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> (f64, f64) {
    loop {
        let (a, b) = (uniform(rng, lo, hi), uniform(rng, lo, hi));
        if a != b {
            return (a.min(b), a.max(b));
        }
    }
}

/// An interval inside `(lo, hi)` meeting `(a, b)`.
fn overlapping_interval(rng: &mut ChaCha8Rng, lo: f64, hi: f64, (a, b): (f64, f64)) -> (f64, f64) {
    loop {
        let left = uniform(rng, lo, b);
        let right = uniform(rng, left.max(a), hi);
        if left < right && left < b && a < right {
            return (left, right);
        }
    }
}

/// `sizes ∪ {0}`: the Gaussian atom and every jump-size node of `ν`.
fn size_nodes(triplet: &LevyTriplet) -> Vec<f64> {
    let mut sizes = vec![0.0];
    sizes.extend(triplet.nu().quadrature_nodes(&[]).into_iter().map(|(x, _)| x));
    sizes
}

/// `y ↦ Π_i p_i(y_i)` for compactly supported bumps `p_i`.
fn bump_product(times: Vec<f64>, bumps: Vec<ExpBump>) -> Result<SmoothFunctional> {
    let bound = bumps
        .iter()
        .map(|b| b.center.abs() + b.half_width)
        .fold(0.0, f64::max);
    let (fb, gb) = (bumps.clone(), bumps);
    SmoothFunctional::new(
        times,
        Arc::new(move |y| fb.iter().zip(y).map(|(b, &v)| b.value(v)).product()),
        Arc::new(move |y, out| {
            let values: Vec<f64> = gb.iter().zip(y).map(|(b, &v)| b.value(v)).collect();
            for (i, o) in out.iter_mut().enumerate() {
                let others: f64 = values.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).product();
                *o = gb[i].derivative(y[i]) * others;
            }
        }),
        SmoothnessClass::CompactSupportSmooth { bound },
    )
}

fn random_bump_product(rng: &mut ChaCha8Rng, horizon: f64, max_times: usize) -> Result<SmoothFunctional> {
    let k = rng.random_range(1..=max_times.max(1));
    let mut times: Vec<f64> = Vec::with_capacity(k);
    while times.len() < k {
        let t = uniform_open_left(rng, 0.0, horizon);
        if !times.contains(&t) {
            times.push(t);
        }
    }
    times.sort_by(f64::total_cmp);
    let bumps = (0..k)
        .map(|_| ExpBump {
            center: uniform(rng, -1.0, 1.0),
            half_width: uniform(rng, 1.5, 3.0),
            height: uniform(rng, 0.5, 2.0),
        })
        .collect();
    bump_product(times, bumps)
}

/// `sin(X_a)·cos(X_b - X_a) - c`.
fn sin_cos(a: f64, b: f64, c: f64) -> Result<SmoothFunctional> {
    SmoothFunctional::new(
        vec![a, b],
        Arc::new(move |y| y[0].sin() * (y[1] - y[0]).cos() - c),
        Arc::new(|y, g| {
            let (s, d) = (y[0].sin(), y[1] - y[0]);
            g[0] = y[0].cos() * d.cos() + s * d.sin();
            g[1] = -s * d.sin();
        }),
        SmoothnessClass::C1Extended,
    )
}

/// `sin(X_a) - c`.
fn sin_at(a: f64, c: f64) -> Result<SmoothFunctional> {
    SmoothFunctional::new(
        vec![a],
        Arc::new(move |y| y[0].sin() - c),
        Arc::new(|y, g| g[0] = y[0].cos()),
        SmoothnessClass::C1Extended,
    )
}

fn chaos_elements(p: &ChaosParams) -> Result<Vec<ElementaryChaos>> {
    if p.coefficients.len() != p.elements.len() {
        return Err(Error::Config(format!(
            "{} coefficients for {} elements",
            p.coefficients.len(),
            p.elements.len()
        )));
    }
    p.coefficients
        .iter()
        .zip(&p.elements)
        .map(|(&c, rects)| {
            let rects = rects.iter().map(build_rect).collect::<Result<Vec<_>>>()?;
            for (i, a) in rects.iter().enumerate() {
                if rects[i + 1..].iter().any(|b| a.time_overlaps(b)) {
                    return Err(Error::Config(format!("chaos element rectangles must be time-disjoint: {rects:?}")));
                }
            }
            ElementaryChaos::new(c, rects)
        })
        .collect()
}

fn chaos_functional(sum: &ChaosSum) -> Result<Combination> {
    let terms = sum
        .terms
        .iter()
        .map(|e| Ok((e.coeff, Arc::new(RectProduct::new(e.rects.clone())?) as Arc<dyn Functional>)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Combination::new(terms, sum.constant))
}

fn describe(e: &ElementaryChaos) -> String {
    let rects: Vec<String> = e.rects.iter().map(fmt_rect).collect();
    format!("{}*I{}[{}]", e.coeff, e.order(), rects.join(" "))
}

/// The default bump `φ` used where an experiment needs one.
fn default_bump() -> Arc<dyn Profile> {
    Arc::new(ExpBump {
        center: 1.0,
        half_width: 0.5,
        height: 0.7,
    })
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    triplet: Arc<LevyTriplet>,
}

impl Ctx<'_> {
    fn gate(&self) -> f64 {
        self.config.gate
    }

    fn horizon(&self) -> f64 {
        self.config.horizon
    }

    fn reps(&self) -> u64 {
        self.config.replicates
    }

    fn seed(&self) -> u64 {
        self.config.seed
    }

    fn gn_options(&self) -> GnOptions {
        GnOptions {
            seed: self.seed(),
            ..GnOptions::default()
        }
    }

    fn check_interval(&self, (lo, hi): (f64, f64)) -> Result<()> {
        if !(0.0 <= lo && lo < hi && hi <= self.horizon()) {
            return Err(Error::Config(format!(
                "interval ({lo}, {hi}] must lie in (0, {}]",
                self.horizon()
            )));
        }
        Ok(())
    }

    fn isometry(&self, p: &IsometryParams) -> Result<Vec<ResultRow>> {
        const NAME: &str = "verify-isometry";
        let h = self.horizon();
        let r = p.size_range;
        if !(r > 0.0 && r.is_finite()) || p.pairs == 0 {
            return Err(Error::Config("verify-isometry needs pairs >= 1 and size_range > 0".into()));
        }
        let mut rng = replicate_rng(derive_seed(self.seed(), RECT_TAG), 0);
        let mut pairs = Vec::with_capacity(p.pairs);
        for i in 0..p.pairs {
            let (t1, x1) = (random_interval(&mut rng, 0.0, h), random_interval(&mut rng, -r, r));
            let r1 = Rect::new(t1.0, t1.1, x1.0, x1.1)?;
            let (t2, x2) = if i % 2 == 0 {
                (overlapping_interval(&mut rng, 0.0, h, t1), overlapping_interval(&mut rng, -r, r, x1))
            } else {
                (random_interval(&mut rng, 0.0, h), random_interval(&mut rng, -r, r))
            };
            pairs.push((r1, Rect::new(t2.0, t2.1, x2.0, x2.1)?));
        }
        timed(|| {
            let times: Vec<f64> = pairs
                .iter()
                .flat_map(|(a, b)| [a.t_lo(), a.t_hi(), b.t_lo(), b.t_hi()])
                .collect();
            let sampler = PathSampler::new(self.triplet.clone(), h, &times)?;
            let est = mc_run_vec(&sampler, self.reps(), self.seed(), pairs.len(), |path, out| {
                for (o, (a, b)) in out.iter_mut().zip(&pairs) {
                    *o = eval_m(path, a)? * eval_m(path, b)?;
                }
                Ok(())
            })?;
            pairs
                .iter()
                .zip(est)
                .enumerate()
                .map(|(i, ((a, b), e))| {
                    let target = m_intersection(&self.triplet, a, b, MeasurePart::All)?;
                    let params = format!("pair={i} r1={} r2={}", fmt_rect(a), fmt_rect(b));
                    Ok(ResultRow::gated(NAME, params, e, target, self.gate()))
                })
                .collect()
        })
    }

    fn product_rule(&self, p: &ProductRuleParams) -> Result<Vec<ResultRow>> {
        const NAME: &str = "verify-product-rule";
        if p.pairs == 0 || p.points == 0 {
            return Err(Error::Config("verify-product-rule needs pairs >= 1 and points >= 1".into()));
        }
        let h = self.horizon();
        let mut rng = replicate_rng(derive_seed(self.seed(), FUNCTIONAL_TAG), 0);
        let pairs = (0..p.pairs)
            .map(|_| {
                Ok((
                    random_bump_product(&mut rng, h, p.max_times)?,
                    random_bump_product(&mut rng, h, p.max_times)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let sizes = size_nodes(&self.triplet);
        let per_pair = p.points.div_ceil(p.pairs);
        timed(|| {
            let mut rows = Vec::with_capacity(pairs.len());
            for (i, (f, g)) in pairs.iter().enumerate() {
                let fg = f.product(g)?;
                let sampler = PathSampler::new(self.triplet.clone(), h, fg.times())?;
                let mut rng = replicate_rng(derive_seed(self.seed(), POINT_TAG), i as u64);
                let pair_seed = derive_seed(self.seed(), i as u64);
                let (mut gap, mut zero_points, mut atom_points) = (0.0f64, 0usize, 0usize);
                for j in 0..per_pair {
                    let path = sampler.sample(j as u64, pair_seed);
                    let t = uniform_open_left(&mut rng, 0.0, h);
                    let slot = j % (sizes.len() + 1);
                    let x = match sizes.get(slot) {
                        Some(&x) => x,
                        None => uniform(&mut rng, -2.0, 2.0),
                    };
                    if slot == 0 {
                        zero_points += 1;
                    } else if slot < sizes.len() {
                        atom_points += 1;
                    }
                    let (df, dg) = (f.derivative_field(&path)?, g.derivative_field(&path)?);
                    let lhs = fg.derivative_field(&path)?.eval(t, x);
                    let (a, b) = (df.eval(t, x), dg.eval(t, x));
                    let rhs = dg.value() * a + df.value() * b + x * a * b;
                    gap = gap.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
                }
                let params = format!(
                    "pair={i} dims={}+{} points={per_pair} x0={zero_points} nodes={atom_points}",
                    f.dimension(),
                    g.dimension()
                );
                rows.push(ResultRow::value(NAME, params, gap, gap <= p.tolerance).with_target(0.0));
            }
            Ok(rows)
        })
    }

    fn chain_rule(&self, p: &ChainRuleParams) -> Result<Vec<ResultRow>> {
        const NAME: &str = "verify-chain-rule";
        let h = self.horizon();
        let (a, b) = (0.5 * h, h);
        // F = X_b + sin(X_a).
        let f = SmoothFunctional::new(
            vec![a, b],
            Arc::new(|y| y[1] + y[0].sin()),
            Arc::new(|y, g| {
                g[0] = y[0].cos();
                g[1] = 1.0;
            }),
            SmoothnessClass::C1Extended,
        )?;
        let sin_f = SmoothFunctional::new(
            vec![a, b],
            Arc::new(|y| (y[1] + y[0].sin()).sin()),
            Arc::new(|y, g| {
                let c = (y[1] + y[0].sin()).cos();
                g[0] = c * y[0].cos();
                g[1] = c;
            }),
            SmoothnessClass::C1Extended,
        )?;
        let sampler = PathSampler::new(self.triplet.clone(), h, &[a, b])?;
        let abs = LipschitzFn::abs();
        let sin = LipschitzFn::sin();
        let jump_sizes: Vec<f64> = size_nodes(&self.triplet).into_iter().filter(|&x| x != 0.0).collect();
        let mut rng = replicate_rng(derive_seed(self.seed(), POINT_TAG), 0);
        timed(|| {
            let (mut violations, mut worst) = (0usize, 0.0f64);
            for j in 0..p.points {
                let path = sampler.sample(j as u64, self.seed());
                let field = f.derivative_field(&path)?;
                let t = uniform_open_left(&mut rng, 0.0, h);
                let slot = j % (jump_sizes.len() + 1);
                let x = match jump_sizes.get(slot) {
                    Some(&x) => x,
                    None => loop {
                        let x = uniform(&mut rng, -2.0, 2.0);
                        if x != 0.0 {
                            break x;
                        }
                    },
                };
                let dg = chain_rule_jump(&abs, &field, t, x)?;
                let bound = abs.lipschitz() * field.eval(t, x).abs();
                if dg.abs() > bound + jump_domination_slack(&abs, &field, t, x) {
                    violations += 1;
                }
                if bound > 0.0 {
                    worst = worst.max(dg.abs() / bound);
                }
            }
            let mut zero_gap = 0.0f64;
            for j in 0..p.points {
                let path = sampler.sample(j as u64, derive_seed(self.seed(), 1));
                let field = f.derivative_field(&path)?;
                let direct = sin_f.derivative_field(&path)?;
                let t = uniform_open_left(&mut rng, 0.0, h);
                let rule = chain_rule_zero(&sin, &field, t)?;
                zero_gap = zero_gap.max((rule - direct.eval(t, 0.0)).abs());
            }
            Ok(vec![
                ResultRow::value(
                    NAME,
                    format!("g=|y| jump domination points={} max_ratio={worst:.6}", p.points),
                    violations as f64,
                    violations == 0,
                )
                .with_target(0.0),
                ResultRow::value(
                    NAME,
                    format!("g=sin zero part points={}", p.points),
                    zero_gap,
                    zero_gap <= p.zero_tolerance,
                )
                .with_target(0.0),
            ])
        })
    }

    fn chaos(&self, p: &ChaosParams) -> Result<Vec<ResultRow>> {
        const NAME: &str = "chaos-oracle-vs-mc";
        let elements = chaos_elements(p)?;
        if elements.is_empty() {
            return Err(Error::Config("chaos-oracle-vs-mc needs at least one element".into()));
        }
        let times: Vec<f64> = elements
            .iter()
            .flat_map(|e| e.rects.iter().flat_map(|r| [r.t_lo(), r.t_hi()]))
            .collect();
        timed(|| {
            let sampler = PathSampler::new(self.triplet.clone(), self.horizon(), &times)?;
            let k = elements.len();
            let est = mc_run_vec(&sampler, self.reps(), self.seed(), k + 1, |path, out| {
                let mut total = 0.0;
                for (o, e) in out.iter_mut().zip(&elements) {
                    let mut v = e.coeff;
                    for r in &e.rects {
                        v *= eval_m(path, r)?;
                    }
                    total += v;
                    *o = v * v;
                }
                out[k] = total * total;
                Ok(())
            })?;
            let mut rows = Vec::with_capacity(k + 1);
            for (e, est) in elements.iter().zip(&est) {
                let target = l2_norm_sq(&self.triplet, &ChaosSum::new(0.0, vec![e.clone()]))?;
                rows.push(ResultRow::gated(NAME, describe(e), *est, target, self.gate()));
            }
            let target = l2_norm_sq(&self.triplet, &ChaosSum::new(0.0, elements.clone()))?;
            rows.push(ResultRow::gated(NAME, format!("sum of {k}"), est[k], target, self.gate()));
            Ok(rows)
        })
    }

    fn s2(&self, p: &S2Params) -> Result<Vec<ResultRow>> {
        const NAME: &str = "s2-norm";
        let interval = (p.interval[0], p.interval[1]);
        self.check_interval(interval)?;
        let sizes: Vec<(f64, f64)> = p.sizes.iter().map(|s| (s[0], s[1])).collect();
        let t_len = interval.1 - interval.0;
        let sizes_for = |m: usize| -> Result<&[(f64, f64)]> {
            sizes
                .get(..m)
                .ok_or_else(|| Error::Config(format!("m = {m} needs {m} size sets, {} given", sizes.len())))
        };
        let mut rows = timed(|| {
            let mut rows = Vec::new();
            for &[m, n] in &p.exact {
                let sets = sizes_for(m)?;
                let c = s2_constant(&self.triplet, sets, &[])?;
                let formula = s2_norm_formula(m, n, t_len, c)?;
                let direct = s2_norm_direct(&self.triplet, interval, sets, &[], n)?;
                let rel = (direct - formula).abs() / formula.abs().max(direct.abs()).max(f64::MIN_POSITIVE);
                rows.push(
                    ResultRow::value(
                        NAME,
                        format!("direct m={m} N={n} rel_diff={rel:.3e}"),
                        direct,
                        rel <= crate::denseness_lab::S2_AGREEMENT,
                    )
                    .with_target(formula),
                );
            }
            Ok(rows)
        })?;

        rows.extend(timed(|| {
            let sets = sizes_for(2)?;
            let parts = p
                .mc_cells
                .iter()
                .map(|&n| disjointify(&self.triplet, interval, sets, &[], n))
                .collect::<Result<Vec<_>>>()?;
            let funcs: Vec<Combination> = parts.iter().map(|d| d.s2_functional()).collect();
            let refs: Vec<&dyn Functional> = funcs.iter().map(|f| f as &dyn Functional).collect();
            let est = d12_norms_mc(&refs, self.triplet.clone(), self.horizon(), self.reps(), self.seed(), Flavor::Full)?;
            Ok(p.mc_cells
                .iter()
                .zip(parts.iter().zip(est))
                .map(|(n, (d, e))| ResultRow::gated(NAME, format!("monte-carlo m=2 N={n}"), e, d.s2_norm, self.gate()))
                .collect())
        })?);

        rows.extend(timed(|| {
            let sets = sizes_for(2)?;
            let c = s2_constant(&self.triplet, sets, &[])?;
            let mut cells = vec![2usize];
            while *cells.last().expect("nonempty") < p.decay_cells {
                let next = (cells.last().expect("nonempty") * 2).min(p.decay_cells);
                cells.push(next);
            }
            let values = cells
                .iter()
                .map(|&n| s2_norm_formula(2, n, t_len, c))
                .collect::<Result<Vec<_>>>()?;
            let decreasing = values.windows(2).all(|w| w[1] < w[0]);
            let ratio = values.last().expect("nonempty") / values[0];
            Ok(vec![ResultRow::value(
                NAME,
                format!("decay m=2 N=2..{} decreasing={decreasing} max_ratio={}", p.decay_cells, p.decay_ratio),
                ratio,
                decreasing && ratio < p.decay_ratio,
            )])
        })?);
        Ok(rows)
    }

    fn lemma4(&self, p: &Lemma4Params) -> Result<Vec<ResultRow>> {
        const NAME: &str = "lemma4-convergence";
        let interval = (p.interval[0], p.interval[1]);
        self.check_interval(interval)?;
        let phi = p.phi.build()?;
        let partitions = p
            .cells
            .iter()
            .map(|&n| Partition::uniform(interval.0, interval.1, n))
            .collect::<Result<Vec<_>>>()?;
        timed(|| {
            let est = lemma4_distances(
                phi.clone(),
                &partitions,
                self.triplet.clone(),
                self.horizon(),
                self.reps(),
                self.seed(),
                self.gn_options(),
            )?;
            let tr = trend(&est, p.trend_k, p.ratio);
            let pure_jump = self.triplet.sigma() == 0.0 && self.triplet.nu().atom_list().len() == 1;
            let mut rows = Vec::with_capacity(est.len() + 1);
            for (part, e) in partitions.iter().zip(&est) {
                let params = format!("cells={} mesh={}", part.cells(), part.mesh());
                rows.push(if pure_jump {
                    let target = pure_jump_distance_oracle(phi.as_ref(), &self.triplet, part)?;
                    ResultRow::gated(NAME, format!("{params} oracle"), *e, target, self.gate())
                } else {
                    ResultRow::estimate(NAME, params, *e, tr.pass)
                });
            }
            rows.push(ResultRow::value(
                NAME,
                format!("trend monotone={} max_ratio={}", tr.monotone, p.ratio),
                tr.ratio,
                tr.pass,
            ));
            Ok(rows)
        })
    }

    fn error_terms(&self, p: &ErrorTermsParams) -> Result<Vec<ResultRow>> {
        const NAME: &str = "lemma4-error-terms";
        let interval = (p.interval[0], p.interval[1]);
        self.check_interval(interval)?;
        let phi = p.phi.build()?;
        timed(|| {
            let mut terms = Vec::with_capacity(p.cells.len());
            for &n in &p.cells {
                let part = Partition::uniform(interval.0, interval.1, n)?;
                terms.push(lemma4_error_terms(
                    phi.clone(),
                    &part,
                    self.triplet.clone(),
                    self.horizon(),
                    self.reps(),
                    self.seed(),
                )?);
            }
            let zero: Vec<MCEstimate> = terms.iter().map(|t| t.zero_part).collect();
            let jump: Vec<MCEstimate> = terms.iter().map(|t| t.jump_part).collect();
            let gaussian = self.triplet.sigma() > 0.0;
            let zero_trend = trend(&zero, p.trend_k, p.ratio);
            let jump_trend = trend(&jump, p.trend_k, p.ratio);
            let mut rows = Vec::new();
            for (&n, t) in p.cells.iter().zip(&terms) {
                let zero_pass = if gaussian { zero_trend.pass } else { t.zero_part.mean == 0.0 };
                rows.push(ResultRow::estimate(NAME, format!("zero_part cells={n}"), t.zero_part, zero_pass));
                rows.push(ResultRow::estimate(NAME, format!("jump_part cells={n}"), t.jump_part, jump_trend.pass));
                rows.push(ResultRow::value(
                    NAME,
                    format!(
                        "domination cells={n} points={} violations={}",
                        t.domination.points, t.domination.violations
                    ),
                    t.domination.max_ratio,
                    t.domination.holds(),
                ));
            }
            if gaussian {
                rows.push(ResultRow::value(
                    NAME,
                    format!("zero_part trend monotone={} max_ratio={}", zero_trend.monotone, p.ratio),
                    zero_trend.ratio,
                    zero_trend.pass,
                ));
            }
            rows.push(ResultRow::value(
                NAME,
                format!("jump_part trend monotone={} max_ratio={}", jump_trend.monotone, p.ratio),
                jump_trend.ratio,
                jump_trend.pass,
            ));
            Ok(rows)
        })
    }

    fn theorem1(&self, p: &Theorem1Params) -> Result<Vec<ResultRow>> {
        const NAME: &str = "theorem1-pipeline";
        let rects = p.rects.iter().map(build_rect).collect::<Result<Vec<_>>>()?;
        let stages: Vec<Stage> = p
            .stages
            .iter()
            .map(|s| Stage {
                delta: s[0],
                mesh: s[1],
                cutoff: s[2],
            })
            .collect();
        if stages.is_empty() {
            return Err(Error::Config("theorem1-pipeline needs at least one stage".into()));
        }
        timed(|| {
            let out = theorem1_schedule(
                &rects,
                &stages,
                self.triplet.clone(),
                self.horizon(),
                self.reps(),
                self.seed(),
                self.gn_options(),
            )?;
            let est: Vec<MCEstimate> = out.iter().map(|(_, e)| *e).collect();
            let tr = trend(&est, p.trend_k, p.ratio);
            let mut rows = Vec::new();
            for (i, (built, e)) in out.iter().enumerate() {
                let s = built.stage;
                rows.push(ResultRow::estimate(
                    NAME,
                    format!("stage={i} delta={} mesh={} cutoff={}", s.delta, s.mesh, s.cutoff),
                    *e,
                    tr.pass,
                ));
                rows.push(
                    ResultRow::value(
                        NAME,
                        format!("stage={i} smoothing_error vs bound slack_bound={:.6e}", built.slack_bound),
                        built.smoothing_error,
                        built.bounds_respected(),
                    )
                    .with_target(built.exact_bound),
                );
            }
            rows.push(ResultRow::value(
                NAME,
                format!("trend monotone={} max_ratio={}", tr.monotone, p.ratio),
                tr.ratio,
                tr.pass,
            ));
            Ok(rows)
        })
    }

    fn decomposition(&self, p: &DecompositionParams) -> Result<Vec<ResultRow>> {
        const NAME: &str = "d12-decomposition";
        let h = self.horizon();
        let (a, b) = (0.5 * h, h);
        let rects = vec![Rect::new(0.0, a, 0.5, 1.5)?, Rect::new(a, b, -1.0, -0.25)?];
        let gn = build_gn(default_bump(), &Partition::uniform(0.0, a, 8)?, &self.triplet, self.gn_options())?;
        let elements = chaos_elements(&ChaosParams::default())?;
        let chaos_fits = elements.iter().all(|e| e.rects.iter().all(|r| r.t_hi() <= h));
        let mut functionals: Vec<(String, Box<dyn Functional>)> = vec![
            ("M(r1)M(r2)".into(), Box::new(RectProduct::new(rects)?)),
            ("sin(X_a)cos(X_b-X_a)".into(), Box::new(sin_cos(a, b, 0.0)?)),
            ("partition sum".into(), Box::new(gn)),
        ];
        if chaos_fits {
            let sum = ChaosSum::new(0.3, elements.clone());
            functionals.push(("chaos sum".into(), Box::new(chaos_functional(&sum)?)));
        }
        let mut rows = timed(|| {
            let mut rows = Vec::new();
            for (label, f) in &functionals {
                let integ = MIntegrator::for_functional(&self.triplet, f.as_ref());
                let sampler = PathSampler::new(self.triplet.clone(), h, &f.required_times())?;
                let gaps = (0..p.paths)
                    .into_par_iter()
                    .map(|r| {
                        let path = sampler.sample(r, self.seed());
                        let field = f.realize(&path)?;
                        let n = path_norm(field.as_ref(), &integ);
                        let full = n.flavored(Flavor::Full);
                        let split = n.flavored(Flavor::ZeroPart) + n.flavored(Flavor::JumpPart) - n.l2;
                        Ok((full - split).abs() / (1.0 + full.abs()))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let gap = gaps.into_iter().fold(0.0, f64::max);
                rows.push(
                    ResultRow::value(NAME, format!("pathwise {label} paths={}", p.paths), gap, gap <= p.tolerance)
                        .with_target(0.0),
                );
            }
            Ok(rows)
        })?;
        rows.extend(timed(|| {
            let mut sums: Vec<(String, ChaosSum)> = elements
                .iter()
                .map(|e| (describe(e), ChaosSum::new(0.0, vec![e.clone()])))
                .collect();
            sums.push(("constant 0.3 plus all elements".into(), ChaosSum::new(0.3, elements.clone())));
            sums.iter()
                .map(|(label, s)| {
                    let full = d12_norm_sq(&self.triplet, s, Flavor::Full)?;
                    let split = d12_norm_sq(&self.triplet, s, Flavor::ZeroPart)?
                        + d12_norm_sq(&self.triplet, s, Flavor::JumpPart)?
                        - l2_norm_sq(&self.triplet, s)?;
                    let gap = (full - split).abs() / (1.0 + full.abs());
                    Ok(ResultRow::value(NAME, format!("oracle {label}"), split, gap <= p.tolerance).with_target(full))
                })
                .collect()
        })?);
        Ok(rows)
    }

    fn centered(&self, p: &CenteredParams) -> Result<Vec<ResultRow>> {
        const NAME: &str = "centered-inequality";
        let h = self.horizon();
        let (a, b) = (0.5 * h, h);
        let e = self.triplet.char_exponent(1.0)?;
        // 𝔼 e^{iX_a} = exp(a·Ψ(1)), and X_b - X_a is an independent copy over b - a.
        let first = (e * a).exp();
        let second = (e * (b - a)).exp();
        let phi = p.phi.build()?;
        let gn = build_gn(phi, &Partition::uniform(0.0, a, p.cells)?, &self.triplet, self.gn_options())?;
        let functionals: Vec<(String, Box<dyn Functional>)> = vec![
            ("M(r)".into(), Box::new(RectProduct::new(vec![Rect::new(0.0, a, -0.7, 1.2)?])?)),
            (
                "M(r1)M(r2)".into(),
                Box::new(RectProduct::new(vec![Rect::new(0.0, a, 0.5, 1.5)?, Rect::new(a, b, -1.0, -0.25)?])?),
            ),
            ("sin(X_a)-E".into(), Box::new(sin_at(a, first.im)?)),
            ("sin(X_a)cos(X_b-X_a)-E".into(), Box::new(sin_cos(a, b, first.im * second.re)?)),
            (format!("partition sum cells={}", p.cells), Box::new(gn)),
        ];
        timed(|| {
            let mut times = Vec::new();
            for (_, f) in &functionals {
                times.extend(f.required_times());
            }
            let integrators: Vec<MIntegrator> = functionals
                .iter()
                .map(|(_, f)| MIntegrator::for_functional(&self.triplet, f.as_ref()))
                .collect();
            let sampler = PathSampler::new(self.triplet.clone(), h, &times)?;
            let k = functionals.len();
            let est = mc_run_vec(&sampler, self.reps(), self.seed(), 2 * k, |path, out| {
                for (i, ((_, f), integ)) in functionals.iter().zip(&integrators).enumerate() {
                    let field = f.realize(path)?;
                    let v = field.value();
                    out[2 * i] = v * v - integ.full(field.as_ref());
                    out[2 * i + 1] = v;
                }
                Ok(())
            })?;
            Ok(functionals
                .iter()
                .enumerate()
                .map(|(i, (label, f))| {
                    let mut gap = est[2 * i];
                    let s = f.centering_stderr();
                    if s > 0.0 {
                        let bias = 2.0 * est[2 * i + 1].mean.abs() * s + s * s;
                        gap.stderr = (gap.stderr * gap.stderr + bias * bias).sqrt();
                    }
                    let pass = gap.mean <= self.gate() * gap.stderr;
                    ResultRow::estimate(NAME, format!("{label}: E F^2 - E|DF|^2"), gap, pass)
                })
                .collect())
        })
    }

    fn mollifier(&self, p: &MollifierParams) -> Result<Vec<ResultRow>> {
        const NAME: &str = "mollifier-bounds";
        if p.grid < 2 || !(p.range > 0.0) {
            return Err(Error::Config("mollifier-bounds needs grid >= 2 and range > 0".into()));
        }
        let g = LipschitzFn::abs();
        let lip = g.lipschitz();
        let grid: Vec<f64> = (0..p.grid)
            .map(|i| -p.range + 2.0 * p.range * i as f64 / (p.grid - 1) as f64)
            .collect();
        let mut rows = Vec::new();
        for &n in &p.levels {
            rows.extend(timed(|| {
                let gn = mollify(&g, n)?;
                let (err, slope) = grid
                    .par_iter()
                    .map(|&y| {
                        let d = gn.derivative(y).expect("mollified functions are differentiable");
                        ((gn.eval(y) - g.eval(y)).abs(), d.abs())
                    })
                    .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
                let bound = lip / f64::from(n);
                Ok(vec![
                    ResultRow::value(NAME, format!("g=|y| N={n} sup|g_N-g| grid={}", p.grid), err, err <= bound)
                        .with_target(bound),
                    ResultRow::value(
                        NAME,
                        format!("g=|y| N={n} sup|g_N'| grid={}", p.grid),
                        slope,
                        slope <= lip + p.tolerance,
                    )
                    .with_target(lip),
                ])
            })?);
        }
        Ok(rows)
    }
}

