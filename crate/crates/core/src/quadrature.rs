//! Composite Gauss–Legendre quadrature.
//!
//! Every panel uses the same fixed-order rule; accuracy is controlled by the
//! panel count and validated by comparing `P` against `2P` panels.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes per panel used throughout the crate.
pub const PANEL_ORDER: usize = 10;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `order`-point rule by Newton iteration on `P_order`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss–Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[a, b]` with a single panel.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (z, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * z);
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// The shared panel rule.
pub fn panel_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(PANEL_ORDER))
}

/// Composite rule with `panels` equal panels on `[a, b]`.
pub fn composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let rule = panel_rule();
    let width = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + width * p as f64;
        let hi = if p + 1 == panels { b } else { lo + width };
        acc += rule.integrate(&f, lo, hi);
    }
    acc
}

/// Composite rule validated against the doubled panel count.
///
/// Fails when `|I_P - I_2P| > rel_tol * max(|I_2P|, ∫|f|)`.
pub fn composite_checked<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    rel_tol: f64,
) -> Result<f64> {
    let coarse = composite(&f, a, b, panels);
    let fine = composite(&f, a, b, 2 * panels.max(1));
    let scale = composite(|x| f(x).abs(), a, b, 2 * panels.max(1));
    if !coarse.is_finite() || !fine.is_finite() {
        return Err(Error::Quadrature(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    if (coarse - fine).abs() > rel_tol * fine.abs().max(scale) {
        return Err(Error::Quadrature(format!(
            "{panels} vs {} panels on [{a}, {b}] disagree: {coarse} vs {fine}",
            2 * panels
        )));
    }
    Ok(fine)
}

/// Doubles the panel count until two successive rules agree.
pub fn composite_converged<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    start_panels: usize,
    rel_tol: f64,
    max_panels: usize,
) -> Result<f64> {
    let mut panels = start_panels.max(1);
    let mut prev = composite(&f, a, b, panels);
    while panels < max_panels {
        panels *= 2;
        let next = composite(&f, a, b, panels);
        let scale = next.abs().max(composite(|x| f(x).abs(), a, b, panels));
        if (next - prev).abs() <= rel_tol * scale || scale == 0.0 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!(
        "no convergence on [{a}, {b}] with {max_panels} panels"
    )))
}

/// Node/weight pairs of the composite rule on `[a, b]`, with panel edges
/// forced at every interior breakpoint.
pub fn composite_nodes(a: f64, b: f64, panels: usize, breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let mut edges = vec![a, b];
    edges.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let rule = panel_rule();
    let total = b - a;
    let mut out = Vec::new();
    for win in edges.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let share = ((hi - lo) / total * panels as f64).ceil().max(1.0) as usize;
        let width = (hi - lo) / share as f64;
        for p in 0..share {
            let plo = lo + width * p as f64;
            let phi = if p + 1 == share { hi } else { plo + width };
            let half = 0.5 * (phi - plo);
            let mid = 0.5 * (phi + plo);
            for (z, w) in rule.nodes().iter().zip(rule.weights()) {
                out.push((mid + half * z, w * half));
            }
        }
    }
    out
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for order in [1, 2, 5, 10, 16] {
            let rule = GaussLegendre::new(order);
            let total: f64 = rule.weights().iter().sum();
            assert!((total - 2.0).abs() < 1e-14, "order {order}: {total}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::new(PANEL_ORDER);
        for degree in 0..(2 * PANEL_ORDER) {
            let got = rule.integrate(|x| x.powi(degree as i32), 0.0, 1.0);
            let want = 1.0 / (degree as f64 + 1.0);
            assert!((got - want).abs() < 1e-14, "degree {degree}: {got} vs {want}");
        }
    }

    #[test]
    fn composite_integrates_smooth_functions() {
        let got = composite(f64::sin, 0.0, std::f64::consts::PI, 8);
        assert!((got - 2.0).abs() < 1e-14);
        let checked = composite_checked(|x| x * x, 1.0, 2.0, 4, 1e-10).unwrap();
        assert!((checked - 7.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn checked_rejects_unresolved_integrand() {
        let spiky = |x: f64| (200.0 * x).sin().powi(2) * (1.0 / (1e-3 + x * x));
        assert!(composite_checked(spiky, -1.0, 1.0, 1, 1e-10).is_err());
    }

    #[test]
    fn nodes_respect_breakpoints() {
        let nodes = composite_nodes(0.0, 1.0, 4, &[0.3]);
        let step = |x: f64| if x <= 0.3 { 1.0 } else { 0.0 };
        let total: f64 = nodes.iter().map(|(x, w)| w * step(*x)).sum();
        assert!((total - 0.3).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::default();
        acc.add(1.0);
        for _ in 0..1000 {
            acc.add(1e-17);
        }
        acc.add(-1.0);
        assert!((acc.value() - 1e-14).abs() < 1e-20);
    }
}
