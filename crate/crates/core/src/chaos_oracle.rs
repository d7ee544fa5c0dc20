//! Exact second moments and `D_{1,2}` norms of elementary chaos sums.
//!
//! An elementary chaos element is `c·I_n(1_{B_1} ⊗ ⋯ ⊗ 1_{B_n})`. Its inner
//! product with another element of the same order is the permanent of the
//! Gram matrix `G_ij = 𝕞(B_i ∩ B′_j)`. The derivative part of the `D_{1,2}`
//! norm, `n·n!⟨f̃_n, g̃_n⟩` with the first coordinate of `(t, x)` restricted
//! to a part of `μ`, expands along that coordinate as
//!
//! ```text
//! Σ_{a,b} 𝕞_part(B_a ∩ B′_b) · perm(G with row a and column b removed).
//! ```
//!
//! With the full measure this is `n·perm(G)` by Laplace expansion, so the
//! full norm is `Σ (n+1)·⟨·,·⟩`.

use crate::error::{Error, Result};
use crate::levy_model::{m_intersection, m_measure, mu_measure, LevyTriplet, MeasurePart, Rect};
use crate::quadrature::CompensatedSum;

/// Largest chaos order handled by the permanent.
pub const MAX_ORDER: usize = 12;

/// Largest order for the permutation-enumeration cross-check.
pub const MAX_BRUTE_FORCE_ORDER: usize = 6;

/// Largest tuple count enumerated by [`s2_norm_direct`].
pub const MAX_ENUMERATION: u128 = 1_000_000;

/// `coeff·I_n(1_{B_1} ⊗ ⋯ ⊗ 1_{B_n})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryChaos {
    pub coeff: f64,
    pub rects: Vec<Rect>,
}

impl ElementaryChaos {
    pub fn new(coeff: f64, rects: Vec<Rect>) -> Result<Self> {
        if rects.is_empty() {
            return Err(Error::invalid("chaos order", "must be at least 1"));
        }
        if !coeff.is_finite() {
            return Err(Error::invalid("coefficient", format!("{coeff}")));
        }
        Ok(Self { coeff, rects })
    }

    pub fn order(&self) -> usize {
        self.rects.len()
    }
}

/// A constant plus a finite sum of elementary chaos elements.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChaosSum {
    pub constant: f64,
    pub terms: Vec<ElementaryChaos>,
}

impl ChaosSum {
    pub fn new(constant: f64, terms: Vec<ElementaryChaos>) -> Self {
        Self { constant, terms }
    }
}

/// Which part of `μ` the derivative coordinate is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Full,
    ZeroPart,
    JumpPart,
}

impl Flavor {
    pub fn measure_part(self) -> MeasurePart {
        match self {
            Flavor::Full => MeasurePart::All,
            Flavor::ZeroPart => MeasurePart::Gaussian,
            Flavor::JumpPart => MeasurePart::Jump,
        }
    }
}

/// Permanent of the row-major `n × n` matrix `a` by Ryser's formula.
pub fn permanent(a: &[f64], n: usize) -> Result<f64> {
    if n > MAX_ORDER {
        return Err(Error::OrderTooLarge {
            order: n,
            limit: MAX_ORDER,
        });
    }
    assert_eq!(a.len(), n * n, "matrix size mismatch");
    if n == 0 {
        return Ok(1.0);
    }
    let mut row_sums = vec![0.0; n];
    let mut total = CompensatedSum::default();
    let mut prev_gray = 0usize;
    for k in 1..(1usize << n) {
        let gray = k ^ (k >> 1);
        let changed = (gray ^ prev_gray).trailing_zeros() as usize;
        let sign = if gray & (1 << changed) != 0 { 1.0 } else { -1.0 };
        for (i, s) in row_sums.iter_mut().enumerate() {
            *s += sign * a[i * n + changed];
        }
        prev_gray = gray;
        let prod: f64 = row_sums.iter().product();
        let parity = if gray.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total.add(parity * prod);
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * total.value())
}

fn gram(triplet: &LevyTriplet, a: &[Rect], b: &[Rect], part: MeasurePart) -> Result<Vec<f64>> {
    let n = a.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = m_intersection(triplet, &a[i], &b[j], part)?;
        }
    }
    Ok(g)
}

fn minor(g: &[f64], n: usize, row: usize, col: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((n - 1) * (n - 1));
    for i in (0..n).filter(|&i| i != row) {
        for j in (0..n).filter(|&j| j != col) {
            out.push(g[i * n + j]);
        }
    }
    out
}

/// `𝔼[e₁·e₂]`: zero across orders, else `c₁c₂·perm(G)`.
pub fn inner_product(triplet: &LevyTriplet, e1: &ElementaryChaos, e2: &ElementaryChaos) -> Result<f64> {
    let n = e1.order();
    if n != e2.order() {
        return Ok(0.0);
    }
    if n > MAX_ORDER {
        return Err(Error::OrderTooLarge {
            order: n,
            limit: MAX_ORDER,
        });
    }
    let g = gram(triplet, &e1.rects, &e2.rects, MeasurePart::All)?;
    Ok(e1.coeff * e2.coeff * permanent(&g, n)?)
}

/// `n·n!⟨f̃, g̃⟩` with the first `(t, x)` coordinate restricted to `flavor`.
pub fn derivative_part(
    triplet: &LevyTriplet,
    e1: &ElementaryChaos,
    e2: &ElementaryChaos,
    flavor: Flavor,
) -> Result<f64> {
    let n = e1.order();
    if n != e2.order() {
        return Ok(0.0);
    }
    if flavor == Flavor::Full {
        return Ok(n as f64 * inner_product(triplet, e1, e2)?);
    }
    if n > MAX_ORDER {
        return Err(Error::OrderTooLarge {
            order: n,
            limit: MAX_ORDER,
        });
    }
    let full = gram(triplet, &e1.rects, &e2.rects, MeasurePart::All)?;
    let restricted = gram(triplet, &e1.rects, &e2.rects, flavor.measure_part())?;
    let mut acc = CompensatedSum::default();
    for a in 0..n {
        for b in 0..n {
            let w = restricted[a * n + b];
            if w != 0.0 {
                acc.add(w * permanent(&minor(&full, n, a, b), n - 1)?);
            }
        }
    }
    Ok(e1.coeff * e2.coeff * acc.value())
}

/// All permutations of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

/// [`derivative_part`] by explicit symmetrization, restricting coordinate
/// `coordinate` instead of the first. Exponential cost; order at most
/// [`MAX_BRUTE_FORCE_ORDER`].
pub fn derivative_part_bruteforce(
    triplet: &LevyTriplet,
    e1: &ElementaryChaos,
    e2: &ElementaryChaos,
    flavor: Flavor,
    coordinate: usize,
) -> Result<f64> {
    let n = e1.order();
    if n != e2.order() {
        return Ok(0.0);
    }
    if n > MAX_BRUTE_FORCE_ORDER {
        return Err(Error::OrderTooLarge {
            order: n,
            limit: MAX_BRUTE_FORCE_ORDER,
        });
    }
    if coordinate >= n {
        return Err(Error::invalid("coordinate", format!("{coordinate} >= order {n}")));
    }
    let full = gram(triplet, &e1.rects, &e2.rects, MeasurePart::All)?;
    let restricted = gram(triplet, &e1.rects, &e2.rects, flavor.measure_part())?;
    let perms = permutations(n);
    let mut acc = CompensatedSum::default();
    for p in &perms {
        for q in &perms {
            let mut prod = 1.0;
            for i in 0..n {
                let g = if i == coordinate { &restricted } else { &full };
                prod *= g[p[i] * n + q[i]];
            }
            acc.add(prod);
        }
    }
    let n_fact: f64 = (1..=n).map(|k| k as f64).product();
    Ok(e1.coeff * e2.coeff * n as f64 / n_fact * acc.value())
}

/// `𝔼|F|²`.
pub fn l2_norm_sq(triplet: &LevyTriplet, s: &ChaosSum) -> Result<f64> {
    let mut acc = CompensatedSum::default();
    acc.add(s.constant * s.constant);
    for e1 in &s.terms {
        for e2 in &s.terms {
            acc.add(inner_product(triplet, e1, e2)?);
        }
    }
    Ok(acc.value())
}

/// `Σ_{n} n·n!‖f̃_n‖²` restricted to `flavor`.
pub fn derivative_norm_sq(triplet: &LevyTriplet, s: &ChaosSum, flavor: Flavor) -> Result<f64> {
    let mut acc = CompensatedSum::default();
    for e1 in &s.terms {
        for e2 in &s.terms {
            acc.add(derivative_part(triplet, e1, e2, flavor)?);
        }
    }
    Ok(acc.value())
}

/// `‖F‖²` in `D_{1,2}`, `D⁰_{1,2}` or `Dᴶ_{1,2}`.
pub fn d12_norm_sq(triplet: &LevyTriplet, s: &ChaosSum, flavor: Flavor) -> Result<f64> {
    match flavor {
        Flavor::Full => {
            let mut acc = CompensatedSum::default();
            acc.add(s.constant * s.constant);
            for e1 in &s.terms {
                for e2 in &s.terms {
                    acc.add((e1.order() as f64 + 1.0) * inner_product(triplet, e1, e2)?);
                }
            }
            Ok(acc.value())
        }
        _ => Ok(l2_norm_sq(triplet, s)? + derivative_norm_sq(triplet, s, flavor)?),
    }
}

/// `c·|T|ᵐ·(1 - (1 - 1/N)(1 - 2/N)⋯(1 - (m-1)/N))`, evaluated as
/// `c·|T|ᵐ·(Nᵐ - N(N-1)⋯(N-m+1))/Nᵐ`.
///
/// For `m > N` the falling factorial vanishes and the value is `c·|T|ᵐ`.
pub fn s2_norm_formula(m: usize, n_cells: usize, t_len: f64, c: f64) -> Result<f64> {
    if m == 0 || n_cells == 0 {
        return Err(Error::invalid("s2 norm", format!("needs m >= 1 and N >= 1, got m = {m}, N = {n_cells}")));
    }
    let scale = c * t_len.powi(m as i32);
    let n = n_cells as u128;
    let power = (0..m).try_fold(1u128, |acc, _| acc.checked_mul(n));
    let fraction = match power {
        Some(power) => {
            let falling: u128 = (0..m as u128).map(|k| n.saturating_sub(k)).product();
            (power - falling) as f64 / power as f64
        }
        None => {
            let survive: f64 = (1..m).map(|k| (1.0 - k as f64 / n_cells as f64).max(0.0)).product();
            1.0 - survive
        }
    };
    Ok(scale * fraction)
}

/// The constant `c = (n+1)·μ(A_1)⋯μ(A_n)·|T_{m+1}|⋯|T_n|` for size sets
/// `A_1..A_m` sharing one time interval and tail rectangles `T_k × A_k`.
pub fn s2_constant(triplet: &LevyTriplet, sizes: &[(f64, f64)], tail: &[Rect]) -> Result<f64> {
    let n = sizes.len() + tail.len();
    let mut c = n as f64 + 1.0;
    for &(a, b) in sizes {
        c *= mu_measure(triplet, a, b)?;
    }
    for r in tail {
        c *= m_measure(triplet, r)?;
    }
    Ok(c)
}

/// `(n+1)·Σ_{non-distinct (j_1..j_m)} Π 𝕞(E_{j_i} × A_i)·Π 𝕞(T_k × A_k)` by
/// enumerating all `Nᵐ` index tuples over the `N` equal cells `E_j` of
/// `(t_lo, t_hi]`.
pub fn s2_norm_direct(
    triplet: &LevyTriplet,
    interval: (f64, f64),
    sizes: &[(f64, f64)],
    tail: &[Rect],
    n_cells: usize,
) -> Result<f64> {
    let m = sizes.len();
    if m == 0 || n_cells == 0 {
        return Err(Error::invalid("s2 norm", "needs at least one size set and one cell"));
    }
    let count = (0..m).try_fold(1u128, |acc, _| acc.checked_mul(n_cells as u128));
    match count {
        Some(c) if c <= MAX_ENUMERATION => {}
        _ => {
            return Err(Error::EnumerationTooLarge {
                count: count.unwrap_or(u128::MAX),
                limit: MAX_ENUMERATION,
            })
        }
    }
    let (t_lo, t_hi) = interval;
    let width = (t_hi - t_lo) / n_cells as f64;
    let mut cell = vec![vec![0.0; n_cells]; m];
    for (i, &(a, b)) in sizes.iter().enumerate() {
        for j in 0..n_cells {
            let lo = t_lo + width * j as f64;
            let hi = if j + 1 == n_cells { t_hi } else { lo + width };
            cell[i][j] = m_measure(triplet, &Rect::new(lo, hi, a, b)?)?;
        }
    }
    let mut tail_product = 1.0;
    for r in tail {
        tail_product *= m_measure(triplet, r)?;
    }
    let n = m + tail.len();
    let mut index = vec![0usize; m];
    let mut acc = CompensatedSum::default();
    loop {
        let distinct = (0..m).all(|i| (i + 1..m).all(|k| index[i] != index[k]));
        if !distinct {
            let prod: f64 = index.iter().enumerate().map(|(i, &j)| cell[i][j]).product();
            acc.add(prod);
        }
        let mut pos = 0;
        loop {
            if pos == m {
                return Ok((n as f64 + 1.0) * acc.value() * tail_product);
            }
            index[pos] += 1;
            if index[pos] < n_cells {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
    }
}
