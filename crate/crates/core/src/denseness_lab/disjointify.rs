//! Splitting `Π_i M(T × A_i) · Π_k M(T_k × A_k)` into a sum `S₁` of products
//! over distinct time cells and a remainder `S₂` whose norm is explicit.

use std::sync::Arc;

use crate::chaos_oracle::{s2_constant, s2_norm_direct, s2_norm_formula, MAX_ENUMERATION};
use crate::error::{Error, Result};
use crate::levy_model::{mu_measure, LevyTriplet, Rect};
use crate::malliavin_op::{Combination, Functional, RectProduct};
use crate::random_measure::TensorKernel;

/// Relative agreement required between the closed form and the enumeration.
pub const S2_AGREEMENT: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct Disjointified {
    /// Products `Π_i M(E_{j_i} × A_i)·Π_k M(T_k × A_k)` over distinct `j_i`.
    pub s1: Vec<TensorKernel>,
    /// `‖S₂‖²_{D_{1,2}}` from the closed form.
    pub s2_norm: f64,
    /// The same norm by enumeration, when `Nᵐ` is small enough.
    pub s2_direct: Option<f64>,
    pub constant: f64,
    full: RectProduct,
}

impl Disjointified {
    /// `S₂ = Π M - Σ S₁` as a functional.
    pub fn s2_functional(&self) -> Combination {
        let mut terms: Vec<(f64, Arc<dyn Functional>)> = vec![(1.0, Arc::new(self.full.clone()))];
        terms.extend(self.s1.iter().map(|k| (-1.0, Arc::new(k.clone()) as Arc<dyn Functional>)));
        Combination::new(terms, 0.0)
    }

    /// The undivided product `Π M`.
    pub fn full_product(&self) -> &RectProduct {
        &self.full
    }
}

/// Splits `T = (t_lo, t_hi]` into `n_cells` equal cells.
pub fn disjointify(
    triplet: &LevyTriplet,
    interval: (f64, f64),
    sizes: &[(f64, f64)],
    tail: &[Rect],
    n_cells: usize,
) -> Result<Disjointified> {
    let m = sizes.len();
    if m == 0 {
        return Err(Error::invalid("sizes", "need at least one size set"));
    }
    if m > n_cells {
        return Err(Error::invalid("N", format!("{m} size sets need at least {m} cells, got {n_cells}")));
    }
    let (t_lo, t_hi) = interval;
    for (i, &(a, b)) in sizes.iter().enumerate() {
        if !(a < b) {
            return Err(Error::invalid("sizes", format!("({a}, {b}] is empty")));
        }
        if mu_measure(triplet, a, b)? <= 0.0 {
            return Err(Error::invalid("sizes", format!("μ(({a}, {b}]) = 0")));
        }
        for &(c, d) in &sizes[i + 1..] {
            if a < d && c < b {
                return Err(Error::invalid("sizes", format!("({a}, {b}] and ({c}, {d}] overlap")));
            }
        }
    }
    for r in tail {
        if r.t_lo() < t_hi && t_lo < r.t_hi() {
            return Err(Error::invalid("tail", format!("{r} overlaps ({t_lo}, {t_hi}] in time")));
        }
    }
    let distinct: u128 = (0..m as u128).map(|k| n_cells as u128 - k).product();
    if distinct > MAX_ENUMERATION {
        return Err(Error::EnumerationTooLarge {
            count: distinct,
            limit: MAX_ENUMERATION,
        });
    }
    let width = (t_hi - t_lo) / n_cells as f64;
    let cell = |j: usize| {
        let lo = t_lo + width * j as f64;
        (lo, if j + 1 == n_cells { t_hi } else { lo + width })
    };

    let mut s1 = Vec::with_capacity(distinct as usize);
    let mut index = vec![0usize; m];
    loop {
        let unique = (0..m).all(|i| !index[..i].contains(&index[i]));
        if unique {
            let mut rects = Vec::with_capacity(m + tail.len());
            for (i, &(a, b)) in sizes.iter().enumerate() {
                let (lo, hi) = cell(index[i]);
                rects.push(Rect::new(lo, hi, a, b)?);
            }
            rects.extend_from_slice(tail);
            s1.push(TensorKernel::of_rects(&rects)?);
        }
        let mut i = 0;
        loop {
            if i == m {
                break;
            }
            index[i] += 1;
            if index[i] < n_cells {
                break;
            }
            index[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
    }

    let constant = s2_constant(triplet, sizes, tail)?;
    let s2_norm = s2_norm_formula(m, n_cells, t_hi - t_lo, constant)?;
    let s2_direct = match s2_norm_direct(triplet, interval, sizes, tail, n_cells) {
        Ok(v) => Some(v),
        Err(Error::EnumerationTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    if let Some(direct) = s2_direct {
        let scale = s2_norm.abs().max(direct.abs());
        if (direct - s2_norm).abs() > S2_AGREEMENT * scale {
            return Err(Error::invalid(
                "s2 norm",
                format!("closed form {s2_norm} disagrees with enumeration {direct}"),
            ));
        }
    }
    let mut all: Vec<Rect> = sizes
        .iter()
        .map(|&(a, b)| Rect::new(t_lo, t_hi, a, b))
        .collect::<Result<_>>()?;
    all.extend_from_slice(tail);
    Ok(Disjointified {
        s1,
        s2_norm,
        s2_direct,
        constant,
        full: RectProduct::new(all)?,
    })
}
