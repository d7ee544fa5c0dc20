//! Chain rule for Lipschitz maps and mollification.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::functional::Realized;
use crate::error::{Error, Result};
use crate::quadrature::composite;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Random pairs used to spot-check a declared Lipschitz constant.
const LIPSCHITZ_CHECK_PAIRS: usize = 1000;

/// Panels per smooth piece of the mollifier integral on `[-1, 1]`.
const MOLLIFIER_PANELS: usize = 64;

/// A Lipschitz function `g` with constant `L_g`.
#[derive(Clone)]
pub struct LipschitzFn {
    g: RealFn,
    derivative: Option<RealFn>,
    lipschitz: f64,
    kinks: Vec<f64>,
}

impl fmt::Debug for LipschitzFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzFn")
            .field("lipschitz", &self.lipschitz)
            .field("differentiable", &self.derivative.is_some())
            .field("kinks", &self.kinks)
            .finish()
    }
}

impl LipschitzFn {
    /// `derivative` should be given when `g` is continuously differentiable;
    /// `kinks` lists points where `g` is not differentiable.
    pub fn new(g: RealFn, derivative: Option<RealFn>, lipschitz: f64, kinks: Vec<f64>) -> Result<Self> {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::invalid("lipschitz constant", format!("{lipschitz}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x11b5_c417);
        for _ in 0..LIPSCHITZ_CHECK_PAIRS {
            let a: f64 = rng.random_range(-10.0..10.0);
            let b: f64 = if rng.random::<bool>() {
                a + rng.random_range(-1e-3..1e-3)
            } else {
                rng.random_range(-10.0..10.0)
            };
            let (ga, gb) = (g(a), g(b));
            let slack = 1e-12 * (1.0 + ga.abs().max(gb.abs()));
            if (ga - gb).abs() > lipschitz * (a - b).abs() + slack {
                return Err(Error::invalid(
                    "lipschitz constant",
                    format!("|g({a}) - g({b})| = {} exceeds {lipschitz}·|a - b|", (ga - gb).abs()),
                ));
            }
        }
        Ok(Self {
            g,
            derivative,
            lipschitz,
            kinks,
        })
    }

    pub fn identity() -> Self {
        Self::new(Arc::new(|y| y), Some(Arc::new(|_| 1.0)), 1.0, Vec::new()).expect("identity is 1-Lipschitz")
    }

    pub fn abs() -> Self {
        Self::new(Arc::new(f64::abs), None, 1.0, vec![0.0]).expect("|y| is 1-Lipschitz")
    }

    pub fn sin() -> Self {
        Self::new(Arc::new(f64::sin), Some(Arc::new(f64::cos)), 1.0, Vec::new()).expect("sin is 1-Lipschitz")
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Arc::new(move |_| c), Some(Arc::new(|_| 0.0)), 0.0, Vec::new()).expect("constants are 0-Lipschitz")
    }

    /// `y ↦ slope·y + intercept`.
    pub fn affine(slope: f64, intercept: f64) -> Result<Self> {
        Self::new(
            Arc::new(move |y| slope * y + intercept),
            Some(Arc::new(move |_| slope)),
            slope.abs(),
            Vec::new(),
        )
    }

    pub fn eval(&self, y: f64) -> f64 {
        (self.g)(y)
    }

    pub fn derivative(&self, y: f64) -> Option<f64> {
        self.derivative.as_ref().map(|d| d(y))
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }
}

/// `(g(F + x·D_{t,x}F) - g(F))/x` for `x ≠ 0`.
pub fn chain_rule_jump(g: &LipschitzFn, field: &dyn Realized, t: f64, x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::invalid("x", "the jump chain rule needs a finite x != 0"));
    }
    let f = field.value();
    let d = field.derivative(t, x);
    Ok((g.eval(f + x * d) - g.eval(f)) / x)
}

/// Floating-point allowance for `|chain_rule_jump| ≤ L_g·|D_{t,x}F|`:
/// rounding in `F + x·D` and in the difference of `g` values.
pub fn jump_domination_slack(g: &LipschitzFn, field: &dyn Realized, t: f64, x: f64) -> f64 {
    let f = field.value();
    let d = field.derivative(t, x);
    let shifted = f + x * d;
    let scale = f.abs() + (x * d).abs() + g.eval(f).abs() + g.eval(shifted).abs();
    4.0 * f64::EPSILON * scale / x.abs()
}

/// `g′(F)·D_{t,0}F` for continuously differentiable `g`.
pub fn chain_rule_zero(g: &LipschitzFn, field: &dyn Realized, t: f64) -> Result<f64> {
    let f = field.value();
    let factor = g
        .derivative(f)
        .ok_or_else(|| Error::invalid("g", "the Gaussian chain rule needs a differentiable g"))?;
    if factor.abs() > g.lipschitz() + 1e-12 {
        return Err(Error::invalid(
            "g",
            format!("|g′(F)| = {} exceeds the Lipschitz constant {}", factor.abs(), g.lipschitz()),
        ));
    }
    Ok(factor * field.derivative(t, 0.0))
}

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

fn bump_derivative(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - u * u;
        (-1.0 / q).exp() * (-2.0 * u / (q * q))
    }
}

fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| composite(bump, -1.0, 1.0, MOLLIFIER_PANELS))
}

/// `∫_{-1}^{1} h(u) du`, with panel edges at `splits`.
fn integrate_pieces<H: Fn(f64) -> f64>(h: H, splits: &[f64]) -> f64 {
    let mut edges = vec![-1.0, 1.0];
    edges.extend(splits.iter().copied().filter(|u| u.abs() < 1.0));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    edges
        .windows(2)
        .map(|w| {
            let share = ((w[1] - w[0]) / 2.0 * MOLLIFIER_PANELS as f64).ceil().max(1.0) as usize;
            composite(&h, w[0], w[1], share)
        })
        .sum()
}

/// `g_N = g * ψ_N` with `ψ_N(z) = Nψ(Nz)` and `ψ ∝ exp(-1/(1 - z²))` on
/// `[-1, 1]`.
pub fn mollify(g: &LipschitzFn, n: u32) -> Result<LipschitzFn> {
    if n == 0 {
        return Err(Error::invalid("N", "must be at least 1"));
    }
    let nf = f64::from(n);
    let mass = bump_mass();
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Quadrature("mollifier normalization failed".into()));
    }
    let kinks = g.kinks.clone();
    let splits = move |y: f64| -> Vec<f64> { kinks.iter().map(|k| nf * (y - k)).collect() };
    let (inner, splits_v) = (g.clone(), splits.clone());
    let value: RealFn = Arc::new(move |y| {
        integrate_pieces(|u| inner.eval(y - u / nf) * bump(u), &splits_v(y)) / mass
    });
    let inner = g.clone();
    let derivative: RealFn = match &g.derivative {
        Some(_) => Arc::new(move |y| {
            integrate_pieces(|u| inner.derivative(y - u / nf).unwrap_or(0.0) * bump(u), &splits(y)) / mass
        }),
        None => Arc::new(move |y| {
            nf * integrate_pieces(|u| inner.eval(y - u / nf) * bump_derivative(u), &splits(y)) / mass
        }),
    };
    Ok(LipschitzFn {
        g: value,
        derivative: Some(derivative),
        lipschitz: g.lipschitz,
        kinks: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed {
        value: f64,
        derivative: f64,
    }

    impl Realized for Fixed {
        fn value(&self) -> f64 {
            self.value
        }
        fn derivative(&self, _: f64, _: f64) -> f64 {
            self.derivative
        }
    }

    #[test]
    fn lipschitz_check_rejects_understated_constant() {
        assert!(LipschitzFn::new(Arc::new(|y| 2.0 * y), None, 1.5, vec![]).is_err());
        assert!(LipschitzFn::affine(-2.0, 1.0).is_ok());
    }

    #[test]
    fn jump_rule_special_cases() {
        let field = Fixed {
            value: 0.3,
            derivative: -1.7,
        };
        let id = chain_rule_jump(&LipschitzFn::identity(), &field, 0.5, 0.8).unwrap();
        assert!((id - -1.7).abs() < 1e-15);
        assert_eq!(chain_rule_jump(&LipschitzFn::constant(2.0), &field, 0.5, 0.8).unwrap(), 0.0);
        assert!(chain_rule_jump(&LipschitzFn::abs(), &field, 0.5, 0.0).is_err());
        let a = chain_rule_jump(&LipschitzFn::abs(), &field, 0.5, 0.8).unwrap();
        assert!((a - ((0.3f64 - 1.36).abs() - 0.3) / 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_rule_needs_derivative() {
        let field = Fixed {
            value: 0.3,
            derivative: 2.0,
        };
        assert!(chain_rule_zero(&LipschitzFn::abs(), &field, 0.5).is_err());
        let s = chain_rule_zero(&LipschitzFn::sin(), &field, 0.5).unwrap();
        assert_eq!(s, 0.3f64.cos() * 2.0);
        assert_eq!(chain_rule_zero(&LipschitzFn::constant(1.0), &field, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn mollified_affine_is_unchanged() {
        let g = LipschitzFn::affine(1.5, -0.2).unwrap();
        for n in [1, 2, 8] {
            let gn = mollify(&g, n).unwrap();
            for y in [-3.0, -0.1, 0.0, 0.4, 2.5] {
                assert!((gn.eval(y) - g.eval(y)).abs() < 1e-10);
                assert!((gn.derivative(y).unwrap() - 1.5).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mollified_abs_bounds() {
        let g = LipschitzFn::abs();
        for n in [2, 8, 32] {
            let gn = mollify(&g, n).unwrap();
            for i in 0..=400 {
                let y = -2.0 + 4.0 * i as f64 / 400.0;
                assert!((gn.eval(y) - y.abs()).abs() <= 1.0 / f64::from(n) + 1e-10);
                assert!(gn.derivative(y).unwrap().abs() <= 1.0 + 1e-10);
            }
            assert!((gn.eval(1.0) - 1.0).abs() < 1e-10);
        }
    }
}
