//! The operator `D` on smooth functionals `F = f(X_{t_1}, …, X_{t_n})`.
//!
//! On the Gaussian atom,
//! `D_{t,0}F = Σ_i ∂_i f(X_{t_1}, …, X_{t_n})·1_{[0,t_i]}(t)`; off it, `D_{t,x}F`
//! is the increment quotient
//! `(f(X_{t_1} + x·1_{[0,t_1]}(t), …) - f(X_{t_1}, …))/x`, the effect of
//! adding a jump of size `x` at time `t`. Both are piecewise constant in `t`
//! with breakpoints at the `t_i` and vanish for `t > t_n`.

mod chain;
mod functional;
mod increments;
mod norm;

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use chain::{chain_rule_jump, chain_rule_zero, jump_domination_slack, mollify, LipschitzFn};
pub use functional::{Combination, Functional, Realized, RectProduct};
pub use increments::{IncrementFactor, IncrementForm, IncrementState};
pub use norm::{
    d12_distance_sq, d12_norm_sq_mc, d12_norms_mc, path_norm, MIntegrator, PathNorm,
};

use crate::error::{Error, Result};
use crate::path_sim::Path;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Points used by the finite-difference gradient check.
const GRADIENT_CHECK_POINTS: usize = 20;
const GRADIENT_CHECK_STEP: f64 = 1e-5;
const GRADIENT_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothnessClass {
    /// Smooth with `f ≡ 0` outside `[-bound, bound]ⁿ`: a genuine smooth
    /// random variable.
    CompactSupportSmooth { bound: f64 },
    /// Continuously differentiable; for evaluation only.
    C1Extended,
}

#[derive(Clone)]
enum Repr {
    General { f: ScalarFn, grad: GradientFn },
    Increments(Arc<IncrementForm>),
}

/// `F = f(X_{t_1}, …, X_{t_n})` with an explicit gradient.
#[derive(Clone)]
pub struct SmoothFunctional {
    times: Vec<f64>,
    class: SmoothnessClass,
    repr: Repr,
}

impl fmt::Debug for SmoothFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.repr {
            Repr::General { .. } => "general",
            Repr::Increments(_) => "increments",
        };
        f.debug_struct("SmoothFunctional")
            .field("times", &self.times)
            .field("class", &self.class)
            .field("repr", &kind)
            .finish()
    }
}

impl SmoothFunctional {
    /// Builds `f(X_{t_1}, …)` and checks `grad` against central differences.
    pub fn new(times: Vec<f64>, f: ScalarFn, grad: GradientFn, class: SmoothnessClass) -> Result<Self> {
        let out = Self {
            times,
            class,
            repr: Repr::General { f, grad },
        };
        out.validate()?;
        Ok(out)
    }

    pub fn from_increments(form: IncrementForm, class: SmoothnessClass) -> Result<Self> {
        let out = Self {
            times: form.times().to_vec(),
            class,
            repr: Repr::Increments(Arc::new(form)),
        };
        out.validate()?;
        Ok(out)
    }

    /// `f(X_T) = X_T`.
    pub fn identity(time: f64) -> Result<Self> {
        Self::new(
            vec![time],
            Arc::new(|y| y[0]),
            Arc::new(|_, g| g[0] = 1.0),
            SmoothnessClass::C1Extended,
        )
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn class(&self) -> SmoothnessClass {
        self.class
    }

    pub fn dimension(&self) -> usize {
        self.times.len()
    }

    pub fn increment_form(&self) -> Option<&IncrementForm> {
        match &self.repr {
            Repr::Increments(form) => Some(form),
            Repr::General { .. } => None,
        }
    }

    pub fn eval_f(&self, y: &[f64]) -> f64 {
        match &self.repr {
            Repr::General { f, .. } => f(y),
            Repr::Increments(form) => form.eval(y),
        }
    }

    pub fn eval_grad(&self, y: &[f64], out: &mut [f64]) {
        match &self.repr {
            Repr::General { grad, .. } => grad(y, out),
            Repr::Increments(form) => form.gradient(y, out),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if n == 0 {
            return Err(Error::invalid("times", "need at least one time"));
        }
        if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || self.times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("times", "must be finite, nonnegative and non-decreasing"));
        }
        let radius = match self.class {
            SmoothnessClass::CompactSupportSmooth { bound } => {
                if !(bound > 0.0 && bound.is_finite()) {
                    return Err(Error::invalid("bound", format!("{bound}")));
                }
                bound
            }
            SmoothnessClass::C1Extended => 2.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_f11e);
        let mut y = vec![0.0; n];
        let mut grad = vec![0.0; n];
        let mut probe = vec![0.0; n];
        let h = GRADIENT_CHECK_STEP;
        for _ in 0..GRADIENT_CHECK_POINTS {
            for v in y.iter_mut() {
                *v = rng.random_range(-radius..radius);
            }
            self.eval_grad(&y, &mut grad);
            let scale = grad.iter().fold(1.0f64, |m, g| m.max(g.abs()));
            for i in 0..n {
                probe.copy_from_slice(&y);
                probe[i] = y[i] + h;
                let up = self.eval_f(&probe);
                probe[i] = y[i] - h;
                let down = self.eval_f(&probe);
                let fd = (up - down) / (2.0 * h);
                if !((fd - grad[i]).abs() <= GRADIENT_CHECK_TOL * scale) {
                    return Err(Error::invalid(
                        "gradient",
                        format!("component {i} at {y:?}: finite difference {fd} vs supplied {}", grad[i]),
                    ));
                }
            }
        }
        if let SmoothnessClass::CompactSupportSmooth { bound } = self.class {
            for _ in 0..GRADIENT_CHECK_POINTS {
                for v in y.iter_mut() {
                    *v = rng.random_range(-2.0 * bound..2.0 * bound);
                }
                let i = rng.random_range(0..n);
                let outside = bound * (1.0 + rng.random::<f64>());
                y[i] = if rng.random::<bool>() { outside } else { -outside };
                let v = self.eval_f(&y);
                if v != 0.0 {
                    return Err(Error::invalid(
                        "bound",
                        format!("f = {v} at {y:?}, outside the declared box [-{bound}, {bound}]"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `(X_{t_1}, …, X_{t_n})` on `path`.
    pub fn values_on(&self, path: &Path) -> Result<Vec<f64>> {
        self.times.iter().map(|&t| path.value_at(t)).collect()
    }

    pub fn derivative_field(&self, path: &Path) -> Result<DerivField<'_>> {
        let y = self.values_on(path)?;
        let state = match &self.repr {
            Repr::General { f, grad } => {
                let n = y.len();
                let mut g = vec![0.0; n];
                grad(&y, &mut g);
                let mut suffix = vec![0.0; n + 1];
                for i in (0..n).rev() {
                    suffix[i] = suffix[i + 1] + g[i];
                }
                FieldState::General {
                    value: f(&y),
                    suffix,
                    scratch: RefCell::new(vec![0.0; n]),
                }
            }
            Repr::Increments(form) => FieldState::Increments(form.prepare(&y)),
        };
        Ok(DerivField {
            functional: self,
            y,
            state,
        })
    }

    /// `F·G` as a functional of the merged time list.
    pub fn product(&self, other: &SmoothFunctional) -> Result<SmoothFunctional> {
        let mut order: Vec<(f64, usize, usize)> = self
            .times
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, 0, i))
            .chain(other.times.iter().enumerate().map(|(i, &t)| (t, 1, i)))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut map_a = vec![0; self.times.len()];
        let mut map_b = vec![0; other.times.len()];
        for (pos, &(_, side, i)) in order.iter().enumerate() {
            if side == 0 {
                map_a[i] = pos;
            } else {
                map_b[i] = pos;
            }
        }
        let times: Vec<f64> = order.iter().map(|o| o.0).collect();
        let class = match (self.class, other.class) {
            (
                SmoothnessClass::CompactSupportSmooth { bound: a },
                SmoothnessClass::CompactSupportSmooth { bound: b },
            ) => SmoothnessClass::CompactSupportSmooth { bound: a.max(b) },
            _ => SmoothnessClass::C1Extended,
        };
        let (fa, fb) = (self.clone(), other.clone());
        let (ma, mb) = (map_a.clone(), map_b.clone());
        let f: ScalarFn = Arc::new(move |y| {
            let ya: Vec<f64> = ma.iter().map(|&p| y[p]).collect();
            let yb: Vec<f64> = mb.iter().map(|&p| y[p]).collect();
            fa.eval_f(&ya) * fb.eval_f(&yb)
        });
        let (fa, fb) = (self.clone(), other.clone());
        let grad: GradientFn = Arc::new(move |y, out| {
            let ya: Vec<f64> = map_a.iter().map(|&p| y[p]).collect();
            let yb: Vec<f64> = map_b.iter().map(|&p| y[p]).collect();
            let (va, vb) = (fa.eval_f(&ya), fb.eval_f(&yb));
            let mut ga = vec![0.0; ya.len()];
            let mut gb = vec![0.0; yb.len()];
            fa.eval_grad(&ya, &mut ga);
            fb.eval_grad(&yb, &mut gb);
            out.iter_mut().for_each(|v| *v = 0.0);
            for (i, &p) in map_a.iter().enumerate() {
                out[p] += ga[i] * vb;
            }
            for (i, &p) in map_b.iter().enumerate() {
                out[p] += gb[i] * va;
            }
        });
        SmoothFunctional::new(times, f, grad, class)
    }
}

enum FieldState {
    General {
        value: f64,
        suffix: Vec<f64>,
        scratch: RefCell<Vec<f64>>,
    },
    Increments(IncrementState),
}

/// `(t, x) ↦ D_{t,x}F` on one path.
pub struct DerivField<'a> {
    functional: &'a SmoothFunctional,
    y: Vec<f64>,
    state: FieldState,
}

impl DerivField<'_> {
    /// `F` on the path.
    pub fn value(&self) -> f64 {
        match &self.state {
            FieldState::General { value, .. } => *value,
            FieldState::Increments(s) => s.value(),
        }
    }

    pub fn path_values(&self) -> &[f64] {
        &self.y
    }

    /// Index of the first functional time `t_k ≥ t`.
    fn first_affected(&self, t: f64) -> usize {
        self.functional.times.partition_point(|&ti| ti < t)
    }

    /// `D_{t,x}F`.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let k = self.first_affected(t);
        if k == self.y.len() {
            return 0.0;
        }
        match &self.state {
            FieldState::General { value, suffix, scratch } => {
                if x == 0.0 {
                    return suffix[k];
                }
                let Repr::General { f, .. } = &self.functional.repr else {
                    unreachable!("general state implies general representation")
                };
                let mut z = scratch.borrow_mut();
                z.copy_from_slice(&self.y);
                for v in z.iter_mut().skip(k) {
                    *v += x;
                }
                (f(&z) - value) / x
            }
            FieldState::Increments(state) => {
                let Repr::Increments(form) = &self.functional.repr else {
                    unreachable!("increment state implies increment representation")
                };
                if x == 0.0 {
                    state.partial(form, k)
                } else {
                    (state.shifted(form, k, x) - state.value()) / x
                }
            }
        }
    }
}

/// `D_{t,x}F` on `path`.
pub fn eval_d(functional: &SmoothFunctional, path: &Path, t: f64, x: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid("t", format!("{t} (must be >= 0)")));
    }
    Ok(functional.derivative_field(path)?.eval(t, x))
}

/// `(D_{t,x}(FG), G·D_{t,x}F + F·D_{t,x}G + x·D_{t,x}F·D_{t,x}G)`.
pub fn product_rule_check(
    f: &SmoothFunctional,
    g: &SmoothFunctional,
    path: &Path,
    t: f64,
    x: f64,
) -> Result<(f64, f64)> {
    let fg = f.product(g)?;
    let lhs = eval_d(&fg, path, t, x)?;
    let df = f.derivative_field(path)?;
    let dg = g.derivative_field(path)?;
    let (a, b) = (df.eval(t, x), dg.eval(t, x));
    let rhs = dg.value() * a + df.value() * b + x * a * b;
    Ok((lhs, rhs))
}
