//! A common interface for random variables with an evaluable derivative
//! field, so that norms and distances can mix smooth functionals with
//! chaos representations.

use std::sync::Arc;

use super::{DerivField, SmoothFunctional};
use crate::error::{Error, Result};
use crate::levy_model::Rect;
use crate::path_sim::Path;
use crate::random_measure::{eval_i1, eval_m, Kernel, TensorKernel};

/// A random variable `F` together with its derivative `D_{t,x}F`.
pub trait Functional: Send + Sync {
    /// Times at which the path must be observable.
    fn required_times(&self) -> Vec<f64>;

    /// Times at which `t ↦ D_{t,x}F` may jump; it is constant in between
    /// and vanishes after the last one.
    fn time_breakpoints(&self) -> Vec<f64>;

    /// Sizes at which `x ↦ D_{t,x}F` may be discontinuous.
    fn size_breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Standard error of any estimated centering constant inside `F`.
    fn centering_stderr(&self) -> f64 {
        0.0
    }

    fn realize<'a>(&'a self, path: &'a Path) -> Result<Box<dyn Realized + 'a>>;
}

/// `F` and `D_{t,x}F` on one path.
pub trait Realized {
    fn value(&self) -> f64;

    fn derivative(&self, t: f64, x: f64) -> f64;
}

impl Realized for DerivField<'_> {
    fn value(&self) -> f64 {
        DerivField::value(self)
    }

    fn derivative(&self, t: f64, x: f64) -> f64 {
        self.eval(t, x)
    }
}

impl Functional for SmoothFunctional {
    fn required_times(&self) -> Vec<f64> {
        self.times().to_vec()
    }

    fn time_breakpoints(&self) -> Vec<f64> {
        self.times().to_vec()
    }

    fn realize<'a>(&'a self, path: &'a Path) -> Result<Box<dyn Realized + 'a>> {
        Ok(Box::new(self.derivative_field(path)?))
    }
}

struct FirstChaos<'a> {
    kernel: &'a Kernel,
    value: f64,
}

impl Realized for FirstChaos<'_> {
    fn value(&self) -> f64 {
        self.value
    }

    fn derivative(&self, t: f64, x: f64) -> f64 {
        self.kernel.value(t, x)
    }
}

/// `I₁(k)` with `D_{t,x}I₁(k) = k(t, x)`.
impl Functional for Kernel {
    fn required_times(&self) -> Vec<f64> {
        self.time_breakpoints()
    }

    fn time_breakpoints(&self) -> Vec<f64> {
        Kernel::time_breakpoints(self)
    }

    fn size_breakpoints(&self) -> Vec<f64> {
        Kernel::size_breakpoints(self)
    }

    fn realize<'a>(&'a self, path: &'a Path) -> Result<Box<dyn Realized + 'a>> {
        Ok(Box::new(FirstChaos {
            kernel: self,
            value: eval_i1(path, self)?,
        }))
    }
}

struct TensorRealized<'a> {
    kernel: &'a TensorKernel,
    integrals: Vec<f64>,
}

impl Realized for TensorRealized<'_> {
    fn value(&self) -> f64 {
        self.integrals.iter().product()
    }

    fn derivative(&self, t: f64, x: f64) -> f64 {
        self.kernel.derivative_from_integrals(&self.integrals, t, x)
    }
}

/// `I_N(k₁ ⊗ ⋯ ⊗ k_N)` with its chaos derivative.
impl Functional for TensorKernel {
    fn required_times(&self) -> Vec<f64> {
        TensorKernel::time_breakpoints(self)
    }

    fn time_breakpoints(&self) -> Vec<f64> {
        TensorKernel::time_breakpoints(self)
    }

    fn size_breakpoints(&self) -> Vec<f64> {
        TensorKernel::size_breakpoints(self)
    }

    fn realize<'a>(&'a self, path: &'a Path) -> Result<Box<dyn Realized + 'a>> {
        Ok(Box::new(TensorRealized {
            kernel: self,
            integrals: self.first_integrals(path)?,
        }))
    }
}

/// `Π M(B_i)` over pairwise disjoint rectangles; the rectangles may share
/// time, in which case the product is still an element of a single chaos.
#[derive(Debug, Clone)]
pub struct RectProduct {
    rects: Vec<Rect>,
}

impl RectProduct {
    pub fn new(rects: Vec<Rect>) -> Result<Self> {
        if rects.is_empty() {
            return Err(Error::invalid("rect product", "needs at least one rectangle"));
        }
        for (i, a) in rects.iter().enumerate() {
            for b in &rects[i + 1..] {
                if a.intersect(b).is_some() {
                    return Err(Error::invalid("rect product", format!("{a} and {b} overlap")));
                }
            }
        }
        Ok(Self { rects })
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }
}

struct RectProductRealized<'a> {
    rects: &'a [Rect],
    values: Vec<f64>,
}

impl Realized for RectProductRealized<'_> {
    fn value(&self) -> f64 {
        self.values.iter().product()
    }

    fn derivative(&self, t: f64, x: f64) -> f64 {
        match self.rects.iter().position(|r| r.contains(t, x)) {
            Some(i) => self
                .values
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| v)
                .product(),
            None => 0.0,
        }
    }
}

impl Functional for RectProduct {
    fn required_times(&self) -> Vec<f64> {
        self.time_breakpoints()
    }

    fn time_breakpoints(&self) -> Vec<f64> {
        self.rects.iter().flat_map(|r| [r.t_lo(), r.t_hi()]).collect()
    }

    fn size_breakpoints(&self) -> Vec<f64> {
        self.rects.iter().flat_map(|r| [r.x_lo(), r.x_hi()]).collect()
    }

    fn realize<'a>(&'a self, path: &'a Path) -> Result<Box<dyn Realized + 'a>> {
        let values = self.rects.iter().map(|r| eval_m(path, r)).collect::<Result<_>>()?;
        Ok(Box::new(RectProductRealized {
            rects: &self.rects,
            values,
        }))
    }
}

/// `constant + Σ c_i F_i`.
#[derive(Clone, Default)]
pub struct Combination {
    terms: Vec<(f64, Arc<dyn Functional>)>,
    constant: f64,
}

impl Combination {
    pub fn new(terms: Vec<(f64, Arc<dyn Functional>)>, constant: f64) -> Self {
        Self { terms, constant }
    }

    /// `a - b`.
    pub fn difference(a: Arc<dyn Functional>, b: Arc<dyn Functional>) -> Self {
        Self::new(vec![(1.0, a), (-1.0, b)], 0.0)
    }
}

struct CombinationRealized<'a> {
    parts: Vec<(f64, Box<dyn Realized + 'a>)>,
    constant: f64,
}

impl Realized for CombinationRealized<'_> {
    fn value(&self) -> f64 {
        self.constant + self.parts.iter().map(|(c, r)| c * r.value()).sum::<f64>()
    }

    fn derivative(&self, t: f64, x: f64) -> f64 {
        self.parts.iter().map(|(c, r)| c * r.derivative(t, x)).sum()
    }
}

impl Functional for Combination {
    fn required_times(&self) -> Vec<f64> {
        self.terms.iter().flat_map(|(_, f)| f.required_times()).collect()
    }

    fn time_breakpoints(&self) -> Vec<f64> {
        self.terms.iter().flat_map(|(_, f)| f.time_breakpoints()).collect()
    }

    fn size_breakpoints(&self) -> Vec<f64> {
        self.terms.iter().flat_map(|(_, f)| f.size_breakpoints()).collect()
    }

    fn centering_stderr(&self) -> f64 {
        self.terms
            .iter()
            .map(|(c, f)| (c * f.centering_stderr()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn realize<'a>(&'a self, path: &'a Path) -> Result<Box<dyn Realized + 'a>> {
        let parts = self
            .terms
            .iter()
            .map(|(c, f)| Ok((*c, f.realize(path)?)))
            .collect::<Result<_>>()?;
        Ok(Box::new(CombinationRealized {
            parts,
            constant: self.constant,
        }))
    }
}
