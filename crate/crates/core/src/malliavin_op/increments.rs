//! Smooth functionals expressed through path increments.
//!
//! With times `t_0 < ⋯ < t_n` and increments `Δ_0 = y_0`,
//! `Δ_j = y_j - y_{j-1}`, the form is
//!
//! ```text
//! f(y) = Π_j β(Δ_j) · Π_r ( Σ_{j ∈ cells_r} ψ_r(Δ_j) - e_r ),
//! ```
//!
//! where the cutoff `β` is optional (taken as 1 when absent). Shifting
//! `y_i` by `x` for every `i ≥ k` moves `Δ_k` alone, so the quotient
//! `(f(y + x·1_{i≥k}) - f(y))/x` costs `O(#factors)` once a path has been
//! prepared.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::profile::Profile;

/// One centered sum `Σ_{j ∈ cells} ψ(Δ_j) - centering`.
#[derive(Debug, Clone)]
pub struct IncrementFactor {
    pub profile: Arc<dyn Profile>,
    pub cells: Vec<usize>,
    pub centering: f64,
}

#[derive(Debug, Clone)]
pub struct IncrementForm {
    times: Vec<f64>,
    factors: Vec<IncrementFactor>,
    cutoff: Option<Arc<dyn Profile>>,
    owner: Vec<Option<usize>>,
}

impl IncrementForm {
    pub fn new(
        times: Vec<f64>,
        factors: Vec<IncrementFactor>,
        cutoff: Option<Arc<dyn Profile>>,
    ) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid("times", "need at least one time"));
        }
        if times[0] < 0.0 || times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("times", "must be nonnegative and strictly increasing"));
        }
        let mut owner = vec![None; times.len()];
        for (r, factor) in factors.iter().enumerate() {
            if !factor.centering.is_finite() {
                return Err(Error::invalid("centering", format!("{}", factor.centering)));
            }
            for &j in &factor.cells {
                if j >= times.len() {
                    return Err(Error::invalid("cells", format!("increment {j} out of range")));
                }
                if owner[j].replace(r).is_some() {
                    return Err(Error::invalid("cells", format!("increment {j} used by two factors")));
                }
            }
        }
        Ok(Self {
            times,
            factors,
            cutoff,
            owner,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn factors(&self) -> &[IncrementFactor] {
        &self.factors
    }

    pub fn cutoff(&self) -> Option<&Arc<dyn Profile>> {
        self.cutoff.as_ref()
    }

    fn beta(&self, d: f64) -> f64 {
        self.cutoff.as_ref().map_or(1.0, |b| b.value(d))
    }

    fn beta_derivative(&self, d: f64) -> f64 {
        self.cutoff.as_ref().map_or(0.0, |b| b.derivative(d))
    }

    /// Caches increments, cutoff values and factor sums at `y`.
    pub fn prepare(&self, y: &[f64]) -> IncrementState {
        let n = self.times.len();
        debug_assert_eq!(y.len(), n);
        let mut delta = Vec::with_capacity(n);
        let mut prev = 0.0;
        for &v in y {
            delta.push(v - prev);
            prev = v;
        }
        let beta: Vec<f64> = delta.iter().map(|&d| self.beta(d)).collect();
        let sums: Vec<f64> = self
            .factors
            .iter()
            .map(|f| f.cells.iter().map(|&j| f.profile.value(delta[j])).sum::<f64>() - f.centering)
            .collect();
        let (beta_prefix, beta_suffix) = prefix_suffix(&beta);
        let (sums_prefix, sums_suffix) = prefix_suffix(&sums);
        let value = beta_prefix[n] * sums_prefix[sums.len()];
        IncrementState {
            delta,
            beta_prefix,
            beta_suffix,
            sums,
            sums_prefix,
            sums_suffix,
            value,
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.prepare(y).value
    }

    /// `∇f(y)`, via `∂/∂y_i = ∂/∂Δ_i - ∂/∂Δ_{i+1}`.
    pub fn gradient(&self, y: &[f64], out: &mut [f64]) {
        let state = self.prepare(y);
        let n = self.times.len();
        let partials: Vec<f64> = (0..n).map(|k| state.partial(self, k)).collect();
        for i in 0..n {
            out[i] = partials[i] - if i + 1 < n { partials[i + 1] } else { 0.0 };
        }
    }
}

fn prefix_suffix(v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = v.len();
    let mut prefix = vec![1.0; n + 1];
    let mut suffix = vec![1.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * v[i];
    }
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] * v[i];
    }
    (prefix, suffix)
}

/// Per-path cache for [`IncrementForm`].
#[derive(Debug, Clone)]
pub struct IncrementState {
    delta: Vec<f64>,
    beta_prefix: Vec<f64>,
    beta_suffix: Vec<f64>,
    sums: Vec<f64>,
    sums_prefix: Vec<f64>,
    sums_suffix: Vec<f64>,
    value: f64,
}

impl IncrementState {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn increments(&self) -> &[f64] {
        &self.delta
    }

    fn beta_except(&self, k: usize) -> f64 {
        self.beta_prefix[k] * self.beta_suffix[k + 1]
    }

    fn sums_except(&self, r: usize) -> f64 {
        self.sums_prefix[r] * self.sums_suffix[r + 1]
    }

    fn all_sums(&self) -> f64 {
        self.sums_prefix[self.sums.len()]
    }

    /// `f` after adding `x` to `Δ_k`.
    pub fn shifted(&self, form: &IncrementForm, k: usize, x: f64) -> f64 {
        let d = self.delta[k];
        let beta = self.beta_except(k) * form.beta(d + x);
        let sums = match form.owner[k] {
            Some(r) => {
                let p = &form.factors[r].profile;
                let moved = self.sums[r] + (p.value(d + x) - p.value(d));
                self.sums_except(r) * moved
            }
            None => self.all_sums(),
        };
        beta * sums
    }

    /// `∂f/∂Δ_k`.
    pub fn partial(&self, form: &IncrementForm, k: usize) -> f64 {
        let d = self.delta[k];
        let mut out = form.beta_derivative(d) * self.beta_except(k) * self.all_sums();
        if let Some(r) = form.owner[k] {
            let beta_all = self.beta_prefix[self.delta.len()];
            out += beta_all * form.factors[r].profile.derivative(d) * self.sums_except(r);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{ExpBump, TimesIdentity};

    fn form(cutoff: bool) -> IncrementForm {
        let phi: Arc<dyn Profile> = Arc::new(ExpBump {
            center: 0.5,
            half_width: 1.5,
            height: 0.7,
        });
        let psi: Arc<dyn Profile> = Arc::new(TimesIdentity(phi));
        let cut: Option<Arc<dyn Profile>> = cutoff.then(|| {
            Arc::new(ExpBump {
                center: 0.0,
                half_width: 4.0,
                height: 1.0,
            }) as Arc<dyn Profile>
        });
        IncrementForm::new(
            vec![0.0, 0.5, 1.0, 1.5, 2.0],
            vec![
                IncrementFactor {
                    profile: psi.clone(),
                    cells: vec![1, 2],
                    centering: 0.1,
                },
                IncrementFactor {
                    profile: psi,
                    cells: vec![3, 4],
                    centering: -0.2,
                },
            ],
            cut,
        )
        .unwrap()
    }

    fn naive(form: &IncrementForm, y: &[f64]) -> f64 {
        let mut prev = 0.0;
        let mut delta = Vec::new();
        for &v in y {
            delta.push(v - prev);
            prev = v;
        }
        let mut out: f64 = delta.iter().map(|&d| form.beta(d)).product();
        for f in form.factors() {
            out *= f.cells.iter().map(|&j| f.profile.value(delta[j])).sum::<f64>() - f.centering;
        }
        out
    }

    #[test]
    fn shifted_matches_naive_evaluation() {
        for cutoff in [false, true] {
            let form = form(cutoff);
            let y = [0.0, 0.4, 1.1, 0.9, 1.7];
            let state = form.prepare(&y);
            assert!((state.value() - naive(&form, &y)).abs() < 1e-15);
            for k in 0..5 {
                let mut z = y;
                for v in z.iter_mut().skip(k) {
                    *v += 0.37;
                }
                let got = state.shifted(&form, k, 0.37);
                assert!((got - naive(&form, &z)).abs() < 1e-14, "k = {k}");
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for cutoff in [false, true] {
            let form = form(cutoff);
            let y = [0.0, 0.4, 1.1, 0.9, 1.7];
            let mut g = [0.0; 5];
            form.gradient(&y, &mut g);
            for i in 0..5 {
                let h = 1e-6;
                let mut a = y;
                let mut b = y;
                a[i] += h;
                b[i] -= h;
                let fd = (form.eval(&a) - form.eval(&b)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-7, "i = {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn overlapping_cells_are_rejected() {
        let phi: Arc<dyn Profile> = Arc::new(ExpBump {
            center: 1.0,
            half_width: 0.5,
            height: 1.0,
        });
        let f = |cells: Vec<usize>| IncrementFactor {
            profile: phi.clone(),
            cells,
            centering: 0.0,
        };
        assert!(IncrementForm::new(vec![0.0, 1.0], vec![f(vec![1]), f(vec![1])], None).is_err());
        assert!(IncrementForm::new(vec![0.0, 1.0], vec![f(vec![2])], None).is_err());
        assert!(IncrementForm::new(vec![1.0, 0.5], vec![], None).is_err());
    }
}
