//! Experiment configuration files.
//!
//! A config is a TOML document:
//!
//! ```toml
//! experiment = "lemma4-convergence"
//! seed = 7
//! replicates = 100000
//! horizon = 1.0
//! gate = 4.0                      # optional, default 4
//!
//! [triplet]
//! drift = 0.0                     # optional, default 0
//! sigma = 0.5
//! atoms = [[1.0, 2.0]]            # [position, intensity] pairs
//! # or: density = { shape = "uniform", rate = 2.0, lo = 0.5, hi = 1.5, panels = 8 }
//!
//! [params]                        # experiment specific, all optional
//! cells = [4, 16, 64, 256]
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::levy_model::{JumpDensity, JumpMeasure, LevyTriplet, Rect};
use crate::profile::{CubicBump, ExpBump, Profile};

/// Default statistical gate in standard errors.
pub const DEFAULT_GATE: f64 = 4.0;

/// Experiment names with one-line descriptions.
pub const EXPERIMENTS: [(&str, &str); 11] = [
    ("verify-isometry", "E[M(r1)M(r2)] against m(r1 ∩ r2) for random rectangle pairs"),
    ("verify-product-rule", "D(FG) = G·DF + F·DG + x·DF·DG for random smooth pairs"),
    ("verify-chain-rule", "jump-part domination for |y| and the Gaussian part for sin"),
    ("chaos-oracle-vs-mc", "second moments of elementary chaos against the permanent formula"),
    ("s2-norm", "disjointification remainder: closed form, enumeration and Monte Carlo"),
    ("lemma4-convergence", "D12 distance of partition sums to a first-chaos integral over meshes"),
    ("lemma4-error-terms", "the two error integrals of the partition-sum approximation"),
    ("theorem1-pipeline", "smoothing, partition sums and cutoff approximating a product of M"),
    ("d12-decomposition", "FULL = ZERO_PART + JUMP_PART - L2 pathwise and on the oracle"),
    ("centered-inequality", "E F² ≤ E∫|DF|² dm for centered functionals"),
    ("mollifier-bounds", "sup |g_N - g| ≤ L/N and sup |g_N′| ≤ L on a grid"),
];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    seed: u64,
    replicates: u64,
    horizon: f64,
    gate: Option<f64>,
    triplet: TripletSpec,
    #[serde(default)]
    params: Option<toml::Table>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripletSpec {
    #[serde(default)]
    pub drift: f64,
    pub sigma: f64,
    pub atoms: Option<Vec<[f64; 2]>>,
    pub density: Option<DensitySpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub shape: DensityShape,
    pub rate: f64,
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "default_panels")]
    pub panels: usize,
}

fn default_panels() -> usize {
    16
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityShape {
    Uniform,
}

impl TripletSpec {
    pub fn build(&self) -> Result<LevyTriplet> {
        let nu = match (&self.atoms, &self.density) {
            (Some(_), Some(_)) => return Err(Error::Config("give either atoms or density, not both".into())),
            (Some(atoms), None) => JumpMeasure::atoms(atoms.iter().map(|a| (a[0], a[1])))?,
            (None, Some(d)) => match d.shape {
                DensityShape::Uniform => JumpMeasure::Density(JumpDensity::uniform(d.rate, d.lo, d.hi, d.panels)?),
            },
            (None, None) => JumpMeasure::empty(),
        };
        LevyTriplet::new(self.drift, self.sigma, nu)
    }
}

/// A size profile selector.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSpec {
    ExpBump { center: f64, half_width: f64, height: f64 },
    CubicBump { center: f64, half_width: f64, height: f64 },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<Arc<dyn Profile>> {
        let (c, w, h) = match *self {
            ProfileSpec::ExpBump { center, half_width, height } | ProfileSpec::CubicBump { center, half_width, height } => {
                (center, half_width, height)
            }
        };
        if !(w > 0.0 && c.is_finite() && h.is_finite()) {
            return Err(Error::Config(format!("profile {self:?} needs a positive finite half width")));
        }
        Ok(match self {
            ProfileSpec::ExpBump { .. } => Arc::new(ExpBump {
                center: c,
                half_width: w,
                height: h,
            }),
            ProfileSpec::CubicBump { .. } => Arc::new(CubicBump {
                center: c,
                half_width: w,
                height: h,
            }),
        })
    }
}

/// The bump with `φ(1) = 0.7` supported in `[0.5, 1.5]`.
fn default_phi() -> ProfileSpec {
    ProfileSpec::ExpBump {
        center: 1.0,
        half_width: 0.5,
        height: 0.7,
    }
}

/// `[t_lo, t_hi, x_lo, x_hi]`.
pub type RectSpec = [f64; 4];

pub fn build_rect(r: &RectSpec) -> Result<Rect> {
    Rect::new(r[0], r[1], r[2], r[3])
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsometryParams {
    pub pairs: usize,
    /// Sizes are drawn from `[-size_range, size_range]`.
    pub size_range: f64,
}

impl Default for IsometryParams {
    fn default() -> Self {
        Self {
            pairs: 10,
            size_range: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProductRuleParams {
    pub pairs: usize,
    pub points: usize,
    /// Largest number of observation times per functional.
    pub max_times: usize,
    pub tolerance: f64,
}

impl Default for ProductRuleParams {
    fn default() -> Self {
        Self {
            pairs: 20,
            points: 10_000,
            max_times: 3,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainRuleParams {
    pub points: usize,
    pub zero_tolerance: f64,
}

impl Default for ChainRuleParams {
    fn default() -> Self {
        Self {
            points: 10_000,
            zero_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChaosParams {
    /// Each element: `[coefficient, [rect, …]]` flattened as a coefficient
    /// list and a rectangle list per element.
    pub coefficients: Vec<f64>,
    pub elements: Vec<Vec<RectSpec>>,
}

impl Default for ChaosParams {
    fn default() -> Self {
        Self {
            coefficients: vec![1.0, 0.5, 2.0, 1.0, -1.5],
            elements: vec![
                vec![[0.0, 1.0, -0.7, 1.2]],
                vec![[0.0, 0.5, -1.0, 0.5], [1.0, 2.0, 0.5, 1.5]],
                vec![[0.5, 1.5, -0.2, 0.2], [2.0, 3.0, -1.0, -0.25]],
                vec![[0.0, 1.0, 0.5, 1.5], [1.0, 2.0, -1.0, 0.3], [2.0, 3.0, -0.6, 1.1]],
                vec![[0.2, 0.6, -0.8, -0.3], [0.6, 1.9, -0.1, 1.5], [2.5, 3.0, 0.9, 1.1]],
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct S2Params {
    pub interval: [f64; 2],
    pub sizes: Vec<[f64; 2]>,
    /// `(m, N)` pairs for the closed form against enumeration.
    pub exact: Vec<[usize; 2]>,
    /// Cell counts for the Monte Carlo check with `m = 2`.
    pub mc_cells: Vec<usize>,
    /// The formula at `N = decay_cells` must be below `decay_ratio` of `N = 2`.
    pub decay_cells: usize,
    pub decay_ratio: f64,
}

impl Default for S2Params {
    fn default() -> Self {
        Self {
            interval: [0.0, 1.0],
            sizes: vec![[0.5, 1.5], [-1.0, -0.25], [-0.25, 0.25]],
            exact: vec![[2, 2], [2, 8], [3, 4]],
            mc_cells: vec![2, 4],
            decay_cells: 256,
            decay_ratio: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lemma4Params {
    pub phi: ProfileSpec,
    pub interval: [f64; 2],
    pub cells: Vec<usize>,
    /// Required `last / first` ratio of the distances.
    pub ratio: f64,
    /// Trend tolerance in combined standard errors.
    pub trend_k: f64,
}

impl Default for Lemma4Params {
    fn default() -> Self {
        Self {
            phi: default_phi(),
            interval: [0.0, 1.0],
            cells: vec![4, 16, 64, 256],
            ratio: 0.2,
            trend_k: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorTermsParams {
    pub phi: ProfileSpec,
    pub interval: [f64; 2],
    pub cells: Vec<usize>,
    pub ratio: f64,
    pub trend_k: f64,
}

impl Default for ErrorTermsParams {
    fn default() -> Self {
        Self {
            phi: default_phi(),
            interval: [0.0, 1.0],
            cells: vec![4, 16, 64],
            ratio: 0.2,
            trend_k: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Theorem1Params {
    pub rects: Vec<RectSpec>,
    /// `[δ, mesh, cutoff]` per stage, coarse to fine.
    pub stages: Vec<[f64; 3]>,
    pub ratio: f64,
    pub trend_k: f64,
}

impl Default for Theorem1Params {
    fn default() -> Self {
        Self {
            rects: vec![[0.0, 1.0, 0.5, 1.5], [1.0, 2.0, -1.0, -0.25]],
            stages: vec![[0.25, 0.25, 1.0], [0.1, 1.0 / 16.0, 2.0], [0.02, 1.0 / 64.0, 4.0]],
            ratio: 0.3,
            trend_k: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecompositionParams {
    pub paths: u64,
    pub tolerance: f64,
}

impl Default for DecompositionParams {
    fn default() -> Self {
        Self {
            paths: 2_000,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CenteredParams {
    pub phi: ProfileSpec,
    pub cells: usize,
}

impl Default for CenteredParams {
    fn default() -> Self {
        Self {
            phi: default_phi(),
            cells: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MollifierParams {
    pub levels: Vec<u32>,
    pub grid: usize,
    /// The grid covers `[-range, range]`.
    pub range: f64,
    pub tolerance: f64,
}

impl Default for MollifierParams {
    fn default() -> Self {
        Self {
            levels: vec![2, 8, 32],
            grid: 10_000,
            range: 3.0,
            tolerance: 1e-10,
        }
    }
}

/// Typed parameters of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Isometry(IsometryParams),
    ProductRule(ProductRuleParams),
    ChainRule(ChainRuleParams),
    Chaos(ChaosParams),
    S2(S2Params),
    Lemma4(Lemma4Params),
    ErrorTerms(ErrorTermsParams),
    Theorem1(Theorem1Params),
    Decomposition(DecompositionParams),
    Centered(CenteredParams),
    Mollifier(MollifierParams),
}

/// A validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    pub replicates: u64,
    pub horizon: f64,
    pub gate: f64,
    pub triplet: TripletSpec,
    pub params: Params,
}

fn typed<T: for<'de> Deserialize<'de> + Default>(name: &str, table: Option<toml::Table>) -> Result<T> {
    match table {
        None => Ok(T::default()),
        Some(t) => toml::Value::Table(t)
            .try_into()
            .map_err(|e| Error::Config(format!("[params] for {name}: {e}"))),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let name = raw.experiment.as_str();
        let params = match name {
            "verify-isometry" => Params::Isometry(typed(name, raw.params)?),
            "verify-product-rule" => Params::ProductRule(typed(name, raw.params)?),
            "verify-chain-rule" => Params::ChainRule(typed(name, raw.params)?),
            "chaos-oracle-vs-mc" => Params::Chaos(typed(name, raw.params)?),
            "s2-norm" => Params::S2(typed(name, raw.params)?),
            "lemma4-convergence" => Params::Lemma4(typed(name, raw.params)?),
            "lemma4-error-terms" => Params::ErrorTerms(typed(name, raw.params)?),
            "theorem1-pipeline" => Params::Theorem1(typed(name, raw.params)?),
            "d12-decomposition" => Params::Decomposition(typed(name, raw.params)?),
            "centered-inequality" => Params::Centered(typed(name, raw.params)?),
            "mollifier-bounds" => Params::Mollifier(typed(name, raw.params)?),
            other => return Err(Error::Config(format!("unknown experiment `{other}`"))),
        };
        let gate = raw.gate.unwrap_or(DEFAULT_GATE);
        if !(gate > 0.0 && gate.is_finite()) {
            return Err(Error::Config(format!("gate must be positive, got {gate}")));
        }
        if raw.replicates < 2 {
            return Err(Error::Config(format!("replicates must be at least 2, got {}", raw.replicates)));
        }
        if !(raw.horizon > 0.0 && raw.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {}", raw.horizon)));
        }
        let config = Self {
            experiment: raw.experiment,
            seed: raw.seed,
            replicates: raw.replicates,
            horizon: raw.horizon,
            gate,
            triplet: raw.triplet,
            params,
        };
        config
            .triplet
            .build()
            .map_err(|e| Error::Config(format!("[triplet]: {e}")))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn build_triplet(&self) -> Result<Arc<LevyTriplet>> {
        Ok(Arc::new(self.triplet.build()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "s2-norm"
seed = 1
replicates = 100
horizon = 1.0

[triplet]
sigma = 1.0
atoms = [[1.0, 2.0], [-0.5, 1.0]]
"#;

    #[test]
    fn defaults_apply() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.gate, DEFAULT_GATE);
        assert_eq!(c.params, Params::S2(S2Params::default()));
        assert_eq!(c.build_triplet().unwrap().nu().total_mass(), 3.0);
    }

    #[test]
    fn params_override() {
        let text = format!("{MINIMAL}\n[params]\nmc_cells = [2]\n");
        let c = ExperimentConfig::from_toml(&text).unwrap();
        let Params::S2(p) = c.params else { panic!() };
        assert_eq!(p.mc_cells, vec![2]);
        assert_eq!(p.decay_cells, 256);
    }

    #[test]
    fn rejects_bad_documents() {
        for bad in [
            MINIMAL.replace("seed = 1\n", ""),
            MINIMAL.replace("s2-norm", "no-such-experiment"),
            format!("{MINIMAL}\nextra = 3\n"),
            format!("{MINIMAL}\n[params]\nunknown_knob = 1\n"),
            MINIMAL.replace("sigma = 1.0", "sigma = -1.0"),
            MINIMAL.replace("replicates = 100", "replicates = 1"),
            "not toml at all [".to_string(),
        ] {
            assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn every_listed_experiment_parses() {
        for (name, _) in EXPERIMENTS {
            let text = MINIMAL.replace("s2-norm", name);
            assert_eq!(ExperimentConfig::from_toml(&text).unwrap().experiment, name);
        }
    }
}
