//! Constructive approximations as convergence experiments: partition sums
//! converging to first-chaos integrals, disjointification of products, and
//! the smooth-product-cutoff pipeline.

mod disjointify;
mod gn;
mod independence;
mod lemma4;
mod partition;
mod smoothing;
mod theorem1;

pub use disjointify::{disjointify, Disjointified, S2_AGREEMENT};
pub use gn::{build_gn, increment_expectation, sum_expectation, BuiltGn, CenteringMethod, GnOptions};
pub use independence::{product_independence_check, IndependenceReport, PRODUCT_RULE_TOL};
pub use lemma4::{
    first_chaos_target, lemma4_distances, lemma4_error_terms, pure_jump_distance_oracle, DominationReport,
    Lemma4Terms, DOMINATION_POINTS,
};
pub use partition::Partition;
pub use smoothing::{CutoffFn, SmoothIndicator};
pub use theorem1::{build_stage, theorem1_pipeline, theorem1_schedule, PipelineApproximant, PipelineStage, Stage};

use crate::path_sim::MCEstimate;

/// Outcome of a convergence-trend check over a sequence of estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trend {
    /// Each value exceeds its predecessor by at most `k` combined stderr.
    pub monotone: bool,
    /// `last / first`.
    pub ratio: f64,
    pub pass: bool,
}

/// Non-increasing within `k·sqrt(se_a² + se_b²)` at every step, and
/// `last ≤ max_ratio·first`.
pub fn trend(estimates: &[MCEstimate], k: f64, max_ratio: f64) -> Trend {
    let monotone = estimates.windows(2).all(|w| {
        let combined = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        w[1].mean <= w[0].mean + k * combined
    });
    let ratio = match (estimates.first(), estimates.last()) {
        (Some(a), Some(b)) if a.mean > 0.0 => b.mean / a.mean,
        _ => f64::NAN,
    };
    Trend {
        monotone,
        ratio,
        pass: monotone && ratio <= max_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(mean: f64, stderr: f64) -> MCEstimate {
        MCEstimate {
            mean,
            stderr,
            n: 100,
            seed: 0,
        }
    }

    #[test]
    fn trend_gate() {
        let t = trend(&[est(1.0, 0.01), est(0.5, 0.01), est(0.51, 0.01), est(0.1, 0.01)], 2.0, 0.2);
        assert!(t.monotone && t.pass);
        let t = trend(&[est(1.0, 0.01), est(0.5, 0.01), est(0.6, 0.01)], 2.0, 0.8);
        assert!(!t.monotone && !t.pass);
        let t = trend(&[est(1.0, 0.01), est(0.5, 0.01)], 2.0, 0.2);
        assert!(t.monotone && !t.pass);
    }
}
