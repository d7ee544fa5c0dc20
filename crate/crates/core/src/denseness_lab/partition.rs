use crate::error::{Error, Result};

/// `s = t_0 < t_1 < ⋯ < t_k = u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    points: Vec<f64>,
}

impl Partition {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("partition", "needs at least two points"));
        }
        if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("partition", "points must be finite and strictly increasing"));
        }
        Ok(Self { points })
    }

    /// `cells` equal cells of `(s, u]`.
    pub fn uniform(s: f64, u: f64, cells: usize) -> Result<Self> {
        if cells == 0 || !(s < u) {
            return Err(Error::invalid("partition", format!("({s}, {u}] with {cells} cells")));
        }
        let width = u - s;
        let mut points: Vec<f64> = (0..cells).map(|j| s + width * j as f64 / cells as f64).collect();
        points.push(u);
        Self::new(points)
    }

    /// Union of uniform partitions of each interval with mesh at most
    /// `mesh`, together with the extra points.
    pub fn covering(intervals: &[(f64, f64)], mesh: f64, extra: &[f64]) -> Result<Self> {
        if !(mesh > 0.0) {
            return Err(Error::invalid("mesh", format!("{mesh}")));
        }
        let mut points: Vec<f64> = extra.to_vec();
        for &(s, u) in intervals {
            let cells = ((u - s) / mesh * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            points.extend(Self::uniform(s, u, cells)?.points);
        }
        points.sort_by(f64::total_cmp);
        points.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn start(&self) -> f64 {
        self.points[0]
    }

    pub fn end(&self) -> f64 {
        *self.points.last().expect("partition is nonempty")
    }

    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }

    /// `max_j (t_j - t_{j-1})`.
    pub fn mesh(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Cell lengths `t_j - t_{j-1}`.
    pub fn lengths(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1] - w[0]).collect()
    }
}
