use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Closed-open uniform grid on [x_lo, x_hi) with M nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialGrid {
    x_lo: f64,
    x_hi: f64,
    m: usize,
}

impl SpatialGrid {
    pub fn new(x_lo: f64, x_hi: f64, m: usize) -> Result<Self> {
        if m < 2 || !m.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("M must be even and at least 2, got {m}")));
        }
        if !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::InvalidGrid(format!("degenerate interval [{x_lo}, {x_hi}]")));
        }
        Ok(Self { x_lo, x_hi, m })
    }

    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }
    pub fn x_hi(&self) -> f64 {
        self.x_hi
    }
    pub fn len(&self) -> usize {
        self.m
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn length(&self) -> f64 {
        self.x_hi - self.x_lo
    }
    pub fn dx(&self) -> f64 {
        self.length() / self.m as f64
    }
    pub fn node(&self, i: usize) -> f64 {
        self.x_lo + i as f64 * self.dx()
    }
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.node(i)).collect()
    }
    /// Interior nodes x_1 .. x_{M-1} used by Dirichlet finite differences.
    pub fn interior_nodes(&self) -> Vec<f64> {
        (1..self.m).map(|i| self.node(i)).collect()
    }

    /// Centered angular frequencies 2π(j − M/2)/(x_hi − x_lo). On [−π, π)
    /// these are the integers j − M/2.
    pub fn frequencies(&self) -> FrequencyLadder {
        let scale = self.length() / (2.0 * PI);
        FrequencyLadder::centered(self.m, scale)
    }
}

/// Uniform grid on the auxiliary domain [−πL, πL).
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedGrid {
    l: f64,
    n: usize,
}

impl ExtendedGrid {
    pub fn new(l: f64, n: usize) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("N must be even and at least 2, got {n}")));
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidGrid(format!("L must be positive, got {l}")));
        }
        Ok(Self { l, n })
    }

    /// Grid on [−half_width, half_width) with half_width = πL.
    pub fn from_half_width(half_width: f64, n: usize) -> Result<Self> {
        Self::new(half_width / PI, n)
    }

    pub fn l(&self) -> f64 {
        self.l
    }
    pub fn half_width(&self) -> f64 {
        PI * self.l
    }
    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dp(&self) -> f64 {
        2.0 * self.half_width() / self.n as f64
    }
    pub fn node(&self, j: usize) -> f64 {
        -self.half_width() + j as f64 * self.dp()
    }
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }
    pub fn frequencies(&self) -> FrequencyLadder {
        FrequencyLadder::centered(self.n, self.l)
    }
}

/// Centered frequencies (j − n/2)/scale, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyLadder {
    values: Vec<f64>,
}

impl FrequencyLadder {
    pub fn centered(n: usize, scale: f64) -> Self {
        let half = (n / 2) as f64;
        Self { values: (0..n).map(|j| (j as f64 - half) / scale).collect() }
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_grid_on_minus_pi_pi() {
        let g = SpatialGrid::new(-PI, PI, 4).unwrap();
        let want = [-PI, -PI / 2.0, 0.0, PI / 2.0];
        for (a, b) in g.nodes().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((g.dx() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn grid_steps_from_experiments() {
        assert_eq!(SpatialGrid::new(0.0, 2.0, 32).unwrap().dx(), 1.0 / 16.0);
        assert_eq!(SpatialGrid::new(-20.0, 20.0, 128).unwrap().dx(), 40.0 / 128.0);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(SpatialGrid::new(0.0, 1.0, 3).is_err());
        assert!(SpatialGrid::new(0.0, 1.0, 0).is_err());
        assert!(SpatialGrid::new(1.0, 1.0, 4).is_err());
        assert!(ExtendedGrid::new(1.0, 5).is_err());
        assert!(ExtendedGrid::new(-1.0, 4).is_err());
    }

    #[test]
    fn ladders() {
        let g = SpatialGrid::new(-PI, PI, 4).unwrap();
        assert_eq!(g.frequencies().values(), &[-2.0, -1.0, 0.0, 1.0]);
        let p = ExtendedGrid::new(2.0, 4).unwrap();
        assert_eq!(p.frequencies().values(), &[-1.0, -0.5, 0.0, 0.5]);
        let g8 = SpatialGrid::new(-PI, PI, 8).unwrap();
        let f = g8.frequencies();
        assert!((f.values()[0] + 4.0).abs() < 1e-14 && (f.values()[7] - 3.0).abs() < 1e-14);
        assert!((f.max_abs() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn extended_endpoints() {
        let p = ExtendedGrid::from_half_width(10.0, 256).unwrap();
        assert!((p.node(0) + 10.0).abs() < 1e-14);
        assert!((p.node(255) - (10.0 - p.dp())).abs() < 1e-12);
        assert!((p.dp() - 10.0 / 128.0).abs() < 1e-15);
    }
}
