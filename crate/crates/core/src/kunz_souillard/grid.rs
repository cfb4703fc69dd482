use crate::{Error, Result};

/// Midpoint grid `x_j = −X + (j + ½)h`, `h = 2X/N`, `N` even so that 0 is a
/// cell edge and never a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealGrid {
    half_width: f64,
    points: usize,
}

impl RealGrid {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidParameter {
                name: "grid_x",
                reason: format!("half width must be positive, got {half_width}"),
            });
        }
        if points < 2 || !points.is_multiple_of(2) {
            return Err(Error::InvalidParameter {
                name: "grid_n",
                reason: format!("point count must be even and at least 2, got {points}"),
            });
        }
        Ok(Self { half_width, points })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + (j as f64 + 0.5) * self.spacing()
    }

    /// Left edge of cell `j`; `edge(N)` is `X`.
    pub fn edge(&self, j: usize) -> f64 {
        if 2 * j == self.points {
            return 0.0;
        }
        -self.half_width + j as f64 * self.spacing()
    }

    /// Cell containing `x`, clamped to the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let j = ((x + self.half_width) / self.spacing()).floor();
        (j.max(0.0) as usize).min(self.points - 1)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.node(j)).collect()
    }

    /// Same spacing, twice the half width.
    pub fn widened(&self) -> Self {
        Self {
            half_width: 2.0 * self.half_width,
            points: 2 * self.points,
        }
    }

    /// Same half width, half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            half_width: self.half_width,
            points: 2 * self.points,
        }
    }
}

/// Piecewise-constant function on a [`RealGrid`] (value = cell average).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: RealGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: RealGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!("expected {} values, got {}", grid.points(), values.len()),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: RealGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.points()],
        }
    }

    /// Samples `f` at the nodes.
    pub fn from_fn(grid: RealGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.nodes().into_iter().map(f).collect(),
        }
    }

    /// Cell averages of `f` given its antiderivative `big_f`.
    pub fn from_antiderivative(grid: RealGrid, big_f: impl Fn(f64) -> f64) -> Self {
        let h = grid.spacing();
        let values = (0..grid.points())
            .map(|j| {
                let a = grid.edge(j);
                (big_f(a + h) - big_f(a)) / h
            })
            .collect();
        Self { grid, values }
    }

    pub fn l1_norm(&self) -> f64 {
        self.grid.spacing() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn integral(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    /// `h Σ f_j g_j`.
    pub fn inner(&self, other: &Self) -> f64 {
        self.grid.spacing() * dot(&self.values, &other.values)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_symmetric_without_zero() {
        let g = RealGrid::new(4.0, 16).unwrap();
        assert_eq!(g.spacing(), 0.5);
        for j in 0..16 {
            assert_eq!(g.node(j), -g.node(15 - j));
            assert!(g.node(j) != 0.0);
        }
        assert_eq!(g.edge(8), 0.0);
        assert_eq!(g.cell_of(0.1), 8);
        assert_eq!(g.cell_of(-0.1), 7);
        assert!(RealGrid::new(4.0, 15).is_err());
        assert!(RealGrid::new(0.0, 16).is_err());
    }

    #[test]
    fn norms() {
        let g = RealGrid::new(1.0, 4).unwrap();
        let f = GridFunction::new(g, vec![1.0, -1.0, 2.0, 0.0]).unwrap();
        assert_eq!(f.l1_norm(), 2.0);
        assert!((f.l2_norm() - 3f64.sqrt()).abs() < 1e-15);
        let avg = GridFunction::from_antiderivative(g, |x| x * x / 2.0);
        for (j, v) in avg.values.iter().enumerate() {
            assert!((v - g.node(j)).abs() < 1e-15);
        }
    }
}
