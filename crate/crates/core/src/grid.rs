//! Uniform periodic grid on `(-L, L)^2` and the excised-disc indicator.
//!
//! Nodes are indexed row-major, `index = iy * N + ix`, and node `(N/2, N/2)`
//! sits exactly at the origin.

use crate::error::{LabError, Result};

/// Largest admissible obstacle radius as a fraction of `L`.
pub const OBSTACLE_LIMIT_FACTOR: f64 = 2.0 - std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    half_width: f64,
    n: usize,
    h: f64,
}

impl GridSpec {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(LabError::InvalidGrid(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        if n % 2 != 0 || n < 8 {
            return Err(LabError::InvalidGrid(format!(
                "N must be even and at least 8, got {n}"
            )));
        }
        Ok(Self {
            half_width,
            n,
            h: 2.0 * half_width / n as f64,
        })
    }

    /// Box half-width `L`.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Coordinate of node `j` along either axis, `-L + j h`.
    ///
    /// Computed as `(j - N/2) h` so that the grid is exactly symmetric about
    /// the origin node.
    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.h
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Box area `4 L^2`.
    pub fn box_area(&self) -> f64 {
        4.0 * self.half_width * self.half_width
    }

    /// Area weight of one node.
    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn obstacle_limit(&self) -> f64 {
        OBSTACLE_LIMIT_FACTOR * self.half_width
    }

    /// Samples `f(x, y)` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let xs = self.coords();
        let mut out = Vec::with_capacity(self.len());
        for &y in &xs {
            for &x in &xs {
                out.push(f(x, y));
            }
        }
        out
    }
}

/// Uniform periodic grid; see [`GridSpec::new`].
pub fn build_grid(half_width: f64, n: usize) -> Result<GridSpec> {
    GridSpec::new(half_width, n)
}

/// Node-sampled indicator of the disc `B(0, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleMask {
    radius: f64,
    chi: Vec<bool>,
    area: f64,
    count: usize,
}

impl ObstacleMask {
    pub fn new(grid: &GridSpec, radius: f64) -> Result<Self> {
        let limit = grid.obstacle_limit();
        if !(radius >= 0.0) || radius >= limit {
            return Err(LabError::ObstacleTooLarge { r: radius, limit });
        }
        let r2 = radius * radius;
        let xs = grid.coords();
        let mut chi = Vec::with_capacity(grid.len());
        for &y in &xs {
            for &x in &xs {
                // strict: nodes on the circle stay fluid
                chi.push(radius > 0.0 && x * x + y * y < r2);
            }
        }
        let count = chi.iter().filter(|&&c| c).count();
        Ok(Self {
            radius,
            chi,
            area: count as f64 * grid.cell_area(),
            count,
        })
    }

    pub fn empty(grid: &GridSpec) -> Self {
        Self {
            radius: 0.0,
            chi: vec![false; grid.len()],
            area: 0.0,
            count: 0,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn chi(&self) -> &[bool] {
        &self.chi
    }

    pub fn is_masked(&self, index: usize) -> bool {
        self.chi[index]
    }

    pub fn masked_count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn masked_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.chi
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| c.then_some(i))
    }
}

pub fn build_obstacle_mask(grid: &GridSpec, radius: f64) -> Result<ObstacleMask> {
    ObstacleMask::new(grid, radius)
}

/// Measured obstacle area `h^2 * sum(chi)`.
pub fn obstacle_area(mask: &ObstacleMask, grid: &GridSpec) -> f64 {
    mask.masked_count() as f64 * grid.cell_area()
}
