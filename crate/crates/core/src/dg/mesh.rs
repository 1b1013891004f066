use crate::error::{Error, Result};

/// Uniform partition of [a, b] into `K` cells `D^k = [x_{k-1/2}, x_{k+1/2}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
}

/// Which one-sided limit to take at an element boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// u^-: limit from the left, i.e. the trace of the cell ending at the point.
    Left,
    /// u^+: limit from the right, i.e. the trace of the cell starting at the point.
    Right,
}

impl Mesh1D {
    pub fn uniform(a: f64, b: f64, num_elements: usize) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid(format!("mesh endpoints must be finite, got [{a}, {b}]")));
        }
        if a >= b {
            return Err(Error::invalid(format!("mesh requires a < b, got [{a}, {b}]")));
        }
        if num_elements == 0 {
            return Err(Error::invalid("mesh requires at least one element"));
        }
        let h = (b - a) / num_elements as f64;
        let mut nodes: Vec<f64> = (0..=num_elements).map(|i| a + i as f64 * h).collect();
        nodes[num_elements] = b;
        Ok(Self { a, b, nodes })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn num_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Element boundaries x_{1/2}, ..., x_{K+1/2}.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn bounds(&self, k: usize) -> (f64, f64) {
        (self.nodes[k], self.nodes[k + 1])
    }

    pub fn width(&self, k: usize) -> f64 {
        self.nodes[k + 1] - self.nodes[k]
    }

    /// Uniform cell width.
    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.num_elements() as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        0.5 * (self.nodes[k] + self.nodes[k + 1])
    }

    /// Physical coordinate of reference point `xi` in [-1, 1] on cell `k`.
    pub fn from_reference(&self, k: usize, xi: f64) -> f64 {
        self.center(k) + 0.5 * self.width(k) * xi
    }

    pub fn to_reference(&self, k: usize, x: f64) -> f64 {
        2.0 * (x - self.center(k)) / self.width(k)
    }

    /// Cell containing `x`; at an interior boundary `side` picks the cell.
    pub fn locate(&self, x: f64, side: Side) -> Result<usize> {
        if !(x >= self.a && x <= self.b) {
            return Err(Error::invalid(format!("point {x} outside domain [{}, {}]", self.a, self.b)));
        }
        let k = self.num_elements();
        // first node strictly greater than x
        let upper = self.nodes.partition_point(|&n| n <= x);
        let cell = match upper {
            0 => 0,
            u if u > k => k - 1,
            u => u - 1,
        };
        if side == Side::Left && cell > 0 && x == self.nodes[cell] {
            return Ok(cell - 1);
        }
        Ok(cell)
    }
}

/// Uniform mesh of `num_elements` cells on [a, b].
pub fn build_mesh(a: f64, b: f64, num_elements: usize) -> Result<Mesh1D> {
    Mesh1D::uniform(a, b, num_elements)
}
