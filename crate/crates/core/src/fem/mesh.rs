use crate::error::{invalid, Result};

/// Uniform mesh of `I = (−l/2, l/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    length: f64,
    n: usize,
}

impl Mesh1D {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid("l", format!("{length} must be positive")));
        }
        if n < 2 {
            return Err(invalid("elements", format!("{n} < 2")));
        }
        Ok(Self { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn elements(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn left(&self) -> f64 {
        -0.5 * self.length
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            0.5 * self.length
        } else {
            self.left() + i as f64 * self.h()
        }
    }

    /// Element containing `x` and the local coordinate `t ∈ [0, 1]`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let s = (x - self.left()) / self.h();
        let e = (s.floor().max(0.0) as usize).min(self.n - 1);
        (e, s - e as f64)
    }
}

/// Tensor mesh of `S = I × (−1/2, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh2D {
    pub x: Mesh1D,
    pub y: Mesh1D,
}

impl Mesh2D {
    pub fn new(length: f64, nx: usize, ny: usize) -> Result<Self> {
        Ok(Self {
            x: Mesh1D::new(length, nx)?,
            y: Mesh1D::new(1.0, ny)?,
        })
    }

    pub fn elements(&self) -> usize {
        self.x.elements() * self.y.elements()
    }
}
