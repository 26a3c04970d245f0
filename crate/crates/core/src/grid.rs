use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Uniform node-centred grid on the unit torus `[-1/2, 1/2)^2`.
///
/// Node `(i, j)` sits at `(-1/2 + i h, -1/2 + j h)` and is stored at
/// flat index `i * n + j` (first index along `x1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    n: usize,
}

impl TorusGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(param(format!("grid size must be a power of two >= 8, got {n}")));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Area of one cell, `h^2`.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        let h = self.h();
        h * h
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 + i as f64 * self.h()
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [self.coord(i), self.coord(j)]
    }

    /// Signed wavenumber of FFT bin `m`, in `{-n/2, ..., n/2 - 1}`.
    #[inline]
    pub fn wavenumber(&self, m: usize) -> i64 {
        if m < self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn is_nyquist(&self, m: usize) -> bool {
        m == self.n / 2
    }

    /// Number of levels of the dyadic scale ladder, `log2(n) + 1`.
    pub fn levels(&self) -> usize {
        self.n.trailing_zeros() as usize + 1
    }

    /// Bilinear (cloud-in-cell) stencil of a wrapped point: the two node
    /// indices along each axis and the weight of the upper node.
    #[inline]
    pub fn cic(&self, x: [f64; 2]) -> CicStencil {
        let n = self.n;
        let mut idx = [[0usize; 2]; 2];
        let mut frac = [0.0; 2];
        for a in 0..2 {
            let s = (x[a] + 0.5) * n as f64;
            let fl = s.floor();
            let i0 = (fl as i64).rem_euclid(n as i64) as usize;
            idx[a] = [i0, (i0 + 1) % n];
            frac[a] = s - fl;
        }
        CicStencil { idx, frac }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CicStencil {
    pub idx: [[usize; 2]; 2],
    pub frac: [f64; 2],
}

impl CicStencil {
    /// The four `(flat index, weight)` pairs; weights sum to one.
    #[inline]
    pub fn nodes(&self, grid: &TorusGrid) -> [(usize, f64); 4] {
        let [fx, fy] = self.frac;
        let [[i0, i1], [j0, j1]] = self.idx;
        [
            (grid.idx(i0, j0), (1.0 - fx) * (1.0 - fy)),
            (grid.idx(i0, j1), (1.0 - fx) * fy),
            (grid.idx(i1, j0), fx * (1.0 - fy)),
            (grid.idx(i1, j1), fx * fy),
        ]
    }
}

/// Wrap a coordinate into `[-1/2, 1/2)`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    let r = x - (x + 0.5).floor();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// Minimum-image representative of a displacement, in `[-1/2, 1/2)`.
#[inline]
pub fn min_image(x: [f64; 2]) -> [f64; 2] {
    [wrap(x[0]), wrap(x[1])]
}
