//! Piecewise-constant functions on a uniform partition of `[0, T]`.

use alloc::vec;
use alloc::vec::Vec;

/// A function of time that is constant on each of `len()` equal cells of
/// `[0, horizon]`. A single value means "constant in time".
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    values: Vec<f64>,
}

impl GridFn {
    /// Panics if `values` is empty.
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "grid function needs at least one cell");
        Self { values }
    }

    pub fn constant(value: f64) -> Self {
        Self { values: vec![value] }
    }

    /// Broadcasts a constant onto `n` cells.
    pub fn filled(value: f64, n: usize) -> Self {
        Self::new(vec![value; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self::new((0..n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Value on step `k` of a uniform partition into `n_steps` cells. The
    /// partition must refine this grid (`n_steps % len() == 0`).
    #[inline]
    pub fn on_step(&self, k: usize, n_steps: usize) -> f64 {
        debug_assert!(n_steps.is_multiple_of(self.values.len()));
        self.values[k * self.values.len() / n_steps]
    }

    /// Value at time `t`; right-continuous, with `t = horizon` mapped to the
    /// last cell.
    pub fn at(&self, t: f64, horizon: f64) -> f64 {
        self.values[self.cell_index(t, horizon)]
    }

    pub fn cell_index(&self, t: f64, horizon: f64) -> usize {
        let n = self.values.len();
        let pos = t / horizon * n as f64;
        if pos <= 0.0 {
            0
        } else {
            // floor, clamped to the last cell
            let i = libm::floor(pos) as usize;
            i.min(n - 1)
        }
    }

    /// Exact integral over `[a, b] ⊂ [0, horizon]`.
    pub fn integral(&self, a: f64, b: f64, horizon: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let n = self.values.len();
        let width = horizon / n as f64;
        let first = self.cell_index(a, horizon);
        let last = self.cell_index(b, horizon);
        if first == last {
            return self.values[first] * (b - a);
        }
        let mut total = self.values[first] * ((first + 1) as f64 * width - a);
        for i in first + 1..last {
            total += self.values[i] * width;
        }
        total + self.values[last] * (b - last as f64 * width)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Least common multiple: the cell count of the coarsest grid refining
/// grids of `a` and `b` cells.
pub fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Left endpoints `k T / n` of a uniform partition.
pub fn left_endpoints(n: usize, horizon: f64) -> Vec<f64> {
    (0..n).map(|k| k as f64 * horizon / n as f64).collect()
}
