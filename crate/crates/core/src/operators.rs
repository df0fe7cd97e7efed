//! Pointwise discrete calculus on a window: `∇`, `Δ`, `Γ`, Green's formula
//! and the elementary time-difference identities on `Z_-`.
//!
//! `Δ` and `Γ` are only defined on interior vertices, where the window holds
//! the full neighborhood.

use crate::error::{Error, Result};
use crate::graph::{GraphWindow, VertexId};

/// Real function on the vertices of a window, stored in window order.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction {
    values: Vec<f64>,
    finite_support: bool,
}

impl VertexFunction {
    pub fn new(window: &GraphWindow, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::Domain(format!(
                "function has {} values but the window has {} vertices",
                values.len(),
                window.len()
            )));
        }
        Ok(VertexFunction { values, finite_support: false })
    }

    pub fn from_fn(window: &GraphWindow, f: impl Fn(VertexId) -> f64) -> Self {
        VertexFunction { values: window.ids().iter().map(|&x| f(x)).collect(), finite_support: false }
    }

    /// Evaluate `f` at the lattice coordinates of every window vertex.
    pub fn from_coords(window: &GraphWindow, f: impl Fn(&[i64]) -> f64) -> Result<Self> {
        let values = (0..window.len())
            .map(|i| {
                window
                    .coords(i)
                    .map(&f)
                    .ok_or_else(|| Error::Domain("window vertices carry no lattice coordinates".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(VertexFunction { values, finite_support: false })
    }

    pub fn constant(window: &GraphWindow, c: f64) -> Self {
        VertexFunction { values: vec![c; window.len()], finite_support: false }
    }

    /// Indicator of `x`; flagged finitely supported when `x` is interior.
    pub fn indicator(window: &GraphWindow, x: VertexId) -> Result<Self> {
        let i = window.require(x)?;
        let mut values = vec![0.0; window.len()];
        values[i] = 1.0;
        Ok(VertexFunction { values, finite_support: window.is_interior(i) })
    }

    /// Marks the function as an element of `C_0(V)`, checking that it
    /// vanishes off the interior.
    pub fn into_finite_support(mut self, window: &GraphWindow) -> Result<Self> {
        if self.values.len() != window.len() {
            return Err(Error::Domain("function does not match the window".into()));
        }
        if let Some(i) = window.boundary_indices().find(|&i| self.values[i] != 0.0) {
            return Err(Error::Precondition(format!(
                "function is nonzero at boundary vertex {}; its support must lie in the interior",
                window.id(i)
            )));
        }
        self.finite_support = true;
        Ok(self)
    }

    pub fn has_finite_support(&self) -> bool {
        self.finite_support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn get(&self, window: &GraphWindow, x: VertexId) -> Result<f64> {
        Ok(self.values[window.require(x)?])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        VertexFunction { values: self.values.iter().map(|v| v * lambda).collect(), finite_support: self.finite_support }
    }

    /// `self + lambda * other`.
    pub fn axpy(&self, lambda: f64, other: &VertexFunction) -> Self {
        VertexFunction {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + lambda * b).collect(),
            finite_support: self.finite_support && other.finite_support,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn check(&self, window: &GraphWindow) -> Result<()> {
        if self.values.len() != window.len() {
            return Err(Error::Domain(format!(
                "function is defined on {} vertices but the window has {}",
                self.values.len(),
                window.len()
            )));
        }
        Ok(())
    }
}

/// Values defined on the interior of a window only.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorFunction {
    values: Vec<Option<f64>>,
}

impl InteriorFunction {
    pub fn at(&self, i: usize) -> Option<f64> {
        self.values[i]
    }

    pub fn get(&self, window: &GraphWindow, x: VertexId) -> Result<f64> {
        let i = window.require(x)?;
        self.values[i].ok_or_else(|| Error::Domain(format!("{x} is a boundary vertex; the value is not exact there")))
    }

    /// `(window index, value)` over the interior.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v)))
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, (_, v)| m.max(v.abs()))
    }
}

/// `∇_xy f = f(y) - f(x)`.
pub fn nabla(window: &GraphWindow, f: &VertexFunction, x: VertexId, y: VertexId) -> Result<f64> {
    f.check(window)?;
    let i = window.require(x)?;
    let j = window.require(y)?;
    Ok(f.values[j] - f.values[i])
}

#[inline]
pub(crate) fn laplacian_at(window: &GraphWindow, f: &[f64], i: usize) -> f64 {
    let fx = f[i];
    let mut acc = 0.0;
    for (j, w) in window.neighbors(i) {
        acc += w * (f[j] - fx);
    }
    acc / window.measure(i)
}

#[inline]
pub(crate) fn gamma_at(window: &GraphWindow, f: &[f64], i: usize) -> f64 {
    let fx = f[i];
    let mut acc = 0.0;
    for (j, w) in window.neighbors(i) {
        let d = f[j] - fx;
        acc += w * d * d;
    }
    0.5 * acc / window.measure(i)
}

/// `Δf(x) = sum_y (w_xy / m_x) (f(y) - f(x))` at every interior vertex.
pub fn laplacian_apply(window: &GraphWindow, f: &VertexFunction) -> Result<InteriorFunction> {
    f.check(window)?;
    let values = (0..window.len()).map(|i| window.is_interior(i).then(|| laplacian_at(window, &f.values, i))).collect();
    Ok(InteriorFunction { values })
}

/// Carré du champ `Γ(f)(x) = ½ sum_y (w_xy / m_x) (f(y) - f(x))²`.
pub fn gamma(window: &GraphWindow, f: &VertexFunction) -> Result<InteriorFunction> {
    f.check(window)?;
    let values = (0..window.len()).map(|i| window.is_interior(i).then(|| gamma_at(window, &f.values, i))).collect();
    Ok(InteriorFunction { values })
}

/// Both sides of Green's formula
/// `½ sum_{x,y} w_xy ∇_xy f ∇_xy g = - sum_x Δf(x) g(x) m_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenSides {
    pub lhs: f64,
    pub rhs: f64,
}

impl GreenSides {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Evaluates both sides independently; `g` must be finitely supported in
/// the interior so that neither side is truncated by the window.
pub fn green_sides(window: &GraphWindow, f: &VertexFunction, g: &VertexFunction) -> Result<GreenSides> {
    f.check(window)?;
    g.check(window)?;
    if !g.finite_support {
        return Err(Error::Precondition("g must carry the finite-support flag".into()));
    }
    if let Some(i) = window.boundary_indices().find(|&i| g.values[i] != 0.0) {
        return Err(Error::Precondition(format!("g is supported on boundary vertex {}", window.id(i))));
    }
    let mut lhs = 0.0;
    for i in 0..window.len() {
        for (j, w) in window.neighbors(i) {
            lhs += w * (f.values[j] - f.values[i]) * (g.values[j] - g.values[i]);
        }
    }
    lhs *= 0.5;
    let mut rhs = 0.0;
    for i in window.interior_indices() {
        rhs -= laplacian_at(window, &f.values, i) * g.values[i] * window.measure(i);
    }
    Ok(GreenSides { lhs, rhs })
}

/// `|LHS - RHS|` of Green's formula.
pub fn green_identity_residual(window: &GraphWindow, f: &VertexFunction, g: &VertexFunction) -> Result<f64> {
    green_sides(window, f, g).map(|s| s.residual())
}

/// Real function on a contiguous integer time range `[a, b] ⊆ Z_-`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    start: i64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start: i64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("time series is empty".into()));
        }
        let end = start + values.len() as i64 - 1;
        if end > 0 {
            return Err(Error::Domain(format!("time series ends at {end} > 0")));
        }
        Ok(TimeSeries { start, values })
    }

    pub fn from_fn(start: i64, end: i64, g: impl Fn(i64) -> f64) -> Result<Self> {
        if end < start {
            return Err(Error::Domain(format!("empty time range [{start}, {end}]")));
        }
        Self::new(start, (start..=end).map(g).collect())
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn get(&self, t: i64) -> Result<f64> {
        if t < self.start || t > self.end() {
            return Err(Error::Domain(format!("time {t} outside [{}, {}]", self.start, self.end())));
        }
        Ok(self.values[(t - self.start) as usize])
    }
}

/// `D_t g(t) = g(t) - g(t - 1)`.
pub fn dt_difference(series: &TimeSeries, t: i64) -> Result<f64> {
    Ok(series.get(t)? - series.get(t - 1)?)
}

/// `D_t(g²)(t) - 2 g(t) D_t g(t) + (D_t g(t))²`, which vanishes identically.
pub fn dt_square_defect(series: &TimeSeries, t: i64) -> Result<f64> {
    let (g, gp) = (series.get(t)?, series.get(t - 1)?);
    let dg = g - gp;
    Ok((g * g - gp * gp) - 2.0 * g * dg + dg * dg)
}

/// `|sum_{t=a}^b D_t g - (g(b) - g(a-1))|`.
pub fn telescope_check(series: &TimeSeries, a: i64, b: i64) -> Result<f64> {
    if a > b {
        return Err(Error::Precondition(format!("empty summation range [{a}, {b}]")));
    }
    let mut sum = 0.0;
    for t in a..=b {
        sum += dt_difference(series, t)?;
    }
    Ok((sum - (series.get(b)? - series.get(a - 1)?)).abs())
}

/// Smallest index `j` with `a_j <= mean(a)`.
pub fn pigeonhole_index(values: &[f64]) -> Result<usize> {
    if values.is_empty() {
        return Err(Error::Precondition("pigeonhole needs at least one value".into()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if let Some(j) = values.iter().position(|&a| a <= mean) {
        return Ok(j);
    }
    // rounding pushed the computed mean below every entry; the first minimum
    // satisfies the inequality exactly
    let mut j = 0;
    for (i, &a) in values.iter().enumerate() {
        if a < values[j] {
            j = i;
        }
    }
    Ok(j)
}
