//! Space-time fields on a window: backward discrete marching, forward RK4
//! evolution, caloric residuals and integrals over parabolic cylinders.
//!
//! Continuous-time fields are polynomial in `t` ([`PolyField`] with the
//! monomial basis); discrete-time fields are either marched grids
//! ([`DiscreteField`]) or polynomial in the binomial basis `C(-t, i)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphWindow, VertexId};
use crate::metrics::MetricData;
use crate::operators::{laplacian_at, VertexFunction};
use crate::structure::linalg::Scalar;

/// Continuous time `t ∈ (-∞, 0]` or integer time `t ∈ Z_-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Continuous,
    Discrete,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Continuous => "continuous",
            Mode::Discrete => "discrete",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(Mode::Continuous),
            "discrete" => Ok(Mode::Discrete),
            _ => Err(Error::Parse(format!("unknown time mode '{s}' (expected continuous or discrete)"))),
        }
    }
}

/// Values of the time basis at `t`: `t^i` (continuous) or `C(-t, i)`
/// (discrete), for `i = 0..=l`.
pub fn basis_values<F: Scalar>(mode: Mode, l: usize, t: &F) -> Vec<F> {
    let mut out = Vec::with_capacity(l + 1);
    out.push(F::one());
    for i in 1..=l {
        let prev = out[i - 1].clone();
        let next = match mode {
            Mode::Continuous => prev * t.clone(),
            Mode::Discrete => prev * (-t.clone() - F::from_i64(i as i64 - 1)) / F::from_i64(i as i64),
        };
        out.push(next);
    }
    out
}

/// The time basis as monomial coefficient vectors in `t`.
pub fn basis_polynomials<F: Scalar>(mode: Mode, l: usize) -> Vec<Vec<F>> {
    let mut out: Vec<Vec<F>> = Vec::with_capacity(l + 1);
    out.push(vec![F::one()]);
    for i in 1..=l {
        let prev = &out[i - 1];
        let mut next = vec![F::zero(); i + 1];
        match mode {
            Mode::Continuous => next[i] = F::one(),
            Mode::Discrete => {
                // prev · (-t - (i-1)) / i
                let shift = -F::from_i64(i as i64 - 1);
                let inv = F::one() / F::from_i64(i as i64);
                for (j, c) in prev.iter().enumerate() {
                    next[j] = next[j].clone() + c.clone() * shift.clone() * inv.clone();
                    next[j + 1] = next[j + 1].clone() - c.clone() * inv.clone();
                }
            }
        }
        out.push(next);
    }
    out
}

/// Ancient solution `u = sum_i p_i φ_i(t)` with `φ_i = t^i` (continuous) or
/// `φ_i = C(-t, i)` (discrete).
#[derive(Debug, Clone, PartialEq)]
pub struct PolyField<P> {
    mode: Mode,
    coeffs: Vec<P>,
}

impl<P> PolyField<P> {
    pub fn new(mode: Mode, coeffs: Vec<P>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Domain("a polynomial field needs at least one coefficient".into()));
        }
        Ok(PolyField { mode, coeffs })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn coeffs(&self) -> &[P] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<P> {
        self.coeffs
    }

    /// Time degree `l`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }
}

impl PolyField<VertexFunction> {
    fn check(&self, window: &GraphWindow) -> Result<()> {
        self.coeffs.iter().try_for_each(|p| p.check(window))
    }

    pub fn value(&self, i: usize, t: f64) -> f64 {
        basis_values(self.mode, self.order(), &t).iter().zip(&self.coeffs).map(|(b, p)| b * p.value(i)).sum()
    }

    /// `u(·, t)`.
    pub fn slice(&self, t: f64) -> VertexFunction {
        let b = basis_values(self.mode, self.order(), &t);
        let mut acc = self.coeffs[0].scaled(b[0]);
        for (p, bi) in self.coeffs.iter().zip(&b).skip(1) {
            acc = acc.axpy(*bi, p);
        }
        acc
    }

    /// `u(x, ·)` as monomial coefficients in `t`.
    fn time_polynomial(&self, basis: &[Vec<f64>], i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.coeffs.len()];
        for (p, b) in self.coeffs.iter().zip(basis) {
            let v = p.value(i);
            for (o, c) in out.iter_mut().zip(b) {
                *o += v * c;
            }
        }
        out
    }
}

/// Integer-time field on a rectangle `S × [-T, 0]`, where `S` is the set of
/// recorded window vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    steps: u32,
    rows: Vec<usize>,
    slot: Vec<Option<usize>>,
    // values[t + T][row]
    values: Vec<Vec<f64>>,
}

impl DiscreteField {
    /// Field on all window vertices and times `[-steps, 0]`.
    pub fn from_fn(window: &GraphWindow, steps: u32, u: impl Fn(usize, i64) -> f64) -> Self {
        let rows: Vec<usize> = (0..window.len()).collect();
        let values = (0..=steps as i64).map(|k| rows.iter().map(|&i| u(i, k - steps as i64)).collect()).collect();
        DiscreteField { steps, slot: rows.iter().map(|&i| Some(i)).collect(), rows, values }
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    /// Recorded window indices.
    pub fn recorded(&self) -> &[usize] {
        &self.rows
    }

    pub fn is_recorded(&self, i: usize) -> bool {
        self.slot.get(i).is_some_and(|s| s.is_some())
    }

    pub fn value(&self, i: usize, t: i64) -> Option<f64> {
        let row = (*self.slot.get(i)?)?;
        if t > 0 {
            return None;
        }
        let k = usize::try_from(t + self.steps as i64).ok()?;
        self.values.get(k).map(|s| s[row])
    }

    #[inline]
    fn at(&self, row: usize, t: i64) -> f64 {
        self.values[(t + self.steps as i64) as usize][row]
    }

    fn neighbors_recorded(&self, window: &GraphWindow, i: usize) -> bool {
        window.is_interior(i) && window.neighbors(i).all(|(j, _)| self.is_recorded(j))
    }
}

/// March `u(·, t-1) = (I - Δ) u(·, t)` backward from `u(·, 0) = u0` for
/// `steps` steps.
///
/// Step `n` is exact on vertices within `hops + 1 - n` hops of the base, so
/// the result records the vertices within `hops + 1 - steps` hops.
pub fn march_backward_discrete(window: &GraphWindow, u0: &VertexFunction, steps: u32) -> Result<DiscreteField> {
    u0.check(window)?;
    if steps > window.hops() {
        return Err(Error::Coverage(format!(
            "a {steps}-step backward march needs a window of at least {steps} hops, got {}",
            window.hops()
        )));
    }
    let mut by_hop: Vec<usize> = (0..window.len()).collect();
    by_hop.sort_by_key(|&i| (window.hop(i), i));
    let within = |h: u32| by_hop.partition_point(|&i| window.hop(i) <= h);

    let limit = window.hops() + 1 - steps;
    let mut rows: Vec<usize> = by_hop[..within(limit)].to_vec();
    rows.sort_unstable();
    let mut slot = vec![None; window.len()];
    for (r, &i) in rows.iter().enumerate() {
        slot[i] = Some(r);
    }
    let record = |u: &[f64]| rows.iter().map(|&i| u[i]).collect::<Vec<f64>>();

    let mut slices = Vec::with_capacity(steps as usize + 1);
    let mut cur = u0.values().to_vec();
    slices.push(record(&cur));
    let mut next = vec![f64::NAN; window.len()];
    for n in 1..=steps {
        for &i in &by_hop[..within(window.hops() + 1 - n)] {
            next[i] = cur[i] - laplacian_at(window, &cur, i);
        }
        std::mem::swap(&mut cur, &mut next);
        slices.push(record(&cur));
    }
    slices.reverse();
    Ok(DiscreteField { steps, rows, slot, values: slices })
}

/// Samples of a forward evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub times: Vec<f64>,
    pub slices: Vec<VertexFunction>,
}

/// Factor over the initial sup-norm at which forward evolution is declared
/// unstable.
pub const BLOWUP_FACTOR: f64 = 1e6;

/// Integrate `∂_t u = Δu` forward from `u0` with classical RK4, using the
/// window Laplacian (in-window edges only) at every vertex.
pub fn evolve_forward_continuous(
    window: &GraphWindow,
    u0: &VertexFunction,
    t_end: f64,
    dt: f64,
) -> Result<SampledField> {
    u0.check(window)?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Precondition(format!("end time {t_end} must be finite and nonnegative")));
    }
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!("time step {dt} must be positive")));
    }
    let max_deg = (0..window.len())
        .map(|i| window.neighbors(i).map(|(_, w)| w).sum::<f64>() / window.measure(i))
        .fold(0.0, f64::max);
    if dt * max_deg > 1.0 {
        return Err(Error::Precondition(format!("time step {dt} exceeds 1 / max degree = {}", 1.0 / max_deg)));
    }
    let n = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
    let h = if n == 0 { 0.0 } else { t_end / n as f64 };

    let lap = |u: &[f64]| -> Vec<f64> { (0..u.len()).map(|i| laplacian_at(window, u, i)).collect() };
    let axpy = |u: &[f64], a: f64, k: &[f64]| -> Vec<f64> { u.iter().zip(k).map(|(x, y)| x + a * y).collect() };

    let limit = BLOWUP_FACTOR * u0.max_abs().max(f64::MIN_POSITIVE);
    let mut u = u0.values().to_vec();
    let mut out = SampledField { times: vec![0.0], slices: vec![u0.clone()] };
    for step in 1..=n {
        let k1 = lap(&u);
        let k2 = lap(&axpy(&u, h / 2.0, &k1));
        let k3 = lap(&axpy(&u, h / 2.0, &k2));
        let k4 = lap(&axpy(&u, h, &k3));
        for i in 0..u.len() {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(sup <= limit) {
            return Err(Error::Integration(format!(
                "sup-norm {sup:e} at t = {} exceeds {BLOWUP_FACTOR:e} times the initial sup-norm",
                step as f64 * h
            )));
        }
        out.times.push(step as f64 * h);
        out.slices.push(VertexFunction::new(window, u.clone())?);
    }
    Ok(out)
}

/// Integrand of a cylinder aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// `u²`
    USquared,
    /// `Γ(u)`
    Gamma,
    /// `(∂_t u)²`, continuous mode only.
    TimeDerivativeSquared,
    /// `(D_t u)²`, discrete mode only.
    DifferenceSquared,
}

/// `Q_R = B_R(x0) × [-R², 0]`, or its integer-time analog.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    base: VertexId,
    radius: f64,
    mode: Mode,
}

impl Cylinder {
    pub fn new(base: VertexId, radius: f64, mode: Mode) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Precondition(format!("cylinder radius {radius} must be positive")));
        }
        if mode == Mode::Discrete && radius.fract() != 0.0 {
            return Err(Error::Precondition(format!("discrete cylinders need an integer radius, got {radius}")));
        }
        Ok(Cylinder { base, radius, mode })
    }

    pub fn base(&self) -> VertexId {
        self.base
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// `R²`, the length of the time interval.
    pub fn duration(&self) -> f64 {
        self.radius * self.radius
    }
}

/// A field that can be checked for the heat equation and integrated over
/// cylinders.
pub trait SpaceTimeField: Sync {
    /// Maximum violation of the heat equation (or of its hierarchy form).
    fn residual(&self, window: &GraphWindow) -> Result<f64>;

    /// Size of the field, used to scale residual tolerances.
    fn magnitude(&self) -> f64;

    fn aggregate(&self, window: &GraphWindow, metric: &MetricData, quantity: Quantity, cyl: &Cylinder) -> Result<f64>;

    fn scaled(&self, lambda: f64) -> Self
    where
        Self: Sized;
}

pub fn residual<F: SpaceTimeField + ?Sized>(field: &F, window: &GraphWindow) -> Result<f64> {
    field.residual(window)
}

/// `∫_{Q_R} q m dt` (continuous) or `sum_{Q~_R} q m` (discrete).
pub fn cylinder_aggregate<F: SpaceTimeField + ?Sized>(
    field: &F,
    window: &GraphWindow,
    metric: &MetricData,
    quantity: Quantity,
    cyl: &Cylinder,
) -> Result<f64> {
    if window.id(metric.base()) != cyl.base {
        return Err(Error::Precondition(format!(
            "cylinder is centred at {} but the metric is centred at {}",
            cyl.base,
            window.id(metric.base())
        )));
    }
    field.aggregate(window, metric, quantity, cyl)
}

fn unsupported(quantity: Quantity, what: &str) -> Error {
    Error::Domain(format!("quantity {quantity:?} is not available for {what}"))
}

/// `∫_{-a}^0 t^j dt` for `j < n`.
fn continuous_moments(a: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } * a.powi(j as i32 + 1) / (j + 1) as f64).collect()
}

/// `sum_{t=-a}^0 t^j` for `j < n`, exact while it fits in `i128`.
fn discrete_moments(a: u64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let exact = (0..=a as i128).try_fold(0i128, |acc, k| {
                let mut p = 1i128;
                for _ in 0..j {
                    p = p.checked_mul(-k)?;
                }
                acc.checked_add(p)
            });
            exact.map(|v| v as f64).unwrap_or_else(|| (0..=a).map(|k| (-(k as f64)).powi(j as i32)).sum())
        })
        .collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `p(t) - p(t-1)`.
fn backward_difference(p: &[f64]) -> Vec<f64> {
    // p(t-1) = sum_j c_j (t-1)^j, expanded binomially
    let mut shifted = vec![0.0; p.len()];
    for (j, c) in p.iter().enumerate() {
        let mut binom = 1.0;
        for (k, s) in shifted.iter_mut().enumerate().take(j + 1) {
            let sign = if (j - k) % 2 == 0 { 1.0 } else { -1.0 };
            *s += c * binom * sign;
            binom = binom * (j - k) as f64 / (k + 1) as f64;
        }
    }
    p.iter().zip(&shifted).map(|(a, b)| a - b).collect()
}

fn derivative(p: &[f64]) -> Vec<f64> {
    if p.len() == 1 {
        return vec![0.0];
    }
    p.iter().enumerate().skip(1).map(|(j, c)| j as f64 * c).collect()
}

impl SpaceTimeField for PolyField<VertexFunction> {
    /// Coefficient-wise: `|Δp_l|`, and `|p_{i+1} - Δp_i / (i+1)|`
    /// (continuous) or `|p_{i+1} + Δp_i|` (discrete), over interior vertices.
    fn residual(&self, window: &GraphWindow) -> Result<f64> {
        self.check(window)?;
        let l = self.order();
        let mut worst = 0.0f64;
        for i in window.interior_indices() {
            for (k, p) in self.coeffs.iter().enumerate() {
                let lap = laplacian_at(window, p.values(), i);
                let r = if k == l {
                    lap
                } else {
                    let next = self.coeffs[k + 1].value(i);
                    match self.mode {
                        Mode::Continuous => next - lap / (k + 1) as f64,
                        Mode::Discrete => next + lap,
                    }
                };
                worst = worst.max(r.abs());
            }
        }
        Ok(worst)
    }

    fn magnitude(&self) -> f64 {
        self.coeffs.iter().map(VertexFunction::max_abs).fold(0.0, f64::max)
    }

    fn aggregate(&self, window: &GraphWindow, metric: &MetricData, quantity: Quantity, cyl: &Cylinder) -> Result<f64> {
        self.check(window)?;
        match (cyl.mode, self.mode, quantity) {
            (Mode::Continuous, Mode::Discrete, _) => {
                return Err(Error::Domain("binomial-basis fields live on integer times only".into()))
            }
            (Mode::Continuous, _, Quantity::DifferenceSquared) => {
                return Err(unsupported(quantity, "continuous cylinders"))
            }
            (Mode::Discrete, _, Quantity::TimeDerivativeSquared) => {
                return Err(unsupported(quantity, "discrete cylinders"))
            }
            _ => {}
        }
        let ball = metric.ball_indices(cyl.radius)?;
        let basis = basis_polynomials::<f64>(self.mode, self.order());
        let n = 2 * self.coeffs.len();
        let moments = match cyl.mode {
            Mode::Continuous => continuous_moments(cyl.duration(), n),
            Mode::Discrete => discrete_moments(cyl.duration() as u64, n),
        };
        let mut total = 0.0;
        for &i in &ball {
            let u = self.time_polynomial(&basis, i);
            let integrand = match quantity {
                Quantity::USquared => poly_mul(&u, &u).iter().map(|c| c * window.measure(i)).collect(),
                Quantity::TimeDerivativeSquared => {
                    let d = derivative(&u);
                    poly_mul(&d, &d).iter().map(|c| c * window.measure(i)).collect()
                }
                Quantity::DifferenceSquared => {
                    let d = backward_difference(&u);
                    poly_mul(&d, &d).iter().map(|c| c * window.measure(i)).collect()
                }
                Quantity::Gamma => {
                    let mut acc = vec![0.0; 2 * u.len() - 1];
                    for (j, w) in window.neighbors(i) {
                        let v = self.time_polynomial(&basis, j);
                        let diff: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a - b).collect();
                        for (a, c) in acc.iter_mut().zip(poly_mul(&diff, &diff)) {
                            *a += 0.5 * w * c;
                        }
                    }
                    acc
                }
            };
            total += dot(&integrand, &moments);
        }
        Ok(total)
    }

    fn scaled(&self, lambda: f64) -> Self {
        PolyField { mode: self.mode, coeffs: self.coeffs.iter().map(|p| p.scaled(lambda)).collect() }
    }
}

impl SpaceTimeField for DiscreteField {
    /// `max |u(x,t) - u(x,t-1) - Δu(x,t)|` over recorded interior vertices
    /// whose neighbors are recorded, and `t ∈ (-T, 0]`.
    fn residual(&self, window: &GraphWindow) -> Result<f64> {
        if self.slot.len() != window.len() {
            return Err(Error::Domain("field does not match the window".into()));
        }
        let mut worst = 0.0f64;
        let mut full = vec![0.0; window.len()];
        for t in (1 - self.steps as i64)..=0 {
            for (r, &i) in self.rows.iter().enumerate() {
                full[i] = self.at(r, t);
            }
            for (r, &i) in self.rows.iter().enumerate() {
                if self.neighbors_recorded(window, i) {
                    let res = self.at(r, t) - self.at(r, t - 1) - laplacian_at(window, &full, i);
                    worst = worst.max(res.abs());
                }
            }
        }
        Ok(worst)
    }

    fn magnitude(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn aggregate(&self, window: &GraphWindow, metric: &MetricData, quantity: Quantity, cyl: &Cylinder) -> Result<f64> {
        if self.slot.len() != window.len() {
            return Err(Error::Domain("field does not match the window".into()));
        }
        if cyl.mode != Mode::Discrete {
            return Err(Error::Domain("grid fields only support discrete cylinders".into()));
        }
        if quantity == Quantity::TimeDerivativeSquared {
            return Err(unsupported(quantity, "grid fields"));
        }
        let span = cyl.duration() as i64;
        let needed = span + i64::from(quantity == Quantity::DifferenceSquared);
        if needed > self.steps as i64 {
            return Err(Error::Coverage(format!(
                "cylinder of radius {} needs {needed} past time steps, the field has {}",
                cyl.radius, self.steps
            )));
        }
        let ball = metric.ball_indices(cyl.radius)?;
        let row = |i: usize| -> Result<usize> {
            self.slot[i].ok_or_else(|| {
                Error::Coverage(format!("vertex {} of the cylinder is outside the recorded region", window.id(i)))
            })
        };
        let mut total = 0.0;
        for &i in &ball {
            let r = row(i)?;
            let m = window.measure(i);
            match quantity {
                Quantity::USquared => {
                    for t in -span..=0 {
                        total += self.at(r, t).powi(2) * m;
                    }
                }
                Quantity::DifferenceSquared => {
                    for t in -span..=0 {
                        total += (self.at(r, t) - self.at(r, t - 1)).powi(2) * m;
                    }
                }
                Quantity::Gamma => {
                    let nbrs = window.neighbors(i).map(|(j, w)| Ok((row(j)?, w))).collect::<Result<Vec<_>>>()?;
                    for t in -span..=0 {
                        let ux = self.at(r, t);
                        for &(rj, w) in &nbrs {
                            total += 0.5 * w * (self.at(rj, t) - ux).powi(2);
                        }
                    }
                }
                Quantity::TimeDerivativeSquared => unreachable!(),
            }
        }
        Ok(total)
    }

    fn scaled(&self, lambda: f64) -> Self {
        DiscreteField {
            steps: self.steps,
            rows: self.rows.clone(),
            slot: self.slot.clone(),
            values: self.values.iter().map(|s| s.iter().map(|v| v * lambda).collect()).collect(),
        }
    }
}
