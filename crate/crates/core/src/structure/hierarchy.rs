use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::harmonic::{solve_poisson, MonomialSpace, MONOMIAL_CAP};
use super::linalg::{invert, max_abs, rank, Scalar};
use super::poly::LatticePolynomial;
use crate::caloric::{basis_values, Mode, PolyField, SpaceTimeField};
use crate::error::{Error, Result};
use crate::graph::GraphWindow;
use crate::operators::VertexFunction;

/// Coefficients `(p_0, ..., p_l)` of a polynomial-in-time ancient solution.
///
/// The chain equations are `Δp_l = 0` together with
/// `Δp_i = (i+1) p_{i+1}` (continuous) or `Δp_i = -p_{i+1}` (discrete).
/// [`HierarchyChain::new`] does not enforce them; see
/// [`HierarchyChain::check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyChain {
    mode: Mode,
    coeffs: Vec<LatticePolynomial>,
}

impl HierarchyChain {
    pub fn new(mode: Mode, coeffs: Vec<LatticePolynomial>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::Domain("a hierarchy chain needs at least one coefficient".into()));
        };
        if coeffs.iter().any(|p| p.dim() != first.dim()) {
            return Err(Error::Domain("chain coefficients live on lattices of different dimension".into()));
        }
        Ok(HierarchyChain { mode, coeffs })
    }

    /// Chain of the ancient solution with `u(·, 0) = u0`: `p_i = Δ^i u0 / i!`
    /// (continuous) or `p_i = (-Δ)^i u0` (discrete).
    pub fn from_initial(u0: &LatticePolynomial, mode: Mode) -> Self {
        let mut coeffs = vec![u0.clone()];
        loop {
            let i = coeffs.len() as i64;
            let lap = coeffs[coeffs.len() - 1].laplacian();
            if lap.is_zero() {
                break;
            }
            let factor = match mode {
                Mode::Continuous => BigRational::new(BigInt::one(), BigInt::from(i)),
                Mode::Discrete => -BigRational::one(),
            };
            coeffs.push(lap.scale(&factor));
        }
        HierarchyChain { mode, coeffs }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn coeffs(&self) -> &[LatticePolynomial] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Defect of equation `index` in normalized form: `Δp_l` for the top,
    /// otherwise `p_{i+1} - Δp_i / (i+1)` or `p_{i+1} + Δp_i`.
    pub fn defect(&self, index: usize) -> LatticePolynomial {
        chain_defect(self.mode, &self.coeffs, index)
    }

    /// First broken equation, as an assembly error.
    pub fn check(&self) -> Result<()> {
        for i in 0..self.coeffs.len() {
            let d = self.defect(i);
            if !d.is_zero() {
                return Err(Error::Assembly { index: i, detail: format!("defect {d}") });
            }
        }
        Ok(())
    }
}

fn chain_defect(mode: Mode, coeffs: &[LatticePolynomial], index: usize) -> LatticePolynomial {
    let lap = coeffs[index].laplacian();
    match coeffs.get(index + 1) {
        None => lap,
        Some(next) => match mode {
            Mode::Continuous => next - &lap.scale(&BigRational::new(BigInt::one(), BigInt::from(index as i64 + 1))),
            Mode::Discrete => next + &lap,
        },
    }
}

/// Solve the chain downward from a harmonic top `p_l`, choosing each `p_i`
/// by [`solve_poisson`].
pub fn solve_hierarchy(top: &LatticePolynomial, l: usize, mode: Mode) -> Result<HierarchyChain> {
    let lap = top.laplacian();
    if !lap.is_zero() {
        return Err(Error::Precondition(format!("top coefficient {top} is not harmonic: Δ = {lap}")));
    }
    let mut coeffs = vec![top.clone()];
    for i in (0..l).rev() {
        let next = &coeffs[coeffs.len() - 1];
        let rhs = match mode {
            Mode::Continuous => next.scale(&BigRational::from_integer(BigInt::from(i as i64 + 1))),
            Mode::Discrete => -next,
        };
        coeffs.push(solve_poisson(&rhs)?);
    }
    coeffs.reverse();
    Ok(HierarchyChain { mode, coeffs })
}

/// `u = sum_i p_i t^i` or `u = sum_i p_i C(-t, i)`.
pub fn assemble_ancient(chain: &HierarchyChain) -> Result<PolyField<LatticePolynomial>> {
    chain.check()?;
    PolyField::new(chain.mode, chain.coeffs.clone())
}

impl PolyField<LatticePolynomial> {
    /// Largest coefficient of any normalized chain defect; zero iff the
    /// field solves the heat equation exactly on the whole lattice.
    pub fn exact_residual(&self) -> BigRational {
        max_abs((0..self.coeffs().len()).map(|i| chain_defect(self.mode(), self.coeffs(), i).max_abs_coeff()))
    }

    pub fn chain(&self) -> HierarchyChain {
        HierarchyChain { mode: self.mode(), coeffs: self.coeffs().to_vec() }
    }

    /// `u(·, t)`.
    pub fn slice(&self, t: &BigRational) -> LatticePolynomial {
        let b = basis_values(self.mode(), self.order(), t);
        let dim = self.coeffs()[0].dim();
        self.coeffs().iter().zip(&b).fold(LatticePolynomial::zero(dim), |acc, (p, c)| &acc + &p.scale(c))
    }

    /// Growth rate `max_i (deg p_i + 2i)`.
    pub fn growth_rate(&self) -> u32 {
        self.coeffs().iter().enumerate().filter_map(|(i, p)| p.degree().map(|d| d + 2 * i as u32)).max().unwrap_or(0)
    }

    /// Restriction to a lattice window.
    pub fn on_window(&self, window: &GraphWindow) -> Result<PolyField<VertexFunction>> {
        let dim = self.coeffs()[0].dim();
        if window.lattice_dim() != Some(dim) {
            return Err(Error::Domain(format!("window is not a {dim}-dimensional lattice window")));
        }
        let coeffs = self
            .coeffs()
            .iter()
            .map(|p| VertexFunction::from_coords(window, |x| p.eval_f64(x)))
            .collect::<Result<Vec<_>>>()?;
        PolyField::new(self.mode(), coeffs)
    }
}

/// A time slice that can be linearly combined, exactly or in floating point.
pub trait Slice: Sized {
    type Scalar: Scalar;

    fn combine(parts: &[&Self], weights: &[Self::Scalar]) -> Self;
}

impl Slice for LatticePolynomial {
    type Scalar = BigRational;

    fn combine(parts: &[&Self], weights: &[BigRational]) -> Self {
        parts.iter().zip(weights).fold(LatticePolynomial::zero(parts[0].dim()), |acc, (p, w)| &acc + &p.scale(w))
    }
}

impl Slice for VertexFunction {
    type Scalar = f64;

    fn combine(parts: &[&Self], weights: &[f64]) -> Self {
        parts.iter().zip(weights).fold(parts[0].scaled(0.0), |acc, (p, w)| acc.axpy(*w, p))
    }
}

/// Default sample times: `-1 + j/(l+1)` (continuous) or `-l - j`
/// (discrete), for `j = 1..=l+1`.
pub fn default_times<F: Scalar>(mode: Mode, l: usize) -> Vec<F> {
    let l1 = l as i64 + 1;
    (1..=l1)
        .map(|j| match mode {
            Mode::Continuous => F::from_i64(j - l1) / F::from_i64(l1),
            Mode::Discrete => F::from_i64(-(l as i64) - j),
        })
        .collect()
}

/// Recover `(p_0, ..., p_l)` from the slices `u(·, t_j)` by inverting the
/// `(l+1) × (l+1)` system `B_{ji} = φ_i(t_j)`.
pub fn extract_coefficients<S: Slice>(samples: &[(S::Scalar, S)], l: usize, mode: Mode) -> Result<Vec<S>> {
    if samples.len() != l + 1 {
        return Err(Error::Precondition(format!("{} slices given, order {l} needs {}", samples.len(), l + 1)));
    }
    for (t, _) in samples {
        let tf = t.to_f64();
        if !(tf <= 0.0) {
            return Err(Error::Precondition(format!("sample time {tf} is not in the past")));
        }
        if mode == Mode::Discrete && !t.is_integral() {
            return Err(Error::Precondition(format!("discrete sample time {tf} is not an integer")));
        }
    }
    for (a, (s, _)) in samples.iter().enumerate() {
        if samples[..a].iter().any(|(t, _)| t == s) {
            return Err(Error::Singular(format!("sample time {} is repeated", s.to_f64())));
        }
    }
    let b: Vec<Vec<S::Scalar>> = samples.iter().map(|(t, _)| basis_values(mode, l, t)).collect();
    let inv = invert(&b)?;
    let parts: Vec<&S> = samples.iter().map(|(_, s)| s).collect();
    Ok(inv.iter().map(|row| S::combine(&parts, row)).collect())
}

/// Smallest integer `q` with `4q > 2k + α + 2`.
pub fn vanishing_order(k: f64, alpha: f64) -> usize {
    ((2.0 * k + alpha + 2.0) / 4.0).floor() as usize + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct VanishingReport {
    pub q: usize,
    pub holds: bool,
    /// First index `i >= q` with `p_i != 0`.
    pub offending: Option<usize>,
}

fn check_rates(k: f64, alpha: f64) -> Result<()> {
    if !(k >= 0.0 && k.is_finite() && alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Precondition(format!(
            "growth rate {k} and volume exponent {alpha} must be finite and >= 0"
        )));
    }
    Ok(())
}

/// Checks that `p_i = 0` for every `i >= q` on an exact field.
pub fn vanishing_order_check(field: &PolyField<LatticePolynomial>, k: f64, alpha: f64) -> Result<VanishingReport> {
    check_rates(k, alpha)?;
    let res = field.exact_residual();
    if !res.is_zero() {
        return Err(Error::Precondition(format!("field is not caloric (residual {res})")));
    }
    let q = vanishing_order(k, alpha);
    let offending = (q..field.coeffs().len()).find(|&i| !field.coeffs()[i].is_zero());
    Ok(VanishingReport { q, holds: offending.is_none(), offending })
}

/// Relative tolerance for treating numeric fields as caloric and numeric
/// coefficients as zero.
pub const NUMERIC_TOLERANCE: f64 = 1e-9;

pub fn vanishing_order_check_numeric(
    field: &PolyField<VertexFunction>,
    window: &GraphWindow,
    k: f64,
    alpha: f64,
) -> Result<VanishingReport> {
    check_rates(k, alpha)?;
    let scale = field.magnitude().max(1.0);
    let res = field.residual(window)?;
    if res > NUMERIC_TOLERANCE * scale {
        return Err(Error::Precondition(format!("field is not caloric (residual {res:e})")));
    }
    let q = vanishing_order(k, alpha);
    let offending = (q..field.coeffs().len()).find(|&i| field.coeffs()[i].max_abs() > NUMERIC_TOLERANCE * scale);
    Ok(VanishingReport { q, holds: offending.is_none(), offending })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionReport {
    pub lattice_dim: usize,
    pub rate: f64,
    /// `l = ⌊k⌋`
    pub order: usize,
    /// `⌊2k⌋`
    pub degree: u32,
    pub dim_harmonic: usize,
    pub dim_continuous: usize,
    pub dim_discrete: usize,
    /// `(k + 1) · dim H_2k`
    pub bound: f64,
    pub holds: bool,
}

/// Dimension of the space of chains `(p_0, ..., p_l)` on `Z^d` with every
/// `deg p_i <= degree`, as `(l+1)N - rank` of the stacked chain equations.
pub fn chain_space_dimension(d: usize, degree: u32, l: usize, mode: Mode) -> Result<usize> {
    let space = MonomialSpace::new(d, degree)?;
    let n = space.len();
    let unknowns = (l + 1) * n;
    if unknowns > MONOMIAL_CAP {
        return Err(Error::Resource(format!("{unknowns} chain unknowns exceed the cap of {MONOMIAL_CAP}")));
    }
    let lap = space.laplacian_matrix();
    let mut rows = Vec::with_capacity(unknowns);
    for i in 0..=l {
        for r in 0..n {
            let mut row = vec![BigRational::zero(); unknowns];
            row[i * n..(i + 1) * n].clone_from_slice(&lap[r]);
            if i < l {
                let c = match mode {
                    Mode::Continuous => -BigRational::from_integer(BigInt::from(i as i64 + 1)),
                    Mode::Discrete => BigRational::one(),
                };
                row[(i + 1) * n + r] = c;
            }
            rows.push(row);
        }
    }
    Ok(unknowns - rank(rows))
}

pub fn dimension_bound_report(d: usize, k: f64) -> Result<DimensionReport> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::Precondition(format!("growth rate {k} must be finite and >= 0")));
    }
    let order = k.floor() as usize;
    let degree = (2.0 * k).floor() as u32;
    let dim_harmonic = super::harmonic_polynomial_basis(d, degree)?.dimension();
    let dim_continuous = chain_space_dimension(d, degree, order, Mode::Continuous)?;
    let dim_discrete = chain_space_dimension(d, degree, order, Mode::Discrete)?;
    let bound = (k + 1.0) * dim_harmonic as f64;
    let holds = dim_continuous as f64 <= bound && dim_discrete as f64 <= bound;
    Ok(DimensionReport {
        lattice_dim: d,
        rate: k,
        order,
        degree,
        dim_harmonic,
        dim_continuous,
        dim_discrete,
        bound,
        holds,
    })
}
