use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::binomial;
use crate::error::{Error, Result};
use crate::graph::MAX_LATTICE_DIM;

const VARS: [char; MAX_LATTICE_DIM] = ['x', 'y', 'z', 'w'];

/// Polynomial on `Z^d` with exact rational coefficients.
///
/// Terms are keyed by exponent tuples; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticePolynomial {
    dim: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_LATTICE_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::Domain(format!("lattice dimension {dim} not in 1..={MAX_LATTICE_DIM}")))
    }
}

impl LatticePolynomial {
    pub fn zero(dim: usize) -> Self {
        LatticePolynomial { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: BigRational) -> Self {
        LatticePolynomial::monomial(vec![0; dim], c)
    }

    pub fn from_integer(dim: usize, c: i64) -> Self {
        LatticePolynomial::constant(dim, BigRational::from_integer(BigInt::from(c)))
    }

    /// `c · x^exps`.
    pub fn monomial(exps: Vec<u32>, c: BigRational) -> Self {
        let dim = exps.len();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        LatticePolynomial { dim, terms }
    }

    /// `c · x^exps` with an integer coefficient.
    pub fn integer_monomial(exps: Vec<u32>, c: i64) -> Self {
        LatticePolynomial::monomial(exps, BigRational::from_integer(BigInt::from(c)))
    }

    /// The coordinate function `x_axis`.
    pub fn var(dim: usize, axis: usize) -> Self {
        let mut exps = vec![0; dim];
        exps[axis] = 1;
        LatticePolynomial::monomial(exps, BigRational::one())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &BigRational)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn coefficient(&self, exps: &[u32]) -> BigRational {
        self.terms.get(exps).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    fn add_term(&mut self, exps: Vec<u32>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return LatticePolynomial::zero(self.dim);
        }
        LatticePolynomial { dim: self.dim, terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(LatticePolynomial::from_integer(self.dim, 1), |acc, _| &acc * self)
    }

    /// Lattice Laplacian with unit weights and measure:
    /// `Δp(x) = sum_i p(x + e_i) + p(x - e_i) - 2 p(x)`.
    ///
    /// Per axis, `(x+1)^a + (x-1)^a - 2x^a = 2 sum_{k even, k >= 2} C(a,k) x^{a-k}`.
    pub fn laplacian(&self) -> Self {
        let mut out = LatticePolynomial::zero(self.dim);
        for (exps, c) in &self.terms {
            for axis in 0..self.dim {
                let a = exps[axis];
                for k in (2..=a).step_by(2) {
                    let mut e = exps.clone();
                    e[axis] = a - k;
                    out.add_term(e, c * binomial(a as i64, k as i64) * BigInt::from(2));
                }
            }
        }
        out
    }

    pub fn eval(&self, x: &[i64]) -> BigRational {
        assert_eq!(x.len(), self.dim, "point dimension does not match the polynomial");
        let mut acc = BigRational::zero();
        for (exps, c) in &self.terms {
            let mut m = BigInt::one();
            for (&xi, &a) in x.iter().zip(exps) {
                m *= num_traits::pow(BigInt::from(xi), a as usize);
            }
            acc += c * m;
        }
        acc
    }

    /// Floating-point evaluation with rounded coefficients.
    pub fn eval_f64(&self, x: &[i64]) -> f64 {
        assert_eq!(x.len(), self.dim, "point dimension does not match the polynomial");
        self.terms
            .iter()
            .map(|(exps, c)| {
                let m: f64 = x.iter().zip(exps).map(|(&xi, &a)| (xi as f64).powi(a as i32)).product();
                c.to_f64().unwrap_or(f64::NAN) * m
            })
            .sum()
    }

    /// Inner product of coefficient vectors in the monomial basis.
    pub fn dot(&self, other: &Self) -> BigRational {
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            if let Some(d) = other.terms.get(e) {
                acc += c * d;
            }
        }
        acc
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> BigRational {
        super::linalg::max_abs(self.terms.values().cloned())
    }

    /// Parse with the variables `x, y, z, w` (first `dim` of them), `+ - * /
    /// ^`, parentheses, rational constants and implicit multiplication.
    pub fn parse(dim: usize, src: &str) -> Result<Self> {
        check_dim(dim)?;
        let mut p = Parser { chars: src.chars().filter(|c| !c.is_whitespace()).collect(), pos: 0, dim };
        let out = p.expr()?;
        if p.pos != p.chars.len() {
            return Err(p.error("unexpected character"));
        }
        Ok(out)
    }
}

impl Add for &LatticePolynomial {
    type Output = LatticePolynomial;

    fn add(self, rhs: &LatticePolynomial) -> LatticePolynomial {
        assert_eq!(self.dim, rhs.dim, "adding polynomials of different dimensions");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &LatticePolynomial {
    type Output = LatticePolynomial;

    fn sub(self, rhs: &LatticePolynomial) -> LatticePolynomial {
        self + &(-rhs)
    }
}

impl Neg for &LatticePolynomial {
    type Output = LatticePolynomial;

    fn neg(self) -> LatticePolynomial {
        LatticePolynomial { dim: self.dim, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }
}

impl Mul for &LatticePolynomial {
    type Output = LatticePolynomial;

    fn mul(self, rhs: &LatticePolynomial) -> LatticePolynomial {
        assert_eq!(self.dim, rhs.dim, "multiplying polynomials of different dimensions");
        let mut out = LatticePolynomial::zero(self.dim);
        for (a, c) in &self.terms {
            for (b, d) in &rhs.terms {
                out.add_term(a.iter().zip(b).map(|(x, y)| x + y).collect(), c * d);
            }
        }
        out
    }
}

impl fmt::Display for LatticePolynomial {
    /// Highest degree first, e.g. `1/12*x^4 - 1/12*y^4`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|(a, _), (b, _)| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        for (k, (exps, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            match (k, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let abs = c.abs();
            let vars: Vec<String> = exps
                .iter()
                .enumerate()
                .filter(|(_, &a)| a > 0)
                .map(|(i, &a)| if a == 1 { VARS[i].to_string() } else { format!("{}^{a}", VARS[i]) })
                .collect();
            if vars.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                f.write_str(&vars.join("*"))?;
            } else {
                write!(f, "{abs}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn error(&self, what: &str) -> Error {
        let rest: String = self.chars[self.pos.min(self.chars.len())..].iter().collect();
        Error::Parse(format!("{what} in polynomial at '{rest}'"))
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<LatticePolynomial> {
        let mut acc = LatticePolynomial::zero(self.dim);
        let mut sign = match self.peek() {
            Some('-') => {
                self.pos += 1;
                -1
            }
            Some('+') => {
                self.pos += 1;
                1
            }
            _ => 1,
        };
        loop {
            let t = self.term()?;
            acc = if sign < 0 { &acc - &t } else { &acc + &t };
            match self.peek() {
                Some('+') => sign = 1,
                Some('-') => sign = -1,
                _ => return Ok(acc),
            }
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<LatticePolynomial> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    acc = &acc * &self.power()?;
                }
                Some('/') => {
                    self.pos += 1;
                    let d = self.power()?;
                    let c = match d.degree() {
                        Some(0) => d.coefficient(&vec![0; self.dim]),
                        None => return Err(self.error("division by zero")),
                        _ => return Err(self.error("division by a non-constant")),
                    };
                    acc = acc.scale(&c.recip());
                }
                Some(c) if c == '(' || c.is_ascii_alphanumeric() => acc = &acc * &self.power()?,
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<LatticePolynomial> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let n = self.integer()?;
            let n = u32::try_from(n).map_err(|_| self.error("exponent too large"))?;
            return Ok(base.pow(n));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<BigInt> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a number"));
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        Ok(digits.parse().expect("ascii digits"))
    }

    fn atom(&mut self) -> Result<LatticePolynomial> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(LatticePolynomial::constant(self.dim, BigRational::from_integer(n)))
            }
            Some(c) => match VARS[..self.dim].iter().position(|&v| v == c) {
                Some(axis) => {
                    self.pos += 1;
                    Ok(LatticePolynomial::var(self.dim, axis))
                }
                None => Err(self.error("unknown symbol")),
            },
            None => Err(self.error("unexpected end")),
        }
    }
}
