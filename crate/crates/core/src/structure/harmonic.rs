use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::Zero;

use super::linalg::{invert, kernel, solve_consistent};
use super::poly::LatticePolynomial;
use crate::error::{Error, Result};
use crate::graph::MAX_LATTICE_DIM;

/// Largest monomial space (or chain unknown count) the exact solvers accept.
pub const MONOMIAL_CAP: usize = 2000;

/// `C(j + d, d)`, the number of monomials of total degree `<= j` in `d`
/// variables.
pub fn monomial_count(d: usize, j: u32) -> usize {
    (1..=d).fold(1usize, |acc, i| acc.saturating_mul(j as usize + i) / i)
}

/// Exponent tuples of total degree `<= j`, by degree and then
/// lexicographically.
pub fn monomials(d: usize, j: u32) -> Result<Vec<Vec<u32>>> {
    if d == 0 || d > MAX_LATTICE_DIM {
        return Err(Error::Domain(format!("lattice dimension {d} not in 1..={MAX_LATTICE_DIM}")));
    }
    let count = monomial_count(d, j);
    if count > MONOMIAL_CAP {
        return Err(Error::Resource(format!(
            "{count} monomials of degree <= {j} in {d} variables exceed the cap of {MONOMIAL_CAP}"
        )));
    }
    fn of_degree(d: usize, g: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == d {
            prefix.push(g);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=g).rev() {
            prefix.push(a);
            of_degree(d, g - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(count);
    for g in 0..=j {
        of_degree(d, g, &mut Vec::with_capacity(d), &mut out);
    }
    Ok(out)
}

/// Monomial basis of the polynomials of degree `<= j` with the matrix of
/// the lattice Laplacian on it (rows index the image monomials).
pub(crate) struct MonomialSpace {
    pub dim: usize,
    pub basis: Vec<Vec<u32>>,
    pub index: HashMap<Vec<u32>, usize>,
}

impl MonomialSpace {
    pub fn new(d: usize, j: u32) -> Result<Self> {
        let basis = monomials(d, j)?;
        let index = basis.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        Ok(MonomialSpace { dim: d, basis, index })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn coords(&self, p: &LatticePolynomial) -> Result<Vec<BigRational>> {
        let mut v = vec![BigRational::zero(); self.len()];
        for (e, c) in p.terms() {
            let i = self.index.get(e).ok_or_else(|| {
                Error::Domain(format!("polynomial {p} does not fit the degree <= {} space", self.degree()))
            })?;
            v[*i] = c.clone();
        }
        Ok(v)
    }

    pub fn polynomial(&self, v: &[BigRational]) -> LatticePolynomial {
        v.iter().zip(&self.basis).fold(LatticePolynomial::zero(self.dim), |acc, (c, e)| {
            &acc + &LatticePolynomial::monomial(e.clone(), c.clone())
        })
    }

    fn degree(&self) -> u32 {
        self.basis.last().map_or(0, |e| e.iter().sum())
    }

    /// Column `i` is the coordinate vector of `Δ(basis[i])`.
    pub fn laplacian_matrix(&self) -> Vec<Vec<BigRational>> {
        let n = self.len();
        let mut m = vec![vec![BigRational::zero(); n]; n];
        for (col, e) in self.basis.iter().enumerate() {
            let image = LatticePolynomial::monomial(e.clone(), BigRational::from_integer(1.into())).laplacian();
            for (f, c) in image.terms() {
                m[self.index[f]][col] = c.clone();
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicBasis {
    pub lattice_dim: usize,
    pub degree: u32,
    pub basis: Vec<LatticePolynomial>,
}

impl HarmonicBasis {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }
}

/// Basis of `{p : deg p <= j, Δp = 0}` on `Z^d` with unit weights and
/// measure, by an exact kernel computation.
pub fn harmonic_polynomial_basis(d: usize, j: u32) -> Result<HarmonicBasis> {
    let space = MonomialSpace::new(d, j)?;
    let ker = kernel(space.laplacian_matrix(), space.len());
    Ok(HarmonicBasis { lattice_dim: d, degree: j, basis: ker.iter().map(|v| space.polynomial(v)).collect() })
}

/// The solution of `Δp = rhs` of degree `<= deg(rhs) + 2` that is
/// orthogonal, in the monomial-coefficient inner product, to every harmonic
/// polynomial of that degree.
pub fn solve_poisson(rhs: &LatticePolynomial) -> Result<LatticePolynomial> {
    let Some(deg) = rhs.degree() else {
        return Ok(LatticePolynomial::zero(rhs.dim()));
    };
    let space = MonomialSpace::new(rhs.dim(), deg + 2)?;
    let lap = space.laplacian_matrix();
    let b = space.coords(rhs)?;
    let x = solve_consistent(&lap, &b)?;
    let harmonic = kernel(lap, space.len());

    // subtract the Gram projection onto the harmonic subspace
    let dot = |a: &[BigRational], b: &[BigRational]| a.iter().zip(b).fold(BigRational::zero(), |s, (u, v)| s + u * v);
    let gram: Vec<Vec<BigRational>> = harmonic.iter().map(|h| harmonic.iter().map(|g| dot(h, g)).collect()).collect();
    let mut p = x.clone();
    if !harmonic.is_empty() {
        let inv = invert(&gram)?;
        let proj: Vec<BigRational> = harmonic.iter().map(|h| dot(h, &x)).collect();
        for (row, h) in inv.iter().zip(&harmonic) {
            let c = dot(row, &proj);
            for (pi, hi) in p.iter_mut().zip(h) {
                *pi -= &c * hi;
            }
        }
    }
    let out = space.polynomial(&p);
    debug_assert_eq!(&out.laplacian(), rhs);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(d: usize, s: &str) -> LatticePolynomial {
        LatticePolynomial::parse(d, s).unwrap()
    }

    /// Is `target` in the span of `basis`?
    fn in_span(basis: &[LatticePolynomial], target: &LatticePolynomial, d: usize, j: u32) -> bool {
        let space = MonomialSpace::new(d, j).unwrap();
        let cols: Vec<Vec<BigRational>> = basis.iter().map(|b| space.coords(b).unwrap()).collect();
        let t = space.coords(target).unwrap();
        let a: Vec<Vec<BigRational>> = (0..space.len()).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect();
        solve_consistent(&a, &t).is_ok()
    }

    #[test]
    fn monomial_enumeration() {
        assert_eq!(monomial_count(2, 2), 6);
        assert_eq!(monomials(2, 1).unwrap(), vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
        assert_eq!(monomials(3, 4).unwrap().len(), 35);
        assert!(matches!(monomials(4, 40), Err(Error::Resource(_))));
    }

    #[test]
    fn harmonic_dimensions() {
        let h = harmonic_polynomial_basis(1, 1).unwrap();
        assert_eq!(h.dimension(), 2);
        assert_eq!(harmonic_polynomial_basis(1, 3).unwrap().dimension(), 2);
        let h2 = harmonic_polynomial_basis(2, 2).unwrap();
        assert_eq!(h2.dimension(), 5);
        for s in ["1", "x", "y", "xy", "x^2 - y^2"] {
            assert!(in_span(&h2.basis, &p(2, s), 2, 2), "{s}");
        }
        assert!(!in_span(&h2.basis, &p(2, "x^2"), 2, 2));
        for b in &h2.basis {
            assert!(b.laplacian().is_zero());
        }
    }

    #[test]
    fn poisson_examples() {
        assert_eq!(solve_poisson(&p(1, "2")).unwrap(), p(1, "x^2"));
        assert_eq!(solve_poisson(&p(2, "x^2 - y^2")).unwrap(), p(2, "(x^4 - y^4)/12"));
        assert_eq!(solve_poisson(&p(1, "x^2")).unwrap(), p(1, "(x^4 - x^2)/12"));
        assert!(solve_poisson(&LatticePolynomial::zero(2)).unwrap().is_zero());
    }

    proptest! {
        #[test]
        fn poisson_solutions_are_exact_and_normalized(
            coeffs in proptest::collection::vec(-3i64..4, 6)
        ) {
            let space = MonomialSpace::new(2, 2).unwrap();
            let rhs = space.polynomial(
                &coeffs.iter().map(|&c| BigRational::from_integer(c.into())).collect::<Vec<_>>(),
            );
            let sol = solve_poisson(&rhs).unwrap();
            prop_assert_eq!(sol.laplacian(), rhs.clone());
            if let Some(deg) = rhs.degree() {
                for h in harmonic_polynomial_basis(2, deg + 2).unwrap().basis {
                    prop_assert!(sol.dot(&h).is_zero());
                }
            }
        }
    }
}
