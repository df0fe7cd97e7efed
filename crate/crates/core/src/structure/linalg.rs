//! Dense Gaussian elimination over a field: exact over `BigRational`,
//! partially pivoted over `f64`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub trait Scalar:
    Clone
    + PartialEq
    + std::fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Pivot preference; zero exactly when the value is zero.
    fn pivot_weight(&self) -> f64;

    fn from_i64(v: i64) -> Self;

    fn to_f64(&self) -> f64;

    fn is_integral(&self) -> bool;
}

impl Scalar for f64 {
    fn pivot_weight(&self) -> f64 {
        self.abs()
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_integral(&self) -> bool {
        self.fract() == 0.0
    }
}

impl Scalar for BigRational {
    fn pivot_weight(&self) -> f64 {
        // any nonzero entry is an exact pivot
        if self.is_zero() {
            0.0
        } else {
            1.0
        }
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_integral(&self) -> bool {
        self.is_integer()
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn max_abs(values: impl IntoIterator<Item = BigRational>) -> BigRational {
    values.into_iter().map(|v| v.abs()).fold(BigRational::zero(), |a, b| if b > a { b } else { a })
}

/// Row-reduce `m` in place; returns the pivot columns.
pub fn rref<F: Scalar>(m: &mut [Vec<F>]) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, weight) =
            (r..rows)
                .map(|i| (i, m[i][c].pivot_weight()))
                .fold((r, 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if weight == 0.0 {
            continue;
        }
        m.swap(r, best);
        let inv = F::one() / m[r][c].clone();
        for v in m[r].iter_mut().skip(c) {
            *v = v.clone() * inv.clone();
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].pivot_weight() == 0.0 {
                continue;
            }
            let factor = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row).skip(c) {
                *v = v.clone() - factor.clone() * p.clone();
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<F: Scalar>(mut m: Vec<Vec<F>>) -> usize {
    rref(&mut m).len()
}

/// Basis of the null space of `m` (`cols` columns), one vector per free
/// column.
pub fn kernel<F: Scalar>(mut m: Vec<Vec<F>>, cols: usize) -> Vec<Vec<F>> {
    let pivots = rref(&mut m);
    let mut is_pivot = vec![None; cols];
    for (row, &c) in pivots.iter().enumerate() {
        is_pivot[c] = Some(row);
    }
    let mut basis = Vec::new();
    for free in 0..cols {
        if is_pivot[free].is_some() {
            continue;
        }
        let mut v = vec![F::zero(); cols];
        v[free] = F::one();
        for (row, &c) in pivots.iter().enumerate() {
            v[c] = -m[row][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Some solution of the (possibly rectangular) system `a x = b`.
pub fn solve_consistent<F: Scalar>(a: &[Vec<F>], b: &[F]) -> Result<Vec<F>> {
    let cols = a.first().map_or(0, |r| r.len());
    let mut aug: Vec<Vec<F>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.last() == Some(&cols) {
        return Err(Error::Singular("linear system is inconsistent".into()));
    }
    let mut x = vec![F::zero(); cols];
    for (row, &c) in pivots.iter().enumerate() {
        x[c] = aug[row][cols].clone();
    }
    Ok(x)
}

/// Inverse of a square matrix.
pub fn invert<F: Scalar>(a: &[Vec<F>]) -> Result<Vec<Vec<F>>> {
    let n = a.len();
    let mut aug: Vec<Vec<F>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != n {
                return Err(Error::Singular("matrix is not square".into()));
            }
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { F::one() } else { F::zero() }));
            Ok(r)
        })
        .collect::<Result<_>>()?;
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return Err(Error::Singular("matrix is singular".into()));
    }
    Ok(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}
