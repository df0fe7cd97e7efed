//! Exact structure theory of polynomial-growth ancient solutions on `Z^d`:
//! binomial calculus, harmonic polynomial spaces, Poisson hierarchies,
//! Vandermonde extraction, vanishing orders and dimension counts.

mod harmonic;
mod hierarchy;
pub mod linalg;
mod poly;

pub use harmonic::{harmonic_polynomial_basis, monomial_count, monomials, solve_poisson, HarmonicBasis, MONOMIAL_CAP};
pub use hierarchy::{
    assemble_ancient, chain_space_dimension, default_times, dimension_bound_report, extract_coefficients,
    solve_hierarchy, vanishing_order, vanishing_order_check, vanishing_order_check_numeric, DimensionReport,
    HierarchyChain, Slice, VanishingReport, NUMERIC_TOLERANCE,
};
pub use poly::LatticePolynomial;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::caloric::{basis_values, Mode, PolyField};
use crate::error::{Error, Result};
use crate::graph::{GraphWindow, VertexId};
use crate::metrics::MetricData;
use crate::operators::VertexFunction;

/// `C(n, i) = n (n-1) ... (n-i+1) / i!` for `0 <= i <= n`, and `0`
/// otherwise.
pub fn binomial(n: i64, i: i64) -> BigRational {
    if n < 0 || i < 0 || i > n {
        return BigRational::zero();
    }
    let i = i.min(n - i);
    let mut acc = BigInt::one();
    for k in 0..i {
        acc = acc * BigInt::from(n - k) / BigInt::from(k + 1);
    }
    BigRational::from_integer(acc)
}

/// Which polynomial-growth space a certificate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthClass {
    /// `H_k`: harmonic functions.
    Harmonic,
    /// `P_k`: continuous-time ancient solutions.
    Caloric,
    /// `P~_k`: discrete-time ancient solutions.
    DiscreteCaloric,
}

/// Empirical `|u(x, t)| <= C (1 + ρ(x0, x) + sqrt|t|)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCertificate {
    pub rate: f64,
    pub constant: f64,
    pub base: VertexId,
    pub class: GrowthClass,
}

/// Number of sample times per unit of `R` on `[-R², 0]` in continuous mode.
const TIME_SAMPLES: usize = 65;

/// Smallest `C` for which the growth bound holds at sampled points of
/// `B_R × [-R², 0]`. Discrete fields are sampled at every integer time.
pub fn certify_growth(
    field: &PolyField<VertexFunction>,
    window: &GraphWindow,
    metric: &MetricData,
    rate: f64,
    radius: f64,
) -> Result<GrowthCertificate> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Precondition(format!("growth rate {rate} must be positive")));
    }
    let ball = metric.ball_indices(radius)?;
    let span = radius * radius;
    let times: Vec<f64> = match field.mode() {
        Mode::Continuous => (0..TIME_SAMPLES).map(|j| -span * j as f64 / (TIME_SAMPLES - 1) as f64).collect(),
        Mode::Discrete => (0..=span.floor() as i64).map(|t| -(t as f64)).collect(),
    };
    let l = field.order();
    let mut constant = f64::MIN_POSITIVE;
    for t in times {
        let b = basis_values(field.mode(), l, &t);
        for &i in &ball {
            let u: f64 = field.coeffs().iter().zip(&b).map(|(p, c)| p.value(i) * c).sum();
            let scale = (1.0 + metric.dist(i) + t.abs().sqrt()).powf(rate);
            constant = constant.max(u.abs() / scale);
        }
    }
    let class = match (l, field.mode()) {
        (0, _) => GrowthClass::Harmonic,
        (_, Mode::Continuous) => GrowthClass::Caloric,
        (_, Mode::Discrete) => GrowthClass::DiscreteCaloric,
    };
    Ok(GrowthCertificate { rate, constant, base: window.id(metric.base()), class })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_window, generate, FamilyConfig};
    use crate::metrics::construct_path_metric;
    use proptest::prelude::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), BigRational::from_integer(10.into()));
        assert!(binomial(3, 5).is_zero());
        assert!(binomial(-1, 0).is_zero());
        assert_eq!(binomial(6, 3) - binomial(5, 3), binomial(5, 2));
        assert_eq!(binomial(64, 32), BigRational::from_integer("1832624140942590534".parse::<BigInt>().unwrap()));
    }

    #[test]
    fn growth_of_quadratic_field() {
        let p = generate(&FamilyConfig::lattice(1)).unwrap();
        let w = build_window(p.clone(), p.base(), 20).unwrap();
        let metric = construct_path_metric(&w);
        let chain = HierarchyChain::from_initial(&LatticePolynomial::parse(1, "x^2").unwrap(), Mode::Continuous);
        let f = assemble_ancient(&chain).unwrap().on_window(&w).unwrap();
        let cert = certify_growth(&f, &w, &metric, 2.0, 8.0).unwrap();
        assert_eq!(cert.class, GrowthClass::Caloric);
        assert!(cert.constant > 0.0 && cert.constant <= 2.0, "{}", cert.constant);
        assert!(certify_growth(&f, &w, &metric, 0.0, 8.0).is_err());
    }

    proptest! {
        #[test]
        fn pascal_difference(n in 0i64..=64, i in 1i64..=64) {
            prop_assume!(i <= n);
            prop_assert_eq!(binomial(n + 1, i) - binomial(n, i), binomial(n, i - 1));
        }
    }
}
