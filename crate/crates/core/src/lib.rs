//! Discrete heat-equation machinery on weighted graphs with possibly
//! unbounded Laplacians.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`graph`] | lazy providers, finite windows, experiment families |
//! | [`operators`] | `∇`, `Δ`, `Γ`, Green's formula, `D_t` identities |
//! | [`metrics`] | intrinsic path metrics, balls, cut-offs, volume growth |
//! | [`caloric`] | space-time fields, heat evolution, cylinder integrals |
//! | [`structure`] | exact lattice polynomials, hierarchies, dimension counts |
//! | [`caccioppoli`] | both sides of the parabolic Caccioppoli inequalities |

pub mod caccioppoli;
pub mod caloric;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod operators;
pub mod structure;

pub use caccioppoli::{caccioppoli_report, ratio_sweep, CaccioppoliReport};
pub use caloric::{Cylinder, DiscreteField, Mode, PolyField, Quantity, SpaceTimeField};
pub use error::{Error, Result};
pub use graph::{build_window, generate, FamilyConfig, GraphProvider, GraphWindow, VertexId};
pub use metrics::{construct_path_metric, MetricData};
pub use operators::{TimeSeries, VertexFunction};
pub use structure::{HierarchyChain, LatticePolynomial};
