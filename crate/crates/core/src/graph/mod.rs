//! Weighted graphs `G = (V, E, m, w)`.
//!
//! Infinite graphs are only ever touched through a lazy [`GraphProvider`];
//! every quantitative routine in this crate works on a finite
//! [`GraphWindow`] materialized around a base vertex.

mod family;
mod window;

use std::fmt;

pub use family::{generate, FamilyConfig, FamilyTag, Lattice, MeasureRule, NormalizedWrap, Star, WeightRule};
pub use window::{
    build_window, degree_trend, validate_graph, weighted_degree, DegreeSummary, DegreeTrend, GraphWindow, Violation,
    WindowBuilder,
};

use crate::error::{Error, Result};

/// Opaque vertex identifier.
///
/// Lattice families pack the coordinates of `Z^d` injectively (zigzag
/// encoding, `64 / d` bits per axis); the coordinates stay recoverable
/// through [`VertexId::to_coords`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u64);

/// Largest lattice dimension the packing supports.
pub const MAX_LATTICE_DIM: usize = 4;

impl VertexId {
    pub fn from_coords(coords: &[i64]) -> Result<Self> {
        let d = coords.len();
        if d == 0 || d > MAX_LATTICE_DIM {
            return Err(Error::Domain(format!("lattice dimension {d} not in 1..={MAX_LATTICE_DIM}")));
        }
        let bits = 64 / d as u32;
        let mut packed = 0u64;
        for (axis, &c) in coords.iter().enumerate() {
            let z = ((c << 1) ^ (c >> 63)) as u64;
            if bits < 64 && z >> bits != 0 {
                return Err(Error::Domain(format!("coordinate {c} does not fit the {d}-dimensional packing")));
            }
            packed |= z << (bits * axis as u32);
        }
        Ok(VertexId(packed))
    }

    pub fn to_coords(self, d: usize) -> Vec<i64> {
        assert!((1..=MAX_LATTICE_DIM).contains(&d));
        let bits = 64 / d as u32;
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        (0..d)
            .map(|axis| {
                let z = (self.0 >> (bits * axis as u32)) & mask;
                ((z >> 1) as i64) ^ -((z & 1) as i64)
            })
            .collect()
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Lazy access to a locally finite weighted graph.
///
/// Implementations must be pure functions of the vertex: `w_xy = w_yx > 0`,
/// `m_x > 0`, finite neighbor lists, no self-loops and no repeated
/// neighbors.
pub trait GraphProvider: Send + Sync + fmt::Debug {
    /// Neighbors of `x` with the edge weights `w_xy`.
    fn neighbors(&self, x: VertexId) -> Vec<(VertexId, f64)>;

    fn measure(&self, x: VertexId) -> f64;

    fn base(&self) -> VertexId;

    /// Lattice coordinates of `x`, for families embedded in `Z^d`.
    fn coordinates(&self, _x: VertexId) -> Option<Vec<i64>> {
        None
    }

    /// Dimension of the ambient lattice, if any.
    fn lattice_dim(&self) -> Option<usize> {
        None
    }
}
