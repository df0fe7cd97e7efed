use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{GraphProvider, VertexId, MAX_LATTICE_DIM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    LatticeZd,
    WeightedLine,
    Star,
    NormalizedWrap,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 4] = [Self::LatticeZd, Self::WeightedLine, Self::Star, Self::NormalizedWrap];

    pub fn name(self) -> &'static str {
        match self {
            Self::LatticeZd => "lattice-zd",
            Self::WeightedLine => "weighted-line",
            Self::Star => "star",
            Self::NormalizedWrap => "normalized-wrap",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Self::LatticeZd => "Z^d with nearest-neighbor edges; weight and measure rules apply",
            Self::WeightedLine => "Z^1 with radially growing edge weights (unbounded Laplacian by default)",
            Self::Star => "finite star: one center joined to `leaves` leaves",
            Self::NormalizedWrap => "any family (default: lattice-zd) with m_x replaced by sum_y w_xy",
        }
    }
}

/// Edge weight rule. `Radial` evaluates `(offset + slope * r)^power` at the
/// l1-norm `r` of the edge midpoint (lattices) or at the leaf index (star).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum WeightRule {
    Constant { value: f64 },
    Radial { offset: f64, slope: f64, power: f64 },
}

/// Vertex measure rule. `Radial` uses the l1-norm of the vertex (lattices)
/// or the leaf index (star, center at 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum MeasureRule {
    Constant { value: f64 },
    Counting,
    Normalized,
    Radial { offset: f64, slope: f64, power: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub family: FamilyTag,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_leaves")]
    pub leaves: usize,
    #[serde(default)]
    pub weight: Option<WeightRule>,
    #[serde(default)]
    pub measure: Option<MeasureRule>,
    /// Wrapped family for `normalized-wrap`.
    #[serde(default)]
    pub inner: Option<Box<FamilyConfig>>,
}

fn default_dim() -> usize {
    1
}

fn default_leaves() -> usize {
    4
}

impl FamilyConfig {
    pub fn lattice(dim: usize) -> Self {
        FamilyConfig {
            family: FamilyTag::LatticeZd,
            dim,
            leaves: default_leaves(),
            weight: None,
            measure: None,
            inner: None,
        }
    }

    pub fn weighted_line(weight: WeightRule) -> Self {
        FamilyConfig { family: FamilyTag::WeightedLine, dim: 1, weight: Some(weight), ..Self::lattice(1) }
    }

    pub fn star(leaves: usize) -> Self {
        FamilyConfig { family: FamilyTag::Star, leaves, ..Self::lattice(1) }
    }

    pub fn normalized(inner: FamilyConfig) -> Self {
        FamilyConfig {
            family: FamilyTag::NormalizedWrap,
            dim: inner.dim,
            inner: Some(Box::new(inner)),
            ..Self::lattice(1)
        }
    }

    pub fn with_weight(mut self, weight: WeightRule) -> Self {
        self.weight = Some(weight);
        self
    }

    pub fn with_measure(mut self, measure: MeasureRule) -> Self {
        self.measure = Some(measure);
        self
    }

    /// Short identifier used in report rows.
    pub fn label(&self) -> String {
        match self.family {
            FamilyTag::LatticeZd => format!("Z{}", self.dim),
            FamilyTag::WeightedLine => "wline".to_string(),
            FamilyTag::Star => format!("star{}", self.leaves),
            FamilyTag::NormalizedWrap => {
                let inner = self.inner.as_deref().cloned().unwrap_or_else(|| FamilyConfig::lattice(self.dim));
                format!("norm-{}", inner.label())
            }
        }
    }

    fn weight_rule(&self) -> WeightRule {
        self.weight.unwrap_or(match self.family {
            FamilyTag::WeightedLine => WeightRule::Radial { offset: 1.0, slope: 1.0, power: 1.0 },
            _ => WeightRule::Constant { value: 1.0 },
        })
    }

    fn measure_rule(&self) -> MeasureRule {
        self.measure.unwrap_or(MeasureRule::Counting)
    }
}

/// Build the lazy provider described by `config`.
pub fn generate(config: &FamilyConfig) -> Result<Arc<dyn GraphProvider>> {
    match config.family {
        FamilyTag::LatticeZd | FamilyTag::WeightedLine => {
            let dim = if config.family == FamilyTag::WeightedLine { 1 } else { config.dim };
            Ok(Arc::new(Lattice::new(dim, config.weight_rule(), config.measure_rule())?))
        }
        FamilyTag::Star => Ok(Arc::new(Star::new(config.leaves, config.weight_rule(), config.measure_rule())?)),
        FamilyTag::NormalizedWrap => {
            let inner = match &config.inner {
                Some(inner) => (**inner).clone(),
                None => FamilyConfig { family: FamilyTag::LatticeZd, inner: None, measure: None, ..config.clone() },
            };
            if inner.family == FamilyTag::NormalizedWrap {
                return Err(Error::Config("normalized-wrap cannot wrap itself".into()));
            }
            Ok(Arc::new(NormalizedWrap::new(generate(&inner)?)))
        }
    }
}

fn radial(offset: f64, slope: f64, power: f64, r: f64) -> f64 {
    (offset + slope * r).powf(power)
}

/// Smallest reachable radius in `first, first + 1, ...` at which the radial
/// base `offset + slope * r` is not positive.
fn first_nonpositive(offset: f64, slope: f64, first: f64) -> Option<f64> {
    if !(offset.is_finite() && slope.is_finite()) {
        return Some(first);
    }
    if offset + slope * first > 0.0 {
        if slope >= 0.0 {
            return None;
        }
        let k = ((offset + slope * first) / -slope).floor();
        let mut r = first + k;
        while offset + slope * r > 0.0 {
            r += 1.0;
        }
        return Some(r);
    }
    Some(first)
}

fn check_constant(what: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} value {value} is not positive at the base vertex")))
    }
}

fn check_power(what: &str, power: f64) -> Result<()> {
    if power.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} power {power} is not finite")))
    }
}

/// `Z^d` with nearest-neighbor edges.
#[derive(Debug, Clone)]
pub struct Lattice {
    dim: usize,
    weight: WeightRule,
    measure: MeasureRule,
}

impl Lattice {
    pub fn new(dim: usize, weight: WeightRule, measure: MeasureRule) -> Result<Self> {
        if dim == 0 || dim > MAX_LATTICE_DIM {
            return Err(Error::Config(format!("lattice dimension {dim} not in 1..={MAX_LATTICE_DIM}")));
        }
        let axis_point = |r: f64| {
            let mut c = vec![0i64; dim];
            c[0] = r as i64;
            c
        };
        match weight {
            WeightRule::Constant { value } => check_constant("edge weight", value)?,
            WeightRule::Radial { offset, slope, power } => {
                check_power("edge weight", power)?;
                if let Some(r) = first_nonpositive(offset, slope, 0.5) {
                    let from = axis_point(r - 0.5);
                    let mut to = from.clone();
                    to[0] += 1;
                    return Err(Error::Config(format!(
                        "edge weight rule is not positive on the edge {from:?} ~ {to:?}"
                    )));
                }
            }
        }
        match measure {
            MeasureRule::Constant { value } => check_constant("measure", value)?,
            MeasureRule::Radial { offset, slope, power } => {
                check_power("measure", power)?;
                if let Some(r) = first_nonpositive(offset, slope, 0.0) {
                    return Err(Error::Config(format!("measure rule is not positive at vertex {:?}", axis_point(r))));
                }
            }
            MeasureRule::Counting | MeasureRule::Normalized => {}
        }
        Ok(Lattice { dim, weight, measure })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Weight of the edge from `x` to `x + e_axis`.
    fn edge_weight(&self, x: &[i64], axis: usize) -> f64 {
        match self.weight {
            WeightRule::Constant { value } => value,
            WeightRule::Radial { offset, slope, power } => {
                let r: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(j, &c)| if j == axis { (c as f64 + 0.5).abs() } else { c.abs() as f64 })
                    .sum();
                radial(offset, slope, power, r)
            }
        }
    }

    fn neighbor_list(&self, x: &[i64]) -> Vec<(Vec<i64>, f64)> {
        let mut out = Vec::with_capacity(2 * self.dim);
        for axis in 0..self.dim {
            let mut down = x.to_vec();
            down[axis] -= 1;
            let w_down = self.edge_weight(&down, axis);
            let mut up = x.to_vec();
            up[axis] += 1;
            out.push((down, w_down));
            out.push((up, self.edge_weight(x, axis)));
        }
        out
    }
}

impl GraphProvider for Lattice {
    fn neighbors(&self, x: VertexId) -> Vec<(VertexId, f64)> {
        let coords = x.to_coords(self.dim);
        self.neighbor_list(&coords)
            .into_iter()
            .map(|(c, w)| (VertexId::from_coords(&c).expect("lattice coordinate overflow"), w))
            .collect()
    }

    fn measure(&self, x: VertexId) -> f64 {
        let coords = x.to_coords(self.dim);
        match self.measure {
            MeasureRule::Constant { value } => value,
            MeasureRule::Counting => 1.0,
            MeasureRule::Normalized => self.neighbor_list(&coords).iter().map(|(_, w)| w).sum(),
            MeasureRule::Radial { offset, slope, power } => {
                let r = coords.iter().map(|c| c.abs() as f64).sum();
                radial(offset, slope, power, r)
            }
        }
    }

    fn base(&self) -> VertexId {
        VertexId::from_coords(&vec![0; self.dim]).expect("origin packs")
    }

    fn coordinates(&self, x: VertexId) -> Option<Vec<i64>> {
        Some(x.to_coords(self.dim))
    }

    fn lattice_dim(&self) -> Option<usize> {
        Some(self.dim)
    }
}

/// Finite star: center `#0` joined to leaves `#1..=#n`.
#[derive(Debug, Clone)]
pub struct Star {
    leaves: usize,
    weight: WeightRule,
    measure: MeasureRule,
}

impl Star {
    pub fn new(leaves: usize, weight: WeightRule, measure: MeasureRule) -> Result<Self> {
        if leaves == 0 {
            return Err(Error::Config("star needs at least one leaf".into()));
        }
        match weight {
            WeightRule::Constant { value } => check_constant("edge weight", value)?,
            WeightRule::Radial { offset, slope, power } => {
                check_power("edge weight", power)?;
                if let Some(r) = first_nonpositive(offset, slope, 1.0).filter(|&r| r <= leaves as f64) {
                    return Err(Error::Config(format!("edge weight rule is not positive on the edge #0 ~ #{r}")));
                }
            }
        }
        match measure {
            MeasureRule::Constant { value } => check_constant("measure", value)?,
            MeasureRule::Radial { offset, slope, power } => {
                check_power("measure", power)?;
                if let Some(r) = first_nonpositive(offset, slope, 0.0).filter(|&r| r <= leaves as f64) {
                    return Err(Error::Config(format!("measure rule is not positive at vertex #{r}")));
                }
            }
            MeasureRule::Counting | MeasureRule::Normalized => {}
        }
        Ok(Star { leaves, weight, measure })
    }

    fn leaf_weight(&self, k: u64) -> f64 {
        match self.weight {
            WeightRule::Constant { value } => value,
            WeightRule::Radial { offset, slope, power } => radial(offset, slope, power, k as f64),
        }
    }
}

impl GraphProvider for Star {
    fn neighbors(&self, x: VertexId) -> Vec<(VertexId, f64)> {
        match x.0 {
            0 => (1..=self.leaves as u64).map(|k| (VertexId(k), self.leaf_weight(k))).collect(),
            k if k <= self.leaves as u64 => vec![(VertexId(0), self.leaf_weight(k))],
            _ => Vec::new(),
        }
    }

    fn measure(&self, x: VertexId) -> f64 {
        match self.measure {
            MeasureRule::Constant { value } => value,
            MeasureRule::Counting => 1.0,
            MeasureRule::Normalized => self.neighbors(x).iter().map(|(_, w)| w).sum(),
            MeasureRule::Radial { offset, slope, power } => radial(offset, slope, power, x.0 as f64),
        }
    }

    fn base(&self) -> VertexId {
        VertexId(0)
    }
}

/// Replaces the measure of any provider by `m_x = sum_y w_xy`.
#[derive(Debug, Clone)]
pub struct NormalizedWrap {
    inner: Arc<dyn GraphProvider>,
}

impl NormalizedWrap {
    pub fn new(inner: Arc<dyn GraphProvider>) -> Self {
        NormalizedWrap { inner }
    }
}

impl GraphProvider for NormalizedWrap {
    fn neighbors(&self, x: VertexId) -> Vec<(VertexId, f64)> {
        self.inner.neighbors(x)
    }

    fn measure(&self, x: VertexId) -> f64 {
        self.inner.neighbors(x).iter().map(|(_, w)| w).sum()
    }

    fn base(&self) -> VertexId {
        self.inner.base()
    }

    fn coordinates(&self, x: VertexId) -> Option<Vec<i64>> {
        self.inner.coordinates(x)
    }

    fn lattice_dim(&self) -> Option<usize> {
        self.inner.lattice_dim()
    }
}
