use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use super::{GraphProvider, VertexId};
use crate::error::{Error, Result};

/// Finite materialization of a weighted graph around a base vertex.
///
/// Vertices are stored sorted by [`VertexId`]; window indices follow that
/// order, which fixes the summation order of every aggregate in the crate.
/// Vertices within `hops` graph steps of the base form the interior, the
/// ring at exactly `hops + 1` steps the boundary. Every provider neighbor
/// of an interior vertex is present, so `Δ` and `Γ` are exact there.
#[derive(Clone)]
pub struct GraphWindow {
    ids: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    measures: Vec<f64>,
    weight_sums: Vec<f64>,
    hop: Vec<u32>,
    interior: Vec<bool>,
    hops: u32,
    base: usize,
    coords: Option<Vec<Vec<i64>>>,
    provider: Option<Arc<dyn GraphProvider>>,
}

impl fmt::Debug for GraphWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphWindow")
            .field("vertices", &self.ids.len())
            .field("interior", &self.interior.iter().filter(|&&b| b).count())
            .field("hops", &self.hops)
            .field("base", &self.ids[self.base])
            .finish()
    }
}

impl PartialEq for GraphWindow {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids
            && self.offsets == other.offsets
            && self.targets == other.targets
            && self.weights == other.weights
            && self.measures == other.measures
            && self.weight_sums == other.weight_sums
            && self.interior == other.interior
            && self.hop == other.hop
            && self.base == other.base
    }
}

/// Materialize every vertex within `hops + 1` steps of `base`.
pub fn build_window(provider: Arc<dyn GraphProvider>, base: VertexId, hops: u32) -> Result<GraphWindow> {
    if hops == 0 {
        return Err(Error::Precondition("window needs at least one interior hop".into()));
    }
    let mut hop_of: HashMap<VertexId, u32> = HashMap::new();
    let mut lists: HashMap<VertexId, Vec<(VertexId, f64)>> = HashMap::new();
    let mut queue = VecDeque::new();
    hop_of.insert(base, 0);
    queue.push_back(base);
    while let Some(x) = queue.pop_front() {
        let h = hop_of[&x];
        let nb = provider.neighbors(x);
        if h <= hops {
            for &(y, _) in &nb {
                if let std::collections::hash_map::Entry::Vacant(e) = hop_of.entry(y) {
                    e.insert(h + 1);
                    queue.push_back(y);
                }
            }
        }
        lists.insert(x, nb);
    }

    let mut ids: Vec<VertexId> = hop_of.keys().copied().collect();
    ids.sort_unstable();
    let index: HashMap<VertexId, usize> = ids.iter().enumerate().map(|(i, &x)| (x, i)).collect();

    let mut offsets = Vec::with_capacity(ids.len() + 1);
    let mut targets = Vec::new();
    let mut weights = Vec::new();
    let mut measures = Vec::with_capacity(ids.len());
    let mut weight_sums = Vec::with_capacity(ids.len());
    offsets.push(0);
    for &x in &ids {
        let m = provider.measure(x);
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Structural(format!("vertex {x} has non-positive measure {m}")));
        }
        measures.push(m);
        let mut seen = BTreeSet::new();
        let mut local: Vec<(usize, f64)> = Vec::new();
        let mut sum = 0.0;
        for &(y, w) in &lists[&x] {
            if y == x {
                return Err(Error::Structural(format!("self-loop at {x}")));
            }
            if !seen.insert(y) {
                return Err(Error::Structural(format!("parallel edges {x} ~ {y}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Structural(format!("edge {x} ~ {y} has non-positive weight {w}")));
            }
            sum += w;
            if let Some(&j) = index.get(&y) {
                local.push((j, w));
            }
        }
        local.sort_by_key(|&(j, _)| j);
        for (j, w) in local {
            targets.push(j);
            weights.push(w);
        }
        weight_sums.push(sum);
        offsets.push(targets.len());
    }

    // symmetry across every in-window edge
    for i in 0..ids.len() {
        for k in offsets[i]..offsets[i + 1] {
            let j = targets[k];
            let back = (offsets[j]..offsets[j + 1]).find(|&kk| targets[kk] == i);
            match back {
                None => {
                    return Err(Error::Structural(format!(
                        "asymmetric edge {} ~ {}: reverse edge missing",
                        ids[i], ids[j]
                    )))
                }
                Some(kk) if weights[kk] != weights[k] => {
                    return Err(Error::Structural(format!(
                        "asymmetric edge {} ~ {}: w_xy = {} but w_yx = {}",
                        ids[i], ids[j], weights[k], weights[kk]
                    )))
                }
                _ => {}
            }
        }
    }

    let hop: Vec<u32> = ids.iter().map(|x| hop_of[x]).collect();
    let interior = hop.iter().map(|&h| h <= hops).collect();
    let coords = ids.iter().map(|&x| provider.coordinates(x)).collect::<Option<Vec<_>>>();
    let window = GraphWindow {
        base: index[&base],
        ids,
        index,
        offsets,
        targets,
        weights,
        measures,
        weight_sums,
        hop,
        interior,
        hops,
        coords,
        provider: Some(provider),
    };
    if !window.is_connected() {
        return Err(Error::Structural("window is not connected".into()));
    }
    Ok(window)
}

/// Assembles a window from raw parts without any validation. Meant for
/// feeding [`validate_graph`] with deliberately broken data.
#[derive(Debug, Default)]
pub struct WindowBuilder {
    measures: Vec<(VertexId, f64)>,
    edges: Vec<(VertexId, VertexId, f64)>,
    interior: BTreeSet<VertexId>,
}

impl WindowBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(mut self, x: VertexId, measure: f64, interior: bool) -> Self {
        self.measures.push((x, measure));
        if interior {
            self.interior.insert(x);
        }
        self
    }

    /// Directed entry `x -> y` with weight `w`.
    pub fn half_edge(mut self, x: VertexId, y: VertexId, w: f64) -> Self {
        self.edges.push((x, y, w));
        self
    }

    pub fn edge(self, x: VertexId, y: VertexId, w: f64) -> Self {
        self.half_edge(x, y, w).half_edge(y, x, w)
    }

    pub fn build(self, base: VertexId) -> Result<GraphWindow> {
        let mut ids: Vec<VertexId> = self.measures.iter().map(|&(x, _)| x).collect();
        ids.sort_unstable();
        ids.dedup();
        let index: HashMap<VertexId, usize> = ids.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let mut measures = vec![0.0; ids.len()];
        for &(x, m) in &self.measures {
            measures[index[&x]] = m;
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ids.len()];
        for &(x, y, w) in &self.edges {
            let i = *index.get(&x).ok_or_else(|| Error::vertex_outside(x))?;
            let j = *index.get(&y).ok_or_else(|| Error::vertex_outside(y))?;
            adj[i].push((j, w));
        }
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        let mut weight_sums = Vec::new();
        for list in &mut adj {
            list.sort_by_key(|&(j, _)| j);
            weight_sums.push(list.iter().map(|&(_, w)| w).sum());
            for &(j, w) in list.iter() {
                targets.push(j);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        let interior: Vec<bool> = ids.iter().map(|x| self.interior.contains(x)).collect();
        let base = *index.get(&base).ok_or_else(|| Error::vertex_outside(base))?;
        let hop = bfs_hops(&offsets, &targets, base);
        Ok(GraphWindow {
            hops: hop.iter().copied().filter(|&h| h != u32::MAX).max().unwrap_or(0),
            ids,
            index,
            offsets,
            targets,
            weights,
            measures,
            weight_sums,
            hop,
            interior,
            base,
            coords: None,
            provider: None,
        })
    }
}

fn bfs_hops(offsets: &[usize], targets: &[usize], start: usize) -> Vec<u32> {
    let n = offsets.len() - 1;
    let mut hop = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    hop[start] = 0;
    queue.push_back(start);
    while let Some(i) = queue.pop_front() {
        for &j in &targets[offsets[i]..offsets[i + 1]] {
            if hop[j] == u32::MAX {
                hop[j] = hop[i] + 1;
                queue.push_back(j);
            }
        }
    }
    hop
}

impl GraphWindow {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> VertexId {
        self.ids[i]
    }

    pub fn index_of(&self, x: VertexId) -> Option<usize> {
        self.index.get(&x).copied()
    }

    pub(crate) fn require(&self, x: VertexId) -> Result<usize> {
        self.index_of(x).ok_or_else(|| Error::vertex_outside(x))
    }

    pub fn base(&self) -> VertexId {
        self.ids[self.base]
    }

    pub fn base_index(&self) -> usize {
        self.base
    }

    pub fn hops(&self) -> u32 {
        self.hops
    }

    /// Graph distance (in hops) from the base vertex.
    pub fn hop(&self, i: usize) -> u32 {
        self.hop[i]
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.interior[i]
    }

    pub fn interior_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.interior[i])
    }

    pub fn boundary_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.interior[i])
    }

    pub fn interior(&self) -> Vec<VertexId> {
        self.interior_indices().map(|i| self.ids[i]).collect()
    }

    pub fn boundary(&self) -> Vec<VertexId> {
        self.boundary_indices().map(|i| self.ids[i]).collect()
    }

    pub fn measure(&self, i: usize) -> f64 {
        self.measures[i]
    }

    /// `sum_y w_xy` over all provider neighbors, including those outside the
    /// window.
    pub fn weight_sum(&self, i: usize) -> f64 {
        self.weight_sums[i]
    }

    /// In-window neighbors of `i` as `(index, w_xy)`, sorted by index.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.targets[range.clone()].iter().copied().zip(self.weights[range].iter().copied())
    }

    pub(crate) fn edge_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub(crate) fn edge_target(&self, k: usize) -> usize {
        self.targets[k]
    }

    pub(crate) fn edge_weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    /// Total number of directed in-window edge entries.
    pub fn directed_edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn coords(&self, i: usize) -> Option<&[i64]> {
        self.coords.as_ref().map(|c| c[i].as_slice())
    }

    pub fn lattice_dim(&self) -> Option<usize> {
        self.provider.as_ref().and_then(|p| p.lattice_dim())
    }

    pub fn provider(&self) -> Option<&Arc<dyn GraphProvider>> {
        self.provider.as_ref()
    }

    /// `m(Ω) = sum_{x in Ω} m_x`.
    pub fn mass(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.measures[i]).sum()
    }

    fn is_connected(&self) -> bool {
        bfs_hops(&self.offsets, &self.targets, self.base).iter().all(|&h| h != u32::MAX)
    }
}

/// A single weighted-graph axiom failing inside a window.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Asymmetric { x: VertexId, y: VertexId, w_xy: f64, w_yx: Option<f64> },
    NonpositiveWeight { x: VertexId, y: VertexId, w: f64 },
    NonpositiveMeasure { x: VertexId, m: f64 },
    SelfLoop { x: VertexId },
    ParallelEdge { x: VertexId, y: VertexId },
    Disconnected { unreached: usize },
    InteriorNotClosed { x: VertexId },
}

/// Check symmetry, positivity, simplicity, connectivity and interior
/// closure. An empty list means the window is a valid weighted graph piece.
pub fn validate_graph(window: &GraphWindow) -> Vec<Violation> {
    let mut out = Vec::new();
    let ids = &window.ids;
    for i in 0..window.len() {
        let m = window.measures[i];
        if !(m > 0.0 && m.is_finite()) {
            out.push(Violation::NonpositiveMeasure { x: ids[i], m });
        }
        let mut prev = None;
        for (j, w) in window.neighbors(i) {
            if j == i {
                out.push(Violation::SelfLoop { x: ids[i] });
                continue;
            }
            if prev == Some(j) {
                if i < j {
                    out.push(Violation::ParallelEdge { x: ids[i], y: ids[j] });
                }
                continue;
            }
            prev = Some(j);
            if !(w > 0.0 && w.is_finite()) && i < j {
                out.push(Violation::NonpositiveWeight { x: ids[i], y: ids[j], w });
            }
            let back = window.neighbors(j).find(|&(k, _)| k == i).map(|(_, w)| w);
            match back {
                Some(wb) if wb == w => {}
                // report each unordered pair once
                Some(wb) if i < j => out.push(Violation::Asymmetric { x: ids[i], y: ids[j], w_xy: w, w_yx: Some(wb) }),
                None => out.push(Violation::Asymmetric { x: ids[i], y: ids[j], w_xy: w, w_yx: None }),
                _ => {}
            }
        }
    }
    let unreached = bfs_hops(&window.offsets, &window.targets, window.base).iter().filter(|&&h| h == u32::MAX).count();
    if unreached > 0 {
        out.push(Violation::Disconnected { unreached });
    }
    if let Some(provider) = &window.provider {
        for i in window.interior_indices() {
            let mut theirs: Vec<VertexId> = provider.neighbors(ids[i]).into_iter().map(|(y, _)| y).collect();
            theirs.sort_unstable();
            let ours: Vec<VertexId> = window.neighbors(i).map(|(j, _)| ids[j]).collect();
            if theirs != ours {
                out.push(Violation::InteriorNotClosed { x: ids[i] });
            }
        }
    }
    out
}

/// `Deg(x) = (sum_y w_xy) / m_x`.
pub fn weighted_degree(window: &GraphWindow, x: VertexId) -> Result<f64> {
    let i = window.require(x)?;
    Ok(window.weight_sums[i] / window.measures[i])
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSummary {
    pub max_degree: f64,
    pub argmax: VertexId,
    pub min_degree: f64,
}

impl DegreeSummary {
    pub fn of(window: &GraphWindow) -> Self {
        let mut best = (f64::NEG_INFINITY, window.base());
        let mut min = f64::INFINITY;
        for i in window.interior_indices() {
            let d = window.weight_sums[i] / window.measures[i];
            if d > best.0 {
                best = (d, window.ids[i]);
            }
            min = min.min(d);
        }
        DegreeSummary { max_degree: best.0, argmax: best.1, min_degree: min }
    }
}

/// Maximum interior degree over increasingly large windows.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeTrend {
    pub points: Vec<(u32, f64)>,
    /// The maximum degree strictly increases with every window, the
    /// signature of an unbounded Laplacian.
    pub growing: bool,
}

pub fn degree_trend(provider: Arc<dyn GraphProvider>, base: VertexId, hops: &[u32]) -> Result<DegreeTrend> {
    let mut points = Vec::with_capacity(hops.len());
    for &h in hops {
        let w = build_window(provider.clone(), base, h)?;
        points.push((h, DegreeSummary::of(&w).max_degree));
    }
    let growing = points.len() >= 2 && points.windows(2).all(|p| p[1].1 > p[0].1);
    Ok(DegreeTrend { points, growing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, FamilyConfig, MeasureRule, WeightRule};

    fn id(c: &[i64]) -> VertexId {
        VertexId::from_coords(c).unwrap()
    }

    fn coords_set(w: &GraphWindow, set: &[VertexId], d: usize) -> Vec<Vec<i64>> {
        let mut v: Vec<Vec<i64>> = set.iter().map(|x| x.to_coords(d)).collect();
        v.sort();
        let _ = w;
        v
    }

    #[test]
    fn z1_window_hops_two() {
        let p = generate(&FamilyConfig::lattice(1)).unwrap();
        let w = build_window(p.clone(), p.base(), 2).unwrap();
        assert_eq!(coords_set(&w, w.ids(), 1), (-3..=3).map(|n| vec![n]).collect::<Vec<_>>());
        assert_eq!(coords_set(&w, &w.interior(), 1), (-2..=2).map(|n| vec![n]).collect::<Vec<_>>());
        assert_eq!(coords_set(&w, &w.boundary(), 1), vec![vec![-3], vec![3]]);
        assert!(validate_graph(&w).is_empty());
    }

    #[test]
    fn star_one_hop() {
        let p = generate(&FamilyConfig::star(4)).unwrap();
        // the leaves sit one hop out, so their whole neighborhood is present
        let w = build_window(p.clone(), p.base(), 1).unwrap();
        assert_eq!(w.len(), 5);
        assert_eq!(w.interior().len(), 5);
        assert!(w.boundary().is_empty());
        assert!(validate_graph(&w).is_empty());
    }

    #[test]
    fn z2_window_bfs_oracle() {
        // oracle: enumerate the l1 ball of radius 2 and the cross of radius 1
        let mut all = Vec::new();
        let mut cross = Vec::new();
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                if a.abs() + b.abs() <= 2 {
                    all.push(vec![a, b]);
                }
                if a.abs() + b.abs() <= 1 {
                    cross.push(vec![a, b]);
                }
            }
        }
        all.sort();
        cross.sort();
        let p = generate(&FamilyConfig::lattice(2)).unwrap();
        let w = build_window(p.clone(), p.base(), 1).unwrap();
        assert_eq!(w.len(), 13);
        assert_eq!(coords_set(&w, w.ids(), 2), all);
        assert_eq!(coords_set(&w, &w.interior(), 2), cross);
    }

    #[test]
    fn rebuilding_is_idempotent() {
        let p = generate(&FamilyConfig::lattice(2).with_measure(MeasureRule::Normalized)).unwrap();
        let a = build_window(p.clone(), p.base(), 4).unwrap();
        let b = build_window(p.clone(), p.base(), 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn interior_is_closed_under_provider_neighbors() {
        let p = generate(&FamilyConfig::lattice(3)).unwrap();
        let w = build_window(p.clone(), p.base(), 3).unwrap();
        for i in w.interior_indices() {
            let mut theirs: Vec<_> = p.neighbors(w.id(i)).into_iter().map(|(y, _)| y).collect();
            theirs.sort();
            let ours: Vec<_> = w.neighbors(i).map(|(j, _)| w.id(j)).collect();
            assert_eq!(theirs, ours);
        }
    }

    #[test]
    fn injected_violations_are_reported() {
        let (a, b, c) = (VertexId(1), VertexId(2), VertexId(3));
        let ok = WindowBuilder::new()
            .vertex(a, 1.0, true)
            .vertex(b, 1.0, true)
            .vertex(c, 1.0, false)
            .edge(a, b, 1.0)
            .edge(b, c, 1.0);
        assert!(validate_graph(&ok.build(a).unwrap()).is_empty());

        let asym =
            WindowBuilder::new().vertex(a, 1.0, true).vertex(b, 1.0, true).half_edge(a, b, 1.0).half_edge(b, a, 2.0);
        let v = validate_graph(&asym.build(a).unwrap());
        assert_eq!(v, vec![Violation::Asymmetric { x: a, y: b, w_xy: 1.0, w_yx: Some(2.0) }]);

        let zero_m = WindowBuilder::new().vertex(a, 0.0, true).vertex(b, 1.0, true).edge(a, b, 1.0);
        let v = validate_graph(&zero_m.build(a).unwrap());
        assert_eq!(v, vec![Violation::NonpositiveMeasure { x: a, m: 0.0 }]);

        let split = WindowBuilder::new().vertex(a, 1.0, true).vertex(b, 1.0, true).vertex(c, 1.0, true).edge(a, b, 1.0);
        assert_eq!(validate_graph(&split.build(a).unwrap()), vec![Violation::Disconnected { unreached: 1 }]);

        let lo = WindowBuilder::new().vertex(a, 1.0, true).vertex(b, 1.0, true).edge(a, b, 1.0).half_edge(a, a, 1.0);
        assert_eq!(validate_graph(&lo.build(a).unwrap()), vec![Violation::SelfLoop { x: a }]);

        let par = WindowBuilder::new().vertex(a, 1.0, true).vertex(b, 1.0, true).edge(a, b, 1.0).edge(a, b, 1.0);
        assert_eq!(validate_graph(&par.build(a).unwrap()), vec![Violation::ParallelEdge { x: a, y: b }]);
    }

    #[derive(Debug)]
    struct Lopsided;

    impl GraphProvider for Lopsided {
        fn neighbors(&self, x: VertexId) -> Vec<(VertexId, f64)> {
            match x.0 {
                0 => vec![(VertexId(1), 1.0)],
                1 => vec![(VertexId(0), 2.0)],
                _ => vec![],
            }
        }
        fn measure(&self, _: VertexId) -> f64 {
            1.0
        }
        fn base(&self) -> VertexId {
            VertexId(0)
        }
    }

    #[test]
    fn asymmetric_provider_is_a_structural_error() {
        let err = build_window(Arc::new(Lopsided), VertexId(0), 1).unwrap_err();
        match err {
            Error::Structural(msg) => assert!(msg.contains("#0 ~ #1"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degrees() {
        let p = generate(&FamilyConfig::lattice(1)).unwrap();
        let w = build_window(p.clone(), p.base(), 3).unwrap();
        for x in w.ids() {
            assert_eq!(weighted_degree(&w, *x).unwrap(), 2.0);
        }

        let p = generate(&FamilyConfig::normalized(FamilyConfig::weighted_line(WeightRule::Radial {
            offset: 1.0,
            slope: 1.0,
            power: 2.0,
        })))
        .unwrap();
        let w = build_window(p.clone(), p.base(), 6).unwrap();
        for x in w.ids() {
            assert_eq!(weighted_degree(&w, *x).unwrap(), 1.0);
        }
    }

    #[test]
    fn weighted_line_degree_by_direct_summation() {
        let p =
            generate(&FamilyConfig::weighted_line(WeightRule::Radial { offset: 1.0, slope: 1.0, power: 1.0 })).unwrap();
        let w = build_window(p.clone(), p.base(), 10).unwrap();
        let weight = |n: i64| 1.0 + (n as f64 + 0.5).abs(); // w_{n,n+1}
        for n in -10i64..=10 {
            let expected = weight(n - 1) + weight(n);
            assert_eq!(weighted_degree(&w, id(&[n])).unwrap(), expected);
            if n != 0 {
                assert_eq!(expected, 2.0 + 2.0 * n.abs() as f64);
            }
        }
        let trend = degree_trend(p.clone(), p.base(), &[2, 4, 8, 16]).unwrap();
        assert!(trend.growing);
        let bounded = generate(&FamilyConfig::lattice(2)).unwrap();
        assert!(!degree_trend(bounded.clone(), bounded.base(), &[2, 4, 8]).unwrap().growing);
    }
}
