//! Intrinsic metrics on a window.
//!
//! A metric is stored as its edge lengths `σ_xy` together with the
//! shortest-path distances `ρ(x0, ·)` from the base vertex. For a path
//! metric `ρ(x, y) <= σ_xy` on every edge, so the intrinsic condition
//! `sum_y w_xy ρ²(x, y) <= m_x` and the cut-off Lipschitz bound are checked
//! edgewise with `σ`; the all-pairs Lipschitz bound follows from the
//! edgewise one by the triangle inequality along shortest paths.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::graph::{GraphWindow, VertexId};
use crate::operators::VertexFunction;

/// Slack tolerance for the intrinsic inequality.
pub const INTRINSIC_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricData {
    base: usize,
    dist: Vec<f64>,
    edge_len: Vec<f64>,
    jump: f64,
    coverage: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Dijkstra from `source`; ties are settled by window index, i.e. by
/// `VertexId`.
fn shortest_paths(window: &GraphWindow, edge_len: &[f64], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; window.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse(Key(0.0, source)));
    while let Some(Reverse(Key(d, i))) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        for k in window.edge_range(i) {
            let j = window.edge_target(k);
            let nd = d + edge_len[k];
            if nd < dist[j] {
                dist[j] = nd;
                heap.push(Reverse(Key(nd, j)));
            }
        }
    }
    dist
}

impl MetricData {
    fn from_lengths(window: &GraphWindow, edge_len: Vec<f64>) -> Self {
        let base = window.base_index();
        let dist = shortest_paths(window, &edge_len, base);
        let jump = edge_len.iter().cloned().fold(0.0, f64::max);
        let coverage = window.boundary_indices().map(|i| dist[i]).fold(f64::INFINITY, f64::min);
        MetricData { base, dist, edge_len, jump, coverage }
    }

    /// Path metric generated by explicit edge lengths `σ_xy`.
    pub fn from_edge_lengths(window: &GraphWindow, sigma: impl Fn(VertexId, VertexId) -> Option<f64>) -> Result<Self> {
        let mut edge_len = Vec::with_capacity(window.directed_edge_count());
        for i in 0..window.len() {
            for (j, _) in window.neighbors(i) {
                let (x, y) = (window.id(i), window.id(j));
                let s = sigma(x, y).ok_or_else(|| Error::Domain(format!("no edge length for {x} ~ {y}")))?;
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::Domain(format!("edge length {s} on {x} ~ {y} is not positive")));
                }
                if sigma(y, x) != Some(s) {
                    return Err(Error::Domain(format!("edge length on {x} ~ {y} is not symmetric")));
                }
                edge_len.push(s);
            }
        }
        Ok(Self::from_lengths(window, edge_len))
    }

    /// Every edge gets length `sigma`.
    pub fn uniform(window: &GraphWindow, sigma: f64) -> Result<Self> {
        Self::from_edge_lengths(window, |_, _| Some(sigma))
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// `ρ(x0, x)` for window index `i`.
    pub fn dist(&self, i: usize) -> f64 {
        self.dist[i]
    }

    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    /// `σ_xy` for window indices `i ~ j`.
    pub fn sigma(&self, window: &GraphWindow, i: usize, j: usize) -> Option<f64> {
        window.edge_range(i).find(|&k| window.edge_target(k) == j).map(|k| self.edge_len[k])
    }

    /// Jump size `s`: the largest edge length in the window.
    pub fn jump_size(&self) -> f64 {
        self.jump
    }

    /// Balls of radius strictly below this value lie in the interior and
    /// agree with the balls of the full graph.
    pub fn coverage_radius(&self) -> f64 {
        self.coverage
    }

    pub fn fits(&self, radius: f64) -> bool {
        radius < self.coverage
    }

    pub(crate) fn require_fit(&self, radius: f64, what: &str) -> Result<()> {
        if self.fits(radius) {
            Ok(())
        } else {
            Err(Error::Coverage(format!(
                "{what} needs radius {radius} but the window only covers balls of radius < {}",
                self.coverage
            )))
        }
    }

    /// Window indices of the closed ball `B_R(x0)`, in `VertexId` order.
    pub fn ball_indices(&self, radius: f64) -> Result<Vec<usize>> {
        if !(radius >= 0.0) {
            return Err(Error::Precondition(format!("ball radius {radius} is negative")));
        }
        self.require_fit(radius, "ball")?;
        Ok((0..self.dist.len()).filter(|&i| self.dist[i] <= radius).collect())
    }
}

/// `σ_xy = min(sqrt(m_x / D_x), sqrt(m_y / D_y))` with `D_x = sum_z w_xz`,
/// extended to `ρ(x0, ·)` by shortest paths.
pub fn construct_path_metric(window: &GraphWindow) -> MetricData {
    let scale: Vec<f64> = (0..window.len()).map(|i| (window.measure(i) / window.weight_sum(i)).sqrt()).collect();
    let mut edge_len = Vec::with_capacity(window.directed_edge_count());
    for i in 0..window.len() {
        for (j, _) in window.neighbors(i) {
            edge_len.push(scale[i].min(scale[j]));
        }
    }
    MetricData::from_lengths(window, edge_len)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicReport {
    /// `m_x - sum_y w_xy σ²_xy` for each interior vertex.
    pub slacks: Vec<(VertexId, f64)>,
    pub min_slack: f64,
    pub admissible: bool,
}

pub fn verify_intrinsic(window: &GraphWindow, metric: &MetricData) -> Result<IntrinsicReport> {
    if metric.edge_len.len() != window.directed_edge_count() {
        return Err(Error::Domain("metric edge lengths do not match the window".into()));
    }
    let mut slacks = Vec::new();
    let mut min_slack = f64::INFINITY;
    for i in window.interior_indices() {
        let load: f64 = window.edge_range(i).map(|k| window.edge_weight(k) * metric.edge_len[k].powi(2)).sum();
        let slack = window.measure(i) - load;
        min_slack = min_slack.min(slack);
        slacks.push((window.id(i), slack));
    }
    Ok(IntrinsicReport { slacks, min_slack, admissible: min_slack >= -INTRINSIC_TOLERANCE })
}

/// Closed ball `B_R(x0)`.
pub fn ball(window: &GraphWindow, metric: &MetricData, radius: f64) -> Result<Vec<VertexId>> {
    Ok(metric.ball_indices(radius)?.into_iter().map(|i| window.id(i)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffFunction {
    pub values: VertexFunction,
    pub radius: f64,
    /// `max_edges (|∇_xy η| - σ_xy / R)^+`.
    pub lipschitz_violation: f64,
}

/// `η_R(x) = max{0, min{2 - ρ(x, x0) / R, 1}}`.
pub fn cutoff_eta(window: &GraphWindow, metric: &MetricData, radius: f64) -> Result<CutoffFunction> {
    if !(radius > 0.0) {
        return Err(Error::Precondition(format!("cut-off radius {radius} must be positive")));
    }
    metric.require_fit(2.0 * radius + metric.jump, "cut-off")?;
    let eta: Vec<f64> = metric.dist.iter().map(|&d| (2.0 - d / radius).clamp(0.0, 1.0)).collect();
    let mut violation: f64 = 0.0;
    for i in 0..window.len() {
        for k in window.edge_range(i) {
            let j = window.edge_target(k);
            violation = violation.max((eta[j] - eta[i]).abs() - metric.edge_len[k] / radius);
        }
    }
    Ok(CutoffFunction { values: VertexFunction::new(window, eta)?, radius, lipschitz_violation: violation })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeGrowthFit {
    pub radii: Vec<f64>,
    pub measures: Vec<f64>,
    /// Fitted exponent `α` in `m(B_R) ≈ C (1 + R)^α`.
    pub alpha: f64,
    pub constant: f64,
    pub residuals: Vec<f64>,
}

/// Least-squares fit of `ln m(B_R)` against `ln(1 + R)`.
pub fn fit_volume_exponent(window: &GraphWindow, metric: &MetricData, radii: &[f64]) -> Result<VolumeGrowthFit> {
    if radii.len() < 3 {
        return Err(Error::Precondition(format!("volume fit needs at least 3 radii, got {}", radii.len())));
    }
    let mut measures = Vec::with_capacity(radii.len());
    for &r in radii {
        measures.push(window.mass(&metric.ball_indices(r)?));
    }
    let xs: Vec<f64> = radii.iter().map(|r| (1.0 + r).ln()).collect();
    let ys: Vec<f64> = measures.iter().map(|m| m.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Precondition("volume fit needs at least two distinct radii".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + alpha * x)).collect();
    Ok(VolumeGrowthFit { radii: radii.to_vec(), measures, alpha, constant: intercept.exp(), residuals })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::{build_window, generate, FamilyConfig, GraphProvider, MeasureRule, WeightRule};

    fn window(cfg: FamilyConfig, hops: u32) -> GraphWindow {
        let p: Arc<dyn GraphProvider> = generate(&cfg).unwrap();
        build_window(p.clone(), p.base(), hops).unwrap()
    }

    fn id(c: &[i64]) -> VertexId {
        VertexId::from_coords(c).unwrap()
    }

    #[test]
    fn uniform_metrics_on_z1() {
        let w = window(FamilyConfig::lattice(1), 5);
        let tight = MetricData::uniform(&w, 0.5f64.sqrt()).unwrap();
        let r = verify_intrinsic(&w, &tight).unwrap();
        assert!(r.admissible);
        assert!(r.slacks.iter().all(|(_, s)| s.abs() < 1e-15));

        let loose = MetricData::uniform(&w, 1.0).unwrap();
        let r = verify_intrinsic(&w, &loose).unwrap();
        assert!(!r.admissible);
        assert!(r.slacks.iter().all(|&(_, s)| s == -1.0));
    }

    #[test]
    fn path_metric_examples() {
        let w = window(FamilyConfig::lattice(1), 6);
        let m = construct_path_metric(&w);
        let s = 0.5f64.sqrt();
        assert_eq!(m.jump_size(), s);
        for n in -6i64..=6 {
            let d = m.dist(w.index_of(id(&[n])).unwrap());
            assert!((d - n.abs() as f64 * s).abs() < 1e-14);
        }
        assert!(verify_intrinsic(&w, &m).unwrap().admissible);

        let w = window(FamilyConfig::normalized(FamilyConfig::lattice(2)), 5);
        let m = construct_path_metric(&w);
        assert_eq!(m.jump_size(), 1.0);
        for i in 0..w.len() {
            assert_eq!(m.dist(i), w.hop(i) as f64);
        }
    }

    #[test]
    fn weighted_line_path_metric_is_admissible() {
        let w = window(FamilyConfig::weighted_line(WeightRule::Radial { offset: 1.0, slope: 1.0, power: 1.0 }), 40);
        let m = construct_path_metric(&w);
        let r = verify_intrinsic(&w, &m).unwrap();
        assert!(r.min_slack >= -INTRINSIC_TOLERANCE);
        // σ on the edge (n, n+1) decays like |n|^{-1/2}
        let sig = |n: i64| m.sigma(&w, w.index_of(id(&[n])).unwrap(), w.index_of(id(&[n + 1])).unwrap()).unwrap();
        for n in [4i64, 9, 16, 25] {
            let scaled = sig(n) * (n as f64).sqrt();
            assert!(scaled > 0.4 && scaled < 0.75, "{n}: {scaled}");
        }
        assert!(sig(30) < sig(10));
    }

    #[test]
    fn balls() {
        let w = window(FamilyConfig::lattice(1), 6);
        let m = construct_path_metric(&w);
        assert_eq!(ball(&w, &m, 0.0).unwrap(), vec![id(&[0])]);
        let mut b1: Vec<i64> = ball(&w, &m, 1.0).unwrap().iter().map(|x| x.to_coords(1)[0]).collect();
        b1.sort();
        assert_eq!(b1, vec![-1, 0, 1]);
        assert!(matches!(ball(&w, &m, 5.0), Err(Error::Coverage(_))));
        assert!(ball(&w, &m, -1.0).is_err());

        let w = window(FamilyConfig::normalized(FamilyConfig::lattice(2)), 4);
        let m = construct_path_metric(&w);
        assert_eq!(ball(&w, &m, 2.0).unwrap().len(), 13);
    }

    #[test]
    fn cutoff_values_and_lipschitz() {
        let w = window(FamilyConfig::normalized(FamilyConfig::lattice(1)), 10);
        let m = construct_path_metric(&w);
        let eta = cutoff_eta(&w, &m, 2.0).unwrap();
        let at = |n: i64| eta.values.get(&w, id(&[n])).unwrap();
        assert_eq!(at(0), 1.0);
        assert_eq!(at(2), 1.0);
        assert_eq!(at(3), 0.5);
        assert_eq!(at(4), 0.0);
        assert_eq!(at(-7), 0.0);
        assert!(eta.lipschitz_violation <= 1e-12);
        assert!(matches!(cutoff_eta(&w, &m, 5.0), Err(Error::Coverage(_))));
        assert!(cutoff_eta(&w, &m, 0.0).is_err());
    }

    #[test]
    fn cutoff_lipschitz_on_every_family() {
        let families = [
            FamilyConfig::lattice(1),
            FamilyConfig::lattice(2),
            FamilyConfig::normalized(FamilyConfig::lattice(2)),
            FamilyConfig::weighted_line(WeightRule::Radial { offset: 1.0, slope: 1.0, power: 2.0 }),
            FamilyConfig::lattice(2).with_measure(MeasureRule::Radial { offset: 1.0, slope: 0.5, power: 1.0 }),
        ];
        for cfg in families {
            let w = window(cfg, 12);
            let m = construct_path_metric(&w);
            let mut r = 0.25;
            while m.fits(2.0 * r + m.jump_size()) {
                let eta = cutoff_eta(&w, &m, r).unwrap();
                assert!(eta.lipschitz_violation <= 1e-12);
                assert!(eta.values.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
                r *= 1.5;
            }
        }
    }

    #[test]
    fn missing_edge_length_is_a_domain_error() {
        let w = window(FamilyConfig::lattice(1), 3);
        let origin = id(&[0]);
        let err = MetricData::from_edge_lengths(&w, |x, y| (x != origin && y != origin).then_some(0.5));
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn volume_fit_examples() {
        // oracle: on Z^1 with σ = 1/sqrt 2, m(B_R) = 2 floor(R sqrt 2) + 1
        let w = window(FamilyConfig::lattice(1), 50);
        let m = construct_path_metric(&w);
        let fit = fit_volume_exponent(&w, &m, &[4.0, 8.0, 16.0, 32.0]).unwrap();
        for (r, mass) in fit.radii.iter().zip(&fit.measures) {
            assert_eq!(*mass, 2.0 * (r * 2f64.sqrt()).floor() + 1.0);
        }
        assert!((0.8..=1.2).contains(&fit.alpha), "{}", fit.alpha);

        let star = window(FamilyConfig::star(4), 3);
        let m = construct_path_metric(&star);
        assert!(m.coverage_radius().is_infinite());
        let fit = fit_volume_exponent(&star, &m, &[10.0, 20.0, 40.0]).unwrap();
        assert!(fit.alpha.abs() < 1e-12);
        assert!(fit_volume_exponent(&star, &m, &[1.0, 2.0]).is_err());
    }
}
