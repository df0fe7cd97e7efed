//! Shared fixtures for the benchmarks.

use caloric_core::{build_window, construct_path_metric, generate, FamilyConfig, GraphWindow, MetricData};

/// Lattice window of `Z^dim` with its constructed metric.
pub fn lattice(dim: usize, hops: u32) -> (GraphWindow, MetricData) {
    let provider = generate(&FamilyConfig::lattice(dim)).expect("lattice families always generate");
    let window = build_window(provider.clone(), provider.base(), hops).expect("lattice windows always build");
    let metric = construct_path_metric(&window);
    (window, metric)
}
