//! Both sides of the parabolic Caccioppoli inequality
//! `R² ∫_{Q_R} Γ(u) + R⁴ ∫_{Q_R} u_t² <= C ∫_{Q_9R} u²`
//! and its integer-time analog, with radius sweeps and a baseline file for
//! the empirical constant.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::caloric::{cylinder_aggregate, Cylinder, Mode, Quantity, SpaceTimeField};
use crate::error::{Error, Result};
use crate::graph::GraphWindow;
use crate::metrics::MetricData;

/// A field counts as caloric when its residual is at most this multiple of
/// `max(1, magnitude)`.
pub const CALORIC_TOLERANCE: f64 = 1e-9;

/// Radius of the outer cylinder relative to `R`.
pub const OUTER_FACTOR: f64 = 9.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CaccioppoliReport {
    pub radius: f64,
    pub mode: Mode,
    /// `R² ∫_{Q_R} Γ(u)`
    pub gradient: f64,
    /// `R⁴ ∫_{Q_R} u_t²` or `R⁴ Σ (D_t u)²`
    pub time: f64,
    /// `∫_{Q_9R} u²`
    pub rhs: f64,
    /// `(gradient + time) / rhs`, with `0/0 = 0`.
    pub ratio: f64,
}

pub fn caccioppoli_report<F: SpaceTimeField>(
    field: &F,
    window: &GraphWindow,
    metric: &MetricData,
    radius: f64,
    mode: Mode,
) -> Result<CaccioppoliReport> {
    let s = metric.jump_size();
    if !(radius >= s) {
        return Err(Error::Precondition(format!("radius {radius} is below the jump size {s}")));
    }
    metric.require_fit(OUTER_FACTOR * radius, "the outer cylinder")?;
    let res = field.residual(window)?;
    let tol = CALORIC_TOLERANCE * field.magnitude().max(1.0);
    if res > tol {
        return Err(Error::Precondition(format!("field is not caloric: residual {res:e} exceeds {tol:e}")));
    }
    let base = window.id(metric.base());
    let inner = Cylinder::new(base, radius, mode)?;
    let outer = Cylinder::new(base, OUTER_FACTOR * radius, mode)?;
    let time_quantity = match mode {
        Mode::Continuous => Quantity::TimeDerivativeSquared,
        Mode::Discrete => Quantity::DifferenceSquared,
    };
    let r2 = radius * radius;
    let gradient = r2 * cylinder_aggregate(field, window, metric, Quantity::Gamma, &inner)?;
    let time = r2 * r2 * cylinder_aggregate(field, window, metric, time_quantity, &inner)?;
    let rhs = cylinder_aggregate(field, window, metric, Quantity::USquared, &outer)?;
    let num = gradient + time;
    let ratio = if num == 0.0 && rhs == 0.0 { 0.0 } else { num / rhs };
    Ok(CaccioppoliReport { radius, mode, gradient, time, rhs, ratio })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub reports: Vec<CaccioppoliReport>,
    pub max_ratio: f64,
}

fn at_radius(err: Error, radius: f64) -> Error {
    let tag = |m: String| format!("R = {radius}: {m}");
    match err {
        Error::Structural(m) => Error::Structural(tag(m)),
        Error::Config(m) => Error::Config(tag(m)),
        Error::Domain(m) => Error::Domain(tag(m)),
        Error::Coverage(m) => Error::Coverage(tag(m)),
        Error::Precondition(m) => Error::Precondition(tag(m)),
        Error::Resource(m) => Error::Resource(tag(m)),
        Error::Singular(m) => Error::Singular(tag(m)),
        Error::Assembly { index, detail } => Error::Assembly { index, detail: tag(detail) },
        Error::Integration(m) => Error::Integration(tag(m)),
        Error::Parse(m) => Error::Parse(tag(m)),
    }
}

/// Reports for every radius, computed in parallel and returned in input
/// order. The first failing radius (in input order) is reported.
pub fn ratio_sweep<F: SpaceTimeField>(
    field: &F,
    window: &GraphWindow,
    metric: &MetricData,
    radii: &[f64],
    mode: Mode,
) -> Result<Sweep> {
    let results: Vec<Result<CaccioppoliReport>> = radii
        .par_iter()
        .map(|&r| caccioppoli_report(field, window, metric, r, mode).map_err(|e| at_radius(e, r)))
        .collect();
    let reports = results.into_iter().collect::<Result<Vec<_>>>()?;
    let max_ratio = reports.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(Sweep { reports, max_ratio })
}

/// Checked-in calibration ratios keyed by `(field id, mode, R)`.
///
/// Text format, one row per line after a header comment:
/// `<field-id> <mode> <R> <ratio>`, whitespace separated, ratios in
/// round-trip scientific notation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Baseline {
    rows: BTreeMap<(String, Mode, String), f64>,
}

pub const BASELINE_HEADER: &str = "# field mode R ratio";

impl Baseline {
    pub fn new() -> Self {
        Baseline::default()
    }

    pub fn insert(&mut self, field: &str, mode: Mode, radius: f64, ratio: f64) -> Result<()> {
        if field.is_empty() || field.contains(char::is_whitespace) {
            return Err(Error::Domain(format!("baseline field id '{field}' must be a nonempty word")));
        }
        self.rows.insert((field.to_string(), mode, radius.to_string()), ratio);
        Ok(())
    }

    pub fn get(&self, field: &str, mode: Mode, radius: f64) -> Option<f64> {
        self.rows.get(&(field.to_string(), mode, radius.to_string())).copied()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Baseline::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("baseline line {}: {what}: '{line}'", n + 1));
            let cols: Vec<&str> = line.split_whitespace().collect();
            let [field, mode, radius, ratio] = cols[..] else {
                return Err(bad("expected 4 columns"));
            };
            let mode: Mode = mode.parse().map_err(|_| bad("bad mode"))?;
            let radius: f64 = radius.parse().map_err(|_| bad("bad radius"))?;
            let ratio: f64 = ratio.parse().map_err(|_| bad("bad ratio"))?;
            out.insert(field, mode, radius, ratio)?;
        }
        Ok(out)
    }

    pub fn render(&self) -> String {
        let mut out = String::from(BASELINE_HEADER);
        out.push('\n');
        for ((field, mode, radius), ratio) in &self.rows {
            writeln!(out, "{field} {mode} {radius} {ratio:e}").expect("writing to a String");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineCheck {
    pub radius: f64,
    pub ratio: f64,
    pub baseline: Option<f64>,
    pub pass: bool,
}

/// Compare every report with its baseline row: passes iff the ratio is
/// finite and within `rel_tol · baseline` of it. Missing rows fail.
pub fn check_against_baseline(field: &str, sweep: &Sweep, baseline: &Baseline, rel_tol: f64) -> Vec<BaselineCheck> {
    sweep
        .reports
        .iter()
        .map(|r| {
            let b = baseline.get(field, r.mode, r.radius);
            let pass = r.ratio.is_finite() && b.is_some_and(|b| (r.ratio - b).abs() <= rel_tol * b.abs());
            BaselineCheck { radius: r.radius, ratio: r.ratio, baseline: b, pass }
        })
        .collect()
}
