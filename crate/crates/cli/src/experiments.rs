//! One function per experiment tag. Each returns the tables it produced and
//! the assertions that failed; errors abort the run.

use std::path::Path;
use std::time::Instant;

use caloric_core::caccioppoli::{check_against_baseline, ratio_sweep, Baseline, Sweep};
use caloric_core::caloric::{evolve_forward_continuous, march_backward_discrete};
use caloric_core::graph::FamilyTag;
use caloric_core::metrics::{cutoff_eta, fit_volume_exponent, verify_intrinsic};
use caloric_core::structure::{
    assemble_ancient, default_times, dimension_bound_report, extract_coefficients, solve_hierarchy,
};
use caloric_core::{
    build_window, construct_path_metric, generate, DiscreteField, Error, GraphWindow, HierarchyChain,
    LatticePolynomial, MetricData, Mode, PolyField, Result, VertexFunction,
};
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, FieldSpec, MetricChoice, Tag};
use crate::corpus::{march_steps, random_polynomial, BASELINE_TOLERANCE};
use crate::output::{num, RunReport, Table};

/// Largest allowed Lipschitz excess of a cut-off function.
pub const LIPSCHITZ_TOLERANCE: f64 = 1e-12;

/// Relative error allowed in the floating-point roundtrip.
pub const ROUNDTRIP_TOLERANCE: f64 = 1e-9;

/// Run the experiment `config` describes. `seed` overrides `config.seed`.
pub fn run(config: &ExperimentConfig, seed: Option<u64>) -> Result<RunReport> {
    config.validate()?;
    let mut config = config.clone();
    if let Some(s) = seed {
        config.seed = s;
    }
    let mut report = RunReport::new(config.experiment.name(), config.to_toml());
    let start = Instant::now();
    match config.experiment {
        Tag::VerifyMetric => verify_metric(&config, &mut report)?,
        Tag::CaccioppoliSweep => caccioppoli_sweep(&config, &mut report)?,
        Tag::Dimension => dimension(&config, &mut report)?,
        Tag::StructureRoundtrip => structure_roundtrip(&config, &mut report)?,
        Tag::VolumeFit => volume_fit(&config, &mut report)?,
        Tag::Evolve => evolve(&config, &mut report)?,
    }
    report.timings.push((config.experiment.name().to_string(), start.elapsed()));
    Ok(report)
}

fn window_of(config: &ExperimentConfig, extra_hops: u32) -> Result<GraphWindow> {
    let provider = generate(config.family()?)?;
    build_window(provider.clone(), provider.base(), config.hops()? + extra_hops)
}

fn metric_of(config: &ExperimentConfig, window: &GraphWindow) -> Result<MetricData> {
    match config.metric {
        MetricChoice::Constructed => Ok(construct_path_metric(window)),
        MetricChoice::Explicit { sigma } => MetricData::uniform(window, sigma),
    }
}

fn vertex_label(window: &GraphWindow, i: usize) -> String {
    match window.coords(i) {
        Some(c) => c.iter().map(i64::to_string).collect::<Vec<_>>().join(" "),
        None => window.id(i).to_string(),
    }
}

fn lattice_dim(config: &ExperimentConfig) -> Result<usize> {
    let family = config.family()?;
    if family.family != FamilyTag::LatticeZd {
        return Err(Error::Config(format!("experiment {} needs a lattice-zd family", config.experiment)));
    }
    Ok(family.dim)
}

fn verify_metric(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let window = window_of(config, 0)?;
    let metric = metric_of(config, &window)?;
    let intrinsic = verify_intrinsic(&window, &metric)?;
    let label = config.family()?.label();

    let mut summary =
        Table::new("verify-metric", &["family", "metric", "min_slack", "admissible", "jump_size", "coverage_radius"]);
    summary.push(vec![
        label.clone(),
        config.metric.to_string(),
        num(intrinsic.min_slack),
        intrinsic.admissible.to_string(),
        num(metric.jump_size()),
        num(metric.coverage_radius()),
    ]);
    report.check(intrinsic.admissible, || {
        format!("{label}: metric {} is not intrinsic (min slack {:e})", config.metric, intrinsic.min_slack)
    });

    let mut slacks = Table::new("slacks", &["family", "vertex", "slack"]);
    for (x, s) in &intrinsic.slacks {
        let i = window.index_of(*x).expect("slack vertices belong to the window");
        slacks.push(vec![label.clone(), vertex_label(&window, i), num(*s)]);
    }

    let mut cutoff = Table::new("cutoff", &["family", "R", "lipschitz_violation", "pass"]);
    for &r in &config.params.radii {
        let eta = cutoff_eta(&window, &metric, r)?;
        let pass = eta.lipschitz_violation <= LIPSCHITZ_TOLERANCE;
        cutoff.push(vec![label.clone(), num(r), num(eta.lipschitz_violation), pass.to_string()]);
        report.check(pass, || {
            format!("{label}: cut-off at R = {r} exceeds its Lipschitz bound by {:e}", eta.lipschitz_violation)
        });
    }
    report.tables.extend([summary, slacks, cutoff]);
    Ok(())
}

enum SweepField {
    Poly(PolyField<VertexFunction>),
    Grid(DiscreteField),
}

fn parse_poly(dim: usize, src: &str, what: &str) -> Result<LatticePolynomial> {
    LatticePolynomial::parse(dim, src).map_err(|e| Error::Config(format!("{what}: {e}")))
}

fn caccioppoli_sweep(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let dim = lattice_dim(config)?;
    let mode = config.mode()?;
    let radii = &config.params.radii;
    let label = config.family()?.label();
    let window = window_of(config, 0)?;
    let metric = metric_of(config, &window)?;

    let needs_march = config.params.fields.iter().any(|f| match f {
        FieldSpec::March { .. } => true,
        FieldSpec::Random { .. } => mode == Mode::Discrete,
        _ => false,
    });
    let r_max = radii.last().copied().unwrap_or(0.0);
    let steps = march_steps(r_max.ceil() as u32);
    let long = if needs_march {
        let w = window_of(config, steps)?;
        let m = metric_of(config, &w)?;
        Some((w, m))
    } else {
        None
    };

    let baseline = match &config.params.baseline {
        Some(path) => Some(load_baseline(path)?),
        None => None,
    };

    let mut table =
        Table::new("caccioppoli-sweep", &["family", "field", "mode", "R", "gradient", "time", "rhs", "ratio"]);
    let mut random_index = 0u64;
    for field_spec in &config.params.fields {
        let id = field_spec.id();
        let chain = |initial: &LatticePolynomial| HierarchyChain::from_initial(initial, mode);
        let field = match field_spec {
            FieldSpec::Polynomial { initial, .. } => {
                let u0 = parse_poly(dim, initial, id)?;
                SweepField::Poly(assemble_ancient(&chain(&u0))?.on_window(&window)?)
            }
            FieldSpec::Hierarchy { top, l, .. } => {
                let top = parse_poly(dim, top, id)?;
                SweepField::Poly(assemble_ancient(&solve_hierarchy(&top, *l, mode)?)?.on_window(&window)?)
            }
            FieldSpec::March { initial, .. } => {
                if mode != Mode::Discrete {
                    return Err(Error::Config(format!("field {id}: backward marching needs mode = \"discrete\"")));
                }
                let u0 = parse_poly(dim, initial, id)?;
                SweepField::Grid(march(long.as_ref().map(|(w, _)| w).expect("long window"), &u0, steps)?)
            }
            FieldSpec::Random { degree, amplitude, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(random_index));
                random_index += 1;
                let u0 = random_polynomial(&mut rng, dim, *degree, *amplitude)?;
                report.notes.push(format!("field {id}: initial slice {u0}"));
                match mode {
                    Mode::Discrete => {
                        SweepField::Grid(march(long.as_ref().map(|(w, _)| w).expect("long window"), &u0, steps)?)
                    }
                    Mode::Continuous => SweepField::Poly(assemble_ancient(&chain(&u0))?.on_window(&window)?),
                }
            }
        };
        let sweep: Sweep = match &field {
            SweepField::Poly(f) => ratio_sweep(f, &window, &metric, radii, mode)?,
            SweepField::Grid(f) => {
                let (w, m) = long.as_ref().expect("long window");
                ratio_sweep(f, w, m, radii, mode)?
            }
        };
        for r in &sweep.reports {
            table.push(vec![
                label.clone(),
                id.to_string(),
                mode.to_string(),
                num(r.radius),
                num(r.gradient),
                num(r.time),
                num(r.rhs),
                num(r.ratio),
            ]);
            report.check(r.ratio.is_finite(), || format!("{id}: ratio at R = {} is not finite", r.radius));
        }
        report.notes.push(format!("field {id}: max ratio {}", num(sweep.max_ratio)));
        if let Some(b) = &baseline {
            let key = format!("{label}/{id}");
            for c in check_against_baseline(&key, &sweep, b, BASELINE_TOLERANCE) {
                report.check(c.pass, || match c.baseline {
                    Some(v) => format!(
                        "{key} {mode} R = {}: ratio {} outside 5% of baseline {}",
                        c.radius,
                        num(c.ratio),
                        num(v)
                    ),
                    None => format!("{key} {mode} R = {}: no baseline row", c.radius),
                });
            }
        }
    }
    report.tables.push(table);
    Ok(())
}

fn march(window: &GraphWindow, u0: &LatticePolynomial, steps: u32) -> Result<DiscreteField> {
    let f = VertexFunction::from_coords(window, |x| u0.eval_f64(x))?;
    march_backward_discrete(window, &f, steps)
}

fn load_baseline(path: &Path) -> Result<Baseline> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read baseline {}: {e}", path.display())))?;
    Baseline::parse(&text)
}

fn dimension(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let mut table = Table::new(
        "dimension",
        &["d", "k", "l", "degree", "dim_H", "dim_P_continuous", "dim_P_discrete", "bound", "holds"],
    );
    for &d in &config.params.dims {
        for &k in &config.params.rates {
            let r = dimension_bound_report(d, k)?;
            table.push(vec![
                d.to_string(),
                num(k),
                r.order.to_string(),
                r.degree.to_string(),
                r.dim_harmonic.to_string(),
                r.dim_continuous.to_string(),
                r.dim_discrete.to_string(),
                num(r.bound),
                r.holds.to_string(),
            ]);
            report.check(r.holds, || format!("d = {d}, k = {k}: dimension bound {} violated", num(r.bound)));
        }
    }
    report.tables.push(table);
    Ok(())
}

fn structure_roundtrip(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let p = &config.params;
    let dim = p.dim.expect("validated");
    let provider = generate(&caloric_core::FamilyConfig::lattice(dim))?;
    let window = build_window(provider.clone(), provider.base(), p.hops.unwrap_or(6))?;

    let mut table = Table::new(
        "structure-roundtrip",
        &["d", "top", "l", "mode", "exact_residual", "exact_roundtrip", "float_rel_error", "pass"],
    );
    for top_src in &p.tops {
        let top = parse_poly(dim, top_src, "top")?;
        for &l in &p.orders {
            for mode in [Mode::Continuous, Mode::Discrete] {
                let field = assemble_ancient(&solve_hierarchy(&top, l, mode)?)?;
                let residual = field.exact_residual();

                let samples: Vec<_> = default_times(mode, l)
                    .into_iter()
                    .map(|t| {
                        let s = field.slice(&t);
                        (t, s)
                    })
                    .collect();
                let exact = extract_coefficients(&samples, l, mode)? == field.coeffs();

                let float = field.on_window(&window)?;
                let samples: Vec<(f64, VertexFunction)> =
                    default_times(mode, l).into_iter().map(|t| (t, float.slice(t))).collect();
                let recovered = extract_coefficients(&samples, l, mode)?;
                let scale = float.coeffs().iter().map(VertexFunction::max_abs).fold(1.0, f64::max);
                let err =
                    recovered.iter().zip(float.coeffs()).map(|(a, b)| a.axpy(-1.0, b).max_abs()).fold(0.0, f64::max)
                        / scale;

                let pass = residual.is_zero() && exact && err <= ROUNDTRIP_TOLERANCE;
                table.push(vec![
                    dim.to_string(),
                    top.to_string(),
                    l.to_string(),
                    mode.to_string(),
                    residual.to_string(),
                    exact.to_string(),
                    num(err),
                    pass.to_string(),
                ]);
                report.check(pass, || format!("top {top}, l = {l}, {mode}: roundtrip failed"));
            }
        }
    }
    report.tables.push(table);
    Ok(())
}

fn volume_fit(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let window = window_of(config, 0)?;
    let metric = metric_of(config, &window)?;
    let fit = fit_volume_exponent(&window, &metric, &config.params.radii)?;
    let label = config.family()?.label();
    let mut table = Table::new("volume-fit", &["family", "R", "volume", "alpha", "constant"]);
    for (r, v) in fit.radii.iter().zip(&fit.measures) {
        table.push(vec![label.clone(), num(*r), num(*v), num(fit.alpha), num(fit.constant)]);
    }
    if let Some([lo, hi]) = config.params.alpha_range {
        report.check(lo <= fit.alpha && fit.alpha <= hi, || {
            format!("{label}: fitted exponent {} outside [{lo}, {hi}]", num(fit.alpha))
        });
    }
    report.notes.push(format!("{label}: alpha = {}", num(fit.alpha)));
    report.tables.push(table);
    Ok(())
}

fn evolve(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let dim = lattice_dim(config)?;
    let p = &config.params;
    let window = window_of(config, 0)?;
    let initial = parse_poly(dim, p.initial.as_deref().expect("validated"), "initial")?;
    let u0 = VertexFunction::from_coords(&window, |x| initial.eval_f64(x))?;
    let samples = evolve_forward_continuous(&window, &u0, p.t_end.expect("validated"), p.dt.expect("validated"))?;
    let exact = assemble_ancient(&HierarchyChain::from_initial(&initial, Mode::Continuous))?.on_window(&window)?;
    let check_hops = p.check_hops.unwrap_or(window.hops() / 3);
    let tolerance = p.tolerance.unwrap_or(1e-6);
    let near: Vec<usize> = (0..window.len()).filter(|&i| window.hop(i) <= check_hops).collect();

    let label = config.family()?.label();
    let mut table = Table::new("evolve", &["family", "t", "max_error", "mass"]);
    let mut worst: f64 = 0.0;
    for (t, u) in samples.times.iter().zip(&samples.slices) {
        let err = near.iter().map(|&i| (u.value(i) - exact.value(i, *t)).abs()).fold(0.0, f64::max);
        let mass: f64 = (0..window.len()).map(|i| u.value(i) * window.measure(i)).sum();
        worst = worst.max(err);
        table.push(vec![label.clone(), num(*t), num(err), num(mass)]);
    }
    report.check(worst <= tolerance, || format!("RK4 error {worst:e} exceeds {tolerance:e} within {check_hops} hops"));
    report.tables.push(table);
    Ok(())
}
