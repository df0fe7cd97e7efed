//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any failed.

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{ensure, Context, Result};
use caloric_core::caccioppoli::{check_against_baseline, Baseline};
use caloric_core::caloric::{march_backward_discrete, residual};
use caloric_core::graph::WeightRule;
use caloric_core::metrics::{cutoff_eta, fit_volume_exponent, verify_intrinsic};
use caloric_core::operators::{dt_square_defect, gamma, green_sides, laplacian_apply, nabla, telescope_check};
use caloric_core::structure::{
    assemble_ancient, certify_growth, default_times, dimension_bound_report, extract_coefficients, solve_hierarchy,
    vanishing_order_check, vanishing_order_check_numeric,
};
use caloric_core::{
    build_window, construct_path_metric, generate, FamilyConfig, GraphWindow, LatticePolynomial, MetricData, Mode,
    PolyField, SpaceTimeField, TimeSeries, VertexFunction,
};
use caloric_lab::config::{ExperimentConfig, FieldSpec, Tag};
use caloric_lab::corpus::{caccioppoli_corpus, CorpusField, Geometry, BASELINE_TOLERANCE, CORPUS_SEED};
use caloric_lab::experiments;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn window(cfg: &FamilyConfig, hops: u32) -> GraphWindow {
    let p = generate(cfg).unwrap();
    build_window(p.clone(), p.base(), hops).unwrap()
}

fn poly(d: usize, s: &str) -> LatticePolynomial {
    LatticePolynomial::parse(d, s).unwrap()
}

fn families() -> Vec<(FamilyConfig, u32)> {
    vec![
        (FamilyConfig::lattice(1), 8),
        (FamilyConfig::lattice(2), 5),
        (FamilyConfig::normalized(FamilyConfig::lattice(2)), 5),
        (FamilyConfig::weighted_line(WeightRule::Radial { offset: 1.0, slope: 1.0, power: 1.0 }), 8),
        (FamilyConfig::star(6), 1),
    ]
}

fn random_function(w: &GraphWindow, rng: &mut ChaCha8Rng, interior_only: bool) -> VertexFunction {
    let values =
        (0..w.len()).map(|i| if interior_only && !w.is_interior(i) { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
    VertexFunction::new(w, values).unwrap()
}

fn algebraic_identities() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut triples = 0;
    let mut worst_green: f64 = 0.0;
    for (cfg, hops) in families() {
        let w = window(&cfg, hops);
        for _ in 0..24 {
            let f = random_function(&w, &mut rng, false);
            let g = random_function(&w, &mut rng, true).into_finite_support(&w)?;
            let sides = green_sides(&w, &f, &g)?;
            let rel = sides.residual() / (1.0 + sides.lhs.abs());
            worst_green = worst_green.max(rel);
            ensure!(rel <= 1e-10, "{}: Green residual {rel:e}", cfg.label());
            triples += 1;

            let fg = VertexFunction::new(&w, f.values().iter().zip(g.values()).map(|(a, b)| a * b).collect())?;
            for i in 0..w.len() {
                for (j, _) in w.neighbors(i) {
                    let (x, y) = (w.id(i), w.id(j));
                    let lhs = nabla(&w, &fg, x, y)?;
                    let rhs = f.value(i) * nabla(&w, &g, x, y)? + g.value(j) * nabla(&w, &f, x, y)?;
                    ensure!((lhs - rhs).abs() <= 1e-12, "{}: product rule off by {:e}", cfg.label(), lhs - rhs);
                }
            }

            let f2 = VertexFunction::new(&w, f.values().iter().map(|v| v * v).collect())?;
            let (gf, lf2, lf) = (gamma(&w, &f)?, laplacian_apply(&w, &f2)?, laplacian_apply(&w, &f)?);
            for (i, gv) in gf.iter() {
                let a = lf2.at(i).unwrap();
                let b = 2.0 * f.value(i) * lf.at(i).unwrap();
                let scale = 1.0f64.max(a.abs() + b.abs());
                ensure!((2.0 * gv - (a - b)).abs() <= 1e-10 * scale, "{}: 2Γ identity fails at {i}", cfg.label());
            }
        }
    }
    ensure!(triples >= 100, "only {triples} Green triples");

    for _ in 0..50 {
        let series = TimeSeries::new(-60, (0..=60).map(|_| rng.gen_range(-1000..=1000) as f64).collect())?;
        for t in -59..=0 {
            ensure!(dt_square_defect(&series, t)? == 0.0, "square defect nonzero at t = {t}");
        }
        let a = rng.gen_range(-59..=0);
        let b = rng.gen_range(a..=0);
        ensure!(telescope_check(&series, a, b)? == 0.0, "telescope residual nonzero on [{a}, {b}]");
    }
    Ok(format!("{triples} Green triples, worst relative residual {worst_green:.1e}"))
}

fn intrinsic_metrics() -> Result<String> {
    let cases = [
        (FamilyConfig::lattice(1), 40),
        (FamilyConfig::lattice(2), 20),
        (FamilyConfig::normalized(FamilyConfig::lattice(2)), 20),
        (FamilyConfig::weighted_line(WeightRule::Radial { offset: 1.0, slope: 1.0, power: 1.0 }), 60),
        (FamilyConfig::star(6), 1),
    ];
    let mut worst_slack = f64::INFINITY;
    let mut cutoffs = 0;
    for (cfg, hops) in cases {
        let w = window(&cfg, hops);
        let metric = construct_path_metric(&w);
        let report = verify_intrinsic(&w, &metric)?;
        for (x, s) in &report.slacks {
            ensure!(*s >= -1e-12, "{}: slack {s:e} at {x}", cfg.label());
        }
        worst_slack = worst_slack.min(report.min_slack);
        for r in [0.5, 1.0, 2.0, 4.0, 8.0] {
            if !metric.fits(2.0 * r + metric.jump_size()) {
                continue;
            }
            let eta = cutoff_eta(&w, &metric, r)?;
            ensure!(
                eta.lipschitz_violation <= 1e-12,
                "{}: cut-off R = {r} violation {:e}",
                cfg.label(),
                eta.lipschitz_violation
            );
            cutoffs += 1;
        }
    }
    ensure!(cutoffs >= 8, "only {cutoffs} cut-off functions fit their windows");
    let z1 = window(&FamilyConfig::lattice(1), 10);
    let unit = MetricData::uniform(&z1, 1.0)?;
    let report = verify_intrinsic(&z1, &unit)?;
    ensure!(!report.admissible, "sigma = 1 on unit-weight Z1 was accepted");
    ensure!((report.min_slack + 1.0).abs() < 1e-12, "sigma = 1 slack {} (expected -1)", report.min_slack);
    Ok(format!("min slack {worst_slack:.3e}, {cutoffs} cut-offs, sigma = 1 rejected"))
}

fn caloric_construction() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for (cfg, hops, steps) in [(FamilyConfig::lattice(1), 30, 12), (FamilyConfig::lattice(2), 12, 6)] {
        let w = window(&cfg, hops);
        let u0 = random_function(&w, &mut rng, false);
        let field = march_backward_discrete(&w, &u0, steps)?;
        let r = residual(&field, &w)? / field.magnitude().max(1.0);
        worst = worst.max(r);
        ensure!(r <= 1e-12, "{}: relative march residual {r:e}", cfg.label());
    }
    // integer initial data marches exactly
    for entry in caccioppoli_corpus(CORPUS_SEED)?.iter().filter(|e| e.id.contains("random")) {
        let CorpusField::Grid(field) = &entry.field else { continue };
        let r = residual(field, &entry.geometry.window)?;
        ensure!(r <= 1e-12, "{}: march residual {r:e}", entry.id);
    }

    let eps = poly(1, "1/1000").coefficient(&[0]);
    let mut exact = 0;
    for (d, top) in [(1, "1"), (1, "x"), (2, "1"), (2, "x"), (2, "x*y"), (2, "x^2 - y^2")] {
        for l in [1, 2] {
            for mode in [Mode::Continuous, Mode::Discrete] {
                let field = assemble_ancient(&solve_hierarchy(&poly(d, top), l, mode)?)?;
                ensure!(
                    field.exact_residual() == poly(1, "0").coefficient(&[0]),
                    "top {top}, l = {l}, {mode}: residual nonzero"
                );
                exact += 1;
                for i in 0..=l {
                    let mut coeffs = field.coeffs().to_vec();
                    let bump = if i == 0 { poly(d, "x^2/2000") } else { poly(d, "1/1000") };
                    coeffs[i] = &coeffs[i] + &bump;
                    let perturbed = PolyField::new(mode, coeffs)?;
                    ensure!(
                        perturbed.exact_residual() == eps,
                        "top {top}, l = {l}, {mode}: perturbing p_{i} gives residual {}",
                        perturbed.exact_residual()
                    );
                }
            }
        }
    }
    Ok(format!("march residual {worst:.1e}, {exact} exact hierarchies, perturbation probe = 1/1000"))
}

fn structure_roundtrip() -> Result<String> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let windows = [window(&FamilyConfig::lattice(1), 6), window(&FamilyConfig::lattice(2), 6)];
    for (d, top) in [(1, "1"), (1, "x"), (2, "1"), (2, "x"), (2, "x*y"), (2, "x^2 - y^2")] {
        let w = &windows[d - 1];
        for l in 0..=3 {
            for mode in [Mode::Continuous, Mode::Discrete] {
                let field = assemble_ancient(&solve_hierarchy(&poly(d, top), l, mode)?)?;
                let samples: Vec<_> = default_times(mode, l)
                    .into_iter()
                    .map(|t| {
                        let s = field.slice(&t);
                        (t, s)
                    })
                    .collect();
                let back = extract_coefficients(&samples, l, mode)?;
                ensure!(back == field.coeffs(), "top {top}, l = {l}, {mode}: exact roundtrip differs");

                let float = field.on_window(w)?;
                let samples: Vec<_> = default_times(mode, l).into_iter().map(|t: f64| (t, float.slice(t))).collect();
                let back = extract_coefficients(&samples, l, mode)?;
                let scale = float.coeffs().iter().map(VertexFunction::max_abs).fold(1.0, f64::max);
                for (a, b) in back.iter().zip(float.coeffs()) {
                    let err = a.axpy(-1.0, b).max_abs() / scale;
                    worst = worst.max(err);
                    ensure!(err <= 1e-9, "top {top}, l = {l}, {mode}: float roundtrip error {err:e}");
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} roundtrips exact, worst float error {worst:.1e}"))
}

fn dimension_bounds() -> Result<String> {
    let z2 = dimension_bound_report(2, 1.0)?;
    ensure!(z2.dim_harmonic == 5, "dim H_2(Z2) = {}", z2.dim_harmonic);
    ensure!(z2.dim_continuous == 6 && z2.dim_discrete == 6, "dim P_2(Z2) = {}/{}", z2.dim_continuous, z2.dim_discrete);
    ensure!(z2.bound == 10.0 && z2.holds, "Z2 bound {}", z2.bound);
    let z1 = dimension_bound_report(1, 1.0)?;
    ensure!(z1.dim_harmonic == 2, "dim H_2(Z1) = {}", z1.dim_harmonic);
    ensure!(z1.dim_continuous == 3 && z1.dim_discrete == 3, "dim P_2(Z1) = {}/{}", z1.dim_continuous, z1.dim_discrete);
    ensure!(z1.bound == 4.0 && z1.holds, "Z1 bound {}", z1.bound);
    let mut reports = 0;
    for d in 1..=3 {
        for k in [0.0, 0.5, 1.0, 1.5, 2.0] {
            let r = dimension_bound_report(d, k)?;
            ensure!(r.holds, "d = {d}, k = {k}: {} / {} > {}", r.dim_continuous, r.dim_discrete, r.bound);
            reports += 1;
        }
    }
    Ok(format!("Z2: 5, 6 <= 10; Z1: 2, 3 <= 4; {reports} (d, k) reports hold"))
}

const FIT_RADII: [f64; 4] = [4.0, 8.0, 16.0, 32.0];

fn vanishing_order() -> Result<String> {
    let corpus = caccioppoli_corpus(CORPUS_SEED)?;
    let mut checked = 0;
    for entry in &corpus {
        let (Some(exact), CorpusField::Poly(field)) = (&entry.exact, &entry.field) else { continue };
        let g = &entry.geometry;
        let alpha = fit_volume_exponent(&g.window, &g.metric, &FIT_RADII)?.alpha;
        let k = exact.growth_rate() as f64;
        let cert =
            certify_growth(field, &g.window, &g.metric, k.max(1.0), 8.0f64.min(g.metric.coverage_radius() - 1.0))?;
        ensure!(cert.constant.is_finite(), "{}: no growth certificate", entry.id);
        let exact_report = vanishing_order_check(exact, k, alpha)?;
        let numeric = vanishing_order_check_numeric(field, &g.window, k, alpha)?;
        ensure!(
            exact_report.holds && numeric.holds,
            "{} {}: p_{:?} nonzero with q = {}",
            entry.id,
            entry.mode,
            exact_report.offending,
            exact_report.q
        );
        checked += 1;
    }
    Ok(format!("{checked} polynomial corpus fields vanish above q"))
}

fn baseline_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../baselines/caccioppoli.txt")
}

fn caccioppoli_boundedness() -> Result<String> {
    let path = baseline_path();
    let baseline =
        Baseline::parse(&std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?)?;
    let corpus = caccioppoli_corpus(CORPUS_SEED)?;
    let randoms = corpus.iter().filter(|e| e.id.contains("random")).count();
    ensure!(randoms == 3, "{randoms} random fields in the corpus");
    let mut rows = 0;
    let mut max_ratio: f64 = 0.0;
    for entry in &corpus {
        let sweep = entry.sweep()?;
        let scaled = entry.sweep_scaled(7.3)?;
        let expected: Vec<f64> = match entry.mode {
            Mode::Discrete => {
                (entry.geometry.metric.jump_size().ceil() as u32..=if entry.id.starts_with("Z2") { 4 } else { 8 })
                    .map(f64::from)
                    .collect()
            }
            Mode::Continuous => {
                [1.0, 2.0, 4.0, 8.0].into_iter().filter(|&r| !(entry.id.starts_with("Z2") && r > 4.0)).collect()
            }
        };
        ensure!(entry.radii == expected, "{}: radii {:?}", entry.id, entry.radii);
        for check in check_against_baseline(&entry.id, &sweep, &baseline, BASELINE_TOLERANCE) {
            ensure!(check.ratio.is_finite(), "{} R = {}: ratio not finite", entry.id, check.radius);
            ensure!(
                check.pass,
                "{} {} R = {}: ratio {} vs baseline {:?}",
                entry.id,
                entry.mode,
                check.radius,
                check.ratio,
                check.baseline
            );
            rows += 1;
            max_ratio = max_ratio.max(check.ratio);
        }
        for (a, b) in sweep.reports.iter().zip(&scaled.reports) {
            ensure!(
                (a.ratio - b.ratio).abs() <= 1e-10 * a.ratio.abs(),
                "{} R = {}: scaling moved the ratio {} -> {}",
                entry.id,
                a.radius,
                a.ratio,
                b.ratio
            );
        }
    }
    ensure!(rows == baseline.len(), "{rows} swept ratios but {} baseline rows", baseline.len());
    Ok(format!("{} fields, {rows} ratios within 5% of baseline, max ratio {max_ratio:.3e}", corpus.len()))
}

fn volume_growth() -> Result<String> {
    let mut out = Vec::new();
    for (dim, hops, lo, hi) in [(1usize, 50u32, 0.8, 1.2), (2, 70, 1.8, 2.2)] {
        let g = Geometry::lattice(dim, hops)?;
        let fit = fit_volume_exponent(&g.window, &g.metric, &FIT_RADII)?;
        for (r, m) in fit.radii.iter().zip(&fit.measures) {
            // ρ = |x|_1 · s with s = 1/sqrt(2d)
            let n = (r * (2.0 * dim as f64).sqrt() + 1e-9).floor();
            let count = if dim == 1 { 2.0 * n + 1.0 } else { 2.0 * n * n + 2.0 * n + 1.0 };
            ensure!(*m == count, "Z{dim}: m(B_{r}) = {m}, ball count {count}");
        }
        ensure!((lo..=hi).contains(&fit.alpha), "Z{dim}: alpha {} outside [{lo}, {hi}]", fit.alpha);
        out.push(format!("Z{dim} alpha {:.4}", fit.alpha));
    }
    Ok(out.join(", "))
}

fn reproducibility() -> Result<String> {
    let mut sweep = ExperimentConfig::new(Tag::CaccioppoliSweep);
    sweep.family = Some(FamilyConfig::lattice(1));
    sweep.seed = 42;
    sweep.params.hops = Some(60);
    sweep.params.radii = vec![1.0, 2.0, 3.0];
    sweep.params.mode = Some(Mode::Discrete);
    sweep.params.fields = vec![
        FieldSpec::Polynomial { id: "quad".into(), initial: "x^2".into() },
        FieldSpec::Random { id: "r1".into(), degree: 4, amplitude: 2 },
        FieldSpec::Random { id: "r2".into(), degree: 3, amplitude: 5 },
    ];
    let mut volume = ExperimentConfig::new(Tag::VolumeFit);
    volume.family = Some(FamilyConfig::lattice(2));
    volume.params.hops = Some(70);
    volume.params.radii = FIT_RADII.to_vec();
    let mut dimension = ExperimentConfig::new(Tag::Dimension);
    dimension.params.dims = vec![1, 2];
    dimension.params.rates = vec![0.5, 1.0, 2.0];

    let mut files = 0;
    for cfg in [sweep, volume, dimension] {
        let dirs = [tempfile::tempdir()?, tempfile::tempdir()?];
        for d in &dirs {
            experiments::run(&cfg, None)?.write(d.path())?;
        }
        for entry in std::fs::read_dir(dirs[0].path())? {
            let name = entry?.file_name();
            if !name.to_string_lossy().ends_with(".csv") {
                continue;
            }
            let a = std::fs::read(dirs[0].path().join(&name))?;
            let b = std::fs::read(dirs[1].path().join(&name))?;
            ensure!(a == b, "{}: {name:?} differs between runs", cfg.experiment);
            files += 1;
        }
    }
    Ok(format!("{files} CSV files byte-identical across two runs"))
}

type Criterion = (u32, &'static str, Option<Duration>, fn() -> Result<String>);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "algebraic identities", Some(Duration::from_secs(10)), algebraic_identities),
        (2, "intrinsic metrics", None, intrinsic_metrics),
        (3, "caloric construction", None, caloric_construction),
        (4, "structure roundtrip", None, structure_roundtrip),
        (5, "dimension bounds", Some(Duration::from_secs(60)), dimension_bounds),
        (6, "vanishing order", None, vanishing_order),
        (7, "caccioppoli boundedness", Some(Duration::from_secs(300)), caccioppoli_boundedness),
        (8, "volume growth", None, volume_growth),
        (9, "reproducibility", None, reproducibility),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, budget, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(p) => Err(anyhow::anyhow!(
                "panicked: {}",
                p.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default()
            )),
        };
        let elapsed = start.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(_), Some(b)) if elapsed > b => {
                Err(anyhow::anyhow!("took {:.1} s, budget {} s", elapsed.as_secs_f64(), b.as_secs()))
            }
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {n} ({name}): {detail} [{:.2} s]", elapsed.as_secs_f64()),
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}): {e:#} [{:.2} s]", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
