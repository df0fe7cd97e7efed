//! The fixed Caccioppoli corpus: caloric fields on `Z^1` and `Z^2` with
//! their radius sweeps. Shared by `calibrate` and the acceptance suite.

use std::sync::Arc;

use caloric_core::caccioppoli::{ratio_sweep, Baseline, Sweep};
use caloric_core::caloric::march_backward_discrete;
use caloric_core::structure::{assemble_ancient, monomials, solve_hierarchy};
use caloric_core::{
    build_window, construct_path_metric, generate, DiscreteField, FamilyConfig, GraphWindow, HierarchyChain,
    LatticePolynomial, MetricData, Mode, PolyField, Result, SpaceTimeField, VertexFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Seed of the random initial slices in the corpus.
pub const CORPUS_SEED: u64 = 0x5eed_2024;

/// Relative band around the calibration baseline.
pub const BASELINE_TOLERANCE: f64 = 0.05;

#[derive(Debug)]
pub struct Geometry {
    pub label: String,
    pub window: GraphWindow,
    pub metric: MetricData,
}

impl Geometry {
    pub fn lattice(dim: usize, hops: u32) -> Result<Self> {
        let cfg = FamilyConfig::lattice(dim);
        let provider = generate(&cfg)?;
        let window = build_window(provider.clone(), provider.base(), hops)?;
        let metric = construct_path_metric(&window);
        Ok(Geometry { label: cfg.label(), window, metric })
    }
}

#[derive(Debug, Clone)]
pub enum CorpusField {
    Poly(PolyField<VertexFunction>),
    Grid(DiscreteField),
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    /// `<family>/<field>`, the baseline key.
    pub id: String,
    pub mode: Mode,
    pub radii: Vec<f64>,
    pub field: CorpusField,
    /// Exact form of polynomial fields.
    pub exact: Option<PolyField<LatticePolynomial>>,
    pub geometry: Arc<Geometry>,
}

impl CorpusEntry {
    pub fn sweep(&self) -> Result<Sweep> {
        self.sweep_scaled(1.0)
    }

    /// Sweep of `lambda · u`.
    pub fn sweep_scaled(&self, lambda: f64) -> Result<Sweep> {
        let g = &self.geometry;
        match &self.field {
            CorpusField::Poly(f) if lambda == 1.0 => ratio_sweep(f, &g.window, &g.metric, &self.radii, self.mode),
            CorpusField::Poly(f) => ratio_sweep(&f.scaled(lambda), &g.window, &g.metric, &self.radii, self.mode),
            CorpusField::Grid(f) if lambda == 1.0 => ratio_sweep(f, &g.window, &g.metric, &self.radii, self.mode),
            CorpusField::Grid(f) => ratio_sweep(&f.scaled(lambda), &g.window, &g.metric, &self.radii, self.mode),
        }
    }
}

/// Random lattice polynomial of total degree `<= degree` with integer
/// coefficients drawn uniformly from `[-amplitude, amplitude]`.
pub fn random_polynomial(rng: &mut impl Rng, dim: usize, degree: u32, amplitude: i64) -> Result<LatticePolynomial> {
    let mut p = LatticePolynomial::zero(dim);
    for exps in monomials(dim, degree)? {
        p = &p + &LatticePolynomial::integer_monomial(exps, rng.gen_range(-amplitude..=amplitude));
    }
    Ok(p)
}

/// Discrete radii `⌈s⌉..=r_max` and continuous radii `{1, 2, 4, 8}` up to
/// `r_max`.
fn radii(mode: Mode, jump: f64, r_max: u32) -> Vec<f64> {
    match mode {
        Mode::Discrete => (jump.ceil().max(1.0) as u32..=r_max).map(f64::from).collect(),
        Mode::Continuous => [1.0, 2.0, 4.0, 8.0].into_iter().filter(|&r| r >= jump && r <= r_max as f64).collect(),
    }
}

fn poly_entry(geometry: &Arc<Geometry>, name: &str, chain: &HierarchyChain, r_max: u32) -> Result<CorpusEntry> {
    let exact = assemble_ancient(chain)?;
    Ok(CorpusEntry {
        id: format!("{}/{name}", geometry.label),
        mode: chain.mode(),
        radii: radii(chain.mode(), geometry.metric.jump_size(), r_max),
        field: CorpusField::Poly(exact.on_window(&geometry.window)?),
        exact: Some(exact),
        geometry: geometry.clone(),
    })
}

/// Time steps a discrete sweep up to `r_max` needs: `(9 r_max)²`.
pub fn march_steps(r_max: u32) -> u32 {
    81 * r_max * r_max
}

/// Every corpus field. `Z^1` is swept to `R = 8`, `Z^2` to `R = 4`.
pub fn caccioppoli_corpus(seed: u64) -> Result<Vec<CorpusEntry>> {
    const Z1_MAX: u32 = 8;
    const Z2_MAX: u32 = 4;
    // B_{72} on Z^1 with s = 1/sqrt 2 reaches |x| = 101; on Z^2 B_{36} reaches |x|_1 = 72
    let z1 = Arc::new(Geometry::lattice(1, 110)?);
    let z2 = Arc::new(Geometry::lattice(2, 76)?);
    let steps = march_steps(Z1_MAX);
    let z1_long = Arc::new(Geometry::lattice(1, steps + 110)?);

    let p = |d: usize, s: &str| LatticePolynomial::parse(d, s);
    let mut out = Vec::new();
    for mode in [Mode::Continuous, Mode::Discrete] {
        for (geom, d, r_max, harmonic, quadratic) in
            [(&z1, 1, Z1_MAX, "x + 5", "x^2"), (&z2, 2, Z2_MAX, "x*y + x", "x^2 + y^2")]
        {
            out.push(poly_entry(geom, "const", &solve_hierarchy(&p(d, "3")?, 0, mode)?, r_max)?);
            out.push(poly_entry(geom, "harmonic", &solve_hierarchy(&p(d, harmonic)?, 0, mode)?, r_max)?);
            out.push(poly_entry(geom, "quadratic", &HierarchyChain::from_initial(&p(d, quadratic)?, mode), r_max)?);
        }
    }
    for k in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k));
        let initial = random_polynomial(&mut rng, 1, 4, 2)?;
        let w = &z1_long.window;
        let u0 = VertexFunction::from_coords(w, |x| initial.eval_f64(x))?;
        out.push(CorpusEntry {
            id: format!("{}/random-{}", z1_long.label, k + 1),
            mode: Mode::Discrete,
            radii: radii(Mode::Discrete, z1_long.metric.jump_size(), Z1_MAX),
            field: CorpusField::Grid(march_backward_discrete(w, &u0, steps)?),
            exact: None,
            geometry: z1_long.clone(),
        });
    }
    Ok(out)
}

/// Sweep every entry in parallel and collect the ratios.
pub fn calibrate(entries: &[CorpusEntry]) -> Result<Baseline> {
    let sweeps: Vec<Sweep> = entries.par_iter().map(CorpusEntry::sweep).collect::<Result<_>>()?;
    let mut baseline = Baseline::new();
    for (entry, sweep) in entries.iter().zip(&sweeps) {
        for r in &sweep.reports {
            baseline.insert(&entry.id, entry.mode, r.radius, r.ratio)?;
        }
    }
    Ok(baseline)
}
