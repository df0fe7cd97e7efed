//! Declarative experiment configuration (TOML).

use std::fmt;
use std::path::PathBuf;

use caloric_core::{Error, FamilyConfig, Mode, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    VerifyMetric,
    CaccioppoliSweep,
    Dimension,
    StructureRoundtrip,
    VolumeFit,
    Evolve,
}

impl Tag {
    pub const ALL: [Tag; 6] = [
        Tag::VerifyMetric,
        Tag::CaccioppoliSweep,
        Tag::Dimension,
        Tag::StructureRoundtrip,
        Tag::VolumeFit,
        Tag::Evolve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tag::VerifyMetric => "verify-metric",
            Tag::CaccioppoliSweep => "caccioppoli-sweep",
            Tag::Dimension => "dimension",
            Tag::StructureRoundtrip => "structure-roundtrip",
            Tag::VolumeFit => "volume-fit",
            Tag::Evolve => "evolve",
        }
    }

    pub fn parse(s: &str) -> Option<Tag> {
        Tag::ALL.into_iter().find(|t| t.name() == s)
    }

    /// What the experiment measures, its parameters and its CSV columns.
    pub fn explain(self) -> &'static str {
        match self {
            Tag::VerifyMetric => {
                "Intrinsic-metric check: sum_y w_xy rho(x,y)^2 <= m_x at every interior vertex, and the \
cut-off eta_R = max(0, min(2 - rho/R, 1)) satisfies |eta(x) - eta(y)| <= rho(x,y)/R on every edge.
needs: family, params.hops; optional metric (constructed | explicit sigma), params.radii (cut-offs)
writes: verify-metric.csv (family,metric,min_slack,admissible,jump_size,coverage_radius),
        slacks.csv (family,vertex,slack), cutoff.csv (family,R,lipschitz_violation,pass)"
            }
            Tag::CaccioppoliSweep => {
                "Parabolic Caccioppoli sweep: R^2 * int_{Q_R} Gamma(u) + R^4 * int_{Q_R} u_t^2 against \
int_{Q_9R} u^2 over the radii, for ancient caloric fields (sums over integer times in discrete mode).
needs: family (lattice-zd), params.hops, params.radii, params.mode, params.fields; optional \
params.baseline (ratios must stay within 5%)
writes: caccioppoli-sweep.csv (family,field,mode,R,gradient,time,rhs,ratio)"
            }
            Tag::Dimension => {
                "Dimension bound on Z^d: the space of polynomial chains (p_0..p_l), l = floor(k), \
deg p_i <= floor(2k), against (k+1) * dim of the harmonic polynomials of degree <= floor(2k).
needs: params.dims, params.rates
writes: dimension.csv (d,k,l,degree,dim_H,dim_P_continuous,dim_P_discrete,bound,holds)"
            }
            Tag::StructureRoundtrip => {
                "Hierarchy roundtrip on Z^d: solve the chain below a harmonic top, assemble the ancient \
solution, sample it at the default times and recover the chain exactly and in floating point.
needs: params.dim, params.tops, params.orders; optional params.hops (float window, default 6)
writes: structure-roundtrip.csv (d,top,l,mode,exact_residual,exact_roundtrip,float_rel_error,pass)"
            }
            Tag::VolumeFit => {
                "Volume growth: least-squares fit of log m(B_R) against log(1 + R).
needs: family, params.hops, params.radii (at least 3); optional params.alpha_range
writes: volume-fit.csv (family,R,volume,alpha,constant)"
            }
            Tag::Evolve => {
                "Forward heat flow: RK4 integration of du/dt = Laplacian(u) from a lattice polynomial, \
compared with its exact polynomial-in-time solution near the base vertex; also reports sum u m.
needs: family (lattice-zd), params.hops, params.initial, params.t_end, params.dt; optional \
params.check_hops (default hops/3), params.tolerance (default 1e-6)
writes: evolve.csv (family,t,max_error,mass)"
            }
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MetricChoice {
    /// Path metric from `σ_xy = min(sqrt(m_x / D_x), sqrt(m_y / D_y))`.
    #[default]
    Constructed,
    /// Every edge has length `sigma`.
    Explicit { sigma: f64 },
}

impl fmt::Display for MetricChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricChoice::Constructed => f.write_str("constructed"),
            MetricChoice::Explicit { sigma } => write!(f, "explicit({sigma})"),
        }
    }
}

fn default_degree() -> u32 {
    4
}

fn default_amplitude() -> i64 {
    2
}

/// A caloric field for the Caccioppoli sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    /// The polynomial-in-time solution with `u(·, 0) = initial`.
    Polynomial { id: String, initial: String },
    /// The chain solved below a harmonic `top` with `l + 1` coefficients.
    Hierarchy { id: String, top: String, l: usize },
    /// Backward march of `initial` (discrete mode only).
    March { id: String, initial: String },
    /// Seeded random integer-coefficient initial slice, marched (discrete)
    /// or expanded in time (continuous).
    Random {
        id: String,
        #[serde(default = "default_degree")]
        degree: u32,
        #[serde(default = "default_amplitude")]
        amplitude: i64,
    },
}

impl FieldSpec {
    pub fn id(&self) -> &str {
        match self {
            FieldSpec::Polynomial { id, .. }
            | FieldSpec::Hierarchy { id, .. }
            | FieldSpec::March { id, .. }
            | FieldSpec::Random { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub hops: Option<u32>,
    pub radii: Vec<f64>,
    pub mode: Option<Mode>,
    pub fields: Vec<FieldSpec>,
    pub baseline: Option<PathBuf>,
    pub dims: Vec<usize>,
    pub rates: Vec<f64>,
    pub dim: Option<usize>,
    pub tops: Vec<String>,
    pub orders: Vec<usize>,
    pub initial: Option<String>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub check_hops: Option<u32>,
    pub tolerance: Option<f64>,
    pub alpha_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Tag,
    #[serde(default)]
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub metric: MetricChoice,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn missing(tag: Tag, what: &str) -> Error {
    Error::Config(format!("experiment {tag} needs {what}"))
}

impl ExperimentConfig {
    pub fn new(experiment: Tag) -> Self {
        ExperimentConfig {
            experiment,
            family: None,
            metric: MetricChoice::default(),
            params: Params::default(),
            out: None,
            seed: 0,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn family(&self) -> Result<&FamilyConfig> {
        self.family.as_ref().ok_or_else(|| missing(self.experiment, "a [family] table"))
    }

    pub fn hops(&self) -> Result<u32> {
        self.params.hops.ok_or_else(|| missing(self.experiment, "params.hops"))
    }

    pub fn mode(&self) -> Result<Mode> {
        self.params.mode.ok_or_else(|| missing(self.experiment, "params.mode"))
    }

    /// Tag-specific required parameters and ascending radii.
    pub fn validate(&self) -> Result<()> {
        let tag = self.experiment;
        let p = &self.params;
        if p.radii.windows(2).any(|w| !(w[0] < w[1])) || p.radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("params.radii must be positive and strictly ascending".into()));
        }
        if let MetricChoice::Explicit { sigma } = self.metric {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::Config(format!("explicit metric needs a positive sigma, got {sigma}")));
            }
        }
        match tag {
            Tag::VerifyMetric => {
                self.family()?;
                self.hops()?;
            }
            Tag::CaccioppoliSweep => {
                self.family()?;
                self.hops()?;
                self.mode()?;
                if p.radii.is_empty() {
                    return Err(missing(tag, "params.radii"));
                }
                if p.fields.is_empty() {
                    return Err(missing(tag, "at least one params.fields entry"));
                }
                let mut ids: Vec<&str> = p.fields.iter().map(FieldSpec::id).collect();
                ids.sort_unstable();
                if ids.windows(2).any(|w| w[0] == w[1])
                    || ids.iter().any(|id| id.is_empty() || id.contains(char::is_whitespace))
                {
                    return Err(Error::Config("field ids must be unique nonempty words".into()));
                }
            }
            Tag::Dimension => {
                if p.dims.is_empty() || p.rates.is_empty() {
                    return Err(missing(tag, "params.dims and params.rates"));
                }
            }
            Tag::StructureRoundtrip => {
                p.dim.ok_or_else(|| missing(tag, "params.dim"))?;
                if p.tops.is_empty() || p.orders.is_empty() {
                    return Err(missing(tag, "params.tops and params.orders"));
                }
            }
            Tag::VolumeFit => {
                self.family()?;
                self.hops()?;
                if p.radii.len() < 3 {
                    return Err(missing(tag, "at least 3 params.radii"));
                }
            }
            Tag::Evolve => {
                self.family()?;
                self.hops()?;
                p.initial.as_ref().ok_or_else(|| missing(tag, "params.initial"))?;
                p.t_end.ok_or_else(|| missing(tag, "params.t_end"))?;
                p.dt.ok_or_else(|| missing(tag, "params.dt"))?;
            }
        }
        Ok(())
    }
}
