//! Run configuration for the command-line front end.
//!
//! Files are TOML, or JSON when the name ends in `.json`. Components are
//! written as `{ kind = "...", params = { ... } }`; see `docs/config.md`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use serde_json::{Map, Value};

use crate::analyzer::AnalyzerOptions;
use crate::aux_solver::AuxOptions;
use crate::error::{AtlasError, Result};
use crate::mesh::{Mesh, MeshSpec};
use crate::model::{Coefficient, CoefficientKind, CoefficientRange, Nonlinearity, NonlinearityKind, NonlocalFunctional};

/// Presets shipped with the binary.
pub const PRESETS: [&str; 2] = ["example-1.7", "example-1.8"];

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    pub k_max: Option<usize>,
    pub range_end: Option<f64>,
    #[serde(default)]
    pub declared_zeros: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSpec {
    pub kind: String,
    pub gamma: Option<f64>,
    pub phi: Option<ComponentSpec>,
}

/// `λ` selection: absolute values, multiples of each window's `λ₀`, and/or
/// a geometric or linear range.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSpec {
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default)]
    pub relative: Vec<f64>,
    pub range: Option<LambdaRange>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerlikeSpec {
    /// Exponent of `f(t) = t^{p-1}`; defaults to the power nonlinearity's.
    pub p: Option<f64>,
}

/// Optional overrides of solver defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub tol_fp: Option<f64>,
    pub tol_pde: Option<f64>,
    pub margin: Option<f64>,
    pub max_iters: Option<usize>,
    pub samples: Option<usize>,
    pub refine_rounds: Option<usize>,
    pub tol_t: Option<f64>,
    pub tol_g: Option<f64>,
    pub tol_residual: Option<f64>,
    pub scan_points: Option<usize>,
    pub fixed_point_scan: Option<usize>,
    pub lambda_grid: Option<usize>,
    pub bounds_slack: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub mesh: Option<MeshSpec>,
    pub nonlinearity: Option<ComponentSpec>,
    pub coefficient: Option<CoefficientSpec>,
    pub functional: Option<FunctionalSpec>,
    #[serde(default)]
    pub lambda: LambdaSpec,
    /// Window indices; all windows when absent.
    pub windows: Option<Vec<usize>>,
    #[serde(default)]
    pub powerlike: PowerlikeSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub out: Option<PathBuf>,
}

fn config_err(msg: impl std::fmt::Display) -> AtlasError {
    AtlasError::Config(msg.to_string())
}

/// Rewrap parameter errors raised while building components.
fn in_section<T>(section: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        AtlasError::InvalidParameter(m) | AtlasError::Config(m) => config_err(format!("[{section}] {m}")),
        other => other,
    })
}

fn tagged<T: serde::de::DeserializeOwned>(section: &str, kind: &str, params: &Map<String, Value>) -> Result<T> {
    let mut obj = params.clone();
    if obj.contains_key("kind") {
        return Err(config_err(format!("[{section}] `kind` belongs outside `params`")));
    }
    obj.insert("kind".into(), Value::String(kind.into()));
    serde_json::from_value(Value::Object(obj)).map_err(|e| config_err(format!("[{section}] {e}")))
}

impl RunConfig {
    pub fn from_str(text: &str, json: bool) -> Result<Self> {
        let mut cfg: RunConfig = if json {
            serde_json::from_str(text).map_err(config_err)?
        } else {
            toml::from_str(text).map_err(config_err)?
        };
        cfg.apply_preset()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e == "json");
        Self::from_str(&text, json).map_err(|e| match e {
            AtlasError::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// A preset config with nothing else set.
    pub fn preset(name: &str) -> Result<Self> {
        let mut cfg = RunConfig {
            preset: Some(name.into()),
            ..Default::default()
        };
        cfg.apply_preset()?;
        Ok(cfg)
    }

    /// Fill sections the preset defines and the file left empty.
    fn apply_preset(&mut self) -> Result<()> {
        let Some(name) = self.preset.clone() else { return Ok(()) };
        let num = |x: f64| Value::from(x);
        let (coef_kind, coef_params): (&str, Map<String, Value>) = match name.as_str() {
            "example-1.7" => ("abs_sin", Map::new()),
            "example-1.8" => {
                let p = self.powerlike.p.unwrap_or(1.5);
                let gamma = self.functional.as_ref().and_then(|f| f.gamma).unwrap_or(1.0);
                let mut m = Map::new();
                m.insert("p".into(), num(p));
                m.insert("gamma".into(), num(gamma));
                ("abs_sin_power_weight", m)
            }
            other => {
                return Err(config_err(format!("unknown preset `{other}` (known: {})", PRESETS.join(", "))));
            }
        };
        self.powerlike.p.get_or_insert(1.5);
        if self.functional.is_none() {
            self.functional = Some(FunctionalSpec {
                kind: "lp_of_u".into(),
                gamma: Some(1.0),
                phi: None,
            });
        }
        if self.coefficient.is_none() {
            self.coefficient = Some(CoefficientSpec {
                kind: coef_kind.into(),
                params: coef_params,
                k_max: Some(3),
                ..Default::default()
            });
        }
        if self.nonlinearity.is_none() {
            let p = self.powerlike.p.expect("set above");
            if p > 1.0 && p < 2.0 {
                let mut m = Map::new();
                m.insert("p".into(), num(p));
                self.nonlinearity = Some(ComponentSpec {
                    kind: "power".into(),
                    params: m,
                });
            }
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<Arc<Mesh>> {
        let spec = self.mesh.clone().unwrap_or_else(|| MeshSpec::interval(1.0, 1024));
        Ok(Arc::new(in_section("mesh", Mesh::new(&spec))?))
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        let spec = self
            .nonlinearity
            .as_ref()
            .ok_or_else(|| config_err("missing [nonlinearity] section"))?;
        let kind: NonlinearityKind = tagged("nonlinearity", &spec.kind, &spec.params)?;
        in_section("nonlinearity", Nonlinearity::new(kind))
    }

    pub fn coefficient(&self) -> Result<Coefficient> {
        let spec = self
            .coefficient
            .as_ref()
            .ok_or_else(|| config_err("missing [coefficient] section"))?;
        let kind: CoefficientKind = tagged("coefficient", &spec.kind, &spec.params)?;
        let range = CoefficientRange {
            k_max: spec.k_max,
            range_end: spec.range_end,
            declared_zeros: spec.declared_zeros.clone(),
        };
        in_section("coefficient", Coefficient::new(kind, &range))
    }

    pub fn functional(&self) -> Result<NonlocalFunctional> {
        let spec = self
            .functional
            .as_ref()
            .ok_or_else(|| config_err("missing [functional] section"))?;
        let mut obj = Map::new();
        if let Some(g) = spec.gamma {
            obj.insert("gamma".into(), Value::from(g));
        }
        if let Some(phi) = &spec.phi {
            let mut p = phi.params.clone();
            p.insert("kind".into(), Value::String(phi.kind.clone()));
            obj.insert("phi".into(), Value::Object(p));
        }
        let g: NonlocalFunctional = tagged("functional", &spec.kind, &obj)?;
        in_section("functional", g.new())
    }

    /// Exponent for the powerlike analysis.
    pub fn powerlike_p(&self) -> Result<f64> {
        if let Some(p) = self.powerlike.p {
            return Ok(p);
        }
        match self.nonlinearity()?.kind() {
            NonlinearityKind::Power { p } => Ok(p),
            other => Err(config_err(format!(
                "[powerlike] needs p, or a power nonlinearity (got {other:?})"
            ))),
        }
    }

    pub fn aux_options(&self) -> AuxOptions {
        let t = &self.tolerances;
        let d = AuxOptions::default();
        AuxOptions {
            tol_fp: t.tol_fp.unwrap_or(d.tol_fp),
            tol_pde: t.tol_pde.unwrap_or(d.tol_pde),
            max_iters: t.max_iters.unwrap_or(d.max_iters),
            margin: t.margin.unwrap_or(d.margin),
            ..d
        }
    }

    pub fn analyzer_options(&self) -> AnalyzerOptions {
        let t = &self.tolerances;
        let mut o = AnalyzerOptions::default();
        if let Some(v) = t.samples {
            o.sampling.samples = v;
        }
        if let Some(v) = t.refine_rounds {
            o.sampling.refine_rounds = v;
        }
        o.tol_t = t.tol_t.unwrap_or(o.tol_t);
        o.tol_g = t.tol_g.unwrap_or(o.tol_g);
        o.tol_pde = t.tol_residual.unwrap_or(o.tol_pde);
        o.scan_points = t.scan_points.unwrap_or(o.scan_points);
        o.fixed_point_scan = t.fixed_point_scan.unwrap_or(o.fixed_point_scan);
        o.lambda_grid = t.lambda_grid.unwrap_or(o.lambda_grid);
        o
    }

    /// Selected windows, checked against the available count.
    pub fn window_indices(&self, available: usize) -> Result<Vec<usize>> {
        match &self.windows {
            None => Ok((0..available).collect()),
            Some(w) => {
                if let Some(bad) = w.iter().find(|&&i| i >= available) {
                    return Err(config_err(format!("window {bad} requested, only {available} available")));
                }
                Ok(w.clone())
            }
        }
    }

    /// Absolute `λ` values (values plus range), validated positive.
    pub fn absolute_lambdas(&self) -> Result<Vec<f64>> {
        let mut out = self.lambda.values.clone();
        if let Some(r) = &self.lambda.range {
            if !(r.lo > 0.0 && r.hi > r.lo) || r.count < 2 {
                return Err(config_err("[lambda.range] needs 0 < lo < hi and count >= 2"));
            }
            out.extend((0..r.count).map(|k| {
                let t = k as f64 / (r.count - 1) as f64;
                if r.log {
                    r.lo * (r.hi / r.lo).powf(t)
                } else {
                    r.lo + (r.hi - r.lo) * t
                }
            }));
        }
        if out.iter().chain(&self.lambda.relative).any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(config_err("lambda values must be positive and finite"));
        }
        Ok(out)
    }

    /// `λ` values for window `i` given its `λ₀` (relative multiples first).
    pub fn lambdas_for(&self, lambda0: Option<f64>, default_relative: &[f64]) -> Result<Vec<f64>> {
        let abs = self.absolute_lambdas()?;
        let rel: &[f64] = if self.lambda.relative.is_empty() && abs.is_empty() {
            default_relative
        } else {
            &self.lambda.relative
        };
        let mut out: Vec<f64> = match lambda0 {
            Some(l0) => rel.iter().map(|r| r * l0).collect(),
            None => Vec::new(),
        };
        out.extend(abs);
        Ok(out)
    }

    pub fn bounds_slack(&self) -> f64 {
        self.tolerances.bounds_slack.unwrap_or(1e-6)
    }

    /// Validate every component before any solve starts.
    pub fn validate_for(&self, command: Command) -> Result<()> {
        self.mesh()?;
        self.absolute_lambdas()?;
        match command {
            Command::Qcurve => {
                self.nonlinearity()?;
                self.functional()?;
            }
            Command::Analyze | Command::Bounds => {
                self.nonlinearity()?;
                self.coefficient()?;
                let g = self.functional()?;
                if command == Command::Bounds && g.lp_of_u_exponent().is_none() {
                    return Err(config_err("bounds need functional kind `lp_of_u`"));
                }
            }
            Command::Powerlike => {
                let p = self.powerlike_p()?;
                if !(p > 1.0) || p == 2.0 || p > crate::powerlike::P_CAP {
                    return Err(config_err(format!(
                        "[powerlike] p = {p} outside 1 < p < 2 or 2 < p <= {}",
                        crate::powerlike::P_CAP
                    )));
                }
                self.coefficient()?;
                if self.functional()?.homogeneity().is_none() {
                    return Err(config_err("powerlike analysis needs a homogeneous functional"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Qcurve,
    Analyze,
    Powerlike,
    Bounds,
}
