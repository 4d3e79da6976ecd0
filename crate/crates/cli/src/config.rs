//! The JSON configuration document. Every section is optional; missing
//! values fall back to the defaults of the chosen subcommand.

use std::path::PathBuf;
use std::sync::Arc;

use carleman_core::cone::c3_constant;
use carleman_core::field_kit::{make_grid, AnalyticFn, FnSpec, Grid};
use carleman_core::identity::{CutoffSpec, InequalityPreset, Region};
use carleman_core::propagation::SupportSet;
use carleman_core::solver::{manufactured_forcing, Coef, Coefficients};
use carleman_core::weights::AssumptionPreset;
use carleman_core::Point;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabConfig {
    /// Must match the subcommand when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone: Option<ConeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<SupportSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequality: Option<InequalityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd: Option<PsdConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumption: Option<AssumptionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qv: Option<QvConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ucp: Option<UcpConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagation: Option<PropagationConfig>,
}

impl LabConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Compact JSON with sorted keys.
    pub fn canonical_text(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&v).expect("value serializes")
    }

    /// SHA-256 of [`canonical_text`](Self::canonical_text), lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub bounds: Vec<(f64, f64)>,
    pub dx: f64,
    pub dt: f64,
    pub t_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid, CliError> {
        Ok(make_grid(&self.bounds, self.dx, self.dt, self.t_max, self.cfl)?)
    }
}

/// A coefficient: a number or a built-in function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefSpec {
    Const(f64),
    Func(FnSpec),
}

impl CoefSpec {
    fn build(&self, n: usize, name: &str) -> Result<Coef, CliError> {
        Ok(match self {
            CoefSpec::Const(c) if *c == 0.0 => Coef::Zero,
            CoefSpec::Const(c) => Coef::Const(*c),
            CoefSpec::Func(f) => Coef::Func(function(f, n, name)?),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<CoefSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a2: Vec<CoefSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a3: Option<CoefSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<CoefSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<CoefSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<CoefSpec>,
    /// Exact solution whose drift forcing is added to the equation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manufactured: Option<FnSpec>,
}

impl CoefficientConfig {
    pub fn build(&self, n: usize) -> Result<Coefficients, CliError> {
        let one = |c: &Option<CoefSpec>, name: &str| match c {
            Some(s) => s.build(n, name),
            None => Ok(Coef::Zero),
        };
        let mut c = Coefficients {
            a1: one(&self.a1, "a1")?,
            a2: self.a2.iter().map(|s| s.build(n, "a2")).collect::<Result<_, _>>()?,
            a3: one(&self.a3, "a3")?,
            b1: one(&self.b1, "b1")?,
            b2: one(&self.b2, "b2")?,
            f: one(&self.f, "f")?,
            source: Coef::Zero,
        };
        if let Some(u) = &self.manufactured {
            let g = manufactured_forcing(function(u, n, "manufactured")?, &c)?;
            c.source = Coef::func(g);
        }
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub u0: FnSpec,
    #[serde(default = "zero_fn")]
    pub u1: FnSpec,
}

fn zero_fn() -> FnSpec {
    FnSpec::constant(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub t: f64,
    pub x: Vec<f64>,
}

impl PointConfig {
    pub fn build(&self) -> Result<Point, CliError> {
        if self.x.is_empty() || self.x.len() > 2 {
            return Err(CliError::Config(format!(
                "a point needs one or two spatial coordinates, got {}",
                self.x.len()
            )));
        }
        Ok(Point::new(self.t, &self.x))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<PointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<FnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub varrho: Option<FnSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<Vec<f64>>,
    /// Number of witness fractions `k̃` sampled by `geometry`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witnesses: Option<usize>,
    /// Mesh size of the vertex minimality sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_times: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityConfig {
    /// `T3.2`, `T4.2`, `T5.1` or `T6.2`.
    pub preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<FnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<FnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<FnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    /// Factor `s` of the homogeneity check `gap(s·w) = s²·gap(w)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl InequalityConfig {
    /// T4.2 defaults to `c₀ = 1`, `c₁ = 4`; T6.2 needs `alpha` and `c1`
    /// and derives `c₃` when absent.
    pub fn build_preset(&self) -> Result<InequalityPreset, CliError> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| CliError::Config(format!("preset {} needs {name}", self.preset)))
        };
        Ok(match self.preset.as_str() {
            "T3.2" => InequalityPreset::T32,
            "T4.2" => InequalityPreset::T42 {
                c0: self.c0.unwrap_or(1.0),
                c1: self.c1.unwrap_or(4.0),
            },
            "T5.1" => InequalityPreset::T51,
            "T6.2" => {
                let alpha = need(self.alpha, "alpha")?;
                let c1 = need(self.c1, "c1")?;
                let c3 = match self.c3 {
                    Some(c) => c,
                    None => c3_constant(alpha, c1)?,
                };
                InequalityPreset::T62 { alpha, c1, c3, t0: self.t0.unwrap_or(0.0) }
            }
            other => return Err(CliError::Config(format!("unknown inequality preset {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsdConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<FnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Extra τ values evaluated below the certified one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_taus: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<AssumptionPreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<FnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub varrho: Option<FnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<PointConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1_norm: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QvConfig {
    /// Flat node index; the whole grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UcpConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leak_tolerance: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halo_cells: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

/// Validates `f` for dimension `n` and wraps it.
pub fn function(f: &FnSpec, n: usize, name: &str) -> Result<Arc<dyn AnalyticFn>, CliError> {
    f.validate(n)
        .map_err(|e| CliError::Config(format!("{name}: {e}")))?;
    Ok(Arc::new(f.clone()))
}
