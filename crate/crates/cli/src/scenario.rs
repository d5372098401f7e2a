//! TOML scenario files.
//!
//! ```toml
//! model = "connectivity"
//!
//! [params]
//! c1 = 0.3
//! c2 = 0.2
//!
//! [params.alpha]
//! kind = "truncated_normal"
//! mean = 0.5
//! stddev = 0.2
//!
//! [sweep]
//! x = { name = "c1", lo = 0.0, hi = 1.0, n = 21 }
//! y = { name = "c2", lo = 0.0, hi = 1.0, n = 21 }
//!
//! [oracle]
//! n_users = 10000
//! price_step = 0.01
//! ```

use serde::Deserialize;
use thiserror::Error;

use netpricing::regime::{SweepAxis, SweepSpec};
use netpricing::{ConnectivityParams, ContentParams, DistributionSpec, ModelKind, ModelParams, Strategy};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: not valid UTF-8 at byte {offset}")]
    Encoding { path: String, offset: usize },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Connectivity,
    Content,
}

impl From<ModelName> for ModelKind {
    fn from(m: ModelName) -> Self {
        match m {
            ModelName::Connectivity => ModelKind::Connectivity,
            ModelName::Content => ModelKind::Content,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Uniform,
    TruncatedNormal,
}

/// A valuation law; the support comes from the model.
#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LawSection {
    pub kind: Option<LawKind>,
    pub mean: Option<f64>,
    pub stddev: Option<f64>,
}

impl LawSection {
    fn merge(self, over: LawSection) -> LawSection {
        LawSection {
            kind: over.kind.or(self.kind),
            mean: over.mean.or(self.mean),
            stddev: over.stddev.or(self.stddev),
        }
    }

    fn is_empty(&self) -> bool {
        *self == LawSection::default()
    }

    /// Normal laws default to a mid-support mean and a fifth of the width.
    pub fn spec(&self, lo: f64, hi: f64) -> DistributionSpec {
        let normal = self.kind == Some(LawKind::TruncatedNormal) || (self.kind.is_none() && self.mean.is_some());
        if normal {
            let mean = self.mean.unwrap_or(0.5 * (lo + hi));
            let sd = self.stddev.unwrap_or(0.2 * (hi - lo));
            DistributionSpec::truncated_normal(lo, hi, mean, sd)
        } else {
            DistributionSpec::uniform(lo, hi)
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub theta_bar: Option<f64>,
    pub omega: Option<f64>,
    #[serde(default)]
    pub alpha: LawSection,
    #[serde(default)]
    pub r1: LawSection,
    #[serde(default)]
    pub r2: LawSection,
}

impl ParamsSection {
    /// Fields of `over` replace those of `self`.
    pub fn merge(self, over: ParamsSection) -> ParamsSection {
        ParamsSection {
            c1: over.c1.or(self.c1),
            c2: over.c2.or(self.c2),
            gamma: over.gamma.or(self.gamma),
            lambda: over.lambda.or(self.lambda),
            theta_bar: over.theta_bar.or(self.theta_bar),
            omega: over.omega.or(self.omega),
            alpha: self.alpha.merge(over.alpha),
            r1: self.r1.merge(over.r1),
            r2: self.r2.merge(over.r2),
        }
    }

    /// Keys that only exist for the other model.
    fn foreign_keys(&self, model: ModelKind) -> Vec<&'static str> {
        let mut out = Vec::new();
        match model {
            ModelKind::Connectivity => {
                for (k, set) in [
                    ("lambda", self.lambda.is_some()),
                    ("theta_bar", self.theta_bar.is_some()),
                    ("omega", self.omega.is_some()),
                    ("r1", !self.r1.is_empty()),
                    ("r2", !self.r2.is_empty()),
                ] {
                    if set {
                        out.push(k);
                    }
                }
            }
            ModelKind::Content => {
                if !self.alpha.is_empty() {
                    out.push("alpha");
                }
            }
        }
        out
    }

    /// Model parameters; missing costs are an error, the rest default.
    pub fn build(&self, model: ModelKind) -> Result<ModelParams, String> {
        let foreign = self.foreign_keys(model);
        if !foreign.is_empty() {
            return Err(format!("keys not used by the {model} model: {}", foreign.join(", ")));
        }
        let c1 = self.c1.ok_or("missing c1")?;
        let c2 = self.c2.ok_or("missing c2")?;
        Ok(match model {
            ModelKind::Connectivity => {
                let mut p = ConnectivityParams::new(c1, c2).with_alpha(self.alpha.spec(0.0, 1.0));
                if let Some(g) = self.gamma {
                    p = p.with_gamma(g);
                }
                ModelParams::Connectivity(p)
            }
            ModelKind::Content => {
                let tb = self.theta_bar.unwrap_or(1.5);
                let lambda = self.lambda.ok_or("missing lambda")?;
                let mut p = ContentParams::new(c1, c2, lambda, tb)
                    .with_dists(self.r1.spec(0.0, tb), self.r2.spec(0.0, 1.0));
                if let Some(w) = self.omega {
                    p = p.with_omega(w);
                }
                if let Some(g) = self.gamma {
                    p = p.with_gamma(g);
                }
                ModelParams::Content(p)
            }
        })
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    Separate,
    Bundled,
    Hybrid,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub x: AxisSection,
    pub y: AxisSection,
    pub strategies: Option<Vec<StrategyName>>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub n_users: Option<usize>,
    pub price_step: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelName,
    #[serde(default)]
    pub params: ParamsSection,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub oracle: OracleSection,
}

impl Scenario {
    pub fn parse(path: &str, bytes: &[u8]) -> Result<Scenario, ScenarioError> {
        let text = std::str::from_utf8(bytes)
            .map_err(|e| ScenarioError::Encoding { path: path.to_string(), offset: e.valid_up_to() })?;
        toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|s| {
                    let (line, col) = line_col(text, s.start);
                    format!("line {line}, column {col}: ")
                })
                .unwrap_or_default();
            ScenarioError::Syntax { path: path.to_string(), message: format!("{at}{}", e.message()) }
        })
    }

    pub fn load(path: &str) -> Result<Scenario, ScenarioError> {
        let bytes = std::fs::read(path).map_err(|source| ScenarioError::Io { path: path.to_string(), source })?;
        Scenario::parse(path, &bytes)
    }

    pub fn sweep_spec(&self, params: ModelParams, path: &str) -> Result<SweepSpec, ScenarioError> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| ScenarioError::Invalid { path: path.to_string(), message: "missing [sweep] section".into() })?;
        let axis = |a: &AxisSection| SweepAxis::new(&a.name, a.lo, a.hi, a.n);
        let mut spec = SweepSpec::new(params, axis(&s.x), axis(&s.y));
        if let Some(list) = &s.strategies {
            spec.strategies = list
                .iter()
                .map(|s| match s {
                    StrategyName::Separate => Strategy::Separate,
                    StrategyName::Bundled => Strategy::Bundled,
                    StrategyName::Hybrid => Strategy::Hybrid,
                })
                .collect();
        }
        Ok(spec)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}
