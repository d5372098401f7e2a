//! Parameter containers, validation, and the shared vocabulary of strategies
//! and user-type distributions.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Shape of a user-type law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Uniform,
    TruncatedNormal,
}

/// A law on a bounded interval. `mean` and `stddev` only matter for the
/// truncated normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub kind: DistributionKind,
    pub lo: f64,
    pub hi: f64,
    pub mean: f64,
    pub stddev: f64,
}

impl DistributionSpec {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        DistributionSpec {
            kind: DistributionKind::Uniform,
            lo,
            hi,
            mean: 0.5 * (lo + hi),
            stddev: (hi - lo) / 12f64.sqrt(),
        }
    }

    pub fn truncated_normal(lo: f64, hi: f64, mean: f64, stddev: f64) -> Self {
        DistributionSpec { kind: DistributionKind::TruncatedNormal, lo, hi, mean, stddev }
    }

    pub fn is_uniform(&self) -> bool {
        self.kind == DistributionKind::Uniform
    }

    /// True when this is exactly the uniform law on `[lo, hi]`.
    pub fn is_uniform_on(&self, lo: f64, hi: f64) -> bool {
        self.is_uniform() && self.lo == lo && self.hi == hi
    }

    fn check(&self, field: &str, lo: f64, hi: f64, out: &mut Vec<Violation>) {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            out.push(Violation::new(field, format!("support [{}, {}] is empty", self.lo, self.hi)));
            return;
        }
        if self.lo != lo || self.hi != hi {
            out.push(Violation::new(
                field,
                format!("support must be [{lo}, {hi}], got [{}, {}]", self.lo, self.hi),
            ));
        }
        if self.kind == DistributionKind::TruncatedNormal {
            if !(self.stddev > 0.0 && self.stddev.is_finite()) {
                out.push(Violation::new(field, format!("stddev {} must be > 0", self.stddev)));
            }
            if !(self.lo < self.mean && self.mean < self.hi) {
                out.push(Violation::new(
                    field,
                    format!("mean {} must lie strictly inside the support", self.mean),
                ));
            }
        }
    }
}

/// Parameters of the connectivity-sharing model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityParams {
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
    pub alpha_dist: DistributionSpec,
}

impl ConnectivityParams {
    /// Uniform mobility, linear quality.
    pub fn new(c1: f64, c2: f64) -> Self {
        ConnectivityParams { c1, c2, gamma: 1.0, alpha_dist: DistributionSpec::uniform(0.0, 1.0) }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_alpha(mut self, dist: DistributionSpec) -> Self {
        self.alpha_dist = dist;
        self
    }

    /// The uniform, linear-quality case where closed forms apply.
    pub fn is_baseline(&self) -> bool {
        self.gamma == 1.0 && self.alpha_dist.is_uniform_on(0.0, 1.0)
    }
}

/// Parameters of the content-sharing model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContentParams {
    pub c1: f64,
    pub c2: f64,
    pub lambda: f64,
    pub theta_bar: f64,
    pub omega: f64,
    pub gamma: f64,
    pub r1_dist: DistributionSpec,
    pub r2_dist: DistributionSpec,
}

impl ContentParams {
    /// Uniform valuations, `omega = gamma = 1`.
    pub fn new(c1: f64, c2: f64, lambda: f64, theta_bar: f64) -> Self {
        ContentParams {
            c1,
            c2,
            lambda,
            theta_bar,
            omega: 1.0,
            gamma: 1.0,
            r1_dist: DistributionSpec::uniform(0.0, theta_bar),
            r2_dist: DistributionSpec::uniform(0.0, 1.0),
        }
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_dists(mut self, r1: DistributionSpec, r2: DistributionSpec) -> Self {
        self.r1_dist = r1;
        self.r2_dist = r2;
        self
    }

    /// Both valuations uniform on their supports.
    pub fn is_uniform(&self) -> bool {
        self.r1_dist.is_uniform() && self.r2_dist.is_uniform()
    }

    /// Uniform valuations and linear externality: the regime algebra applies.
    pub fn has_regimes(&self) -> bool {
        self.is_uniform() && self.gamma == 1.0
    }

    pub fn cost(&self) -> f64 {
        self.c1 + self.c2
    }
}

/// Either model's parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    Connectivity(ConnectivityParams),
    Content(ContentParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Connectivity(_) => ModelKind::Connectivity,
            ModelParams::Content(_) => ModelKind::Content,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        match self {
            ModelParams::Connectivity(p) => p.validate(),
            ModelParams::Content(p) => p.validate(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Connectivity,
    Content,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Connectivity => "connectivity",
            ModelKind::Content => "content",
        })
    }
}

/// Posted prices. Which fields are populated depends on the strategy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PriceProfile {
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub p12: Option<f64>,
}

impl PriceProfile {
    pub fn separate(p1: f64, p2: f64) -> Self {
        PriceProfile { p1: Some(p1), p2: Some(p2), p12: None }
    }

    pub fn bundled(p12: f64) -> Self {
        PriceProfile { p1: None, p2: None, p12: Some(p12) }
    }

    pub fn hybrid(p1: f64, p12: f64) -> Self {
        PriceProfile { p1: Some(p1), p2: None, p12: Some(p12) }
    }

    pub fn device_only(p1: f64) -> Self {
        PriceProfile { p1: Some(p1), p2: None, p12: None }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        for (name, val) in [("p1", self.p1), ("p2", self.p2), ("p12", self.p12)] {
            if let Some(x) = val {
                if !(x >= 0.0 && x.is_finite()) {
                    v.push(Violation::new(name, format!("{x} must be finite and >= 0")));
                }
            }
        }
        if let (Some(p1), Some(p12)) = (self.p1, self.p12) {
            if p12 < p1 {
                v.push(Violation::new("p12", format!("bundle price {p12} below device price {p1}")));
            }
        }
        ValidationReport { violations: v }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Separate,
    Bundled,
    Hybrid,
    DeviceOnly,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Separate => "separate",
            Strategy::Bundled => "bundled",
            Strategy::Hybrid => "hybrid",
            Strategy::DeviceOnly => "device_only",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Discriminant diagnostics of the separate-pricing first-order cubic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicDiagnostics {
    pub mu: f64,
    pub kappa: f64,
    pub root_count_in_feasible: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: &str, message: String) -> Self {
        Violation { field: field.to_string(), message }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Outcome of [`Validate::validate`]: empty means ok.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn fields(&self) -> Vec<&str> {
        self.violations.iter().map(|v| v.field.as_str()).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

pub trait Validate {
    fn validate(&self) -> ValidationReport;
}

fn in_range(field: &str, x: f64, lo: f64, hi: f64, out: &mut Vec<Violation>) {
    if !(x >= lo && x <= hi) {
        out.push(Violation::new(field, format!("{field} = {x} not in [{lo}, {hi}]")));
    }
}

fn check_gamma(gamma: f64, out: &mut Vec<Violation>) {
    if !(gamma > 0.0 && gamma <= 1.0) {
        out.push(Violation::new("gamma", format!("gamma = {gamma} not in (0, 1]")));
    }
}

impl Validate for ConnectivityParams {
    fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        in_range("c1", self.c1, 0.0, 1.0, &mut v);
        in_range("c2", self.c2, 0.0, 1.0, &mut v);
        check_gamma(self.gamma, &mut v);
        self.alpha_dist.check("alpha_dist", 0.0, 1.0, &mut v);
        ValidationReport { violations: v }
    }
}

impl Validate for ContentParams {
    fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        if !(self.theta_bar >= 1.0 && self.theta_bar.is_finite()) {
            v.push(Violation::new("theta_bar", format!("theta_bar = {} < 1", self.theta_bar)));
        }
        // Costs above the largest standalone bundle valuation are meaningless.
        let cap = if self.theta_bar.is_finite() { self.theta_bar + 1.0 } else { f64::INFINITY };
        in_range("c1", self.c1, 0.0, cap, &mut v);
        in_range("c2", self.c2, 0.0, cap, &mut v);
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            v.push(Violation::new("lambda", format!("lambda = {} must be >= 0", self.lambda)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            v.push(Violation::new("omega", format!("omega = {} must be > 0", self.omega)));
        }
        check_gamma(self.gamma, &mut v);
        if self.theta_bar >= 1.0 && self.theta_bar.is_finite() {
            self.r1_dist.check("r1_dist", 0.0, self.theta_bar, &mut v);
        }
        self.r2_dist.check("r2_dist", 0.0, 1.0, &mut v);
        ValidationReport { violations: v }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_connectivity_is_ok() {
        assert!(ConnectivityParams::new(0.3, 0.2).validate().is_ok());
    }

    #[test]
    fn device_cost_above_one_is_flagged() {
        let r = ConnectivityParams::new(1.2, 0.2).validate();
        assert_eq!(r.fields(), vec!["c1"]);
        assert!(r.to_string().contains("not in [0, 1]"));
    }

    #[test]
    fn small_theta_bar_is_flagged() {
        let r = ContentParams::new(0.1, 0.1, 0.5, 0.8).validate();
        assert!(r.fields().contains(&"theta_bar"));
    }

    #[test]
    fn content_costs_may_exceed_one() {
        assert!(ContentParams::new(1.2, 1.2, 0.2, 1.5).validate().is_ok());
        assert!(!ContentParams::new(2.6, 0.0, 0.2, 1.5).validate().is_ok());
    }

    #[test]
    fn normal_mean_must_be_interior() {
        let p = ConnectivityParams::new(0.2, 0.3)
            .with_alpha(DistributionSpec::truncated_normal(0.0, 1.0, 1.0, 0.2));
        assert_eq!(p.validate().fields(), vec!["alpha_dist"]);
        let q = p.with_alpha(DistributionSpec::truncated_normal(0.0, 1.0, 0.5, 0.0));
        assert_eq!(q.validate().fields(), vec!["alpha_dist"]);
    }

    #[test]
    fn gamma_bounds() {
        assert!(!ConnectivityParams::new(0.1, 0.1).with_gamma(0.0).validate().is_ok());
        assert!(ConnectivityParams::new(0.1, 0.1).with_gamma(0.5).validate().is_ok());
        assert!(!ContentParams::new(0.1, 0.1, 0.5, 1.5).with_gamma(1.5).validate().is_ok());
    }

    #[test]
    fn validate_does_not_mutate_and_repeats() {
        let p = ContentParams::new(0.1, 0.1, 0.5, 0.5).with_omega(-1.0);
        let a = p.validate();
        let b = p.validate();
        assert_eq!(a, b);
        assert_eq!(p, ContentParams::new(0.1, 0.1, 0.5, 0.5).with_omega(-1.0));
    }

    #[test]
    fn hybrid_prices_must_be_ordered() {
        assert!(PriceProfile::hybrid(0.5, 0.9).validate().is_ok());
        assert!(!PriceProfile::hybrid(0.9, 0.5).validate().is_ok());
        assert!(!PriceProfile::bundled(-0.1).validate().is_ok());
    }
}
