//! Parameter sweeps labelling every cell with the winning strategy.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connectivity::{bundling_threshold, compare_connectivity_with, pick_winner, tie_rank};
use crate::content::compare_content_with;
use crate::exec::{linspace, map_indices, SearchConfig};
use crate::fmt::g12;
use crate::params::{ModelKind, ModelParams, Strategy, ValidationReport, Violation};

const CONNECTIVITY_AXES: &[&str] = &["c1", "c2", "gamma"];
const CONTENT_AXES: &[&str] = &["c1", "c2", "lambda", "theta_bar", "omega", "gamma"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl SweepAxis {
    pub fn new(name: &str, lo: f64, hi: f64, n: usize) -> Self {
        SweepAxis { name: name.to_string(), lo, hi, n }
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.n)
    }

    fn half_step(&self) -> f64 {
        0.5 * (self.hi - self.lo) / (self.n.max(2) - 1) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub x_axis: SweepAxis,
    pub y_axis: SweepAxis,
    /// Every parameter not on an axis.
    pub fixed: ModelParams,
    pub strategies: Vec<Strategy>,
}

impl SweepSpec {
    pub fn new(fixed: ModelParams, x_axis: SweepAxis, y_axis: SweepAxis) -> Self {
        let strategies = match fixed.kind() {
            ModelKind::Connectivity => vec![Strategy::Separate, Strategy::Bundled, Strategy::Hybrid],
            ModelKind::Content => vec![Strategy::Bundled, Strategy::Hybrid],
        };
        SweepSpec { x_axis, y_axis, fixed, strategies }
    }

    pub fn model(&self) -> ModelKind {
        self.fixed.kind()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let allowed = match self.model() {
            ModelKind::Connectivity => CONNECTIVITY_AXES,
            ModelKind::Content => CONTENT_AXES,
        };
        for (field, axis) in [("x_axis", &self.x_axis), ("y_axis", &self.y_axis)] {
            if !allowed.contains(&axis.name.as_str()) {
                violations.push(Violation::new(field, format!("unknown {} parameter `{}`", self.model(), axis.name)));
            }
            if axis.n < 2 {
                violations.push(Violation::new(field, format!("needs at least 2 points, got {}", axis.n)));
            }
            if !(axis.lo < axis.hi) {
                violations.push(Violation::new(field, format!("lo {} must be below hi {}", axis.lo, axis.hi)));
            }
        }
        if self.x_axis.name == self.y_axis.name {
            violations.push(Violation::new("y_axis", "repeats the x parameter".into()));
        }
        if self.strategies.is_empty() {
            violations.push(Violation::new("strategies", "empty".into()));
        }
        if self.model() == ModelKind::Content && self.strategies.contains(&Strategy::Separate) {
            violations.push(Violation::new("strategies", "separate pricing is not defined for content".into()));
        }
        ValidationReport { violations }
    }

    /// The fixed parameters with both axis values substituted.
    pub fn params_at(&self, x: f64, y: f64) -> ModelParams {
        let mut p = self.fixed;
        set_param(&mut p, &self.x_axis.name, x);
        set_param(&mut p, &self.y_axis.name, y);
        p
    }
}

fn set_param(p: &mut ModelParams, name: &str, v: f64) {
    match p {
        ModelParams::Connectivity(c) => match name {
            "c1" => c.c1 = v,
            "c2" => c.c2 = v,
            "gamma" => c.gamma = v,
            _ => {}
        },
        ModelParams::Content(c) => match name {
            "c1" => c.c1 = v,
            "c2" => c.c2 = v,
            "lambda" => c.lambda = v,
            "theta_bar" => {
                c.theta_bar = v;
                c.r1_dist.hi = v;
            }
            "omega" => c.omega = v,
            "gamma" => c.gamma = v,
            _ => {}
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeCell {
    pub x: f64,
    pub y: f64,
    pub profit_separate: Option<f64>,
    pub profit_bundled: Option<f64>,
    pub profit_hybrid: Option<f64>,
    /// Label of the winning solution; `device_only` when the winner sells
    /// nothing but the device.
    pub winner: Option<String>,
    /// An analytic boundary passes through this cell.
    pub on_analytic_boundary: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeMap {
    pub spec: SweepSpec,
    /// Row-major with `y` outer.
    pub cells: Vec<RegimeCell>,
}

impl RegimeMap {
    pub fn cell(&self, ix: usize, iy: usize) -> &RegimeCell {
        &self.cells[iy * self.spec.x_axis.n + ix]
    }
}

/// Analytic region indicators whose flips mark a boundary.
fn analytic_sides(p: &ModelParams) -> Vec<bool> {
    match p {
        ModelParams::Connectivity(c) => vec![c.c2 > bundling_threshold(c.c1), c.c1 + c.c2 > 1.0],
        ModelParams::Content(c) => vec![c.lambda > 1.5 && 4.0 * c.c1 + c.c2 < 1.0],
    }
}

fn on_boundary(spec: &SweepSpec, x: f64, y: f64) -> bool {
    let (hx, hy) = (spec.x_axis.half_step(), spec.y_axis.half_step());
    let corners = [(-hx, -hy), (hx, -hy), (-hx, hy), (hx, hy)].map(|(dx, dy)| analytic_sides(&spec.params_at(x + dx, y + dy)));
    corners.iter().any(|c| c != &corners[0])
}

fn evaluate(spec: &SweepSpec, x: f64, y: f64, cfg: &SearchConfig) -> RegimeCell {
    let mut cell = RegimeCell {
        x,
        y,
        profit_separate: None,
        profit_bundled: None,
        profit_hybrid: None,
        winner: None,
        on_analytic_boundary: on_boundary(spec, x, y),
        error: None,
    };
    let wants = |s: Strategy| spec.strategies.contains(&s);
    match spec.params_at(x, y) {
        ModelParams::Connectivity(p) => match compare_connectivity_with(&p, cfg) {
            Ok(c) => {
                let all = [(Strategy::Separate, &c.separate), (Strategy::Bundled, &c.bundled), (Strategy::Hybrid, &c.hybrid)];
                let kept: Vec<_> = all.into_iter().filter(|(s, _)| wants(*s)).collect();
                cell.profit_separate = wants(Strategy::Separate).then_some(c.separate.profit);
                cell.profit_bundled = wants(Strategy::Bundled).then_some(c.bundled.profit);
                cell.profit_hybrid = wants(Strategy::Hybrid).then_some(c.hybrid.profit);
                if !kept.is_empty() {
                    let w = pick_winner(kept.iter().copied(), tie_rank);
                    let sol = kept.iter().find(|(s, _)| *s == w).expect("winner kept").1;
                    let label = if sol.strategy == Strategy::DeviceOnly { Strategy::DeviceOnly } else { w };
                    cell.winner = Some(label.name().to_string());
                }
            }
            Err(e) => cell.error = Some(e.to_string()),
        },
        ModelParams::Content(p) => match compare_content_with(&p, cfg) {
            Ok(c) => {
                let bundled = c.bundled.as_ref().map(|b| b.profit).filter(|_| wants(Strategy::Bundled));
                let hybrid = wants(Strategy::Hybrid).then_some(c.hybrid.profit);
                cell.profit_bundled = bundled;
                cell.profit_hybrid = hybrid;
                cell.winner = match (bundled, hybrid) {
                    (Some(_), Some(_)) => Some(c.winner_label().to_string()),
                    (Some(_), None) => Some(Strategy::Bundled.name().to_string()),
                    (None, Some(_)) => Some(c.hybrid.strategy.name().to_string()),
                    (None, None) => None,
                };
            }
            Err(e) => cell.error = Some(e.to_string()),
        },
    }
    cell
}

/// Evaluates every cell; solver failures are recorded per cell.
pub fn sweep(spec: &SweepSpec, cfg: &SearchConfig) -> Result<RegimeMap, ValidationReport> {
    let report = spec.validate();
    if !report.is_ok() {
        return Err(report);
    }
    let xs = spec.x_axis.values();
    let ys = spec.y_axis.values();
    let nx = xs.len();
    let cells = map_indices(cfg.exec, nx * ys.len(), |k| evaluate(spec, xs[k % nx], ys[k / nx], cfg));
    Ok(RegimeMap { spec: spec.clone(), cells })
}

#[derive(Debug, Error)]
pub enum SinkError {
    #[error("write failed: {0}")]
    Io(#[from] io::Error),
}

pub const CSV_HEADER: &str = "x,y,profit_separate,profit_bundled,profit_hybrid,winner,on_analytic_boundary";

fn opt(v: Option<f64>) -> String {
    v.map(g12).unwrap_or_default()
}

/// Writes the map as CSV and returns the byte count.
pub fn emit_csv<W: Write>(map: &RegimeMap, mut sink: W) -> Result<usize, SinkError> {
    let mut out = String::with_capacity(64 * (map.cells.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for c in &map.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            g12(c.x),
            g12(c.y),
            opt(c.profit_separate),
            opt(c.profit_bundled),
            opt(c.profit_hybrid),
            c.winner.as_deref().unwrap_or(""),
            c.on_analytic_boundary
        ));
    }
    sink.write_all(out.as_bytes())?;
    sink.flush()?;
    Ok(out.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ConnectivityParams, ContentParams};

    fn conn_spec(n: usize) -> SweepSpec {
        SweepSpec::new(
            ModelParams::Connectivity(ConnectivityParams::new(0.0, 0.0)),
            SweepAxis::new("c1", 0.0, 1.0, n),
            SweepAxis::new("c2", 0.0, 1.0, n),
        )
    }

    #[test]
    fn two_by_two_has_five_lines() {
        let map = sweep(&conn_spec(2), &SearchConfig::sweep()).unwrap();
        let mut buf = Vec::new();
        let n = emit_csv(&map, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(n, text.len());
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with(CSV_HEADER));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn hybrid_point_row() {
        let spec = SweepSpec::new(
            ModelParams::Connectivity(ConnectivityParams::new(0.0, 0.0)),
            SweepAxis::new("c1", 0.3, 0.4, 2),
            SweepAxis::new("c2", 0.2, 0.3, 2),
        );
        let map = sweep(&spec, &SearchConfig::sweep()).unwrap();
        let c = map.cell(0, 0);
        assert_eq!(c.winner.as_deref(), Some("hybrid"));
        assert_eq!(g12(c.profit_hybrid.unwrap()), "0.51");
    }

    #[test]
    fn winners_attain_max_and_labels_are_known() {
        let map = sweep(&conn_spec(6), &SearchConfig::sweep()).unwrap();
        for c in &map.cells {
            let w = c.winner.as_deref().unwrap();
            assert!(["separate", "bundled", "hybrid", "device_only"].contains(&w));
            let best = [c.profit_separate, c.profit_bundled, c.profit_hybrid].into_iter().flatten().fold(f64::MIN, f64::max);
            let got = match w {
                "separate" => c.profit_separate,
                "bundled" => c.profit_bundled,
                "hybrid" => c.profit_hybrid,
                _ => [c.profit_separate, c.profit_hybrid].into_iter().flatten().find(|&v| v >= best - 1e-12),
            };
            assert!(got.unwrap() >= best - 1e-12 * (1.0 + best.abs()));
        }
    }

    #[test]
    fn csv_is_deterministic_across_execution_modes() {
        use crate::exec::Execution;
        let spec = conn_spec(5);
        let render = |exec| {
            let map = sweep(&spec, &SearchConfig::sweep().with_exec(exec)).unwrap();
            let mut buf = Vec::new();
            emit_csv(&map, &mut buf).unwrap();
            buf
        };
        assert_eq!(render(Execution::Parallel), render(Execution::Sequential));
    }

    #[test]
    fn boundary_flags_follow_threshold_curve() {
        let map = sweep(&conn_spec(11), &SearchConfig::sweep()).unwrap();
        // c1 = 0: threshold at c2 = 0.75 lies between rows 7 and 8
        assert!(map.cell(0, 7).on_analytic_boundary || map.cell(0, 8).on_analytic_boundary);
        assert!(!map.cell(0, 2).on_analytic_boundary);
    }

    #[test]
    fn content_cells_leave_separate_empty() {
        let spec = SweepSpec::new(
            ModelParams::Content(ContentParams::new(0.0, 0.0, 0.95, 1.5)),
            SweepAxis::new("c1", 0.0, 1.0, 2),
            SweepAxis::new("c2", 0.0, 1.0, 2),
        );
        let map = sweep(&spec, &SearchConfig::sweep()).unwrap();
        let mut buf = Vec::new();
        emit_csv(&map, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for row in text.lines().skip(1) {
            assert_eq!(row.split(',').nth(2), Some(""));
        }
    }

    #[test]
    fn invalid_axis_rejected() {
        let mut spec = conn_spec(3);
        spec.x_axis.name = "lambda".into();
        spec.y_axis.n = 1;
        let r = sweep(&spec, &SearchConfig::sweep()).unwrap_err();
        assert_eq!(r.fields(), vec!["x_axis", "y_axis"]);
    }
}
