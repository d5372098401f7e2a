//! Execution switch and the exhaustive grid searches built on it.
//!
//! Every grid is evaluated into a vector in index order and reduced
//! sequentially, so the parallel and sequential paths return bit-identical
//! results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How independent grid cells are evaluated. Without the `parallel`
/// feature both variants run sequentially.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// `f(0..n)` collected in index order.
pub fn map_indices<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// `f` over a slice, results in slice order.
pub fn map_slice<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Resolution knobs for every grid search in the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    pub exec: Execution,
    /// Connectivity price-grid step.
    pub coarse_step: f64,
    /// Step of the single refinement pass around the best coarse cell.
    pub fine_step: f64,
    /// Content hybrid 1-D device-price grid and its refinement factor.
    pub line_points: usize,
    pub line_refine: usize,
    /// Content hybrid 2-D grid per axis and its refinement per axis.
    pub plane_points: usize,
    pub plane_refine: usize,
    /// Scan resolution for fixed points without a piecewise structure.
    pub fixed_point_grid: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            exec: Execution::default(),
            coarse_step: 1e-3,
            fine_step: 1e-5,
            line_points: 10_000,
            line_refine: 100,
            plane_points: 500,
            plane_refine: 100,
            fixed_point_grid: 10_000,
        }
    }
}

impl SearchConfig {
    /// Coarser grids for sweeps: each cell costs a few milliseconds.
    pub fn sweep() -> Self {
        SearchConfig {
            coarse_step: 1e-2,
            fine_step: 1e-4,
            line_points: 1_000,
            line_refine: 20,
            plane_points: 120,
            plane_refine: 24,
            fixed_point_grid: 400,
            ..SearchConfig::default()
        }
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }
}

/// Index of the first maximum; `None` and NaN entries are skipped.
pub fn first_argmax(values: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = *v {
            if v.is_nan() {
                continue;
            }
            match best {
                Some((_, b)) if v <= b => {}
                _ => best = Some((i, v)),
            }
        }
    }
    best.map(|(i, _)| i)
}

/// `n` evenly spaced nodes from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect()
}

/// Nodes at `step` spacing from `lo` to `hi`, both ends included.
pub fn stepped(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round().max(1.0) as usize + 1;
    linspace(lo, hi, n)
}

/// Best point of a 1-D objective over `xs`.
pub fn best_on_line<F>(exec: Execution, xs: &[f64], f: F) -> Option<(f64, f64)>
where
    F: Fn(f64) -> Option<f64> + Sync + Send,
{
    let vals = map_slice(exec, xs, |&x| f(x));
    first_argmax(&vals).map(|i| (xs[i], vals[i].unwrap()))
}

/// Coarse scan at `step` then one pass at `fine` within one coarse step of
/// the winner.
pub fn maximize_1d<F>(exec: Execution, lo: f64, hi: f64, step: f64, fine: f64, f: F) -> Option<(f64, f64)>
where
    F: Fn(f64) -> Option<f64> + Sync + Send,
{
    let coarse = best_on_line(exec, &stepped(lo, hi, step), &f)?;
    let a = (coarse.0 - step).max(lo);
    let b = (coarse.0 + step).min(hi);
    let refined = best_on_line(exec, &stepped(a, b, fine), &f)?;
    Some(if refined.1 > coarse.1 { refined } else { coarse })
}

/// Best point of a 2-D objective over the product `xs` x `ys`, row-major
/// in `x` so ties go to the lexicographically smallest pair.
pub fn best_on_plane<F>(exec: Execution, xs: &[f64], ys: &[f64], f: F) -> Option<((f64, f64), f64)>
where
    F: Fn(f64, f64) -> Option<f64> + Sync + Send,
{
    let ny = ys.len();
    let vals = map_indices(exec, xs.len() * ny, |k| f(xs[k / ny], ys[k % ny]));
    first_argmax(&vals).map(|k| ((xs[k / ny], ys[k % ny]), vals[k].unwrap()))
}

/// Nested 2-D search on a rectangle.
pub fn maximize_2d<F>(
    exec: Execution,
    x: (f64, f64),
    y: (f64, f64),
    step: f64,
    fine: f64,
    f: F,
) -> Option<((f64, f64), f64)>
where
    F: Fn(f64, f64) -> Option<f64> + Sync + Send,
{
    let coarse = best_on_plane(exec, &stepped(x.0, x.1, step), &stepped(y.0, y.1, step), &f)?;
    let (cx, cy) = coarse.0;
    let xs = stepped((cx - step).max(x.0), (cx + step).min(x.1), fine);
    let ys = stepped((cy - step).max(y.0), (cy + step).min(y.1), fine);
    let refined = best_on_plane(exec, &xs, &ys, &f)?;
    Some(if refined.1 > coarse.1 { refined } else { coarse })
}
