use serde::{Deserialize, Serialize};

use super::roots::find_root_bracketed;

/// Residual bound a fixed point must meet.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Default scan resolution.
pub const DEFAULT_GRID: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    /// Selected fixed point: the largest one, or the escalation corner.
    pub value: f64,
    pub residual: f64,
    /// Function evaluations spent.
    pub iterations: usize,
    pub all_roots: Vec<f64>,
}

/// `x - g(x)` at a node; NaN marks a 0/0 tie that the caller treats as a
/// fixed point, so it maps to zero.
fn gap<G: FnMut(f64) -> f64>(g: &mut G, x: f64) -> f64 {
    let h = x - g(x);
    if h.is_nan() {
        0.0
    } else {
        h
    }
}

fn push_root(roots: &mut Vec<f64>, r: f64) {
    if !roots.iter().any(|&q| (q - r).abs() <= 1e-12) {
        roots.push(r);
    }
}

fn finish<G: FnMut(f64) -> f64>(
    g: &mut G,
    mut roots: Vec<f64>,
    lo: f64,
    hi: f64,
    h_lo: f64,
    iterations: usize,
) -> FixedPointResult {
    roots.sort_by(f64::total_cmp);
    let value = match roots.last() {
        Some(&r) => r,
        // no crossing at all: demand runs away to whichever end the map pushes it
        None if h_lo < 0.0 => hi,
        None => lo,
    };
    let residual = if roots.is_empty() { 0.0 } else { gap(g, value).abs() };
    FixedPointResult { value, residual, iterations, all_roots: roots }
}

/// Every fixed point of `g` on `[lo, hi]` found on a `grid_n` scan.
///
/// Sign changes of `x - g(x)` are refined by bracketed root finding;
/// crossings whose refined residual stays above [`RESIDUAL_TOL`] are jump
/// discontinuities and are dropped. With no fixed point and `x < g(x)`
/// everywhere the value escalates to `hi`.
pub fn scan_fixed_points<G>(mut g: G, lo: f64, hi: f64, grid_n: usize) -> FixedPointResult
where
    G: FnMut(f64) -> f64,
{
    let n = grid_n.max(2);
    let step = (hi - lo) / n as f64;
    let mut evals = 0usize;
    let mut roots = Vec::new();
    let node = |i: usize| if i == n { hi } else { lo + step * i as f64 };

    let mut x_prev = lo;
    let mut h_prev = gap(&mut g, lo);
    let h_lo = h_prev;
    evals += 1;
    if h_prev == 0.0 {
        push_root(&mut roots, lo);
    }
    for i in 1..=n {
        let x = node(i);
        let h = gap(&mut g, x);
        evals += 1;
        if h == 0.0 {
            push_root(&mut roots, x);
        } else if h_prev != 0.0 && (h > 0.0) != (h_prev > 0.0) {
            let mut count = 0usize;
            let r = find_root_bracketed(
                |t| {
                    count += 1;
                    gap(&mut g, t)
                },
                x_prev,
                x,
                RESIDUAL_TOL * 1e-2,
            );
            evals += count;
            if let Ok(r) = r {
                if gap(&mut g, r).abs() <= RESIDUAL_TOL {
                    push_root(&mut roots, r);
                }
            }
        }
        x_prev = x;
        h_prev = h;
    }
    finish(&mut g, roots, lo, hi, h_lo, evals)
}

/// Fixed points of a map that is quadratic in `x` between known breakpoints.
///
/// Each piece is fitted from three evaluations and the fit is checked at a
/// fourth; candidate roots are polished on the true map. A piece that fails
/// the quadratic check is scanned densely instead.
pub fn fixed_points_piecewise_quadratic<G>(mut g: G, breaks: &[f64], lo: f64, hi: f64) -> FixedPointResult
where
    G: FnMut(f64) -> f64,
{
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);

    let mut evals = 0usize;
    let mut roots = Vec::new();
    let h_lo = gap(&mut g, lo);
    evals += 1;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        let ha = gap(&mut g, a);
        let hm = gap(&mut g, a + 0.5 * len);
        let hb = gap(&mut g, b);
        let hq = gap(&mut g, a + 0.25 * len);
        evals += 4;
        // h(t) = qa t^2 + qb t + qc on t in [0, 1]
        let qc = ha;
        let qa = 2.0 * hb - 4.0 * hm + 2.0 * ha;
        let qb = hb - ha - qa;
        let fit_q = qa / 16.0 + qb / 4.0 + qc;
        let scale = 1.0 + ha.abs().max(hb.abs()).max(hm.abs());
        if (fit_q - hq).abs() > 1e-9 * scale {
            let sub = scan_fixed_points(&mut g, a, b, 400);
            evals += sub.iterations;
            for r in sub.all_roots {
                push_root(&mut roots, r);
            }
            continue;
        }
        if ha.abs() <= 1e-14 {
            push_root(&mut roots, a);
        }
        if hb.abs() <= 1e-14 {
            push_root(&mut roots, b);
        }
        if qa.abs() <= 1e-15 * scale && qb.abs() <= 1e-15 * scale && qc.abs() <= 1e-15 * scale {
            // identically on the diagonal
            push_root(&mut roots, a);
            push_root(&mut roots, b);
            continue;
        }
        for t in quadratic_roots_unit(qa, qb, qc) {
            let x0 = a + t * len;
            let r = polish(&mut g, x0, a, b, &mut evals);
            if let Some(r) = r {
                push_root(&mut roots, r);
            }
        }
    }
    finish(&mut g, roots, lo, hi, h_lo, evals)
}

/// Real roots of `qa t^2 + qb t + qc` in `[0, 1]`, including a tangency.
fn quadratic_roots_unit(qa: f64, qb: f64, qc: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let scale = qa.abs().max(qb.abs()).max(qc.abs());
    if scale == 0.0 {
        return out;
    }
    if qa.abs() <= 1e-13 * scale {
        if qb != 0.0 {
            out.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < -1e-14 * scale * scale {
            return out;
        }
        let sq = disc.max(0.0).sqrt();
        if sq == 0.0 {
            out.push(-qb / (2.0 * qa));
        } else {
            let q = -0.5 * (qb + qb.signum() * sq);
            let (r1, r2) = if qb == 0.0 { (sq / (2.0 * qa), -sq / (2.0 * qa)) } else { (q / qa, qc / q) };
            out.push(r1);
            out.push(r2);
        }
    }
    out.retain(|t| (-1e-9..=1.0 + 1e-9).contains(t));
    out.iter_mut().for_each(|t| *t = t.clamp(0.0, 1.0));
    out
}

/// Accept a candidate fixed point near `x0` inside `[a, b]`.
fn polish<G: FnMut(f64) -> f64>(g: &mut G, x0: f64, a: f64, b: f64, evals: &mut usize) -> Option<f64> {
    let h0 = gap(g, x0);
    *evals += 1;
    if h0.abs() <= RESIDUAL_TOL * 1e-2 {
        return Some(x0);
    }
    // try to bracket with growing offsets
    let mut d = 1e-12 * (1.0 + x0.abs());
    while d < (b - a).max(1e-12) {
        let l = (x0 - d).max(a);
        let r = (x0 + d).min(b);
        let (hl, hr) = (gap(g, l), gap(g, r));
        *evals += 2;
        if hl == 0.0 {
            return Some(l);
        }
        if hr == 0.0 {
            return Some(r);
        }
        if (hl > 0.0) != (hr > 0.0) {
            let root = find_root_bracketed(|t| gap(g, t), l, r, RESIDUAL_TOL * 1e-2).ok()?;
            return (gap(g, root).abs() <= RESIDUAL_TOL).then_some(root);
        }
        d *= 8.0;
    }
    // tangency without a sign change
    (h0.abs() <= RESIDUAL_TOL).then_some(x0)
}
