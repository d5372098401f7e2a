use crate::error::NumericsError;

const MAX_ITER: usize = 300;

#[inline]
fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Root of `f` on `[lo, hi]` by bisection interleaved with secant steps.
///
/// Infinite values of `f` are allowed: only their sign is used, and the
/// step falls back to bisection. Returns the first point with
/// `|f(x)| <= tol`; if the bracket collapses to adjacent floats first (a
/// jump discontinuity), returns whichever end has the smaller `|f|`.
pub fn find_root_bracketed<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let mut fb = f(b);
    if fa.abs() <= tol {
        return Ok(a);
    }
    if fb.abs() <= tol {
        return Ok(b);
    }
    let (sa, sb) = (sign(fa), sign(fb));
    if sa == 0 || sb == 0 || sa == sb {
        return Err(NumericsError::NoBracket { lo: a, hi: b, flo: fa, fhi: fb });
    }

    let mut prev_width = b - a;
    for it in 0..MAX_ITER {
        let width = b - a;
        let mid = a + 0.5 * width;
        if mid <= a || mid >= b {
            break;
        }
        // secant on odd steps when it made good progress, bisection otherwise
        let mut x = mid;
        if it % 2 == 1 && fa.is_finite() && fb.is_finite() && width < 0.75 * prev_width {
            let s = b - fb * (b - a) / (fb - fa);
            if s > a && s < b {
                x = s;
            }
        }
        prev_width = width;
        let fx = f(x);
        if fx.abs() <= tol {
            return Ok(x);
        }
        if fx.is_nan() {
            // undefined interior point: keep bisecting on the left half
            b = x;
            continue;
        }
        if sign(fx) == sign(fa) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Ok(if fa.abs() <= fb.abs() { a } else { b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear() {
        let r = find_root_bracketed(|x| x - 0.5, 0.0, 1.0, 1e-14).unwrap();
        assert!((r - 0.5).abs() < 1e-14);
    }

    #[test]
    fn first_order_condition_without_service_cost() {
        let r = find_root_bracketed(|p| 0.75 - 2.0 * p, 0.0, 1.0, 1e-14).unwrap();
        assert!((r - 0.375).abs() < 1e-14);
    }

    #[test]
    fn no_bracket() {
        let e = find_root_bracketed(|x| x * x + 1.0, -1.0, 1.0, 1e-12).unwrap_err();
        assert!(matches!(e, NumericsError::NoBracket { .. }));
    }

    #[test]
    fn handles_infinite_endpoint() {
        // 1/(1-x) - 2 with a pole at 1
        let r = find_root_bracketed(|x| 1.0 / (1.0 - x) - 2.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 0.5).abs() < 1e-11);
    }

    #[test]
    fn jump_returns_the_edge() {
        let r = find_root_bracketed(|x| if x < 0.3 { -1.0 } else { 1.0 }, 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 0.3).abs() < 1e-15);
    }

    #[test]
    fn steep_cubic() {
        let f = |x: f64| (x - 0.123456789).powi(3) * 1e6 + (x - 0.123456789);
        let r = find_root_bracketed(f, -3.0, 5.0, 1e-13).unwrap();
        assert!(f(r).abs() <= 1e-13);
    }
}
