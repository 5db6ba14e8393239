//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 40;

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // the relative floor stops refinement once rounding noise dominates
    if depth == 0 || delta.abs() <= 15.0 * tol || delta.abs() <= 1e-15 * (left + right).abs() {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrate over `[a, b]`, restarting the quadrature at every multiple of
/// `q/2` inside the interval. Piecewise models and the triangular kernel
/// are only smooth between those points.
pub fn integrate_half_cells<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, q: f64, tol: f64) -> f64 {
    let half = 0.5 * q;
    let first = (a / half).floor() as i64 + 1;
    let last = (b / half).ceil() as i64 - 1;
    let mut lo = a;
    let mut total = 0.0;
    for k in first..=last {
        let x = k as f64 * half;
        if x > lo && x < b {
            total += adaptive_simpson(f, lo, x, tol);
            lo = x;
        }
    }
    total + adaptive_simpson(f, lo, b, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_transcendentals() {
        let v = adaptive_simpson(&|x: f64| x * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(&f64::sin, 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-11);
        let v = integrate_half_cells(&|x: f64| x.abs(), -1.3, 2.1, 1.0, 1e-13);
        assert!((v - (1.69 + 4.41) / 2.0).abs() < 1e-12);
    }
}
