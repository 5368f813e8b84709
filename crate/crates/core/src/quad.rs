//! Adaptive quadrature on finite intervals.
//!
//! Recursive Simpson with Richardson control. Used for the weight-square
//! integral of the pile-up model and as an independent route in tests that
//! cross-check closed-form integrals.

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The error estimate is the standard |S2 - S1| / 15 Richardson bound;
/// recursion depth is capped at 60 so pathological integrands terminate.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = simpson(a, b, fa, fc, fb);
    rec(f, a, b, fa, fb, fc, whole, tol, 60)
}

fn simpson(a: f64, b: f64, fa: f64, fc: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fc + fb)
}

#[allow(clippy::too_many_arguments)]
fn rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = simpson(a, c, fa, fd, fc);
    let right = simpson(c, b, fc, fe, fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        left + right + err / 15.0
    } else {
        let half = 0.5 * tol;
        rec(f, a, c, fa, fc, fd, left, half, depth - 1)
            + rec(f, c, b, fc, fb, fe, right, half, depth - 1)
    }
}
