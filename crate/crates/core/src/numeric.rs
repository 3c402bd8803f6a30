//! Small numerical helpers shared by the analysis modules.

/// Linear interpolation of tabulated `(xs, ys)` at `x`. `xs` must be strictly
/// increasing and `x` inside `[xs[0], xs[n-1]]`; returns `None` otherwise.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let n = xs.len();
    if n == 0 || x < xs[0] || x > xs[n - 1] {
        return None;
    }
    // first index with xs[i] >= x
    let i = xs.partition_point(|&v| v < x);
    if xs[i] == x {
        return Some(ys[i]);
    }
    let (x0, x1) = (xs[i - 1], xs[i]);
    let t = (x - x0) / (x1 - x0);
    Some(ys[i - 1] + t * (ys[i] - ys[i - 1]))
}

/// Trapezoidal integral of the piecewise-linear interpolant over `[lo, hi]`
/// clipped to the tabulated range. Returns `(integral, clipped_width)`, or
/// `None` when the clipped interval has zero width.
pub fn integrate_window(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || !(lo < hi) {
        return None;
    }
    let a = lo.max(xs[0]);
    let b = hi.min(xs[n - 1]);
    if !(a < b) {
        return None;
    }
    let ya = interpolate(xs, ys, a)?;
    let yb = interpolate(xs, ys, b)?;

    let mut total = 0.0;
    let mut px = a;
    let mut py = ya;
    for (&x, &y) in xs.iter().zip(ys) {
        if x <= a {
            continue;
        }
        if x >= b {
            break;
        }
        total += 0.5 * (x - px) * (y + py);
        px = x;
        py = y;
    }
    total += 0.5 * (b - px) * (yb + py);
    Some((total, b - a))
}

/// Ordinary least-squares line `y = intercept + slope * x`.
/// Returns `(intercept, slope)`; `None` with fewer than two distinct x.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    weighted_linear_fit(xs, ys, None)
}

pub(crate) fn weighted_linear_fit(xs: &[f64], ys: &[f64], w: Option<&[f64]>) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let weight = |i: usize| w.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..n).map(weight).sum();
    let mx = (0..n).map(|i| weight(i) * xs[i]).sum::<f64>() / sw;
    let my = (0..n).map(|i| weight(i) * ys[i]).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        sxx += weight(i) * dx * dx;
        sxy += weight(i) * dx * (ys[i] - my);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Mean and population standard deviation, two-pass.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}
