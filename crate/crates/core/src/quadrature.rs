//! Sampled-data quadrature on (possibly non-uniform) grids.

/// Trapezoidal rule.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(times.len(), values.len());
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1]))
        .sum()
}

/// Composite Simpson rule for uneven spacing: quadratic fits over pairs of
/// intervals, with a trailing single interval integrated on the quadratic
/// through its last three points. Exact for quadratics.
pub fn simpson(times: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(times.len(), values.len());
    let n = times.len();
    if n < 3 {
        return trapezoid(times, values);
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let (h0, h1) = (times[i + 1] - times[i], times[i + 2] - times[i + 1]);
        let (f0, f1, f2) = (values[i], values[i + 1], values[i + 2]);
        total += (h0 + h1) / 6.0
            * ((2.0 - h1 / h0) * f0 + (h0 + h1) * (h0 + h1) / (h0 * h1) * f1 + (2.0 - h0 / h1) * f2);
        i += 2;
    }
    if i + 1 < n {
        // one interval left: [t_{n-2}, t_{n-1}]
        let (h0, h1) = (times[n - 2] - times[n - 3], times[n - 1] - times[n - 2]);
        let w0 = -h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
        let w1 = h1 * h1 / (6.0 * h0) + 0.5 * h1;
        let w2 = h1 * (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1));
        total += w0 * values[n - 3] + w1 * values[n - 2] + w2 * values[n - 1];
    }
    total
}
