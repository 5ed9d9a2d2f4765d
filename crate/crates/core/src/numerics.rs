//! Small numerical kernels shared by the profile, quadrature and shooting code:
//! finite-difference weights on arbitrary grids, cubic Hermite pieces and a
//! monotonicity limiter for tabulated increasing functions.

/// Finite-difference weights for the `order`-th derivative at `x0` using the
/// abscissae `xs` (Fornberg's recursion). Works for any distinct points.
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(n > order, "need more points than the derivative order");
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// First derivative of sampled data with five-point stencils: centered in the
/// interior, seven-point one-sided stencils at the two nodes nearest each end.
pub fn derivative(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    stencil_derivative(xs, ys, 1, 5)
}

/// `|D5 - D7|` at each node: the gap between [`derivative`] and the same
/// layout two points wider, an estimate of its truncation error.
pub fn derivative_truncation(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let wide = stencil_derivative(xs, ys, 1, 7);
    derivative(xs, ys).iter().zip(&wide).map(|(a, b)| (a - b).abs()).collect()
}

/// Second derivative with the same five-point stencil layout as [`derivative`].
pub fn second_derivative(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    stencil_derivative(xs, ys, 2, 5)
}

/// Centered stencils of odd `width`, one-sided of `width + 2` near the ends.
fn stencil_derivative(xs: &[f64], ys: &[f64], order: usize, width: usize) -> Vec<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n <= order {
        return vec![0.0; n];
    }
    let half = width / 2;
    (0..n)
        .map(|i| {
            let edge = i < half || i + half >= n;
            let width = if edge { width + 2 } else { width }.min(n);
            let start = i.saturating_sub(half).min(n - width);
            let window = &xs[start..start + width];
            let w = fornberg_weights(xs[i], window, order);
            w.iter().zip(&ys[start..start + width]).map(|(a, b)| a * b).sum()
        })
        .collect()
}

/// Cubic Hermite interpolant on `[x0, x1]` evaluated at `x`.
#[inline]
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Fritsch-Carlson limiter: adjusts Hermite slopes so the interpolant is
/// monotone on every segment whose endpoint values differ, in either
/// direction. Flat segments get zero end slopes.
pub fn limit_monotone(xs: &[f64], ys: &[f64], slopes: &mut [f64]) {
    let n = xs.len();
    for i in 0..n.saturating_sub(1) {
        let delta = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        if delta == 0.0 {
            slopes[i] = 0.0;
            slopes[i + 1] = 0.0;
            continue;
        }
        let a = (slopes[i] / delta).max(0.0);
        let b = (slopes[i + 1] / delta).max(0.0);
        let s = a * a + b * b;
        let tau = if s > 9.0 { 3.0 / s.sqrt() } else { 1.0 };
        slopes[i] = tau * a * delta;
        slopes[i + 1] = tau * b * delta;
    }
}

/// Index `i` with `xs[i] <= x < xs[i + 1]`, clamped to the valid segment range.
#[inline]
pub fn segment_index(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    debug_assert!(n >= 2);
    let p = xs.partition_point(|&v| v <= x);
    p.clamp(1, n - 1) - 1
}

/// Bisection on a bracketing interval; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol * (1.0 + mid.abs()) {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_reproduces_central_difference() {
        let w = fornberg_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expected = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_is_exact_for_quartics_on_nonuniform_grids() {
        let xs: Vec<f64> = (0..12).map(|i| (i as f64 * 0.3).exp()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(4) - 2.0 * x + 1.0).collect();
        let d = derivative(&xs, &ys);
        for (x, di) in xs.iter().zip(d) {
            let exact = 4.0 * x.powi(3) - 2.0;
            assert!((di - exact).abs() < 1e-8 * exact.abs().max(1.0), "{di} vs {exact}");
        }
        let d2 = second_derivative(&xs, &ys);
        for (x, di) in xs.iter().zip(d2) {
            let exact = 12.0 * x * x;
            assert!((di - exact).abs() < 1e-7 * exact.abs().max(1.0), "{di} vs {exact}");
        }
    }

    #[test]
    fn limiter_handles_decreasing_data() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 1.0, 0.0, 0.0];
        let mut d = vec![0.0, -0.5, -3.0, 0.0];
        limit_monotone(&xs, &ys, &mut d);
        let mut prev = f64::INFINITY;
        for k in 0..=300 {
            let x = k as f64 * 0.01;
            let i = segment_index(&xs, x);
            let y = hermite(xs[i], xs[i + 1], ys[i], ys[i + 1], d[i], d[i + 1], x);
            assert!(y <= prev + 1e-15);
            prev = y;
        }
    }

    #[test]
    fn truncation_estimate_vanishes_on_quartics_and_shrinks_with_h() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(4) - x).collect();
        assert!(derivative_truncation(&xs, &ys).iter().all(|e| *e < 1e-9));
        let worst = |n: usize| {
            let xs: Vec<f64> = (0..n).map(|i| i as f64 * 3.0 / (n - 1) as f64).collect();
            let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
            derivative_truncation(&xs, &ys)[n / 2]
        };
        let ratio = worst(31) / worst(61);
        assert!((12.0..20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn limiter_keeps_interpolant_monotone() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0, 0.0, 1.0, 1.0];
        let mut d = vec![0.0, 0.5, 3.0, 0.0];
        limit_monotone(&xs, &ys, &mut d);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=300 {
            let x = k as f64 * 0.01;
            let i = segment_index(&xs, x);
            let y = hermite(xs[i], xs[i + 1], ys[i], ys[i + 1], d[i], d[i + 1], x);
            assert!(y >= prev - 1e-15);
            prev = y;
        }
    }
}
