//! Independent reference computations for the integration tests. None of
//! these call into the library's numeric kernels.

#![allow(dead_code)]

use std::f64::consts::PI;

pub fn pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive(f, a, m, left, tol / 2.0, depth - 1) + adaptive(f, m, b, right, tol / 2.0, depth - 1)
    }
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let whole = simpson(&f, a, b);
    adaptive(&f, a, b, whole, tol, 50)
}

/// Normal CDF as `1/2 + ∫_0^t φ`.
pub fn cdf_by_quadrature(t: f64) -> f64 {
    if t >= 0.0 {
        0.5 + integrate(pdf, 0.0, t, 1e-15)
    } else {
        0.5 - integrate(pdf, t, 0.0, 1e-15)
    }
}

/// Bisection on a monotone function for `f(x) = target`.
pub fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Upper-tail Mills ratio `R(z) = Φ(-z)/φ(z)` by its continued fraction,
/// valid for `z` around 5 and beyond.
pub fn mills_ratio(z: f64) -> f64 {
    let mut acc = z;
    for k in (1..200).rev() {
        acc = z + k as f64 / acc;
    }
    1.0 / acc
}

/// `f(-z) = φ(z)(1 - z R(z))` for large positive `z`, evaluated without
/// cancellation through the continued fraction of `1 - z R(z)`.
pub fn f_far_tail(z: f64) -> f64 {
    // 1 - zR = 1 - z/(z + 1/(z + 2/(z + ...))) = (1/(z+2/(z+..))) / (z + 1/(z+..))
    let mut inner = z;
    for k in (2..200).rev() {
        inner = z + k as f64 / inner;
    }
    let d = z + 1.0 / inner;
    pdf(z) * (1.0 / inner) / d
}

/// Minimum of a convex function on `[lo, hi]`: coarse grid then golden
/// section around the best grid point.
pub fn grid_golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = 2000;
    let h = (hi - lo) / n as f64;
    let mut best = (lo, f(lo));
    for i in 1..=n {
        let x = lo + h * i as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let v = f(0.5 * (a + b));
    v.min(best.1)
}

pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Gradient by central differences, coordinate step `h·(1 + |x_i|)`.
pub fn grad_fd(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut p = x.to_vec();
    for i in 0..x.len() {
        let step = h * (1.0 + x[i].abs());
        p[i] = x[i] + step;
        let fp = f(&p);
        p[i] = x[i] - step;
        let fm = f(&p);
        p[i] = x[i];
        out.push((fp - fm) / (2.0 * step));
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn hinge(w: &[f64], x: &[f64], y: f64) -> f64 {
    (1.0 - y * dot(w, x)).max(0.0)
}

/// Relative error with an absolute floor of 1.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
