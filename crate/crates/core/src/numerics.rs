//! Small numerical kernels shared by the modules: tridiagonal solves,
//! Gauss–Legendre rules, least-squares fits and cubic interpolation.

use std::sync::OnceLock;

/// Solves a tridiagonal system in place. `lower[0]` and `upper[n-1]` are ignored.
/// `rhs` is overwritten with the solution; `scratch` must have length n.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], scratch: &mut [f64]) {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n && scratch.len() >= n);
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        scratch[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * scratch[i];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n <= 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Cached 8-point Gauss–Legendre rule.
pub fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8))
}

/// ∫_lo^hi f with the 8-point rule on one panel.
pub fn gl8_panel(lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (x, w) = gl8();
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    let mut acc = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        acc += wi * f(c + r * xi);
    }
    acc * r
}

/// Ordinary least-squares line y ≈ slope·x + intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - slope * xi - intercept).powi(2))
        .sum::<f64>()
        / nf)
        .sqrt();
    Some(LineFit {
        slope,
        intercept,
        rms,
    })
}

/// Non-negative least squares for y ≈ c1·f1 + c2·f2 with c1, c2 ≥ 0.
/// Returns (c1, c2, residual 2-norm).
pub fn nnls2(f1: &[f64], f2: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let resid = |c1: f64, c2: f64| {
        f1.iter()
            .zip(f2)
            .zip(y)
            .map(|((a, b), t)| (t - c1 * a - c2 * b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let (a11, a12, a22) = (dot(f1, f1), dot(f1, f2), dot(f2, f2));
    let (b1, b2) = (dot(f1, y), dot(f2, y));
    let det = a11 * a22 - a12 * a12;
    if det.abs() > 1e-14 * a11 * a22 {
        let c1 = (b1 * a22 - b2 * a12) / det;
        let c2 = (a11 * b2 - a12 * b1) / det;
        if c1 >= 0.0 && c2 >= 0.0 {
            return (c1, c2, resid(c1, c2));
        }
    }
    let mut best = (0.0, 0.0, resid(0.0, 0.0));
    if a11 > 0.0 {
        let c1 = (b1 / a11).max(0.0);
        let r = resid(c1, 0.0);
        if r < best.2 {
            best = (c1, 0.0, r);
        }
    }
    if a22 > 0.0 {
        let c2 = (b2 / a22).max(0.0);
        let r = resid(0.0, c2);
        if r < best.2 {
            best = (0.0, c2, r);
        }
    }
    best
}

/// Trapezoid rule over sampled (x, y).
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Four-point Lagrange weights for a stencil starting at node `k` (offset t in
/// units of h from node k+1). Returns the stencil start and the weights.
pub fn cubic_stencil(x0: f64, h: f64, len: usize, x: f64) -> (usize, [f64; 4]) {
    debug_assert!(len >= 4);
    let u = (x - x0) / h;
    let base = (u.floor() as isize - 1).clamp(0, len as isize - 4) as usize;
    let t = u - base as f64;
    // nodes at 0,1,2,3 relative to base
    let w0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let w1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let w2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let w3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    (base, [w0, w1, w2, w3])
}

/// Cubic interpolation of uniformly sampled values.
pub fn interp_cubic(x0: f64, h: f64, values: &[f64], x: f64) -> f64 {
    let (b, w) = cubic_stencil(x0, h, values.len(), x);
    w[0] * values[b] + w[1] * values[b + 1] + w[2] * values[b + 2] + w[3] * values[b + 3]
}

/// Tensor-product cubic interpolation on an m×m row-major grid.
pub fn interp_cubic_2d(x0: f64, h: f64, m: usize, values: &[f64], x: f64, y: f64) -> f64 {
    let (bx, wx) = cubic_stencil(x0, h, m, x);
    let (by, wy) = cubic_stencil(x0, h, m, y);
    let mut acc = 0.0;
    for (i, wi) in wx.iter().enumerate() {
        let row = (bx + i) * m;
        let mut r = 0.0;
        for (j, wj) in wy.iter().enumerate() {
            r += wj * values[row + by + j];
        }
        acc += wi * r;
    }
    acc
}

/// Evenly spaced points including both ends.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Geometrically spaced points including both ends (lo, hi > 0).
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    linspace(a, b, n).into_iter().map(f64::exp).collect()
}
