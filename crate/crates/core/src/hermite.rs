//! Hermite toolkit for the Gaussian weight ρ(y) = (4π)^{-n/2} e^{-|y|²/4}.
//!
//! The polynomials h_m satisfy h_{m+1} = y h_m − 2m h_{m−1} and are
//! orthogonal under ρ with ‖h_m‖²_ρ = 2^m m!. They are eigenfunctions of
//! ℒ = Δ − (y/2)·∇ + 1 with eigenvalue 1 − m/2.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest 1-D node count accepted by [`build_quadrature`].
pub const MAX_ORDER: usize = 200;

/// h_m(y) by the three-term recurrence.
pub fn eval_h(m: usize, y: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, y);
    if m == 0 {
        return h0;
    }
    for k in 1..m {
        let h2 = y * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// h_m(y) from the closed sum Σ_k m!/(k!(m−2k)!) (−1)^k y^{m−2k}.
/// Kept as a cross-check; factorials overflow beyond moderate m.
pub fn eval_h_closed(m: usize, y: f64) -> f64 {
    let fact = |k: usize| (1..=k).fold(1.0f64, |acc, i| acc * i as f64);
    (0..=m / 2)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * fact(m) / (fact(k) * fact(m - 2 * k)) * y.powi((m - 2 * k) as i32)
        })
        .sum()
}

/// Fills `out[k] = h_k(y)` for k = 0..out.len().
pub fn eval_h_all(y: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = y;
    }
    for k in 2..out.len() {
        out[k] = y * out[k - 1] - 2.0 * (k - 1) as f64 * out[k - 2];
    }
}

/// ‖h_m‖²_ρ = 2^m m!.
pub fn norm_sq_1d(m: usize) -> f64 {
    (1..=m).fold(1.0, |acc, k| acc * 2.0 * k as f64)
}

/// Multi-index α ∈ ℕⁿ.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn new(m: Vec<usize>) -> Self {
        MultiIndex(m)
    }
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }
    /// e_i + e_j (2e_i when i = j).
    pub fn pair(n: usize, i: usize, j: usize) -> Self {
        let mut m = vec![0; n];
        m[i] += 1;
        m[j] += 1;
        MultiIndex(m)
    }
    pub fn dim(&self) -> usize {
        self.0.len()
    }
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
    /// ‖H_α‖²_ρ = ∏ 2^{α_i} α_i!.
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|&k| norm_sq_1d(k)).product()
    }
}

/// All multi-indices with |α| ≤ max_degree, graded by total degree and
/// lexicographically descending within a degree.
pub fn multi_indices(n: usize, max_degree: usize) -> Vec<MultiIndex> {
    fn rec(n: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == n {
            prefix.push(total);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for k in (0..=total).rev() {
            prefix.push(k);
            rec(n, total - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for t in 0..=max_degree {
        rec(n, t, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

/// H_α(y) = ∏ h_{α_i}(y_i).
pub fn eval_big_h(alpha: &MultiIndex, y: &[f64]) -> Result<f64> {
    if alpha.dim() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.dim(),
            got: y.len(),
        });
    }
    Ok(alpha.0.iter().zip(y).map(|(&m, &yi)| eval_h(m, yi)).product())
}

/// Weighted point rule for ∫ f ρ dy.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub n: usize,
    /// 1-D node count per axis (0 for rules not of tensor Gauss type).
    pub order: usize,
    /// Node coordinates, `n` consecutive entries per node.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Highest per-axis polynomial degree integrated exactly.
    pub exact_degree: usize,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.n..(i + 1) * self.n]
    }
    /// Σ w_i f(y_i).
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * f(self.node(i))).sum()
    }
    /// Wraps an arbitrary point rule (e.g. grid nodes with weights ρ_i Δyⁿ).
    pub fn from_points(n: usize, nodes: Vec<f64>, weights: Vec<f64>, exact_degree: usize) -> Self {
        Quadrature {
            n,
            order: 0,
            nodes,
            weights,
            exact_degree,
        }
    }
}

/// 1-D Gauss–Hermite rule for e^{-x²}/√π (Golub–Welsch, then Newton polish
/// and Christoffel weights).
fn gauss_hermite_prob(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let b = (k as f64 / 2.0).sqrt();
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut x: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // orthonormal polynomials for the probability weight e^{-x²}/√π
    let psi = |x: f64, out: &mut Vec<f64>| {
        out.clear();
        out.push(1.0);
        if order > 0 {
            out.push(std::f64::consts::SQRT_2 * x);
        }
        for k in 1..order {
            let kf = k as f64;
            let next = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
            out.push(next);
        }
    };
    let mut buf = Vec::with_capacity(order + 1);
    let mut w = vec![0.0; order];
    for (i, xi) in x.iter_mut().enumerate() {
        for _ in 0..3 {
            psi(*xi, &mut buf);
            let d = (2.0 * order as f64).sqrt() * buf[order - 1];
            *xi -= buf[order] / d;
        }
        psi(*xi, &mut buf);
        w[i] = 1.0 / buf[..order].iter().map(|v| v * v).sum::<f64>();
    }
    // symmetrize
    for i in 0..order / 2 {
        let j = order - 1 - i;
        let xm = 0.5 * (x[j] - x[i]);
        x[i] = -xm;
        x[j] = xm;
        let wm = 0.5 * (w[i] + w[j]);
        w[i] = wm;
        w[j] = wm;
    }
    if order % 2 == 1 {
        x[order / 2] = 0.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    (x, w)
}

/// Tensor Gauss–Hermite rule for ∫ f ρ dy in n dimensions (y = 2x).
pub fn build_quadrature(n: usize, order: usize) -> Result<Quadrature> {
    if !(2..=MAX_ORDER).contains(&order) {
        return Err(Error::QuadratureOrder {
            order,
            max: MAX_ORDER,
        });
    }
    if n == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    let (x, w) = gauss_hermite_prob(order);
    let total = order.pow(n as u32);
    let mut nodes = Vec::with_capacity(total * n);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let mut wt = 1.0;
        for &k in &idx {
            nodes.push(2.0 * x[k]);
            wt *= w[k];
        }
        weights.push(wt);
        for d in (0..n).rev() {
            idx[d] += 1;
            if idx[d] < order {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(Quadrature {
        n,
        order,
        nodes,
        weights,
        exact_degree: 2 * order - 1,
    })
}

/// Coefficients over the graded multi-index set |α| ≤ max_degree.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteCoeffs {
    pub n: usize,
    pub max_degree: usize,
    pub indices: Vec<MultiIndex>,
    pub coeffs: Vec<f64>,
}

/// JSON record for one coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffRecord {
    pub alpha: Vec<usize>,
    pub coeff: f64,
}

impl HermiteCoeffs {
    pub fn zeros(n: usize, max_degree: usize) -> Self {
        let indices = multi_indices(n, max_degree);
        let coeffs = vec![0.0; indices.len()];
        HermiteCoeffs {
            n,
            max_degree,
            indices,
            coeffs,
        }
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        if alpha.dim() != self.n || alpha.total() > self.max_degree {
            return None;
        }
        // graded layout: skip lower degrees, then search the degree block
        self.indices.iter().position(|a| a == alpha)
    }

    pub fn get(&self, alpha: &MultiIndex) -> f64 {
        self.position(alpha).map_or(0.0, |i| self.coeffs[i])
    }

    pub fn set(&mut self, alpha: &MultiIndex, value: f64) -> Result<()> {
        match self.position(alpha) {
            Some(i) => {
                self.coeffs[i] = value;
                Ok(())
            }
            None => Err(Error::DegreeTooHigh {
                degree: alpha.total(),
                max: self.max_degree,
            }),
        }
    }

    /// ‖f‖²_ρ = Σ a_α² ‖H_α‖².
    pub fn norm_sq(&self) -> f64 {
        self.indices
            .iter()
            .zip(&self.coeffs)
            .map(|(a, c)| c * c * a.norm_sq())
            .sum()
    }

    /// Σ a_α H_α(y).
    pub fn reconstruct(&self, y: &[f64]) -> f64 {
        let mut table = vec![0.0; self.n * (self.max_degree + 1)];
        for (d, &yd) in y.iter().enumerate() {
            eval_h_all(yd, &mut table[d * (self.max_degree + 1)..(d + 1) * (self.max_degree + 1)]);
        }
        self.indices
            .iter()
            .zip(&self.coeffs)
            .map(|(a, c)| {
                c * a
                    .0
                    .iter()
                    .enumerate()
                    .map(|(d, &k)| table[d * (self.max_degree + 1) + k])
                    .product::<f64>()
            })
            .sum()
    }

    pub fn to_records(&self) -> Vec<CoeffRecord> {
        self.indices
            .iter()
            .zip(&self.coeffs)
            .map(|(a, &c)| CoeffRecord {
                alpha: a.0.clone(),
                coeff: c,
            })
            .collect()
    }

    pub fn from_records(records: &[CoeffRecord]) -> Result<Self> {
        let n = records.first().map_or(1, |r| r.alpha.len());
        let max_degree = records.iter().map(|r| r.alpha.iter().sum()).max().unwrap_or(0);
        let mut c = HermiteCoeffs::zeros(n, max_degree);
        for r in records {
            if r.alpha.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.alpha.len(),
                });
            }
            c.set(&MultiIndex(r.alpha.clone()), r.coeff)?;
        }
        Ok(c)
    }

    fn map_by_degree(&self, f: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for (a, c) in out.indices.iter().zip(out.coeffs.iter_mut()) {
            *c *= f(a.total());
        }
        out
    }
}

impl Serialize for HermiteCoeffs {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_records().serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermiteCoeffs {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let recs = Vec::<CoeffRecord>::deserialize(d)?;
        HermiteCoeffs::from_records(&recs).map_err(serde::de::Error::custom)
    }
}

/// a_α = ⟨f, H_α⟩_ρ / ‖H_α‖²_ρ for |α| ≤ max_degree, with `values` sampled at
/// the quadrature nodes.
pub fn project(values: &[f64], quad: &Quadrature, max_degree: usize) -> Result<HermiteCoeffs> {
    project_rotated(values, quad, max_degree, None)
}

/// As [`project`], with the basis evaluated in rotated coordinates y′ = R y
/// (`rotation` is n×n row-major, orthogonal).
pub fn project_rotated(
    values: &[f64],
    quad: &Quadrature,
    max_degree: usize,
    rotation: Option<&[f64]>,
) -> Result<HermiteCoeffs> {
    if values.len() != quad.len() {
        return Err(Error::DimensionMismatch {
            expected: quad.len(),
            got: values.len(),
        });
    }
    if 2 * max_degree > quad.exact_degree {
        return Err(Error::DegreeTooHigh {
            degree: max_degree,
            max: quad.exact_degree / 2,
        });
    }
    let n = quad.n;
    if let Some(r) = rotation {
        if r.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: r.len(),
            });
        }
    }
    let mut out = HermiteCoeffs::zeros(n, max_degree);
    let stride = max_degree + 1;
    let mut table = vec![0.0; n * stride];
    let mut yr = vec![0.0; n];
    for (i, (&f, &w)) in values.iter().zip(&quad.weights).enumerate() {
        if w == 0.0 || f == 0.0 {
            continue;
        }
        let y = quad.node(i);
        match rotation {
            Some(r) => {
                for a in 0..n {
                    yr[a] = (0..n).map(|b| r[a * n + b] * y[b]).sum();
                }
            }
            None => yr.copy_from_slice(y),
        }
        for d in 0..n {
            eval_h_all(yr[d], &mut table[d * stride..(d + 1) * stride]);
        }
        let wf = w * f;
        for (a, c) in out.indices.iter().zip(out.coeffs.iter_mut()) {
            let mut h = 1.0;
            for (d, &k) in a.0.iter().enumerate() {
                h *= table[d * stride + k];
            }
            *c += wf * h;
        }
    }
    for (a, c) in out.indices.iter().zip(out.coeffs.iter_mut()) {
        *c /= a.norm_sq();
    }
    Ok(out)
}

/// Splits into (V₊: |α| ≤ 1, V_null: |α| = 2, V₋: |α| ≥ 3).
pub fn split(coeffs: &HermiteCoeffs) -> (HermiteCoeffs, HermiteCoeffs, HermiteCoeffs) {
    let plus = coeffs.map_by_degree(|t| (t <= 1) as u8 as f64);
    let null = coeffs.map_by_degree(|t| (t == 2) as u8 as f64);
    let minus = coeffs.map_by_degree(|t| (t >= 3) as u8 as f64);
    (plus, null, minus)
}

/// Eigenvalue of ℒ on degree-t modes.
pub fn eigenvalue(total: usize) -> f64 {
    1.0 - total as f64 / 2.0
}

/// e^{sℒ}: multiplies a_α by e^{(1−|α|/2)s}.
pub fn semigroup_apply(coeffs: &HermiteCoeffs, s: f64) -> HermiteCoeffs {
    coeffs.map_by_degree(|t| {
        if t == 2 {
            1.0
        } else {
            (eigenvalue(t) * s).exp()
        }
    })
}

/// ℒ in coefficient space.
pub fn apply_l(coeffs: &HermiteCoeffs) -> HermiteCoeffs {
    coeffs.map_by_degree(eigenvalue)
}

/// Gram matrix ⟨H_α, H_β⟩_ρ under `quad`, optionally of the normalized basis.
pub fn gram_matrix(quad: &Quadrature, max_degree: usize, normalized: bool) -> (Vec<MultiIndex>, Vec<f64>) {
    let idx = multi_indices(quad.n, max_degree);
    let k = idx.len();
    let mut g = vec![0.0; k * k];
    let stride = max_degree + 1;
    let mut table = vec![0.0; quad.n * stride];
    let mut vals = vec![0.0; k];
    let scale: Vec<f64> = idx
        .iter()
        .map(|a| if normalized { a.norm_sq().sqrt().recip() } else { 1.0 })
        .collect();
    for i in 0..quad.len() {
        let y = quad.node(i);
        for d in 0..quad.n {
            eval_h_all(y[d], &mut table[d * stride..(d + 1) * stride]);
        }
        for (v, (a, sc)) in vals.iter_mut().zip(idx.iter().zip(&scale)) {
            *v = sc * a.0.iter().enumerate().map(|(d, &m)| table[d * stride + m]).product::<f64>();
        }
        let w = quad.weights[i];
        for r in 0..k {
            let wr = w * vals[r];
            for c in r..k {
                g[r * k + c] += wr * vals[c];
            }
        }
    }
    for r in 0..k {
        for c in 0..r {
            g[r * k + c] = g[c * k + r];
        }
    }
    (idx, g)
}

/// ⟨h_i h_j h_k⟩_ρ in closed form (zero unless i+j+k is even and the
/// triangle condition holds).
pub fn triple_product(i: usize, j: usize, k: usize) -> f64 {
    if (i + j + k) % 2 == 1 {
        return 0.0;
    }
    let s = (i + j + k) / 2;
    if s < i || s < j || s < k {
        return 0.0;
    }
    let fact = |n: usize| (1..=n).fold(1.0f64, |a, b| a * b as f64);
    2f64.powi(s as i32) * fact(i) * fact(j) * fact(k) / (fact(s - i) * fact(s - j) * fact(s - k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_values() {
        assert_eq!(eval_h(0, 3.3), 1.0);
        assert_eq!(eval_h(1, 3.3), 3.3);
        assert!((eval_h(2, 1.7) - (1.7 * 1.7 - 2.0)).abs() < 1e-15);
        assert_eq!(eval_h(3, 2.0), -4.0);
    }

    #[test]
    fn recurrence_matches_closed_sum() {
        for m in 0..=12 {
            for &y in &[-3.1, -0.2, 0.0, 0.9, 2.5] {
                let a = eval_h(m, y);
                let b = eval_h_closed(m, y);
                assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "m={m} y={y}");
            }
        }
    }

    #[test]
    fn tensor_values() {
        let z = MultiIndex::zero(2);
        assert_eq!(eval_big_h(&z, &[0.3, -1.0]).unwrap(), 1.0);
        assert_eq!(eval_big_h(&MultiIndex(vec![1, 1]), &[2.0, 3.0]).unwrap(), 6.0);
        assert_eq!(eval_big_h(&MultiIndex(vec![2, 0]), &[1.0, 5.0]).unwrap(), -1.0);
        assert!(eval_big_h(&MultiIndex(vec![2, 0]), &[1.0]).is_err());
    }

    #[test]
    fn multi_index_layout() {
        let idx = multi_indices(2, 2);
        let want: Vec<Vec<usize>> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
        ];
        assert_eq!(idx.iter().map(|a| a.0.clone()).collect::<Vec<_>>(), want);
        assert_eq!(multi_indices(3, 4).len(), 35);
    }

    #[test]
    fn quadrature_moments() {
        let q = build_quadrature(1, 20).unwrap();
        assert!((q.integrate(|_| 1.0) - 1.0).abs() < 1e-12);
        assert!((q.integrate(|y| y[0] * y[0]) - 2.0).abs() < 1e-12);
        assert!((q.integrate(|y| eval_h(2, y[0]).powi(2)) - 8.0).abs() < 1e-11);
        assert!(build_quadrature(1, 1).is_err());
        assert!(build_quadrature(1, 201).is_err());
        assert!(build_quadrature(1, 200).is_ok());
    }

    #[test]
    fn projection_examples() {
        let q = build_quadrature(2, 12).unwrap();
        let vals: Vec<f64> = (0..q.len()).map(|i| q.node(i)[0].powi(2)).collect();
        let c = project(&vals, &q, 4).unwrap();
        assert!((c.get(&MultiIndex(vec![2, 0])) - 1.0).abs() < 1e-12);
        assert!((c.get(&MultiIndex(vec![0, 0])) - 2.0).abs() < 1e-12);
        let others: f64 = c
            .indices
            .iter()
            .zip(&c.coeffs)
            .filter(|(a, _)| a.0 != vec![2, 0] && a.0 != vec![0, 0])
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max);
        assert!(others < 1e-12);
        assert!(project(&vals, &q, 12).is_err());
    }

    #[test]
    fn split_buckets() {
        let q = build_quadrature(1, 10).unwrap();
        let vals: Vec<f64> = (0..q.len())
            .map(|i| {
                let y = q.node(i)[0];
                eval_h(1, y) + eval_h(2, y) + eval_h(3, y)
            })
            .collect();
        let c = project(&vals, &q, 5).unwrap();
        let (p, n, m) = split(&c);
        let nz = |h: &HermiteCoeffs| h.coeffs.iter().filter(|v| v.abs() > 1e-10).count();
        assert_eq!((nz(&p), nz(&n), nz(&m)), (1, 1, 1));
    }

    #[test]
    fn semigroup_and_l() {
        let mut c = HermiteCoeffs::zeros(1, 4);
        c.set(&MultiIndex(vec![0]), 1.0).unwrap();
        c.set(&MultiIndex(vec![2]), 3.0).unwrap();
        c.set(&MultiIndex(vec![4]), 1.0).unwrap();
        let e = semigroup_apply(&c, 1.0);
        assert!((e.get(&MultiIndex(vec![0])) - std::f64::consts::E).abs() < 1e-15);
        assert_eq!(e.get(&MultiIndex(vec![2])), 3.0);
        let e2 = semigroup_apply(&c, 2.0);
        assert!((e2.get(&MultiIndex(vec![4])) - (-2.0f64).exp()).abs() < 1e-16);
        let l = apply_l(&c);
        assert_eq!(l.get(&MultiIndex(vec![2])), 0.0);
        assert_eq!(l.get(&MultiIndex(vec![0])), 1.0);
        assert_eq!(l.get(&MultiIndex(vec![4])), -1.0);
    }

    #[test]
    fn triple_products() {
        assert_eq!(triple_product(4, 4, 2), 6144.0);
        assert_eq!(triple_product(2, 2, 4), 384.0);
        assert_eq!(triple_product(2, 2, 0), 8.0);
        assert_eq!(triple_product(1, 1, 1), 0.0);
        let q = build_quadrature(1, 12).unwrap();
        let v = q.integrate(|y| eval_h(4, y[0]).powi(2) * eval_h(2, y[0]));
        assert!((v - 6144.0).abs() < 1e-8);
    }

    #[test]
    fn json_records_roundtrip() {
        let mut c = HermiteCoeffs::zeros(2, 2);
        c.set(&MultiIndex(vec![1, 1]), -0.25).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"alpha\":[1,1],\"coeff\":-0.25"));
        let back: HermiteCoeffs = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
