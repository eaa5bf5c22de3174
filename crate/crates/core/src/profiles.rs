//! Closed-form blow-up profiles f_l, ψ_m and the convergence of w toward them
//! on the extended regions |y| ≤ K0·√s and |y| ≤ K0·e^{(1/2−1/m)s}.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hermite::MultiIndex;
use crate::numerics::{interp_cubic, interp_cubic_2d, linspace, nnls2};
use crate::params::ProblemParams;
use crate::pde::{Field, Frame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProfileKind {
    /// f_l(ξ) = κ(1 + (p−1)/(4p) Σ_{j≤l} ξ_j²)^{−1/(p−1)}
    QuadraticF { l: usize },
    /// ψ_m(ξ) = κ(1 + κ^{−p} Σ_{|α|=m} c_α ξ^α)^{−1/(p−1)}
    HigherPsi { m: usize, c_alpha: Vec<(MultiIndex, f64)> },
}

#[derive(Debug, Clone)]
pub struct ProfileSpec {
    pub kind: ProfileKind,
    pub params: ProblemParams,
}

impl ProfileSpec {
    pub fn quadratic(params: &ProblemParams, l: usize) -> Result<Self> {
        if l == 0 || l > params.n {
            return Err(invalid("l", format!("need 1 ≤ l ≤ n = {}", params.n)));
        }
        Ok(ProfileSpec {
            kind: ProfileKind::QuadraticF { l },
            params: params.clone(),
        })
    }

    /// Odd m is rejected: ψ_m would be unbounded on some ray.
    pub fn higher_psi(params: &ProblemParams, m: usize, c_alpha: Vec<(MultiIndex, f64)>) -> Result<Self> {
        if m < 4 || m % 2 == 1 {
            return Err(invalid("m", format!("need an even m ≥ 4, got {m}")));
        }
        for (a, c) in &c_alpha {
            if a.dim() != params.n || a.total() != m {
                return Err(invalid("c_alpha", format!("index {:?} is not of order {m} in dimension {}", a.0, params.n)));
            }
            if !c.is_finite() {
                return Err(invalid("c_alpha", "coefficients must be finite"));
            }
        }
        Ok(ProfileSpec {
            kind: ProfileKind::HigherPsi { m, c_alpha },
            params: params.clone(),
        })
    }

    /// Homogeneity degree in the self-similar profile equation (2 for f_l).
    pub fn order(&self) -> usize {
        match &self.kind {
            ProfileKind::QuadraticF { .. } => 2,
            ProfileKind::HigherPsi { m, .. } => *m,
        }
    }

    /// ξ-scale at time s.
    pub fn scale(&self, s: f64) -> f64 {
        match &self.kind {
            ProfileKind::QuadraticF { .. } => s.sqrt(),
            ProfileKind::HigherPsi { m, .. } => ((0.5 - 1.0 / *m as f64) * s).exp(),
        }
    }

    /// Bracket B(ξ) and its gradient.
    fn bracket(&self, xi: &[f64]) -> (f64, Vec<f64>) {
        let p = self.params.p;
        let mut grad = vec![0.0; xi.len()];
        match &self.kind {
            ProfileKind::QuadraticF { l } => {
                let c = (p - 1.0) / (4.0 * p);
                let mut b = 1.0;
                for j in 0..*l {
                    b += c * xi[j] * xi[j];
                    grad[j] = 2.0 * c * xi[j];
                }
                (b, grad)
            }
            ProfileKind::HigherPsi { c_alpha, .. } => {
                let kp = self.params.kappa.powf(-p);
                let mut b = 1.0;
                for (a, c) in c_alpha {
                    let mono: f64 = a.0.iter().zip(xi).map(|(&e, &x)| x.powi(e as i32)).product();
                    b += kp * c * mono;
                    for (j, g) in grad.iter_mut().enumerate() {
                        let e = a.0[j];
                        if e == 0 {
                            continue;
                        }
                        let d: f64 = a
                            .0
                            .iter()
                            .zip(xi)
                            .enumerate()
                            .map(|(k, (&ek, &x))| if k == j { ek as f64 * x.powi(ek as i32 - 1) } else { x.powi(ek as i32) })
                            .product();
                        *g += kp * c * d;
                    }
                }
                (b, grad)
            }
        }
    }

    fn check_point(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.params.n {
            return Err(Error::DimensionMismatch {
                expected: self.params.n,
                got: xi.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        self.check_point(xi)?;
        let (b, _) = self.bracket(xi);
        if !(b > 0.0) {
            return Err(Error::Domain(format!("profile bracket {b} ≤ 0 at ξ = {xi:?}")));
        }
        Ok(self.params.kappa * b.powf(-1.0 / (self.params.p - 1.0)))
    }

    /// Value and analytic gradient.
    pub fn eval_grad(&self, xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_point(xi)?;
        let (b, db) = self.bracket(xi);
        if !(b > 0.0) {
            return Err(Error::Domain(format!("profile bracket {b} ≤ 0 at ξ = {xi:?}")));
        }
        let e = -1.0 / (self.params.p - 1.0);
        let g = self.params.kappa * b.powf(e);
        let f = self.params.kappa * e * b.powf(e - 1.0);
        Ok((g, db.into_iter().map(|d| f * d).collect()))
    }
}

pub fn eval_profile(spec: &ProfileSpec, xi: &[f64]) -> Result<f64> {
    spec.eval(xi)
}

/// max over the points of |−(ξ/m)·∇G + G^p − G/(p−1)|, with m = 2 for f_l.
pub fn residual_g(spec: &ProfileSpec, points: &[Vec<f64>]) -> Result<f64> {
    let p = spec.params.p;
    let m = spec.order() as f64;
    let mut sup = 0.0f64;
    for xi in points {
        let (g, grad) = spec.eval_grad(xi)?;
        let drift: f64 = xi.iter().zip(&grad).map(|(x, d)| x * d).sum::<f64>() / m;
        sup = sup.max((-drift + g.powf(p) - g / (p - 1.0)).abs());
    }
    Ok(sup)
}

/// Number of lattice points per axis for the sup in ξ.
pub const LATTICE: usize = 64;

/// Lattice of [`LATTICE`]^n points in the cube [−K0, K0]^n restricted to |ξ| ≤ K0.
pub fn xi_lattice(n: usize, k0: f64) -> Vec<Vec<f64>> {
    let axis = linspace(-k0, k0, LATTICE);
    match n {
        1 => axis.into_iter().map(|x| vec![x]).collect(),
        _ => axis
            .iter()
            .flat_map(|&x| axis.iter().map(move |&y| vec![x, y]))
            .filter(|v| v[0] * v[0] + v[1] * v[1] <= k0 * k0 * (1.0 + 1e-12))
            .collect(),
    }
}

/// Cubic interpolation of a field at a point; the point must lie inside the grid.
pub fn field_at(field: &Field, y: &[f64]) -> f64 {
    let g = &field.grid;
    let x0 = -g.half_width();
    match g.n {
        1 => interp_cubic(x0, g.dy, &field.values, y[0]),
        _ => interp_cubic_2d(x0, g.dy, g.m, &field.values, y[0], y[1]),
    }
}

/// Joint fit err ≈ c1·s^{1−a} + c2·log s / s with c1, c2 ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub c_power: f64,
    pub c_log: f64,
    /// ‖err − fit‖ / ‖err‖.
    pub rel_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub s: Vec<f64>,
    pub sup_error: Vec<f64>,
    pub fit: Option<RateFit>,
}

impl ErrorCurve {
    /// Columns s, sup_error, fit_power, fit_log.
    pub fn to_csv(&self, a: f64) -> String {
        crate::csv::table(
            &["s", "sup_error", "fit_power", "fit_log"],
            self.s.iter().zip(&self.sup_error).map(|(&s, &e)| {
                let (c1, c2) = self.fit.map_or((f64::NAN, f64::NAN), |f| (f.c_power, f.c_log));
                vec![s, e, c1 * s.powf(1.0 - a), c2 * s.ln() / s]
            }),
        )
    }

    /// Index after which the curve is non-increasing, if any.
    pub fn monotone_from(&self) -> usize {
        let mut k = self.sup_error.len().saturating_sub(1);
        while k > 0 && self.sup_error[k - 1] >= self.sup_error[k] {
            k -= 1;
        }
        k
    }
}

/// Largest admissible |y| for cubic sampling on a grid.
fn reach(field: &Field) -> f64 {
    field.grid.half_width() - field.grid.dy
}

/// sup_{|ξ|≤K0} |w(ξ·scale(s), s) − profile(ξ)| per snapshot.
pub fn extended_convergence(fields: &[Field], spec: &ProfileSpec, k0: f64) -> Result<ErrorCurve> {
    if !(k0 > 0.0) {
        return Err(invalid("k0", "must be positive"));
    }
    if fields.iter().any(|f| f.frame != Frame::Similarity || f.grid.n != spec.params.n) {
        return Err(invalid("fields", "need similarity-frame snapshots of the profile dimension"));
    }
    let uncovered: Vec<f64> = fields.iter().filter(|f| k0 * spec.scale(f.time) > reach(f)).map(|f| f.time).collect();
    if !uncovered.is_empty() {
        let usable = fields
            .iter()
            .filter(|f| k0 * spec.scale(f.time) <= reach(f))
            .map(|f| f.time)
            .fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::Domain(format!(
            "grid does not cover |y| ≤ K0·scale(s) for s = {:?}; maximal usable s = {usable}",
            uncovered
        )));
    }
    let lattice = xi_lattice(spec.params.n, k0);
    let target: Vec<f64> = lattice.iter().map(|xi| spec.eval(xi)).collect::<Result<_>>()?;
    let mut s = Vec::with_capacity(fields.len());
    let mut sup_error = Vec::with_capacity(fields.len());
    for f in fields {
        let sc = spec.scale(f.time);
        let mut y = vec![0.0; spec.params.n];
        let mut e = 0.0f64;
        for (xi, t) in lattice.iter().zip(&target) {
            for (yj, xj) in y.iter_mut().zip(xi) {
                *yj = xj * sc;
            }
            e = e.max((field_at(f, &y) - t).abs());
        }
        s.push(f.time);
        sup_error.push(e);
    }
    let fit = match spec.kind {
        ProfileKind::QuadraticF { .. } if s.len() >= 2 => {
            let a = spec.params.a;
            let f1: Vec<f64> = s.iter().map(|t| t.powf(1.0 - a)).collect();
            let f2: Vec<f64> = s.iter().map(|t| t.ln() / t).collect();
            let (c1, c2, r) = nnls2(&f1, &f2, &sup_error);
            let norm = sup_error.iter().map(|e| e * e).sum::<f64>().sqrt();
            Some(RateFit {
                c_power: c1,
                c_log: c2,
                rel_residual: if norm > 0.0 { r / norm } else { 0.0 },
            })
        }
        _ => None,
    };
    Ok(ErrorCurve { s, sup_error, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Perturbation;
    use crate::pde::Grid;

    fn prm(n: usize, p: f64) -> ProblemParams {
        ProblemParams::derive(n, p, 2.0, 1.0, 0.0, Perturbation::Zero).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let q = ProfileSpec::quadratic(&prm(1, 2.0), 1).unwrap();
        assert_eq!(q.eval(&[0.0]).unwrap(), 1.0);
        assert!((q.eval(&[8f64.sqrt()]).unwrap() - 0.5).abs() < 1e-15);
        let z = ProfileSpec::higher_psi(&prm(2, 3.0), 4, vec![(MultiIndex::new(vec![4, 0]), 0.0)]).unwrap();
        assert_eq!(z.eval(&[1.3, -0.4]).unwrap(), prm(2, 3.0).kappa);
    }

    #[test]
    fn construction_checks() {
        let p = prm(2, 2.0);
        assert!(ProfileSpec::quadratic(&p, 0).is_err());
        assert!(ProfileSpec::quadratic(&p, 3).is_err());
        assert!(ProfileSpec::higher_psi(&p, 3, vec![]).is_err());
        assert!(ProfileSpec::higher_psi(&p, 6, vec![(MultiIndex::new(vec![4, 0]), 1.0)]).is_err());
        let neg = ProfileSpec::higher_psi(&prm(1, 2.0), 4, vec![(MultiIndex::new(vec![4]), -1.0)]).unwrap();
        assert!(matches!(neg.eval(&[2.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn residuals_vanish() {
        let p1 = prm(1, 2.0);
        let pts: Vec<Vec<f64>> = linspace(-1.0, 1.0, 201).into_iter().map(|x| vec![x]).collect();
        let psi = ProfileSpec::higher_psi(&p1, 4, vec![(MultiIndex::new(vec![4]), 0.1)]).unwrap();
        assert!(residual_g(&psi, &pts).unwrap() <= 1e-12);
        let f = ProfileSpec::quadratic(&p1, 1).unwrap();
        assert!(residual_g(&f, &pts).unwrap() <= 1e-12);
        let p2 = prm(2, 3.0);
        let pts2 = xi_lattice(2, 2.0);
        let psi2 = ProfileSpec::higher_psi(
            &p2,
            6,
            vec![(MultiIndex::new(vec![6, 0]), 0.2), (MultiIndex::new(vec![2, 4]), 0.05), (MultiIndex::new(vec![0, 6]), 0.1)],
        )
        .unwrap();
        assert!(residual_g(&psi2, &pts2).unwrap() <= 1e-12);
        assert!(residual_g(&ProfileSpec::quadratic(&p2, 2).unwrap(), &pts2).unwrap() <= 1e-12);
    }

    #[test]
    fn gradient_matches_differences() {
        let p = prm(2, 1.5);
        let psi = ProfileSpec::higher_psi(&p, 4, vec![(MultiIndex::new(vec![2, 2]), 0.3), (MultiIndex::new(vec![1, 3]), 0.1)]).unwrap();
        let x = [0.7, 0.4];
        let (_, g) = psi.eval_grad(&x).unwrap();
        let h = 1e-6;
        for j in 0..2 {
            let mut a = x;
            let mut b = x;
            a[j] += h;
            b[j] -= h;
            let fd = (psi.eval(&a).unwrap() - psi.eval(&b).unwrap()) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn synthetic_convergence_is_interpolation_noise() {
        let p = prm(1, 2.0);
        let spec = ProfileSpec::quadratic(&p, 1).unwrap();
        let g = Grid::new(1, 20.0, 0.05).unwrap();
        let fields: Vec<Field> = [10.0, 20.0, 40.0]
            .iter()
            .map(|&s| Field::from_fn(g.clone(), s, Frame::Similarity, |y| spec.eval(&[y[0] / s.sqrt()]).unwrap()).unwrap())
            .collect();
        let c = extended_convergence(&fields, &spec, 1.0).unwrap();
        assert!(c.sup_error.iter().all(|&e| e < 1e-6), "{:?}", c.sup_error);
        let far = vec![Field::from_fn(g, 500.0, Frame::Similarity, |_| 1.0).unwrap()];
        let err = extended_convergence(&far, &spec, 1.0).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn rate_fit_recovers_components() {
        let p = ProblemParams::derive(1, 2.0, 3.0, 1.0, 0.0, Perturbation::Zero).unwrap();
        let spec = ProfileSpec::quadratic(&p, 1).unwrap();
        let g = Grid::new(1, 30.0, 0.05).unwrap();
        let fields: Vec<Field> = linspace(10.0, 100.0, 10)
            .into_iter()
            .map(|s| {
                let off = 2.0 / (s * s) + 0.5 * s.ln() / s;
                Field::from_fn(g.clone(), s, Frame::Similarity, move |y| spec_val(y[0] / s.sqrt()) + off).unwrap()
            })
            .collect();
        fn spec_val(x: f64) -> f64 {
            1.0 / (1.0 + x * x / 8.0)
        }
        let c = extended_convergence(&fields, &spec, 1.0).unwrap();
        let f = c.fit.unwrap();
        assert!((f.c_power - 2.0).abs() < 1e-4 && (f.c_log - 0.5).abs() < 1e-5, "{f:?}");
        assert_eq!(c.monotone_from(), 0);
    }
}
