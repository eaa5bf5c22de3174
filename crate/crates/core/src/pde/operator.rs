use super::grid::{Frame, Grid};
use crate::numerics::thomas;

/// Three-point flux-form operator along one axis:
/// (A f)_i = [up_i (f_{i+1} − f_i) − dn_i (f_i − f_{i−1})] / Δy²,
/// with zero flux through the outer faces.
#[derive(Debug, Clone)]
pub struct AxisOperator {
    up: Vec<f64>,
    dn: Vec<f64>,
    inv_h2: f64,
}

impl AxisOperator {
    /// Plain Laplacian for the physical frame; (1/ρ)(ρ f′)′ with face-averaged
    /// ρ for the similarity frame.
    pub fn new(grid: &Grid, frame: Frame) -> AxisOperator {
        let m = grid.m;
        let y = grid.coords();
        let mut up = vec![0.0; m];
        let mut dn = vec![0.0; m];
        for i in 0..m {
            let ratio = |j: usize| match frame {
                Frame::Physical => 1.0,
                // ρ_{i±1/2}/ρ_i with ρ_{i±1/2} = (ρ_i + ρ_{i±1})/2
                Frame::Similarity => 0.5 * (1.0 + (-(y[j] * y[j] - y[i] * y[i]) / 4.0).exp()),
            };
            if i + 1 < m {
                up[i] = ratio(i + 1);
            }
            if i > 0 {
                dn[i] = ratio(i - 1);
            }
        }
        AxisOperator {
            up,
            dn,
            inv_h2: 1.0 / (grid.dy * grid.dy),
        }
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }

    /// out += A f along a strided line.
    fn apply_line(&self, f: &[f64], start: usize, stride: usize, out: &mut [f64]) {
        let m = self.len();
        for i in 0..m {
            let k = start + i * stride;
            let c = f[k];
            let mut acc = 0.0;
            if i + 1 < m {
                acc += self.up[i] * (f[k + stride] - c);
            }
            if i > 0 {
                acc += self.dn[i] * (f[k - stride] - c);
            }
            out[k] += acc * self.inv_h2;
        }
    }

    /// Solves (a − dt A) x = b in place on a strided line.
    fn solve_line(&self, a: f64, dt: f64, b: &mut [f64], start: usize, stride: usize, work: &mut Work) {
        let m = self.len();
        let c = dt * self.inv_h2;
        for i in 0..m {
            work.lower[i] = -c * self.dn[i];
            work.upper[i] = -c * self.up[i];
            work.diag[i] = a + c * (self.dn[i] + self.up[i]);
            work.rhs[i] = b[start + i * stride];
        }
        thomas(&work.lower, &work.diag, &work.upper, &mut work.rhs, &mut work.scratch);
        for i in 0..m {
            b[start + i * stride] = work.rhs[i];
        }
    }
}

#[derive(Debug, Clone)]
struct Work {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

impl Work {
    fn new(m: usize) -> Work {
        Work {
            lower: vec![0.0; m],
            diag: vec![0.0; m],
            upper: vec![0.0; m],
            rhs: vec![0.0; m],
            scratch: vec![0.0; m],
        }
    }
}

/// The diffusion operator on a 1-D or 2-D grid, Δ (physical) or
/// (1/ρ)div(ρ∇·) (similarity), with homogeneous Neumann closure.
#[derive(Debug, Clone)]
pub struct GridOperator {
    pub grid: Grid,
    pub frame: Frame,
    axis: AxisOperator,
    work: Work,
}

impl GridOperator {
    pub fn new(grid: &Grid, frame: Frame) -> GridOperator {
        GridOperator {
            grid: grid.clone(),
            frame,
            axis: AxisOperator::new(grid, frame),
            work: Work::new(grid.m),
        }
    }

    /// A f.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        let m = self.grid.m;
        if self.grid.n == 1 {
            self.axis.apply_line(f, 0, 1, &mut out);
        } else {
            for r in 0..m {
                self.axis.apply_line(f, r * m, 1, &mut out);
                self.axis.apply_line(f, r, m, &mut out);
            }
        }
        out
    }

    /// Solves (a − dt A) x = b in place. Exact in 1-D; in 2-D uses the
    /// factorization (a − dt A_x)(a − dt A_y)/a.
    pub fn solve_shifted(&mut self, a: f64, dt: f64, b: &mut [f64]) {
        let m = self.grid.m;
        if self.grid.n == 1 {
            self.axis.solve_line(a, dt, b, 0, 1, &mut self.work);
        } else {
            // x-direction lines are columns (stride m), y-direction rows
            for c in 0..m {
                self.axis.solve_line(a, dt, b, c, m, &mut self.work);
            }
            for v in b.iter_mut() {
                *v *= a;
            }
            for r in 0..m {
                self.axis.solve_line(a, dt, b, r * m, 1, &mut self.work);
            }
        }
    }

    /// ρ-weighted inner product with the node weights of the grid.
    pub fn inner(&self, f: &[f64], g: &[f64], weights: &[f64]) -> f64 {
        f.iter().zip(g).zip(weights).map(|((a, b), w)| a * b * w).sum()
    }
}
