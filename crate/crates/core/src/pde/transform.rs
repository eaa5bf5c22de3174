use super::grid::{Field, Frame, Grid};
use crate::error::{invalid, Error, Result};
use crate::numerics::{interp_cubic, interp_cubic_2d};

fn resample(src: &Field, coords: impl Fn(&[f64]) -> [f64; 2], target: &Grid) -> Result<Vec<f64>> {
    let g = &src.grid;
    let lim = g.half_width() * (1.0 + 1e-12);
    let x0 = -g.half_width();
    let mut out = Vec::with_capacity(target.len());
    for k in 0..target.len() {
        let y = target.point(k);
        let x = coords(&y[..target.n]);
        if (0..g.n).any(|d| x[d].abs() > lim) {
            return Err(Error::Domain(format!(
                "target node maps to {:?}, outside the source half-width {}",
                &x[..g.n],
                g.half_width()
            )));
        }
        out.push(if g.n == 1 {
            interp_cubic(x0, g.dy, &src.values, x[0])
        } else {
            interp_cubic_2d(x0, g.dy, g.m, &src.values, x[0], x[1])
        });
    }
    Ok(out)
}

fn check(field: &Field, frame: Frame, x0: &[f64], target: &Grid) -> Result<()> {
    if field.frame != frame {
        return Err(invalid("frame", format!("expected a {frame:?} field")));
    }
    if x0.len() != field.grid.n || target.n != field.grid.n {
        return Err(Error::DimensionMismatch {
            expected: field.grid.n,
            got: if x0.len() != field.grid.n { x0.len() } else { target.n },
        });
    }
    Ok(())
}

/// w(y, s) = (T−t)^{1/(p−1)} u(x0 + y√(T−t), t), s = −log(T−t), sampled on
/// `target` by cubic interpolation.
pub fn to_similarity(u: &Field, x0: &[f64], t_blow: f64, p: f64, target: &Grid) -> Result<Field> {
    check(u, Frame::Physical, x0, target)?;
    let tau = t_blow - u.time;
    if !(tau > 0.0) {
        return Err(invalid("T", format!("need t < T, got t = {}, T = {t_blow}", u.time)));
    }
    let r = tau.sqrt();
    let values = resample(u, |y| [x0[0] + y[0] * r, x0.get(1).map_or(0.0, |c| c + y[1] * r)], target)?;
    let scale = tau.powf(1.0 / (p - 1.0));
    Field::new(
        target.clone(),
        values.into_iter().map(|v| v * scale).collect(),
        -tau.ln(),
        Frame::Similarity,
    )
}

/// Inverse of [`to_similarity`]: u(x, t) on `target` at t = T − e^{−s}.
pub fn from_similarity(w: &Field, x0: &[f64], t_blow: f64, p: f64, target: &Grid) -> Result<Field> {
    check(w, Frame::Similarity, x0, target)?;
    let tau = (-w.time).exp();
    let r = tau.sqrt();
    let values = resample(
        w,
        |x| [(x[0] - x0[0]) / r, x.get(1).map_or(0.0, |c| (c - x0[1]) / r)],
        target,
    )?;
    let scale = tau.powf(-1.0 / (p - 1.0));
    Field::new(
        target.clone(),
        values.into_iter().map(|v| v * scale).collect(),
        t_blow - tau,
        Frame::Physical,
    )
}
