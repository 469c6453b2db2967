//! Continuous ranked probability score in one and several dimensions.

use crate::error::{Error, Result};
use crate::pointwise::BoundedInterval;
use crate::types::grid_nd::unflatten_index;
use crate::types::{merge_grids, Atoms1D, GridCdfND, GridDistribution1D};

/// `CRPS(g, o) = int_a^b (F_g(x) - F_o(x))^2 dx`.
///
/// The integral is exact for the represented CDFs: on every interval
/// between merged breakpoints the gap is linear (constant for step CDFs),
/// so `int d^2 = h (d0^2 + d0 d1 + d1^2) / 3` with `d0` the right limit at
/// the left end and `d1` the left limit at the right end.
pub fn crps(g: &GridDistribution1D, o: &GridDistribution1D, iv: BoundedInterval) -> Result<f64> {
    for (d, name) in [(g, "forecast"), (o, "outcome")] {
        let (lo, hi) = d.support_bounds();
        if lo < iv.l() || hi > iv.r() {
            return Err(Error::Domain(format!(
                "{name} grid [{lo}, {hi}] leaves [{}, {}]",
                iv.l(),
                iv.r()
            )));
        }
    }
    let ends = [iv.l(), iv.r()];
    let points = merge_grids([g.grid(), o.grid(), &ends[..]]);
    let (mut gc, mut oc) = (g.cursor(), o.cursor());
    let (_, g0) = gc.eval(points[0]);
    let (_, o0) = oc.eval(points[0]);
    let mut d0 = g0 - o0;
    let mut total = 0.0;
    for w in points.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let ((gl, g1), (ol, o1)) = (gc.eval(x1), oc.eval(x1));
        let d1 = gl - ol;
        total += (x1 - x0) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
        d0 = g1 - o1;
    }
    Ok(total)
}

/// `int (F_g - F_o)^2` over the real line for two discrete distributions.
pub(crate) fn crps_atoms(g: &Atoms1D, o: &Atoms1D) -> f64 {
    let (gv, gw) = (g.values(), g.weights());
    let (ov, ow) = (o.values(), o.weights());
    let (mut i, mut j) = (0, 0);
    let (mut fg, mut fo) = (0.0, 0.0);
    let mut prev: Option<f64> = None;
    let mut total = 0.0;
    while i < gv.len() || j < ov.len() {
        let x = match (gv.get(i), ov.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        if let Some(p) = prev {
            let d = fg - fo;
            total += (x - p) * d * d;
        }
        while i < gv.len() && gv[i] == x {
            fg += gw[i];
            i += 1;
        }
        while j < ov.len() && ov[j] == x {
            fo += ow[j];
            j += 1;
        }
        prev = Some(x);
    }
    total
}

/// `int_box |F_g(x) - F_o(x)|^2 dx` by the tensor trapezoid rule on the shared grid.
pub fn multidim_crps(g: &GridCdfND, o: &GridCdfND) -> Result<f64> {
    g.check_same_axes(o)?;
    let weights: Vec<Vec<f64>> = g.axes().iter().map(|a| trapezoid_weights(a)).collect();
    let mut idx = vec![0usize; g.dim()];
    let mut total = 0.0;
    for (flat, (a, b)) in g.values().iter().zip(o.values()).enumerate() {
        unflatten_index(g.axes(), flat, &mut idx);
        let w: f64 = idx.iter().zip(&weights).map(|(&i, wd)| wd[i]).product();
        total += w * (a - b) * (a - b);
    }
    Ok(total)
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
            let right = if i + 1 < n { axis[i + 1] - axis[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}
