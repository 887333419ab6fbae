use super::order::{vanishing_order, Order, OrderEstimate};
use crate::error::{Error, Result};
use crate::gridfn::{Grid1, GridFn2D};
use rayon::prelude::*;

/// Slack allowed between the measured and the requested order.
pub const ORDER_GATE_SLACK: f64 = 0.2;

/// `f = sum_{|alpha| = p} x^alpha f_alpha` along one transverse variable.
#[derive(Clone, Debug)]
pub struct HadamardSplit {
    /// Multi-indices with their coefficient functions; a single `(p)` here.
    pub terms: Vec<(Vec<u32>, GridFn2D)>,
    /// `f_1, ..., f_p`, each one order less flat than the previous.
    pub steps: Vec<GridFn2D>,
    /// `|f - x^p f_alpha|_inf / |f|_inf`.
    pub defect: f64,
    pub input_order: OrderEstimate,
}

impl HadamardSplit {
    pub fn f_alpha(&self) -> &GridFn2D {
        &self.terms[0].1
    }
}

/// Eighth-order central first derivative with zero extension.
pub(crate) fn derivative8(v: &[f64], dx: f64) -> Vec<f64> {
    const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let n = v.len() as isize;
    let at = |i: isize| if i < 0 || i >= n { 0.0 } else { v[i as usize] };
    (0..n)
        .map(|i| C.iter().enumerate().map(|(k, c)| c * (at(i + k as isize + 1) - at(i - k as isize - 1))).sum::<f64>() / dx)
        .collect()
}

/// `x |-> int_0^1 v'(t x) dt` on a line whose grid has 0 as a node. For a
/// node `x_i` the points `t = k / i` land on grid nodes, so the t-integral is
/// accumulated cell by cell with an eight-point rule on the derivative samples.
pub(crate) fn hadamard_step_line(v: &[f64], grid: Grid1) -> Result<Vec<f64>> {
    const W: [f64; 8] = [-191.0, 1879.0, -9531.0, 68323.0, 68323.0, -9531.0, 1879.0, -191.0];
    let origin = grid.origin_offset().ok_or_else(|| Error::invalid("transverse grid must contain 0 as a node"))?;
    if origin < 0 || origin as usize >= v.len() {
        return Err(Error::invalid("transverse grid must contain 0 as a node"));
    }
    let o = origin as usize;
    let d = derivative8(v, grid.dx);
    let n = d.len() as isize;
    let at = |i: isize| if i < 0 || i >= n { 0.0 } else { d[i as usize] };
    // integral of the derivative over the cell [x_k, x_{k+1}]
    let cell = |k: isize| grid.dx / 120960.0 * W.iter().enumerate().map(|(j, w)| w * at(k - 3 + j as isize)).sum::<f64>();
    let mut out = vec![0.0; v.len()];
    out[o] = d[o];
    let mut acc = 0.0;
    for i in o + 1..v.len() {
        acc += cell(i as isize - 1);
        out[i] = acc / grid.x(i);
    }
    acc = 0.0;
    for i in (0..o).rev() {
        acc -= cell(i as isize);
        out[i] = acc / grid.x(i);
    }
    Ok(out)
}

/// One step of the recursion applied to every line along `axis`.
pub fn hadamard_step(f: &GridFn2D, axis: usize) -> Result<GridFn2D> {
    let t = if axis == 1 { f.clone() } else { f.transpose() };
    let (g0, g1) = t.grids();
    let rows: Vec<Vec<f64>> = (0..g0.n)
        .into_par_iter()
        .map(|i| {
            let row = t.row(i);
            if row.iter().all(|v| *v == 0.0) {
                Ok(vec![0.0; g1.n])
            } else {
                hadamard_step_line(row, g1)
            }
        })
        .collect::<Result<_>>()?;
    let out = GridFn2D::truncated(g0, g1, rows.concat(), t.support())?;
    Ok(if axis == 1 { out } else { out.transpose() })
}

/// `p`-fold Hadamard division by the transverse coordinate along `axis`.
pub fn hadamard_split(f: &GridFn2D, axis: usize, p: u32) -> Result<HadamardSplit> {
    let est = vanishing_order(f, axis)?;
    if !est.at_least(Order::Finite(p), ORDER_GATE_SLACK) {
        return Err(Error::OrderGate { measured: est.p_hat, required: p as f64 });
    }
    let mut steps = Vec::with_capacity(p as usize);
    let mut cur = f.clone();
    for _ in 0..p {
        cur = hadamard_step(&cur, axis)?;
        steps.push(cur.clone());
    }
    let recon = cur.weighted(|x, y| if axis == 0 { x.powi(p as i32) } else { y.powi(p as i32) })?;
    let norm = f.sup_norm();
    let defect = if norm == 0.0 { 0.0 } else { f.sub(&recon)?.sup_norm() / norm };
    Ok(HadamardSplit { terms: vec![(vec![p], cur)], steps, defect, input_order: est })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_gives_constant() {
        let g = Grid1::symmetric(1.0, 0.01).unwrap();
        let v: Vec<f64> = g.xs().iter().map(|x| 2.0 * x).collect();
        let out = hadamard_step_line(&v, g).unwrap();
        // interior: zero extension spoils the outer nodes
        for (i, o) in out.iter().enumerate().skip(8).take(g.n - 16) {
            assert!((o - 2.0).abs() < 1e-12, "at {i}: {o}");
        }
    }

    #[test]
    fn eighth_order_stencil_is_exact_on_octics() {
        let g = Grid1::symmetric(1.0, 0.05).unwrap();
        let v: Vec<f64> = g.xs().iter().map(|x| x.powi(8)).collect();
        let d = derivative8(&v, g.dx);
        for i in 5..g.n - 5 {
            assert!((d[i] - 8.0 * g.x(i).powi(7)).abs() < 1e-9);
        }
    }
}
