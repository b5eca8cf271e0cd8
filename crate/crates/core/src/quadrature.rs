//! Composite Gauss-Legendre quadrature on boxes.

use crate::error::{Error, Result};
use crate::grid::Domain;

/// Nodes and weights of the `order`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_order.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if order == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = order as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule on `[a, b]` with `panels` equal panels of `order` points each.
pub fn composite_rule(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        for (x, w) in gx.iter().zip(&gw) {
            nodes.push(lo + 0.5 * width * (x + 1.0));
            weights.push(0.5 * width * w);
        }
    }
    (nodes, weights)
}

/// Tensor-product composite Gauss-Legendre integral of `f` over `domain`.
pub fn integrate_box<F: FnMut(&[f64]) -> f64>(
    domain: &Domain,
    panels: usize,
    order: usize,
    mut f: F,
) -> Result<f64> {
    let n = domain.dim();
    if n > 4 {
        return Err(Error::SizeGuard(format!(
            "tensor-product quadrature is limited to 4 dimensions, got {n}"
        )));
    }
    let rules: Vec<_> = (0..n)
        .map(|i| composite_rule(domain.lower(i), domain.upper(i), panels, order))
        .collect();
    let m = panels * order;
    let total = m.pow(n as u32);
    let mut x = vec![0.0; n];
    let mut idx = vec![0usize; n];
    let mut sum = 0.0;
    for _ in 0..total {
        let mut w = 1.0;
        for axis in 0..n {
            x[axis] = rules[axis].0[idx[axis]];
            w *= rules[axis].1[idx[axis]];
        }
        sum += w * f(&x);
        for axis in (0..n).rev() {
            idx[axis] += 1;
            if idx[axis] < m {
                break;
            }
            idx[axis] = 0;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(5);
        // degree 9 is exact for 5 points
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_integral() {
        let d = Domain::new(vec![(-8.0, 8.0), (-8.0, 8.0)]).unwrap();
        let s = integrate_box(&d, 16, 8, |x| (-(x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
        assert!((s - std::f64::consts::PI).abs() < 1e-10);
    }
}
