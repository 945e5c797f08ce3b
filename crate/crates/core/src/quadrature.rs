//! Gauss rules on the reference edge [-1, 1] and collapsed (Duffy) product
//! rules on the reference triangle {x ≥ 0, y ≥ 0, x + y ≤ 1}.

use crate::error::{Error, Result};

/// Largest polynomial exactness offered for triangle rules.
pub const MAX_TRIANGLE_EXACTNESS: usize = 40;
/// Largest number of Gauss points offered on the edge.
pub const MAX_EDGE_POINTS: usize = 32;

#[derive(Debug, Clone)]
pub struct QuadratureRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl<P> QuadratureRule<P> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub type EdgeRule = QuadratureRule<f64>;
pub type TriangleRule = QuadratureRule<[f64; 2]>;

/// Gauss–Legendre nodes (ascending) and weights on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss rule with `points` nodes on [-1, 1]; exact to degree `2 points - 1`.
pub fn edge_quadrature(points: usize) -> Result<EdgeRule> {
    if points == 0 || points > MAX_EDGE_POINTS {
        return Err(Error::UnsupportedQuadrature(format!(
            "edge rule with {points} points (supported: 1..={MAX_EDGE_POINTS})"
        )));
    }
    let (x, w) = gauss_legendre(points);
    Ok(QuadratureRule { points: x, weights: w, exactness: 2 * points - 1 })
}

/// Rule on the reference triangle integrating every polynomial of total
/// degree ≤ `exactness` exactly.
pub fn triangle_quadrature(exactness: usize) -> Result<TriangleRule> {
    if exactness == 0 || exactness > MAX_TRIANGLE_EXACTNESS {
        return Err(Error::UnsupportedQuadrature(format!(
            "triangle exactness {exactness} (supported: 1..={MAX_TRIANGLE_EXACTNESS})"
        )));
    }
    // x = u (1 - v), y = v with Jacobian (1 - v): degree ≤ exactness + 1 per direction.
    let n = (exactness + 2).div_ceil(2);
    let (g, gw) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&gv, &wv) in g.iter().zip(&gw) {
        let v = 0.5 * (gv + 1.0);
        for (&gu, &wu) in g.iter().zip(&gw) {
            let u = 0.5 * (gu + 1.0);
            points.push([u * (1.0 - v), v]);
            weights.push(0.25 * wu * wv * (1.0 - v));
        }
    }
    Ok(QuadratureRule { points, weights, exactness })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn triangle_area_and_centroid() {
        let r = triangle_quadrature(1).unwrap();
        let area: f64 = r.weights.iter().sum();
        assert!((area - 0.5).abs() < 1e-15);
        let mx: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| p[0] * w).sum();
        assert!((mx - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_monomials_exact() {
        for exactness in [1, 2, 4, 7, 10, 14, 20] {
            let r = triangle_quadrature(exactness).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for p in &r.points {
                assert!(p[0] > 0.0 && p[1] > 0.0 && p[0] + p[1] < 1.0);
            }
            for a in 0..=exactness as u32 {
                for b in 0..=(exactness as u32 - a) {
                    let q: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| p[0].powi(a as i32) * p[1].powi(b as i32) * w)
                        .sum();
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    assert!(((q - exact) / exact).abs() < 1e-13, "x^{a} y^{b}: {q} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn edge_rules() {
        let r = edge_quadrature(1).unwrap();
        assert_eq!(r.exactness, 1);
        let lin: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| (3.0 * x + 2.0) * w).sum();
        assert!((lin - 4.0).abs() < 1e-15);
        let r = edge_quadrature(3).unwrap();
        let q: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| x.powi(4) * w).sum();
        assert!((q - 0.4).abs() < 1e-14);
        for n in 1..=12 {
            let r = edge_quadrature(n).unwrap();
            for d in 0..=(2 * n - 1) as i32 {
                let q: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| x.powi(d) * w).sum();
                let exact = if d % 2 == 0 { 2.0 / (d + 1) as f64 } else { 0.0 };
                assert!((q - exact).abs() < 1e-14, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn unsupported_rules_rejected() {
        assert!(edge_quadrature(0).is_err());
        assert!(triangle_quadrature(0).is_err());
        assert!(triangle_quadrature(MAX_TRIANGLE_EXACTNESS + 1).is_err());
        // k ≤ 3 needs at least 2k + 6 = 12 (and 2(k + 1) + 6 = 14 for error norms)
        assert!(triangle_quadrature(14).is_ok());
    }
}
