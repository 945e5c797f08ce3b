//! Orthonormal modal bases: Dubiner polynomials on the reference triangle and
//! Legendre polynomials on the reference edge.

use crate::mesh::{ElementMap, Point};
use crate::quadrature::triangle_quadrature;

/// Number of polynomials of total degree ≤ `degree` in two variables.
pub fn triangle_dim(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Dense bivariate polynomial `Σ c[i][j] x^i y^j`.
#[derive(Debug, Clone, PartialEq)]
struct Poly2 {
    degree: usize,
    coeffs: Vec<f64>,
}

impl Poly2 {
    fn zero(degree: usize) -> Self {
        Self { degree, coeffs: vec![0.0; (degree + 1) * (degree + 1)] }
    }

    fn constant(degree: usize, c: f64) -> Self {
        let mut p = Self::zero(degree);
        p.coeffs[0] = c;
        p
    }

    /// `a + b x + c y`
    fn linear(degree: usize, a: f64, b: f64, c: f64) -> Self {
        let mut p = Self::constant(degree, a);
        *p.at_mut(1, 0) = b;
        *p.at_mut(0, 1) = c;
        p
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.coeffs[i * (self.degree + 1) + j]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.coeffs[i * (self.degree + 1) + j]
    }

    fn scaled(&self, s: f64) -> Self {
        Self { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    fn add_scaled(&mut self, other: &Self, s: f64) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    /// Product, truncated to `self.degree` in each variable (callers keep
    /// the total degree within bounds).
    fn mul(&self, other: &Self) -> Self {
        let d = self.degree;
        let mut out = Self::zero(d);
        for i in 0..=d {
            for j in 0..=d {
                let a = self.at(i, j);
                if a == 0.0 {
                    continue;
                }
                for k in 0..=(d - i) {
                    for l in 0..=(d - j) {
                        *out.at_mut(i + k, j + l) += a * other.at(k, l);
                    }
                }
            }
        }
        out
    }

    fn dx(&self) -> Self {
        let d = self.degree;
        let mut out = Self::zero(d);
        for i in 1..=d {
            for j in 0..=d {
                *out.at_mut(i - 1, j) = i as f64 * self.at(i, j);
            }
        }
        out
    }

    fn dy(&self) -> Self {
        let d = self.degree;
        let mut out = Self::zero(d);
        for i in 0..=d {
            for j in 1..=d {
                *out.at_mut(i, j - 1) = j as f64 * self.at(i, j);
            }
        }
        out
    }

    fn eval(&self, p: Point) -> f64 {
        let d = self.degree;
        let mut acc = 0.0;
        for i in (0..=d).rev() {
            let mut row = 0.0;
            for j in (0..=d).rev() {
                row = row * p[1] + self.at(i, j);
            }
            acc = acc * p[0] + row;
        }
        acc
    }
}

/// Orthonormal basis of `P_degree` on the reference triangle
/// {x ≥ 0, y ≥ 0, x + y ≤ 1}, ordered by total degree so that the basis of
/// any lower degree is a prefix.
#[derive(Debug, Clone)]
pub struct TriangleBasis {
    degree: usize,
    polys: Vec<Poly2>,
    grads: Vec<[Poly2; 2]>,
}

/// Values and reference gradients of a basis at a set of points; row-major by point.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub dim: usize,
    pub values: Vec<f64>,
    pub gradients: Vec<Point>,
}

impl Tabulation {
    pub fn value(&self, point: usize, mode: usize) -> f64 {
        self.values[point * self.dim + mode]
    }

    pub fn gradient(&self, point: usize, mode: usize) -> Point {
        self.gradients[point * self.dim + mode]
    }

    pub fn num_points(&self) -> usize {
        self.values.len() / self.dim.max(1)
    }
}

impl TriangleBasis {
    pub fn new(degree: usize) -> Self {
        // Storage degree; at least 1 so the linear factors fit.
        let d = degree.max(1);
        // Collapsed coordinates: X = 2x - 1 + y, Y = 1 - y, t = 2y - 1.
        let big_x = Poly2::linear(d, -1.0, 2.0, 1.0);
        let big_y = Poly2::linear(d, 1.0, 0.0, -1.0);
        let y_sq = big_y.mul(&big_y);
        let t = Poly2::linear(d, -1.0, 0.0, 2.0);

        // Q_p = Y^p P_p(X / Y)
        let mut q = vec![Poly2::constant(d, 1.0)];
        for p in 0..degree {
            let mut next = big_x.mul(&q[p]).scaled((2 * p + 1) as f64);
            if p > 0 {
                next.add_scaled(&y_sq.mul(&q[p - 1]), -(p as f64));
            }
            q.push(next.scaled(1.0 / (p + 1) as f64));
        }

        let rule = triangle_quadrature(2 * d).expect("rule for basis normalization");
        let mut polys = Vec::with_capacity(triangle_dim(degree));
        for total in 0..=degree {
            for qd in 0..=total {
                let p = total - qd;
                let jac = jacobi(d, (2 * p + 1) as f64, qd, &t);
                let raw = q[p].mul(&jac);
                let norm_sq: f64 = rule.points.iter().zip(&rule.weights).map(|(x, w)| raw.eval(*x).powi(2) * w).sum();
                polys.push(raw.scaled(1.0 / norm_sq.sqrt()));
            }
        }
        let grads = polys.iter().map(|p| [p.dx(), p.dy()]).collect();
        Self { degree, polys, grads }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.polys.len()
    }

    pub fn eval(&self, x: Point) -> Vec<f64> {
        self.polys.iter().map(|p| p.eval(x)).collect()
    }

    pub fn eval_gradient(&self, x: Point) -> Vec<Point> {
        self.grads.iter().map(|[gx, gy]| [gx.eval(x), gy.eval(x)]).collect()
    }

    pub fn tabulate(&self, points: &[Point]) -> Tabulation {
        let mut values = Vec::with_capacity(points.len() * self.dim());
        let mut gradients = Vec::with_capacity(points.len() * self.dim());
        for &x in points {
            values.extend(self.eval(x));
            gradients.extend(self.eval_gradient(x));
        }
        Tabulation { dim: self.dim(), values, gradients }
    }
}

/// Jacobi polynomial `P_n^(alpha, 0)(t)` for a linear polynomial `t`.
fn jacobi(degree: usize, alpha: f64, n: usize, t: &Poly2) -> Poly2 {
    let mut prev = Poly2::constant(degree, 1.0);
    if n == 0 {
        return prev;
    }
    let mut cur = t.scaled(0.5 * (alpha + 2.0));
    cur.coeffs[0] += 0.5 * alpha;
    for m in 2..=n {
        let m = m as f64;
        let s = 2.0 * m + alpha;
        let c0 = 2.0 * m * (m + alpha) * (s - 2.0);
        let c1 = (s - 1.0) * s * (s - 2.0);
        let c2 = (s - 1.0) * alpha * alpha;
        let c3 = 2.0 * (m + alpha - 1.0) * (m - 1.0) * s;
        let mut next = t.mul(&cur).scaled(c1);
        next.add_scaled(&cur, c2);
        next.add_scaled(&prev, -c3);
        prev = cur;
        cur = next.scaled(1.0 / c0);
    }
    cur
}

/// Orthonormal Legendre basis `sqrt((2m+1)/2) P_m` on [-1, 1].
#[derive(Debug, Clone, Copy)]
pub struct EdgeBasis {
    degree: usize,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Self {
        Self { degree }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        let (mut p0, mut p1) = (1.0, t);
        for m in 0..=self.degree {
            let value = match m {
                0 => 1.0,
                1 => t,
                _ => {
                    let p2 = ((2 * m - 1) as f64 * t * p1 - (m - 1) as f64 * p0) / m as f64;
                    p0 = p1;
                    p1 = p2;
                    p2
                }
            };
            out.push(value * ((2 * m + 1) as f64 / 2.0).sqrt());
        }
        out
    }

    /// Values of the basis orthonormal on a physical face of `length`.
    pub fn eval_on_face(&self, t: f64, length: f64) -> Vec<f64> {
        let s = (2.0 / length).sqrt();
        self.eval(t).into_iter().map(|v| v * s).collect()
    }
}

/// Values of a reference basis pulled to a physical element, orthonormal on it.
pub fn physical_values(map: &ElementMap, reference: &[f64]) -> Vec<f64> {
    let s = 1.0 / map.det.abs().sqrt();
    reference.iter().map(|v| v * s).collect()
}

/// Physical gradients of the element-orthonormal basis.
pub fn physical_gradients(map: &ElementMap, reference: &[Point]) -> Vec<Point> {
    let s = 1.0 / map.det.abs().sqrt();
    reference
        .iter()
        .map(|&g| {
            let p = map.push_gradient(g);
            [p[0] * s, p[1] * s]
        })
        .collect()
}
