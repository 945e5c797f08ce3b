//! Benchmark data: a manufactured smooth optimum on the unit square and a
//! vortex-shaped target on a small square.

use std::f64::consts::PI;

use crate::mesh::Point;

/// Pointwise values of an exact solution of the optimality system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactValues {
    pub state: [f64; 2],
    pub adjoint: [f64; 2],
    pub pressure: f64,
    pub adjoint_pressure: f64,
    /// `state_gradient[i][j] = ∂_j y_i`
    pub state_gradient: [[f64; 2]; 2],
    pub adjoint_gradient: [[f64; 2]; 2],
}

/// Smooth optimum on the unit square with `γ = 1`.
pub mod example1 {
    use super::*;

    pub const GAMMA: f64 = 1.0;

    pub fn exact(x: Point) -> ExactValues {
        let (a, b) = (PI * x[0], PI * x[1]);
        let (sa, ca, sb, cb) = (a.sin(), a.cos(), b.sin(), b.cos());
        let (s2a, c2a, s2b, c2b) = ((2.0 * a).sin(), (2.0 * a).cos(), (2.0 * b).sin(), (2.0 * b).cos());
        let pi2 = PI * PI;
        let pi3 = pi2 * PI;
        ExactValues {
            state: [-2.0 * pi2 * (sa * sa * cb + sa * s2b), 2.0 * pi2 * (ca * sb * sb + sb * s2a)],
            adjoint: [PI * sa * sa * s2b, -PI * sb * sb * s2a],
            pressure: ca,
            adjoint_pressure: ca,
            state_gradient: [
                [-4.0 * pi3 * (sa + sb) * ca * cb, 2.0 * pi3 * (sa * sb - 2.0 * c2b) * sa],
                [2.0 * pi3 * (2.0 * c2a - sa * sb) * sb, 4.0 * pi3 * (sa + sb) * ca * cb],
            ],
            adjoint_gradient: [
                [pi2 * s2a * s2b, 2.0 * pi2 * sa * sa * c2b],
                [-2.0 * pi2 * sb * sb * c2a, -pi2 * s2a * s2b],
            ],
        }
    }

    fn laplacians(x: Point) -> ([f64; 2], [f64; 2]) {
        let (a, b) = (PI * x[0], PI * x[1]);
        let (sa, ca, sb, cb) = (a.sin(), a.cos(), b.sin(), b.cos());
        let pi3 = PI * PI * PI;
        let pi4 = pi3 * PI;
        let state = [
            2.0 * pi4 * (5.0 * sa * sa + 10.0 * sa * sb - 2.0) * cb,
            2.0 * pi4 * (2.0 - 10.0 * sa * sb - 5.0 * sb * sb) * ca,
        ];
        let adjoint = [
            2.0 * pi3 * (2.0 * (2.0 * a).cos() - 1.0) * (2.0 * b).sin(),
            2.0 * pi3 * (1.0 - 2.0 * (2.0 * b).cos()) * (2.0 * a).sin(),
        ];
        (state, adjoint)
    }

    /// `f = -Δy + ∇p`
    pub fn force(x: Point) -> [f64; 2] {
        let (lap_y, _) = laplacians(x);
        let dp = -PI * (PI * x[0]).sin();
        [-lap_y[0] + dp, -lap_y[1]]
    }

    /// `y_d = y + Δz + ∇q`
    pub fn target(x: Point) -> [f64; 2] {
        let e = exact(x);
        let (_, lap_z) = laplacians(x);
        let dq = -PI * (PI * x[0]).sin();
        [e.state[0] + lap_z[0] + dq, e.state[1] + lap_z[1]]
    }

    /// The optimal control `u = y·τ` on the boundary.
    pub fn control(x: Point, tangent: Point) -> f64 {
        let y = exact(x).state;
        y[0] * tangent[0] + y[1] * tangent[1]
    }
}

/// Vortex target on `[0, 1/8]²` with `f = 0` and `γ = 1`.
pub mod example2 {
    use super::*;

    pub const GAMMA: f64 = 1.0;
    pub const SIDE: f64 = 0.125;

    pub fn target(x: Point) -> [f64; 2] {
        let (x1, x2) = (x[0], x[1]);
        let s = 200.0 * 512.0;
        [
            s * x1 * x1 * (1.0 - 8.0 * x1).powi(2) * x2 * (1.0 - 8.0 * x2) * (1.0 - 16.0 * x2),
            -s * x1 * (1.0 - 8.0 * x1) * (1.0 - 16.0 * x1) * x2 * x2 * (1.0 - 8.0 * x2).powi(2),
        ]
    }

    pub fn force(_: Point) -> [f64; 2] {
        [0.0, 0.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STEP: f64 = 1e-5;

    fn sample_points(count: usize, side: f64) -> Vec<Point> {
        // deterministic low-discrepancy points strictly inside the square
        let g = 0.5 * (5f64.sqrt() - 1.0);
        (1..=count)
            .map(|i| [side * ((i as f64 * g).fract() * 0.98 + 0.01), side * ((i as f64 / count as f64) * 0.98 + 0.005)])
            .collect()
    }

    fn fd_gradient(f: impl Fn(Point) -> f64, x: Point) -> [f64; 2] {
        [
            (f([x[0] + STEP, x[1]]) - f([x[0] - STEP, x[1]])) / (2.0 * STEP),
            (f([x[0], x[1] + STEP]) - f([x[0], x[1] - STEP])) / (2.0 * STEP),
        ]
    }

    fn fd_laplacian(f: impl Fn(Point) -> f64, x: Point) -> f64 {
        let h = 1e-4;
        (f([x[0] + h, x[1]]) + f([x[0] - h, x[1]]) + f([x[0], x[1] + h]) + f([x[0], x[1] - h]) - 4.0 * f(x)) / (h * h)
    }

    #[test]
    fn example1_point_values() {
        let e = example1::exact([0.5, 0.5]);
        assert!(e.state.iter().chain(&e.adjoint).all(|v| v.abs() < 1e-12));
        assert!(e.pressure.abs() < 1e-15);
        let u = example1::control([0.25, 0.0], [1.0, 0.0]);
        assert!((u + PI * PI).abs() < 1e-12);
    }

    #[test]
    fn example1_gradients_match_differences() {
        for x in sample_points(200, 1.0) {
            let e = example1::exact(x);
            for i in 0..2 {
                let gy = fd_gradient(|p| example1::exact(p).state[i], x);
                let gz = fd_gradient(|p| example1::exact(p).adjoint[i], x);
                for j in 0..2 {
                    assert!((gy[j] - e.state_gradient[i][j]).abs() < 1e-6 * 100.0);
                    assert!((gz[j] - e.adjoint_gradient[i][j]).abs() < 1e-6 * 10.0);
                }
            }
        }
    }

    #[test]
    fn example1_divergence_free() {
        for x in sample_points(10_000, 1.0) {
            let e = example1::exact(x);
            assert!((e.state_gradient[0][0] + e.state_gradient[1][1]).abs() < 1e-10);
            assert!((e.adjoint_gradient[0][0] + e.adjoint_gradient[1][1]).abs() < 1e-10);
        }
    }

    #[test]
    fn example1_data_matches_differences() {
        for x in sample_points(100, 1.0) {
            let f = example1::force(x);
            let yd = example1::target(x);
            let e = example1::exact(x);
            let dp = fd_gradient(|p| example1::exact(p).pressure, x);
            for i in 0..2 {
                let lap_y = fd_laplacian(|p| example1::exact(p).state[i], x);
                let lap_z = fd_laplacian(|p| example1::exact(p).adjoint[i], x);
                let f_fd = -lap_y + dp[i];
                let yd_fd = e.state[i] + lap_z + dp[i];
                assert!((f[i] - f_fd).abs() < 1e-6 * f_fd.abs().max(1e3), "f at {x:?}");
                assert!((yd[i] - yd_fd).abs() < 1e-6 * yd_fd.abs().max(1e2), "y_d at {x:?}");
            }
        }
    }

    #[test]
    fn example1_boundary_conditions() {
        for i in 0..=100 {
            let s = i as f64 / 100.0;
            // (point, outward normal) on each side
            for (x, n) in
                [([s, 0.0], [0.0, -1.0]), ([1.0, s], [1.0, 0.0]), ([s, 1.0], [0.0, 1.0]), ([0.0, s], [-1.0, 0.0])]
            {
                let e = example1::exact(x);
                let tau = [-n[1], n[0]];
                assert!(e.adjoint.iter().all(|v| v.abs() < 1e-12));
                assert!((e.state[0] * n[0] + e.state[1] * n[1]).abs() < 1e-10);
                // ∂_n z · τ = γ u
                let g = e.adjoint_gradient;
                let dn_z = [g[0][0] * n[0] + g[0][1] * n[1], g[1][0] * n[0] + g[1][1] * n[1]];
                let lhs = dn_z[0] * tau[0] + dn_z[1] * tau[1];
                assert!((lhs - example1::GAMMA * example1::control(x, tau)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn example2_target_shape() {
        for i in 0..=20 {
            let s = example2::SIDE * i as f64 / 20.0;
            for x in [[s, 0.0], [s, example2::SIDE], [0.0, s], [example2::SIDE, s]] {
                let v = example2::target(x);
                assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12);
            }
        }
        assert!(example2::target([1.0 / 16.0, 1.0 / 16.0])[1].abs() < 1e-14);
        for x in sample_points(200, example2::SIDE) {
            let d0 = fd_gradient(|p| example2::target(p)[0], x)[0];
            let d1 = fd_gradient(|p| example2::target(p)[1], x)[1];
            assert!((d0 + d1).abs() < 1e-6 * (1.0 + d0.abs() + d1.abs()), "div at {x:?}");
        }
    }
}
