//! Benchmark inputs shared by the criterion targets.

use stokes_hdg::{build_square_mesh, Mesh};

/// Unit square with `h/√2 = 1/n`.
pub fn unit_square(n: usize) -> Mesh {
    build_square_mesh(n, 1.0, [0.0, 0.0]).expect("positive subdivision count")
}
