//! Element matrices of the pseudo-time HDG system and their static condensation.
//!
//! Per element the unknowns are grouped as
//! `fluxes = [L; G]`, `velocities = [y; z]`, `pressures = [p; q]` and the face
//! unknowns `traces = [ŷ on interior faces; ẑ on interior faces; u on boundary faces]`.
//! The local rows read
//!
//! ```text
//! B1 fluxes + B2 velocities                 + B3 traces = 0
//! -B2ᵀ fluxes + B4 velocities + B5 pressures + B6 traces = [b1; -b2]
//!              B7 velocities + B8 pressures + B9 traces = A10 [p_prev; q_prev] / Δt
//! ```
//!
//! and the face rows `B10 fluxes + B11 velocities + B12 pressures + B13 traces`
//! are summed over elements into the global trace system.

use nalgebra::{DMatrix, DVector};

use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Vector field evaluated at a physical point.
pub type VectorField<'a> = &'a (dyn Fn(Point) -> [f64; 2] + Sync);

/// Element matrices. Rows index test functions, columns trial coefficients.
///
/// Local layouts: flux `(i, j, a) -> (2 i + j) nk + a`, velocity
/// `(r, b) -> r nk1 + b`, interior trace `(face, r, m)`, control `(face, m)`.
#[derive(Debug, Clone)]
pub struct LocalBlocks {
    pub element: usize,
    /// Global ids of the interior faces, in local face order.
    pub interior_faces: Vec<usize>,
    /// Global ids of the boundary faces, in local face order.
    pub boundary_faces: Vec<usize>,
    pub flux_mass: Matrix,
    /// `(y, ∇·T)`
    pub flux_velocity: Matrix,
    /// `⟨μ, T n⟩` on interior faces
    pub flux_trace: Matrix,
    /// `⟨μ τ, T n⟩` on boundary faces
    pub flux_control: Matrix,
    /// `⟨h⁻¹ P_M v', v⟩` on all faces
    pub velocity_stabilization: Matrix,
    /// `(∇w, v)`
    pub pressure_gradient: Matrix,
    /// `⟨h⁻¹ μ, v⟩` on interior faces
    pub velocity_trace: Matrix,
    /// `⟨h⁻¹ μ τ, v⟩` on boundary faces
    pub velocity_control: Matrix,
    pub velocity_mass: Matrix,
    pub pressure_mass: Matrix,
    /// `⟨w n, μ⟩` on interior faces; rows are traces
    pub trace_pressure: Matrix,
    /// `⟨h⁻¹ μ', μ⟩` on interior faces
    pub trace_stabilization: Matrix,
    /// `⟨T n, μ τ⟩` on boundary faces; rows are controls
    pub control_flux: Matrix,
    /// `⟨h⁻¹ v, μ τ⟩` on boundary faces; rows are controls
    pub control_velocity: Matrix,
    pub control_mass: Matrix,
    pub gamma: f64,
    pub time_step: f64,
}

/// Element load vectors `(f, v)` and `(y_d, v)`.
#[derive(Debug, Clone)]
pub struct LocalLoads {
    pub force: Vector,
    pub target: Vector,
}

impl LocalLoads {
    pub fn zeros(velocity_dim: usize) -> Self {
        Self { force: Vector::zeros(velocity_dim), target: Vector::zeros(velocity_dim) }
    }
}

impl LocalBlocks {
    pub fn flux_dim(&self) -> usize {
        self.flux_mass.nrows()
    }

    pub fn velocity_dim(&self) -> usize {
        self.velocity_mass.nrows()
    }

    pub fn pressure_dim(&self) -> usize {
        self.pressure_mass.nrows()
    }

    pub fn interior_trace_dim(&self) -> usize {
        self.trace_stabilization.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.control_mass.nrows()
    }

    /// Length of the local face vector `[ŷ; ẑ; u]`.
    pub fn face_dim(&self) -> usize {
        2 * self.interior_trace_dim() + self.control_dim()
    }

    /// `A10 / Δt`
    pub fn pressure_relaxation(&self) -> Matrix {
        &self.pressure_mass / self.time_step
    }
}

/// Assemble every element matrix of `element` by quadrature.
pub fn assemble_local_blocks(
    mesh: &Mesh,
    element: usize,
    disc: &Discretization,
    gamma: f64,
    time_step: f64,
) -> Result<LocalBlocks> {
    if !(gamma > 0.0) || !(time_step > 0.0) {
        return Err(Error::InvalidConfig(format!("gamma = {gamma} and time step = {time_step} must be positive")));
    }
    if mesh.element_area(element) <= 0.0 {
        return Err(Error::DegenerateElement(element));
    }
    let nk = disc.scalar_dim();
    let nk1 = disc.velocity_scalar_dim();
    let modes = disc.face_modes();
    let (n_flux, n_vel, n_p) = (disc.flux_dim(), disc.velocity_dim(), disc.pressure_dim());

    let faces = disc.element_faces(mesh, element)?;
    let interior_faces: Vec<usize> = faces.iter().filter(|f| !f.is_boundary).map(|f| f.face).collect();
    let boundary_faces: Vec<usize> = faces.iter().filter(|f| f.is_boundary).map(|f| f.face).collect();
    let n_tr = interior_faces.len() * 2 * modes;
    let n_u = boundary_faces.len() * modes;

    let mut flux_mass = Matrix::zeros(n_flux, n_flux);
    let mut flux_velocity = Matrix::zeros(n_flux, n_vel);
    let mut pressure_gradient = Matrix::zeros(n_vel, n_p);
    let mut velocity_mass = Matrix::zeros(n_vel, n_vel);
    let mut pressure_mass = Matrix::zeros(n_p, n_p);

    for qp in disc.volume_points(mesh, element) {
        let w = qp.weight;
        for a in 0..nk {
            for a2 in 0..nk {
                let m = qp.flux[a] * qp.flux[a2] * w;
                pressure_mass[(a, a2)] += m;
                for c in 0..4 {
                    flux_mass[(c * nk + a, c * nk + a2)] += m;
                }
            }
            let grad = qp.flux_gradient[a];
            for b in 0..nk1 {
                for r in 0..2 {
                    // T = ψ_a e_r e_j: (∇·T)_r = ∂_j ψ_a
                    for j in 0..2 {
                        flux_velocity[((2 * r + j) * nk + a, r * nk1 + b)] += qp.velocity[b] * grad[j] * w;
                    }
                    pressure_gradient[(r * nk1 + b, a)] += grad[r] * qp.velocity[b] * w;
                }
            }
        }
        for b in 0..nk1 {
            for b2 in 0..nk1 {
                let m = qp.velocity[b] * qp.velocity[b2] * w;
                for r in 0..2 {
                    velocity_mass[(r * nk1 + b, r * nk1 + b2)] += m;
                }
            }
        }
    }

    let mut flux_trace = Matrix::zeros(n_flux, n_tr);
    let mut flux_control = Matrix::zeros(n_flux, n_u);
    let mut velocity_stabilization = Matrix::zeros(n_vel, n_vel);
    let mut velocity_trace = Matrix::zeros(n_vel, n_tr);
    let mut velocity_control = Matrix::zeros(n_vel, n_u);
    let mut trace_pressure = Matrix::zeros(n_tr, n_p);
    let mut trace_stabilization = Matrix::zeros(n_tr, n_tr);
    let mut control_mass = Matrix::zeros(n_u, n_u);

    let (mut next_interior, mut next_boundary) = (0, 0);
    for face in &faces {
        // Moments ∫ μ_m φ_b and ∫ μ_m ψ_a, and the edge Gram matrix.
        let mut vel_moments = Matrix::zeros(modes, nk1);
        let mut flux_moments = Matrix::zeros(modes, nk);
        let mut edge_gram = Matrix::zeros(modes, modes);
        for fp in &face.points {
            for m in 0..modes {
                let mu = fp.edge[m] * fp.weight;
                for b in 0..nk1 {
                    vel_moments[(m, b)] += mu * fp.velocity[b];
                }
                for a in 0..nk {
                    flux_moments[(m, a)] += mu * fp.flux[a];
                }
                for m2 in 0..modes {
                    edge_gram[(m, m2)] += mu * fp.edge[m2];
                }
            }
        }
        let (n, tau, pen) = (face.normal, face.tangent, face.penalty);
        let projected = vel_moments.transpose() * &vel_moments * pen;
        for r in 0..2 {
            let off = r * nk1;
            let mut block = velocity_stabilization.view_mut((off, off), (nk1, nk1));
            block += &projected;
        }
        if face.is_boundary {
            let off = next_boundary * modes;
            next_boundary += 1;
            for m in 0..modes {
                for a in 0..nk {
                    for i in 0..2 {
                        for j in 0..2 {
                            flux_control[((2 * i + j) * nk + a, off + m)] += tau[i] * n[j] * flux_moments[(m, a)];
                        }
                    }
                }
                for b in 0..nk1 {
                    for r in 0..2 {
                        velocity_control[(r * nk1 + b, off + m)] += pen * tau[r] * vel_moments[(m, b)];
                    }
                }
                for m2 in 0..modes {
                    control_mass[(off + m, off + m2)] += edge_gram[(m, m2)];
                }
            }
        } else {
            let off = next_interior * 2 * modes;
            next_interior += 1;
            for r in 0..2 {
                let row = off + r * modes;
                for m in 0..modes {
                    for a in 0..nk {
                        for j in 0..2 {
                            flux_trace[((2 * r + j) * nk + a, row + m)] += n[j] * flux_moments[(m, a)];
                        }
                        trace_pressure[(row + m, a)] += n[r] * flux_moments[(m, a)];
                    }
                    for b in 0..nk1 {
                        velocity_trace[(r * nk1 + b, row + m)] += pen * vel_moments[(m, b)];
                    }
                    for m2 in 0..modes {
                        trace_stabilization[(row + m, row + m2)] += pen * edge_gram[(m, m2)];
                    }
                }
            }
        }
    }

    Ok(LocalBlocks {
        element,
        interior_faces,
        boundary_faces,
        control_flux: flux_control.transpose(),
        control_velocity: velocity_control.transpose(),
        flux_mass,
        flux_velocity,
        flux_trace,
        flux_control,
        velocity_stabilization,
        pressure_gradient,
        velocity_trace,
        velocity_control,
        velocity_mass,
        pressure_mass,
        trace_pressure,
        trace_stabilization,
        control_mass,
        gamma,
        time_step,
    })
}

/// Load vectors `(f, v)` and `(y_d, v)` on `element`.
pub fn assemble_local_loads(
    mesh: &Mesh,
    element: usize,
    disc: &Discretization,
    force: VectorField,
    target: VectorField,
) -> LocalLoads {
    let nk1 = disc.velocity_scalar_dim();
    let mut loads = LocalLoads::zeros(disc.velocity_dim());
    for (x, w, _, vel) in disc.load_points(mesh, element) {
        let (f, yd) = (force(x), target(x));
        for b in 0..nk1 {
            for r in 0..2 {
                loads.force[r * nk1 + b] += f[r] * vel[b] * w;
                loads.target[r * nk1 + b] += yd[r] * vel[b] * w;
            }
        }
    }
    loads
}

/// Copy `src` into `dst` at `(row, col)`, scaled.
fn put(dst: &mut Matrix, row: usize, col: usize, src: &Matrix, scale: f64) {
    let mut view = dst.view_mut((row, col), src.shape());
    view.copy_from(&(src * scale));
}

/// The coupling blocks of one element written out in the grouped unknowns.
#[derive(Debug, Clone)]
pub struct GroupedBlocks {
    pub b1: Matrix,
    pub b2: Matrix,
    pub b3: Matrix,
    pub b4: Matrix,
    pub b5: Matrix,
    pub b6: Matrix,
    pub b7: Matrix,
    pub b8: Matrix,
    pub b9: Matrix,
    pub b10: Matrix,
    pub b11: Matrix,
    pub b12: Matrix,
    pub b13: Matrix,
}

impl GroupedBlocks {
    pub fn new(blocks: &LocalBlocks) -> Self {
        let (nl, nv, np) = (blocks.flux_dim(), blocks.velocity_dim(), blocks.pressure_dim());
        let (nt, nu) = (blocks.interior_trace_dim(), blocks.control_dim());
        let nf = 2 * nt + nu;
        let b = blocks;

        let mut b1 = Matrix::zeros(2 * nl, 2 * nl);
        put(&mut b1, 0, 0, &b.flux_mass, 1.0);
        put(&mut b1, nl, nl, &b.flux_mass, 1.0);
        let mut b2 = Matrix::zeros(2 * nl, 2 * nv);
        put(&mut b2, 0, 0, &b.flux_velocity, 1.0);
        put(&mut b2, nl, nv, &b.flux_velocity, 1.0);
        let mut b3 = Matrix::zeros(2 * nl, nf);
        put(&mut b3, 0, 0, &b.flux_trace, -1.0);
        put(&mut b3, 0, 2 * nt, &b.flux_control, -1.0);
        put(&mut b3, nl, nt, &b.flux_trace, -1.0);

        let mut b4 = Matrix::zeros(2 * nv, 2 * nv);
        put(&mut b4, 0, 0, &b.velocity_stabilization, 1.0);
        put(&mut b4, nv, 0, &b.velocity_mass, -1.0);
        put(&mut b4, nv, nv, &b.velocity_stabilization, 1.0);
        let mut b5 = Matrix::zeros(2 * nv, 2 * np);
        put(&mut b5, 0, 0, &b.pressure_gradient, 1.0);
        put(&mut b5, nv, np, &b.pressure_gradient, -1.0);
        let mut b6 = Matrix::zeros(2 * nv, nf);
        put(&mut b6, 0, 0, &b.velocity_trace, -1.0);
        put(&mut b6, 0, 2 * nt, &b.velocity_control, -1.0);
        put(&mut b6, nv, nt, &b.velocity_trace, -1.0);

        let gradient_t = b.pressure_gradient.transpose();
        let mut b7 = Matrix::zeros(2 * np, 2 * nv);
        put(&mut b7, 0, 0, &gradient_t, -1.0);
        put(&mut b7, np, nv, &gradient_t, -1.0);
        let relaxation = b.pressure_relaxation();
        let mut b8 = Matrix::zeros(2 * np, 2 * np);
        put(&mut b8, 0, 0, &relaxation, 1.0);
        put(&mut b8, np, np, &relaxation, 1.0);
        let trace_pressure_t = b.trace_pressure.transpose();
        let mut b9 = Matrix::zeros(2 * np, nf);
        put(&mut b9, 0, 0, &trace_pressure_t, 1.0);
        put(&mut b9, np, nt, &trace_pressure_t, 1.0);

        let mut b10 = Matrix::zeros(nf, 2 * nl);
        put(&mut b10, 0, 0, &b.flux_trace.transpose(), 1.0);
        put(&mut b10, nt, nl, &b.flux_trace.transpose(), 1.0);
        put(&mut b10, 2 * nt, nl, &b.control_flux, 1.0);
        let mut b11 = Matrix::zeros(nf, 2 * nv);
        put(&mut b11, 0, 0, &b.velocity_trace.transpose(), -1.0);
        put(&mut b11, nt, nv, &b.velocity_trace.transpose(), -1.0);
        put(&mut b11, 2 * nt, nv, &b.control_velocity, -1.0);
        let mut b12 = Matrix::zeros(nf, 2 * np);
        put(&mut b12, 0, 0, &b.trace_pressure, -1.0);
        put(&mut b12, nt, np, &b.trace_pressure, 1.0);
        let mut b13 = Matrix::zeros(nf, nf);
        put(&mut b13, 0, 0, &b.trace_stabilization, 1.0);
        put(&mut b13, nt, nt, &b.trace_stabilization, 1.0);
        put(&mut b13, 2 * nt, 2 * nt, &b.control_mass, -b.gamma);

        Self { b1, b2, b3, b4, b5, b6, b7, b8, b9, b10, b11, b12, b13 }
    }

    /// Right-hand sides of the velocity rows and the pressure rows.
    pub fn element_rhs(blocks: &LocalBlocks, loads: &LocalLoads, p_prev: &Vector, q_prev: &Vector) -> (Vector, Vector) {
        let nv = blocks.velocity_dim();
        let np = blocks.pressure_dim();
        let mut velocity_rhs = Vector::zeros(2 * nv);
        velocity_rhs.rows_mut(0, nv).copy_from(&loads.force);
        velocity_rhs.rows_mut(nv, nv).copy_from(&(-&loads.target));
        let relaxation = blocks.pressure_relaxation();
        let mut pressure_rhs = Vector::zeros(2 * np);
        pressure_rhs.rows_mut(0, np).copy_from(&(&relaxation * p_prev));
        pressure_rhs.rows_mut(np, np).copy_from(&(&relaxation * q_prev));
        (velocity_rhs, pressure_rhs)
    }
}

/// Inverse of `[[c1, 0], [-coupling, c2]]` for symmetric positive definite
/// `c1`, `c2`, formed as `[[c1⁻¹, 0], [c2⁻¹ coupling c1⁻¹, c2⁻¹]]`.
pub fn block_lower_inverse(c1: &Matrix, coupling: &Matrix, c2: &Matrix) -> Option<Matrix> {
    let c1_inv = c1.clone().cholesky()?.inverse();
    let c2_inv = c2.clone().cholesky()?.inverse();
    let (n1, n2) = (c1.nrows(), c2.nrows());
    let mut out = Matrix::zeros(n1 + n2, n1 + n2);
    put(&mut out, n1, 0, &(&c2_inv * coupling * &c1_inv), 1.0);
    out.view_mut((0, 0), (n1, n1)).copy_from(&c1_inv);
    out.view_mut((n1, n1), (n2, n2)).copy_from(&c2_inv);
    Some(out)
}

/// Static condensation of one element: `(fluxes, velocities, pressures) = F traces + J`.
#[derive(Debug, Clone)]
pub struct CondensedElement {
    pub element: usize,
    pub interior_faces: Vec<usize>,
    pub boundary_faces: Vec<usize>,
    pub flux_map: Matrix,
    pub velocity_map: Matrix,
    pub pressure_map: Matrix,
    /// `(B4 + B2ᵀ B1⁻¹ B2)⁻¹`
    pub velocity_solve: Matrix,
    /// `(B8 - B7 G1 B5)⁻¹`
    pub pressure_solve: Matrix,
    /// `B1⁻¹ B2`
    pub flux_from_velocity: Matrix,
    /// `G1 B5`
    pub velocity_from_pressure: Matrix,
    pub b7: Matrix,
    /// `[B10 | B11 | B12]`
    pub face_rows: Matrix,
    /// `B10 F1 + B11 F2 + B12 F3 + B13`
    pub trace_matrix: Matrix,
}

/// Element unknowns grouped as `[L; G]`, `[y; z]`, `[p; q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementFields {
    pub fluxes: Vector,
    pub velocities: Vector,
    pub pressures: Vector,
}

impl ElementFields {
    pub fn stacked(&self) -> Vector {
        let n = self.fluxes.len() + self.velocities.len() + self.pressures.len();
        Vector::from_iterator(n, self.fluxes.iter().chain(self.velocities.iter()).chain(self.pressures.iter()).copied())
    }
}

pub fn condense(blocks: &LocalBlocks) -> Result<CondensedElement> {
    let element = blocks.element;
    let singular = |block| Error::SingularBlock { element, block };
    let g = GroupedBlocks::new(blocks);
    let nv = blocks.velocity_dim();

    let mass_chol = blocks.flux_mass.clone().cholesky().ok_or_else(|| singular("flux mass"))?;
    let b1_inv = {
        let inv = mass_chol.inverse();
        let nl = blocks.flux_dim();
        let mut m = Matrix::zeros(2 * nl, 2 * nl);
        put(&mut m, 0, 0, &inv, 1.0);
        put(&mut m, nl, nl, &inv, 1.0);
        m
    };
    let flux_from_velocity = &b1_inv * &g.b2;
    let flux_from_faces = &b1_inv * &g.b3;

    let a2 = &blocks.flux_velocity;
    let c = &blocks.velocity_stabilization + a2.transpose() * mass_chol.solve(a2);
    let c = (&c + c.transpose()) * 0.5;
    let g1 = block_lower_inverse(&c, &blocks.velocity_mass, &c).ok_or_else(|| singular("velocity Schur"))?;
    debug_assert_eq!(g1.nrows(), 2 * nv);
    let g2 = &g.b6 + g.b2.transpose() * &flux_from_faces;
    let g1_b5 = &g1 * &g.b5;
    let g3 = (&g.b8 - &g.b7 * &g1_b5).lu().try_inverse().ok_or_else(|| singular("pressure Schur"))?;
    let g1_g2 = &g1 * &g2;
    let g4 = &g.b9 - &g.b7 * &g1_g2;

    let pressure_map = -(&g3 * &g4);
    let velocity_map = -(&g1_b5 * &pressure_map) - &g1_g2;
    let flux_map = -(&flux_from_velocity * &velocity_map) - flux_from_faces;

    let face_rows = {
        let (nl2, nv2, np2) = (g.b10.ncols(), g.b11.ncols(), g.b12.ncols());
        let mut m = Matrix::zeros(g.b10.nrows(), nl2 + nv2 + np2);
        put(&mut m, 0, 0, &g.b10, 1.0);
        put(&mut m, 0, nl2, &g.b11, 1.0);
        put(&mut m, 0, nl2 + nv2, &g.b12, 1.0);
        m
    };
    let trace_matrix = &g.b10 * &flux_map + &g.b11 * &velocity_map + &g.b12 * &pressure_map + &g.b13;

    Ok(CondensedElement {
        element,
        interior_faces: blocks.interior_faces.clone(),
        boundary_faces: blocks.boundary_faces.clone(),
        flux_map,
        velocity_map,
        pressure_map,
        velocity_solve: g1,
        pressure_solve: g3,
        flux_from_velocity,
        velocity_from_pressure: g1_b5,
        b7: g.b7,
        face_rows,
        trace_matrix,
    })
}

impl CondensedElement {
    pub fn face_dim(&self) -> usize {
        self.trace_matrix.nrows()
    }

    /// Element response to zero face data, given the velocity-row right-hand
    /// side `[b1; -b2]` and the pressure-row right-hand side.
    pub fn particular(&self, velocity_rhs: &Vector, pressure_rhs: &Vector) -> ElementFields {
        let h2 = &self.velocity_solve * velocity_rhs;
        let pressures = &self.pressure_solve * (pressure_rhs - &self.b7 * &h2);
        let velocities = h2 - &self.velocity_from_pressure * &pressures;
        let fluxes = -(&self.flux_from_velocity * &velocities);
        ElementFields { fluxes, velocities, pressures }
    }

    /// Contribution `-(B10 J1 + B11 J2 + B12 J3)` to the global right-hand side.
    pub fn trace_rhs(&self, particular: &ElementFields) -> Vector {
        -(&self.face_rows * particular.stacked())
    }

    /// `(fluxes, velocities, pressures) = F traces + J`.
    pub fn recover(&self, traces: &Vector, particular: &ElementFields) -> ElementFields {
        ElementFields {
            fluxes: &self.flux_map * traces + &particular.fluxes,
            velocities: &self.velocity_map * traces + &particular.velocities,
            pressures: &self.pressure_map * traces + &particular.pressures,
        }
    }
}

/// The iteration-dependent vectors `(J1, J2, J3)` of one element.
pub fn local_iteration_rhs(
    condensed: &CondensedElement,
    blocks: &LocalBlocks,
    loads: &LocalLoads,
    p_prev: &Vector,
    q_prev: &Vector,
) -> Result<ElementFields> {
    let np = blocks.pressure_dim();
    if p_prev.len() != np || q_prev.len() != np {
        return Err(Error::DimensionMismatch(format!(
            "previous pressures have {} and {} modes, expected {np}",
            p_prev.len(),
            q_prev.len()
        )));
    }
    let (velocity_rhs, pressure_rhs) = GroupedBlocks::element_rhs(blocks, loads, p_prev, q_prev);
    Ok(condensed.particular(&velocity_rhs, &pressure_rhs))
}

/// `(α, β, γ) = F ζ + J` for local face coefficients `traces`.
pub fn recover_fields(
    condensed: &CondensedElement,
    traces: &Vector,
    particular: &ElementFields,
) -> Result<ElementFields> {
    if traces.len() != condensed.face_dim() {
        return Err(Error::DimensionMismatch(format!(
            "element {} expects {} face coefficients, got {}",
            condensed.element,
            condensed.face_dim(),
            traces.len()
        )));
    }
    Ok(condensed.recover(traces, particular))
}
