//! Shared oracles for the integration tests: random discrete fields, the
//! dense state operator built from element blocks, and the uncondensed
//! iteration system.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stokes_hdg::bilinear::HdgFields;
use stokes_hdg::discretization::Discretization;
use stokes_hdg::global::DofMap;
use stokes_hdg::local::{LocalBlocks, LocalLoads, Vector};
use stokes_hdg::mesh::Mesh;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_fields(mesh: &Mesh, disc: &Discretization, rng: &mut ChaCha8Rng) -> HdgFields {
    HdgFields::from_fn(mesh, disc, || rng.random_range(-1.0..1.0))
}

pub fn random_vector(len: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(len, |_, _| rng.random_range(-1.0..1.0))
}

pub fn relative_gap(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Offsets of the state unknowns `(L, y, p)` per element followed by the
/// interior traces per face.
pub struct StateLayout {
    pub flux: Vec<usize>,
    pub velocity: Vec<usize>,
    pub pressure: Vec<usize>,
    pub trace: Vec<Option<usize>>,
    pub total: usize,
}

impl StateLayout {
    pub fn new(mesh: &Mesh, disc: &Discretization) -> Self {
        let mut next = 0;
        let mut take = |n: usize| {
            let at = next;
            next += n;
            at
        };
        let mut flux = Vec::new();
        let mut velocity = Vec::new();
        let mut pressure = Vec::new();
        for _ in 0..mesh.num_elements() {
            flux.push(take(disc.flux_dim()));
            velocity.push(take(disc.velocity_dim()));
            pressure.push(take(disc.pressure_dim()));
        }
        let trace = mesh.faces.iter().map(|f| (!f.is_boundary()).then(|| take(disc.trace_dim()))).collect();
        Self { flux, velocity, pressure, trace, total: next }
    }

    pub fn flatten(&self, fields: &HdgFields) -> DVector<f64> {
        let mut x = DVector::zeros(self.total);
        for e in 0..self.flux.len() {
            x.rows_mut(self.flux[e], fields.flux[e].len()).copy_from(&fields.flux[e]);
            x.rows_mut(self.velocity[e], fields.velocity[e].len()).copy_from(&fields.velocity[e]);
            x.rows_mut(self.pressure[e], fields.pressure[e].len()).copy_from(&fields.pressure[e]);
        }
        for (f, at) in self.trace.iter().enumerate() {
            if let Some(at) = at {
                x.rows_mut(*at, fields.trace[f].len()).copy_from(&fields.trace[f]);
            }
        }
        x
    }
}

fn add_block(m: &mut DMatrix<f64>, rows: &[usize], cols: &[usize], block: &DMatrix<f64>, scale: f64) {
    assert_eq!((rows.len(), cols.len()), block.shape());
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            m[(r, c)] += scale * block[(i, j)];
        }
    }
}

fn range(start: usize, len: usize) -> Vec<usize> {
    (start..start + len).collect()
}

/// Indices of an element's interior traces, in local face order.
fn trace_indices(faces: &[usize], offsets: impl Fn(usize) -> usize, per_face: usize) -> Vec<usize> {
    faces.iter().flat_map(|&f| range(offsets(f), per_face)).collect()
}

/// Matrix `M` with `𝓑(x; t) = tᵀ M x` assembled from element blocks.
pub fn dense_state_operator(disc: &Discretization, blocks: &[LocalBlocks], layout: &StateLayout) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(layout.total, layout.total);
    for (e, b) in blocks.iter().enumerate() {
        let fl = range(layout.flux[e], disc.flux_dim());
        let ve = range(layout.velocity[e], disc.velocity_dim());
        let pr = range(layout.pressure[e], disc.pressure_dim());
        let tr = trace_indices(&b.interior_faces, |f| layout.trace[f].unwrap(), disc.trace_dim());
        add_block(&mut m, &fl, &fl, &b.flux_mass, 1.0);
        add_block(&mut m, &fl, &ve, &b.flux_velocity, 1.0);
        add_block(&mut m, &fl, &tr, &b.flux_trace, -1.0);
        add_block(&mut m, &ve, &fl, &b.flux_velocity.transpose(), -1.0);
        add_block(&mut m, &ve, &ve, &b.velocity_stabilization, 1.0);
        add_block(&mut m, &ve, &pr, &b.pressure_gradient, 1.0);
        add_block(&mut m, &ve, &tr, &b.velocity_trace, -1.0);
        add_block(&mut m, &pr, &ve, &b.pressure_gradient.transpose(), -1.0);
        add_block(&mut m, &pr, &tr, &b.trace_pressure.transpose(), 1.0);
        add_block(&mut m, &tr, &fl, &b.flux_trace.transpose(), 1.0);
        add_block(&mut m, &tr, &ve, &b.velocity_trace.transpose(), -1.0);
        add_block(&mut m, &tr, &pr, &b.trace_pressure, -1.0);
        add_block(&mut m, &tr, &tr, &b.trace_stabilization, 1.0);
    }
    m
}

/// Offsets of every unknown of one iteration of the coupled system.
pub struct FullLayout {
    pub fluxes: Vec<usize>,
    pub velocities: Vec<usize>,
    pub pressures: Vec<usize>,
    pub faces: usize,
    pub total: usize,
}

impl FullLayout {
    pub fn new(disc: &Discretization, dofmap: &DofMap, elements: usize) -> Self {
        let per = 2 * (disc.flux_dim() + disc.velocity_dim() + disc.pressure_dim());
        let mut fluxes = Vec::new();
        let mut velocities = Vec::new();
        let mut pressures = Vec::new();
        for e in 0..elements {
            let base = e * per;
            fluxes.push(base);
            velocities.push(base + 2 * disc.flux_dim());
            pressures.push(base + 2 * (disc.flux_dim() + disc.velocity_dim()));
        }
        let faces = elements * per;
        Self { fluxes, velocities, pressures, faces, total: faces + dofmap.total() }
    }
}

/// Dense matrix and right-hand side of one pseudo-time step with every
/// unknown kept: `[L; G], [y; z], [p; q]` per element, then the face unknowns
/// in global numbering.
pub fn dense_iteration_system(
    disc: &Discretization,
    dofmap: &DofMap,
    blocks: &[LocalBlocks],
    loads: &[LocalLoads],
    p_prev: &[Vector],
    q_prev: &[Vector],
) -> (DMatrix<f64>, DVector<f64>, FullLayout) {
    let layout = FullLayout::new(disc, dofmap, blocks.len());
    let mut m = DMatrix::zeros(layout.total, layout.total);
    let mut rhs = DVector::zeros(layout.total);
    let (nf, nv, np) = (disc.flux_dim(), disc.velocity_dim(), disc.pressure_dim());
    let nt = disc.trace_dim();
    let shift = |v: Vec<usize>| -> Vec<usize> { v.into_iter().map(|i| i + layout.faces).collect() };
    for (e, b) in blocks.iter().enumerate() {
        let l = range(layout.fluxes[e], nf);
        let g = range(layout.fluxes[e] + nf, nf);
        let y = range(layout.velocities[e], nv);
        let z = range(layout.velocities[e] + nv, nv);
        let p = range(layout.pressures[e], np);
        let q = range(layout.pressures[e] + np, np);
        let yh = shift(trace_indices(&b.interior_faces, |f| dofmap.state_trace_range(f).unwrap().start, nt));
        let zh = shift(trace_indices(&b.interior_faces, |f| dofmap.adjoint_trace_range(f).unwrap().start, nt));
        let u = shift(trace_indices(&b.boundary_faces, |f| dofmap.control_range(f).unwrap().start, disc.face_modes()));
        let relax = 1.0 / b.time_step;

        add_block(&mut m, &l, &l, &b.flux_mass, 1.0);
        add_block(&mut m, &l, &y, &b.flux_velocity, 1.0);
        add_block(&mut m, &l, &yh, &b.flux_trace, -1.0);
        add_block(&mut m, &l, &u, &b.flux_control, -1.0);

        add_block(&mut m, &g, &g, &b.flux_mass, 1.0);
        add_block(&mut m, &g, &z, &b.flux_velocity, 1.0);
        add_block(&mut m, &g, &zh, &b.flux_trace, -1.0);

        add_block(&mut m, &y, &l, &b.flux_velocity.transpose(), -1.0);
        add_block(&mut m, &y, &y, &b.velocity_stabilization, 1.0);
        add_block(&mut m, &y, &p, &b.pressure_gradient, 1.0);
        add_block(&mut m, &y, &yh, &b.velocity_trace, -1.0);
        add_block(&mut m, &y, &u, &b.velocity_control, -1.0);
        for (i, &r) in y.iter().enumerate() {
            rhs[r] += loads[e].force[i];
        }

        add_block(&mut m, &z, &g, &b.flux_velocity.transpose(), -1.0);
        add_block(&mut m, &z, &y, &b.velocity_mass, -1.0);
        add_block(&mut m, &z, &z, &b.velocity_stabilization, 1.0);
        add_block(&mut m, &z, &q, &b.pressure_gradient, -1.0);
        add_block(&mut m, &z, &zh, &b.velocity_trace, -1.0);
        for (i, &r) in z.iter().enumerate() {
            rhs[r] -= loads[e].target[i];
        }

        add_block(&mut m, &p, &y, &b.pressure_gradient.transpose(), -1.0);
        add_block(&mut m, &p, &p, &b.pressure_mass, relax);
        add_block(&mut m, &p, &yh, &b.trace_pressure.transpose(), 1.0);
        let mp = &b.pressure_mass * &p_prev[e] * relax;
        for (i, &r) in p.iter().enumerate() {
            rhs[r] += mp[i];
        }

        add_block(&mut m, &q, &z, &b.pressure_gradient.transpose(), -1.0);
        add_block(&mut m, &q, &q, &b.pressure_mass, relax);
        add_block(&mut m, &q, &zh, &b.trace_pressure.transpose(), 1.0);
        let mq = &b.pressure_mass * &q_prev[e] * relax;
        for (i, &r) in q.iter().enumerate() {
            rhs[r] += mq[i];
        }

        add_block(&mut m, &yh, &l, &b.flux_trace.transpose(), 1.0);
        add_block(&mut m, &yh, &y, &b.velocity_trace.transpose(), -1.0);
        add_block(&mut m, &yh, &p, &b.trace_pressure, -1.0);
        add_block(&mut m, &yh, &yh, &b.trace_stabilization, 1.0);

        add_block(&mut m, &zh, &g, &b.flux_trace.transpose(), 1.0);
        add_block(&mut m, &zh, &z, &b.velocity_trace.transpose(), -1.0);
        add_block(&mut m, &zh, &q, &b.trace_pressure, 1.0);
        add_block(&mut m, &zh, &zh, &b.trace_stabilization, 1.0);

        add_block(&mut m, &u, &g, &b.control_flux, 1.0);
        add_block(&mut m, &u, &z, &b.control_velocity, -1.0);
        add_block(&mut m, &u, &u, &b.control_mass, -b.gamma);
    }
    (m, rhs, layout)
}

pub fn dense_solve(m: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    m.full_piv_lu().solve(rhs).expect("dense oracle system is singular")
}

/// Unit-square mesh with interior vertices shifted by up to a fifth of the cell size.
pub fn perturbed_mesh(n: usize, rng: &mut ChaCha8Rng) -> Mesh {
    let square = stokes_hdg::mesh::build_square_mesh(n, 1.0, [0.0, 0.0]).unwrap();
    let h = 1.0 / n as f64;
    let vertices = square
        .vertices
        .iter()
        .map(|&[x, y]| {
            let interior = x > 1e-12 && x < 1.0 - 1e-12 && y > 1e-12 && y < 1.0 - 1e-12;
            if interior {
                [x + 0.2 * h * rng.random_range(-1.0..1.0), y + 0.2 * h * rng.random_range(-1.0..1.0)]
            } else {
                [x, y]
            }
        })
        .collect();
    Mesh::from_elements(vertices, square.elements.clone()).unwrap()
}
