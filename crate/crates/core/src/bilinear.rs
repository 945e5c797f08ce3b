//! The HDG bilinear form of the Stokes state operator, evaluated by quadrature
//! straight from its weak form.

use crate::discretization::{Discretization, ElementFace};
use crate::error::{Error, Result};
use crate::local::Vector;
use crate::mesh::{Mesh, Point};

/// A discrete state `(L, y, p, ŷ)`: per-element flux, velocity and pressure
/// coefficients plus per-face trace coefficients (ignored on boundary faces).
#[derive(Debug, Clone, PartialEq)]
pub struct HdgFields {
    pub flux: Vec<Vector>,
    pub velocity: Vec<Vector>,
    pub pressure: Vec<Vector>,
    pub trace: Vec<Vector>,
}

impl HdgFields {
    pub fn zeros(mesh: &Mesh, disc: &Discretization) -> Self {
        let ne = mesh.num_elements();
        Self {
            flux: vec![Vector::zeros(disc.flux_dim()); ne],
            velocity: vec![Vector::zeros(disc.velocity_dim()); ne],
            pressure: vec![Vector::zeros(disc.pressure_dim()); ne],
            trace: vec![Vector::zeros(disc.trace_dim()); mesh.num_faces()],
        }
    }

    /// Fill every coefficient from `sample`, visiting flux, velocity,
    /// pressure and trace coefficients in that order.
    pub fn from_fn(mesh: &Mesh, disc: &Discretization, mut sample: impl FnMut() -> f64) -> Self {
        let mut fields = Self::zeros(mesh, disc);
        for group in [&mut fields.flux, &mut fields.velocity, &mut fields.pressure, &mut fields.trace] {
            for v in group.iter_mut() {
                v.iter_mut().for_each(|c| *c = sample());
            }
        }
        fields
    }

    /// Copy with each of the four parts multiplied by its sign.
    pub fn with_signs(&self, flux: f64, velocity: f64, pressure: f64, trace: f64) -> Self {
        let scale = |group: &[Vector], s: f64| group.iter().map(|v| v * s).collect();
        Self {
            flux: scale(&self.flux, flux),
            velocity: scale(&self.velocity, velocity),
            pressure: scale(&self.pressure, pressure),
            trace: scale(&self.trace, trace),
        }
    }

    fn check(&self, mesh: &Mesh, disc: &Discretization) -> Result<()> {
        let ne = mesh.num_elements();
        let ok = self.flux.len() == ne
            && self.velocity.len() == ne
            && self.pressure.len() == ne
            && self.trace.len() == mesh.num_faces()
            && self.flux.iter().all(|v| v.len() == disc.flux_dim())
            && self.velocity.iter().all(|v| v.len() == disc.velocity_dim())
            && self.pressure.iter().all(|v| v.len() == disc.pressure_dim())
            && self.trace.iter().all(|v| v.len() == disc.trace_dim());
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch("fields do not match the mesh and discretization".into()))
        }
    }
}

/// Pointwise values of one element's fields.
struct Local<'a> {
    disc: &'a Discretization,
    flux: &'a Vector,
    velocity: &'a Vector,
    pressure: &'a Vector,
}

impl Local<'_> {
    fn tensor(&self, phi: &[f64]) -> [[f64; 2]; 2] {
        let nk = self.disc.scalar_dim();
        let mut t = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                t[i][j] = (0..nk).map(|a| self.flux[(2 * i + j) * nk + a] * phi[a]).sum();
            }
        }
        t
    }

    fn divergence_of_tensor(&self, grad: &[Point]) -> [f64; 2] {
        let nk = self.disc.scalar_dim();
        let mut d = [0.0; 2];
        for (i, di) in d.iter_mut().enumerate() {
            for j in 0..2 {
                *di += (0..nk).map(|a| self.flux[(2 * i + j) * nk + a] * grad[a][j]).sum::<f64>();
            }
        }
        d
    }

    fn vector(&self, phi: &[f64]) -> [f64; 2] {
        let nv = self.disc.velocity_scalar_dim();
        [0, 1].map(|r| (0..nv).map(|b| self.velocity[r * nv + b] * phi[b]).sum())
    }

    fn vector_gradient(&self, grad: &[Point]) -> [[f64; 2]; 2] {
        let nv = self.disc.velocity_scalar_dim();
        let mut g = [[0.0; 2]; 2];
        for (r, row) in g.iter_mut().enumerate() {
            for (j, gj) in row.iter_mut().enumerate() {
                *gj = (0..nv).map(|b| self.velocity[r * nv + b] * grad[b][j]).sum();
            }
        }
        g
    }

    fn scalar(&self, phi: &[f64]) -> f64 {
        self.pressure.iter().zip(phi).map(|(c, v)| c * v).sum()
    }

    fn scalar_gradient(&self, grad: &[Point]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (c, d) in self.pressure.iter().zip(grad) {
            g[0] += c * d[0];
            g[1] += c * d[1];
        }
        g
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn mat_vec(t: [[f64; 2]; 2], n: Point) -> [f64; 2] {
    [t[0][0] * n[0] + t[0][1] * n[1], t[1][0] * n[0] + t[1][1] * n[1]]
}

/// Trace values `Σ_m μ_rm e_m` on a face point.
fn trace_value(coeffs: &Vector, edge: &[f64]) -> [f64; 2] {
    let m = edge.len();
    [0, 1].map(|r| (0..m).map(|j| coeffs[r * m + j] * edge[j]).sum())
}

/// Face-wise L² projection of the element velocity onto the trace space.
fn project_velocity(field: &Local, face: &ElementFace) -> Vector {
    let m = field.disc.face_modes();
    let mut coeffs = Vector::zeros(2 * m);
    for pt in &face.points {
        let v = field.vector(&pt.velocity);
        for r in 0..2 {
            for j in 0..m {
                coeffs[r * m + j] += pt.weight * v[r] * pt.edge[j];
            }
        }
    }
    coeffs
}

/// `𝓑(L, y, p, ŷ; T, v, w, μ)` summed over all elements.
pub fn hdg_bilinear_form(mesh: &Mesh, disc: &Discretization, trial: &HdgFields, test: &HdgFields) -> Result<f64> {
    trial.check(mesh, disc)?;
    test.check(mesh, disc)?;
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        let x = Local { disc, flux: &trial.flux[e], velocity: &trial.velocity[e], pressure: &trial.pressure[e] };
        let t = Local { disc, flux: &test.flux[e], velocity: &test.velocity[e], pressure: &test.pressure[e] };
        for pt in disc.volume_points(mesh, e) {
            let (l, tt) = (x.tensor(&pt.flux), t.tensor(&pt.flux));
            let y = x.vector(&pt.velocity);
            let p = x.scalar(&pt.flux);
            let grad_v = t.vector_gradient(&pt.velocity_gradient);
            let div_t = t.divergence_of_tensor(&pt.flux_gradient);
            let grad_w = t.scalar_gradient(&pt.flux_gradient);
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += l[i][j] * (tt[i][j] + grad_v[i][j]);
                }
            }
            s += dot(y, div_t);
            s -= p * (grad_v[0][0] + grad_v[1][1]);
            s -= dot(y, grad_w);
            total += pt.weight * s;
        }
        for face in disc.element_faces(mesh, e)? {
            let projected = project_velocity(&x, &face);
            let interior = !face.is_boundary;
            let (trace_trial, trace_test) = (&trial.trace[face.face], &test.trace[face.face]);
            let n = face.normal;
            for pt in &face.points {
                let ln = mat_vec(x.tensor(&pt.flux), n);
                let p = x.scalar(&pt.flux);
                let py = trace_value(&projected, &pt.edge);
                let flux_jump = [ln[0] - p * n[0] - face.penalty * py[0], ln[1] - p * n[1] - face.penalty * py[1]];
                let v = t.vector(&pt.velocity);
                let mut s = -dot(flux_jump, v);
                if interior {
                    let yhat = trace_value(trace_trial, &pt.edge);
                    let mu = trace_value(trace_test, &pt.edge);
                    let tn = mat_vec(t.tensor(&pt.flux), n);
                    let w = t.scalar(&pt.flux);
                    s -= dot(yhat, tn);
                    s -= face.penalty * dot(yhat, v);
                    s += dot(yhat, n) * w;
                    let numerical = [
                        ln[0] - p * n[0] - face.penalty * (py[0] - yhat[0]),
                        ln[1] - p * n[1] - face.penalty * (py[1] - yhat[1]),
                    ];
                    s += dot(numerical, mu);
                }
                total += pt.weight * s;
            }
        }
    }
    Ok(total)
}

/// `‖T‖² + Σ h⁻¹‖P_M v − μ‖²` over interior faces `+ Σ h⁻¹‖P_M v‖²` over boundary faces.
pub fn energy_norm_squared(mesh: &Mesh, disc: &Discretization, fields: &HdgFields) -> Result<f64> {
    fields.check(mesh, disc)?;
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        let x = Local { disc, flux: &fields.flux[e], velocity: &fields.velocity[e], pressure: &fields.pressure[e] };
        for pt in disc.volume_points(mesh, e) {
            let l = x.tensor(&pt.flux);
            total += pt.weight * l.iter().flatten().map(|v| v * v).sum::<f64>();
        }
        for face in disc.element_faces(mesh, e)? {
            let mut jump = project_velocity(&x, &face);
            if !face.is_boundary {
                jump -= &fields.trace[face.face];
            }
            total += face.penalty * jump.norm_squared();
        }
    }
    Ok(total)
}
