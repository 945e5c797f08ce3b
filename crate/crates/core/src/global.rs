//! Global numbering of trace and control unknowns, the condensed sparse system
//! over them, and the scatter back to element fields.

use std::io::Write;
use std::ops::Range;

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::local::{CondensedElement, ElementFields, Vector};
use crate::mesh::Mesh;

/// Layout of the globally coupled unknowns: state traces on interior faces,
/// then adjoint traces on interior faces, then controls on boundary faces,
/// each ordered by face, component and mode.
#[derive(Debug, Clone)]
pub struct DofMap {
    modes: usize,
    interior_index: Vec<Option<usize>>,
    boundary_index: Vec<Option<usize>>,
    num_interior: usize,
    num_boundary: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh, degree: usize) -> Self {
        let mut interior_index = vec![None; mesh.num_faces()];
        let mut boundary_index = vec![None; mesh.num_faces()];
        let (mut ni, mut nb) = (0, 0);
        for (f, face) in mesh.faces.iter().enumerate() {
            if face.is_boundary() {
                boundary_index[f] = Some(nb);
                nb += 1;
            } else {
                interior_index[f] = Some(ni);
                ni += 1;
            }
        }
        Self { modes: degree + 1, interior_index, boundary_index, num_interior: ni, num_boundary: nb }
    }

    pub fn face_modes(&self) -> usize {
        self.modes
    }

    fn trace_block(&self) -> usize {
        2 * self.modes * self.num_interior
    }

    pub fn num_state_traces(&self) -> usize {
        self.trace_block()
    }

    pub fn num_adjoint_traces(&self) -> usize {
        self.trace_block()
    }

    pub fn num_controls(&self) -> usize {
        self.modes * self.num_boundary
    }

    pub fn total(&self) -> usize {
        2 * self.trace_block() + self.num_controls()
    }

    pub fn state_trace_range(&self, face: usize) -> Option<Range<usize>> {
        let i = self.interior_index[face]?;
        let start = i * 2 * self.modes;
        Some(start..start + 2 * self.modes)
    }

    pub fn adjoint_trace_range(&self, face: usize) -> Option<Range<usize>> {
        self.state_trace_range(face).map(|r| r.start + self.trace_block()..r.end + self.trace_block())
    }

    pub fn control_range(&self, face: usize) -> Option<Range<usize>> {
        let i = self.boundary_index[face]?;
        let start = 2 * self.trace_block() + i * self.modes;
        Some(start..start + self.modes)
    }

    /// Global indices of an element's local face vector `[ŷ; ẑ; u]`.
    pub fn element_dofs(&self, interior_faces: &[usize], boundary_faces: &[usize]) -> Vec<usize> {
        let mut dofs = Vec::with_capacity((4 * interior_faces.len() + boundary_faces.len()) * self.modes);
        for &f in interior_faces {
            dofs.extend(self.state_trace_range(f).expect("interior face"));
        }
        for &f in interior_faces {
            dofs.extend(self.adjoint_trace_range(f).expect("interior face"));
        }
        for &f in boundary_faces {
            dofs.extend(self.control_range(f).expect("boundary face"));
        }
        dofs
    }
}

const REFINEMENT_STEPS: usize = 3;

/// The condensed global matrix with its cached sparse LU factorization.
pub struct TraceSystem {
    dim: usize,
    /// Column-sorted, duplicate-free entries `(row, col, value)`.
    entries: Vec<(usize, usize, f64)>,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for TraceSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TraceSystem").field("dim", &self.dim).field("nnz", &self.entries.len()).finish()
    }
}

fn merge_entries(mut entries: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    entries.sort_unstable_by_key(|&(r, c, _)| (c, r));
    let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
    for (r, c, v) in entries {
        match merged.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => merged.push((r, c, v)),
        }
    }
    merged
}

impl TraceSystem {
    /// Sum the element contributions `B10 F1 + B11 F2 + B12 F3 + B13` and factorize.
    pub fn assemble(dofmap: &DofMap, condensed: &[CondensedElement]) -> Result<Self> {
        let dim = dofmap.total();
        let entries: Vec<(usize, usize, f64)> = condensed
            .par_iter()
            .map(|c| -> Result<Vec<(usize, usize, f64)>> {
                let dofs = dofmap.element_dofs(&c.interior_faces, &c.boundary_faces);
                if dofs.len() != c.face_dim() {
                    return Err(Error::DimensionMismatch(format!(
                        "element {} has {} face coefficients but {} global dofs",
                        c.element,
                        c.face_dim(),
                        dofs.len()
                    )));
                }
                let m = &c.trace_matrix;
                let mut out = Vec::with_capacity(dofs.len() * dofs.len());
                for (j, &gc) in dofs.iter().enumerate() {
                    for (i, &gr) in dofs.iter().enumerate() {
                        out.push((gr, gc, m[(i, j)]));
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let entries = merge_entries(entries);
        let triplets: Vec<Triplet<usize, usize, f64>> =
            entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(dim, dim, &triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let lu = matrix.sp_lu().map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Self { dim, entries, lu })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// `‖A x - b‖ / ‖b‖`, or the absolute residual when `b = 0`.
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.apply(x);
        let r: f64 = ax.iter().zip(b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nb > 0.0 {
            r / nb
        } else {
            r
        }
    }

    fn lu_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(self.dim, 1, |i, _| rhs[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..self.dim).map(|i| x[(i, 0)]).collect()
    }

    /// Solve with the cached factorization plus a few steps of iterative
    /// refinement; fails on a non-finite result.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} entries, expected {}",
                rhs.len(),
                self.dim
            )));
        }
        let mut x = self.lu_solve(rhs);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem(f64::NAN));
        }
        let mut residual = self.relative_residual(&x, rhs);
        for _ in 0..REFINEMENT_STEPS {
            if residual < 1e-15 {
                break;
            }
            let ax = self.apply(&x);
            let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = self.lu_solve(&r);
            let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let next = self.relative_residual(&candidate, rhs);
            if !(next < residual) {
                break;
            }
            x = candidate;
            residual = next;
        }
        Ok(x)
    }
}

/// Sum the element right-hand sides `-(B10 J1 + B11 J2 + B12 J3)`.
pub fn assemble_trace_rhs(dofmap: &DofMap, condensed: &[CondensedElement], particular: &[ElementFields]) -> Vec<f64> {
    let mut rhs = vec![0.0; dofmap.total()];
    let parts: Vec<(Vec<usize>, Vector)> = condensed
        .par_iter()
        .zip(particular)
        .map(|(c, j)| (dofmap.element_dofs(&c.interior_faces, &c.boundary_faces), c.trace_rhs(j)))
        .collect();
    for (dofs, local) in parts {
        for (g, v) in dofs.iter().zip(local.iter()) {
            rhs[*g] += v;
        }
    }
    rhs
}

/// The local face vector of one element gathered from a global one.
pub fn gather_element_traces(dofmap: &DofMap, condensed: &CondensedElement, global: &[f64]) -> Vector {
    let dofs = dofmap.element_dofs(&condensed.interior_faces, &condensed.boundary_faces);
    Vector::from_iterator(dofs.len(), dofs.iter().map(|&g| global[g]))
}

/// Coefficients of all discrete fields.
///
/// Element vectors use the local layouts of [`crate::local::LocalBlocks`]. Face
/// vectors hold `(component, mode)` for traces and `mode` for the control; on
/// boundary faces the state trace is the projected `u τ` and the adjoint trace
/// is zero, and interior faces carry an empty control.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub degree: usize,
    pub state_flux: Vec<Vector>,
    pub adjoint_flux: Vec<Vector>,
    pub state_velocity: Vec<Vector>,
    pub adjoint_velocity: Vec<Vector>,
    pub state_pressure: Vec<Vector>,
    pub adjoint_pressure: Vec<Vector>,
    pub state_trace: Vec<Vector>,
    pub adjoint_trace: Vec<Vector>,
    pub control: Vec<Vector>,
}

/// Build the solution from the global face vector and the recovered element fields.
pub fn scatter_solution(mesh: &Mesh, dofmap: &DofMap, global: &[f64], elements: &[ElementFields]) -> DiscreteSolution {
    let modes = dofmap.face_modes();
    let mut sol = DiscreteSolution {
        degree: modes - 1,
        state_flux: Vec::with_capacity(elements.len()),
        adjoint_flux: Vec::with_capacity(elements.len()),
        state_velocity: Vec::with_capacity(elements.len()),
        adjoint_velocity: Vec::with_capacity(elements.len()),
        state_pressure: Vec::with_capacity(elements.len()),
        adjoint_pressure: Vec::with_capacity(elements.len()),
        state_trace: Vec::with_capacity(mesh.num_faces()),
        adjoint_trace: Vec::with_capacity(mesh.num_faces()),
        control: Vec::with_capacity(mesh.num_faces()),
    };
    for fields in elements {
        let (nl, nv, np) = (fields.fluxes.len() / 2, fields.velocities.len() / 2, fields.pressures.len() / 2);
        sol.state_flux.push(fields.fluxes.rows(0, nl).into_owned());
        sol.adjoint_flux.push(fields.fluxes.rows(nl, nl).into_owned());
        sol.state_velocity.push(fields.velocities.rows(0, nv).into_owned());
        sol.adjoint_velocity.push(fields.velocities.rows(nv, nv).into_owned());
        sol.state_pressure.push(fields.pressures.rows(0, np).into_owned());
        sol.adjoint_pressure.push(fields.pressures.rows(np, np).into_owned());
    }
    for (f, face) in mesh.faces.iter().enumerate() {
        if let Some(r) = dofmap.control_range(f) {
            let u = Vector::from_row_slice(&global[r]);
            let mut trace = Vector::zeros(2 * modes);
            for c in 0..2 {
                for m in 0..modes {
                    trace[c * modes + m] = u[m] * face.tangent[c];
                }
            }
            sol.state_trace.push(trace);
            sol.adjoint_trace.push(Vector::zeros(2 * modes));
            sol.control.push(u);
        } else {
            let s = dofmap.state_trace_range(f).expect("interior face");
            let a = dofmap.adjoint_trace_range(f).expect("interior face");
            sol.state_trace.push(Vector::from_row_slice(&global[s]));
            sol.adjoint_trace.push(Vector::from_row_slice(&global[a]));
            sol.control.push(Vector::zeros(0));
        }
    }
    sol
}

impl DiscreteSolution {
    /// Write one element field as CSV rows `element_id,mode_index,component,coefficient`.
    pub fn write_element_field<W: Write>(&self, field: &[Vector], components: usize, mut out: W) -> Result<()> {
        writeln!(out, "element_id,mode_index,component,coefficient")?;
        for (e, coeffs) in field.iter().enumerate() {
            let per = coeffs.len() / components;
            for c in 0..components {
                for m in 0..per {
                    writeln!(out, "{e},{m},{c},{:.16e}", coeffs[c * per + m])?;
                }
            }
        }
        Ok(())
    }

    /// Write one face field as CSV rows `face_id,mode_index,component,coefficient`.
    pub fn write_face_field<W: Write>(&self, field: &[Vector], components: usize, mut out: W) -> Result<()> {
        writeln!(out, "face_id,mode_index,component,coefficient")?;
        for (f, coeffs) in field.iter().enumerate() {
            if coeffs.is_empty() {
                continue;
            }
            let per = coeffs.len() / components;
            for c in 0..components {
                for m in 0..per {
                    writeln!(out, "{f},{m},{c},{:.16e}", coeffs[c * per + m])?;
                }
            }
        }
        Ok(())
    }

    /// Every field as `(file stem, CSV text)`.
    pub fn csv_dumps(&self) -> Result<Vec<(&'static str, Vec<u8>)>> {
        let mut files = Vec::new();
        let element_fields: [(&str, &[Vector], usize); 6] = [
            ("state_flux", &self.state_flux, 4),
            ("adjoint_flux", &self.adjoint_flux, 4),
            ("state_velocity", &self.state_velocity, 2),
            ("adjoint_velocity", &self.adjoint_velocity, 2),
            ("state_pressure", &self.state_pressure, 1),
            ("adjoint_pressure", &self.adjoint_pressure, 1),
        ];
        for (name, field, comps) in element_fields {
            let mut buf = Vec::new();
            self.write_element_field(field, comps, &mut buf)?;
            files.push((name, buf));
        }
        let face_fields: [(&str, &[Vector], usize); 3] = [
            ("state_trace", &self.state_trace, 2),
            ("adjoint_trace", &self.adjoint_trace, 2),
            ("control", &self.control, 1),
        ];
        for (name, field, comps) in face_fields {
            let mut buf = Vec::new();
            self.write_face_field(field, comps, &mut buf)?;
            files.push((name, buf));
        }
        Ok(files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_square_mesh;

    #[test]
    fn counts_for_single_cell() {
        let mesh = build_square_mesh(1, 1.0, [0.0, 0.0]).unwrap();
        let d = DofMap::new(&mesh, 0);
        assert_eq!(d.num_state_traces(), 2);
        assert_eq!(d.num_adjoint_traces(), 2);
        assert_eq!(d.num_controls(), 4);
        assert_eq!(d.total(), 8);
    }

    #[test]
    fn counts_for_eight_cells() {
        let mesh = build_square_mesh(8, 1.0, [0.0, 0.0]).unwrap();
        let d = DofMap::new(&mesh, 1);
        // enumerate ranges and check they tile [0, total)
        let mut seen = vec![0u8; d.total()];
        for f in 0..mesh.num_faces() {
            let ranges = [d.state_trace_range(f), d.adjoint_trace_range(f), d.control_range(f)];
            if mesh.faces[f].is_boundary() {
                assert!(ranges[0].is_none() && ranges[1].is_none());
            } else {
                assert!(ranges[2].is_none());
            }
            for r in ranges.into_iter().flatten() {
                for i in r {
                    seen[i] += 1;
                }
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
        assert_eq!(d.total(), 176 * 4 * 2 + 32 * 2);
        assert_eq!(d.num_controls(), 64);
    }

    #[test]
    fn refinement_scaling() {
        let coarse = DofMap::new(&build_square_mesh(8, 1.0, [0.0, 0.0]).unwrap(), 1);
        let fine = DofMap::new(&build_square_mesh(16, 1.0, [0.0, 0.0]).unwrap(), 1);
        assert_eq!(fine.num_controls(), 2 * coarse.num_controls());
        let ratio = fine.num_state_traces() as f64 / coarse.num_state_traces() as f64;
        assert!((ratio - 4.0).abs() < 0.25, "{ratio}");
    }

    #[test]
    fn merge_sums_duplicates() {
        let m = merge_entries(vec![(1, 0, 1.0), (0, 0, 2.0), (1, 0, 3.0), (0, 1, 1.0)]);
        assert_eq!(m, vec![(0, 0, 2.0), (1, 0, 4.0), (0, 1, 1.0)]);
    }
}
