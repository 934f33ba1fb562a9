//! Diagnostics CSV, legacy VTK snapshots, run summaries and restart files.

use crate::diagnostics::EntropyReport;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::physics::{PhysParams, State, Vec3};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const CSV_HEADER: &str = "t,E_total,dEdt,dissipation,remainder,surface_fw,Xc_x,Xc_y,Vc_x,Vc_y,area";

/// One diagnostics row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagRow {
    pub t: f64,
    pub report: EntropyReport,
    pub xc: Vec3,
    pub vc: Vec3,
    pub area: f64,
}

pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{CSV_HEADER}")?;
        Ok(Self { out })
    }

    pub fn write(&mut self, r: &DiagRow) -> Result<()> {
        let e = &r.report;
        writeln!(
            self.out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t, e.e_total, e.dedt, e.dissipation, e.remainder, e.surface_fw, r.xc[0], r.xc[1], r.vc[0], r.vc[1], r.area
        )?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Writes a legacy ASCII VTK unstructured grid with one hexahedron per nodal sub-cell.
pub fn write_vtk(path: &Path, mesh: &Mesh, params: &PhysParams, q: &[State], mu: &[f64]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let [nx, ny, nz] = mesh.degrees;
    let n = mesh.n_nodes();
    writeln!(out, "# vtk DataFile Version 3.0\nespdg fields\nASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {n} double")?;
    for x in &mesh.x {
        writeln!(out, "{:e} {:e} {:e}", x[0], x[1], x[2])?;
    }
    let cells_per = nx * ny * nz;
    let n_cells = mesh.n_elem * cells_per;
    writeln!(out, "CELLS {} {}", n_cells, 9 * n_cells)?;
    for e in 0..mesh.n_elem {
        let base = e * mesh.np;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let id = |a: usize, b: usize, c: usize| base + mesh.node_index(i + a, j + b, k + c);
                    writeln!(
                        out,
                        "8 {} {} {} {} {} {} {} {}",
                        id(0, 0, 0),
                        id(1, 0, 0),
                        id(1, 1, 0),
                        id(0, 1, 0),
                        id(0, 0, 1),
                        id(1, 0, 1),
                        id(1, 1, 1),
                        id(0, 1, 1)
                    )?;
                }
            }
        }
    }
    writeln!(out, "CELL_TYPES {n_cells}")?;
    for _ in 0..n_cells {
        writeln!(out, "12")?;
    }
    writeln!(out, "POINT_DATA {n}")?;
    let scalar = |out: &mut BufWriter<File>, name: &str, f: &dyn Fn(usize) -> f64| -> std::io::Result<()> {
        writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
        for g in 0..n {
            writeln!(out, "{:e}", f(g))?;
        }
        Ok(())
    };
    scalar(&mut out, "c", &|g| q[g][0])?;
    for (d, name) in ["u", "v", "w"].iter().enumerate() {
        scalar(&mut out, name, &|g| params.velocity(&q[g])[d])?;
    }
    scalar(&mut out, "p", &|g| q[g][4])?;
    scalar(&mut out, "mu", &|g| mu[g])?;
    scalar(&mut out, "rho", &|g| params.density(q[g][0]))?;
    out.flush()?;
    Ok(())
}

/// Run summary written as JSON at the end of a run.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub case: String,
    pub status: String,
    pub seed: u64,
    pub params: PhysParams,
    pub degrees: [usize; 3],
    pub n_elem: usize,
    pub steps: usize,
    pub t: f64,
    pub dt: f64,
    pub residual_norm: f64,
    pub velocity_norm: f64,
    pub e_total: f64,
    pub max_remainder: f64,
    pub l2_errors: Option<State>,
    pub extra: serde_json::Value,
}

impl Summary {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Complete time-stepping state for restarts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Restart {
    pub t: f64,
    pub steps: usize,
    pub q: Vec<State>,
    pub prev: Option<Vec<State>>,
}

impl Restart {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}
