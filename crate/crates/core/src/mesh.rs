//! Hexahedral meshes: geometry at LGL nodes, curl-form metric terms,
//! face connectivity with node maps, and the plain-text mesh file format.

use crate::basis::Basis1d;
use crate::error::{Error, Result};
use crate::fluxes::{cross, Frame};
use crate::physics::{dot, Vec3};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Periodic,
    FreeSlip,
    NoSlip,
    Inflow,
    Outflow,
}

impl BoundaryKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Self::Periodic),
            "free_slip" => Ok(Self::FreeSlip),
            "no_slip" => Ok(Self::NoSlip),
            "inflow" => Ok(Self::Inflow),
            "outflow" => Ok(Self::Outflow),
            other => Err(Error::UnsupportedBoundary(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Periodic => "periodic",
            Self::FreeSlip => "free_slip",
            Self::NoSlip => "no_slip",
            Self::Inflow => "inflow",
            Self::Outflow => "outflow",
        }
    }
}

const SIDE_NAMES: [&str; 6] = ["xi-", "xi+", "eta-", "eta+", "zeta-", "zeta+"];

fn parse_side(s: &str) -> Option<usize> {
    SIDE_NAMES.iter().position(|n| *n == s)
}

/// VTK hexahedron corner numbering.
pub fn corner_index(i: usize, j: usize, k: usize) -> usize {
    const T: [[usize; 2]; 2] = [[0, 3], [1, 2]];
    T[i][j] + 4 * k
}

fn side_corners(side: usize) -> [usize; 4] {
    let d = side / 2;
    let e = side % 2;
    let mut out = [0; 4];
    let mut n = 0;
    for b in 0..2 {
        for a in 0..2 {
            let mut ijk = [0; 3];
            let (d1, d2) = tangential(d);
            ijk[d] = e;
            ijk[d1] = a;
            ijk[d2] = b;
            out[n] = corner_index(ijk[0], ijk[1], ijk[2]);
            n += 1;
        }
    }
    out
}

/// Tangential reference directions of a face normal to direction `d`.
pub fn tangential(d: usize) -> (usize, usize) {
    match d {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// One entry of the boundary section: a face with a tag, or a periodic pair.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySpec {
    pub elem: usize,
    pub side: usize,
    pub kind: BoundaryKind,
    pub partner: Option<(usize, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Boundary(BoundaryKind),
}

#[derive(Clone, Debug)]
pub struct Face {
    pub kind: FaceKind,
    pub left: usize,
    pub left_side: usize,
    pub right: usize,
    pub right_side: usize,
    /// Orientation code 0..8: bit 2 swaps face axes, bits 1 and 0 reverse them.
    pub orientation: u8,
    /// Translation from left to right face nodes (non-zero on periodic faces).
    pub shift: Vec3,
    /// Global volume node of every face node, left and right.
    pub nodes_l: Vec<usize>,
    pub nodes_r: Vec<usize>,
    pub frames: Vec<Frame>,
    /// Surface Jacobian.
    pub jf: Vec<f64>,
    /// Tensor quadrature weights on the face.
    pub wq: Vec<f64>,
    /// `1 / w_end` of the normal direction, left and right.
    pub lift_l: f64,
    pub lift_r: f64,
    /// Normal-direction polynomial degree of the left element.
    pub degree_n: usize,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        matches!(self.kind, FaceKind::Boundary(_))
    }

    pub fn len(&self) -> usize {
        self.nodes_l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes_l.is_empty()
    }
}

/// Axis-aligned box subdivided into `counts` elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartesianSpec {
    pub counts: [usize; 3],
    pub lo: Vec3,
    pub hi: Vec3,
    /// Boundary kind of each box side in the order x-, x+, y-, y+, z-, z+.
    pub tags: [BoundaryKind; 6],
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub degrees: [usize; 3],
    pub bases: [Basis1d; 3],
    pub n_elem: usize,
    /// Nodes per element.
    pub np: usize,
    pub vertices: Vec<Vec3>,
    pub hexes: Vec<[usize; 8]>,
    pub bspecs: Vec<BoundarySpec>,
    /// Node coordinates, `x[e*np + local]`.
    pub x: Vec<Vec3>,
    pub jac: Vec<f64>,
    /// Contravariant metric terms, `ja[node][d] = J a^d`.
    pub ja: Vec<[Vec3; 3]>,
    pub faces: Vec<Face>,
    /// One element thick in z with periodic z faces: a two-dimensional setup.
    pub extruded: bool,
}

impl Mesh {
    pub fn cartesian(spec: &CartesianSpec, degrees: [usize; 3]) -> Result<Self> {
        let [mx, my, mz] = spec.counts;
        if mx == 0 || my == 0 || mz == 0 {
            return Err(Error::InvalidMesh("element counts must be positive".into()));
        }
        for d in 0..3 {
            if !(spec.hi[d] > spec.lo[d]) {
                return Err(Error::InvalidMesh("box extent must be positive".into()));
            }
            let a = spec.tags[2 * d] == BoundaryKind::Periodic;
            let b = spec.tags[2 * d + 1] == BoundaryKind::Periodic;
            if a != b {
                return Err(Error::InvalidMesh(format!("periodic tag on one side only in direction {d}")));
            }
        }
        let vid = |i: usize, j: usize, k: usize| i + (mx + 1) * (j + (my + 1) * k);
        let mut vertices = Vec::with_capacity((mx + 1) * (my + 1) * (mz + 1));
        for k in 0..=mz {
            for j in 0..=my {
                for i in 0..=mx {
                    let t = [i as f64 / mx as f64, j as f64 / my as f64, k as f64 / mz as f64];
                    let mut p = [0.0; 3];
                    for d in 0..3 {
                        p[d] = if t[d] == 1.0 { spec.hi[d] } else { spec.lo[d] + t[d] * (spec.hi[d] - spec.lo[d]) };
                    }
                    vertices.push(p);
                }
            }
        }
        let eid = |i: usize, j: usize, k: usize| i + mx * (j + my * k);
        let mut hexes = Vec::with_capacity(mx * my * mz);
        for k in 0..mz {
            for j in 0..my {
                for i in 0..mx {
                    let mut h = [0; 8];
                    for c in 0..8 {
                        let (a, b, cc) = corner_offsets(c);
                        h[c] = vid(i + a, j + b, k + cc);
                    }
                    hexes.push(h);
                }
            }
        }
        let counts = [mx, my, mz];
        let mut bspecs = Vec::new();
        for k in 0..mz {
            for j in 0..my {
                for i in 0..mx {
                    let idx = [i, j, k];
                    for d in 0..3 {
                        for end in 0..2 {
                            let on_bnd = if end == 0 { idx[d] == 0 } else { idx[d] == counts[d] - 1 };
                            if !on_bnd {
                                continue;
                            }
                            let kind = spec.tags[2 * d + end];
                            let side = 2 * d + end;
                            if kind == BoundaryKind::Periodic {
                                if end == 1 {
                                    let mut o = idx;
                                    o[d] = 0;
                                    bspecs.push(BoundarySpec {
                                        elem: eid(i, j, k),
                                        side,
                                        kind,
                                        partner: Some((eid(o[0], o[1], o[2]), 2 * d)),
                                    });
                                }
                            } else {
                                bspecs.push(BoundarySpec { elem: eid(i, j, k), side, kind, partner: None });
                            }
                        }
                    }
                }
            }
        }
        let mut mesh = Self::from_parts(vertices, hexes, bspecs, degrees)?;
        mesh.extruded = mz == 1 && spec.tags[4] == BoundaryKind::Periodic;
        Ok(mesh)
    }

    /// Builds a mesh of trilinear hexahedra from vertices, connectivity and boundary specs.
    pub fn from_parts(
        vertices: Vec<Vec3>,
        hexes: Vec<[usize; 8]>,
        bspecs: Vec<BoundarySpec>,
        degrees: [usize; 3],
    ) -> Result<Self> {
        let bases = [Basis1d::new(degrees[0])?, Basis1d::new(degrees[1])?, Basis1d::new(degrees[2])?];
        if hexes.is_empty() {
            return Err(Error::InvalidMesh("no elements".into()));
        }
        for (e, h) in hexes.iter().enumerate() {
            if h.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("element {e} references a missing vertex")));
            }
        }
        let n_elem = hexes.len();
        let np = (degrees[0] + 1) * (degrees[1] + 1) * (degrees[2] + 1);
        let mut mesh = Self {
            degrees,
            bases,
            n_elem,
            np,
            vertices,
            hexes,
            bspecs,
            x: Vec::new(),
            jac: Vec::new(),
            ja: Vec::new(),
            faces: Vec::new(),
            extruded: false,
        };
        mesh.x = mesh.trilinear_nodes();
        mesh.build_faces()?;
        mesh.compute_metrics()?;
        Ok(mesh)
    }

    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + (self.degrees[0] + 1) * (j + (self.degrees[1] + 1) * k)
    }

    /// Reference coordinates `(i, j, k)` of a local node index.
    pub fn node_ijk(&self, local: usize) -> [usize; 3] {
        let nx = self.degrees[0] + 1;
        let ny = self.degrees[1] + 1;
        [local % nx, (local / nx) % ny, local / (nx * ny)]
    }

    pub fn n_nodes(&self) -> usize {
        self.n_elem * self.np
    }

    /// Quadrature weight `w_i w_j w_k` of a local node.
    pub fn weight(&self, local: usize) -> f64 {
        let [i, j, k] = self.node_ijk(local);
        self.bases[0].weights[i] * self.bases[1].weights[j] * self.bases[2].weights[k]
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.np).map(|l| self.weight(l)).collect()
    }

    /// Local node indices on element side `side`, with the first tangential index fastest.
    pub fn side_nodes(&self, side: usize) -> Vec<usize> {
        let d = side / 2;
        let (d1, d2) = tangential(d);
        let end = if side % 2 == 0 { 0 } else { self.degrees[d] };
        let mut out = Vec::with_capacity((self.degrees[d1] + 1) * (self.degrees[d2] + 1));
        for b in 0..=self.degrees[d2] {
            for a in 0..=self.degrees[d1] {
                let mut ijk = [0; 3];
                ijk[d] = end;
                ijk[d1] = a;
                ijk[d2] = b;
                out.push(self.node_index(ijk[0], ijk[1], ijk[2]));
            }
        }
        out
    }

    fn trilinear_nodes(&self) -> Vec<Vec3> {
        let mut x = Vec::with_capacity(self.n_nodes());
        for h in &self.hexes {
            let corners: Vec<Vec3> = h.iter().map(|&v| self.vertices[v]).collect();
            for l in 0..self.np {
                let [i, j, k] = self.node_ijk(l);
                let xi = [self.bases[0].nodes[i], self.bases[1].nodes[j], self.bases[2].nodes[k]];
                x.push(trilinear(&corners, &xi));
            }
        }
        x
    }

    fn build_faces(&mut self) -> Result<()> {
        let mut open: HashMap<[usize; 4], (usize, usize)> = HashMap::new();
        let mut pairs: Vec<(usize, usize, usize, usize, FaceKind)> = Vec::new();
        let mut tagged: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, b) in self.bspecs.iter().enumerate() {
            if b.elem >= self.n_elem || b.side >= 6 {
                return Err(Error::InvalidMesh(format!("boundary entry {i} references a missing face")));
            }
            if tagged.insert((b.elem, b.side), i).is_some() {
                return Err(Error::InvalidMesh(format!("face ({}, {}) tagged twice", b.elem, SIDE_NAMES[b.side])));
            }
            if let Some(p) = b.partner {
                if p.0 >= self.n_elem || p.1 >= 6 {
                    return Err(Error::InvalidMesh(format!("periodic partner of entry {i} is missing")));
                }
                if tagged.insert(p, i).is_some() {
                    return Err(Error::InvalidMesh(format!("face ({}, {}) tagged twice", p.0, SIDE_NAMES[p.1])));
                }
            }
        }
        for e in 0..self.n_elem {
            for s in 0..6 {
                if tagged.contains_key(&(e, s)) {
                    continue;
                }
                let mut key = side_corners(s).map(|c| self.hexes[e][c]);
                key.sort_unstable();
                if let Some((e2, s2)) = open.remove(&key) {
                    pairs.push((e2, s2, e, s, FaceKind::Interior));
                } else {
                    open.insert(key, (e, s));
                }
            }
        }
        if let Some((_, (e, s))) = open.iter().min_by_key(|(_, v)| **v) {
            return Err(Error::NonConforming(format!(
                "face {} of element {e} has no neighbor and no boundary tag",
                SIDE_NAMES[*s]
            )));
        }
        for b in &self.bspecs {
            match (b.kind, b.partner) {
                (BoundaryKind::Periodic, Some(p)) => pairs.push((b.elem, b.side, p.0, p.1, FaceKind::Interior)),
                (BoundaryKind::Periodic, None) => {
                    return Err(Error::InvalidMesh(format!("periodic face of element {} lacks a partner", b.elem)))
                }
                (k, _) => pairs.push((b.elem, b.side, b.elem, b.side, FaceKind::Boundary(k))),
            }
        }
        pairs.sort_by_key(|p| (p.0, p.1));
        let mut faces = Vec::with_capacity(pairs.len());
        for (el, sl, er, sr, kind) in pairs {
            faces.push(self.make_face(el, sl, er, sr, kind)?);
        }
        self.faces = faces;
        Ok(())
    }

    fn make_face(&self, el: usize, sl: usize, er: usize, sr: usize, kind: FaceKind) -> Result<Face> {
        let dl = sl / 2;
        let (d1, d2) = tangential(dl);
        let ln = self.side_nodes(sl);
        let nodes_l: Vec<usize> = ln.iter().map(|&l| el * self.np + l).collect();
        let wq: Vec<f64> = (0..=self.degrees[d2])
            .flat_map(|b| (0..=self.degrees[d1]).map(move |a| (a, b)))
            .map(|(a, b)| self.bases[d1].weights[a] * self.bases[d2].weights[b])
            .collect();
        let lift_l = 1.0 / self.bases[dl].weights[0];
        let lift_r = 1.0 / self.bases[sr / 2].weights[0];
        let mut face = Face {
            kind,
            left: el,
            left_side: sl,
            right: er,
            right_side: sr,
            orientation: 0,
            shift: [0.0; 3],
            nodes_r: nodes_l.clone(),
            nodes_l,
            frames: Vec::new(),
            jf: Vec::new(),
            wq,
            lift_l,
            lift_r,
            degree_n: self.degrees[dl],
        };
        if kind != FaceKind::Interior {
            return Ok(face);
        }
        let rn = self.side_nodes(sr);
        if rn.len() != ln.len() {
            return Err(Error::NonConforming(format!("face node counts differ between elements {el} and {er}")));
        }
        let cen = |e: usize, nodes: &[usize]| {
            let mut c = [0.0; 3];
            for &l in nodes {
                let p = self.x[e * self.np + l];
                for d in 0..3 {
                    c[d] += p[d] / nodes.len() as f64;
                }
            }
            c
        };
        let cl = cen(el, &ln);
        let cr = cen(er, &rn);
        let shift = [cr[0] - cl[0], cr[1] - cl[1], cr[2] - cl[2]];
        let size = self.element_size(el);
        let mut nodes_r = Vec::with_capacity(ln.len());
        let mut rmap = Vec::with_capacity(ln.len());
        for &l in &ln {
            let p = self.x[el * self.np + l];
            let target = [p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]];
            let mut best = (f64::INFINITY, 0);
            for (ri, &r) in rn.iter().enumerate() {
                let q = self.x[er * self.np + r];
                let d = dist(&q, &target);
                if d < best.0 {
                    best = (d, ri);
                }
            }
            if best.0 > 1e-9 * size {
                return Err(Error::NonConforming(format!(
                    "face nodes of elements {el} and {er} do not coincide (mismatch {:e})",
                    best.0
                )));
            }
            nodes_r.push(er * self.np + rn[best.1]);
            rmap.push(best.1);
        }
        let mut sorted = rmap.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != rmap.len() {
            return Err(Error::NonConforming(format!("degenerate face node map between {el} and {er}")));
        }
        face.orientation = orientation_code(&rmap, self.degrees[d1] + 1, self.degrees[d2] + 1, &self.degrees, sr);
        face.nodes_r = nodes_r;
        face.shift = shift;
        Ok(face)
    }

    fn element_size(&self, e: usize) -> f64 {
        let h = &self.hexes[e];
        dist(&self.vertices[h[0]], &self.vertices[h[6]])
    }

    /// Replaces every node coordinate by `f(x)` and recomputes the metric terms.
    pub fn apply_mapping<F: Fn(Vec3) -> Vec3>(&mut self, f: F) -> Result<()> {
        for p in &mut self.x {
            *p = f(*p);
        }
        self.compute_metrics()
    }

    /// Curl-form metric terms, Jacobians and face geometry from the node coordinates.
    pub fn compute_metrics(&mut self) -> Result<()> {
        let np = self.np;
        let n = self.n_nodes();
        let mut jac = vec![0.0; n];
        let mut ja = vec![[[0.0; 3]; 3]; n];
        let mut comp = vec![0.0; np];
        let mut dx = [vec![[0.0; 3]; np], vec![[0.0; 3]; np], vec![[0.0; 3]; np]];
        let mut tmp = vec![0.0; np];
        let mut v = [vec![0.0; np], vec![0.0; np], vec![0.0; np]];
        for e in 0..self.n_elem {
            let xe = &self.x[e * np..(e + 1) * np];
            for c in 0..3 {
                for l in 0..np {
                    comp[l] = xe[l][c];
                }
                for d in 0..3 {
                    self.ref_derivative(&comp, d, &mut tmp);
                    for l in 0..np {
                        dx[d][l][c] = tmp[l];
                    }
                }
            }
            for l in 0..np {
                let j = dot(&dx[0][l], &cross(&dx[1][l], &dx[2][l]));
                if !(j > 0.0) {
                    return Err(Error::NegativeJacobian { elem: e, jac: j });
                }
                jac[e * np + l] = j;
            }
            for nn in 0..3 {
                let m = (nn + 1) % 3;
                let ll = (nn + 2) % 3;
                // V_j = X_l dX_m/dxi_j
                for j in 0..3 {
                    for l in 0..np {
                        v[j][l] = xe[l][ll] * dx[j][l][m];
                    }
                }
                for i in 0..3 {
                    let a = (i + 1) % 3;
                    let b = (i + 2) % 3;
                    // (curl V)_i = d_a V_b - d_b V_a
                    self.ref_derivative(&v[b], a, &mut tmp);
                    for l in 0..np {
                        ja[e * np + l][i][nn] = -tmp[l];
                    }
                    self.ref_derivative(&v[a], b, &mut tmp);
                    for l in 0..np {
                        ja[e * np + l][i][nn] += tmp[l];
                    }
                }
            }
        }
        self.jac = jac;
        self.ja = ja;
        for f in 0..self.faces.len() {
            let face = &self.faces[f];
            let d = face.left_side / 2;
            let sign = if face.left_side % 2 == 0 { -1.0 } else { 1.0 };
            let mut frames = Vec::with_capacity(face.len());
            let mut jf = Vec::with_capacity(face.len());
            for &g in &face.nodes_l {
                let a = self.ja[g][d];
                let mag = dot(&a, &a).sqrt();
                let nrm = [sign * a[0] / mag, sign * a[1] / mag, sign * a[2] / mag];
                frames.push(Frame::from_normal(nrm));
                jf.push(mag);
            }
            self.faces[f].frames = frames;
            self.faces[f].jf = jf;
        }
        Ok(())
    }

    /// Derivative of an element-local nodal field along reference direction `d`.
    pub fn ref_derivative(&self, u: &[f64], d: usize, out: &mut [f64]) {
        apply_1d(&self.bases[d].d, self.degrees, d, u, out);
    }

    /// Largest mismatch between coincident face nodes and between the two sides' normals.
    pub fn conformity_defect(&self) -> (f64, f64) {
        let mut xmax: f64 = 0.0;
        let mut nmax: f64 = 0.0;
        for f in self.faces.iter().filter(|f| f.kind == FaceKind::Interior) {
            let dr = f.right_side / 2;
            let sr = if f.right_side % 2 == 0 { -1.0 } else { 1.0 };
            for (k, (&gl, &gr)) in f.nodes_l.iter().zip(&f.nodes_r).enumerate() {
                let pl = self.x[gl];
                let pr = self.x[gr];
                let t = [pl[0] + f.shift[0], pl[1] + f.shift[1], pl[2] + f.shift[2]];
                xmax = xmax.max(dist(&pr, &t));
                let ar = self.ja[gr][dr];
                let nl = f.frames[k].n;
                for d in 0..3 {
                    nmax = nmax.max((sr * ar[d] + f.jf[k] * nl[d]).abs());
                }
            }
        }
        (xmax, nmax)
    }

    /// Sum of `J w` over all nodes.
    pub fn volume(&self) -> f64 {
        let w = self.weights();
        (0..self.n_nodes()).map(|g| self.jac[g] * w[g % self.np]).sum()
    }

    /// Interpolates an element-local nodal field at reference point `xi`.
    pub fn interpolate(&self, u: &[f64], xi: &Vec3) -> f64 {
        let lx = self.bases[0].lagrange(xi[0]);
        let ly = self.bases[1].lagrange(xi[1]);
        let lz = self.bases[2].lagrange(xi[2]);
        let mut s = 0.0;
        for (l, val) in u.iter().enumerate().take(self.np) {
            let [i, j, k] = self.node_ijk(l);
            s += lx[i] * ly[j] * lz[k] * val;
        }
        s
    }

    /// Finds the element and reference coordinates of a physical point.
    pub fn locate(&self, p: &Vec3) -> Result<(usize, Vec3)> {
        let np = self.np;
        let mut comps = [vec![0.0; np], vec![0.0; np], vec![0.0; np]];
        let mut best: Option<(f64, usize, Vec3)> = None;
        for e in 0..self.n_elem {
            let xe = &self.x[e * np..(e + 1) * np];
            let mut lo = [f64::INFINITY; 3];
            let mut hi = [f64::NEG_INFINITY; 3];
            for q in xe {
                for d in 0..3 {
                    lo[d] = lo[d].min(q[d]);
                    hi[d] = hi[d].max(q[d]);
                }
            }
            let pad = 1e-8 * dist(&lo, &hi) + 1e-12;
            if (0..3).any(|d| p[d] < lo[d] - pad || p[d] > hi[d] + pad) {
                continue;
            }
            for c in 0..3 {
                for l in 0..np {
                    comps[c][l] = xe[l][c];
                }
            }
            let mut xi = [0.0; 3];
            for _ in 0..50 {
                let (val, jm) = self.map_and_jacobian(&comps, &xi);
                let r = [p[0] - val[0], p[1] - val[1], p[2] - val[2]];
                let dxi = solve3(&jm, &r);
                for d in 0..3 {
                    xi[d] = (xi[d] + dxi[d]).clamp(-1.5, 1.5);
                }
                if dxi.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-14 {
                    break;
                }
            }
            let excess = xi.iter().map(|v| (v.abs() - 1.0).max(0.0)).fold(0.0, f64::max);
            if excess < 1e-9 {
                return Ok((e, xi.map(|v| v.clamp(-1.0, 1.0))));
            }
            if best.as_ref().is_none_or(|b| excess < b.0) {
                best = Some((excess, e, xi));
            }
        }
        match best {
            Some((ex, e, xi)) if ex < 1e-6 => Ok((e, xi.map(|v| v.clamp(-1.0, 1.0)))),
            _ => Err(Error::PointNotFound(p[0], p[1], p[2])),
        }
    }

    fn map_and_jacobian(&self, comps: &[Vec<f64>; 3], xi: &Vec3) -> (Vec3, [[f64; 3]; 3]) {
        let l: Vec<Vec<f64>> = (0..3).map(|d| self.bases[d].lagrange(xi[d])).collect();
        let dl: Vec<Vec<f64>> = (0..3).map(|d| lagrange_derivs(&self.bases[d], xi[d])).collect();
        let mut val = [0.0; 3];
        let mut jm = [[0.0; 3]; 3];
        for node in 0..self.np {
            let [i, j, k] = self.node_ijk(node);
            let w = l[0][i] * l[1][j] * l[2][k];
            let g = [dl[0][i] * l[1][j] * l[2][k], l[0][i] * dl[1][j] * l[2][k], l[0][i] * l[1][j] * dl[2][k]];
            for c in 0..3 {
                val[c] += w * comps[c][node];
                for d in 0..3 {
                    jm[c][d] += g[d] * comps[c][node];
                }
            }
        }
        (val, jm)
    }

    /// Serializes the trilinear mesh in the plain-text mesh format.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ESPDG-MESH 1");
        let _ = writeln!(s, "nodes {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:?} {:?} {:?}", v[0], v[1], v[2]);
        }
        let _ = writeln!(s, "hexes {}", self.hexes.len());
        for h in &self.hexes {
            let ids: Vec<String> = h.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", ids.join(" "));
        }
        let _ = writeln!(s, "boundary {}", self.bspecs.len());
        for b in &self.bspecs {
            match b.partner {
                Some((e2, s2)) => {
                    let _ = writeln!(s, "{} {} {} {} {}", b.elem, SIDE_NAMES[b.side], b.kind.name(), e2, SIDE_NAMES[s2]);
                }
                None => {
                    let _ = writeln!(s, "{} {} {}", b.elem, SIDE_NAMES[b.side], b.kind.name());
                }
            }
        }
        s
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_file_string())?;
        Ok(())
    }

    pub fn read_file(path: &Path, degrees: [usize; 3]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, degrees)
    }

    pub fn parse(text: &str, degrees: [usize; 3]) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::MeshParse { line, msg: msg.to_string() };
        let mut lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        lines.reverse();
        let mut next = |what: &str| lines.pop().ok_or_else(|| err(0, &format!("unexpected end of file in {what}")));
        let (ln, header) = next("header")?;
        if header != "ESPDG-MESH 1" {
            return Err(err(ln, "expected header 'ESPDG-MESH 1'"));
        }
        let (ln, l) = next("nodes header")?;
        let nv: usize = parse_count(l, "nodes").ok_or_else(|| err(ln, "expected 'nodes <count>'"))?;
        let mut rows: Vec<(usize, String)> = Vec::new();
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = next("nodes")?;
            let v: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err(ln, "bad coordinate"))?;
            if v.len() != 3 {
                return Err(err(ln, "node needs three coordinates"));
            }
            vertices.push([v[0], v[1], v[2]]);
        }
        let (ln, l) = next("hexes header")?;
        let ne: usize = parse_count(l, "hexes").ok_or_else(|| err(ln, "expected 'hexes <count>'"))?;
        let mut hexes = Vec::with_capacity(ne);
        for _ in 0..ne {
            let (ln, l) = next("hexes")?;
            let v: Vec<usize> = l.split_whitespace().map(|t| t.parse::<usize>()).collect::<std::result::Result<_, _>>().map_err(|_| err(ln, "bad vertex id"))?;
            if v.len() != 8 {
                return Err(err(ln, "hexahedron needs eight vertex ids"));
            }
            if v.iter().any(|&id| id >= nv) {
                return Err(err(ln, "vertex id out of range"));
            }
            hexes.push([v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]]);
        }
        let (ln, l) = next("boundary header")?;
        let nb: usize = parse_count(l, "boundary").ok_or_else(|| err(ln, "expected 'boundary <count>'"))?;
        for _ in 0..nb {
            let (ln, l) = next("boundary")?;
            rows.push((ln, l.to_string()));
        }
        let mut bspecs = Vec::with_capacity(nb);
        for (ln, l) in rows {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 3 && t.len() != 5 {
                return Err(err(ln, "expected '<elem> <side> <tag> [<elem> <side>]'"));
            }
            let elem: usize = t[0].parse().map_err(|_| err(ln, "bad element id"))?;
            let side = parse_side(t[1]).ok_or_else(|| err(ln, "bad side name"))?;
            let kind = BoundaryKind::parse(t[2])?;
            let partner = if t.len() == 5 {
                let e2: usize = t[3].parse().map_err(|_| err(ln, "bad partner element"))?;
                let s2 = parse_side(t[4]).ok_or_else(|| err(ln, "bad partner side"))?;
                Some((e2, s2))
            } else {
                None
            };
            if elem >= ne || partner.is_some_and(|p| p.0 >= ne) {
                return Err(err(ln, "element id out of range"));
            }
            bspecs.push(BoundarySpec { elem, side, kind, partner });
        }
        Self::from_parts(vertices, hexes, bspecs, degrees)
    }
}

fn parse_count(l: &str, name: &str) -> Option<usize> {
    let mut it = l.split_whitespace();
    if it.next()? != name {
        return None;
    }
    it.next()?.parse().ok()
}

fn corner_offsets(c: usize) -> (usize, usize, usize) {
    for k in 0..2 {
        for j in 0..2 {
            for i in 0..2 {
                if corner_index(i, j, k) == c {
                    return (i, j, k);
                }
            }
        }
    }
    unreachable!()
}

fn trilinear(c: &[Vec3], xi: &Vec3) -> Vec3 {
    let mut p = [0.0; 3];
    for (idx, v) in c.iter().enumerate() {
        let (i, j, k) = corner_offsets(idx);
        let s = |a: usize, t: f64| if a == 0 { 0.5 * (1.0 - t) } else { 0.5 * (1.0 + t) };
        let w = s(i, xi[0]) * s(j, xi[1]) * s(k, xi[2]);
        for d in 0..3 {
            p[d] += w * v[d];
        }
    }
    p
}

fn orientation_code(rmap: &[usize], na: usize, nb: usize, degrees: &[usize; 3], sr: usize) -> u8 {
    let (r1, _) = tangential(sr / 2);
    let ra = degrees[r1] + 1;
    let coords = |k: usize| (k % ra, k / ra);
    let (a0, b0) = coords(rmap[0]);
    let step_a = if na > 1 { coords(rmap[1]) } else { (a0, b0) };
    let step_b = if nb > 1 { coords(rmap[na]) } else { (a0, b0) };
    let swapped = step_a.0 == a0 && na > 1;
    let (flip_a, flip_b) = if swapped {
        (step_a.1 < b0, step_b.0 < a0)
    } else {
        (step_a.0 < a0, step_b.1 < b0)
    };
    (swapped as u8) << 2 | (flip_a as u8) << 1 | flip_b as u8
}

fn lagrange_derivs(b: &Basis1d, x: f64) -> Vec<f64> {
    // derivative of the interpolant of each cardinal function, via D applied to nodal deltas
    let m = b.len();
    let l = b.lagrange(x);
    let mut out = vec![0.0; m];
    for j in 0..m {
        let mut s = 0.0;
        for (i, li) in l.iter().enumerate() {
            s += li * b.d[i * m + j];
        }
        out[j] = s;
    }
    out
}

fn dist(a: &Vec3, b: &Vec3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn solve3(m: &[[f64; 3]; 3], r: &Vec3) -> Vec3 {
    let c0 = cross(&[m[0][1], m[1][1], m[2][1]], &[m[0][2], m[1][2], m[2][2]]);
    let col0 = [m[0][0], m[1][0], m[2][0]];
    let det = dot(&col0, &c0);
    let col = |j: usize| [m[0][j], m[1][j], m[2][j]];
    let det_with = |j: usize| {
        let mut cols = [col(0), col(1), col(2)];
        cols[j] = *r;
        dot(&cols[0], &cross(&cols[1], &cols[2]))
    };
    [det_with(0) / det, det_with(1) / det, det_with(2) / det]
}

/// Applies a 1D operator `op` (row-major, `(N_d+1)^2`) along direction `d` of a nodal array.
pub fn apply_1d(op: &[f64], degrees: [usize; 3], d: usize, u: &[f64], out: &mut [f64]) {
    let nx = degrees[0] + 1;
    let ny = degrees[1] + 1;
    let nz = degrees[2] + 1;
    match d {
        0 => {
            for jk in 0..ny * nz {
                let base = jk * nx;
                let row = &u[base..base + nx];
                for i in 0..nx {
                    let o = &op[i * nx..(i + 1) * nx];
                    let mut s = 0.0;
                    for m in 0..nx {
                        s += o[m] * row[m];
                    }
                    out[base + i] = s;
                }
            }
        }
        1 => {
            for k in 0..nz {
                for j in 0..ny {
                    let o = &op[j * ny..(j + 1) * ny];
                    for i in 0..nx {
                        let mut s = 0.0;
                        for m in 0..ny {
                            s += o[m] * u[i + nx * (m + ny * k)];
                        }
                        out[i + nx * (j + ny * k)] = s;
                    }
                }
            }
        }
        _ => {
            let plane = nx * ny;
            for k in 0..nz {
                let o = &op[k * nz..(k + 1) * nz];
                for ij in 0..plane {
                    let mut s = 0.0;
                    for m in 0..nz {
                        s += o[m] * u[ij + plane * m];
                    }
                    out[ij + plane * k] = s;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(counts: [usize; 3], tags: [BoundaryKind; 6]) -> CartesianSpec {
        CartesianSpec { counts, lo: [0.0; 3], hi: [1.0; 3], tags }
    }

    #[test]
    fn single_element_jacobian() {
        let m = Mesh::cartesian(&unit_box([1, 1, 1], [BoundaryKind::FreeSlip; 6]), [1, 1, 1]).unwrap();
        for j in &m.jac {
            assert!((j - 0.125).abs() < 1e-15);
        }
        assert_eq!(m.faces.len(), 6);
        assert!((m.volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn periodic_face_count() {
        let m = Mesh::cartesian(&unit_box([2, 3, 1], [BoundaryKind::Periodic; 6]), [2, 2, 1]).unwrap();
        assert_eq!(m.faces.len(), 3 * 6);
        assert!(m.faces.iter().all(|f| f.kind == FaceKind::Interior));
        assert!(m.extruded);
        let (dx, dn) = m.conformity_defect();
        assert!(dx < 1e-12 && dn < 1e-12);
    }

    #[test]
    fn mixed_tags_rejected() {
        let mut t = [BoundaryKind::FreeSlip; 6];
        t[0] = BoundaryKind::Periodic;
        assert!(Mesh::cartesian(&unit_box([2, 2, 2], t), [1, 1, 1]).is_err());
    }

    #[test]
    fn curl_metrics_affine_match_cross_product() {
        let mut m = Mesh::cartesian(&unit_box([2, 2, 2], [BoundaryKind::NoSlip; 6]), [3, 3, 3]).unwrap();
        m.apply_mapping(|p| [2.0 * p[0] + 0.3 * p[1], p[1] - 0.2 * p[2], 0.5 * p[2] + 0.1 * p[0]]).unwrap();
        // affine: Ja^i = a_j x a_k is constant
        let a = [[2.0, 0.0, 0.1], [0.3, 1.0, 0.0], [0.0, -0.2, 0.5]];
        let s = 0.25;
        let av: Vec<Vec3> = a.iter().map(|r| [r[0] * s, r[1] * s, r[2] * s]).collect();
        let expect = [cross(&av[1], &av[2]), cross(&av[2], &av[0]), cross(&av[0], &av[1])];
        for ja in &m.ja {
            for d in 0..3 {
                for c in 0..3 {
                    assert!((ja[d][c] - expect[d][c]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn curved_metric_identities() {
        let mut m = Mesh::cartesian(&unit_box([2, 2, 2], [BoundaryKind::Periodic; 6]), [4, 4, 4]).unwrap();
        let pi = std::f64::consts::PI;
        m.apply_mapping(|p| {
            let s = 0.1 * (pi * p[0]).sin() * (pi * p[1]).sin() * (pi * p[2]).sin();
            [p[0] + s, p[1] + s, p[2] + s]
        })
        .unwrap();
        let np = m.np;
        let mut tmp = vec![0.0; np];
        let mut comp = vec![0.0; np];
        for e in 0..m.n_elem {
            for c in 0..3 {
                let mut sum = vec![0.0; np];
                for d in 0..3 {
                    for l in 0..np {
                        comp[l] = m.ja[e * np + l][d][c];
                    }
                    m.ref_derivative(&comp, d, &mut tmp);
                    for l in 0..np {
                        sum[l] += tmp[l];
                    }
                }
                assert!(sum.iter().all(|v| v.abs() < 1e-12));
            }
        }
        let (dx, dn) = m.conformity_defect();
        assert!(dx < 1e-12, "{dx}");
        assert!(dn < 1e-12, "{dn}");
        assert!((m.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn file_round_trip() {
        let mut tags = [BoundaryKind::Periodic; 6];
        tags[2] = BoundaryKind::NoSlip;
        tags[3] = BoundaryKind::FreeSlip;
        let m = Mesh::cartesian(&unit_box([3, 2, 2], tags), [2, 2, 2]).unwrap();
        let s = m.to_file_string();
        let m2 = Mesh::parse(&s, [2, 2, 2]).unwrap();
        assert_eq!(m.x, m2.x);
        assert_eq!(m.jac, m2.jac);
        assert_eq!(m.faces.len(), m2.faces.len());
        for (a, b) in m.faces.iter().zip(&m2.faces) {
            assert_eq!(a.kind, b.kind);
            assert_eq!(a.nodes_r, b.nodes_r);
        }
    }

    #[test]
    fn rotated_neighbor_orientation() {
        // second hex has its local frame rotated about z by 90 degrees
        let mut vertices = Vec::new();
        for k in 0..2 {
            for j in 0..2 {
                for i in 0..3 {
                    vertices.push([i as f64, j as f64, k as f64]);
                }
            }
        }
        let v = |i: usize, j: usize, k: usize| i + 3 * (j + 2 * k);
        let h0 = [v(0, 0, 0), v(1, 0, 0), v(1, 1, 0), v(0, 1, 0), v(0, 0, 1), v(1, 0, 1), v(1, 1, 1), v(0, 1, 1)];
        let h1 = [v(2, 0, 0), v(2, 1, 0), v(1, 1, 0), v(1, 0, 0), v(2, 0, 1), v(2, 1, 1), v(1, 1, 1), v(1, 0, 1)];
        let mut bspecs = Vec::new();
        for s in [0, 2, 3, 4, 5] {
            bspecs.push(BoundarySpec { elem: 0, side: s, kind: BoundaryKind::NoSlip, partner: None });
        }
        for s in [0, 1, 2, 4, 5] {
            bspecs.push(BoundarySpec { elem: 1, side: s, kind: BoundaryKind::NoSlip, partner: None });
        }
        let m = Mesh::from_parts(vertices, vec![h0, h1], bspecs, [3, 3, 3]).unwrap();
        let f = m.faces.iter().find(|f| f.kind == FaceKind::Interior).unwrap();
        assert_eq!(f.right_side, 3);
        let (dx, dn) = m.conformity_defect();
        assert!(dx < 1e-12 && dn < 1e-12);
    }

    #[test]
    fn untagged_face_rejected() {
        let vertices: Vec<Vec3> = (0..8).map(|c| {
            let (i, j, k) = corner_offsets(c);
            [i as f64, j as f64, k as f64]
        }).collect();
        let hex = [0, 1, 2, 3, 4, 5, 6, 7];
        let bspecs = vec![BoundarySpec { elem: 0, side: 0, kind: BoundaryKind::NoSlip, partner: None }];
        assert!(matches!(Mesh::from_parts(vertices, vec![hex], bspecs, [1, 1, 1]), Err(Error::NonConforming(_))));
    }

    #[test]
    fn inverted_element_rejected() {
        let mut m = Mesh::cartesian(&unit_box([1, 1, 1], [BoundaryKind::NoSlip; 6]), [1, 1, 1]).unwrap();
        assert!(matches!(m.apply_mapping(|p| [-p[0], p[1], p[2]]), Err(Error::NegativeJacobian { .. })));
    }

    #[test]
    fn parse_errors() {
        assert!(Mesh::parse("ESPDG-MESH 2\n", [1, 1, 1]).is_err());
        assert!(Mesh::parse("ESPDG-MESH 1\nnodes 1\n0 0\n", [1, 1, 1]).is_err());
        let bad_tag = "ESPDG-MESH 1\nnodes 8\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n0 0 1\n1 0 1\n1 1 1\n0 1 1\nhexes 1\n0 1 2 3 4 5 6 7\nboundary 1\n0 xi- lava\n";
        assert!(matches!(Mesh::parse(bad_tag, [1, 1, 1]), Err(Error::UnsupportedBoundary(_))));
    }

    #[test]
    fn locate_points() {
        let mut m = Mesh::cartesian(&unit_box([3, 3, 1], [BoundaryKind::Periodic; 6]), [3, 3, 1]).unwrap();
        m.apply_mapping(|p| [p[0] + 0.05 * (3.0 * p[1]).sin() * p[0] * (1.0 - p[0]), p[1], p[2]]).unwrap();
        for p in [[0.5, 0.5, 0.5], [1.0, 0.5, 0.5], [0.01, 0.99, 0.2]] {
            let (e, xi) = m.locate(&p).unwrap();
            let np = m.np;
            for c in 0..3 {
                let comp: Vec<f64> = (0..np).map(|l| m.x[e * np + l][c]).collect();
                assert!((m.interpolate(&comp, &xi) - p[c]).abs() < 1e-10);
            }
        }
        assert!(m.locate(&[2.0, 0.5, 0.5]).is_err());
    }
}
