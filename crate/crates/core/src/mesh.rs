//! Conforming triangulations of the fluid part of the periodic unit cell.
//!
//! Boundary nodes are placed on the analytic inclusion curve and on mirrored outer
//! faces; interior nodes come from a hexagonal lattice relaxed by Laplacian smoothing.
//! The triangulation itself is a constrained Delaunay triangulation of that point set,
//! and every triangle is finally split into three at its incenter so that the quadratic
//! velocity space maps onto the discontinuous linear pressures under the divergence.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::{GeometrySpec, Marker};

/// Minimum interior angle accepted from the generator, in degrees.
pub const MIN_ANGLE_FLOOR_DEG: f64 = 15.0;

/// Tolerance for matching periodic partner coordinates.
pub const PERIODIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub marker: Marker,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPairs {
    /// `[i, j]` with node `i` on `x = 0` and node `j` on `x = 1`.
    pub left_right: Vec<[usize; 2]>,
    /// `[i, j]` with node `i` on `y = 0` and node `j` on `y = 1`.
    pub bottom_top: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitCellMesh {
    pub nodes: Vec<[f64; 2]>,
    /// Counterclockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub periodic_pairs: PeriodicPairs,
    pub geometry: Option<GeometrySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub n_nodes: usize,
    pub n_triangles: usize,
    pub min_angle_deg: f64,
    pub area_sum: f64,
    pub periodic_mismatch_max: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl UnitCellMesh {
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn max_element_diameter(&self) -> f64 {
        self.triangles
            .iter()
            .map(|tri| {
                (0..3)
                    .map(|k| dist(self.nodes[tri[k]], self.nodes[tri[(k + 1) % 3]]))
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn min_angle_deg(&self) -> f64 {
        self.triangles
            .iter()
            .map(|tri| triangle_min_angle(self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Stable fingerprint of the node coordinates and connectivity.
    pub fn provenance_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.nodes {
            hasher.update(p[0].to_le_bytes());
            hasher.update(p[1].to_le_bytes());
        }
        for t in &self.triangles {
            for &i in t {
                hasher.update((i as u64).to_le_bytes());
            }
        }
        hex::encode(&hasher.finalize()[..12])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Uniform `n × n` grid of the whole cell, every square split along its diagonal.
    ///
    /// There is no inclusion, so the cell is fully periodic. Used for testing the
    /// discretisation on fields that are not tied to a no-slip boundary.
    pub fn structured_periodic(n: usize) -> Self {
        assert!(n >= 1);
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let coord = |k: usize| if k == n { 1.0 } else { k as f64 / n as f64 };
        let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([coord(i), coord(j)]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mut boundary_edges = Vec::new();
        for k in 0..n {
            boundary_edges.push(BoundaryEdge { a: id(k, 0), b: id(k + 1, 0), marker: Marker::Bottom });
            boundary_edges.push(BoundaryEdge { a: id(n, k), b: id(n, k + 1), marker: Marker::Right });
            boundary_edges.push(BoundaryEdge { a: id(k + 1, n), b: id(k, n), marker: Marker::Top });
            boundary_edges.push(BoundaryEdge { a: id(0, k + 1), b: id(0, k), marker: Marker::Left });
        }
        let mut mesh = UnitCellMesh {
            nodes,
            triangles,
            boundary_edges,
            periodic_pairs: PeriodicPairs::default(),
            geometry: None,
        };
        mesh.periodic_pairs = match_periodic(&mesh.nodes);
        mesh
    }
}

/// Splits every triangle into three by connecting its vertices to the incenter.
///
/// Child angles at the original vertices are half the parent angles. New nodes are
/// interior, so boundary edges and periodic pairs carry over unchanged.
pub fn split_at_incenters(mesh: &UnitCellMesh) -> UnitCellMesh {
    let mut nodes = mesh.nodes.clone();
    let mut triangles = Vec::with_capacity(3 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let (pa, pb, pc) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
        let (la, lb, lc) = (dist(pb, pc), dist(pc, pa), dist(pa, pb));
        let s = la + lb + lc;
        let m = nodes.len();
        nodes.push([
            (la * pa[0] + lb * pb[0] + lc * pc[0]) / s,
            (la * pa[1] + lb * pb[1] + lc * pc[1]) / s,
        ]);
        triangles.push([a, b, m]);
        triangles.push([b, c, m]);
        triangles.push([c, a, m]);
    }
    UnitCellMesh {
        nodes,
        triangles,
        boundary_edges: mesh.boundary_edges.clone(),
        periodic_pairs: mesh.periodic_pairs.clone(),
        geometry: mesh.geometry,
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn triangle_min_angle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let ang = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        let u = [q[0] - p[0], q[1] - p[1]];
        let v = [r[0] - p[0], r[1] - p[1]];
        let cr = u[0] * v[1] - u[1] * v[0];
        let dt = u[0] * v[0] + u[1] * v[1];
        cr.abs().atan2(dt).to_degrees()
    };
    ang(a, b, c).min(ang(b, c, a)).min(ang(c, a, b))
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// Pairs nodes on opposite faces by exact coordinate match.
fn match_periodic(nodes: &[[f64; 2]]) -> PeriodicPairs {
    let collect = |axis: usize, value: f64| {
        let mut v: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i][axis] == value).collect();
        v.sort_by(|&i, &j| nodes[i][1 - axis].total_cmp(&nodes[j][1 - axis]));
        v
    };
    let pair = |axis: usize| {
        let lo = collect(axis, 0.0);
        let hi = collect(axis, 1.0);
        let mut out = Vec::new();
        for &i in &lo {
            let y = nodes[i][1 - axis];
            if let Some(&j) = hi.iter().find(|&&j| (nodes[j][1 - axis] - y).abs() <= PERIODIC_TOL) {
                out.push([i, j]);
            }
        }
        out
    };
    PeriodicPairs {
        left_right: pair(0),
        bottom_top: pair(1),
    }
}

struct PointSet {
    points: Vec<[f64; 2]>,
    /// Index of the first interior (non-boundary) point.
    n_boundary: usize,
    edges: Vec<BoundaryEdge>,
}

fn triangulate(set: &PointSet, spec: &GeometrySpec) -> Result<Vec<[usize; 3]>> {
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let mut handles = Vec::with_capacity(set.points.len());
    let mut back: HashMap<usize, usize> = HashMap::new();
    for (i, p) in set.points.iter().enumerate() {
        let h = cdt
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::MeshingFailed(format!("point insertion failed: {e:?}")))?;
        if back.insert(h.index(), i).is_some() {
            return Err(Error::MeshingFailed(format!("duplicate mesh point {p:?}")));
        }
        handles.push(h);
    }
    for e in &set.edges {
        let added = cdt.try_add_constraint(handles[e.a], handles[e.b]);
        if added.is_empty() && !cdt.exists_constraint(handles[e.a], handles[e.b]) {
            return Err(Error::MeshingFailed(format!("could not insert boundary edge {}-{}", e.a, e.b)));
        }
    }
    let mut tris = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let vs = face.vertices();
        let idx = [back[&vs[0].fix().index()], back[&vs[1].fix().index()], back[&vs[2].fix().index()]];
        let p = idx.map(|i| set.points[i]);
        let centroid = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        if !spec.in_fluid(centroid, 0.0) {
            continue;
        }
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        if area2 > 0.0 {
            tris.push(idx);
        } else {
            tris.push([idx[0], idx[2], idx[1]]);
        }
    }
    // spade's face order is an implementation detail; sort for a canonical numbering
    tris.sort_unstable();
    Ok(tris)
}

/// Placement of the graded point layer along curved inclusions and of the interior
/// lattice, in units of `h`.
#[derive(Debug, Clone, Copy)]
struct LayerParams {
    offset: f64,
    spacing: f64,
    clearance: f64,
}

const LATTICE_SHIFTS: [[f64; 2]; 4] = [[-0.25, 0.0], [0.0, 0.3], [0.2, 0.15], [-0.1, 0.45]];

const LAYER_CANDIDATES: [LayerParams; 4] = [
    LayerParams { offset: 0.4, spacing: 0.6, clearance: 0.7 },
    LayerParams { offset: 0.45, spacing: 0.75, clearance: 0.7 },
    LayerParams { offset: 0.35, spacing: 0.6, clearance: 0.7 },
    LayerParams { offset: 0.5, spacing: 0.6, clearance: 0.7 },
];

fn build_point_set(spec: &GeometrySpec, h: f64, layer_params: LayerParams, shift: [f64; 2]) -> PointSet {
    let loops = spec.boundary_loops(h);
    let mut points = Vec::new();
    let mut edges = Vec::new();
    for lp in &loops {
        let base = points.len();
        let n = lp.points.len();
        points.extend_from_slice(&lp.points);
        for k in 0..n {
            edges.push(BoundaryEdge {
                a: base + k,
                b: base + (k + 1) % n,
                marker: lp.markers[k],
            });
        }
    }
    let n_boundary = points.len();
    let segs: Vec<([f64; 2], [f64; 2])> = edges.iter().map(|e| (points[e.a], points[e.b])).collect();
    let seg_dist = |p: [f64; 2]| {
        segs.iter()
            .map(|&(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    };

    // a layer of points parallel to a finely resolved curve grades the spacing towards h
    let mut layer: Vec<[f64; 2]> = Vec::new();
    if spec.has_curved_inclusion() {
        for lp in loops.iter().filter(|lp| lp.markers.iter().all(|m| *m == Marker::Inclusion)) {
            let n = lp.points.len();
            for k in 0..n {
                let (prev, next) = (lp.points[(k + n - 1) % n], lp.points[(k + 1) % n]);
                let t = [next[0] - prev[0], next[1] - prev[1]];
                let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
                let spacing = 0.5 * len;
                let d = layer_params.offset * (spacing + h) * 3f64.sqrt() / 2.0;
                let normal = [t[1] / len, -t[0] / len];
                let p = lp.points[k];
                for sign in [1.0, -1.0] {
                    let q = [p[0] + sign * d * normal[0], p[1] + sign * d * normal[1]];
                    if q[0] > 0.0 && q[0] < 1.0 && q[1] > 0.0 && q[1] < 1.0 && spec.in_fluid(q, 0.0) {
                        if seg_dist(q) > 0.8 * d {
                            layer.push(q);
                        }
                        break;
                    }
                }
            }
        }
        let mut kept: Vec<[f64; 2]> = Vec::with_capacity(layer.len());
        for q in layer {
            if kept.last().map_or(true, |l| dist(*l, q) > layer_params.spacing * h)
                && kept.first().map_or(true, |f| dist(*f, q) > layer_params.spacing * h) {
                kept.push(q);
            }
        }
        layer = kept;
    }
    points.extend_from_slice(&layer);

    let dy = h * 3f64.sqrt() / 2.0;
    let rows = (1.0 / dy).ceil() as usize + 1;
    let cols = (1.0 / h).ceil() as usize + 2;
    for j in 0..=rows {
        let y = (j as f64 + shift[1]) * dy;
        let stagger = if j % 2 == 1 { 0.5 * h } else { 0.0 };
        for i in 0..=cols {
            let x = i as f64 * h + stagger + shift[0] * h;
            let p = [x, y];
            if x <= 0.0 || x >= 1.0 || y <= 0.0 || y >= 1.0 || !spec.in_fluid(p, 0.0) {
                continue;
            }
            let near_layer = layer.iter().any(|q| dist(*q, p) < layer_params.clearance * h);
            if seg_dist(p) > 0.6 * h && !near_layer {
                points.push(p);
            }
        }
    }
    PointSet { points, n_boundary, edges }
}

/// Moves interior points towards the centroid of their neighbours.
fn smooth(set: &mut PointSet, tris: &[[usize; 3]], spec: &GeometrySpec, h: f64, sweeps: usize) {
    let n = set.points.len();
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if !nbrs[a].contains(&b) {
                nbrs[a].push(b);
            }
            if !nbrs[b].contains(&a) {
                nbrs[b].push(a);
            }
        }
    }
    for _ in 0..sweeps {
        for i in set.n_boundary..n {
            if nbrs[i].is_empty() {
                continue;
            }
            let mut c = [0.0, 0.0];
            for &j in &nbrs[i] {
                c[0] += set.points[j][0];
                c[1] += set.points[j][1];
            }
            let m = nbrs[i].len() as f64;
            let c = [c[0] / m, c[1] / m];
            if c[0] > 0.0 && c[0] < 1.0 && c[1] > 0.0 && c[1] < 1.0 && spec.in_fluid(c, 0.15 * h) {
                set.points[i] = c;
            }
        }
    }
}

/// Greedy pass that moves each interior point to whichever trial position most
/// increases the smallest angle of its incident triangles.
fn improve_angles(set: &mut PointSet, tris: &[[usize; 3]], spec: &GeometrySpec, h: f64, sweeps: usize) {
    let n = set.points.len();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (t, tri) in tris.iter().enumerate() {
        for &i in tri {
            incident[i].push(t);
        }
    }
    let quality = |points: &[[f64; 2]], ts: &[usize], i: usize, p: [f64; 2]| {
        let mut q = f64::INFINITY;
        for &t in ts {
            let v = tris[t].map(|k| if k == i { p } else { points[k] });
            let area2 = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
            if area2 <= 0.0 {
                return f64::NEG_INFINITY;
            }
            q = q.min(triangle_min_angle(v[0], v[1], v[2]));
        }
        q
    };
    let directions: Vec<[f64; 2]> = (0..12)
        .map(|k| {
            let a = k as f64 * std::f64::consts::PI / 6.0;
            [a.cos(), a.sin()]
        })
        .collect();
    for sweep in 0..sweeps {
        let step = 0.1 * h / (1.0 + sweep as f64);
        for i in set.n_boundary..n {
            if incident[i].is_empty() {
                continue;
            }
            let p = set.points[i];
            let mut best = (quality(&set.points, &incident[i], i, p), p);
            for d in &directions {
                for scale in [1.0, 0.4] {
                    let c = [p[0] + scale * step * d[0], p[1] + scale * step * d[1]];
                    if c[0] <= 0.0 || c[0] >= 1.0 || c[1] <= 0.0 || c[1] >= 1.0 || !spec.in_fluid(c, 0.15 * h) {
                        continue;
                    }
                    let q = quality(&set.points, &incident[i], i, c);
                    if q > best.0 {
                        best = (q, c);
                    }
                }
            }
            set.points[i] = best.1;
        }
    }
}

fn assemble_mesh(spec: &GeometrySpec, set: &PointSet, tris: Vec<[usize; 3]>) -> UnitCellMesh {
    // drop points not referenced by any fluid triangle
    let mut used = vec![false; set.points.len()];
    for t in &tris {
        for &i in t {
            used[i] = true;
        }
    }
    let mut remap = vec![usize::MAX; set.points.len()];
    let mut nodes = Vec::new();
    for (i, p) in set.points.iter().enumerate() {
        if used[i] {
            remap[i] = nodes.len();
            nodes.push(*p);
        }
    }
    let triangles = tris.iter().map(|t| t.map(|i| remap[i])).collect();
    let boundary_edges = set
        .edges
        .iter()
        .map(|e| BoundaryEdge { a: remap[e.a], b: remap[e.b], marker: e.marker })
        .collect();
    let periodic_pairs = match_periodic(&nodes);
    UnitCellMesh {
        nodes,
        triangles,
        boundary_edges,
        periodic_pairs,
        geometry: Some(*spec),
    }
}

fn mesh_with_params(spec: &GeometrySpec, h: f64, layer: LayerParams, shift: [f64; 2]) -> Result<UnitCellMesh> {
    let mut set = build_point_set(spec, h, layer, shift);
    let mut tris = triangulate(&set, spec)?;
    for _ in 0..3 {
        smooth(&mut set, &tris, spec, h, 4);
        tris = triangulate(&set, spec)?;
    }
    for _ in 0..2 {
        improve_angles(&mut set, &tris, spec, h, 6);
        tris = triangulate(&set, spec)?;
    }
    Ok(split_at_incenters(&assemble_mesh(spec, &set, tris)))
}

/// First candidate placement that clears the angle floor, else the best one.
fn mesh_with_spacing(spec: &GeometrySpec, h: f64) -> Result<UnitCellMesh> {
    let mut best: Option<UnitCellMesh> = None;
    let layers = if spec.has_curved_inclusion() { &LAYER_CANDIDATES[..] } else { &LAYER_CANDIDATES[..1] };
    for (shift, layer) in LATTICE_SHIFTS.iter().flat_map(|s| layers.iter().map(move |l| (*s, *l))) {
        let mesh = mesh_with_params(spec, h, layer, shift)?;
        if mesh.min_angle_deg() >= MIN_ANGLE_FLOOR_DEG {
            return Ok(mesh);
        }
        if best.as_ref().map_or(true, |b| mesh.min_angle_deg() > b.min_angle_deg()) {
            best = Some(mesh);
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// Generates a periodic triangulation of the fluid region with roughly `target_triangles` elements.
pub fn generate_mesh(spec: &GeometrySpec, target_triangles: usize) -> Result<UnitCellMesh> {
    spec.validate()?;
    if target_triangles < 50 {
        return Err(Error::MeshingFailed(format!(
            "target of {target_triangles} triangles is below the minimum of 50"
        )));
    }
    let target = target_triangles as f64;
    // each macro triangle yields three children
    let mut h = (12.0 * spec.fluid_area() / (3f64.sqrt() * target)).sqrt();
    let mut mesh = mesh_with_spacing(spec, h)?;
    for _ in 0..4 {
        let ratio = mesh.triangles.len() as f64 / target;
        if (ratio - 1.0).abs() <= 0.15 {
            break;
        }
        h *= ratio.sqrt();
        mesh = mesh_with_spacing(spec, h)?;
    }
    let ratio = mesh.triangles.len() as f64 / target;
    if (ratio - 1.0).abs() > 0.3 {
        return Err(Error::MeshingFailed(format!(
            "produced {} triangles for a target of {target_triangles}",
            mesh.triangles.len()
        )));
    }
    let min_angle = mesh.min_angle_deg();
    if min_angle < MIN_ANGLE_FLOOR_DEG {
        return Err(Error::MeshingFailed(format!(
            "minimum angle {min_angle:.2} deg is below the {MIN_ANGLE_FLOOR_DEG} deg floor"
        )));
    }
    let report = validate_mesh(&mesh);
    if !report.is_valid() {
        return Err(Error::MeshingFailed(report.violations.join("; ")));
    }
    Ok(mesh)
}

/// Checks the mesh invariants; an empty violation list means the mesh is valid.
pub fn validate_mesh(mesh: &UnitCellMesh) -> ValidationReport {
    let mut violations = Vec::new();
    let n = mesh.nodes.len();

    for (k, t) in mesh.triangles.iter().enumerate() {
        if t.iter().any(|&i| i >= n) {
            violations.push(format!("triangle {k} references a missing node"));
            continue;
        }
        if mesh.signed_area(k) <= 0.0 {
            violations.push(format!("negative area at index {k}"));
        }
    }
    let area_sum = mesh.area();
    let min_angle_deg = if violations.is_empty() { mesh.min_angle_deg() } else { f64::NAN };

    // topological boundary: edges used by exactly one triangle
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut topo: Vec<(usize, usize)> = edge_count.iter().filter(|(_, &c)| c == 1).map(|(&e, _)| e).collect();
    topo.sort_unstable();
    let mut listed: Vec<(usize, usize)> = mesh.boundary_edges.iter().map(|e| (e.a.min(e.b), e.a.max(e.b))).collect();
    listed.sort_unstable();
    if topo != listed {
        violations.push(format!(
            "boundary edge list ({} edges) differs from mesh boundary ({} edges)",
            listed.len(),
            topo.len()
        ));
    }
    let mut degree = vec![0usize; n];
    for e in &mesh.boundary_edges {
        if e.a < n && e.b < n {
            degree[e.a] += 1;
            degree[e.b] += 1;
        }
    }
    if degree.iter().any(|&d| d % 2 == 1) {
        violations.push("boundary edges do not form closed curves".into());
    }

    for e in &mesh.boundary_edges {
        if e.a >= n || e.b >= n {
            continue;
        }
        let (pa, pb) = (mesh.nodes[e.a], mesh.nodes[e.b]);
        let on_face = |axis: usize, v: f64| pa[axis] == v && pb[axis] == v;
        let expected = if on_face(0, 0.0) {
            Some(Marker::Left)
        } else if on_face(0, 1.0) {
            Some(Marker::Right)
        } else if on_face(1, 0.0) {
            Some(Marker::Bottom)
        } else if on_face(1, 1.0) {
            Some(Marker::Top)
        } else {
            None
        };
        match expected {
            None if e.marker != Marker::Inclusion => {
                violations.push(format!("interior boundary edge {}-{} not marked as inclusion", e.a, e.b))
            }
            Some(m) if e.marker.is_outer() && e.marker != m => {
                violations.push(format!("outer edge {}-{} has marker {:?}, expected {:?}", e.a, e.b, e.marker, m))
            }
            _ => {}
        }
    }

    let mut periodic_mismatch_max: f64 = 0.0;
    let check_pairs = |pairs: &[[usize; 2]], axis: usize, name: &str, violations: &mut Vec<String>, mm: &mut f64| {
        let mut lo_seen = vec![0usize; n];
        let mut hi_seen = vec![0usize; n];
        for &[i, j] in pairs {
            if i >= n || j >= n {
                violations.push(format!("{name} pair references a missing node"));
                continue;
            }
            lo_seen[i] += 1;
            hi_seen[j] += 1;
            if mesh.nodes[i][axis] != 0.0 || mesh.nodes[j][axis] != 1.0 {
                violations.push(format!("{name} pair ({i}, {j}) is not on opposite faces"));
            }
            let d = (mesh.nodes[i][1 - axis] - mesh.nodes[j][1 - axis]).abs();
            *mm = mm.max(d);
            if d > PERIODIC_TOL {
                violations.push(format!("{name} pair ({i}, {j}) mismatch {d:e}"));
            }
        }
        // every face node appears exactly once; faces only exist where outer edges do
        let face_lo = if axis == 0 { Marker::Left } else { Marker::Bottom };
        let face_hi = if axis == 0 { Marker::Right } else { Marker::Top };
        let mut on_lo = vec![false; n];
        let mut on_hi = vec![false; n];
        for e in &mesh.boundary_edges {
            if e.a >= n || e.b >= n {
                continue;
            }
            if e.marker == face_lo {
                on_lo[e.a] = true;
                on_lo[e.b] = true;
            }
            if e.marker == face_hi {
                on_hi[e.a] = true;
                on_hi[e.b] = true;
            }
        }
        for i in 0..n {
            if on_lo[i] && lo_seen[i] != 1 {
                violations.push(format!("{name}: node {i} has {} partners", lo_seen[i]));
            }
            if on_hi[i] && hi_seen[i] != 1 {
                violations.push(format!("{name}: node {i} has {} partners", hi_seen[i]));
            }
        }
    };
    check_pairs(&mesh.periodic_pairs.left_right, 0, "left_right", &mut violations, &mut periodic_mismatch_max);
    check_pairs(&mesh.periodic_pairs.bottom_top, 1, "bottom_top", &mut violations, &mut periodic_mismatch_max);

    if let Some(spec) = &mesh.geometry {
        for (i, p) in mesh.nodes.iter().enumerate() {
            if !spec.in_fluid(*p, -1e-10) {
                violations.push(format!("node {i} lies inside the solid inclusion"));
            }
        }
    }

    ValidationReport {
        violations,
        n_nodes: n,
        n_triangles: mesh.triangles.len(),
        min_angle_deg,
        area_sum,
        periodic_mismatch_max,
    }
}
