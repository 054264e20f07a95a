//! Degree-of-freedom numbering with periodic identification and no-slip constraints.

use std::collections::HashMap;

use crate::element::{EDGES, N_SCALAR, N_VEL};
use crate::error::{Error, Result};
use crate::geometry::Marker;
use crate::mesh::UnitCellMesh;

/// Scalar DOFs are numbered nodes first, then edge midpoints.
/// Vector DOF `2 s + c` carries component `c` of scalar DOF `s`.
#[derive(Debug, Clone)]
pub struct DofLayout {
    pub n_nodes: usize,
    pub n_triangles: usize,
    /// Edges as sorted node pairs.
    pub edges: Vec<[usize; 2]>,
    /// Global scalar DOFs of each triangle in local basis order.
    pub element_scalar: Vec<[usize; N_SCALAR]>,
    /// Periodic master of every scalar DOF (a master maps to itself).
    pub master: Vec<usize>,
    /// No-slip flag per scalar DOF, shared by a whole periodic class.
    pub dirichlet: Vec<bool>,
    /// Index among unconstrained scalar unknowns, if any.
    pub scalar_free: Vec<Option<usize>>,
    pub n_free_scalar: usize,
    /// Physical location of each scalar DOF (vertex or edge midpoint).
    pub positions: Vec<[f64; 2]>,
}

impl DofLayout {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_scalar(&self) -> usize {
        self.master.len()
    }

    /// Unreduced velocity coefficient count: two components per scalar DOF.
    pub fn n_velocity(&self) -> usize {
        2 * self.n_scalar()
    }

    pub fn n_velocity_free(&self) -> usize {
        2 * self.n_free_scalar
    }

    pub fn n_pressure(&self) -> usize {
        3 * self.n_triangles
    }

    pub fn has_no_slip(&self) -> bool {
        self.dirichlet.iter().any(|&d| d)
    }

    /// Reduced index of each local velocity DOF of triangle `t`.
    pub fn element_free(&self, t: usize) -> [Option<usize>; N_VEL] {
        let mut out = [None; N_VEL];
        for (s, &g) in self.element_scalar[t].iter().enumerate() {
            if let Some(f) = self.scalar_free[g] {
                out[2 * s] = Some(2 * f);
                out[2 * s + 1] = Some(2 * f + 1);
            }
        }
        out
    }

    /// Expands a reduced velocity vector to the unreduced coefficient vector.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_velocity()];
        for (s, f) in self.scalar_free.iter().enumerate() {
            if let Some(f) = f {
                full[2 * s] = free[2 * f];
                full[2 * s + 1] = free[2 * f + 1];
            }
        }
        full
    }

    /// Restricts an unreduced vector to the reduced unknowns by reading master values.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        let mut free = vec![0.0; self.n_velocity_free()];
        for (s, f) in self.scalar_free.iter().enumerate() {
            if let Some(f) = f {
                if self.master[s] == s {
                    free[2 * f] = full[2 * s];
                    free[2 * f + 1] = full[2 * s + 1];
                }
            }
        }
        free
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let ra = find(parent, a);
    let rb = find(parent, b);
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi] = lo;
    }
}

pub fn build_layout(mesh: &UnitCellMesh) -> Result<DofLayout> {
    let n_nodes = mesh.nodes.len();
    let n_triangles = mesh.triangles.len();
    let bad = |msg: String| Err(Error::InconsistentMesh(msg));
    if n_triangles == 0 {
        return bad("mesh has no triangles".into());
    }

    let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut element_edges = Vec::with_capacity(n_triangles);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if tri.iter().any(|&i| i >= n_nodes) {
            return bad(format!("triangle {t} references a missing node"));
        }
        let mut ids = [0; 3];
        for (k, [a, b]) in EDGES.iter().enumerate() {
            let (i, j) = (tri[*a], tri[*b]);
            let key = [i.min(j), i.max(j)];
            ids[k] = *edge_index.entry(key).or_insert_with(|| {
                edges.push(key);
                edges.len() - 1
            });
        }
        element_edges.push(ids);
    }
    let n_edges = edges.len();
    let n_scalar = n_nodes + n_edges;
    let edge_dof = |i: usize, j: usize| edge_index.get(&[i.min(j), i.max(j)]).map(|&e| n_nodes + e);

    let element_scalar: Vec<[usize; N_SCALAR]> = mesh
        .triangles
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            let e = element_edges[t];
            [
                tri[0],
                tri[1],
                tri[2],
                n_nodes + e[0],
                n_nodes + e[1],
                n_nodes + e[2],
            ]
        })
        .collect();

    let mut positions = Vec::with_capacity(n_scalar);
    positions.extend_from_slice(&mesh.nodes);
    for [a, b] in &edges {
        let (pa, pb) = (mesh.nodes[*a], mesh.nodes[*b]);
        positions.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
    }

    // periodic identification of nodes and of the face edges between them
    let mut parent: Vec<usize> = (0..n_scalar).collect();
    let faces = [
        (&mesh.periodic_pairs.left_right, Marker::Left, Marker::Right, "left_right"),
        (&mesh.periodic_pairs.bottom_top, Marker::Bottom, Marker::Top, "bottom_top"),
    ];
    for (pairs, lo_marker, hi_marker, name) in faces {
        let mut partner: HashMap<usize, usize> = HashMap::new();
        let mut hi_seen: HashMap<usize, usize> = HashMap::new();
        for &[i, j] in pairs.iter() {
            if i >= n_nodes || j >= n_nodes {
                return bad(format!("{name} pair ({i}, {j}) references a missing node"));
            }
            if partner.insert(i, j).is_some() || hi_seen.insert(j, i).is_some() {
                return bad(format!("{name} pairing is not one-to-one at ({i}, {j})"));
            }
            union(&mut parent, i, j);
        }
        for e in &mesh.boundary_edges {
            if e.a >= n_nodes || e.b >= n_nodes {
                return bad(format!("boundary edge {}-{} references a missing node", e.a, e.b));
            }
            if e.marker == lo_marker {
                for v in [e.a, e.b] {
                    if !partner.contains_key(&v) {
                        return bad(format!("unmatched periodic node {v} on {lo_marker:?} face"));
                    }
                }
                let Some(lo) = edge_dof(e.a, e.b) else {
                    return bad(format!("boundary edge {}-{} is not a mesh edge", e.a, e.b));
                };
                let Some(hi) = edge_dof(partner[&e.a], partner[&e.b]) else {
                    return bad(format!("face edge {}-{} has no periodic partner edge", e.a, e.b));
                };
                union(&mut parent, lo, hi);
            } else if e.marker == hi_marker {
                for v in [e.a, e.b] {
                    if !hi_seen.contains_key(&v) {
                        return bad(format!("unmatched periodic node {v} on {hi_marker:?} face"));
                    }
                }
            }
        }
    }
    let master: Vec<usize> = (0..n_scalar).map(|i| find(&mut parent, i)).collect();

    let mut dirichlet = vec![false; n_scalar];
    for e in mesh.boundary_edges.iter().filter(|e| e.marker == Marker::Inclusion) {
        dirichlet[master[e.a]] = true;
        dirichlet[master[e.b]] = true;
        match edge_dof(e.a, e.b) {
            Some(d) => dirichlet[master[d]] = true,
            None => return bad(format!("boundary edge {}-{} is not a mesh edge", e.a, e.b)),
        }
    }
    for i in 0..n_scalar {
        dirichlet[i] = dirichlet[master[i]];
    }

    let mut scalar_free = vec![None; n_scalar];
    let mut n_free_scalar = 0;
    for i in 0..n_scalar {
        if master[i] == i && !dirichlet[i] {
            scalar_free[i] = Some(n_free_scalar);
            n_free_scalar += 1;
        }
    }
    for i in 0..n_scalar {
        scalar_free[i] = scalar_free[master[i]];
    }

    Ok(DofLayout {
        n_nodes,
        n_triangles,
        edges,
        element_scalar,
        master,
        dirichlet,
        scalar_free,
        n_free_scalar,
        positions,
    })
}
