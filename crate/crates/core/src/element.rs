//! Continuous quadratic velocity and discontinuous linear pressure elements.
//!
//! The divergence of a quadratic velocity is a discontinuous linear function, so a
//! velocity orthogonal to all pressures is divergence-free pointwise. On meshes where
//! every triangle is split at an interior point the pair is stable.
//!
//! Local scalar basis order: three vertex functions, then the edge functions for the
//! edges (0,1), (1,2), (2,0). Vector-valued velocity DOFs interleave components:
//! local DOF `2 s + c` is scalar function `s` times `e_c`.

/// Scalar velocity basis functions per triangle.
pub const N_SCALAR: usize = 6;
/// Vector velocity DOFs per triangle.
pub const N_VEL: usize = 2 * N_SCALAR;
/// Pressure DOFs per triangle.
pub const N_PRES: usize = 3;

/// Local vertex pairs of the edge functions.
pub const EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

pub fn scalar_values(l: [f64; 3]) -> [f64; N_SCALAR] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Derivatives of the scalar basis with respect to the barycentric coordinates.
pub fn scalar_bary_derivs(l: [f64; 3]) -> [[f64; 3]; N_SCALAR] {
    [
        [4.0 * l[0] - 1.0, 0.0, 0.0],
        [0.0, 4.0 * l[1] - 1.0, 0.0],
        [0.0, 0.0, 4.0 * l[2] - 1.0],
        [4.0 * l[1], 4.0 * l[0], 0.0],
        [0.0, 4.0 * l[2], 4.0 * l[1]],
        [4.0 * l[2], 0.0, 4.0 * l[0]],
    ]
}

/// Affine data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct TriangleGeometry {
    pub area: f64,
    /// Constant gradients of the barycentric coordinates.
    pub grad_bary: [[f64; 2]; 3],
}

impl TriangleGeometry {
    pub fn new(p: [[f64; 2]; 3]) -> Self {
        let twice = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let grad_bary = [
            [(p[1][1] - p[2][1]) / twice, (p[2][0] - p[1][0]) / twice],
            [(p[2][1] - p[0][1]) / twice, (p[0][0] - p[2][0]) / twice],
            [(p[0][1] - p[1][1]) / twice, (p[1][0] - p[0][0]) / twice],
        ];
        TriangleGeometry { area: 0.5 * twice, grad_bary }
    }

    /// Physical gradients of the scalar basis at barycentric point `l`.
    pub fn scalar_gradients(&self, l: [f64; 3]) -> [[f64; 2]; N_SCALAR] {
        let d = scalar_bary_derivs(l);
        let mut g = [[0.0; 2]; N_SCALAR];
        for (gs, ds) in g.iter_mut().zip(d.iter()) {
            for k in 0..3 {
                gs[0] += ds[k] * self.grad_bary[k][0];
                gs[1] += ds[k] * self.grad_bary[k][1];
            }
        }
        g
    }

    /// Inverse of the local pressure mass matrix.
    pub fn pressure_mass_inverse(&self) -> [[f64; 3]; 3] {
        let s = 3.0 / self.area;
        [
            [3.0 * s, -s, -s],
            [-s, 3.0 * s, -s],
            [-s, -s, 3.0 * s],
        ]
    }
}

/// Symmetric 2×2 tensor stored as `[xx, xy, yy]`.
pub type Sym2 = [f64; 3];

/// Frobenius product `a : b`.
#[inline]
pub fn ddot(a: &Sym2, b: &Sym2) -> f64 {
    a[0] * b[0] + 2.0 * a[1] * b[1] + a[2] * b[2]
}

/// Strain of local vector DOF `2 s + c` given the gradient of scalar function `s`.
#[inline]
pub fn basis_strain(grad: [f64; 2], component: usize) -> Sym2 {
    if component == 0 {
        [grad[0], 0.5 * grad[1], 0.0]
    } else {
        [0.0, 0.5 * grad[0], grad[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BARY_NODES: [[f64; 3]; 6] = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.5, 0.5, 0.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
    ];

    #[test]
    fn nodal_property() {
        for (i, l) in BARY_NODES.iter().enumerate() {
            let v = scalar_values(*l);
            for (j, vj) in v.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((vj - expected).abs() < 1e-15, "{i} {j}");
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let geo = TriangleGeometry::new([[0.1, 0.2], [0.7, 0.3], [0.3, 0.9]]);
        let p = [[0.1, 0.2], [0.7, 0.3], [0.3, 0.9]];
        let to_bary = |x: [f64; 2]| {
            let l1 = geo.grad_bary[1][0] * (x[0] - p[0][0]) + geo.grad_bary[1][1] * (x[1] - p[0][1]);
            let l2 = geo.grad_bary[2][0] * (x[0] - p[0][0]) + geo.grad_bary[2][1] * (x[1] - p[0][1]);
            [1.0 - l1 - l2, l1, l2]
        };
        let x = [0.35, 0.45];
        let g = geo.scalar_gradients(to_bary(x));
        let h = 1e-6;
        for s in 0..N_SCALAR {
            for d in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[d] += h;
                xm[d] -= h;
                let fd = (scalar_values(to_bary(xp))[s] - scalar_values(to_bary(xm))[s]) / (2.0 * h);
                assert!((fd - g[s][d]).abs() < 1e-7, "{s} {d}");
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let l = [0.2, 0.3, 0.5];
        let v = scalar_values(l);
        let s: f64 = v.iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }
}
