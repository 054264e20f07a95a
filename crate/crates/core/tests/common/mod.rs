#![allow(dead_code)]

use std::sync::OnceLock;

use homfilt::geometry::GeometrySpec;
use homfilt::layout::{build_layout, DofLayout};
use homfilt::mesh::{generate_mesh, UnitCellMesh};
use homfilt::solver::CellSolver;

pub struct Cell {
    pub mesh: UnitCellMesh,
    pub layout: DofLayout,
}

impl Cell {
    pub fn new(spec: GeometrySpec, triangles: usize) -> Self {
        let mesh = generate_mesh(&spec, triangles).expect("mesh");
        let layout = build_layout(&mesh).expect("layout");
        Cell { mesh, layout }
    }

    pub fn solver(&self) -> CellSolver<'_> {
        CellSolver::new(&self.mesh, &self.layout).expect("solver")
    }
}

pub fn geom1() -> &'static Cell {
    static CELL: OnceLock<Cell> = OnceLock::new();
    CELL.get_or_init(|| Cell::new(GeometrySpec::geom1(), 1000))
}

pub fn geom2() -> &'static Cell {
    static CELL: OnceLock<Cell> = OnceLock::new();
    CELL.get_or_init(|| Cell::new(GeometrySpec::geom2(), 1000))
}

pub fn geom3() -> &'static Cell {
    static CELL: OnceLock<Cell> = OnceLock::new();
    CELL.get_or_init(|| Cell::new(GeometrySpec::geom3(), 1000))
}

/// A coarse circle cell for cheap solver checks.
pub fn coarse() -> &'static Cell {
    static CELL: OnceLock<Cell> = OnceLock::new();
    CELL.get_or_init(|| Cell::new(GeometrySpec::geom1(), 400))
}

pub fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

pub fn rel(a: [f64; 2], b: [f64; 2]) -> f64 {
    norm([a[0] - b[0], a[1] - b[1]]) / norm(b)
}

pub fn scale(a: f64, v: [f64; 2]) -> [f64; 2] {
    [a * v[0], a * v[1]]
}
