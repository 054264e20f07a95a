//! Inclusion geometries of the periodic unit cell `Y = ]0,1[²`.
//!
//! Every inclusion is centred at `(0.5, 0.5)`. The channel geometries describe the
//! fluid part directly: a cross of two perpendicular channels, or a single channel
//! along `x` bounded by walls.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const CENTER: [f64; 2] = [0.5, 0.5];

/// Curved boundaries use a finer spacing than the interior to keep the chord error small.
const CURVE_REFINE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometrySpec {
    Circle { radius: f64 },
    Square { half_side: f64 },
    Ellipse { semi_x: f64, semi_y: f64 },
    /// Two perpendicular channels of thickness `delta` crossing at the cell centre.
    ChannelNetwork { delta: f64 },
    /// One channel of thickness `delta` along `x`; the faces `y = 0, 1` are solid.
    StraightChannel { delta: f64 },
}

/// Symmetries of the cell usable to extend sampled permeability data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellSymmetry {
    /// Axis reflections plus the diagonal swap `x <-> y`.
    Dihedral,
    /// Only `U(-ξ) = -U(ξ)`.
    OddOnly,
}

impl GeometrySpec {
    /// GEOM1: circular inclusion.
    pub fn geom1() -> Self {
        GeometrySpec::Circle { radius: 0.25 }
    }

    /// GEOM2: big square inclusion.
    pub fn geom2() -> Self {
        GeometrySpec::Square { half_side: 0.3 }
    }

    /// GEOM3: elliptical inclusion, elongated along `x`.
    pub fn geom3() -> Self {
        GeometrySpec::Ellipse {
            semi_x: 0.35,
            semi_y: 0.15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InfeasibleGeometry(msg));
        let open = |v: f64, hi: f64| v > 0.0 && v < hi && v.is_finite();
        match *self {
            GeometrySpec::Circle { radius } if !open(radius, 0.5) => {
                bad(format!("circle radius {radius} must lie in (0, 0.5)"))
            }
            GeometrySpec::Square { half_side } if !open(half_side, 0.5) => {
                bad(format!("square half-side {half_side} must lie in (0, 0.5)"))
            }
            GeometrySpec::Ellipse { semi_x, semi_y } if !open(semi_x, 0.5) || !open(semi_y, 0.5) => {
                bad(format!("ellipse semi-axes ({semi_x}, {semi_y}) must lie in (0, 0.5)"))
            }
            GeometrySpec::ChannelNetwork { delta } | GeometrySpec::StraightChannel { delta }
                if !open(delta, 1.0) =>
            {
                bad(format!("channel thickness {delta} must lie in (0, 1)"))
            }
            _ => Ok(()),
        }
    }

    /// Analytic measure of the fluid part `|𝒴|`.
    pub fn fluid_area(&self) -> f64 {
        match *self {
            GeometrySpec::Circle { radius } => 1.0 - PI * radius * radius,
            GeometrySpec::Square { half_side } => 1.0 - 4.0 * half_side * half_side,
            GeometrySpec::Ellipse { semi_x, semi_y } => 1.0 - PI * semi_x * semi_y,
            GeometrySpec::ChannelNetwork { delta } => 2.0 * delta - delta * delta,
            GeometrySpec::StraightChannel { delta } => delta,
        }
    }

    /// True when `p` lies in the closed solid part (inclusion or walls).
    pub fn in_solid(&self, p: [f64; 2], tol: f64) -> bool {
        !self.in_fluid(p, -tol)
    }

    /// True when `p` lies in the fluid part, shrunk by `margin` (negative margin grows it).
    pub fn in_fluid(&self, p: [f64; 2], margin: f64) -> bool {
        let dx = p[0] - CENTER[0];
        let dy = p[1] - CENTER[1];
        match *self {
            GeometrySpec::Circle { radius } => (dx * dx + dy * dy).sqrt() > radius + margin,
            GeometrySpec::Square { half_side } => dx.abs().max(dy.abs()) > half_side + margin,
            GeometrySpec::Ellipse { semi_x, semi_y } => {
                // margin is applied approximately through the scaled radius
                let q = ((dx / semi_x).powi(2) + (dy / semi_y).powi(2)).sqrt();
                q > 1.0 + margin / semi_y.min(semi_x)
            }
            GeometrySpec::ChannelNetwork { delta } => {
                dx.abs() < delta / 2.0 - margin || dy.abs() < delta / 2.0 - margin
            }
            GeometrySpec::StraightChannel { delta } => dy.abs() < delta / 2.0 - margin,
        }
    }

    pub fn symmetry(&self) -> CellSymmetry {
        match self {
            GeometrySpec::Circle { .. }
            | GeometrySpec::Square { .. }
            | GeometrySpec::ChannelNetwork { .. } => CellSymmetry::Dihedral,
            GeometrySpec::Ellipse { .. } | GeometrySpec::StraightChannel { .. } => {
                CellSymmetry::OddOnly
            }
        }
    }

    pub(crate) fn has_curved_inclusion(&self) -> bool {
        matches!(self, GeometrySpec::Circle { .. } | GeometrySpec::Ellipse { .. })
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match *self {
            GeometrySpec::Circle { radius } => format!("circle(r={radius})"),
            GeometrySpec::Square { half_side } => format!("square(a={half_side})"),
            GeometrySpec::Ellipse { semi_x, semi_y } => format!("ellipse(a={semi_x},b={semi_y})"),
            GeometrySpec::ChannelNetwork { delta } => format!("channels(delta={delta})"),
            GeometrySpec::StraightChannel { delta } => format!("straight(delta={delta})"),
        }
    }

    /// Closed boundary loops of the fluid region, discretised with spacing close to `h`.
    pub(crate) fn boundary_loops(&self, h: f64) -> Vec<BoundaryLoop> {
        let c = CENTER;
        match *self {
            GeometrySpec::Circle { radius } => {
                let n = ((2.0 * PI * radius / (CURVE_REFINE * h)).ceil() as usize).max(12);
                let pts = (0..n)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / n as f64;
                        [c[0] + radius * t.cos(), c[1] + radius * t.sin()]
                    })
                    .collect::<Vec<_>>();
                vec![outer_square(h), BoundaryLoop::uniform(pts, Marker::Inclusion)]
            }
            GeometrySpec::Square { half_side: a } => {
                let corners = [
                    [c[0] - a, c[1] - a],
                    [c[0] + a, c[1] - a],
                    [c[0] + a, c[1] + a],
                    [c[0] - a, c[1] + a],
                ];
                let mut lp = PolyBuilder::default();
                for k in 0..4 {
                    lp.segment(corners[k], corners[(k + 1) % 4], h, Marker::Inclusion);
                }
                vec![outer_square(h), lp.finish()]
            }
            GeometrySpec::Ellipse { semi_x, semi_y } => {
                vec![outer_square(h), ellipse_loop(semi_x, semi_y, h)]
            }
            GeometrySpec::ChannelNetwork { delta } => {
                let lo = 0.5 - delta / 2.0;
                let hi = 0.5 + delta / 2.0;
                let v = [
                    [0.0, lo],
                    [lo, lo],
                    [lo, 0.0],
                    [hi, 0.0],
                    [hi, lo],
                    [1.0, lo],
                    [1.0, hi],
                    [hi, hi],
                    [hi, 1.0],
                    [lo, 1.0],
                    [lo, hi],
                    [0.0, hi],
                ];
                let markers = [
                    Marker::Inclusion,
                    Marker::Inclusion,
                    Marker::Bottom,
                    Marker::Inclusion,
                    Marker::Inclusion,
                    Marker::Right,
                    Marker::Inclusion,
                    Marker::Inclusion,
                    Marker::Top,
                    Marker::Inclusion,
                    Marker::Inclusion,
                    Marker::Left,
                ];
                let mut lp = PolyBuilder::default();
                for k in 0..12 {
                    lp.segment(v[k], v[(k + 1) % 12], h, markers[k]);
                }
                vec![lp.finish()]
            }
            GeometrySpec::StraightChannel { delta } => {
                let lo = 0.5 - delta / 2.0;
                let hi = 0.5 + delta / 2.0;
                let v = [[0.0, lo], [1.0, lo], [1.0, hi], [0.0, hi]];
                let markers = [Marker::Inclusion, Marker::Right, Marker::Inclusion, Marker::Left];
                let mut lp = PolyBuilder::default();
                for k in 0..4 {
                    lp.segment(v[k], v[(k + 1) % 4], h, markers[k]);
                }
                vec![lp.finish()]
            }
        }
    }
}

/// Boundary marker of a mesh edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marker {
    /// No-slip interface `S` (inclusion surface or channel wall).
    Inclusion,
    /// Outer face `x = 0`.
    Left,
    /// Outer face `x = 1`.
    Right,
    /// Outer face `y = 0`.
    Bottom,
    /// Outer face `y = 1`.
    Top,
}

impl Marker {
    pub fn is_outer(self) -> bool {
        !matches!(self, Marker::Inclusion)
    }
}

/// A closed polyline; `markers[i]` tags the edge `points[i] -> points[i + 1]`.
#[derive(Debug, Clone)]
pub(crate) struct BoundaryLoop {
    pub points: Vec<[f64; 2]>,
    pub markers: Vec<Marker>,
}

impl BoundaryLoop {
    fn uniform(points: Vec<[f64; 2]>, marker: Marker) -> Self {
        let markers = vec![marker; points.len()];
        BoundaryLoop { points, markers }
    }
}

#[derive(Default)]
struct PolyBuilder {
    points: Vec<[f64; 2]>,
    markers: Vec<Marker>,
}

impl PolyBuilder {
    /// Appends `p` and the interior subdivision points of `[p, q]` (not `q` itself).
    ///
    /// Axis-aligned segments are subdivided from an ascending coordinate list, so two
    /// opposite faces spanning the same interval get bit-identical coordinates.
    fn segment(&mut self, p: [f64; 2], q: [f64; 2], h: f64, marker: Marker) {
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        let n = ((len / h).round() as usize).max(1);
        let pts: Vec<[f64; 2]> = if p[0] == q[0] {
            let ys = ascending(p[1].min(q[1]), p[1].max(q[1]), n);
            let mut v: Vec<_> = ys.into_iter().map(|y| [p[0], y]).collect();
            if p[1] > q[1] {
                v.reverse();
            }
            v
        } else if p[1] == q[1] {
            let xs = ascending(p[0].min(q[0]), p[0].max(q[0]), n);
            let mut v: Vec<_> = xs.into_iter().map(|x| [x, p[1]]).collect();
            if p[0] > q[0] {
                v.reverse();
            }
            v
        } else {
            (0..=n)
                .map(|k| {
                    let t = k as f64 / n as f64;
                    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
                })
                .collect()
        };
        for pt in &pts[..n] {
            self.points.push(*pt);
            self.markers.push(marker);
        }
    }

    fn finish(self) -> BoundaryLoop {
        BoundaryLoop {
            points: self.points,
            markers: self.markers,
        }
    }
}

fn ascending(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            if k == n {
                hi
            } else {
                lo + (hi - lo) * (k as f64 / n as f64)
            }
        })
        .collect()
}

fn outer_square(h: f64) -> BoundaryLoop {
    let mut lp = PolyBuilder::default();
    lp.segment([0.0, 0.0], [1.0, 0.0], h, Marker::Bottom);
    lp.segment([1.0, 0.0], [1.0, 1.0], h, Marker::Right);
    lp.segment([1.0, 1.0], [0.0, 1.0], h, Marker::Top);
    lp.segment([0.0, 1.0], [0.0, 0.0], h, Marker::Left);
    lp.finish()
}

/// Nodes on the exact ellipse, equispaced in arc length.
fn ellipse_loop(a: f64, b: f64, h: f64) -> BoundaryLoop {
    const FINE: usize = 8192;
    let param = |t: f64| [CENTER[0] + a * t.cos(), CENTER[1] + b * t.sin()];
    let mut cum = Vec::with_capacity(FINE + 1);
    cum.push(0.0);
    let mut prev = param(0.0);
    for k in 1..=FINE {
        let p = param(2.0 * PI * k as f64 / FINE as f64);
        let d = ((p[0] - prev[0]).powi(2) + (p[1] - prev[1]).powi(2)).sqrt();
        cum.push(cum[k - 1] + d);
        prev = p;
    }
    let total = cum[FINE];
    let n = ((total / (CURVE_REFINE * h)).ceil() as usize).max(12);
    let mut pts = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        let s = total * k as f64 / n as f64;
        while j + 1 < FINE && cum[j + 1] < s {
            j += 1;
        }
        let seg = cum[j + 1] - cum[j];
        let frac = if seg > 0.0 { (s - cum[j]) / seg } else { 0.0 };
        let t = 2.0 * PI * (j as f64 + frac) / FINE as f64;
        pts.push(param(t));
    }
    BoundaryLoop::uniform(pts, Marker::Inclusion)
}
