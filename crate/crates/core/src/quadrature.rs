//! Symmetric 7-point rule on triangles, exact for polynomials of degree 5.

#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    /// Barycentric coordinates.
    pub bary: [f64; 3],
    /// Weight relative to the triangle area; the weights sum to one.
    pub weight: f64,
}

const A1: f64 = 0.059_715_871_789_770;
const B1: f64 = 0.470_142_064_105_115;
const W1: f64 = 0.132_394_152_788_506;
const A2: f64 = 0.797_426_985_353_087;
const B2: f64 = 0.101_286_507_323_456;
const W2: f64 = 0.125_939_180_544_827;

pub const TRI7: [QuadPoint; 7] = [
    QuadPoint { bary: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], weight: 0.225 },
    QuadPoint { bary: [A1, B1, B1], weight: W1 },
    QuadPoint { bary: [B1, A1, B1], weight: W1 },
    QuadPoint { bary: [B1, B1, A1], weight: W1 },
    QuadPoint { bary: [A2, B2, B2], weight: W2 },
    QuadPoint { bary: [B2, A2, B2], weight: W2 },
    QuadPoint { bary: [B2, B2, A2], weight: W2 },
];

pub const N_QUAD: usize = TRI7.len();
