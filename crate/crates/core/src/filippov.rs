//! Filippov convention on the switching manifold {z = 0}: Lie derivatives,
//! region classification and the sliding vector field in 3D and planar form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{f_minus, f_plus, FieldSide, Params, State};

/// Classification of a point of the switching manifold by the signs of the
/// normal components (f3+, f3-).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    /// Both fields point upward: orbits cross from z < 0 to z > 0.
    CrossingUp,
    /// Both fields point downward: orbits cross from z > 0 to z < 0.
    CrossingDown,
    /// f3+ < 0 and f3- > 0: both fields push toward the manifold.
    Sliding,
    /// f3+ > 0 and f3- < 0: both fields push away from the manifold.
    Escaping,
    /// Only f3+ vanishes (tangency of the upper field).
    TangencyPlus,
    /// Only f3- vanishes (tangency of the lower field).
    TangencyMinus,
    /// Both normal components vanish (two-fold candidate).
    DoubleTangency,
}

/// A point of the switching manifold, with z = 0 implicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaPoint {
    pub x: f64,
    pub y: f64,
}

impl SigmaPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn state(&self) -> State {
        State::new(self.x, self.y, 0.0)
    }
}

/// Scale-aware zero tolerance used when deciding whether a normal component
/// is "on" a tangency line.
pub fn default_tangency_tol(s: &State) -> f64 {
    let norm = (s.x * s.x + s.y * s.y + s.z * s.z).sqrt();
    1e-9 * (1.0 + norm)
}

/// Directional Lie derivatives of h(x, y, z) = z along one smooth field, in
/// closed form.
///
/// Order 1 is the normal component f3; orders 2 and 3 are the hand-derived
/// derivatives of f3 along the flow. Only orders 1..=3 are defined.
pub fn lie_derivative(side: FieldSide, order: u8, s: &State, p: &Params) -> Result<f64> {
    let (a, k, omega) = (p.a(), p.k(), p.omega());
    match (side, order) {
        (FieldSide::Plus, 1) => Ok(f_plus(s, p)[2]),
        (FieldSide::Minus, 1) => Ok(f_minus(s, p)[2]),
        (FieldSide::Plus, 2) => {
            let f3 = f_plus(s, p)[2];
            Ok((1.0 - s.y) + (omega - a - k) * (s.x - a * s.y) - omega * f3)
        }
        (FieldSide::Minus, 2) => {
            let f3 = f_minus(s, p)[2];
            Ok(-a * (omega - a) * s.y - omega * f3)
        }
        (FieldSide::Plus, 3) => {
            let f3 = f_plus(s, p)[2];
            let c = omega - a - k;
            Ok((c - omega) * (1.0 - s.y)
                + (-1.0 - (a + omega) * c) * (s.x - a * s.y)
                + omega * omega * f3)
        }
        (FieldSide::Minus, 3) => {
            let f3 = f_minus(s, p)[2];
            Ok(a * (a + omega) * (omega - a) * s.y + omega * omega * f3)
        }
        (_, n) => Err(Error::InvalidLieOrder(n)),
    }
}

/// Classifies a manifold point by the sign pattern of (f3+, f3-), treating
/// magnitudes at or below `tol` as zero.
pub fn classify_sigma_point(pt: &SigmaPoint, p: &Params, tol: f64) -> RegionKind {
    let s = pt.state();
    let fp = f_plus(&s, p)[2];
    let fm = f_minus(&s, p)[2];
    let zp = fp.abs() <= tol;
    let zm = fm.abs() <= tol;
    match (zp, zm) {
        (true, true) => RegionKind::DoubleTangency,
        (true, false) => RegionKind::TangencyPlus,
        (false, true) => RegionKind::TangencyMinus,
        (false, false) => match (fp > 0.0, fm > 0.0) {
            (true, true) => RegionKind::CrossingUp,
            (false, false) => RegionKind::CrossingDown,
            (false, true) => RegionKind::Sliding,
            (true, false) => RegionKind::Escaping,
        },
    }
}

/// Filippov's convex-combination sliding field on the manifold, built from
/// the two smooth fields. Third component is identically zero.
///
/// Defined wherever f3- - f3+ = k y - x does not vanish; at a double tangency
/// the combination degenerates and an error is returned.
pub fn sliding_field_3d(pt: &SigmaPoint, p: &Params) -> Result<[f64; 3]> {
    let s = pt.state();
    let fp = f_plus(&s, p);
    let fm = f_minus(&s, p);
    let denom = fm[2] - fp[2];
    if denom.abs() <= default_tangency_tol(&s) {
        return Err(Error::SlidingFieldUndefined { x: pt.x, y: pt.y });
    }
    Ok([
        (fp[0] * fm[2] - fm[0] * fp[2]) / denom,
        (fp[1] * fm[2] - fm[1] * fp[2]) / denom,
        0.0,
    ])
}

/// Planar normalized sliding field on the manifold, in closed form:
/// (-x + a y^2 - omega y (y - y_r), k (x - a y^2) + omega x (y - y_r)).
///
/// This is the 3D sliding field multiplied by f3- - f3+ > 0 on the sliding
/// region, hence positively parallel to it there, and polynomial on all of
/// the manifold.
pub fn planar_sliding_field(pt: &SigmaPoint, p: &Params) -> [f64; 2] {
    let (a, k, omega, y_r) = (p.a(), p.k(), p.omega(), p.y_r());
    let (x, y) = (pt.x, pt.y);
    [
        -x + a * y * y - omega * y * (y - y_r),
        k * (x - a * y * y) + omega * x * (y - y_r),
    ]
}

/// Planar field governing backward dynamics on the escaping region,
/// f_e = -f_s. Exposed for saddle analysis; the forward integrator never
/// slides on the escaping region.
pub fn escaping_field(pt: &SigmaPoint, p: &Params) -> [f64; 2] {
    let f = planar_sliding_field(pt, p);
    [-f[0], -f[1]]
}
