//! Closed-form tangency and equilibrium analysis: the tangency lines of the
//! two smooth fields, the cusp point, the two-fold (double tangency) point
//! with its visibility classification, the pseudo-equilibrium and the
//! stability quantities that organize the two-parameter bifurcation set.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filippov::{planar_sliding_field, SigmaPoint};
use crate::model::{Params, State};

/// Relative scale of the tolerance band around classification boundaries.
const BOUNDARY_REL_TOL: f64 = 1e-9;

/// Tolerance used when deciding whether (a, k) sits on a classification
/// boundary curve.
pub fn boundary_tol(p: &Params) -> f64 {
    BOUNDARY_REL_TOL * (1.0 + p.a().abs() + p.k().abs())
}

/// The tangency line of the upper field on the manifold,
/// x = slope * y + intercept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSPlus {
    pub slope: f64,
    pub intercept: f64,
}

impl LineSPlus {
    pub fn x_at(&self, y: f64) -> f64 {
        self.slope * y + self.intercept
    }
}

/// Tangency sets of the two fields. `s_minus` is the height of the
/// horizontal line y = (k - omega y_r)/(a - omega), undefined when a = omega.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencyLines {
    pub s_plus: LineSPlus,
    pub s_minus: Option<f64>,
}

/// Tangency lines for a parameter set: S+ is x = (a + k - omega) y - k +
/// omega y_r and S- is y = (k - omega y_r)/(a - omega).
pub fn tangency_lines(p: &Params) -> TangencyLines {
    let (a, k, omega, y_r) = (p.a(), p.k(), p.omega(), p.y_r());
    let s_minus = if (a - omega).abs() <= boundary_tol(p) {
        None
    } else {
        Some((k - omega * y_r) / (a - omega))
    };
    TangencyLines {
        s_plus: LineSPlus {
            slope: a + k - omega,
            intercept: -k + omega * y_r,
        },
        s_minus,
    }
}

/// Cubic tangency point of the upper field, the branch point that splits S+
/// into a visible and an invisible fold branch (visible for y < y_c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspPoint {
    pub x: f64,
    pub y: f64,
}

/// Closed form of the cusp point of the upper field.
pub fn cusp_point(p: &Params) -> Result<CuspPoint> {
    let (a, k, omega, y_r) = (p.a(), p.k(), p.omega(), p.y_r());
    let denom = (a + k - omega) * (k - omega) + 1.0;
    if denom.abs() <= boundary_tol(p) {
        return Err(Error::Degenerate(format!(
            "cusp denominator (a+k-omega)(k-omega)+1 = {denom} vanishes"
        )));
    }
    Ok(CuspPoint {
        x: (omega * (y_r - 1.0) + a * (1.0 + (a + k - omega) * (k - omega * y_r))) / denom,
        y: ((a + k - omega) * (k - omega * y_r) + 1.0) / denom,
    })
}

/// Whether a fold's tangent orbit stays on its own side of the manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Visibility {
    Visible,
    Invisible,
}

/// Kind of the double tangency point. The first label is the fold visibility
/// of the lower field, the second that of the upper field; the fold-cusp
/// variants arise on a = a_c(k), where the upper-field fold degenerates to a
/// cusp and the label carries the lower fold's visibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwoFoldKind {
    VisibleVisible,
    VisibleInvisible,
    InvisibleInvisible,
    InvisibleVisible,
    VisibleFoldCusp,
    InvisibleFoldCusp,
}

impl fmt::Display for TwoFoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TwoFoldKind::VisibleVisible => "visible-visible",
            TwoFoldKind::VisibleInvisible => "visible-invisible",
            TwoFoldKind::InvisibleInvisible => "invisible-invisible",
            TwoFoldKind::InvisibleVisible => "invisible-visible",
            TwoFoldKind::VisibleFoldCusp => "visible-fold-cusp",
            TwoFoldKind::InvisibleFoldCusp => "invisible-fold-cusp",
        };
        f.write_str(s)
    }
}

/// The double tangency point S+ intersect S-.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoFoldPoint {
    pub x: f64,
    pub y: f64,
    pub kind: TwoFoldKind,
    /// Physical feasibility flag: x > 0. Locations with x <= 0 are reported,
    /// not rejected.
    pub physical: bool,
}

/// Critical load value a_c(k) at which the two-fold degenerates into a
/// fold-cusp (the upper field's second Lie derivative vanishes there).
pub fn a_c(k: f64, p: &Params) -> Result<f64> {
    let (omega, y_r) = (p.omega(), p.y_r());
    let m = k - omega * y_r;
    if m.abs() <= BOUNDARY_REL_TOL * (1.0 + k.abs()) {
        return Err(Error::Degenerate(
            "a_c undefined at k = omega * y_r".to_string(),
        ));
    }
    let radicand = 1.0 + m * (2.0 * omega + (4.0 + (omega - 2.0 * k).powi(2)) * m);
    if radicand < 0.0 {
        return Err(Error::Degenerate(format!(
            "a_c radicand {radicand} negative at k = {k}"
        )));
    }
    Ok((-1.0 + omega * m + radicand.sqrt()) / (2.0 * m))
}

/// Second Lie derivative of the upper field at the two-fold location,
/// deciding that fold's visibility (visible iff positive).
fn l2_plus_at_two_fold(p: &Params, y_t: f64) -> f64 {
    let (a, k, omega) = (p.a(), p.k(), p.omega());
    1.0 + y_t * ((omega - a - k) * (k - a) - 1.0)
}

/// Locates and classifies the double tangency point per the parameter-plane
/// rules built on a_c(k). Outside the physically covered quadrants (where
/// the location has x <= 0) the kind falls back to the direct second-Lie-
/// derivative signs.
pub fn two_fold_point(p: &Params) -> Result<TwoFoldPoint> {
    let (a, k, omega, y_r) = (p.a(), p.k(), p.omega(), p.y_r());
    let tol = boundary_tol(p);
    if (a - omega).abs() <= tol {
        return Err(Error::Degenerate(
            "two-fold undefined at a = omega (S- line undefined)".to_string(),
        ));
    }
    if (k - omega * y_r).abs() <= tol {
        return Err(Error::Degenerate(
            "two-fold degenerate at k = omega * y_r".to_string(),
        ));
    }
    let y_t = (k - omega * y_r) / (a - omega);
    let x_t = k * y_t;
    let below = k < omega * y_r;
    let covered = (below && a < omega) || (!below && a > omega);
    let kind = if covered {
        let ac = a_c(k, p)?;
        if (a - ac).abs() <= tol {
            if below {
                TwoFoldKind::VisibleFoldCusp
            } else {
                TwoFoldKind::InvisibleFoldCusp
            }
        } else {
            match (below, a < ac) {
                (true, true) => TwoFoldKind::VisibleVisible,
                (true, false) => TwoFoldKind::VisibleInvisible,
                (false, true) => TwoFoldKind::InvisibleInvisible,
                (false, false) => TwoFoldKind::InvisibleVisible,
            }
        }
    } else {
        // x_t <= 0 here; classify by the Lie-derivative signs directly.
        let l2p = l2_plus_at_two_fold(p, y_t);
        let l2m = a * (k - omega * y_r);
        let plus = if l2p > 0.0 {
            Visibility::Visible
        } else {
            Visibility::Invisible
        };
        let minus = if l2m < 0.0 {
            Visibility::Visible
        } else {
            Visibility::Invisible
        };
        match (minus, plus) {
            (Visibility::Visible, Visibility::Visible) => TwoFoldKind::VisibleVisible,
            (Visibility::Visible, Visibility::Invisible) => TwoFoldKind::VisibleInvisible,
            (Visibility::Invisible, Visibility::Invisible) => TwoFoldKind::InvisibleInvisible,
            (Visibility::Invisible, Visibility::Visible) => TwoFoldKind::InvisibleVisible,
        }
    };
    Ok(TwoFoldPoint {
        x: x_t,
        y: y_t,
        kind,
        physical: x_t > 0.0,
    })
}

/// Where the pseudo-equilibrium sits relative to the sliding region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaRegion {
    Sliding,
    Escaping,
    /// k = a y_r: the pseudo-equilibrium coincides with the two-fold point.
    OnTangency,
}

/// Local type of the pseudo-equilibrium, following the sliding-field
/// Jacobian's determinant, trace and discriminant. `Boundary` flags
/// parameter points within tolerance of a classification curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    PseudoSaddle,
    StablePseudoNode,
    UnstablePseudoNode,
    StablePseudoFocus,
    UnstablePseudoFocus,
    Boundary,
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EquilibriumKind::PseudoSaddle => "pseudo-saddle",
            EquilibriumKind::StablePseudoNode => "stable pseudo-node",
            EquilibriumKind::UnstablePseudoNode => "unstable pseudo-node",
            EquilibriumKind::StablePseudoFocus => "stable pseudo-focus",
            EquilibriumKind::UnstablePseudoFocus => "unstable pseudo-focus",
            EquilibriumKind::Boundary => "boundary",
        };
        f.write_str(s)
    }
}

/// The operating point q = (a y_r^2, y_r, 0) with its region and local type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoEquilibrium {
    pub location: State,
    pub region: SigmaRegion,
    pub kind: EquilibriumKind,
}

/// Determinant, trace and discriminant of the sliding-field Jacobian at the
/// operating point, together with the organizing thresholds: the Hopf gain
/// k_H, the node/focus gains k_-, k_+ (present only for a <= omega/2) and
/// the Bogdanov-Takens loads a_-, a_+ (present only for y_r >= 2 sqrt(2) /
/// omega).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityQuantities {
    pub det: f64,
    pub tr: f64,
    pub delta: f64,
    pub k_h: f64,
    pub k_minus: Option<f64>,
    pub k_plus: Option<f64>,
    pub a_minus: Option<f64>,
    pub a_plus: Option<f64>,
}

pub fn stability_quantities(p: &Params) -> StabilityQuantities {
    let (a, k, omega, y_r) = (p.a(), p.k(), p.omega(), p.y_r());
    let det = omega * y_r * (k - a * y_r);
    let tr = -1.0 + a * y_r * (omega * y_r - 2.0 * k);
    let delta = tr * tr - 4.0 * det;
    let k_h = (a * omega * y_r * y_r - 1.0) / (2.0 * a * y_r);
    let (k_minus, k_plus) = if a <= omega / 2.0 {
        let rad = omega * (1.0 + 2.0 * a * a * y_r * y_r) * (omega - 2.0 * a);
        let root = rad.max(0.0).sqrt();
        let denom = 2.0 * a * a * y_r;
        (Some(k_h + (omega - root) / denom), Some(k_h + (omega + root) / denom))
    } else {
        (None, None)
    };
    let bt_rad = omega * omega * y_r * y_r - 8.0;
    let (a_minus, a_plus) = if bt_rad >= 0.0 {
        let root = bt_rad.sqrt();
        (
            Some((omega * y_r - root) / (4.0 * y_r)),
            Some((omega * y_r + root) / (4.0 * y_r)),
        )
    } else {
        (None, None)
    };
    StabilityQuantities {
        det,
        tr,
        delta,
        k_h,
        k_minus,
        k_plus,
        a_minus,
        a_plus,
    }
}

/// Hopf gain k_H(a) for the given omega and y_r.
pub fn hopf_gain(a: f64, omega: f64, y_r: f64) -> f64 {
    (a * omega * y_r * y_r - 1.0) / (2.0 * a * y_r)
}

/// Exact Jacobian of the planar normalized sliding field at an arbitrary
/// manifold point.
pub fn jacobian_planar(pt: &SigmaPoint, p: &Params) -> [[f64; 2]; 2] {
    let (a, k, omega, y_r) = (p.a(), p.k(), p.omega(), p.y_r());
    let (x, y) = (pt.x, pt.y);
    [
        [-1.0, (2.0 * a - 2.0 * omega) * y + omega * y_r],
        [k + omega * (y - y_r), -2.0 * k * a * y + omega * x],
    ]
}

/// True when (a, k) lies within `tol` of a classification boundary of the
/// equilibrium table: the transcritical line k = a y_r, the Hopf line
/// k = k_H, a node/focus line k = k_-, k_+, or a Bogdanov-Takens load a_-,
/// a_+.
fn near_classification_boundary(p: &Params, sq: &StabilityQuantities, tol: f64) -> bool {
    let (a, k, y_r) = (p.a(), p.k(), p.y_r());
    if (k - a * y_r).abs() <= tol {
        return true;
    }
    if k > a * y_r && (k - sq.k_h).abs() <= tol {
        return true;
    }
    for candidate in [sq.k_minus, sq.k_plus] {
        if let Some(kc) = candidate {
            if (k - kc).abs() <= tol {
                return true;
            }
        }
    }
    for candidate in [sq.a_minus, sq.a_plus] {
        if let Some(ac) = candidate {
            if (a - ac).abs() <= tol {
                return true;
            }
        }
    }
    false
}

/// Classifies the operating point from the closed-form determinant, trace
/// and discriminant, flagging boundary-adjacent parameter points.
pub fn classify_equilibrium(p: &Params, tol: f64) -> EquilibriumKind {
    let sq = stability_quantities(p);
    if near_classification_boundary(p, &sq, tol) {
        return EquilibriumKind::Boundary;
    }
    if sq.det < 0.0 {
        return EquilibriumKind::PseudoSaddle;
    }
    match (sq.delta > 0.0, sq.tr < 0.0) {
        (true, true) => EquilibriumKind::StablePseudoNode,
        (true, false) => EquilibriumKind::UnstablePseudoNode,
        (false, true) => EquilibriumKind::StablePseudoFocus,
        (false, false) => EquilibriumKind::UnstablePseudoFocus,
    }
}

/// The pseudo-equilibrium q = (a y_r^2, y_r, 0): the washout filter makes
/// the regulated height y_r independent of the load a.
pub fn pseudo_equilibrium(p: &Params) -> PseudoEquilibrium {
    let (a, k, y_r) = (p.a(), p.k(), p.y_r());
    let location = State::new(a * y_r * y_r, y_r, 0.0);
    let tol = boundary_tol(p);
    let region = if (k - a * y_r).abs() <= tol {
        SigmaRegion::OnTangency
    } else if k > a * y_r {
        SigmaRegion::Sliding
    } else {
        SigmaRegion::Escaping
    };
    PseudoEquilibrium {
        location,
        region,
        kind: classify_equilibrium(p, tol),
    }
}

/// Trace of the planar Jacobian at the two-fold projection; a nonzero value
/// certifies that a saddle loop through that point is simple.
pub fn two_fold_saddle_trace(p: &Params) -> Result<f64> {
    let (a, k, omega, y_r) = (p.a(), p.k(), p.omega(), p.y_r());
    if (a - omega).abs() <= boundary_tol(p) {
        return Err(Error::Degenerate(
            "two-fold trace undefined at a = omega".to_string(),
        ));
    }
    Ok(k * (2.0 * a - omega) * (omega * y_r - k) / (a - omega) - 1.0)
}

/// Planar-field value at the projection of the pseudo-equilibrium; exposed
/// for sanity checks (must vanish identically).
pub fn planar_residual_at_equilibrium(p: &Params) -> [f64; 2] {
    let q = pseudo_equilibrium(p);
    planar_sliding_field(&SigmaPoint::new(q.location.x, q.location.y), p)
}
