//! Bifurcation analysis of the sliding dynamics: the Hopf threshold and its
//! criticality, continuation of the unstable limit cycle by a reverse-time
//! Poincare map, location of the homoclinic connection at the two-fold
//! saddle by separatrix-gap bisection, and assembly of the two-parameter
//! bifurcation set with region labels 1..6.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filippov::{planar_sliding_field, SigmaPoint};
use crate::model::{f_minus, f_plus, Params, State};
use crate::ode::{integrate, Direction, EventFn, OdeOptions, RunOutcome};
use crate::singularities::{
    hopf_gain, jacobian_planar, stability_quantities, two_fold_point, StabilityQuantities,
};

/// Sign of the Lyapunov-type quantity at the Hopf threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criticality {
    Subcritical,
    Supercritical,
    Degenerate,
}

/// Hopf threshold data at a given load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfReport {
    pub k_h: f64,
    /// Determinant of the sliding Jacobian at k = k_H (must be positive for
    /// a genuine Hopf point).
    pub det_at_kh: f64,
    /// d Tr / dk at the threshold, -2 a y_r (nonzero crossing speed).
    pub transversality: f64,
    /// Andronov's focal quantity; positive means the bifurcating cycle is
    /// unstable (subcritical).
    pub sigma: f64,
    pub criticality: Criticality,
}

/// Evaluates the Hopf threshold at load `a`. Valid strictly between the
/// Bogdanov-Takens loads, where the determinant stays positive.
pub fn hopf_report(a: f64, omega: f64, y_r: f64) -> Result<HopfReport> {
    let bt_rad = omega * omega * y_r * y_r - 8.0;
    if bt_rad < 0.0 {
        return Err(Error::Degenerate(
            "Hopf analysis requires y_r >= 2 sqrt(2) / omega".to_string(),
        ));
    }
    let root = bt_rad.sqrt();
    let a_minus = (omega * y_r - root) / (4.0 * y_r);
    let a_plus = (omega * y_r + root) / (4.0 * y_r);
    if !(a > a_minus && a < a_plus) {
        return Err(Error::Degenerate(format!(
            "a = {a} outside the Hopf interval ({a_minus}, {a_plus})"
        )));
    }
    let k_h = hopf_gain(a, omega, y_r);
    let det_at_kh = omega * (-1.0 + omega * y_r * y_r * a - 2.0 * y_r * y_r * a * a) / (2.0 * a);
    if det_at_kh <= 0.0 {
        return Err(Error::Degenerate(format!(
            "determinant {det_at_kh} not positive at the Hopf gain"
        )));
    }
    let transversality = -2.0 * a * y_r;
    let sigma = hopf_sigma(a, k_h, omega, y_r);
    let criticality = if sigma.abs() <= 1e-9 {
        Criticality::Degenerate
    } else if sigma > 0.0 {
        Criticality::Subcritical
    } else {
        Criticality::Supercritical
    };
    Ok(HopfReport {
        k_h,
        det_at_kh,
        transversality,
        sigma,
        criticality,
    })
}

/// Focal quantity of the translated planar system, evaluated with k at the
/// Hopf gain. Only its sign is meaningful.
fn hopf_sigma(a: f64, k: f64, omega: f64, y_r: f64) -> f64 {
    let cube = (a * y_r * y_r * (omega - 2.0 * a) - 1.0).powi(3);
    let denom = y_r * (2.0 * a - omega) * (omega.powi(3) * cube / a.powi(3)).sqrt();
    let numer = 3.0
        * 2.0_f64.sqrt()
        * std::f64::consts::PI
        * omega
        * (-2.0 * a * a * k * k * y_r
            + a * (2.0 * k.powi(3) + k * k * omega * y_r + k - 2.0 * omega * y_r)
            + omega * (k + omega * y_r));
    -numer / denom
}

/// The unstable limit cycle of the sliding flow at a given gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    pub k: f64,
    /// Fixed point of the return map on the section {y = y_r, x > a y_r^2}.
    pub anchor: SigmaPoint,
    pub period: f64,
    /// max - min of x over one period.
    pub amplitude_x: f64,
    /// max - min of y over one period.
    pub amplitude_y: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Always unstable here: the cycle is born subcritical and found as an
    /// attractor of the reverse-time flow.
    pub unstable: bool,
}

const SECTION_RETURN_BUDGET: f64 = 2000.0;
const SECTION_SKIP_BUDGET: usize = 64;

fn planar_opts() -> OdeOptions {
    OdeOptions {
        rel_tol: 1e-10,
        abs_tol: 1e-12,
        event_tol: 1e-12,
        max_step: 0.5,
        ..OdeOptions::default()
    }
}

/// Integrates the planar sliding field from `start` until the orbit crosses
/// the section {y = y_r} at x > x_min. Reverse time when `reverse`.
/// Returns the crossing abscissa and the unsigned transit time.
fn section_return(
    p: &Params,
    start: [f64; 2],
    reverse: bool,
    x_min: f64,
    opts: &OdeOptions,
) -> Result<(f64, f64)> {
    let sign = if reverse { -1.0 } else { 1.0 };
    let rhs = move |_t: f64, y: &[f64; 2]| {
        let f = planar_sliding_field(&SigmaPoint::new(y[0], y[1]), p);
        [sign * f[0], sign * f[1]]
    };
    let y_r = p.y_r();
    let section = move |_t: f64, y: &[f64; 2]| y[1] - y_r;
    let events = [EventFn {
        g: &section,
        direction: Direction::Any,
    }];
    let mut t = 0.0;
    let mut y = start;
    for _ in 0..SECTION_SKIP_BUDGET {
        let outcome = integrate(&rhs, t, y, SECTION_RETURN_BUDGET, opts, &events, |_, s, _| {
            s[0].abs() < 1e6 && s[1].abs() < 1e6
        })?;
        match outcome {
            RunOutcome::Event { t: te, y: ye, .. } => {
                if ye[0] > x_min {
                    return Ok((ye[0], te));
                }
                t = te;
                y = ye;
            }
            RunOutcome::End { .. } => {
                return Err(Error::SectionMiss(format!(
                    "no section crossing with x > {x_min} within the time budget"
                )))
            }
            RunOutcome::Stopped { t: ts, .. } => {
                return Err(Error::SectionMiss(format!(
                    "orbit diverged before reaching the section (t = {ts})"
                )))
            }
        }
    }
    Err(Error::SectionMiss(
        "exceeded the crossing-skip budget".to_string(),
    ))
}

/// Forward-time Poincare return map on {y = y_r, x > a y_r^2}. Returns the
/// next crossing abscissa and the return time; useful for measuring the
/// cycle multiplier by finite differences.
pub fn poincare_return(p: &Params, x: f64) -> Result<(f64, f64)> {
    let x_q = p.a() * p.y_r() * p.y_r();
    section_return(p, [x, p.y_r()], false, x_q, &planar_opts())
}

/// Reverse-time return map on the same section. The subcritical cycle is
/// attracting in reverse time, which makes it reachable by iteration.
pub fn reverse_return(p: &Params, x: f64) -> Result<(f64, f64)> {
    let x_q = p.a() * p.y_r() * p.y_r();
    section_return(p, [x, p.y_r()], true, x_q, &planar_opts())
}

/// Locates the unstable limit cycle surrounding the operating point by
/// iterating the reverse-time return map from `guess` and polishing the
/// fixed point with a secant step, then sweeps one period forward for the
/// amplitude and the sliding-region containment check.
pub fn find_limit_cycle(p: &Params, guess: &SigmaPoint) -> Result<LimitCycle> {
    let (a, y_r) = (p.a(), p.y_r());
    let x_q = a * y_r * y_r;
    if (guess.y - y_r).abs() > 1e-9 * (1.0 + y_r.abs()) {
        return Err(Error::CycleNotFound(format!(
            "guess must sit on the section y = {y_r}"
        )));
    }
    if guess.x <= x_q {
        return Err(Error::CycleNotFound(format!(
            "guess abscissa {} not beyond the operating point x = {x_q}",
            guess.x
        )));
    }

    let collapse_tol = 1e-7 * (1.0 + x_q.abs());
    let fixed_tol = 1e-10 * (1.0 + x_q.abs());
    let map = |x: f64| reverse_return(p, x).map(|(xr, _)| xr);

    // Contraction phase.
    let mut x = guess.x;
    let mut prev: Option<(f64, f64)> = None;
    let mut converged = false;
    for _ in 0..60 {
        let xr = map(x).map_err(|e| match e {
            Error::SectionMiss(m) => {
                Error::CycleNotFound(format!("reverse orbit lost the section: {m}"))
            }
            other => other,
        })?;
        if xr <= x_q + collapse_tol {
            return Err(Error::CycleNotFound(
                "reverse iterates collapsed onto the operating point (no cycle)".to_string(),
            ));
        }
        prev = Some((x, xr - x));
        if (xr - x).abs() <= fixed_tol {
            x = xr;
            converged = true;
            break;
        }
        x = xr;
    }
    // Secant polish on g(x) = R(x) - x, useful when the reverse contraction
    // is slow just past the Hopf threshold.
    if !converged {
        let (mut x0, mut g0) = prev.unwrap();
        let mut x1 = x;
        let mut g1 = map(x1)? - x1;
        for _ in 0..60 {
            if g1.abs() <= fixed_tol {
                converged = true;
                break;
            }
            let dg = g1 - g0;
            if dg.abs() < 1e-300 {
                break;
            }
            let x2 = x1 - g1 * (x1 - x0) / dg;
            if !x2.is_finite() || x2 <= x_q + collapse_tol {
                break;
            }
            x0 = x1;
            g0 = g1;
            x1 = x2;
            g1 = map(x1)? - x1;
        }
        x = x1;
        if !converged && g1.abs() > 1e-7 * (1.0 + x.abs()) {
            return Err(Error::CycleNotFound(format!(
                "return-map residual {g1} did not converge"
            )));
        }
    }

    // A fixed point essentially on top of the operating point is the focus
    // itself, not a cycle.
    if x - x_q <= (100.0 * collapse_tol).max(1e-5 * (1.0 + x_q.abs())) {
        return Err(Error::CycleNotFound(
            "return-map fixed point coincides with the operating point".to_string(),
        ));
    }
    let anchor = SigmaPoint::new(x, y_r);

    // One forward loop back to the section: amplitude extraction, sliding
    // containment check, period and closure measurement.
    let rhs = |_t: f64, y: &[f64; 2]| planar_sliding_field(&SigmaPoint::new(y[0], y[1]), p);
    let section = |_t: f64, y: &[f64; 2]| y[1] - y_r;
    let events = [EventFn {
        g: &section,
        direction: Direction::Any,
    }];
    let mut x_range = (x, x);
    let mut y_range = (y_r, y_r);
    let mut violation: Option<(f64, f64)> = None;
    let mut t = 0.0;
    let mut y = [x, y_r];
    let (period, end) = loop {
        if t > SECTION_RETURN_BUDGET {
            return Err(Error::SectionMiss(
                "cycle sweep exceeded its time budget".to_string(),
            ));
        }
        let outcome = integrate(
            &rhs,
            t,
            y,
            SECTION_RETURN_BUDGET,
            &planar_opts(),
            &events,
            |_, s, _| {
                x_range = (x_range.0.min(s[0]), x_range.1.max(s[0]));
                y_range = (y_range.0.min(s[1]), y_range.1.max(s[1]));
                let st = State::new(s[0], s[1], 0.0);
                if f_plus(&st, p)[2] >= 0.0 || f_minus(&st, p)[2] <= 0.0 {
                    violation = Some((s[0], s[1]));
                    return false;
                }
                true
            },
        )?;
        if let Some((vx, vy)) = violation {
            return Err(Error::CycleTouchesBoundary { x: vx, y: vy });
        }
        match outcome {
            RunOutcome::Event { t: te, y: ye, .. } => {
                x_range = (x_range.0.min(ye[0]), x_range.1.max(ye[0]));
                if ye[0] > x_q {
                    break (te, ye);
                }
                t = te;
                y = ye;
            }
            RunOutcome::End { .. } | RunOutcome::Stopped { .. } => {
                return Err(Error::SectionMiss(
                    "cycle sweep lost the section".to_string(),
                ))
            }
        }
    };
    let closure = (end[0] - x).abs();
    if closure > 1e-4 * (1.0 + x.abs()) {
        return Err(Error::CycleNotFound(format!(
            "candidate orbit fails to close (gap {closure})"
        )));
    }

    Ok(LimitCycle {
        k: p.k(),
        anchor,
        period,
        amplitude_x: x_range.1 - x_range.0,
        amplitude_y: y_range.1 - y_range.0,
        x_range,
        y_range,
        unstable: true,
    })
}

/// Derivative of the forward return map at the cycle anchor, by central
/// finite differences. Magnitude above one certifies instability.
pub fn cycle_multiplier(p: &Params, cycle: &LimitCycle) -> Result<f64> {
    let h = 1e-6 * (1.0 + cycle.anchor.x.abs());
    let (xp, _) = poincare_return(p, cycle.anchor.x + h)?;
    let (xm, _) = poincare_return(p, cycle.anchor.x - h)?;
    Ok((xp - xm) / (2.0 * h))
}

/// 2x2 eigen pair of the planar Jacobian at the two-fold saddle.
struct SaddleFrame {
    point: [f64; 2],
    unstable_dir: [f64; 2],
    stable_dir: [f64; 2],
}

fn saddle_frame(p: &Params) -> Result<SaddleFrame> {
    let tf = two_fold_point(p)?;
    if p.k() <= p.a() * p.y_r() {
        return Err(Error::SaddleCondition(format!(
            "k = {} <= a y_r = {}: the two-fold projection is not a saddle",
            p.k(),
            p.a() * p.y_r()
        )));
    }
    if tf.y <= 0.0 {
        return Err(Error::SaddleCondition(format!(
            "two-fold height y_t = {} not positive",
            tf.y
        )));
    }
    let j = jacobian_planar(&SigmaPoint::new(tf.x, tf.y), p);
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = tr * tr - 4.0 * det;
    if det >= 0.0 || disc <= 0.0 {
        return Err(Error::SaddleCondition(format!(
            "determinant {det} not negative at the two-fold projection"
        )));
    }
    let root = disc.sqrt();
    let lambda_u = 0.5 * (tr + root);
    let lambda_s = 0.5 * (tr - root);
    let eigvec = |lambda: f64| -> [f64; 2] {
        // Pick the better-conditioned row of (J - lambda I).
        let v1 = [-j[0][1], j[0][0] - lambda];
        let v2 = [j[1][1] - lambda, -j[1][0]];
        let n1 = (v1[0] * v1[0] + v1[1] * v1[1]).sqrt();
        let n2 = (v2[0] * v2[0] + v2[1] * v2[1]).sqrt();
        let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
        [v[0] / n, v[1] / n]
    };
    // Orient both rays toward the operating point, the side the loop hugs.
    let q = [p.a() * p.y_r() * p.y_r(), p.y_r()];
    let orient = |mut v: [f64; 2]| {
        let dot = v[0] * (q[0] - tf.x) + v[1] * (q[1] - tf.y);
        if dot < 0.0 {
            v[0] = -v[0];
            v[1] = -v[1];
        }
        v
    };
    Ok(SaddleFrame {
        point: [tf.x, tf.y],
        unstable_dir: orient(eigvec(lambda_u)),
        stable_dir: orient(eigvec(lambda_s)),
    })
}

/// Signed separation, on the section {y = y_r, x > a y_r^2}, between the
/// forward continuation of the saddle's unstable separatrix and the backward
/// continuation of its stable separatrix. Zero at the homoclinic connection.
fn separatrix_gap(p: &Params, offset_scale: f64) -> Result<f64> {
    let frame = saddle_frame(p)?;
    let norm = (frame.point[0].powi(2) + frame.point[1].powi(2)).sqrt();
    let eps = offset_scale * (1.0 + norm);
    let x_q = p.a() * p.y_r() * p.y_r();
    let opts = planar_opts();
    let start_u = [
        frame.point[0] + eps * frame.unstable_dir[0],
        frame.point[1] + eps * frame.unstable_dir[1],
    ];
    let start_s = [
        frame.point[0] + eps * frame.stable_dir[0],
        frame.point[1] + eps * frame.stable_dir[1],
    ];
    let (x_u, _) = section_return(p, start_u, false, x_q, &opts)?;
    let (x_s, _) = section_return(p, start_s, true, x_q, &opts)?;
    Ok(x_u - x_s)
}

/// Relative scale of the separatrix seed offset along the saddle
/// eigenvectors.
pub const SEPARATRIX_OFFSET_SCALE: f64 = 1e-6;

/// Locates the gain at which the unstable cycle collides with the two-fold
/// saddle, by bisection on the separatrix gap over `bracket`. The result is
/// confirmed against a halved separatrix offset.
pub fn homoclinic_k(a: f64, omega: f64, y_r: f64, bracket: (f64, f64), tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("homoclinic tolerance must be positive"));
    }
    let (mut lo, mut hi) = bracket;
    if !(hi > lo) {
        return Err(Error::NoBracket { lo, hi });
    }
    let gap_at = |k: f64, scale: f64| -> Result<f64> {
        let p = Params::new(a, k, omega, y_r)?;
        separatrix_gap(&p, scale)
    };
    let g_lo = gap_at(lo, SEPARATRIX_OFFSET_SCALE)?;
    let g_hi = gap_at(hi, SEPARATRIX_OFFSET_SCALE)?;
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if (g_lo < 0.0) == (g_hi < 0.0) {
        return Err(Error::NoBracket { lo, hi });
    }
    let lo_negative = g_lo < 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let g_mid = gap_at(mid, SEPARATRIX_OFFSET_SCALE)?;
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if (g_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k_hc = 0.5 * (lo + hi);

    // Offset-insensitivity check: with the seed offset halved, the gap must
    // still change sign within a few tolerances of the located gain.
    let span = 5.0 * tol;
    let check_lo = gap_at(k_hc - span, 0.5 * SEPARATRIX_OFFSET_SCALE);
    let check_hi = gap_at(k_hc + span, 0.5 * SEPARATRIX_OFFSET_SCALE);
    match (check_lo, check_hi) {
        (Ok(gl), Ok(gh)) if (gl < 0.0) != (gh < 0.0) => {}
        _ => log::warn!(
            "homoclinic gain at a = {a} is sensitive to the separatrix offset near k = {k_hc}"
        ),
    }
    Ok(k_hc)
}

/// Homoclinic gain with an automatic bracket: scans the gain window above
/// the Hopf threshold for a sign change of the separatrix gap, then bisects.
pub fn homoclinic_k_auto(a: f64, omega: f64, y_r: f64, tol: f64) -> Result<f64> {
    let bracket = homoclinic_bracket_scan(a, omega, y_r)?;
    homoclinic_k(a, omega, y_r, bracket, tol)
}

/// Scans gains above the Hopf threshold for a sign change of the separatrix
/// gap; used to cold-start the continuation.
fn homoclinic_bracket_scan(a: f64, omega: f64, y_r: f64) -> Result<(f64, f64)> {
    let k_h = hopf_gain(a, omega, y_r);
    let upper = omega * y_r;
    let lo = k_h + 1e-4 * (upper - k_h);
    let hi = upper - 1e-4 * (upper - k_h);
    let n = 48;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let k = lo + (hi - lo) * i as f64 / n as f64;
        let p = match Params::new(a, k, omega, y_r) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let g = match separatrix_gap(&p, SEPARATRIX_OFFSET_SCALE) {
            Ok(g) => g,
            Err(_) => {
                prev = None;
                continue;
            }
        };
        if let Some((kp, gp)) = prev {
            if (gp < 0.0) != (g < 0.0) {
                return Ok((kp, k));
            }
        }
        prev = Some((k, g));
    }
    Err(Error::NoBracket { lo, hi })
}

/// A continuation failure at one load sample; recorded, not fatal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationFailure {
    pub a: f64,
    pub reason: String,
}

/// Region labels on a rectangular (a, k) grid, row-major in a.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionsGrid {
    pub a_min: f64,
    pub a_max: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub n_a: usize,
    pub n_k: usize,
    /// labels[i][j] is the region at (a_i, k_j); 0 marks unjudged points.
    pub labels: Vec<Vec<u8>>,
}

/// The curves organizing the (a, k) plane: the transcritical line k = a y_r,
/// the Hopf curve k_H(a), the node/focus curves k_-(a) and k_+(a), the
/// numerically continued homoclinic curve, and the two Bogdanov-Takens
/// points joining them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationSet {
    pub omega: f64,
    pub y_r: f64,
    pub transcritical: Vec<[f64; 2]>,
    pub hopf: Vec<[f64; 2]>,
    pub k_minus: Vec<[f64; 2]>,
    pub k_plus: Vec<[f64; 2]>,
    pub homoclinic: Vec<[f64; 2]>,
    pub bt_points: [[f64; 2]; 2],
    pub regions_grid: RegionsGrid,
    pub failures: Vec<ContinuationFailure>,
}

impl BifurcationSet {
    /// Homoclinic gain at load `a`, linearly interpolated along the
    /// continued polyline. None outside its coverage.
    pub fn homoclinic_at(&self, a: f64) -> Option<f64> {
        interpolate_polyline(&self.homoclinic, a)
    }

    /// Region label 1..6 at a parameter point, using the stored homoclinic
    /// curve for the region 5/6 split.
    pub fn region(&self, a: f64, k: f64) -> Option<u8> {
        let p = Params::new(a, k, self.omega, self.y_r).ok()?;
        Some(region_label(&p, self.homoclinic_at(a)))
    }
}

fn interpolate_polyline(poly: &[[f64; 2]], a: f64) -> Option<f64> {
    if poly.len() < 2 {
        return None;
    }
    for w in poly.windows(2) {
        let (a0, k0) = (w[0][0], w[0][1]);
        let (a1, k1) = (w[1][0], w[1][1]);
        if (a0 <= a && a <= a1) || (a1 <= a && a <= a0) {
            let t = if a1 == a0 { 0.0 } else { (a - a0) / (a1 - a0) };
            return Some(k0 + t * (k1 - k0));
        }
    }
    None
}

/// Region label from the closed-form stability quantities plus (for the
/// cycle region) the homoclinic gain at this load:
/// 1 pseudo-saddle, 2 unstable node, 3 unstable focus, 4 stable node,
/// 5 stable focus with the unstable cycle, 6 stable focus without it.
pub fn region_label(p: &Params, k_homoclinic: Option<f64>) -> u8 {
    let sq = stability_quantities(p);
    if p.k() < p.a() * p.y_r() {
        return 1;
    }
    if sq.delta > 0.0 {
        if sq.tr < 0.0 {
            4
        } else {
            2
        }
    } else if sq.tr >= 0.0 {
        3
    } else {
        match k_homoclinic {
            Some(k_hc) if p.k() < k_hc => 5,
            _ => 6,
        }
    }
}

/// Assembles the bifurcation set over `a_range` (defaults to the open
/// interval between the BT loads) with `resolution` continuation samples.
/// Homoclinic continuation failures at individual samples are recorded in
/// `failures` rather than aborting.
pub fn bifurcation_set(
    omega: f64,
    y_r: f64,
    a_range: Option<(f64, f64)>,
    resolution: usize,
) -> Result<BifurcationSet> {
    let probe = Params::new(0.5, 1.0, omega, y_r)?;
    let sq: StabilityQuantities = stability_quantities(&probe);
    let (a_bt_minus, a_bt_plus) = match (sq.a_minus, sq.a_plus) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => {
            return Err(Error::Degenerate(
                "bifurcation set requires y_r >= 2 sqrt(2) / omega (BT points must exist)"
                    .to_string(),
            ))
        }
    };
    let resolution = resolution.max(8);
    let pad = (a_bt_plus - a_bt_minus) / resolution as f64;
    let (a_lo, a_hi) = a_range.unwrap_or((a_bt_minus + pad, a_bt_plus - pad));
    if !(a_hi > a_lo) {
        return Err(Error::InvalidConfig("empty load range"));
    }

    let sample_a = |i: usize| a_lo + (a_hi - a_lo) * i as f64 / resolution as f64;

    // Analytic curves.
    let mut transcritical = Vec::with_capacity(resolution + 1);
    let mut hopf = Vec::new();
    let mut k_minus_curve = Vec::new();
    let mut k_plus_curve = Vec::new();
    for i in 0..=resolution {
        let a = sample_a(i);
        transcritical.push([a, a * y_r]);
        if a > a_bt_minus && a < a_bt_plus {
            hopf.push([a, hopf_gain(a, omega, y_r)]);
        }
        if a > 0.0 && a <= omega / 2.0 {
            if let Ok(p) = Params::new(a, 1.0, omega, y_r) {
                let sq = stability_quantities(&p);
                if let (Some(km), Some(kp)) = (sq.k_minus, sq.k_plus) {
                    k_minus_curve.push([a, km]);
                    k_plus_curve.push([a, kp]);
                }
            }
        }
    }

    // Homoclinic continuation, warm-starting each bracket from the last hit.
    let tol: f64 = 1e-4;
    let mut homoclinic = Vec::new();
    let mut failures = Vec::new();
    let mut last_k: Option<f64> = None;
    for i in 0..=resolution {
        let a = sample_a(i);
        if a <= a_bt_minus || a >= a_bt_plus {
            failures.push(ContinuationFailure {
                a,
                reason: format!(
                    "load outside the Bogdanov-Takens interval ({a_bt_minus:.6}, {a_bt_plus:.6}); no homoclinic connection"
                ),
            });
            continue;
        }
        let k_h = hopf_gain(a, omega, y_r);
        let upper = omega * y_r;
        let result = (|| -> Result<f64> {
            if let Some(k_prev) = last_k {
                let mut half_width = (5.0 * tol).max(0.01 * (k_prev - k_h).abs());
                for _ in 0..8 {
                    let lo = (k_prev - half_width).max(k_h + 1e-6);
                    let hi = (k_prev + half_width).min(upper - 1e-6);
                    match homoclinic_k(a, omega, y_r, (lo, hi), tol) {
                        Ok(k) => return Ok(k),
                        Err(Error::NoBracket { .. }) => half_width *= 2.0,
                        Err(e) => return Err(e),
                    }
                }
            }
            homoclinic_k_auto(a, omega, y_r, tol)
        })();
        match result {
            Ok(k) => {
                homoclinic.push([a, k]);
                last_k = Some(k);
            }
            Err(e) => {
                failures.push(ContinuationFailure {
                    a,
                    reason: e.to_string(),
                });
                last_k = None;
            }
        }
    }

    // Region grid over the requested loads and a gain window covering all
    // six regions.
    let n_a = resolution.min(120) + 1;
    let n_k = resolution.min(120) + 1;
    let k_lo_grid = 1e-3;
    let k_hi_grid = 1.1 * omega * y_r;
    let mut labels = Vec::with_capacity(n_a);
    for i in 0..n_a {
        let a = a_lo + (a_hi - a_lo) * i as f64 / (n_a - 1) as f64;
        let k_hc = interpolate_polyline(&homoclinic, a);
        let mut row = Vec::with_capacity(n_k);
        for j in 0..n_k {
            let k = k_lo_grid + (k_hi_grid - k_lo_grid) * j as f64 / (n_k - 1) as f64;
            let label = Params::new(a, k, omega, y_r)
                .map(|p| region_label(&p, k_hc))
                .unwrap_or(0);
            row.push(label);
        }
        labels.push(row);
    }

    Ok(BifurcationSet {
        omega,
        y_r,
        transcritical,
        hopf,
        k_minus: k_minus_curve,
        k_plus: k_plus_curve,
        homoclinic,
        bt_points: [[a_bt_minus, y_r * a_bt_minus], [a_bt_plus, y_r * a_bt_plus]],
        regions_grid: RegionsGrid {
            a_min: a_lo,
            a_max: a_hi,
            k_min: k_lo_grid,
            k_max: k_hi_grid,
            n_a,
            n_k,
            labels,
        },
        failures,
    })
}

/// One gain sample of the single-parameter diagram sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramRecord {
    pub k: f64,
    pub q: [f64; 3],
    pub q_kind: String,
    /// Two-fold location, when defined.
    pub two_fold: Option<[f64; 2]>,
    pub cycle: Option<LimitCycle>,
}

/// One self-contained sample of the diagram sweep. Independent of its
/// neighbours, so sweeps can be evaluated in any order or in parallel
/// without changing the result.
pub fn diagram_record(a: f64, omega: f64, y_r: f64, k: f64) -> Option<DiagramRecord> {
    let p = Params::new(a, k, omega, y_r).ok()?;
    let x_q = a * y_r * y_r;
    let q = crate::singularities::pseudo_equilibrium(&p);
    let tf = two_fold_point(&p).ok().map(|t| [t.x, t.y]);
    let cycle = find_cycle_with_guesses(&p, x_q, None);
    Some(DiagramRecord {
        k,
        q: [q.location.x, q.location.y, q.location.z],
        q_kind: q.kind.to_string(),
        two_fold: tf,
        cycle,
    })
}

/// Gains sampled by a sweep of the given range and resolution.
pub fn sweep_gains(k_range: (f64, f64), resolution: usize) -> Vec<f64> {
    (0..resolution)
        .map(|i| k_range.0 + (k_range.1 - k_range.0) * i as f64 / (resolution - 1) as f64)
        .collect()
}

/// Sweeps the gain at fixed load, recording the operating point, the
/// two-fold branch and the cycle amplitude where the cycle exists.
pub fn diagram_sweep(
    a: f64,
    omega: f64,
    y_r: f64,
    k_range: (f64, f64),
    resolution: usize,
) -> Result<Vec<DiagramRecord>> {
    if !(k_range.1 > k_range.0) || resolution < 2 {
        return Err(Error::InvalidConfig("invalid gain range or resolution"));
    }
    Ok(sweep_gains(k_range, resolution)
        .into_iter()
        .filter_map(|k| diagram_record(a, omega, y_r, k))
        .collect())
}

/// Tries a warm-started guess first, then a ladder of cold guesses between
/// the operating point and the two-fold abscissa.
pub fn find_cycle_with_guesses(p: &Params, x_q: f64, warm: Option<f64>) -> Option<LimitCycle> {
    let y_r = p.y_r();
    let scale = match two_fold_point(p) {
        Ok(tf) if tf.x > x_q => tf.x - x_q,
        _ => 1.0 + 0.5 * x_q,
    };
    let mut guesses = Vec::new();
    if let Some(x) = warm {
        if x > x_q {
            guesses.push(x);
        }
    }
    for frac in [0.3, 0.6, 0.1, 0.9, 1.3] {
        guesses.push(x_q + frac * scale);
    }
    for g in guesses {
        if let Ok(c) = find_limit_cycle(p, &SigmaPoint::new(g, y_r)) {
            return Some(c);
        }
    }
    None
}

/// Writes diagram records as CSV. Absent cycle fields are left empty.
pub fn write_diagram_csv<W: Write>(records: &[DiagramRecord], mut w: W) -> Result<()> {
    writeln!(
        w,
        "k,q_x,q_y,q_kind,pt_x,pt_y,cycle_amp_x,cycle_amp_y,cycle_x_min,cycle_x_max,cycle_y_min,cycle_y_max,cycle_period"
    )?;
    let num = |v: f64| format!("{v:.16e}");
    for r in records {
        let (pt_x, pt_y) = match r.two_fold {
            Some([x, y]) => (num(x), num(y)),
            None => (String::new(), String::new()),
        };
        let cycle_cols = match &r.cycle {
            Some(c) => vec![
                num(c.amplitude_x),
                num(c.amplitude_y),
                num(c.x_range.0),
                num(c.x_range.1),
                num(c.y_range.0),
                num(c.y_range.1),
                num(c.period),
            ],
            None => vec![String::new(); 7],
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            num(r.k),
            num(r.q[0]),
            num(r.q[1]),
            r.q_kind,
            pt_x,
            pt_y,
            cycle_cols.join(",")
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn hopf_report_frozen_values() {
        let r = hopf_report(0.2, 1.0, 4.0).unwrap();
        assert_abs_diff_eq!(r.k_h, 1.375, epsilon = 1e-14);
        assert_abs_diff_eq!(r.det_at_kh, 2.3, epsilon = 1e-12);
        assert_abs_diff_eq!(r.transversality, -1.6, epsilon = 1e-14);
        assert!(r.sigma > 0.0);
        assert_eq!(r.criticality, Criticality::Subcritical);
    }

    #[test]
    fn hopf_rejected_outside_interval() {
        let a_minus = (4.0 - 8.0_f64.sqrt()) / 16.0;
        assert!(hopf_report(a_minus, 1.0, 4.0).is_err());
        assert!(hopf_report(0.5, 1.0, 4.0).is_err());
        assert!(hopf_report(0.2, 1.0, 2.0).is_err());
    }

    #[test]
    fn subcritical_across_the_hopf_interval() {
        for a in [0.1, 0.2, 0.3, 0.4] {
            let r = hopf_report(a, 1.0, 4.0).unwrap();
            assert!(r.sigma > 0.0, "sigma at a = {a} was {}", r.sigma);
        }
    }

    #[test]
    fn hopf_eigenvalues_cross_with_the_stated_speed() {
        // Real part of the planar eigenvalues flips sign across k_H with
        // derivative tr'(k)/2 = -a y_r.
        let (a, omega, y_r) = (0.2, 1.0, 4.0);
        let r = hopf_report(a, omega, y_r).unwrap();
        let real_part = |k: f64| {
            let sq = stability_quantities(&Params::new(a, k, omega, y_r).unwrap());
            assert!(sq.delta < 0.0);
            sq.tr / 2.0
        };
        let w = 1e-6;
        let below = real_part(r.k_h - w);
        let above = real_part(r.k_h + w);
        assert!(below > 0.0 && above < 0.0);
        assert_relative_eq!(
            (above - below) / (2.0 * w),
            r.transversality / 2.0,
            max_relative = 1e-6
        );
    }

    #[test]
    fn limit_cycle_exists_at_the_reference_gain() {
        let p = Params::new(0.2, 1.5, 1.0, 4.0).unwrap();
        let c = find_limit_cycle(&p, &SigmaPoint::new(3.8, 4.0)).unwrap();
        assert!(c.unstable);
        assert!(c.anchor.x > 3.2);
        assert!(c.amplitude_x > 0.0 && c.amplitude_y > 0.0);
        assert!(c.period > 0.0);
        // The anchor is a fixed point of the forward return map too.
        let (xr, _) = poincare_return(&p, c.anchor.x).unwrap();
        assert_relative_eq!(xr, c.anchor.x, max_relative = 1e-6);
    }

    #[test]
    fn limit_cycle_absent_below_hopf() {
        let p = Params::new(0.2, 1.374, 1.0, 4.0).unwrap();
        assert!(matches!(
            find_limit_cycle(&p, &SigmaPoint::new(3.5, 4.0)),
            Err(Error::CycleNotFound(_))
        ));
    }

    #[test]
    fn cycle_amplitude_grows_from_the_hopf_point() {
        let amp = |k: f64| {
            let p = Params::new(0.2, k, 1.0, 4.0).unwrap();
            find_cycle_with_guesses(&p, 3.2, None)
                .map(|c| c.amplitude_y)
                .unwrap_or(f64::NAN)
        };
        let a_near = amp(1.376);
        let a_far = amp(1.45);
        assert!(a_near.is_finite() && a_far.is_finite());
        assert!(a_near < a_far, "{a_near} !< {a_far}");
    }

    #[test]
    fn cycle_unique_from_distinct_guesses() {
        let p = Params::new(0.2, 1.5, 1.0, 4.0).unwrap();
        let c1 = find_limit_cycle(&p, &SigmaPoint::new(3.5, 4.0)).unwrap();
        let c2 = find_limit_cycle(&p, &SigmaPoint::new(4.25, 4.0)).unwrap();
        assert_abs_diff_eq!(c1.anchor.x, c2.anchor.x, epsilon = 1e-6);
    }

    #[test]
    fn cycle_is_unstable_by_return_map_derivative() {
        let p = Params::new(0.2, 1.5, 1.0, 4.0).unwrap();
        let c = find_limit_cycle(&p, &SigmaPoint::new(3.8, 4.0)).unwrap();
        let m = cycle_multiplier(&p, &c).unwrap();
        assert!(m.abs() > 1.0, "multiplier {m}");
    }

    #[test]
    fn homoclinic_gain_near_the_reference_value() {
        let k = homoclinic_k(0.2, 1.0, 4.0, (1.45, 1.68), 1e-4).unwrap();
        assert!((k - 1.573).abs() <= 0.005, "k_hc = {k}");
        // Simple-loop certificate at the connection.
        let sigma0 = crate::singularities::two_fold_saddle_trace(
            &Params::new(0.2, k, 1.0, 4.0).unwrap(),
        )
        .unwrap();
        assert!(sigma0.abs() > 1e-3);
        assert_relative_eq!(sigma0, 1.863, max_relative = 2e-2);
    }

    #[test]
    fn cycle_exists_below_and_vanishes_above_the_homoclinic_gain() {
        let k_hc = homoclinic_k(0.2, 1.0, 4.0, (1.45, 1.68), 1e-4).unwrap();
        let below = Params::new(0.2, k_hc - 0.02, 1.0, 4.0).unwrap();
        assert!(find_cycle_with_guesses(&below, 3.2, None).is_some());
        let above = Params::new(0.2, k_hc + 0.02, 1.0, 4.0).unwrap();
        assert!(find_cycle_with_guesses(&above, 3.2, None).is_none());
    }

    #[test]
    fn saddle_condition_violations_are_reported() {
        assert!(matches!(
            homoclinic_k(0.2, 1.0, 4.0, (0.3, 0.5), 1e-4),
            Err(Error::SaddleCondition(_))
        ));
    }

    #[test]
    fn region_labels_frozen_examples() {
        let k_hc = Some(1.573);
        let label = |a: f64, k: f64| {
            region_label(&Params::new(a, k, 1.0, 4.0).unwrap(), k_hc)
        };
        assert_eq!(label(0.2, 1.5), 5);
        assert_eq!(label(0.2, 1.6), 6);
        assert_eq!(label(0.2, 0.5), 1);
        assert_eq!(label(0.2, 0.83), 2);
        assert_eq!(label(0.2, 1.0), 3);
        assert_eq!(label(0.6, 3.0), 4);
    }

    #[test]
    fn diagram_sweep_reproduces_branch_structure() {
        let records = diagram_sweep(0.2, 1.0, 4.0, (1.3, 1.7), 21).unwrap();
        for r in &records {
            assert_abs_diff_eq!(r.q[0], 3.2, epsilon = 1e-12);
            assert_abs_diff_eq!(r.q[1], 4.0, epsilon = 1e-12);
        }
        // Two-fold branch value at k = 1.375 from the sweep grid: k grid
        // includes 1.3 + 0.02 * i; i = 4 gives 1.38, so check directly.
        let p = Params::new(0.2, 1.375, 1.0, 4.0).unwrap();
        let tf = two_fold_point(&p).unwrap();
        assert_abs_diff_eq!(tf.y, 3.28125, epsilon = 1e-12);
        assert_abs_diff_eq!(tf.x, 4.51171875, epsilon = 1e-12);
        // Cycle present strictly inside the window, absent outside.
        for r in &records {
            let inside = r.k > 1.38 && r.k < 1.56;
            let outside = r.k < 1.37 || r.k > 1.59;
            if inside {
                assert!(r.cycle.is_some(), "missing cycle at k = {}", r.k);
            }
            if outside {
                assert!(r.cycle.is_none(), "spurious cycle at k = {}", r.k);
            }
        }
    }

    #[test]
    fn diagram_csv_is_well_formed() {
        let records = diagram_sweep(0.2, 1.0, 4.0, (1.3, 1.45, ), 6).unwrap();
        let mut buf = Vec::new();
        write_diagram_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("k,q_x,q_y,q_kind"));
        for line in lines {
            assert_eq!(line.split(',').count(), 13);
        }
    }
}
