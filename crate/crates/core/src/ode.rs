//! Internal ODE engine: Dormand-Prince 5(4) with continuous (dense) output
//! and event localization by bracketing plus safeguarded root polishing.
//!
//! Supports both time directions; all arithmetic is deterministic, so
//! identical inputs produce bit-identical trajectories.

use crate::error::{Error, Result};

/// Butcher tableau of the Dormand-Prince 5(4) pair.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

/// Difference between the 5th- and 4th-order weights (error estimator).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Coefficients of the 4th-order continuous extension.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Magnitude used when an event function is considered to sit at zero.
    pub event_tol: f64,
    /// Upper bound on |h|.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            event_tol: 1e-10,
            max_step: 1.0,
            max_steps: 2_000_000,
        }
    }
}

/// Crossing direction an event watches for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Rising,
    Falling,
    Any,
}

impl Direction {
    fn matches(self, from_negative: bool) -> bool {
        match self {
            Direction::Rising => from_negative,
            Direction::Falling => !from_negative,
            Direction::Any => true,
        }
    }
}

/// One accepted step with everything needed to interpolate inside it.
#[derive(Debug, Clone)]
pub(crate) struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    /// Value at t0 + theta h, theta in [0, 1].
    pub fn eval(&self, theta: f64) -> [f64; N] {
        let s = theta;
        let s1 = 1.0 - s;
        let mut y = [0.0; N];
        for i in 0..N {
            let c = &self.cont;
            y[i] = c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])));
        }
        y
    }
}

/// Result of driving the integrator until something halts it.
#[derive(Debug, Clone)]
pub(crate) enum RunOutcome<const N: usize> {
    /// Event `index` fired at (t, y).
    Event { index: usize, t: f64, y: [f64; N] },
    /// Reached the requested end time.
    End { t: f64, y: [f64; N] },
    /// The per-step callback requested a stop.
    Stopped { t: f64, y: [f64; N] },
}

pub(crate) struct EventFn<'a, const N: usize> {
    pub g: &'a dyn Fn(f64, &[f64; N]) -> f64,
    pub direction: Direction,
}

/// Integrates y' = f(t, y) from (t0, y0) toward t_end (either direction),
/// watching the supplied event functions. `on_step` receives every accepted
/// step endpoint and may stop the run by returning `false`; it is not called
/// for the event point itself (the outcome carries it).
pub(crate) fn integrate<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    events: &[EventFn<'_, N>],
    mut on_step: impl FnMut(f64, &[f64; N], &DenseStep<N>) -> bool,
) -> Result<RunOutcome<N>> {
    let sign = if t_end >= t0 { 1.0 } else { -1.0 };
    if (t_end - t0).abs() == 0.0 {
        return Ok(RunOutcome::End { t: t0, y: y0 });
    }
    let mut t = t0;
    let mut y = y0;
    let mut dy = f(t, &y);
    let mut h = initial_step(f, t, &y, &dy, sign, t_end, opts);

    // Sign of each event function as the orbit leaves the current point;
    // None until the first sample with magnitude above the noise floor.
    let mut armed: Vec<Option<bool>> = events
        .iter()
        .map(|ev| {
            let g = (ev.g)(t, &y);
            if g.abs() > 0.0 {
                Some(g < 0.0)
            } else {
                None
            }
        })
        .collect();

    for _ in 0..opts.max_steps {
        let remaining = t_end - t;
        if remaining * sign <= 0.0 {
            return Ok(RunOutcome::End { t, y });
        }
        if h.abs() > remaining.abs() {
            h = remaining;
        }
        if h.abs() <= t.abs() * f64::EPSILON * 4.0 + f64::MIN_POSITIVE * 1e10 {
            return Err(Error::StepSizeUnderflow { t });
        }

        let mut k = [[0.0; N]; 7];
        k[0] = dy;
        for stage in 0..6 {
            let mut ys = y;
            for j in 0..=stage {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * k[j][i];
                    }
                }
            }
            k[stage + 1] = f(t + C[stage] * h, &ys);
        }
        let y1 = {
            // Stage 7 coefficients are the 5th-order weights (FSAL).
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(6) {
                let a = A[5][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            ys
        };

        // Weighted RMS error norm.
        let mut err = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y1[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / N as f64).sqrt();

        if err <= 1.0 {
            // Accepted: build the dense interpolant, then look for events.
            let dense = build_dense(t, h, &y, &y1, &k);
            if let Some(hit) = locate_event(events, &mut armed, &dense, opts)? {
                return Ok(RunOutcome::Event {
                    index: hit.0,
                    t: hit.1,
                    y: hit.2,
                });
            }
            t += h;
            y = y1;
            dy = k[6];
            if !on_step(t, &y, &dense) {
                return Ok(RunOutcome::Stopped { t, y });
            }
        }

        let scale = if err == 0.0 {
            10.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 10.0)
        };
        h *= scale;
        if h.abs() > opts.max_step {
            h = sign * opts.max_step;
        }
    }
    Err(Error::MaxStepsExceeded {
        t,
        max_steps: opts.max_steps,
    })
}

fn build_dense<const N: usize>(
    t: f64,
    h: f64,
    y0: &[f64; N],
    y1: &[f64; N],
    k: &[[f64; N]; 7],
) -> DenseStep<N> {
    let mut cont = [[0.0; N]; 5];
    for i in 0..N {
        let ydiff = y1[i] - y0[i];
        let bspl = h * k[0][i] - ydiff;
        cont[0][i] = y0[i];
        cont[1][i] = ydiff;
        cont[2][i] = bspl;
        cont[3][i] = ydiff - h * k[6][i] - bspl;
        let mut d = 0.0;
        for (j, kj) in k.iter().enumerate() {
            d += D[j] * kj[i];
        }
        cont[4][i] = h * d;
    }
    DenseStep { t0: t, h, cont }
}

/// Scans the accepted step for the earliest sign change of any event
/// function, honoring direction filters, and polishes the crossing with
/// bisection on the dense output.
fn locate_event<const N: usize>(
    events: &[EventFn<'_, N>],
    armed: &mut [Option<bool>],
    dense: &DenseStep<N>,
    opts: &OdeOptions,
) -> Result<Option<(usize, f64, [f64; N])>> {
    const SAMPLES: usize = 8;
    if events.is_empty() {
        return Ok(None);
    }
    let mut best: Option<(usize, f64, [f64; N])> = None;
    for (idx, ev) in events.iter().enumerate() {
        let mut prev_theta = 0.0;
        let mut prev_g = {
            let y = dense.eval(0.0);
            (ev.g)(dense.t0, &y)
        };
        let mut from_negative = armed[idx];
        if from_negative.is_none() && prev_g.abs() > 0.0 {
            from_negative = Some(prev_g < 0.0);
        }
        for s in 1..=SAMPLES {
            let theta = s as f64 / SAMPLES as f64;
            let y = dense.eval(theta);
            let g = (ev.g)(dense.t0 + theta * dense.h, &y);
            if let Some(neg) = from_negative {
                let crossed = if neg { g > 0.0 } else { g < 0.0 };
                if crossed && ev.direction.matches(neg) {
                    let (theta_hit, y_hit) =
                        refine_crossing(ev.g, dense, prev_theta, prev_g, theta, g);
                    let t_hit = dense.t0 + theta_hit * dense.h;
                    let better = match &best {
                        None => true,
                        Some((_, t_best, _)) => {
                            (t_hit - dense.t0).abs() < (t_best - dense.t0).abs()
                        }
                    };
                    if better {
                        best = Some((idx, t_hit, y_hit));
                    }
                    break;
                }
                if crossed {
                    // Crossing in the filtered-out direction re-arms the
                    // detector on the new side.
                    from_negative = Some(!neg);
                }
            } else if g.abs() > 0.0 {
                from_negative = Some(g < 0.0);
            }
            prev_theta = theta;
            prev_g = g;
        }
        armed[idx] = from_negative;
    }
    if let Some((idx, t_hit, y_hit)) = &best {
        let g = (events[*idx].g)(*t_hit, y_hit);
        if g.abs() > opts.event_tol {
            return Err(Error::Internal(format!(
                "event {idx} localized to |g| = {:.3e} > event_tol",
                g.abs()
            )));
        }
    }
    Ok(best)
}

/// Bisection with a secant acceleration step on the dense interpolant.
fn refine_crossing<const N: usize>(
    g: &dyn Fn(f64, &[f64; N]) -> f64,
    dense: &DenseStep<N>,
    mut lo: f64,
    mut g_lo: f64,
    mut hi: f64,
    mut g_hi: f64,
) -> (f64, [f64; N]) {
    let eval = |theta: f64| {
        let y = dense.eval(theta);
        g(dense.t0 + theta * dense.h, &y)
    };
    for _ in 0..200 {
        if (hi - lo).abs() <= f64::EPSILON {
            break;
        }
        // Secant candidate, safeguarded into the bracket interior.
        let mut mid = if (g_hi - g_lo).abs() > 0.0 {
            lo - g_lo * (hi - lo) / (g_hi - g_lo)
        } else {
            0.5 * (lo + hi)
        };
        let margin = 0.01 * (hi - lo);
        if !(mid > lo + margin && mid < hi - margin) {
            mid = 0.5 * (lo + hi);
        }
        let g_mid = eval(mid);
        if g_mid == 0.0 {
            lo = mid;
            g_lo = g_mid;
            break;
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
    let theta = if g_lo.abs() <= g_hi.abs() { lo } else { hi };
    (theta, dense.eval(theta))
}

/// Standard two-evaluation starting-step heuristic.
fn initial_step<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    dy: &[f64; N],
    sign: f64,
    t_end: f64,
    opts: &OdeOptions,
) -> f64 {
    let sc: Vec<f64> = y
        .iter()
        .map(|yi| opts.abs_tol + opts.rel_tol * yi.abs())
        .collect();
    let rms = |v: &[f64; N]| {
        let mut s = 0.0;
        for i in 0..N {
            s += (v[i] / sc[i]).powi(2);
        }
        (s / N as f64).sqrt()
    };
    let d0 = rms(y);
    let d1 = rms(dy);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min((t_end - t).abs()).min(opts.max_step);
    let h0s = sign * h0;
    let mut y1 = *y;
    for i in 0..N {
        y1[i] += h0s * dy[i];
    }
    let f1 = f(t + h0s, &y1);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - dy[i];
    }
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    sign * h1.min(100.0 * h0).min(opts.max_step).min((t_end - t).abs())
}
