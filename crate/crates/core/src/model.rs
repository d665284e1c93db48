//! Dimensionless boost-converter model: the two smooth vector fields, the
//! switching control law and the physical <-> dimensionless maps.
//!
//! The model lives in coordinates (x, y, z) where x is the normalized
//! inductor current, y the normalized output voltage and z the washout-shifted
//! switching coordinate. The switching manifold is {z = 0}; the field for
//! z > 0 is `f_plus` (switch open, u = 1) and for z < 0 it is `f_minus`
//! (switch closed, u = 0).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four dimensionless parameters governing the model.
///
/// Constructed through [`Params::new`], which enforces the admissible ranges
/// (`omega` in (0, 1], `y_r > 1`, `k > 0`, `0 < a < 2`). All operations in
/// this crate assume a validated `Params`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    a: f64,
    k: f64,
    omega: f64,
    y_r: f64,
}

impl Params {
    pub fn new(a: f64, k: f64, omega: f64, y_r: f64) -> Result<Self> {
        if !(a > 0.0 && a < 2.0) {
            return Err(Error::InvalidParameter {
                name: "a",
                reason: "must lie in (0, 2)",
                value: a,
            });
        }
        if !(k > 0.0) {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: "must be positive",
                value: k,
            });
        }
        if !(omega > 0.0 && omega <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: "must lie in (0, 1]",
                value: omega,
            });
        }
        if !(y_r > 1.0) {
            return Err(Error::InvalidParameter {
                name: "y_r",
                reason: "must exceed 1",
                value: y_r,
            });
        }
        Ok(Self { a, k, omega, y_r })
    }

    /// Dimensionless load, (1/R) sqrt(L/C).
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Dimensionless control gain, K sqrt(C/L).
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Dimensionless washout cutoff, omega_F sqrt(LC).
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Voltage boost ratio, V_ref / V_in.
    pub fn y_r(&self) -> f64 {
        self.y_r
    }

    /// Same parameter set with the control gain replaced.
    pub fn with_k(&self, k: f64) -> Result<Self> {
        Self::new(self.a, k, self.omega, self.y_r)
    }
}

/// A point of the dimensionless state space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl State {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }
}

/// Which smooth field a quantity refers to: `Plus` acts in z > 0, `Minus` in
/// z < 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldSide {
    Plus,
    Minus,
}

/// Vector field for z > 0 (switch open, u = 1):
/// (1 - y, x - a y, x + (omega - a - k) y - omega z + k - omega y_r).
pub fn f_plus(s: &State, p: &Params) -> [f64; 3] {
    [
        1.0 - s.y,
        s.x - p.a * s.y,
        s.x + (p.omega - p.a - p.k) * s.y - p.omega * s.z + p.k - p.omega * p.y_r,
    ]
}

/// Vector field for z < 0 (switch closed, u = 0):
/// (1, -a y, (omega - a) y - omega z + k - omega y_r).
pub fn f_minus(s: &State, p: &Params) -> [f64; 3] {
    [
        1.0,
        -p.a * s.y,
        (p.omega - p.a) * s.y - p.omega * s.z + p.k - p.omega * p.y_r,
    ]
}

/// Dispatch on the field side.
pub fn field(side: FieldSide, s: &State, p: &Params) -> [f64; 3] {
    match side {
        FieldSide::Plus => f_plus(s, p),
        FieldSide::Minus => f_minus(s, p),
    }
}

/// Switching law u = (1 + sign(z)) / 2 with the sign(0) = 0 convention, so
/// u(0) = 1/2. The value on the manifold is never used by the dynamics (the
/// Filippov convention replaces it) but the function is total.
pub fn control_u(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else if z < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Physical circuit parameters of the converter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Input voltage V_in (volts).
    pub v_in: f64,
    /// Reference output voltage V_ref (volts); must exceed `v_in`.
    pub v_ref: f64,
    /// Load resistance R (ohms).
    pub resistance: f64,
    /// Inductance L (henries).
    pub inductance: f64,
    /// Capacitance C (farads).
    pub capacitance: f64,
    /// Washout filter cutoff omega_F (rad/s).
    pub omega_f: f64,
    /// Control gain K (dimensionless).
    pub gain: f64,
}

impl PhysicalParams {
    pub fn new(
        v_in: f64,
        v_ref: f64,
        resistance: f64,
        inductance: f64,
        capacitance: f64,
        omega_f: f64,
        gain: f64,
    ) -> Result<Self> {
        let fields = [
            ("V_in", v_in),
            ("V_ref", v_ref),
            ("R", resistance),
            ("L", inductance),
            ("C", capacitance),
            ("omega_F", omega_f),
            ("K", gain),
        ];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name: match name {
                        "V_in" => "V_in",
                        "V_ref" => "V_ref",
                        "R" => "R",
                        "L" => "L",
                        "C" => "C",
                        "omega_F" => "omega_F",
                        _ => "K",
                    },
                    reason: "must be finite and positive",
                    value,
                });
            }
        }
        if v_ref <= v_in {
            return Err(Error::InvalidParameter {
                name: "V_ref",
                reason: "must exceed V_in (boost operation)",
                value: v_ref,
            });
        }
        Ok(Self {
            v_in,
            v_ref,
            resistance,
            inductance,
            capacitance,
            omega_f,
            gain,
        })
    }
}

/// Scales tying the dimensionless model back to circuit units.
///
/// The change of variables is i_L = V_in sqrt(C/L) x, v_C = V_in y,
/// z_F = i_L + (v_C - V_ref - V_in z)/K, and t = sqrt(LC) tau.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub params: Params,
    /// Amperes per unit of x: V_in sqrt(C/L).
    pub current_scale: f64,
    /// Volts per unit of y: V_in.
    pub voltage_scale: f64,
    /// Seconds per unit of tau: sqrt(LC).
    pub time_scale: f64,
    physical: PhysicalParams,
}

/// Maps physical circuit parameters to the dimensionless set and records the
/// state/time scales. Fails if the physical set is invalid or the resulting
/// dimensionless parameters leave their admissible ranges.
pub fn normalize(pp: &PhysicalParams) -> Result<Normalization> {
    // Re-validate so values constructed literal-by-literal are also checked.
    let pp = PhysicalParams::new(
        pp.v_in,
        pp.v_ref,
        pp.resistance,
        pp.inductance,
        pp.capacitance,
        pp.omega_f,
        pp.gain,
    )?;
    let lc_ratio = (pp.inductance / pp.capacitance).sqrt();
    let params = Params::new(
        lc_ratio / pp.resistance,
        pp.gain / lc_ratio,
        pp.omega_f * (pp.inductance * pp.capacitance).sqrt(),
        pp.v_ref / pp.v_in,
    )?;
    Ok(Normalization {
        params,
        current_scale: pp.v_in / lc_ratio,
        voltage_scale: pp.v_in,
        time_scale: (pp.inductance * pp.capacitance).sqrt(),
        physical: pp,
    })
}

/// Reconstructs physical parameters from a dimensionless set given the gauge
/// (V_in, L, C) that the normalization quotients out.
pub fn denormalize(
    params: &Params,
    v_in: f64,
    inductance: f64,
    capacitance: f64,
) -> Result<PhysicalParams> {
    let lc_ratio = (inductance / capacitance).sqrt();
    PhysicalParams::new(
        v_in,
        params.y_r * v_in,
        lc_ratio / params.a,
        inductance,
        capacitance,
        params.omega / (inductance * capacitance).sqrt(),
        params.k * lc_ratio,
    )
}

impl Normalization {
    /// Physical (i_L, v_C, z_F) -> dimensionless state.
    pub fn state_to_dimensionless(&self, i_l: f64, v_c: f64, z_f: f64) -> State {
        let pp = &self.physical;
        State {
            x: i_l / self.current_scale,
            y: v_c / self.voltage_scale,
            z: (v_c - pp.v_ref + pp.gain * (i_l - z_f)) / pp.v_in,
        }
    }

    /// Dimensionless state -> physical (i_L, v_C, z_F).
    pub fn state_to_physical(&self, s: &State) -> (f64, f64, f64) {
        let pp = &self.physical;
        let i_l = self.current_scale * s.x;
        let v_c = self.voltage_scale * s.y;
        let z_f = i_l + (v_c - pp.v_ref - pp.v_in * s.z) / pp.gain;
        (i_l, v_c, z_f)
    }

    pub fn physical(&self) -> &PhysicalParams {
        &self.physical
    }
}
