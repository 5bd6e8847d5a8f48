//! Dispersion, loss and pump model of the nonlinear waveguide.

use std::f64::consts::{LN_10, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Pump,
    Signal,
    Idler,
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pump" | "p" => Ok(Field::Pump),
            "signal" | "s" | "a" => Ok(Field::Signal),
            "idler" | "i" | "b" => Ok(Field::Idler),
            other => Err(Error::invalid(format!("unknown field id `{other}`"))),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Pump => "pump",
            Field::Signal => "signal",
            Field::Idler => "idler",
        })
    }
}

/// Linear refractive-index model of one field around its central frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldDispersion {
    /// `n(ω₀)`.
    pub index: f64,
    /// Group velocity at `ω₀` (m/s).
    pub group_velocity: f64,
    /// Central angular frequency `ω₀` (rad/s).
    pub omega0: f64,
}

impl FieldDispersion {
    /// `n(ω) = n(ω₀) + (ω − ω₀)/ω₀ · (c/v_g − n(ω₀))`.
    pub fn index_at(&self, omega: f64) -> f64 {
        let slope = SPEED_OF_LIGHT / self.group_velocity - self.index;
        self.index + (omega - self.omega0) / self.omega0 * slope
    }

    pub fn wavevector_at(&self, omega: f64) -> f64 {
        self.index_at(omega) * omega / SPEED_OF_LIGHT
    }
}

/// Gaussian, transform-limited pump pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    /// Central vacuum wavelength (m).
    pub wavelength: f64,
    /// Intensity full width at half maximum of the pulse (s).
    pub fwhm_duration: f64,
}

impl PumpSpec {
    pub fn new(wavelength: f64, fwhm_duration: f64) -> Result<Self> {
        if !(wavelength > 0.0) || !(fwhm_duration > 0.0) {
            return Err(Error::invalid("pump wavelength and duration must be positive"));
        }
        Ok(Self {
            wavelength,
            fwhm_duration,
        })
    }

    /// 755 nm, 0.4 ps.
    pub fn reference() -> Self {
        Self {
            wavelength: 755e-9,
            fwhm_duration: 0.4e-12,
        }
    }

    /// `ω_p = 2πc/λ_p`.
    pub fn center_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength
    }

    /// Standard deviation `σ_ω = 2√(ln 2)/Δτ` of the amplitude spectrum.
    pub fn spectral_sigma(&self) -> f64 {
        2.0 * 2f64.ln().sqrt() / self.fwhm_duration
    }
}

/// Mean loss and signal/idler asymmetry of the internal losses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    /// Mean total power loss over the full waveguide length (dB).
    pub eta_bar_db: f64,
    /// `(η_s − η_i)/(η_s + η_i)`.
    pub r_eta: f64,
}

impl LossSpec {
    pub fn new(eta_bar_db: f64, r_eta: f64) -> Result<Self> {
        if !(eta_bar_db >= 0.0) || !eta_bar_db.is_finite() {
            return Err(Error::invalid(format!("eta_bar_db must be >= 0 (got {eta_bar_db})")));
        }
        if !(r_eta.abs() <= 1.0) {
            return Err(Error::invalid(format!("|r_eta| must be <= 1 (got {r_eta})")));
        }
        Ok(Self { eta_bar_db, r_eta })
    }

    pub fn lossless() -> Self {
        Self {
            eta_bar_db: 0.0,
            r_eta: 0.0,
        }
    }
}

/// `(η_s, η_i)` in 1/m: `η̄ = (ln 10/10)·η̄_dB/L`, `η_s,i = η̄(1 ± r_η)`.
pub fn loss_coefficients(loss: &LossSpec, length: f64) -> (f64, f64) {
    let mean = LN_10 / 10.0 * loss.eta_bar_db / length;
    (mean * (1.0 + loss.r_eta), mean * (1.0 - loss.r_eta))
}

/// Geometry, dispersion and internal losses of the waveguide.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveguideSpec {
    /// Length `L` (m).
    pub length: f64,
    pub pump: FieldDispersion,
    pub signal: FieldDispersion,
    pub idler: FieldDispersion,
    /// Quasi-phase-matching wave vector `2π/Λ` (rad/m).
    pub k_qpm: f64,
    /// Power loss coefficient of the signal (1/m).
    pub eta_signal: f64,
    /// Power loss coefficient of the idler (1/m).
    pub eta_idler: f64,
}

impl WaveguideSpec {
    /// The 1 cm reference waveguide: `n_p = n_s = 1.9`, `n_i = 1.8`,
    /// `v_g^p = 0.9c/n_p`, `v_g^s = 0.96 v_g^p`, `v_g^i = 0.98 v_g^p`,
    /// degenerate quasi-phase-matching and no losses.
    pub fn reference(pump: &PumpSpec) -> Self {
        let wp = pump.center_frequency();
        let vgp = 0.9 * SPEED_OF_LIGHT / 1.9;
        let mut spec = Self {
            length: 0.01,
            pump: FieldDispersion {
                index: 1.9,
                group_velocity: vgp,
                omega0: wp,
            },
            signal: FieldDispersion {
                index: 1.9,
                group_velocity: 0.96 * vgp,
                omega0: 0.5 * wp,
            },
            idler: FieldDispersion {
                index: 1.8,
                group_velocity: 0.98 * vgp,
                omega0: 0.5 * wp,
            },
            k_qpm: 0.0,
            eta_signal: 0.0,
            eta_idler: 0.0,
        };
        spec.k_qpm = spec.degenerate_qpm();
        spec
    }

    /// `k_QPM = (ω_p/2c)(2n_p − n_s − n_i)` with indices taken at the
    /// central frequencies; phase-matches `ω_s = ω_i = ω_p/2`.
    pub fn degenerate_qpm(&self) -> f64 {
        let wp = self.pump.omega0;
        wp / (2.0 * SPEED_OF_LIGHT)
            * (2.0 * self.pump.index - self.signal.index - self.idler.index)
    }

    pub fn with_losses(mut self, loss: &LossSpec) -> Self {
        let (s, i) = loss_coefficients(loss, self.length);
        self.eta_signal = s;
        self.eta_idler = i;
        self
    }

    pub fn lossless(mut self) -> Self {
        self.eta_signal = 0.0;
        self.eta_idler = 0.0;
        self
    }

    pub fn is_lossless(&self) -> bool {
        self.eta_signal == 0.0 && self.eta_idler == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) {
            return Err(Error::invalid("waveguide length must be positive"));
        }
        for (f, d) in [
            (Field::Pump, &self.pump),
            (Field::Signal, &self.signal),
            (Field::Idler, &self.idler),
        ] {
            if !(d.group_velocity > 0.0) || !(d.omega0 > 0.0) || !(d.index > 0.0) {
                return Err(Error::invalid(format!(
                    "{f}: index, group velocity and central frequency must be positive"
                )));
            }
        }
        if !(self.eta_signal >= 0.0) || !(self.eta_idler >= 0.0) {
            return Err(Error::invalid("loss coefficients must be non-negative"));
        }
        Ok(())
    }

    pub fn dispersion(&self, field: Field) -> &FieldDispersion {
        match field {
            Field::Pump => &self.pump,
            Field::Signal => &self.signal,
            Field::Idler => &self.idler,
        }
    }

    /// `k_p(ω_s + ω_i) − k_QPM − k_s(ω_s) − k_i(ω_i)`.
    pub fn phase_mismatch(&self, omega_s: f64, omega_i: f64) -> f64 {
        self.pump.wavevector_at(omega_s + omega_i)
            - self.k_qpm
            - self.signal.wavevector_at(omega_s)
            - self.idler.wavevector_at(omega_i)
    }

    /// Default half-span of the signal/idler grid around `ω_p/2`: the larger
    /// of `6σ_ω` and the phase-matching width `2π/(L·min|1/v_g^p − 1/v_g^{s,i}|)`.
    pub fn default_half_span(&self, pump: &PumpSpec) -> f64 {
        let sigma = pump.spectral_sigma();
        let inv = |v: f64| 1.0 / v;
        let mismatch = (inv(self.pump.group_velocity) - inv(self.signal.group_velocity))
            .abs()
            .min((inv(self.pump.group_velocity) - inv(self.idler.group_velocity)).abs());
        let pm_width = if mismatch > 0.0 {
            2.0 * PI / (self.length * mismatch)
        } else {
            f64::INFINITY
        };
        (6.0 * sigma).max(pm_width.min(24.0 * sigma))
    }
}

pub fn refractive_index(field: Field, omega: f64, spec: &WaveguideSpec) -> Result<f64> {
    check_omega(omega)?;
    Ok(spec.dispersion(field).index_at(omega))
}

/// `k(ω) = n(ω)·ω/c` (rad/m).
pub fn wavevector(field: Field, omega: f64, spec: &WaveguideSpec) -> Result<f64> {
    check_omega(omega)?;
    Ok(spec.dispersion(field).wavevector_at(omega))
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::invalid(format!("angular frequency must be positive (got {omega})")));
    }
    Ok(())
}

/// Pump amplitude spectrum `S(ω) = exp(−(ω − ω_p)²/(2σ_ω²))`, peak 1.
pub fn pump_spectrum(omega_sum: f64, pump: &PumpSpec) -> f64 {
    let sigma = pump.spectral_sigma();
    let d = omega_sum - pump.center_frequency();
    (-d * d / (2.0 * sigma * sigma)).exp()
}
