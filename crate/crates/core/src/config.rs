//! TOML scenario files.
//!
//! Every physical quantity carries its unit in the key name. See
//! `docs/config.md` for the full schema and the documented defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::Basis;
use crate::solver::{self, PhotonCount, SolverConfig, DEFAULT_GRID_POINTS, DEFAULT_STEPS};
use crate::waveguide::{FieldDispersion, LossSpec, PumpSpec, WaveguideSpec, SPEED_OF_LIGHT};

/// Reference waveguides and free-form scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Lossless.
    #[serde(rename = "WG0")]
    Wg0,
    /// Equal signal and idler losses.
    #[serde(rename = "WG1")]
    Wg1,
    /// Signal loss twice the idler loss (`r_η = 1/3`).
    #[serde(rename = "WG2")]
    Wg2,
    #[serde(rename = "custom")]
    Custom,
}

/// How the coupling strength is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GainMode {
    Explicit { gamma_per_m: f64 },
    /// Calibrated on the lossless version of the waveguide.
    Calibrated { target_photons: f64, count: PhotonCount },
}

/// A fully resolved and validated scenario.
#[derive(Clone, Debug, Serialize)]
pub struct Scenario {
    pub name: String,
    pub preset: Preset,
    pub pump: PumpSpec,
    /// The waveguide without internal losses; losses come from the sweep.
    pub waveguide: WaveguideSpec,
    pub r_eta: f64,
    /// Mean loss values (dB over the full length), ascending.
    pub eta_bar_db: Vec<f64>,
    pub gain: GainMode,
    pub grid_points: usize,
    pub half_span_rad_per_s: f64,
    pub steps: usize,
    pub convergence_check: bool,
    pub bases: Vec<Basis>,
    /// Restarts of the direct MSq optimality search per sweep point (0: off).
    pub msq_search_trials: usize,
    pub write_modes: bool,
    pub jsi: JsiSettings,
    pub gain_sweep: GainSweepSettings,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct JsiSettings {
    /// Total signal photon number targeted for the low-gain JSI run.
    pub total_photons: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GainSweepSettings {
    /// Number of gain values, evenly spaced in `(0, Γ_max]`.
    pub points: usize,
    /// Dominant-mode photon number at `Γ_max`.
    pub max_photons: f64,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        raw.resolve()
    }

    pub fn loss(&self, eta_bar_db: f64) -> Result<LossSpec> {
        LossSpec::new(eta_bar_db, self.r_eta)
    }

    /// Solver settings at gain `gain`.
    pub fn solver_config(&self, gain: f64) -> Result<SolverConfig> {
        let grid = crate::grid::FrequencyGrid::spanning(
            0.5 * self.pump.center_frequency(),
            self.half_span_rad_per_s,
            self.grid_points,
        )?;
        Ok(SolverConfig {
            grid,
            gain,
            steps: self.steps,
            convergence_check: self.convergence_check,
        })
    }

    /// The JSON form embedded in output headers.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: RawScenario,
    #[serde(default)]
    pump: RawPump,
    #[serde(default)]
    waveguide: RawWaveguide,
    #[serde(default)]
    loss: RawLoss,
    #[serde(default)]
    gain: RawGain,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    jsi: RawJsi,
    #[serde(default)]
    gain_sweep: RawGainSweep,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    preset: Option<Preset>,
    bases: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPump {
    wavelength_nm: Option<f64>,
    fwhm_ps: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWaveguide {
    length_m: Option<f64>,
    index_pump: Option<f64>,
    index_signal: Option<f64>,
    index_idler: Option<f64>,
    group_velocity_pump_m_per_s: Option<f64>,
    group_velocity_signal_m_per_s: Option<f64>,
    group_velocity_idler_m_per_s: Option<f64>,
    k_qpm_rad_per_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoss {
    eta_bar_db: Option<Vec<f64>>,
    /// `[start, stop, step]`, inclusive of `stop`.
    eta_bar_db_range: Option<[f64; 3]>,
    r_eta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGain {
    mode: Option<String>,
    gamma_per_m: Option<f64>,
    target_photons: Option<f64>,
    photon_count: Option<PhotonCount>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    grid_points: Option<usize>,
    half_span_rad_per_s: Option<f64>,
    steps: Option<usize>,
    convergence_check: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    write_modes: Option<bool>,
    msq_search_trials: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJsi {
    total_photons: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGainSweep {
    points: Option<usize>,
    max_photons: Option<f64>,
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(field_err(field, format!("must be positive and finite (got {v})")))
    }
}

/// Default η̄ sweep: 0 to 10 dB in 0.25 dB steps.
pub fn default_eta_grid() -> Vec<f64> {
    (0..=40).map(|k| 0.25 * k as f64).collect()
}

impl RawConfig {
    fn resolve(self) -> Result<Scenario> {
        let name = self.scenario.name.trim().to_string();
        if name.is_empty() {
            return Err(field_err("scenario.name", "must not be empty"));
        }
        let preset = self.scenario.preset.unwrap_or(match name.as_str() {
            "WG0" => Preset::Wg0,
            "WG1" => Preset::Wg1,
            "WG2" => Preset::Wg2,
            _ => Preset::Custom,
        });
        let bases = match self.scenario.bases {
            None => Basis::ALL.to_vec(),
            Some(list) => {
                if list.is_empty() {
                    return Err(field_err("scenario.bases", "must not be empty"));
                }
                let mut out = Vec::new();
                for b in &list {
                    let basis: Basis = b
                        .parse()
                        .map_err(|e: Error| field_err("scenario.bases", e))?;
                    if basis == Basis::Custom {
                        return Err(field_err("scenario.bases", "only MW, WE and MSq can be swept"));
                    }
                    if !out.contains(&basis) {
                        out.push(basis);
                    }
                }
                out.sort();
                out
            }
        };

        let reference = PumpSpec::reference();
        let pump = PumpSpec::new(
            positive(
                "pump.wavelength_nm",
                self.pump.wavelength_nm.unwrap_or(reference.wavelength * 1e9),
            )? * 1e-9,
            positive("pump.fwhm_ps", self.pump.fwhm_ps.unwrap_or(reference.fwhm_duration * 1e12))?
                * 1e-12,
        )?;
        let waveguide = self.waveguide.resolve(&pump)?;

        let (r_default, eta_default) = match preset {
            Preset::Wg0 => (0.0, vec![0.0]),
            Preset::Wg1 => (0.0, default_eta_grid()),
            Preset::Wg2 => (1.0 / 3.0, default_eta_grid()),
            Preset::Custom => (0.0, default_eta_grid()),
        };
        let r_eta = self.loss.r_eta.unwrap_or(r_default);
        if !(r_eta.abs() <= 1.0) {
            return Err(field_err("loss.r_eta", format!("|r_eta| must be <= 1 (got {r_eta})")));
        }
        let r_eta = match preset {
            Preset::Wg0 | Preset::Wg1 if r_eta != 0.0 => {
                return Err(field_err("loss.r_eta", format!("{preset:?} requires r_eta = 0")));
            }
            Preset::Wg2 if (r_eta - 1.0 / 3.0).abs() > 1e-9 => {
                return Err(field_err("loss.r_eta", "WG2 requires r_eta = 1/3"));
            }
            Preset::Wg2 => 1.0 / 3.0,
            _ => r_eta,
        };
        let mut eta = match (self.loss.eta_bar_db, self.loss.eta_bar_db_range) {
            (Some(_), Some(_)) => {
                return Err(field_err(
                    "loss",
                    "give either eta_bar_db or eta_bar_db_range, not both",
                ))
            }
            (Some(list), None) => list,
            (None, Some([start, stop, step])) => {
                if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
                    return Err(field_err(
                        "loss.eta_bar_db_range",
                        "needs start <= stop and step > 0",
                    ));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=count).map(|k| start + step * k as f64).collect()
            }
            (None, None) => eta_default,
        };
        if eta.is_empty() {
            return Err(field_err("loss.eta_bar_db", "list must not be empty"));
        }
        if let Some(bad) = eta.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(field_err("loss.eta_bar_db", format!("values must be >= 0 (got {bad})")));
        }
        if preset == Preset::Wg0 && eta.iter().any(|&v| v != 0.0) {
            return Err(field_err("loss.eta_bar_db", "WG0 is lossless; only 0 is allowed"));
        }
        eta.sort_by(f64::total_cmp);
        eta.dedup();

        let gain = self.gain.resolve()?;
        let grid_points = self.solver.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
        if grid_points < 2 {
            return Err(field_err("solver.grid_points", "must be at least 2"));
        }
        let half_span_rad_per_s = match self.solver.half_span_rad_per_s {
            Some(v) => positive("solver.half_span_rad_per_s", v)?,
            None => waveguide.default_half_span(&pump),
        };
        let steps = self.solver.steps.unwrap_or(DEFAULT_STEPS);
        if steps < solver::MIN_STEPS {
            return Err(field_err(
                "solver.steps",
                format!("must be at least {} (got {steps})", solver::MIN_STEPS),
            ));
        }
        let total_photons = self.jsi.total_photons.unwrap_or(1e-3);
        if !(total_photons > 0.0 && total_photons < 1e-2) {
            return Err(field_err(
                "jsi.total_photons",
                format!("must lie in (0, 0.01) for a low-gain map (got {total_photons})"),
            ));
        }
        let sweep_points = self.gain_sweep.points.unwrap_or(10);
        if sweep_points == 0 {
            return Err(field_err("gain_sweep.points", "must be at least 1"));
        }
        let max_photons = positive("gain_sweep.max_photons", self.gain_sweep.max_photons.unwrap_or(40.0))?;

        Ok(Scenario {
            name,
            preset,
            pump,
            waveguide,
            r_eta,
            eta_bar_db: eta,
            gain,
            grid_points,
            half_span_rad_per_s,
            steps,
            convergence_check: self.solver.convergence_check.unwrap_or(true),
            bases,
            msq_search_trials: self.output.msq_search_trials.unwrap_or(0),
            write_modes: self.output.write_modes.unwrap_or(true),
            jsi: JsiSettings { total_photons },
            gain_sweep: GainSweepSettings {
                points: sweep_points,
                max_photons,
            },
        })
    }
}

impl RawWaveguide {
    fn resolve(&self, pump: &PumpSpec) -> Result<WaveguideSpec> {
        let reference = WaveguideSpec::reference(pump);
        let field = |index: Option<f64>,
                     vg: Option<f64>,
                     def: &FieldDispersion,
                     name: &str|
         -> Result<FieldDispersion> {
            let index = positive(&format!("waveguide.index_{name}"), index.unwrap_or(def.index))?;
            let group_velocity = positive(
                &format!("waveguide.group_velocity_{name}_m_per_s"),
                vg.unwrap_or(def.group_velocity),
            )?;
            if group_velocity > SPEED_OF_LIGHT {
                return Err(field_err(
                    &format!("waveguide.group_velocity_{name}_m_per_s"),
                    "exceeds the speed of light",
                ));
            }
            Ok(FieldDispersion {
                index,
                group_velocity,
                omega0: def.omega0,
            })
        };
        let mut spec = WaveguideSpec {
            length: positive("waveguide.length_m", self.length_m.unwrap_or(reference.length))?,
            pump: field(self.index_pump, self.group_velocity_pump_m_per_s, &reference.pump, "pump")?,
            signal: field(
                self.index_signal,
                self.group_velocity_signal_m_per_s,
                &reference.signal,
                "signal",
            )?,
            idler: field(self.index_idler, self.group_velocity_idler_m_per_s, &reference.idler, "idler")?,
            k_qpm: 0.0,
            eta_signal: 0.0,
            eta_idler: 0.0,
        };
        spec.k_qpm = match self.k_qpm_rad_per_m {
            Some(k) if k.is_finite() => k,
            Some(k) => return Err(field_err("waveguide.k_qpm_rad_per_m", format!("not finite ({k})"))),
            None => spec.degenerate_qpm(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl RawGain {
    fn resolve(&self) -> Result<GainMode> {
        let mode = self.mode.as_deref().unwrap_or("calibrated");
        match mode {
            "explicit" => {
                if self.target_photons.is_some() || self.photon_count.is_some() {
                    return Err(field_err(
                        "gain",
                        "target_photons/photon_count only apply to mode = \"calibrated\"",
                    ));
                }
                let g = self
                    .gamma_per_m
                    .ok_or_else(|| field_err("gain.gamma_per_m", "required for mode = \"explicit\""))?;
                if !(g >= 0.0) || !g.is_finite() {
                    return Err(field_err("gain.gamma_per_m", format!("must be >= 0 (got {g})")));
                }
                Ok(GainMode::Explicit { gamma_per_m: g })
            }
            "calibrated" => {
                if self.gamma_per_m.is_some() {
                    return Err(field_err("gain.gamma_per_m", "only applies to mode = \"explicit\""));
                }
                Ok(GainMode::Calibrated {
                    target_photons: positive("gain.target_photons", self.target_photons.unwrap_or(40.0))?,
                    count: self.photon_count.unwrap_or(PhotonCount::FirstMode),
                })
            }
            other => Err(field_err(
                "gain.mode",
                format!("unknown mode `{other}` (explicit, calibrated)"),
            )),
        }
    }
}
