use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform grid of angular frequencies shared by the signal and idler
/// subsystems.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
    spacing: f64,
}

impl FrequencyGrid {
    /// `count` points starting at `first`, separated by `spacing` (rad/s).
    pub fn new(first: f64, spacing: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("frequency grid needs at least one point"));
        }
        if !(spacing > 0.0) || !spacing.is_finite() || !first.is_finite() {
            return Err(Error::invalid(format!(
                "frequency grid spacing must be positive and finite (got {spacing})"
            )));
        }
        let omegas = (0..count).map(|k| first + k as f64 * spacing).collect();
        Ok(Self { omegas, spacing })
    }

    /// `count` points symmetric around `center`.
    pub fn centered(center: f64, spacing: f64, count: usize) -> Result<Self> {
        let first = center - 0.5 * (count.saturating_sub(1)) as f64 * spacing;
        Self::new(first, spacing, count)
    }

    /// `count` points covering `[center - half_span, center + half_span]`.
    pub fn spanning(center: f64, half_span: f64, count: usize) -> Result<Self> {
        if !(half_span > 0.0) {
            return Err(Error::invalid("grid half-span must be positive"));
        }
        let spacing = if count > 1 {
            2.0 * half_span / (count - 1) as f64
        } else {
            2.0 * half_span
        };
        Self::centered(center, spacing, count)
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn first(&self) -> f64 {
        self.omegas[0]
    }

    pub fn last(&self) -> f64 {
        self.omegas[self.omegas.len() - 1]
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.first() + self.last())
    }

    /// Checks uniform spacing to `1e-9 · spacing`.
    pub fn is_uniform(&self) -> bool {
        self.omegas
            .windows(2)
            .all(|w| (w[1] - w[0] - self.spacing).abs() <= 1e-9 * self.spacing)
    }
}
