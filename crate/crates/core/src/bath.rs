//! Drude-regularised Ohmic baths: spectral density, friction kernel and
//! thermal weights.
//!
//! Units: ħ = m = 1 with frequencies measured in units of the mechanical
//! frequency.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeLabel {
    Mechanical,
    Optical,
}

impl ModeLabel {
    pub fn index(self) -> usize {
        match self {
            ModeLabel::Mechanical => 0,
            ModeLabel::Optical => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeParams<T: Scalar> {
    pub frequency: T,
    pub label: ModeLabel,
}

impl<T: Scalar> ModeParams<T> {
    pub fn new(label: ModeLabel, frequency: T) -> Result<Self> {
        if !(frequency > T::zero()) || !frequency.is_finite() {
            return Err(Error::invalid("frequency", format!("must be positive, got {frequency}")));
        }
        Ok(ModeParams { frequency, label })
    }
}

/// One environment: `J(ω) = rate · ω · cutoff² / (ω² + cutoff²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrudeBath<T: Scalar> {
    /// γ for the resonator, κ for the cavity.
    pub rate: T,
    pub cutoff: T,
    /// Thermal quanta of the bath at its mode's frequency.
    pub occupation: T,
}

impl<T: Scalar> DrudeBath<T> {
    pub fn new(rate: T, cutoff: T, occupation: T) -> Result<Self> {
        let b = DrudeBath {
            rate,
            cutoff,
            occupation,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= T::zero()) || !self.rate.is_finite() {
            return Err(Error::invalid("rate", format!("must be >= 0, got {}", self.rate)));
        }
        if !(self.cutoff > T::zero()) || !self.cutoff.is_finite() {
            return Err(Error::invalid("cutoff", format!("must be > 0, got {}", self.cutoff)));
        }
        if !(self.occupation >= T::zero()) || !self.occupation.is_finite() {
            return Err(Error::invalid(
                "occupation",
                format!("must be >= 0, got {}", self.occupation),
            ));
        }
        Ok(())
    }

    pub fn is_coupled(&self) -> bool {
        self.rate > T::zero()
    }

    pub fn with_rate(mut self, rate: T) -> Self {
        self.rate = rate;
        self
    }

    pub fn with_cutoff(mut self, cutoff: T) -> Self {
        self.cutoff = cutoff;
        self
    }
}

pub fn spectral_density<T: Scalar>(bath: &DrudeBath<T>, omega: T) -> T {
    let c2 = bath.cutoff * bath.cutoff;
    bath.rate * omega * c2 / (omega * omega + c2)
}

/// `γ(τ) = rate · cutoff · e^{-cutoff·τ}`, the cosine transform of `J(ω)/ω`.
pub fn friction_kernel<T: Scalar>(bath: &DrudeBath<T>, tau: T) -> T {
    bath.rate * bath.cutoff * (-bath.cutoff * tau).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InverseTemperature<T: Scalar> {
    /// ħω/k_BT at the mode frequency.
    Finite(T),
    ZeroTemperature,
}

pub fn inverse_temperature_scaled<T: Scalar>(occupation: T) -> InverseTemperature<T> {
    if occupation <= T::zero() {
        InverseTemperature::ZeroTemperature
    } else {
        InverseTemperature::Finite((T::one() / occupation).ln_1p())
    }
}

/// `coth(β̃ ω / 2ω_mode)`; exactly one at zero temperature.
pub fn thermal_weight<T: Scalar>(bath: &DrudeBath<T>, mode_frequency: T, omega: T) -> T {
    match inverse_temperature_scaled(bath.occupation) {
        InverseTemperature::ZeroTemperature => T::one(),
        InverseTemperature::Finite(beta) => {
            let x = beta * omega / (T::lit(2.0) * mode_frequency);
            T::one() / x.tanh()
        }
    }
}

/// `J(ω) · coth(…)`: the symmetrised noise spectrum before the `1/π`.
pub fn noise_spectrum<T: Scalar>(bath: &DrudeBath<T>, mode_frequency: T, omega: T) -> T {
    spectral_density(bath, omega) * thermal_weight(bath, mode_frequency, omega)
}

/// Thermal occupation of a mode of frequency `omega` in equilibrium with `bath`.
pub fn occupation_at<T: Scalar>(bath: &DrudeBath<T>, mode_frequency: T, omega: T) -> T {
    (thermal_weight(bath, mode_frequency, omega) - T::one()) * T::lit(0.5)
}
