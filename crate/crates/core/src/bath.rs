//! Thermal bath kernels.
//!
//! The symmetric noise kernel is
//!
//! ```text
//! K_T(τ) = (γ ħ / π) ∫₀^∞ dω ω coth(ħω / 2kT) cos(ωτ) · window(ω)
//! ```
//!
//! and its antisymmetric (commutator) counterpart A(τ), defined through
//! `[η̂_t, η̂_t'] = i A(t - t')`, is
//!
//! ```text
//! A(τ) = -(2 γ ħ / π) ∫₀^∞ dω ω sin(ωτ) · window(ω)
//! ```
//!
//! with the sign pinned to the bath-mode representation (phasor sum over
//! creation/annihilation operators), which is the executable ground truth
//! reproduced exactly by the mode sums in [`crate::heisenberg`].
//!
//! The bare integrals diverge at equal times; a cutoff is mandatory. Both
//! integrals are evaluated by Gauss–Legendre quadrature on [0, Ω_eff] where
//! Ω_eff = ω_c for a hard cutoff and 40 ω_D for a Drude cutoff (the Drude
//! integrand has dropped below 1e-3 of its peak there).

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

/// Frequency regularization of the bath spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    /// Sharp truncation at `omega_c`.
    Hard { omega_c: f64 },
    /// Drude window 1 / (1 + ω²/ω_D²).
    Drude { omega_d: f64 },
}

impl Cutoff {
    pub fn frequency(&self) -> f64 {
        match *self {
            Cutoff::Hard { omega_c } => omega_c,
            Cutoff::Drude { omega_d } => omega_d,
        }
    }

    /// Spectral window factor at `omega`.
    pub fn window(&self, omega: f64) -> f64 {
        match *self {
            Cutoff::Hard { .. } => 1.0,
            Cutoff::Drude { omega_d } => {
                let r = omega / omega_d;
                1.0 / (1.0 + r * r)
            }
        }
    }

    /// Upper integration limit for the kernel integrals.
    pub fn effective_max(&self) -> f64 {
        match *self {
            Cutoff::Hard { omega_c } => omega_c,
            Cutoff::Drude { omega_d } => 40.0 * omega_d,
        }
    }

    /// Scale a cutoff frequency (used by refinement ladders).
    pub fn scaled(&self, factor: f64) -> Cutoff {
        match *self {
            Cutoff::Hard { omega_c } => Cutoff::Hard {
                omega_c: omega_c * factor,
            },
            Cutoff::Drude { omega_d } => Cutoff::Drude {
                omega_d: omega_d * factor,
            },
        }
    }
}

/// Friction, temperature and constants defining the thermal kernel K_T.
#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    /// Friction coefficient γ (mass/time).
    pub gamma: f64,
    /// Absolute temperature T.
    pub temperature: f64,
    /// Action quantum ħ.
    pub hbar: f64,
    /// Boltzmann constant k.
    pub boltzmann: f64,
    /// Frequency regularization.
    pub cutoff: Cutoff,
    /// Gauss–Legendre node count for kernel evaluation.
    pub quadrature_nodes: usize,
}

impl BathSpec {
    /// Desk-unit bath (ħ = k = 1) with the given friction, temperature and cutoff.
    pub fn desk_units(gamma: f64, temperature: f64, cutoff: Cutoff, nodes: usize) -> Result<Self> {
        let spec = BathSpec {
            gamma,
            temperature,
            hbar: 1.0,
            boltzmann: 1.0,
            cutoff,
            quadrature_nodes: nodes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::invalid("bath.gamma", "must be finite and >= 0"));
        }
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(Error::invalid("bath.temperature", "must be finite and > 0"));
        }
        if !self.hbar.is_finite() || self.hbar <= 0.0 {
            return Err(Error::invalid("bath.hbar", "must be finite and > 0"));
        }
        if !self.boltzmann.is_finite() || self.boltzmann <= 0.0 {
            return Err(Error::invalid("bath.boltzmann", "must be finite and > 0"));
        }
        let f = self.cutoff.frequency();
        if !f.is_finite() || f <= 0.0 {
            return Err(Error::invalid("bath.cutoff", "cutoff frequency must be finite and > 0"));
        }
        if self.quadrature_nodes < 16 {
            return Err(Error::invalid("bath.quadrature_nodes", "must be >= 16"));
        }
        Ok(())
    }

    /// Thermal energy kT.
    pub fn thermal_energy(&self) -> f64 {
        self.boltzmann * self.temperature
    }

    /// ω coth(ħω / 2kT), continued through the removable singularity at
    /// ω = 0 where it equals 2kT/ħ.
    pub fn thermal_flux(&self, omega: f64) -> f64 {
        let scale = self.hbar / (2.0 * self.thermal_energy());
        let x = omega * scale;
        if x.abs() < 1e-4 {
            // x coth x = 1 + x²/3 - x⁴/45 + O(x⁶)
            let x2 = x * x;
            (1.0 + x2 / 3.0 - x2 * x2 / 45.0) / scale
        } else {
            omega / x.tanh()
        }
    }

    /// Bose occupation factor 2n̄(ω) + 1 = coth(ħω / 2kT); requires ω > 0.
    pub fn coth_factor(&self, omega: f64) -> f64 {
        self.thermal_flux(omega) / omega
    }

    /// Bath with a cutoff frequency scaled by `factor` (refinement ladders).
    pub fn with_scaled_cutoff(&self, factor: f64) -> BathSpec {
        BathSpec {
            cutoff: self.cutoff.scaled(factor),
            ..self.clone()
        }
    }
}

/// Stationary kernel tabulated on a uniform lag grid.
#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub dt: f64,
    pub n: usize,
    /// K_T at lags 0, dt, ..., (n-1)·dt.
    pub values: Vec<f64>,
}

impl KernelGrid {
    pub fn lag(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }
}

fn check_lag(lag: f64) -> Result<()> {
    if !lag.is_finite() {
        return Err(Error::NonFinite { what: "lag" });
    }
    Ok(())
}

/// Symmetric thermal kernel K_T at the given lag.
pub fn evaluate_kernel(spec: &BathSpec, lag: f64) -> Result<f64> {
    spec.validate()?;
    check_lag(lag)?;
    if spec.gamma == 0.0 {
        return Ok(0.0);
    }
    let gl = gauss_legendre(spec.quadrature_nodes);
    let integral = gl.integrate(0.0, spec.cutoff.effective_max(), |omega| {
        spec.thermal_flux(omega) * spec.cutoff.window(omega) * (omega * lag).cos()
    });
    Ok(spec.gamma * spec.hbar / std::f64::consts::PI * integral)
}

/// Antisymmetric kernel A with `[η̂_t, η̂_t'] = i A(t - t')`; odd in the lag.
pub fn evaluate_antisymmetric_kernel(spec: &BathSpec, lag: f64) -> Result<f64> {
    spec.validate()?;
    check_lag(lag)?;
    if spec.gamma == 0.0 {
        return Ok(0.0);
    }
    let gl = gauss_legendre(spec.quadrature_nodes);
    let integral = gl.integrate(0.0, spec.cutoff.effective_max(), |omega| {
        omega * (omega * lag).sin() * spec.cutoff.window(omega)
    });
    Ok(-2.0 * spec.gamma * spec.hbar / std::f64::consts::PI * integral)
}

/// Tabulate K_T at lags 0..n-1 on a grid with step `dt`.
pub fn tabulate_kernel(spec: &BathSpec, dt: f64, n: usize) -> Result<KernelGrid> {
    spec.validate()?;
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::invalid("grid.dt", "must be finite and > 0"));
    }
    if n < 2 {
        return Err(Error::invalid("grid.n", "must be >= 2"));
    }
    let values = (0..n)
        .map(|j| evaluate_kernel(spec, j as f64 * dt))
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelGrid { dt, n, values })
}
