//! Exact operator solution of the linear quantum Langevin equation and the
//! equal-time commutator [x̂_t, p̂_t] under two noise algebras.
//!
//! For a free or harmonic particle the Heisenberg solution is
//!
//! ```text
//! x̂_t = G_x(t) x̂₀ + G_p(t) p̂₀ + Σ_ω i w_ω (R_ω(t) â†_ω - R̄_ω(t) â_ω),
//! p̂_t = m dx̂_t/dt,
//! ```
//!
//! where G_x, G_p are the homogeneous solutions of m ẍ + γ ẋ + m ω₀² x = 0,
//! R_ω(t) = ∫₀^t G(t-s) e^{iωs} ds is the driven response to one bath phasor
//! (transient included, in closed form), and w_ω² are the mode couplings of
//! the discretized bath. Ladder commutators then give exactly
//!
//! ```text
//! C(t) = [x̂_t, p̂_t]/(iħ)
//!      = m (G_x Ġ_p - G_p Ġ_x)  +  2m Σ_ω w_ω² Im(R̄_ω Ṙ_ω).
//! ```
//!
//! The first term alone is the damped Wronskian e^{-γt/m}: that is the whole
//! story for a commutative (c-number) noise, where unitarity visibly fails.
//! With the quantum noise algebra the bath sum restores C(t) → 1 as the
//! cutoff and mode count grow.
//!
//! Mode grids come in two flavors: `uniform` (right-endpoint Riemann rule,
//! plain first-order physics discretization) and `gauss` (Gauss–Legendre
//! weights, matching the kernel quadrature node-for-node so state-independent
//! identities can be checked to near machine precision).

use crate::bath::BathSpec;
use crate::classical::{Potential, SystemSpec};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use num_complex::Complex64;
use rayon::prelude::*;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Damping classification of the linear system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DampingRegime {
    Underdamped,
    Critical,
    Overdamped,
    FreeDamped,
}

/// Relative width of the critical-damping window on the discriminant.
const CRITICAL_WINDOW: f64 = 1e-9;
/// Denominators below this trigger the resonance limit of the mode response.
const RESONANCE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
enum ResponseForm {
    /// G(t) = c (e^{λ₊ t} - e^{λ₋ t})
    TwoExp {
        c: Complex64,
        lp: Complex64,
        lm: Complex64,
    },
    /// G(t) = (t/m) e^{λ t} with λ = -γ/2m (λ = 0 for the undamped free case)
    PolyExp { lambda: f64 },
}

/// Closed-form impulse response of m ẍ + γ ẋ + m ω₀² x = δ(t).
#[derive(Debug, Clone, Copy)]
pub struct GreensFunction {
    pub mass: f64,
    pub gamma: f64,
    pub omega0: f64,
    pub regime: DampingRegime,
    form: ResponseForm,
}

impl GreensFunction {
    /// Only Free and Harmonic systems admit the closed-form solution.
    pub fn new(system: &SystemSpec, gamma: f64) -> Result<GreensFunction> {
        system.validate()?;
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::invalid("bath.gamma", "must be finite and >= 0"));
        }
        let m = system.mass;
        let omega0 = match system.potential {
            Potential::Free => 0.0,
            Potential::Harmonic { omega0 } => omega0,
            _ => {
                return Err(Error::Unsupported {
                    message: "Green's functions require a Free or Harmonic potential".into(),
                })
            }
        };
        if omega0 == 0.0 {
            let form = if gamma == 0.0 {
                ResponseForm::PolyExp { lambda: 0.0 }
            } else {
                ResponseForm::TwoExp {
                    c: Complex64::new(1.0 / gamma, 0.0),
                    lp: Complex64::new(0.0, 0.0),
                    lm: Complex64::new(-gamma / m, 0.0),
                }
            };
            return Ok(GreensFunction {
                mass: m,
                gamma,
                omega0,
                regime: DampingRegime::FreeDamped,
                form,
            });
        }
        let disc = gamma * gamma - 4.0 * m * m * omega0 * omega0;
        let scale = (gamma * gamma).max(4.0 * m * m * omega0 * omega0);
        let big_gamma = gamma / (2.0 * m);
        if disc.abs() <= CRITICAL_WINDOW * scale {
            Ok(GreensFunction {
                mass: m,
                gamma,
                omega0,
                regime: DampingRegime::Critical,
                form: ResponseForm::PolyExp { lambda: -big_gamma },
            })
        } else if disc < 0.0 {
            let w = (omega0 * omega0 - big_gamma * big_gamma).sqrt();
            Ok(GreensFunction {
                mass: m,
                gamma,
                omega0,
                regime: DampingRegime::Underdamped,
                form: ResponseForm::TwoExp {
                    c: Complex64::new(0.0, -1.0 / (2.0 * m * w)),
                    lp: Complex64::new(-big_gamma, w),
                    lm: Complex64::new(-big_gamma, -w),
                },
            })
        } else {
            let k = (big_gamma * big_gamma - omega0 * omega0).sqrt();
            Ok(GreensFunction {
                mass: m,
                gamma,
                omega0,
                regime: DampingRegime::Overdamped,
                form: ResponseForm::TwoExp {
                    c: Complex64::new(1.0 / (2.0 * m * k), 0.0),
                    lp: Complex64::new(-big_gamma + k, 0.0),
                    lm: Complex64::new(-big_gamma - k, 0.0),
                },
            })
        }
    }

    /// (G(t), Ġ(t)) with G(0) = 0 and m Ġ(0⁺) = 1.
    pub fn impulse_response(&self, t: f64) -> (f64, f64) {
        let (_, _, gp, m_gp_dot) = self.homogeneous(t);
        (gp, m_gp_dot / self.mass)
    }

    /// Homogeneous solutions: (G_x, m Ġ_x, G_p, m Ġ_p) with
    /// G_x(0) = 1, Ġ_x(0) = 0 and G_p(0) = 0, m Ġ_p(0) = 1.
    pub fn homogeneous(&self, t: f64) -> (f64, f64, f64, f64) {
        let m = self.mass;
        let big_gamma = self.gamma / (2.0 * m);
        match self.regime {
            DampingRegime::FreeDamped => {
                if self.gamma == 0.0 {
                    (1.0, 0.0, t / m, 1.0)
                } else {
                    let e = (-self.gamma * t / m).exp();
                    (1.0, 0.0, (1.0 - e) / self.gamma, e)
                }
            }
            DampingRegime::Underdamped => {
                let w = (self.omega0 * self.omega0 - big_gamma * big_gamma).sqrt();
                let e = (-big_gamma * t).exp();
                let (s, c) = (w * t).sin_cos();
                let gx = e * (c + big_gamma / w * s);
                let m_gx_dot = -m * self.omega0 * self.omega0 / w * e * s;
                let gp = e * s / (m * w);
                let m_gp_dot = e * (c - big_gamma / w * s);
                (gx, m_gx_dot, gp, m_gp_dot)
            }
            DampingRegime::Overdamped => {
                let k = (big_gamma * big_gamma - self.omega0 * self.omega0).sqrt();
                let e = (-big_gamma * t).exp();
                let s = (k * t).sinh();
                let c = (k * t).cosh();
                let gx = e * (c + big_gamma / k * s);
                let m_gx_dot = -m * self.omega0 * self.omega0 / k * e * s;
                let gp = e * s / (m * k);
                let m_gp_dot = e * (c - big_gamma / k * s);
                (gx, m_gx_dot, gp, m_gp_dot)
            }
            DampingRegime::Critical => {
                let e = (-big_gamma * t).exp();
                let gx = e * (1.0 + big_gamma * t);
                let m_gx_dot = -m * big_gamma * big_gamma * t * e;
                let gp = t * e / m;
                let m_gp_dot = e * (1.0 - big_gamma * t);
                (gx, m_gx_dot, gp, m_gp_dot)
            }
        }
    }

    /// Damped Wronskian m (G_x Ġ_p - G_p Ġ_x); equals e^{-γt/m} in closed
    /// form and is the whole commutator for a commutative noise.
    pub fn wronskian(&self, t: f64) -> f64 {
        let (gx, m_gx_dot, gp, m_gp_dot) = self.homogeneous(t);
        gx * m_gp_dot - gp * m_gx_dot
    }

    /// Response to a unit phasor drive: R(t; ω) = ∫₀^t G(t-s) e^{iωs} ds and
    /// its time derivative, in closed form with the transient included.
    pub fn mode_response(&self, omega: f64, t: f64) -> (Complex64, Complex64) {
        let e_iwt = Complex64::from_polar(1.0, omega * t);
        match self.form {
            ResponseForm::TwoExp { c, lp, lm } => {
                let (phi_p, psi_p) = phasor_pieces(lp, omega, t, e_iwt);
                let (phi_m, psi_m) = phasor_pieces(lm, omega, t, e_iwt);
                (c * (phi_p - phi_m), c * (psi_p - psi_m))
            }
            ResponseForm::PolyExp { lambda } => {
                // G = (t/m) e^{λt}: differentiate the two-exponential pieces
                // with respect to λ.
                let l = Complex64::new(lambda, 0.0);
                let den = I * omega - l;
                let e_lt = (l * t).exp();
                let m = self.mass;
                if den.norm() < RESONANCE_EPS {
                    // fully resonant: R = t²/2m e^{λt}
                    let r = e_lt * (0.5 * t * t / m);
                    let rdot = e_lt * (t / m) + l * r;
                    (r, rdot)
                } else {
                    let r = (-e_lt * t / den + (e_iwt - e_lt) / (den * den)) / m;
                    let rdot =
                        (-e_lt * (1.0 + l * t) / den + (I * omega * e_iwt - l * e_lt) / (den * den))
                            / m;
                    (r, rdot)
                }
            }
        }
    }
}

/// (φ, ψ) = ((e^{iωt} - e^{λt})/(iω-λ), (iω e^{iωt} - λ e^{λt})/(iω-λ)),
/// with the resonance limit when iω ≈ λ.
fn phasor_pieces(
    lambda: Complex64,
    omega: f64,
    t: f64,
    e_iwt: Complex64,
) -> (Complex64, Complex64) {
    let den = I * omega - lambda;
    let e_lt = lambda.exp_t(t);
    if den.norm() < RESONANCE_EPS {
        (e_lt * t, e_lt * (1.0 + lambda * t))
    } else {
        ((e_iwt - e_lt) / den, (I * omega * e_iwt - lambda * e_lt) / den)
    }
}

trait ExpT {
    fn exp_t(self, t: f64) -> Complex64;
}

impl ExpT for Complex64 {
    fn exp_t(self, t: f64) -> Complex64 {
        (self * t).exp()
    }
}

/// [OP]-style wrapper: closed-form (G, Ġ) at a single time.
pub fn greens_function(system: &SystemSpec, gamma: f64, t: f64) -> Result<(f64, f64)> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::NonFinite { what: "time" });
    }
    Ok(GreensFunction::new(system, gamma)?.impulse_response(t))
}

/// Finite bath of harmonic modes with the couplings of the noise
/// representation: w_ω² = (γ/π) ω window(ω) · (quadrature weight).
#[derive(Debug, Clone)]
pub struct ModeBath {
    pub omegas: Vec<f64>,
    /// Nominal spacing Ω_eff / mode count.
    pub d_omega: f64,
    /// w_ω² per mode (quadrature weight folded in).
    pub couplings: Vec<f64>,
}

impl ModeBath {
    /// Right-endpoint Riemann grid ω_j = j·Δω on (0, Ω_eff].
    pub fn uniform(bath: &BathSpec, modes: usize) -> Result<ModeBath> {
        bath.validate()?;
        if modes == 0 {
            return Err(Error::invalid("modes", "must be >= 1"));
        }
        let omega_max = bath.cutoff.effective_max();
        let d_omega = omega_max / modes as f64;
        let pref = bath.gamma / std::f64::consts::PI;
        let mut omegas = Vec::with_capacity(modes);
        let mut couplings = Vec::with_capacity(modes);
        for j in 1..=modes {
            let omega = j as f64 * d_omega;
            omegas.push(omega);
            couplings.push(pref * omega * bath.cutoff.window(omega) * d_omega);
        }
        Ok(ModeBath {
            omegas,
            d_omega,
            couplings,
        })
    }

    /// Gauss–Legendre nodes and weights on [0, Ω_eff]; matches the kernel
    /// quadrature exactly when the node counts agree.
    pub fn gauss(bath: &BathSpec, modes: usize) -> Result<ModeBath> {
        bath.validate()?;
        if modes == 0 {
            return Err(Error::invalid("modes", "must be >= 1"));
        }
        let omega_max = bath.cutoff.effective_max();
        let gl = gauss_legendre(modes);
        let pref = bath.gamma / std::f64::consts::PI;
        let mut omegas = Vec::with_capacity(modes);
        let mut couplings = Vec::with_capacity(modes);
        for (omega, weight) in gl.mapped(0.0, omega_max) {
            omegas.push(omega);
            couplings.push(pref * omega * bath.cutoff.window(omega) * weight);
        }
        Ok(ModeBath {
            omegas,
            d_omega: omega_max / modes as f64,
            couplings,
        })
    }

    /// Same grid with all couplings zeroed: a noise whose commutator
    /// vanishes identically (the c-number substitution made structural).
    pub fn with_zero_couplings(&self) -> ModeBath {
        ModeBath {
            omegas: self.omegas.clone(),
            d_omega: self.d_omega,
            couplings: vec![0.0; self.couplings.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseAlgebra {
    Quantum,
    Commutative,
}

/// Equal-time commutator [x̂_t, p̂_t] in units of iħ on a uniform time grid.
#[derive(Debug, Clone)]
pub struct CommutatorTrace {
    pub dt: f64,
    pub values: Vec<Complex64>,
    pub algebra: NoiseAlgebra,
}

impl CommutatorTrace {
    pub fn sup_deviation_from_unity(&self) -> f64 {
        self.values
            .iter()
            .map(|c| (c - Complex64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max)
    }
}

fn check_t_grid(dt: f64, n: usize) -> Result<()> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::invalid("t_grid.dt", "must be finite and > 0"));
    }
    if n < 1 {
        return Err(Error::invalid("t_grid.n", "must be >= 1"));
    }
    Ok(())
}

/// Quantum-algebra commutator trace: Wronskian plus the bath mode sum.
pub fn commutator_trace(
    system: &SystemSpec,
    bath: &BathSpec,
    modes: &ModeBath,
    dt: f64,
    n: usize,
) -> Result<CommutatorTrace> {
    bath.validate()?;
    check_t_grid(dt, n)?;
    let green = GreensFunction::new(system, bath.gamma)?;
    let t_max = (n - 1) as f64 * dt;
    if !modes.is_empty() && bath.gamma > 0.0 && modes.d_omega * t_max > 0.5 {
        return Err(Error::UnderResolved {
            message: format!(
                "mode spacing {:.3e} too coarse for t_max = {t_max} (need d_omega·t_max <= 0.5)",
                modes.d_omega
            ),
        });
    }
    let m = system.mass;
    let values: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 * dt;
            let base = green.wronskian(t);
            let mut bath_term = 0.0;
            for (&omega, &w2) in modes.omegas.iter().zip(&modes.couplings) {
                if w2 == 0.0 {
                    continue;
                }
                let (r, rdot) = green.mode_response(omega, t);
                bath_term += w2 * (r.conj() * rdot).im;
            }
            Complex64::new(base + 2.0 * m * bath_term, 0.0)
        })
        .collect();
    Ok(CommutatorTrace {
        dt,
        values,
        algebra: NoiseAlgebra::Quantum,
    })
}

/// Commutative-noise trace: all noise-noise commutators vanish, leaving
/// only the initial-operator Wronskian m (G_x Ġ_p - G_p Ġ_x) = e^{-γt/m}.
pub fn commutator_trace_commutative(
    system: &SystemSpec,
    bath: &BathSpec,
    dt: f64,
    n: usize,
) -> Result<CommutatorTrace> {
    bath.validate()?;
    check_t_grid(dt, n)?;
    let green = GreensFunction::new(system, bath.gamma)?;
    let values = (0..n)
        .map(|k| Complex64::new(green.wronskian(k as f64 * dt), 0.0))
        .collect();
    Ok(CommutatorTrace {
        dt,
        values,
        algebra: NoiseAlgebra::Commutative,
    })
}

/// Thermal symmetric correlation ½⟨[η̂_t, η̂_t']₊⟩ as a finite mode sum;
/// converges to the kernel K_T under mode refinement.
pub fn symmetric_noise_correlation(
    bath: &BathSpec,
    modes: &ModeBath,
    t: f64,
    t_prime: f64,
) -> Result<f64> {
    bath.validate()?;
    if !t.is_finite() || !t_prime.is_finite() {
        return Err(Error::NonFinite { what: "time" });
    }
    if modes.is_empty() {
        return Err(Error::UnderResolved {
            message: "empty mode grid".into(),
        });
    }
    let tau = t - t_prime;
    let mut sum = 0.0;
    for (&omega, &w2) in modes.omegas.iter().zip(&modes.couplings) {
        sum += w2 * bath.hbar * bath.coth_factor(omega) * (omega * tau).cos();
    }
    Ok(sum)
}

/// State-independent mode commutator scalar: [η̂_t, η̂_t'] = i·A with
/// A(τ) = -2ħ Σ_ω w_ω² sin(ωτ). Matches `evaluate_antisymmetric_kernel`
/// exactly on a matched (Gauss) grid.
pub fn antisymmetric_mode_sum(bath: &BathSpec, modes: &ModeBath, lag: f64) -> Result<f64> {
    bath.validate()?;
    if !lag.is_finite() {
        return Err(Error::NonFinite { what: "lag" });
    }
    let mut sum = 0.0;
    for (&omega, &w2) in modes.omegas.iter().zip(&modes.couplings) {
        sum += w2 * (omega * lag).sin();
    }
    Ok(-2.0 * bath.hbar * sum)
}

/// One row of a refinement ladder.
#[derive(Debug, Clone, Copy)]
pub struct RefinementLevel {
    pub modes: usize,
    pub omega_max: f64,
    /// sup_t |C(t) - 1| over the time grid.
    pub sup_abs_dev: f64,
}

/// Joint refinement: each level doubles both the cutoff and the mode count
/// (constant mode density), which is the limit in which the quantum algebra
/// restores C ≡ 1.
pub fn refinement_report(
    system: &SystemSpec,
    bath: &BathSpec,
    base_modes: usize,
    levels: usize,
    dt: f64,
    n: usize,
) -> Result<Vec<RefinementLevel>> {
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        let factor = (1u64 << level) as f64;
        let bath_l = bath.with_scaled_cutoff(factor);
        let modes = ModeBath::uniform(&bath_l, base_modes << level)?;
        let trace = commutator_trace(system, &bath_l, &modes, dt, n)?;
        out.push(RefinementLevel {
            modes: modes.len(),
            omega_max: bath_l.cutoff.effective_max(),
            sup_abs_dev: trace.sup_deviation_from_unity(),
        });
    }
    Ok(out)
}

/// Mode-resolution monitor at fixed cutoff: sup_t |C_M(t) - C_{2M}(t)|.
pub fn mode_resolution_check(
    system: &SystemSpec,
    bath: &BathSpec,
    modes: usize,
    dt: f64,
    n: usize,
) -> Result<f64> {
    let coarse = commutator_trace(system, bath, &ModeBath::uniform(bath, modes)?, dt, n)?;
    let fine = commutator_trace(system, bath, &ModeBath::uniform(bath, 2 * modes)?, dt, n)?;
    Ok(coarse
        .values
        .iter()
        .zip(&fine.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::Cutoff;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn free(mass: f64) -> SystemSpec {
        SystemSpec::new(mass, Potential::Free).unwrap()
    }

    fn harmonic(mass: f64, omega0: f64) -> SystemSpec {
        SystemSpec::new(mass, Potential::Harmonic { omega0 }).unwrap()
    }

    fn bath(gamma: f64, omega_c: f64) -> BathSpec {
        BathSpec::desk_units(gamma, 1.0, Cutoff::Hard { omega_c }, 128).unwrap()
    }

    #[test]
    fn free_particle_greens_function_closed_form() {
        let sys = free(1.0);
        for t in [0.0, 0.5, 2.0, 7.0] {
            let (g, gdot) = greens_function(&sys, 1.0, t).unwrap();
            assert_relative_eq!(g, 1.0 - (-t as f64).exp(), max_relative = 1e-14);
            assert_relative_eq!(gdot, (-t as f64).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn impulse_normalization_all_regimes() {
        let cases = [
            (free(2.0), 0.0),
            (free(2.0), 0.7),
            (harmonic(1.0, 1.0), 0.2),  // underdamped
            (harmonic(1.0, 1.0), 2.0),  // critical
            (harmonic(1.0, 1.0), 5.0),  // overdamped
            (harmonic(3.0, 0.5), 0.0),  // undamped
        ];
        for (sys, gamma) in cases {
            let green = GreensFunction::new(&sys, gamma).unwrap();
            let (g0, gdot0) = green.impulse_response(0.0);
            assert_eq!(g0, 0.0);
            assert_relative_eq!(sys.mass * gdot0, 1.0, max_relative = 1e-12);
            // also via the [OP] wrapper
            let (g, _) = greens_function(&sys, gamma, 0.0).unwrap();
            assert_eq!(g, 0.0);
        }
    }

    #[test]
    fn critical_window_is_selected() {
        let sys = harmonic(1.0, 1.0);
        let g = GreensFunction::new(&sys, 2.0).unwrap();
        assert_eq!(g.regime, DampingRegime::Critical);
        let g = GreensFunction::new(&sys, 2.0 * (1.0 + 1e-10)).unwrap();
        assert_eq!(g.regime, DampingRegime::Critical);
        let g = GreensFunction::new(&sys, 2.0 * (1.0 + 1e-6)).unwrap();
        assert_eq!(g.regime, DampingRegime::Overdamped);
    }

    #[test]
    fn underdamped_greens_function_matches_fine_ode_solve() {
        let (m, gamma, omega0) = (1.0, 0.2, 1.0);
        let sys = harmonic(m, omega0);
        let green = GreensFunction::new(&sys, gamma).unwrap();
        for t in [0.5f64, 1.0, 5.0] {
            // impulse response = homogeneous solution with x=0, v=1/m
            let steps = (t / 1e-5).round() as usize;
            let (x, v) =
                crate::reference::rk4_linear_oscillator(m, gamma, omega0, 0.0, 1.0 / m, 1e-5, steps);
            let (g, gdot) = green.impulse_response(t);
            assert_relative_eq!(g, x, epsilon = 1e-8);
            assert_relative_eq!(gdot, v, epsilon = 1e-8);
        }
    }

    #[test]
    fn unsupported_potential_is_rejected() {
        let sys = SystemSpec::new(1.0, Potential::Quartic { a: 1.0, b: 1.0 }).unwrap();
        assert!(matches!(
            greens_function(&sys, 0.1, 1.0),
            Err(Error::Unsupported { .. })
        ));
        assert!(greens_function(&free(1.0), 0.1, -1.0).is_err());
    }

    #[test]
    fn commutative_trace_is_the_damped_wronskian() {
        let b = bath(0.8, 50.0);
        for sys in [free(1.0), harmonic(1.0, 1.3), harmonic(2.0, 0.4)] {
            let trace = commutator_trace_commutative(&sys, &b, 0.05, 101).unwrap();
            assert_eq!(trace.values[0].re, 1.0);
            for (k, c) in trace.values.iter().enumerate() {
                let t = k as f64 * 0.05;
                let expected = (-0.8 * t / sys.mass).exp();
                assert_abs_diff_eq!(c.re, expected, epsilon = 1e-10);
                assert_eq!(c.im, 0.0);
            }
        }
    }

    #[test]
    fn commutative_trace_matches_numerical_wronskian_propagation() {
        // brute-force fundamental system at dt = 1e-4
        let (m, gamma, omega0) = (1.0, 1.0, 0.0);
        let sys = free(m);
        let b = bath(gamma, 50.0);
        let trace = commutator_trace_commutative(&sys, &b, 0.5, 7).unwrap();
        for (k, c) in trace.values.iter().enumerate() {
            let t = k as f64 * 0.5;
            let steps = (t / 1e-4).round() as usize;
            let (x1, v1) = crate::reference::rk4_linear_oscillator(m, gamma, omega0, 1.0, 0.0, 1e-4, steps);
            let (x2, v2) =
                crate::reference::rk4_linear_oscillator(m, gamma, omega0, 0.0, 1.0 / m, 1e-4, steps);
            let wronskian = m * (x1 * v2 - x2 * v1);
            assert_abs_diff_eq!(c.re, wronskian, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_friction_trace_is_identically_one() {
        let b = bath(0.0, 50.0);
        let modes = ModeBath::uniform(&b, 512).unwrap();
        // free particle: G_x = 1, m Ġ_p = 1 exactly, so C ≡ 1 bit-for-bit;
        // the conservative oscillator Wronskian is cos² + sin², i.e. exact
        // up to one rounding of the trig pair.
        let q = commutator_trace(&free(1.0), &b, &modes, 0.05, 64).unwrap();
        for c in &q.values {
            assert_eq!(c.re, 1.0);
            assert_eq!(c.im, 0.0);
        }
        let q = commutator_trace(&harmonic(1.0, 1.0), &b, &modes, 0.05, 64).unwrap();
        for c in &q.values {
            assert_abs_diff_eq!(c.re, 1.0, epsilon = 4.0 * f64::EPSILON);
            assert_eq!(c.im, 0.0);
        }
        let cl = commutator_trace_commutative(&harmonic(1.0, 1.0), &b, 0.05, 64).unwrap();
        for c in &cl.values {
            assert_abs_diff_eq!(c.re, 1.0, epsilon = 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn quantum_trace_starts_at_exactly_one() {
        let b = bath(0.7, 80.0);
        let modes = ModeBath::uniform(&b, 2000).unwrap();
        for sys in [free(1.0), harmonic(1.0, 1.0), harmonic(2.0, 0.3)] {
            let q = commutator_trace(&sys, &b, &modes, 0.01, 4).unwrap();
            assert_eq!(q.values[0], Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn zeroed_couplings_reproduce_the_commutative_code_path() {
        let b = bath(0.6, 60.0);
        let modes = ModeBath::uniform(&b, 800).unwrap().with_zero_couplings();
        let sys = harmonic(1.0, 1.0);
        let q = commutator_trace(&sys, &b, &modes, 0.02, 120).unwrap();
        let c = commutator_trace_commutative(&sys, &b, 0.02, 120).unwrap();
        for (a, b) in q.values.iter().zip(&c.values) {
            assert_eq!(a.re, b.re);
        }
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        let b = bath(1.0, 50.0);
        let modes = ModeBath::uniform(&b, 16).unwrap();
        assert!(matches!(
            commutator_trace(&free(1.0), &b, &modes, 0.5, 100),
            Err(Error::UnderResolved { .. })
        ));
    }

    #[test]
    fn symmetric_mode_sum_approaches_kernel_quadrature() {
        // cutoff placed at a node of cos(ω·0.3) so the first-order endpoint
        // coefficient leaves margin at both mode counts
        let omega_c = 4.5 * std::f64::consts::PI / 0.3;
        let b = BathSpec::desk_units(1.0, 2.0, Cutoff::Hard { omega_c }, 1024).unwrap();
        let tau = 0.3;
        let exact = crate::bath::evaluate_kernel(&b, tau).unwrap();
        let coarse =
            symmetric_noise_correlation(&b, &ModeBath::uniform(&b, 20_000).unwrap(), tau, 0.0)
                .unwrap();
        let fine =
            symmetric_noise_correlation(&b, &ModeBath::uniform(&b, 40_000).unwrap(), tau, 0.0)
                .unwrap();
        let err_coarse = (coarse - exact).abs() / exact.abs();
        let err_fine = (fine - exact).abs() / exact.abs();
        assert!(err_coarse <= 1e-3, "coarse error {err_coarse}");
        assert!(err_fine <= 2.5e-4, "fine error {err_fine}");
    }

    #[test]
    fn gauss_mode_grid_matches_kernel_quadratures_to_machine_precision() {
        let b = BathSpec::desk_units(1.2, 1.7, Cutoff::Hard { omega_c: 30.0 }, 256).unwrap();
        let modes = ModeBath::gauss(&b, 256).unwrap();
        for tau in [0.0, 0.1, 0.45, 1.2] {
            let a_kernel = crate::bath::evaluate_antisymmetric_kernel(&b, tau).unwrap();
            let a_modes = antisymmetric_mode_sum(&b, &modes, tau).unwrap();
            assert_abs_diff_eq!(a_modes, a_kernel, epsilon = 1e-10);
            let k_kernel = crate::bath::evaluate_kernel(&b, tau).unwrap();
            let k_modes = symmetric_noise_correlation(&b, &modes, tau, 0.0).unwrap();
            assert_relative_eq!(k_modes, k_kernel, max_relative = 1e-10);
        }
        // zero friction: correlation vanishes
        let b0 = BathSpec::desk_units(0.0, 1.7, Cutoff::Hard { omega_c: 30.0 }, 256).unwrap();
        let modes0 = ModeBath::gauss(&b0, 64).unwrap();
        assert_eq!(symmetric_noise_correlation(&b0, &modes0, 0.4, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn free_particle_bath_term_restores_unity() {
        // decomposition: C_quantum = e^{-γt/m} + bath term, with the bath
        // term approaching 1 - e^{-γt/m} under refinement
        let sys = free(1.0);
        let b = bath(0.5, 400.0);
        let modes = ModeBath::uniform(&b, 20_000).unwrap();
        let q = commutator_trace(&sys, &b, &modes, 0.25, 21).unwrap();
        let c = commutator_trace_commutative(&sys, &b, 0.25, 21).unwrap();
        for k in 1..21 {
            let t = k as f64 * 0.25;
            let bath_term = q.values[k].re - c.values[k].re;
            let expected = 1.0 - (-0.5 * t as f64).exp();
            assert_abs_diff_eq!(bath_term, expected, epsilon = 3e-3);
        }
    }
}
