//! Independent reference computations used for verification.
//!
//! Everything here deliberately avoids the implementation paths it is used
//! to check: kernel integrals are done by adaptive Simpson instead of
//! Gauss–Legendre, trajectories by closed-form solutions or by a separate
//! stochastic integrator, Green's functions by brute-force ODE stepping.
//! The `verify` module and the test suites are the only intended consumers.

use crate::bath::BathSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

/// Adaptive Simpson integration with Richardson acceptance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// coth(x) for x > 0, stable for both tiny and large arguments.
fn coth(x: f64) -> f64 {
    if x < 1e-6 {
        1.0 / x + x / 3.0
    } else {
        1.0 + 2.0 / f64::exp_m1(2.0 * x)
    }
}

/// K_T by adaptive quadrature of the same integrand (independent route).
pub fn kernel_reference(spec: &BathSpec, lag: f64) -> f64 {
    if spec.gamma == 0.0 {
        return 0.0;
    }
    let kt = spec.thermal_energy();
    let zero_limit = 2.0 * kt / spec.hbar;
    let integrand = |omega: f64| {
        let flux = if omega == 0.0 {
            zero_limit
        } else {
            omega * coth(spec.hbar * omega / (2.0 * kt))
        };
        flux * spec.cutoff.window(omega) * (omega * lag).cos()
    };
    let omega_max = spec.cutoff.effective_max();
    // absolute tolerance scaled to a crude magnitude bound of the integral
    let scale = (zero_limit + omega_max) * omega_max;
    let tol = 1e-13 * scale.max(1.0);
    let integral = adaptive_simpson(&integrand, 0.0, omega_max, tol);
    spec.gamma * spec.hbar / std::f64::consts::PI * integral
}

/// Closed form of A(τ) for a hard cutoff:
/// -(2γħ/π)·(sin(ω_c τ) - ω_c τ cos(ω_c τ)) / τ².
pub fn antisymmetric_closed_form_hard(gamma: f64, hbar: f64, omega_c: f64, lag: f64) -> f64 {
    if lag == 0.0 {
        return 0.0;
    }
    let z = omega_c * lag;
    -(2.0 * gamma * hbar / std::f64::consts::PI) * (z.sin() - z * z.cos()) / (lag * lag)
}

/// Smeared kernel action ∫ K_T(τ) f(t-τ) dτ on τ ∈ [-half_width, half_width],
/// composite Simpson with `panels` (forced even) subintervals.
pub fn smear_kernel<F: Fn(f64) -> f64>(
    spec: &BathSpec,
    f: &F,
    t: f64,
    half_width: f64,
    panels: usize,
) -> f64 {
    let n = if panels % 2 == 0 { panels } else { panels + 1 };
    let h = 2.0 * half_width / n as f64;
    let g = |tau: f64| kernel_reference(spec, tau) * f(t - tau);
    let mut sum = g(-half_width) + g(half_width);
    for j in 1..n {
        let tau = -half_width + j as f64 * h;
        sum += if j % 2 == 1 { 4.0 } else { 2.0 } * g(tau);
    }
    sum * h / 3.0
}

/// Closed-form state of the damped (or free) oscillator
/// m ẍ + γ ẋ + m ω₀² x = 0 started from (x0, p0). Returns (x, p).
pub fn damped_oscillator_analytic(
    mass: f64,
    gamma: f64,
    omega0: f64,
    x0: f64,
    p0: f64,
    t: f64,
) -> (f64, f64) {
    let v0 = p0 / mass;
    let big_gamma = gamma / (2.0 * mass);
    if omega0 == 0.0 {
        if gamma == 0.0 {
            return (x0 + v0 * t, p0);
        }
        let nu = gamma / mass;
        let e = (-nu * t).exp();
        return (x0 + v0 / nu * (1.0 - e), p0 * e);
    }
    let disc = omega0 * omega0 - big_gamma * big_gamma;
    let e = (-big_gamma * t).exp();
    if disc > 0.0 {
        let w = disc.sqrt();
        let (s, c) = (w * t).sin_cos();
        let x = e * (x0 * c + (v0 + big_gamma * x0) / w * s);
        let v = e * (v0 * c - (omega0 * omega0 * x0 + big_gamma * v0) / w * s);
        (x, mass * v)
    } else if disc < 0.0 {
        let k = (-disc).sqrt();
        let s = (k * t).sinh();
        let c = (k * t).cosh();
        let x = e * (x0 * c + (v0 + big_gamma * x0) / k * s);
        let v = e * (v0 * c - (omega0 * omega0 * x0 + big_gamma * v0) / k * s);
        (x, mass * v)
    } else {
        let x = e * (x0 + (v0 + big_gamma * x0) * t);
        let v = e * (v0 - (omega0 * omega0 * x0 + big_gamma * v0) * t);
        (x, mass * v)
    }
}

/// Decay envelope amplitude of the underdamped oscillator:
/// A(t)² = x² + ((v + Γ x)/ω̃)², with A(t) = A(0)·exp(-γ t / 2m) exactly.
pub fn underdamped_envelope(mass: f64, gamma: f64, omega0: f64, x: f64, p: f64) -> f64 {
    let big_gamma = gamma / (2.0 * mass);
    let w = (omega0 * omega0 - big_gamma * big_gamma).sqrt();
    let v = p / mass;
    (x * x + ((v + big_gamma * x) / w).powi(2)).sqrt()
}

/// Fourth-order fixed-step propagation of m ẍ + γ ẋ + m ω₀² x = 0.
/// Brute-force oracle for the closed-form Green's functions.
pub fn rk4_linear_oscillator(
    mass: f64,
    gamma: f64,
    omega0: f64,
    x0: f64,
    v0: f64,
    dt: f64,
    steps: usize,
) -> (f64, f64) {
    let acc = |x: f64, v: f64| -(gamma * v) / mass - omega0 * omega0 * x;
    let mut x = x0;
    let mut v = v0;
    for _ in 0..steps {
        let k1 = (v, acc(x, v));
        let k2 = (v + 0.5 * dt * k1.1, acc(x + 0.5 * dt * k1.0, v + 0.5 * dt * k1.1));
        let k3 = (v + 0.5 * dt * k2.1, acc(x + 0.5 * dt * k2.0, v + 0.5 * dt * k2.1));
        let k4 = (v + dt * k3.1, acc(x + dt * k3.0, v + dt * k3.1));
        x += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (x, v)
}

/// Euler–Maruyama reference for the white-noise Langevin equation
/// m dv = (-γ v - V'(x)) dt + sqrt(2 kT γ) dW. Returns (x, p) time series.
/// `omega0 = 0` gives the free (Ornstein–Uhlenbeck momentum) case.
#[allow(clippy::too_many_arguments)]
pub fn euler_maruyama_langevin(
    mass: f64,
    gamma: f64,
    omega0: f64,
    kt: f64,
    x0: f64,
    p0: f64,
    dt: f64,
    steps: usize,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let amp = (2.0 * kt * gamma * dt).sqrt();
    let mut xs = Vec::with_capacity(steps + 1);
    let mut ps = Vec::with_capacity(steps + 1);
    let mut x = x0;
    let mut p = p0;
    xs.push(x);
    ps.push(p);
    for _ in 0..steps {
        let dw: f64 = StandardNormal.sample(&mut rng);
        let force = -mass * omega0 * omega0 * x;
        p += (force - gamma * p / mass) * dt + amp * dw;
        x += p / mass * dt;
        xs.push(x);
        ps.push(p);
    }
    (xs, ps)
}

/// Five-point Richardson derivative, used as a symbolic-differentiation
/// stand-in when checking potential forces.
pub fn derivative<F: Fn(f64) -> f64>(f: &F, x: f64) -> f64 {
    let h = 1e-4 * (1.0 + x.abs());
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_handles_oscillatory_integrand() {
        let val = adaptive_simpson(&|x: f64| (40.0 * x).sin(), 0.0, 3.0, 1e-12);
        let exact = (1.0 - (120.0f64).cos()) / 40.0;
        assert_relative_eq!(val, exact, epsilon = 1e-10);
    }

    #[test]
    fn analytic_oscillator_conserves_energy_without_damping() {
        let (x, p) = damped_oscillator_analytic(2.0, 0.0, 1.5, 0.7, -0.3, 4.0);
        let e0 = 0.3f64.powi(2) / 4.0 + 0.5 * 2.0 * 1.5f64.powi(2) * 0.7f64.powi(2);
        let e = p * p / 4.0 + 0.5 * 2.0 * 1.5f64.powi(2) * x * x;
        assert_relative_eq!(e, e0, max_relative = 1e-12);
    }

    #[test]
    fn rk4_matches_analytic_solution() {
        let (x, v) = rk4_linear_oscillator(1.0, 0.2, 1.0, 1.0, 0.0, 1e-4, 20_000);
        let (xa, pa) = damped_oscillator_analytic(1.0, 0.2, 1.0, 1.0, 0.0, 2.0);
        assert_relative_eq!(x, xa, epsilon = 1e-10);
        assert_relative_eq!(v, pa, epsilon = 1e-10);
    }

    #[test]
    fn coth_agrees_with_direct_formula_across_branches() {
        // small-argument series branch vs exact value
        let x = 5e-7;
        let exact = 1.0 / x + x / 3.0 - x * x * x / 45.0;
        assert_relative_eq!(coth(x), exact, max_relative = 1e-14);
        // exponential branch vs textbook value
        let e4 = (4.0f64).exp();
        assert_relative_eq!(coth(2.0), (e4 + 1.0) / (e4 - 1.0), max_relative = 1e-14);
    }
}
