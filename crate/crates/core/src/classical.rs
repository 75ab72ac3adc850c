//! Classical Langevin dynamics driven by a sampled noise path.
//!
//! Per realization the noise is a fixed continuous forcing, so
//! m ẍ + γ ẋ + V'(x) = η(t) is an ordinary ODE and Heun's second-order
//! scheme applies directly; no stochastic-calculus convention enters here
//! (that subtlety lives entirely in the sampler).

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::noise::NoisePath;
use rayon::prelude::*;

/// Closed enumeration of potential families, so configs can name them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Free,
    Harmonic { omega0: f64 },
    /// V(x) = a x² + b x⁴.
    Quartic { a: f64, b: f64 },
    /// V(x) = barrier · ((x/x0)² - 1)², minima at ±x0, barrier height at 0.
    DoubleWell { barrier: f64, x0: f64 },
}

/// Mass and potential of the tagged particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec {
    pub mass: f64,
    pub potential: Potential,
}

impl SystemSpec {
    pub fn new(mass: f64, potential: Potential) -> Result<Self> {
        let spec = SystemSpec { mass, potential };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mass.is_finite() || self.mass <= 0.0 {
            return Err(Error::invalid("system.mass", "must be finite and > 0"));
        }
        match self.potential {
            Potential::Free => {}
            Potential::Harmonic { omega0 } => {
                if !omega0.is_finite() || omega0 <= 0.0 {
                    return Err(Error::invalid("system.omega0", "must be finite and > 0"));
                }
            }
            Potential::Quartic { a, b } => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::invalid("system.quartic", "parameters must be finite"));
                }
            }
            Potential::DoubleWell { barrier, x0 } => {
                if !barrier.is_finite() || !x0.is_finite() {
                    return Err(Error::invalid(
                        "system.double_well",
                        "parameters must be finite",
                    ));
                }
                if x0 == 0.0 {
                    return Err(Error::invalid("system.x0", "well position must be nonzero"));
                }
            }
        }
        Ok(())
    }

    pub fn potential_energy(&self, x: f64) -> f64 {
        match self.potential {
            Potential::Free => 0.0,
            Potential::Harmonic { omega0 } => 0.5 * self.mass * omega0 * omega0 * x * x,
            Potential::Quartic { a, b } => a * x * x + b * x.powi(4),
            Potential::DoubleWell { barrier, x0 } => {
                let r = (x / x0).powi(2) - 1.0;
                barrier * r * r
            }
        }
    }
}

/// Force -V'(x) for the configured potential family.
pub fn potential_force(system: &SystemSpec, x: f64) -> Result<f64> {
    system.validate()?;
    if !x.is_finite() {
        return Err(Error::NonFinite { what: "position" });
    }
    Ok(force_unchecked(system, x))
}

#[inline]
fn force_unchecked(system: &SystemSpec, x: f64) -> f64 {
    match system.potential {
        Potential::Free => 0.0,
        Potential::Harmonic { omega0 } => -system.mass * omega0 * omega0 * x,
        Potential::Quartic { a, b } => -(2.0 * a * x + 4.0 * b * x * x * x),
        Potential::DoubleWell { barrier, x0 } => {
            -4.0 * barrier * x * ((x / x0).powi(2) - 1.0) / (x0 * x0)
        }
    }
}

/// One phase-space history on the noise grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub realization_index: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Integrate m ẍ + γ ẋ + V'(x) = η(t) with Heun's method on the noise grid.
pub fn integrate(
    system: &SystemSpec,
    bath: &BathSpec,
    noise: &NoisePath,
    x0: f64,
    p0: f64,
) -> Result<Trajectory> {
    system.validate()?;
    bath.validate()?;
    if !x0.is_finite() || !p0.is_finite() {
        return Err(Error::NonFinite {
            what: "initial condition",
        });
    }
    if noise.len() < 2 {
        return Err(Error::GridMismatch {
            message: "noise path must have at least 2 samples".into(),
        });
    }
    let n = noise.len();
    let dt = noise.dt;
    let m = system.mass;
    let gamma = bath.gamma;

    let mut xs = Vec::with_capacity(n);
    let mut ps = Vec::with_capacity(n);
    let mut x = x0;
    let mut p = p0;
    xs.push(x);
    ps.push(p);
    for k in 0..n - 1 {
        let eta0 = noise.values[k];
        let eta1 = noise.values[k + 1];
        // predictor
        let ax = p / m;
        let ap = force_unchecked(system, x) - gamma * p / m + eta0;
        let xp = x + dt * ax;
        let pp = p + dt * ap;
        // corrector
        let bx = pp / m;
        let bp = force_unchecked(system, xp) - gamma * pp / m + eta1;
        x += 0.5 * dt * (ax + bx);
        p += 0.5 * dt * (ap + bp);
        if !x.is_finite() || !p.is_finite() {
            return Err(Error::StepOverflow { step: k + 1 });
        }
        xs.push(x);
        ps.push(p);
    }
    Ok(Trajectory {
        dt,
        x: xs,
        p: ps,
        realization_index: noise.realization_index,
    })
}

/// Integrate one trajectory per noise path (parallel across realizations).
pub fn integrate_ensemble(
    system: &SystemSpec,
    bath: &BathSpec,
    paths: &[NoisePath],
    x0: f64,
    p0: f64,
) -> Result<Vec<Trajectory>> {
    paths
        .par_iter()
        .map(|path| integrate(system, bath, path, x0, p0))
        .collect()
}

/// Mean and standard error of one observable at one time.
#[derive(Debug, Clone, Copy, Default)]
pub struct MomentRow {
    pub mean_x: f64,
    pub se_x: f64,
    pub mean_p: f64,
    pub se_p: f64,
    pub mean_x2: f64,
    pub se_x2: f64,
    pub mean_p2: f64,
    pub se_p2: f64,
    pub mean_xp: f64,
    pub se_xp: f64,
}

/// Time-resolved ensemble moments plus their time average after burn-in.
#[derive(Debug, Clone)]
pub struct MomentsReport {
    pub dt: f64,
    pub burn_in: usize,
    pub rows: Vec<MomentRow>,
    /// Realization-level time averages over the post-burn-in window,
    /// summarized across the ensemble (standard errors over realizations).
    pub averaged: MomentRow,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Ensemble moments ⟨x⟩, ⟨p⟩, ⟨x²⟩, ⟨p²⟩, ⟨xp⟩ with standard errors.
pub fn ensemble_statistics(trajectories: &[Trajectory], burn_in: usize) -> Result<MomentsReport> {
    if trajectories.len() < 2 {
        return Err(Error::invalid("trajectories", "need at least 2 realizations"));
    }
    let dt = trajectories[0].dt;
    let n = trajectories[0].len();
    for t in trajectories {
        if t.dt != dt || t.len() != n {
            return Err(Error::GridMismatch {
                message: "all trajectories must share dt and length".into(),
            });
        }
    }
    if burn_in >= n {
        return Err(Error::invalid("burn_in", "must be < trajectory length"));
    }

    let rows = (0..n)
        .map(|t| {
            let xs: Vec<f64> = trajectories.iter().map(|tr| tr.x[t]).collect();
            let ps: Vec<f64> = trajectories.iter().map(|tr| tr.p[t]).collect();
            let x2: Vec<f64> = xs.iter().map(|x| x * x).collect();
            let p2: Vec<f64> = ps.iter().map(|p| p * p).collect();
            let xp: Vec<f64> = xs.iter().zip(&ps).map(|(x, p)| x * p).collect();
            let (mean_x, se_x) = mean_se(&xs);
            let (mean_p, se_p) = mean_se(&ps);
            let (mean_x2, se_x2) = mean_se(&x2);
            let (mean_p2, se_p2) = mean_se(&p2);
            let (mean_xp, se_xp) = mean_se(&xp);
            MomentRow {
                mean_x,
                se_x,
                mean_p,
                se_p,
                mean_x2,
                se_x2,
                mean_p2,
                se_p2,
                mean_xp,
                se_xp,
            }
        })
        .collect();

    // time averages per realization, then mean/se across realizations
    let window = n - burn_in;
    let mut avg = [Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for tr in trajectories {
        let (mut sx, mut sp, mut sx2, mut sp2, mut sxp) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for t in burn_in..n {
            let (x, p) = (tr.x[t], tr.p[t]);
            sx += x;
            sp += p;
            sx2 += x * x;
            sp2 += p * p;
            sxp += x * p;
        }
        let w = window as f64;
        avg[0].push(sx / w);
        avg[1].push(sp / w);
        avg[2].push(sx2 / w);
        avg[3].push(sp2 / w);
        avg[4].push(sxp / w);
    }
    let (mean_x, se_x) = mean_se(&avg[0]);
    let (mean_p, se_p) = mean_se(&avg[1]);
    let (mean_x2, se_x2) = mean_se(&avg[2]);
    let (mean_p2, se_p2) = mean_se(&avg[3]);
    let (mean_xp, se_xp) = mean_se(&avg[4]);
    Ok(MomentsReport {
        dt,
        burn_in,
        rows,
        averaged: MomentRow {
            mean_x,
            se_x,
            mean_p,
            se_p,
            mean_x2,
            se_x2,
            mean_p2,
            se_p2,
            mean_xp,
            se_xp,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::Cutoff;
    use approx::assert_relative_eq;

    fn bath_with_gamma(gamma: f64) -> BathSpec {
        BathSpec::desk_units(gamma, 1.0, Cutoff::Hard { omega_c: 10.0 }, 64).unwrap()
    }

    #[test]
    fn forces_match_definitions() {
        let m = 2.0;
        let free = SystemSpec::new(m, Potential::Free).unwrap();
        assert_eq!(potential_force(&free, 3.1).unwrap(), 0.0);

        let harm = SystemSpec::new(m, Potential::Harmonic { omega0: 1.5 }).unwrap();
        assert_relative_eq!(
            potential_force(&harm, 0.4).unwrap(),
            -2.0 * 1.5 * 1.5 * 0.4,
            max_relative = 1e-15
        );

        let quart = SystemSpec::new(1.0, Potential::Quartic { a: 1.0, b: 1.0 }).unwrap();
        assert_relative_eq!(potential_force(&quart, 0.5).unwrap(), -1.5, max_relative = 1e-15);
    }

    #[test]
    fn force_is_minus_gradient_of_energy() {
        use crate::reference::derivative;
        let systems = [
            SystemSpec::new(1.3, Potential::Harmonic { omega0: 0.8 }).unwrap(),
            SystemSpec::new(1.0, Potential::Quartic { a: 0.5, b: 0.25 }).unwrap(),
            SystemSpec::new(2.0, Potential::DoubleWell { barrier: 1.2, x0: 0.9 }).unwrap(),
        ];
        for sys in systems {
            for x in [-1.4, -0.3, 0.2, 0.8, 2.1] {
                let grad = derivative(&|y| sys.potential_energy(y), x);
                assert_relative_eq!(
                    potential_force(&sys, x).unwrap(),
                    -grad,
                    epsilon = 1e-7,
                    max_relative = 1e-7
                );
            }
        }
    }

    #[test]
    fn nonfinite_position_is_rejected() {
        let sys = SystemSpec::new(1.0, Potential::Free).unwrap();
        assert!(potential_force(&sys, f64::INFINITY).is_err());
    }

    #[test]
    fn conservative_oscillator_matches_analytic_solution() {
        // η ≡ 0, γ = 0, ω₀ dt = 0.01 over 10⁴ steps
        let sys = SystemSpec::new(1.0, Potential::Harmonic { omega0: 1.0 }).unwrap();
        let bath = bath_with_gamma(0.0);
        let n = 10_001;
        let dt = 0.01;
        let noise = NoisePath::zeros(dt, n);
        let (x0, p0) = (1.0, 0.5);
        let traj = integrate(&sys, &bath, &noise, x0, p0).unwrap();

        let mut max_err = 0.0f64;
        for (k, (&x, &p)) in traj.x.iter().zip(&traj.p).enumerate() {
            let t = k as f64 * dt;
            let xa = x0 * t.cos() + p0 * t.sin();
            max_err = max_err.max((x - xa).abs());
            let _ = p;
        }
        // O(dt²) accuracy: phase error ~ N ω³ dt³ / 6 ≈ 1.7e-3 here
        assert!(max_err < 5e-3, "max error {max_err}");

        let energy = |x: f64, p: f64| 0.5 * p * p + 0.5 * x * x;
        let e0 = energy(x0, p0);
        let drift = traj
            .x
            .iter()
            .zip(&traj.p)
            .map(|(&x, &p)| ((energy(x, p) - e0) / e0).abs())
            .fold(0.0f64, f64::max);
        assert!(drift < 1e-4, "energy drift {drift}");
    }

    #[test]
    fn damped_envelope_decays_at_half_gamma_over_m() {
        let (m, gamma, omega0) = (1.0, 0.4, 2.0);
        let sys = SystemSpec::new(m, Potential::Harmonic { omega0 }).unwrap();
        let bath = bath_with_gamma(gamma);
        // five decay times of 2m/γ
        let t_max = 5.0 * 2.0 * m / gamma;
        let dt = 0.002;
        let n = (t_max / dt) as usize + 1;
        let noise = NoisePath::zeros(dt, n);
        let (x0, p0) = (1.0, 0.0);
        let traj = integrate(&sys, &bath, &noise, x0, p0).unwrap();
        let a0 = crate::reference::underdamped_envelope(m, gamma, omega0, x0, p0);
        for k in (0..n).step_by(200) {
            let t = k as f64 * dt;
            let a = crate::reference::underdamped_envelope(m, gamma, omega0, traj.x[k], traj.p[k]);
            let expected = a0 * (-gamma * t / (2.0 * m)).exp();
            assert!(
                (a - expected).abs() <= 0.01 * a0.max(expected),
                "t={t}: envelope {a} vs {expected}"
            );
        }
    }

    #[test]
    fn halving_dt_quarters_the_error() {
        let (m, gamma, omega0) = (1.0, 0.3, 1.0);
        let sys = SystemSpec::new(m, Potential::Harmonic { omega0 }).unwrap();
        let bath = bath_with_gamma(gamma);
        let t_max = 10.0;
        let err_at = |dt: f64| {
            let n = (t_max / dt).round() as usize + 1;
            let noise = NoisePath::zeros(dt, n);
            let traj = integrate(&sys, &bath, &noise, 1.0, 0.0).unwrap();
            let mut max_err = 0.0f64;
            for k in 0..n {
                let t = k as f64 * dt;
                let (xa, _) = crate::reference::damped_oscillator_analytic(m, gamma, omega0, 1.0, 0.0, t);
                max_err = max_err.max((traj.x[k] - xa).abs());
            }
            max_err
        };
        let coarse = err_at(0.02);
        let fine = err_at(0.01);
        let ratio = coarse / fine;
        assert!((3.2..=4.8).contains(&ratio), "convergence ratio {ratio}");
    }

    #[test]
    fn harmonic_response_superposes() {
        // Heun is linear in (state, forcing): trajectory(x0,p0,η1+η2) equals
        // trajectory(x0,p0,η1) + trajectory(0,0,η2) up to float reassociation.
        use rand::Rng;
        use rand::SeedableRng;
        let sys = SystemSpec::new(1.0, Potential::Harmonic { omega0 : 1.3 }).unwrap();
        let bath = bath_with_gamma(0.5);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let n = 400;
        let dt = 0.01;
        let eta1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let eta2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sum: Vec<f64> = eta1.iter().zip(&eta2).map(|(a, b)| a + b).collect();
        let t1 = integrate(&sys, &bath, &NoisePath::from_values(dt, eta1), 0.7, -0.2).unwrap();
        let t2 = integrate(&sys, &bath, &NoisePath::from_values(dt, eta2), 0.0, 0.0).unwrap();
        let ts = integrate(&sys, &bath, &NoisePath::from_values(dt, sum), 0.7, -0.2).unwrap();
        for k in 0..n {
            assert_relative_eq!(ts.x[k], t1.x[k] + t2.x[k], epsilon = 1e-10);
            assert_relative_eq!(ts.p[k], t1.p[k] + t2.p[k], epsilon = 1e-10);
        }
    }

    #[test]
    fn overflow_reports_failing_step() {
        // inverted quartic (negative stiffness) blows up quickly
        let sys = SystemSpec::new(1.0, Potential::Quartic { a: -50.0, b: -50.0 }).unwrap();
        let bath = bath_with_gamma(0.0);
        let noise = NoisePath::zeros(0.5, 2000);
        match integrate(&sys, &bath, &noise, 10.0, 10.0) {
            Err(Error::StepOverflow { step }) => assert!(step > 0),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn identical_trajectories_have_zero_standard_errors() {
        let sys = SystemSpec::new(1.0, Potential::Harmonic { omega0: 1.0 }).unwrap();
        let bath = bath_with_gamma(0.2);
        let noise = NoisePath::zeros(0.01, 500);
        let t = integrate(&sys, &bath, &noise, 1.0, 0.0).unwrap();
        // power-of-two ensemble: the mean of identical values is then exact
        let report = ensemble_statistics(&[t.clone(), t.clone(), t.clone(), t], 100).unwrap();
        for row in &report.rows {
            assert_eq!(row.se_x, 0.0);
            assert_eq!(row.se_p2, 0.0);
        }
        assert_eq!(report.averaged.se_x2, 0.0);
    }

    #[test]
    fn statistics_reject_bad_inputs() {
        let sys = SystemSpec::new(1.0, Potential::Free).unwrap();
        let bath = bath_with_gamma(0.1);
        let t1 = integrate(&sys, &bath, &NoisePath::zeros(0.01, 100), 0.0, 1.0).unwrap();
        let t2 = integrate(&sys, &bath, &NoisePath::zeros(0.02, 100), 0.0, 1.0).unwrap();
        assert!(ensemble_statistics(&[t1.clone()], 0).is_err());
        assert!(ensemble_statistics(&[t1.clone(), t2], 0).is_err());
        assert!(ensemble_statistics(&[t1.clone(), t1], 100).is_err());
    }
}
