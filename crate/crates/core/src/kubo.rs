//! Stochastic Liouville evolution of the noisy density matrix.
//!
//! The noisy reduced density matrix obeys, in operator form,
//!
//! ```text
//! iħ ∂_t ρ = [H_S, ρ] + ½ [X, [γ P / m - η(t)·I, ρ]₊]
//! ```
//!
//! with the sampled c-number path η(t) standing in for the noise operator
//! (their adjoining actions are mutually commuting Gaussians with identical
//! covariance, so observables averaged over the ensemble agree). The state
//! lives in a truncated ladder basis of a reference oscillator; evolution is
//! classical fourth-order Runge–Kutta with η interpolated linearly at stage
//! times. The generator is trace-free, and the Hermitian part is enforced
//! after each step (drift is recorded, not hidden).
//!
//! The per-realization noisy ρ need not be positive; only its ensemble
//! average is a physical state. Positivity is therefore monitored via the
//! smallest eigenvalue but never enforced.

use crate::bath::BathSpec;
use crate::classical::{Potential, SystemSpec};
use crate::error::{Error, Result};
use crate::noise::NoisePath;
use ndarray::linalg::general_mat_mul;
use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

type CMat = Array2<Complex64>;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorLabel {
    X,
    P,
    SystemHamiltonian,
    Custom,
}

/// Complex matrix representation of an observable in the truncated basis.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub dim: usize,
    pub entries: CMat,
    pub label: OperatorLabel,
}

impl OperatorMatrix {
    pub fn custom(entries: CMat) -> OperatorMatrix {
        let dim = entries.nrows();
        OperatorMatrix {
            dim,
            entries,
            label: OperatorLabel::Custom,
        }
    }

    /// Identity observable.
    pub fn identity(dim: usize) -> OperatorMatrix {
        OperatorMatrix {
            dim,
            entries: CMat::eye(dim),
            label: OperatorLabel::Custom,
        }
    }

    /// Matrix product with another operator (e.g. X·X for second moments).
    pub fn times(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::custom(self.entries.dot(&other.entries))
    }
}

/// Annihilation operator in the truncated ladder basis: a|n⟩ = √n |n-1⟩.
fn ladder_down(dim: usize) -> CMat {
    let mut a = CMat::zeros((dim, dim));
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Build X, P and H_S in the ladder basis of a reference oscillator at
/// `basis_omega`. V(X) is evaluated as a matrix polynomial in X.
pub fn build_operators(
    system: &SystemSpec,
    hbar: f64,
    basis_omega: f64,
    dim: usize,
) -> Result<(OperatorMatrix, OperatorMatrix, OperatorMatrix)> {
    system.validate()?;
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::invalid("bath.hbar", "must be finite and > 0"));
    }
    if !(basis_omega.is_finite() && basis_omega > 0.0) {
        return Err(Error::invalid("solver.basis_omega", "must be finite and > 0"));
    }
    if dim < 4 {
        return Err(Error::invalid("solver.dim", "must be >= 4"));
    }
    let quartic_degree = matches!(
        system.potential,
        Potential::Quartic { .. } | Potential::DoubleWell { .. }
    );
    if quartic_degree && dim < 8 {
        return Err(Error::invalid(
            "solver.dim",
            "quartic-degree potentials need dim >= 8",
        ));
    }

    let m = system.mass;
    let a = ladder_down(dim);
    let adag = a.t().mapv(|z| z.conj());
    let x_scale = (hbar / (2.0 * m * basis_omega)).sqrt();
    let p_scale = (hbar * m * basis_omega / 2.0).sqrt();
    let x = (&a + &adag).mapv(|z| z * x_scale);
    let p = (&adag - &a).mapv(|z| z * Complex64::new(0.0, p_scale));

    let p2 = p.dot(&p);
    let mut h = p2.mapv(|z| z / Complex64::new(2.0 * m, 0.0));
    match system.potential {
        Potential::Free => {}
        Potential::Harmonic { omega0 } => {
            let x2 = x.dot(&x);
            h = h + x2.mapv(|z| z * (0.5 * m * omega0 * omega0));
        }
        Potential::Quartic { a: qa, b: qb } => {
            let x2 = x.dot(&x);
            let x4 = x2.dot(&x2);
            h = h + x2.mapv(|z| z * qa) + x4.mapv(|z| z * qb);
        }
        Potential::DoubleWell { barrier, x0 } => {
            let x2 = x.dot(&x);
            let x4 = x2.dot(&x2);
            let c4 = barrier / x0.powi(4);
            let c2 = -2.0 * barrier / (x0 * x0);
            h = h
                + x4.mapv(|z| z * c4)
                + x2.mapv(|z| z * c2)
                + CMat::eye(dim).mapv(|z| z * barrier);
        }
    }

    Ok((
        OperatorMatrix {
            dim,
            entries: x,
            label: OperatorLabel::X,
        },
        OperatorMatrix {
            dim,
            entries: p,
            label: OperatorLabel::P,
        },
        OperatorMatrix {
            dim,
            entries: h,
            label: OperatorLabel::SystemHamiltonian,
        },
    ))
}

/// Noisy reduced density matrix in the truncated basis.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub dim: usize,
    pub entries: CMat,
}

impl DensityMatrix {
    pub fn from_entries(entries: CMat) -> DensityMatrix {
        let dim = entries.nrows();
        DensityMatrix { dim, entries }
    }

    /// Ground state |0⟩⟨0| of the reference oscillator.
    pub fn ground(dim: usize) -> DensityMatrix {
        let mut rho = CMat::zeros((dim, dim));
        rho[(0, 0)] = ONE;
        DensityMatrix { dim, entries: rho }
    }

    /// Coherent state with mean position `x0` and mean momentum `p0`
    /// (a displaced reference-oscillator ground state).
    pub fn coherent(
        mass: f64,
        hbar: f64,
        basis_omega: f64,
        x0: f64,
        p0: f64,
        dim: usize,
    ) -> DensityMatrix {
        let alpha = Complex64::new(
            (mass * basis_omega / (2.0 * hbar)).sqrt() * x0,
            p0 / (2.0 * hbar * mass * basis_omega).sqrt(),
        );
        let mut amp = Vec::with_capacity(dim);
        let mut c = ONE;
        amp.push(c);
        for n in 1..dim {
            c *= alpha / Complex64::new((n as f64).sqrt(), 0.0);
            amp.push(c);
        }
        let norm_sqr: f64 = amp.iter().map(|z| z.norm_sqr()).sum();
        let mut rho = CMat::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] = amp[i] * amp[j].conj() / norm_sqr;
            }
        }
        DensityMatrix { dim, entries: rho }
    }

    /// Thermal state exp(-H_S / kT) / Z.
    pub fn thermal(h: &OperatorMatrix, thermal_energy: f64) -> Result<DensityMatrix> {
        if !(thermal_energy.is_finite() && thermal_energy > 0.0) {
            return Err(Error::invalid("solver.thermal_energy", "must be > 0"));
        }
        let (w, v) = h
            .entries
            .eigh(UPLO::Lower)
            .map_err(|e| Error::Linalg(e.to_string()))?;
        let w_min = w.iter().cloned().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = w
            .iter()
            .map(|&e| (-(e - w_min) / thermal_energy).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        let dim = h.dim;
        let mut rho = CMat::zeros((dim, dim));
        for (k, &pk) in weights.iter().enumerate() {
            let col = v.column(k);
            let scale = Complex64::new(pk / z, 0.0);
            for i in 0..dim {
                for j in 0..dim {
                    rho[(i, j)] += scale * col[i] * col[j].conj();
                }
            }
        }
        Ok(DensityMatrix { dim, entries: rho })
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.diag().iter().sum()
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        let mut s = ZERO;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.entries[(i, j)] * self.entries[(j, i)];
            }
        }
        s.re
    }

    /// Largest |ρ_ij - conj(ρ_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                d = d.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        d
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (w, _) = self
            .entries
            .eigh(UPLO::Lower)
            .map_err(|e| Error::Linalg(e.to_string()))?;
        Ok(w.iter().cloned().fold(f64::INFINITY, f64::min))
    }

    /// Combined population of the top two basis levels.
    pub fn edge_population(&self) -> f64 {
        self.entries[(self.dim - 1, self.dim - 1)].re
            + self.entries[(self.dim - 2, self.dim - 2)].re
    }

    /// Hermiticity to 1e-10, unit trace to 1e-10, eigenvalues >= -1e-8.
    pub fn validate(&self) -> Result<()> {
        if self.hermiticity_defect() > 1e-10 {
            return Err(Error::invalid("rho", "not Hermitian within 1e-10"));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::invalid(
                "rho",
                "trace differs from 1 by more than 1e-10",
            ));
        }
        let min = self.min_eigenvalue()?;
        if min < -1e-8 {
            return Err(Error::invalid(
                "rho",
                format!("negative eigenvalue {min:.3e} below -1e-8"),
            ));
        }
        Ok(())
    }
}

/// Tr(op · rho); real to 1e-10 when both are Hermitian.
pub fn observable(rho: &DensityMatrix, op: &OperatorMatrix) -> Result<Complex64> {
    if rho.dim != op.dim {
        return Err(Error::DimensionMismatch {
            message: format!("operator dim {} vs state dim {}", op.dim, rho.dim),
        });
    }
    let mut s = ZERO;
    for i in 0..rho.dim {
        for j in 0..rho.dim {
            s += op.entries[(i, j)] * rho.entries[(j, i)];
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// Enforce ρ ← (ρ + ρ†)/2 after each step (default on; the drift is
    /// recorded in `KuboRun::max_hermiticity_defect` either way).
    pub resymmetrize: bool,
    /// Store every `stride`-th step (plus the initial state).
    pub stride: usize,
    /// Alarm threshold for the combined top-two-level population.
    pub leak_threshold: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            resymmetrize: true,
            stride: 1,
            leak_threshold: 1e-3,
        }
    }
}

/// One stochastic Liouville run.
#[derive(Debug, Clone)]
pub struct KuboRun {
    /// Integrator step (equals the noise grid step).
    pub dt: f64,
    /// Times of the stored states.
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub realization_index: usize,
    /// First integrator step at which the leakage alarm fired, if any.
    pub leak_alarm: Option<usize>,
    /// Largest top-two-level population seen during the run.
    pub max_leak: f64,
    /// Largest pre-resymmetrization Hermiticity defect seen during the run.
    pub max_hermiticity_defect: f64,
}

struct Workspace {
    b: CMat,
    s: CMat,
    t: CMat,
    stage: CMat,
    k: [CMat; 4],
}

impl Workspace {
    fn new(dim: usize) -> Workspace {
        Workspace {
            b: CMat::zeros((dim, dim)),
            s: CMat::zeros((dim, dim)),
            t: CMat::zeros((dim, dim)),
            stage: CMat::zeros((dim, dim)),
            k: std::array::from_fn(|_| CMat::zeros((dim, dim))),
        }
    }
}

/// out = ( [H, ρ] + ½ [X, [(γ/m) P - η I, ρ]₊] ) / (iħ)
#[allow(clippy::too_many_arguments)]
fn rhs_into(
    h: &CMat,
    x: &CMat,
    p: &CMat,
    gamma_over_m: f64,
    eta: f64,
    hbar: f64,
    rho: &CMat,
    b: &mut CMat,
    s: &mut CMat,
    t: &mut CMat,
    out: &mut CMat,
) {
    // B = (γ/m) P - η I
    b.assign(p);
    b.mapv_inplace(|z| z * gamma_over_m);
    for i in 0..b.nrows() {
        b[(i, i)] -= Complex64::new(eta, 0.0);
    }
    // S = {B, ρ}
    general_mat_mul(ONE, b, rho, ZERO, s);
    general_mat_mul(ONE, rho, b, ONE, s);
    // out = [H, ρ]
    general_mat_mul(ONE, h, rho, ZERO, out);
    general_mat_mul(-ONE, rho, h, ONE, out);
    // T = [X, S]
    general_mat_mul(ONE, x, s, ZERO, t);
    general_mat_mul(-ONE, s, x, ONE, t);
    // out = (out + T/2) / (iħ)
    let half = Complex64::new(0.5, 0.0);
    let inv_ih = Complex64::new(0.0, -1.0 / hbar);
    ndarray::Zip::from(out).and(&*t).for_each(|o, &tv| {
        *o = (*o + half * tv) * inv_ih;
    });
}

fn stage_combine(stage: &mut CMat, rho: &CMat, k: &CMat, factor: f64) {
    let f = Complex64::new(factor, 0.0);
    ndarray::Zip::from(stage)
        .and(rho)
        .and(k)
        .for_each(|s, &r, &kv| {
            *s = r + f * kv;
        });
}

/// Integrate the noisy density matrix along one noise realization.
#[allow(clippy::too_many_arguments)]
pub fn evolve_noisy(
    rho0: &DensityMatrix,
    x: &OperatorMatrix,
    p: &OperatorMatrix,
    h: &OperatorMatrix,
    bath: &BathSpec,
    system_mass: f64,
    noise: &NoisePath,
    opts: &EvolveOptions,
) -> Result<KuboRun> {
    bath.validate()?;
    let dim = rho0.dim;
    for (name, op) in [("X", x), ("P", p), ("H_S", h)] {
        if op.dim != dim {
            return Err(Error::DimensionMismatch {
                message: format!("{name} has dim {} but state has dim {dim}", op.dim),
            });
        }
    }
    if noise.len() < 2 {
        return Err(Error::GridMismatch {
            message: "noise path must have at least 2 samples".into(),
        });
    }
    if opts.stride == 0 {
        return Err(Error::invalid("solver.stride", "must be >= 1"));
    }
    if !(system_mass.is_finite() && system_mass > 0.0) {
        return Err(Error::invalid("system.mass", "must be finite and > 0"));
    }

    let dt = noise.dt;
    let gamma_over_m = bath.gamma / system_mass;
    let hbar = bath.hbar;
    let steps = noise.len() - 1;
    let mut ws = Workspace::new(dim);
    let mut rho = rho0.entries.clone();

    let mut times = Vec::with_capacity(steps / opts.stride + 1);
    let mut states = Vec::with_capacity(steps / opts.stride + 1);
    times.push(0.0);
    states.push(DensityMatrix::from_entries(rho.clone()));

    let mut leak_alarm = None;
    let mut max_leak = 0.0f64;
    let mut max_defect = 0.0f64;

    for step in 0..steps {
        let eta0 = noise.values[step];
        let eta_half = noise.midpoint(step);
        let eta1 = noise.values[step + 1];

        rhs_into(
            &h.entries, &x.entries, &p.entries, gamma_over_m, eta0, hbar, &rho, &mut ws.b,
            &mut ws.s, &mut ws.t, &mut ws.k[0],
        );
        stage_combine(&mut ws.stage, &rho, &ws.k[0], 0.5 * dt);
        rhs_into(
            &h.entries, &x.entries, &p.entries, gamma_over_m, eta_half, hbar, &ws.stage,
            &mut ws.b, &mut ws.s, &mut ws.t, &mut ws.k[1],
        );
        stage_combine(&mut ws.stage, &rho, &ws.k[1], 0.5 * dt);
        rhs_into(
            &h.entries, &x.entries, &p.entries, gamma_over_m, eta_half, hbar, &ws.stage,
            &mut ws.b, &mut ws.s, &mut ws.t, &mut ws.k[2],
        );
        stage_combine(&mut ws.stage, &rho, &ws.k[2], dt);
        rhs_into(
            &h.entries, &x.entries, &p.entries, gamma_over_m, eta1, hbar, &ws.stage, &mut ws.b,
            &mut ws.s, &mut ws.t, &mut ws.k[3],
        );

        let w = Complex64::new(dt / 6.0, 0.0);
        let (k1, rest) = ws.k.split_at(1);
        let (k2, rest) = rest.split_at(1);
        let (k3, k4) = rest.split_at(1);
        ndarray::Zip::from(&mut rho)
            .and(&k1[0])
            .and(&k2[0])
            .and(&k3[0])
            .and(&k4[0])
            .for_each(|r, &a, &b, &c, &d| {
                *r += w * (a + (b + c) * 2.0 + d);
            });

        let mut defect = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let d = (rho[(i, j)] - rho[(j, i)].conj()).norm();
                if d > defect {
                    defect = d;
                }
            }
        }
        max_defect = max_defect.max(defect);
        if opts.resymmetrize {
            for i in 0..dim {
                for j in i..dim {
                    let avg = 0.5 * (rho[(i, j)] + rho[(j, i)].conj());
                    rho[(i, j)] = avg;
                    rho[(j, i)] = avg.conj();
                }
            }
        }

        let leak = rho[(dim - 1, dim - 1)].re + rho[(dim - 2, dim - 2)].re;
        if !leak.is_finite() {
            return Err(Error::StepOverflow { step: step + 1 });
        }
        max_leak = max_leak.max(leak);
        if leak > opts.leak_threshold && leak_alarm.is_none() {
            leak_alarm = Some(step + 1);
        }

        if (step + 1) % opts.stride == 0 {
            times.push((step + 1) as f64 * dt);
            states.push(DensityMatrix::from_entries(rho.clone()));
        }
    }

    Ok(KuboRun {
        dt,
        times,
        states,
        realization_index: noise.realization_index,
        leak_alarm,
        max_leak,
        max_hermiticity_defect: max_defect,
    })
}

/// Per-observable ensemble statistics on the stored time grid.
#[derive(Debug, Clone)]
pub struct ObservableStats {
    pub name: String,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

/// Entrywise ensemble mean of noisy density matrices plus observable errors.
#[derive(Debug, Clone)]
pub struct EnsembleAverage {
    pub times: Vec<f64>,
    pub mean_states: Vec<DensityMatrix>,
    pub observables: Vec<ObservableStats>,
}

/// Average runs entrywise per time; report mean and standard error of
/// Re Tr(op ρ) for each designated observable.
pub fn average_ensemble(
    runs: &[KuboRun],
    observables: &[(&str, &OperatorMatrix)],
) -> Result<EnsembleAverage> {
    if runs.len() < 2 {
        return Err(Error::invalid("runs", "need at least 2 runs"));
    }
    let times = runs[0].times.clone();
    let dim = runs[0].states[0].dim;
    for run in runs {
        if run.times.len() != times.len()
            || run
                .times
                .iter()
                .zip(&times)
                .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::GridMismatch {
                message: "all runs must share the stored time grid".into(),
            });
        }
        if run.states[0].dim != dim {
            return Err(Error::DimensionMismatch {
                message: "all runs must share the basis dimension".into(),
            });
        }
    }

    let r = runs.len();
    let inv_r = Complex64::new(1.0 / r as f64, 0.0);
    let mut mean_states = Vec::with_capacity(times.len());
    for t_idx in 0..times.len() {
        let mut acc = CMat::zeros((dim, dim));
        for run in runs {
            acc += &run.states[t_idx].entries;
        }
        acc.mapv_inplace(|z| z * inv_r);
        mean_states.push(DensityMatrix::from_entries(acc));
    }

    let mut stats = Vec::with_capacity(observables.len());
    for (name, op) in observables {
        let mut mean = Vec::with_capacity(times.len());
        let mut se = Vec::with_capacity(times.len());
        for t_idx in 0..times.len() {
            let values: Vec<f64> = runs
                .iter()
                .map(|run| observable(&run.states[t_idx], op).map(|z| z.re))
                .collect::<Result<_>>()?;
            let m = values.iter().sum::<f64>() / r as f64;
            let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (r as f64 - 1.0);
            mean.push(m);
            se.push((var / r as f64).sqrt());
        }
        stats.push(ObservableStats {
            name: name.to_string(),
            mean,
            se,
        });
    }

    Ok(EnsembleAverage {
        times,
        mean_states,
        observables: stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::Cutoff;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn free_bath(gamma: f64) -> BathSpec {
        BathSpec::desk_units(gamma, 1.0, Cutoff::Hard { omega_c: 10.0 }, 64).unwrap()
    }

    fn harmonic(mass: f64, omega0: f64) -> SystemSpec {
        SystemSpec::new(mass, Potential::Harmonic { omega0 }).unwrap()
    }

    #[test]
    fn canonical_commutator_on_leading_block() {
        let sys = harmonic(1.0, 1.0);
        let (x, p, _) = build_operators(&sys, 1.0, 1.0, 12).unwrap();
        let comm = x.entries.dot(&p.entries) - p.entries.dot(&x.entries);
        for i in 0..10 {
            for j in 0..10 {
                let expect = if i == j { Complex64::new(0.0, 1.0) } else { ZERO };
                assert_abs_diff_eq!(comm[(i, j)].re, expect.re, epsilon = 1e-12);
                assert_abs_diff_eq!(comm[(i, j)].im, expect.im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn resonant_harmonic_hamiltonian_is_diagonal_with_uniform_gaps() {
        let sys = harmonic(1.3, 0.7);
        let hbar = 1.0;
        let (_, _, h) = build_operators(&sys, hbar, 0.7, 10).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                if i != j {
                    assert_abs_diff_eq!(h.entries[(i, j)].norm(), 0.0, epsilon = 1e-12);
                }
            }
        }
        for n in 0..7 {
            let gap = h.entries[(n + 1, n + 1)].re - h.entries[(n, n)].re;
            assert_relative_eq!(gap, hbar * 0.7, max_relative = 1e-12);
        }
    }

    #[test]
    fn free_hamiltonian_matches_matrix_product_oracle() {
        let sys = SystemSpec::new(2.0, Potential::Free).unwrap();
        let (_, _, h) = build_operators(&sys, 1.0, 1.5, 9).unwrap();
        // independent construction: ladder products done from scratch
        let dim = 9;
        let mut a = CMat::zeros((dim, dim));
        for n in 1..dim {
            a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        let adag = a.t().mapv(|z: Complex64| z.conj());
        let scale = Complex64::new(0.0, (1.0 * 2.0 * 1.5 / 2.0_f64).sqrt());
        let p = (&adag - &a).mapv(|z| z * scale);
        let oracle = p.dot(&p).mapv(|z| z / Complex64::new(4.0, 0.0));
        for i in 0..dim {
            for j in 0..dim {
                assert_abs_diff_eq!(h.entries[(i, j)].re, oracle[(i, j)].re, epsilon = 1e-13);
                assert_abs_diff_eq!(h.entries[(i, j)].im, oracle[(i, j)].im, epsilon = 1e-13);
            }
        }
        // couplings only on the main and ±2 diagonals
        for i in 0..dim {
            for j in 0..dim {
                if i != j && i.abs_diff(j) != 2 {
                    assert_eq!(h.entries[(i, j)], ZERO);
                }
            }
        }
    }

    #[test]
    fn dimension_limits_are_enforced() {
        let sys = harmonic(1.0, 1.0);
        assert!(build_operators(&sys, 1.0, 1.0, 3).is_err());
        let quart = SystemSpec::new(1.0, Potential::Quartic { a: 1.0, b: 0.1 }).unwrap();
        assert!(build_operators(&quart, 1.0, 1.0, 6).is_err());
        assert!(build_operators(&quart, 1.0, 1.0, 8).is_ok());
    }

    #[test]
    fn observable_basics() {
        let dim = 8;
        let rho = DensityMatrix::ground(dim);
        let sys = harmonic(1.0, 1.0);
        let (x, _, _) = build_operators(&sys, 1.0, 1.0, dim).unwrap();
        let id = OperatorMatrix::identity(dim);
        assert_relative_eq!(observable(&rho, &id).unwrap().re, 1.0, max_relative = 1e-14);
        assert_abs_diff_eq!(observable(&rho, &x).unwrap().norm(), 0.0, epsilon = 1e-14);
        // ⟨0|X²|0⟩ = ħ/(2 m Ω)
        let x2 = x.times(&x);
        assert_relative_eq!(observable(&rho, &x2).unwrap().re, 0.5, max_relative = 1e-12);
        let small = DensityMatrix::ground(4);
        assert!(observable(&small, &x).is_err());
    }

    #[test]
    fn coherent_state_has_requested_means() {
        let (m, hbar, omega) = (1.3, 1.0, 0.9);
        let dim = 24;
        let rho = DensityMatrix::coherent(m, hbar, omega, 0.6, -0.4, dim);
        rho.validate().unwrap();
        let sys = harmonic(m, omega);
        let (x, p, _) = build_operators(&sys, hbar, omega, dim).unwrap();
        assert_relative_eq!(observable(&rho, &x).unwrap().re, 0.6, epsilon = 1e-8);
        assert_relative_eq!(observable(&rho, &p).unwrap().re, -0.4, epsilon = 1e-8);
    }

    #[test]
    fn thermal_state_has_boltzmann_populations() {
        let sys = harmonic(1.0, 1.0);
        let dim = 20;
        let (_, _, h) = build_operators(&sys, 1.0, 1.0, dim).unwrap();
        let kt = 0.8;
        let rho = DensityMatrix::thermal(&h, kt).unwrap();
        rho.validate().unwrap();
        // population ratio between adjacent levels = exp(-ħω/kT)
        let ratio = rho.entries[(3, 3)].re / rho.entries[(2, 2)].re;
        assert_relative_eq!(ratio, (-1.0f64 / kt).exp(), max_relative = 1e-9);
    }

    #[test]
    fn unitary_limit_preserves_purity_and_eigenvalues() {
        let sys = harmonic(1.0, 1.0);
        let dim = 16;
        let hbar = 1.0;
        let (x, p, h) = build_operators(&sys, hbar, 1.0, dim).unwrap();
        let rho0 = DensityMatrix::coherent(1.0, hbar, 1.0, 1.0, 0.0, dim);
        let bath = free_bath(0.0);
        let noise = NoisePath::zeros(0.002, 2001);
        let run =
            evolve_noisy(&rho0, &x, &p, &h, &bath, 1.0, &noise, &EvolveOptions::default()).unwrap();
        for state in &run.states {
            assert_abs_diff_eq!(state.purity(), 1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(state.trace().re, 1.0, epsilon = 1e-10);
        }
        let min = run.states.last().unwrap().min_eigenvalue().unwrap();
        assert_abs_diff_eq!(min, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn trace_is_preserved_with_noise_and_damping() {
        let sys = harmonic(1.0, 1.0);
        let dim = 12;
        let (x, p, h) = build_operators(&sys, 1.0, 1.0, dim).unwrap();
        let rho0 = DensityMatrix::ground(dim);
        let bath = free_bath(0.4);
        let ens =
            crate::noise::EnsembleSpec::new(3, 1, crate::noise::SamplingMethod::CirculantEmbedding)
                .unwrap();
        let noise = crate::noise::sample_path(&bath, 0.01, 1001, &ens, 0).unwrap();
        let run =
            evolve_noisy(&rho0, &x, &p, &h, &bath, 1.0, &noise, &EvolveOptions::default()).unwrap();
        for state in &run.states {
            assert_abs_diff_eq!(state.trace().re, 1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(state.trace().im, 0.0, epsilon = 1e-10);
            assert!(state.hermiticity_defect() < 1e-12);
        }
        assert!(run.max_hermiticity_defect < 1e-10);
        assert!(run.leak_alarm.is_none());
    }

    #[test]
    fn averaging_identical_runs_gives_zero_error() {
        let sys = harmonic(1.0, 1.0);
        let dim = 8;
        let (x, p, h) = build_operators(&sys, 1.0, 1.0, dim).unwrap();
        let rho0 = DensityMatrix::ground(dim);
        let bath = free_bath(0.2);
        let noise = NoisePath::zeros(0.01, 101);
        let run =
            evolve_noisy(&rho0, &x, &p, &h, &bath, 1.0, &noise, &EvolveOptions::default()).unwrap();
        let avg = average_ensemble(&[run.clone(), run.clone()], &[("x", &x)]).unwrap();
        for (t_idx, state) in avg.mean_states.iter().enumerate() {
            assert!(state.hermiticity_defect() < 1e-12);
            assert_abs_diff_eq!(state.trace().re, 1.0, epsilon = 1e-8);
            assert_eq!(avg.observables[0].se[t_idx], 0.0);
            assert_abs_diff_eq!(
                avg.observables[0].mean[t_idx],
                observable(&run.states[t_idx], &x).unwrap().re,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn mismatched_grids_are_rejected_in_averaging() {
        let sys = harmonic(1.0, 1.0);
        let dim = 8;
        let (x, p, h) = build_operators(&sys, 1.0, 1.0, dim).unwrap();
        let rho0 = DensityMatrix::ground(dim);
        let bath = free_bath(0.2);
        let run1 = evolve_noisy(
            &rho0,
            &x,
            &p,
            &h,
            &bath,
            1.0,
            &NoisePath::zeros(0.01, 101),
            &EvolveOptions::default(),
        )
        .unwrap();
        let run2 = evolve_noisy(
            &rho0,
            &x,
            &p,
            &h,
            &bath,
            1.0,
            &NoisePath::zeros(0.01, 51),
            &EvolveOptions::default(),
        )
        .unwrap();
        assert!(average_ensemble(&[run1.clone(), run2], &[]).is_err());
        assert!(average_ensemble(&[run1], &[]).is_err());
    }
}
