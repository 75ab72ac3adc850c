//! CSV output.
//!
//! All floating-point values are written with 17 significant digits so that
//! files round-trip bit-exactly through `f64` parsing; identical inputs and
//! seeds therefore produce byte-identical files.

use crate::classical::{MomentsReport, Trajectory};
use crate::error::{Error, Result};
use crate::heisenberg::{CommutatorTrace, NoiseAlgebra, RefinementLevel};
use crate::kubo::{observable, EnsembleAverage, KuboRun, OperatorMatrix};
use crate::noise::NoisePath;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// 17-significant-digit scientific form; exact f64 round-trip.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|e| Error::InvalidSpec {
        field: "output".into(),
        message: format!("cannot create {}: {e}", path.display()),
    })?;
    Ok(BufWriter::new(file))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::InvalidSpec {
        field: "output".into(),
        message: format!("write failed: {e}"),
    })
}

/// `lag,K_T,A` rows for a tabulated kernel pair.
pub fn write_kernel_csv(path: &Path, dt: f64, k: &[f64], a: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    let _ = writeln!(w, "lag,K_T,A");
    for (j, (kv, av)) in k.iter().zip(a).enumerate() {
        let _ = writeln!(
            w,
            "{},{},{}",
            fmt_g17(j as f64 * dt),
            fmt_g17(*kv),
            fmt_g17(*av)
        );
    }
    finish(w)
}

/// One noise realization: metadata comment, then `t,eta` rows.
pub fn write_noise_csv(path: &Path, noise: &NoisePath) -> Result<()> {
    let mut w = writer(path)?;
    let _ = writeln!(w, "# seed={}, index={}", noise.seed, noise.realization_index);
    let _ = writeln!(w, "t,eta");
    for (j, v) in noise.values.iter().enumerate() {
        let _ = writeln!(w, "{},{}", fmt_g17(j as f64 * noise.dt), fmt_g17(*v));
    }
    finish(w)
}

/// Empirical covariance against the tabulated kernel.
pub fn write_covariance_csv(
    path: &Path,
    dt: f64,
    covariance: &[(f64, f64)],
    kernel: &[f64],
) -> Result<()> {
    let mut w = writer(path)?;
    let _ = writeln!(w, "lag,covariance,standard_error,kernel");
    for (j, ((mean, se), k)) in covariance.iter().zip(kernel).enumerate() {
        let _ = writeln!(
            w,
            "{},{},{},{}",
            fmt_g17(j as f64 * dt),
            fmt_g17(*mean),
            fmt_g17(*se),
            fmt_g17(*k)
        );
    }
    finish(w)
}

/// `t,x,p` rows for one trajectory.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = writer(path)?;
    let _ = writeln!(w, "t,x,p");
    for (j, (x, p)) in traj.x.iter().zip(&traj.p).enumerate() {
        let _ = writeln!(
            w,
            "{},{},{}",
            fmt_g17(j as f64 * traj.dt),
            fmt_g17(*x),
            fmt_g17(*p)
        );
    }
    finish(w)
}

/// Time-resolved ensemble moments.
pub fn write_moments_csv(path: &Path, report: &MomentsReport) -> Result<()> {
    let mut w = writer(path)?;
    let _ = writeln!(w, "t,mean_x,se_x,mean_p,se_p,mean_x2,se_x2,mean_p2,se_p2");
    for (j, row) in report.rows.iter().enumerate() {
        let _ = writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            fmt_g17(j as f64 * report.dt),
            fmt_g17(row.mean_x),
            fmt_g17(row.se_x),
            fmt_g17(row.mean_p),
            fmt_g17(row.se_p),
            fmt_g17(row.mean_x2),
            fmt_g17(row.se_x2),
            fmt_g17(row.mean_p2),
            fmt_g17(row.se_p2)
        );
    }
    finish(w)
}

/// Per-run observables of a stochastic Liouville evolution.
pub fn write_kubo_run_csv(
    path: &Path,
    run: &KuboRun,
    x: &OperatorMatrix,
    p: &OperatorMatrix,
) -> Result<()> {
    let x2 = x.times(x);
    let p2 = p.times(p);
    let mut w = writer(path)?;
    let _ = writeln!(w, "t,re_mean_x,re_mean_p,mean_x2,mean_p2,trace,purity,min_eig,leak");
    for (t, state) in run.times.iter().zip(&run.states) {
        let _ = writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            fmt_g17(*t),
            fmt_g17(observable(state, x)?.re),
            fmt_g17(observable(state, p)?.re),
            fmt_g17(observable(state, &x2)?.re),
            fmt_g17(observable(state, &p2)?.re),
            fmt_g17(state.trace().re),
            fmt_g17(state.purity()),
            fmt_g17(state.min_eigenvalue()?),
            fmt_g17(state.edge_population())
        );
    }
    finish(w)
}

/// Ensemble-averaged observables; the first four observables of the average
/// must be x, p, x², p² (in that order) to populate the error columns.
pub fn write_kubo_ensemble_csv(path: &Path, avg: &EnsembleAverage) -> Result<()> {
    if avg.observables.len() < 4 {
        return Err(Error::InvalidSpec {
            field: "ensemble.observables".into(),
            message: "expected x, p, x2, p2 observable columns".into(),
        });
    }
    let mut w = writer(path)?;
    let _ = writeln!(
        w,
        "t,re_mean_x,se_x,re_mean_p,se_p,mean_x2,se_x2,mean_p2,se_p2,trace,purity,min_eig,leak"
    );
    for (idx, (t, state)) in avg.times.iter().zip(&avg.mean_states).enumerate() {
        let _ = writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_g17(*t),
            fmt_g17(avg.observables[0].mean[idx]),
            fmt_g17(avg.observables[0].se[idx]),
            fmt_g17(avg.observables[1].mean[idx]),
            fmt_g17(avg.observables[1].se[idx]),
            fmt_g17(avg.observables[2].mean[idx]),
            fmt_g17(avg.observables[2].se[idx]),
            fmt_g17(avg.observables[3].mean[idx]),
            fmt_g17(avg.observables[3].se[idx]),
            fmt_g17(state.trace().re),
            fmt_g17(state.purity()),
            fmt_g17(state.min_eigenvalue()?),
            fmt_g17(state.edge_population())
        );
    }
    finish(w)
}

/// `t,re_C,im_C,algebra` rows of a commutator trace.
pub fn write_commutator_csv(path: &Path, trace: &CommutatorTrace) -> Result<()> {
    let algebra = match trace.algebra {
        NoiseAlgebra::Quantum => "quantum",
        NoiseAlgebra::Commutative => "commutative",
    };
    let mut w = writer(path)?;
    let _ = writeln!(w, "t,re_C,im_C,algebra");
    for (k, c) in trace.values.iter().enumerate() {
        let _ = writeln!(
            w,
            "{},{},{},{}",
            fmt_g17(k as f64 * trace.dt),
            fmt_g17(c.re),
            fmt_g17(c.im),
            algebra
        );
    }
    finish(w)
}

/// Refinement ladder of sup-norm deviations.
pub fn write_refinement_csv(path: &Path, levels: &[RefinementLevel]) -> Result<()> {
    let mut w = writer(path)?;
    let _ = writeln!(w, "modes,omega_max,sup_abs_dev");
    for level in levels {
        let _ = writeln!(
            w,
            "{},{},{}",
            level.modes,
            fmt_g17(level.omega_max),
            fmt_g17(level.sup_abs_dev)
        );
    }
    finish(w)
}
