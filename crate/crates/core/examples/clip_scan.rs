// temporary diagnostic
use qbm_core::bath::{BathSpec, Cutoff};
use qbm_core::classical::{Potential, SystemSpec};
use qbm_core::kubo::{build_operators, evolve_noisy, DensityMatrix, EvolveOptions};
use qbm_core::noise::{sample_path, EnsembleSpec, SamplingMethod};

fn main() {
    for (dim, temp, gamma) in [(12usize, 1.0, 0.4), (20, 1.0, 0.4), (24, 0.5, 0.3), (20, 0.5, 0.3)] {
        let sys = SystemSpec::new(1.0, Potential::Harmonic { omega0: 1.0 }).unwrap();
        let bath = BathSpec::desk_units(gamma, temp, Cutoff::Hard { omega_c: 10.0 }, 64).unwrap();
        let (x, p, h) = build_operators(&sys, 1.0, 1.0, dim).unwrap();
        let rho0 = DensityMatrix::ground(dim);
        let ens = EnsembleSpec::new(3, 1, SamplingMethod::CirculantEmbedding).unwrap();
        let noise = sample_path(&bath, 0.01, 1001, &ens, 0).unwrap();
        let run = evolve_noisy(&rho0, &x, &p, &h, &bath, 1.0, &noise, &EvolveOptions::default()).unwrap();
        println!("dim={dim} T={temp} g={gamma}: max_leak={:.3e} max_defect={:.3e} alarm={:?}",
                 run.max_leak, run.max_hermiticity_defect, run.leak_alarm);
    }
}
