//! Cross-module solver properties: discretization orders, route
//! equivalences, ensemble unbiasedness and the quantum pipeline invariants.

mod common;

use common::{path_enumeration_scalar, tetrahedral_axes, unit_payload};
use nalgebra::DVector;
use num_complex::Complex64;
use spectraldiff::dyson::{
    evolve_markov, solve_dense, FreeBlockSeries, InitialCondition, SignalSeries,
};
use spectraldiff::montecarlo::ensemble_average;
use spectraldiff::quantum::{
    build_spin_pair, correlation_of, recurrence_time, unvec_density, von_neumann_entropy_of,
};
use spectraldiff::{GeneratorSet, Scheme, TransitionMatrix};

fn scalar_run(nu: f64, delta: f64, n_steps: usize, scheme: Scheme) -> SignalSeries<f64> {
    let p = if nu == 0.0 {
        TransitionMatrix::identity(3)
    } else {
        TransitionMatrix::uncorrelated_jump(3, nu, delta).unwrap()
    };
    let gens = GeneratorSet::scalar(&[-0.5, 1.0, 2.0]).unwrap();
    let props = gens.step_propagators(delta, scheme).unwrap();
    let init = InitialCondition::uniform_scalar(3);
    evolve_markov(&p, &props, &init, n_steps).unwrap()
}

#[test]
fn convergence_is_first_order_rectangle_second_order_trapezoid() {
    // Halving delta at fixed final time must halve the rectangle error and
    // quarter the trapezoid error against a much finer reference.
    let t_final = 2.0_f64;
    let delta_ref = 0.00025;
    let reference = scalar_run(1.0, delta_ref, (t_final / delta_ref) as usize, Scheme::Trapezoid);
    let err = |delta: f64, scheme: Scheme| {
        let s = scalar_run(1.0, delta, (t_final / delta) as usize, scheme);
        let stride = (delta / delta_ref).round() as usize;
        (0..s.len())
            .map(|j| (s.value(j)[0].re - reference.value(j * stride)[0].re).abs())
            .fold(0.0_f64, f64::max)
    };
    let rect = [
        err(0.02, Scheme::Rectangle),
        err(0.01, Scheme::Rectangle),
        err(0.005, Scheme::Rectangle),
    ];
    let trapz = [
        err(0.02, Scheme::Trapezoid),
        err(0.01, Scheme::Trapezoid),
        err(0.005, Scheme::Trapezoid),
    ];
    for pair in rect.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!((1.6..2.6).contains(&ratio), "rectangle ratio {ratio}");
    }
    for pair in trapz.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!((3.2..5.0).contains(&ratio), "trapezoid ratio {ratio}");
    }
}

#[test]
fn dense_solver_matches_iterative_for_matrix_generators() {
    // The route equivalence must hold when the per-state generators do not
    // commute: rotation (d = 3) and Liouvillian (d = 16) payloads.
    let delta = 0.02;
    let n_steps = 25;

    let gens = GeneratorSet::rotation(&tetrahedral_axes()).unwrap();
    let p = TransitionMatrix::uncorrelated_jump(4, 2.0, delta)
        .unwrap()
        .with_absorbing_state(3)
        .unwrap();
    let payload = DVector::from_iterator(
        3,
        [1.0, 0.0, 0.0].iter().map(|&x| Complex64::new(x, 0.0)),
    );
    let init = InitialCondition::uniform(4, payload).unwrap();
    let props = gens.step_propagators(delta, Scheme::Rectangle).unwrap();
    let iterative = evolve_markov(&p, &props, &init, n_steps).unwrap();
    let free = FreeBlockSeries::from_markov(&p, n_steps);
    let dense = solve_dense(&free, &gens, delta, &init).unwrap();
    for j in 0..=n_steps {
        for k in 0..3 {
            let a = iterative.value(j)[k];
            let b = dense.value(j)[k];
            assert!(
                (a - b).norm() < 1e-10,
                "rotation mismatch at j={j}, k={k}: {a} vs {b}"
            );
        }
    }

    let sys = build_spin_pair::<f64>();
    let p = TransitionMatrix::uncorrelated_jump(4, 1.0, delta).unwrap();
    let init = sys.initial_condition();
    let props = sys
        .generator_set()
        .step_propagators(delta, Scheme::Rectangle)
        .unwrap();
    let n_quantum = 10;
    let iterative = evolve_markov(&p, &props, &init, n_quantum).unwrap();
    let free = FreeBlockSeries::from_markov(&p, n_quantum);
    let dense = solve_dense(&free, sys.generator_set(), delta, &init).unwrap();
    for j in 0..=n_quantum {
        for k in 0..16 {
            let a = iterative.value(j)[k];
            let b = dense.value(j)[k];
            assert!(
                (a - b).norm() < 1e-10,
                "liouvillian mismatch at j={j}, k={k}"
            );
        }
    }
}

#[test]
fn mc_mean_is_unbiased_against_exhaustive_expectation() {
    // Tiny instance, rectangle factors on both routes: the exact ensemble
    // expectation comes from path enumeration; the MC mean must sit within
    // 5 standard errors.
    let freqs = [1.0, -1.0];
    let delta = 0.3;
    let n_steps = 6;
    let n_traj = 10_000;
    let p = TransitionMatrix::uncorrelated_jump(2, 2.0, delta).unwrap();
    let gens = GeneratorSet::scalar(&freqs).unwrap();
    let props = gens.step_propagators(delta, Scheme::Rectangle).unwrap();
    let init = InitialCondition::new(vec![0.5, 0.5], unit_payload()).unwrap();
    let stats = ensemble_average(&p, &props, &init, n_steps, n_traj, 777).unwrap();
    let exact = path_enumeration_scalar(&freqs, &p, delta, n_steps, init.weights());
    for j in 0..=n_steps {
        let got = stats.mean().value(j)[0].re;
        let expect = exact[j].re;
        let se = stats.sigma()[j][0] / (n_traj as f64).sqrt();
        assert!(
            (got - expect).abs() <= 5.0 * se + 1e-12,
            "j={j}: {got} vs {expect} (se {se})"
        );
    }
}

#[test]
fn quantum_pipeline_keeps_entropy_in_range() {
    let sys = build_spin_pair::<f64>();
    let delta = 0.002;
    let n_steps = 2500;
    let p = TransitionMatrix::uncorrelated_jump(4, 1.0, delta).unwrap();
    let props = sys
        .generator_set()
        .step_propagators(delta, Scheme::Trapezoid)
        .unwrap();
    let init = sys.initial_condition();
    let s = evolve_markov(&p, &props, &init, n_steps).unwrap();
    let ln4 = 4.0_f64.ln();
    for j in (0..=n_steps).step_by(5) {
        let rho = unvec_density(s.value(j)).unwrap();
        let entropy = von_neumann_entropy_of(&rho).unwrap();
        assert!(
            (-1e-9..=ln4 + 1e-9).contains(&entropy),
            "entropy {entropy} out of range at j={j}"
        );
    }
}

#[test]
fn quantum_slow_limit_oscillates_between_half_and_one() {
    // Static fields: the correlation dips to 1/2 and recurs to 1 at the
    // period computed from the Hamiltonian spectra.
    let sys = build_spin_pair::<f64>();
    let t_rec = recurrence_time(&sys);
    let delta = 0.001;
    let n_steps = (1.05 * t_rec / delta).round() as usize;
    let p = TransitionMatrix::<f64>::identity(4);
    let props = sys
        .generator_set()
        .step_propagators(delta, Scheme::Trapezoid)
        .unwrap();
    let init = sys.initial_condition();
    let s = evolve_markov(&p, &props, &init, n_steps).unwrap();
    let mut c_min = f64::INFINITY;
    let mut c_rec = f64::NEG_INFINITY;
    for j in 0..=n_steps {
        let c = correlation_of(&unvec_density(s.value(j)).unwrap());
        c_min = c_min.min(c);
        if (s.time(j) - t_rec).abs() <= delta {
            c_rec = c_rec.max(c);
        }
    }
    assert!((c_min - 0.5).abs() <= 2e-2, "minimum {c_min}");
    assert!(c_rec >= 1.0 - 1e-3, "recurrence value {c_rec}");
}

#[test]
fn quantum_fast_limit_stays_correlated() {
    // Uniform chain (every step re-randomizes the fields): the Zeeman terms
    // average out and the correlation stays high, improving as delta -> 0.
    let sys = build_spin_pair::<f64>();
    let min_corr = |delta: f64| {
        let n_steps = (10.0 / delta).round() as usize;
        let p = TransitionMatrix::<f64>::uniform(4);
        let props = sys
            .generator_set()
            .step_propagators(delta, Scheme::Trapezoid)
            .unwrap();
        let init = sys.initial_condition();
        let s = evolve_markov(&p, &props, &init, n_steps).unwrap();
        (0..=n_steps)
            .map(|j| correlation_of(&unvec_density(s.value(j)).unwrap()))
            .fold(f64::INFINITY, f64::min)
    };
    let coarse = min_corr(2e-3);
    let fine = min_corr(1e-3);
    assert!(fine >= 0.95, "min correlation {fine} at delta = 1e-3");
    assert!(fine >= coarse, "refinement must not lose correlation");
}

#[test]
fn f32_instantiation_reproduces_coarse_physics() {
    // The generic path must work in single precision at its own tolerances.
    let p = TransitionMatrix::<f32>::uncorrelated_jump(3, 1.0, 0.01).unwrap();
    let pm = p.free_propagator(10);
    for r in 0..3 {
        let sum: f32 = (0..3).map(|c| pm[(r, c)]).sum();
        assert!((sum - 1.0).abs() < 1e-4);
    }

    let gens = GeneratorSet::<f32>::scalar(&[1.0]).unwrap();
    let props = gens.step_propagators(0.01, Scheme::Trapezoid).unwrap();
    let init = InitialCondition::<f32>::uniform_scalar(1);
    let s = evolve_markov(&TransitionMatrix::identity(1), &props, &init, 500).unwrap();
    for j in (0..=500).step_by(50) {
        let v = s.value(j)[0];
        let modulus = (v.re * v.re + v.im * v.im).sqrt();
        assert!((modulus - 1.0).abs() < 1e-4, "modulus {modulus} at j={j}");
        let t = 0.01 * j as f32;
        assert!((v.re - t.cos()).abs() < 1e-3);
    }
}
