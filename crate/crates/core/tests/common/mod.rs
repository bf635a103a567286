//! Shared test oracles, independent of the solver implementations.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use spectraldiff::montecarlo::trajectory_rng;
use spectraldiff::TransitionMatrix;

/// Exhaustive path sum for the scalar problem under rectangle factors:
/// enumerates every state sequence `s_0..s_j` and accumulates
/// `p0(s_0) * prod_{k<j} (1 - i delta w_{s_k})^{-1} P(s_k, s_{k+1})`.
///
/// Returns the value at every time index `0..=n_steps`.
pub fn path_enumeration_scalar(
    freqs: &[f64],
    p: &TransitionMatrix<f64>,
    delta: f64,
    n_steps: usize,
    weights: &[f64],
) -> Vec<Complex64> {
    let n = freqs.len();
    let factors: Vec<Complex64> = freqs
        .iter()
        .map(|&w| Complex64::new(1.0, 0.0) / Complex64::new(1.0, -delta * w))
        .collect();
    let mut out = Vec::with_capacity(n_steps + 1);
    for j in 0..=n_steps {
        let n_paths = n.pow(j as u32 + 1);
        let mut total = Complex64::new(0.0, 0.0);
        for code in 0..n_paths {
            let mut states = Vec::with_capacity(j + 1);
            let mut c = code;
            for _ in 0..=j {
                states.push(c % n);
                c /= n;
            }
            let mut term = Complex64::new(weights[states[0]], 0.0);
            for k in 0..j {
                term *= factors[states[k]] * p.get(states[k], states[k + 1]);
            }
            total += term;
        }
        out.push(total);
    }
    out
}

/// Rodrigues rotation of `v` about the (not necessarily unit) vector `w` by
/// the angle `|w| t`.
pub fn rodrigues(w: [f64; 3], v: [f64; 3], t: f64) -> [f64; 3] {
    let speed = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    if speed == 0.0 {
        return v;
    }
    let u = [w[0] / speed, w[1] / speed, w[2] / speed];
    let theta = speed * t;
    let (ct, st) = (theta.cos(), theta.sin());
    let udotv = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let uxv = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    [
        ct * v[0] + st * uxv[0] + (1.0 - ct) * udotv * u[0],
        ct * v[1] + st * uxv[1] + (1.0 - ct) * udotv * u[1],
        ct * v[2] + st * uxv[2] + (1.0 - ct) * udotv * u[2],
    ]
}

/// A random row-stochastic matrix drawn from a seeded stream.
pub fn random_stochastic(n: usize, seed: u64) -> TransitionMatrix<f64> {
    let mut rng = trajectory_rng(seed, 0);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    TransitionMatrix::from_rows(&rows).unwrap()
}

/// The tetrahedral rotation axes of length sqrt(3).
pub fn tetrahedral_axes() -> [[f64; 3]; 4] {
    [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ]
}

/// Complex unit payload for scalar problems.
pub fn unit_payload() -> DVector<Complex64> {
    DVector::from_element(1, Complex64::new(1.0, 0.0))
}

#[allow(dead_code)]
pub fn real_payload(v: &[f64]) -> DVector<Complex64> {
    DVector::from_iterator(v.len(), v.iter().map(|&x| Complex64::new(x, 0.0)))
}
