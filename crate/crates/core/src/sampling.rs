//! Random behaviors for fuzzing, property tests and benchmarks.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::behavior::{Behavior, Table};
use crate::hv::{deterministic_vertex, evaluate, pr_box, pr_box_variant, random_local_model};
use crate::quantum::{random, two_qubit_behavior};

/// Flat Dirichlet weights.
fn dirichlet<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn combine(parts: &[(f64, Behavior)]) -> Behavior {
    let mut p: Table = [[[[0.0; 2]; 2]; 2]; 2];
    for (w, b) in parts {
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for c in 0..2 {
                        p[x][y][a][c] += w * b.p(x, y, a, c);
                    }
                }
            }
        }
    }
    Behavior::new(p).expect("convex combination of valid behaviors")
}

/// Behavior of a random local hidden-variable model with 1 to 16 hidden
/// states.
pub fn local_behavior<R: Rng + ?Sized>(rng: &mut R) -> Behavior {
    let k = rng.random_range(1..=16);
    evaluate(&random_local_model(k, rng.random()).expect("k in range"))
}

/// Random convex combination of a few vertices of the no-signalling
/// polytope (16 deterministic points and 8 PR boxes).
pub fn no_signalling_behavior<R: Rng + ?Sized>(rng: &mut R) -> Behavior {
    let count = rng.random_range(1..=6);
    let weights = dirichlet(count, rng);
    let parts: Vec<(f64, Behavior)> = weights
        .into_iter()
        .map(|w| {
            let k = rng.random_range(0..24);
            let b = if k < 16 {
                deterministic_vertex(k).expect("vertex index in range")
            } else {
                pr_box_variant(k - 16)
            };
            (w, b)
        })
        .collect();
    combine(&parts)
}

/// `w·PR + (1 − w)·uniform` with random `w`.
pub fn noisy_pr_box<R: Rng + ?Sized>(rng: &mut R) -> Behavior {
    let w: f64 = rng.random();
    combine(&[(w, pr_box()), (1.0 - w, Behavior::uniform())])
}

/// Spin measurements in random directions on a random two-qubit state
/// (pure or mixed with equal odds).
pub fn quantum_behavior<R: Rng + ?Sized>(rng: &mut R) -> Behavior {
    let state = if rng.random::<bool>() {
        random::pure_state(4, rng)
    } else {
        random::mixed_state(4, rng)
    }
    .expect("dimension 4 is supported");
    let mut dir = || random::unit_vector(rng);
    let alice = [dir(), dir()];
    let bob = [dir(), dir()];
    two_qubit_behavior(&state, alice, bob).expect("two-qubit state")
}

/// Independent random distribution in every context; almost surely
/// signalling.
pub fn signalling_behavior<R: Rng + ?Sized>(rng: &mut R) -> Behavior {
    let mut p: Table = [[[[0.0; 2]; 2]; 2]; 2];
    for px in p.iter_mut() {
        for pxy in px.iter_mut() {
            let w = dirichlet(4, rng);
            for k in 0..4 {
                pxy[k / 2][k % 2] = w[k];
            }
        }
    }
    Behavior::new(p).expect("each context is a distribution")
}

/// One of the generators above, chosen uniformly.
pub fn any_behavior<R: Rng + ?Sized>(rng: &mut R) -> Behavior {
    match rng.random_range(0..5) {
        0 => local_behavior(rng),
        1 => no_signalling_behavior(rng),
        2 => noisy_pr_box(rng),
        3 => quantum_behavior(rng),
        _ => signalling_behavior(rng),
    }
}
