//! Independent references for the closed forms: the evolution operator from
//! a dense matrix exponential of the spin Hamiltonian, and exact outcome
//! expectations over a preparation law by tensor Gauss-Legendre quadrature.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::measurement::{probabilities, Axis, OutcomeProbabilities};
use crate::physics::{apply_process, ProcessMatrix, ProcessParams};
use crate::states::{product_state, Law, PrepDistribution, PreparedPair, QubitParams};

/// Default rule size per integrated dimension.
pub const DEFAULT_NODES: usize = 20;

fn kron2(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> Matrix4<Complex64> {
    Matrix4::from_fn(|i, j| a[i / 2][j / 2] * b[i % 2][j % 2])
}

/// `H` in joules, product basis |++⟩, |+−⟩, |−+⟩, |−−⟩, spin operators
/// `s = σ/2`.
pub fn hamiltonian(params: &ProcessParams) -> Matrix4<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let h = Complex64::new(0.5, 0.0);
    let ih = Complex64::new(0.0, 0.5);
    let one = Complex64::new(1.0, 0.0);
    let sx = [[z, h], [h, z]];
    let sy = [[z, -ih], [ih, z]];
    let sz = [[h, z], [z, -h]];
    let id = [[one, z], [z, one]];
    let gb = Complex64::new(params.zeeman(), 0.0);
    let jxy = Complex64::new(params.j_xy, 0.0);
    let jz = Complex64::new(params.j_z, 0.0);
    (kron2(&sz, &id) + kron2(&id, &sz)) * gb
        - (kron2(&sx, &sx) + kron2(&sy, &sy)) * (jxy * 2.0)
        - kron2(&sz, &sz) * (jz * 2.0)
}

/// `exp(−i H dt / ħ)` by dense exponentiation.
pub fn evolution_by_expm(params: &ProcessParams, dt: f64) -> ProcessMatrix {
    let a = hamiltonian(params) * Complex64::new(0.0, -dt / params.constants.hbar);
    let e = a.exp();
    let mut m = ProcessMatrix::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m.entries[i][j] = e[(i, j)];
        }
    }
    m
}

/// Nodes and normalised weights of one law: a single node for a fixed
/// value, a Gauss-Legendre rule for a uniform range.
fn law_nodes(law: &Law, rule: &GaussLegendre) -> Vec<(f64, f64)> {
    match *law {
        Law::Fixed(x) => vec![(x, 1.0)],
        Law::Uniform([lo, hi]) if hi > lo => rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (lo + hi) + 0.5 * (hi - lo) * x, 0.5 * w))
            .collect(),
        Law::Uniform([lo, _]) => vec![(lo, 1.0)],
    }
}

/// `E{f(pair)}` over the six independent laws of `dist`.
pub fn expectation<const D: usize>(dist: &PrepDistribution, nodes: usize, f: impl Fn(&PreparedPair) -> [f64; D]) -> [f64; D] {
    let rule = GaussLegendre::new(NonZeroUsize::new(nodes.max(1)).unwrap());
    let grids = [
        law_nodes(&dist.r1, &rule),
        law_nodes(&dist.r2, &rule),
        law_nodes(&dist.theta1, &rule),
        law_nodes(&dist.theta2, &rule),
        law_nodes(&dist.phi1, &rule),
        law_nodes(&dist.phi2, &rule),
    ];
    let mut acc = [0.0; D];
    for &(r1, w_r1) in &grids[0] {
        for &(r2, w_r2) in &grids[1] {
            for &(t1, w_t1) in &grids[2] {
                for &(t2, w_t2) in &grids[3] {
                    for &(p1, w_p1) in &grids[4] {
                        for &(p2, w_p2) in &grids[5] {
                            let w = w_r1 * w_r2 * w_t1 * w_t2 * w_p1 * w_p2;
                            let pair = PreparedPair {
                                q1: QubitParams { r: r1, theta: t1, phi: p1 },
                                q2: QubitParams { r: r2, theta: t2, phi: p2 },
                            };
                            for (a, v) in acc.iter_mut().zip(f(&pair)) {
                                *a += w * v;
                            }
                        }
                    }
                }
            }
        }
    }
    acc
}

/// Exact `E{p_j}` for states drawn from `dist`, sent through `m` and
/// measured along `axis`.
pub fn expected_probabilities(dist: &PrepDistribution, m: &ProcessMatrix, axis: Axis, nodes: usize) -> OutcomeProbabilities {
    let p = expectation(dist, nodes, |pair| probabilities(axis, &apply_process(m, &product_state(pair))).p);
    OutcomeProbabilities { p }
}
