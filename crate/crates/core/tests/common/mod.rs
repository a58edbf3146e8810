#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use saddlekit::consensus::{
    build_consensus_operators, metropolis_weights, ConsensusOperators, MultiAgentProblem, Network,
};
use saddlekit::problem::{EqualityConstrainedProblem, QuadraticCost};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector(len: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// `QᵀDQ` with a random orthogonal `Q` and eigenvalues uniform in `[lo, hi]`.
pub fn random_spd(m: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let q = gaussian_matrix(m, m, rng).qr().q();
    let d = DMatrix::from_diagonal(&DVector::from_fn(m, |_, _| rng.random_range(lo..=hi)));
    &q * d * q.transpose()
}

/// Constraint matrix with the requested row rank (`rank ≤ rows`).
pub fn matrix_of_rank(rows: usize, cols: usize, rank: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    gaussian_matrix(rows, rank, rng) * gaussian_matrix(rank, cols, rng)
}

/// Corpus problem: `M ≤ 10`, `E ≤ 6`, strongly convex cost, feasible `b`.
/// Odd seeds get a row-rank-deficient `B`.
pub fn corpus_problem(seed: u64) -> EqualityConstrainedProblem {
    let mut rng = rng(seed);
    let m = rng.random_range(3..=10);
    let e = rng.random_range(2..=6.min(m - 1));
    let rank = if seed % 2 == 1 { rng.random_range(1..e) } else { e };
    let b = matrix_of_rank(e, m, rank, &mut rng);
    let r = random_spd(m, 0.5, 5.0, &mut rng);
    let linear = gaussian_vector(m, &mut rng);
    let rhs = &b * gaussian_vector(m, &mut rng);
    EqualityConstrainedProblem::new(QuadraticCost::new(r, linear).unwrap(), b, rhs).unwrap()
}

/// Same as [`corpus_problem`] with `b = 0`.
pub fn homogeneous_problem(seed: u64) -> EqualityConstrainedProblem {
    let p = corpus_problem(seed);
    let zero = DVector::zeros(p.dim_constraints());
    EqualityConstrainedProblem::new(p.cost().clone(), p.constraint_matrix().clone(), zero).unwrap()
}

/// Saddle point from the pseudo-inverse of the full KKT matrix
/// `[2R Bᵀ; B 0]`. The minimum-norm solution puts `λ` in `Range(B)`.
pub fn kkt_oracle(problem: &EqualityConstrainedProblem) -> (DVector<f64>, DVector<f64>) {
    let m = problem.dim_primal();
    let e = problem.dim_constraints();
    let b = problem.constraint_matrix();
    let mut kkt = DMatrix::zeros(m + e, m + e);
    kkt.view_mut((0, 0), (m, m))
        .copy_from(&(problem.cost().quadratic_term() * 2.0));
    kkt.view_mut((0, m), (m, e)).copy_from(&b.transpose());
    kkt.view_mut((m, 0), (e, m)).copy_from(b);
    let mut rhs = DVector::zeros(m + e);
    rhs.rows_mut(0, m).copy_from(&(-problem.cost().linear_term()));
    rhs.rows_mut(m, e).copy_from(problem.constraint_rhs());
    let svd = kkt.svd(true, true);
    let tol = svd.singular_values.max() * (m + e) as f64 * f64::EPSILON * 10.0;
    let sol = svd.solve(&rhs, tol).unwrap();
    (sol.rows(0, m).into_owned(), sol.rows(m, e).into_owned())
}

/// Smallest nonzero eigenvalue of `BBᵀ`, i.e. `σ̲²(B)`.
pub fn sigma_underbar_sq(b: &DMatrix<f64>) -> f64 {
    let eig = (b * b.transpose()).symmetric_eigenvalues();
    let top = eig.max();
    eig.iter()
        .copied()
        .filter(|&v| v > top * 1e-10)
        .fold(f64::INFINITY, f64::min)
}

/// Random connected network with Metropolis weights and random agent
/// quadratics whose curvature is uniform in `[lo, hi]`.
pub fn multi_agent(seed: u64, k: usize, m: usize, lo: f64, hi: f64) -> (MultiAgentProblem, ConsensusOperators) {
    let mut rng = rng(seed);
    let net = Network::connected_erdos_renyi(k, 0.5, &mut rng, 1000).unwrap();
    let ops = build_consensus_operators(&metropolis_weights(&net).unwrap(), m).unwrap();
    let costs = (0..k)
        .map(|_| {
            let r = random_spd(m, lo, hi, &mut rng);
            QuadraticCost::new(r, gaussian_vector(m, &mut rng)).unwrap()
        })
        .collect();
    let problem = MultiAgentProblem::new(net, costs, &ops).unwrap();
    (problem, ops)
}

pub fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}

/// Problem with curvature in `[0.5, 2.5]` and singular values of `B` in
/// `[0.8, 1.25]`. Odd seeds repeat the first row of `B`.
pub fn conditioned_problem(seed: u64) -> EqualityConstrainedProblem {
    let mut rng = rng(seed);
    let m = rng.random_range(3..=10);
    let e = rng.random_range(2..=6.min(m - 1));
    let u = gaussian_matrix(e, e, &mut rng).qr().q();
    let v = gaussian_matrix(m, m, &mut rng).qr().q();
    let mut s = DMatrix::zeros(e, m);
    for i in 0..e {
        s[(i, i)] = rng.random_range(0.8..=1.25);
    }
    let mut b = u * s * v.transpose();
    if seed % 2 == 1 {
        let first = b.row(0).into_owned();
        b = b.insert_row(e, 0.0);
        b.set_row(e, &first);
    }
    let r = random_spd(m, 0.5, 2.5, &mut rng);
    let linear = gaussian_vector(m, &mut rng);
    let rhs = &b * gaussian_vector(m, &mut rng);
    EqualityConstrainedProblem::new(QuadraticCost::new(r, linear).unwrap(), b, rhs).unwrap()
}
