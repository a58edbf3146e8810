//! Acceptance suite. Runs every criterion, prints one line each and exits
//! nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use saddlekit::consensus::{
    metropolis_weights, nu_rho_bound, nu_rho_estimate, Algorithm, AlgorithmFamily, DistributedState, Network,
};
use saddlekit::experiment::{run_experiment, ExperimentConfig, GroupStatus, Scenario, ScenarioSpec};
use saddlekit::problem::{solve_kkt_reference, spectral_quantities, RegularityConstants};
use saddlekit::solvers::{
    forward_backward_equivalent, run_solver, step, step_size_bounds, theoretical_rate, to_incremental_equivalent,
    BoundsRegime, Method, SolverConfig, SolverState, TerminationStatus,
};

use common::{
    conditioned_problem, corpus_problem, gaussian_vector, homogeneous_problem, max_abs_diff, multi_agent, rng,
    sigma_underbar_sq,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

const CORPUS: u64 = 50;

fn contraction() -> Verdict {
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for seed in 0..CORPUS {
        let p = corpus_problem(seed);
        let reference = solve_kkt_reference(&p).unwrap();
        let spectral = spectral_quantities(p.constraint_matrix()).unwrap();
        for rho in [0.0, 1.0, 10.0] {
            let c = RegularityConstants::for_quadratic(&p, rho).unwrap();
            let mu_w = 0.5 / c.delta_rho;
            let mu_lambda = c.nu_rho / spectral.sigma_max_sq();
            let gamma = theoretical_rate(&c, &spectral, mu_w, mu_lambda).unwrap().gamma;
            let config = SolverConfig::new(mu_w, mu_lambda)
                .with_penalty(rho)
                .with_max_iterations(500)
                .with_stop_tolerance(None);
            let v = run_solver(&p, &config, Method::Incremental, Some(&reference))
                .unwrap()
                .lyapunov();
            if v.len() != 501 {
                failures.push(format!("seed {seed} ρ={rho}: {} records", v.len()));
                continue;
            }
            for (i, pair) in v.windows(2).enumerate() {
                let excess = (pair[1] - gamma * pair[0]) / v[0];
                worst = worst.max(excess);
                if excess > 1e-12 {
                    failures.push(format!("seed {seed} ρ={rho} i={}", i + 1));
                    break;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(30);
    verdict(
        pass,
        format!(
            "{} runs x 500 iterations, max (V_i - γV_(i-1))/V_0 = {worst:.2e}, {elapsed:.2?}{}",
            CORPUS * 3,
            fail_list(&failures)
        ),
    )
}

fn range_invariance() -> Verdict {
    let mut worst_residual = 0.0f64;
    let mut worst_slack = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for seed in 0..CORPUS {
        let p = corpus_problem(seed);
        let b = p.constraint_matrix();
        let spectral = spectral_quantities(b).unwrap();
        let oracle = sigma_underbar_sq(b);
        if (spectral.sigma_min_nonzero_sq() - oracle).abs() > 1e-8 * oracle {
            failures.push(format!(
                "seed {seed}: σ̲² {} vs {oracle}",
                spectral.sigma_min_nonzero_sq()
            ));
        }
        for rho in [0.0, 1.0, 10.0] {
            let c = RegularityConstants::for_quadratic(&p, rho).unwrap();
            let config = SolverConfig::new(0.5 / c.delta_rho, c.nu_rho / spectral.sigma_max_sq())
                .with_penalty(rho)
                .with_max_iterations(500)
                .with_stop_tolerance(None);
            let trace = run_solver(&p, &config, Method::Incremental, None).unwrap();
            let r = trace.records.iter().map(|r| r.range_residual).fold(0.0, f64::max);
            worst_residual = worst_residual.max(r);
            if r > 1e-10 {
                failures.push(format!("seed {seed} ρ={rho}: residual {r:e}"));
            }
        }
        // ‖Bᵀx‖² ≥ σ̲²‖x‖² on unit vectors x ∈ Range(B).
        let mut r = rng(seed ^ 0x5eed);
        let s2 = spectral.sigma_min_nonzero_sq();
        for _ in 0..1000 {
            let x = b * gaussian_vector(b.ncols(), &mut r);
            let x = &x / x.norm();
            let slack = s2 - (b.transpose() * &x).norm_squared();
            worst_slack = worst_slack.max(slack);
            if slack > 1e-9 {
                failures.push(format!("seed {seed}: inequality short by {slack:e}"));
                break;
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "max dual range residual {worst_residual:.2e}, max σ̲²‖x‖² - ‖Bᵀx‖² = {worst_slack:.2e} over {} vectors{}",
            CORPUS * 1000,
            fail_list(&failures)
        ),
    )
}

fn trajectories_agree(
    p: &saddlekit::problem::EqualityConstrainedProblem,
    method: Method,
    config: &SolverConfig,
    first: SolverState,
    inc_config: &SolverConfig,
    second: SolverState,
) -> f64 {
    let (mut a, mut b) = (first, second);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        a = step(method, p, config, &a).unwrap();
        b = step(Method::Incremental, p, inc_config, &b).unwrap();
        worst = worst.max(max_abs_diff(&a.w, &b.w));
    }
    worst
}

fn equivalences() -> Verdict {
    let mut worst_non = 0.0f64;
    let mut worst_fb = 0.0f64;
    for i in 0..20u64 {
        let mut r = rng(1000 + i);
        // Non-incremental with η ≥ μ_λ.
        let p = corpus_problem(100 + i);
        let spectral = spectral_quantities(p.constraint_matrix()).unwrap();
        let rho = r.random_range(0.0..5.0);
        let c = RegularityConstants::for_quadratic(&p, rho).unwrap();
        let mu_w = 0.5 / c.delta_rho;
        let mu_lambda = c.nu_rho / spectral.sigma_max_sq();
        let eta = rho + mu_lambda;
        let w0 = gaussian_vector(p.dim_primal(), &mut r);
        let l0 = gaussian_vector(p.dim_constraints(), &mut r);
        let eq = to_incremental_equivalent(eta, mu_lambda, &w0, &l0, &p).unwrap();
        worst_non = worst_non.max(trajectories_agree(
            &p,
            Method::NonIncremental,
            &SolverConfig::new(mu_w, mu_lambda).with_penalty(eta),
            SolverState::new(w0.clone(), l0),
            &SolverConfig::new(mu_w, mu_lambda).with_penalty(eq.rho),
            SolverState::new(w0, eq.lambda_init),
        ));

        // Forward-backward with b = 0 and ρ = μ_λ.
        let p = homogeneous_problem(100 + i);
        let spectral = spectral_quantities(p.constraint_matrix()).unwrap();
        let mu_lambda = r.random_range(0.05..1.0) / spectral.sigma_max_sq();
        let mu_w = 0.5 / RegularityConstants::for_quadratic(&p, mu_lambda).unwrap().delta_rho;
        let w0 = gaussian_vector(p.dim_primal(), &mut r);
        let l0 = gaussian_vector(p.dim_constraints(), &mut r);
        let eq = forward_backward_equivalent(mu_lambda, &w0, &l0, &p).unwrap();
        worst_fb = worst_fb.max(trajectories_agree(
            &p,
            Method::ForwardBackward,
            &SolverConfig::new(mu_w, mu_lambda),
            SolverState::new(w0.clone(), l0),
            &SolverConfig::new(mu_w, mu_lambda).with_penalty(eq.rho),
            SolverState::new(w0, eq.lambda_init),
        ));
    }
    verdict(
        worst_non <= 1e-12 && worst_fb <= 1e-12,
        format!("20 pairs x 100 iterations, max |Δw| non-incremental {worst_non:.2e}, forward-backward {worst_fb:.2e}"),
    )
}

fn eta_zero_regime() -> Verdict {
    let mut failures = Vec::new();
    let mut slowest = 0;
    let mut latest_monotone = 0;
    for i in 0..20u64 {
        let p = conditioned_problem(200 + i);
        let spectral = spectral_quantities(p.constraint_matrix()).unwrap();
        let c = RegularityConstants::for_quadratic(&p, 0.0).unwrap();
        let bounds = step_size_bounds(&c, &spectral, BoundsRegime::NonincrementalEta0).unwrap();
        let (mu_w, mu_lambda) = (0.5 * bounds.mu_w_bound, bounds.mu_lambda_bound);
        if !bounds.admits(mu_w, mu_lambda) {
            failures.push(format!("problem {i}: steps not admissible"));
            continue;
        }
        let reference = solve_kkt_reference(&p).unwrap();
        let config = SolverConfig::new(mu_w, mu_lambda)
            .with_max_iterations(5000)
            .with_stop_tolerance(Some(1e-10));
        let trace = run_solver(&p, &config, Method::NonIncremental, Some(&reference)).unwrap();
        if trace.status != TerminationStatus::Converged {
            failures.push(format!(
                "problem {i}: {:?} at rel error {:e}",
                trace.status,
                trace.last().rel_error.unwrap()
            ));
            continue;
        }
        slowest = slowest.max(trace.iterations());
        // Last iteration at which V increased.
        let v = trace.lyapunov();
        let last_rise = v
            .windows(2)
            .rposition(|w| w[1] > w[0] + 1e-12 * v[0])
            .map_or(0, |j| j + 1);
        latest_monotone = latest_monotone.max(last_rise);
        if last_rise > v.len() / 2 {
            failures.push(format!("problem {i}: V still rising at iteration {last_rise}"));
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "20 problems reach 1e-10 within {slowest} iterations, V nonincreasing after iteration {latest_monotone}{}",
            fail_list(&failures)
        ),
    )
}

/// Best value of the bound over a uniform 10⁶-point grid on `(0, β̄/(2δ)]`,
/// refined once with another 10⁶ points between the neighbors of the best
/// grid point.
fn nu_rho_grid_oracle(beta: f64, delta: f64, s2: f64, rho: f64) -> f64 {
    const N: usize = 1_000_000;
    let f = |eta: f64| nu_rho_bound(beta, delta, s2, rho, eta);
    let top = beta / (2.0 * delta);
    let h = top / N as f64;
    let (best_j, _) = (1..=N)
        .map(|j| (j, f(j as f64 * h)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let lo = (best_j as f64 - 1.0) * h;
    let span = 2.0 * h;
    (0..=N)
        .map(|j| f(lo + span * j as f64 / N as f64))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn nu_rho_oracle() -> Verdict {
    let mut r = rng(5);
    let mut worst_rel = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut failures = Vec::new();
    let log_uniform = |r: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64| (r.random_range(lo.ln()..hi.ln())).exp();
    for t in 0..50 {
        let beta = log_uniform(&mut r, 0.1, 10.0);
        let delta = beta * r.random_range(1.0..5.0);
        let s2 = log_uniform(&mut r, 0.01, 2.0);
        let rho = log_uniform(&mut r, 1e-3, 1e3) * delta / s2;
        let est = nu_rho_estimate(beta, delta, s2, rho).unwrap().nu_rho;
        let oracle = nu_rho_grid_oracle(beta, delta, s2, rho);
        let rel = (est - oracle).abs() / oracle;
        worst_rel = worst_rel.max(rel);
        if rel > 1e-6 {
            failures.push(format!("tuple {t}: rel {rel:e}"));
        }
        let mut previous = 0.0;
        for j in 0..=45 {
            let rho_j = 10f64.powf(-3.0 + j as f64 * 0.2) * delta / s2;
            let v = nu_rho_estimate(beta, delta, s2, rho_j).unwrap().nu_rho;
            if v < previous {
                failures.push(format!("tuple {t}: decreases at ρ = {rho_j:e}"));
                break;
            }
            previous = v;
        }
        let far = nu_rho_estimate(beta, delta, s2, 1e6 * delta / s2).unwrap();
        let gap = far.limit_gap() / beta;
        worst_gap = worst_gap.max(gap);
        if gap > 0.01 {
            failures.push(format!("tuple {t}: limit gap {gap:.4}β̄"));
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "50 tuples, max relative error vs grid {worst_rel:.2e}, monotone in ρ, max gap at ρ=1e6δ/σ̲² {worst_gap:.4}β̄{}",
            fail_list(&failures)
        ),
    )
}

fn scenario_orderings() -> Verdict {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    let families = vec![
        AlgorithmFamily::PdDist,
        AlgorithmFamily::AlPdDist,
        AlgorithmFamily::Extra,
        AlgorithmFamily::ExactDiffusion,
    ];
    for scenario in [
        Scenario::WellConditioned,
        Scenario::IllConditioned,
        Scenario::NonconvexLocal,
    ] {
        for seed in [1u64, 2, 3] {
            let config =
                ExperimentConfig::new(ScenarioSpec::new(scenario, 20, 20, seed)).with_algorithms(families.clone());
            let result = match run_experiment(&config) {
                Ok(r) => r,
                Err(e) => {
                    failures.push(format!("{scenario} seed {seed}: {e}"));
                    continue;
                }
            };
            let iters = |name: &str| result.group(name).and_then(|g| g.iterations_to_target);
            let fam = |f: AlgorithmFamily| result.family(f).and_then(|g| g.iterations_to_target);
            let pd = iters("PD_DIST");
            let beats_pd = |other: Option<usize>| match (other, pd) {
                (Some(o), Some(p)) => o < p,
                (Some(_), None) => true,
                _ => false,
            };
            let show = |v: Option<usize>| v.map_or("-".to_string(), |n| n.to_string());
            match scenario {
                Scenario::WellConditioned => {
                    let al = iters("AL_PD_DIST[rho=100]");
                    notes.push(format!("well/{seed} PD {} AL100 {}", show(pd), show(al)));
                    if !matches!((pd, al), (Some(p), Some(a)) if p < a) {
                        failures.push(format!("well seed {seed}: PD {pd:?} vs AL(ρ=100) {al:?}"));
                    }
                }
                Scenario::IllConditioned => {
                    let (al, ex, ed) = (
                        fam(AlgorithmFamily::AlPdDist),
                        fam(AlgorithmFamily::Extra),
                        fam(AlgorithmFamily::ExactDiffusion),
                    );
                    notes.push(format!(
                        "ill/{seed} PD {} AL {} EXTRA {} ED {}",
                        show(pd),
                        show(al),
                        show(ex),
                        show(ed)
                    ));
                    if !(beats_pd(al) && beats_pd(ex) && beats_pd(ed)) {
                        failures.push(format!("ill seed {seed}: PD {pd:?} AL {al:?} EXTRA {ex:?} ED {ed:?}"));
                    }
                }
                Scenario::NonconvexLocal => {
                    let pd_status = result.group("PD_DIST").map(|g| g.status);
                    let (al, ex, ed) = (
                        fam(AlgorithmFamily::AlPdDist),
                        fam(AlgorithmFamily::Extra),
                        fam(AlgorithmFamily::ExactDiffusion),
                    );
                    notes.push(format!(
                        "nonconvex/{seed} PD {} AL {} EXTRA {} ED {}",
                        pd_status.map_or("-", |s| s.as_str()),
                        show(al),
                        show(ex),
                        show(ed)
                    ));
                    if pd_status != Some(GroupStatus::Diverged) || al.is_none() || ex.is_none() || ed.is_none() {
                        failures.push(format!(
                            "nonconvex seed {seed}: PD {pd_status:?} AL {al:?} EXTRA {ex:?} ED {ed:?}"
                        ));
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(600) {
        failures.push(format!("took {elapsed:.2?}"));
    }
    verdict(
        failures.is_empty(),
        format!("{}; {elapsed:.2?}{}", notes.join(", "), fail_list(&failures)),
    )
}

fn extra_as_pd() -> Verdict {
    let mut worst_primal = 0.0f64;
    let mut worst_dual = 0.0f64;
    for seed in 0..10u64 {
        let k = 4 + (seed as usize % 7);
        let m = 1 + (seed as usize % 3);
        let (problem, ops) = multi_agent(300 + seed, k, m, 0.5, 4.0);
        let mu = 0.5 / problem.smoothness();
        let stacked = problem.stacked_problem();
        let config = SolverConfig::new(mu, 1.0 / (2.0 * mu)).with_penalty(1.0 / (2.0 * mu));
        let w0 = gaussian_vector(ops.stacked_dim(), &mut rng(seed));
        let mut pd = SolverState::new(w0.clone(), DVector::zeros(ops.stacked_dim()));
        let mut extra = DistributedState::new(w0, DVector::zeros(ops.stacked_dim()));
        for _ in 0..200 {
            pd = step(Method::Incremental, stacked, &config, &pd).unwrap();
            extra = Algorithm::Extra { mu }.step(&problem, &ops, &extra).unwrap();
            worst_primal = worst_primal.max(max_abs_diff(&pd.w, &extra.primal));
            worst_dual = worst_dual.max(max_abs_diff(&ops.b_apply(&pd.lambda), &extra.dual));
        }
    }
    verdict(
        worst_primal <= 1e-12 && worst_dual <= 1e-10,
        format!("10 problems x 200 iterations, max |Δ𝓌| {worst_primal:.2e}, max |𝓎 - ℬλ| {worst_dual:.2e}"),
    )
}

fn metropolis() -> Verdict {
    let mut r = rng(8);
    let mut failures = Vec::new();
    let mut worst_stochastic = 0.0f64;
    for g in 0..100 {
        let k = r.random_range(2..=30);
        let net = Network::connected_erdos_renyi(k, 0.3, &mut r, 100_000).unwrap();
        let a = metropolis_weights(&net).unwrap();
        let w = a.weights();
        if !a.check(&net).all_ok() {
            failures.push(format!("graph {g}: library check failed"));
        }
        let symmetric = (0..k).all(|i| (0..k).all(|j| w[(i, j)] == w[(j, i)]));
        let sums = (0..k)
            .map(|i| (w.row(i).sum() - 1.0).abs().max((w.column(i).sum() - 1.0).abs()))
            .fold(0.0, f64::max);
        worst_stochastic = worst_stochastic.max(sums);
        let nonnegative = w.iter().all(|&x| x >= 0.0);
        // Connected with a positive diagonal: A^(K−1) is entrywise positive.
        let mut power = DMatrix::identity(k, k);
        for _ in 0..k.saturating_sub(1).max(1) {
            power = &power * w;
        }
        let primitive = power.iter().all(|&x| x > 0.0);
        let eig = (DMatrix::identity(k, k) - w).symmetric_eigenvalues();
        let psd = eig.iter().all(|&e| e >= -1e-12);
        let zeros = eig.iter().filter(|e| e.abs() < 1e-10).count();
        if !(symmetric && sums <= 1e-12 && nonnegative && primitive && psd && zeros == 1) {
            failures.push(format!(
                "graph {g} (K={k}): sym {symmetric} stoch {sums:e} nonneg {nonnegative} prim {primitive} psd {psd} zeros {zeros}"
            ));
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "100 graphs, max stochasticity error {worst_stochastic:.2e}{}",
            fail_list(&failures)
        ),
    )
}

fn fail_list(failures: &[String]) -> String {
    if failures.is_empty() {
        String::new()
    } else {
        let shown: Vec<&str> = failures.iter().take(5).map(String::as_str).collect();
        format!("; failures ({}): {}", failures.len(), shown.join("; "))
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("Lyapunov contraction at the certified rate", contraction),
        ("dual range-space invariance", range_invariance),
        ("non-incremental and forward-backward equivalence", equivalences),
        ("η = 0 non-incremental regime", eta_zero_regime),
        ("ν_ρ estimate against a grid oracle", nu_rho_oracle),
        ("scenario orderings at K = M = 20", scenario_orderings),
        ("EXTRA as primal-dual on the stacked problem", extra_as_pd),
        ("Metropolis weight properties", metropolis),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        all &= v.pass;
        println!(
            "criterion {} {}: {name}: {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
