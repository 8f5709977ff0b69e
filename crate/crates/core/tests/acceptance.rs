//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use hardy_trees::forms::{
    quadform_full, quadform_radial, random_radial_vector, random_vertex_function, weighted_norm_radial,
    weighted_norm_vertex, Boundary, Distribution, Support,
};
use hardy_trees::functions::{laplacian_quotient_at, superharmonic_report, PotentialQ};
use hardy_trees::potential::{Constant, Scaled, Tabulated};
use hardy_trees::spectral::{
    build_jacobi, criticality_probe, find_violator, hardy_ratio_inf, null_criticality_sums, poincare_bottom_sweep,
    ViolatorOutcome, NONNEGATIVITY_TOL,
};
use hardy_trees::tree_model::Extension;
use hardy_trees::weights::{lambda_q, max_beta_rbg, max_beta_wbg};
use hardy_trees::{RadialFunction, RadialPotential, RadialTreeSpec, RadialVector, VertexFunction, Weight, WeightSpec};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn homogeneous(q: u64) -> RadialTreeSpec {
    RadialTreeSpec::homogeneous(q).expect("q >= 2")
}

fn weight(spec: WeightSpec) -> Result<Weight, String> {
    Weight::new(spec).map_err(err)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Random admissible (β, γ) for the power family on `T_{q+1}`.
fn random_beta_gamma(rng: &mut ChaCha8Rng, q: u64) -> (f64, f64) {
    let s = (q as f64).sqrt();
    let beta = rng.gen_range(0.0..=max_beta_wbg(q));
    let lo = 1.0 / s;
    let hi = lo + s - beta.exp2();
    (beta, if hi > lo { rng.gen_range(lo..=hi) } else { lo })
}

fn random_half_gamma(rng: &mut ChaCha8Rng, q: u64) -> f64 {
    let s = (q as f64).sqrt();
    let lo = 1.0 / s;
    let hi = lo + s - 0.5f64.exp2();
    if hi > lo + 1e-15 {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

fn hardy_suite() -> Outcome {
    const TOL: f64 = 1e-9;
    let mut worst = f64::INFINITY;
    let mut trials = 0;
    for (q, depth) in [(2u64, 10u64), (3, 10), (4, 10), (9, 7)] {
        let spec = homogeneous(q);
        let tree = spec.build_truncated(depth).map_err(err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + q);
        for trial in 0..200u64 {
            let (beta, gamma) = random_beta_gamma(&mut rng, q);
            let half_gamma = random_half_gamma(&mut rng, q);
            let dist = if trial % 2 == 0 { Distribution::Uniform } else { Distribution::Gaussian };
            let phi = random_vertex_function(&tree, 7919 * q + trial, Support::Ball, dist).map_err(err)?;
            let form = quadform_full(&phi, Boundary::Dirichlet).map_err(err)?;
            let weights = [
                weight(WeightSpec::Wopt { q })?,
                weight(WeightSpec::WbetaGamma { q, beta, gamma })?,
                weight(WeightSpec::WhalfGamma { q, gamma: half_gamma })?,
            ];
            for w in &weights {
                let gap = form - weighted_norm_vertex(w, &phi).map_err(err)?;
                ensure!(gap >= -TOL, "q={q} trial={trial} {}: gap {gap:e}", w.spec());
                worst = worst.min(gap);
            }
            trials += 1;
        }
    }
    Ok(format!("{trials} trials x 3 weights, min gap {worst:.4e} (q=9 at depth 7)"))
}

fn identity_suite() -> Outcome {
    const TOL: f64 = 1e-12;
    let mut checks = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for q in [2u64, 3, 4, 9] {
        let spec = homogeneous(q);
        let lam = lambda_q(q);
        let wopt = weight(WeightSpec::Wopt { q })?;
        let w01 = weight(WeightSpec::WbetaGamma { q, beta: 0.0, gamma: 1.0 })?;
        let green = RadialFunction::GreenSqrt { q };
        let pair_q = PotentialQ::harmonic_pair(q);
        let u = RadialFunction::PairU { q, gamma: None };
        let v = RadialFunction::PairV { q, gamma: None };
        let s = (q as f64).sqrt();
        let gammas = [1.0 / s, 1.0 / s + 0.5 * (s - 0.5f64.exp2()), 1.0 / s + s - 0.5f64.exp2()];
        let halves: Vec<(Weight, Weight)> = gammas
            .iter()
            .map(|&gamma| {
                Ok((
                    weight(WeightSpec::WbetaGamma { q, beta: 0.5, gamma })?,
                    weight(WeightSpec::WhalfGamma { q, gamma })?,
                ))
            })
            .collect::<Result<_, String>>()?;
        let rbar = weight(WeightSpec::RemainderBar { q })?;
        let remainders: Vec<(Weight, Weight)> = (0..5)
            .map(|_| {
                let beta = rng.gen_range(0.0..=max_beta_rbg(q));
                let gamma = rng.gen_range(0.5 + 0.5 / q as f64..=2.0 - beta.exp2());
                Ok((
                    weight(WeightSpec::RemainderBetaGamma { q, beta, gamma })?,
                    weight(WeightSpec::WbetaGamma { q, beta, gamma })?,
                ))
            })
            .collect::<Result<_, String>>()?;
        for n in 0..=1000u64 {
            let opt = wopt.at(n).map_err(err)?;
            let quotient = laplacian_quotient_at(&spec, &green, n).map_err(err)?;
            ensure!(close(quotient, opt, TOL), "q={q} n={n}: Δũ/ũ={quotient} W_opt={opt}");
            let w0 = w01.at(n).map_err(err)?;
            ensure!(close(w0, opt, TOL), "q={q} n={n}: W_(0,1)={w0} W_opt={opt}");
            if n >= 2 {
                let hu = laplacian_quotient_at(&spec, &u, n).map_err(err)? + pair_q.at(n);
                let hv = laplacian_quotient_at(&spec, &v, n).map_err(err)? + pair_q.at(n);
                ensure!(hu.abs() <= TOL && hv.abs() <= TOL, "q={q} n={n}: Hu/u={hu:e} Hv/v={hv:e}");
                let rb = rbar.at(n).map_err(err)?;
                for (_, half) in &halves {
                    let h = half.at(n).map_err(err)?;
                    ensure!(close(rb, h - lam, TOL), "q={q} n={n}: R̄={rb} W-Λ={}", h - lam);
                }
            }
            for (general, half) in &halves {
                let (a, b) = (general.at(n).map_err(err)?, half.at(n).map_err(err)?);
                ensure!(close(a, b, TOL), "q={q} n={n}: W_(1/2,γ) forms differ {a} vs {b}");
            }
            for (rem, w) in &remainders {
                let (r, wv) = (rem.at(n).map_err(err)?, w.at(n).map_err(err)?);
                ensure!(close(r, wv - lam, TOL), "q={q} n={n} {}: R={r} W-Λ={}", rem.spec(), wv - lam);
            }
            checks += 1;
        }
    }
    Ok(format!("{checks} radii x 4 trees, all identities within 1e-12"))
}

fn spectrum_bottom() -> Outcome {
    let spec = homogeneous(2);
    let windows: Vec<u64> = (1..=200).collect();
    let sweep = poincare_bottom_sweep(&spec, &windows).map_err(err)?;
    ensure!(sweep.strictly_decreasing, "λ_min(B_N) not strictly decreasing on N = 1..200");
    let last = sweep.points.last().expect("nonempty").lambda_min;
    let lam = 3.0 - 2.0 * 2f64.sqrt();
    ensure!((last - lam).abs() <= 5e-3, "λ_min(B_200) = {last}, Λ_2 = {lam}");

    let j = build_jacobi(&spec, &Constant(0.0), 0..3).map_err(err)?;
    let bisect = j.lambda_min();
    let dense = DMatrix::from_fn(3, 3, |r, c| match r.abs_diff(c) {
        0 => j.diag[r],
        1 => j.off[r.min(c)],
        _ => 0.0,
    })
    .symmetric_eigenvalues()
    .min();
    let exact = 3.0 - 5f64.sqrt();
    ensure!((bisect - exact).abs() <= 1e-10, "bisection λ(B_3) = {bisect}, exact {exact}");
    ensure!((dense - exact).abs() <= 1e-10, "dense λ(B_3) = {dense}, exact {exact}");
    Ok(format!("λ_min(B_200) - Λ_2 = {:.3e}, λ(B_3) err {:.1e}", last - lam, (bisect - dense).abs()))
}

fn asymptotics() -> Outcome {
    let mut worst = 0.0f64;
    for q in [2u64, 3] {
        let s = (q as f64).sqrt();
        for beta in [0.0, 0.3, 0.5] {
            let w = weight(WeightSpec::WbetaGamma { q, beta, gamma: 1.0 / s })?;
            let n = 1000u64;
            let scaled = (n * n) as f64 * (w.at(n).map_err(err)? - lambda_q(q)) / s;
            let dev = (scaled - beta * (1.0 - beta)).abs();
            ensure!(dev <= 1e-5, "q={q} β={beta}: n²(W-Λ)/√q = {scaled}");
            worst = worst.max(dev);
        }
    }
    Ok(format!("max deviation {worst:.2e}"))
}

fn optimality_near_infinity() -> Outcome {
    let q = 2;
    let spec = homogeneous(q);
    let w = weight(WeightSpec::WhalfGamma { q, gamma: 0.5f64.sqrt() })?;
    let ratios = [100u64, 1000, 10_000]
        .iter()
        .map(|&n| hardy_ratio_inf(&spec, &w, 2..n).map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    ensure!(ratios.windows(2).all(|p| p[1] < p[0]), "hardy ratios not decreasing: {ratios:?}");

    let witness = match find_violator(&spec, 0.0, &w, 1.2, 2, 1_000_000).map_err(err)? {
        ViolatorOutcome::Found(wit) => wit,
        ViolatorOutcome::NotFound { last_ratio, last_window } => {
            return Err(format!("no violator for C=1.2 up to N={last_window}, ratio {last_ratio}"))
        }
    };
    ensure!(witness.measured_ratio < 1.2, "witness measures {}", witness.measured_ratio);

    let rbar = weight(WeightSpec::RemainderBar { q })?;
    let remainder_witness = match find_violator(&spec, lambda_q(q), &rbar, 1.2, 2, 4_194_304).map_err(err)? {
        ViolatorOutcome::Found(wit) => wit,
        ViolatorOutcome::NotFound { last_ratio, last_window } => {
            return Err(format!("no remainder violator for 1.2 up to N={last_window}, ratio {last_ratio}"))
        }
    };
    ensure!(remainder_witness.measured_ratio < 1.2, "remainder witness measures {}", remainder_witness.measured_ratio);
    Ok(format!(
        "ratios {:.5} > {:.5} > {:.5}; C=1.2 violated on [2,{}); remainder x1.2 violated on [2,{})",
        ratios[0], ratios[1], ratios[2], witness.window.end, remainder_witness.window.end
    ))
}

fn criticality() -> Outcome {
    let q = 2;
    let spec = homogeneous(q);
    let w = weight(WeightSpec::WhalfGamma { q, gamma: 0.5f64.sqrt() })?;
    let windows = [10u64, 30, 100, 300, 1000, 3000, 10_000];
    let full = criticality_probe(&spec, &w, &windows).map_err(err)?;
    ensure!(full.points.iter().all(|p| p.lambda_min >= -NONNEGATIVITY_TOL), "negative λ_min in {:?}", full.points);
    let first = full.points[0].lambda_min;
    let last = full.points.last().expect("nonempty").lambda_min;
    ensure!(first >= 10.0 * last, "λ(B_10) = {first}, λ(B_10000) = {last}");
    let half = criticality_probe(&spec, &Scaled { factor: 0.5, inner: &w }, &windows).map_err(err)?;
    ensure!(
        half.limit >= 10.0 * full.limit.abs(),
        "half-weight limit {} vs full-weight limit {}",
        half.limit,
        full.limit
    );
    Ok(format!("λ(B_10)/λ(B_10000) = {:.1}, limits: full {:.2e}, half {:.5}", first / last, full.limit, half.limit))
}

fn null_criticality() -> Outcome {
    let q = 2;
    let spec = homogeneous(q);
    let wopt = weight(WeightSpec::Wopt { q })?;
    let whg = weight(WeightSpec::WhalfGamma { q, gamma: 0.5f64.sqrt() })?;
    let green = null_criticality_sums(&spec, &wopt, &RadialFunction::GreenSqrt { q }, 2000).map_err(err)?;
    let ground = null_criticality_sums(&spec, &whg, &RadialFunction::GroundZ { q, gamma: None }, 2000).map_err(err)?;
    let decay = RadialFunction::LogTabulated((0..=2000).map(|n| -(n as f64) * (q as f64).ln()).collect());
    let control = null_criticality_sums(&spec, &Constant(lambda_q(q)), &decay, 2000).map_err(err)?;
    let (g, z, c) = (green.ratio_at(1000), ground.ratio_at(1000), control.ratio_at(1000));
    let (g, z, c) = (g.ok_or("missing sum")?, z.ok_or("missing sum")?, c.ok_or("missing sum")?);
    ensure!((g - 2.0).abs() <= 0.05, "Green ratio {g}");
    ensure!((z - 4.0).abs() <= 0.1, "ground-state ratio {z}");
    ensure!(c <= 1.05, "control ratio {c}");
    Ok(format!("ratios {g:.5}, {z:.5}, control {c:.6}"))
}

/// Vertex count per radius by walking the tree one vertex at a time.
fn bfs_sphere_counts(spec: &RadialTreeSpec, radii: u64) -> Vec<u128> {
    let mut counts = vec![0u128; radii as usize];
    let mut queue = VecDeque::from([0u8]);
    while let Some(r) = queue.pop_front() {
        counts[r as usize] += 1;
        if (r as u64) + 1 < radii {
            for _ in 0..spec.growth_ratio(r as u64) {
                queue.push_back(r + 1);
            }
        }
    }
    counts
}

fn radial_trees() -> Outcome {
    let trees = [
        RadialTreeSpec::custom(vec![4, 4, 5], Extension::Repeat).map_err(err)?,
        RadialTreeSpec::custom(vec![4, 4, 4, 4, 4, 4, 4, 4, 4, 5], Extension::Affine { slope: 1, intercept: -4 })
            .map_err(err)?,
    ];
    let mut reports = 0;
    for tree in &trees {
        ensure!(tree.is_nondecreasing(), "{tree} is not nondecreasing");
        let counts = bfs_sphere_counts(tree, 10);
        let mut acc = 0u128;
        for n in 1..=10u64 {
            acc += counts[n as usize - 1];
            let volume = tree.ball_volume(n).map_err(err)?;
            ensure!(volume == acc, "{tree}: ball_volume({n}) = {volume}, BFS {acc}");
        }
        let explicit = tree.build_truncated(9).map_err(err)?;
        ensure!(explicit.vertex_count() as u128 == tree.ball_volume(9).map_err(err)?, "{tree}: truncation size");

        let psi1 = 1.0;
        let m1 = tree.branching(1) as f64;
        for beta in [0.0, 0.5, 0.9] {
            let hi = m1 + 1.0 - m1.sqrt() * f64::exp2(beta);
            for gamma in [1.0, 0.5 * (1.0 + hi)] {
                let w = weight(WeightSpec::RadialTreeW { tree: tree.clone(), beta, gamma, psi1 })?;
                let u = RadialFunction::RadialTreeU { tree: tree.clone(), beta, gamma: Some(gamma), psi1 };
                let report =
                    superharmonic_report(tree, &Scaled { factor: -1.0, inner: &w }, &u, 0..=1000, 1e-9).map_err(err)?;
                ensure!(
                    report.is_superharmonic(),
                    "{tree} β={beta} γ={gamma}: Δu/u - W = {} at {}",
                    report.min_quotient,
                    report.argmin
                );
                for n in 0..=1000 {
                    let wn = w.at(n).map_err(err)?;
                    ensure!(wn >= 0.0, "{tree} β={beta} γ={gamma}: W({n}) = {wn}");
                }
                reports += 1;
            }
        }
    }

    let mut specialized = 0;
    for q in [2u64, 3] {
        let tree = homogeneous(q);
        let s = (q as f64).sqrt();
        for beta in [0.0, 0.3, max_beta_wbg(q).min(0.7)] {
            for gamma in [1.0 / s, 1.0 / s + 0.5 * (s - beta.exp2())] {
                let radial = weight(WeightSpec::RadialTreeW { tree: tree.clone(), beta, gamma, psi1: q as f64 })?;
                let module = weight(WeightSpec::WbetaGamma { q, beta, gamma })?;
                for n in 0..=1000 {
                    let (a, b) = (radial.at(n).map_err(err)?, module.at(n).map_err(err)?);
                    ensure!(close(a, b, 1e-12), "q={q} β={beta} γ={gamma} n={n}: {a} vs {b}");
                }
                specialized += 1;
            }
        }
    }
    Ok(format!("{reports} superharmonic reports, ball volumes to n=10, {specialized} specializations"))
}

fn cross_representation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for case in 0..50u64 {
        let q = 2 + case % 2;
        let depth = 2 + case % 11;
        let spec = homogeneous(q);
        let tree = spec.build_truncated(depth).map_err(err)?;
        let start = rng.gen_range(0..depth - 1);
        let end = rng.gen_range(start + 1..depth);
        let phi = random_radial_vector(case, start..end, Distribution::Gaussian).map_err(err)?;
        let full =
            quadform_full(&VertexFunction::from_radial(&tree, &phi).map_err(err)?, Boundary::Dirichlet).map_err(err)?;
        let radial = quadform_radial(&spec, &phi).map_err(err)?;
        let rel = (full - radial).abs() / radial.abs().max(f64::MIN_POSITIVE);
        ensure!(rel <= 1e-10, "q={q} depth={depth} [{start},{end}): full {full} radial {radial}");
        worst = worst.max(rel);
    }

    let mut worst_j = 0.0f64;
    for case in 0..50u64 {
        let q = 2 + case % 2;
        let spec = homogeneous(q);
        let start = rng.gen_range(0..10u64);
        let end = start + rng.gen_range(1..20u64);
        let potential =
            Tabulated::new(start, (start..end).map(|_| rng.gen_range(-1.0..2.0) * lambda_q(q) * 4.0).collect());
        let phi = random_radial_vector(1000 + case, start..end, Distribution::Uniform).map_err(err)?;
        let lhs =
            quadform_radial(&spec, &phi).map_err(err)? - weighted_norm_radial(&spec, &potential, &phi).map_err(err)?;
        let j = build_jacobi(&spec, &potential, start..end).map_err(err)?;
        let psi: RadialVector = phi.to_volume(&spec);
        let rhs = j.quadratic(&psi.values);
        let scale = quadform_radial(&spec, &phi).map_err(err)?.abs()
            + weighted_norm_radial(&spec, &Scaled { factor: 1.0, inner: AbsPotential(&potential) }, &phi)
                .map_err(err)?;
        let rel = (lhs - rhs).abs() / scale;
        ensure!(rel <= 1e-10, "q={q} [{start},{end}): form-norm {lhs} vs ψᵀJψ {rhs}");
        worst_j = worst_j.max(rel);
    }
    Ok(format!("max relative error: forms {worst:.1e}, congruence {worst_j:.1e}"))
}

struct AbsPotential<'a>(&'a Tabulated);

impl RadialPotential for AbsPotential<'_> {
    fn value_at(&self, n: u64) -> hardy_trees::Result<f64> {
        Ok(self.0.value_at(n)?.abs())
    }
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            name: "hardy inequalities on random vertex functions",
            budget: Duration::from_secs(30),
            run: hardy_suite,
        },
        Criterion { name: "closed-form identities", budget: Duration::from_secs(10), run: identity_suite },
        Criterion { name: "bottom of the Dirichlet spectrum", budget: Duration::from_secs(5), run: spectrum_bottom },
        Criterion { name: "weight asymptotics", budget: Duration::from_secs(1), run: asymptotics },
        Criterion { name: "optimality near infinity", budget: Duration::from_secs(30), run: optimality_near_infinity },
        Criterion { name: "criticality probe", budget: Duration::from_secs(20), run: criticality },
        Criterion { name: "null-criticality sums", budget: Duration::from_secs(5), run: null_criticality },
        Criterion { name: "radial trees", budget: Duration::from_secs(10), run: radial_trees },
        Criterion {
            name: "cross-representation consistency",
            budget: Duration::from_secs(10),
            run: cross_representation,
        },
    ];
    let mut failures = 0;
    for (i, c) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => {
                Err(format!("{detail}; took {:.1}s over the {}s budget", elapsed.as_secs_f64(), c.budget.as_secs()))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS [{}] {}: {} ({:.2}s)", i + 1, c.name, detail, elapsed.as_secs_f64()),
            Err(detail) => {
                failures += 1;
                println!("FAIL [{}] {}: {} ({:.2}s)", i + 1, c.name, detail, elapsed.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
