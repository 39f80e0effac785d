//! Acceptance suite: eight criteria at their stated tolerances, one
//! PASS/FAIL line each. Exits nonzero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bilinear_ident::certify::{
    estimate_stability_constant, find_rank2_in_kernel, invert_rank_one_difference, weak_identifiability_test,
    SearchOptions, Verdict,
};
use bilinear_ident::convolution::{circ_conv, circ_conv_fft, deconv_map, haar_subspace, SubspaceBasis};
use bilinear_ident::lifting::random_dense_map;
use bilinear_ident::models::{expected_dimension, jacobian_rank_dimension, SparseRankOnePoint, SupportPattern};
use bilinear_ident::numerics::{
    derive_seed, gaussian_vector, inner, rng_from_seed, singular_values, ComplexMatrix, SeededRng, C64,
};
use bilinear_ident::recover::empirical_strong_identifiability;
use bilinear_ident::Error;
use bilinear_ident_harness::{run_experiment_with_threads, to_csv, ExperimentConfig, MRange, Mode};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel_err(a: &[C64], b: &[C64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let scale: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    diff / scale.max(f64::MIN_POSITIVE)
}

fn convolution_identity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for m in 1..=64usize {
        let mut rng = rng_from_seed(derive_seed(1, &[m as u64]));
        for _ in 0..100 {
            let v = gaussian_vector(&mut rng, m);
            let w = gaussian_vector(&mut rng, m);
            let direct = circ_conv(&v, &w).expect("equal lengths");
            let fast = circ_conv_fft(&v, &w).expect("equal lengths");
            worst = worst.max(rel_err(&direct, &fast));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-10 && elapsed < Duration::from_secs(10),
        format!("max relative error {worst:.2e} over m = 1..64 x 100 pairs, {elapsed:.2?} (limit 10s)"),
    )
}

fn dimension_formula() -> Outcome {
    let start = Instant::now();
    let (mut cases, mut mismatches) = (0, Vec::new());
    for n1 in 2..=4usize {
        for n2 in 2..=4usize {
            for s1 in 1..=n1 {
                for s2 in 1..=n2 {
                    let seed = derive_seed(2, &[n1 as u64, n2 as u64, s1 as u64, s2 as u64]);
                    let measured = jacobian_rank_dimension(n1, n2, s1, s2, 10, seed).expect("valid sparsities");
                    let expected = expected_dimension(n1, n2, s1, s2).expect("valid sparsities");
                    cases += 1;
                    if measured != expected {
                        mismatches.push(format!("({n1},{n2},{s1},{s2}): {measured} != {expected}"));
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches.is_empty() && elapsed < Duration::from_secs(30),
        format!("{} mismatches in {cases} cases {mismatches:?}, {elapsed:.2?} (limit 30s)", mismatches.len()),
    )
}

fn sparse_upper_side() -> Outcome {
    let (draws, trials) = (10u64, 50usize);
    let mut rates = Vec::new();
    for draw in 0..draws {
        let e = SubspaceBasis::gaussian(16, 4, derive_seed(3, &[draw, 0])).expect("full rank");
        let d = SubspaceBasis::gaussian(16, 4, derive_seed(3, &[draw, 1])).expect("full rank");
        let map = deconv_map(&e, &d).expect("matching ambient");
        rates.push(empirical_strong_identifiability(&map, 2, 2, trials, derive_seed(3, &[draw, 2])).expect("valid"));
    }
    let pooled = rates.iter().sum::<f64>() / rates.len() as f64;
    outcome(pooled >= 0.98, format!("pooled rate {pooled:.3} over {draws} draws x {trials} trials (need >= 0.98)"))
}

fn sparse_lower_side() -> Outcome {
    let mut counts = [0usize; 2];
    for (slot, m) in [5usize, 6].into_iter().enumerate() {
        for seed in 0..20u64 {
            let map = random_dense_map(4, 4, m, derive_seed(4, &[m as u64, seed])).expect("valid shape");
            let opts = SearchOptions { seed: derive_seed(4, &[m as u64, seed, 1]), ..Default::default() };
            let res = estimate_stability_constant(&map, 2, 2, &opts).expect("valid search");
            let want = if m == 5 { Verdict::CounterexampleFound } else { Verdict::LikelyInjective };
            counts[slot] += usize::from(res.verdict == want);
        }
    }
    outcome(
        counts[0] >= 18 && counts[1] >= 18,
        format!(
            "m=5 COUNTEREXAMPLE_FOUND {}/20, m=6 LIKELY_INJECTIVE {}/20 (need >= 18 each)",
            counts[0], counts[1]
        ),
    )
}

fn subspace_threshold() -> Outcome {
    let (draws, trials) = (10u64, 50usize);
    let mut rates = Vec::new();
    for draw in 0..draws {
        let e = haar_subspace(12, 4, derive_seed(5, &[draw, 0])).expect("valid dims");
        let d = haar_subspace(12, 4, derive_seed(5, &[draw, 1])).expect("valid dims");
        let map = deconv_map(&e, &d).expect("matching ambient");
        rates.push(empirical_strong_identifiability(&map, 4, 4, trials, derive_seed(5, &[draw, 2])).expect("valid"));
    }
    let pooled = rates.iter().sum::<f64>() / rates.len() as f64;

    let mut found = 0;
    for draw in 0..20u64 {
        let e = haar_subspace(11, 4, derive_seed(5, &[100 + draw, 0])).expect("valid dims");
        let d = haar_subspace(11, 4, derive_seed(5, &[100 + draw, 1])).expect("valid dims");
        let map = deconv_map(&e, &d).expect("matching ambient");
        let Some(x) = find_rank2_in_kernel(&map, 300, 20, derive_seed(5, &[100 + draw, 2])).expect("valid map") else {
            continue;
        };
        // Membership re-checked here rather than trusted.
        let sigma = singular_values(&x).expect("finite");
        let residual = map.apply_linear(&x).expect("shape").norm();
        let unit = (x.frobenius_norm() - 1.0).abs() <= 1e-9;
        if unit && sigma.get(2).copied().unwrap_or(0.0) <= 1e-6 && residual <= 1e-8 {
            found += 1;
        }
    }
    outcome(
        pooled >= 0.98 && found >= 18,
        format!(
            "m=12 pooled rate {pooled:.3} over {draws} x {trials} (need >= 0.98); m=11 rank-2 kernel element {found}/20 (need >= 18)"
        ),
    )
}

/// Row supports `A`, `A′` of size `s` with both set differences nonempty.
fn split_supports(rng: &mut SeededRng, n: usize, s: usize) -> (SupportPattern, SupportPattern) {
    loop {
        let a = SupportPattern::random(rng, n, s);
        let a2 = SupportPattern::random(rng, n, s);
        if !a.difference(&a2).is_empty() && !a2.difference(&a).is_empty() {
            return (a, a2);
        }
    }
}

fn rank_one_inversion() -> Outcome {
    let mut worst = 0.0f64;
    let mut rounds = 0;
    for (n1, n2) in [(3usize, 3usize), (5, 4)] {
        let mut rng = rng_from_seed(derive_seed(6, &[n1 as u64, n2 as u64]));
        let mut done = 0;
        while done < 200 {
            let (a, a2) = split_supports(&mut rng, n1, 1 + done % (n1 - 1));
            // Rows of length one are always parallel.
            let b = SupportPattern::random(&mut rng, n2, 2 + done % (n2 - 1));
            let x = SparseRankOnePoint::new(
                a.clone(),
                b.clone(),
                gaussian_vector(&mut rng, a.size()),
                gaussian_vector(&mut rng, b.size()),
            )
            .expect("sizes match");
            let y = SparseRankOnePoint::new(
                a2.clone(),
                b.clone(),
                gaussian_vector(&mut rng, a2.size()),
                gaussian_vector(&mut rng, b.size()),
            )
            .expect("sizes match");
            let (xe, ye) = (x.embed(), y.embed());
            let p = a.difference(&a2)[0];
            let q = a2.difference(&a)[0];
            let (xp, yq) = (xe.row(p), ye.row(q));
            let g = inner(xp, xp).re * inner(yq, yq).re;
            if (g - inner(xp, yq).norm_sqr()) < 1e-3 * g {
                continue;
            }
            let z = xe.sub(&ye).expect("same shape");
            let (xr, yr) = invert_rank_one_difference(&z, &a, &a2, &b).expect("well-conditioned");
            worst = worst.max(xr.sub(&xe).expect("shape").frobenius_norm());
            worst = worst.max(yr.sub(&ye).expect("shape").frobenius_norm());
            done += 1;
        }
        rounds += done;
    }

    let a = SupportPattern::new(3, vec![0, 2]).expect("valid");
    let a2 = SupportPattern::new(3, vec![1, 2]).expect("valid");
    let b = SupportPattern::new(3, vec![0, 1]).expect("valid");
    let x = ComplexMatrix::from_real_rows(&[&[1.0, 2.0, 0.0], &[0.0, 0.0, 0.0], &[3.0, 6.0, 0.0]]);
    let zero_y = matches!(invert_rank_one_difference(&x, &a, &a2, &b), Err(Error::Degenerate(_)));
    let parallel = ComplexMatrix::from_real_rows(&[&[1.0, 1.0, 0.0], &[-2.0, -2.0, 0.0], &[0.0, 0.0, 0.0]]);
    let dependent = matches!(invert_rank_one_difference(&parallel, &a, &a2, &b), Err(Error::Degenerate(_)));
    let same = matches!(invert_rank_one_difference(&x, &a, &a, &b), Err(Error::Precondition(_)));
    outcome(
        worst <= 1e-10 && zero_y && dependent && same,
        format!(
            "max Frobenius error {worst:.2e} over {rounds} round trips (need <= 1e-10); Y=0 degenerate {zero_y}, parallel rows degenerate {dependent}, empty difference precondition {same}"
        ),
    )
}

fn weak_identifiability() -> Outcome {
    let mut counts = [0usize; 2];
    for (slot, m) in [4usize, 3].into_iter().enumerate() {
        for draw in 0..20u64 {
            let seed = derive_seed(7, &[m as u64, draw]);
            let e = SubspaceBasis::gaussian(m, 3, derive_seed(seed, &[0])).expect("full rank");
            let d = SubspaceBasis::gaussian(m, 3, derive_seed(seed, &[1])).expect("full rank");
            let map = deconv_map(&e, &d).expect("matching ambient");
            let mut rng = rng_from_seed(derive_seed(seed, &[2]));
            let (u0, v0) = SparseRankOnePoint::random(&mut rng, 3, 3, 2, 2).factors();
            let opts = SearchOptions { restarts: 3, seed: derive_seed(seed, &[3]), ..Default::default() };
            let res = weak_identifiability_test(&map, &u0, &v0, 2, 2, &opts).expect("valid test");
            let ok = if m == 4 {
                res.verdict == Verdict::LikelyInjective
            } else {
                res.verdict == Verdict::CounterexampleFound && res.pair.is_some_and(|p| p.orbit_distance > 0.1)
            };
            counts[slot] += usize::from(ok);
        }
    }
    outcome(
        counts[0] >= 18 && counts[1] >= 18,
        format!(
            "m=4 LIKELY_INJECTIVE {}/20, m=3 COUNTEREXAMPLE_FOUND with orbit distance > 0.1 {}/20 (need >= 18 each)",
            counts[0], counts[1]
        ),
    )
}

fn harness_determinism() -> Outcome {
    let configs = [
        ExperimentConfig::preset(Mode::ConvSelftest),
        ExperimentConfig::preset(Mode::Weak),
        ExperimentConfig { trials: 6, ..ExperimentConfig::preset(Mode::Phase) },
        ExperimentConfig { m_range: MRange::new(5, 6), trials: 4, ..ExperimentConfig::preset(Mode::Certify) },
        ExperimentConfig { m_range: MRange::new(11, 12), trials: 4, ..ExperimentConfig::preset(Mode::Recover) },
        ExperimentConfig { n1: 3, n2: 3, ..ExperimentConfig::preset(Mode::DimCheck) },
    ];
    let mut differing = Vec::new();
    for cfg in &configs {
        let runs: Vec<String> = [1, 2, 8]
            .into_iter()
            .map(|t| to_csv(&run_experiment_with_threads(cfg, t).expect("valid preset")))
            .collect();
        if runs.iter().any(|r| r != &runs[0]) {
            differing.push(cfg.mode.name());
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} modes compared under 1, 2, 8 threads; differing: {differing:?}", configs.len()),
    )
}

type Check = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [(&str, Check); 8] = [
        ("convolution identity", convolution_identity),
        ("dimension formula", dimension_formula),
        ("sparse threshold, upper side", sparse_upper_side),
        ("sparse threshold, lower side", sparse_lower_side),
        ("subspace threshold", subspace_threshold),
        ("rank-one-difference inversion", rank_one_inversion),
        ("weak identifiability", weak_identifiability),
        ("harness determinism", harness_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        failed += usize::from(!out.pass);
        println!(
            "[{}] criterion {} ({name}): {} ({:.1?})",
            if out.pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            start.elapsed()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
