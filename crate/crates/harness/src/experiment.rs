//! Sweeps over the measurement count: per `(m, trial)` a map is drawn from
//! the ensemble under a derived seed, the mode's operation runs, and the
//! outcomes are folded into one row per `m`.

use std::time::Instant;

use bilinear_ident::certify::{
    estimate_stability_constant, orbit_distance, weak_identifiability_test, SearchOptions, Verdict,
};
use bilinear_ident::convolution::{circ_conv, circ_conv_fft, deconv_map, haar_subspace, SubspaceBasis};
use bilinear_ident::lifting::{from_structured, random_dense_map, MeasurementMap, StructuredRows};
use bilinear_ident::models::{expected_dimension, injectivity_threshold, jacobian_rank_dimension_with, SparseRankOnePoint};
use bilinear_ident::numerics::{derive_seed, gaussian_matrix, gaussian_vector, rng_from_seed};
use bilinear_ident::recover::{
    blind_recover_with, empirical_strong_identifiability_with, recovery_succeeded, RecoverOptions,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Ensemble, ExperimentConfig, Mode};
use crate::error::HarnessError;

/// Aggregates for one measurement count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub m: usize,
    pub success_rate: f64,
    pub mean_constant: f64,
    pub min_constant: f64,
    pub counterexample_rate: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    /// The predicted transition in `m` for this mode and ensemble.
    pub threshold_marker: usize,
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy)]
struct Trial {
    success: bool,
    constant: f64,
    counterexample: bool,
}

/// Predicted transition: `s₁+s₂` for weak identifiability, the
/// injectivity threshold otherwise (dimension-based for `dim-check`, and
/// `0` where no transition in `m` exists).
pub fn threshold_marker(cfg: &ExperimentConfig) -> Result<usize, HarnessError> {
    Ok(match cfg.mode {
        Mode::Weak => cfg.s1 + cfg.s2,
        Mode::Certify | Mode::Phase | Mode::Recover => injectivity_threshold(cfg.n1, cfg.n2, cfg.s1, cfg.s2)?,
        Mode::DimCheck => expected_dimension(cfg.n1, cfg.n2, cfg.s1, cfg.s2)?,
        Mode::ConvSelftest => 0,
    })
}

/// Draws the trial's measurement map with `m` measurements. Gaussian bases
/// must have numeric rank `n1` (resp. `n2`) at `rank_tol`.
pub fn draw_map(
    ensemble: Ensemble,
    n1: usize,
    n2: usize,
    m: usize,
    seed: u64,
    rank_tol: f64,
) -> Result<MeasurementMap, HarnessError> {
    Ok(match ensemble {
        Ensemble::DenseGaussian => random_dense_map(n1, n2, m, seed)?,
        Ensemble::StructuredRows => from_structured(&StructuredRows::random(n1, n2, m, seed)),
        Ensemble::DeconvBases => {
            let e = SubspaceBasis::new(gaussian_matrix(m, n1, derive_seed(seed, &[0])), rank_tol)?;
            let d = SubspaceBasis::new(gaussian_matrix(m, n2, derive_seed(seed, &[1])), rank_tol)?;
            deconv_map(&e, &d)?
        }
        Ensemble::DeconvSubspaces => {
            let e = haar_subspace(m, n1, derive_seed(seed, &[0]))?;
            let d = haar_subspace(m, n2, derive_seed(seed, &[1]))?;
            deconv_map(&e, &d)?
        }
    })
}

fn search_options(cfg: &ExperimentConfig, seed: u64) -> SearchOptions {
    SearchOptions {
        restarts: cfg.budget.restarts,
        max_iters: cfg.budget.max_iters,
        seed,
        quad_limit: cfg.budget.quad_limit,
        tolerances: cfg.tolerances,
        warm_start: None,
    }
}

fn run_trial(cfg: &ExperimentConfig, m: usize, seed: u64) -> Result<Trial, HarnessError> {
    let (n1, n2, s1, s2) = (cfg.n1, cfg.n2, cfg.s1, cfg.s2);
    let tol = &cfg.tolerances;
    let trial = match cfg.mode {
        Mode::ConvSelftest => {
            let mut rng = rng_from_seed(seed);
            let v = gaussian_vector(&mut rng, m);
            let w = gaussian_vector(&mut rng, m);
            let direct = circ_conv(&v, &w)?;
            let fast = circ_conv_fft(&v, &w)?;
            let err: f64 = direct.iter().zip(fast.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            let rel = err / direct.norm().max(f64::MIN_POSITIVE);
            Trial { success: rel <= 1e-10, constant: rel, counterexample: false }
        }
        Mode::DimCheck => {
            let measured = jacobian_rank_dimension_with(n1, n2, s1, s2, cfg.budget.samples, seed, tol.jacobian_rank_tol)?;
            let ok = measured == expected_dimension(n1, n2, s1, s2)?;
            Trial { success: ok, constant: measured as f64, counterexample: !ok }
        }
        Mode::Certify => {
            let map = draw_map(cfg.ensemble, n1, n2, m, derive_seed(seed, &[0]), tol.rank_tol)?;
            let res = estimate_stability_constant(&map, s1, s2, &search_options(cfg, derive_seed(seed, &[1])))?;
            Trial {
                success: res.verdict == Verdict::LikelyInjective,
                constant: res.estimated_constant,
                counterexample: res.verdict == Verdict::CounterexampleFound,
            }
        }
        Mode::Weak => {
            let map = draw_map(cfg.ensemble, n1, n2, m, derive_seed(seed, &[0]), tol.rank_tol)?;
            let mut rng = rng_from_seed(derive_seed(seed, &[2]));
            let (u0, v0) = SparseRankOnePoint::random(&mut rng, n1, n2, s1, s2).factors();
            let res = weak_identifiability_test(&map, &u0, &v0, s1, s2, &search_options(cfg, derive_seed(seed, &[1])))?;
            Trial {
                success: res.verdict == Verdict::LikelyInjective,
                constant: res.estimated_constant,
                counterexample: res.verdict == Verdict::CounterexampleFound,
            }
        }
        Mode::Phase => {
            let map = draw_map(cfg.ensemble, n1, n2, m, derive_seed(seed, &[0]), tol.rank_tol)?;
            let mut rng = rng_from_seed(derive_seed(seed, &[2]));
            let truth = SparseRankOnePoint::random(&mut rng, n1, n2, s1, s2);
            let z = map.apply_linear(&truth.embed())?;
            if z.norm() == 0.0 {
                return Ok(Trial { success: false, constant: 2.0, counterexample: true });
            }
            let opts = RecoverOptions { seed: derive_seed(seed, &[1]), tolerances: *tol, ..Default::default() };
            let res = blind_recover_with(&map, &z, s1, s2, &opts)?;
            let (u, v) = res.best.factors();
            let (u0, v0) = truth.factors();
            Trial {
                success: recovery_succeeded(&res, &truth, tol)?,
                constant: orbit_distance(&u, &v, &u0, &v0)?,
                counterexample: res.ambiguity_gap <= tol.ambiguity_gap_tol,
            }
        }
        Mode::Recover => {
            let map = draw_map(cfg.ensemble, n1, n2, m, derive_seed(seed, &[0]), tol.rank_tol)?;
            let rate = empirical_strong_identifiability_with(&map, s1, s2, cfg.budget.signals, derive_seed(seed, &[1]), tol)?;
            Trial { success: rate == 1.0, constant: rate, counterexample: rate < 1.0 }
        }
    };
    Ok(trial)
}

fn aggregate(m: usize, trials: &[Trial], seconds: f64) -> Row {
    let n = trials.len() as f64;
    let rate = |f: fn(&Trial) -> bool| trials.iter().filter(|t| f(t)).count() as f64 / n;
    // Sequential sums in trial order keep the floating-point result fixed.
    let sum: f64 = trials.iter().map(|t| t.constant).sum();
    let min = trials.iter().map(|t| t.constant).fold(f64::INFINITY, f64::min);
    Row {
        m,
        success_rate: rate(|t| t.success),
        mean_constant: sum / n,
        min_constant: min,
        counterexample_rate: rate(|t| t.counterexample),
        seconds,
    }
}

/// Runs the sweep on the current rayon pool. A pure function of `cfg`
/// unless `record_timing` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRecord, HarnessError> {
    let errors = cfg.validate();
    if !errors.is_empty() {
        return Err(HarnessError::Validation(errors));
    }
    let threshold_marker = threshold_marker(cfg)?;
    let mut rows = Vec::with_capacity(cfg.m_range.len());
    for m in cfg.m_range.iter() {
        let start = Instant::now();
        let trials = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(cfg, m, derive_seed(cfg.seed, &[m as u64, t])))
            .collect::<Result<Vec<_>, _>>()?;
        let seconds = if cfg.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
        rows.push(aggregate(m, &trials, seconds));
    }
    Ok(ExperimentRecord { config: cfg.clone(), rows, threshold_marker })
}

/// [`run_experiment`] on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentRecord, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    pool.install(|| run_experiment(cfg))
}

/// Acceptance bands of a finished sweep. Returns the violated ones.
///
/// Rates may dip by at most 0.1 between adjacent `m`. For the modes with a
/// predicted transition, the smallest `m` reaching a success rate of 0.95
/// must equal the marker when the marker lies inside the range. Self-tests
/// must succeed on every trial.
pub fn check_bands(rec: &ExperimentRecord) -> Vec<String> {
    let mut failures = Vec::new();
    let cfg = &rec.config;
    match cfg.mode {
        Mode::ConvSelftest | Mode::DimCheck => {
            for row in rec.rows.iter().filter(|r| r.success_rate < 1.0) {
                failures.push(format!("m={}: success rate {} < 1", row.m, row.success_rate));
            }
        }
        Mode::Certify | Mode::Weak | Mode::Phase | Mode::Recover => {
            for pair in rec.rows.windows(2) {
                if pair[1].success_rate < pair[0].success_rate - 0.1 {
                    failures.push(format!(
                        "success rate drops from {} at m={} to {} at m={}",
                        pair[0].success_rate, pair[0].m, pair[1].success_rate, pair[1].m
                    ));
                }
            }
            let marker = rec.threshold_marker;
            if cfg.m_range.start < marker && marker <= cfg.m_range.end {
                let first = rec.rows.iter().find(|r| r.success_rate >= 0.95).map(|r| r.m);
                if matches!(cfg.mode, Mode::Certify | Mode::Weak) && first != Some(marker) {
                    failures.push(format!("smallest m with success rate >= 0.95 is {first:?}, expected {marker}"));
                }
            }
            if matches!(cfg.mode, Mode::Phase | Mode::Recover) {
                for row in rec.rows.iter().filter(|r| r.m >= marker && r.success_rate < 0.95) {
                    failures.push(format!("m={} >= {marker}: success rate {} < 0.95", row.m, row.success_rate));
                }
            }
        }
    }
    failures
}
