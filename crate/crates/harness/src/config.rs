//! Experiment configuration: the JSON schema accepted by `--config` and its
//! validation.

use std::fmt;

use bilinear_ident::models::EXHAUSTIVE_QUADRUPLE_LIMIT;
use bilinear_ident::Tolerances;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    DimCheck,
    Certify,
    Phase,
    Recover,
    Weak,
    ConvSelftest,
}

impl Mode {
    pub const ALL: [Mode; 6] = [Mode::DimCheck, Mode::Certify, Mode::Phase, Mode::Recover, Mode::Weak, Mode::ConvSelftest];

    pub fn name(self) -> &'static str {
        match self {
            Mode::DimCheck => "dim-check",
            Mode::Certify => "certify",
            Mode::Phase => "phase",
            Mode::Recover => "recover",
            Mode::Weak => "weak",
            Mode::ConvSelftest => "conv-selftest",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the measurement map for one trial is drawn. For the deconvolution
/// ensembles `m` is the ambient dimension and `n1, n2` are the subspace
/// dimensions `k, l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// i.i.d. Gaussian `Y_i`.
    DenseGaussian,
    /// Rank-one `Y_i = z_i y_iᵗ` with Gaussian rows `y_i`, `z_i`.
    StructuredRows,
    /// Circular deconvolution with Gaussian bases of `ℂ^m`.
    DeconvBases,
    /// Circular deconvolution with Haar-random subspaces of `ℂ^m`.
    DeconvSubspaces,
}

impl Ensemble {
    pub fn is_deconv(self) -> bool {
        matches!(self, Ensemble::DeconvBases | Ensemble::DeconvSubspaces)
    }
}

/// Inclusive range of measurement counts, written `[start, end]` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct MRange {
    pub start: usize,
    pub end: usize,
}

impl MRange {
    pub fn new(start: usize, end: usize) -> Self {
        MRange { start, end }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.start..=self.end
    }

    pub fn len(&self) -> usize {
        (self.end + 1).saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

impl From<[usize; 2]> for MRange {
    fn from([start, end]: [usize; 2]) -> Self {
        MRange { start, end }
    }
}

impl From<MRange> for [usize; 2] {
    fn from(r: MRange) -> Self {
        [r.start, r.end]
    }
}

/// Search and sampling budgets of the individual modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    /// Random starts per support quadruple (`certify`) or pair (`weak`).
    pub restarts: usize,
    /// Alternating sweeps per start.
    pub max_iters: usize,
    /// Support quadruples examined before sampling takes over.
    pub quad_limit: usize,
    /// Signals per map in `recover` mode.
    pub signals: usize,
    /// Jacobian samples per quadruple in `dim-check` mode.
    pub samples: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { restarts: 2, max_iters: 200, quad_limit: EXHAUSTIVE_QUADRUPLE_LIMIT, signals: 10, samples: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default = "default_ensemble")]
    pub ensemble: Ensemble,
    pub n1: usize,
    pub n2: usize,
    pub s1: usize,
    pub s2: usize,
    pub m_range: MRange,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub budget: Budget,
    /// Fill the `seconds` column with wall-clock times. Off by default so
    /// that repeated runs are byte-identical.
    #[serde(default)]
    pub record_timing: bool,
}

fn default_ensemble() -> Ensemble {
    Ensemble::DenseGaussian
}

/// One offending field of an [`ExperimentConfig`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ExperimentConfig {
    /// A configuration for `mode` on `M(4,4)` with `(2,2)`-sparsity around the
    /// relevant threshold.
    pub fn preset(mode: Mode) -> Self {
        let base = ExperimentConfig {
            mode,
            ensemble: Ensemble::DenseGaussian,
            n1: 4,
            n2: 4,
            s1: 2,
            s2: 2,
            m_range: MRange::new(4, 8),
            trials: 20,
            seed: 1,
            tolerances: Tolerances::default(),
            budget: Budget::default(),
            record_timing: false,
        };
        match mode {
            Mode::DimCheck => ExperimentConfig { m_range: MRange::new(1, 1), trials: 3, ..base },
            Mode::Certify => base,
            Mode::Phase => ExperimentConfig { ensemble: Ensemble::DeconvBases, m_range: MRange::new(4, 16), ..base },
            Mode::Recover => ExperimentConfig {
                ensemble: Ensemble::DeconvSubspaces,
                s1: 4,
                s2: 4,
                m_range: MRange::new(10, 13),
                trials: 10,
                ..base
            },
            Mode::Weak => ExperimentConfig {
                ensemble: Ensemble::DeconvBases,
                n1: 3,
                n2: 3,
                m_range: MRange::new(3, 6),
                ..base
            },
            Mode::ConvSelftest => ExperimentConfig { m_range: MRange::new(1, 32), trials: 100, ..base },
        }
    }

    /// All violated constraints, in field order.
    pub fn validate(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        let mut err = |field, message: String| errs.push(FieldError { field, message });
        if self.m_range.is_empty() {
            err("m_range", format!("empty range [{}, {}]", self.m_range.start, self.m_range.end));
        }
        if self.m_range.start == 0 {
            err("m_range", "measurement counts start at 1".into());
        }
        if self.trials == 0 {
            err("trials", "must be at least 1".into());
        }
        if self.mode != Mode::ConvSelftest {
            let min_n = if self.mode == Mode::DimCheck { 2 } else { 1 };
            if self.n1 < min_n {
                err("n1", format!("must be at least {min_n}"));
            }
            if self.n2 < min_n {
                err("n2", format!("must be at least {min_n}"));
            }
            if !(1..=self.n1).contains(&self.s1) {
                err("s1", format!("must lie in 1..={}", self.n1));
            }
            if !(1..=self.n2).contains(&self.s2) {
                err("s2", format!("must lie in 1..={}", self.n2));
            }
            if self.ensemble.is_deconv() && self.mode != Mode::DimCheck && self.m_range.start < self.n1.max(self.n2) {
                err("m_range", format!("deconvolution needs ambient m >= max(n1, n2) = {}", self.n1.max(self.n2)));
            }
        }
        let b = &self.budget;
        if matches!(self.mode, Mode::Certify | Mode::Weak) {
            if b.restarts == 0 {
                err("budget.restarts", "must be at least 1".into());
            }
            if b.max_iters == 0 {
                err("budget.max_iters", "must be at least 1".into());
            }
        }
        if self.mode == Mode::Certify && b.quad_limit == 0 {
            err("budget.quad_limit", "must be at least 1".into());
        }
        if self.mode == Mode::Recover && b.signals == 0 {
            err("budget.signals", "must be at least 1".into());
        }
        if self.mode == Mode::DimCheck && b.samples == 0 {
            err("budget.samples", "must be at least 1".into());
        }
        let t = &self.tolerances;
        if !(t.fail_tol > 0.0 && t.fail_tol <= t.pass_tol) {
            err("tolerances", format!("need 0 < fail_tol <= pass_tol, got {} and {}", t.fail_tol, t.pass_tol));
        }
        if t.rank_tol.is_nan() || t.rank_tol < 0.0 {
            err("tolerances.rank_tol", "must be nonnegative".into());
        }
        errs
    }
}
