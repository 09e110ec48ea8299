use std::fmt;
use std::path::{Path, PathBuf};

use gibc_core::SimConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TimeConvergence,
    FreqConvergence,
    CrossValidate,
    LayerDiagnostics,
    KernelChecks,
    Parseval,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::TimeConvergence => "time-convergence",
            ExperimentKind::FreqConvergence => "freq-convergence",
            ExperimentKind::CrossValidate => "cross-validate",
            ExperimentKind::LayerDiagnostics => "layer-diagnostics",
            ExperimentKind::KernelChecks => "kernel-checks",
            ExperimentKind::Parseval => "parseval",
        }
    }

    /// Kinds that fit rates over the ε ladder.
    fn fits_slopes(&self) -> bool {
        matches!(
            self,
            ExperimentKind::TimeConvergence
                | ExperimentKind::FreqConvergence
                | ExperimentKind::LayerDiagnostics
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Discretization knobs that only some pipelines read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Resolution {
    /// Relative trace change at which `Δk` halving stops.
    pub refine_tol: f64,
    pub max_halvings: u32,
    /// Spacings of the time-stepper self-convergence ladder (`Δt = h/2`).
    pub richardson_h: Vec<f64>,
    pub richardson_epsilon: f64,
    pub richardson_radius: f64,
    pub richardson_t_final: f64,
    /// Spacings of the finite-difference frequency ladder.
    pub fd_h: Vec<f64>,
    pub fd_k: f64,
    pub fd_epsilon: f64,
    /// Interior layer spacing in units of `ε̂`.
    pub interior_per_eps_hat: f64,
    pub exterior_h: f64,
    pub layer_samples: usize,
    /// Random signals in the boundary positivity check.
    pub signals: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            refine_tol: 5e-3,
            max_halvings: 6,
            richardson_h: vec![2e-3, 1e-3, 5e-4, 2.5e-4],
            richardson_epsilon: 0.2,
            richardson_radius: 1.35,
            richardson_t_final: 4.0,
            fd_h: vec![4e-3, 2e-3, 1e-3],
            fd_k: 2.0,
            fd_epsilon: 0.1,
            interior_per_eps_hat: 5e-4,
            exterior_h: 1e-3,
            layer_samples: 4000,
            signals: 1000,
        }
    }
}

/// Frequency-domain scan parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencyPlan {
    /// Wavenumbers at which the ε rate is fitted.
    pub wavenumbers: Vec<f64>,
    /// Error region `1 ≤ r ≤ shell_outer`.
    pub shell_outer: f64,
    pub low_frequency_epsilon: f64,
    pub k_scan: Vec<f64>,
    pub k_scan_epsilon: f64,
}

impl Default for FrequencyPlan {
    fn default() -> Self {
        Self {
            wavenumbers: vec![1.0, 8.0],
            shell_outer: 2.0,
            low_frequency_epsilon: 0.1,
            k_scan: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            k_scan_epsilon: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Absorption ladder, strictly decreasing.
    pub epsilons: Vec<f64>,
    #[serde(default = "default_ells")]
    pub ells: Vec<u32>,
    #[serde(default)]
    pub seed: u64,
    /// Write wall-clock times into the CSV `runtime_s` column. Off by
    /// default so that reruns produce identical tables.
    #[serde(default)]
    pub record_runtime: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default)]
    pub frequency: FrequencyPlan,
}

fn default_ells() -> Vec<u32> {
    vec![0, 1]
}

pub const DEFAULT_EPSILONS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

impl ExperimentConfig {
    /// Defaults for `kind` on the standard ε ladder.
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            ells: default_ells(),
            seed: 0,
            record_runtime: false,
            output: None,
            sim: SimConfig::default(),
            resolution: Resolution::default(),
            frequency: FrequencyPlan::default(),
        }
    }

    pub fn validate(&self) -> LabResult<()> {
        let bad = |msg: String| Err(LabError::Validation(msg));
        if self.epsilons.is_empty() {
            return bad("epsilons must not be empty".into());
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return bad(format!("epsilons must be finite and positive, got {e}"));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return bad(format!(
                "epsilons must be strictly decreasing, got {:?}",
                self.epsilons
            ));
        }
        if self.kind.fits_slopes() && self.epsilons.len() < 3 {
            return bad(format!(
                "{} fits slopes and needs at least 3 epsilons",
                self.kind
            ));
        }
        if self.ells.is_empty() || self.ells.iter().any(|&l| l > 1) {
            return bad(format!(
                "ells must be a non-empty subset of {{0, 1}}, got {:?}",
                self.ells
            ));
        }
        if self.ells.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!(
                "ells must be strictly increasing, got {:?}",
                self.ells
            ));
        }
        // TOML integers are signed, so larger seeds could not be written back
        if i64::try_from(self.seed).is_err() {
            return bad(format!(
                "seed must be at most {}, got {}",
                i64::MAX,
                self.seed
            ));
        }
        self.sim
            .validate()
            .map_err(|e| LabError::Validation(format!("sim: {e}")))?;
        self.validate_resolution()?;
        self.validate_frequency()
    }

    fn validate_resolution(&self) -> LabResult<()> {
        let r = &self.resolution;
        let positive = [
            ("refine_tol", r.refine_tol),
            ("richardson_epsilon", r.richardson_epsilon),
            ("richardson_t_final", r.richardson_t_final),
            ("fd_k", r.fd_k),
            ("fd_epsilon", r.fd_epsilon),
            ("interior_per_eps_hat", r.interior_per_eps_hat),
            ("exterior_h", r.exterior_h),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(LabError::Validation(format!(
                "resolution.{name} must be positive, got {v}"
            )));
        }
        // the stepper ladder fits differences of neighbours, so it needs one level more
        for (name, ladder, levels) in [("richardson_h", &r.richardson_h, 4), ("fd_h", &r.fd_h, 3)] {
            // consecutive spacings must halve so the fine grids contain the coarse nodes
            let halving = ladder
                .windows(2)
                .all(|w| (w[0] - 2.0 * w[1]).abs() <= 1e-12 * w[0]);
            if ladder.len() < levels || !halving || ladder.iter().any(|h| !(*h > 0.0)) {
                return Err(LabError::Validation(format!(
                    "resolution.{name} must hold at least {levels} positive spacings, each half the previous, got {ladder:?}"
                )));
            }
        }
        let outer = self.sim.geometry.outer_radius;
        if !(r.richardson_radius > 1.0 && r.richardson_radius < outer) {
            return Err(LabError::Validation(format!(
                "resolution.richardson_radius must lie in (1, {outer}), got {}",
                r.richardson_radius
            )));
        }
        if r.layer_samples < 2 || r.signals == 0 {
            return Err(LabError::Validation(
                "resolution.layer_samples >= 2 and signals >= 1 required".into(),
            ));
        }
        if r.max_halvings == 0 {
            return Err(LabError::Validation(
                "resolution.max_halvings must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn validate_frequency(&self) -> LabResult<()> {
        let f = &self.frequency;
        let all_positive = |v: &[f64]| !v.is_empty() && v.iter().all(|x| x.is_finite() && *x > 0.0);
        if !all_positive(&f.wavenumbers) {
            return Err(LabError::Validation(format!(
                "frequency.wavenumbers must be non-empty and positive, got {:?}",
                f.wavenumbers
            )));
        }
        if !all_positive(&f.k_scan)
            || f.k_scan.len() < 3
            || f.k_scan.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(LabError::Validation(format!(
                "frequency.k_scan needs at least 3 increasing positive wavenumbers, got {:?}",
                f.k_scan
            )));
        }
        if !(f.shell_outer > 1.0 && f.shell_outer <= self.sim.geometry.outer_radius) {
            return Err(LabError::Validation(format!(
                "frequency.shell_outer must lie in (1, R], got {}",
                f.shell_outer
            )));
        }
        if !all_positive(&[f.low_frequency_epsilon, f.k_scan_epsilon]) {
            return Err(LabError::Validation(
                "frequency epsilons must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> LabResult<String> {
        toml::to_string(self).map_err(|e| LabError::Serialize(e.to_string()))
    }

    /// SHA-256 of the canonical serialization, ignoring where outputs go.
    pub fn hash(&self) -> LabResult<String> {
        let mut canonical = self.clone();
        canonical.output = None;
        let text = canonical.to_toml()?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }

    /// Output directory: the override if given, else the configured one.
    /// Created if missing and probed for writability.
    pub fn prepare_output(&self, override_dir: Option<&Path>) -> LabResult<PathBuf> {
        let dir = override_dir
            .map(Path::to_path_buf)
            .or_else(|| self.output.clone())
            .ok_or_else(|| LabError::Validation("no output directory given".into()))?;
        std::fs::create_dir_all(&dir).map_err(|e| {
            LabError::Validation(format!("output directory {} unusable: {e}", dir.display()))
        })?;
        let probe = dir.join(".write-probe");
        std::fs::write(&probe, b"")
            .and_then(|_| std::fs::remove_file(&probe))
            .map_err(|e| {
                LabError::Validation(format!(
                    "output directory {} not writable: {e}",
                    dir.display()
                ))
            })?;
        Ok(dir)
    }
}

/// Parses and validates a TOML experiment document. Unknown keys are errors.
pub fn parse_config(text: &str) -> LabResult<ExperimentConfig> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| LabError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}
