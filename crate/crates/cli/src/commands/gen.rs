use std::path::PathBuf;

use hankelx_core::io::{write_signal, write_text};
use hankelx_core::hankel::WeightedSignal;
use hankelx_core::io::pattern_to_csv;
use hankelx_core::synth::condition_number;
use serde::{Deserialize, Serialize};

use super::doa::{doa_instance, DoaSetup};
use super::{check_rank, count_from_rate, spectral_instance, Domain, Instance, SampleMode, SpectralSetup};
use crate::config::one_or_many;
use crate::output::{ensure_dir, write_json};
use crate::{CliError, CliResult};

pub const TRUTH_FILE: &str = "truth.hnkz";
pub const OBSERVED_FILE: &str = "observed.hnkz";
pub const PATTERN_FILE: &str = "pattern.csv";
pub const OUTLIERS_FILE: &str = "outliers.hnkz";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Spectral,
    Doa,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub kind: Kind,
    /// Defaults to 255 for spectral signals and 4096 for arrays.
    pub n: Option<usize>,
    /// Defaults to 5 for spectral signals and the source count for arrays.
    pub r: Option<usize>,
    pub kappa: f64,
    /// Source angles in degrees.
    #[serde(deserialize_with = "one_or_many")]
    pub thetas: Vec<f64>,
    /// Observation count; at most one of `m` and `p`. Defaults to `n`.
    pub m: Option<usize>,
    pub p: Option<f64>,
    pub alpha: f64,
    /// Defaults to 10 for spectral signals and 1 for arrays.
    pub outlier_scale: Option<f64>,
    /// Defaults to `weighted` for spectral signals and `raw` for arrays.
    pub outlier_domain: Option<Domain>,
    pub mode: SampleMode,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            kind: Kind::Spectral,
            n: None,
            r: None,
            kappa: 10.0,
            thetas: vec![87.0, 87.1, 87.3],
            m: None,
            p: None,
            alpha: 0.0,
            outlier_scale: None,
            outlier_domain: None,
            mode: SampleMode::WithoutReplacement,
            seed: 0,
            threads: None,
            out: crate::default_out(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenMeta {
    pub kind: Kind,
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
    pub kappa: Option<f64>,
    pub thetas: Option<Vec<f64>>,
    pub m: usize,
    pub mode: SampleMode,
    pub alpha: f64,
    pub outliers: usize,
    pub outlier_scale: f64,
    pub outlier_domain: Domain,
    pub seed: u64,
    /// Measured `sigma_1 / sigma_r` of the ground truth.
    pub condition_number: f64,
}

#[derive(Debug, Clone)]
pub struct GenOutput {
    pub meta: GenMeta,
    pub instance: Instance,
    pub dir: PathBuf,
}

impl GenOutput {
    pub fn describe(&self) -> String {
        format!(
            "gen {}: n = {}, r = {}, m = {}, outliers = {}, condition number {:.4}, written to {}",
            match self.meta.kind {
                Kind::Spectral => "spectral",
                Kind::Doa => "doa",
            },
            self.meta.n,
            self.meta.r,
            self.meta.m,
            self.meta.outliers,
            self.meta.condition_number,
            self.dir.display()
        )
    }
}

/// Generates an instance and writes it to `cfg.out`.
pub fn run(cfg: &GenConfig) -> CliResult<GenOutput> {
    let (instance, meta) = build(cfg)?;
    ensure_dir(&cfg.out)?;
    let io = |e: hankelx_core::Error| CliError::Output(e.to_string());
    write_signal(&cfg.out.join(TRUTH_FILE), &instance.truth).map_err(io)?;
    let observed = WeightedSignal::new(instance.truth.shape, instance.corrupted.f.clone()).map_err(io)?;
    write_signal(&cfg.out.join(OBSERVED_FILE), &observed).map_err(io)?;
    let outliers = WeightedSignal::new(instance.truth.shape, instance.corrupted.s_star.s.clone()).map_err(io)?;
    write_signal(&cfg.out.join(OUTLIERS_FILE), &outliers).map_err(io)?;
    write_text(&cfg.out.join(PATTERN_FILE), &pattern_to_csv(&instance.pattern)).map_err(io)?;
    write_json(&cfg.out.join(META_FILE), &meta)?;
    Ok(GenOutput { meta, instance, dir: cfg.out.clone() })
}

/// Validates the configuration and builds the instance in memory.
pub fn build(cfg: &GenConfig) -> CliResult<(Instance, GenMeta)> {
    let bad = |e: hankelx_core::Error| CliError::Config(e.to_string());
    let spectral = cfg.kind == Kind::Spectral;
    let n = cfg.n.unwrap_or(if spectral { 255 } else { 4096 });
    let r = cfg.r.unwrap_or(if spectral { 5 } else { cfg.thetas.len() });
    check_rank(r, n)?;
    let m = match (cfg.m, cfg.p) {
        (Some(_), Some(_)) => return Err(CliError::Config("set at most one of m and p".into())),
        (Some(m), None) => m,
        (None, Some(p)) => count_from_rate(p, n)?,
        (None, None) => n,
    };
    if m == 0 {
        return Err(CliError::Config("m must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(CliError::Config(format!("alpha = {} outside [0, 1]", cfg.alpha)));
    }
    let scale = cfg.outlier_scale.unwrap_or(if spectral { 10.0 } else { 1.0 });
    let domain = cfg.outlier_domain.unwrap_or(if spectral { Domain::Weighted } else { Domain::Raw });
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(CliError::Config(format!("outlier_scale = {scale} must be finite and nonnegative")));
    }

    let instance = if spectral {
        if !(cfg.kappa >= 1.0 && cfg.kappa.is_finite()) {
            return Err(CliError::Config(format!("kappa = {} must be at least 1", cfg.kappa)));
        }
        let setup = SpectralSetup {
            n,
            r,
            kappa: cfg.kappa,
            m,
            alpha: cfg.alpha,
            mode: cfg.mode.into(),
            outlier_scale: scale,
            domain: domain.into(),
        };
        spectral_instance(&setup, cfg.seed).map_err(bad)?
    } else {
        if r != cfg.thetas.len() {
            return Err(CliError::Config(format!(
                "r = {r} differs from the {} source angles",
                cfg.thetas.len()
            )));
        }
        let setup = DoaSetup {
            n,
            thetas: cfg.thetas.clone(),
            m,
            alpha: cfg.alpha,
            mode: cfg.mode.into(),
            outlier_scale: scale,
            domain: domain.into(),
        };
        doa_instance(&setup, cfg.seed).map_err(bad)?
    };
    let cond = condition_number(&instance.truth, r).map_err(bad)?;
    let shape = instance.truth.shape;
    let meta = GenMeta {
        kind: cfg.kind,
        n,
        n1: shape.n1(),
        n2: shape.n2(),
        r,
        kappa: spectral.then_some(cfg.kappa),
        thetas: (!spectral).then(|| cfg.thetas.clone()),
        m,
        mode: cfg.mode,
        alpha: cfg.alpha,
        outliers: instance.corrupted.s_star.support.len(),
        outlier_scale: scale,
        outlier_domain: domain,
        seed: cfg.seed,
        condition_number: cond.kappa,
    };
    Ok((instance, meta))
}
