use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{GmmParams, OneDimKind, Weighting};
use crate::samplers::SamplerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GaussSweep,
    Gmm,
    Onedim,
    DeconvGauss,
    DeconvPoisson,
    TheoryTable,
}

/// Top-level run configuration, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    /// Master seed; every chain seed is derived from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Defaults for the `sample` command and the base for the others.
    pub sampler: SamplerConfig,
    pub theory: TheoryConfig,
    pub gmm: GmmConfig,
    pub onedim: OneDimConfig,
    pub deconv: DeconvConfig,
    pub sample: SampleConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            seed: 0,
            output_dir: PathBuf::from("out"),
            sampler: SamplerConfig::default(),
            theory: TheoryConfig::default(),
            gmm: GmmConfig::default(),
            onedim: OneDimConfig::default(),
            deconv: DeconvConfig::default(),
            sample: SampleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    pub kappas: Vec<f64>,
    pub eps: Vec<f64>,
    pub dim: usize,
    pub thetas: Vec<f64>,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            kappas: (0..=24).map(|k| 10f64.powf(k as f64 / 4.0)).collect(),
            eps: vec![0.1, 0.01, 0.001],
            dim: 100,
            thetas: vec![0.0, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmConfig {
    pub params: GmmParams,
    pub weighting: Weighting,
    /// Observed image `y` as PGM, scaled to `[0, 1]`.
    pub image: Option<PathBuf>,
    /// Synthetic observations `y` evenly spaced on `[0, 1]` when no image is given.
    pub pixels: usize,
    pub n_samples: usize,
    pub repetitions: usize,
    pub burn_in_fraction: f64,
    pub schemes: Vec<String>,
    /// Step overrides; the defaults are `δ*` (IMLA, ILA) and `1/L` (ULA).
    pub delta_imla: Option<f64>,
    pub delta_ila: Option<f64>,
    pub delta_ula: Option<f64>,
    pub trace_points: usize,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            params: GmmParams::default(),
            weighting: Weighting::default(),
            image: None,
            pixels: 16,
            n_samples: 100_000,
            repetitions: 10,
            burn_in_fraction: 0.05,
            schemes: ["exact", "imla", "ila", "ula"].map(String::from).to_vec(),
            delta_imla: None,
            delta_ila: None,
            delta_ula: None,
            trace_points: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OneDimConfig {
    pub kind: String,
    /// Defaults to 0.05, or 1e-4 for the uniform target.
    pub delta: Option<f64>,
    pub n_iters: usize,
    pub burn_in_fraction: f64,
    pub schemes: Vec<String>,
    pub bins: Option<usize>,
    pub trace_points: usize,
}

impl Default for OneDimConfig {
    fn default() -> Self {
        OneDimConfig {
            kind: "laplace".into(),
            delta: None,
            n_iters: 1_000_000,
            burn_in_fraction: 0.05,
            schemes: ["myula", "imla", "ila"].map(String::from).to_vec(),
            bins: None,
            trace_points: 2000,
        }
    }
}

impl OneDimConfig {
    pub fn target(&self) -> Result<OneDimKind> {
        OneDimKind::parse(&self.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    Poisson,
}

/// Starting point of the deconvolution chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeconvInit {
    /// The observation, shifted by the background and clamped at zero.
    Observation,
    /// A MAP estimate of the smoothed posterior by accelerated gradient descent.
    Map,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeconvConfig {
    /// Ground-truth PGM; a synthetic phantom of `size × size` otherwise.
    pub image: Option<PathBuf>,
    pub size: usize,
    pub kernel_size: usize,
    pub noise: NoiseKind,
    /// Gaussian noise standard deviation, on the `[0, 1]` intensity scale.
    pub sigma: f64,
    /// Poisson: the image is scaled to this mean intensity value.
    pub miv: f64,
    /// Poisson background, as a fraction of the MIV.
    pub beta_fraction: f64,
    /// `None` sets `d / TV(x)` of the ground truth.
    pub tv_weight: Option<f64>,
    /// `None` sets `1/L_fy`.
    pub my_lambda: Option<f64>,
    pub schemes: Vec<String>,
    /// Take `|·|` after every step, keeping the chains nonnegative.
    pub reflected: bool,
    pub init: DeconvInit,
    /// Accelerated gradient iterations for `init = "map"`.
    pub map_iters: usize,
    /// Total iterations, burn-in included.
    pub n_iters_myula: usize,
    pub n_iters_imla: usize,
    /// `None` sets `1/(L_fy + 1/λ)`.
    pub delta_myula: Option<f64>,
    /// `None` sets `imla_step_factor` times the MYULA step.
    pub delta_imla: Option<f64>,
    pub imla_step_factor: f64,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    /// `None` uses 1e-7 for Gaussian noise and 1e-8 for Poisson noise.
    pub tv_gap_tol: Option<f64>,
    pub tv_max_iters: usize,
    pub burn_in_fraction: f64,
    /// Number of points in the PSNR and log-π series.
    pub trace_points: usize,
    pub acf_lags: usize,
    pub log_sd: bool,
}

impl Default for DeconvConfig {
    fn default() -> Self {
        DeconvConfig {
            image: None,
            size: 64,
            kernel_size: 5,
            noise: NoiseKind::Poisson,
            sigma: 0.02,
            miv: 10.0,
            beta_fraction: 0.01,
            tv_weight: None,
            my_lambda: None,
            schemes: ["myula", "imla"].map(String::from).to_vec(),
            reflected: true,
            init: DeconvInit::Map,
            map_iters: 500,
            n_iters_myula: 5_000,
            n_iters_imla: 500,
            delta_myula: None,
            delta_imla: None,
            imla_step_factor: 10.0,
            inner_tol: 0.1,
            inner_max_iters: 200,
            tv_gap_tol: None,
            tv_max_iters: 2000,
            burn_in_fraction: 0.1,
            trace_points: 2000,
            acf_lags: 100,
            log_sd: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleTarget {
    Gaussian,
    Laplace,
    Uniform,
    Quartic,
    Cauchy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub target: SampleTarget,
    /// Standard deviations of the diagonal Gaussian target.
    pub sigmas: Vec<f64>,
    /// Starting point; zero by default.
    pub x0: Option<Vec<f64>>,
    /// With `replicas > 0` the run is a moment sweep: independent chains
    /// compared with the exact Gaussian moments at `checkpoints`.
    pub replicas: usize,
    pub checkpoints: Vec<usize>,
    pub thetas: Vec<f64>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            target: SampleTarget::Gaussian,
            sigmas: vec![1.0, 0.1],
            x0: None,
            replicas: 0,
            checkpoints: vec![10, 100, 1000],
            thetas: vec![0.0, 0.5, 1.0],
        }
    }
}

fn check_file(path: &Option<PathBuf>) -> Result<()> {
    match path {
        Some(p) if !p.is_file() => Err(Error::Config(format!("file {} does not exist", p.display()))),
        _ => Ok(()),
    }
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if !(0.0..1.0).contains(&v) {
        return Err(Error::Config(format!("{name} must lie in [0, 1), got {v}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Config(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn check_schemes(names: &[String], allowed: &[&str]) -> Result<()> {
    for s in names {
        if !allowed.contains(&s.as_str()) {
            return Err(Error::Config(format!("unknown scheme {s:?}, expected one of {allowed:?}")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_table(toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut table: toml::Table = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        apply_overrides(&mut table, overrides)?;
        Self::from_table(table)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::InvalidParameter(m) => Error::Config(m),
            other => other,
        };
        self.sampler.validate().map_err(as_config)?;
        let t = &self.theory;
        for &k in &t.kappas {
            if !(k >= 1.0) {
                return Err(Error::Config(format!("condition numbers must be >= 1, got {k}")));
            }
        }
        for &e in &t.eps {
            check_positive("theory.eps", e)?;
        }
        if t.dim == 0 {
            return Err(Error::Config("theory.dim must be positive".into()));
        }
        for &th in t.thetas.iter().chain(&self.sample.thetas) {
            if !(0.0..=1.0).contains(&th) {
                return Err(Error::Config(format!("theta must lie in [0, 1], got {th}")));
            }
        }

        let g = &self.gmm;
        g.params.validate().map_err(as_config)?;
        check_file(&g.image)?;
        check_fraction("gmm.burn_in_fraction", g.burn_in_fraction)?;
        check_schemes(&g.schemes, &["exact", "imla", "ila", "ula"])?;
        if g.repetitions == 0 || (g.image.is_none() && g.pixels == 0) {
            return Err(Error::Config("gmm needs at least one pixel and one repetition".into()));
        }
        for d in [g.delta_imla, g.delta_ila, g.delta_ula].into_iter().flatten() {
            check_positive("gmm step", d)?;
        }

        let o = &self.onedim;
        o.target().map_err(as_config)?;
        check_fraction("onedim.burn_in_fraction", o.burn_in_fraction)?;
        check_schemes(&o.schemes, &["myula", "imla", "ila"])?;
        if let Some(d) = o.delta {
            check_positive("onedim.delta", d)?;
        }

        let d = &self.deconv;
        check_file(&d.image)?;
        if d.size == 0 || d.kernel_size.is_multiple_of(2) {
            return Err(Error::Config("deconv.size must be positive and kernel_size odd".into()));
        }
        check_positive("deconv.sigma", d.sigma)?;
        check_positive("deconv.miv", d.miv)?;
        check_positive("deconv.beta_fraction", d.beta_fraction)?;
        check_positive("deconv.imla_step_factor", d.imla_step_factor)?;
        check_positive("deconv.inner_tol", d.inner_tol)?;
        check_fraction("deconv.burn_in_fraction", d.burn_in_fraction)?;
        check_schemes(&d.schemes, &["myula", "imla"])?;
        for v in [d.tv_weight, d.my_lambda, d.delta_myula, d.delta_imla, d.tv_gap_tol].into_iter().flatten() {
            check_positive("deconv parameter", v)?;
        }
        if d.trace_points == 0 {
            return Err(Error::Config("deconv.trace_points must be positive".into()));
        }

        let s = &self.sample;
        if s.target == SampleTarget::Gaussian {
            if s.sigmas.is_empty() {
                return Err(Error::Config("sample.sigmas must be nonempty".into()));
            }
            for &v in &s.sigmas {
                check_positive("sample.sigmas", v)?;
            }
        }
        if let Some(x0) = &s.x0 {
            let dim = if s.target == SampleTarget::Gaussian { s.sigmas.len() } else { 1 };
            if x0.len() != dim {
                return Err(Error::Config(format!("sample.x0 has length {}, expected {dim}", x0.len())));
            }
        }
        Ok(())
    }
}

/// Applies `key = value` overrides; `key` is a dotted path such as
/// `sampler.delta`. Values are parsed as TOML, falling back to strings.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[(String, String)]) -> Result<()> {
    for (key, raw) in overrides {
        let value = parse_value(raw);
        let parts: Vec<&str> = key.split('.').collect();
        let (last, path) = parts.split_last().ok_or_else(|| Error::Config("empty override key".into()))?;
        let mut node = &mut *table;
        for p in path {
            let entry = node
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            node = entry
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("override {key}: {p} is not a section")))?;
        }
        node.insert(last.to_string(), value);
    }
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    toml::from_str::<toml::Table>(&wrapped)
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_defaults() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
        assert!(cfg.validate().is_ok());
        let partial = ExperimentConfig::from_toml_str("seed = 7\n[onedim]\nkind = \"quartic\"\n").unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.onedim.kind, "quartic");
        assert_eq!(partial.gmm, GmmConfig::default());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        assert!(matches!(ExperimentConfig::from_toml_str("sed = 1"), Err(Error::Config(_))));
        let mut cfg = ExperimentConfig::default();
        cfg.onedim.kind = "gamma".into();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = ExperimentConfig::default();
        cfg.sampler.delta = -1.0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = ExperimentConfig::default();
        cfg.deconv.image = Some("/nonexistent/x.pgm".into());
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn overrides_create_and_replace_keys() {
        let mut t: toml::Table = toml::from_str("[sampler]\ndelta = 0.1\n").unwrap();
        apply_overrides(
            &mut t,
            &[
                ("sampler.delta".into(), "0.5".into()),
                ("onedim.kind".into(), "uniform".into()),
                ("theory.eps".into(), "[0.1, 0.2]".into()),
                ("seed".into(), "3".into()),
            ],
        )
        .unwrap();
        let cfg = ExperimentConfig::from_table(t).unwrap();
        assert_eq!(cfg.sampler.delta, 0.5);
        assert_eq!(cfg.onedim.kind, "uniform");
        assert_eq!(cfg.theory.eps, vec![0.1, 0.2]);
        assert_eq!(cfg.seed, 3);
        let mut t = toml::Table::new();
        t.insert("seed".into(), toml::Value::Integer(1));
        assert!(apply_overrides(&mut t, &[("seed.x".into(), "1".into())]).is_err());
    }
}
