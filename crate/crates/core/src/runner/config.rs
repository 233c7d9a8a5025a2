use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{KamError, Result};
use crate::factory::GeneratorSpec;
use crate::kam::{KamSchedule, Profile};
use crate::torus_algebra::EigenSelector;

/// Environment variable that replaces `[output].dir`.
pub const OUT_DIR_ENV: &str = "KAM_OUT_DIR";

/// Experiment description read from a TOML file.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub matrix: Vec<Vec<i64>>,
    #[serde(default)]
    pub eigen: EigenSelector,
    #[serde(default)]
    pub profile: Profile,
    /// Explicit flow vector; defaults to the unit eigenvector.
    pub v: Option<Vec<f64>>,
    pub generator: Option<GeneratorSpec>,
    /// Serialized action pair, relative to the config file.
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub schedule: ScheduleOverrides,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleOverrides {
    pub n0: Option<u32>,
    pub sigma: Option<f64>,
    pub r: Option<usize>,
    pub delta: Option<f64>,
    pub max_steps: Option<usize>,
    pub target_tol: Option<f64>,
    pub cutoff_cap: Option<u32>,
    pub alias_tol: Option<f64>,
    pub diagnostics: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    pub dir: PathBuf,
    pub trace: String,
    pub conjugacy: String,
    pub summary: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            trace: "trace.jsonl".into(),
            conjugacy: "conjugacy.txt".into(),
            summary: "summary.json".into(),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| KamError::Parse {
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn check(&self) -> Result<()> {
        match (&self.generator, &self.input) {
            (Some(_), Some(_)) => return Err(KamError::Input("give either [generator] or input, not both".into())),
            (None, None) => return Err(KamError::Input("one of [generator] or input is required".into())),
            _ => {}
        }
        if let Some(g) = &self.generator {
            g.validate()?;
        }
        if self.profile == Profile::Theoretical {
            return Err(KamError::Parameter(
                "the theoretical profile is for parameter checks only; runs need profile = \"practical\"".into(),
            ));
        }
        let s = &self.schedule;
        let range = |name: &str, v: Option<f64>, lo: f64, hi: f64| -> Result<()> {
            match v {
                Some(x) if !(lo..=hi).contains(&x) => {
                    Err(KamError::Parameter(format!("{name} = {x} outside [{lo}, {hi}]")))
                }
                _ => Ok(()),
            }
        };
        range("schedule.r", s.r.map(|x| x as f64), 4.0, 10.0)?;
        range("schedule.n0", s.n0.map(f64::from), 4.0, 16.0)?;
        range("schedule.cutoff_cap", s.cutoff_cap.map(f64::from), 32.0, 128.0)?;
        range("schedule.sigma", s.sigma, 0.05, 0.95)?;
        range("schedule.max_steps", s.max_steps.map(|x| x as f64), 1.0, 20.0)?;
        range("schedule.target_tol", s.target_tol, 1e-14, 1e-2)?;
        range("schedule.alias_tol", s.alias_tol, 1e-15, 1e-3)?;
        if let Some(d) = s.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(KamError::Parameter("schedule.delta must be positive".into()));
            }
        }
        Ok(())
    }

    /// Practical schedule with the overrides applied.
    pub fn schedule(&self, dim: usize) -> Result<KamSchedule> {
        let mut k = KamSchedule::practical(dim);
        let s = &self.schedule;
        k.n0 = s.n0.unwrap_or(k.n0);
        k.sigma = s.sigma.unwrap_or(k.sigma);
        k.r = s.r.unwrap_or(k.r);
        k.delta = s.delta.or(k.delta);
        k.max_steps = s.max_steps.unwrap_or(k.max_steps);
        k.target_tol = s.target_tol.unwrap_or(k.target_tol);
        k.cutoff_cap = s.cutoff_cap.unwrap_or(k.cutoff_cap);
        k.alias_tol = s.alias_tol.unwrap_or(k.alias_tol);
        k.diagnostics = s.diagnostics.unwrap_or(k.diagnostics);
        k.validate()?;
        Ok(k)
    }

    /// Output directory: `KAM_OUT_DIR` if set, else `[output].dir` relative
    /// to `base`.
    pub fn out_dir(&self, base: &Path) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => base.join(&self.output.dir),
        }
    }
}
