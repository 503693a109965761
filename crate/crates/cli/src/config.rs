use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tensor_fsd::deblur::BlurSpec;
use tensor_fsd::generators::SystemSpec;
use tensor_fsd::solvers::SolverKind;

use crate::error::{CliError, CliResult};

pub const DEFAULT_OUT: &str = "out";

/// Top-level experiment file: the experiment plus where and how to run it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    pub experiment: Experiment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Experiment {
    SynthSweep(SynthSweep),
    TheoryCheck(TheoryCheck),
    Deblur(DeblurExperiment),
    BoundValidate(BoundValidate),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::SynthSweep(_) => "synth_sweep",
            Experiment::TheoryCheck(_) => "theory_check",
            Experiment::Deblur(_) => "deblur",
            Experiment::BoundValidate(_) => "bound_validate",
        }
    }
}

/// Every system × solver × `α` cell, each system drawn `repeats` times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSweep {
    pub systems: Vec<SystemSpec>,
    pub solvers: Vec<SolverKind>,
    pub alphas: Vec<f64>,
    pub max_iters: usize,
    #[serde(default = "one")]
    pub repeats: usize,
    /// Block size of the cyclic solver; the other solvers use single slices.
    #[serde(default = "one")]
    pub block_size: usize,
    #[serde(default)]
    pub stop_tol: f64,
}

/// Theory constants over an `α` sweep, with a cyclic run per point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryCheck {
    pub systems: Vec<SystemSpec>,
    pub alphas: Vec<f64>,
    #[serde(default = "one")]
    pub block_size: usize,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum ImageSource {
    /// One PGM file per frame.
    Pgm { paths: Vec<PathBuf> },
    /// A single `size × size` checkerboard frame.
    Checkerboard { square: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeblurExperiment {
    pub blur: BlurSpec,
    pub input: ImageSource,
    /// A TNS3 observation used in place of blurring the input.
    #[serde(default)]
    pub observed: Option<PathBuf>,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<SolverKind>,
    pub alpha: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default = "one")]
    pub block_size: usize,
    #[serde(default)]
    pub stop_tol: f64,
}

/// A cyclic run of `iters` steps checked against every bound whose
/// condition holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundValidate {
    pub system: SystemSpec,
    pub alpha: f64,
    #[serde(default = "one")]
    pub block_size: usize,
    pub iters: usize,
}

fn one() -> usize {
    1
}

fn default_iters() -> usize {
    1000
}

fn default_solvers() -> Vec<SolverKind> {
    vec![SolverKind::Cyclic]
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    /// Reads `path`; relative input paths are resolved against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let Experiment::Deblur(d) = &mut self.experiment {
            if let ImageSource::Pgm { paths } = &mut d.input {
                for p in paths.iter_mut() {
                    *p = base.join(&*p);
                }
            }
            if let Some(p) = &mut d.observed {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let nonempty = |len: usize, what: &str| {
            if len == 0 {
                Err(CliError::config(format!("{what} list is empty")))
            } else {
                Ok(())
            }
        };
        let positive = |alphas: &[f64]| {
            match alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
                Some(a) => Err(CliError::config(format!("learning rate must be positive, got {a}"))),
                None => Ok(()),
            }
        };
        match &self.experiment {
            Experiment::SynthSweep(s) => {
                nonempty(s.systems.len(), "system")?;
                nonempty(s.solvers.len(), "solver")?;
                nonempty(s.alphas.len(), "alpha")?;
                positive(&s.alphas)?;
                if s.repeats == 0 {
                    return Err(CliError::config("repeats must be at least 1"));
                }
                for spec in &s.systems {
                    spec.validate()?;
                }
            }
            Experiment::TheoryCheck(t) => {
                nonempty(t.systems.len(), "system")?;
                nonempty(t.alphas.len(), "alpha")?;
                positive(&t.alphas)?;
                for spec in &t.systems {
                    spec.validate()?;
                }
            }
            Experiment::Deblur(d) => {
                d.blur.validate()?;
                nonempty(d.solvers.len(), "solver")?;
                positive(&[d.alpha])?;
                match &d.input {
                    ImageSource::Pgm { paths } => nonempty(paths.len(), "input path")?,
                    ImageSource::Checkerboard { square } if *square == 0 => {
                        return Err(CliError::config("checkerboard square must be positive"))
                    }
                    ImageSource::Checkerboard { .. } => {}
                }
            }
            Experiment::BoundValidate(b) => {
                positive(&[b.alpha])?;
                b.system.validate()?;
            }
        }
        Ok(())
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// A validated config with overrides applied.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub out: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl RunContext {
    pub fn new(cfg: &ExperimentConfig, ov: &Overrides) -> Self {
        RunContext {
            out: ov.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            seed: ov.seed.unwrap_or(cfg.seed),
            threads: ov.threads,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOUNDS: &str = r#"{"experiment": {"kind": "bound_validate",
        "system": {"n1": 4, "n2": 2, "n3": 1, "n": 2, "family": {"kind": "gaussian"}, "seed": 0},
        "alpha": 0.1, "iters": 10}}"#;

    #[test]
    fn defaults_fill_optional_fields() {
        let cfg = ExperimentConfig::from_json(BOUNDS).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.out, None);
        match cfg.experiment {
            Experiment::BoundValidate(b) => assert_eq!(b.block_size, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_at_every_level() {
        for (from, to) in [(r#""iters": 10"#, r#""iters": 10, "extra": 1"#), (r#""seed": 0}"#, r#""seed": 0, "sed": 1}"#)] {
            let text = BOUNDS.replace(from, to);
            assert!(matches!(ExperimentConfig::from_json(&text), Err(CliError::Config(_))), "{text}");
        }
        let top = BOUNDS.replacen('{', r#"{"threads": 2, "#, 1);
        assert!(ExperimentConfig::from_json(&top).is_err());
    }

    #[test]
    fn input_paths_resolve_against_the_config_directory() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(
            &path,
            r#"{"experiment": {"kind": "deblur", "blur": {"size": 4, "band": 2, "sigma": 1.0},
                "input": {"kind": "pgm", "paths": ["a.pgm", "/abs/b.pgm"]}, "observed": "b.tns", "alpha": 1.0}}"#,
        )
        .unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        let Experiment::Deblur(d) = cfg.experiment else { panic!() };
        assert_eq!(d.input, ImageSource::Pgm { paths: vec![dir.path().join("a.pgm"), PathBuf::from("/abs/b.pgm")] });
        assert_eq!(d.observed, Some(dir.path().join("b.tns")));
        assert_eq!(d.solvers, vec![SolverKind::Cyclic]);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = ExperimentConfig::from_json(BOUNDS).unwrap();
        cfg.out = Some(PathBuf::from("from_config"));
        cfg.seed = 3;
        let ctx = RunContext::new(&cfg, &Overrides::default());
        assert_eq!((ctx.out, ctx.seed), (PathBuf::from("from_config"), 3));
        let ov = Overrides { out: Some(PathBuf::from("flag")), seed: Some(9), threads: Some(2) };
        let ctx = RunContext::new(&cfg, &ov);
        assert_eq!((ctx.out, ctx.seed, ctx.threads), (PathBuf::from("flag"), 9, Some(2)));
        cfg.out = None;
        assert_eq!(RunContext::new(&cfg, &Overrides::default()).out, PathBuf::from(DEFAULT_OUT));
    }
}
