//! Flat `section.key = value` experiment configuration.
//!
//! The text is read as TOML (dotted keys are native there) and flattened, so
//! nested tables and dotted keys are interchangeable. Every key must be known.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Value;

use crate::ensemble::{EnsembleKind, OmegaThresholds};
use crate::model::{ModelConfig, PopulationSpectrum, RadialLaw, DEFAULT_TAU};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpectrumSpec {
    Identity,
    TwoAtom { sigma_a: f64, sigma_b: f64, weight: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RadialSpec {
    Beta { l: f64, d: f64, b: f64 },
    PointMass { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Edge,
    Tw,
    Locallaw,
    Omega,
    Comparison,
}

impl Check {
    fn name(self) -> &'static str {
        match self {
            Check::Edge => "edge",
            Check::Tw => "tw",
            Check::Locallaw => "locallaw",
            Check::Omega => "omega",
            Check::Comparison => "comparison",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "edge" => Check::Edge,
            "tw" => Check::Tw,
            "locallaw" => Check::Locallaw,
            "omega" => Check::Omega,
            "comparison" => Check::Comparison,
            other => return Err(Error::Config(format!("unknown check '{other}'"))),
        })
    }
}

fn ensemble_name(kind: EnsembleKind) -> &'static str {
    match kind {
        EnsembleKind::Elliptical => "elliptical",
        EnsembleKind::Gaussian => "gaussian",
    }
}

fn parse_ensemble(s: &str) -> Result<EnsembleKind> {
    match s {
        "elliptical" => Ok(EnsembleKind::Elliptical),
        "gaussian" => Ok(EnsembleKind::Gaussian),
        other => Err(Error::Config(format!("unknown ensemble '{other}'"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySettings {
    pub e_min: f64,
    /// Upper end of the grid; `None` means `λ₊ + 0.5`.
    pub e_max: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalLawSettings {
    /// `None` means `λ₊ / 2`.
    pub c_left: Option<f64>,
    pub c_right: f64,
    pub epsilon_e: f64,
    pub seeds: usize,
}

/// Everything a CLI run or campaign needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub p: usize,
    pub n: usize,
    pub tau: f64,
    pub spectrum: SpectrumSpec,
    pub radial: RadialSpec,
    pub trials: usize,
    pub k_top: usize,
    pub seed_base: u64,
    pub ensembles: Vec<EnsembleKind>,
    pub checks: Vec<Check>,
    pub outputs: PathBuf,
    pub omega: OmegaThresholds,
    pub tol: f64,
    pub density: DensitySettings,
    pub locallaw: LocalLawSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            p: 400,
            n: 400,
            tau: DEFAULT_TAU,
            spectrum: SpectrumSpec::Identity,
            radial: RadialSpec::PointMass { value: 1.0 },
            trials: 100,
            k_top: 1,
            seed_base: 0,
            ensembles: vec![EnsembleKind::Elliptical, EnsembleKind::Gaussian],
            checks: vec![Check::Edge, Check::Tw],
            outputs: PathBuf::from("out"),
            omega: OmegaThresholds::default(),
            tol: 1e-12,
            density: DensitySettings { e_min: 0.0, e_max: None, points: 400 },
            locallaw: LocalLawSettings { c_left: None, c_right: 1.0, epsilon_e: 0.1, seeds: 10 },
        }
    }
}

fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other);
            }
        }
    }
}

struct Fields(BTreeMap<String, Value>);

impl Fields {
    fn take(&mut self, key: &str) -> Option<Value> {
        self.0.remove(key)
    }

    fn float(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some(Value::Float(f)) => Ok(f),
            Some(Value::Integer(i)) => Ok(i as f64),
            Some(v) => Err(Error::Config(format!("{key}: expected a number, got {v}"))),
        }
    }

    fn opt_float(&mut self, key: &str) -> Result<Option<f64>> {
        if self.0.contains_key(key) {
            self.float(key, 0.0).map(Some)
        } else {
            Ok(None)
        }
    }

    fn uint(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.take(key) {
            None => Ok(default),
            Some(Value::Integer(i)) if i >= 0 => Ok(i as u64),
            Some(Value::String(s)) => s
                .parse()
                .map_err(|_| Error::Config(format!("{key}: '{s}' is not a nonnegative integer"))),
            Some(v) => Err(Error::Config(format!("{key}: expected a nonnegative integer, got {v}"))),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(Error::Config(format!("{key}: expected a string, got {v}"))),
        }
    }

    fn strings(&mut self, key: &str) -> Result<Option<Vec<String>>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s),
                    other => Err(Error::Config(format!("{key}: expected strings, got {other}"))),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(Value::String(s)) => Ok(Some(s.split(',').map(|t| t.trim().to_string()).collect())),
            Some(v) => Err(Error::Config(format!("{key}: expected a list, got {v}"))),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut flat = BTreeMap::new();
        flatten("", table, &mut flat);
        let mut f = Fields(flat);
        let d = Self::default();

        let spectrum = match f.string("spectrum.kind")?.as_deref() {
            None | Some("identity") => SpectrumSpec::Identity,
            Some("two_atom") => SpectrumSpec::TwoAtom {
                sigma_a: f.float("spectrum.sigma_a", 2.0)?,
                sigma_b: f.float("spectrum.sigma_b", 1.0)?,
                weight: f.float("spectrum.weight", 0.5)?,
            },
            Some("file") => SpectrumSpec::File(PathBuf::from(
                f.string("spectrum.file")?
                    .ok_or_else(|| Error::Config("spectrum.kind = file needs spectrum.file".into()))?,
            )),
            Some(other) => return Err(Error::Config(format!("unknown spectrum.kind '{other}'"))),
        };
        let radial = match f.string("radial.kind")?.as_deref() {
            None | Some("point_mass") => RadialSpec::PointMass { value: f.float("radial.l", 1.0)? },
            Some("beta") => RadialSpec::Beta {
                l: f.float("radial.l", 1.0)?,
                d: f.float("radial.d", 0.0)?,
                b: f.float("radial.b", 1.0)?,
            },
            Some(other) => return Err(Error::Config(format!("unknown radial.kind '{other}'"))),
        };
        let ensembles = match f.strings("experiment.ensembles")? {
            Some(v) => v.iter().map(|s| parse_ensemble(s)).collect::<Result<_>>()?,
            None => d.ensembles.clone(),
        };
        let checks = match f.strings("experiment.checks")? {
            Some(v) => v.iter().map(|s| Check::parse(s)).collect::<Result<_>>()?,
            None => d.checks.clone(),
        };
        let config = Self {
            p: f.uint("model.p", d.p as u64)? as usize,
            n: f.uint("model.n", d.n as u64)? as usize,
            tau: f.float("model.tau", d.tau)?,
            spectrum,
            radial,
            trials: f.uint("experiment.trials", d.trials as u64)? as usize,
            k_top: f.uint("experiment.k_top", d.k_top as u64)? as usize,
            seed_base: f.uint("experiment.seed_base", d.seed_base)?,
            ensembles,
            checks,
            outputs: f.string("experiment.outputs")?.map(PathBuf::from).unwrap_or(d.outputs),
            omega: OmegaThresholds {
                c: f.float("omega.c", d.omega.c)?,
                epsilon: f.float("omega.epsilon", d.omega.epsilon)?,
            },
            tol: f.float("solver.tol", d.tol)?,
            density: DensitySettings {
                e_min: f.float("density.e_min", d.density.e_min)?,
                e_max: f.opt_float("density.e_max")?,
                points: f.uint("density.points", d.density.points as u64)? as usize,
            },
            locallaw: LocalLawSettings {
                c_left: f.opt_float("locallaw.c_left")?,
                c_right: f.float("locallaw.c_right", d.locallaw.c_right)?,
                epsilon_e: f.float("locallaw.epsilon_e", d.locallaw.epsilon_e)?,
                seeds: f.uint("locallaw.seeds", d.locallaw.seeds as u64)? as usize,
            },
        };
        if !f.0.is_empty() {
            return Err(Error::UnknownKeys(f.0.into_keys().collect()));
        }
        if config.trials == 0 {
            return Err(Error::Config("experiment.trials must be at least 1".into()));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Flat text form; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: Value| {
            writeln!(s, "{k} = {v}").expect("writing to a String");
        };
        let int = |v: u64| {
            i64::try_from(v).map(Value::Integer).unwrap_or_else(|_| Value::String(v.to_string()))
        };
        line("model.p", int(self.p as u64));
        line("model.n", int(self.n as u64));
        line("model.tau", Value::Float(self.tau));
        match &self.spectrum {
            SpectrumSpec::Identity => line("spectrum.kind", "identity".into()),
            SpectrumSpec::TwoAtom { sigma_a, sigma_b, weight } => {
                line("spectrum.kind", "two_atom".into());
                line("spectrum.sigma_a", Value::Float(*sigma_a));
                line("spectrum.sigma_b", Value::Float(*sigma_b));
                line("spectrum.weight", Value::Float(*weight));
            }
            SpectrumSpec::File(path) => {
                line("spectrum.kind", "file".into());
                line("spectrum.file", path.display().to_string().into());
            }
        }
        match &self.radial {
            RadialSpec::PointMass { value } => {
                line("radial.kind", "point_mass".into());
                line("radial.l", Value::Float(*value));
            }
            RadialSpec::Beta { l, d, b } => {
                line("radial.kind", "beta".into());
                line("radial.l", Value::Float(*l));
                line("radial.d", Value::Float(*d));
                line("radial.b", Value::Float(*b));
            }
        }
        line("experiment.trials", int(self.trials as u64));
        line("experiment.k_top", int(self.k_top as u64));
        line("experiment.seed_base", int(self.seed_base));
        line(
            "experiment.ensembles",
            Value::Array(self.ensembles.iter().map(|e| ensemble_name(*e).into()).collect()),
        );
        line("experiment.checks", Value::Array(self.checks.iter().map(|c| c.name().into()).collect()));
        line("experiment.outputs", self.outputs.display().to_string().into());
        line("omega.c", Value::Float(self.omega.c));
        line("omega.epsilon", Value::Float(self.omega.epsilon));
        line("solver.tol", Value::Float(self.tol));
        line("density.e_min", Value::Float(self.density.e_min));
        if let Some(e) = self.density.e_max {
            line("density.e_max", Value::Float(e));
        }
        line("density.points", int(self.density.points as u64));
        if let Some(c) = self.locallaw.c_left {
            line("locallaw.c_left", Value::Float(c));
        }
        line("locallaw.c_right", Value::Float(self.locallaw.c_right));
        line("locallaw.epsilon_e", Value::Float(self.locallaw.epsilon_e));
        line("locallaw.seeds", int(self.locallaw.seeds as u64));
        s
    }

    pub fn model(&self) -> Result<ModelConfig> {
        let spectrum = match &self.spectrum {
            SpectrumSpec::Identity => PopulationSpectrum::identity(self.p),
            SpectrumSpec::TwoAtom { sigma_a, sigma_b, weight } => {
                PopulationSpectrum::two_atom(self.p, *sigma_a, *sigma_b, *weight)
            }
            SpectrumSpec::File(path) => {
                let text = std::fs::read_to_string(path)?;
                let sigmas = text
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<f64>().map_err(|_| Error::Config(format!("bad spectrum value '{t}'"))))
                    .collect::<Result<Vec<_>>>()?;
                if sigmas.len() != self.p {
                    return Err(Error::Config(format!(
                        "spectrum file has {} values but model.p = {}",
                        sigmas.len(),
                        self.p
                    )));
                }
                PopulationSpectrum::new(sigmas)
            }
        };
        let radial = match self.radial {
            RadialSpec::PointMass { value } => RadialLaw::point_mass(value),
            RadialSpec::Beta { l, d, b } => RadialLaw::beta(l, d, b)?,
        };
        let config = ModelConfig::new(self.p, self.n, spectrum, radial).with_tau(self.tau);
        let problems = crate::model::validate(&config);
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MP: &str = r#"
model.p = 400
model.n = 400
spectrum.kind = "identity"
radial.kind = "point_mass"
radial.l = 1.0
"#;

    #[test]
    fn parses_flat_keys_with_defaults() {
        let c = ExperimentConfig::parse(MP).unwrap();
        assert_eq!(c.p, 400);
        assert_eq!(c.radial, RadialSpec::PointMass { value: 1.0 });
        assert_eq!(c.trials, ExperimentConfig::default().trials);
        let m = c.model().unwrap();
        assert_eq!(m.phi(), 1.0);
    }

    #[test]
    fn nested_tables_are_equivalent() {
        let nested = "[model]\np = 400\nn = 400\n[radial]\nkind = \"point_mass\"\nl = 1.0\n";
        assert_eq!(ExperimentConfig::parse(nested).unwrap(), ExperimentConfig::parse(MP).unwrap());
    }

    #[test]
    fn unknown_keys_are_listed() {
        let err = ExperimentConfig::parse("model.p = 10\nmodel.q = 3\nfoo.bar = 1\n").unwrap_err();
        match err {
            Error::UnknownKeys(keys) => assert_eq!(keys, vec!["foo.bar".to_string(), "model.q".to_string()]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::parse(MP).unwrap();
        c.spectrum = SpectrumSpec::TwoAtom { sigma_a: 2.0, sigma_b: 1.0, weight: 0.1 };
        c.radial = RadialSpec::Beta { l: 1.0, d: 1.0, b: 2.5 };
        c.seed_base = u64::MAX - 3;
        c.tol = 1.234_567_890_123e-11;
        c.density.e_max = Some(5.5);
        c.checks = vec![Check::Omega, Check::Tw];
        let text = c.to_text();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(ExperimentConfig::parse("model.p = \"x\""), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("spectrum.kind = \"bogus\""), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("experiment.trials = 0"), Err(Error::Config(_))));
    }
}
