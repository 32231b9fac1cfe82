//! Experiment configuration: a JSON file, command-line overrides, and the
//! per-experiment defaults that fill the rest.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domains::{Domain, Point};
use crate::error::{Error, Result};
use crate::measures::{catalog, Measure};
use crate::toeplitz::BasisSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    VerifyGeometry,
    CarlesonReport,
    EquivalenceReport,
    ToeplitzSpectrum,
}

impl Experiment {
    pub fn id(&self) -> &'static str {
        match self {
            Experiment::VerifyGeometry => "verify-geometry",
            Experiment::CarlesonReport => "carleson-report",
            Experiment::EquivalenceReport => "equivalence-report",
            Experiment::ToeplitzSpectrum => "toeplitz-spectrum",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Every field is optional; unset fields take the experiment defaults.
/// `measure` is either a measure object or a string (a catalog name such as
/// `"power_vanishing(1)"`, or the JSON text of a measure). `directions` are
/// ray directions as interleaved `[re, im, re, im, ...]` lists.
#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: Option<String>,
    pub measure: Option<Value>,
    pub radius: Option<f64>,
    pub margin: Option<f64>,
    pub resolution: Option<usize>,
    pub degrees: Option<Vec<u32>>,
    pub directions: Option<Vec<Vec<f64>>>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub test_points: Option<usize>,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_error(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fields set in `overrides` replace those in `self`.
    pub fn merged(self, overrides: ExperimentConfig) -> Self {
        ExperimentConfig {
            domain: overrides.domain.or(self.domain),
            measure: overrides.measure.or(self.measure),
            radius: overrides.radius.or(self.radius),
            margin: overrides.margin.or(self.margin),
            resolution: overrides.resolution.or(self.resolution),
            degrees: overrides.degrees.or(self.degrees),
            directions: overrides.directions.or(self.directions),
            out: overrides.out.or(self.out),
            seed: overrides.seed.or(self.seed),
            samples: overrides.samples.or(self.samples),
            test_points: overrides.test_points.or(self.test_points),
        }
    }

    /// Validates every field and fills defaults. Runs no computation.
    pub fn resolve(&self, experiment: Experiment) -> Result<Settings> {
        let domain: Domain = match &self.domain {
            Some(s) => s.parse().map_err(|e| config_error(format!("{e}")))?,
            None => Domain::Disk,
        };
        let disk = domain == Domain::Disk;
        let (measure_label, measure) = match &self.measure {
            Some(v) => measure_from_value(v, domain)?,
            None => ("lebesgue".to_string(), Measure::lebesgue()),
        };
        let radius = self.radius.unwrap_or(1.0);
        check_range("radius", radius, 0.05, 5.0)?;
        let margin = self.margin.unwrap_or(match experiment {
            Experiment::CarlesonReport | Experiment::EquivalenceReport if disk => 0.001,
            _ if disk => 0.01,
            _ => 0.1,
        });
        check_range("margin", margin, 1e-4, 0.5)?;
        let resolution = self.resolution.unwrap_or(match experiment {
            Experiment::VerifyGeometry if disk => 64,
            Experiment::VerifyGeometry => 24,
            _ if disk => 48,
            _ => 12,
        });
        if !(4..=256).contains(&resolution) {
            return Err(config_error(format!(
                "resolution must lie in [4, 256], got {resolution}"
            )));
        }
        let degrees = match &self.degrees {
            Some(d) => d.clone(),
            None => match experiment {
                Experiment::VerifyGeometry => vec![if disk { 10 } else { 6 }],
                Experiment::EquivalenceReport if disk => vec![10, 20, 40],
                Experiment::EquivalenceReport => vec![4, 7, 10],
                _ if disk => vec![5, 10, 20],
                _ => vec![4, 7, 10],
            },
        };
        if degrees.is_empty() || degrees.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_error(format!(
                "degrees must be nonempty and strictly increasing, got {degrees:?}"
            )));
        }
        let top = *degrees.last().expect("nonempty");
        let size = BasisSpec::new(domain, top.min(200)).len();
        if top > 200 || size > MAX_BASIS {
            return Err(config_error(format!(
                "degree {top} gives a basis of {size} functions on the {domain}; at most {MAX_BASIS} are supported"
            )));
        }
        let directions = match &self.directions {
            Some(ds) => ds
                .iter()
                .map(|d| {
                    let p = Point::from_reals(d)
                        .map_err(|e| config_error(format!("bad direction {d:?}: {e}")))?;
                    domain
                        .normalize_direction(&p)
                        .map_err(|e| config_error(format!("bad direction {d:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?,
            None => domain.default_directions(),
        };
        if directions.is_empty() {
            return Err(config_error("directions must not be empty"));
        }
        let samples = self.samples.unwrap_or(match experiment {
            Experiment::VerifyGeometry => 1000,
            _ => crate::lattice::DEFAULT_CERTIFICATION_SAMPLES,
        });
        if !(1..=1_000_000).contains(&samples) {
            return Err(config_error(format!(
                "samples must lie in [1, 1000000], got {samples}"
            )));
        }
        let test_points = self.test_points.unwrap_or(match experiment {
            Experiment::VerifyGeometry => 20,
            Experiment::EquivalenceReport => 400,
            _ => 50,
        });
        if !(1..=100_000).contains(&test_points) {
            return Err(config_error(format!(
                "test_points must lie in [1, 100000], got {test_points}"
            )));
        }
        Ok(Settings {
            experiment,
            domain,
            measure_label,
            measure,
            radius,
            margin,
            resolution,
            degrees,
            directions,
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("out")),
            seed: self.seed.unwrap_or(0),
            samples,
            test_points,
        })
    }
}

/// Largest supported basis (matrix side).
pub const MAX_BASIS: usize = 2000;

fn check_range(name: &str, x: f64, lo: f64, hi: f64) -> Result<()> {
    if x.is_finite() && (lo..=hi).contains(&x) {
        Ok(())
    } else {
        Err(config_error(format!(
            "{name} must lie in [{lo}, {hi}], got {x}"
        )))
    }
}

fn measure_from_value(v: &Value, domain: Domain) -> Result<(String, Measure)> {
    match v {
        Value::String(s) => parse_measure(s, domain),
        Value::Object(_) => {
            let m: Measure = serde_json::from_value(v.clone())
                .map_err(|e| config_error(format!("bad measure: {e}")))?;
            m.validate(domain)
                .map_err(|e| config_error(format!("{e}")))?;
            Ok(("custom".to_string(), m))
        }
        _ => Err(config_error("measure must be a string or an object")),
    }
}

/// Parses a measure given on the command line: a catalog name, one of
/// `lebesgue`, `constant(c)`, `power_vanishing(t)`, `power_blowup(t)`, or
/// measure JSON.
pub fn parse_measure(spec: &str, domain: Domain) -> Result<(String, Measure)> {
    let s = spec.trim();
    let m = if s.starts_with('{') {
        let m: Measure = s.parse().map_err(|e| config_error(format!("{e}")))?;
        m.validate(domain)
            .map_err(|e| config_error(format!("{e}")))?;
        return Ok(("custom".to_string(), m));
    } else if let Some((_, m)) = catalog(domain).into_iter().find(|(name, _)| name == s) {
        m
    } else {
        let (name, arg) = match s.split_once('(') {
            Some((name, rest)) => {
                let arg = rest.strip_suffix(')').ok_or_else(|| {
                    config_error(format!("unbalanced parentheses in measure {s:?}"))
                })?;
                let x: f64 = arg
                    .trim()
                    .parse()
                    .map_err(|_| config_error(format!("bad parameter in measure {s:?}")))?;
                (name.trim(), Some(x))
            }
            None => (s, None),
        };
        match (name, arg) {
            ("lebesgue", None) => Measure::lebesgue(),
            ("constant", Some(c)) => Measure::constant(c),
            ("power_vanishing", Some(t)) => Measure::power_vanishing(t),
            ("power_blowup", Some(t)) => Measure::power_blowup(t),
            _ => {
                let names: Vec<String> = catalog(domain).into_iter().map(|(n, _)| n).collect();
                return Err(config_error(format!(
                    "unknown measure {s:?}; expected one of {}, constant(c), power_vanishing(t), power_blowup(t) or measure JSON",
                    names.join(", ")
                )));
            }
        }
    };
    m.validate(domain)
        .map_err(|e| config_error(format!("{e}")))?;
    Ok((s.to_string(), m))
}

/// A fully resolved configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub experiment: Experiment,
    pub domain: Domain,
    pub measure_label: String,
    pub measure: Measure,
    pub radius: f64,
    pub margin: f64,
    pub resolution: usize,
    pub degrees: Vec<u32>,
    pub directions: Vec<Point>,
    /// Not echoed in reports: where results go does not change them.
    #[serde(skip)]
    pub out: PathBuf,
    pub seed: u64,
    pub samples: usize,
    pub test_points: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys_and_bad_ranges() {
        assert!(ExperimentConfig::from_json(r#"{"domian": "disk"}"#).is_err());
        let bad = |json: &str| {
            ExperimentConfig::from_json(json)
                .unwrap()
                .resolve(Experiment::CarlesonReport)
                .unwrap_err()
        };
        assert!(matches!(bad(r#"{"domain": "annulus"}"#), Error::Config(_)));
        assert!(matches!(bad(r#"{"radius": -1}"#), Error::Config(_)));
        assert!(matches!(bad(r#"{"degrees": [5, 3]}"#), Error::Config(_)));
        assert!(matches!(
            bad(r#"{"measure": "power_blowup(0.5)", "domain": "ball(2)"}"#),
            Error::Config(_)
        ));
        assert!(matches!(
            bad(r#"{"directions": [[0, 0]]}"#),
            Error::Config(_)
        ));
    }

    #[test]
    fn overrides_and_measure_forms() {
        let base = ExperimentConfig::from_json(r#"{"domain": "bidisk", "seed": 4, "measure": {"type": "density", "family": "constant", "c": 2.0}}"#).unwrap();
        let over = ExperimentConfig {
            seed: Some(9),
            ..Default::default()
        };
        let s = base
            .merged(over)
            .resolve(Experiment::ToeplitzSpectrum)
            .unwrap();
        assert_eq!((s.domain, s.seed, s.margin), (Domain::Polydisk(2), 9, 0.1));
        assert_eq!(s.measure, Measure::constant(2.0));
        let (label, m) = parse_measure("power_vanishing(0.5)", Domain::Disk).unwrap();
        assert_eq!(
            (label.as_str(), m),
            ("power_vanishing(0.5)", Measure::power_vanishing(0.5))
        );
        assert_eq!(
            parse_measure("atomic(3)", Domain::Disk)
                .unwrap()
                .1
                .atoms()
                .len(),
            3
        );
        assert!(parse_measure("gaussian(1)", Domain::Disk).is_err());
    }
}
