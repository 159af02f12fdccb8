//! Flat `key = value` configuration with `#` comments. Keys are matched
//! case-insensitively; values after the first `#` on a line are treated as
//! commentary. Every diagnostic names the offending key and where it came
//! from (file line or `--set` position), because a sweep config is usually
//! edited by hand.

use entrec_core::scenarios::{ExperimentConfig, SigmaConvention};
use std::fmt;
use std::path::PathBuf;

/// Which pipeline a command should run. `Bell` is a noise-free calibration
/// fixture (the ideal entangled pair, no optics), available to `chsh` and
/// `tomo` but meaningless as a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    A,
    Recovery,
    Esd,
    Bell,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::A => "a",
            Scenario::Recovery => "recovery",
            Scenario::Esd => "esd",
            Scenario::Bell => "bell",
        })
    }
}

/// Where an assignment came from, for diagnostics.
#[derive(Debug, Clone, Copy)]
pub enum Source {
    FileLine(usize),
    SetArg(usize),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::FileLine(n) => write!(f, "config line {n}"),
            Source::SetArg(n) => write!(f, "--set argument {n}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{at}: expected `key = value`, got `{text}`")]
    NotAnAssignment { at: Source, text: String },
    #[error("{at}: unknown key `{key}`")]
    UnknownKey { at: Source, key: String },
    #[error("{at}: value for `{key}` is not a {wanted}: `{value}`")]
    Malformed {
        at: Source,
        key: &'static str,
        wanted: &'static str,
        value: String,
    },
    #[error("{at}: `{key}` = {value} out of range ({requirement})")]
    OutOfRange {
        at: Source,
        key: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("sigma_convention = direct needs an explicit `sigma` (rad/s)")]
    MissingSigma,
    #[error("`sigma` is only meaningful with sigma_convention = direct")]
    StraySigma,
}

/// Everything a command needs, file defaults merged with overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub lambda0_nm: f64,
    pub delta_n: f64,
    pub bandwidth_nm: f64,
    pub sigma_convention: SigmaConventionKey,
    pub sigma: Option<f64>,
    pub la: f64,
    pub l1: f64,
    pub l2: f64,
    pub scenario: Scenario,
    pub l2_start: f64,
    pub l2_end: f64,
    pub l2_step: f64,
    pub with_chsh: bool,
    pub tomo_n: u64,
    pub tomo_trials: usize,
    pub tomo_jitter_deg: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub char_tol: f64,
    pub reduce_tol: f64,
}

/// The convention keyword on its own; a `direct` width arrives through the
/// separate `sigma` key so the keyword stays a plain enum in the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaConventionKey {
    FwhmOfF,
    FwhmOfIntensity,
    Direct,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            lambda0_nm: 800.0,
            delta_n: 0.01,
            bandwidth_nm: 3.0,
            sigma_convention: SigmaConventionKey::FwhmOfF,
            sigma: None,
            la: 0.0,
            l1: 0.0,
            l2: 0.0,
            scenario: Scenario::A,
            l2_start: 0.0,
            l2_end: 800.0,
            l2_step: 5.0,
            with_chsh: false,
            tomo_n: 1_000_000,
            tomo_trials: 100,
            tomo_jitter_deg: 0.0,
            seed: 1,
            out: None,
            char_tol: 1e-9,
            reduce_tol: 1e-9,
        }
    }
}

impl CliConfig {
    /// Applies one `key = value` assignment. Range rules live here so the
    /// diagnostic can carry the source position.
    pub fn assign(&mut self, key: &str, value: &str, source: Source) -> Result<(), ConfigError> {
        let lower = key.to_ascii_lowercase();
        match lower.as_str() {
            "lambda0_nm" => {
                self.lambda0_nm =
                    range_f64("lambda0_nm", value, source, Positive)?;
            }
            "delta_n" => {
                self.delta_n = range_f64("delta_n", value, source, UnitInterval)?;
            }
            "bandwidth_nm" => {
                self.bandwidth_nm =
                    range_f64("bandwidth_nm", value, source, Positive)?;
            }
            "sigma" => {
                self.sigma = Some(range_f64("sigma", value, source, Positive)?);
            }
            "la" => self.la = range_f64("la", value, source, NonNegative)?,
            "l1" => self.l1 = range_f64("l1", value, source, NonNegative)?,
            "l2" => self.l2 = range_f64("l2", value, source, NonNegative)?,
            "l2_start" => {
                self.l2_start = range_f64("l2_start", value, source, NonNegative)?;
            }
            "l2_end" => {
                self.l2_end = range_f64("l2_end", value, source, NonNegative)?;
            }
            "l2_step" => {
                self.l2_step = range_f64("l2_step", value, source, Positive)?;
            }
            "tomo_jitter_deg" => {
                self.tomo_jitter_deg =
                    range_f64("tomo_jitter_deg", value, source, NonNegative)?;
            }
            "char_tol" => {
                self.char_tol = range_f64("char_tol", value, source, Positive)?;
            }
            "reduce_tol" => {
                self.reduce_tol = range_f64("reduce_tol", value, source, Positive)?;
            }
            "tomo_n" => {
                let n: u64 = value.parse().map_err(|_| ConfigError::Malformed {
                    at: source,
                    key: "tomo_n",
                    wanted: "positive integer",
                    value: value.to_string(),
                })?;
                if n == 0 {
                    return Err(ConfigError::OutOfRange {
                        at: source,
                        key: "tomo_n",
                        value: 0.0,
                        requirement: "at least 1",
                    });
                }
                self.tomo_n = n;
            }
            "tomo_trials" => {
                let n: usize = value.parse().map_err(|_| ConfigError::Malformed {
                    at: source,
                    key: "tomo_trials",
                    wanted: "positive integer",
                    value: value.to_string(),
                })?;
                if n < 2 {
                    return Err(ConfigError::OutOfRange {
                        at: source,
                        key: "tomo_trials",
                        value: n as f64,
                        requirement: "at least 2, the standard deviation needs two samples",
                    });
                }
                self.tomo_trials = n;
            }
            "seed" => {
                self.seed = value.parse().map_err(|_| ConfigError::Malformed {
                    at: source,
                    key: "seed",
                    wanted: "unsigned integer",
                    value: value.to_string(),
                })?;
            }
            "with_chsh" => {
                self.with_chsh = match value {
                    "true" => true,
                    "false" => false,
                    _ => {
                        return Err(ConfigError::Malformed {
                            at: source,
                            key: "with_chsh",
                            wanted: "boolean (true/false)",
                            value: value.to_string(),
                        })
                    }
                };
            }
            "sigma_convention" => {
                self.sigma_convention = match value.to_ascii_lowercase().as_str() {
                    "fwhm_of_f" => SigmaConventionKey::FwhmOfF,
                    "fwhm_of_intensity" => SigmaConventionKey::FwhmOfIntensity,
                    "direct" => SigmaConventionKey::Direct,
                    _ => {
                        return Err(ConfigError::Malformed {
                            at: source,
                            key: "sigma_convention",
                            wanted: "one of fwhm_of_f, fwhm_of_intensity, direct",
                            value: value.to_string(),
                        })
                    }
                };
            }
            "scenario" => {
                self.scenario = match value.to_ascii_lowercase().as_str() {
                    "a" => Scenario::A,
                    "recovery" => Scenario::Recovery,
                    "esd" => Scenario::Esd,
                    "bell" => Scenario::Bell,
                    _ => {
                        return Err(ConfigError::Malformed {
                            at: source,
                            key: "scenario",
                            wanted: "one of a, recovery, esd, bell",
                            value: value.to_string(),
                        })
                    }
                };
            }
            "out" => self.out = Some(PathBuf::from(value)),
            _ => {
                return Err(ConfigError::UnknownKey {
                    at: source,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Cross-field rules that no single assignment can check.
    pub fn finish(&self) -> Result<(), ConfigError> {
        match (self.sigma_convention, self.sigma) {
            (SigmaConventionKey::Direct, None) => Err(ConfigError::MissingSigma),
            (SigmaConventionKey::Direct, Some(_)) => Ok(()),
            (_, Some(_)) => Err(ConfigError::StraySigma),
            (_, None) => Ok(()),
        }
    }

    /// The physical parameters in the core library's terms.
    pub fn experiment(&self) -> ExperimentConfig {
        let sigma_convention = match self.sigma_convention {
            SigmaConventionKey::FwhmOfF => SigmaConvention::FwhmOfF,
            SigmaConventionKey::FwhmOfIntensity => SigmaConvention::FwhmOfIntensity,
            SigmaConventionKey::Direct => {
                SigmaConvention::Direct(self.sigma.expect("finish() enforces sigma for direct"))
            }
        };
        ExperimentConfig {
            lambda0: self.lambda0_nm * 1e-9,
            delta_n: self.delta_n,
            bandwidth_nm: self.bandwidth_nm,
            sigma_convention,
            l_a: self.la,
            l_1: self.l1,
            l_2: self.l2,
        }
    }
}

/// Range rules for the floating-point keys.
#[derive(Clone, Copy)]
enum Range {
    Positive,
    NonNegative,
    UnitInterval,
}
use Range::{NonNegative, Positive, UnitInterval};

impl Range {
    fn admits(self, x: f64) -> bool {
        match self {
            Positive => x > 0.0 && x.is_finite(),
            NonNegative => x >= 0.0 && x.is_finite(),
            UnitInterval => x > 0.0 && x < 1.0,
        }
    }

    fn requirement(self) -> &'static str {
        match self {
            Positive => "positive and finite",
            NonNegative => "nonnegative and finite",
            UnitInterval => "strictly between 0 and 1",
        }
    }
}

fn range_f64(
    key: &'static str,
    value: &str,
    source: Source,
    range: Range,
) -> Result<f64, ConfigError> {
    let x: f64 = value.parse().map_err(|_| ConfigError::Malformed {
        at: source,
        key,
        wanted: "number",
        value: value.to_string(),
    })?;
    if !range.admits(x) {
        return Err(ConfigError::OutOfRange {
            at: source,
            key,
            value: x,
            requirement: range.requirement(),
        });
    }
    Ok(x)
}

/// Parses a whole file. Blank lines and comments are skipped; everything
/// else must be an assignment.
pub fn parse_config(text: &str) -> Result<CliConfig, ConfigError> {
    let mut cfg = CliConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let source = Source::FileLine(idx + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::NotAnAssignment {
                at: source,
                text: line.to_string(),
            });
        };
        cfg.assign(key.trim(), value.trim(), source)?;
    }
    Ok(cfg)
}
