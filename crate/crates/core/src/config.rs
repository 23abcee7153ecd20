//! Flat `key = value` configuration files.
//!
//! One setting per line, dotted keys, `#` starts a comment. Values use TOML
//! syntax (`1e8`, `"text"`, `[1e4, 1e6]`, `{ alpha = 0, b = 1e-11 }`).
//! `noise.term` may repeat; the first occurrence replaces the default
//! profile. Unknown keys are errors.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `comb.f_r` | repetition rate, Hz | `1e8` |
//! | `comb.lambda0_nm` | center wavelength, nm | `1550` |
//! | `comb.width` | comb width for single runs, Hz | `1e12` |
//! | `grid.oversampling` | samples per carrier period | `16` |
//! | `grid.t_sig` | analysis window, s (whole carrier periods) | `2e-3` |
//! | `dispersion.kinds` | kinds compared in width sweeps | `["constant", "linear", "ideal"]` |
//! | `dispersion.m` | upconversion factor of the ideal kind | `1` |
//! | `dispersion.table` | `lambda_nm D_ps_per_nm` file for `tabulated` | none |
//! | `noise.enabled` | `false` runs on pure tones | `true` |
//! | `noise.term` | `{ alpha = <int>, b = <float> }`, repeatable | `b0 = 1e-11`, `b-2 = 0.1` |
//! | `noise.f_low` | low cutoff, Hz | bin spacing |
//! | `analysis.offsets` | carrier offsets of interest, Hz | `[1e4, 1e6]` |
//! | `sweep.ratios` | oversampling ratios | `[4, 8, 16, 32, 64]` |
//! | `sweep.widths` | comb widths, Hz | `0` to `3e12` |
//! | `offsets.widths` | widths for offset tables, Hz | `[1e11, 3e12]` |
//! | `offsets.oversampling` | oversampling for offset tables | `64` |
//! | `seeds.count` | realizations per point | `10` |
//! | `seeds.master` | master seed | `1` |
//! | `run.output_dir` | output directory | `"out"` |
//! | `run.memory_budget` | bytes | `1073741824` |
//! | `run.engine` | `auto`, `time` or `spectral` | `auto` |

use std::path::{Path, PathBuf};

use toml::Value;

use crate::dispersion::DispersionTable;
use crate::error::{Error, Result};
use crate::experiments::{ExperimentConfig, KindChoice};
use crate::model::{NoiseProfile, NoiseTerm};
use crate::synthesis::default_noise_profile;

pub const KEYS: &[&str] = &[
    "comb.f_r",
    "comb.lambda0_nm",
    "comb.width",
    "grid.oversampling",
    "grid.t_sig",
    "dispersion.kinds",
    "dispersion.m",
    "dispersion.table",
    "noise.enabled",
    "noise.term",
    "noise.f_low",
    "analysis.offsets",
    "sweep.ratios",
    "sweep.widths",
    "offsets.widths",
    "offsets.oversampling",
    "seeds.count",
    "seeds.master",
    "run.output_dir",
    "run.memory_budget",
    "run.engine",
];

/// Settings before validation, in file order. Later entries win, except
/// `noise.term`, which accumulates.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: Vec<(String, Value, usize)>,
    source: String,
}

impl RawConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let content = strip_comment(line).trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config {
                path: source.to_string(),
                line: lineno,
                message,
            };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(err(format!("unknown key `{key}`")));
            }
            let doc: toml::Table =
                format!("v = {}", value.trim())
                    .parse()
                    .map_err(|e: toml::de::Error| {
                        err(format!("bad value for `{key}`: {}", e.message()))
                    })?;
            entries.push((key.to_string(), doc["v"].clone(), lineno));
        }
        Ok(Self {
            entries,
            source: source.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Adds a setting that overrides anything parsed so far.
    pub fn set(&mut self, key: &str, value: Value) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config {
                path: "<flags>".into(),
                line: 0,
                message: format!("unknown key `{key}`"),
            });
        }
        if key == "noise.term" {
            // a flag term replaces the whole profile
            self.entries.retain(|e| e.0 != "noise.term");
        }
        self.entries.push((key.to_string(), value, 0));
        Ok(())
    }

    /// Applies every setting to the defaults and validates the result.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        let mut f_r = cfg.comb.f_r();
        let mut lambda0 = cfg.comb.lambda0();
        let mut width = cfg.comb.width();
        let mut kinds: Option<(Vec<String>, usize)> = None;
        let mut table: Option<(PathBuf, usize)> = None;
        let mut noise_enabled = true;
        let mut terms: Vec<NoiseTerm> = Vec::new();
        let mut f_low: Option<f64> = None;

        for (key, value, line) in &self.entries {
            let err = |message: String| Error::Config {
                path: self.source.clone(),
                line: *line,
                message: format!("`{key}`: {message}"),
            };
            match key.as_str() {
                "comb.f_r" => f_r = float(value).map_err(err)?,
                "comb.lambda0_nm" => lambda0 = float(value).map_err(err)? / 1e9,
                "comb.width" => width = float(value).map_err(err)?,
                "grid.oversampling" => cfg.oversampling = uint(value).map_err(err)? as u32,
                "grid.t_sig" => cfg.t_sig = float(value).map_err(err)?,
                "dispersion.kinds" => {
                    let list = array(value).map_err(&err)?;
                    let names = list
                        .iter()
                        .map(|v| {
                            v.as_str()
                                .map(str::to_string)
                                .ok_or("expected strings".to_string())
                        })
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(&err)?;
                    kinds = Some((names, *line));
                }
                "dispersion.m" => cfg.upconversion = uint(value).map_err(err)? as u32,
                "dispersion.table" => {
                    let s = value
                        .as_str()
                        .ok_or("expected a path string".to_string())
                        .map_err(err)?;
                    table = Some((PathBuf::from(s), *line));
                }
                "noise.enabled" => {
                    noise_enabled = value
                        .as_bool()
                        .ok_or("expected true or false".to_string())
                        .map_err(err)?
                }
                "noise.term" => terms.push(term(value).map_err(err)?),
                "noise.f_low" => f_low = Some(float(value).map_err(err)?),
                "analysis.offsets" => cfg.offsets = floats(value).map_err(err)?,
                "sweep.ratios" => {
                    cfg.oversampling_ratios = floats(value)
                        .and_then(|v| {
                            v.into_iter()
                                .map(as_uint)
                                .collect::<std::result::Result<Vec<_>, _>>()
                        })
                        .map_err(err)?
                        .into_iter()
                        .map(|x| x as u32)
                        .collect()
                }
                "sweep.widths" => cfg.widths = floats(value).map_err(err)?,
                "offsets.widths" => cfg.offsets_widths = floats(value).map_err(err)?,
                "offsets.oversampling" => {
                    cfg.offsets_oversampling = uint(value).map_err(err)? as u32
                }
                "seeds.count" => cfg.seeds = uint(value).map_err(err)? as u32,
                "seeds.master" => cfg.master_seed = uint(value).map_err(err)?,
                "run.output_dir" => {
                    cfg.output_dir = PathBuf::from(
                        value
                            .as_str()
                            .ok_or("expected a path string".to_string())
                            .map_err(err)?,
                    )
                }
                "run.memory_budget" => cfg.memory_budget = uint(value).map_err(err)?,
                "run.engine" => {
                    let s = value
                        .as_str()
                        .ok_or("expected a string".to_string())
                        .map_err(&err)?;
                    cfg.engine = match s {
                        "auto" => None,
                        other => Some(other.parse().map_err(|e: Error| err(e.to_string()))?),
                    };
                }
                _ => unreachable!("keys are checked on insertion"),
            }
        }

        let general = |e: Error| Error::Config {
            path: self.source.clone(),
            line: 0,
            message: e.to_string(),
        };
        cfg.comb = crate::model::CombSpec::new(f_r, lambda0, width).map_err(general)?;
        let loaded_table = match &table {
            Some((path, line)) => Some(DispersionTable::load(path).map_err(|e| Error::Config {
                path: self.source.clone(),
                line: *line,
                message: format!("dispersion table: {e}"),
            })?),
            None => None,
        };
        if let Some((names, line)) = kinds {
            cfg.kinds = names
                .iter()
                .map(|n| match n.as_str() {
                    "ideal" => Ok(KindChoice::Ideal),
                    "linear" => Ok(KindChoice::Linear),
                    "constant" => Ok(KindChoice::Constant),
                    "tabulated" => loaded_table
                        .clone()
                        .map(KindChoice::Tabulated)
                        .ok_or_else(|| "`tabulated` needs dispersion.table".to_string()),
                    other => Err(format!("unknown dispersion kind `{other}`")),
                })
                .collect::<std::result::Result<_, _>>()
                .map_err(|message| Error::Config {
                    path: self.source.clone(),
                    line,
                    message,
                })?;
        }
        cfg.noise = if !noise_enabled {
            None
        } else if terms.is_empty() {
            let d = default_noise_profile();
            Some(NoiseProfile::new(d.terms().to_vec(), f_low).map_err(general)?)
        } else {
            Some(NoiseProfile::new(terms, f_low).map_err(general)?)
        };
        cfg.validate().map_err(general)?;
        Ok(cfg)
    }
}

fn strip_comment(line: &str) -> &str {
    // `#` inside a quoted string is part of the value
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn float(v: &Value) -> std::result::Result<f64, String> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(format!("expected a number, got {other}")),
    }
}

fn as_uint(x: f64) -> std::result::Result<u64, String> {
    if x >= 0.0 && x.fract() == 0.0 && x < u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(format!("expected a non-negative integer, got {x}"))
    }
}

fn uint(v: &Value) -> std::result::Result<u64, String> {
    as_uint(float(v)?)
}

fn array(v: &Value) -> std::result::Result<&Vec<Value>, String> {
    v.as_array()
        .ok_or_else(|| format!("expected a list, got {v}"))
}

fn floats(v: &Value) -> std::result::Result<Vec<f64>, String> {
    array(v)?.iter().map(float).collect()
}

fn term(v: &Value) -> std::result::Result<NoiseTerm, String> {
    let t = v
        .as_table()
        .ok_or_else(|| format!("expected {{ alpha = <int>, b = <float> }}, got {v}"))?;
    if let Some(k) = t.keys().find(|k| *k != "alpha" && *k != "b") {
        return Err(format!("unknown noise term field `{k}`"));
    }
    let alpha = t
        .get("alpha")
        .and_then(Value::as_integer)
        .ok_or("noise term needs an integer `alpha`")?;
    let b = float(t.get("b").ok_or("noise term needs `b`")?)?;
    Ok(NoiseTerm {
        alpha: alpha as i32,
        b,
    })
}

fn list(values: impl Iterator<Item = String>) -> String {
    format!("[{}]", values.collect::<Vec<_>>().join(", "))
}

fn number(v: f64) -> String {
    // TOML floats need a decimal point or exponent
    let s = format!("{v:e}");
    if s.contains('e') || s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}

impl ExperimentConfig {
    /// Canonical config text; parsing it reproduces this configuration.
    pub fn to_config_text(&self, table_path: Option<&Path>) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        put("comb.f_r", number(self.comb.f_r()));
        put("comb.lambda0_nm", number(self.comb.lambda0() * 1e9));
        put("comb.width", number(self.comb.width()));
        put("grid.oversampling", self.oversampling.to_string());
        put("grid.t_sig", number(self.t_sig));
        put(
            "dispersion.kinds",
            list(self.kinds.iter().map(|k| format!("\"{}\"", k.label()))),
        );
        put("dispersion.m", self.upconversion.to_string());
        if let Some(p) = table_path {
            put("dispersion.table", format!("\"{}\"", p.display()));
        }
        match &self.noise {
            None => put("noise.enabled", "false".into()),
            Some(noise) => {
                put("noise.enabled", "true".into());
                for t in noise.terms() {
                    put(
                        "noise.term",
                        format!("{{ alpha = {}, b = {} }}", t.alpha, number(t.b)),
                    );
                }
                if let Some(f) = noise.f_low() {
                    put("noise.f_low", number(f));
                }
            }
        }
        put(
            "analysis.offsets",
            list(self.offsets.iter().map(|v| number(*v))),
        );
        put(
            "sweep.ratios",
            list(self.oversampling_ratios.iter().map(|v| v.to_string())),
        );
        put("sweep.widths", list(self.widths.iter().map(|v| number(*v))));
        put(
            "offsets.widths",
            list(self.offsets_widths.iter().map(|v| number(*v))),
        );
        put(
            "offsets.oversampling",
            self.offsets_oversampling.to_string(),
        );
        put("seeds.count", self.seeds.to_string());
        put("seeds.master", self.master_seed.to_string());
        put(
            "run.output_dir",
            format!("\"{}\"", self.output_dir.display()),
        );
        put("run.memory_budget", self.memory_budget.to_string());
        put(
            "run.engine",
            match self.engine {
                None => "\"auto\"".into(),
                Some(crate::superposition::Engine::Time) => "\"time\"".into(),
                Some(crate::superposition::Engine::Spectral) => "\"spectral\"".into(),
            },
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_defaults() {
        let cfg = RawConfig::parse("", "empty").unwrap().resolve().unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn values_and_comments() {
        let text = "# scaled run\ncomb.f_r = 1e7   # Hz\ngrid.t_sig = 1e-4\nanalysis.offsets = [1e5]\n\
                    run.output_dir = \"a#b\"\nnoise.term = { alpha = 0, b = 1e-12 }\nnoise.term = { alpha = -2, b = 1.0 }\n";
        let cfg = RawConfig::parse(text, "t").unwrap().resolve().unwrap();
        assert_eq!(cfg.comb.f_r(), 1e7);
        assert_eq!(cfg.offsets, vec![1e5]);
        assert_eq!(cfg.output_dir, PathBuf::from("a#b"));
        let noise = cfg.noise.unwrap();
        assert_eq!(noise.terms().len(), 2);
        assert_eq!(noise.terms()[1].alpha, -2);
    }

    #[test]
    fn unknown_key_names_line() {
        let e = RawConfig::parse("comb.f_r = 1e8\ncomb.rate = 3\n", "c.conf").unwrap_err();
        match e {
            Error::Config { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("comb.rate"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn flag_overrides_file() {
        let mut raw = RawConfig::parse("grid.oversampling = 16\n", "f").unwrap();
        raw.set("grid.oversampling", Value::Integer(32)).unwrap();
        assert_eq!(raw.resolve().unwrap().oversampling, 32);
    }

    #[test]
    fn unsnapped_window_rejected() {
        let e = RawConfig::parse("grid.t_sig = 1.5e-8\n", "f")
            .unwrap()
            .resolve()
            .unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("whole number of carrier periods"), "{msg}");
        assert!(msg.contains("nearest valid value is 1e-8 s"), "{msg}");
    }

    #[test]
    fn rendered_text_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.noise = None;
        cfg.seeds = 3;
        cfg.offsets = vec![2.5e4];
        for c in [ExperimentConfig::default(), cfg] {
            let text = c.to_config_text(None);
            let back = RawConfig::parse(&text, "r").unwrap().resolve().unwrap();
            assert_eq!(back, c, "{text}");
        }
    }
}
