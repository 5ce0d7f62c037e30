//! Flat key-value scenario configuration files.
//!
//! The schema is a subset of TOML: one `key = value` per line, `#` comments,
//! no tables. Every key is optional; missing keys fall back to the defaults of
//! the selected scenario. Matrices are written as 4-element row-major arrays.
//!
//! ```toml
//! scenario = "obstacle_avoidance"
//! lambda_a = 0.25          # lambda_d is derived
//! q_d = [36.0, 0.0, 0.0, 20.0]
//! ```

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use isc_core::sim::{ScenarioConfig, ScenarioKind};
use isc_core::{DriverKind, SwitchingConfig};
use nalgebra::DMatrix;
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: cannot read: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{origin}: {source}")]
    Invalid {
        origin: String,
        source: isc_core::Error,
    },
}

/// A number that accepts TOML integers as well as floats.
#[derive(Debug, Clone, Copy)]
struct Num(f64);

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    duration: Option<Num>,
    t_s: Option<Num>,
    horizon: Option<usize>,

    cf: Option<Num>,
    cr: Option<Num>,
    a: Option<Num>,
    b: Option<Num>,
    m: Option<Num>,
    iz: Option<Num>,
    steering_ratio: Option<Num>,
    u_long: Option<Num>,

    q_a: Option<[Num; 4]>,
    r_a: Option<Num>,
    q_d: Option<[Num; 4]>,
    r_d: Option<Num>,
    lambda_d: Option<Num>,
    lambda_a: Option<Num>,
    driver: Option<String>,

    amplitude: Option<Num>,
    period: Option<Num>,
    offset: Option<Num>,
    lane_change_start: Option<Num>,
    lane_change_duration: Option<Num>,

    switching: Option<bool>,
    window: Option<usize>,
    delta_star: Option<Num>,
    lambda_d_high: Option<Num>,
    lambda_d_low: Option<Num>,
    q_d_hat: Option<[Num; 4]>,
    r_d_hat: Option<Num>,
    clear_on_switch: Option<bool>,
}

const SWITCHING_KEYS: [&str; 7] = [
    "window",
    "delta_star",
    "lambda_d_high",
    "lambda_d_low",
    "q_d_hat",
    "r_d_hat",
    "clear_on_switch",
];

fn matrix(v: [Num; 4]) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &v.map(|n| n.0))
}

fn set(dst: &mut f64, v: Option<Num>) {
    if let Some(Num(x)) = v {
        *dst = x;
    }
}

/// 1-based line and column of byte `offset` in `text`.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Line on which `key` is assigned, if any.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        l.trim_start()
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
}

struct Parser<'a> {
    text: &'a str,
    origin: &'a str,
}

impl Parser<'_> {
    fn at_key(&self, key: &str, message: String) -> ConfigError {
        ConfigError::Parse {
            origin: self.origin.to_string(),
            line: key_line(self.text, key).map_or(0, |l| l + 1),
            column: 1,
            message,
        }
    }

    fn parse(&self, scenario: Option<ScenarioKind>) -> Result<ScenarioConfig, ConfigError> {
        let raw: RawConfig = toml::from_str(self.text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(self.text, s.start));
            ConfigError::Parse {
                origin: self.origin.to_string(),
                line,
                column,
                message: e.message().to_string(),
            }
        })?;

        let file_kind = raw
            .scenario
            .as_deref()
            .map(|s| s.parse::<ScenarioKind>())
            .transpose()
            .map_err(|e| self.at_key("scenario", e.to_string()))?;
        let kind = match (file_kind, scenario) {
            (Some(f), Some(s)) if f != s => {
                return Err(self.at_key(
                    "scenario",
                    format!("config selects `{f}` but `{s}` was requested"),
                ))
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => ScenarioKind::PathFollowing,
        };

        let mut c = ScenarioConfig::defaults(kind);
        set(&mut c.duration, raw.duration);
        set(&mut c.t_s, raw.t_s);
        if let Some(n) = raw.horizon {
            c.horizon = n;
        }

        let v = &mut c.vehicle;
        set(&mut v.cf, raw.cf);
        set(&mut v.cr, raw.cr);
        set(&mut v.a, raw.a);
        set(&mut v.b, raw.b);
        set(&mut v.m, raw.m);
        set(&mut v.iz, raw.iz);
        set(&mut v.steering_ratio, raw.steering_ratio);
        set(&mut v.u_long, raw.u_long);

        if let Some(q) = raw.q_a {
            c.q_a = matrix(q);
        }
        set(&mut c.r_a, raw.r_a);
        if let Some(q) = raw.q_d {
            c.q_d = matrix(q);
        }
        set(&mut c.r_d, raw.r_d);
        match (raw.lambda_d, raw.lambda_a) {
            (Some(d), Some(a)) => {
                c.lambda_d = d.0;
                c.lambda_a = a.0;
            }
            (Some(d), None) => {
                c.lambda_d = d.0;
                c.lambda_a = 1.0 - d.0;
            }
            (None, Some(a)) => {
                c.lambda_a = a.0;
                c.lambda_d = 1.0 - a.0;
            }
            (None, None) => {}
        }
        if let Some(d) = raw.driver.as_deref() {
            c.driver = d
                .parse::<DriverKind>()
                .map_err(|e| self.at_key("driver", e.to_string()))?;
        }

        let p = &mut c.path;
        set(&mut p.amplitude, raw.amplitude);
        set(&mut p.period, raw.period);
        set(&mut p.offset, raw.offset);
        set(&mut p.lane_change_start, raw.lane_change_start);
        set(&mut p.lane_change_duration, raw.lane_change_duration);

        let switching = raw.switching.unwrap_or(c.switching.is_some());
        if switching {
            let mut sw = c.switching.take().unwrap_or_default();
            if let Some(w) = raw.window {
                sw.window = w;
            }
            set(&mut sw.delta_star, raw.delta_star);
            set(&mut sw.lambda_d_high, raw.lambda_d_high);
            set(&mut sw.lambda_d_low, raw.lambda_d_low);
            if let Some(q) = raw.q_d_hat {
                sw.q_d_hat = matrix(q);
            }
            set(&mut sw.r_d_hat, raw.r_d_hat);
            if let Some(b) = raw.clear_on_switch {
                sw.clear_on_switch = b;
            }
            c.switching = Some(sw);
        } else {
            if let Some(key) = SWITCHING_KEYS
                .into_iter()
                .find(|k| key_line(self.text, k).is_some())
            {
                return Err(self.at_key(key, format!("`{key}` requires `switching = true`")));
            }
            c.switching = None;
        }

        c.validate().map_err(|source| ConfigError::Invalid {
            origin: self.origin.to_string(),
            source,
        })?;
        Ok(c)
    }
}

/// Parses config text. `scenario` selects the defaults when the text has no
/// `scenario` key; if both are present they must agree.
pub fn parse_config(
    text: &str,
    origin: &str,
    scenario: Option<ScenarioKind>,
) -> Result<ScenarioConfig, ConfigError> {
    Parser { text, origin }.parse(scenario)
}

pub fn load_config(
    path: &Path,
    scenario: Option<ScenarioKind>,
) -> Result<ScenarioConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, &path.display().to_string(), scenario)
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn mat(m: &DMatrix<f64>) -> String {
    let v: Vec<String> = m.transpose().iter().map(|x| num(*x)).collect();
    format!("[{}]", v.join(", "))
}

/// Writes every field of `c`; `parse_config` of the result reproduces `c`.
pub fn write_config(c: &ScenarioConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("scenario", format!("\"{}\"", c.kind));
    kv("duration", num(c.duration));
    kv("t_s", num(c.t_s));
    kv("horizon", c.horizon.to_string());

    let v = &c.vehicle;
    kv("cf", num(v.cf));
    kv("cr", num(v.cr));
    kv("a", num(v.a));
    kv("b", num(v.b));
    kv("m", num(v.m));
    kv("iz", num(v.iz));
    kv("steering_ratio", num(v.steering_ratio));
    kv("u_long", num(v.u_long));

    kv("q_a", mat(&c.q_a));
    kv("r_a", num(c.r_a));
    kv("q_d", mat(&c.q_d));
    kv("r_d", num(c.r_d));
    kv("lambda_d", num(c.lambda_d));
    kv("lambda_a", num(c.lambda_a));
    kv("driver", format!("\"{}\"", c.driver));

    let p = &c.path;
    kv("amplitude", num(p.amplitude));
    kv("period", num(p.period));
    kv("offset", num(p.offset));
    kv("lane_change_start", num(p.lane_change_start));
    kv("lane_change_duration", num(p.lane_change_duration));

    match &c.switching {
        Some(sw) => {
            let SwitchingConfig {
                window,
                delta_star,
                lambda_d_high,
                lambda_d_low,
                q_d_hat,
                r_d_hat,
                clear_on_switch,
            } = sw;
            kv("switching", "true".into());
            kv("window", window.to_string());
            kv("delta_star", num(*delta_star));
            kv("lambda_d_high", num(*lambda_d_high));
            kv("lambda_d_low", num(*lambda_d_low));
            kv("q_d_hat", mat(q_d_hat));
            kv("r_d_hat", num(*r_d_hat));
            kv("clear_on_switch", clear_on_switch.to_string());
        }
        None => kv("switching", "false".into()),
    }
    s
}
