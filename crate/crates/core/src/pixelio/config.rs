//! Flat `key=value` configuration files.
//!
//! ```text
//! # census 5x5, 64 disparities
//! cost=census
//! win=5
//! dmax=64
//! uf=16
//! ```
//!
//! Keys: `cost`, `win`, `dmax`, `uf`, `p1`, `p2`, `lr_mode`, `lr_threshold`,
//! `median`, `median_win`, `freq_mhz`, `il`, plus `width`, `height`, `ii` and
//! `lr_overhead` (`auto` or a cycle count). Missing keys keep their defaults;
//! missing penalties are derived from the cost function.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::aggregate::AggregationParams;
use crate::cost::{CostFunction, CostKind};
use crate::error::{Error, Result};
use crate::hwmodel::PipelineConfig;
use crate::refine::LrMode;

const KEYS: [&str; 16] = [
    "cost",
    "win",
    "dmax",
    "uf",
    "p1",
    "p2",
    "lr_mode",
    "lr_threshold",
    "median",
    "median_win",
    "freq_mhz",
    "il",
    "width",
    "height",
    "ii",
    "lr_overhead",
];

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Some(true),
        "off" | "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

fn number<T: FromStr>(key: &str, value: &str, line: usize, errors: &mut Vec<String>) -> Option<T> {
    match value.parse() {
        Ok(v) => Some(v),
        Err(_) => {
            errors.push(format!(
                "line {line}: {key}: '{value}' is not a valid number"
            ));
            None
        }
    }
}

/// Parses and validates a configuration. Every problem is reported in one
/// [`Error::Validation`].
pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    let mut kind = CostKind::Census;
    let mut window = cfg.cost_fn.window;
    let (mut p1, mut p2) = (None, None);
    let mut errors = Vec::new();
    let mut seen = HashSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(format!("line {line}: expected key=value, got '{content}'"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            errors.push(format!("line {line}: unknown key '{key}'"));
            continue;
        }
        if !seen.insert(key.to_string()) {
            errors.push(format!("line {line}: duplicate key '{key}'"));
            continue;
        }
        let e = &mut errors;
        match key {
            "cost" => match value.parse() {
                Ok(k) => kind = k,
                Err(_) => e.push(format!(
                    "line {line}: cost: unknown cost function '{value}' (expected sad, zsad, census or rank)"
                )),
            },
            "win" => window = number(key, value, line, e).unwrap_or(window),
            "dmax" => cfg.d_max = number(key, value, line, e).unwrap_or(cfg.d_max),
            "uf" => cfg.uf = number(key, value, line, e).unwrap_or(cfg.uf),
            "p1" => p1 = number(key, value, line, e),
            "p2" => p2 = number(key, value, line, e),
            "lr_mode" => match value.parse::<LrMode>() {
                Ok(m) => cfg.refine.lr_mode = m,
                Err(_) => e.push(format!("line {line}: lr_mode: '{value}' is not nlr, lr1 or lr2")),
            },
            "lr_threshold" => {
                cfg.refine.lr_threshold = number(key, value, line, e).unwrap_or(cfg.refine.lr_threshold)
            }
            "median" => match parse_bool(value) {
                Some(b) => cfg.refine.median = b,
                None => e.push(format!("line {line}: median: '{value}' is not on or off")),
            },
            "median_win" => {
                cfg.refine.median_window = number(key, value, line, e).unwrap_or(cfg.refine.median_window)
            }
            "freq_mhz" => cfg.freq_mhz = number(key, value, line, e).unwrap_or(cfg.freq_mhz),
            "il" => cfg.il = number(key, value, line, e).unwrap_or(cfg.il),
            "width" => cfg.width = number(key, value, line, e).unwrap_or(cfg.width),
            "height" => cfg.height = number(key, value, line, e).unwrap_or(cfg.height),
            "ii" => cfg.ii = number(key, value, line, e).unwrap_or(cfg.ii),
            "lr_overhead" => {
                if value.eq_ignore_ascii_case("auto") {
                    cfg.lr_overhead = None;
                } else {
                    cfg.lr_overhead = number(key, value, line, e).or(cfg.lr_overhead);
                }
            }
            _ => unreachable!(),
        }
    }

    cfg.cost_fn = CostFunction { kind, window };
    let defaults = if cfg.cost_fn.violation().is_none() {
        AggregationParams::default_for(&cfg.cost_fn)
    } else {
        cfg.params
    };
    cfg.params = AggregationParams::unchecked(p1.unwrap_or(defaults.p1), p2.unwrap_or(defaults.p2));
    errors.extend(cfg.violations());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Validation(errors))
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Writes every key, so the text parses back to the same configuration.
pub fn to_config_string(cfg: &PipelineConfig) -> String {
    let mut s = String::new();
    let r = &cfg.refine;
    let _ = writeln!(s, "cost={}", cfg.cost_fn.kind);
    let _ = writeln!(s, "win={}", cfg.cost_fn.window);
    let _ = writeln!(s, "dmax={}", cfg.d_max);
    let _ = writeln!(s, "uf={}", cfg.uf);
    let _ = writeln!(s, "p1={}", cfg.params.p1);
    let _ = writeln!(s, "p2={}", cfg.params.p2);
    let _ = writeln!(s, "lr_mode={}", r.lr_mode);
    let _ = writeln!(s, "lr_threshold={}", r.lr_threshold);
    let _ = writeln!(s, "median={}", if r.median { "on" } else { "off" });
    let _ = writeln!(s, "median_win={}", r.median_window);
    let _ = writeln!(s, "freq_mhz={}", cfg.freq_mhz);
    let _ = writeln!(s, "il={}", cfg.il);
    let _ = writeln!(s, "width={}", cfg.width);
    let _ = writeln!(s, "height={}", cfg.height);
    let _ = writeln!(s, "ii={}", cfg.ii);
    match cfg.lr_overhead {
        Some(c) => {
            let _ = writeln!(s, "lr_overhead={c}");
        }
        None => s.push_str("lr_overhead=auto\n"),
    }
    s
}

pub fn save_config(cfg: &PipelineConfig, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_config_string(cfg))?;
    Ok(())
}
