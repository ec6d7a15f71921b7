//! Run configuration: a flat `key = value` text file.
//!
//! Blank lines and `#` comments are ignored. Every key is optional and
//! falls back to its default; unknown or repeated keys are errors. Optional
//! values accept `auto`, and list values are comma separated.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::certificate::AlphaMethod;
use crate::error::{LabError, Result};
use crate::evolution::ForcingKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Random field scaled to `init_scale · u₊/2` in `‖·‖_{H,1}`.
    Random,
    /// The shear mode `e_x sin(z)`, scaled the same way.
    SingleMode,
    /// NSFLD1 file at `init_path`, used as stored.
    Snapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Toggle {
    Auto,
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub nu: f64,
    pub r: f64,
    /// Defaults to `λ₁/2`.
    pub omega: Option<f64>,
    pub alpha_method: AlphaMethod,
    /// Multiplies the estimated trilinear constant (fault injection).
    pub c_scale: f64,
    pub spectrum_decay: f64,
    pub forcing_kind: ForcingKind,
    /// `sup_t ‖f(t)‖_{H,1}`; the forcing base is rescaled to this norm.
    pub forcing_amplitude: f64,
    pub forcing_theta: f64,
    pub forcing_d: f64,
    /// Defaults to a sub-seed of `seed`.
    pub forcing_seed: Option<u64>,
    pub seed: u64,
    pub samples_constants: usize,
    pub samples_verify: usize,
    pub samples_zero_dissipative: usize,
    pub samples_strong_dissipative: usize,
    pub samples_continuity: usize,
    pub samples_holder: usize,
    pub samples_reverse_poincare: usize,
    pub samples_smoothing: usize,
    pub samples_oracle: usize,
    /// Convolution-oracle check in `verify`; `auto` runs it for `n <= 8`.
    pub oracle_check: Toggle,
    pub dt: f64,
    pub t_end: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub init_kind: InitKind,
    pub init_scale: f64,
    pub init_path: Option<PathBuf>,
    /// Snapshot every this many steps; 0 disables.
    pub snapshot_every: usize,
    pub out_dir: PathBuf,
    pub sweep_nu: Vec<f64>,
    pub sweep_r: Vec<f64>,
    pub sweep_f: Vec<f64>,
    pub sweep_n: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 16,
            nu: 1.0,
            r: 0.001,
            omega: None,
            alpha_method: AlphaMethod::Lemma7Construction,
            c_scale: 1.0,
            spectrum_decay: 1.0,
            forcing_kind: ForcingKind::HolderModulated,
            forcing_amplitude: 0.01,
            forcing_theta: 0.5,
            forcing_d: 1.0,
            forcing_seed: None,
            seed: 1,
            samples_constants: 200,
            samples_verify: 200,
            samples_zero_dissipative: 100,
            samples_strong_dissipative: 100,
            samples_continuity: 10,
            samples_holder: 100,
            samples_reverse_poincare: 100,
            samples_smoothing: 100,
            samples_oracle: 50,
            oracle_check: Toggle::Auto,
            dt: 0.05,
            t_end: 10.0,
            tol: 1e-10,
            max_iter: 50,
            init_kind: InitKind::Random,
            init_scale: 0.9,
            init_path: None,
            snapshot_every: 0,
            out_dir: PathBuf::from("out"),
            sweep_nu: Vec::new(),
            sweep_r: Vec::new(),
            sweep_f: Vec::new(),
            sweep_n: Vec::new(),
        }
    }
}

fn bad(key: &str, message: impl Into<String>) -> LabError {
    LabError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| bad(key, format!("cannot parse {value:?}: {e}")))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: Display,
{
    if value == "auto" {
        Ok(None)
    } else {
        parse_num(key, value).map(Some)
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

fn parse_enum<T: for<'de> Deserialize<'de>>(key: &str, value: &str, choices: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| bad(key, format!("expected one of {choices}, got {value:?}")))
}

fn enum_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => unreachable!("unit variants serialize as strings"),
    }
}

fn show_opt<T: Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), |x| x.to_string())
}

fn show_list<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub const KEYS: &[&str] = &[
    "n",
    "nu",
    "r",
    "omega",
    "alpha_method",
    "c_scale",
    "spectrum_decay",
    "forcing_kind",
    "forcing_amplitude",
    "forcing_theta",
    "forcing_d",
    "forcing_seed",
    "seed",
    "samples_constants",
    "samples_verify",
    "samples_zero_dissipative",
    "samples_strong_dissipative",
    "samples_continuity",
    "samples_holder",
    "samples_reverse_poincare",
    "samples_smoothing",
    "samples_oracle",
    "oracle_check",
    "dt",
    "t_end",
    "tol",
    "max_iter",
    "init_kind",
    "init_scale",
    "init_path",
    "snapshot_every",
    "out_dir",
    "sweep_nu",
    "sweep_r",
    "sweep_f",
    "sweep_n",
];

impl RunConfig {
    /// Assigns one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "n" => self.n = parse_num(key, v)?,
            "nu" => self.nu = parse_num(key, v)?,
            "r" => self.r = parse_num(key, v)?,
            "omega" => self.omega = parse_opt(key, v)?,
            "alpha_method" => {
                self.alpha_method = parse_enum(key, v, "lemma7_construction, sharp_spectral")?
            }
            "c_scale" => self.c_scale = parse_num(key, v)?,
            "spectrum_decay" => self.spectrum_decay = parse_num(key, v)?,
            "forcing_kind" => {
                self.forcing_kind = parse_enum(key, v, "zero, constant_field, holder_modulated")?
            }
            "forcing_amplitude" => self.forcing_amplitude = parse_num(key, v)?,
            "forcing_theta" => self.forcing_theta = parse_num(key, v)?,
            "forcing_d" => self.forcing_d = parse_num(key, v)?,
            "forcing_seed" => self.forcing_seed = parse_opt(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "samples_constants" => self.samples_constants = parse_num(key, v)?,
            "samples_verify" => self.samples_verify = parse_num(key, v)?,
            "samples_zero_dissipative" => self.samples_zero_dissipative = parse_num(key, v)?,
            "samples_strong_dissipative" => self.samples_strong_dissipative = parse_num(key, v)?,
            "samples_continuity" => self.samples_continuity = parse_num(key, v)?,
            "samples_holder" => self.samples_holder = parse_num(key, v)?,
            "samples_reverse_poincare" => self.samples_reverse_poincare = parse_num(key, v)?,
            "samples_smoothing" => self.samples_smoothing = parse_num(key, v)?,
            "samples_oracle" => self.samples_oracle = parse_num(key, v)?,
            "oracle_check" => self.oracle_check = parse_enum(key, v, "auto, on, off")?,
            "dt" => self.dt = parse_num(key, v)?,
            "t_end" => self.t_end = parse_num(key, v)?,
            "tol" => self.tol = parse_num(key, v)?,
            "max_iter" => self.max_iter = parse_num(key, v)?,
            "init_kind" => self.init_kind = parse_enum(key, v, "random, single_mode, snapshot")?,
            "init_scale" => self.init_scale = parse_num(key, v)?,
            "init_path" => {
                self.init_path = if v == "auto" || v.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(v))
                }
            }
            "snapshot_every" => self.snapshot_every = parse_num(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "sweep_nu" => self.sweep_nu = parse_list(key, v)?,
            "sweep_r" => self.sweep_r = parse_list(key, v)?,
            "sweep_f" => self.sweep_f = parse_list(key, v)?,
            "sweep_n" => self.sweep_n = parse_list(key, v)?,
            _ => return Err(bad(key, "unknown key")),
        }
        Ok(())
    }

    /// Parses config text on top of the defaults, without validating.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                bad(line, format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(bad(key, format!("line {}: repeated key", lineno + 1)));
            }
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies one `KEY=VALUE` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| bad(assignment, "override must be KEY=VALUE"))?;
        self.set(key.trim(), value)
    }

    /// Every key with its canonical text value, in [`KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let values = vec![
            self.n.to_string(),
            self.nu.to_string(),
            self.r.to_string(),
            show_opt(&self.omega),
            enum_name(&self.alpha_method),
            self.c_scale.to_string(),
            self.spectrum_decay.to_string(),
            enum_name(&self.forcing_kind),
            self.forcing_amplitude.to_string(),
            self.forcing_theta.to_string(),
            self.forcing_d.to_string(),
            show_opt(&self.forcing_seed),
            self.seed.to_string(),
            self.samples_constants.to_string(),
            self.samples_verify.to_string(),
            self.samples_zero_dissipative.to_string(),
            self.samples_strong_dissipative.to_string(),
            self.samples_continuity.to_string(),
            self.samples_holder.to_string(),
            self.samples_reverse_poincare.to_string(),
            self.samples_smoothing.to_string(),
            self.samples_oracle.to_string(),
            enum_name(&self.oracle_check),
            self.dt.to_string(),
            self.t_end.to_string(),
            self.tol.to_string(),
            self.max_iter.to_string(),
            enum_name(&self.init_kind),
            self.init_scale.to_string(),
            self.init_path
                .as_ref()
                .map_or_else(|| "auto".to_string(), |p| p.display().to_string()),
            self.snapshot_every.to_string(),
            self.out_dir.display().to_string(),
            show_list(&self.sweep_nu),
            show_list(&self.sweep_r),
            show_list(&self.sweep_f),
            show_list(&self.sweep_n),
        ];
        KEYS.iter().copied().zip(values).collect()
    }

    /// Canonical text: every key, one per line, in [`KEYS`] order.
    pub fn to_canonical(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Checks every physical and numerical parameter; the error names the
    /// offending key.
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(bad(key, format!("must be a finite positive number, got {v}")))
            }
        };
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return Err(bad("n", format!("must be an even integer >= 4, got {}", self.n)));
        }
        positive("nu", self.nu)?;
        positive("r", self.r)?;
        if let Some(w) = self.omega {
            if !(w > 0.0 && w < 1.0) {
                return Err(bad("omega", format!("must lie in (0, λ₁) = (0, 1), got {w}")));
            }
        }
        positive("c_scale", self.c_scale)?;
        if !(self.spectrum_decay >= 0.0) {
            return Err(bad("spectrum_decay", "must be >= 0"));
        }
        if !(self.forcing_amplitude >= 0.0) || !self.forcing_amplitude.is_finite() {
            return Err(bad("forcing_amplitude", "must be a finite number >= 0"));
        }
        if !(self.forcing_theta > 0.0 && self.forcing_theta < 1.0) {
            return Err(bad("forcing_theta", "must lie in (0, 1)"));
        }
        positive("forcing_d", self.forcing_d)?;
        for (key, count) in [
            ("samples_constants", self.samples_constants),
            ("samples_verify", self.samples_verify),
            ("samples_zero_dissipative", self.samples_zero_dissipative),
            ("samples_strong_dissipative", self.samples_strong_dissipative),
            ("samples_continuity", self.samples_continuity),
            ("samples_holder", self.samples_holder),
            ("samples_reverse_poincare", self.samples_reverse_poincare),
            ("samples_smoothing", self.samples_smoothing),
            ("samples_oracle", self.samples_oracle),
            ("max_iter", self.max_iter),
        ] {
            if count == 0 {
                return Err(bad(key, "must be >= 1"));
            }
        }
        positive("dt", self.dt)?;
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(bad("t_end", "must be a finite number >= 0"));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(bad("t_end", format!("must be a multiple of dt = {}", self.dt)));
        }
        positive("tol", self.tol)?;
        positive("init_scale", self.init_scale)?;
        if self.init_kind == InitKind::Snapshot && self.init_path.is_none() {
            return Err(bad("init_path", "required when init_kind = snapshot"));
        }
        for &v in &self.sweep_nu {
            positive("sweep_nu", v)?;
        }
        for &v in &self.sweep_r {
            positive("sweep_r", v)?;
        }
        for &v in &self.sweep_f {
            if !(v >= 0.0) {
                return Err(bad("sweep_f", format!("amplitudes must be >= 0, got {v}")));
            }
        }
        for &v in &self.sweep_n {
            if v < 4 || v % 2 != 0 {
                return Err(bad("sweep_n", format!("grid sizes must be even and >= 4, got {v}")));
            }
        }
        Ok(())
    }

    pub fn oracle_enabled(&self) -> bool {
        match self.oracle_check {
            Toggle::Auto => self.n <= 8,
            Toggle::On => true,
            Toggle::Off => false,
        }
    }
}

/// Axes of a threshold sweep; an empty config axis falls back to the
/// scalar value, so every axis is nonempty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub template: RunConfig,
    pub nu: Vec<f64>,
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    pub n: Vec<usize>,
}

impl SweepSpec {
    pub fn from_config(cfg: &RunConfig) -> Self {
        let or = |axis: &Vec<f64>, v: f64| if axis.is_empty() { vec![v] } else { axis.clone() };
        Self {
            template: cfg.clone(),
            nu: or(&cfg.sweep_nu, cfg.nu),
            r: or(&cfg.sweep_r, cfg.r),
            f: or(&cfg.sweep_f, cfg.forcing_amplitude),
            n: if cfg.sweep_n.is_empty() {
                vec![cfg.n]
            } else {
                cfg.sweep_n.clone()
            },
        }
    }

    pub fn cell_count(&self) -> usize {
        self.nu.len() * self.r.len() * self.f.len() * self.n.len()
    }

    /// Cell configs in row order: `n` slowest, then `r`, `f`, `nu`.
    pub fn cells(&self) -> Vec<RunConfig> {
        let mut out = Vec::with_capacity(self.cell_count());
        for &n in &self.n {
            for &r in &self.r {
                for &f in &self.f {
                    for &nu in &self.nu {
                        let mut c = self.template.clone();
                        c.n = n;
                        c.r = r;
                        c.forcing_amplitude = f;
                        c.nu = nu;
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}
