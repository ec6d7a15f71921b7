//! Python bindings: fields, spectral operators, the renormed norm, the
//! convective term, thresholds and the four workflows.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use lab::certificate::{compute_alpha, compute_thresholds, AlphaMethod, ConstantsEstimate, ConstantsSettings};
use lab::config::RunConfig;
use lab::nonlinear::{convective_term, trilinear, ConvectiveMethod, Form};
use lab::operators::{fractional_apply, semigroup_apply, stokes_apply, SemigroupKind};
use lab::seeds::{SeedPlan, Stream};
use lab::workflow;
use lab::{snapshot, FourierField, Grid, LabError, RenormContext};

fn err(e: LabError) -> PyErr {
    match e {
        LabError::Config { .. } | LabError::InvalidArgument(_) | LabError::GridMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

fn context(n: usize, r: f64, omega: Option<f64>) -> PyResult<RenormContext> {
    RenormContext::new(Grid::new(n).map_err(err)?, r, omega).map_err(err)
}

/// A truncated, mean-zero, divergence-free velocity field on the torus.
#[pyclass(name = "FourierField", module = "nse_lab", frozen)]
struct PyField {
    inner: FourierField,
}

#[pymethods]
impl PyField {
    #[staticmethod]
    #[pyo3(signature = (n, seed, spectrum_decay = 1.0))]
    fn random(n: usize, seed: u64, spectrum_decay: f64) -> PyResult<Self> {
        let grid = Grid::new(n).map_err(err)?;
        Ok(Self {
            inner: FourierField::random(grid, seed, spectrum_decay).map_err(err)?,
        })
    }

    /// `amplitude · sin(k·x)`; the amplitude must be orthogonal to `k`.
    #[staticmethod]
    fn single_mode(n: usize, k: [i64; 3], amplitude: [f64; 3]) -> PyResult<Self> {
        let grid = Grid::new(n).map_err(err)?;
        Ok(Self {
            inner: FourierField::single_mode(grid, k, amplitude).map_err(err)?,
        })
    }

    #[staticmethod]
    fn zeros(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: FourierField::zeros(Grid::new(n).map_err(err)?),
        })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: snapshot::read_snapshot(&path).map_err(err)?,
        })
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        let manifest = snapshot::SnapshotManifest::describe(&self.inner, None).map_err(err)?;
        snapshot::write_snapshot(&path, &self.inner, &manifest).map_err(err)
    }

    /// NSFLD1 encoding.
    fn to_bytes(&self) -> Vec<u8> {
        snapshot::encode(&self.inner)
    }

    #[staticmethod]
    fn from_bytes(data: Vec<u8>) -> PyResult<Self> {
        Ok(Self {
            inner: snapshot::decode(&data).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.grid().n()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn inner_product(&self, other: &PyField) -> PyResult<f64> {
        if self.inner.grid() != other.inner.grid() {
            return Err(PyValueError::new_err("fields live on different grids"));
        }
        Ok(self.inner.inner(&other.inner))
    }

    fn sobolev_norm(&self, order: u32) -> PyResult<f64> {
        self.inner.sobolev_norm(order).map_err(err)
    }

    #[pyo3(signature = (r, omega = None))]
    fn renormed_norm(&self, r: f64, omega: Option<f64>) -> PyResult<f64> {
        let ctx = context(self.n(), r, omega)?;
        lab::renormed_norm(&self.inner, &ctx).map_err(err)
    }

    fn divergence_residual(&self) -> f64 {
        self.inner.divergence_residual()
    }

    fn scale(&self, s: f64) -> Self {
        Self {
            inner: self.inner.scale(s),
        }
    }

    fn __add__(&self, other: &PyField) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.axpy(1.0, &other.inner).map_err(err)?,
        })
    }

    fn __sub__(&self, other: &PyField) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.axpy(-1.0, &other.inner).map_err(err)?,
        })
    }

    fn stokes(&self) -> Self {
        Self {
            inner: stokes_apply(&self.inner),
        }
    }

    /// `kind` is `"T"`, `"S"` (with `omega`) or `"S_half"`.
    #[pyo3(signature = (t, kind = "T", omega = 0.5))]
    fn semigroup(&self, t: f64, kind: &str, omega: f64) -> PyResult<Self> {
        let kind = match kind {
            "T" => SemigroupKind::T,
            "S" => SemigroupKind::S { omega },
            "S_half" => SemigroupKind::SHalf,
            other => return Err(PyValueError::new_err(format!("unknown semigroup kind {other:?}"))),
        };
        Ok(Self {
            inner: semigroup_apply(&self.inner, t, kind).map_err(err)?,
        })
    }

    fn fractional(&self, z: f64) -> PyResult<Self> {
        Ok(Self {
            inner: fractional_apply(&self.inner, z).map_err(err)?,
        })
    }

    /// `P(u·∇)v` with `u = self`.
    #[pyo3(signature = (v, oracle = false))]
    fn convect(&self, v: &PyField, oracle: bool) -> PyResult<Self> {
        let method = if oracle {
            ConvectiveMethod::ConvolutionOracle
        } else {
            ConvectiveMethod::Pseudospectral
        };
        Ok(Self {
            inner: convective_term(&self.inner, &v.inner, method).map_err(err)?,
        })
    }

    /// `⟨C(self, v), w⟩`, in the renormed inner product when `r` is given.
    #[pyo3(signature = (v, w, r = None, omega = None))]
    fn trilinear(&self, v: &PyField, w: &PyField, r: Option<f64>, omega: Option<f64>) -> PyResult<f64> {
        match r {
            None => trilinear(&self.inner, &v.inner, &w.inner, Form::Base).map_err(err),
            Some(r) => {
                let ctx = context(self.n(), r, omega)?;
                trilinear(&self.inner, &v.inner, &w.inner, Form::Renormed(&ctx)).map_err(err)
            }
        }
    }

    fn __repr__(&self) -> String {
        format!("FourierField(n={}, norm={:e})", self.n(), self.inner.norm())
    }
}

/// Reverse-Poincaré constant for `method` in `{"lemma7_construction", "sharp_spectral"}`.
#[pyfunction]
#[pyo3(signature = (n, r, method = "lemma7_construction", omega = None))]
fn alpha(n: usize, r: f64, method: &str, omega: Option<f64>) -> PyResult<f64> {
    let ctx = context(n, r, omega)?;
    let method = match method {
        "lemma7_construction" => AlphaMethod::Lemma7Construction,
        "sharp_spectral" => AlphaMethod::SharpSpectral,
        other => return Err(PyValueError::new_err(format!("unknown alpha method {other:?}"))),
    };
    Ok(compute_alpha(&ctx, method))
}

/// Constants and thresholds as a JSON document `{"constants": …, "thresholds": …}`.
#[pyfunction]
#[pyo3(signature = (nu, f_sup, n = 16, r = 0.001, seed = 1, samples = 200, spectrum_decay = 1.0))]
fn thresholds(nu: f64, f_sup: f64, n: usize, r: f64, seed: u64, samples: usize, spectrum_decay: f64) -> PyResult<String> {
    let ctx = context(n, r, None)?;
    let settings = ConstantsSettings {
        plan: SeedPlan::new(seed, Stream::TrilinearEstimate, samples),
        spectrum_decay,
        alpha_method: AlphaMethod::Lemma7Construction,
        c_scale: 1.0,
    };
    let consts = ConstantsEstimate::estimate(&ctx, &settings).map_err(err)?;
    let th = compute_thresholds(nu, f_sup, &consts, &ctx).map_err(err)?;
    json(&serde_json::json!({ "constants": consts, "thresholds": th }))
}

fn build_config(config: &str, overrides: Vec<String>) -> PyResult<RunConfig> {
    let mut cfg = RunConfig::parse(config).map_err(err)?;
    for o in &overrides {
        cfg.apply_override(o).map_err(err)?;
    }
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Canonical text of the default configuration.
#[pyfunction]
fn default_config() -> String {
    RunConfig::default().to_canonical()
}

/// Runs `certify`; returns `(report_json, exit_code)` and writes the report.
#[pyfunction]
#[pyo3(signature = (config = "", overrides = Vec::new()))]
fn certify(config: &str, overrides: Vec<String>) -> PyResult<(String, i32)> {
    let cfg = build_config(config, overrides)?;
    let out = workflow::cmd_certify(&cfg).map_err(err)?;
    Ok((json(&out.value)?, out.exit_code))
}

#[pyfunction]
#[pyo3(signature = (config = "", overrides = Vec::new()))]
fn verify(config: &str, overrides: Vec<String>) -> PyResult<(String, i32)> {
    let cfg = build_config(config, overrides)?;
    let out = workflow::cmd_verify(&cfg).map_err(err)?;
    Ok((json(&out.value)?, out.exit_code))
}

#[pyfunction]
#[pyo3(signature = (config = "", overrides = Vec::new()))]
fn simulate(config: &str, overrides: Vec<String>) -> PyResult<(String, i32)> {
    let cfg = build_config(config, overrides)?;
    let out = workflow::cmd_simulate(&cfg).map_err(err)?;
    Ok((json(&out.value)?, out.exit_code))
}

#[pyfunction]
#[pyo3(signature = (config = "", overrides = Vec::new()))]
fn sweep(config: &str, overrides: Vec<String>) -> PyResult<(String, i32)> {
    let cfg = build_config(config, overrides)?;
    let out = workflow::cmd_sweep(&cfg).map_err(err)?;
    Ok((json(&out.value)?, out.exit_code))
}

#[pymodule]
fn nse_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(alpha, m)?)?;
    m.add_function(wrap_pyfunction!(thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
