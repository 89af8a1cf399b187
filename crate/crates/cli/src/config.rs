//! Declarative run configuration.
//!
//! A config is a TOML document with the sections `equations`, `mesh`,
//! `solver`, `time`, `callbacks` and `output`. Every key has a default, and
//! unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use treedg::dg::{DgSolver, IndicatorParams, LimiterThresholds, VolumeIntegral};
use treedg::equations::{EquationSet, NumericalFlux, BUILTIN_INITIAL_CONDITIONS};
use treedg::mesh::MAX_LEVEL;
use treedg::timeint::AmrSettings;

use crate::error::{CliError, CliResult};

pub const EQUATION_KINDS: [&str; 5] = [
    "linear_advection_1d",
    "linear_advection_2d",
    "burgers_1d",
    "compressible_euler_1d",
    "compressible_euler_2d",
];

pub const VOLUME_INTEGRALS: [&str; 3] = ["weak_form", "flux_differencing", "shock_capturing"];

pub const OUTPUT_FORMATS: [&str; 3] = ["vtk", "csv", "ppm"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub equations: EquationsSection,
    pub mesh: MeshSection,
    pub solver: SolverSection,
    pub time: TimeSection,
    pub callbacks: CallbacksSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquationsSection {
    pub kind: String,
    /// Advection velocity, one entry per dimension. Empty means 1 on every axis.
    pub advection_velocity: Vec<f64>,
    pub gamma: f64,
    pub initial_condition: String,
}

impl Default for EquationsSection {
    fn default() -> Self {
        Self {
            kind: "linear_advection_1d".into(),
            advection_velocity: Vec::new(),
            gamma: 1.4,
            initial_condition: "convergence_test".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    pub coordinates_min: Vec<f64>,
    pub coordinates_max: Vec<f64>,
    pub initial_refinement_level: usize,
    pub n_cells_max: usize,
    pub periodicity: Vec<bool>,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self {
            coordinates_min: vec![-1.0],
            coordinates_max: vec![1.0],
            initial_refinement_level: 4,
            n_cells_max: 100_000,
            periodicity: vec![true],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub polydeg: usize,
    pub surface_flux: String,
    pub volume_integral: String,
    pub volume_flux: String,
    pub fv_flux: String,
    pub alpha_max: f64,
    pub alpha_min_fraction: f64,
    pub threshold_factor: f64,
    pub sharpness: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let indicator = IndicatorParams::default();
        Self {
            polydeg: 3,
            surface_flux: NumericalFlux::LaxFriedrichs.name().into(),
            volume_integral: "weak_form".into(),
            volume_flux: NumericalFlux::EntropyConservative.name().into(),
            fv_flux: NumericalFlux::LaxFriedrichs.name().into(),
            alpha_max: indicator.alpha_max,
            alpha_min_fraction: indicator.alpha_min_fraction,
            threshold_factor: indicator.threshold_factor,
            sharpness: indicator.sharpness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub t_start: f64,
    pub t_end: f64,
    pub cfl: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            t_end: 1.0,
            cfl: 0.5,
        }
    }
}

/// Intervals count time steps; 0 disables the callback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CallbacksSection {
    pub analysis_interval: usize,
    pub save_interval: usize,
    pub alive_interval: usize,
    pub positivity: bool,
    pub positivity_rho_min: f64,
    pub positivity_p_min: f64,
    pub amr: bool,
    pub amr_interval: usize,
    pub amr_min_level: usize,
    pub amr_max_level: usize,
    pub amr_refine_fraction: f64,
    pub amr_coarsen_fraction: f64,
    pub amr_adapt_initial: bool,
}

impl Default for CallbacksSection {
    fn default() -> Self {
        let amr = AmrSettings::default();
        let limiter = LimiterThresholds::default();
        Self {
            analysis_interval: 100,
            save_interval: 0,
            alive_interval: 0,
            positivity: false,
            positivity_rho_min: limiter.rho_min,
            positivity_p_min: limiter.p_min,
            amr: false,
            amr_interval: amr.interval,
            amr_min_level: amr.min_level,
            amr_max_level: amr.max_level,
            amr_refine_fraction: amr.refine_fraction,
            amr_coarsen_fraction: amr.coarsen_fraction,
            amr_adapt_initial: amr.adapt_initial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: String,
    pub formats: Vec<String>,
    /// Conserved or primitive variable shown in PPM images.
    pub ppm_variable: String,
    pub ppm_resolution: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            formats: vec!["vtk".into(), "csv".into()],
            ppm_variable: String::new(),
            ppm_resolution: 256,
        }
    }
}

fn invalid(key: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {message}"))
}

fn one_of(key: &str, value: &str, allowed: &[&str]) -> CliResult<()> {
    if allowed.contains(&value) {
        Ok(())
    } else {
        Err(invalid(key, format!("unknown value '{value}', expected one of: {}", allowed.join(", "))))
    }
}

fn flux_names() -> Vec<&'static str> {
    NumericalFlux::ALL.iter().map(|f| f.name()).collect()
}

impl RunConfig {
    /// Parses and validates config text.
    pub fn parse(text: &str) -> CliResult<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Canonical text form; `parse(render(c)) == c`.
    pub fn render(&self) -> String {
        toml::to_string(self).expect("config values are always representable in TOML")
    }

    pub fn ndims(&self) -> usize {
        match self.equations.kind.as_str() {
            "linear_advection_2d" | "compressible_euler_2d" => 2,
            _ => 1,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let eq = &self.equations;
        one_of("equations.kind", &eq.kind, &EQUATION_KINDS)?;
        one_of("equations.initial_condition", &eq.initial_condition, &BUILTIN_INITIAL_CONDITIONS)?;
        let ndims = self.ndims();
        if !eq.advection_velocity.is_empty() && eq.advection_velocity.len() != ndims {
            return Err(invalid(
                "equations.advection_velocity",
                format!("needs {ndims} entries, got {}", eq.advection_velocity.len()),
            ));
        }
        if !(eq.gamma > 1.0 && eq.gamma.is_finite()) {
            return Err(invalid("equations.gamma", format!("must be finite and > 1, got {}", eq.gamma)));
        }

        let mesh = &self.mesh;
        for (key, len) in [
            ("mesh.coordinates_min", mesh.coordinates_min.len()),
            ("mesh.coordinates_max", mesh.coordinates_max.len()),
            ("mesh.periodicity", mesh.periodicity.len()),
        ] {
            if len != ndims {
                return Err(invalid(key, format!("needs {ndims} entries for {}, got {len}", eq.kind)));
            }
        }
        if mesh.initial_refinement_level > MAX_LEVEL {
            return Err(invalid(
                "mesh.initial_refinement_level",
                format!("must be at most {MAX_LEVEL}, got {}", mesh.initial_refinement_level),
            ));
        }

        let solver = &self.solver;
        if solver.polydeg < 1 || solver.polydeg > treedg::dg::MAX_POLYDEG {
            return Err(invalid(
                "solver.polydeg",
                format!("must lie in 1..={}, got {}", treedg::dg::MAX_POLYDEG, solver.polydeg),
            ));
        }
        let fluxes = flux_names();
        one_of("solver.surface_flux", &solver.surface_flux, &fluxes)?;
        one_of("solver.volume_integral", &solver.volume_integral, &VOLUME_INTEGRALS)?;
        one_of("solver.volume_flux", &solver.volume_flux, &fluxes)?;
        one_of("solver.fv_flux", &solver.fv_flux, &fluxes)?;

        let time = &self.time;
        if !(time.cfl > 0.0 && time.cfl <= 1.0) {
            return Err(invalid("time.cfl", format!("must lie in (0,1], got {}", time.cfl)));
        }
        if !(time.t_start.is_finite() && time.t_end.is_finite() && time.t_end >= time.t_start) {
            return Err(invalid(
                "time.t_end",
                format!("must be finite and >= t_start, got t_start {} t_end {}", time.t_start, time.t_end),
            ));
        }

        let cb = &self.callbacks;
        for (key, v) in [("callbacks.positivity_rho_min", cb.positivity_rho_min), ("callbacks.positivity_p_min", cb.positivity_p_min)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, format!("must be positive, got {v}")));
            }
        }
        for (key, v) in [
            ("callbacks.amr_refine_fraction", cb.amr_refine_fraction),
            ("callbacks.amr_coarsen_fraction", cb.amr_coarsen_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(key, format!("must lie in [0,1], got {v}")));
            }
        }
        if cb.amr {
            self.amr_settings()?.validate().map_err(|e| invalid("callbacks.amr", e))?;
        }

        for f in &self.output.formats {
            one_of("output.formats", f, &OUTPUT_FORMATS)?;
        }
        if self.output.ppm_resolution == 0 {
            return Err(invalid("output.ppm_resolution", "must be at least 1"));
        }
        // Resolving all components also checks combinations (equation/IC, symmetric volume flux).
        self.equation_set()?;
        self.dg_solver()?;
        treedg::equations::builtin_initial_condition(&eq.initial_condition, &self.equation_set()?)
            .map_err(|e| invalid("equations.initial_condition", e))?;
        Ok(())
    }

    pub fn equation_set(&self) -> CliResult<EquationSet> {
        let eq = &self.equations;
        let velocity = |i: usize| eq.advection_velocity.get(i).copied().unwrap_or(1.0);
        let set = match eq.kind.as_str() {
            "linear_advection_1d" => EquationSet::linear_advection_1d(velocity(0)),
            "linear_advection_2d" => EquationSet::linear_advection_2d([velocity(0), velocity(1)]),
            "burgers_1d" => Ok(EquationSet::burgers_1d()),
            "compressible_euler_1d" => EquationSet::compressible_euler_1d(eq.gamma),
            "compressible_euler_2d" => EquationSet::compressible_euler_2d(eq.gamma),
            other => return Err(invalid("equations.kind", format!("unknown value '{other}'"))),
        };
        set.map_err(|e| invalid("equations", e))
    }

    pub fn indicator(&self) -> IndicatorParams {
        let s = &self.solver;
        IndicatorParams {
            alpha_max: s.alpha_max,
            alpha_min_fraction: s.alpha_min_fraction,
            threshold_factor: s.threshold_factor,
            sharpness: s.sharpness,
        }
    }

    pub fn dg_solver(&self) -> CliResult<DgSolver> {
        let s = &self.solver;
        let flux = |key: &str, name: &str| NumericalFlux::from_name(name).map_err(|e| invalid(key, e));
        let volume_integral = match s.volume_integral.as_str() {
            "weak_form" => VolumeIntegral::WeakForm,
            "flux_differencing" => VolumeIntegral::FluxDifferencing {
                volume_flux: flux("solver.volume_flux", &s.volume_flux)?,
            },
            "shock_capturing" => VolumeIntegral::ShockCapturing {
                volume_flux: flux("solver.volume_flux", &s.volume_flux)?,
                fv_flux: flux("solver.fv_flux", &s.fv_flux)?,
                indicator: self.indicator(),
            },
            other => return Err(invalid("solver.volume_integral", format!("unknown value '{other}'"))),
        };
        DgSolver::new(s.polydeg, flux("solver.surface_flux", &s.surface_flux)?, volume_integral)
            .map_err(|e| invalid("solver", e))
    }

    pub fn limiter_thresholds(&self) -> LimiterThresholds {
        LimiterThresholds {
            rho_min: self.callbacks.positivity_rho_min,
            p_min: self.callbacks.positivity_p_min,
        }
    }

    pub fn amr_settings(&self) -> CliResult<AmrSettings> {
        let cb = &self.callbacks;
        Ok(AmrSettings {
            interval: cb.amr_interval,
            indicator: self.indicator(),
            refine_fraction: cb.amr_refine_fraction,
            coarsen_fraction: cb.amr_coarsen_fraction,
            min_level: cb.amr_min_level,
            max_level: cb.amr_max_level,
            adapt_initial: cb.amr_adapt_initial,
            limiter: cb.positivity.then(|| self.limiter_thresholds()),
        })
    }
}
