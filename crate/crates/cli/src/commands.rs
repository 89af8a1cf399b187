use std::cell::RefCell;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::rc::Rc;

use treedg::semi::ErrorNorms;
use treedg::timeint::{integrate, AliveCallback, AnalysisCallback, Rk54Scheme, SaveCallback};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{self, StateFile};
use crate::setup::{build_problem, build_semi, build_semi_on, reference, solution_callbacks};

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub t: f64,
    pub n_elements: usize,
    pub rhs_evaluations: usize,
    pub wall_seconds: f64,
    /// Final errors against the exact solution, if the initial condition is one.
    pub errors: Option<ErrorNorms>,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn render(&self, variables: &[&str]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "steps           {}", self.steps);
        let _ = writeln!(out, "final time      {}", self.t);
        let _ = writeln!(out, "elements        {}", self.n_elements);
        let _ = writeln!(out, "rhs evaluations {}", self.rhs_evaluations);
        let _ = writeln!(out, "wall time       {:.3} s", self.wall_seconds);
        if let Some(err) = &self.errors {
            for (v, name) in variables.iter().enumerate() {
                let _ = writeln!(out, "error {name:<10} L2 {:.6e}  Linf {:.6e}", err.l2[v], err.linf[v]);
            }
        }
        for f in &self.files {
            let _ = writeln!(out, "wrote           {}", f.display());
        }
        out
    }
}

fn to_core(e: CliError) -> treedg::Error {
    match e {
        CliError::Core(e) => e,
        other => treedg::Error::Usage(other.to_string()),
    }
}

/// Builds, integrates and writes all outputs of a configuration into `out_dir`.
/// The analysis table is written even when the run fails.
pub fn run(config: &RunConfig, out_dir: &Path) -> CliResult<RunSummary> {
    let config_text = config.render();
    let mut semi = build_semi(config)?;
    let problem = build_problem(config, &semi)?;
    let mut callbacks = solution_callbacks(config)?;

    let columns = output::analysis_columns(&semi);
    let rows = Rc::new(RefCell::new(Vec::new()));
    let last_t = Rc::new(RefCell::new(config.time.t_start));
    let cb = &config.callbacks;
    if cb.analysis_interval > 0 {
        let (rows, last_t) = (rows.clone(), last_t.clone());
        let nvars = semi.nvars();
        callbacks.push(Box::new(AnalysisCallback::new(cb.analysis_interval).with_sink(move |report, state| {
            rows.borrow_mut().push(output::analysis_row(report, state.dt, state.step, nvars));
            *last_t.borrow_mut() = report.t;
            Ok(())
        })));
    }
    if cb.save_interval > 0 {
        let dir = out_dir.to_path_buf();
        let (text, formats) = (config_text.clone(), config.output.formats.clone());
        let (variable, resolution) = (config.output.ppm_variable.clone(), config.output.ppm_resolution);
        callbacks.push(Box::new(SaveCallback::new(cb.save_interval, move |semi, state| {
            let stem = format!("solution_{:06}", state.step);
            StateFile {
                config_text: text.clone(),
                t: state.t,
                step: state.step,
                mesh: semi.mesh().clone(),
                u: state.u.clone(),
            }
            .write(&dir.join(format!("{stem}.state")))
            .map_err(to_core)?;
            output::export_all(&dir, &stem, &formats, semi, &state.u, state.t, &variable, resolution, &text)
                .map_err(to_core)?;
            Ok(())
        })));
    }
    if cb.alive_interval > 0 {
        callbacks.push(Box::new(AliveCallback {
            interval: cb.alive_interval,
        }));
    }

    let result = integrate(&mut semi, problem, &Rk54Scheme::default(), &mut callbacks);
    drop(callbacks);
    let analysis_path = out_dir.join("analysis.csv");
    if cb.analysis_interval > 0 {
        output::write_analysis(&analysis_path, &columns, &rows.borrow(), &config_text, *last_t.borrow())?;
    }
    let result = result?;

    let mut files = Vec::new();
    if cb.analysis_interval > 0 {
        files.push(analysis_path);
    }
    let state_path = out_dir.join("solution_final.state");
    StateFile {
        config_text: config_text.clone(),
        t: result.t,
        step: result.steps,
        mesh: semi.mesh().clone(),
        u: result.u.clone(),
    }
    .write(&state_path)?;
    files.push(state_path);
    let out = &config.output;
    files.extend(output::export_all(
        out_dir,
        "solution_final",
        &out.formats,
        &semi,
        &result.u,
        result.t,
        &out.ppm_variable,
        out.ppm_resolution,
        &config_text,
    )?);
    let errors = match reference(&semi) {
        Some(ic) => Some(semi.compute_errors(&result.u, result.t, &ic)?),
        None => None,
    };
    Ok(RunSummary {
        steps: result.steps,
        t: result.t,
        n_elements: semi.n_elements(),
        rhs_evaluations: result.rhs_evaluations,
        wall_seconds: result.wall_seconds,
        errors,
        files,
    })
}

/// Integrates the configuration without any output and returns the final state.
pub fn simulate(config: &RunConfig) -> CliResult<(treedg::semi::Semidiscretization, treedg::timeint::IntegrationResult)> {
    let mut semi = build_semi(config)?;
    let problem = build_problem(config, &semi)?;
    let mut callbacks = solution_callbacks(config)?;
    let result = integrate(&mut semi, problem, &Rk54Scheme::default(), &mut callbacks)?;
    Ok((semi, result))
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub level: usize,
    pub n_elements: usize,
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub variables: Vec<String>,
    pub rows: Vec<ConvergenceRow>,
}

fn eoc(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

impl ConvergenceReport {
    /// L2 EOC per consecutive level pair and variable.
    pub fn eoc_l2(&self) -> Vec<Vec<f64>> {
        self.rows
            .windows(2)
            .map(|w| w[0].l2.iter().zip(&w[1].l2).map(|(a, b)| eoc(*a, *b)).collect())
            .collect()
    }

    /// Mean L2 EOC over all level pairs and variables; `None` for a single level.
    pub fn mean_eoc(&self) -> Option<f64> {
        let all: Vec<f64> = self.eoc_l2().into_iter().flatten().collect();
        (!all.is_empty()).then(|| all.iter().sum::<f64>() / all.len() as f64)
    }

    pub fn csv(&self) -> String {
        let mut header = vec!["level".to_string(), "n_elements".to_string()];
        for prefix in ["l2", "linf", "eoc_l2", "eoc_linf"] {
            header.extend(self.variables.iter().map(|v| format!("{prefix}_{v}")));
        }
        let mut out = header.join(",");
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let mut cells = vec![row.level.to_string(), row.n_elements.to_string()];
            cells.extend(row.l2.iter().map(|v| format!("{v:e}")));
            cells.extend(row.linf.iter().map(|v| format!("{v:e}")));
            for norm in [0, 1] {
                for v in 0..self.variables.len() {
                    cells.push(match i {
                        0 => String::new(),
                        _ => {
                            let (a, b) = match norm {
                                0 => (self.rows[i - 1].l2[v], row.l2[v]),
                                _ => (self.rows[i - 1].linf[v], row.linf[v]),
                            };
                            format!("{:.4}", eoc(a, b))
                        }
                    });
                }
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:>5} {:>9}", "level", "elements");
        for v in &self.variables {
            let _ = write!(out, " {:>14} {:>8}", format!("L2 {v}"), "EOC");
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{:>5} {:>9}", row.level, row.n_elements);
            for (v, e) in row.l2.iter().enumerate() {
                let rate = if i == 0 {
                    String::new()
                } else {
                    format!("{:.2}", eoc(self.rows[i - 1].l2[v], *e))
                };
                let _ = write!(out, " {e:>14.6e} {rate:>8}");
            }
            out.push('\n');
        }
        match self.mean_eoc() {
            Some(m) => {
                let _ = writeln!(out, "mean EOC (L2): {m:.3}");
            }
            None => out.push_str("mean EOC (L2): n/a (single level)\n"),
        }
        out
    }
}

/// Runs the configuration once per refinement level and tabulates errors
/// against the exact solution at the final time.
pub fn convergence(config: &RunConfig, levels: &[usize]) -> CliResult<ConvergenceReport> {
    if levels.is_empty() {
        return Err(CliError::Config("convergence needs at least one level".into()));
    }
    let mut rows = Vec::new();
    let mut variables = Vec::new();
    for &level in levels {
        let mut c = config.clone();
        c.mesh.initial_refinement_level = level;
        c.validate()?;
        let (semi, result) = simulate(&c)?;
        let ic = reference(&semi).ok_or_else(|| {
            CliError::Config(format!(
                "equations.initial_condition: '{}' has no exact solution to compare against",
                c.equations.initial_condition
            ))
        })?;
        let errors = semi.compute_errors(&result.u, result.t, &ic)?;
        variables = semi.equations().conserved_names().iter().map(|s| s.to_string()).collect();
        rows.push(ConvergenceRow {
            level,
            n_elements: semi.n_elements(),
            l2: errors.l2,
            linf: errors.linf,
        });
    }
    Ok(ConvergenceReport { variables, rows })
}

/// Converts a state file to the requested format next to it (or at `out`).
pub fn export(state_path: &Path, format: &str, out: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let state = StateFile::read(state_path)?;
    let config = RunConfig::parse(&state.config_text)?;
    let semi = build_semi_on(&config, state.mesh.clone())?;
    if state.u.nvars() != semi.nvars()
        || state.u.nodes_per_element() != semi.nodes_per_element()
        || state.u.n_elements() != semi.n_elements()
    {
        return Err(CliError::Input(format!(
            "{}: state shape does not match its configuration",
            state_path.display()
        )));
    }
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => state_path.with_extension(format),
    };
    let dir = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CliError::Input(format!("invalid output path {}", path.display())))?
        .to_string();
    let o = &config.output;
    output::export_all(
        &dir,
        &stem,
        &[format.to_string()],
        &semi,
        &state.u,
        state.t,
        &o.ppm_variable,
        o.ppm_resolution,
        &state.config_text,
    )
}

/// Reads config text back from any output written by `run`.
pub fn config_from_output(path: &Path) -> CliResult<RunConfig> {
    let text = if path.extension().is_some_and(|e| e == "state") {
        StateFile::read(path)?.config_text
    } else {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let text = String::from_utf8_lossy(&bytes);
        let embedded = if text.starts_with("# vtk") {
            output::extract_vtk_config(&text)
        } else {
            output::extract_config(&text)
        };
        embedded.ok_or_else(|| CliError::Input(format!("{}: no embedded config found", path.display())))?
    };
    RunConfig::parse(&text)
}
