//! Turns a `RunConfig` into library objects.

use treedg::equations::{builtin_initial_condition, InitialCondition};
use treedg::mesh::TreeMesh;
use treedg::semi::{OdeProblem, Semidiscretization};
use treedg::timeint::{AmrCallback, Callback, PositivityCallback, StepsizeCallback};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub fn build_mesh(config: &RunConfig) -> CliResult<TreeMesh> {
    let m = &config.mesh;
    Ok(TreeMesh::new(
        &m.coordinates_min,
        &m.coordinates_max,
        m.initial_refinement_level,
        m.n_cells_max,
        &m.periodicity,
    )?)
}

/// Semidiscretization on the mesh described by the config.
pub fn build_semi(config: &RunConfig) -> CliResult<Semidiscretization> {
    build_semi_on(config, build_mesh(config)?)
}

/// Semidiscretization on a given mesh (for example one restored from a state file).
pub fn build_semi_on(config: &RunConfig, mesh: TreeMesh) -> CliResult<Semidiscretization> {
    let eq = config.equation_set()?;
    let (ic, source) = builtin_initial_condition(&config.equations.initial_condition, &eq)?;
    let solver = config.dg_solver()?;
    Ok(Semidiscretization::new(mesh, eq, ic, solver)?.with_source(source))
}

pub fn build_problem(config: &RunConfig, semi: &Semidiscretization) -> CliResult<OdeProblem> {
    Ok(semi.semidiscretize((config.time.t_start, config.time.t_end))?)
}

/// The reference solution, if the initial condition is an exact solution.
pub fn reference(semi: &Semidiscretization) -> Option<InitialCondition> {
    let ic = semi.initial_condition();
    ic.is_exact_solution().then(|| ic.clone())
}

/// Step size control plus the callbacks that change the solution (positivity, AMR).
pub fn solution_callbacks(config: &RunConfig) -> CliResult<Vec<Box<dyn Callback>>> {
    let mut callbacks: Vec<Box<dyn Callback>> = vec![Box::new(StepsizeCallback::Cfl(config.time.cfl))];
    if config.callbacks.positivity {
        callbacks.push(Box::new(PositivityCallback::new(config.limiter_thresholds())));
    }
    if config.callbacks.amr {
        let amr = AmrCallback::new(config.amr_settings()?).map_err(|e| CliError::Config(e.to_string()))?;
        callbacks.push(Box::new(amr));
    }
    Ok(callbacks)
}

/// Runs `f` on a dedicated pool with `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("threads must be at least 1".into())),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CliError::Input(format!("cannot create thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
