//! Low-storage Runge-Kutta time stepping and the callback-driven integration loop.

mod callbacks;

use std::time::Instant;

pub use callbacks::{
    AliveCallback, AmrCallback, AmrSettings, AnalysisCallback, Callback, CallbackKind, PositivityCallback,
    SaveCallback, StepsizeCallback,
};

use crate::dg::StateArray;
use crate::error::{Error, Result};
use crate::semi::{OdeProblem, Semidiscretization};

/// Five-stage, fourth-order 2N-storage explicit Runge-Kutta scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk54Scheme {
    pub a: [f64; 5],
    pub b: [f64; 5],
    pub c: [f64; 5],
}

impl Rk54Scheme {
    /// The Carpenter-Kennedy coefficient set.
    pub fn carpenter_kennedy() -> Self {
        Self {
            a: [
                0.0,
                -567301805773.0 / 1357537059087.0,
                -2404267990393.0 / 2016746695238.0,
                -3550918686646.0 / 2091501179385.0,
                -1275806237668.0 / 842570457699.0,
            ],
            b: [
                1432997174477.0 / 9575080441755.0,
                5161836677717.0 / 13612068292357.0,
                1720146321549.0 / 2090206949498.0,
                3134564353537.0 / 4481467310338.0,
                2277821191437.0 / 14882151754819.0,
            ],
            c: [
                0.0,
                1432997174477.0 / 9575080441755.0,
                2526269341429.0 / 6820363183471.0,
                2006345519317.0 / 3224310063776.0,
                2802321613138.0 / 2924317926251.0,
            ],
        }
    }

    pub const N_STAGES: usize = 5;
}

impl Default for Rk54Scheme {
    fn default() -> Self {
        Self::carpenter_kennedy()
    }
}

/// One step of the 2N-storage scheme: per stage `k ← A k + dt·rhs(u, t + c dt)`,
/// `u ← u + B k`. `du` and `k` are scratch buffers of the same length as `u`.
/// Calls `rhs` exactly five times.
pub fn rk54_step<F>(
    scheme: &Rk54Scheme,
    rhs: &mut F,
    u: &mut [f64],
    du: &mut [f64],
    k: &mut [f64],
    t: f64,
    dt: f64,
) -> Result<()>
where
    F: FnMut(&[f64], &mut [f64], f64) -> Result<()>,
{
    rk54_step_with(scheme, rhs, &mut |_: &mut [f64]| Ok(()), u, du, k, t, dt)
}

/// `rk54_step` with a hook that may modify `u` after every stage update,
/// e.g. a limiter.
#[allow(clippy::too_many_arguments)]
pub fn rk54_step_with<U, F, G>(
    scheme: &Rk54Scheme,
    rhs: &mut F,
    stage: &mut G,
    u: &mut U,
    du: &mut [f64],
    k: &mut [f64],
    t: f64,
    dt: f64,
) -> Result<()>
where
    U: AsRef<[f64]> + AsMut<[f64]> + ?Sized,
    F: FnMut(&[f64], &mut [f64], f64) -> Result<()>,
    G: FnMut(&mut U) -> Result<()>,
{
    if !(dt > 0.0) {
        return Err(Error::Usage(format!("time step must be positive, got {dt}")));
    }
    for s in 0..Rk54Scheme::N_STAGES {
        rhs(u.as_ref(), du, t + scheme.c[s] * dt)?;
        let (a, b) = (scheme.a[s], scheme.b[s]);
        let mut finite = true;
        for ((ui, ki), di) in u.as_mut().iter_mut().zip(k.iter_mut()).zip(du.iter()) {
            *ki = a * *ki + dt * di;
            *ui += b * *ki;
            finite &= ui.is_finite();
        }
        if !finite {
            return Err(Error::Divergence {
                step: 0,
                time: t,
                detail: format!("non-finite values after stage {}", s + 1),
            });
        }
        stage(u)?;
    }
    Ok(())
}

/// Mutable integration state shared with callbacks.
#[derive(Debug, Clone)]
pub struct IntegratorState {
    pub u: StateArray,
    pub du: Vec<f64>,
    pub k: Vec<f64>,
    pub t: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub step: usize,
    /// Right-hand side evaluations made by the Runge-Kutta stages.
    pub rhs_evaluations: usize,
    /// Right-hand side evaluations made by callbacks.
    pub extra_rhs_evaluations: usize,
    pub finished: bool,
}

impl IntegratorState {
    fn new(problem: OdeProblem) -> Self {
        let len = problem.u0.len();
        Self {
            u: problem.u0,
            du: vec![0.0; len],
            k: vec![0.0; len],
            t: problem.tspan.0,
            t_start: problem.tspan.0,
            t_end: problem.tspan.1,
            dt: 0.0,
            step: 0,
            rhs_evaluations: 0,
            extra_rhs_evaluations: 0,
            finished: problem.tspan.1 <= problem.tspan.0,
        }
    }

    /// Reallocates the scratch buffers after the state changed size.
    pub fn resize_scratch(&mut self) {
        let len = self.u.len();
        self.du.resize(len, 0.0);
        self.k.resize(len, 0.0);
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationResult {
    pub u: StateArray,
    pub t: f64,
    pub steps: usize,
    pub rhs_evaluations: usize,
    pub extra_rhs_evaluations: usize,
    pub wall_seconds: f64,
}

/// Attaches step and time to errors raised inside the loop; admissibility
/// failures become divergence errors.
fn in_context(err: Error, step: usize, time: f64) -> Error {
    match err {
        Error::Divergence { detail, .. } => Error::Divergence { step, time, detail },
        e @ Error::Admissibility { .. } => Error::Divergence {
            step,
            time,
            detail: e.to_string(),
        },
        other => other,
    }
}

/// Runs the problem to its final time. Callbacks are executed in the order
/// of their `CallbackKind`: step size control before each step, everything
/// else after it. At least one step size callback is required unless the
/// time span is empty.
pub fn integrate(
    semi: &mut Semidiscretization,
    problem: OdeProblem,
    scheme: &Rk54Scheme,
    callbacks: &mut [Box<dyn Callback>],
) -> Result<IntegrationResult> {
    let start = Instant::now();
    let mut state = IntegratorState::new(problem);
    if state.u.len() != semi.nvars() * semi.n_dofs() {
        return Err(Error::Usage("initial state does not match the semidiscretization".into()));
    }
    let mut order: Vec<usize> = (0..callbacks.len()).collect();
    order.sort_by_key(|&i| callbacks[i].kind());
    for &i in &order {
        callbacks[i].initialize(semi, &mut state)?;
    }
    let has_stepsize = callbacks.iter().any(|c| c.kind() == CallbackKind::Stepsize);
    if !state.finished && !has_stepsize {
        return Err(Error::Usage("integration needs a step size callback".into()));
    }

    let stage_hooks: Vec<usize> = order.iter().copied().filter(|&i| callbacks[i].has_stage_hook()).collect();

    let t_end = state.t_end;
    while !state.finished {
        if t_end - state.t <= 1e-14 * t_end.abs().max(1.0) {
            state.t = t_end;
            state.finished = true;
            break;
        }
        for &i in &order {
            let cb = &mut callbacks[i];
            if cb.kind() == CallbackKind::Stepsize && cb.condition(&state) {
                cb.apply(semi, &mut state).map_err(|e| in_context(e, state.step, state.t))?;
            }
        }
        if !(state.dt > 0.0 && state.dt.is_finite()) {
            return Err(Error::Divergence {
                step: state.step,
                time: state.t,
                detail: format!("invalid time step {}", state.dt),
            });
        }
        let last = state.t + state.dt >= t_end;
        let dt = if last { t_end - state.t } else { state.dt };
        state.dt = dt;
        {
            let IntegratorState { u, du, k, t, .. } = &mut state;
            let semi = &*semi;
            let mut rhs = |u: &[f64], du: &mut [f64], t: f64| semi.rhs_slice(u, du, t);
            let mut stage = |u: &mut StateArray| {
                for &i in &stage_hooks {
                    callbacks[i].stage(semi, u)?;
                }
                Ok(())
            };
            rk54_step_with(scheme, &mut rhs, &mut stage, u, du, k, *t, dt)
                .map_err(|e| in_context(e, state.step + 1, state.t))?;
        }
        state.rhs_evaluations += Rk54Scheme::N_STAGES;
        state.step += 1;
        state.t = if last { t_end } else { state.t + dt };
        state.finished = last;
        for &i in &order {
            let cb = &mut callbacks[i];
            if cb.kind() != CallbackKind::Stepsize && cb.condition(&state) {
                cb.apply(semi, &mut state).map_err(|e| in_context(e, state.step, state.t))?;
            }
        }
    }
    for &i in &order {
        callbacks[i].finalize(semi, &mut state)?;
    }
    Ok(IntegrationResult {
        u: state.u,
        t: state.t,
        steps: state.step,
        rhs_evaluations: state.rhs_evaluations,
        extra_rhs_evaluations: state.extra_rhs_evaluations,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
