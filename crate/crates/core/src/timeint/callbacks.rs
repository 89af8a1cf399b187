use super::IntegratorState;
use crate::dg::{positivity_limiter, IndicatorParams, LimiterThresholds, StateArray};
use crate::error::{Error, Result};
use crate::semi::{AdaptReport, AnalysisReport, Semidiscretization};

/// Execution class of a callback; the derived order is the execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CallbackKind {
    Stepsize,
    Positivity,
    Amr,
    Analysis,
    Save,
    Alive,
}

pub trait Callback {
    fn kind(&self) -> CallbackKind;

    /// Called once before the first step.
    fn initialize(&mut self, _semi: &mut Semidiscretization, _state: &mut IntegratorState) -> Result<()> {
        Ok(())
    }

    /// Whether `apply` runs at this point (before the step for step size
    /// callbacks, after it for all others).
    fn condition(&self, state: &IntegratorState) -> bool;

    fn apply(&mut self, semi: &mut Semidiscretization, state: &mut IntegratorState) -> Result<()>;

    /// Whether `stage` must run after every Runge-Kutta stage.
    fn has_stage_hook(&self) -> bool {
        false
    }

    /// Modifies the stage solution in place.
    fn stage(&mut self, _semi: &Semidiscretization, _u: &mut StateArray) -> Result<()> {
        Ok(())
    }

    /// Called once after the last step.
    fn finalize(&mut self, _semi: &mut Semidiscretization, _state: &mut IntegratorState) -> Result<()> {
        Ok(())
    }
}

fn every(interval: usize, state: &IntegratorState) -> bool {
    interval > 0 && (state.step % interval == 0 || state.finished)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepsizeCallback {
    Cfl(f64),
    Fixed(f64),
}

impl Callback for StepsizeCallback {
    fn kind(&self) -> CallbackKind {
        CallbackKind::Stepsize
    }

    fn condition(&self, _state: &IntegratorState) -> bool {
        true
    }

    fn apply(&mut self, semi: &mut Semidiscretization, state: &mut IntegratorState) -> Result<()> {
        state.dt = match *self {
            Self::Cfl(cfl) => semi.compute_stable_dt(&state.u, cfl)?,
            Self::Fixed(dt) => dt,
        };
        Ok(())
    }
}

/// Applies the positivity limiter to the initial state and after every
/// Runge-Kutta stage, so each step also ends on a limited state.
#[derive(Debug, Clone, Default)]
pub struct PositivityCallback {
    pub thresholds: LimiterThresholds,
    /// Total number of element limitings performed.
    pub limited_elements: usize,
}

impl PositivityCallback {
    pub fn new(thresholds: LimiterThresholds) -> Self {
        Self {
            thresholds,
            limited_elements: 0,
        }
    }

    fn limit(&mut self, semi: &Semidiscretization, u: &mut StateArray) -> Result<()> {
        self.limited_elements +=
            positivity_limiter(&semi.solver().basis, semi.equations(), semi.ndims(), &self.thresholds, u)?;
        Ok(())
    }
}

impl Callback for PositivityCallback {
    fn kind(&self) -> CallbackKind {
        CallbackKind::Positivity
    }

    fn initialize(&mut self, semi: &mut Semidiscretization, state: &mut IntegratorState) -> Result<()> {
        self.limit(semi, &mut state.u)
    }

    fn condition(&self, _state: &IntegratorState) -> bool {
        false
    }

    fn apply(&mut self, semi: &mut Semidiscretization, state: &mut IntegratorState) -> Result<()> {
        self.limit(semi, &mut state.u)
    }

    fn has_stage_hook(&self) -> bool {
        true
    }

    fn stage(&mut self, semi: &Semidiscretization, u: &mut StateArray) -> Result<()> {
        self.limit(semi, u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmrSettings {
    /// Steps between adaptations.
    pub interval: usize,
    pub indicator: IndicatorParams,
    /// Refine where `α > refine_fraction · alpha_max`.
    pub refine_fraction: f64,
    /// Coarsen families whose children all have `α < coarsen_fraction · alpha_max`.
    pub coarsen_fraction: f64,
    pub min_level: usize,
    pub max_level: usize,
    /// Before the first step, adapt repeatedly and re-project the initial
    /// condition onto the new mesh until the mesh stops changing.
    pub adapt_initial: bool,
    /// Positivity limiting applied to the transferred solution (Euler only).
    pub limiter: Option<LimiterThresholds>,
}

impl Default for AmrSettings {
    fn default() -> Self {
        Self {
            interval: 5,
            indicator: IndicatorParams::default(),
            refine_fraction: 0.3,
            coarsen_fraction: 0.1,
            min_level: 0,
            max_level: 6,
            adapt_initial: false,
            limiter: Some(LimiterThresholds::default()),
        }
    }
}

impl AmrSettings {
    pub fn validate(&self) -> Result<()> {
        self.indicator.validate()?;
        if self.min_level > self.max_level || self.max_level > crate::mesh::MAX_LEVEL {
            return Err(Error::Config(format!(
                "AMR levels must satisfy min_level <= max_level <= {}, got {}..{}",
                crate::mesh::MAX_LEVEL,
                self.min_level,
                self.max_level
            )));
        }
        if self.interval == 0 {
            return Err(Error::Config("AMR interval must be at least 1".into()));
        }
        Ok(())
    }
}

/// Indicator-driven refinement and coarsening with solution transfer.
#[derive(Debug, Clone)]
pub struct AmrCallback {
    pub settings: AmrSettings,
    pub history: Vec<AdaptReport>,
}

impl AmrCallback {
    pub fn new(settings: AmrSettings) -> Result<Self> {
        settings.validate()?;
        Ok(Self {
            settings,
            history: Vec::new(),
        })
    }

    /// Flags cells from the indicator and adapts `semi` and `state.u`.
    pub fn adapt(&mut self, semi: &mut Semidiscretization, state: &mut IntegratorState) -> Result<AdaptReport> {
        let s = &self.settings;
        let alpha = semi.indicator_values(&state.u, &s.indicator)?;
        let alpha_max = s.indicator.alpha_max;
        let mesh = semi.mesh();
        let refine: Vec<usize> = mesh
            .leaves()
            .iter()
            .zip(&alpha)
            .filter(|&(&id, &a)| a > s.refine_fraction * alpha_max && mesh.cells()[id].level < s.max_level)
            .map(|(&id, _)| id)
            .collect();
        let coarsen: Vec<usize> = mesh
            .coarsenable_parents()
            .into_iter()
            .filter(|&p| {
                let cell = &mesh.cells()[p];
                cell.level >= s.min_level
                    && cell.children.iter().all(|&c| {
                        let e = mesh.element_of(c).expect("children of coarsenable parents are leaves");
                        alpha[e] < s.coarsen_fraction * alpha_max && !refine.contains(&c)
                    })
            })
            .collect();
        if refine.is_empty() && coarsen.is_empty() {
            let n = semi.n_elements();
            return Ok(AdaptReport {
                elements_before: n,
                elements_after: n,
                ..Default::default()
            });
        }
        let (mut u, report) = semi.adapt(&state.u, &refine, &coarsen)?;
        if let Some(thresholds) = &s.limiter {
            positivity_limiter(&semi.solver().basis, semi.equations(), semi.ndims(), thresholds, &mut u)?;
        }
        state.u = u;
        state.resize_scratch();
        log::debug!(
            "amr at t = {}: {} -> {} elements",
            state.t,
            report.elements_before,
            report.elements_after
        );
        self.history.push(report.clone());
        Ok(report)
    }
}

impl Callback for AmrCallback {
    fn kind(&self) -> CallbackKind {
        CallbackKind::Amr
    }

    fn initialize(&mut self, semi: &mut Semidiscretization, state: &mut IntegratorState) -> Result<()> {
        if self.settings.adapt_initial {
            for _ in 0..=self.settings.max_level {
                let report = self.adapt(semi, state)?;
                if report.refined == 0 && report.coarsened == 0 {
                    break;
                }
                let ic = semi.initial_condition().clone();
                state.u = semi.project(&ic, state.t)?;
                state.resize_scratch();
            }
        }
        Ok(())
    }

    fn condition(&self, state: &IntegratorState) -> bool {
        !state.finished && state.step % self.settings.interval == 0
    }

    fn apply(&mut self, semi: &mut Semidiscretization, state: &mut IntegratorState) -> Result<()> {
        self.adapt(semi, state).map(|_| ())
    }
}

type AnalysisSink = Box<dyn FnMut(&AnalysisReport, &IntegratorState) -> Result<()>>;

/// Computes an `AnalysisReport` at the start, every `interval` steps and at the end.
pub struct AnalysisCallback {
    pub interval: usize,
    pub reports: Vec<AnalysisReport>,
    sink: Option<AnalysisSink>,
}

impl AnalysisCallback {
    pub fn new(interval: usize) -> Self {
        Self {
            interval,
            reports: Vec::new(),
            sink: None,
        }
    }

    /// Additionally passes each report to `sink` (for example a CSV writer).
    pub fn with_sink(mut self, sink: impl FnMut(&AnalysisReport, &IntegratorState) -> Result<()> + 'static) -> Self {
        self.sink = Some(Box::new(sink));
        self
    }

    fn record(&mut self, semi: &Semidiscretization, state: &IntegratorState) -> Result<()> {
        let report = semi.analyze(&state.u, state.t)?;
        if let Some(sink) = self.sink.as_mut() {
            sink(&report, state)?;
        }
        self.reports.push(report);
        Ok(())
    }
}

impl Callback for AnalysisCallback {
    fn kind(&self) -> CallbackKind {
        CallbackKind::Analysis
    }

    fn initialize(&mut self, semi: &mut Semidiscretization, state: &mut IntegratorState) -> Result<()> {
        self.record(semi, state)
    }

    fn condition(&self, state: &IntegratorState) -> bool {
        every(self.interval, state)
    }

    fn apply(&mut self, semi: &mut Semidiscretization, state: &mut IntegratorState) -> Result<()> {
        self.record(semi, state)
    }
}

type SaveFn = Box<dyn FnMut(&Semidiscretization, &IntegratorState) -> Result<()>>;

/// Hands the current solution to a closure every `interval` steps and at the end.
pub struct SaveCallback {
    pub interval: usize,
    save: SaveFn,
}

impl SaveCallback {
    pub fn new(interval: usize, save: impl FnMut(&Semidiscretization, &IntegratorState) -> Result<()> + 'static) -> Self {
        Self {
            interval,
            save: Box::new(save),
        }
    }
}

impl Callback for SaveCallback {
    fn kind(&self) -> CallbackKind {
        CallbackKind::Save
    }

    fn condition(&self, state: &IntegratorState) -> bool {
        every(self.interval, state)
    }

    fn apply(&mut self, semi: &mut Semidiscretization, state: &mut IntegratorState) -> Result<()> {
        (self.save)(semi, state)
    }
}

/// Logs progress every `interval` steps.
#[derive(Debug, Clone)]
pub struct AliveCallback {
    pub interval: usize,
}

impl Callback for AliveCallback {
    fn kind(&self) -> CallbackKind {
        CallbackKind::Alive
    }

    fn condition(&self, state: &IntegratorState) -> bool {
        every(self.interval, state)
    }

    fn apply(&mut self, semi: &mut Semidiscretization, state: &mut IntegratorState) -> Result<()> {
        log::info!(
            "step {:>7}  t = {:.6e}  dt = {:.3e}  elements = {}",
            state.step,
            state.t,
            state.dt,
            semi.n_elements()
        );
        Ok(())
    }
}
