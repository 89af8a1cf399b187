//! Performance index (PID) benchmarks.

use std::fmt::Write as _;

use treedg::timeint::{integrate, Rk54Scheme, StepsizeCallback};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::setup::{build_problem, build_semi, with_threads};

pub const DEFAULT_REPEATS: usize = 5;

/// Wall-clock time per degree of freedom and right-hand-side evaluation:
/// `wall / (steps · 5 · elements · (polydeg + 1)^ndims)`.
pub fn pid(wall_clock_seconds: f64, n_time_steps: usize, n_elements: usize, polydeg: usize, ndims: usize) -> f64 {
    let dofs_per_element = (polydeg + 1).pow(ndims as u32);
    let work = n_time_steps as f64 * 5.0 * n_elements as f64 * dofs_per_element as f64;
    wall_clock_seconds / work
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    /// Minimum over the repeats.
    pub wall_clock_seconds: f64,
    /// Wall time of each repeat, in run order.
    pub repeat_seconds: Vec<f64>,
    pub n_time_steps: usize,
    pub n_elements: usize,
    pub polydeg: usize,
    pub ndims: usize,
    pub threads: usize,
    pub pid_seconds: f64,
}

impl BenchReport {
    /// Builds a report from raw timings, taking the fastest repeat.
    pub fn from_timings(
        repeat_seconds: Vec<f64>,
        n_time_steps: usize,
        n_elements: usize,
        polydeg: usize,
        ndims: usize,
        threads: usize,
    ) -> Self {
        let wall_clock_seconds = repeat_seconds.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            wall_clock_seconds,
            pid_seconds: pid(wall_clock_seconds, n_time_steps, n_elements, polydeg, ndims),
            repeat_seconds,
            n_time_steps,
            n_elements,
            polydeg,
            ndims,
            threads,
        }
    }

    pub fn recompute_pid(&self) -> f64 {
        pid(self.wall_clock_seconds, self.n_time_steps, self.n_elements, self.polydeg, self.ndims)
    }

    pub const CSV_HEADER: &'static str =
        "pid_seconds,wall_clock_seconds,n_time_steps,n_elements,polydeg,ndims,threads,repeats,repeat_seconds";

    /// Machine-readable row matching `CSV_HEADER`; repeat times are `;`-separated.
    pub fn csv_row(&self) -> String {
        let repeats: Vec<String> = self.repeat_seconds.iter().map(|s| format!("{s:e}")).collect();
        format!(
            "{:e},{:e},{},{},{},{},{},{},{}",
            self.pid_seconds,
            self.wall_clock_seconds,
            self.n_time_steps,
            self.n_elements,
            self.polydeg,
            self.ndims,
            self.threads,
            self.repeat_seconds.len(),
            repeats.join(";")
        )
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "elements      {}", self.n_elements);
        let _ = writeln!(out, "polydeg       {} ({}D)", self.polydeg, self.ndims);
        let _ = writeln!(out, "time steps    {}", self.n_time_steps);
        let _ = writeln!(out, "threads       {}", self.threads);
        for (i, s) in self.repeat_seconds.iter().enumerate() {
            let _ = writeln!(out, "repeat {:<6} {s:.6} s", i + 1);
        }
        let _ = writeln!(out, "minimum       {:.6} s", self.wall_clock_seconds);
        let _ = writeln!(out, "PID           {:.4e} s", self.pid_seconds);
        out
    }
}

/// Runs the configuration `repeats` times with only step size control
/// active and reports the fastest run.
pub fn bench(config: &RunConfig, repeats: usize, threads: Option<usize>) -> CliResult<BenchReport> {
    if repeats == 0 {
        return Err(CliError::Config("repeats must be at least 1".into()));
    }
    with_threads(threads, || {
        let mut times = Vec::with_capacity(repeats);
        let mut shape = None;
        for _ in 0..repeats {
            let mut semi = build_semi(config)?;
            let problem = build_problem(config, &semi)?;
            let mut callbacks: Vec<Box<dyn treedg::timeint::Callback>> =
                vec![Box::new(StepsizeCallback::Cfl(config.time.cfl))];
            let result = integrate(&mut semi, problem, &Rk54Scheme::default(), &mut callbacks)?;
            times.push(result.wall_seconds);
            shape = Some((result.steps, semi.n_elements()));
        }
        let (steps, elements) = shape.expect("at least one repeat");
        if steps == 0 {
            return Err(CliError::Config("benchmark needs t_end > t_start".into()));
        }
        Ok(BenchReport::from_timings(
            times,
            steps,
            elements,
            config.solver.polydeg,
            config.ndims(),
            rayon::current_num_threads(),
        ))
    })?
}
