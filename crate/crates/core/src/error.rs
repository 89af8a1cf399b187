use std::fmt;

/// Node position inside the discrete solution, attached to errors raised by
/// pointwise kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub element: usize,
    pub node: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "element {}, node {}", self.element, self.node)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("inadmissible state (density {density:e}, pressure {pressure:e}){}", fmt_location(.location))]
    Admissibility {
        density: f64,
        pressure: f64,
        location: Option<Location>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("capacity exceeded: {required} cells required, {allowed} allowed")]
    Capacity { required: usize, allowed: usize },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("index {index} out of range (length {len})")]
    Index { index: usize, len: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("divergence at step {step}, t = {time}: {detail}")]
    Divergence {
        step: usize,
        time: f64,
        detail: String,
    },

    #[error("positivity limiter failed in element {element}: mean density {mean_density:e}, mean pressure {mean_pressure:e}")]
    Limiter {
        element: usize,
        mean_density: f64,
        mean_pressure: f64,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

fn fmt_location(location: &Option<Location>) -> String {
    match location {
        Some(loc) => format!(" at {loc}"),
        None => String::new(),
    }
}

impl Error {
    /// Attaches a node location to admissibility errors; other variants pass through.
    pub fn at(self, element: usize, node: usize) -> Self {
        match self {
            Error::Admissibility {
                density, pressure, ..
            } => Error::Admissibility {
                density,
                pressure,
                location: Some(Location { element, node }),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
