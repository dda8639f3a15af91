use thiserror::Error;

/// Failures reported by the solvers. Every variant names the operation that failed.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{op}: singular linear system at row {row}")]
    SingularSystem { op: &'static str, row: usize },

    #[error("{op}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        op: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{op}: residual grew for {steps} consecutive steps (residual {residual:.3e})")]
    Divergence {
        op: &'static str,
        steps: usize,
        residual: f64,
    },

    #[error("{op}: collapse to zero (H1 norm {norm:.3e})")]
    Collapse { op: &'static str, norm: f64 },

    #[error("project_nehari_pohozaev: {0}")]
    Projection(String),

    #[error("mountain_pass_level: no negative value of the path energy before t = {t_max:e}")]
    PathSearch { t_max: f64 },

    #[error("decay_fit: solution underflows in the fit window at r = {r}")]
    WindowUnderflow { r: f64 },

    #[error("{op}: {msg}")]
    Invalid { op: &'static str, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
