use thiserror::Error;

/// Errors raised while building or running a periodic DGTD problem.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("node set error: {0}")]
    NodeSet(String),

    #[error("mesh parse error (line {line}): {msg}")]
    Parse { line: usize, msg: String },

    #[error("mesh validation error: {0}")]
    Validation(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("periodic topology error: {msg} (uncovered area {uncovered_area:.3e} m^2)")]
    Topology { msg: String, uncovered_area: f64 },

    #[error("material error: {0}")]
    Material(String),

    #[error("grazing-incidence breakdown: eps_r*mu_r = {eps_mu:.6} <= sin^2(theta) = {sin2:.6}")]
    GrazingIncidence { eps_mu: f64, sin2: f64 },

    #[error("solution blew up at t = {time:.6e} s (step {step})")]
    BlowUp { time: f64, step: usize },

    #[error("probe error: {0}")]
    Probe(String),

    #[error("spectrum error: {0}")]
    Spectrum(String),

    #[error("stability search failed: {0}")]
    SearchFailure(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
