use mixnorm::norms::Exponent;
use mixnorm::solvers::Termination;
use serde::Serialize;

/// Header of solver trace files.
pub const TRACE_HEADER: [&str; 4] = ["iter", "seconds", "objective", "feasibility-error"];

/// One projection in a radius sweep.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub experiment: String,
    pub q: Exponent,
    pub gamma_ratio: f64,
    pub gamma: f64,
    pub rows: usize,
    pub cols: usize,
    /// Absent when the input came from a file.
    pub seed: Option<u64>,
    pub seconds: f64,
    /// `|γ − ‖x‖_{1,q}|` for boundary solutions, zero for interior inputs.
    pub feasibility_error: f64,
    /// `½‖x − v‖²`.
    pub objective: f64,
    pub theta: f64,
    /// Residual evaluations spent by the root finder.
    pub evaluations: usize,
    pub interior: bool,
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub solver: &'static str,
    pub termination: Termination,
    pub features: usize,
    pub tasks: usize,
    pub rows: usize,
    pub gamma: f64,
    pub q: Exponent,
    pub seed: u64,
    pub iterations: usize,
    pub projections: usize,
    pub projection_seconds: f64,
    pub total_seconds: f64,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub best_objective: f64,
    pub feasibility_error: f64,
    /// Gradient work in units of full gradients.
    pub work: f64,
}

#[derive(Debug, Serialize)]
pub struct GenSummary {
    pub manifest: String,
    pub support: Vec<usize>,
    /// `Σ_i ‖w^i‖_∞` of the planted weights.
    pub planted_norm: f64,
}
