//! Time steppers for u (physical frame) and w (similarity frame) on
//! truncated grids in dimensions 1 and 2.

mod detect;
mod grid;
pub mod io;
mod operator;
mod solver;
mod transform;

pub use detect::{detect_blowup, ode_blowup_time, ode_lower_bound, BlowupReport, FIT_LEVEL, LOWER_BOUND_SLACK, MIN_TAIL};
pub use grid::{Field, Frame, Grid};
pub use operator::{AxisOperator, GridOperator};
pub use solver::{
    run_u, run_w, step_u, step_w, ModeControl, SolveTrace, StopReason, URunOptions, USolver, WRunOptions, WSolver,
};
pub use transform::{from_similarity, to_similarity};
