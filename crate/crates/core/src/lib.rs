//! Per-user iterative approximation methods for weighted sum-rate spectrum
//! optimization over multi-user, multi-carrier interference channels.
//!
//! Each user in turn replaces the nonconvex per-tone objective with an
//! approximation that is tight at the current point, upper-bounds the true
//! objective, and has a derivative whose stationarity condition is a
//! low-degree polynomial. The approximations are minimized under the user's
//! power budget by dual bisection.
//!
//! ```
//! use spectra_core::{generate_synthetic, run, ApproximationSpec, MethodKind, RunConfig, SynthesisParams};
//!
//! let ch = generate_synthetic(&SynthesisParams::new(3, 8, 7)).unwrap();
//! let cfg = RunConfig::uniform(&ch, ApproximationSpec::new(MethodKind::Iasb(1)));
//! let report = run(&ch, &cfg).unwrap();
//! assert!(report.allocation.is_feasible(&ch, 1e-6));
//! ```

pub mod approx;
pub mod channel;
pub mod driver;
pub mod dual;
pub mod error;
pub mod objective;
pub mod oracle;
pub mod poly;
pub mod presets;
pub mod scenario;
pub mod subproblem;
pub mod synth;
pub mod units;
pub mod verify;

pub use approx::{build, ApproximationSpec, MethodKind, UnivariateApproximation};
pub use channel::{Channel, ChannelBuilder, ChannelMeta, PowerAllocation};
pub use driver::{allocate_hybrid, run, InitRule, MethodAssignment, OuterStop, RunConfig, SolveReport};
pub use error::{Error, Result};
pub use objective::{interference, per_tone_objective, rates, restriction_derivatives, Rates};
pub use scenario::{load_scenario, save_scenario};
pub use subproblem::{SolveMode, SolverOptions, SubproblemSolution};
pub use synth::{generate_synthetic, SynthesisParams};
