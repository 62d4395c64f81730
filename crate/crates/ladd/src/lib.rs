//! Local additive regression.
//!
//! The central estimator fits an additive regression model inside a sliding
//! cube window around each evaluation point and reads off the fitted value at
//! the window center. Compared with a full-dimensional local linear smoother
//! it trades a higher-order bias (window radius enters at fourth order) for a
//! variance that grows only mildly with the dimension, and compared with a
//! global additive fit it does not require the regression function itself to
//! be additive.
//!
//! Crate layout:
//!
//! * [`kernels`]: second-order kernels on `[-1, 1]`, their moments, and
//!   cut-and-normalize boundary corrections.
//! * [`backfit`]: additive model fitting by smooth backfitting on a
//!   rectangular grid (local constant and local linear variants), plus hat
//!   weights obtained from the linearity of the fit in the responses.
//! * [`local_linear`]: the full-dimensional local linear baseline.
//! * [`local_additive`]: window extraction, rescaling, and the windowed
//!   additive estimator built on a pluggable additive backend.
//! * [`selection`]: residual-based smoothing-parameter selection (AIC
//!   variants, penalized least squares, GCV) with exact or plug-in trace.
//! * [`asymptotics`]: closed-form bias/variance approximations and the
//!   optimal window/bandwidth rates implied by them.
//! * [`bench`]: reproducible simulation harness (test functions, designs,
//!   MISE/MASE protocols, reports).
//! * [`io`]: CSV input/output and predictor rescaling.

pub mod asymptotics;
pub mod backfit;
pub mod bench;
pub mod dataset;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod local_additive;
pub mod local_linear;
pub mod selection;
pub mod sums;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use grid::EvalGrid;
pub use kernels::KernelSpec;
