//! Monte Carlo checks of the moment, maximal and small-ball statements.
//!
//! Replicas are independent and indexed; every reduction runs over results
//! collected in replica order, so outputs depend only on the seed.

pub mod doob;
pub mod khintchine;
pub mod moment;
pub mod moment_check;
pub(crate) mod replica;
pub mod small_ball;
pub mod stats;

pub use doob::{doob_check, doob_constant, DoobParams, DoobReport, DEFAULT_BOOTSTRAP_RESAMPLES};
pub use khintchine::{khintchine_check, KhintchineReport};
pub use moment::{
    dyadic_ladder, fit_power_law, fit_scaling_exponent, sup_moment, wiener_sup_moment, LadderPoint, MomentParams,
    MomentReport,
};
pub use moment_check::{moment_formula_check, scalar_moment_scaling, MomentCheckReport, ScalarScalingReport};
pub use replica::Engine;
pub use small_ball::{report_from_sups, small_ball, small_ball_sups, SmallBallParams, SmallBallReport};
