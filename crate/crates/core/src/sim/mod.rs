//! Seeded user simulation and A/B comparison.

mod ab;
mod metrics;
mod seed;
mod user;

pub use ab::{run_ab, run_arm, task_for_session, AbReport, Arm, ArmReport, Deltas, Significance};
pub use metrics::{compute_metrics, welch_t_test, Metrics, MetricsError, WelchTest};
pub use seed::{derive_seed, session_seed, stream_rng, Stream};
pub use user::{simulate_session, RepeatUsers, SimError, SimulatedSession, UserModel};
