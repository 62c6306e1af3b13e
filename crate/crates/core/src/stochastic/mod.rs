//! Reflecting Brownian motion on the doubled manifold, boundary local time,
//! Brownian bridges, and the local-time identities built on them.
//!
//! The boundary local time `l_t` is normalized as the semimartingale local
//! time of the normal coordinate at 0, so `E[l_t] = √(2t/π)` for the half-line
//! started on the boundary.

mod experiments;
mod kernel;
mod path;
mod rng;
mod simulate;
mod stats;

pub use experiments::{
    bridge_local_time_moment, local_time_scaling_check, local_time_scaling_checks, moment_closed_form, moment_integral,
    moment_integrals, neumann_decomposition, reflection_identity, scaled_bridge_convergence,
    ConvergenceRow, MomentEstimate, NeumannDecomposition, ReflectionRow, ScalingPoint,
    ScalingResult, MAX_MOMENT, MOMENT_NODES, MOMENT_U_MAX,
};
pub use kernel::{circle_kernel, gaussian, heat_kernel_double, sphere_cos_angle, sphere_kernel};
pub use path::{
    bridge_local_time_increment, downcrossing_local_time, local_time_bridge,
    occupation_local_time, reflect_path, richardson_moment, skorokhod_local_time, PathSample,
    EPS_FACTOR,
};
pub use rng::{derive_seed, RngStream};
pub use simulate::{
    flat_bridge_local_time, mirror, pinned_bridge, project, sample_bridge, sample_double_bridge, simulate_rbm, BridgeSpec,
    MIN_STEPS,
};
pub use stats::{ks_distance_normal, loglog_slope, Estimate};
