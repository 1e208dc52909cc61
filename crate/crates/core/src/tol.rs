//! Numerical tolerances shared across modules.

/// Allowed deviation of a Monge–Ampère mass from 1.
pub const MASS_TOL: f64 = 5e-3;

/// Allowed Monge–Ampère mass on a region where the measure must vanish.
pub const SUPPORT_TOL: f64 = 5e-3;

/// Residual target of the projected relaxation used for envelopes.
pub const ENV_TOL: f64 = 1e-8;

/// Sweep cap of the envelope solver.
pub const ENV_MAX_SWEEPS: usize = 2_000_000;

/// Dirichlet solves stop at `DIRICHLET_REL_TOL * (oscillation + 1)`.
pub const DIRICHLET_REL_TOL: f64 = 1e-10;

/// Sweep cap of the Dirichlet solver.
pub const DIRICHLET_MAX_SWEEPS: usize = 1_000_000;

/// A global extremal function whose supremum exceeds this (natural-log units)
/// is reported as polar.
pub const POLAR_THRESHOLD: f64 = 50.0;

/// Fraction of −∞ nodes above which a field is flagged polar.
pub const POLAR_NODE_FRACTION: f64 = 1e-3;

/// Agreement required between the Chebyshev route and the hull route.
pub const CROSS_TOL: f64 = 5e-2;

/// Eigenvalues of a Gram matrix below this are discarded.
pub const GRAM_EIG_THRESHOLD: f64 = 1e-12;

/// Slack allowed in the Chern–Levine–Nirenberg bound.
pub const CLN_SLACK: f64 = 1e-2;

/// Lower bound on `max_i |F_i|` over the unit sphere for a non-degenerate lift.
pub const LIFT_FLOOR: f64 = 1e-6;
