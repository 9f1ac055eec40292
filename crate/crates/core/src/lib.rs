//! Once-reinforced random walk on finite graphs: kernels, simulation and
//! the critical exponent of the survival tail.

pub mod error;
pub mod exact;
pub mod exponent;
pub mod family;
pub mod graph;
pub mod kernels;
pub mod report;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use exact::exact_tail;
pub use exponent::{
    alpha_c, bound_checks, lambda_decomposed, limit_delta_zero, sweep_delta, Delta0Limit, ExponentReport,
};
pub use family::{classify_delta0, Delta0Class, Family, FamilySpec};
pub use graph::{lift, parse_graph, EdgeSubset, Graph, LiftedGraph};
pub use kernels::{kernel_on_g, kernel_on_s, restrict, SubstochasticBlock};
pub use simulate::{fit_decay_rate, run_until, tail_estimate, TailEstimate};
pub use spectral::{dv_oracle, spectral_radius, tilted_certificate, SpectralResult, VariationalCertificate};
