//! Deterministic network-coded cooperation (DNCC) for `N` source-destination
//! pairs helped by `M` relays.
//!
//! Sources transmit in `N` slots; each relay then sends one fixed linear
//! combination of the packets it decoded, with coefficients taken from an
//! MDS-structured coding matrix over GF(2^L). This crate provides
//!
//! * [`finite_field`] and [`linalg`]: GF(2^L) arithmetic and elimination,
//! * [`code_design`]: the coding matrix and its Kruskal rank,
//! * [`channel_model`]: rates, outage thresholds and link sampling,
//! * [`analytic`]: closed-form outage and diversity-multiplexing curves,
//! * [`simulator`]: Monte-Carlo and exact-enumeration outage engines,
//!   including NCC and CC baselines,
//! * [`config`]: scenario files.

pub mod analytic;
pub mod channel_model;
pub mod code_design;
pub mod config;
pub mod finite_field;
pub mod linalg;
pub mod simulator;

pub use analytic::{AnalyticCurve, DmtCurve};
pub use channel_model::{LinkStateMatrix, Rate, ScenarioConfig, Scheme, Traffic};
pub use code_design::{build_mds_matrix, CodingMatrix};
pub use finite_field::{FieldElement, GfContext};
pub use simulator::{ExactOutage, OutageEstimate, OutageMetric, ReceivedSystem};
