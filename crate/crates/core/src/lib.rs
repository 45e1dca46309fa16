//! Lane-drop bottleneck with capacity drop, controlled by a variable speed
//! limit upstream of the merge.
//!
//! The crate provides two plants sharing one fundamental diagram and discharge
//! law — a single-link queue ([`link_queue::LinkQueue`]) and a Godunov cell
//! transmission discretisation ([`ctm::CellTransmission`]) — a point-queue
//! demand model, an incremental PI speed-limit controller, closed-form
//! equilibrium and switched-system analysis, and a scenario engine that ties
//! them together.
//!
//! ```
//! use vsl_core::engine::{run_summary, DemandConfig, ScenarioConfig};
//! use vsl_core::controller::ControllerConfig;
//!
//! let c = 6.0 / 11.0;
//! let cfg = ScenarioConfig::reference_link_queue(DemandConfig::Direct { value: 2.0 * c })
//!     .with_controller(ControllerConfig::pi(0.0, 4.0));
//! let summary = run_summary(&cfg).unwrap();
//! assert!((summary.late_mean_discharge - c).abs() < 1e-6);
//! ```

pub mod analysis;
pub mod arrivals;
pub mod cli;
pub mod controller;
pub mod ctm;
pub mod engine;
pub mod error;
pub mod flow;
pub mod io;
pub mod link_queue;
pub mod plant;

pub use error::{Error, Result};
pub use flow::{Bottleneck, DerivedConstants, FundamentalDiagram, LaneDrop};
