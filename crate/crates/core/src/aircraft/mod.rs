//! Airport arrival management: the planning table, separation checks,
//! resource selection, the arrival net and the adaptation logic that keeps
//! the plan safe.

mod adaptation;
pub mod fixture;
mod model;
mod net;
mod planning;
mod safety;
mod table;

use thiserror::Error;

use crate::hlpn::NetError;

pub use adaptation::*;
pub use model::{
    Aircraft, Airport, CaseModel, Category, Dim, Gate, GateId, Gateway, Phase, ResourceId,
    ResourceState, Runway, SeparationTable,
};
pub use net::*;
pub use planning::{
    apply_reassignment, compute_release, delay, demand_time, select_gate, select_gateway,
    select_resource, select_runway, wind_change, LastInRecord,
};
pub use safety::{
    check_gate_safety, check_landing_safety, check_taxi_safety, entry_time, margin,
    neighbour_margins, pair_gap, plan_safety, Violation,
};
pub use table::{read_table, write_table, HEADER};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AircraftError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("aircraft {0} has times out of order")]
    TimeOrder(u32),
    #[error("unknown {0}")]
    UnknownResource(ResourceId),
    #[error("runway {0} has no mutual opposite")]
    MissingOpposite(u32),
    #[error("separation of {0} min is below the minimum")]
    Separation(u32),
    #[error("table line {line}: {message}")]
    Table { line: u64, message: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error("unknown aircraft {0}")]
    UnknownAircraft(u32),
    #[error(transparent)]
    Net(#[from] NetError),
}
