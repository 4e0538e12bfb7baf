//! Logical cluster: node grid, collectives with cost accounting, fault
//! injection and the coarse iteration clock.

pub mod clock;
pub mod fault;
pub mod layout;
pub mod ledger;

pub use clock::{ClockMode, ClockParams, CoarseClock};
pub use fault::{
    FaultError, FaultInjector, FaultModel, FaultSite, FaultSpec, NodeId, Noise, NoiseKind, ScheduledFault, Step,
};
pub use layout::{GridLayout, LayoutError};
pub use ledger::{
    all_gather, all_reduce, all_reduce_members, broadcast, gather, reduce, CollectiveError, CostLedger, CostParams,
    LayerCost, Primitive,
};
