//! Bandit-driven IRS association in a two-tier HetNet.
//!
//! UEs in a small cell can only be reached through one of the IRS panels
//! ringing the cell. Each UE runs an agent that learns which panel keeps its
//! achievable rate above a satisfaction threshold. The crate provides the
//! network layout ([`topology`]), the block-fading link model ([`channel`]),
//! the contextual-bandit and greedy agents ([`policy`]) and the seeded
//! Monte-Carlo driver ([`engine`]).

pub mod channel;
pub mod engine;
pub mod error;
pub mod policy;
pub mod topology;

pub use channel::{ChannelParams, ChannelRealization, LinkUnits};
pub use engine::{
    run_monte_carlo, run_replication, run_replications, PeriodOutcome, Replication, SatisfactionTrace,
    SimulationConfig,
};
pub use error::{Error, Result};
pub use policy::{AgentState, PolicyConfig, PolicyKind};
pub use topology::{DistributionCase, NetworkTopology, Position, TopologyConfig};
