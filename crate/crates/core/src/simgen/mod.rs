//! Seeded synthetic cities with labelled outbreaks.
//!
//! Agents live on a lat/lng grid of cells and follow noisy daily routines.
//! Index infections are partly clustered at one-day gatherings and spread
//! further through shared time in a cell with infectious agents.

mod epidemic;
mod schedule;
mod world;

pub use epidemic::{simulate, user_name, Gathering, Infection, InfectionCause, Simulation};
pub use schedule::Stay;
pub use world::{generate_world, AgentKind, AgentProfile, Pos, World, WorldConfig};
