//! Multi-voltage and level-shifter assignment driven floorplanning.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: modules, delay/power curves, level-shifter cells and netlists.
//! * [`flow`]: integer min-cost circulation / min-cost max-flow machinery.
//! * [`voltage`]: timing graph, expanded network and per-module voltage assignment.
//! * [`floorplan`]: slicing floorplans, rooms, whitespace and metrics.
//! * [`shifter`]: level-shifter capacity model, room assignment and placement.
//! * [`anneal`]: the simulated-annealing loop tying everything together.

pub mod anneal;
pub mod floorplan;
pub mod flow;
pub mod model;
pub mod shifter;
pub mod voltage;

pub use num_rational::Ratio;
