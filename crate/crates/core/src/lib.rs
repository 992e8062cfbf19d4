//! Trajectory-user linking on anonymous GPS trips.
//!
//! The attack reconstructs which trips belong to the same person in three
//! stages: trip concatenation, home-location assignment and TF-IDF
//! refinement. The crate also provides endpoint truncation as a
//! countermeasure, evaluation against ground truth, and a synthetic data
//! generator.

pub mod attack;
pub mod config;
pub mod error;
pub mod grid;
pub mod ingest;
pub mod lcss;
pub mod metrics;
pub mod model;
pub mod obfuscate;
pub mod refine;
pub mod seeding;
pub mod stats;
pub mod synth;

pub use attack::{run_attack, AttackOutcome};
pub use error::{Error, Result};
pub use model::{
    AttackParams, BBox, ClockWindow, ClusterAssignment, GpsPoint, HourWindow, Trip, TripDataset, TripId, UserId,
};
