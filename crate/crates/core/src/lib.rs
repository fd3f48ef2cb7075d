//! Distribution-shift workbench for reinforcement-learning traffic signal
//! control.
//!
//! Traffic scenarios are summarized by their 8-phase traffic distribution and
//! compared with the phase KS distance ([`shift`]). Perturbed and rescaled
//! scenarios ([`scenario`]) are run through a single-intersection simulator
//! ([`sim`]) under a Q-learning agent or a baseline ([`agent`]), and the
//! resulting event logs are scored ([`metrics`]). [`experiment`] ties these
//! together into sweeps with CSV and SVG output.

pub mod agent;
pub mod experiment;
pub mod metrics;
pub mod scenario;
pub mod seeding;
pub mod shift;
pub mod sim;
