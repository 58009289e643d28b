//! Sliding-mode control laboratory.
//!
//! Control-affine plants ([`plants`]), sliding surfaces ([`surfaces`]),
//! reaching laws ([`reaching`]), closed-form SMC laws ([`controllers`]), a
//! fixed-step RK4 closed-loop simulator with metrics ([`sim`]) and a particle
//! swarm gain tuner ([`mpso`]). Scenario files are read by [`config`].
//!
//! ```
//! use smc_core::config::load_bundled;
//! use smc_core::sim::{compute_metrics, simulate};
//!
//! let cfg = load_bundled("impulse_stabilization").unwrap();
//! let traj = simulate(&cfg.scenario).unwrap();
//! let m = compute_metrics(&traj, &cfg.scenario.reference, cfg.scenario.settle_band);
//! assert!(m.settling_time.unwrap() <= 0.1);
//! ```

pub mod config;
pub mod controllers;
pub mod mpso;
pub mod plants;
pub mod reaching;
pub mod sim;
pub mod surfaces;
