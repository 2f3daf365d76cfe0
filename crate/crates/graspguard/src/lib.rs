//! Safe grasping simulation library.
//!
//! Implements a two-finger grasping study in which a fingertip force
//! controller is wrapped by quadratic-program safety filters built on
//! control barrier functions. The crate provides:
//!
//! * [`contact`] - Kelvin-Voigt contact dynamics, the two uncertain
//!   state-space models, and the soft-finger friction cone;
//! * [`qp`] - a dense dual active-set quadratic program solver;
//! * [`observer`] - a nonlinear disturbance observer with its printed
//!   error bound;
//! * [`barriers`] / [`filters`] - force-regulation and force-closure
//!   barrier constraints and the CBF / RaCBF / RCBF / DOBCBF filters;
//! * [`finger`] - a planar finger model with Jacobian-transpose force
//!   control and pinch trajectories;
//! * [`tactile`] - a synthetic fingertip tactile array with
//!   center-of-pressure contact estimation;
//! * [`scenario`] / [`sim`] - the closed-loop scenario harness;
//! * [`trace`] / [`report`] - CSV traces and comparison reports.
//!
//! The `graspguard` binary exposes `run`, `validate` and `report`
//! subcommands over TOML scenario files.

pub mod barriers;
pub mod contact;
pub mod error;
pub mod filters;
pub mod finger;
pub mod observer;
pub mod qp;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod tactile;
pub mod trace;

pub use error::{Error, Result};
