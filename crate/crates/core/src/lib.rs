//! Processing core for a finger-worn optical+inertial input device.
//!
//! The crate turns two raw sensor streams into interactive 3D input:
//!
//! * a 9-DOF IMU stream is filtered into absolute orientation ([`ahrs`]);
//! * an optical-flow sensor supplies in-plane motion counts and a surface
//!   quality signal, modeled and calibrated in [`optical`];
//! * [`fusion`] combines the two into a relative 3D trajectory;
//! * [`gestures`] recognizes tap / double-tap / press from the surface
//!   quality stream, and [`interact`] maps pose and strokes to selection,
//!   translation, and rotation commands;
//! * [`protocol`] speaks the device's line-oriented wire format;
//! * [`simtrace`] generates deterministic synthetic traces with exact ground
//!   truth, and [`evalstats`] scores reconstructions against that truth with
//!   the full error/ANOVA/regression pipeline (special functions in
//!   [`stats`]).
//!
//! The crate is `no_std`-compatible (with `alloc`); enable the `libm`
//! feature instead of the default `std` for embedded builds. File formats,
//! parallel evaluation, and the command-line front end live in the companion
//! `fingerfuse` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("enable at least one of the `std` or `libm` features");

mod flt;

pub mod ahrs;
pub mod evalstats;
pub mod fusion;
pub mod geom;
pub mod gestures;
pub mod interact;
pub mod optical;
pub mod protocol;
pub mod simtrace;
pub mod stats;
