//! IO, file formats, and batch plumbing around the fingerfuse core:
//! trace/scene/calibration files, report emission, wire-log replay, the
//! evaluation runner, and the interaction demo.

pub mod calibfile;
pub mod demo;
pub mod evaluate;
pub mod gestureconfig;
pub mod replay;
pub mod report;
pub mod scenefile;
pub mod tracefile;
