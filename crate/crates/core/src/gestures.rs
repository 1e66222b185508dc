//! Touch gesture recognition from the surface-quality and motion stream.
//!
//! Contact is a threshold crossing on the SQUAL register; taps are short,
//! nearly motionless contacts; a double-tap is two qualifying taps close in
//! time and place; a press is a sustained high-SQUAL phase (the lens pushed
//! toward the surface) within a contact. The state machine is deterministic:
//! identical sample streams yield identical event streams.
//!
//! Tap latency tradeoff: a detected tap is held back for the double-tap
//! window so the pair can be fused into one DoubleTap, mirroring the wire
//! encoding where the two are mutually exclusive. The held tap is released
//! by a later sample past the window, or by [`GestureDetector::finish`] at
//! end of stream.

use alloc::string::String;
use alloc::vec::Vec;

use crate::optical::{OpticalSample, MAX_SQUAL};
use thiserror::Error;

/// Errors from gesture configuration and queries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GestureError {
    #[error("squal {squal} is outside [0, 169]")]
    SqualOutOfRange { squal: u16 },
    #[error("invalid gesture config: {0}")]
    InvalidConfig(&'static str),
}

/// Trackable-feature count behind a SQUAL reading (the register stores a
/// quarter of the feature count).
pub fn feature_count(squal: u16) -> Result<u16, GestureError> {
    if squal > MAX_SQUAL as u16 {
        return Err(GestureError::SqualOutOfRange { squal });
    }
    Ok(squal * 4)
}

/// Per-texture gesture thresholds and windows.
#[derive(Debug, Clone, PartialEq)]
pub struct GestureConfig {
    /// SQUAL at or above this means the sensor is on the surface.
    pub contact_squal_threshold: u16,
    /// A contact no longer than this can be a tap, milliseconds.
    pub tap_window_ms: f64,
    /// Largest per-frame |dx|/|dy| allowed inside a tap, counts.
    pub tap_max_delta: i64,
    /// Second tap must land within this many ms of the first; valid
    /// configuration range [200, 500].
    pub doubletap_window_ms: f64,
    /// Largest per-axis offset between the two contacts' start locations.
    pub doubletap_max_offset: i64,
    /// SQUAL at or above this (sustained) while in contact means a press.
    pub press_squal_threshold: u16,
    /// How long the press threshold must hold, milliseconds.
    pub press_dwell_ms: f64,
    /// Texture the thresholds were tuned for.
    pub texture_name: String,
}

impl Default for GestureConfig {
    /// Mousepad tuning.
    fn default() -> Self {
        GestureConfig {
            contact_squal_threshold: 40,
            tap_window_ms: 300.0,
            tap_max_delta: 5,
            doubletap_window_ms: 300.0,
            doubletap_max_offset: 15,
            press_squal_threshold: 120,
            press_dwell_ms: 100.0,
            texture_name: String::from("mousepad"),
        }
    }
}

impl GestureConfig {
    pub fn validate(&self) -> Result<(), GestureError> {
        if self.contact_squal_threshold == 0 {
            return Err(GestureError::InvalidConfig("contact threshold must be positive"));
        }
        if self.contact_squal_threshold > self.press_squal_threshold {
            return Err(GestureError::InvalidConfig("contact threshold above press threshold"));
        }
        if self.press_squal_threshold > MAX_SQUAL as u16 {
            return Err(GestureError::InvalidConfig("press threshold above 169"));
        }
        if !(200.0..=500.0).contains(&self.doubletap_window_ms) {
            return Err(GestureError::InvalidConfig("double-tap window outside [200, 500] ms"));
        }
        if !(self.tap_window_ms > 0.0 && self.press_dwell_ms >= 0.0) {
            return Err(GestureError::InvalidConfig("windows must be positive"));
        }
        if self.tap_max_delta < 0 || self.doubletap_max_offset < 0 {
            return Err(GestureError::InvalidConfig("count tolerances must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GestureKind {
    ContactBegin,
    ContactEnd,
    Tap,
    DoubleTap,
    Press,
}

/// A recognized event. `location` is the motion accumulated since the
/// current contact began (the accumulator resets at every ContactBegin).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GestureEvent {
    pub kind: GestureKind,
    pub t: f64,
    pub location: (i64, i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    InContact,
    Pressed,
}

/// A tap waiting out the double-tap window.
#[derive(Debug, Clone, Copy)]
struct PendingTap {
    event: GestureEvent,
    /// Motion accumulated since this tap's contact began, updated through
    /// lift-off; compared against the offset tolerance when the next
    /// contact starts.
    drift_since_contact: (i64, i64),
}

/// Deterministic gesture state machine. One instance per stream.
#[derive(Debug, Clone)]
pub struct GestureDetector {
    config: GestureConfig,
    phase: Phase,
    /// Accumulated counts since the current contact began (or, between
    /// contacts, since the last one began: lift-off drift still counts
    /// toward the double-tap offset).
    acc: (i64, i64),
    contact_start_t: f64,
    contact_clean: bool,
    press_run_start: Option<f64>,
    press_fired: bool,
    pending: Option<PendingTap>,
}

impl GestureDetector {
    pub fn new(config: GestureConfig) -> Result<Self, GestureError> {
        config.validate()?;
        Ok(GestureDetector {
            config,
            phase: Phase::Idle,
            acc: (0, 0),
            contact_start_t: 0.0,
            contact_clean: false,
            press_run_start: None,
            press_fired: false,
            pending: None,
        })
    }

    pub fn config(&self) -> &GestureConfig {
        &self.config
    }

    /// Feeds one sample; timestamps must strictly increase within a stream.
    /// Returns the events decided at this sample, in order.
    pub fn update(&mut self, sample: &OpticalSample) -> Vec<GestureEvent> {
        let mut events = Vec::new();
        let t = sample.t;

        // Release a held tap once the double-tap window has lapsed.
        if let Some(p) = self.pending {
            if t - p.event.t > self.config.doubletap_window_ms / 1000.0 {
                events.push(p.event);
                self.pending = None;
            }
        }

        self.acc.0 += sample.dx as i64;
        self.acc.1 += sample.dy as i64;
        if self.pending.is_some() {
            if let Some(p) = self.pending.as_mut() {
                p.drift_since_contact.0 += sample.dx as i64;
                p.drift_since_contact.1 += sample.dy as i64;
            }
        }

        let in_contact_now = sample.squal as u16 >= self.config.contact_squal_threshold;
        match (self.phase, in_contact_now) {
            (Phase::Idle, true) => {
                self.phase = Phase::InContact;
                self.contact_start_t = t;
                // The begin frame's deltas are landing drift, not in-contact
                // motion; they count toward the double-tap offset instead.
                self.contact_clean = true;
                self.press_run_start = None;
                self.press_fired = false;
                self.acc = (0, 0);
                events.push(GestureEvent { kind: GestureKind::ContactBegin, t, location: (0, 0) });
            }
            (Phase::InContact | Phase::Pressed, false) => {
                self.phase = Phase::Idle;
                self.press_run_start = None;
                events.push(GestureEvent { kind: GestureKind::ContactEnd, t, location: self.acc });
                let duration_ms = (t - self.contact_start_t) * 1000.0;
                if self.contact_clean && duration_ms <= self.config.tap_window_ms {
                    let tap = GestureEvent { kind: GestureKind::Tap, t, location: self.acc };
                    self.resolve_tap(tap, &mut events);
                }
            }
            (Phase::InContact | Phase::Pressed, true) => {
                if (sample.dx as i64).abs() > self.config.tap_max_delta || (sample.dy as i64).abs() > self.config.tap_max_delta {
                    self.contact_clean = false;
                }
            }
            (Phase::Idle, false) => {}
        }

        // Press: the high-SQUAL run must be unbroken for the dwell time.
        if self.phase != Phase::Idle {
            if sample.squal as u16 >= self.config.press_squal_threshold {
                let run_start = *self.press_run_start.get_or_insert(t);
                if !self.press_fired && (t - run_start) * 1000.0 >= self.config.press_dwell_ms {
                    self.press_fired = true;
                    self.phase = Phase::Pressed;
                    events.push(GestureEvent { kind: GestureKind::Press, t, location: self.acc });
                }
            } else {
                self.press_run_start = None;
            }
        }

        events
    }

    /// Flushes any tap still waiting out the double-tap window. Call at end
    /// of stream; the detector can keep consuming samples afterwards.
    pub fn finish(&mut self) -> Vec<GestureEvent> {
        let mut events = Vec::new();
        if let Some(p) = self.pending.take() {
            events.push(p.event);
        }
        events
    }

    /// Pairs a fresh tap with a held one or holds it for the window.
    fn resolve_tap(&mut self, tap: GestureEvent, events: &mut Vec<GestureEvent>) {
        match self.pending.take() {
            Some(prev) => {
                let within_window = tap.t - prev.event.t <= self.config.doubletap_window_ms / 1000.0;
                // Offset between the two contacts' start locations: the
                // drift the first tap accumulated up to (and including) the
                // second contact's begin, minus motion inside this contact.
                let offset = (
                    prev.drift_since_contact.0 - self.acc.0,
                    prev.drift_since_contact.1 - self.acc.1,
                );
                let near = offset.0.abs() <= self.config.doubletap_max_offset
                    && offset.1.abs() <= self.config.doubletap_max_offset;
                if within_window && near {
                    events.push(GestureEvent { kind: GestureKind::DoubleTap, t: tap.t, location: tap.location });
                } else {
                    events.push(prev.event);
                    self.pending = Some(PendingTap { event: tap, drift_since_contact: tap.location });
                }
            }
            None => {
                self.pending = Some(PendingTap { event: tap, drift_since_contact: tap.location });
            }
        }
    }
}
