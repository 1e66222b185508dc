//! Line-oriented wire format used by the device firmware.
//!
//! Each report is one ASCII line of eight comma-separated fields: four
//! quaternion components, two optical displacement counts, and two gesture
//! flag characters. `X` marks a gesture, `O` is the empty mark; the legal
//! flag pairs are `O, O` (none), `X, O` (tap), and `X, X` (double-tap).
//! Quaternions on the wire are whatever the firmware sent; they are not
//! re-normalized here.

use alloc::format;
use alloc::string::String;

use crate::geom::Quaternion;
use thiserror::Error;

/// Wire gesture mark, the decoded flag pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireGesture {
    None,
    Tap,
    DoubleTap,
}

/// One parsed report line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireFrame {
    pub q: Quaternion,
    pub dx: i32,
    pub dy: i32,
    /// First flag character was `X`.
    pub tap_flag: bool,
    /// Second flag character was `X`.
    pub dtap_flag: bool,
}

impl WireFrame {
    pub fn new(q: Quaternion, dx: i32, dy: i32, gesture: WireGesture) -> WireFrame {
        let (tap_flag, dtap_flag) = match gesture {
            WireGesture::None => (false, false),
            WireGesture::Tap => (true, false),
            WireGesture::DoubleTap => (true, true),
        };
        WireFrame { q, dx, dy, tap_flag, dtap_flag }
    }

    /// Decodes the flag pair; `None` if the combination is illegal.
    pub fn gesture(&self) -> Option<WireGesture> {
        match (self.tap_flag, self.dtap_flag) {
            (false, false) => Some(WireGesture::None),
            (true, false) => Some(WireGesture::Tap),
            (true, true) => Some(WireGesture::DoubleTap),
            (false, true) => None,
        }
    }
}

/// Parse and encode failures. Field indices are 1-based, left to right.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("expected 8 comma-separated fields, found {found}")]
    FieldCount { found: usize },
    #[error("field {field}: not a plain decimal number")]
    InvalidFloat { field: usize },
    #[error("field {field}: not a signed integer")]
    InvalidInteger { field: usize },
    #[error("field {field}: flag must be a single X or O")]
    InvalidFlag { field: usize },
    #[error("field {field}: flag pair O, X has no meaning")]
    IllegalFlagPair { field: usize },
    #[error("cannot encode flag pair O, X")]
    EncodeIllegalFlags,
}

/// A plain decimal float: optional sign, digits, optional fractional part.
/// Exponents, infinities, and NaN spellings are rejected.
fn parse_plain_float(text: &str, field: usize) -> Result<f64, ProtocolError> {
    let err = ProtocolError::InvalidFloat { field };
    let body = text.strip_prefix(['+', '-']).unwrap_or(text);
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let ok = match frac_part {
        // "12.5", "12.", ".5"
        Some(f) => (digits(int_part) || int_part.is_empty()) && (digits(f) || f.is_empty()) && !(int_part.is_empty() && f.is_empty()),
        None => digits(int_part),
    };
    if !ok {
        return Err(err);
    }
    text.parse::<f64>().map_err(|_| err)
}

fn parse_integer(text: &str, field: usize) -> Result<i32, ProtocolError> {
    let err = ProtocolError::InvalidInteger { field };
    let body = text.strip_prefix(['+', '-']).unwrap_or(text);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err);
    }
    text.parse::<i32>().map_err(|_| err)
}

fn parse_flag(text: &str, field: usize) -> Result<bool, ProtocolError> {
    match text {
        "X" => Ok(true),
        "O" => Ok(false),
        _ => Err(ProtocolError::InvalidFlag { field }),
    }
}

/// Parses one report line. Surrounding whitespace per field (and a trailing
/// newline) is tolerated; everything else is rejected with the 1-based
/// index of the offending field.
pub fn parse_line(line: &str) -> Result<WireFrame, ProtocolError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let fields: alloc::vec::Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 8 {
        return Err(ProtocolError::FieldCount { found: fields.len() });
    }
    let w = parse_plain_float(fields[0], 1)?;
    let x = parse_plain_float(fields[1], 2)?;
    let y = parse_plain_float(fields[2], 3)?;
    let z = parse_plain_float(fields[3], 4)?;
    let dx = parse_integer(fields[4], 5)?;
    let dy = parse_integer(fields[5], 6)?;
    let tap_flag = parse_flag(fields[6], 7)?;
    let dtap_flag = parse_flag(fields[7], 8)?;
    if !tap_flag && dtap_flag {
        return Err(ProtocolError::IllegalFlagPair { field: 8 });
    }
    Ok(WireFrame { q: Quaternion { w, x, y, z }, dx, dy, tap_flag, dtap_flag })
}

/// Plain decimal with at most 6 significant digits, trailing zeros trimmed.
fn format_float(x: f64) -> String {
    if x == 0.0 {
        return String::from("0");
    }
    #[allow(unused_imports)]
    use crate::flt::FloatExt;
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).clamp(0, 30) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.');
        s.truncate(trimmed.len());
    }
    if s == "-0" {
        return String::from("0");
    }
    s
}

/// Encodes one report as a newline-terminated line in canonical form:
/// single space after each comma, floats in plain decimal.
pub fn emit_line(frame: &WireFrame) -> Result<String, ProtocolError> {
    if frame.gesture().is_none() {
        return Err(ProtocolError::EncodeIllegalFlags);
    }
    let flag = |b: bool| if b { 'X' } else { 'O' };
    Ok(format!(
        "{}, {}, {}, {}, {}, {}, {}, {}\n",
        format_float(frame.q.w),
        format_float(frame.q.x),
        format_float(frame.q.y),
        format_float(frame.q.z),
        frame.dx,
        frame.dy,
        flag(frame.tap_flag),
        flag(frame.dtap_flag),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_reference_tap_line() {
        let f = parse_line("0.2, 0.4, 0.1, 0.4, -2, -4, X, O").unwrap();
        assert_eq!(f.q, Quaternion { w: 0.2, x: 0.4, y: 0.1, z: 0.4 });
        assert_eq!((f.dx, f.dy), (-2, -4));
        assert_eq!(f.gesture(), Some(WireGesture::Tap));
    }

    #[test]
    fn parses_the_identity_idle_line() {
        let f = parse_line("1.0, 0.0, 0.0, 0.0, 0, 0, O, O").unwrap();
        assert_eq!(f.q, Quaternion::IDENTITY);
        assert_eq!(f.gesture(), Some(WireGesture::None));
    }

    #[test]
    fn rejects_wrong_field_count() {
        assert_eq!(parse_line("0.1, 0.2, 0.3"), Err(ProtocolError::FieldCount { found: 3 }));
        assert_eq!(
            parse_line("1, 0, 0, 0, 0, 0, O, O, O"),
            Err(ProtocolError::FieldCount { found: 9 })
        );
    }

    #[test]
    fn rejects_bad_numerals_with_field_index() {
        assert_eq!(
            parse_line("1e-3, 0, 0, 0, 0, 0, O, O"),
            Err(ProtocolError::InvalidFloat { field: 1 })
        );
        assert_eq!(
            parse_line("1, 0, nan, 0, 0, 0, O, O"),
            Err(ProtocolError::InvalidFloat { field: 3 })
        );
        assert_eq!(
            parse_line("1, 0, 0, 0, 2.5, 0, O, O"),
            Err(ProtocolError::InvalidInteger { field: 5 })
        );
        assert_eq!(
            parse_line("1, 0, 0, 0, 0, --3, O, O"),
            Err(ProtocolError::InvalidInteger { field: 6 })
        );
    }

    #[test]
    fn rejects_bad_flags_with_field_index() {
        assert_eq!(
            parse_line("1, 0, 0, 0, 0, 0, Y, O"),
            Err(ProtocolError::InvalidFlag { field: 7 })
        );
        assert_eq!(
            parse_line("1, 0, 0, 0, 0, 0, O, XX"),
            Err(ProtocolError::InvalidFlag { field: 8 })
        );
        assert_eq!(
            parse_line("1, 0, 0, 0, 0, 0, O, X"),
            Err(ProtocolError::IllegalFlagPair { field: 8 })
        );
    }

    #[test]
    fn accepts_signed_and_dotted_forms() {
        let f = parse_line("-0.5, +.25, 3., -0, +7, -12, X, X").unwrap();
        assert_eq!(f.q.w, -0.5);
        assert_eq!(f.q.x, 0.25);
        assert_eq!(f.q.y, 3.0);
        assert_eq!(f.q.z, 0.0);
        assert_eq!((f.dx, f.dy), (7, -12));
        assert_eq!(f.gesture(), Some(WireGesture::DoubleTap));
    }

    #[test]
    fn emits_canonical_identity_line() {
        let f = WireFrame::new(Quaternion::IDENTITY, 0, 0, WireGesture::None);
        assert_eq!(emit_line(&f).unwrap(), "1, 0, 0, 0, 0, 0, O, O\n");
    }

    #[test]
    fn reference_line_round_trips() {
        let f = parse_line("0.2, 0.4, 0.1, 0.4, -2, -4, X, O").unwrap();
        let line = emit_line(&f).unwrap();
        assert_eq!(line, "0.2, 0.4, 0.1, 0.4, -2, -4, X, O\n");
        assert_eq!(parse_line(&line).unwrap(), f);
    }

    #[test]
    fn emit_rejects_illegal_flag_pair() {
        let f = WireFrame { q: Quaternion::IDENTITY, dx: 0, dy: 0, tap_flag: false, dtap_flag: true };
        assert_eq!(emit_line(&f), Err(ProtocolError::EncodeIllegalFlags));
    }

    #[test]
    fn float_formatting_is_plain_decimal() {
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(-0.0), "0");
        assert_eq!(format_float(1.0), "1");
        assert_eq!(format_float(-0.25), "-0.25");
        assert_eq!(format_float(0.123456789), "0.123457");
        assert_eq!(format_float(0.9999997), "1");
        assert_eq!(format_float(1e-7), "0.0000001");
    }

    #[test]
    fn round_trip_stays_within_tolerance() {
        let q = Quaternion { w: 0.707107, x: -0.000001, y: 0.5, z: -0.499999 };
        let f = WireFrame::new(q, 127, -300, WireGesture::DoubleTap);
        let g = parse_line(&emit_line(&f).unwrap()).unwrap();
        assert!((g.q.w - f.q.w).abs() <= 1e-6);
        assert!((g.q.x - f.q.x).abs() <= 1e-6);
        assert!((g.q.y - f.q.y).abs() <= 1e-6);
        assert!((g.q.z - f.q.z).abs() <= 1e-6);
        assert_eq!((g.dx, g.dy), (f.dx, f.dy));
        assert_eq!(g.gesture(), f.gesture());
    }

    #[test]
    fn emitted_lines_have_seven_commas_and_one_newline() {
        let f = WireFrame::new(Quaternion { w: 0.9, x: 0.1, y: -0.3, z: 0.2 }, -5, 9, WireGesture::Tap);
        let line = emit_line(&f).unwrap();
        assert_eq!(line.matches(',').count(), 7);
        assert!(line.ends_with('\n'));
        assert_eq!(line.matches('\n').count(), 1);
    }
}
