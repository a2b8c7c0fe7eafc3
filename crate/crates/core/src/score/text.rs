//! Plain-text point-set format.
//!
//! One note per line, `onset duration midi_pitch velocity track`, separated
//! by whitespace. `#` starts a comment. Three comment directives carry the
//! piece metadata so that a written file reads back unchanged:
//!
//! ```text
//! # tatums_per_beat: 2
//! # beats_per_bar: 4
//! # title: Invention
//! 0 2 60 80 0
//! ```

use num_rational::Ratio;

use super::{NoteEvent, Piece};
use crate::error::{Error, Result};

fn directive<'a>(comment: &'a str, key: &str) -> Option<&'a str> {
    let rest = comment.trim_start().strip_prefix(key)?;
    Some(rest.strip_prefix(':')?.trim())
}

fn parse_ratio(s: &str, line: usize) -> Result<Ratio<u32>> {
    let err = || Error::TextParse {
        line,
        message: format!("invalid beats_per_bar {s:?}"),
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let n: u32 = n.trim().parse().map_err(|_| err())?;
            let d: u32 = d.trim().parse().map_err(|_| err())?;
            if d == 0 {
                return Err(err());
            }
            Ok(Ratio::new(n, d))
        }
        None => Ok(Ratio::from_integer(s.parse().map_err(|_| err())?)),
    }
}

pub fn parse_pointset_text(text: &str) -> Result<Piece> {
    let mut notes = Vec::new();
    let mut tatums_per_beat = 2;
    let mut beats_per_bar = Ratio::from_integer(4);
    let mut title = String::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let (content, comment) = match raw.split_once('#') {
            Some((c, comment)) => (c, Some(comment)),
            None => (raw, None),
        };
        if let Some(comment) = comment.filter(|_| content.trim().is_empty()) {
            if let Some(v) = directive(comment, "tatums_per_beat") {
                tatums_per_beat = v.parse().map_err(|_| Error::TextParse {
                    line,
                    message: format!("invalid tatums_per_beat {v:?}"),
                })?;
            } else if let Some(v) = directive(comment, "beats_per_bar") {
                beats_per_bar = parse_ratio(v, line)?;
            } else if let Some(v) = directive(comment, "title") {
                title = v.to_string();
            }
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 {
            return Err(Error::TextParse {
                line,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let mut v = [0u32; 5];
        for (slot, (field, name)) in v.iter_mut().zip(
            fields
                .iter()
                .zip(["onset", "duration", "midi_pitch", "velocity", "track"]),
        ) {
            *slot = field.parse().map_err(|_| Error::TextParse {
                line,
                message: format!("{name}: {field:?} is not a non-negative integer"),
            })?;
        }
        let [onset, duration, pitch, velocity, track] = v;
        if pitch > 127 || velocity > 127 || track > u16::MAX as u32 {
            return Err(Error::TextParse {
                line,
                message: "pitch/velocity must be 0..=127 and track must fit in 16 bits".into(),
            });
        }
        let note = NoteEvent::new(onset, duration, pitch as u8, velocity as u8, track as u16)
            .map_err(|e| Error::TextParse {
                line,
                message: e.to_string(),
            })?;
        notes.push(note);
    }
    Piece::new(notes, tatums_per_beat, beats_per_bar, title)
}

/// Canonical form: metadata directives, then notes in piece order.
pub fn write_pointset_text(piece: &Piece) -> String {
    let mut out = String::new();
    out.push_str(&format!("# tatums_per_beat: {}\n", piece.tatums_per_beat()));
    out.push_str(&format!("# beats_per_bar: {}\n", piece.beats_per_bar()));
    if !piece.title.is_empty() {
        out.push_str(&format!("# title: {}\n", piece.title.trim()));
    }
    for n in piece.notes() {
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            n.onset, n.duration, n.pitch, n.velocity, n.track
        ));
    }
    out
}
