//! Score representation on a fixed tatum grid.
//!
//! A [`Piece`] is a sorted list of [`NoteEvent`]s. Time is counted in integer
//! tatums; `tatums_per_beat` relates the grid to quarter-note beats. Pitches
//! are MIDI numbers. The pattern algorithms consume the 2-D view returned by
//! [`Piece::to_pointset`], and the optimizer walks the vertical
//! [`TimeSlice`]s returned by [`Piece::slices`].

mod midi;
mod text;

pub use midi::{parse_midi, parse_midi_with, write_midi, MidiOptions, TatumGrid};
pub use text::{parse_pointset_text, write_pointset_text};

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::patterns::{Point, PointSet};

/// Largest tatum resolution the MIDI writer can express as a PPQN value.
pub const MAX_TATUMS_PER_BEAT: u32 = 0x7fff;

/// One note on the tatum grid.
///
/// Field order defines the canonical sort: onset, pitch, track, then
/// duration and velocity so that the order is total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NoteEvent {
    pub onset: u32,
    pub pitch: u8,
    pub track: u16,
    pub duration: u32,
    pub velocity: u8,
}

impl NoteEvent {
    pub fn new(onset: u32, duration: u32, pitch: u8, velocity: u8, track: u16) -> Result<Self> {
        if duration == 0 {
            return Err(Error::InvalidNote(format!(
                "zero duration at onset {onset}, pitch {pitch}"
            )));
        }
        if pitch > 127 || velocity > 127 {
            return Err(Error::InvalidNote(format!(
                "pitch {pitch} / velocity {velocity} outside 0..=127"
            )));
        }
        if onset.checked_add(duration).is_none() {
            return Err(Error::InvalidNote(format!("onset {onset} + duration overflows")));
        }
        Ok(Self {
            onset,
            pitch,
            track,
            duration,
            velocity,
        })
    }

    #[inline]
    pub fn end(&self) -> u32 {
        self.onset + self.duration
    }
}

/// Notes sharing one onset, as indices into [`Piece::notes`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeSlice {
    pub onset: u32,
    pub note_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    notes: Vec<NoteEvent>,
    tatums_per_beat: u32,
    beats_per_bar: Ratio<u32>,
    pub title: String,
}

impl Piece {
    pub fn new(
        mut notes: Vec<NoteEvent>,
        tatums_per_beat: u32,
        beats_per_bar: Ratio<u32>,
        title: impl Into<String>,
    ) -> Result<Self> {
        if tatums_per_beat == 0 || tatums_per_beat > MAX_TATUMS_PER_BEAT {
            return Err(Error::InvalidOption(format!(
                "tatums_per_beat {tatums_per_beat} outside 1..={MAX_TATUMS_PER_BEAT}"
            )));
        }
        let denom = *beats_per_bar.denom();
        if *beats_per_bar.numer() == 0
            || *beats_per_bar.numer() > 255
            || !denom.is_power_of_two()
            || denom > 64
        {
            return Err(Error::InvalidOption(format!(
                "beats_per_bar {beats_per_bar} is not expressible as a time signature"
            )));
        }
        for n in &notes {
            NoteEvent::new(n.onset, n.duration, n.pitch, n.velocity, n.track)?;
        }
        notes.sort_unstable();
        Ok(Self {
            notes,
            tatums_per_beat,
            beats_per_bar,
            title: title.into(),
        })
    }

    /// Piece on an eighth-note grid in 4/4.
    pub fn from_notes(notes: Vec<NoteEvent>) -> Result<Self> {
        Self::new(notes, 2, Ratio::from_integer(4), "")
    }

    pub fn empty(tatums_per_beat: u32) -> Self {
        Self {
            notes: Vec::new(),
            tatums_per_beat,
            beats_per_bar: Ratio::from_integer(4),
            title: String::new(),
        }
    }

    pub fn notes(&self) -> &[NoteEvent] {
        &self.notes
    }

    pub fn len(&self) -> usize {
        self.notes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }

    pub fn tatums_per_beat(&self) -> u32 {
        self.tatums_per_beat
    }

    pub fn beats_per_bar(&self) -> Ratio<u32> {
        self.beats_per_bar
    }

    /// End of the last sounding note, in tatums.
    pub fn end(&self) -> u32 {
        self.notes.iter().map(NoteEvent::end).max().unwrap_or(0)
    }

    /// Same rhythm and dynamics with new pitches, `pitches[i]` replacing the
    /// pitch of `notes()[i]`. The result is re-sorted.
    pub fn with_pitches(&self, pitches: &[u8]) -> Result<Self> {
        if pitches.len() != self.notes.len() {
            return Err(Error::InvalidOption(format!(
                "expected {} pitches, got {}",
                self.notes.len(),
                pitches.len()
            )));
        }
        let notes = self
            .notes
            .iter()
            .zip(pitches)
            .map(|(n, &p)| NoteEvent::new(n.onset, n.duration, p, n.velocity, n.track))
            .collect::<Result<Vec<_>>>()?;
        Self::new(notes, self.tatums_per_beat, self.beats_per_bar, self.title.clone())
    }

    /// Transpose every note by `semitones`, failing if any leaves 0..=127.
    pub fn transposed(&self, semitones: i32) -> Result<Self> {
        let pitches = self
            .notes
            .iter()
            .map(|n| {
                let p = n.pitch as i32 + semitones;
                u8::try_from(p)
                    .ok()
                    .filter(|p| *p <= 127)
                    .ok_or_else(|| Error::InvalidNote(format!("transposed pitch {p}")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.with_pitches(&pitches)
    }

    /// Distinct tracks in ascending order.
    pub fn tracks(&self) -> Vec<u16> {
        let mut t: Vec<u16> = self.notes.iter().map(|n| n.track).collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    /// Lowest and highest pitch used by `track`, if it has notes.
    pub fn track_range(&self, track: u16) -> Option<(u8, u8)> {
        let mut it = self.notes.iter().filter(|n| n.track == track).map(|n| n.pitch);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| (lo.min(p), hi.max(p))))
    }

    /// 2-D `(onset, pitch)` view. Notes at the same point collapse; the
    /// point set keeps a back-map to every note index at each point.
    pub fn to_pointset(&self) -> PointSet {
        PointSet::from_indexed(
            self.notes
                .iter()
                .enumerate()
                .map(|(i, n)| (Point::new(n.onset as i64, n.pitch as i64), i)),
        )
    }

    /// Partition of note indices by onset. Notes are sorted by onset, so
    /// each slice is a contiguous index run.
    pub fn slices(&self) -> Vec<TimeSlice> {
        let mut out: Vec<TimeSlice> = Vec::new();
        for (i, n) in self.notes.iter().enumerate() {
            match out.last_mut() {
                Some(s) if s.onset == n.onset => s.note_indices.push(i),
                _ => out.push(TimeSlice {
                    onset: n.onset,
                    note_indices: vec![i],
                }),
            }
        }
        out
    }
}
