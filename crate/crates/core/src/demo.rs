//! Small built-in pieces for tests, examples and the browser demo.
//!
//! All use eighth-note tatums (`tatums_per_beat = 2`) in 4/4.

use crate::score::{NoteEvent, Piece};

/// Onset, duration and interval above the first note, in tatums and semitones.
const MOTIF: [(u32, u32, i32); 5] = [(0, 2, 0), (2, 1, 3), (3, 1, 5), (4, 2, 3), (6, 2, 0)];

const BAR: u32 = 8;

fn note(onset: u32, duration: u32, pitch: i32, velocity: u8, track: u16) -> NoteEvent {
    NoteEvent::new(onset, duration, pitch as u8, velocity, track).expect("fixture notes are valid")
}

fn motif_at(bar: u32, first: i32) -> impl Iterator<Item = NoteEvent> {
    MOTIF
        .iter()
        .map(move |&(o, d, i)| note(bar * BAR + o, d, first + i, 84, 0))
}

/// Four bars, 34 notes: a five-note melody motif in bars 1, 2 and 4, a
/// broken triad in bar 3, and a walking quarter-note bass.
pub fn desk_piece() -> Piece {
    let mut notes: Vec<NoteEvent> = Vec::new();
    notes.extend(motif_at(0, 64));
    notes.extend(motif_at(1, 62));
    notes.extend([(0, 4, 60), (4, 2, 64), (6, 2, 67)].map(|(o, d, p)| note(2 * BAR + o, d, p, 84, 0)));
    notes.extend(motif_at(3, 69));
    let bass = [[48, 55, 52, 55], [43, 50, 47, 50], [45, 52, 48, 52], [41, 48, 43, 47]];
    for (b, bar) in bass.iter().enumerate() {
        for (q, &p) in bar.iter().enumerate() {
            notes.push(note(b as u32 * BAR + q as u32 * 2, 2, p, 70, 1));
        }
    }
    let mut piece = Piece::from_notes(notes).expect("fixture is valid");
    piece.title = "desk piece".into();
    piece
}

/// Four bars with the motif stated at four transpositions over a half-note
/// bass: 28 notes, one exactly repeated five-note pattern.
pub fn motif_fixture() -> Piece {
    let mut notes: Vec<NoteEvent> = Vec::new();
    for (bar, first) in [64, 62, 69, 67].into_iter().enumerate() {
        notes.extend(motif_at(bar as u32, first));
    }
    for (i, p) in [48, 43, 45, 41, 48, 43, 41, 43].into_iter().enumerate() {
        notes.push(note(i as u32 * 4, 4, p, 70, 1));
    }
    let mut piece = Piece::from_notes(notes).expect("fixture is valid");
    piece.title = "motif fixture".into();
    piece
}
