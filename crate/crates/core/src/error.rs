use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("midi parse error at byte {offset}: {message}")]
    MidiParse { offset: usize, message: String },

    #[error("note pairing error: pitch {pitch} at tick {tick} (channel {channel}): {message}")]
    MidiPairing {
        pitch: u8,
        tick: u64,
        channel: u8,
        message: String,
    },

    #[error("line {line}: {message}")]
    TextParse { line: usize, message: String },

    #[error("invalid note: {0}")]
    InvalidNote(String),

    #[error("fifths index {index} outside supported bound ±{bound}")]
    FifthsOutOfRange { index: i32, bound: i32 },

    #[error("center of effect of an empty cloud")]
    EmptyCloud,

    #[error("piece has no notes")]
    EmptyPiece,

    #[error("segment length must be positive")]
    BadSegment,

    #[error("tension profile length mismatch for {measure}: expected {expected}, got {actual}")]
    ProfileLength {
        measure: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("TEC parse error at offset {offset}: {message}")]
    TecParse { offset: usize, message: String },

    #[error("cover does not match template: {0}")]
    CoverMismatch(String),

    #[error("no feasible pitch for note {note}: range constraints of its pattern occurrences do not intersect")]
    Infeasible { note: usize },

    #[error("invalid option: {0}")]
    InvalidOption(String),
}
