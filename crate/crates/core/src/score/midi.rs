//! Standard MIDI File reading (format 0/1) and writing (format 1).
//!
//! Only note events, the first track name, and the first time signature are
//! interpreted; everything else is skipped. Ticks are quantized to the tatum
//! grid by nearest-tatum rounding with ties rounding down.

use std::collections::HashMap;

use num_rational::Ratio;

use super::{NoteEvent, Piece};
use crate::error::{Error, Result};

/// Channels used by the writer; 9 is avoided because players map it to drums.
const CHANNELS: [u8; 15] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15];

/// Grids tried, coarsest first, when inferring the tatum from the file.
const INFER_CANDIDATES: [u32; 11] = [1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48];

const DEFAULT_TATUMS_PER_BEAT: u32 = 2;
const WRITER_TEMPO_US: u32 = 500_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TatumGrid {
    /// Coarsest grid in a fixed candidate list on which every note boundary
    /// falls exactly; eighth notes when none fits.
    Infer,
    Fixed(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MidiOptions {
    pub tatum: TatumGrid,
}

impl Default for MidiOptions {
    fn default() -> Self {
        Self {
            tatum: TatumGrid::Infer,
        }
    }
}

pub fn parse_midi(bytes: &[u8]) -> Result<Piece> {
    parse_midi_with(bytes, MidiOptions::default())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::MidiParse {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn u8(&mut self) -> Result<u8> {
        match self.bytes.get(self.pos) {
            Some(&b) => {
                self.pos += 1;
                Ok(b)
            }
            None => self.err("unexpected end of data"),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return self.err(format!("need {n} bytes, {} left", self.bytes.len() - self.pos));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn vlq(&mut self) -> Result<u32> {
        let start = self.pos;
        let mut v: u32 = 0;
        for _ in 0..4 {
            let b = self.u8()?;
            v = (v << 7) | (b & 0x7f) as u32;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(Error::MidiParse {
            offset: start,
            message: "variable-length quantity longer than 4 bytes".into(),
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct RawNote {
    start: u64,
    end: u64,
    pitch: u8,
    velocity: u8,
    track: u16,
}

#[derive(Default)]
struct ChunkData {
    notes: Vec<RawNote>,
    name: Option<String>,
    time_signature: Option<(u8, u8)>,
}

fn parse_track(r: &mut Reader, end: usize, track_of_channel: impl Fn(u8) -> u16) -> Result<ChunkData> {
    let mut data = ChunkData::default();
    // (channel, pitch) -> (start tick, velocity)
    let mut open: HashMap<(u8, u8), (u64, u8)> = HashMap::new();
    let mut tick: u64 = 0;
    let mut running: Option<u8> = None;

    while r.pos < end {
        tick += r.vlq()? as u64;
        let mut status = r.u8()?;
        let mut first_data = None;
        if status < 0x80 {
            match running {
                Some(s) => {
                    first_data = Some(status);
                    status = s;
                }
                None => {
                    r.pos -= 1;
                    return r.err("data byte without running status");
                }
            }
        }
        match status {
            0x80..=0xef => {
                running = Some(status);
                let d1 = match first_data {
                    Some(b) => b,
                    None => r.u8()?,
                };
                let kind = status & 0xf0;
                let channel = status & 0x0f;
                if kind == 0xc0 || kind == 0xd0 {
                    continue;
                }
                let d2 = r.u8()?;
                if d1 > 127 || d2 > 127 {
                    r.pos -= 1;
                    return r.err("data byte with high bit set");
                }
                let is_on = kind == 0x90 && d2 > 0;
                let is_off = kind == 0x80 || (kind == 0x90 && d2 == 0);
                if is_on {
                    if let Some((started, _)) = open.get(&(channel, d1)) {
                        return Err(Error::MidiPairing {
                            pitch: d1,
                            tick,
                            channel,
                            message: format!("note-on while the note from tick {started} is still sounding"),
                        });
                    }
                    open.insert((channel, d1), (tick, d2));
                } else if is_off {
                    // Stray note-offs are ignored.
                    if let Some((start, velocity)) = open.remove(&(channel, d1)) {
                        data.notes.push(RawNote {
                            start,
                            end: tick,
                            pitch: d1,
                            velocity,
                            track: track_of_channel(channel),
                        });
                    }
                }
            }
            0xf0 | 0xf7 => {
                running = None;
                let len = r.vlq()? as usize;
                r.take(len)?;
            }
            0xff => {
                running = None;
                let kind = r.u8()?;
                let len = r.vlq()? as usize;
                let payload = r.take(len)?;
                match kind {
                    0x03 if data.name.is_none() => {
                        data.name = Some(String::from_utf8_lossy(payload).into_owned());
                    }
                    0x58 if data.time_signature.is_none() && len >= 2 => {
                        data.time_signature = Some((payload[0], payload[1]));
                    }
                    0x2f => break,
                    _ => {}
                }
            }
            _ => {
                r.pos -= 1;
                return r.err(format!("invalid status byte {status:#04x}"));
            }
        }
    }
    if let Some((&(channel, pitch), &(start, _))) = open.iter().min_by_key(|(k, v)| (v.0, **k)) {
        return Err(Error::MidiPairing {
            pitch,
            tick: start,
            channel,
            message: "note-on without matching note-off".into(),
        });
    }
    Ok(data)
}

fn quantize(tick: u64, tatums_per_beat: u32, ppqn: u32) -> u64 {
    let n = tick * tatums_per_beat as u64;
    let d = ppqn as u64;
    let (q, rem) = (n / d, n % d);
    if 2 * rem > d {
        q + 1
    } else {
        q
    }
}

fn infer_tatums(notes: &[RawNote], ppqn: u32) -> u32 {
    let fits = |tpb: u32| {
        notes.iter().all(|n| {
            (n.start * tpb as u64).is_multiple_of(ppqn as u64) && (n.end * tpb as u64).is_multiple_of(ppqn as u64)
        })
    };
    INFER_CANDIDATES
        .iter()
        .copied()
        .find(|&tpb| fits(tpb))
        .unwrap_or(DEFAULT_TATUMS_PER_BEAT)
}

pub fn parse_midi_with(bytes: &[u8], options: MidiOptions) -> Result<Piece> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).ok() != Some(b"MThd".as_slice()) {
        return Err(Error::MidiParse {
            offset: 0,
            message: "missing MThd header".into(),
        });
    }
    let header_len = r.u32()? as usize;
    if header_len < 6 {
        return r.err(format!("header length {header_len} < 6"));
    }
    let format_pos = r.pos;
    let format = r.u16()?;
    let ntrks = r.u16()?;
    let division = r.u16()?;
    r.take(header_len - 6)?;
    if format > 1 {
        return Err(Error::MidiParse {
            offset: format_pos,
            message: format!("unsupported SMF format {format}"),
        });
    }
    if division & 0x8000 != 0 || division == 0 {
        return Err(Error::MidiParse {
            offset: format_pos + 4,
            message: "SMPTE or zero division is not supported".into(),
        });
    }
    let ppqn = division as u32;

    let mut chunks = Vec::new();
    let mut mtrk_index: u16 = 0;
    while r.pos < bytes.len() && chunks.len() < ntrks as usize {
        let id_pos = r.pos;
        let id = r.take(4)?;
        let len = r.u32()? as usize;
        if bytes.len() - r.pos < len {
            return Err(Error::MidiParse {
                offset: id_pos,
                message: format!("chunk length {len} runs past end of file"),
            });
        }
        let end = r.pos + len;
        if id == b"MTrk" {
            let index = mtrk_index;
            let data = if format == 0 {
                parse_track(&mut r, end, |ch| ch as u16)?
            } else {
                parse_track(&mut r, end, |_| index)?
            };
            chunks.push(data);
            mtrk_index += 1;
        }
        r.pos = end;
    }
    if chunks.len() < ntrks as usize {
        return r.err(format!("header announces {ntrks} tracks, found {}", chunks.len()));
    }

    let raw: Vec<RawNote> = chunks.iter().flat_map(|c| c.notes.iter().copied()).collect();
    let tatums_per_beat = match options.tatum {
        TatumGrid::Fixed(t) => t,
        TatumGrid::Infer => infer_tatums(&raw, ppqn),
    };
    let mut notes = Vec::with_capacity(raw.len());
    for n in &raw {
        let onset = quantize(n.start, tatums_per_beat, ppqn);
        let end = quantize(n.end, tatums_per_beat, ppqn);
        let duration = end.saturating_sub(onset).max(1);
        let onset = u32::try_from(onset).map_err(|_| Error::InvalidNote("onset overflows".into()))?;
        let duration = u32::try_from(duration).map_err(|_| Error::InvalidNote("duration overflows".into()))?;
        notes.push(NoteEvent::new(onset, duration, n.pitch, n.velocity, n.track)?);
    }
    let beats_per_bar = chunks
        .iter()
        .find_map(|c| c.time_signature)
        .filter(|&(_, dd)| dd <= 6)
        .map(|(nn, dd)| Ratio::new(nn as u32 * 4, 1u32 << dd))
        .filter(|r| *r.numer() > 0 && *r.numer() <= 255)
        .unwrap_or_else(|| Ratio::from_integer(4));
    let title = chunks.first().and_then(|c| c.name.clone()).unwrap_or_default();
    Piece::new(notes, tatums_per_beat, beats_per_bar, title)
}

fn push_vlq(out: &mut Vec<u8>, mut v: u32) {
    let mut buf = [0u8; 4];
    let mut i = 3;
    buf[i] = (v & 0x7f) as u8;
    v >>= 7;
    while v > 0 {
        i -= 1;
        buf[i] = (v & 0x7f) as u8 | 0x80;
        v >>= 7;
    }
    out.extend_from_slice(&buf[i..]);
}

fn ppqn_for(tatums_per_beat: u32) -> u32 {
    let g = gcd(tatums_per_beat, 480);
    let lcm = tatums_per_beat / g * 480;
    if lcm <= super::MAX_TATUMS_PER_BEAT {
        lcm
    } else {
        tatums_per_beat
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn time_signature(beats_per_bar: Ratio<u32>) -> Option<(u8, u8)> {
    // beats are quarter notes: nn / 2^dd = beats_per_bar / 4
    let den = *beats_per_bar.denom() * 4;
    let num = *beats_per_bar.numer();
    (num <= 255 && den.is_power_of_two()).then(|| (num as u8, den.trailing_zeros() as u8))
}

/// Format-1 SMF with one MIDI track per `track` value (0 through the highest
/// used). Same-pitch overlaps within a track are spread over channels so the
/// file always re-parses.
pub fn write_midi(piece: &Piece) -> Vec<u8> {
    let tpb = piece.tatums_per_beat();
    let ppqn = ppqn_for(tpb);
    let ticks_per_tatum = ppqn / tpb;
    let n_tracks = piece.notes().iter().map(|n| n.track as usize + 1).max().unwrap_or(1);

    let mut out = Vec::new();
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&(n_tracks as u16).to_be_bytes());
    out.extend_from_slice(&(ppqn as u16).to_be_bytes());

    for track in 0..n_tracks {
        // (tick, is_on, pitch, channel, velocity)
        let mut events: Vec<(u64, bool, u8, u8, u8)> = Vec::new();
        let base = track % CHANNELS.len();
        // (channel slot, pitch) -> end tatum of the note currently holding it
        let mut busy: HashMap<(usize, u8), u32> = HashMap::new();
        for n in piece.notes().iter().filter(|n| n.track as usize == track) {
            let slot = (0..CHANNELS.len())
                .map(|k| (base + k) % CHANNELS.len())
                .find(|s| busy.get(&(*s, n.pitch)).is_none_or(|&end| end <= n.onset))
                .unwrap_or(base);
            busy.insert((slot, n.pitch), n.end());
            let ch = CHANNELS[slot];
            let t = ticks_per_tatum as u64;
            events.push((n.onset as u64 * t, true, n.pitch, ch, n.velocity.max(1)));
            events.push((n.end() as u64 * t, false, n.pitch, ch, 0));
        }
        events.sort_unstable_by_key(|&(tick, on, pitch, ch, _)| (tick, on, pitch, ch));

        let mut body = Vec::new();
        if track == 0 {
            if !piece.title.is_empty() {
                body.push(0);
                body.extend_from_slice(&[0xff, 0x03]);
                push_vlq(&mut body, piece.title.len() as u32);
                body.extend_from_slice(piece.title.as_bytes());
            }
            if let Some((nn, dd)) = time_signature(piece.beats_per_bar()) {
                body.extend_from_slice(&[0, 0xff, 0x58, 4, nn, dd, 24, 8]);
            }
            let tempo = WRITER_TEMPO_US.to_be_bytes();
            body.extend_from_slice(&[0, 0xff, 0x51, 3, tempo[1], tempo[2], tempo[3]]);
        }
        let mut last = 0u64;
        for (tick, on, pitch, ch, vel) in events {
            push_vlq(&mut body, (tick - last) as u32);
            last = tick;
            if on {
                body.extend_from_slice(&[0x90 | ch, pitch, vel]);
            } else {
                body.extend_from_slice(&[0x80 | ch, pitch, 0x40]);
            }
        }
        body.extend_from_slice(&[0, 0xff, 0x2f, 0]);

        out.extend_from_slice(b"MTrk");
        out.extend_from_slice(&(body.len() as u32).to_be_bytes());
        out.extend_from_slice(&body);
    }
    out
}
