//! Post-hoc checking of a morph output directory. Reads only the emitted
//! files and parses them with its own code, not the library's.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Note {
    pub onset: u64,
    pub duration: u64,
    pub track: u64,
    pub pitch: i64,
}

fn be(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0, |a, &b| (a << 8) | b as u64)
}

fn varlen(data: &[u8], pos: &mut usize) -> u64 {
    let mut v = 0u64;
    loop {
        let b = data[*pos];
        *pos += 1;
        v = (v << 7) | (b & 0x7f) as u64;
        if b & 0x80 == 0 {
            return v;
        }
    }
}

/// Minimal SMF reader: returns (ticks per quarter, notes in ticks) with
/// the chunk index as the track.
pub fn read_smf(data: &[u8]) -> (u64, Vec<Note>) {
    assert_eq!(&data[0..4], b"MThd", "missing header chunk");
    let header_len = be(&data[4..8]) as usize;
    let division = be(&data[12..14]);
    assert!(division & 0x8000 == 0, "SMPTE division");
    let mut pos = 8 + header_len;
    let mut notes = Vec::new();
    let mut chunk = 0u64;
    while pos + 8 <= data.len() {
        let len = be(&data[pos + 4..pos + 8]) as usize;
        let body = &data[pos + 8..pos + 8 + len];
        let is_track = &data[pos..pos + 4] == b"MTrk";
        pos += 8 + len;
        if !is_track {
            continue;
        }
        let mut open: BTreeMap<(u8, u8), Vec<u64>> = BTreeMap::new();
        let (mut i, mut tick, mut status) = (0usize, 0u64, 0u8);
        while i < body.len() {
            tick += varlen(body, &mut i);
            if body[i] & 0x80 != 0 {
                status = body[i];
                i += 1;
            }
            match status {
                0xff => {
                    i += 1;
                    let l = varlen(body, &mut i) as usize;
                    i += l;
                }
                0xf0 | 0xf7 => {
                    let l = varlen(body, &mut i) as usize;
                    i += l;
                }
                s => {
                    let kind = s & 0xf0;
                    let ch = s & 0x0f;
                    let two = !matches!(kind, 0xc0 | 0xd0);
                    let (a, b) = (body[i], if two { body[i + 1] } else { 0 });
                    i += if two { 2 } else { 1 };
                    if kind == 0x90 && b > 0 {
                        open.entry((ch, a)).or_default().push(tick);
                    } else if kind == 0x80 || kind == 0x90 {
                        let starts = open.get_mut(&(ch, a)).expect("note off without note on");
                        let start = starts.remove(0);
                        notes.push(Note {
                            onset: start,
                            duration: tick - start,
                            track: chunk,
                            pitch: a as i64,
                        });
                    }
                }
            }
        }
        assert!(open.values().all(|v| v.is_empty()), "unterminated notes");
        chunk += 1;
    }
    notes.sort();
    (division, notes)
}

fn numbers_after(text: &str, tag: &str) -> Vec<(i64, i64)> {
    text.match_indices(tag)
        .map(|(i, _)| {
            let rest = &text[i + tag.len()..];
            let inner = &rest[..rest.find(')').unwrap()];
            let (a, b) = inner.split_once(',').unwrap();
            (a.trim().parse().unwrap(), b.trim().parse().unwrap())
        })
        .collect()
}

/// (pattern points, translators) per line of a `.tec` file.
pub type TecLine = (Vec<(i64, i64)>, Vec<(i64, i64)>);

pub fn read_tecs(text: &str) -> Vec<TecLine> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let split = l.find("V(").expect("no translator list");
            (numbers_after(&l[..split], "p("), numbers_after(&l[split..], "v("))
        })
        .collect()
}

pub struct MappingRow {
    pub onset: u64,
    pub duration: u64,
    pub track: u64,
    pub template: i64,
    pub pitch: i64,
}

pub fn read_mapping(text: &str) -> Vec<MappingRow> {
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<i64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            MappingRow {
                onset: f[1] as u64,
                duration: f[2] as u64,
                track: f[3] as u64,
                template: f[4],
                pitch: f[5],
            }
        })
        .collect()
}

/// Number of violated TEC equalities, range bounds and MIDI/mapping
/// mismatches. Zero means the output honours every constraint.
pub fn violations(dir: &Path) -> Result<usize, String> {
    let read = |name: &str| fs::read_to_string(dir.join(name)).map_err(|e| format!("{name}: {e}"));
    let report: serde_json::Value = serde_json::from_str(&read("report.json")?).map_err(|e| e.to_string())?;
    let tpb = report["tatums_per_beat"].as_u64().ok_or("report lacks tatums_per_beat")?;
    let ranges: BTreeMap<u64, (i64, i64)> = report["problem"]["ranges"]
        .as_object()
        .ok_or("report lacks ranges")?
        .iter()
        .map(|(k, v)| (k.parse().unwrap(), (v[0].as_i64().unwrap(), v[1].as_i64().unwrap())))
        .collect();
    let mapping = read_mapping(&read("mapping.csv")?);
    let midi = fs::read(dir.join("output.mid")).map_err(|e| e.to_string())?;
    let (ppq, ticks) = read_smf(&midi);

    let mut bad = 0;
    // the MIDI file carries exactly the mapped notes
    let from_midi: Vec<Note> = ticks
        .iter()
        .map(|n| Note {
            onset: n.onset * tpb / ppq,
            duration: n.duration * tpb / ppq,
            ..*n
        })
        .collect();
    let mut from_map: Vec<Note> = mapping
        .iter()
        .map(|r| Note {
            onset: r.onset,
            duration: r.duration,
            track: r.track,
            pitch: r.pitch,
        })
        .collect();
    from_map.sort();
    if from_midi != from_map {
        bad += 1;
    }
    for n in &from_midi {
        match ranges.get(&n.track) {
            Some(&(lo, hi)) if (lo..=hi).contains(&n.pitch) => {}
            _ => bad += 1,
        }
    }

    let mut at: BTreeMap<(i64, i64), BTreeSet<i64>> = BTreeMap::new();
    for r in &mapping {
        at.entry((r.onset as i64, r.template)).or_default().insert(r.pitch);
    }
    for (pattern, translators) in read_tecs(&read("patterns.tec")?) {
        for &(dt, dp) in &translators {
            for &(t, p) in &pattern {
                let (Some(src), Some(dst)) = (at.get(&(t, p)), at.get(&(t + dt, p + dp))) else {
                    bad += 1;
                    continue;
                };
                for a in src {
                    for b in dst {
                        if b - a != dp {
                            bad += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(bad)
}

/// File contents with the trace's wall-clock column blanked.
pub fn masked_trace(text: &str) -> String {
    text.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            if f.len() > 1 && !l.starts_with('#') && f[0] != "move" {
                f[1] = "-";
            }
            f.join(",") + "\n"
        })
        .collect()
}

#[derive(Debug)]
pub struct TraceRow {
    pub objective: f64,
    pub best: f64,
    pub neighborhood: String,
    pub perturbation: bool,
}

pub fn read_trace(text: &str) -> Vec<TraceRow> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("move"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            TraceRow {
                objective: f[2].parse().unwrap(),
                best: f[3].parse().unwrap(),
                neighborhood: f[4].to_string(),
                perturbation: f[5] == "1",
            }
        })
        .collect()
}
