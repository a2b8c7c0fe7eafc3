//! Tonal tension profiles: cloud diameter, cloud momentum and tensile strain
//! over equal-length segments of a piece.
//!
//! Segment `j` covers `[j·L, (j+1)·L)` tatums where `L` is the segment
//! length in beats times the tatum grid. A note contributes its spelled
//! helix position to every segment it sounds in, weighted by the tatums it
//! sounds there. An empty segment has diameter 0 and carries the last
//! non-empty center of effect forward for momentum and strain; the first
//! segment has momentum 0.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::score::{NoteEvent, Piece};
use crate::spiral::{Cloud, KeyRep, SpiralArray, SpiralPoint};

pub const MEASURE_NAMES: [&str; 3] = ["diameter", "momentum", "strain"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    /// Sum of absolute per-segment differences.
    #[default]
    L1,
    /// Square root of the summed squared differences.
    L2,
}

impl std::str::FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Self::L1),
            "l2" => Ok(Self::L2),
            other => Err(Error::InvalidOption(format!("unknown distance {other:?}"))),
        }
    }
}

/// The three per-segment tension vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensionProfile {
    #[serde(serialize_with = "ser_ratio")]
    pub segment_beats: Ratio<u32>,
    pub diameter: Vec<f64>,
    pub momentum: Vec<f64>,
    pub strain: Vec<f64>,
    /// Key the strain was measured against, when known.
    pub key: Option<KeyRep>,
}

fn ser_ratio<S: serde::Serializer>(r: &Ratio<u32>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(*r.numer() as f64 / *r.denom() as f64)
}

impl TensionProfile {
    pub fn len(&self) -> usize {
        self.diameter.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diameter.is_empty()
    }

    pub fn measure(&self, i: usize) -> &[f64] {
        match i {
            0 => &self.diameter,
            1 => &self.momentum,
            2 => &self.strain,
            _ => panic!("tension measure index {i} out of range"),
        }
    }

    pub fn measures(&self) -> [&[f64]; 3] {
        [&self.diameter, &self.momentum, &self.strain]
    }

    /// CSV with header `segment,onset_beats,diameter,momentum,strain`,
    /// values to six decimals.
    pub fn to_csv(&self) -> String {
        let seg = *self.segment_beats.numer() as f64 / *self.segment_beats.denom() as f64;
        let mut out = String::from("segment,onset_beats,diameter,momentum,strain\n");
        for j in 0..self.len() {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6}\n",
                j,
                j as f64 * seg,
                self.diameter[j],
                self.momentum[j],
                self.strain[j]
            ));
        }
        out
    }

    /// Reads the format written by [`TensionProfile::to_csv`]. The segment
    /// and onset columns are not interpreted.
    pub fn from_csv(text: &str, segment_beats: Ratio<u32>) -> Result<Self> {
        let mut profile = TensionProfile {
            segment_beats,
            diameter: Vec::new(),
            momentum: Vec::new(),
            strain: Vec::new(),
            key: None,
        };
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (line_no == 1 && line.starts_with("segment")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(Error::TextParse {
                    line: line_no,
                    message: format!("expected 5 columns, found {}", fields.len()),
                });
            }
            let mut vals = [0.0f64; 3];
            for (v, (f, name)) in vals.iter_mut().zip(fields[2..].iter().zip(MEASURE_NAMES)) {
                *v = f.parse().ok().filter(|x: &f64| x.is_finite() && *x >= 0.0).ok_or_else(|| {
                    Error::TextParse {
                        line: line_no,
                        message: format!("{name}: {f:?} is not a non-negative number"),
                    }
                })?;
            }
            profile.diameter.push(vals[0]);
            profile.momentum.push(vals[1]);
            profile.strain.push(vals[2]);
        }
        Ok(profile)
    }
}

/// Static assignment of notes to segments; depends only on rhythm.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub segment_beats: Ratio<u32>,
    /// Per segment: `(note index, sounding tatums)` in note order.
    pub members: Vec<Vec<(usize, f64)>>,
    /// Per note: the segments it sounds in, ascending.
    pub note_segments: Vec<Vec<usize>>,
}

impl Segmentation {
    pub fn new(piece: &Piece, segment_beats: Ratio<u32>) -> Result<Self> {
        if *segment_beats.numer() == 0 {
            return Err(Error::BadSegment);
        }
        let len = Ratio::new(
            *segment_beats.numer() as u64 * piece.tatums_per_beat() as u64,
            *segment_beats.denom() as u64,
        );
        let end = Ratio::from_integer(piece.end() as u64);
        let count = (end / len).ceil().to_integer() as usize;
        let mut members = vec![Vec::new(); count];
        let mut note_segments = vec![Vec::new(); piece.len()];
        for (i, n) in piece.notes().iter().enumerate() {
            let on = Ratio::from_integer(n.onset as u64);
            let off = Ratio::from_integer(n.end() as u64);
            let first = (on / len).floor().to_integer() as usize;
            let last = (off / len).ceil().to_integer() as usize;
            for j in first..last.min(count) {
                let lo = len * Ratio::from_integer(j as u64);
                let hi = lo + len;
                let a = if on > lo { on } else { lo };
                let b = if off < hi { off } else { hi };
                if b > a {
                    let w = b - a;
                    members[j].push((i, *w.numer() as f64 / *w.denom() as f64));
                    note_segments[i].push(j);
                }
            }
        }
        Ok(Self {
            segment_beats,
            members,
            note_segments,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Spells the notes of one segment and returns their cloud.
///
/// Notes are spelled in `(onset, pitch, track, duration, velocity)` order;
/// each one uses the center of effect of the notes already spelled in the
/// segment as context, the first one uses the key position.
pub fn segment_cloud(
    spiral: &SpiralArray,
    key: &KeyRep,
    members: &[(usize, f64)],
    note: impl Fn(usize) -> NoteEvent,
) -> Cloud {
    let mut order: Vec<(NoteEvent, f64)> = members.iter().map(|&(i, w)| (note(i), w)).collect();
    order.sort_by_key(|a| a.0);
    let mut cloud = Cloud::new();
    let mut acc = SpiralPoint::default();
    let mut total = 0.0;
    for (n, w) in order {
        let context = if total > 0.0 {
            SpiralPoint::new(acc.x / total, acc.y / total, acc.z / total)
        } else {
            key.position
        };
        let sp = spiral.spell(n.pitch, &context, key);
        let pos = spiral.helix(sp.fifths);
        acc = SpiralPoint::new(acc.x + pos.x * w, acc.y + pos.y * w, acc.z + pos.z * w);
        total += w;
        cloud.push(pos, w);
    }
    cloud
}

/// One cloud per segment, spelled against the piece's global key.
pub fn segment(piece: &Piece, segment_beats: Ratio<u32>, spiral: &SpiralArray) -> Result<Vec<Cloud>> {
    let seg = Segmentation::new(piece, segment_beats)?;
    if seg.is_empty() {
        return Ok(Vec::new());
    }
    let key = spiral.global_key(piece)?;
    Ok(seg
        .members
        .iter()
        .map(|m| segment_cloud(spiral, &key, m, |i| piece.notes()[i]))
        .collect())
}

/// Largest distance between two distinct points of the cloud.
pub fn cloud_diameter(cloud: &Cloud) -> f64 {
    let pts = cloud.points();
    let mut best = 0.0f64;
    for (i, (a, _)) in pts.iter().enumerate() {
        for (b, _) in &pts[i + 1..] {
            best = best.max(a.distance(b));
        }
    }
    best
}

/// Distance between the centers of effect of two clouds; 0 if either is
/// empty.
pub fn cloud_momentum(prev: &Cloud, curr: &Cloud) -> f64 {
    match (prev.center_of_effect(), curr.center_of_effect()) {
        (Ok(a), Ok(b)) => a.distance(&b),
        _ => 0.0,
    }
}

/// Distance from the cloud's center of effect to the key; 0 for an empty
/// cloud.
pub fn tensile_strain(cloud: &Cloud, key: &KeyRep) -> f64 {
    cloud
        .center_of_effect()
        .map(|ce| ce.distance(&key.position))
        .unwrap_or(0.0)
}

/// Per-segment values computed from a sequence of clouds, applying the
/// carry rule for empty segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentTension {
    pub diameter: f64,
    pub momentum: f64,
    pub strain: f64,
}

/// Momentum and strain given the effective (carried) centers of effect.
pub fn momentum_and_strain(
    prev: Option<&SpiralPoint>,
    curr: Option<&SpiralPoint>,
    key: &KeyRep,
) -> (f64, f64) {
    let momentum = match (prev, curr) {
        (Some(a), Some(b)) => a.distance(b),
        _ => 0.0,
    };
    let strain = curr.map(|c| c.distance(&key.position)).unwrap_or(0.0);
    (momentum, strain)
}

pub fn profile_from_clouds(clouds: &[Cloud], key: &KeyRep, segment_beats: Ratio<u32>) -> TensionProfile {
    let mut profile = TensionProfile {
        segment_beats,
        diameter: Vec::with_capacity(clouds.len()),
        momentum: Vec::with_capacity(clouds.len()),
        strain: Vec::with_capacity(clouds.len()),
        key: Some(*key),
    };
    let mut carried: Option<SpiralPoint> = None;
    for cloud in clouds {
        let prev = carried;
        if let Ok(ce) = cloud.center_of_effect() {
            carried = Some(ce);
        }
        let (m, s) = momentum_and_strain(prev.as_ref(), carried.as_ref(), key);
        profile.diameter.push(cloud_diameter(cloud));
        profile.momentum.push(m);
        profile.strain.push(s);
    }
    profile
}

/// Tension profile measured against a given key.
pub fn profile_with_key(
    piece: &Piece,
    segment_beats: Ratio<u32>,
    spiral: &SpiralArray,
    key: &KeyRep,
) -> Result<TensionProfile> {
    let seg = Segmentation::new(piece, segment_beats)?;
    let clouds: Vec<Cloud> = seg
        .members
        .iter()
        .map(|m| segment_cloud(spiral, key, m, |i| piece.notes()[i]))
        .collect();
    Ok(profile_from_clouds(&clouds, key, segment_beats))
}

/// Tension profile measured against the piece's own global key.
pub fn profile(piece: &Piece, segment_beats: Ratio<u32>, spiral: &SpiralArray) -> Result<TensionProfile> {
    let key = spiral.global_key(piece)?;
    profile_with_key(piece, segment_beats, spiral, &key)
}

fn check_lengths(a: &TensionProfile, b: &TensionProfile) -> Result<()> {
    for (i, name) in MEASURE_NAMES.iter().enumerate() {
        let (la, lb) = (a.measure(i).len(), b.measure(i).len());
        if la != lb {
            return Err(Error::ProfileLength {
                measure: name,
                expected: lb,
                actual: la,
            });
        }
    }
    Ok(())
}

/// Per-measure distances between two profiles.
pub fn measure_distances(a: &TensionProfile, b: &TensionProfile, kind: DistanceKind) -> Result<[f64; 3]> {
    check_lengths(a, b)?;
    let mut out = [0.0; 3];
    for (i, d) in out.iter_mut().enumerate() {
        let pairs = a.measure(i).iter().zip(b.measure(i));
        *d = match kind {
            DistanceKind::L1 => pairs.map(|(x, y)| ((x - y) * (x - y)).sqrt()).sum(),
            DistanceKind::L2 => pairs.map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        };
    }
    Ok(out)
}

/// Weighted sum of the per-measure distances.
pub fn profile_distance(
    a: &TensionProfile,
    b: &TensionProfile,
    weights: [f64; 3],
    kind: DistanceKind,
) -> Result<f64> {
    let d = measure_distances(a, b, kind)?;
    Ok(weights.iter().zip(d).map(|(w, d)| w * d).sum())
}

/// Pearson correlation; `None` when either series is constant or the
/// lengths differ.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

/// Correlation of each measure of `a` with the same measure of `b`.
pub fn correlations(a: &TensionProfile, b: &TensionProfile) -> [Option<f64>; 3] {
    [0, 1, 2].map(|i| pearson(a.measure(i), b.measure(i)))
}
