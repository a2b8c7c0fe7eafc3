//! Spiral-array geometry: the pitch-class helix, chord and key
//! representations built from it, centers of effect, pitch spelling and
//! global key detection.
//!
//! Pitch classes live on the line of fifths (C = 0, G = 1, F = -1, ...).
//! Index `k` maps to `(r sin(kπ/2), r cos(kπ/2), k h)`, so one fifth is a
//! quarter turn and four fifths (a major third) stack vertically.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::score::Piece;

/// Natural pitch classes of F C G D A E B, the letters in line-of-fifths order.
const LETTER_PCS: [i32; 7] = [5, 0, 7, 2, 9, 4, 11];
const LETTER_NAMES: [char; 7] = ['F', 'C', 'G', 'D', 'A', 'E', 'B'];

/// Enharmonic candidates for spelling lie within this many fifths of the tonic.
pub const SPELLING_WINDOW: i32 = 15;
/// Key search covers tonics within this many fifths of the piece center.
pub const KEY_WINDOW: i32 = 7;

const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpiralConfig {
    pub radius: f64,
    pub height: f64,
    /// Chord weights for root, fifth and third.
    pub chord_weights: [f64; 3],
    /// Key weights for tonic, dominant and subdominant chords.
    pub key_weights: [f64; 3],
    /// Share of the major V chord in the minor-key dominant.
    pub minor_dominant_blend: f64,
    /// Share of the minor iv chord in the minor-key subdominant.
    pub minor_subdominant_blend: f64,
    pub fifths_bound: i32,
}

impl Default for SpiralConfig {
    fn default() -> Self {
        Self {
            radius: 1.0,
            height: (2.0f64 / 15.0).sqrt(),
            chord_weights: [0.536, 0.274, 0.190],
            key_weights: [0.516, 0.315, 0.168],
            minor_dominant_blend: 0.75,
            minor_subdominant_blend: 0.75,
            fifths_bound: 35,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SpiralPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SpiralPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &SpiralPoint) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    fn scaled(&self, w: f64) -> SpiralPoint {
        SpiralPoint::new(self.x * w, self.y * w, self.z * w)
    }

    fn add(&self, o: &SpiralPoint) -> SpiralPoint {
        SpiralPoint::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    /// Weighted mean. The published key weights sum to 0.999; dividing by
    /// the total keeps positions equivariant under transposition.
    fn weighted_sum(parts: &[(SpiralPoint, f64)]) -> SpiralPoint {
        let total: f64 = parts.iter().map(|(_, w)| w).sum();
        parts
            .iter()
            .fold(SpiralPoint::default(), |acc, (p, w)| acc.add(&p.scaled(*w / total)))
    }
}

/// A pitch with explicit spelling: a line-of-fifths index plus octave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SpelledPitch {
    pub fifths: i32,
    pub octave: i32,
}

impl SpelledPitch {
    /// Spell `midi` with line-of-fifths index `fifths`. Fails if the index
    /// does not name the MIDI pitch class.
    pub fn new(midi: u8, fifths: i32) -> Result<Self> {
        if (7 * fifths - midi as i32).rem_euclid(12) != 0 {
            return Err(Error::InvalidOption(format!(
                "fifths index {fifths} does not spell MIDI pitch {midi}"
            )));
        }
        let octave = (midi as i32 - Self::spelled_pc(fifths)).div_euclid(12) - 1;
        Ok(Self { fifths, octave })
    }

    /// Semitone offset of the spelled letter plus accidentals from C; may
    /// fall outside 0..12 (B♯ = 12, C♭ = -1).
    fn spelled_pc(fifths: i32) -> i32 {
        let letter = (fifths + 1).rem_euclid(7) as usize;
        LETTER_PCS[letter] + (fifths + 1).div_euclid(7)
    }

    pub fn pitch_class(&self) -> u8 {
        (7 * self.fifths).rem_euclid(12) as u8
    }

    pub fn midi(&self) -> i32 {
        (self.octave + 1) * 12 + Self::spelled_pc(self.fifths)
    }

    pub fn name(&self) -> String {
        let letter = LETTER_NAMES[(self.fifths + 1).rem_euclid(7) as usize];
        let alter = (self.fifths + 1).div_euclid(7);
        let acc = if alter >= 0 {
            "#".repeat(alter as usize)
        } else {
            "b".repeat((-alter) as usize)
        };
        format!("{letter}{acc}")
    }
}

impl fmt::Display for SpelledPitch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.name(), self.octave)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Major,
    Minor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyRep {
    pub tonic: i32,
    pub mode: Mode,
    pub position: SpiralPoint,
}

impl KeyRep {
    pub fn name(&self) -> String {
        let tonic = SpelledPitch {
            fifths: self.tonic,
            octave: 4,
        }
        .name();
        match self.mode {
            Mode::Major => format!("{tonic} major"),
            Mode::Minor => format!("{} minor", tonic.to_lowercase()),
        }
    }
}

/// Weighted points in the spiral array.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cloud {
    points: Vec<(SpiralPoint, f64)>,
}

impl Cloud {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a point; non-positive weights are ignored.
    pub fn push(&mut self, point: SpiralPoint, weight: f64) {
        if weight > 0.0 {
            self.points.push((point, weight));
        }
    }

    pub fn points(&self) -> &[(SpiralPoint, f64)] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|(_, w)| w).sum()
    }

    /// Weight-normalized combination of the cloud's points.
    pub fn center_of_effect(&self) -> Result<SpiralPoint> {
        center_of_effect(&self.points)
    }
}

impl FromIterator<(SpiralPoint, f64)> for Cloud {
    fn from_iter<I: IntoIterator<Item = (SpiralPoint, f64)>>(iter: I) -> Self {
        let mut c = Cloud::new();
        for (p, w) in iter {
            c.push(p, w);
        }
        c
    }
}

pub fn center_of_effect(points: &[(SpiralPoint, f64)]) -> Result<SpiralPoint> {
    let total: f64 = points.iter().map(|(_, w)| w).sum();
    if points.is_empty() || total <= 0.0 {
        return Err(Error::EmptyCloud);
    }
    Ok(SpiralPoint::weighted_sum(points))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpiralArray {
    pub config: SpiralConfig,
}

impl SpiralArray {
    pub fn new(config: SpiralConfig) -> Self {
        Self { config }
    }

    /// Helix position of line-of-fifths index `k`, without the bound check.
    pub fn helix(&self, k: i32) -> SpiralPoint {
        let angle = k as f64 * FRAC_PI_2;
        let r = self.config.radius;
        SpiralPoint::new(r * angle.sin(), r * angle.cos(), k as f64 * self.config.height)
    }

    pub fn fifths_position(&self, k: i32) -> Result<SpiralPoint> {
        let bound = self.config.fifths_bound;
        if k.abs() > bound {
            return Err(Error::FifthsOutOfRange { index: k, bound });
        }
        Ok(self.helix(k))
    }

    /// Position of a spelled pitch; the octave is ignored.
    pub fn pitch_position(&self, p: SpelledPitch) -> Result<SpiralPoint> {
        self.fifths_position(p.fifths)
    }

    pub fn chord_position(&self, root: i32, mode: Mode) -> SpiralPoint {
        let [w_root, w_fifth, w_third] = self.config.chord_weights;
        let third = match mode {
            Mode::Major => root + 4,
            Mode::Minor => root - 3,
        };
        SpiralPoint::weighted_sum(&[
            (self.helix(root), w_root),
            (self.helix(root + 1), w_fifth),
            (self.helix(third), w_third),
        ])
    }

    pub fn key_position(&self, tonic: i32, mode: Mode) -> KeyRep {
        let [w_tonic, w_dominant, w_subdominant] = self.config.key_weights;
        let position = match mode {
            Mode::Major => SpiralPoint::weighted_sum(&[
                (self.chord_position(tonic, Mode::Major), w_tonic),
                (self.chord_position(tonic + 1, Mode::Major), w_dominant),
                (self.chord_position(tonic - 1, Mode::Major), w_subdominant),
            ]),
            Mode::Minor => {
                let a = self.config.minor_dominant_blend;
                let b = self.config.minor_subdominant_blend;
                let dominant = SpiralPoint::weighted_sum(&[
                    (self.chord_position(tonic + 1, Mode::Major), a),
                    (self.chord_position(tonic + 1, Mode::Minor), 1.0 - a),
                ]);
                let subdominant = SpiralPoint::weighted_sum(&[
                    (self.chord_position(tonic - 1, Mode::Minor), b),
                    (self.chord_position(tonic - 1, Mode::Major), 1.0 - b),
                ]);
                SpiralPoint::weighted_sum(&[
                    (self.chord_position(tonic, Mode::Minor), w_tonic),
                    (dominant, w_dominant),
                    (subdominant, w_subdominant),
                ])
            }
        };
        KeyRep {
            tonic,
            mode,
            position,
        }
    }

    /// Nearest key to `point` among tonics within [`KEY_WINDOW`] fifths of
    /// `center`, both modes. Ties go to the tonic nearer `center`, then
    /// major, then the smaller index.
    pub fn nearest_key(&self, point: &SpiralPoint, center: i32) -> KeyRep {
        let mut best: Option<(f64, KeyRep)> = None;
        for tonic in center - KEY_WINDOW..=center + KEY_WINDOW {
            for mode in [Mode::Major, Mode::Minor] {
                let key = self.key_position(tonic, mode);
                let d = key.position.distance(point);
                let better = match &best {
                    None => true,
                    Some((bd, bk)) => {
                        d < bd - TIE_EPS
                            || (d <= bd + TIE_EPS
                                && ((tonic - center).abs(), mode, tonic)
                                    < ((bk.tonic - center).abs(), bk.mode, bk.tonic))
                    }
                };
                if better {
                    best = Some((d, key));
                }
            }
        }
        best.expect("key window is non-empty").1
    }

    /// Enharmonic spelling of `midi` nearest to `context`.
    ///
    /// Candidates are the line-of-fifths indices of the pitch class within
    /// [`SPELLING_WINDOW`] of the key's tonic (and inside the configured
    /// bound). Distance ties go to the index nearer the tonic, then to the
    /// smaller absolute index.
    pub fn spell(&self, midi: u8, context: &SpiralPoint, key: &KeyRep) -> SpelledPitch {
        let bound = self.config.fifths_bound;
        let lo = (key.tonic - SPELLING_WINDOW).max(-bound);
        let hi = (key.tonic + SPELLING_WINDOW).min(bound);
        let base = (7 * midi as i32).rem_euclid(12);
        let first = lo + (base - lo).rem_euclid(12);
        let mut best: Option<(f64, i32)> = None;
        let mut k = first;
        while k <= hi {
            let d = self.helix(k).distance(context);
            let better = match best {
                None => true,
                Some((bd, bk)) => {
                    d < bd - TIE_EPS
                        || (d <= bd + TIE_EPS
                            && ((k - key.tonic).abs(), k.abs()) < ((bk - key.tonic).abs(), bk.abs()))
                }
            };
            if better {
                best = Some((d, k));
            }
            k += 12;
        }
        // the window spans 31 indices, so every pitch class has a candidate
        // unless the tonic sits at the bound; fall back to the plain index
        let k = best.map(|(_, k)| k).unwrap_or(base);
        SpelledPitch::new(midi, k).expect("candidate matches pitch class")
    }

    /// Global key of a piece: the nearest key to the duration-weighted
    /// center of effect of all notes, each note spelled by
    /// [`compact_spelling`].
    pub fn global_key(&self, piece: &Piece) -> Result<KeyRep> {
        if piece.is_empty() {
            return Err(Error::EmptyPiece);
        }
        let mut pc_weight = [0.0f64; 12];
        for n in piece.notes() {
            pc_weight[(n.pitch % 12) as usize] += n.duration as f64;
        }
        let spelled = compact_spelling(&pc_weight);
        let mut cloud = Cloud::new();
        let mut weighted_index = 0.0;
        for pc in 0..12 {
            if let Some(k) = spelled[pc] {
                cloud.push(self.helix(k), pc_weight[pc]);
                weighted_index += k as f64 * pc_weight[pc];
            }
        }
        let ce = cloud.center_of_effect()?;
        let center = (weighted_index / cloud.total_weight()).round() as i32;
        Ok(self.nearest_key(&ce, center))
    }
}

/// Spell the pitch classes with non-zero weight as one compact run on the
/// line of fifths.
///
/// The circle of fifths is cut at its widest empty arc, which leaves the
/// present pitch classes as a contiguous run; the run is then placed (by
/// whole multiples of 12) so that its weighted mean index is closest to C.
/// Ties between equally wide arcs use the same closeness rule, then prefer
/// the flatter placement.
pub fn compact_spelling(pc_weight: &[f64; 12]) -> [Option<i32>; 12] {
    // circle-of-fifths positions present
    let mut present: Vec<i32> = (0..12)
        .filter(|&pc: &i32| pc_weight[pc as usize] > 0.0)
        .map(|pc| (7 * pc).rem_euclid(12))
        .collect();
    present.sort_unstable();
    let mut out = [None; 12];
    if present.is_empty() {
        return out;
    }
    let n = present.len();
    let gap_after = |i: usize| (present[(i + 1) % n] - present[i] - 1).rem_euclid(12);
    let widest = (0..n).map(gap_after).max().unwrap_or(0);

    let mut best: Option<(f64, f64, Vec<i32>)> = None;
    for cut in (0..n).filter(|&i| n == 1 || gap_after(i) == widest) {
        // run starts right after the cut
        let start = (cut + 1) % n;
        let mut run = Vec::with_capacity(n);
        let mut prev = present[start];
        run.push(prev);
        for j in 1..n {
            let mut f = present[(start + j) % n];
            while f <= prev {
                f += 12;
            }
            run.push(f);
            prev = f;
        }
        let weight_of = |f: i32| pc_weight[(7 * f).rem_euclid(12) as usize];
        let total: f64 = run.iter().map(|&f| weight_of(f)).sum();
        let mean = run.iter().map(|&f| f as f64 * weight_of(f)).sum::<f64>() / total;
        let shift = -(mean / 12.0).round() as i32 * 12;
        let placed: Vec<i32> = run.iter().map(|f| f + shift).collect();
        let mean = mean + shift as f64;
        let better = match &best {
            None => true,
            Some((bm, babs, _)) => {
                mean.abs() < babs - TIE_EPS || (mean.abs() <= babs + TIE_EPS && mean < *bm)
            }
        };
        if better {
            best = Some((mean, mean.abs(), placed));
        }
        // the opposite placement can tie at |mean| = 6
        let alt: Vec<i32> = run.iter().map(|f| f + shift - 12 * mean.signum() as i32).collect();
        let alt_mean = mean - 12.0 * mean.signum();
        if let Some((bm, babs, _)) = &best {
            if alt_mean.abs() < babs - TIE_EPS || (alt_mean.abs() <= babs + TIE_EPS && alt_mean < *bm) {
                best = Some((alt_mean, alt_mean.abs(), alt));
            }
        }
    }
    for k in best.expect("at least one cut").2 {
        out[(7 * k).rem_euclid(12) as usize] = Some(k);
    }
    out
}
