//! Pitch reassignment under pattern and range constraints.
//!
//! The template's rhythm, dynamics and track layout are kept; only pitches
//! change. Every translator of every TEC in the cover ties the pitches of a
//! pattern occurrence to the pattern itself, shifted by the translator's
//! pitch component. Notes linked this way form groups; each group has one
//! free pitch (its earliest note) and every other member follows at a fixed
//! offset taken from the template. The search only ever moves free pitches.

mod eval;
mod moves;
mod search;

pub use eval::Evaluator;
pub use moves::{Move, Neighborhood};
pub use search::{local_search, perturb, perturb_count, random_feasible, vns, SearchState, SearchTrace, TraceRow, VnsResult};

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::patterns::Cover;
use crate::score::Piece;
use crate::spiral::{KeyRep, SpiralArray, SpiralConfig};
use crate::tension::{self, DistanceKind, Segmentation, TensionProfile};

#[derive(Debug, Clone, PartialEq)]
pub struct MorphOptions {
    pub segment_beats: Ratio<u32>,
    pub weights: [f64; 3],
    /// Cost of each note that misses its requested pitch.
    pub penalty: f64,
    pub distance: DistanceKind,
    /// Requested pitches by template note index.
    pub fixed: BTreeMap<usize, u8>,
    /// Replaces the template-derived range of a track.
    pub range_overrides: BTreeMap<u16, (u8, u8)>,
    pub spiral: SpiralConfig,
    /// Share of free pitches re-drawn by a perturbation.
    pub perturb_fraction: f64,
    /// Slices to rewind after an accepted move.
    pub backtrack: usize,
}

impl Default for MorphOptions {
    fn default() -> Self {
        Self {
            segment_beats: Ratio::new(1, 2),
            weights: [1.0; 3],
            penalty: 1e6,
            distance: DistanceKind::L1,
            fixed: BTreeMap::new(),
            range_overrides: BTreeMap::new(),
            spiral: SpiralConfig::default(),
            perturb_fraction: 0.12,
            backtrack: 4,
        }
    }
}

/// One free pitch and the notes that follow it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FreeVar {
    /// Template index of the note whose pitch is decided.
    pub root: usize,
    /// `(note index, semitone offset from the root)`, root first.
    pub members: Vec<(usize, i32)>,
    /// Inclusive pitch bounds that keep every member in its track range.
    pub domain: (u8, u8),
    /// Index of the root's time slice.
    pub slice: usize,
}

impl FreeVar {
    pub fn domain_size(&self) -> usize {
        (self.domain.1 - self.domain.0) as usize + 1
    }

    pub fn admits(&self, pitch: u8) -> bool {
        (self.domain.0..=self.domain.1).contains(&pitch)
    }
}

/// Free pitch values, one per [`FreeVar`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Assignment {
    pub free: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct MorphProblem {
    template: Piece,
    cover: Cover,
    target: TensionProfile,
    options: MorphOptions,
    spiral: SpiralArray,
    key: KeyRep,
    segmentation: Segmentation,
    vars: Vec<FreeVar>,
    var_of: Vec<usize>,
    offset_of: Vec<i32>,
    slice_vars: Vec<Vec<usize>>,
    ranges: BTreeMap<u16, (u8, u8)>,
    /// Requested pitches grouped by variable.
    fixed_by_var: Vec<Vec<(i32, u8)>>,
}

/// Problem statistics for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSummary {
    pub notes: usize,
    pub up: usize,
    pub tecs: usize,
    pub compression_ratio: f64,
    pub segments: usize,
    pub slices: usize,
    pub key: String,
    pub ranges: BTreeMap<u16, (u8, u8)>,
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Keeps the smaller index as representative.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

impl MorphProblem {
    /// Derives free variables from `cover`, track ranges from the template,
    /// and fixes the key strain is measured against to the template's
    /// global key.
    pub fn new(template: Piece, cover: Cover, target: TensionProfile, options: MorphOptions) -> Result<Self> {
        if template.is_empty() {
            return Err(Error::EmptyPiece);
        }
        let ps = template.to_pointset();
        let covered = cover.covered_points();
        if covered.as_slice() != ps.points() {
            let stray = covered.iter().find(|p| !ps.contains(p));
            let missing = ps.points().iter().find(|p| covered.binary_search(p).is_err());
            return Err(Error::CoverMismatch(match (stray, missing) {
                (Some(p), _) => format!("{p} is covered but is not a template note"),
                (None, Some(p)) => format!("template note {p} is not covered"),
                _ => "cover and template differ".into(),
            }));
        }

        let notes = template.notes();
        let mut sets = DisjointSets::new(notes.len());
        for i in 0..ps.len() {
            let at = ps.notes_at(i);
            for &other in &at[1..] {
                sets.union(at[0], other);
            }
        }
        let note_at = |p| ps.index_of(&p).map(|i| ps.notes_at(i)[0]);
        for tec in &cover.tecs {
            for v in &tec.translators[1..] {
                for &p in &tec.pattern {
                    match (note_at(p), note_at(p + *v)) {
                        (Some(a), Some(b)) => sets.union(a, b),
                        _ => {
                            return Err(Error::CoverMismatch(format!(
                                "occurrence {} of {p} is not a template note",
                                p + *v
                            )))
                        }
                    }
                }
            }
        }

        let mut ranges = BTreeMap::new();
        for t in template.tracks() {
            let r = options
                .range_overrides
                .get(&t)
                .copied()
                .or_else(|| template.track_range(t))
                .expect("track has notes");
            if r.0 > r.1 || r.1 > 127 {
                return Err(Error::InvalidOption(format!("invalid range {r:?} for track {t}")));
            }
            ranges.insert(t, r);
        }

        let slices = template.slices();
        let mut slice_of = vec![0; notes.len()];
        for (s, slice) in slices.iter().enumerate() {
            for &i in &slice.note_indices {
                slice_of[i] = s;
            }
        }

        let mut var_of = vec![usize::MAX; notes.len()];
        let mut offset_of = vec![0i32; notes.len()];
        let mut vars: Vec<FreeVar> = Vec::new();
        let mut root_var: BTreeMap<usize, usize> = BTreeMap::new();
        for i in 0..notes.len() {
            let root = sets.find(i);
            let v = *root_var.entry(root).or_insert_with(|| {
                vars.push(FreeVar {
                    root,
                    members: Vec::new(),
                    domain: (0, 127),
                    slice: slice_of[root],
                });
                vars.len() - 1
            });
            let offset = notes[i].pitch as i32 - notes[root].pitch as i32;
            var_of[i] = v;
            offset_of[i] = offset;
            vars[v].members.push((i, offset));
        }
        for var in &mut vars {
            let (mut lo, mut hi) = (0i32, 127i32);
            for &(i, off) in &var.members {
                let (tlo, thi) = ranges[&notes[i].track];
                lo = lo.max(tlo as i32 - off);
                hi = hi.min(thi as i32 - off);
            }
            if lo > hi {
                return Err(Error::Infeasible { note: var.root });
            }
            var.domain = (lo as u8, hi as u8);
        }

        let mut slice_vars = vec![Vec::new(); slices.len()];
        for (v, var) in vars.iter().enumerate() {
            slice_vars[var.slice].push(v);
        }

        let mut fixed_by_var = vec![Vec::new(); vars.len()];
        for (&note, &pitch) in &options.fixed {
            if note >= notes.len() || pitch > 127 {
                return Err(Error::InvalidOption(format!(
                    "fixed pitch {pitch} for note {note}: piece has {} notes",
                    notes.len()
                )));
            }
            fixed_by_var[var_of[note]].push((offset_of[note], pitch));
        }

        let spiral = SpiralArray::new(options.spiral);
        let key = spiral.global_key(&template)?;
        let segmentation = Segmentation::new(&template, options.segment_beats)?;
        for (i, name) in tension::MEASURE_NAMES.iter().enumerate() {
            if target.measure(i).len() != segmentation.len() {
                return Err(Error::ProfileLength {
                    measure: name,
                    expected: segmentation.len(),
                    actual: target.measure(i).len(),
                });
            }
        }

        Ok(Self {
            template,
            cover,
            target,
            options,
            spiral,
            key,
            segmentation,
            vars,
            var_of,
            offset_of,
            slice_vars,
            ranges,
            fixed_by_var,
        })
    }

    /// Problem whose target is the template's own profile.
    pub fn with_template_target(template: Piece, cover: Cover, options: MorphOptions) -> Result<Self> {
        let spiral = SpiralArray::new(options.spiral);
        let target = tension::profile(&template, options.segment_beats, &spiral)?;
        Self::new(template, cover, target, options)
    }

    pub fn template(&self) -> &Piece {
        &self.template
    }

    pub fn cover(&self) -> &Cover {
        &self.cover
    }

    pub fn target(&self) -> &TensionProfile {
        &self.target
    }

    pub fn options(&self) -> &MorphOptions {
        &self.options
    }

    pub fn spiral(&self) -> &SpiralArray {
        &self.spiral
    }

    pub fn key(&self) -> &KeyRep {
        &self.key
    }

    pub fn segmentation(&self) -> &Segmentation {
        &self.segmentation
    }

    pub fn vars(&self) -> &[FreeVar] {
        &self.vars
    }

    /// Number of free pitches.
    pub fn up(&self) -> usize {
        self.vars.len()
    }

    pub fn var_of(&self, note: usize) -> usize {
        self.var_of[note]
    }

    pub fn slice_count(&self) -> usize {
        self.slice_vars.len()
    }

    pub fn slice_vars(&self, slice: usize) -> &[usize] {
        &self.slice_vars[slice]
    }

    pub fn ranges(&self) -> &BTreeMap<u16, (u8, u8)> {
        &self.ranges
    }

    pub(crate) fn fixed_for(&self, var: usize) -> &[(i32, u8)] {
        &self.fixed_by_var[var]
    }

    /// The template's own pitches as an assignment.
    pub fn template_assignment(&self) -> Assignment {
        Assignment {
            free: self.vars.iter().map(|v| self.template.notes()[v.root].pitch).collect(),
        }
    }

    /// Realized pitch of every template note, in template order.
    pub fn realize(&self, a: &Assignment) -> Vec<u8> {
        (0..self.template.len())
            .map(|i| (a.free[self.var_of[i]] as i32 + self.offset_of[i]) as u8)
            .collect()
    }

    /// `true` when every free value lies in its domain, which keeps every
    /// realized pitch inside its track range.
    pub fn is_feasible(&self, a: &Assignment) -> bool {
        a.free.len() == self.vars.len() && self.vars.iter().zip(&a.free).all(|(v, &x)| v.admits(x))
    }

    pub fn to_piece(&self, a: &Assignment) -> Piece {
        self.template
            .with_pitches(&self.realize(a))
            .expect("feasible pitches are valid MIDI")
    }

    /// Number of requested pitches the assignment misses.
    pub fn violations(&self, a: &Assignment) -> usize {
        let pitches = self.realize(a);
        self.options
            .fixed
            .iter()
            .filter(|(&note, &want)| pitches[note] != want)
            .count()
    }

    /// Tension profile of the realized piece against the template key.
    pub fn profile_of(&self, a: &Assignment) -> TensionProfile {
        tension::profile_with_key(&self.to_piece(a), self.options.segment_beats, &self.spiral, &self.key)
            .expect("segment length validated at construction")
    }

    /// Objective recomputed from scratch: weighted tension distance to the
    /// target plus the penalty for every missed requested pitch.
    pub fn objective(&self, a: &Assignment) -> f64 {
        let profile = self.profile_of(a);
        let d = tension::profile_distance(&profile, &self.target, self.options.weights, self.options.distance)
            .expect("lengths validated at construction");
        d + self.options.penalty * self.violations(a) as f64
    }

    pub fn summary(&self) -> ProblemSummary {
        ProblemSummary {
            notes: self.template.len(),
            up: self.up(),
            tecs: self.cover.tecs.len(),
            compression_ratio: self.cover.compression_ratio(),
            segments: self.segmentation.len(),
            slices: self.slice_count(),
            key: self.key.name(),
            ranges: self.ranges.clone(),
        }
    }
}

/// Number of free pitches a cover leaves for `piece`.
pub fn count_free(piece: &Piece, cover: &Cover) -> Result<usize> {
    if piece.is_empty() {
        return Ok(0);
    }
    let options = MorphOptions::default();
    let segments = Segmentation::new(piece, options.segment_beats)?.len();
    let target = TensionProfile {
        segment_beats: options.segment_beats,
        diameter: vec![0.0; segments],
        momentum: vec![0.0; segments],
        strain: vec![0.0; segments],
        key: None,
    };
    Ok(MorphProblem::new(piece.clone(), cover.clone(), target, options)?.up())
}
