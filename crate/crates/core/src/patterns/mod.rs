//! Geometric pattern discovery on `(time, pitch)` point sets.
//!
//! [`sia`] computes the maximal translatable pattern for every inter-point
//! vector, [`siatec`] groups those patterns into translational equivalence
//! classes, and [`cosiatec`] / [`siatec_compress`] pick a set of classes
//! that covers the input. Pitch translation is in MIDI semitones.

mod codec;
mod select;
mod sia;

pub use codec::{decode_tec, encode_tec};
pub use select::{cosiatec, siatec_compress, LengthFilter, PatternAlgo};
pub use sia::{sia, siatec};

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Point {
    pub time: i64,
    pub pitch: i64,
}

impl Point {
    pub const fn new(time: i64, pitch: i64) -> Self {
        Self { time, pitch }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p({},{})", self.time, self.pitch)
    }
}

/// Translation in time (tatums) and pitch (semitones).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Vector {
    pub time: i64,
    pub pitch: i64,
}

impl Vector {
    pub const ZERO: Vector = Vector { time: 0, pitch: 0 };

    pub const fn new(time: i64, pitch: i64) -> Self {
        Self { time, pitch }
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v({},{})", self.time, self.pitch)
    }
}

impl Add<Vector> for Point {
    type Output = Point;
    fn add(self, v: Vector) -> Point {
        Point::new(self.time + v.time, self.pitch + v.pitch)
    }
}

impl Sub for Point {
    type Output = Vector;
    fn sub(self, o: Point) -> Vector {
        Vector::new(self.time - o.time, self.pitch - o.pitch)
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, o: Vector) -> Vector {
        Vector::new(self.time - o.time, self.pitch - o.pitch)
    }
}

/// Sorted, duplicate-free points, each with the note indices it came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PointSet {
    points: Vec<Point>,
    notes: Vec<Vec<usize>>,
}

impl PointSet {
    pub fn from_points(points: impl IntoIterator<Item = Point>) -> Self {
        let mut points: Vec<Point> = points.into_iter().collect();
        points.sort_unstable();
        points.dedup();
        let notes = vec![Vec::new(); points.len()];
        Self { points, notes }
    }

    /// Builds from `(point, note index)` pairs, merging equal points.
    pub fn from_indexed(items: impl IntoIterator<Item = (Point, usize)>) -> Self {
        let mut items: Vec<(Point, usize)> = items.into_iter().collect();
        items.sort_unstable();
        let mut ps = Self::default();
        for (p, i) in items {
            if ps.points.last() != Some(&p) {
                ps.points.push(p);
                ps.notes.push(Vec::new());
            }
            ps.notes.last_mut().expect("pushed above").push(i);
        }
        ps
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.points.binary_search(p).ok()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.index_of(p).is_some()
    }

    /// Note indices that map to the point at position `i`.
    pub fn notes_at(&self, i: usize) -> &[usize] {
        &self.notes[i]
    }
}

/// A pattern with all vectors that translate it into the point set.
///
/// `translators` is sorted and starts with the zero vector; the pattern is
/// the earliest occurrence, so every other translator is lexicographically
/// positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Tec {
    pub pattern: Vec<Point>,
    pub translators: Vec<Vector>,
}

impl Tec {
    pub fn singleton(p: Point) -> Self {
        Self {
            pattern: vec![p],
            translators: vec![Vector::ZERO],
        }
    }

    /// Points covered by any occurrence, sorted and deduplicated.
    pub fn coverage(&self) -> Vec<Point> {
        let mut out: Vec<Point> = self
            .translators
            .iter()
            .flat_map(|&v| self.pattern.iter().map(move |&p| p + v))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Pattern points plus non-identity translators.
    pub fn encoding_size(&self) -> usize {
        self.pattern.len() + self.translators.len() - 1
    }

    pub fn compression_ratio(&self) -> f64 {
        self.coverage().len() as f64 / self.encoding_size() as f64
    }

    /// Area of the pattern's bounding box in tatum-semitones.
    pub fn bounding_box_area(&self) -> i64 {
        bounding_box_area(&self.pattern)
    }
}

pub(crate) fn bounding_box_area(points: &[Point]) -> i64 {
    let (mut t0, mut t1, mut p0, mut p1) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for p in points {
        t0 = t0.min(p.time);
        t1 = t1.max(p.time);
        p0 = p0.min(p.pitch);
        p1 = p1.max(p.pitch);
    }
    if points.is_empty() {
        0
    } else {
        (t1 - t0) * (p1 - p0)
    }
}

impl fmt::Display for Tec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&encode_tec(self))
    }
}

/// A set of TECs covering a point set, in selection order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Cover {
    pub tecs: Vec<Tec>,
    /// Points no TEC covers. Selection turns leftovers into singleton TECs,
    /// so this is empty for covers built here.
    pub residual: Vec<Point>,
}

impl Cover {
    /// Union of all TEC coverages and the residual.
    pub fn covered_points(&self) -> Vec<Point> {
        let mut out: Vec<Point> = self.tecs.iter().flat_map(Tec::coverage).collect();
        out.extend_from_slice(&self.residual);
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn encoding_size(&self) -> usize {
        self.tecs.iter().map(Tec::encoding_size).sum::<usize>() + self.residual.len()
    }

    /// Covered points over encoding size; 1 for an empty cover.
    pub fn compression_ratio(&self) -> f64 {
        let size = self.encoding_size();
        if size == 0 {
            return 1.0;
        }
        self.covered_points().len() as f64 / size as f64
    }

    /// `true` when every point of `ps` lies in exactly one TEC coverage and
    /// nothing else is covered.
    pub fn is_partition_of(&self, ps: &PointSet) -> bool {
        let mut all: Vec<Point> = self.tecs.iter().flat_map(Tec::coverage).collect();
        all.extend_from_slice(&self.residual);
        all.sort_unstable();
        all.as_slice() == ps.points()
    }

    /// `true` when the union of coverages equals `ps`.
    pub fn covers_exactly(&self, ps: &PointSet) -> bool {
        self.covered_points().as_slice() == ps.points()
    }
}

/// Compares two candidates `(covered, encoding size)` by compression ratio
/// without floating point.
pub(crate) fn cmp_ratio(a: (usize, usize), b: (usize, usize)) -> Ordering {
    (a.0 * b.1).cmp(&(b.0 * a.1))
}
