//! Greedy TEC selection.
//!
//! Candidates are ranked by compression ratio measured on the points not yet
//! covered, then by how many such points they cover, then by the pattern's
//! bounding-box area (smaller first), then by the pattern itself. Selection
//! stops once no candidate compresses its fresh points, so every chosen
//! class pays for itself and the cover's ratio is at least 1.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::Serialize;

use super::{bounding_box_area, cmp_ratio, siatec, Cover, Point, PointSet, Tec};
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternAlgo {
    #[default]
    Cosiatec,
    SiatecCompress,
}

impl PatternAlgo {
    pub fn run(self, ps: &PointSet, filter: LengthFilter) -> Cover {
        match self {
            Self::Cosiatec => cosiatec(ps, filter),
            Self::SiatecCompress => siatec_compress(ps, filter),
        }
    }
}

impl std::str::FromStr for PatternAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "cosiatec" => Ok(Self::Cosiatec),
            "siatec-compress" | "siateccompress" => Ok(Self::SiatecCompress),
            other => Err(Error::InvalidOption(format!("unknown pattern algorithm {other:?}"))),
        }
    }
}

/// Admissible pattern lengths, applied before selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LengthFilter {
    pub min: usize,
    pub max: Option<usize>,
}

impl Default for LengthFilter {
    fn default() -> Self {
        Self { min: 1, max: None }
    }
}

impl LengthFilter {
    pub fn new(min: usize, max: Option<usize>) -> Result<Self, Error> {
        if min == 0 {
            return Err(Error::InvalidOption("minimum pattern length must be at least 1".into()));
        }
        if max.is_some_and(|m| m < min) {
            return Err(Error::InvalidOption(format!(
                "maximum pattern length {} is below the minimum {min}",
                max.unwrap_or_default()
            )));
        }
        Ok(Self { min, max })
    }

    pub fn admits(&self, len: usize) -> bool {
        len >= self.min && self.max.is_none_or(|m| len <= m)
    }
}

struct Candidate<'a> {
    tec: &'a Tec,
    fresh: Vec<Point>,
    area: i64,
}

impl Candidate<'_> {
    fn key(&self) -> (usize, usize) {
        (self.fresh.len(), self.tec.encoding_size())
    }

    /// `Greater` means `self` is the better choice.
    fn rank(&self, other: &Self) -> Ordering {
        cmp_ratio(self.key(), other.key())
            .then(self.fresh.len().cmp(&other.fresh.len()))
            .then(other.area.cmp(&self.area))
            .then(other.tec.pattern.cmp(&self.tec.pattern))
    }
}

fn best_candidate<'a>(tecs: &'a [Tec], uncovered: &BTreeSet<Point>) -> Option<Candidate<'a>> {
    let mut best: Option<Candidate<'a>> = None;
    for tec in tecs {
        let fresh: Vec<Point> = tec
            .coverage()
            .into_iter()
            .filter(|p| uncovered.contains(p))
            .collect();
        if fresh.is_empty() {
            continue;
        }
        let cand = Candidate {
            tec,
            fresh,
            area: bounding_box_area(&tec.pattern),
        };
        if best.as_ref().is_none_or(|b| cand.rank(b) == Ordering::Greater) {
            best = Some(cand);
        }
    }
    best
}

/// Repeatedly runs SIATEC on the uncovered points, keeps the best class and
/// removes what it covers. The result partitions the input; points no
/// admissible class covers become singleton TECs.
pub fn cosiatec(ps: &PointSet, filter: LengthFilter) -> Cover {
    let mut remaining: BTreeSet<Point> = ps.points().iter().copied().collect();
    let mut cover = Cover::default();
    while !remaining.is_empty() {
        let current = PointSet::from_points(remaining.iter().copied());
        let tecs: Vec<Tec> = siatec(&current)
            .into_iter()
            .filter(|t| filter.admits(t.pattern.len()))
            .collect();
        let Some(best) = best_candidate(&tecs, &remaining) else {
            break;
        };
        if best.fresh.len() <= best.tec.encoding_size() {
            // singletons encode the rest at least as well
            break;
        }
        for p in &best.fresh {
            remaining.remove(p);
        }
        cover.tecs.push(best.tec.clone());
    }
    cover.tecs.extend(remaining.into_iter().map(Tec::singleton));
    cover
}

/// Runs SIATEC once and greedily adds classes that cover new points until
/// everything is covered. Coverages may overlap; leftovers become singleton
/// TECs.
pub fn siatec_compress(ps: &PointSet, filter: LengthFilter) -> Cover {
    let tecs: Vec<Tec> = siatec(ps)
        .into_iter()
        .filter(|t| filter.admits(t.pattern.len()))
        .collect();
    let mut uncovered: BTreeSet<Point> = ps.points().iter().copied().collect();
    let mut cover = Cover::default();
    while !uncovered.is_empty() {
        let Some(best) = best_candidate(&tecs, &uncovered) else {
            break;
        };
        if best.fresh.len() <= best.tec.encoding_size() {
            // singletons encode the rest at least as well
            break;
        }
        for p in &best.fresh {
            uncovered.remove(p);
        }
        cover.tecs.push(best.tec.clone());
    }
    cover.tecs.extend(uncovered.into_iter().map(Tec::singleton));
    cover
}
