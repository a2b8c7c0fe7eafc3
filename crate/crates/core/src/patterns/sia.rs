use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::{Point, PointSet, Tec, Vector};

/// Maximal translatable pattern of every vector between two points.
///
/// Vectors are taken from earlier to later points in `(time, pitch)` order,
/// so each key is lexicographically positive. The pattern for `v` is every
/// point `p` with `p + v` also in the set, in sorted order.
pub fn sia(ps: &PointSet) -> BTreeMap<Vector, Vec<Point>> {
    let pts = ps.points();
    let mut pairs: Vec<(Vector, Point)> = Vec::with_capacity(pts.len() * pts.len().saturating_sub(1) / 2);
    for (i, &p) in pts.iter().enumerate() {
        for &q in &pts[i + 1..] {
            pairs.push((q - p, p));
        }
    }
    pairs.sort_unstable();
    let mut out: BTreeMap<Vector, Vec<Point>> = BTreeMap::new();
    for (v, p) in pairs {
        out.entry(v).or_default().push(p);
    }
    out
}

/// Pattern shape with the first point moved to the origin.
fn shape(pattern: &[Point]) -> Vec<Vector> {
    let origin = pattern[0];
    pattern.iter().map(|&p| p - origin).collect()
}

fn translators(pattern: &[Point], ps: &PointSet, members: &HashSet<Point>) -> Vec<Vector> {
    let first = pattern[0];
    ps.points()
        .iter()
        .map(|&q| q - first)
        .filter(|&v| pattern[1..].iter().all(|&p| members.contains(&(p + v))))
        .collect()
}

/// Translational equivalence classes of the maximal translatable patterns.
///
/// Patterns that are translations of one another form one class. Each class
/// is reported from its earliest occurrence with the full translator set.
/// A one-point set yields its single point as a trivial class. Output is
/// sorted by pattern.
pub fn siatec(ps: &PointSet) -> Vec<Tec> {
    if ps.len() == 1 {
        return vec![Tec::singleton(ps.points()[0])];
    }
    let members: HashSet<Point> = ps.points().iter().copied().collect();
    let mut seen: HashSet<Vec<Vector>> = HashSet::new();
    let mut out: BTreeSet<Tec> = BTreeSet::new();
    for pattern in sia(ps).into_values() {
        if !seen.insert(shape(&pattern)) {
            continue;
        }
        let vs = translators(&pattern, ps, &members);
        // translators come out sorted because points are sorted
        let earliest = vs[0];
        out.insert(Tec {
            pattern: pattern.iter().map(|&p| p + earliest).collect(),
            translators: vs.iter().map(|&v| v - earliest).collect(),
        });
    }
    out.into_iter().collect()
}
