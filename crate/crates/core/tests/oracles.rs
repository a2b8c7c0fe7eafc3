//! Library results against slow, independent reimplementations.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use morph_core::patterns::{sia, siatec, Point, PointSet, Tec, Vector};
use morph_core::spiral::{Cloud, Mode, SpiralArray, SpiralConfig, SpiralPoint};
use morph_core::tension::cloud_diameter;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(rng: &mut impl Rng, max: usize) -> PointSet {
    let n = rng.gen_range(1..=max);
    PointSet::from_points((0..n).map(|_| Point::new(rng.gen_range(0..8), rng.gen_range(58..66))))
}

fn brute_sia(pts: &[Point]) -> BTreeMap<Vector, Vec<Point>> {
    let set: BTreeSet<Point> = pts.iter().copied().collect();
    let mut out = BTreeMap::new();
    for a in pts {
        for b in pts {
            let v = Vector::new(b.time - a.time, b.pitch - a.pitch);
            if v <= Vector::ZERO || out.contains_key(&v) {
                continue;
            }
            let mtp: Vec<Point> = pts
                .iter()
                .copied()
                .filter(|p| set.contains(&Point::new(p.time + v.time, p.pitch + v.pitch)))
                .collect();
            out.insert(v, mtp);
        }
    }
    out
}

fn brute_siatec(pts: &[Point]) -> BTreeSet<Tec> {
    if pts.len() == 1 {
        return [Tec::singleton(pts[0])].into();
    }
    let set: BTreeSet<Point> = pts.iter().copied().collect();
    let shift = |p: &[Point], dt: i64, dp: i64| -> Vec<Point> {
        p.iter().map(|q| Point::new(q.time + dt, q.pitch + dp)).collect()
    };
    let mut out = BTreeSet::new();
    for pattern in brute_sia(pts).into_values() {
        // every occurrence anywhere in the set
        let mut occurrences: Vec<Vec<Point>> = Vec::new();
        for d in pts {
            let (dt, dp) = (d.time - pattern[0].time, d.pitch - pattern[0].pitch);
            let occ = shift(&pattern, dt, dp);
            if occ.iter().all(|p| set.contains(p)) {
                occurrences.push(occ);
            }
        }
        occurrences.sort();
        let first = occurrences[0].clone();
        let mut translators: Vec<Vector> = occurrences
            .iter()
            .map(|o| Vector::new(o[0].time - first[0].time, o[0].pitch - first[0].pitch))
            .collect();
        translators.sort();
        out.insert(Tec {
            pattern: first,
            translators,
        });
    }
    out
}

#[test]
fn sia_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let ps = random_set(&mut rng, 12);
        assert_eq!(sia(&ps), brute_sia(ps.points()), "{:?}", ps.points());
    }
}

#[test]
fn siatec_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let ps = random_set(&mut rng, 12);
        let got: BTreeSet<Tec> = siatec(&ps).into_iter().collect();
        assert_eq!(got, brute_siatec(ps.points()), "{:?}", ps.points());
    }
}

/// Helix written out directly from the defaults.
fn pos(k: i32) -> [f64; 3] {
    let a = k as f64 * PI / 2.0;
    [a.sin(), a.cos(), k as f64 * (2.0f64 / 15.0).sqrt()]
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn mix(parts: &[([f64; 3], f64)]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (p, w) in parts {
        for i in 0..3 {
            out[i] += p[i] * w;
        }
    }
    out
}

fn chord(k: i32, major: bool) -> [f64; 3] {
    let third = if major { k + 4 } else { k - 3 };
    mix(&[(pos(k), 0.536), (pos(k + 1), 0.274), (pos(third), 0.190)])
}

fn key(k: i32, major: bool) -> [f64; 3] {
    if major {
        mix(&[(chord(k, true), 0.516 / 0.999), (chord(k + 1, true), 0.315 / 0.999), (chord(k - 1, true), 0.168 / 0.999)])
    } else {
        let dom = mix(&[(chord(k + 1, true), 0.75), (chord(k + 1, false), 0.25)]);
        let sub = mix(&[(chord(k - 1, false), 0.75), (chord(k - 1, true), 0.25)]);
        mix(&[(chord(k, false), 0.516 / 0.999), (dom, 0.315 / 0.999), (sub, 0.168 / 0.999)])
    }
}

#[test]
fn diameter_matches_brute_force() {
    let sa = SpiralArray::new(SpiralConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let n = rng.gen_range(1..=12);
        let ks: Vec<i32> = (0..n).map(|_| rng.gen_range(-15..=15)).collect();
        let mut cloud = Cloud::new();
        for &k in &ks {
            cloud.push(sa.helix(k), rng.gen_range(0.1..2.0));
        }
        let mut want = 0.0f64;
        for &a in &ks {
            for &b in &ks {
                want = want.max(dist(pos(a), pos(b)));
            }
        }
        assert!((cloud_diameter(&cloud) - want).abs() < 1e-9);
    }
}

#[test]
fn nearest_key_matches_exhaustive_scan() {
    let sa = SpiralArray::new(SpiralConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let n = rng.gen_range(1..=12);
        let center: i32 = rng.gen_range(-5..=5);
        let pts: Vec<(i32, f64)> = (0..n)
            .map(|_| (center + rng.gen_range(-3..=3), rng.gen_range(0.1..2.0)))
            .collect();
        let total: f64 = pts.iter().map(|p| p.1).sum();
        let ce = mix(&pts.iter().map(|&(k, w)| (pos(k), w / total)).collect::<Vec<_>>());
        let mut best = (f64::INFINITY, 0, true);
        for k in center - 7..=center + 7 {
            for major in [true, false] {
                let d = dist(key(k, major), ce);
                if d < best.0 {
                    best = (d, k, major);
                }
            }
        }
        let got = sa.nearest_key(&SpiralPoint::new(ce[0], ce[1], ce[2]), center);
        let got_d = dist(key(got.tonic, got.mode == Mode::Major), ce);
        assert!((got_d - best.0).abs() < 1e-9, "{got:?} vs {best:?}");
        assert!(dist([got.position.x, got.position.y, got.position.z], key(got.tonic, got.mode == Mode::Major)) < 1e-12);
    }
}
