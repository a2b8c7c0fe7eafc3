//! Candidate moves for one time slice.
//!
//! Every move touches free variables only; derived notes follow. Candidates
//! are produced lazily in a fixed order so first-descent acceptance is
//! deterministic.

use std::fmt;

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use super::MorphProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Neighborhood {
    Change1,
    ChangeSlice,
    Swap,
}

impl Neighborhood {
    /// Search order of the VNS.
    pub const ORDER: [Neighborhood; 3] = [Self::Change1, Self::ChangeSlice, Self::Swap];

    pub fn name(self) -> &'static str {
        match self {
            Self::Change1 => "change1",
            Self::ChangeSlice => "changeSlice",
            Self::Swap => "swap",
        }
    }

    /// Full neighborhood size for `n` slices of `m` notes with `p` pitches
    /// each: `m·n·p`, `(n·m − 1)!` and `p²`.
    pub fn theoretical_size(self, n: u64, m: u64, p: u64) -> f64 {
        match self {
            Self::Change1 => (m * n * p) as f64,
            Self::Swap => (1..(n * m).max(1)).map(|k| k as f64).product(),
            Self::ChangeSlice => (p * p) as f64,
        }
    }
}

impl fmt::Display for Neighborhood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Up to two `(variable, new value)` changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    changes: [(usize, u8); 2],
    len: u8,
}

impl Move {
    pub fn change(var: usize, value: u8) -> Self {
        Self {
            changes: [(var, value), (0, 0)],
            len: 1,
        }
    }

    pub fn pair(a: (usize, u8), b: (usize, u8)) -> Self {
        Self {
            changes: [a, b],
            len: 2,
        }
    }

    pub fn changes(&self) -> &[(usize, u8)] {
        &self.changes[..self.len as usize]
    }
}

/// Every other in-domain value for each free variable rooted in the slice.
pub fn change1<'a>(problem: &'a MorphProblem, current: &[u8], slice: usize) -> impl Iterator<Item = Move> + 'a {
    let vars: Vec<(usize, u8)> = problem.slice_vars(slice).iter().map(|&v| (v, current[v])).collect();
    vars.into_iter().flat_map(move |(v, cur)| {
        let (lo, hi) = problem.vars()[v].domain;
        (lo..=hi).filter(move |&x| x != cur).map(move |x| Move::change(v, x))
    })
}

/// Exchanges of values between a variable rooted in the slice and any later
/// variable. Over a full sweep every unordered pair appears once; pairs with
/// equal values or values outside the other's domain are skipped.
pub fn swap<'a>(problem: &'a MorphProblem, current: &[u8], slice: usize) -> impl Iterator<Item = Move> + 'a {
    let current = current.to_vec();
    let vars = problem.vars();
    problem.slice_vars(slice).iter().flat_map(move |&a| {
        let current = current.clone();
        (a + 1..vars.len()).filter_map(move |b| {
            let (va, vb) = (current[a], current[b]);
            (va != vb && vars[a].admits(vb) && vars[b].admits(va)).then(|| Move::pair((a, vb), (b, va)))
        })
    })
}

/// All value pairs for two variables of the slice drawn with `rng`,
/// excluding the current pair. Falls back to [`change1`] when the slice
/// has fewer than two free variables.
pub fn change_slice<'a, R: Rng + ?Sized>(
    problem: &'a MorphProblem,
    current: &[u8],
    slice: usize,
    rng: &mut R,
) -> Box<dyn Iterator<Item = Move> + 'a> {
    let vars = problem.slice_vars(slice);
    if vars.len() < 2 {
        return Box::new(change1(problem, current, slice));
    }
    let picked = sample(rng, vars.len(), 2);
    let (mut a, mut b) = (vars[picked.index(0)], vars[picked.index(1)]);
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let (ca, cb) = (current[a], current[b]);
    let (alo, ahi) = problem.vars()[a].domain;
    let (blo, bhi) = problem.vars()[b].domain;
    Box::new((alo..=ahi).flat_map(move |x| {
        (blo..=bhi)
            .filter(move |&y| (x, y) != (ca, cb))
            .map(move |y| Move::pair((a, x), (b, y)))
    }))
}
