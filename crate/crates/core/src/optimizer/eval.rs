//! Incremental objective evaluation.
//!
//! Segment membership is fixed by the template rhythm, so a pitch change
//! only touches the segments its notes sound in, plus the momentum and
//! strain of the segments that carry or follow those centers of effect up
//! to the next non-empty segment. The per-measure sums are then re-added in
//! segment order so the result is bit-identical to a full recomputation.

use super::{Assignment, MorphProblem};
use crate::score::NoteEvent;
use crate::spiral::SpiralPoint;
use crate::tension::{cloud_diameter, momentum_and_strain, segment_cloud, DistanceKind};

#[derive(Debug, Clone, Copy)]
struct SegmentState {
    own_ce: Option<SpiralPoint>,
    eff_ce: Option<SpiralPoint>,
    values: [f64; 3],
}

#[derive(Debug, Default)]
struct Undo {
    free: Vec<(usize, u8)>,
    pitches: Vec<(usize, u8)>,
    segments: Vec<(usize, SegmentState)>,
    violations: usize,
    objective: f64,
}

/// Current assignment with cached per-segment tension values.
///
/// [`Evaluator::try_apply`] applies a change and returns the new objective;
/// follow it with [`Evaluator::commit`] or [`Evaluator::rollback`].
#[derive(Debug)]
pub struct Evaluator<'a> {
    problem: &'a MorphProblem,
    free: Vec<u8>,
    pitches: Vec<u8>,
    segments: Vec<SegmentState>,
    next_nonempty: Vec<usize>,
    violations: usize,
    objective: f64,
    undo: Option<Undo>,
    stamp: Vec<u32>,
    generation: u32,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a MorphProblem, assignment: &Assignment) -> Self {
        let seg = problem.segmentation();
        let n = seg.len();
        let mut next_nonempty = vec![n; n];
        let mut next = n;
        for j in (0..n).rev() {
            next_nonempty[j] = next;
            if !seg.members[j].is_empty() {
                next = j;
            }
        }
        let mut ev = Self {
            problem,
            free: assignment.free.clone(),
            pitches: problem.realize(assignment),
            segments: vec![
                SegmentState {
                    own_ce: None,
                    eff_ce: None,
                    values: [0.0; 3],
                };
                n
            ],
            next_nonempty,
            violations: problem.violations(assignment),
            objective: 0.0,
            undo: None,
            stamp: vec![0; n],
            generation: 0,
        };
        for j in 0..n {
            ev.refresh_cloud(j);
        }
        for j in 0..n {
            ev.refresh_carry(j);
        }
        ev.objective = ev.total();
        ev
    }

    pub fn problem(&self) -> &'a MorphProblem {
        self.problem
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn free(&self) -> &[u8] {
        &self.free
    }

    pub fn assignment(&self) -> Assignment {
        Assignment {
            free: self.free.clone(),
        }
    }

    pub fn violations(&self) -> usize {
        self.violations
    }

    /// Current per-segment values of one measure.
    pub fn measure(&self, i: usize) -> Vec<f64> {
        self.segments.iter().map(|s| s.values[i]).collect()
    }

    fn note(&self, i: usize) -> NoteEvent {
        NoteEvent {
            pitch: self.pitches[i],
            ..self.problem.template().notes()[i]
        }
    }

    fn refresh_cloud(&mut self, j: usize) {
        let p = self.problem;
        let members = &p.segmentation().members[j];
        let cloud = segment_cloud(p.spiral(), p.key(), members, |i| self.note(i));
        let s = &mut self.segments[j];
        s.own_ce = cloud.center_of_effect().ok();
        s.values[0] = cloud_diameter(&cloud);
    }

    fn refresh_carry(&mut self, j: usize) {
        let prev = if j == 0 { None } else { self.segments[j - 1].eff_ce };
        let s = &mut self.segments[j];
        s.eff_ce = s.own_ce.or(prev);
        let (m, st) = momentum_and_strain(prev.as_ref(), s.eff_ce.as_ref(), self.problem.key());
        s.values[1] = m;
        s.values[2] = st;
    }

    fn total(&self) -> f64 {
        let target = self.problem.target();
        let opts = self.problem.options();
        let mut d = [0.0f64; 3];
        for (i, di) in d.iter_mut().enumerate() {
            let pairs = self.segments.iter().map(|s| s.values[i]).zip(target.measure(i).iter());
            *di = match opts.distance {
                DistanceKind::L1 => pairs.map(|(x, y)| ((x - y) * (x - y)).sqrt()).sum(),
                DistanceKind::L2 => pairs.map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            };
        }
        let weighted: f64 = opts.weights.iter().zip(d).map(|(w, d)| w * d).sum();
        weighted + opts.penalty * self.violations as f64
    }

    fn save_segment(&mut self, j: usize) {
        if self.stamp[j] != self.generation {
            self.stamp[j] = self.generation;
            let state = self.segments[j];
            self.undo.as_mut().expect("inside try_apply").segments.push((j, state));
        }
    }

    /// Sets the listed free variables and returns the resulting objective.
    /// Must be followed by `commit` or `rollback`.
    pub fn try_apply(&mut self, changes: &[(usize, u8)]) -> f64 {
        assert!(self.undo.is_none(), "previous change neither committed nor rolled back");
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        self.undo = Some(Undo {
            violations: self.violations,
            objective: self.objective,
            ..Undo::default()
        });
        let p = self.problem;
        let mut touched: Vec<usize> = Vec::new();
        for &(var, value) in changes {
            let old = self.free[var];
            if old == value {
                continue;
            }
            for &(off, want) in p.fixed_for(var) {
                let was = (old as i32 + off) == want as i32;
                let now = (value as i32 + off) == want as i32;
                match (was, now) {
                    (true, false) => self.violations += 1,
                    (false, true) => self.violations -= 1,
                    _ => {}
                }
            }
            let undo = self.undo.as_mut().expect("set above");
            undo.free.push((var, old));
            self.free[var] = value;
            for &(note, off) in &p.vars()[var].members {
                undo.pitches.push((note, self.pitches[note]));
                self.pitches[note] = (value as i32 + off) as u8;
                touched.extend_from_slice(&p.segmentation().note_segments[note]);
            }
        }
        touched.sort_unstable();
        touched.dedup();
        for &j in &touched {
            self.save_segment(j);
            self.refresh_cloud(j);
        }
        let n = self.segments.len();
        let mut done_through: Option<usize> = None;
        for &j in &touched {
            let start = match done_through {
                Some(d) if d >= j => d + 1,
                _ => j,
            };
            let stop = self.next_nonempty[j].min(n - 1);
            for k in start..=stop {
                self.save_segment(k);
                self.refresh_carry(k);
            }
            done_through = Some(stop.max(done_through.unwrap_or(0)));
        }
        self.objective = self.total();
        self.objective
    }

    pub fn commit(&mut self) {
        self.undo = None;
    }

    pub fn rollback(&mut self) {
        let Some(undo) = self.undo.take() else {
            return;
        };
        for &(var, old) in undo.free.iter().rev() {
            self.free[var] = old;
        }
        for &(note, old) in undo.pitches.iter().rev() {
            self.pitches[note] = old;
        }
        for &(j, state) in undo.segments.iter().rev() {
            self.segments[j] = state;
        }
        self.violations = undo.violations;
        self.objective = undo.objective;
    }
}
