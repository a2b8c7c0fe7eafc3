//! Variable neighborhood search.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use web_time::Instant;

use super::eval::Evaluator;
use super::moves::{change1, change_slice, swap, Move, Neighborhood};
use super::{Assignment, MorphProblem};

/// Strict improvement threshold for accepting a move.
const EPS: f64 = 1e-9;

/// Draws every free pitch uniformly from its domain.
///
/// Domains already exclude values that push a derived note out of range, so
/// this is the same distribution as rejection sampling over the track range.
pub fn random_feasible<R: Rng + ?Sized>(problem: &MorphProblem, rng: &mut R) -> Assignment {
    Assignment {
        free: problem
            .vars()
            .iter()
            .map(|v| rng.gen_range(v.domain.0..=v.domain.1))
            .collect(),
    }
}

/// Number of variables a perturbation re-draws.
pub fn perturb_count(problem: &MorphProblem) -> usize {
    let up = problem.up();
    if up == 0 {
        return 0;
    }
    ((problem.options().perturb_fraction * up as f64).ceil() as usize).clamp(1, up)
}

fn perturb_changes<R: Rng + ?Sized>(problem: &MorphProblem, rng: &mut R) -> Vec<(usize, u8)> {
    let up = problem.up();
    let mut picked = sample(rng, up, perturb_count(problem)).into_vec();
    picked.sort_unstable();
    picked
        .into_iter()
        .map(|v| {
            let (lo, hi) = problem.vars()[v].domain;
            (v, rng.gen_range(lo..=hi))
        })
        .collect()
}

/// Re-draws a random subset of the free pitches.
pub fn perturb<R: Rng + ?Sized>(problem: &MorphProblem, assignment: &Assignment, rng: &mut R) -> Assignment {
    let mut out = assignment.clone();
    for (v, x) in perturb_changes(problem, rng) {
        out.free[v] = x;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    #[serde(rename = "move")]
    pub step: usize,
    pub elapsed_ms: f64,
    pub objective: f64,
    pub best_objective: f64,
    /// `None` on the initial and perturbation rows.
    pub neighborhood: Option<Neighborhood>,
    pub perturbation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchTrace {
    pub seed: u64,
    pub rows: Vec<TraceRow>,
}

impl SearchTrace {
    pub const HEADER: &'static str = "move,elapsed_ms,objective,best_objective,neighborhood,perturbation";

    pub fn to_csv(&self) -> String {
        let mut out = format!("# seed={}\n{}\n", self.seed, Self::HEADER);
        for r in &self.rows {
            let nb = match (r.neighborhood, r.perturbation) {
                (Some(n), _) => n.name(),
                (None, true) => "perturb",
                (None, false) => "init",
            };
            let _ = writeln!(
                out,
                "{},{:.3},{:.6},{:.6},{},{}",
                r.step, r.elapsed_ms, r.objective, r.best_objective, nb, r.perturbation as u8
            );
        }
        out
    }

    pub fn perturbations(&self) -> usize {
        self.rows.iter().filter(|r| r.perturbation).count()
    }
}

/// Mutable search state: current solution, best so far, RNG and trace.
pub struct SearchState<'a> {
    eval: Evaluator<'a>,
    rng: ChaCha8Rng,
    best: Assignment,
    best_objective: f64,
    trace: SearchTrace,
    steps: usize,
    start: Instant,
}

impl<'a> SearchState<'a> {
    pub fn new(problem: &'a MorphProblem, start: &Assignment, seed: u64) -> Self {
        Self::with_rng(problem, start, ChaCha8Rng::seed_from_u64(seed), seed)
    }

    fn with_rng(problem: &'a MorphProblem, start: &Assignment, rng: ChaCha8Rng, seed: u64) -> Self {
        let eval = Evaluator::new(problem, start);
        let obj = eval.objective();
        let mut s = Self {
            eval,
            rng,
            best: start.clone(),
            best_objective: obj,
            trace: SearchTrace { seed, rows: Vec::new() },
            steps: 0,
            start: Instant::now(),
        };
        s.record(None, false);
        s
    }

    pub fn current(&self) -> Assignment {
        self.eval.assignment()
    }

    pub fn objective(&self) -> f64 {
        self.eval.objective()
    }

    pub fn best(&self) -> (&Assignment, f64) {
        (&self.best, self.best_objective)
    }

    pub fn trace(&self) -> &SearchTrace {
        &self.trace
    }

    fn record(&mut self, neighborhood: Option<Neighborhood>, perturbation: bool) {
        let obj = self.eval.objective();
        if obj < self.best_objective {
            self.best_objective = obj;
            self.best = self.eval.assignment();
        }
        self.trace.rows.push(TraceRow {
            step: self.steps,
            elapsed_ms: self.start.elapsed().as_secs_f64() * 1e3,
            objective: obj,
            best_objective: self.best_objective,
            neighborhood,
            perturbation,
        });
        self.steps += 1;
    }

    /// First descent over one slice's candidates; returns whether a move was
    /// accepted.
    fn descend_slice(&mut self, nb: Neighborhood, slice: usize) -> bool {
        let problem = self.eval.problem();
        let current = self.eval.free().to_vec();
        let cur = self.eval.objective();
        let candidates: Box<dyn Iterator<Item = Move>> = match nb {
            Neighborhood::Change1 => Box::new(change1(problem, &current, slice)),
            Neighborhood::ChangeSlice => change_slice(problem, &current, slice, &mut self.rng),
            Neighborhood::Swap => Box::new(swap(problem, &current, slice)),
        };
        for m in candidates {
            if self.eval.try_apply(m.changes()) < cur - EPS {
                self.eval.commit();
                return true;
            }
            self.eval.rollback();
        }
        false
    }

    /// Chronological sweep with first-descent acceptance. After each accepted
    /// move the cursor rewinds by the configured number of slices; the search
    /// ends once a full round of slices yields nothing.
    pub fn local_search(&mut self, nb: Neighborhood) -> bool {
        let problem = self.eval.problem();
        let slices = problem.slice_count();
        let back = problem.options().backtrack;
        let mut improved = false;
        let mut cursor = 0;
        let mut idle = 0;
        while idle < slices {
            if self.descend_slice(nb, cursor) {
                improved = true;
                idle = 0;
                self.record(Some(nb), false);
                cursor = cursor.saturating_sub(back);
            } else {
                idle += 1;
                cursor = (cursor + 1) % slices;
            }
        }
        improved
    }

    /// Cycles through the neighborhoods until none improves.
    pub fn descend(&mut self) {
        let mut k = 0;
        while k < Neighborhood::ORDER.len() {
            if self.local_search(Neighborhood::ORDER[k]) {
                k = 0;
            } else {
                k += 1;
            }
        }
    }

    pub fn perturb(&mut self) {
        let changes = perturb_changes(self.eval.problem(), &mut self.rng);
        self.eval.try_apply(&changes);
        self.eval.commit();
        self.record(None, true);
    }

    pub fn finish(self) -> (Assignment, f64, SearchTrace) {
        (self.best, self.best_objective, self.trace)
    }
}

/// Runs one local search from `assignment`; returns the result and whether
/// anything improved.
pub fn local_search(problem: &MorphProblem, assignment: &Assignment, nb: Neighborhood, seed: u64) -> (Assignment, bool) {
    let mut state = SearchState::new(problem, assignment, seed);
    let improved = state.local_search(nb);
    (state.current(), improved)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VnsResult {
    pub best: Assignment,
    pub best_objective: f64,
    pub initial: Assignment,
    pub initial_objective: f64,
    pub trace: SearchTrace,
}

/// Random start, then `max_iters` rounds of descent separated by
/// perturbations. Deterministic for a given seed apart from the trace's
/// wall-clock column.
pub fn vns(problem: &MorphProblem, max_iters: usize, seed: u64) -> VnsResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = random_feasible(problem, &mut rng);
    let mut state = SearchState::with_rng(problem, &initial, rng, seed);
    let initial_objective = state.objective();
    for it in 0..max_iters.max(1) {
        if it > 0 {
            state.perturb();
        }
        state.descend();
    }
    let (best, best_objective, trace) = state.finish();
    VnsResult {
        best,
        best_objective,
        initial,
        initial_objective,
        trace,
    }
}
