//! Answer enumeration over the branching evaluator.
//!
//! A machine runs until it forks, finishes, or fails; forks put both
//! alternatives back in the queue. Breadth-first order visits choice points
//! level by level, depth-first commits to the left alternative. Both explore
//! the left branch of a choice first, so `0 ? 1` answers in that order
//! either way.

use crate::machine::{Machine, Step};
use crate::show;
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Bfs,
    Dfs,
}

#[derive(Debug, Clone)]
pub struct Limits {
    pub max_answers: Option<usize>,
    pub max_steps: u64,
    pub max_depth: Option<u32>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_answers: None, max_steps: 100_000, max_depth: None }
    }
}

#[derive(Debug, Clone)]
pub struct Answer {
    /// Goal free variables with their rendered values, sorted by name.
    pub bindings: Vec<(String, String)>,
    pub value: String,
    /// Search-wide step count at the moment this answer appeared.
    pub steps: u64,
}

impl Answer {
    pub fn line(&self) -> String {
        show::answer_line(&self.bindings, &self.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exhaustion {
    StepLimit(u64),
    DepthLimit(u32),
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub answers: Vec<Answer>,
    /// Set when a limit cut enumeration short.
    pub exhaustion: Option<Exhaustion>,
    pub total_steps: u64,
}

pub fn enumerate(start: Machine, strategy: Strategy, limits: &Limits) -> Outcome {
    let mut queue: VecDeque<Machine> = VecDeque::new();
    queue.push_back(start);
    let mut answers: Vec<Answer> = vec![];
    let mut total: u64 = 0;
    let mut step_limited = false;
    let mut depth_pruned = false;

    let full = |answers: &Vec<Answer>| {
        limits.max_answers.is_some_and(|k| answers.len() >= k)
    };

    'outer: loop {
        if full(&answers) {
            break;
        }
        let Some(mut m) = (match strategy {
            Strategy::Bfs => queue.pop_front(),
            Strategy::Dfs => queue.pop_back(),
        }) else {
            break;
        };
        loop {
            if total >= limits.max_steps {
                step_limited = true;
                break 'outer;
            }
            let before = m.steps;
            let step = m.step();
            total += m.steps - before;
            match step {
                Step::Progress => {}
                Step::Done => {
                    let (bindings, value) = show::render_answer(&m);
                    answers.push(Answer { bindings, value, steps: total });
                    continue 'outer;
                }
                Step::Failed(_) => continue 'outer,
                Step::Fork(right) => {
                    if limits.max_depth.is_some_and(|d| m.depth > d) {
                        depth_pruned = true;
                        continue 'outer;
                    }
                    match strategy {
                        Strategy::Bfs => {
                            queue.push_back(m);
                            queue.push_back(*right);
                        }
                        Strategy::Dfs => {
                            queue.push_back(*right);
                            queue.push_back(m);
                        }
                    }
                    continue 'outer;
                }
            }
        }
    }

    let exhaustion = if step_limited {
        Some(Exhaustion::StepLimit(limits.max_steps))
    } else if depth_pruned {
        Some(Exhaustion::DepthLimit(limits.max_depth.unwrap_or_default()))
    } else {
        None
    };
    Outcome { answers, exhaustion, total_steps: total }
}
