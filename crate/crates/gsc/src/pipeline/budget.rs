//! Payload sizing and the greedy byte-budget policy.
//!
//! When the planned payload exceeds the budget the transmitter lowers, in
//! order: the rank of every perceptual stream (down to 1), the bit depth of
//! every perceptual stream (down to 1), then the bit depth of every task
//! stream (down to 1). Task ranks are never reduced.

use gsc_core::payload::{basis_stream_size, text_stream_size, vector_stream_size, StreamKind, HEADER_LEN};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamPlan {
    pub kind: StreamKind,
    pub id: String,
    pub dim: usize,
    pub vectors: usize,
    pub rank: usize,
    pub bits: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Plan {
    pub streams: Vec<StreamPlan>,
    pub text_len: Option<usize>,
    /// Bases travel in the payload.
    pub self_contained: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BudgetError {
    #[error("payload needs at least {minimum} bytes but the budget is {budget}")]
    Infeasible { budget: usize, minimum: usize },
}

impl Plan {
    /// Exact serialized payload size.
    pub fn size(&self) -> usize {
        let mut total = HEADER_LEN;
        for s in &self.streams {
            total += vector_stream_size(s.id.len(), s.rank, s.vectors, s.bits);
            if self.self_contained {
                total += basis_stream_size(s.id.len(), s.rank, s.dim);
            }
        }
        total + self.text_len.map_or(0, text_stream_size)
    }

    pub fn stream_count(&self) -> usize {
        self.streams.len() * if self.self_contained { 2 } else { 1 } + usize::from(self.text_len.is_some())
    }

    fn max_of(&self, kind: StreamKind, f: impl Fn(&StreamPlan) -> usize) -> usize {
        self.streams.iter().filter(|s| s.kind == kind).map(f).max().unwrap_or(0)
    }

    fn cap(&mut self, kind: StreamKind, rank: Option<usize>, bits: Option<u8>) {
        for s in self.streams.iter_mut().filter(|s| s.kind == kind) {
            if let Some(r) = rank {
                s.rank = s.rank.min(r);
            }
            if let Some(b) = bits {
                s.bits = s.bits.min(b);
            }
        }
    }
}

/// Applies the greedy policy until `plan` fits `budget`.
pub fn fit_budget(mut plan: Plan, budget: Option<usize>) -> Result<Plan, BudgetError> {
    let Some(budget) = budget else {
        return Ok(plan);
    };
    use StreamKind::{Perceptual, Task};
    let mut steps: Vec<(StreamKind, Option<usize>, Option<u8>)> = Vec::new();
    for r in (1..plan.max_of(Perceptual, |s| s.rank)).rev() {
        steps.push((Perceptual, Some(r), None));
    }
    for b in (1..plan.max_of(Perceptual, |s| usize::from(s.bits)) as u8).rev() {
        steps.push((Perceptual, None, Some(b)));
    }
    for b in (1..plan.max_of(Task, |s| usize::from(s.bits)) as u8).rev() {
        steps.push((Task, None, Some(b)));
    }
    let mut steps = steps.into_iter();
    while plan.size() > budget {
        match steps.next() {
            Some((kind, rank, bits)) => plan.cap(kind, rank, bits),
            None => {
                return Err(BudgetError::Infeasible {
                    budget,
                    minimum: plan.size(),
                })
            }
        }
    }
    Ok(plan)
}
