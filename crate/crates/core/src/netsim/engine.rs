//! Discrete-event queue with a total order on `(fire_at, sequence)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Duration;

use thiserror::Error;

use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimEvent<A> {
    pub fire_at: SimTime,
    pub sequence: u64,
    pub action: A,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("event scheduled at {at} but the clock already reads {now}")]
    InPast { at: SimTime, now: SimTime },
}

struct Queued<A>(SimEvent<A>);

impl<A> Queued<A> {
    fn key(&self) -> (SimTime, u64) {
        (self.0.fire_at, self.0.sequence)
    }
}

impl<A> PartialEq for Queued<A> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<A> Eq for Queued<A> {}

impl<A> PartialOrd for Queued<A> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<A> Ord for Queued<A> {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

pub struct Engine<A> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Queued<A>>,
}

impl<A> Default for Engine<A> {
    fn default() -> Self {
        Self::new()
    }
}

impl<A> Engine<A> {
    pub fn new() -> Self {
        Self {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Enqueues `action` at `fire_at`; returns its sequence number.
    pub fn schedule(&mut self, fire_at: SimTime, action: A) -> Result<u64, EngineError> {
        if fire_at < self.now {
            return Err(EngineError::InPast {
                at: fire_at,
                now: self.now,
            });
        }
        let sequence = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Queued(SimEvent {
            fire_at,
            sequence,
            action,
        }));
        Ok(sequence)
    }

    pub fn schedule_after(&mut self, delay: Duration, action: A) -> u64 {
        self.schedule(self.now + delay, action)
            .expect("now + delay is never in the past")
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.queue.peek().map(|q| q.0.fire_at)
    }

    /// Removes the next event and advances the clock to it.
    pub fn pop(&mut self) -> Option<SimEvent<A>> {
        let ev = self.queue.pop()?.0;
        self.now = ev.fire_at;
        Some(ev)
    }

    /// Like [`Engine::pop`] but only for events at or before `limit`.
    pub fn pop_until(&mut self, limit: SimTime) -> Option<SimEvent<A>> {
        if self.peek_time()? > limit {
            return None;
        }
        self.pop()
    }

    /// Moves the clock forward to `t` without running anything. Fails if an
    /// event earlier than `t` is still queued or `t` is in the past.
    pub fn advance_to(&mut self, t: SimTime) -> Result<(), EngineError> {
        if t < self.now {
            return Err(EngineError::InPast { at: t, now: self.now });
        }
        if let Some(next) = self.peek_time() {
            if next < t {
                return Err(EngineError::InPast { at: next, now: t });
            }
        }
        self.now = t;
        Ok(())
    }

    /// Queued events in execution order.
    pub fn queued(&self) -> Vec<&SimEvent<A>> {
        let mut v: Vec<&SimEvent<A>> = self.queue.iter().map(|q| &q.0).collect();
        v.sort_by_key(|e| (e.fire_at, e.sequence));
        v
    }
}
