//! Deterministic discrete-event kernel.
//!
//! Events are dispatched in `(fire_time, sequence)` order. The sequence number
//! is assigned at scheduling time, so two events scheduled for the same
//! millisecond fire in the order they were scheduled.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::SimError;
use crate::NodeId;

/// Simulated time in integer milliseconds.
pub type Millis = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize)]
pub struct SimClock {
    now: Millis,
}

impl SimClock {
    pub fn now(&self) -> Millis {
        self.now
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub u64);

#[derive(Debug, Clone)]
pub struct Event<P> {
    pub fire_time: Millis,
    pub sequence: u64,
    pub target: NodeId,
    pub payload: P,
}

impl<P> Event<P> {
    pub fn id(&self) -> EventId {
        EventId(self.sequence)
    }
}

struct Queued<P>(Event<P>);

impl<P> Queued<P> {
    fn key(&self) -> (Millis, u64) {
        (self.0.fire_time, self.0.sequence)
    }
}

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<P> Eq for Queued<P> {}

impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Queued<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

pub struct Kernel<P> {
    clock: SimClock,
    queue: BinaryHeap<Reverse<Queued<P>>>,
    next_sequence: u64,
    dispatched: u64,
}

impl<P> Default for Kernel<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Kernel<P> {
    pub fn new() -> Self {
        Self {
            clock: SimClock::default(),
            queue: BinaryHeap::new(),
            next_sequence: 0,
            dispatched: 0,
        }
    }

    pub fn now(&self) -> Millis {
        self.clock.now
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Total events dispatched over the kernel's lifetime.
    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Queues `payload` for `target` at the absolute time `fire_time`.
    pub fn schedule(
        &mut self,
        fire_time: Millis,
        target: NodeId,
        payload: P,
    ) -> Result<EventId, SimError> {
        if fire_time < self.clock.now {
            return Err(SimError::PastEvent {
                fire_time,
                now: self.clock.now,
            });
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.queue.push(Reverse(Queued(Event {
            fire_time,
            sequence,
            target,
            payload,
        })));
        Ok(EventId(sequence))
    }

    /// Queues relative to the current clock; never fails.
    pub fn schedule_in(&mut self, delay: Millis, target: NodeId, payload: P) -> EventId {
        let at = self.clock.now + delay;
        self.schedule(at, target, payload)
            .expect("relative schedule is never in the past")
    }

    /// Pops the next event due at or before `t_end`, advancing the clock to it.
    pub fn pop_due(&mut self, t_end: Millis) -> Option<Event<P>> {
        let due = matches!(self.queue.peek(), Some(Reverse(q)) if q.0.fire_time <= t_end);
        if !due {
            return None;
        }
        let Reverse(Queued(event)) = self.queue.pop()?;
        self.clock.now = event.fire_time;
        self.dispatched += 1;
        Some(event)
    }

    /// Settles the clock after a dispatch loop that stopped at `t_end`.
    ///
    /// When no event fired the clock jumps to `t_end`; otherwise it stays at
    /// the last dispatched timestamp.
    pub fn settle(&mut self, t_end: Millis, dispatched_any: bool) {
        if !dispatched_any && t_end > self.clock.now {
            self.clock.now = t_end;
        }
    }

    /// Dispatches every event with `fire_time <= t_end` through `handler`,
    /// including events the handler itself schedules inside the window.
    /// Returns the number of dispatched events. A `t_end` in the past is a no-op.
    pub fn run_until<F>(&mut self, t_end: Millis, mut handler: F) -> usize
    where
        F: FnMut(&mut Self, Event<P>),
    {
        if t_end < self.clock.now {
            return 0;
        }
        let mut count = 0;
        while let Some(event) = self.pop_due(t_end) {
            handler(self, event);
            count += 1;
        }
        self.settle(t_end, count > 0);
        count
    }
}
