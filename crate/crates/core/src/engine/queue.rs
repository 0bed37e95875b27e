//! Chronological event queue with cancellable entries.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::time::TimePoint;

/// Refers to a scheduled event; stale once the event is popped or cancelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EventHandle {
    slot: u32,
    generation: u32,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    time: TimePoint,
    seq: u64,
    handle: EventHandle,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.cmp(&other.time).then(self.seq.cmp(&other.seq))
    }
}

struct Slot<E> {
    generation: u32,
    event: Option<E>,
}

/// Events ordered by time, ties in scheduling order. Cancelled entries stay
/// in the heap as tombstones and are skipped when they surface.
pub struct EventQueue<E> {
    heap: BinaryHeap<Reverse<Entry>>,
    slots: Vec<Slot<E>>,
    free: Vec<u32>,
    seq: u64,
    live: usize,
    now: TimePoint,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            slots: Vec::new(),
            free: Vec::new(),
            seq: 0,
            live: 0,
            now: TimePoint::new(f64::NEG_INFINITY),
        }
    }

    /// Time of the most recently popped event.
    pub fn now(&self) -> TimePoint {
        self.now
    }

    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Schedules `event` at `time`, which must lie strictly after the last
    /// popped event.
    pub fn schedule(&mut self, time: TimePoint, event: E) -> EventHandle {
        assert!(
            time > self.now && time.is_finite(),
            "event scheduled at {time:?}, not after current time {:?}",
            self.now
        );
        let slot = match self.free.pop() {
            Some(i) => {
                self.slots[i as usize].event = Some(event);
                i
            }
            None => {
                self.slots.push(Slot {
                    generation: 0,
                    event: Some(event),
                });
                (self.slots.len() - 1) as u32
            }
        };
        let handle = EventHandle {
            slot,
            generation: self.slots[slot as usize].generation,
        };
        self.heap.push(Reverse(Entry {
            time,
            seq: self.seq,
            handle,
        }));
        self.seq += 1;
        self.live += 1;
        handle
    }

    pub fn is_live(&self, handle: EventHandle) -> bool {
        let slot = &self.slots[handle.slot as usize];
        slot.generation == handle.generation && slot.event.is_some()
    }

    pub fn get(&self, handle: EventHandle) -> Option<&E> {
        let slot = &self.slots[handle.slot as usize];
        (slot.generation == handle.generation).then_some(slot.event.as_ref()).flatten()
    }

    fn release(&mut self, slot: u32) -> Option<E> {
        let s = &mut self.slots[slot as usize];
        let event = s.event.take()?;
        s.generation = s.generation.wrapping_add(1);
        self.free.push(slot);
        self.live -= 1;
        Some(event)
    }

    /// Removes a pending event; returns it, or `None` if the handle is stale.
    pub fn cancel(&mut self, handle: EventHandle) -> Option<E> {
        if !self.is_live(handle) {
            return None;
        }
        self.release(handle.slot)
    }

    /// Cancels every pending event matching `pred`; returns how many.
    pub fn cancel_where(&mut self, mut pred: impl FnMut(&E) -> bool) -> usize {
        let matching: Vec<u32> = self
            .slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.event.as_ref().is_some_and(&mut pred))
            .map(|(i, _)| i as u32)
            .collect();
        for &slot in &matching {
            self.release(slot);
        }
        matching.len()
    }

    /// Removes the earliest pending event and advances the current time.
    pub fn pop(&mut self) -> Option<(TimePoint, EventHandle, E)> {
        while let Some(Reverse(entry)) = self.heap.pop() {
            let slot = &self.slots[entry.handle.slot as usize];
            if slot.generation != entry.handle.generation || slot.event.is_none() {
                continue;
            }
            let event = self.release(entry.handle.slot).expect("live slot");
            self.now = entry.time;
            return Some((entry.time, entry.handle, event));
        }
        None
    }

    pub fn peek_time(&mut self) -> Option<TimePoint> {
        while let Some(Reverse(entry)) = self.heap.peek() {
            let slot = &self.slots[entry.handle.slot as usize];
            if slot.generation == entry.handle.generation && slot.event.is_some() {
                return Some(entry.time);
            }
            self.heap.pop();
        }
        None
    }
}

/// The smallest time strictly after `now` that is not before `t`.
pub fn strictly_after(now: TimePoint, t: TimePoint) -> TimePoint {
    if t > now {
        t
    } else {
        TimePoint::new(now.days().next_up())
    }
}
