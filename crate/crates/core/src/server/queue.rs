//! Bounded multi-producer multi-consumer FIFO joining the two stacks.
//!
//! Items live in a lock-free [`ArrayQueue`]. Idle consumers park on their
//! own [`Parker`]; a producer that observes sleepers claims one sleeping
//! slot with a CAS and unparks it. No mutex is taken on either side.
//!
//! Wakeup protocol: a consumer publishes `sleeping = true`, bumps
//! `sleepers`, then re-checks the queue before parking. A producer pushes,
//! then reads `sleepers`. Both sides are `SeqCst`, so either the consumer
//! sees the item or the producer sees the sleeper.

use std::sync::atomic::{fence, AtomicBool, AtomicUsize, Ordering::SeqCst};
use std::sync::Arc;
use std::time::Duration;

use crossbeam::queue::ArrayQueue;
use crossbeam::sync::{Parker, Unparker};

/// Upper bound on a missed-wakeup stall; the protocol above should make it
/// unreachable.
const PARK_TIMEOUT: Duration = Duration::from_millis(50);

#[derive(Debug, PartialEq, Eq)]
pub enum PushError<T> {
    Full(T),
    Closed(T),
}

impl<T> PushError<T> {
    pub fn into_inner(self) -> T {
        match self {
            PushError::Full(t) | PushError::Closed(t) => t,
        }
    }
}

struct Slot {
    sleeping: AtomicBool,
    unparker: Unparker,
}

pub struct TaskQueue<T> {
    items: ArrayQueue<T>,
    closed: AtomicBool,
    sleepers: AtomicUsize,
    slots: Box<[Slot]>,
}

/// The receiving end owned by one consumer thread.
pub struct Consumer<T> {
    queue: Arc<TaskQueue<T>>,
    index: usize,
    parker: Parker,
}

impl<T> TaskQueue<T> {
    /// A queue holding at most `capacity` items, drained by `consumers`
    /// consumer handles.
    pub fn new(capacity: usize, consumers: usize) -> (Arc<Self>, Vec<Consumer<T>>) {
        let parkers: Vec<Parker> = (0..consumers).map(|_| Parker::new()).collect();
        let slots = parkers
            .iter()
            .map(|p| Slot {
                sleeping: AtomicBool::new(false),
                unparker: p.unparker().clone(),
            })
            .collect();
        let queue = Arc::new(TaskQueue {
            items: ArrayQueue::new(capacity),
            closed: AtomicBool::new(false),
            sleepers: AtomicUsize::new(0),
            slots,
        });
        let consumers = parkers
            .into_iter()
            .enumerate()
            .map(|(index, parker)| Consumer {
                queue: Arc::clone(&queue),
                index,
                parker,
            })
            .collect();
        (queue, consumers)
    }

    pub fn push(&self, item: T) -> Result<(), PushError<T>> {
        if self.closed.load(SeqCst) {
            return Err(PushError::Closed(item));
        }
        self.items.push(item).map_err(PushError::Full)?;
        fence(SeqCst);
        if self.sleepers.load(SeqCst) > 0 {
            self.wake_one();
        }
        Ok(())
    }

    fn wake_one(&self) {
        for slot in self.slots.iter() {
            if slot
                .sleeping
                .compare_exchange(true, false, SeqCst, SeqCst)
                .is_ok()
            {
                self.sleepers.fetch_sub(1, SeqCst);
                slot.unparker.unpark();
                return;
            }
        }
    }

    /// Rejects further pushes. Consumers drain what is queued, then stop.
    pub fn close(&self) {
        self.closed.store(true, SeqCst);
        for slot in self.slots.iter() {
            slot.unparker.unpark();
        }
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(SeqCst)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.items.capacity()
    }
}

impl<T> Consumer<T> {
    pub fn try_pop(&self) -> Option<T> {
        self.queue.items.pop()
    }

    /// Blocks until an item arrives. Returns `None` once the queue is closed
    /// and empty.
    pub fn pop(&self) -> Option<T> {
        let slot = &self.queue.slots[self.index];
        loop {
            if let Some(item) = self.queue.items.pop() {
                return Some(item);
            }
            if self.queue.is_closed() {
                return self.queue.items.pop();
            }
            slot.sleeping.store(true, SeqCst);
            self.queue.sleepers.fetch_add(1, SeqCst);
            fence(SeqCst);
            if let Some(item) = self.queue.items.pop() {
                self.cancel_sleep();
                return Some(item);
            }
            if !self.queue.is_closed() {
                self.parker.park_timeout(PARK_TIMEOUT);
            }
            self.cancel_sleep();
        }
    }

    fn cancel_sleep(&self) {
        let slot = &self.queue.slots[self.index];
        if slot
            .sleeping
            .compare_exchange(true, false, SeqCst, SeqCst)
            .is_ok()
        {
            self.queue.sleepers.fetch_sub(1, SeqCst);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;
    use std::thread;
    use std::time::Instant;

    #[test]
    fn single_producer_fifo() {
        let (q, consumers) = TaskQueue::new(8, 1);
        for c in ['a', 'b', 'c'] {
            q.push(c).unwrap();
        }
        let c = &consumers[0];
        assert_eq!([c.pop(), c.pop(), c.pop()], [Some('a'), Some('b'), Some('c')]);
    }

    #[test]
    fn full_and_closed() {
        let (q, consumers) = TaskQueue::new(1, 1);
        q.push(1).unwrap();
        assert_eq!(q.push(2), Err(PushError::Full(2)));
        q.close();
        assert_eq!(q.push(3), Err(PushError::Closed(3)));
        // drains what was queued before close
        assert_eq!(consumers[0].pop(), Some(1));
        assert_eq!(consumers[0].pop(), None);
    }

    #[test]
    fn every_item_dequeued_exactly_once() {
        const PRODUCERS: usize = 8;
        const ITEMS: usize = 5_000;
        let (q, consumers) = TaskQueue::new(256, 4);
        let sinks: Vec<_> = consumers
            .into_iter()
            .map(|c| thread::spawn(move || {
                let mut got = Vec::new();
                while let Some(item) = c.pop() {
                    got.push(item);
                }
                got
            }))
            .collect();
        let producers: Vec<_> = (0..PRODUCERS)
            .map(|p| {
                let q = Arc::clone(&q);
                thread::spawn(move || {
                    for i in 0..ITEMS {
                        let mut item = (p, i);
                        loop {
                            match q.push(item) {
                                Ok(()) => break,
                                Err(PushError::Full(back)) => {
                                    item = back;
                                    thread::yield_now();
                                }
                                Err(PushError::Closed(_)) => unreachable!(),
                            }
                        }
                    }
                })
            })
            .collect();
        for p in producers {
            p.join().unwrap();
        }
        q.close();
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        for sink in sinks {
            let got = sink.join().unwrap();
            // per-producer order is preserved within each consumer's view
            let mut last = [None; PRODUCERS];
            for &(p, i) in &got {
                assert!(last[p].is_none_or(|prev| prev < i));
                last[p] = Some(i);
            }
            for item in got {
                *counts.entry(item).or_default() += 1;
            }
        }
        assert_eq!(counts.len(), PRODUCERS * ITEMS);
        assert!(counts.values().all(|&n| n == 1));
    }

    #[test]
    fn parked_consumer_wakes_promptly() {
        let (q, mut consumers) = TaskQueue::new(4, 1);
        let c = consumers.pop().unwrap();
        let waiter = thread::spawn(move || {
            let v = c.pop();
            (v, Instant::now())
        });
        thread::sleep(Duration::from_millis(100));
        let sent = Instant::now();
        q.push(7u32).unwrap();
        let (v, got) = waiter.join().unwrap();
        assert_eq!(v, Some(7));
        assert!(got.duration_since(sent) < Duration::from_millis(40));
    }
}
