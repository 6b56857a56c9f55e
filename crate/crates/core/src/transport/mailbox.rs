use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Per-rank receive queues keyed by (source world rank, wire tag).
///
/// Pushes never block, so sends (including self-sends) are fully buffered.
#[derive(Default)]
pub(crate) struct Mailbox {
    state: Mutex<MailState>,
    ready: Condvar,
}

#[derive(Default)]
struct MailState {
    queues: HashMap<(usize, u32), VecDeque<Vec<u8>>>,
    disconnected: HashSet<usize>,
    aborted: bool,
}

impl Mailbox {
    pub(crate) fn push(&self, src: usize, tag: u32, payload: Vec<u8>) {
        let mut state = self.state.lock().unwrap();
        state.queues.entry((src, tag)).or_default().push_back(payload);
        self.ready.notify_all();
    }

    pub(crate) fn pop(&self, src: usize, tag: u32, timeout: Duration) -> Result<Vec<u8>> {
        let deadline = Instant::now() + timeout;
        let mut state = self.state.lock().unwrap();
        loop {
            if let Some(queue) = state.queues.get_mut(&(src, tag)) {
                if let Some(payload) = queue.pop_front() {
                    if queue.is_empty() {
                        state.queues.remove(&(src, tag));
                    }
                    return Ok(payload);
                }
            }
            if state.aborted {
                return Err(Error::Aborted);
            }
            if state.disconnected.contains(&src) {
                return Err(Error::Disconnected(src));
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(Error::Timeout(format!(
                    "message from rank {src} with tag {tag:#010x}"
                )));
            }
            state = self.ready.wait_timeout(state, deadline - now).unwrap().0;
        }
    }

    pub(crate) fn disconnect(&self, src: usize) {
        self.state.lock().unwrap().disconnected.insert(src);
        self.ready.notify_all();
    }

    pub(crate) fn abort(&self) {
        self.state.lock().unwrap().aborted = true;
        self.ready.notify_all();
    }
}
