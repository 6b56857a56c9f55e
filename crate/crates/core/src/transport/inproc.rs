//! Simulated ranks: one thread per rank, queue-based channels in shared memory.

use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Duration;

use super::mailbox::Mailbox;
use super::{Backend, Communicator, Fabric};
use crate::error::{Error, Result};

pub(crate) struct InProcessFabric {
    mailboxes: Vec<Mailbox>,
    timeout: Duration,
}

impl InProcessFabric {
    fn abort(&self) {
        for mb in &self.mailboxes {
            mb.abort();
        }
    }
}

impl Fabric for InProcessFabric {
    fn send(&self, from: usize, to: usize, tag: u32, payload: Vec<u8>) -> Result<()> {
        let mb = self
            .mailboxes
            .get(to)
            .ok_or_else(|| Error::Transport(format!("no rank {to}")))?;
        mb.push(from, tag, payload);
        Ok(())
    }

    fn recv(&self, me: usize, from: usize, tag: u32) -> Result<Vec<u8>> {
        self.mailboxes[me].pop(from, tag, self.timeout)
    }
}

/// Builds the world communicators for `nranks` in-process ranks, one per rank.
///
/// The returned communicators are meant to be moved onto separate threads;
/// [`run_in_process`] does that for you.
pub fn in_process_world(nranks: usize) -> Result<Vec<Communicator>> {
    Ok(make_world(nranks)?.1)
}

fn make_world(nranks: usize) -> Result<(Arc<InProcessFabric>, Vec<Communicator>)> {
    if nranks == 0 {
        return Err(Error::Config("world needs at least one rank".into()));
    }
    let fabric = Arc::new(InProcessFabric {
        mailboxes: (0..nranks).map(|_| Mailbox::default()).collect(),
        timeout: super::recv_timeout(),
    });
    let comms = (0..nranks)
        .map(|rank| Communicator::world(rank, nranks, fabric.clone(), Backend::InProcess))
        .collect();
    Ok((fabric, comms))
}

/// Runs `entry` once per rank on its own thread and returns the results in rank order.
///
/// Every rank is barrier-synchronized before `entry` starts. If any rank
/// panics, the world is aborted so peers blocked in a receive fail fast.
pub fn run_in_process<F, R>(nranks: usize, entry: F) -> Result<Vec<R>>
where
    F: Fn(Communicator) -> R + Send + Sync,
    R: Send,
{
    let (fabric, comms) = make_world(nranks)?;
    let entry = &entry;
    let outcomes: Vec<std::thread::Result<R>> = std::thread::scope(|scope| {
        let handles: Vec<_> = comms
            .into_iter()
            .map(|comm| {
                let fabric = fabric.clone();
                scope.spawn(move || {
                    let out = panic::catch_unwind(AssertUnwindSafe(|| {
                        comm.barrier().expect("startup barrier");
                        entry(comm)
                    }));
                    if out.is_err() {
                        fabric.abort();
                    }
                    out
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(Err))
            .collect()
    });

    let mut results = Vec::with_capacity(nranks);
    for (rank, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(r) => results.push(r),
            Err(payload) => {
                let msg = payload
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "unknown panic".into());
                return Err(Error::Transport(format!("rank {rank} panicked: {msg}")));
            }
        }
    }
    Ok(results)
}
