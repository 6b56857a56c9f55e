//! Ranks, point-to-point messages and deterministic collectives.
//!
//! A [`Communicator`] is an ordered group of ranks sitting on top of a
//! message fabric. Two fabrics exist: [`inproc`] hosts every rank as a thread
//! of the current process, [`socket`] connects one OS process per rank over
//! TCP. Collectives are built from point-to-point messages with a fixed
//! linear schedule (every reduction folds rank 0, 1, ..., size-1 in order), so
//! results are bitwise identical across runs and across backends.
//!
//! Every collective implies a barrier: no rank leaves before all entered.

pub mod codec;
pub mod inproc;
mod mailbox;
pub mod socket;

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::time::Duration;

use crate::error::{Error, Result};

pub use inproc::{in_process_world, run_in_process};
pub use socket::{connect_world, run_socket_threads, Rendezvous};

/// User tags must stay below this value; the range above is used by collectives.
pub const MAX_USER_TAG: u16 = 0xEFFF;

const TAG_BARRIER: u16 = 0xF000;
const TAG_BCAST: u16 = 0xF001;
const TAG_REDUCE: u16 = 0xF002;
const TAG_GATHER: u16 = 0xF003;
const TAG_ALLTOALL: u16 = 0xF004;
const TAG_SPLIT: u16 = 0xF005;

pub(crate) fn recv_timeout() -> Duration {
    std::env::var("DISTLA_RECV_TIMEOUT_SECS")
        .ok()
        .and_then(|s| s.parse().ok())
        .map(Duration::from_secs)
        .unwrap_or(Duration::from_secs(120))
}

pub(crate) trait Fabric: Send + Sync {
    fn send(&self, from: usize, to: usize, tag: u32, payload: Vec<u8>) -> Result<()>;
    fn recv(&self, me: usize, from: usize, tag: u32) -> Result<Vec<u8>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    InProcess,
    Socket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOp {
    Sum,
    Max,
    Min,
    /// Largest magnitude with its location; ties go to the smallest index.
    MaxAbsLoc,
}

/// An ordered group of ranks.
///
/// Cloning yields another handle for the same rank; handles may move between
/// threads but one rank must not issue calls from two threads at once.
#[derive(Clone)]
pub struct Communicator {
    rank: usize,
    size: usize,
    context: u32,
    members: Arc<[usize]>,
    fabric: Arc<dyn Fabric>,
    next_context: Arc<AtomicU32>,
    backend: Backend,
}

impl std::fmt::Debug for Communicator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Communicator")
            .field("rank", &self.rank)
            .field("size", &self.size)
            .field("context", &self.context)
            .field("backend", &self.backend)
            .finish()
    }
}

impl Communicator {
    pub(crate) fn world(rank: usize, size: usize, fabric: Arc<dyn Fabric>, backend: Backend) -> Self {
        Communicator {
            rank,
            size,
            context: 0,
            members: (0..size).collect::<Vec<_>>().into(),
            fabric,
            next_context: Arc::new(AtomicU32::new(1)),
            backend,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// Identifier shared by all members of this communicator.
    pub fn group_id(&self) -> u32 {
        self.context
    }

    /// World rank of member `rank`.
    pub fn world_rank_of(&self, rank: usize) -> usize {
        self.members[rank]
    }

    fn wire_tag(&self, tag: u16) -> u32 {
        (self.context << 16) | tag as u32
    }

    fn check_rank(&self, rank: usize) -> Result<()> {
        if rank >= self.size {
            return Err(Error::Transport(format!(
                "rank {rank} out of range for communicator of size {}",
                self.size
            )));
        }
        Ok(())
    }

    fn raw_send(&self, dest: usize, tag: u16, payload: Vec<u8>) -> Result<()> {
        self.check_rank(dest)?;
        self.fabric.send(
            self.members[self.rank],
            self.members[dest],
            self.wire_tag(tag),
            payload,
        )
    }

    fn raw_recv(&self, src: usize, tag: u16) -> Result<Vec<u8>> {
        self.check_rank(src)?;
        self.fabric
            .recv(self.members[self.rank], self.members[src], self.wire_tag(tag))
    }

    fn check_user_tag(tag: u16) -> Result<()> {
        if tag > MAX_USER_TAG {
            return Err(Error::Transport(format!("tag {tag:#x} is reserved")));
        }
        Ok(())
    }

    /// Buffered send: never blocks on the receiver, so self-sends of any size are fine.
    pub fn send(&self, dest: usize, tag: u16, payload: Vec<u8>) -> Result<()> {
        Self::check_user_tag(tag)?;
        self.raw_send(dest, tag, payload)
    }

    /// Messages on one (src, dest, tag) channel arrive in send order.
    pub fn recv(&self, src: usize, tag: u16) -> Result<Vec<u8>> {
        Self::check_user_tag(tag)?;
        self.raw_recv(src, tag)
    }

    pub fn barrier(&self) -> Result<()> {
        if self.rank == 0 {
            for src in 1..self.size {
                self.raw_recv(src, TAG_BARRIER)?;
            }
            for dest in 1..self.size {
                self.raw_send(dest, TAG_BARRIER, Vec::new())?;
            }
        } else {
            self.raw_send(0, TAG_BARRIER, Vec::new())?;
            self.raw_recv(0, TAG_BARRIER)?;
        }
        Ok(())
    }

    /// Every rank returns `root`'s payload. Non-root payloads are ignored.
    pub fn broadcast(&self, root: usize, payload: Vec<u8>) -> Result<Vec<u8>> {
        self.check_rank(root)?;
        if self.size == 1 {
            return Ok(payload);
        }
        if self.rank == root {
            for src in (0..self.size).filter(|&r| r != root) {
                self.raw_recv(src, TAG_BCAST)?;
            }
            for dest in (0..self.size).filter(|&r| r != root) {
                self.raw_send(dest, TAG_BCAST, payload.clone())?;
            }
            Ok(payload)
        } else {
            self.raw_send(root, TAG_BCAST, Vec::new())?;
            self.raw_recv(root, TAG_BCAST)
        }
    }

    pub fn broadcast_f64(&self, root: usize, values: &[f64]) -> Result<Vec<f64>> {
        let bytes = if self.rank == root {
            codec::encode_f64s(values)
        } else {
            Vec::new()
        };
        codec::decode_f64s(&self.broadcast(root, bytes)?)
    }

    /// Gathers each rank's bytes at rank 0, which folds them in rank order and
    /// sends the combined result back to everyone.
    fn reduce_linear(
        &self,
        payload: Vec<u8>,
        fold: impl Fn(Vec<Vec<u8>>) -> Result<Vec<u8>>,
    ) -> Result<Vec<u8>> {
        if self.rank == 0 {
            let mut parts = Vec::with_capacity(self.size);
            parts.push(payload);
            for src in 1..self.size {
                parts.push(self.raw_recv(src, TAG_REDUCE)?);
            }
            let out = fold(parts);
            let mut reply = Vec::new();
            match &out {
                Ok(bytes) => {
                    reply.push(0u8);
                    reply.extend_from_slice(bytes);
                }
                Err(e) => {
                    reply.push(1u8);
                    reply.extend_from_slice(e.to_string().as_bytes());
                }
            }
            for dest in 1..self.size {
                self.raw_send(dest, TAG_REDUCE, reply.clone())?;
            }
            out
        } else {
            self.raw_send(0, TAG_REDUCE, payload)?;
            let mut reply = self.raw_recv(0, TAG_REDUCE)?;
            match reply.first() {
                Some(0) => {
                    reply.remove(0);
                    Ok(reply)
                }
                _ => Err(Error::LengthMismatch(
                    String::from_utf8_lossy(reply.get(1..).unwrap_or_default()).into_owned(),
                )),
            }
        }
    }

    /// Elementwise reduction of equal-length sequences; result identical on all ranks.
    ///
    /// `Sum` accumulates rank 0 first, then 1, 2, ... so the result is bitwise
    /// reproducible for a fixed communicator size.
    pub fn allreduce(&self, op: ReduceOp, values: &[f64]) -> Result<Vec<f64>> {
        if op == ReduceOp::MaxAbsLoc {
            return Err(Error::Transport(
                "MaxAbsLoc needs located values; use allreduce_located".into(),
            ));
        }
        let n = values.len();
        let out = self.reduce_linear(codec::encode_f64s(values), |parts| {
            let mut acc = codec::decode_f64s(&parts[0])?;
            for (r, p) in parts.iter().enumerate().skip(1) {
                let vals = codec::decode_f64s(p)?;
                if vals.len() != acc.len() {
                    return Err(Error::LengthMismatch(format!(
                        "rank 0 has {} values, rank {r} has {}",
                        acc.len(),
                        vals.len()
                    )));
                }
                for (a, v) in acc.iter_mut().zip(vals) {
                    *a = match op {
                        ReduceOp::Sum => *a + v,
                        ReduceOp::Max => a.max(v),
                        ReduceOp::Min => a.min(v),
                        ReduceOp::MaxAbsLoc => unreachable!(),
                    };
                }
            }
            Ok(codec::encode_f64s(&acc))
        });
        let out = codec::decode_f64s(&out?)?;
        if out.len() != n {
            return Err(Error::LengthMismatch(format!(
                "reduced {} values, contributed {n}",
                out.len()
            )));
        }
        Ok(out)
    }

    pub fn allreduce_scalar(&self, op: ReduceOp, value: f64) -> Result<f64> {
        Ok(self.allreduce(op, &[value])?[0])
    }

    /// Max-abs-with-location reduction over `(value, index)` pairs.
    ///
    /// Returns `(|value|, index)` of the largest magnitude per slot; equal
    /// magnitudes resolve to the smallest index.
    pub fn allreduce_located(&self, values: &[(f64, u64)]) -> Result<Vec<(f64, u64)>> {
        let mut flat = Vec::with_capacity(values.len() * 16);
        for (v, i) in values {
            flat.extend_from_slice(&v.abs().to_le_bytes());
            flat.extend_from_slice(&i.to_le_bytes());
        }
        let out = self.reduce_linear(flat, |parts| {
            let decode = |p: &[u8]| -> Vec<(f64, u64)> {
                p.chunks_exact(16)
                    .map(|c| {
                        (
                            f64::from_le_bytes(c[..8].try_into().unwrap()),
                            u64::from_le_bytes(c[8..].try_into().unwrap()),
                        )
                    })
                    .collect()
            };
            let mut acc = decode(&parts[0]);
            for (r, p) in parts.iter().enumerate().skip(1) {
                let vals = decode(p);
                if vals.len() != acc.len() {
                    return Err(Error::LengthMismatch(format!(
                        "rank 0 has {} pairs, rank {r} has {}",
                        acc.len(),
                        vals.len()
                    )));
                }
                for (a, v) in acc.iter_mut().zip(vals) {
                    if v.0 > a.0 || (v.0 == a.0 && v.1 < a.1) {
                        *a = v;
                    }
                }
            }
            let mut out = Vec::with_capacity(acc.len() * 16);
            for (v, i) in acc {
                out.extend_from_slice(&v.to_le_bytes());
                out.extend_from_slice(&i.to_le_bytes());
            }
            Ok(out)
        })?;
        Ok(out
            .chunks_exact(16)
            .map(|c| {
                (
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    u64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect())
    }

    /// Every rank receives every rank's bytes, indexed by rank.
    pub fn allgatherv_bytes(&self, local: Vec<u8>) -> Result<Vec<Vec<u8>>> {
        if self.size == 1 {
            return Ok(vec![local]);
        }
        let all = if self.rank == 0 {
            let mut parts = Vec::with_capacity(self.size);
            parts.push(local);
            for src in 1..self.size {
                parts.push(self.raw_recv(src, TAG_GATHER)?);
            }
            let packed = codec::encode_blocks(&parts);
            for dest in 1..self.size {
                self.raw_send(dest, TAG_GATHER, packed.clone())?;
            }
            return Ok(parts);
        } else {
            self.raw_send(0, TAG_GATHER, local)?;
            self.raw_recv(0, TAG_GATHER)?
        };
        codec::decode_blocks(&all)
    }

    /// Per-rank pieces of a float allgather, indexed by rank.
    pub fn allgatherv_parts(&self, local: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.allgatherv_bytes(codec::encode_f64s(local))?
            .iter()
            .map(|b| codec::decode_f64s(b))
            .collect()
    }

    /// Concatenation of all ranks' sequences in rank order.
    pub fn allgatherv(&self, local: &[f64]) -> Result<Vec<f64>> {
        Ok(self.allgatherv_parts(local)?.concat())
    }

    /// Personalized exchange: `outgoing[d]` goes to rank `d`; returns what
    /// each rank sent here, indexed by source.
    pub fn alltoallv_bytes(&self, outgoing: Vec<Vec<u8>>) -> Result<Vec<Vec<u8>>> {
        if outgoing.len() != self.size {
            return Err(Error::LengthMismatch(format!(
                "alltoallv needs {} buffers, got {}",
                self.size,
                outgoing.len()
            )));
        }
        let mut mine = Vec::new();
        for (dest, buf) in outgoing.into_iter().enumerate() {
            if dest == self.rank {
                mine = buf;
            } else {
                self.raw_send(dest, TAG_ALLTOALL, buf)?;
            }
        }
        let mut incoming = Vec::with_capacity(self.size);
        for src in 0..self.size {
            if src == self.rank {
                incoming.push(std::mem::take(&mut mine));
            } else {
                incoming.push(self.raw_recv(src, TAG_ALLTOALL)?);
            }
        }
        Ok(incoming)
    }

    /// Partitions the group by `color`; members of each part are ordered by
    /// `key`, then by their rank here.
    pub fn split(&self, color: i64, key: i64) -> Result<Communicator> {
        let next = self.next_context.load(Ordering::SeqCst);
        let mut mine = Vec::with_capacity(24);
        mine.extend_from_slice(&color.to_le_bytes());
        mine.extend_from_slice(&key.to_le_bytes());
        mine.extend_from_slice(&(next as u64).to_le_bytes());

        let all = if self.size == 1 {
            vec![mine]
        } else if self.rank == 0 {
            let mut parts = vec![mine];
            for src in 1..self.size {
                parts.push(self.raw_recv(src, TAG_SPLIT)?);
            }
            let packed = codec::encode_blocks(&parts);
            for dest in 1..self.size {
                self.raw_send(dest, TAG_SPLIT, packed.clone())?;
            }
            parts
        } else {
            self.raw_send(0, TAG_SPLIT, mine)?;
            codec::decode_blocks(&self.raw_recv(0, TAG_SPLIT)?)?
        };

        let mut entries = Vec::with_capacity(self.size);
        for (rank, bytes) in all.iter().enumerate() {
            let mut r = codec::Reader::new(bytes);
            let c = r.i64()?;
            let k = r.i64()?;
            let n = r.u64()? as u32;
            entries.push((c, k, rank, n));
        }
        let base = entries.iter().map(|e| e.3).max().unwrap_or(next);
        let mut colors: Vec<i64> = entries.iter().map(|e| e.0).collect();
        colors.sort_unstable();
        colors.dedup();
        let color_index = colors.binary_search(&color).unwrap() as u32;
        let context = base + color_index;
        let after = base + colors.len() as u32;
        if after > 0xFFFF {
            return Err(Error::Transport("communicator context ids exhausted".into()));
        }
        self.next_context.store(after, Ordering::SeqCst);

        let mut group: Vec<_> = entries.iter().filter(|e| e.0 == color).collect();
        group.sort_by_key(|e| (e.1, e.2));
        let members: Vec<usize> = group.iter().map(|e| self.members[e.2]).collect();
        let new_rank = group.iter().position(|e| e.2 == self.rank).unwrap();
        Ok(Communicator {
            rank: new_rank,
            size: members.len(),
            context,
            members: members.into(),
            fabric: self.fabric.clone(),
            next_context: self.next_context.clone(),
            backend: self.backend,
        })
    }
}
