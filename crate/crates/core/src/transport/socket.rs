//! Multi-process backend over TCP.
//!
//! Wire frame: `[u32 LE payload length][u32 LE tag][payload]`. The source rank
//! is implied by the connection. Ranks form a full mesh after meeting at a
//! rendezvous server, which assigns ranks by sorting the worker-supplied keys.

use std::io::{Read, Write};
use std::net::{IpAddr, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::mailbox::Mailbox;
use super::{Backend, Communicator, Fabric};
use crate::error::{Error, Result};

const HELLO_MAGIC: &[u8; 4] = b"DLA1";
const PEER_MAGIC: &[u8; 4] = b"DLAP";

pub(crate) struct SocketFabric {
    rank: usize,
    writers: Vec<Option<Mutex<TcpStream>>>,
    mailbox: Arc<Mailbox>,
    timeout: Duration,
}

impl Fabric for SocketFabric {
    fn send(&self, from: usize, to: usize, tag: u32, payload: Vec<u8>) -> Result<()> {
        debug_assert_eq!(from, self.rank);
        if to == self.rank {
            self.mailbox.push(to, tag, payload);
            return Ok(());
        }
        let len = u32::try_from(payload.len())
            .map_err(|_| Error::Transport("payload exceeds 4 GiB frame limit".into()))?;
        let writer = self
            .writers
            .get(to)
            .and_then(|w| w.as_ref())
            .ok_or_else(|| Error::Transport(format!("no connection to rank {to}")))?;
        let mut frame = Vec::with_capacity(8 + payload.len());
        frame.extend_from_slice(&len.to_le_bytes());
        frame.extend_from_slice(&tag.to_le_bytes());
        frame.extend_from_slice(&payload);
        writer
            .lock()
            .unwrap()
            .write_all(&frame)
            .map_err(|_| Error::Disconnected(to))
    }

    fn recv(&self, me: usize, from: usize, tag: u32) -> Result<Vec<u8>> {
        debug_assert_eq!(me, self.rank);
        self.mailbox.pop(from, tag, self.timeout)
    }
}

impl Drop for SocketFabric {
    fn drop(&mut self) {
        for w in self.writers.iter().flatten() {
            let _ = w.lock().unwrap().shutdown(std::net::Shutdown::Write);
        }
    }
}

/// Rank-assigning rendezvous server. Not itself a rank.
pub struct Rendezvous {
    listener: TcpListener,
}

impl Rendezvous {
    pub fn bind(addr: impl ToSocketAddrs) -> Result<Self> {
        Ok(Rendezvous {
            listener: TcpListener::bind(addr)?,
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts `nranks` workers, assigns ranks ordered by worker key, and sends
    /// every worker the full address table. Returns once all tables are sent.
    pub fn serve(self, nranks: usize, timeout: Duration) -> Result<()> {
        if nranks == 0 {
            return Err(Error::Config("world needs at least one rank".into()));
        }
        let deadline = Instant::now() + timeout;
        let mut workers: Vec<(u64, TcpStream, SocketAddr)> = Vec::with_capacity(nranks);
        while workers.len() < nranks {
            let mut stream = accept_before(&self.listener, deadline, "rendezvous workers")?;
            let mut hello = [0u8; 14];
            stream.read_exact(&mut hello)?;
            if &hello[..4] != HELLO_MAGIC {
                return Err(Error::Transport("bad rendezvous handshake".into()));
            }
            let key = u64::from_le_bytes(hello[4..12].try_into().unwrap());
            let port = u16::from_le_bytes(hello[12..14].try_into().unwrap());
            let addr = SocketAddr::new(stream.peer_addr()?.ip(), port);
            workers.push((key, stream, addr));
        }
        workers.sort_by_key(|w| w.0);
        if workers.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Transport("duplicate worker keys".into()));
        }

        let mut table = Vec::new();
        for (_, _, addr) in &workers {
            let ip = addr.ip().to_string();
            table.push(ip.len() as u8);
            table.extend_from_slice(ip.as_bytes());
            table.extend_from_slice(&addr.port().to_le_bytes());
        }
        for (rank, (_, stream, _)) in workers.iter_mut().enumerate() {
            let mut msg = Vec::with_capacity(8 + table.len());
            msg.extend_from_slice(&(rank as u32).to_le_bytes());
            msg.extend_from_slice(&(nranks as u32).to_le_bytes());
            msg.extend_from_slice(&table);
            stream.write_all(&msg)?;
        }
        Ok(())
    }
}

/// Joins a socket world through the rendezvous at `rendezvous`.
///
/// `key` orders rank assignment; keys must be distinct across workers.
/// Returns after the mesh is built and all ranks passed a barrier.
pub fn connect_world(rendezvous: SocketAddr, key: u64, timeout: Duration) -> Result<Communicator> {
    let deadline = Instant::now() + timeout;
    let mut root = connect_before(rendezvous, deadline)?;
    let local_ip = root.local_addr()?.ip();
    let listener = TcpListener::bind(SocketAddr::new(local_ip, 0))?;

    let mut hello = Vec::with_capacity(14);
    hello.extend_from_slice(HELLO_MAGIC);
    hello.extend_from_slice(&key.to_le_bytes());
    hello.extend_from_slice(&listener.local_addr()?.port().to_le_bytes());
    root.write_all(&hello)?;

    root.set_read_timeout(Some(deadline.saturating_duration_since(Instant::now()).max(Duration::from_millis(1))))?;
    let rank = read_u32(&mut root)? as usize;
    let size = read_u32(&mut root)? as usize;
    let mut addrs = Vec::with_capacity(size);
    for _ in 0..size {
        let mut len = [0u8; 1];
        root.read_exact(&mut len)?;
        let mut ip = vec![0u8; len[0] as usize];
        root.read_exact(&mut ip)?;
        let mut port = [0u8; 2];
        root.read_exact(&mut port)?;
        let ip: IpAddr = String::from_utf8_lossy(&ip)
            .parse()
            .map_err(|_| Error::Transport("bad address table".into()))?;
        addrs.push(SocketAddr::new(ip, u16::from_le_bytes(port)));
    }
    drop(root);

    let mut streams: Vec<Option<TcpStream>> = (0..size).map(|_| None).collect();
    for (peer, addr) in addrs.iter().enumerate().take(rank) {
        let mut s = connect_before(*addr, deadline)?;
        s.write_all(PEER_MAGIC)?;
        s.write_all(&(rank as u32).to_le_bytes())?;
        streams[peer] = Some(s);
    }
    for _ in rank + 1..size {
        let mut s = accept_before(&listener, deadline, "peer connections")?;
        let mut magic = [0u8; 4];
        s.read_exact(&mut magic)?;
        if &magic != PEER_MAGIC {
            return Err(Error::Transport("bad peer handshake".into()));
        }
        let peer = read_u32(&mut s)? as usize;
        if peer <= rank || peer >= size || streams[peer].is_some() {
            return Err(Error::Transport(format!("unexpected peer rank {peer}")));
        }
        streams[peer] = Some(s);
    }

    let mailbox = Arc::new(Mailbox::default());
    let mut writers = Vec::with_capacity(size);
    for (peer, stream) in streams.into_iter().enumerate() {
        match stream {
            Some(s) => {
                s.set_nodelay(true)?;
                s.set_read_timeout(None)?;
                let reader = s.try_clone()?;
                let mb = mailbox.clone();
                thread::Builder::new()
                    .name(format!("distla-rx-{rank}-{peer}"))
                    .spawn(move || read_frames(reader, peer, &mb))?;
                writers.push(Some(Mutex::new(s)));
            }
            None => writers.push(None),
        }
    }

    let fabric = Arc::new(SocketFabric {
        rank,
        writers,
        mailbox,
        timeout: super::recv_timeout(),
    });
    let comm = Communicator::world(rank, size, fabric, Backend::Socket);
    comm.barrier()?;
    Ok(comm)
}

/// Runs `entry` on `nranks` socket-backed ranks hosted as threads of this process.
///
/// Traffic goes through real loopback sockets; useful for exercising the
/// socket backend without spawning processes.
pub fn run_socket_threads<F, R>(nranks: usize, entry: F) -> Result<Vec<R>>
where
    F: Fn(Communicator) -> R + Send + Sync,
    R: Send,
{
    let server = Rendezvous::bind("127.0.0.1:0")?;
    let addr = server.local_addr()?;
    let timeout = Duration::from_secs(30);
    let entry = &entry;
    thread::scope(|scope| {
        let server = scope.spawn(move || server.serve(nranks, timeout));
        let ranks: Vec<_> = (0..nranks)
            .map(|key| {
                scope.spawn(move || -> Result<(usize, R)> {
                    let comm = connect_world(addr, key as u64, timeout)?;
                    let rank = comm.rank();
                    Ok((rank, entry(comm)))
                })
            })
            .collect();
        server
            .join()
            .map_err(|_| Error::Transport("rendezvous panicked".into()))??;
        let mut out: Vec<(usize, R)> = Vec::with_capacity(nranks);
        for h in ranks {
            out.push(
                h.join()
                    .map_err(|_| Error::Transport("socket rank panicked".into()))??,
            );
        }
        out.sort_by_key(|(r, _)| *r);
        Ok(out.into_iter().map(|(_, r)| r).collect())
    })
}

fn read_frames(mut stream: TcpStream, peer: usize, mailbox: &Mailbox) {
    let mut header = [0u8; 8];
    loop {
        if stream.read_exact(&mut header).is_err() {
            break;
        }
        let len = u32::from_le_bytes(header[..4].try_into().unwrap()) as usize;
        let tag = u32::from_le_bytes(header[4..].try_into().unwrap());
        let mut payload = vec![0u8; len];
        if stream.read_exact(&mut payload).is_err() {
            break;
        }
        mailbox.push(peer, tag, payload);
    }
    mailbox.disconnect(peer);
}

fn read_u32(stream: &mut TcpStream) -> Result<u32> {
    let mut buf = [0u8; 4];
    stream.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn connect_before(addr: SocketAddr, deadline: Instant) -> Result<TcpStream> {
    loop {
        let remaining = deadline.saturating_duration_since(Instant::now());
        if remaining.is_zero() {
            return Err(Error::Timeout(format!("connection to {addr}")));
        }
        match TcpStream::connect_timeout(&addr, remaining) {
            Ok(s) => return Ok(s),
            Err(_) => thread::sleep(Duration::from_millis(20)),
        }
    }
}

fn accept_before(listener: &TcpListener, deadline: Instant, what: &str) -> Result<TcpStream> {
    listener.set_nonblocking(true)?;
    let out = loop {
        match listener.accept() {
            Ok((s, _)) => break Ok(s),
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    break Err(Error::Timeout(what.to_string()));
                }
                thread::sleep(Duration::from_millis(2));
            }
            Err(e) => break Err(e.into()),
        }
    };
    listener.set_nonblocking(false)?;
    let s = out?;
    s.set_nonblocking(false)?;
    Ok(s)
}
