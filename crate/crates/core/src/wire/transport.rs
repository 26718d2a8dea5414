//! In-process byte transports and a bit-flipping fault injector.

use std::io::{self, Read, Write};
use std::sync::mpsc::{channel, Receiver, Sender};

use super::frame::{Frame, MsgType, HEADER_LEN};

/// One end of an in-memory bidirectional byte stream.
pub struct MemoryEnd {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    pending: Vec<u8>,
    pos: usize,
}

/// Two connected ends; dropping one makes reads on the other hit EOF.
pub fn duplex() -> (MemoryEnd, MemoryEnd) {
    let (a_tx, b_rx) = channel();
    let (b_tx, a_rx) = channel();
    (
        MemoryEnd {
            tx: a_tx,
            rx: a_rx,
            pending: Vec::new(),
            pos: 0,
        },
        MemoryEnd {
            tx: b_tx,
            rx: b_rx,
            pending: Vec::new(),
            pos: 0,
        },
    )
}

impl Read for MemoryEnd {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        while self.pos == self.pending.len() {
            match self.rx.recv() {
                Ok(chunk) => {
                    self.pending = chunk;
                    self.pos = 0;
                }
                Err(_) => return Ok(0),
            }
        }
        let n = buf.len().min(self.pending.len() - self.pos);
        buf[..n].copy_from_slice(&self.pending[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

impl Write for MemoryEnd {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        self.tx
            .send(buf.to_vec())
            .map_err(|_| io::Error::from(io::ErrorKind::BrokenPipe))?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Which outgoing frames get a bit flipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultPlan {
    pub msg_type: MsgType,
    /// Bit index into the payload, taken modulo the payload bit length.
    pub bit: usize,
    /// Number of matching frames to corrupt; `None` corrupts all of them.
    pub times: Option<usize>,
    /// Leading payload bytes that are never touched.
    pub skip_bytes: usize,
}

/// Wraps a transport and corrupts outgoing frames per a [`FaultPlan`].
///
/// Writes are buffered until a whole frame is available, so the wrapper
/// works regardless of how the caller chunks its writes.
pub struct FaultInjector<T> {
    inner: T,
    plan: FaultPlan,
    buffer: Vec<u8>,
    corrupted: usize,
}

impl<T> FaultInjector<T> {
    pub fn new(inner: T, plan: FaultPlan) -> Self {
        Self {
            inner,
            plan,
            buffer: Vec::new(),
            corrupted: 0,
        }
    }

    pub fn corrupted(&self) -> usize {
        self.corrupted
    }

    pub fn into_inner(self) -> T {
        self.inner
    }
}

impl<T: Read> Read for FaultInjector<T> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        self.inner.read(buf)
    }
}

impl<T: Write> Write for FaultInjector<T> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.buffer.extend_from_slice(buf);
        loop {
            if self.buffer.len() < HEADER_LEN {
                break;
            }
            let header: [u8; HEADER_LEN] = self.buffer[..HEADER_LEN].try_into().expect("header");
            let Ok((msg_type, len)) = Frame::parse_header(&header) else {
                // Not a frame we understand: pass everything through untouched.
                self.inner.write_all(&self.buffer)?;
                self.buffer.clear();
                break;
            };
            if self.buffer.len() < HEADER_LEN + len {
                break;
            }
            let mut frame: Vec<u8> = self.buffer.drain(..HEADER_LEN + len).collect();
            let budget_left = self.plan.times.is_none_or(|t| self.corrupted < t);
            let room = len.saturating_sub(self.plan.skip_bytes);
            if msg_type == self.plan.msg_type && budget_left && room > 0 {
                let bit = self.plan.bit % (room * 8);
                frame[HEADER_LEN + self.plan.skip_bytes + bit / 8] ^= 1 << (bit % 8);
                self.corrupted += 1;
            }
            self.inner.write_all(&frame)?;
        }
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}
