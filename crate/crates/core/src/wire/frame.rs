//! Frame layout, all integers little-endian:
//!
//! ```text
//!  0      4    5      6             10
//! +------+----+------+-------------+-----------------------+
//! | MKEX | 01 | type | payload_len | payload (≤ 1 MiB)     |
//! +------+----+------+-------------+-----------------------+
//! ```

use std::io::{Read, Write};

use super::WireError;

pub const MAGIC: [u8; 4] = *b"MKEX";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 10;
pub const MAX_PAYLOAD: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    /// `n` as u16 LE, then the initiator's matrix public key.
    Hello = 0x01,
    /// The responder's matrix public key.
    HelloAck = 0x02,
    PubA = 0x03,
    PubB = 0x04,
    /// 32-byte confirmation digest.
    Confirm = 0x05,
    /// Reason byte, optionally followed by detail.
    Abort = 0x06,
    /// Empty; the initiator accepted the responder's confirmation.
    Finished = 0x07,
}

impl MsgType {
    pub const ALL: [MsgType; 7] = [
        MsgType::Hello,
        MsgType::HelloAck,
        MsgType::PubA,
        MsgType::PubB,
        MsgType::Confirm,
        MsgType::Abort,
        MsgType::Finished,
    ];

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|t| *t as u8 == b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: MsgType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(msg_type: MsgType, payload: Vec<u8>) -> Self {
        Self { msg_type, payload }
    }

    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        if self.payload.len() > MAX_PAYLOAD {
            return Err(WireError::Protocol(format!(
                "payload of {} bytes exceeds the {MAX_PAYLOAD}-byte cap",
                self.payload.len()
            )));
        }
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.msg_type as u8);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    /// Validates a header and returns the message type and payload length.
    pub fn parse_header(header: &[u8; HEADER_LEN]) -> Result<(MsgType, usize), WireError> {
        if header[..4] != MAGIC {
            return Err(WireError::Protocol(format!(
                "bad magic {:02x?}",
                &header[..4]
            )));
        }
        if header[4] != VERSION {
            return Err(WireError::Protocol(format!(
                "unsupported version 0x{:02x}",
                header[4]
            )));
        }
        let msg_type = MsgType::from_byte(header[5]).ok_or_else(|| {
            WireError::Protocol(format!("unknown message type 0x{:02x}", header[5]))
        })?;
        let len = u32::from_le_bytes(header[6..10].try_into().expect("4 bytes")) as usize;
        if len > MAX_PAYLOAD {
            return Err(WireError::Protocol(format!(
                "declared payload of {len} bytes exceeds the cap"
            )));
        }
        Ok((msg_type, len))
    }

    /// Decodes one frame from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn decode(bytes: &[u8]) -> Result<(Frame, usize), WireError> {
        let header: &[u8; HEADER_LEN] = bytes
            .get(..HEADER_LEN)
            .and_then(|h| h.try_into().ok())
            .ok_or_else(|| WireError::Protocol("truncated frame header".into()))?;
        let (msg_type, len) = Self::parse_header(header)?;
        let payload = bytes
            .get(HEADER_LEN..HEADER_LEN + len)
            .ok_or_else(|| WireError::Protocol("truncated frame payload".into()))?;
        Ok((Frame::new(msg_type, payload.to_vec()), HEADER_LEN + len))
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Frame, WireError> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)?;
        let (msg_type, len) = Self::parse_header(&header)?;
        let mut payload = vec![0u8; len];
        r.read_exact(&mut payload)?;
        Ok(Frame::new(msg_type, payload))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), WireError> {
        w.write_all(&self.encode()?)?;
        w.flush().map_err(WireError::from)
    }
}
