//! Handshake state machine.
//!
//! ```text
//! initiator                               responder
//!   HELLO      (n u16 LE || U)      ->
//!                                   <-    HELLO_ACK  (V)
//!   PUB_A      (A)                  ->
//!                                   <-    PUB_B      (B)
//!   CONFIRM    (digest, role 0x01)  ->
//!                                   <-    CONFIRM    (digest, role 0x02)
//!   FINISHED                        ->
//! ```
//!
//! Either side may answer any expected message with ABORT; both then drop
//! the attempt and, while retries remain, start over with fresh keys drawn
//! from the same stream.

use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use super::frame::{Frame, MsgType};
use super::WireError;
use crate::keycodec::{decode_matrix, encode_matrix};
use crate::numkernel::CMatrix;
use crate::protocol::{
    compute_public_key, compute_secret_matrix, extract_secret, KeyPair, MatrixPublicKey,
    SharedSecret,
};
use crate::randgen::SeededStream;

pub const DEFAULT_RETRIES: u32 = 3;
const CONFIRM_LABEL: &[u8] = b"mkex-v1-confirm";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Initiator,
    Responder,
}

impl Role {
    pub fn byte(self) -> u8 {
        match self {
            Role::Initiator => 0x01,
            Role::Responder => 0x02,
        }
    }

    pub fn peer(self) -> Role {
        match self {
            Role::Initiator => Role::Responder,
            Role::Responder => Role::Initiator,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SessionState {
    Start,
    SentHello,
    ExchangedMatrices,
    ExchangedPubs,
    Confirmed,
    Failed,
}

/// ABORT reason byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortReason {
    KeyMismatch,
    /// Received key material could not be used (non-finite, degenerate).
    InvalidKey,
    /// Matrix side differs; carries the sender's `n`.
    Negotiation(u16),
    Other(u8),
}

impl AbortReason {
    fn encode(self) -> Vec<u8> {
        match self {
            AbortReason::KeyMismatch => vec![0x01],
            AbortReason::InvalidKey => vec![0x02],
            AbortReason::Negotiation(n) => {
                let mut v = vec![0x03];
                v.extend_from_slice(&n.to_le_bytes());
                v
            }
            AbortReason::Other(b) => vec![b],
        }
    }

    fn decode(payload: &[u8]) -> Self {
        match payload {
            [0x01] => AbortReason::KeyMismatch,
            [0x02] => AbortReason::InvalidKey,
            [0x03, lo, hi] => AbortReason::Negotiation(u16::from_le_bytes([*lo, *hi])),
            [b, ..] => AbortReason::Other(*b),
            [] => AbortReason::Other(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttemptOutcome {
    Confirmed,
    /// This side detected the problem and sent ABORT.
    AbortSent(AbortReason),
    /// The peer sent ABORT.
    AbortReceived(AbortReason),
    /// The session ended with an error during this attempt.
    Fatal,
}

/// What one attempt produced, kept for inspection after the session ends.
#[derive(Debug, Clone)]
pub struct Attempt {
    /// SHA-256 of the HELLO..PUB_B payloads, when the attempt got that far.
    pub transcript_hash: Option<[u8; 32]>,
    pub secret_matrix: Option<CMatrix>,
    pub secret: Option<SharedSecret>,
    pub outcome: AttemptOutcome,
}

enum Step<T> {
    Continue(T),
    Abort(AttemptOutcome),
}

/// One side of one connection.
pub struct Session {
    role: Role,
    n: usize,
    state: SessionState,
    transcript: Vec<u8>,
    retries_left: u32,
    attempts: Vec<Attempt>,
    // Per-attempt scratch.
    pubs_hash: Option<[u8; 32]>,
    secret_matrix: Option<CMatrix>,
    secret: Option<SharedSecret>,
}

/// `SHA-256(label || role || SHA-256(transcript) || secret)`.
pub fn confirm_digest(role: Role, transcript_hash: &[u8; 32], secret: &SharedSecret) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(CONFIRM_LABEL);
    h.update([role.byte()]);
    h.update(transcript_hash);
    h.update(secret.as_bytes());
    h.finalize().into()
}

impl Session {
    pub fn new(role: Role, n: usize) -> Self {
        Self {
            role,
            n,
            state: SessionState::Start,
            transcript: Vec::new(),
            retries_left: DEFAULT_RETRIES,
            attempts: Vec::new(),
            pubs_hash: None,
            secret_matrix: None,
            secret: None,
        }
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries_left = retries;
        self
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn retries_left(&self) -> u32 {
        self.retries_left
    }

    /// Payloads of the current (or last) attempt in send/receive order.
    pub fn transcript(&self) -> &[u8] {
        &self.transcript
    }

    pub fn attempts(&self) -> &[Attempt] {
        &self.attempts
    }

    fn advance(&mut self, next: SessionState) {
        debug_assert!(next >= self.state, "{:?} -> {next:?}", self.state);
        self.state = next;
    }

    fn reset_attempt(&mut self) {
        self.state = SessionState::Start;
        self.transcript.clear();
        self.pubs_hash = None;
        self.secret_matrix = None;
        self.secret = None;
    }

    fn finish_attempt(&mut self, outcome: AttemptOutcome) {
        self.attempts.push(Attempt {
            transcript_hash: self.pubs_hash,
            secret_matrix: self.secret_matrix.take(),
            secret: self.secret.take(),
            outcome,
        });
    }

    fn send<T: Write>(&mut self, t: &mut T, msg_type: MsgType, payload: Vec<u8>) -> Result<(), WireError> {
        let frame = Frame::new(msg_type, payload);
        frame.write_to(t)?;
        self.transcript.extend_from_slice(&frame.payload);
        Ok(())
    }

    fn abort<T: Write>(&mut self, t: &mut T, reason: AbortReason) -> Result<AttemptOutcome, WireError> {
        self.send(t, MsgType::Abort, reason.encode())?;
        Ok(AttemptOutcome::AbortSent(reason))
    }

    /// Reads the next frame, which must be `expected` or ABORT.
    fn recv<T: Read>(&mut self, t: &mut T, expected: MsgType) -> Result<Step<Vec<u8>>, WireError> {
        let frame = Frame::read_from(t)?;
        self.transcript.extend_from_slice(&frame.payload);
        match frame.msg_type {
            m if m == expected => Ok(Step::Continue(frame.payload)),
            MsgType::Abort => {
                let reason = AbortReason::decode(&frame.payload);
                if let AbortReason::Negotiation(theirs) = reason {
                    if theirs as usize != self.n {
                        return Err(WireError::Negotiation {
                            ours: self.n,
                            theirs: theirs as usize,
                        });
                    }
                }
                Ok(Step::Abort(AttemptOutcome::AbortReceived(reason)))
            }
            other => Err(WireError::Protocol(format!(
                "expected {expected:?}, got {other:?}"
            ))),
        }
    }

    fn matrix_payload(&self, payload: &[u8]) -> Option<MatrixPublicKey> {
        decode_matrix(self.n, payload)
            .ok()
            .and_then(|m| MatrixPublicKey::new(m).ok())
    }

    fn plain_matrix(&self, payload: &[u8]) -> Option<CMatrix> {
        decode_matrix(self.n, payload).ok()
    }

    /// Runs attempts until one is confirmed or retries run out.
    pub fn run<T: Read + Write>(
        &mut self,
        transport: &mut T,
        stream: &mut SeededStream,
    ) -> Result<SharedSecret, WireError> {
        if !(2..=u16::MAX as usize).contains(&self.n) {
            return Err(WireError::Protocol(format!("unsupported matrix side {}", self.n)));
        }
        loop {
            self.reset_attempt();
            let result = match self.role {
                Role::Initiator => self.attempt_initiator(transport, stream),
                Role::Responder => self.attempt_responder(transport, stream),
            };
            let outcome = match result {
                Ok(outcome) => outcome,
                Err(e) => {
                    self.state = SessionState::Failed;
                    self.finish_attempt(AttemptOutcome::Fatal);
                    return Err(e);
                }
            };
            if outcome == AttemptOutcome::Confirmed {
                let secret = self.secret.clone().expect("confirmed attempt has a secret");
                self.advance(SessionState::Confirmed);
                self.finish_attempt(outcome);
                return Ok(secret);
            }
            self.finish_attempt(outcome);
            if self.retries_left == 0 {
                self.state = SessionState::Failed;
                return Err(WireError::AgreementFailure {
                    attempts: self.attempts.len(),
                });
            }
            self.retries_left -= 1;
        }
    }

    fn derive_secret(&mut self, keys: &KeyPair, u: &MatrixPublicKey, v: &MatrixPublicKey, peer_pub: &CMatrix) -> bool {
        let Ok(sm) = compute_secret_matrix(&keys.private, u, v, peer_pub) else {
            return false;
        };
        let Ok(secret) = extract_secret(&sm) else {
            return false;
        };
        self.secret_matrix = Some(sm);
        self.secret = Some(secret);
        true
    }

    fn snapshot_transcript(&mut self) -> [u8; 32] {
        let h: [u8; 32] = Sha256::digest(&self.transcript).into();
        self.pubs_hash = Some(h);
        h
    }

    fn attempt_initiator<T: Read + Write>(
        &mut self,
        t: &mut T,
        stream: &mut SeededStream,
    ) -> Result<AttemptOutcome, WireError> {
        let keys = KeyPair::generate(stream, self.n).map_err(WireError::Key)?;
        let u = keys.matrix.clone();
        let mut hello = (self.n as u16).to_le_bytes().to_vec();
        hello.extend(encode_matrix(u.matrix()).map_err(WireError::Key)?);
        self.send(t, MsgType::Hello, hello)?;
        self.advance(SessionState::SentHello);

        let v = match self.recv(t, MsgType::HelloAck)? {
            Step::Continue(p) => p,
            Step::Abort(o) => return Ok(o),
        };
        let Some(v) = self.matrix_payload(&v) else {
            return self.abort(t, AbortReason::InvalidKey);
        };
        self.advance(SessionState::ExchangedMatrices);

        let Ok(a_pub) = compute_public_key(&keys.private, &u, &v) else {
            return self.abort(t, AbortReason::InvalidKey);
        };
        self.send(t, MsgType::PubA, encode_matrix(&a_pub).map_err(WireError::Key)?)?;
        let b_pub = match self.recv(t, MsgType::PubB)? {
            Step::Continue(p) => p,
            Step::Abort(o) => return Ok(o),
        };
        self.advance(SessionState::ExchangedPubs);
        let transcript_hash = self.snapshot_transcript();
        let Some(b_pub) = self.plain_matrix(&b_pub) else {
            return self.abort(t, AbortReason::InvalidKey);
        };
        if !self.derive_secret(&keys, &u, &v, &b_pub) {
            return self.abort(t, AbortReason::InvalidKey);
        }
        let secret = self.secret.clone().expect("secret derived");

        let ours = confirm_digest(self.role, &transcript_hash, &secret);
        self.send(t, MsgType::Confirm, ours.to_vec())?;
        let theirs = match self.recv(t, MsgType::Confirm)? {
            Step::Continue(p) => p,
            Step::Abort(o) => return Ok(o),
        };
        if theirs != confirm_digest(self.role.peer(), &transcript_hash, &secret) {
            return self.abort(t, AbortReason::KeyMismatch);
        }
        self.send(t, MsgType::Finished, Vec::new())?;
        Ok(AttemptOutcome::Confirmed)
    }

    fn attempt_responder<T: Read + Write>(
        &mut self,
        t: &mut T,
        stream: &mut SeededStream,
    ) -> Result<AttemptOutcome, WireError> {
        let hello = match self.recv(t, MsgType::Hello)? {
            Step::Continue(p) => p,
            Step::Abort(o) => return Ok(o),
        };
        if hello.len() < 2 {
            return Err(WireError::Protocol("HELLO shorter than its n field".into()));
        }
        let theirs = u16::from_le_bytes([hello[0], hello[1]]) as usize;
        if theirs != self.n {
            self.abort(t, AbortReason::Negotiation(self.n as u16))?;
            return Err(WireError::Negotiation {
                ours: self.n,
                theirs,
            });
        }
        let keys = KeyPair::generate(stream, self.n).map_err(WireError::Key)?;
        let Some(u) = self.matrix_payload(&hello[2..]) else {
            return self.abort(t, AbortReason::InvalidKey);
        };
        let v = keys.matrix.clone();
        self.send(t, MsgType::HelloAck, encode_matrix(v.matrix()).map_err(WireError::Key)?)?;
        self.advance(SessionState::ExchangedMatrices);

        let a_pub = match self.recv(t, MsgType::PubA)? {
            Step::Continue(p) => p,
            Step::Abort(o) => return Ok(o),
        };
        let Some(a_pub) = self.plain_matrix(&a_pub) else {
            return self.abort(t, AbortReason::InvalidKey);
        };
        let Ok(b_pub) = compute_public_key(&keys.private, &u, &v) else {
            return self.abort(t, AbortReason::InvalidKey);
        };
        self.send(t, MsgType::PubB, encode_matrix(&b_pub).map_err(WireError::Key)?)?;
        self.advance(SessionState::ExchangedPubs);
        let transcript_hash = self.snapshot_transcript();
        if !self.derive_secret(&keys, &u, &v, &a_pub) {
            // Consume the initiator's CONFIRM so both sides stay in step.
            return match self.recv(t, MsgType::Confirm)? {
                Step::Continue(_) => self.abort(t, AbortReason::InvalidKey),
                Step::Abort(o) => Ok(o),
            };
        }
        let secret = self.secret.clone().expect("secret derived");

        let theirs = match self.recv(t, MsgType::Confirm)? {
            Step::Continue(p) => p,
            Step::Abort(o) => return Ok(o),
        };
        if theirs != confirm_digest(self.role.peer(), &transcript_hash, &secret) {
            return self.abort(t, AbortReason::KeyMismatch);
        }
        let ours = confirm_digest(self.role, &transcript_hash, &secret);
        self.send(t, MsgType::Confirm, ours.to_vec())?;
        match self.recv(t, MsgType::Finished)? {
            Step::Continue(_) => Ok(AttemptOutcome::Confirmed),
            Step::Abort(o) => Ok(o),
        }
    }
}

/// Runs a full handshake with default retries.
pub fn handshake<T: Read + Write>(
    transport: &mut T,
    role: Role,
    stream: &mut SeededStream,
    n: usize,
) -> Result<SharedSecret, WireError> {
    Session::new(role, n).run(transport, stream)
}
