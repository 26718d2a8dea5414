//! Two-party handshake over a byte stream, plus TCP wrappers.

mod frame;
mod session;
mod transport;

use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::time::Duration;

use thiserror::Error;

pub use frame::{Frame, MsgType, HEADER_LEN, MAGIC, MAX_PAYLOAD, VERSION};
pub use session::{
    confirm_digest, handshake, AbortReason, Attempt, AttemptOutcome, Role, Session, SessionState,
    DEFAULT_RETRIES,
};
pub use transport::{duplex, FaultInjector, FaultPlan, MemoryEnd};

use crate::protocol::SharedSecret;
use crate::randgen::SeededStream;

const IO_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum WireError {
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("negotiation: local n={ours}, peer n={theirs}")]
    Negotiation { ours: usize, theirs: usize },
    #[error("agreement-failure: no confirmed key after {attempts} attempt(s)")]
    AgreementFailure { attempts: usize },
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("key generation: {0}")]
    Key(crate::Error),
}

/// Handshake configuration shared by [`serve`] and [`connect`].
#[derive(Debug, Clone, Copy)]
pub struct WireConfig {
    pub n: usize,
    pub retries: u32,
    /// Corrupt outgoing frames, for exercising the failure path.
    pub fault: Option<FaultPlan>,
}

impl WireConfig {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            retries: DEFAULT_RETRIES,
            fault: None,
        }
    }
}

fn run_over_tcp(
    socket: TcpStream,
    role: Role,
    stream: &mut SeededStream,
    config: &WireConfig,
) -> Result<SharedSecret, WireError> {
    socket.set_nodelay(true)?;
    socket.set_read_timeout(Some(IO_TIMEOUT))?;
    socket.set_write_timeout(Some(IO_TIMEOUT))?;
    let mut session = Session::new(role, config.n).with_retries(config.retries);
    match config.fault {
        Some(plan) => session.run(&mut FaultInjector::new(socket, plan), stream),
        None => {
            let mut socket = socket;
            session.run(&mut socket, stream)
        }
    }
}

/// Connects as the initiator and runs one handshake.
pub fn connect<A: ToSocketAddrs>(
    addr: A,
    stream: &mut SeededStream,
    config: &WireConfig,
) -> Result<SharedSecret, WireError> {
    let socket = TcpStream::connect(addr)?;
    run_over_tcp(socket, Role::Initiator, stream, config)
}

/// A listening responder. Connection `i` draws its keys from
/// `stream.derive("conn" || i as u64 LE)`.
pub struct Server {
    listener: TcpListener,
    stream: SeededStream,
    config: WireConfig,
}

impl Server {
    pub fn bind<A: ToSocketAddrs>(
        addr: A,
        stream: SeededStream,
        config: WireConfig,
    ) -> io::Result<Self> {
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            stream,
            config,
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    fn connection_stream(&self, index: u64) -> SeededStream {
        let mut label = b"conn".to_vec();
        label.extend_from_slice(&index.to_le_bytes());
        self.stream.derive(&label)
    }

    /// Accepts connections, one concurrent session per connection, until
    /// `max_sessions` have been accepted (forever when `None`). Returns once
    /// every accepted session has finished.
    pub fn serve<F>(&self, max_sessions: Option<usize>, on_done: F) -> io::Result<()>
    where
        F: Fn(usize, Result<SharedSecret, WireError>) + Sync,
    {
        std::thread::scope(|scope| {
            let mut accepted = 0usize;
            while max_sessions.is_none_or(|m| accepted < m) {
                let (socket, _) = self.listener.accept()?;
                let index = accepted;
                accepted += 1;
                let mut stream = self.connection_stream(index as u64);
                let on_done = &on_done;
                let config = &self.config;
                scope.spawn(move || {
                    let result = run_over_tcp(socket, Role::Responder, &mut stream, config);
                    on_done(index, result);
                });
            }
            Ok(())
        })
    }
}

/// Binds `addr` and serves; see [`Server::serve`].
pub fn serve<A, F>(
    addr: A,
    stream: SeededStream,
    config: WireConfig,
    max_sessions: Option<usize>,
    on_done: F,
) -> io::Result<()>
where
    A: ToSocketAddrs,
    F: Fn(usize, Result<SharedSecret, WireError>) + Sync,
{
    Server::bind(addr, stream, config)?.serve(max_sessions, on_done)
}
