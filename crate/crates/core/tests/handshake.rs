use std::io::{Read, Write};
use std::thread;

use mkex::wire::{
    duplex, AbortReason, AttemptOutcome, FaultInjector, FaultPlan, Frame, MemoryEnd, MsgType,
    Role, Session, SessionState, WireError,
};
use mkex::{SeededStream, SharedSecret};

type Outcome = (Result<SharedSecret, WireError>, Session);

fn run_pair_with<A, B>(
    a: A,
    b: B,
    seeds: (u8, u8),
    n: (usize, usize),
    retries: u32,
) -> (Outcome, Outcome)
where
    A: Read + Write + Send + 'static,
    B: Read + Write + Send + 'static,
{
    let responder = thread::spawn(move || {
        let mut b = b;
        let mut s = SeededStream::new([seeds.1; 32]);
        let mut session = Session::new(Role::Responder, n.1).with_retries(retries);
        let r = session.run(&mut b, &mut s);
        (r, session)
    });
    let mut a = a;
    let mut s = SeededStream::new([seeds.0; 32]);
    let mut session = Session::new(Role::Initiator, n.0).with_retries(retries);
    let r = session.run(&mut a, &mut s);
    drop(a);
    ((r, session), responder.join().unwrap())
}

fn run_pair(seeds: (u8, u8), n: usize) -> (Outcome, Outcome) {
    let (a, b) = duplex();
    run_pair_with(a, b, seeds, (n, n), 3)
}

#[test]
fn loopback_agrees_on_128_bytes() {
    let ((ra, sa), (rb, sb)) = run_pair((1, 2), 4);
    let (ka, kb) = (ra.unwrap(), rb.unwrap());
    assert_eq!(ka, kb);
    assert_eq!(ka.len(), 128);
    assert_eq!(sa.state(), SessionState::Confirmed);
    assert_eq!(sb.state(), SessionState::Confirmed);
}

#[test]
fn loopback_is_deterministic() {
    let ((ra, _), _) = run_pair((5, 6), 3);
    let ((rb, _), _) = run_pair((5, 6), 3);
    assert_eq!(ra.unwrap(), rb.unwrap());
}

#[test]
fn tampered_pub_b_is_caught_then_retried() {
    let (a, b) = duplex();
    let plan = FaultPlan {
        msg_type: MsgType::PubB,
        bit: 77,
        times: Some(1),
        skip_bytes: 0,
    };
    let ((ra, sa), (rb, sb)) = run_pair_with(a, FaultInjector::new(b, plan), (3, 4), (4, 4), 3);
    assert_eq!(ra.unwrap(), rb.unwrap());
    assert_eq!(sa.attempts().len(), 2);
    assert_eq!(sb.attempts().len(), 2);
    assert!(matches!(
        sb.attempts()[0].outcome,
        AttemptOutcome::AbortSent(AbortReason::KeyMismatch)
            | AttemptOutcome::AbortReceived(AbortReason::KeyMismatch)
    ));
    assert_ne!(sa.attempts()[0].transcript_hash, sa.attempts()[1].transcript_hash);
}

#[test]
fn persistent_tampering_exhausts_retries() {
    let (a, b) = duplex();
    let plan = FaultPlan {
        msg_type: MsgType::PubA,
        bit: 5,
        times: None,
        skip_bytes: 0,
    };
    let ((ra, sa), (rb, _)) = run_pair_with(FaultInjector::new(a, plan), b, (7, 8), (4, 4), 2);
    assert!(matches!(ra, Err(WireError::AgreementFailure { attempts: 3 })));
    assert!(matches!(rb, Err(WireError::AgreementFailure { .. })));
    assert_eq!(sa.state(), SessionState::Failed);
    let hashes: Vec<_> = sa.attempts().iter().map(|a| a.transcript_hash).collect();
    assert!(hashes[0] != hashes[1] && hashes[1] != hashes[2]);
}

#[test]
fn zero_retries_fail_immediately() {
    let (a, b) = duplex();
    let plan = FaultPlan {
        msg_type: MsgType::Confirm,
        bit: 0,
        times: None,
        skip_bytes: 0,
    };
    let ((ra, sa), (rb, _)) = run_pair_with(FaultInjector::new(a, plan), b, (9, 10), (4, 4), 0);
    assert!(matches!(ra, Err(WireError::AgreementFailure { attempts: 1 })));
    assert!(matches!(rb, Err(WireError::AgreementFailure { attempts: 1 })));
    assert_eq!(sa.attempts().len(), 1);
}

#[test]
fn side_mismatch_is_negotiation_error() {
    let (a, b) = duplex();
    let ((ra, _), (rb, _)) = run_pair_with(a, b, (1, 2), (4, 3), 3);
    assert!(matches!(ra, Err(WireError::Negotiation { ours: 4, theirs: 3 })));
    assert!(matches!(rb, Err(WireError::Negotiation { ours: 3, theirs: 4 })));
}

#[test]
fn wrong_version_is_protocol_error() {
    let (mut a, b) = duplex();
    let responder = thread::spawn(move || {
        let mut b = b;
        Session::new(Role::Responder, 4).run(&mut b, &mut SeededStream::new([0; 32]))
    });
    let mut bytes = Frame::new(MsgType::Hello, vec![4, 0]).encode().unwrap();
    bytes[4] = 0x02;
    a.write_all(&bytes).unwrap();
    assert!(matches!(responder.join().unwrap(), Err(WireError::Protocol(_))));
}

#[test]
fn unexpected_message_is_protocol_error() {
    let (mut a, b) = duplex();
    let responder = thread::spawn(move || {
        let mut b = b;
        Session::new(Role::Responder, 4).run(&mut b, &mut SeededStream::new([0; 32]))
    });
    Frame::new(MsgType::PubB, vec![0; 256]).write_to(&mut a).unwrap();
    assert!(matches!(responder.join().unwrap(), Err(WireError::Protocol(_))));
}

#[test]
fn peer_hangup_is_io_error() {
    let (a, b): (MemoryEnd, MemoryEnd) = duplex();
    drop(b);
    let mut a = a;
    let r = Session::new(Role::Initiator, 4).run(&mut a, &mut SeededStream::new([0; 32]));
    assert!(matches!(r, Err(WireError::Io(_))));
}

#[test]
fn nonfinite_matrix_triggers_abort_and_retry() {
    // Flipping the top exponent bit of an entry in [-1, 1) yields a huge value
    // that overflows the power stream; the receiver must abort, not crash.
    let (a, b) = duplex();
    let plan = FaultPlan {
        msg_type: MsgType::HelloAck,
        bit: 62,
        times: Some(1),
        skip_bytes: 0,
    };
    let ((ra, sa), (rb, _)) = run_pair_with(a, FaultInjector::new(b, plan), (11, 12), (4, 4), 3);
    assert_eq!(ra.unwrap(), rb.unwrap());
    assert!(sa.attempts().len() >= 2);
}
