use std::net::TcpListener;
use std::sync::Mutex;
use std::thread;

use mkex::wire::{connect, Server, WireConfig, WireError};
use mkex::{SeededStream, SharedSecret};

fn server(seed: u8, n: usize) -> Server {
    Server::bind("127.0.0.1:0", SeededStream::new([seed; 32]), WireConfig::new(n)).unwrap()
}

#[test]
fn localhost_round_trip() {
    let server = server(1, 4);
    let addr = server.local_addr().unwrap();
    let got: Mutex<Vec<SharedSecret>> = Mutex::new(Vec::new());
    thread::scope(|scope| {
        scope.spawn(|| {
            server
                .serve(Some(1), |_, r| got.lock().unwrap().push(r.unwrap()))
                .unwrap()
        });
        let mut s = SeededStream::new([2; 32]);
        connect(addr, &mut s, &WireConfig::new(4)).unwrap();
    });
    let secrets = got.into_inner().unwrap();
    assert_eq!(secrets.len(), 1);
    assert_eq!(secrets[0].len(), 128);
}

#[test]
fn client_and_server_agree() {
    let server = server(3, 3);
    let addr = server.local_addr().unwrap();
    let (client, srv) = thread::scope(|scope| {
        let h = scope.spawn(|| {
            let slot = Mutex::new(None);
            server.serve(Some(1), |_, r| *slot.lock().unwrap() = Some(r)).unwrap();
            slot.into_inner().unwrap().unwrap()
        });
        let mut s = SeededStream::new([4; 32]);
        let client = connect(addr, &mut s, &WireConfig::new(3));
        (client, h.join().unwrap())
    });
    assert_eq!(client.unwrap(), srv.unwrap());
}

#[test]
fn closed_port_is_io_error() {
    let port = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let mut s = SeededStream::new([5; 32]);
    let err = connect(("127.0.0.1", port), &mut s, &WireConfig::new(4)).unwrap_err();
    assert!(matches!(err, WireError::Io(_)), "{err:?}");
}

#[test]
fn two_concurrent_clients() {
    let server = server(6, 4);
    let addr = server.local_addr().unwrap();
    let results = Mutex::new(vec![None, None]);
    let clients = thread::scope(|scope| {
        scope.spawn(|| {
            server
                .serve(Some(2), |i, r| results.lock().unwrap()[i] = Some(r.unwrap()))
                .unwrap()
        });
        let handles: Vec<_> = (0..2u8)
            .map(|k| {
                scope.spawn(move || {
                    let mut s = SeededStream::new([10 + k; 32]);
                    connect(addr, &mut s, &WireConfig::new(4)).unwrap()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect::<Vec<_>>()
    });
    let mut served: Vec<SharedSecret> = results.into_inner().unwrap().into_iter().map(Option::unwrap).collect();
    let mut clients = clients;
    served.sort_by(|a, b| a.as_bytes().cmp(b.as_bytes()));
    clients.sort_by(|a, b| a.as_bytes().cmp(b.as_bytes()));
    assert_eq!(served, clients);
    assert_ne!(clients[0], clients[1]);
}
