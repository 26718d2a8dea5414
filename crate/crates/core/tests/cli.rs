use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

const SEED: &str = "00112233445566778899aabbccddeeff00112233445566778899aabbccddeeff";

fn mkex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mkex"))
        .args(args)
        .output()
        .expect("spawn mkex")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn exchange_into(dir: &Path, extra: &[&str]) -> Output {
    let d = dir.to_str().unwrap();
    let mut args = vec!["exchange", "--seed", SEED, "--dump", d];
    args.extend_from_slice(extra);
    mkex(&args)
}

#[test]
fn exchange_is_deterministic() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (o1, o2) = (exchange_into(d1.path(), &[]), exchange_into(d2.path(), &[]));
    assert_eq!(o1.status.code(), Some(0));
    assert_eq!(o1.stdout, o2.stdout);
    let mut names: Vec<_> = fs::read_dir(d1.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 8);
    for name in names {
        assert_eq!(
            fs::read(d1.path().join(&name)).unwrap(),
            fs::read(d2.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn exchange_output_layout() {
    let out = stdout(&mkex(&["exchange", "--seed", SEED, "--n", "3"]));
    for needle in [
        "N = 3\tNN = 9",
        "K = 72",
        "Alice: private key a\n--------------------",
        "Bob: private key bb",
        "Alice: matrix public key U",
        "N*N = 9 complex numbers",
        "Hex representation of U, 144 bytes",
        "2*N*N = 18 unsigned integers on 4 bytes",
        "Result: Sa = Sb",
    ] {
        assert!(out.contains(needle), "missing {needle:?}");
    }
}

#[test]
fn rejects_bad_n_and_seed() {
    assert_eq!(mkex(&["exchange", "--n", "1"]).status.code(), Some(1));
    assert_eq!(mkex(&["exchange", "--n", "65"]).status.code(), Some(1));
    assert_eq!(mkex(&["exchange", "--seed", "abc"]).status.code(), Some(1));
    assert_eq!(mkex(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn corrupt_exchange_exits_2() {
    let o = mkex(&["exchange", "--seed", SEED, "--corrupt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("Result: Sa != Sb"));
}

#[test]
fn attack_recovers_dumped_exchange() {
    let dir = tempfile::tempdir().unwrap();
    assert!(exchange_into(dir.path(), &[]).status.success());
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_owned();
    let (u, v, a, b, s) = (p("U.mkx"), p("V.mkx"), p("A.mkx"), p("B.mkx"), p("Sb.mkx"));
    let base = ["attack", "--u", &u, "--v", &v, "--a", &a, "--b", &b, "--secret", &s];

    let o = mkex(&base);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Result: recovered = secret"), "{}", stdout(&o));

    let mut weak = base.to_vec();
    weak.extend(["--degree", "1"]);
    let o = mkex(&weak);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("attack failed"));
}

#[test]
fn attack_missing_file_is_io_error() {
    let o = mkex(&["attack", "--u", "/nonexistent/U.mkx", "--v", "x", "--a", "x", "--b", "x"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn attack_trials_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let o = mkex(&["attack", "--trials", "5", "--seed", SEED, "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("trials"));
    let text = fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("trial,"));
}

#[test]
fn keygen_pub_secret_match_exchange() {
    let dir = tempfile::tempdir().unwrap();
    assert!(exchange_into(dir.path(), &[]).status.success());
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_owned();
    let o = mkex(&[
        "pub", "--private", &p("bob.private.mkx"), "--matrix", &p("V.mkx"),
        "--peer-matrix", &p("U.mkx"), "--out", &p("B2.mkx"),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read(p("B.mkx")).unwrap(), fs::read(p("B2.mkx")).unwrap());
    let o = mkex(&[
        "secret", "--private", &p("bob.private.mkx"), "--matrix", &p("V.mkx"),
        "--peer-matrix", &p("U.mkx"), "--peer-pub", &p("A.mkx"), "--out", &p("S2.mkx"),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read(p("Sb.mkx")).unwrap(), fs::read(p("S2.mkx")).unwrap());

    let k = dir.path().join("k");
    let o = mkex(&["keygen", "--seed", SEED, "--n", "2", "--out", k.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(fs::read_to_string(k.join("private.mkx")).unwrap().starts_with("mkex/1 private-coeffs n=2"));
    assert!(fs::read_to_string(k.join("matrix.mkx")).unwrap().starts_with("mkex/1 matrix-pubkey n=2 len=64"));
}

#[test]
fn verify_vectors_passes() {
    let o = mkex(&["verify-vectors"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("FAIL"));
}

fn serve_once(extra: &[&str]) -> (std::process::Child, String) {
    let mut args = vec!["serve", "--port", "0", "--sessions", "1", "--seed", SEED];
    args.extend_from_slice(extra);
    let mut child = Command::new(env!("CARGO_BIN_EXE_mkex"))
        .args(&args)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.as_mut().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap().to_owned();
    (child, addr)
}

fn port_of(addr: &str) -> &str {
    addr.rsplit(':').next().unwrap()
}

#[test]
fn serve_and_connect_agree() {
    let (child, addr) = serve_once(&[]);
    let o = mkex(&["connect", "--port", port_of(&addr), "--seed", &SEED.replace('0', "1")]);
    assert_eq!(o.status.code(), Some(0));
    let served = child.wait_with_output().unwrap();
    assert_eq!(served.status.code(), Some(0));
    let session = String::from_utf8(served.stdout).unwrap();
    let hex = session.trim().strip_prefix("session 0: ").unwrap().to_owned();
    let client_hex: String = stdout(&o)
        .split("S, 128 bytes\n")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .collect();
    assert_eq!(hex, client_hex);
}

#[test]
fn corrupt_without_retries_exits_2() {
    let (child, addr) = serve_once(&["--retries", "0"]);
    let o = mkex(&["connect", "--port", port_of(&addr), "--retries", "0", "--corrupt"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(child.wait_with_output().unwrap().status.code(), Some(2));
}

#[test]
fn connect_to_closed_port_exits_3() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let o = mkex(&["connect", "--port", &port.to_string()]);
    assert_eq!(o.status.code(), Some(3));
}
