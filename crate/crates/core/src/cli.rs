//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 key agreement
//! failure, 3 I/O or protocol error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use crate::cryptanalysis::{
    attack_report, build_system, recover_secret, solve_least_squares, InstanceKind,
};
use crate::keycodec::{decode_matrix, encode_matrix, hex_dump, KeyFile, KeyKind};
use crate::numkernel::CMatrix;
use crate::protocol::{
    compute_public_key, compute_secret_matrix, extract_secret, gen_matrix_public_key,
    gen_private_key, secrets_equal, KeyPair, MatrixPublicKey, PrivateKey, SharedSecret,
};
use crate::randgen::SeededStream;
use crate::wire::{self, FaultPlan, MsgType, Server, WireConfig, WireError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_AGREEMENT: i32 = 2;
pub const EXIT_IO: i32 = 3;

const MAX_N: usize = 64;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Agreement(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Agreement(_) => EXIT_AGREEMENT,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Agreement(m) | CliError::Io(m) => m,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(format!("io: {e}"))
    }
}

impl From<WireError> for CliError {
    fn from(e: WireError) -> Self {
        match e {
            WireError::AgreementFailure { .. } => CliError::Agreement(e.to_string()),
            WireError::Key(k) => CliError::Usage(k.to_string()),
            other => CliError::Io(other.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Parser, Debug)]
#[command(name = "mkex", version, about = "Matrix-polynomial key exchange")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Matrix side length.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// 64 hex chars; drawn from the OS when absent.
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct NetArgs {
    #[arg(long, default_value = "127.0.0.1")]
    addr: String,
    #[arg(long, default_value_t = 7878)]
    port: u16,
    #[arg(long, default_value_t = wire::DEFAULT_RETRIES)]
    retries: u32,
    /// Flip a bit in every outgoing public key (testing only).
    #[arg(long)]
    corrupt: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate private coefficients and a matrix public key.
    Keygen {
        #[command(flatten)]
        common: Common,
        /// Output directory for private.mkx and matrix.mkx.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Compute a public key from private coefficients and both matrices.
    Pub {
        #[arg(long)]
        private: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        peer_matrix: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the shared secret from the peer's public key.
    Secret {
        #[arg(long)]
        private: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        peer_matrix: PathBuf,
        #[arg(long)]
        peer_pub: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run both parties in-process and compare their secrets.
    Exchange {
        #[command(flatten)]
        common: Common,
        /// Write every key, public value and secret into this directory.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Flip a bit of B before Alice uses it (testing only).
        #[arg(long)]
        corrupt: bool,
    },
    /// Accept handshakes as the responder.
    Serve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        net: NetArgs,
        /// Stop after this many sessions.
        #[arg(long)]
        sessions: Option<usize>,
    },
    /// Run one handshake as the initiator.
    Connect {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        net: NetArgs,
    },
    /// Recover a shared secret from public values, or measure the attack.
    Attack {
        #[arg(long)]
        u: Option<PathBuf>,
        #[arg(long)]
        v: Option<PathBuf>,
        #[arg(long)]
        a: Option<PathBuf>,
        #[arg(long)]
        b: Option<PathBuf>,
        /// True secret to compare against.
        #[arg(long)]
        secret: Option<PathBuf>,
        /// Basis degree; defaults to n.
        #[arg(long)]
        degree: Option<usize>,
        /// Run this many fresh random exchanges instead of reading files.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long)]
        seed: Option<String>,
        /// Single-coefficient private keys for the trial runs.
        #[arg(long)]
        planted: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check the built-in serialization and extraction vectors.
    VerifyVectors,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = out.flush();
            eprintln!("mkex: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut (dyn Write + Send)) -> CliResult {
    match command {
        Command::Keygen { common, out: dir } => cmd_keygen(&common, &dir, out),
        Command::Pub {
            private,
            matrix,
            peer_matrix,
            out: path,
        } => cmd_pub(&private, &matrix, &peer_matrix, path.as_deref(), out),
        Command::Secret {
            private,
            matrix,
            peer_matrix,
            peer_pub,
            out: path,
        } => cmd_secret(&private, &matrix, &peer_matrix, &peer_pub, path.as_deref(), out),
        Command::Exchange {
            common,
            dump,
            corrupt,
        } => cmd_exchange(&common, dump.as_deref(), corrupt, out),
        Command::Serve {
            common,
            net,
            sessions,
        } => cmd_serve(&common, &net, sessions, out),
        Command::Connect { common, net } => cmd_connect(&common, &net, out),
        Command::Attack {
            u,
            v,
            a,
            b,
            secret,
            degree,
            trials,
            n,
            seed,
            planted,
            csv,
        } => match trials {
            Some(trials) => {
                let common = Common { n, seed };
                cmd_attack_trials(&common, trials, degree, planted, csv.as_deref(), out)
            }
            None => {
                let need = |p: Option<PathBuf>, flag: &str| {
                    p.ok_or_else(|| CliError::Usage(format!("attack needs --{flag} (or --trials)")))
                };
                let files = AttackFiles {
                    u: need(u, "u")?,
                    v: need(v, "v")?,
                    a: need(a, "a")?,
                    b: need(b, "b")?,
                    secret,
                };
                cmd_attack_files(&files, degree, out)
            }
        },
        Command::VerifyVectors => cmd_verify_vectors(out),
    }
}

fn check_n(n: usize) -> CliResult {
    if !(2..=MAX_N).contains(&n) {
        return Err(CliError::Usage(format!("--n must be in [2, {MAX_N}], got {n}")));
    }
    Ok(())
}

fn seeded(seed: Option<&str>) -> Result<SeededStream, CliError> {
    match seed {
        Some(hex) => {
            if hex.len() != 64 {
                return Err(CliError::Usage("--seed must be 64 hex characters".into()));
            }
            SeededStream::from_hex(hex)
                .ok_or_else(|| CliError::Usage("--seed must be 64 hex characters".into()))
        }
        None => Ok(SeededStream::from_entropy()?),
    }
}

fn setup(common: &Common) -> Result<SeededStream, CliError> {
    check_n(common.n)?;
    seeded(common.seed.as_deref())
}

fn read_key(path: &Path, kind: KeyKind) -> Result<KeyFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("io: {}: {e}", path.display())))?;
    KeyFile::parse(&text)
        .and_then(|f| f.expect_kind(kind))
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_key(path: &Path, file: &KeyFile) -> CliResult {
    fs::write(path, file.to_text())
        .map_err(|e| CliError::Io(format!("io: {}: {e}", path.display())))
}

fn read_matrix(path: &Path, kind: KeyKind) -> Result<CMatrix, CliError> {
    let f = read_key(path, kind)?;
    Ok(decode_matrix(f.n, &f.payload)?)
}

fn read_private(path: &Path) -> Result<(usize, PrivateKey), CliError> {
    let f = read_key(path, KeyKind::PrivateCoeffs)?;
    let (m1, m2) = f.split.expect("validated private-coeffs file has m1/m2");
    Ok((f.n, PrivateKey::from_bytes(m1, m2, &f.payload)?))
}

fn matrix_file(kind: KeyKind, m: &CMatrix) -> Result<KeyFile, CliError> {
    Ok(KeyFile::new(kind, m.n(), encode_matrix(m)?)?)
}

fn private_file(n: usize, key: &PrivateKey) -> Result<KeyFile, CliError> {
    Ok(KeyFile::private_coeffs(
        n,
        key.a.len(),
        key.a_tilde.len(),
        key.to_bytes(),
    )?)
}

fn secret_file(n: usize, s: &SharedSecret) -> Result<KeyFile, CliError> {
    Ok(KeyFile::new(KeyKind::Secret, n, s.as_bytes().to_vec())?)
}

fn heading(out: &mut String, title: &str) {
    let _ = writeln!(out, "\n{title}\n{}", "-".repeat(title.chars().count()));
}

fn print_cplx_block(out: &mut String, count_line: &str, values: &[crate::Cplx], name: &str) {
    let _ = writeln!(out, "\n{count_line}");
    for c in values {
        let _ = writeln!(out, "{:+.16}\t{:+.16}", c.re, c.im);
    }
    let bytes = crate::keycodec::encode_cplx_seq(values).expect("finite values");
    let _ = write!(
        out,
        "\nHex representation of {name}, {} bytes\n{}",
        bytes.len(),
        hex_dump(&bytes)
    );
}

fn print_coeffs(out: &mut String, title: &str, len_name: &str, name: &str, c: &[crate::Cplx]) {
    heading(out, title);
    print_cplx_block(out, &format!("{len_name} = {} complex numbers", c.len()), c, name);
}

fn print_matrix(out: &mut String, title: &str, name: &str, m: &CMatrix) {
    heading(out, title);
    print_cplx_block(out, &format!("N*N = {} complex numbers", m.data().len()), m.data(), name);
}

fn print_secret(out: &mut String, title: &str, name: &str, s: &SharedSecret) {
    heading(out, title);
    let words: Vec<u32> = s.words().collect();
    let _ = writeln!(out, "\n2*N*N = {} unsigned integers on 4 bytes", words.len());
    for pair in words.chunks(2) {
        let line: Vec<String> = pair.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "{}", line.join("\t"));
    }
    let _ = write!(
        out,
        "\nHex representation of {name}, {} bytes\n{}",
        s.len(),
        hex_dump(s.as_bytes())
    );
}

fn print_sizes(out: &mut String, n: usize) {
    let _ = writeln!(out, "Size of matrices\n----------------\nN = {n}\tNN = {}", n * n);
    heading(out, "Length of the secret key");
    let _ = writeln!(out, "K = {}", n * n * 8);
}

fn emit(out: &mut (dyn Write + Send), text: &str) -> CliResult {
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn cmd_keygen(common: &Common, dir: &Path, out: &mut (dyn Write + Send)) -> CliResult {
    let mut stream = setup(common)?;
    let n = common.n;
    let keys = KeyPair::generate(&mut stream, n)?;
    fs::create_dir_all(dir)?;
    write_key(&dir.join("private.mkx"), &private_file(n, &keys.private)?)?;
    write_key(
        &dir.join("matrix.mkx"),
        &matrix_file(KeyKind::MatrixPubkey, keys.matrix.matrix())?,
    )?;
    let mut text = String::new();
    print_sizes(&mut text, n);
    print_coeffs(&mut text, "Private key a", "M1", "a", keys.private.a.as_slice());
    print_coeffs(&mut text, "Private key aa", "M2", "aa", keys.private.a_tilde.as_slice());
    print_matrix(&mut text, "Matrix public key U", "U", keys.matrix.matrix());
    emit(out, &text)
}

fn load_pair(matrix: &Path, peer_matrix: &Path) -> Result<(MatrixPublicKey, MatrixPublicKey), CliError> {
    let u = MatrixPublicKey::new(read_matrix(matrix, KeyKind::MatrixPubkey)?)?;
    let v = MatrixPublicKey::new(read_matrix(peer_matrix, KeyKind::MatrixPubkey)?)?;
    if u.n() != v.n() {
        return Err(CliError::Usage("matrix public keys differ in size".into()));
    }
    Ok((u, v))
}

fn cmd_pub(
    private: &Path,
    matrix: &Path,
    peer_matrix: &Path,
    path: Option<&Path>,
    out: &mut (dyn Write + Send),
) -> CliResult {
    let (n, key) = read_private(private)?;
    let (u, v) = load_pair(matrix, peer_matrix)?;
    if u.n() != n {
        return Err(CliError::Usage("private key and matrices disagree on n".into()));
    }
    let a_pub = compute_public_key(&key, &u, &v)?;
    if let Some(path) = path {
        write_key(path, &matrix_file(KeyKind::Pubkey, &a_pub)?)?;
    }
    let mut text = String::new();
    print_matrix(&mut text, "Public key", "A", &a_pub);
    emit(out, text.trim_start())
}

fn cmd_secret(
    private: &Path,
    matrix: &Path,
    peer_matrix: &Path,
    peer_pub: &Path,
    path: Option<&Path>,
    out: &mut (dyn Write + Send),
) -> CliResult {
    let (n, key) = read_private(private)?;
    let (u, v) = load_pair(matrix, peer_matrix)?;
    let b_pub = read_matrix(peer_pub, KeyKind::Pubkey)?;
    if u.n() != n || b_pub.n() != n {
        return Err(CliError::Usage("key files disagree on n".into()));
    }
    let secret = extract_secret(&compute_secret_matrix(&key, &u, &v, &b_pub)?)?;
    if let Some(path) = path {
        write_key(path, &secret_file(n, &secret)?)?;
    }
    let mut text = String::new();
    print_secret(&mut text, "Secret key", "S", &secret);
    emit(out, text.trim_start())
}

fn cmd_exchange(
    common: &Common,
    dump: Option<&Path>,
    corrupt: bool,
    out: &mut (dyn Write + Send),
) -> CliResult {
    let mut stream = setup(common)?;
    let n = common.n;
    // Draw order: both private keys, then both matrices.
    let alice = gen_private_key(&mut stream, n)?;
    let bob = gen_private_key(&mut stream, n)?;
    let u = gen_matrix_public_key(&mut stream, n)?;
    let v = gen_matrix_public_key(&mut stream, n)?;
    let a_pub = compute_public_key(&alice, &u, &v)?;
    let b_pub = compute_public_key(&bob, &u, &v)?;
    let mut b_seen = b_pub.clone();
    if corrupt {
        let mut first = b_seen.get(0, 0);
        first.re = f64::from_bits(first.re.to_bits() ^ (1 << 40));
        b_seen.set(0, 0, first);
    }
    let sa = extract_secret(&compute_secret_matrix(&alice, &u, &v, &b_seen)?)?;
    let sb = extract_secret(&compute_secret_matrix(&bob, &u, &v, &a_pub)?)?;
    let agreed = secrets_equal(&sa, &sb);

    let mut text = String::new();
    print_sizes(&mut text, n);
    print_coeffs(&mut text, "Alice: private key a", "M1", "a", alice.a.as_slice());
    print_coeffs(&mut text, "Alice: private key aa", "M2", "aa", alice.a_tilde.as_slice());
    print_coeffs(&mut text, "Bob: private key b", "J1", "b", bob.a.as_slice());
    print_coeffs(&mut text, "Bob: private key bb", "J2", "bb", bob.a_tilde.as_slice());
    print_matrix(&mut text, "Alice: matrix public key U", "U", u.matrix());
    print_matrix(&mut text, "Bob: matrix public key V", "V", v.matrix());
    print_matrix(&mut text, "Alice: public key A", "A", &a_pub);
    print_matrix(&mut text, "Bob: public key B", "B", &b_pub);
    print_secret(&mut text, "Alice: secret key Sa", "Sa", &sa);
    print_secret(&mut text, "Bob: secret key Sb", "Sb", &sb);
    heading(&mut text, "Check the secret keys");
    let _ = writeln!(text, "Result: {}", if agreed { "Sa = Sb" } else { "Sa != Sb" });
    emit(out, &text)?;

    if let Some(dir) = dump {
        fs::create_dir_all(dir)?;
        write_key(&dir.join("alice.private.mkx"), &private_file(n, &alice)?)?;
        write_key(&dir.join("bob.private.mkx"), &private_file(n, &bob)?)?;
        write_key(&dir.join("U.mkx"), &matrix_file(KeyKind::MatrixPubkey, u.matrix())?)?;
        write_key(&dir.join("V.mkx"), &matrix_file(KeyKind::MatrixPubkey, v.matrix())?)?;
        write_key(&dir.join("A.mkx"), &matrix_file(KeyKind::Pubkey, &a_pub)?)?;
        write_key(&dir.join("B.mkx"), &matrix_file(KeyKind::Pubkey, &b_pub)?)?;
        write_key(&dir.join("Sa.mkx"), &secret_file(n, &sa)?)?;
        write_key(&dir.join("Sb.mkx"), &secret_file(n, &sb)?)?;
    }
    if agreed {
        Ok(())
    } else {
        Err(CliError::Agreement("secrets differ (Sa != Sb)".into()))
    }
}

fn wire_config(common: &Common, net: &NetArgs, role_msg: MsgType) -> WireConfig {
    WireConfig {
        n: common.n,
        retries: net.retries,
        fault: net.corrupt.then_some(FaultPlan {
            msg_type: role_msg,
            bit: 100,
            times: None,
            skip_bytes: 0,
        }),
    }
}

fn cmd_serve(
    common: &Common,
    net: &NetArgs,
    sessions: Option<usize>,
    out: &mut (dyn Write + Send),
) -> CliResult {
    let stream = setup(common)?;
    let config = wire_config(common, net, MsgType::PubB);
    let server = Server::bind((net.addr.as_str(), net.port), stream, config)?;
    emit(out, &format!("listening on {}\n", server.local_addr()?))?;
    let out = Mutex::new(out);
    let worst = Mutex::new(EXIT_OK);
    server.serve(sessions, |index, result| {
        let line = match result {
            Ok(secret) => format!("session {index}: {}\n", hex::encode(secret.as_bytes())),
            Err(e) => {
                let code = CliError::from(e);
                let mut w = worst.lock().expect("exit code lock");
                *w = (*w).max(code.exit_code());
                format!("session {index}: error: {}\n", code.message())
            }
        };
        let mut out = out.lock().expect("stdout lock");
        let _ = out.write_all(line.as_bytes());
        let _ = out.flush();
    })?;
    match worst.into_inner().expect("exit code lock") {
        EXIT_OK => Ok(()),
        EXIT_AGREEMENT => Err(CliError::Agreement("at least one session failed to agree".into())),
        _ => Err(CliError::Io("at least one session failed".into())),
    }
}

fn cmd_connect(common: &Common, net: &NetArgs, out: &mut (dyn Write + Send)) -> CliResult {
    let mut stream = setup(common)?;
    let config = wire_config(common, net, MsgType::PubA);
    let secret = wire::connect((net.addr.as_str(), net.port), &mut stream, &config)?;
    let mut text = String::new();
    print_secret(&mut text, "Shared secret", "S", &secret);
    emit(out, text.trim_start())
}

struct AttackFiles {
    u: PathBuf,
    v: PathBuf,
    a: PathBuf,
    b: PathBuf,
    secret: Option<PathBuf>,
}

fn cmd_attack_files(
    files: &AttackFiles,
    degree: Option<usize>,
    out: &mut (dyn Write + Send),
) -> CliResult {
    let u = read_matrix(&files.u, KeyKind::MatrixPubkey)?;
    let v = read_matrix(&files.v, KeyKind::MatrixPubkey)?;
    let a_pub = read_matrix(&files.a, KeyKind::Pubkey)?;
    let b_pub = read_matrix(&files.b, KeyKind::Pubkey)?;
    let n = u.n();
    if [v.n(), a_pub.n(), b_pub.n()].iter().any(|&m| m != n) {
        return Err(CliError::Usage("input files disagree on n".into()));
    }
    let degree = degree.unwrap_or(n);
    if degree == 0 {
        return Err(CliError::Usage("--degree must be at least 1".into()));
    }
    let sys = build_system(&u, &v, &a_pub, degree)?;
    let sol = solve_least_squares(&sys, None)?;
    let recovered = recover_secret(&u, &v, &b_pub, &sol.alpha, degree)?;
    let key = extract_secret(&recovered)?;

    let mut text = String::new();
    let _ = writeln!(text, "Linearized system: {} unknowns, {} equations", sys.columns.len(), sys.target.len());
    let _ = writeln!(text, "degree = {degree}");
    let _ = writeln!(text, "relative residual = {:.3e}", sol.residual / sys.target_norm().max(f64::MIN_POSITIVE));
    let _ = writeln!(text, "condition estimate = {:.3e}", sol.condition);
    print_secret(&mut text, "Recovered secret key", "S", &key);
    if let Some(path) = &files.secret {
        let truth = read_key(path, KeyKind::Secret)?;
        let hit = truth.payload == key.as_bytes();
        heading(&mut text, "Check the recovered key");
        let _ = writeln!(
            text,
            "Result: {}",
            if hit { "recovered = secret" } else { "recovered != secret (attack failed)" }
        );
    }
    emit(out, &text)
}

fn cmd_attack_trials(
    common: &Common,
    trials: usize,
    degree: Option<usize>,
    planted: bool,
    csv: Option<&Path>,
    out: &mut (dyn Write + Send),
) -> CliResult {
    let stream = setup(common)?;
    let degree = degree.unwrap_or(common.n);
    if degree == 0 {
        return Err(CliError::Usage("--degree must be at least 1".into()));
    }
    let kind = if planted { InstanceKind::Planted } else { InstanceKind::Random };
    let summary = attack_report(&stream, trials, common.n, degree, kind)?;
    if let Some(path) = csv {
        fs::write(path, summary.to_csv())
            .map_err(|e| CliError::Io(format!("io: {}: {e}", path.display())))?;
    }
    emit(out, &summary.to_table())
}

/// Reference pairs: a complex value's 16 bytes, and one extracted word.
const VECTOR_CPLX: [(&str, &str); 3] = [
    ("ea8748d6b9ceeb3f9df71ed0045bebbf", "+0.8689850983830614\t-0.8548606934416402"),
    ("4c3a62a08547d2bf309f2d3d2f69b5bf", "-0.2856153551337328\t-0.0836362385140290"),
    ("68997ad8568fd53fa67b1df219c7e03f", "+0.3368737329532423\t+0.5243043640910983"),
];
const VECTOR_WORD: (u32, &str) = (3_532_271_144, "282e8ad2");

fn cmd_verify_vectors(out: &mut (dyn Write + Send)) -> CliResult {
    let mut text = String::new();
    let mut failures = 0;
    for (hx, printed) in VECTOR_CPLX {
        let bytes: [u8; 16] = hex::decode(hx).expect("static hex").try_into().expect("16 bytes");
        let ok = crate::keycodec::decode_cplx(&bytes)
            .ok()
            .filter(|c| format!("{:+.16}\t{:+.16}", c.re, c.im) == printed)
            .and_then(|c| crate::keycodec::encode_cplx(c).ok())
            .is_some_and(|back| back == bytes);
        failures += usize::from(!ok);
        let _ = writeln!(text, "{} cplx {hx} <-> {}", if ok { "PASS" } else { "FAIL" }, printed.replace('\t', " "));
    }
    let ok = hex::encode(VECTOR_WORD.0.to_le_bytes()) == VECTOR_WORD.1;
    failures += usize::from(!ok);
    let _ = writeln!(text, "{} word {} <-> {}", if ok { "PASS" } else { "FAIL" }, VECTOR_WORD.0, VECTOR_WORD.1);
    let words = [(1.5f64, 2_147_483_647u32), (-1.5, 2_147_483_647), (1.0, 0), (0.0, 0)];
    for (x, want) in words {
        let got = crate::protocol::secret_word(x).ok();
        let ok = got == Some(want);
        failures += usize::from(!ok);
        let _ = writeln!(text, "{} extract {x:+} -> {want}", if ok { "PASS" } else { "FAIL" });
    }
    emit(out, &text)?;
    if failures == 0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{failures} vector(s) failed")))
    }
}
