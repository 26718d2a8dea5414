//! Key generation, normalized matrix polynomials and secret extraction.
//!
//! Each party holds two coefficient vectors `(a, ã)` and publishes a random
//! matrix. With both matrices `(U, V)` known, a party publishes
//! `A = P(W1, a) · P(W2, ã)` where `(W1, W2)` is the canonical ordering of
//! `(U, V)` and `P(X, c) = Σ c_m X^m / ‖X^m‖_F`. Given the peer's public
//! matrix `B` the shared secret matrix is `P(W1, a) · B · P(W2, ã)`; both
//! sides arrive at the same matrix because polynomials in the same matrix
//! commute.

use crate::error::{Error, Result};
use crate::keycodec::{decode_cplx_seq, encode_cplx_seq, encode_matrix, CPLX_LEN};
use crate::numkernel::{normalized_power_stream, CMatrix, Cplx};
use crate::randgen::SeededStream;

/// Largest value `floor(t * SECRET_SCALE)` can take for `t` in `[0, 1)`.
const SECRET_SCALE: f64 = 4_294_967_295.0;

/// Polynomial coefficients; every component lies in `[-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector(Vec<Cplx>);

impl CoeffVector {
    pub fn new(coeffs: Vec<Cplx>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Shape("coefficient vector is empty".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(coeffs))
    }

    fn draw(s: &mut SeededStream, len: usize) -> Self {
        let coeffs = (0..len)
            .map(|_| {
                let re = s.symmetric_double();
                let im = s.symmetric_double();
                Cplx::new(re, im)
            })
            .collect();
        Self(coeffs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Cplx] {
        &self.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode_cplx_seq(&self.0).expect("coefficients are finite")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivateKey {
    pub a: CoeffVector,
    pub a_tilde: CoeffVector,
}

impl PrivateKey {
    /// `a` then `ã`, 16 bytes per coefficient.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.a.to_bytes();
        out.extend(self.a_tilde.to_bytes());
        out
    }

    pub fn from_bytes(m1: usize, m2: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != (m1 + m2) * CPLX_LEN {
            return Err(Error::Shape(format!(
                "private key with m1={m1}, m2={m2} needs {} bytes, got {}",
                (m1 + m2) * CPLX_LEN,
                bytes.len()
            )));
        }
        let (a, a_tilde) = bytes.split_at(m1 * CPLX_LEN);
        Ok(Self {
            a: CoeffVector::new(decode_cplx_seq(a)?)?,
            a_tilde: CoeffVector::new(decode_cplx_seq(a_tilde)?)?,
        })
    }
}

/// A party's published random matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPublicKey(CMatrix);

impl MatrixPublicKey {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        if m.is_zero() {
            return Err(Error::Degenerate);
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }
}

/// Private coefficients plus the matching matrix public key.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyPair {
    pub private: PrivateKey,
    pub matrix: MatrixPublicKey,
}

impl KeyPair {
    /// Private key first, then the matrix, from the same stream.
    pub fn generate(s: &mut SeededStream, n: usize) -> Result<Self> {
        let private = gen_private_key(s, n)?;
        let matrix = gen_matrix_public_key(s, n)?;
        Ok(Self { private, matrix })
    }
}

/// `n² · 8` bytes: two little-endian `u32` per secret-matrix entry.
#[derive(Clone, PartialEq, Eq)]
pub struct SharedSecret(Vec<u8>);

impl SharedSecret {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = u32> + '_ {
        self.0
            .chunks_exact(4)
            .map(|w| u32::from_le_bytes(w.try_into().expect("4-byte word")))
    }
}

impl std::fmt::Debug for SharedSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SharedSecret({})", hex::encode(&self.0))
    }
}

fn check_side(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Shape(format!("matrix side must be at least 2, got {n}")));
    }
    Ok(())
}

/// Draws `M1`, the `M1` coefficients of `a`, then `M2` and `ã`.
pub fn gen_private_key(s: &mut SeededStream, n: usize) -> Result<PrivateKey> {
    check_side(n)?;
    let n2 = n * n;
    let m1 = s.length_in_range(n2);
    let a = CoeffVector::draw(s, m1);
    let m2 = s.length_in_range(n2);
    let a_tilde = CoeffVector::draw(s, m2);
    Ok(PrivateKey { a, a_tilde })
}

/// Draws `n²` entries in column-major order, real part before imaginary.
pub fn gen_matrix_public_key(s: &mut SeededStream, n: usize) -> Result<MatrixPublicKey> {
    check_side(n)?;
    let data = CoeffVector::draw(s, n * n).0;
    MatrixPublicKey::new(CMatrix::from_col_major(n, data)?)
}

/// Orders two matrices so the one with the lexicographically larger
/// serialization comes first.
pub fn canonical_order<'a>(
    u: &'a CMatrix,
    v: &'a CMatrix,
) -> Result<(&'a CMatrix, &'a CMatrix)> {
    if u.n() != v.n() {
        return Err(Error::Shape("matrix public keys differ in size".into()));
    }
    let ub = encode_matrix(u)?;
    let vb = encode_matrix(v)?;
    match ub.cmp(&vb) {
        std::cmp::Ordering::Greater => Ok((u, v)),
        std::cmp::Ordering::Less => Ok((v, u)),
        std::cmp::Ordering::Equal => Err(Error::DegenerateKeys),
    }
}

/// `Σ_{m=1..M} c_m · X^m / ‖X^m‖_F`, accumulated in ascending `m`.
pub fn eval_poly_normalized(x: &CMatrix, c: &CoeffVector) -> Result<CMatrix> {
    let powers = normalized_power_stream(x, c.len())?;
    let mut acc = CMatrix::zeros(x.n());
    for (&coeff, p) in c.as_slice().iter().zip(&powers) {
        acc.add_scaled(coeff, p)?;
    }
    Ok(acc)
}

pub(crate) fn public_key_ordered(
    private: &PrivateKey,
    first: &CMatrix,
    second: &CMatrix,
) -> Result<CMatrix> {
    let left = eval_poly_normalized(first, &private.a)?;
    let right = eval_poly_normalized(second, &private.a_tilde)?;
    let out = left.mat_mul(&right)?;
    if !out.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(out)
}

pub(crate) fn secret_matrix_ordered(
    private: &PrivateKey,
    first: &CMatrix,
    second: &CMatrix,
    peer_pub: &CMatrix,
) -> Result<CMatrix> {
    if peer_pub.n() != first.n() {
        return Err(Error::Shape(format!(
            "peer public key is {0}x{0}, expected {1}x{1}",
            peer_pub.n(),
            first.n()
        )));
    }
    let left = eval_poly_normalized(first, &private.a)?;
    let right = eval_poly_normalized(second, &private.a_tilde)?;
    let out = left.mat_mul(peer_pub)?.mat_mul(&right)?;
    if !out.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(out)
}

/// The matrix a party publishes: `P(W1, a) · P(W2, ã)`.
pub fn compute_public_key(
    private: &PrivateKey,
    u: &MatrixPublicKey,
    v: &MatrixPublicKey,
) -> Result<CMatrix> {
    let (first, second) = canonical_order(u.matrix(), v.matrix())?;
    public_key_ordered(private, first, second)
}

/// The shared secret matrix: `P(W1, a) · B · P(W2, ã)`.
pub fn compute_secret_matrix(
    private: &PrivateKey,
    u: &MatrixPublicKey,
    v: &MatrixPublicKey,
    peer_pub: &CMatrix,
) -> Result<CMatrix> {
    let (first, second) = canonical_order(u.matrix(), v.matrix())?;
    secret_matrix_ordered(private, first, second, peer_pub)
}

/// Signed significand of a nonzero finite value: `x = f · 2^e` with
/// `|f|` in `[1, 2)`.
pub fn significand(x: f64) -> f64 {
    debug_assert!(x.is_finite() && x != 0.0);
    let mut bits = x.abs().to_bits();
    if bits >> 52 == 0 {
        // Subnormal: scale into the normal range first.
        bits = (x.abs() * 2f64.powi(64)).to_bits();
    }
    let f = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | (1023u64 << 52));
    if x < 0.0 {
        -f
    } else {
        f
    }
}

/// The 32-bit word extracted from one matrix component.
pub fn secret_word(x: f64) -> Result<u32> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    if x == 0.0 {
        return Ok(0);
    }
    let f = significand(x);
    let t = if f > 0.0 { f - 1.0 } else { f + 2.0 };
    Ok((t * SECRET_SCALE) as u32)
}

/// Two words per entry, column-major, real part first.
pub fn extract_secret(sm: &CMatrix) -> Result<SharedSecret> {
    let mut out = Vec::with_capacity(sm.data().len() * 8);
    for c in sm.data() {
        out.extend_from_slice(&secret_word(c.re)?.to_le_bytes());
        out.extend_from_slice(&secret_word(c.im)?.to_le_bytes());
    }
    Ok(SharedSecret(out))
}

pub fn secrets_equal(x: &SharedSecret, y: &SharedSecret) -> bool {
    x.0 == y.0
}
