//! Byte-exact serialization of complex values, matrices and key material.
//!
//! A complex value is 16 bytes: the little-endian binary64 real part
//! followed by the little-endian binary64 imaginary part. Matrices are the
//! concatenation of their entries in column-major order.
//!
//! Key files (`.mkx`) are UTF-8 text: one header line
//! `mkex/1 <kind> n=<N> len=<bytes>` followed by the payload as lowercase
//! hex, 32 bytes per line. Private coefficient files also carry
//! ` m1=<M1> m2=<M2>` so the two vectors can be split again.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numkernel::{CMatrix, Cplx};

pub const CPLX_LEN: usize = 16;
pub const HEX_LINE_BYTES: usize = 32;
const MAGIC: &str = "mkex/1";

pub fn encode_cplx(c: Cplx) -> Result<[u8; CPLX_LEN]> {
    if !c.re.is_finite() || !c.im.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut out = [0u8; CPLX_LEN];
    out[..8].copy_from_slice(&c.re.to_le_bytes());
    out[8..].copy_from_slice(&c.im.to_le_bytes());
    Ok(out)
}

pub fn decode_cplx(b: &[u8; CPLX_LEN]) -> Result<Cplx> {
    let re = f64::from_le_bytes(b[..8].try_into().expect("8 bytes"));
    let im = f64::from_le_bytes(b[8..].try_into().expect("8 bytes"));
    if !re.is_finite() || !im.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(Cplx::new(re, im))
}

/// Concatenated encodings of a sequence of complex values.
pub fn encode_cplx_seq(values: &[Cplx]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(values.len() * CPLX_LEN);
    for &c in values {
        out.extend_from_slice(&encode_cplx(c)?);
    }
    Ok(out)
}

pub fn decode_cplx_seq(bytes: &[u8]) -> Result<Vec<Cplx>> {
    if !bytes.len().is_multiple_of(CPLX_LEN) {
        return Err(Error::Shape(format!(
            "{} bytes is not a whole number of complex values",
            bytes.len()
        )));
    }
    bytes
        .chunks_exact(CPLX_LEN)
        .map(|chunk| decode_cplx(chunk.try_into().expect("16-byte chunk")))
        .collect()
}

pub fn encode_matrix(m: &CMatrix) -> Result<Vec<u8>> {
    encode_cplx_seq(m.data())
}

pub fn decode_matrix(n: usize, bytes: &[u8]) -> Result<CMatrix> {
    let want = n * n * CPLX_LEN;
    if bytes.len() != want {
        return Err(Error::Shape(format!(
            "matrix with n={n} needs {want} bytes, got {}",
            bytes.len()
        )));
    }
    CMatrix::from_col_major(n, decode_cplx_seq(bytes)?)
}

/// Lowercase hex, 32 bytes per line, each line newline-terminated.
pub fn hex_dump(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2 + bytes.len() / HEX_LINE_BYTES + 1);
    for line in bytes.chunks(HEX_LINE_BYTES) {
        out.push_str(&hex::encode(line));
        out.push('\n');
    }
    out
}

/// Inverse of [`hex_dump`]; whitespace anywhere is ignored.
pub fn hex_parse(text: &str) -> Result<Vec<u8>> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    hex::decode(&compact).map_err(|e| Error::Format(format!("bad hex: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind {
    PrivateCoeffs,
    MatrixPubkey,
    Pubkey,
    Secret,
}

impl KeyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KeyKind::PrivateCoeffs => "private-coeffs",
            KeyKind::MatrixPubkey => "matrix-pubkey",
            KeyKind::Pubkey => "pubkey",
            KeyKind::Secret => "secret",
        }
    }
}

impl fmt::Display for KeyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KeyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "private-coeffs" => Ok(KeyKind::PrivateCoeffs),
            "matrix-pubkey" => Ok(KeyKind::MatrixPubkey),
            "pubkey" => Ok(KeyKind::Pubkey),
            "secret" => Ok(KeyKind::Secret),
            other => Err(Error::Format(format!("unknown key kind {other:?}"))),
        }
    }
}

/// A typed key-material file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyFile {
    pub kind: KeyKind,
    pub n: usize,
    /// Lengths of the two coefficient vectors; only for private coefficients.
    pub split: Option<(usize, usize)>,
    pub payload: Vec<u8>,
}

impl KeyFile {
    pub fn new(kind: KeyKind, n: usize, payload: Vec<u8>) -> Result<Self> {
        let file = KeyFile {
            kind,
            n,
            split: None,
            payload,
        };
        file.validate()?;
        Ok(file)
    }

    pub fn private_coeffs(n: usize, m1: usize, m2: usize, payload: Vec<u8>) -> Result<Self> {
        let file = KeyFile {
            kind: KeyKind::PrivateCoeffs,
            n,
            split: Some((m1, m2)),
            payload,
        };
        file.validate()?;
        Ok(file)
    }

    fn expected_len(&self) -> Result<usize> {
        Ok(match self.kind {
            KeyKind::PrivateCoeffs => {
                let (m1, m2) = self
                    .split
                    .ok_or_else(|| Error::Format("private coefficients need m1/m2".into()))?;
                (m1 + m2) * CPLX_LEN
            }
            KeyKind::MatrixPubkey | KeyKind::Pubkey => self.n * self.n * CPLX_LEN,
            KeyKind::Secret => self.n * self.n * 8,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Format("n must be positive".into()));
        }
        if self.kind != KeyKind::PrivateCoeffs && self.split.is_some() {
            return Err(Error::Format(format!("{} files carry no m1/m2", self.kind)));
        }
        let want = self.expected_len()?;
        if self.payload.len() != want {
            return Err(Error::Shape(format!(
                "{} payload for n={} must be {want} bytes, got {}",
                self.kind,
                self.n,
                self.payload.len()
            )));
        }
        Ok(())
    }

    pub fn header(&self) -> String {
        let mut h = format!(
            "{MAGIC} {} n={} len={}",
            self.kind,
            self.n,
            self.payload.len()
        );
        if let Some((m1, m2)) = self.split {
            h.push_str(&format!(" m1={m1} m2={m2}"));
        }
        h
    }

    pub fn to_text(&self) -> String {
        format!("{}\n{}", self.header(), hex_dump(&self.payload))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (header, body) = text.split_once('\n').unwrap_or((text, ""));
        let mut fields = header.split_whitespace();
        if fields.next() != Some(MAGIC) {
            return Err(Error::Format("missing mkex/1 header".into()));
        }
        let kind: KeyKind = fields
            .next()
            .ok_or_else(|| Error::Format("missing key kind".into()))?
            .parse()?;
        let mut n = None;
        let mut len = None;
        let mut m1 = None;
        let mut m2 = None;
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("malformed header field {field:?}")))?;
            let value: usize = value
                .parse()
                .map_err(|_| Error::Format(format!("non-numeric header value {field:?}")))?;
            let slot = match key {
                "n" => &mut n,
                "len" => &mut len,
                "m1" => &mut m1,
                "m2" => &mut m2,
                _ => return Err(Error::Format(format!("unknown header field {key:?}"))),
            };
            *slot = Some(value);
        }
        let n = n.ok_or_else(|| Error::Format("header lacks n=".into()))?;
        let len = len.ok_or_else(|| Error::Format("header lacks len=".into()))?;
        let split = match (m1, m2) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(Error::Format("m1 and m2 must appear together".into())),
        };
        let payload = hex_parse(body)?;
        if payload.len() != len {
            return Err(Error::Shape(format!(
                "header says {len} bytes, body has {}",
                payload.len()
            )));
        }
        let file = KeyFile {
            kind,
            n,
            split,
            payload,
        };
        file.validate()?;
        Ok(file)
    }

    pub fn expect_kind(self, kind: KeyKind) -> Result<Self> {
        if self.kind != kind {
            return Err(Error::Format(format!(
                "expected a {kind} file, found {}",
                self.kind
            )));
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unhex16(s: &str) -> [u8; 16] {
        hex::decode(s).unwrap().try_into().unwrap()
    }

    #[test]
    fn reference_run_value_pairs() {
        let pairs = [
            (0.8689850983830614, -0.8548606934416402, "ea8748d6b9ceeb3f9df71ed0045bebbf"),
            (-0.2856153551337328, -0.08363623851402902, "4c3a62a08547d2bf309f2d3d2f69b5bf"),
            (0.3368737329532423, 0.5243043640910983, "68997ad8568fd53fa67b1df219c7e03f"),
            (0.0, 0.0, "00000000000000000000000000000000"),
        ];
        for (re, im, hx) in pairs {
            let c = Cplx::new(re, im);
            assert_eq!(hex::encode(encode_cplx(c).unwrap()), hx);
            assert_eq!(decode_cplx(&unhex16(hx)).unwrap(), c);
        }
    }

    #[test]
    fn nonfinite_rejected_both_ways() {
        assert_eq!(encode_cplx(Cplx::new(f64::NAN, 0.0)), Err(Error::NonFinite));
        assert_eq!(encode_cplx(Cplx::new(0.0, f64::INFINITY)), Err(Error::NonFinite));
        let mut b = [0u8; 16];
        b[..8].copy_from_slice(&f64::NEG_INFINITY.to_le_bytes());
        assert_eq!(decode_cplx(&b), Err(Error::NonFinite));
    }

    #[test]
    fn one_by_one_matrix() {
        let m = CMatrix::identity(1);
        assert_eq!(
            hex::encode(encode_matrix(&m).unwrap()),
            "000000000000f03f0000000000000000"
        );
        assert!(matches!(decode_matrix(2, &[0u8; 16]), Err(Error::Shape(_))));
    }

    #[test]
    fn matrix_lengths() {
        for n in 1..=8 {
            let bytes = encode_matrix(&CMatrix::identity(n)).unwrap();
            assert_eq!(bytes.len(), n * n * 16);
            assert_eq!(decode_matrix(n, &bytes).unwrap(), CMatrix::identity(n));
        }
    }

    #[test]
    fn hex_dump_layout() {
        assert_eq!(hex_dump(&[]), "");
        let full: Vec<u8> = (0..32).collect();
        let text = hex_dump(&full);
        assert_eq!(text.lines().count(), 1);
        assert_eq!(text.trim_end().len(), 64);
        let long: Vec<u8> = (0..384).map(|i| (i * 7 % 256) as u8).collect();
        let text = hex_dump(&long);
        assert_eq!(text.lines().count(), 12);
        assert!(text.lines().all(|l| l.len() == 64));
        for input in [&[][..], &full[..], &long[..]] {
            assert_eq!(hex_parse(&hex_dump(input)).unwrap(), input);
        }
    }

    #[test]
    fn hex_parse_errors() {
        assert!(matches!(hex_parse("abc"), Err(Error::Format(_))));
        assert!(matches!(hex_parse("zz"), Err(Error::Format(_))));
        assert_eq!(hex_parse(" a b\n0 1 ").unwrap(), vec![0xab, 0x01]);
    }

    #[test]
    fn key_file_round_trip() {
        let secret = KeyFile::new(KeyKind::Secret, 4, vec![9; 128]).unwrap();
        let text = secret.to_text();
        assert!(text.starts_with("mkex/1 secret n=4 len=128\n"));
        assert_eq!(KeyFile::parse(&text).unwrap(), secret);

        let private = KeyFile::private_coeffs(4, 2, 1, vec![0; 48]).unwrap();
        let text = private.to_text();
        assert!(text.starts_with("mkex/1 private-coeffs n=4 len=48 m1=2 m2=1\n"));
        assert_eq!(KeyFile::parse(&text).unwrap(), private);
    }

    #[test]
    fn key_file_rejects_inconsistent_lengths() {
        assert!(KeyFile::new(KeyKind::Pubkey, 4, vec![0; 255]).is_err());
        assert!(KeyFile::parse("mkex/1 secret n=4 len=4\n00000000\n").is_err());
        assert!(KeyFile::parse("mkex/1 secret n=1 len=8\n00000000\n").is_err());
        assert!(KeyFile::parse("mkex/2 secret n=1 len=8\n0000000000000000\n").is_err());
        assert!(KeyFile::parse("mkex/1 bogus n=1 len=8\n0000000000000000\n").is_err());
        let ok = KeyFile::parse("mkex/1 secret n=1 len=8\n0000000000000000\n").unwrap();
        assert!(ok.expect_kind(KeyKind::Pubkey).is_err());
    }
}
