//! Dense complex matrix arithmetic.
//!
//! Matrices are square and stored column-major: entry `(i, j)` lives at
//! index `j * n + i`. Every reduction walks its indices in ascending order
//! so identical inputs give identical bits on every platform.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One complex entry: real and imaginary binary64 components.
pub type Cplx = Complex64;

/// Square complex matrix in column-major order.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Cplx>,
}

impl CMatrix {
    /// Builds a matrix from `n * n` entries already in column-major order.
    pub fn from_col_major(n: usize, data: Vec<Cplx>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Shape("matrix side must be positive".into()));
        }
        if data.len() != n * n {
            return Err(Error::Shape(format!(
                "expected {} entries for n={n}, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    /// Builds a matrix from row-major nested rows. Handy for tests and literals.
    pub fn from_rows(rows: &[Vec<Cplx>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("rows must form a square matrix".into()));
        }
        let mut data = vec![Cplx::new(0.0, 0.0); n * n];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                data[j * n + i] = v;
            }
        }
        Self::from_col_major(n, data)
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "matrix side must be positive");
        Self {
            n,
            data: vec![Cplx::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Cplx::new(1.0, 0.0);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entries in column-major order.
    pub fn data(&self) -> &[Cplx] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Cplx> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Cplx {
        self.data[col * self.n + row]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Cplx) {
        self.data[col * self.n + row] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Matrix product `self * rhs`, inner index accumulated in ascending order.
    pub fn mat_mul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.n != rhs.n {
            return Err(Error::Shape(format!(
                "cannot multiply {0}x{0} by {1}x{1}",
                self.n, rhs.n
            )));
        }
        let n = self.n;
        let mut out = vec![Cplx::new(0.0, 0.0); n * n];
        for j in 0..n {
            for i in 0..n {
                let mut acc = Cplx::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.data[k * n + i] * rhs.data[j * n + k];
                }
                out[j * n + i] = acc;
            }
        }
        Ok(CMatrix { n, data: out })
    }

    /// Square root of the sum of squared moduli, summed in index order.
    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .fold(0.0, |acc, c| acc + c.norm_sqr())
            .sqrt()
    }

    pub fn scale(&self, factor: Cplx) -> CMatrix {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|&c| c * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> CMatrix {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|&c| c * factor).collect(),
        }
    }

    /// `self += coeff * x`, entrywise in ascending index order.
    pub fn add_scaled(&mut self, coeff: Cplx, x: &CMatrix) -> Result<()> {
        if self.n != x.n {
            return Err(Error::Shape(format!(
                "cannot accumulate {0}x{0} into {1}x{1}",
                x.n, self.n
            )));
        }
        for (dst, &src) in self.data.iter_mut().zip(&x.data) {
            *dst += coeff * src;
        }
        Ok(())
    }

    pub fn sub(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.n != rhs.n {
            return Err(Error::Shape("subtraction of mismatched sides".into()));
        }
        Ok(CMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// `‖self − other‖_F / ‖self‖_F`; falls back to the absolute difference
    /// when `self` is zero.
    pub fn relative_diff(&self, other: &CMatrix) -> Result<f64> {
        let diff = self.sub(other)?.frobenius_norm();
        let base = self.frobenius_norm();
        Ok(if base == 0.0 { diff } else { diff / base })
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({0}x{0}) [", self.n)?;
        for i in 0..self.n {
            write!(f, "  ")?;
            for j in 0..self.n {
                let c = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i  ", c.re, c.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Returns `x^m / ‖x^m‖_F` for `m = 1..=count`.
///
/// Each step renormalizes the running power, so the sequence stays bounded
/// even for long coefficient vectors; the direction of each term is the same
/// as normalizing the raw power.
pub fn normalized_power_stream(x: &CMatrix, count: usize) -> Result<Vec<CMatrix>> {
    if !x.is_finite() {
        return Err(Error::Overflow);
    }
    if x.is_zero() {
        return Err(Error::Degenerate);
    }
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    let mut current = normalize(x)?;
    out.push(current.clone());
    for _ in 1..count {
        current = normalize(&current.mat_mul(x)?)?;
        out.push(current.clone());
    }
    Ok(out)
}

fn normalize(x: &CMatrix) -> Result<CMatrix> {
    let norm = x.frobenius_norm();
    if !norm.is_finite() || !x.is_finite() {
        return Err(Error::Overflow);
    }
    if norm == 0.0 {
        // A nilpotent base runs out of nonzero powers.
        return Err(Error::Degenerate);
    }
    let out = CMatrix {
        n: x.n,
        data: x.data.iter().map(|&c| c / norm).collect(),
    };
    if !out.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cplx {
        Cplx::new(re, im)
    }

    fn real_rows(rows: &[&[f64]]) -> CMatrix {
        let rows: Vec<Vec<Cplx>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| c(v, 0.0)).collect())
            .collect();
        CMatrix::from_rows(&rows).unwrap()
    }

    fn lcg_matrix(n: usize, state: &mut u64) -> CMatrix {
        let mut next = || {
            *state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((*state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let data = (0..n * n).map(|_| c(next(), next())).collect();
        CMatrix::from_col_major(n, data).unwrap()
    }

    #[test]
    fn identity_is_left_neutral() {
        let m = CMatrix::from_rows(&[vec![c(1.0, 2.0), c(-3.0, 0.5)], vec![c(0.0, -1.0), c(4.0, 4.0)]])
            .unwrap();
        assert_eq!(CMatrix::identity(2).mat_mul(&m).unwrap(), m);
    }

    #[test]
    fn permutation_product() {
        let p = real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(CMatrix::identity(2).mat_mul(&p).unwrap(), p);
    }

    #[test]
    fn hand_expanded_product() {
        // [[1+i,0],[0,2]] * [[1,1],[1,1]]: row 0 = (1+i)(1,1), row 1 = 2(1,1).
        let x = CMatrix::from_rows(&[vec![c(1.0, 1.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(2.0, 0.0)]])
            .unwrap();
        let y = real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let want = CMatrix::from_rows(&[vec![c(1.0, 1.0), c(1.0, 1.0)], vec![c(2.0, 0.0), c(2.0, 0.0)]])
            .unwrap();
        assert_eq!(x.mat_mul(&y).unwrap(), want);
    }

    #[test]
    fn mismatched_product_is_shape_error() {
        let err = CMatrix::identity(2).mat_mul(&CMatrix::identity(3)).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn column_major_layout() {
        let m = real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let re: Vec<f64> = m.data().iter().map(|v| v.re).collect();
        assert_eq!(re, vec![1.0, 3.0, 2.0, 4.0]);
        assert!(CMatrix::from_col_major(2, vec![c(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(CMatrix::identity(2).frobenius_norm(), std::f64::consts::SQRT_2);
        assert_eq!(real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).frobenius_norm(), 2.0);
        assert_eq!(real_rows(&[&[3.0, 0.0], &[0.0, 4.0]]).frobenius_norm(), 5.0);
    }

    #[test]
    fn scalar_matrix_powers_normalize_to_identity_direction() {
        let x = CMatrix::identity(2).scale_real(2.0);
        let powers = normalized_power_stream(&x, 3).unwrap();
        let want = CMatrix::identity(2).scale_real(1.0 / 2f64.sqrt());
        assert_eq!(powers.len(), 3);
        for p in &powers {
            assert!(p.relative_diff(&want).unwrap() < 1e-15);
        }
    }

    #[test]
    fn projector_powers_are_fixed() {
        let x = real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let powers = normalized_power_stream(&x, 2).unwrap();
        assert_eq!(powers, vec![x.clone(), x]);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        assert_eq!(
            normalized_power_stream(&CMatrix::zeros(3), 2).unwrap_err(),
            Error::Degenerate
        );
    }

    #[test]
    fn nonfinite_input_is_overflow() {
        let mut x = CMatrix::identity(2);
        x.set(0, 1, c(f64::INFINITY, 0.0));
        assert_eq!(normalized_power_stream(&x, 2).unwrap_err(), Error::Overflow);
    }

    #[test]
    fn nilpotent_base_runs_out_of_powers() {
        let x = real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(normalized_power_stream(&x, 1).unwrap().len(), 1);
        assert_eq!(normalized_power_stream(&x, 2).unwrap_err(), Error::Degenerate);
    }

    #[test]
    fn power_stream_has_unit_norm_and_matches_direct_powers() {
        let mut state = 7;
        for _ in 0..20 {
            let x = lcg_matrix(4, &mut state);
            let stream = normalized_power_stream(&x, 31).unwrap();
            let mut direct = x.clone();
            for (m, p) in stream.iter().enumerate() {
                assert!((p.frobenius_norm() - 1.0).abs() <= 1e-12);
                if m > 0 {
                    direct = direct.mat_mul(&x).unwrap();
                }
                if m < 20 {
                    let oracle = direct.scale_real(1.0 / direct.frobenius_norm());
                    for (a, b) in p.data().iter().zip(oracle.data()) {
                        assert!((a - b).norm() <= 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn product_is_associative_within_tolerance() {
        let mut state = 99;
        for _ in 0..200 {
            let x = lcg_matrix(4, &mut state);
            let y = lcg_matrix(4, &mut state);
            let z = lcg_matrix(4, &mut state);
            let left = x.mat_mul(&y).unwrap().mat_mul(&z).unwrap();
            let right = x.mat_mul(&y.mat_mul(&z).unwrap()).unwrap();
            let bound =
                1e-12 * x.frobenius_norm() * y.frobenius_norm() * z.frobenius_norm();
            assert!(left.sub(&right).unwrap().frobenius_norm() <= bound);
        }
    }
}
