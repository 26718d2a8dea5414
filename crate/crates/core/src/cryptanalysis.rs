//! Linearization attack on the matrix-polynomial exchange.
//!
//! Expanding `A = P(W1, a) · P(W2, ã)` gives `A = Σ_{m,n} a_m ã_n Ŵ1^m Ŵ2^n`
//! where `Ŵ^m` are the normalized powers. Treating every product
//! `α_{mn} = a_m ã_n` as an unknown turns the public key into the linear
//! system `Ψ α = vec(A)`. Powers beyond the matrix side add nothing to the
//! span (Cayley–Hamilton), so degree `D = n` suffices. Any solution `α`
//! then yields the peer's secret without either private key:
//!
//! `Σ α_{mn} Ŵ1^m · B · Ŵ2^n = P(W1, b) · (Σ α_{mn} Ŵ1^m Ŵ2^n) · P(W2, b̃)`
//!
//! because `Ŵ1^m` commutes with `P(W1, b)` and `Ŵ2^n` with `P(W2, b̃)`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numkernel::{normalized_power_stream, CMatrix, Cplx};
use crate::protocol::{
    canonical_order, compute_public_key, compute_secret_matrix, extract_secret, CoeffVector,
    KeyPair, MatrixPublicKey, PrivateKey,
};
use crate::randgen::SeededStream;

const RIDGE_SCALE: f64 = 1e-12;
const RIDGE_RETRIES: usize = 3;
const REFINE_STEPS: usize = 4;
/// Relative Frobenius error under which a recovered matrix counts as a hit.
pub const APPROX_THRESHOLD: f64 = 1e-6;

/// `Ψ α = target` with one column per `(m, n)`, `m, n ∈ 1..=degree`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub degree: usize,
    /// Column `(m - 1) * degree + (n - 1)` is `vec(Ŵ1^m · Ŵ2^n)`.
    pub columns: Vec<Vec<Cplx>>,
    pub target: Vec<Cplx>,
}

impl LinearSystem {
    pub fn from_parts(degree: usize, columns: Vec<Vec<Cplx>>, target: Vec<Cplx>) -> Result<Self> {
        if columns.iter().any(|c| c.len() != target.len()) {
            return Err(Error::Shape("columns and target differ in length".into()));
        }
        Ok(Self {
            degree,
            columns,
            target,
        })
    }

    /// `Ψ α`.
    pub fn apply(&self, alpha: &[Cplx]) -> Vec<Cplx> {
        let mut out = vec![Cplx::new(0.0, 0.0); self.target.len()];
        for (col, &a) in self.columns.iter().zip(alpha) {
            for (o, &c) in out.iter_mut().zip(col) {
                *o += a * c;
            }
        }
        out
    }

    pub fn residual(&self, alpha: &[Cplx]) -> f64 {
        norm2(&sub(&self.apply(alpha), &self.target))
    }

    pub fn target_norm(&self) -> f64 {
        norm2(&self.target)
    }
}

fn norm2(v: &[Cplx]) -> f64 {
    v.iter().fold(0.0, |acc, c| acc + c.norm_sqr()).sqrt()
}

fn sub(a: &[Cplx], b: &[Cplx]) -> Vec<Cplx> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Canonically ordered normalized powers of both matrix public keys.
fn ordered_powers(
    u: &CMatrix,
    v: &CMatrix,
    degree: usize,
) -> Result<(Vec<CMatrix>, Vec<CMatrix>)> {
    if degree == 0 {
        return Err(Error::Shape("attack degree must be at least 1".into()));
    }
    let (first, second) = canonical_order(u, v)?;
    Ok((
        normalized_power_stream(first, degree)?,
        normalized_power_stream(second, degree)?,
    ))
}

pub fn build_system(
    u: &CMatrix,
    v: &CMatrix,
    a_pub: &CMatrix,
    degree: usize,
) -> Result<LinearSystem> {
    if a_pub.n() != u.n() {
        return Err(Error::Shape("public key size differs from matrix keys".into()));
    }
    let (left, right) = ordered_powers(u, v, degree)?;
    let mut columns = Vec::with_capacity(degree * degree);
    for l in &left {
        for r in &right {
            columns.push(l.mat_mul(r)?.into_data());
        }
    }
    Ok(LinearSystem {
        degree,
        columns,
        target: a_pub.data().to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub alpha: Vec<Cplx>,
    /// `‖Ψ α − target‖₂`.
    pub residual: f64,
    pub ridge: f64,
    /// `(max L_ii / min L_ii)²` of the Cholesky factor; estimates cond(Ψ*Ψ).
    pub condition: f64,
}

/// Hermitian matrix stored row-major, `k × k`.
struct Gram {
    k: usize,
    data: Vec<Cplx>,
}

impl Gram {
    fn at(&self, i: usize, j: usize) -> Cplx {
        self.data[i * self.k + j]
    }
}

/// Lower-triangular `L` with `L L* = g + ridge · I`, or `None` when a pivot
/// is not strictly positive.
fn cholesky(g: &Gram, ridge: f64) -> Option<Vec<Cplx>> {
    let k = g.k;
    let mut l = vec![Cplx::new(0.0, 0.0); k * k];
    for j in 0..k {
        let mut diag = g.at(j, j).re + ridge;
        for p in 0..j {
            diag -= l[j * k + p].norm_sqr();
        }
        // Pivots lost to cancellation mean the matrix is numerically singular.
        if !diag.is_finite() || diag <= f64::EPSILON * (g.at(j, j).re + ridge) {
            return None;
        }
        let ljj = diag.sqrt();
        l[j * k + j] = Cplx::new(ljj, 0.0);
        for i in j + 1..k {
            let mut acc = g.at(i, j);
            for p in 0..j {
                acc -= l[i * k + p] * l[j * k + p].conj();
            }
            l[i * k + j] = acc / ljj;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[Cplx], k: usize, rhs: &[Cplx]) -> Vec<Cplx> {
    let mut y = rhs.to_vec();
    for i in 0..k {
        let mut acc = y[i];
        for p in 0..i {
            acc -= l[i * k + p] * y[p];
        }
        y[i] = acc / l[i * k + i].re;
    }
    for i in (0..k).rev() {
        let mut acc = y[i];
        for p in i + 1..k {
            acc -= l[p * k + i].conj() * y[p];
        }
        y[i] = acc / l[i * k + i].re;
    }
    y
}

/// Ridge-regularized normal equations `(Ψ*Ψ + λI) α = Ψ* target`.
///
/// `ridge = None` picks `λ = 1e-12 · trace(Ψ*Ψ) / D²`. A failed
/// factorization is retried with `λ × 10` up to three times. The solve is
/// followed by a few steps of residual refinement through the same factor,
/// which strips the ridge bias along well-determined directions; a step is
/// kept only if it lowers `‖Ψα − target‖`.
pub fn solve_least_squares(sys: &LinearSystem, ridge: Option<f64>) -> Result<Solution> {
    let k = sys.columns.len();
    if k == 0 {
        return Err(Error::Shape("system has no columns".into()));
    }
    let dot = |a: &[Cplx], b: &[Cplx]| {
        a.iter()
            .zip(b)
            .fold(Cplx::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
    };
    let mut gram = Gram {
        k,
        data: vec![Cplx::new(0.0, 0.0); k * k],
    };
    for i in 0..k {
        for j in 0..k {
            gram.data[i * k + j] = dot(&sys.columns[i], &sys.columns[j]);
        }
    }
    let rhs: Vec<Cplx> = sys.columns.iter().map(|c| dot(c, &sys.target)).collect();
    let trace: f64 = (0..k).map(|i| gram.at(i, i).re).sum();
    if !trace.is_finite() || trace <= 0.0 {
        return Err(Error::Singular);
    }
    let default_ridge = RIDGE_SCALE * trace / k as f64;
    let mut lambda = match ridge {
        Some(r) if r < 0.0 || !r.is_finite() => {
            return Err(Error::Shape(format!("ridge must be a finite value >= 0, got {r}")))
        }
        Some(r) => r,
        None => default_ridge,
    };
    for attempt in 0..=RIDGE_RETRIES {
        if let Some(l) = cholesky(&gram, lambda) {
            let mut alpha = cholesky_solve(&l, k, &rhs);
            if alpha.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
                let mut residual = sys.residual(&alpha);
                for _ in 0..REFINE_STEPS {
                    let r = sub(&sys.target, &sys.apply(&alpha));
                    let proj: Vec<Cplx> = sys.columns.iter().map(|c| dot(c, &r)).collect();
                    let delta = cholesky_solve(&l, k, &proj);
                    let next: Vec<Cplx> = alpha.iter().zip(&delta).map(|(a, d)| a + d).collect();
                    let next_residual = sys.residual(&next);
                    if next_residual.is_nan() || next_residual >= residual {
                        break;
                    }
                    alpha = next;
                    residual = next_residual;
                }
                let diag = (0..k).map(|i| l[i * k + i].re);
                let (lo, hi) = diag.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
                    (lo.min(d), hi.max(d))
                });
                return Ok(Solution {
                    alpha,
                    residual,
                    ridge: lambda,
                    condition: (hi / lo).powi(2),
                });
            }
        }
        if attempt < RIDGE_RETRIES {
            lambda = if lambda > 0.0 { lambda * 10.0 } else { default_ridge };
        }
    }
    Err(Error::Singular)
}

/// `Σ α_{mn} Ŵ1^m · B · Ŵ2^n`, in ascending column order.
pub fn recover_secret(
    u: &CMatrix,
    v: &CMatrix,
    b_pub: &CMatrix,
    alpha: &[Cplx],
    degree: usize,
) -> Result<CMatrix> {
    if b_pub.n() != u.n() {
        return Err(Error::Shape("public key size differs from matrix keys".into()));
    }
    if alpha.len() != degree * degree {
        return Err(Error::Shape(format!(
            "degree {degree} needs {} coefficients, got {}",
            degree * degree,
            alpha.len()
        )));
    }
    let (left, right) = ordered_powers(u, v, degree)?;
    let mut acc = CMatrix::zeros(u.n());
    for (m, l) in left.iter().enumerate() {
        let lb = l.mat_mul(b_pub)?;
        for (n, r) in right.iter().enumerate() {
            acc.add_scaled(alpha[m * degree + n], &lb.mat_mul(r)?)?;
        }
    }
    Ok(acc)
}

/// Public transcript of one exchange plus the secret the attacker aims for.
#[derive(Debug, Clone)]
pub struct Exchange {
    pub u: CMatrix,
    pub v: CMatrix,
    pub a_pub: CMatrix,
    pub b_pub: CMatrix,
    /// Bob's secret matrix `P(W1, b) · A · P(W2, b̃)`.
    pub secret: CMatrix,
}

impl Exchange {
    /// Two full random key pairs.
    pub fn random(s: &mut SeededStream, n: usize) -> Result<Self> {
        let alice = KeyPair::generate(s, n)?;
        let bob = KeyPair::generate(s, n)?;
        Self::from_keys(&alice, &bob)
    }

    /// Alice holds one coefficient in each vector; Bob's key is full.
    pub fn planted(s: &mut SeededStream, n: usize) -> Result<Self> {
        let mut alice = KeyPair::generate(s, n)?;
        let bob = KeyPair::generate(s, n)?;
        let single = |c: &CoeffVector| CoeffVector::new(vec![c.as_slice()[0]]);
        alice.private = PrivateKey {
            a: single(&alice.private.a)?,
            a_tilde: single(&alice.private.a_tilde)?,
        };
        Self::from_keys(&alice, &bob)
    }

    fn from_keys(alice: &KeyPair, bob: &KeyPair) -> Result<Self> {
        let (u, v): (&MatrixPublicKey, &MatrixPublicKey) = (&alice.matrix, &bob.matrix);
        let a_pub = compute_public_key(&alice.private, u, v)?;
        let b_pub = compute_public_key(&bob.private, u, v)?;
        let secret = compute_secret_matrix(&bob.private, u, v, &a_pub)?;
        Ok(Self {
            u: u.matrix().clone(),
            v: v.matrix().clone(),
            a_pub,
            b_pub,
            secret,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    /// `‖Ψα − vec(A)‖ / ‖vec(A)‖`.
    pub relative_residual: f64,
    pub condition: f64,
    /// `‖S_eve − S‖_F / ‖S‖_F`.
    pub relative_error: f64,
    /// Extracted key bytes equal the true shared secret.
    pub exact_key: bool,
}

impl TrialOutcome {
    pub fn approx_hit(&self) -> bool {
        self.relative_error <= APPROX_THRESHOLD
    }
}

/// Attacks one exchange from its public values alone.
pub fn attack_exchange(ex: &Exchange, degree: usize, trial: usize) -> Result<TrialOutcome> {
    let sys = build_system(&ex.u, &ex.v, &ex.a_pub, degree)?;
    let sol = solve_least_squares(&sys, None)?;
    let recovered = recover_secret(&ex.u, &ex.v, &ex.b_pub, &sol.alpha, degree)?;
    let target_norm = sys.target_norm();
    let exact_key = match (extract_secret(&recovered), extract_secret(&ex.secret)) {
        (Ok(r), Ok(s)) => r == s,
        _ => false,
    };
    let relative_error = ex.secret.relative_diff(&recovered)?;
    Ok(TrialOutcome {
        trial,
        relative_residual: if target_norm > 0.0 {
            sol.residual / target_norm
        } else {
            sol.residual
        },
        condition: sol.condition,
        relative_error: if relative_error.is_nan() { f64::INFINITY } else { relative_error },
        exact_key,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    Random,
    Planted,
}

#[derive(Debug, Clone, Default)]
pub struct AttackSummary {
    pub n: usize,
    pub degree: usize,
    pub outcomes: Vec<TrialOutcome>,
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let mid = xs.len() / 2;
    Some(if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        (xs[mid - 1] + xs[mid]) / 2.0
    })
}

impl AttackSummary {
    pub fn trials(&self) -> usize {
        self.outcomes.len()
    }

    pub fn exact_successes(&self) -> usize {
        self.outcomes.iter().filter(|o| o.exact_key).count()
    }

    pub fn approx_successes(&self) -> usize {
        self.outcomes.iter().filter(|o| o.approx_hit()).count()
    }

    pub fn exact_rate(&self) -> Option<f64> {
        (self.trials() > 0).then(|| self.exact_successes() as f64 / self.trials() as f64)
    }

    pub fn approx_rate(&self) -> Option<f64> {
        (self.trials() > 0).then(|| self.approx_successes() as f64 / self.trials() as f64)
    }

    pub fn median_residual(&self) -> Option<f64> {
        median(self.outcomes.iter().map(|o| o.relative_residual).collect())
    }

    pub fn median_condition(&self) -> Option<f64> {
        median(self.outcomes.iter().map(|o| o.condition).collect())
    }

    pub fn to_table(&self) -> String {
        let fmt_rate = |r: Option<f64>| r.map_or("-".to_string(), |r| format!("{:.4}", r));
        let fmt_sci = |r: Option<f64>| r.map_or("-".to_string(), |r| format!("{:.3e}", r));
        let rows = [
            ("n", self.n.to_string()),
            ("degree", self.degree.to_string()),
            ("trials", self.trials().to_string()),
            ("exact-key successes", self.exact_successes().to_string()),
            ("exact-key rate", fmt_rate(self.exact_rate())),
            ("rel<=1e-6 successes", self.approx_successes().to_string()),
            ("rel<=1e-6 rate", fmt_rate(self.approx_rate())),
            ("median rel residual", fmt_sci(self.median_residual())),
            ("median condition", fmt_sci(self.median_condition())),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<22}{v:>14}");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("trial,relative_residual,condition_estimate,relative_error,exact_key\n");
        for o in &self.outcomes {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{}",
                o.trial, o.relative_residual, o.condition, o.relative_error, o.exact_key
            );
        }
        out
    }
}

/// Runs `trials` independent exchanges and attacks each one.
///
/// Trial `i` draws from `stream.derive(i as u64 LE)`, so results do not
/// depend on scheduling; outcomes are kept in trial order.
pub fn attack_report(
    stream: &SeededStream,
    trials: usize,
    n: usize,
    degree: usize,
    kind: InstanceKind,
) -> Result<AttackSummary> {
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut s = stream.derive(&(i as u64).to_le_bytes());
            let ex = match kind {
                InstanceKind::Random => Exchange::random(&mut s, n)?,
                InstanceKind::Planted => Exchange::planted(&mut s, n)?,
            };
            attack_exchange(&ex, degree, i)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AttackSummary {
        n,
        degree,
        outcomes,
    })
}
