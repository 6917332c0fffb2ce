//! Exact arithmetic in `W_p = Z[t]/Phi_p(t)`, stored in the power basis of
//! the distinguished uniformizer `u = eps - 1`.
//!
//! The modulus is `g(u) = Phi_p(u+1)`, monic of degree `p-1` and Eisenstein
//! at `p` (constant term exactly `p`). The ideal `(u)` is the unique prime
//! over `p`, with `u`-adic valuation `v(p) = p-1`, and `W_p/(u) = F_p`.
//! `p = 2` degenerates to `W_2 = Z` with `u = -2`; the code paths are uniform.
//!
//! A ring may also carry an adjoined root of the uniformizer: for
//! `e >= 2` the ring is `Z[a]/(Phi_p(a^e + 1))` with uniformizer `a`
//! satisfying `a^e = eps - 1`. The shifted modulus is still Eisenstein with
//! constant term exactly `p`, so the whole digit/valuation machinery is
//! unchanged; valuations are then counted in units of `a` and
//! `v(p) = e(p-1)`. Throughout this module "u" names the uniformizer of
//! whichever ring is at hand.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CycError {
    #[error("modulus {0} is not prime")]
    CompositeModulus(u64),
    #[error("element is not a unit in the localization at (u)")]
    NotUnit,
    #[error("exact division failed")]
    NotDivisible,
    #[error("division by zero")]
    DivisionByZero,
}

/// An element of `W_p`, as `sum coeffs[i] * u^i` with `0 <= i < p-1`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycElt {
    pub coeffs: Vec<BigInt>,
}

impl CycElt {
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

impl fmt::Debug for CycElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CycElt{:?}", self.coeffs)
    }
}

/// The ring `W_p` together with its reduced modulus and the unit identities
/// `p = w * u^{p-1}` and `p = -(c'_eps)^{-1} (eps-1)^{p-1}`.
#[derive(Clone, Debug)]
pub struct CycRing {
    p: u64,
    /// Root index: the uniformizer `a` satisfies `a^e = eps - 1`.
    e: u64,
    /// Coefficients of `Phi_p(a^e + 1)`, ascending, monic of degree `e(p-1)`.
    modulus: Vec<BigInt>,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Expand `Phi_p(x+1)` for prime `p`: `((x+1)^p - 1)/x`.
fn phi_p_shifted(p: u64) -> Vec<BigInt> {
    // (x+1)^p = sum binom(p,k) x^k; subtract 1, divide by x.
    let mut binom = vec![BigInt::one()];
    for _ in 0..p {
        let mut next = vec![BigInt::zero(); binom.len() + 1];
        for (k, b) in binom.iter().enumerate() {
            next[k] += b;
            next[k + 1] += b;
        }
        binom = next;
    }
    binom.remove(0); // drops the constant 1 of (x+1)^p, leaving /x shift
    binom
}

impl CycRing {
    pub fn new(p: u64) -> Result<Self, CycError> {
        Self::new_with_root(p, 1)
    }

    /// Ring with an adjoined `e`-th root of `eps - 1` as uniformizer.
    pub fn new_with_root(p: u64, e: u64) -> Result<Self, CycError> {
        if !is_prime(p) {
            return Err(CycError::CompositeModulus(p));
        }
        assert!(e >= 1);
        let g = phi_p_shifted(p);
        // substitute u = a^e: spread the coefficients
        let mut modulus = vec![BigInt::zero(); ((p - 1) * e) as usize + 1];
        for (i, c) in g.into_iter().enumerate() {
            modulus[i * e as usize] = c;
        }
        Ok(CycRing { p, e, modulus })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Root index of the uniformizer over `eps - 1`.
    pub fn root_index(&self) -> u64 {
        self.e
    }

    /// Degree of the extension, `e(p - 1)`.
    pub fn degree(&self) -> usize {
        ((self.p - 1) * self.e) as usize
    }

    pub fn modulus(&self) -> &[BigInt] {
        &self.modulus
    }

    pub fn zero(&self) -> CycElt {
        CycElt {
            coeffs: vec![BigInt::zero(); self.degree()],
        }
    }

    pub fn one(&self) -> CycElt {
        self.from_int(BigInt::one())
    }

    pub fn from_int(&self, n: BigInt) -> CycElt {
        let mut c = vec![BigInt::zero(); self.degree()];
        c[0] = n;
        CycElt { coeffs: c }
    }

    pub fn from_i64(&self, n: i64) -> CycElt {
        self.from_int(BigInt::from(n))
    }

    /// The uniformizer: `eps - 1` when `e = 1`, else the adjoined root `a`.
    pub fn u(&self) -> CycElt {
        let mut c = vec![BigInt::zero(); self.degree()];
        if self.degree() >= 2 {
            c[1] = BigInt::one();
        } else {
            // p = 2, e = 1: the class of a is -2 in Z
            c[0] = BigInt::from(-2);
        }
        CycElt { coeffs: c }
    }

    /// `eps - 1 = u^e`.
    pub fn eps_minus_one(&self) -> CycElt {
        self.pow(&self.u(), self.e)
    }

    /// `eps = u^e + 1`.
    pub fn epsilon(&self) -> CycElt {
        let mut v = self.eps_minus_one();
        v.coeffs[0] += 1;
        v
    }

    /// Build from coefficients in the `u`-basis, reducing mod `g(u)`.
    pub fn from_u_coeffs(&self, coeffs: &[BigInt]) -> CycElt {
        self.reduce(coeffs.to_vec())
    }

    /// Build from coefficients in the `eps`-basis (I/O convenience).
    pub fn from_eps_coeffs(&self, coeffs: &[BigInt]) -> CycElt {
        let eps = self.epsilon();
        let mut acc = self.zero();
        let mut pw = self.one();
        for c in coeffs {
            acc = self.add(&acc, &self.scale(&pw, c));
            pw = self.mul(&pw, &eps);
        }
        acc
    }

    /// Coefficients in the `eps`-basis, via the substitution `u = eps - 1`.
    /// Only meaningful for `e = 1`.
    pub fn to_eps_coeffs(&self, w: &CycElt) -> Vec<BigInt> {
        assert_eq!(self.e, 1, "eps basis requires e = 1");
        // Horner in (eps - 1) over Z[eps]/Phi_p, done symbolically: expand
        // sum c_i (x-1)^i as a polynomial in x.
        let mut out = vec![BigInt::zero(); self.degree()];
        for (i, c) in w.coeffs.iter().enumerate() {
            // (x-1)^i binomials
            let mut row = vec![BigInt::one()];
            for _ in 0..i {
                let mut next = vec![BigInt::zero(); row.len() + 1];
                for (k, b) in row.iter().enumerate() {
                    next[k] -= b;
                    next[k + 1] += b;
                }
                row = next;
            }
            for (k, b) in row.iter().enumerate() {
                out[k] += c * b;
            }
        }
        out
    }

    fn reduce(&self, mut v: Vec<BigInt>) -> CycElt {
        let d = self.degree();
        while v.len() > d {
            let top = v.pop().unwrap();
            if top.is_zero() {
                continue;
            }
            let deg = v.len() - d; // exponent of the leading monomial minus d
            for i in 0..d {
                let t = &top * &self.modulus[i];
                v[deg + i] -= t;
            }
        }
        v.resize(d, BigInt::zero());
        CycElt { coeffs: v }
    }

    pub fn add(&self, a: &CycElt, b: &CycElt) -> CycElt {
        CycElt {
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| x + y)
                .collect(),
        }
    }

    pub fn sub(&self, a: &CycElt, b: &CycElt) -> CycElt {
        CycElt {
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| x - y)
                .collect(),
        }
    }

    pub fn neg(&self, a: &CycElt) -> CycElt {
        CycElt {
            coeffs: a.coeffs.iter().map(|x| -x).collect(),
        }
    }

    pub fn scale(&self, a: &CycElt, k: &BigInt) -> CycElt {
        CycElt {
            coeffs: a.coeffs.iter().map(|x| x * k).collect(),
        }
    }

    pub fn mul(&self, a: &CycElt, b: &CycElt) -> CycElt {
        let d = self.degree();
        let mut v = vec![BigInt::zero(); 2 * d - 1];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                v[i + j] += x * y;
            }
        }
        self.reduce(v)
    }

    pub fn pow(&self, a: &CycElt, mut e: u64) -> CycElt {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Exact division by `u`, or `None` if `w` is not in `(u)`.
    ///
    /// `w` is in `(u)` iff its constant coefficient is divisible by `p`
    /// (since `g(0) = p`); then substitute `p = -(g(u) - p)` and shift.
    pub fn div_u_exact(&self, w: &CycElt) -> Option<CycElt> {
        let p_big = BigInt::from(self.p);
        let (k, rem) = w.coeffs[0].div_rem(&p_big);
        if !rem.is_zero() {
            return None;
        }
        let d = self.degree();
        // w = k*p + sum_{i>=1} c_i u^i, and p = -(sum_{i>=1} a_i u^i + u^{d})
        // with a_i the middle coefficients of g. So
        // w/u = sum_{i>=1} c_i u^{i-1} - k*(u^{d-1} + sum_{i=1}^{d-1} a_i u^{i-1}).
        let mut out = vec![BigInt::zero(); d];
        for i in 1..d {
            out[i - 1] = w.coeffs[i].clone();
        }
        if !k.is_zero() {
            // modulus = a_0(=p), a_1, ..., a_{d-1}, 1(monic at index d)
            for i in 1..=d {
                let a = &self.modulus[i];
                out[i - 1] -= &k * a;
            }
        }
        Some(CycElt { coeffs: out })
    }

    /// `u`-adic valuation; `None` means infinity (`w = 0`).
    pub fn u_valuation(&self, w: &CycElt) -> Option<u64> {
        if w.is_zero() {
            return None;
        }
        let mut v = 0u64;
        let mut cur = w.clone();
        loop {
            match self.div_u_exact(&cur) {
                Some(next) => {
                    v += 1;
                    cur = next;
                }
                None => return Some(v),
            }
        }
    }

    /// The digits `d_0..d_{m-1}` (each in `0..p`) of the canonical
    /// representative of `w` modulo `u^m`.
    pub fn digits(&self, w: &CycElt, m: u64) -> Vec<u64> {
        let p_big = BigInt::from(self.p);
        let mut cur = w.clone();
        let mut out = Vec::with_capacity(m as usize);
        for _ in 0..m {
            let d = cur.coeffs[0].mod_floor(&p_big).to_u64().unwrap();
            out.push(d);
            cur.coeffs[0] -= BigInt::from(d);
            cur = self.div_u_exact(&cur).expect("digit subtraction");
        }
        out
    }

    /// Canonical representative of `w` modulo `(u^m)`: `sum d_i u^i` with
    /// digits in `0..p`.
    pub fn reduce_mod_upow(&self, w: &CycElt, m: u64) -> CycElt {
        let digs = self.digits(w, m);
        let mut acc = self.zero();
        let mut pw = self.one();
        for d in digs {
            acc = self.add(&acc, &self.scale(&pw, &BigInt::from(d)));
            pw = self.mul(&pw, &self.u());
        }
        acc
    }

    /// Residue of `w` in `W_p/(u) = F_p`.
    pub fn residue(&self, w: &CycElt) -> u64 {
        self.digits(w, 1)[0]
    }

    /// Inverse of `w` modulo `u^m`, or `NotUnit` if `w` lies in `(u)`.
    pub fn local_unit_certificate(&self, w: &CycElt, m: u64) -> Result<CycElt, CycError> {
        let r0 = self.residue(w);
        if r0 == 0 {
            return Err(CycError::NotUnit);
        }
        // lift the F_p inverse by Newton iteration v <- v(2 - wv)
        let inv0 = mod_inverse(r0, self.p);
        let mut v = self.from_int(BigInt::from(inv0));
        let mut prec = 1u64;
        while prec < m {
            prec = (2 * prec).min(m);
            let wv = self.mul(w, &v);
            let two_minus = self.sub(&self.from_i64(2), &wv);
            v = self.reduce_mod_upow(&self.mul(&v, &two_minus), prec);
        }
        Ok(self.reduce_mod_upow(&v, m))
    }

    /// The unit `w` with `p = w * u^{e(p-1)}`, by exact division.
    pub fn unit_w(&self) -> CycElt {
        let mut cur = self.from_int(BigInt::from(self.p));
        for _ in 0..self.degree() {
            cur = self.div_u_exact(&cur).expect("v(p) = e(p-1)");
        }
        cur
    }

    /// `c'_eps = -(eps-1)^{p-1}/p`, the evaluation of `C'` at `x = eps, h = 1`;
    /// satisfies `p * c'_eps = -(eps-1)^{p-1}` exactly.
    pub fn c_prime_eps(&self) -> CycElt {
        let upow = self.pow(&self.u(), self.degree() as u64);
        let p_big = BigInt::from(self.p);
        let mut coeffs = Vec::with_capacity(self.degree());
        for c in &self.neg(&upow).coeffs {
            let (q, r) = c.div_rem(&p_big);
            assert!(r.is_zero(), "u^(p-1)/p must be exact");
            coeffs.push(q);
        }
        CycElt { coeffs }
    }

    /// Exact division in `W_p`; `None` if `a` is not a multiple of `b`.
    pub fn divide_exact(&self, a: &CycElt, b: &CycElt) -> Result<CycElt, CycError> {
        if b.is_zero() {
            return Err(CycError::DivisionByZero);
        }
        if a.is_zero() {
            return Ok(self.zero());
        }
        let binv = self.rational_inverse(b).ok_or(CycError::NotDivisible)?;
        // a * b^{-1} over Q, then check integrality
        let d = self.degree();
        let mut prod = vec![BigRational::zero(); 2 * d - 1];
        for (i, x) in a.coeffs.iter().enumerate() {
            for (j, y) in binv.iter().enumerate() {
                prod[i + j] += BigRational::from(x.clone()) * y;
            }
        }
        // reduce mod g over Q
        while prod.len() > d {
            let top = prod.pop().unwrap();
            if top.is_zero() {
                continue;
            }
            let deg = prod.len() - d;
            for i in 0..d {
                let t = &top * BigRational::from(self.modulus[i].clone());
                prod[deg + i] -= t;
            }
        }
        let mut coeffs = Vec::with_capacity(d);
        for q in prod {
            if !q.denom().is_one() {
                return Err(CycError::NotDivisible);
            }
            coeffs.push(q.numer().clone());
        }
        Ok(CycElt { coeffs })
    }

    /// Inverse of `b` in `Q[u]/g(u)` via the extended Euclidean algorithm.
    fn rational_inverse(&self, b: &CycElt) -> Option<Vec<BigRational>> {
        let g: Vec<BigRational> = self
            .modulus
            .iter()
            .map(|c| BigRational::from(c.clone()))
            .collect();
        let bq: Vec<BigRational> = b
            .coeffs
            .iter()
            .map(|c| BigRational::from(c.clone()))
            .collect();
        // extended gcd(g, b) in Q[x]; track cofactor of b only
        let (mut r0, mut r1) = (g, trim(bq));
        let (mut t0, mut t1) = (vec![], vec![BigRational::one()]);
        while !r1.is_empty() {
            let (q, r) = poly_divmod(&r0, &r1);
            let t = poly_sub(&t0, &poly_mul(&q, &t1));
            r0 = r1;
            r1 = r;
            t0 = t1;
            t1 = t;
        }
        if r0.len() != 1 {
            return None; // gcd not constant: b is a zero divisor (impossible in a domain)
        }
        let lead = r0[0].clone();
        let mut inv: Vec<BigRational> = t0.iter().map(|c| c / &lead).collect();
        inv.resize(self.degree(), BigRational::zero());
        Some(inv)
    }

    /// Exact `n`-th root in `W_p`, if one exists.
    ///
    /// Conjugate embeddings pin down the candidate up to the finite choice of
    /// complex roots per embedding; each candidate is rounded to the integer
    /// lattice and verified by exact arithmetic. Desk-scale heights only.
    pub fn nth_root(&self, c: &CycElt, n: u64) -> Option<CycElt> {
        assert!(n >= 1);
        if n == 1 || c.is_zero() {
            return Some(c.clone());
        }
        if self.p == 2 {
            let x = &c.coeffs[0];
            if x.is_negative() && n % 2 == 0 {
                return None;
            }
            let root = if x.is_negative() {
                -((-x).nth_root(n as u32))
            } else {
                x.nth_root(n as u32)
            };
            if num_traits::pow::pow(root.clone(), n as usize) == *x {
                return Some(self.from_int(root));
            }
            return None;
        }
        let d = self.degree();
        // embedding values of c at every complex root a of the modulus:
        // a = (zeta_p^k - 1)^{1/e} * omega_e^j for k in 1..p, j in 0..e
        let tau = 2.0 * std::f64::consts::PI;
        let mut targets = Vec::with_capacity(d);
        for k in 1..self.p {
            let ang = tau * (k as f64) / (self.p as f64);
            let base = Complex64::new(ang.cos() - 1.0, ang.sin());
            let root_r = base.norm().powf(1.0 / self.e as f64);
            for j in 0..self.e {
                let th = (base.arg() + tau * j as f64) / self.e as f64;
                let a = Complex64::from_polar(root_r, th);
                let mut val = Complex64::new(0.0, 0.0);
                for coef in c.coeffs.iter().rev() {
                    val = val * a + Complex64::new(coef.to_f64().unwrap_or(f64::MAX), 0.0);
                }
                targets.push((a, val));
            }
        }
        // odometer over the n^d choices of an n-th root per embedding,
        // capped for safety; each candidate is verified exactly
        let cap: u64 = 300_000;
        if (n as u128).pow(d as u32) > cap as u128 {
            return None;
        }
        let mut choice = vec![0u64; d];
        loop {
            let mut vals = vec![Complex64::new(0.0, 0.0); d];
            for i in 0..d {
                let (_, t) = targets[i];
                let r = t.norm().powf(1.0 / n as f64);
                let th = (t.arg() + tau * choice[i] as f64) / n as f64;
                vals[i] = Complex64::from_polar(r, th);
            }
            if let Some(cand) = self.round_from_embeddings(&targets, &vals) {
                if self.pow(&cand, n) == *c {
                    return Some(cand);
                }
            }
            let mut i = 0;
            loop {
                if i == d {
                    return None;
                }
                choice[i] += 1;
                if choice[i] < n {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }

    /// Solve the complex Vandermonde system for `u`-basis coordinates and
    /// round to integers.
    fn round_from_embeddings(
        &self,
        targets: &[(Complex64, Complex64)],
        vals: &[Complex64],
    ) -> Option<CycElt> {
        let d = self.degree();
        let mut m = vec![vec![Complex64::new(0.0, 0.0); d + 1]; d];
        for (row, ((u, _), v)) in targets.iter().zip(vals).enumerate() {
            let mut pw = Complex64::new(1.0, 0.0);
            for col in 0..d {
                m[row][col] = pw;
                pw *= u;
            }
            m[row][d] = *v;
        }
        // Gaussian elimination with partial pivoting
        for col in 0..d {
            let piv = (col..d).max_by(|&a, &b| {
                m[a][col]
                    .norm()
                    .partial_cmp(&m[b][col].norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if m[piv][col].norm() < 1e-12 {
                return None;
            }
            m.swap(col, piv);
            for row in 0..d {
                if row == col {
                    continue;
                }
                let f = m[row][col] / m[col][col];
                for k in col..=d {
                    let t = m[col][k];
                    m[row][k] -= f * t;
                }
            }
        }
        let mut coeffs = Vec::with_capacity(d);
        for row in 0..d {
            let x = m[row][d] / m[row][row];
            if x.im.abs() > 0.01 {
                return None;
            }
            let r = x.re.round();
            if !r.is_finite() || (x.re - r).abs() > 0.01 {
                return None;
            }
            coeffs.push(BigInt::from(r as i64));
        }
        Some(CycElt { coeffs })
    }
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // Fermat
    let mut acc = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    acc
}

// -- small Q[x] helpers for the extended Euclidean inverse --

fn trim(mut v: Vec<BigRational>) -> Vec<BigRational> {
    while v.last().map(|c| c.is_zero()).unwrap_or(false) {
        v.pop();
    }
    v
}

fn poly_divmod(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = &b[db];
    let mut q = vec![BigRational::zero(); a.len().saturating_sub(db)];
    while r.len() > db {
        let dr = r.len() - 1;
        let f = &r[dr] / lead;
        q[dr - db] = f.clone();
        for i in 0..=db {
            let t = &f * &b[i];
            r[dr - db + i] -= t;
        }
        r = trim(r);
        if r.is_empty() {
            break;
        }
        if r.len() <= db {
            break;
        }
    }
    (trim(q), trim(r))
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    trim(out)
}

/// Summary of `cyclo_ring(p)`: the modulus and the verified unit identities.
#[derive(Clone, Debug, Serialize)]
pub struct RingDesc {
    pub p: u64,
    /// ascending coefficients of `g(u) = Phi_p(u+1)`
    pub modulus: Vec<String>,
    /// the unit `w` with `p = w * u^{p-1}` (u-basis coefficients)
    pub unit_w: Vec<String>,
    /// `c'_eps` with `p = -(c'_eps)^{-1} (eps-1)^{p-1}`
    pub c_prime_eps: Vec<String>,
}

/// Construct `W_p` and verify the `p = w u^{p-1}` and `c'_eps` identities by
/// exact multiplication.
pub fn cyclo_ring(p: u64) -> Result<(CycRing, RingDesc), CycError> {
    let ring = CycRing::new(p)?;
    let w = ring.unit_w();
    let upow = ring.pow(&ring.u(), ring.degree() as u64);
    let p_elt = ring.from_int(BigInt::from(p));
    assert_eq!(ring.mul(&w, &upow), p_elt, "p = w u^(p-1)");
    let cpe = ring.c_prime_eps();
    // p * c'_eps = -u^(p-1)
    assert_eq!(ring.mul(&p_elt, &cpe), ring.neg(&upow), "c'_eps identity");
    let fmt_vec = |e: &CycElt| e.coeffs.iter().map(|c| c.to_string()).collect();
    let desc = RingDesc {
        p,
        modulus: ring.modulus.iter().map(|c| c.to_string()).collect(),
        unit_w: fmt_vec(&w),
        c_prime_eps: fmt_vec(&cpe),
    };
    Ok((ring, desc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn modulus_p3() {
        let r = CycRing::new(3).unwrap();
        // u^2 + 3u + 3
        assert_eq!(
            r.modulus(),
            &[BigInt::from(3), BigInt::from(3), BigInt::from(1)]
        );
    }

    #[test]
    fn eisenstein_shape_p5() {
        // brute-force expansion of Phi_5(u+1): constant 5, middles divisible by 5
        let r = CycRing::new(5).unwrap();
        let g = r.modulus();
        assert_eq!(g[0], BigInt::from(5));
        assert_eq!(*g.last().unwrap(), BigInt::one());
        for c in &g[1..g.len() - 1] {
            assert!((c % 5u64).is_zero(), "middle coefficient {c} not divisible by 5");
        }
    }

    #[test]
    fn p_equals_minus_eps_sq_u_sq() {
        // p=3: (eps-1)^2 = -3 eps, i.e. 3 = -eps^2 (eps-1)^2
        let r = CycRing::new(3).unwrap();
        let eps = r.epsilon();
        let lhs = r.pow(&r.u(), 2);
        let rhs = r.scale(&eps, &BigInt::from(-3));
        assert_eq!(lhs, rhs);
        let three = r.mul(&r.neg(&r.pow(&eps, 2)), &r.pow(&r.u(), 2));
        assert_eq!(three, r.from_i64(3));
    }

    #[test]
    fn composite_rejected() {
        assert_eq!(CycRing::new(6).unwrap_err(), CycError::CompositeModulus(6));
    }

    #[test]
    fn p2_degenerate() {
        let (r, desc) = cyclo_ring(2).unwrap();
        assert_eq!(r.u(), r.from_i64(-2));
        assert_eq!(desc.unit_w, vec!["-1"]);
    }

    #[test]
    fn valuation_of_p_is_p_minus_1() {
        for p in [2u64, 3, 5, 7] {
            let r = CycRing::new(p).unwrap();
            let v = r.u_valuation(&r.from_int(BigInt::from(p))).unwrap();
            assert_eq!(v, p - 1, "p = {p}");
            assert_eq!(r.u_valuation(&r.zero()), None);
        }
    }

    #[test]
    fn valuation_examples_p3() {
        let r = CycRing::new(3).unwrap();
        assert_eq!(r.u_valuation(&r.from_i64(3)), Some(2));
        assert_eq!(r.u_valuation(&r.epsilon()), Some(0));
        assert_eq!(r.u_valuation(&r.from_i64(27)), Some(6));
    }

    #[test]
    fn local_unit_certificates() {
        let r = CycRing::new(3).unwrap();
        // w=2, m=2 -> v=2 since 4-1=3 in (u^2)
        let v = r.local_unit_certificate(&r.from_i64(2), 2).unwrap();
        let prod = r.mul(&r.from_i64(2), &v);
        let diff = r.sub(&prod, &r.one());
        assert!(r.u_valuation(&diff).map(|m| m >= 2).unwrap_or(true));
        assert_eq!(r.reduce_mod_upow(&v, 2), r.reduce_mod_upow(&r.from_i64(2), 2));
        // eps inverse is eps^2
        let vi = r.local_unit_certificate(&r.epsilon(), 5).unwrap();
        let prod = r.mul(&r.epsilon(), &vi);
        assert!(r.u_valuation(&r.sub(&prod, &r.one())).map(|m| m >= 5).unwrap_or(true));
        // eps - 1 is not a local unit
        assert_eq!(
            r.local_unit_certificate(&r.u(), 1).unwrap_err(),
            CycError::NotUnit
        );
    }

    #[test]
    fn exact_division() {
        let r = CycRing::new(3).unwrap();
        // 3/(eps-1) = -eps^2 (eps-1)
        let q = r.divide_exact(&r.from_i64(3), &r.u()).unwrap();
        let expected = r.mul(&r.neg(&r.pow(&r.epsilon(), 2)), &r.u());
        assert_eq!(q, expected);
        assert!(r.divide_exact(&r.one(), &r.from_i64(2)).is_err());
    }

    #[test]
    fn nth_root_exact() {
        let r = CycRing::new(3).unwrap();
        assert_eq!(r.nth_root(&r.from_i64(27), 3), Some(r.from_i64(3)));
        let e2 = r.pow(&r.epsilon(), 2);
        let c = r.pow(&e2, 3);
        let root = r.nth_root(&c, 3).expect("eps^6 has a cube root");
        assert_eq!(r.pow(&root, 3), c);
        assert_eq!(r.nth_root(&r.from_i64(2), 3), None);
        let r2 = CycRing::new(2).unwrap();
        assert_eq!(r2.nth_root(&r2.from_i64(49), 2), Some(r2.from_i64(7)));
        assert_eq!(r2.nth_root(&r2.from_i64(-8), 3), Some(r2.from_i64(-2)));
        assert_eq!(r2.nth_root(&r2.from_i64(-4), 2), None);
    }

    fn arb_elt(p: u64) -> impl Strategy<Value = CycElt> {
        let d = (p - 1) as usize;
        proptest::collection::vec(-50i64..50, d).prop_map(move |v| CycElt {
            coeffs: v.into_iter().map(BigInt::from).collect(),
        })
    }

    proptest! {
        #[test]
        fn ring_axioms_p5(a in arb_elt(5), b in arb_elt(5), c in arb_elt(5)) {
            let r = CycRing::new(5).unwrap();
            let ab_c = r.mul(&r.mul(&a, &b), &c);
            let a_bc = r.mul(&a, &r.mul(&b, &c));
            prop_assert_eq!(&ab_c, &a_bc);
            let distl = r.mul(&a, &r.add(&b, &c));
            let distr = r.add(&r.mul(&a, &b), &r.mul(&a, &c));
            prop_assert_eq!(&distl, &distr);
        }

        #[test]
        fn unit_certificate_precision_p3(a in arb_elt(3), m in 1u64..8) {
            let r = CycRing::new(3).unwrap();
            if let Ok(v) = r.local_unit_certificate(&a, m) {
                let diff = r.sub(&r.mul(&a, &v), &r.one());
                prop_assert!(r.u_valuation(&diff).map(|k| k >= m).unwrap_or(true));
            }
        }

        #[test]
        fn eps_basis_roundtrip(a in arb_elt(5)) {
            let r = CycRing::new(5).unwrap();
            let eps = r.to_eps_coeffs(&a);
            prop_assert_eq!(r.from_eps_coeffs(&eps), a);
        }

        #[test]
        fn reduce_is_homomorphism(a in arb_elt(3), b in arb_elt(3), m in 1u64..6) {
            let r = CycRing::new(3).unwrap();
            let lhs = r.reduce_mod_upow(&r.mul(&a, &b), m);
            let rhs = r.reduce_mod_upow(
                &r.mul(&r.reduce_mod_upow(&a, m), &r.reduce_mod_upow(&b, m)), m);
            prop_assert_eq!(lhs, rhs);
        }
    }
}
