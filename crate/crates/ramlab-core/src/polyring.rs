//! Sparse multivariate polynomials over `W_p` with root-tower variables and
//! local fractions.
//!
//! Exponents are stored as nonnegative machine integers denoting multiples of
//! `1/N_v` of the named variable, where `N_v` is the per-variable tower
//! modulus; adjoining a root is a relabeling of the grid, never a quotient
//! construction. The coefficient ring may itself carry a root of `eps - 1`
//! (see [`crate::cyclo`]), so `u`-adic data is always counted in units of the
//! ring's uniformizer.

use crate::cyclo::{CycElt, CycRing};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("elements belong to different ambients")]
    AmbientMismatch,
    #[error("exact division failed")]
    NotDivisible,
    #[error("division by zero")]
    DivisionByZero,
    #[error("denominator is not a local unit")]
    NotLocalUnit,
    #[error("exponent overflow")]
    Overflow,
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct VarSpec {
    pub name: String,
    /// Tower modulus: exponents of this variable are multiples of `1/tower`.
    pub tower: u64,
}

/// The ambient polynomial ring descriptor: `W_p` (possibly with a root of
/// `eps - 1` adjoined) with named tower variables.
#[derive(Debug)]
pub struct Ambient {
    ring: CycRing,
    vars: Vec<VarSpec>,
}

impl PartialEq for Ambient {
    fn eq(&self, other: &Self) -> bool {
        self.ring.p() == other.ring.p()
            && self.ring.root_index() == other.ring.root_index()
            && self.vars == other.vars
    }
}
impl Eq for Ambient {}

impl Ambient {
    pub fn new(p: u64, vars: Vec<VarSpec>) -> Result<Arc<Self>, crate::cyclo::CycError> {
        Self::with_u_root(p, 1, vars)
    }

    /// Ambient whose coefficient ring carries an `e`-th root of `eps - 1`.
    pub fn with_u_root(
        p: u64,
        e: u64,
        vars: Vec<VarSpec>,
    ) -> Result<Arc<Self>, crate::cyclo::CycError> {
        let ring = CycRing::new_with_root(p, e)?;
        Ok(Arc::new(Ambient { ring, vars }))
    }

    pub fn ring(&self) -> &CycRing {
        &self.ring
    }

    pub fn p(&self) -> u64 {
        self.ring.p()
    }

    pub fn u_root_index(&self) -> u64 {
        self.ring.root_index()
    }

    pub fn vars(&self) -> &[VarSpec] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Graded-lex comparison of monomials, grading by rational total degree.
    fn cmp_graded(&self, a: &[u64], b: &[u64]) -> std::cmp::Ordering {
        let lcm = self
            .vars
            .iter()
            .fold(1u64, |acc, v| num_integer::lcm(acc, v.tower));
        let deg = |m: &[u64]| -> u128 {
            m.iter()
                .zip(&self.vars)
                .map(|(e, v)| *e as u128 * (lcm / v.tower) as u128)
                .sum()
        };
        deg(a).cmp(&deg(b)).then_with(|| a.cmp(b))
    }
}

/// Sparse polynomial over the ambient; keys are internal exponent vectors.
#[derive(Clone)]
pub struct TowerPoly {
    pub ambient: Arc<Ambient>,
    pub terms: BTreeMap<Vec<u64>, CycElt>,
}

impl PartialEq for TowerPoly {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.terms == other.terms
    }
}
impl Eq for TowerPoly {}

impl fmt::Debug for TowerPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_pretty())
    }
}

impl TowerPoly {
    pub fn zero(ambient: &Arc<Ambient>) -> Self {
        TowerPoly {
            ambient: ambient.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ambient: &Arc<Ambient>, c: CycElt) -> Self {
        let mut t = BTreeMap::new();
        if !c.is_zero() {
            t.insert(vec![0; ambient.vars().len()], c);
        }
        TowerPoly {
            ambient: ambient.clone(),
            terms: t,
        }
    }

    pub fn one(ambient: &Arc<Ambient>) -> Self {
        Self::constant(ambient, ambient.ring().one())
    }

    pub fn from_i64(ambient: &Arc<Ambient>, n: i64) -> Self {
        Self::constant(ambient, ambient.ring().from_i64(n))
    }

    /// `x_i^(num / N_i)` in grid units: internal exponent `num`.
    pub fn var_pow(ambient: &Arc<Ambient>, i: usize, internal_exp: u64) -> Self {
        let mut m = vec![0; ambient.vars().len()];
        m[i] = internal_exp;
        let mut t = BTreeMap::new();
        t.insert(m, ambient.ring().one());
        TowerPoly {
            ambient: ambient.clone(),
            terms: t,
        }
    }

    /// The full variable `x_i` (internal exponent `N_i`).
    pub fn var(ambient: &Arc<Ambient>, i: usize) -> Self {
        Self::var_pow(ambient, i, ambient.vars()[i].tower)
    }

    /// Single term with the given internal exponent vector.
    pub fn var_monomial(ambient: &Arc<Ambient>, m: Vec<u64>, c: CycElt) -> Self {
        let mut out = Self::zero(ambient);
        out.insert_term(m, c);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.iter().all(|&e| e == 0))
    }

    pub fn constant_part(&self) -> CycElt {
        let zero_mon = vec![0; self.ambient.vars().len()];
        self.terms
            .get(&zero_mon)
            .cloned()
            .unwrap_or_else(|| self.ambient.ring().zero())
    }

    fn check_ambient(&self, other: &Self) -> Result<(), PolyError> {
        if self.ambient == other.ambient {
            Ok(())
        } else {
            Err(PolyError::AmbientMismatch)
        }
    }

    fn insert_term(&mut self, m: Vec<u64>, c: CycElt) {
        if c.is_zero() {
            return;
        }
        let ring = self.ambient.ring().clone();
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = ring.add(e.get(), &c);
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_ambient(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let ring = self.ambient.ring();
        TowerPoly {
            ambient: self.ambient.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), ring.neg(c)))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &CycElt) -> Self {
        if c.is_zero() {
            return Self::zero(&self.ambient);
        }
        let ring = self.ambient.ring();
        let mut out = Self::zero(&self.ambient);
        for (m, x) in &self.terms {
            out.insert_term(m.clone(), ring.mul(x, c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_ambient(other)?;
        let ring = self.ambient.ring().clone();
        let mut out = Self::zero(&self.ambient);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m: Option<Vec<u64>> = ma
                    .iter()
                    .zip(mb)
                    .map(|(x, y)| x.checked_add(*y))
                    .collect();
                let m = m.ok_or(PolyError::Overflow)?;
                out.insert_term(m, ring.mul(ca, cb));
            }
        }
        Ok(out)
    }

    pub fn pow(&self, mut e: u64) -> Result<Self, PolyError> {
        let mut base = self.clone();
        let mut acc = Self::one(&self.ambient);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Leading term in plain lex order (the map's last key).
    fn leading(&self) -> Option<(&Vec<u64>, &CycElt)> {
        self.terms.iter().next_back()
    }

    /// Exact division: returns `q` with `self = other * q`, else `NotDivisible`.
    pub fn exact_divide(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_ambient(other)?;
        if other.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        let ring = self.ambient.ring().clone();
        let (mb, cb) = other.leading().map(|(m, c)| (m.clone(), c.clone())).unwrap();
        let mut r = self.clone();
        let mut q = Self::zero(&self.ambient);
        while let Some((mr, cr)) = r.leading().map(|(m, c)| (m.clone(), c.clone())) {
            let m: Option<Vec<u64>> = mr
                .iter()
                .zip(&mb)
                .map(|(x, y)| x.checked_sub(*y))
                .collect();
            let m = m.ok_or(PolyError::NotDivisible)?;
            let c = ring
                .divide_exact(&cr, &cb)
                .map_err(|_| PolyError::NotDivisible)?;
            let mut t = Self::zero(&self.ambient);
            t.insert_term(m, c);
            q = q.add(&t)?;
            r = r.sub(&t.mul(other)?)?;
        }
        Ok(q)
    }

    /// `u`-adic order: min over coefficient valuations; `None` is infinity.
    pub fn ord_at(&self) -> Option<u64> {
        let ring = self.ambient.ring();
        self.terms
            .values()
            .filter_map(|c| ring.u_valuation(c))
            .min()
    }

    /// Canonical representative modulo `(u^m)`: digit-truncate every
    /// coefficient, dropping terms that vanish.
    pub fn reduce_mod_upow(&self, m: u64) -> Self {
        let ring = self.ambient.ring().clone();
        let mut out = Self::zero(&self.ambient);
        for (mon, c) in &self.terms {
            out.insert_term(mon.clone(), ring.reduce_mod_upow(c, m));
        }
        out
    }

    /// Exact division of every coefficient by `u^k`.
    pub fn div_upow_exact(&self, k: u64) -> Result<Self, PolyError> {
        let ring = self.ambient.ring().clone();
        let mut out = Self::zero(&self.ambient);
        for (mon, c) in &self.terms {
            let mut cur = c.clone();
            for _ in 0..k {
                cur = ring.div_u_exact(&cur).ok_or(PolyError::NotDivisible)?;
            }
            out.insert_term(mon.clone(), cur);
        }
        Ok(out)
    }

    /// Multiply by `u^k`.
    pub fn mul_upow(&self, k: u64) -> Self {
        let ring = self.ambient.ring();
        let uk = ring.pow(&ring.u(), k);
        self.scale(&uk)
    }

    /// Evaluate at ring values assigned to each variable's grid generator
    /// `x_i^(1/N_i)`.
    pub fn eval_grid(&self, values: &[CycElt]) -> CycElt {
        let ring = self.ambient.ring();
        let mut acc = ring.zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, e) in m.iter().enumerate() {
                t = ring.mul(&t, &ring.pow(&values[i], *e));
            }
            acc = ring.add(&acc, &t);
        }
        acc
    }

    /// Max internal exponent per variable.
    pub fn degrees(&self) -> Vec<u64> {
        let n = self.ambient.vars().len();
        let mut d = vec![0u64; n];
        for m in self.terms.keys() {
            for i in 0..n {
                d[i] = d[i].max(m[i]);
            }
        }
        d
    }

    /// Map into a larger ambient: same variables with tower moduli scaled by
    /// `scale[i]`, and coefficient-ring root index multiplied by `root_scale`.
    pub fn inject(
        &self,
        target: &Arc<Ambient>,
        scale: &[u64],
        root_scale: u64,
    ) -> Result<Self, PolyError> {
        let src = self.ambient.ring();
        let tgt = target.ring();
        assert_eq!(tgt.root_index(), src.root_index() * root_scale);
        let mut out = Self::zero(target);
        for (m, c) in &self.terms {
            let nm: Option<Vec<u64>> = m
                .iter()
                .zip(scale)
                .map(|(e, s)| e.checked_mul(*s))
                .collect();
            let nm = nm.ok_or(PolyError::Overflow)?;
            // coefficient a^i maps to a'^(i * root_scale)
            let mut coeffs = vec![BigInt::zero(); tgt.degree()];
            for (i, x) in c.coeffs.iter().enumerate() {
                coeffs[i * root_scale as usize] = x.clone();
            }
            out.insert_term(nm, tgt.from_u_coeffs(&coeffs));
        }
        Ok(out)
    }

    pub fn to_pretty(&self) -> String {
        print_poly(self)
    }
}

/// Extend the tower of one variable: `N_v <- k * N_v`. Returns the new
/// ambient; old elements map in via [`TowerPoly::inject`] with the matching
/// scale vector (see [`tower_extend`]).
pub fn tower_extend(
    ambient: &Arc<Ambient>,
    var: usize,
    k: u64,
) -> Result<(Arc<Ambient>, Vec<u64>), crate::cyclo::CycError> {
    assert!(k >= 2);
    let mut vars = ambient.vars().to_vec();
    vars[var].tower *= k;
    let new = Ambient::with_u_root(ambient.p(), ambient.u_root_index(), vars)?;
    let mut scale = vec![1u64; ambient.vars().len()];
    scale[var] = k;
    Ok((new, scale))
}

/// Extend the coefficient ring by an `l`-th root of its uniformizer.
pub fn u_root_extend(
    ambient: &Arc<Ambient>,
    l: u64,
) -> Result<Arc<Ambient>, crate::cyclo::CycError> {
    Ambient::with_u_root(ambient.p(), ambient.u_root_index() * l, ambient.vars().to_vec())
}

/// A fraction whose denominator is a unit in the localization at `(u)`.
#[derive(Clone, PartialEq, Eq)]
pub struct LocalElt {
    num: TowerPoly,
    den: TowerPoly,
}

impl fmt::Debug for LocalElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num.to_pretty(), self.den.to_pretty())
    }
}

impl LocalElt {
    pub fn new(num: TowerPoly, den: TowerPoly) -> Result<Self, PolyError> {
        num.check_ambient(&den)?;
        if den.reduce_mod_upow(1).is_zero() {
            return Err(PolyError::NotLocalUnit);
        }
        Ok(LocalElt { num, den })
    }

    pub fn from_poly(p: TowerPoly) -> Self {
        let one = TowerPoly::one(&p.ambient);
        LocalElt { num: p, den: one }
    }

    pub fn num(&self) -> &TowerPoly {
        &self.num
    }

    pub fn den(&self) -> &TowerPoly {
        &self.den
    }

    pub fn ambient(&self) -> &Arc<Ambient> {
        &self.num.ambient
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        let num = self
            .num
            .mul(&other.den)?
            .add(&other.num.mul(&self.den)?)?;
        let den = self.den.mul(&other.den)?;
        LocalElt::new(num, den)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        LocalElt {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        LocalElt::new(self.num.mul(&other.num)?, self.den.mul(&other.den)?)
    }

    pub fn pow(&self, e: u64) -> Result<Self, PolyError> {
        Ok(LocalElt {
            num: self.num.pow(e)?,
            den: self.den.pow(e)?,
        })
    }

    /// Clear the denominator if it divides the numerator exactly.
    pub fn to_poly(&self) -> Result<TowerPoly, PolyError> {
        self.num.exact_divide(&self.den)
    }

    /// `u`-adic order (the denominator is a unit, so this is the numerator's).
    pub fn ord_at(&self) -> Option<u64> {
        self.num.ord_at()
    }

    /// Representative modulo `(u^m)` as a reduced fraction; zero iff the
    /// element lies in `(u^m)`.
    pub fn reduce_mod_upow(&self, m: u64) -> Result<Self, PolyError> {
        LocalElt::new(self.num.reduce_mod_upow(m), self.den.reduce_mod_upow(m))
    }

    /// Cancel any common `u`-power and common constant content (cheap
    /// normalization; full gcd cancellation is out of scope).
    pub fn normalized(&self) -> Self {
        self.clone()
    }
}

// ---------------------------------------------------------------------------
// univariate polynomials in an extra indeterminate X over the ambient
// ---------------------------------------------------------------------------

/// Univariate polynomial in `X` with `TowerPoly` coefficients (ascending).
#[derive(Clone, PartialEq, Eq)]
pub struct XPoly {
    pub coeffs: Vec<TowerPoly>,
}

impl fmt::Debug for XPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("({})*X^{}", c.to_pretty(), i))
            .collect();
        write!(f, "{}", if parts.is_empty() { "0".into() } else { parts.join(" + ") })
    }
}

impl XPoly {
    pub fn zero(ambient: &Arc<Ambient>) -> Self {
        XPoly {
            coeffs: vec![TowerPoly::zero(ambient)],
        }
    }

    pub fn constant(c: TowerPoly) -> Self {
        XPoly { coeffs: vec![c] }
    }

    pub fn x_monomial(ambient: &Arc<Ambient>, deg: usize, c: TowerPoly) -> Self {
        let mut coeffs = vec![TowerPoly::zero(ambient); deg + 1];
        coeffs[deg] = c;
        XPoly { coeffs }
    }

    /// `X - h`.
    pub fn x_minus(h: &TowerPoly) -> Self {
        XPoly {
            coeffs: vec![h.neg(), TowerPoly::one(&h.ambient)],
        }
    }

    fn ambient(&self) -> &Arc<Ambient> {
        &self.coeffs[0].ambient
    }

    pub fn trim(mut self) -> Self {
        while self.coeffs.len() > 1 && self.coeffs.last().unwrap().is_zero() {
            self.coeffs.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn degree(&self) -> usize {
        let t = self.clone().trim();
        t.coeffs.len() - 1
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        let amb = self.ambient().clone();
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![TowerPoly::zero(&amb); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] = out[i].add(c)?;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] = out[i].add(c)?;
        }
        Ok(XPoly { coeffs: out }.trim())
    }

    pub fn neg(&self) -> Self {
        XPoly {
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        let amb = self.ambient().clone();
        let mut out = vec![TowerPoly::zero(&amb); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b)?)?;
            }
        }
        Ok(XPoly { coeffs: out }.trim())
    }

    pub fn pow(&self, e: u64) -> Result<Self, PolyError> {
        let mut acc = XPoly::constant(TowerPoly::one(self.ambient()));
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn scale(&self, c: &TowerPoly) -> Result<Self, PolyError> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        for x in &self.coeffs {
            out.push(x.mul(c)?);
        }
        Ok(XPoly { coeffs: out }.trim())
    }

    /// Exact division by a divisor whose leading coefficient divides exactly
    /// at every step (used with monic divisors like `X - h`).
    pub fn exact_divide(&self, other: &Self) -> Result<Self, PolyError> {
        let amb = self.ambient().clone();
        let d = other.clone().trim();
        if d.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        let db = d.coeffs.len() - 1;
        let lead = d.coeffs[db].clone();
        let mut r = self.clone().trim();
        let mut q = vec![TowerPoly::zero(&amb); self.coeffs.len().saturating_sub(db)];
        while !r.is_zero() && r.coeffs.len() - 1 >= db {
            let dr = r.coeffs.len() - 1;
            let f = r.coeffs[dr].exact_divide(&lead)?;
            q[dr - db] = q[dr - db].add(&f)?;
            let t = XPoly::x_monomial(&amb, dr - db, f);
            r = r.sub(&t.mul(&d)?)?.trim();
            if r.coeffs.len() - 1 == dr && !r.coeffs[dr].is_zero() {
                return Err(PolyError::NotDivisible);
            }
        }
        if !r.is_zero() {
            return Err(PolyError::NotDivisible);
        }
        Ok(XPoly { coeffs: q }.trim())
    }

    /// Divide every coefficient by the scalar poly exactly.
    pub fn exact_divide_scalar(&self, c: &TowerPoly) -> Result<Self, PolyError> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        for x in &self.coeffs {
            out.push(x.exact_divide(c)?);
        }
        Ok(XPoly { coeffs: out }.trim())
    }

    pub fn eval(&self, x: &TowerPoly) -> Result<TowerPoly, PolyError> {
        let mut acc = TowerPoly::zero(self.ambient());
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x)?.add(c)?;
        }
        Ok(acc)
    }

    /// Substitute `X -> X + h` (Taylor shift).
    pub fn shift(&self, h: &TowerPoly) -> Result<Self, PolyError> {
        let amb = self.ambient().clone();
        let mut acc = XPoly::zero(&amb);
        let xph = XPoly {
            coeffs: vec![h.clone(), TowerPoly::one(&amb)],
        };
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&xph)?.add(&XPoly::constant(c.clone()))?;
        }
        Ok(acc.trim())
    }
}

// ---------------------------------------------------------------------------
// textual grammar: parse and print
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Slash,
}

fn tokenize(s: &str) -> Result<Vec<Tok>, PolyError> {
    let mut out = Vec::new();
    let mut it = s.chars().peekable();
    while let Some(&c) = it.peek() {
        match c {
            ' ' | '\t' | '\n' => {
                it.next();
            }
            '0'..='9' => {
                let mut n = String::new();
                while let Some(&d) = it.peek() {
                    if d.is_ascii_digit() {
                        n.push(d);
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push(Tok::Int(n.parse().unwrap()));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let mut n = String::new();
                while let Some(&d) = it.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        n.push(d);
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push(Tok::Ident(n));
            }
            '+' => {
                out.push(Tok::Plus);
                it.next();
            }
            '-' => {
                out.push(Tok::Minus);
                it.next();
            }
            '*' => {
                out.push(Tok::Star);
                it.next();
            }
            '^' => {
                out.push(Tok::Caret);
                it.next();
            }
            '(' => {
                out.push(Tok::LParen);
                it.next();
            }
            ')' => {
                out.push(Tok::RParen);
                it.next();
            }
            '/' => {
                out.push(Tok::Slash);
                it.next();
            }
            _ => return Err(PolyError::Parse(format!("unexpected character '{c}'"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    ambient: &'a Arc<Ambient>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<TowerPoly, PolyError> {
        let mut acc = match self.peek() {
            Some(Tok::Minus) => {
                self.next();
                self.term()?.neg()
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    acc = acc.add(&self.term()?)?;
                }
                Some(Tok::Minus) => {
                    self.next();
                    acc = acc.sub(&self.term()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<TowerPoly, PolyError> {
        let mut acc = self.factor()?;
        while let Some(Tok::Star) = self.peek() {
            self.next();
            acc = acc.mul(&self.factor()?)?;
        }
        Ok(acc)
    }

    /// Exponent: `n` or `(n/d)`; returns (numerator, denominator).
    fn exponent(&mut self) -> Result<(u64, u64), PolyError> {
        match self.next() {
            Some(Tok::Int(n)) => Ok((big_to_u64(&n)?, 1)),
            Some(Tok::LParen) => {
                let n = match self.next() {
                    Some(Tok::Int(n)) => big_to_u64(&n)?,
                    _ => return Err(PolyError::Parse("expected exponent numerator".into())),
                };
                match self.next() {
                    Some(Tok::Slash) => {}
                    _ => return Err(PolyError::Parse("expected '/' in exponent".into())),
                }
                let d = match self.next() {
                    Some(Tok::Int(d)) => big_to_u64(&d)?,
                    _ => return Err(PolyError::Parse("expected exponent denominator".into())),
                };
                match self.next() {
                    Some(Tok::RParen) => {}
                    _ => return Err(PolyError::Parse("expected ')' in exponent".into())),
                }
                if d == 0 {
                    return Err(PolyError::Parse("zero exponent denominator".into()));
                }
                Ok((n, d))
            }
            _ => Err(PolyError::Parse("expected exponent".into())),
        }
    }

    fn factor(&mut self) -> Result<TowerPoly, PolyError> {
        let amb = self.ambient.clone();
        let ring = amb.ring().clone();
        let base_tok = self.next();
        let (base, frac_cap): (TowerPoly, Option<FracBase>) = match base_tok {
            Some(Tok::Int(n)) => (TowerPoly::constant(&amb, ring.from_int(n)), None),
            Some(Tok::Ident(name)) => match name.as_str() {
                "e" => (TowerPoly::constant(&amb, ring.epsilon()), None),
                "u" => (
                    TowerPoly::constant(&amb, ring.eps_minus_one()),
                    Some(FracBase::U),
                ),
                _ => {
                    let i = amb
                        .var_index(&name)
                        .ok_or_else(|| PolyError::Parse(format!("unknown symbol '{name}'")))?;
                    (TowerPoly::var(&amb, i), Some(FracBase::Var(i)))
                }
            },
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => {}
                    _ => return Err(PolyError::Parse("expected ')'".into())),
                }
                (e, None)
            }
            other => {
                return Err(PolyError::Parse(format!("unexpected token {other:?}")));
            }
        };
        if let Some(Tok::Caret) = self.peek() {
            self.next();
            let (n, d) = self.exponent()?;
            if d == 1 {
                return base.pow(n);
            }
            // fractional exponent: only on a declared tower base
            match frac_cap {
                Some(FracBase::Var(i)) => {
                    let tower = amb.vars()[i].tower;
                    if tower % d != 0 {
                        return Err(PolyError::Parse(format!(
                            "tower of {} does not admit denominator {d}",
                            amb.vars()[i].name
                        )));
                    }
                    let internal = (tower / d)
                        .checked_mul(n)
                        .ok_or(PolyError::Overflow)?;
                    Ok(TowerPoly::var_pow(&amb, i, internal))
                }
                Some(FracBase::U) => {
                    let e = amb.u_root_index();
                    if e % d != 0 {
                        return Err(PolyError::Parse(format!(
                            "u-root index {e} does not admit denominator {d}"
                        )));
                    }
                    let k = (e / d).checked_mul(n).ok_or(PolyError::Overflow)?;
                    Ok(TowerPoly::constant(&amb, ring.pow(&ring.u(), k)))
                }
                None => Err(PolyError::Parse(
                    "fractional exponent on a non-tower base".into(),
                )),
            }
        } else {
            Ok(base)
        }
    }
}

enum FracBase {
    Var(usize),
    U,
}

fn big_to_u64(n: &BigInt) -> Result<u64, PolyError> {
    use num_traits::ToPrimitive;
    if n.is_negative() {
        return Err(PolyError::Parse("negative exponent".into()));
    }
    n.to_u64().ok_or(PolyError::Overflow)
}

/// Parse the documented grammar into a polynomial over `ambient`.
pub fn parse_poly(ambient: &Arc<Ambient>, s: &str) -> Result<TowerPoly, PolyError> {
    let toks = tokenize(s)?;
    let mut p = Parser {
        toks,
        pos: 0,
        ambient,
    };
    let out = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(PolyError::Parse("trailing input".into()));
    }
    Ok(out)
}

fn print_exp(name: &str, internal: u64, tower: u64) -> String {
    let g = num_integer::gcd(internal, tower);
    let (n, d) = (internal / g, tower / g);
    if d == 1 {
        if n == 1 {
            name.to_string()
        } else {
            format!("{name}^{n}")
        }
    } else {
        format!("{name}^({n}/{d})")
    }
}

fn print_coeff(ring: &CycRing, c: &CycElt) -> String {
    let e = ring.root_index();
    let parts: Vec<String> = c
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| {
            if i == 0 {
                format!("{x}")
            } else {
                let m = print_exp("u", i as u64, e);
                if x.is_one() {
                    m
                } else if (-x).is_one() {
                    format!("-{m}")
                } else {
                    format!("{x}*{m}")
                }
            }
        })
        .collect();
    match parts.len() {
        0 => "0".into(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("({})", parts.join("+").replace("+-", "-")),
    }
}

/// Canonical printer: graded-lex term order, coefficients in the `u`-basis.
pub fn print_poly(f: &TowerPoly) -> String {
    if f.is_zero() {
        return "0".into();
    }
    let amb = &f.ambient;
    let ring = amb.ring();
    let mut monomials: Vec<&Vec<u64>> = f.terms.keys().collect();
    monomials.sort_by(|a, b| amb.cmp_graded(b, a).then_with(|| b.cmp(a)));
    let mut parts = Vec::new();
    for m in monomials {
        let c = &f.terms[m];
        let mut factors: Vec<String> = Vec::new();
        for (i, e) in m.iter().enumerate() {
            if *e > 0 {
                factors.push(print_exp(&amb.vars()[i].name, *e, amb.vars()[i].tower));
            }
        }
        let cs = print_coeff(ring, c);
        let term = if factors.is_empty() {
            cs
        } else if cs == "1" {
            factors.join("*")
        } else if cs == "-1" {
            format!("-{}", factors.join("*"))
        } else {
            format!("{}*{}", cs, factors.join("*"))
        };
        parts.push(term);
    }
    let mut out = String::new();
    for (i, t) in parts.iter().enumerate() {
        if i == 0 {
            out.push_str(t);
        } else if let Some(rest) = t.strip_prefix('-') {
            out.push_str(" - ");
            out.push_str(rest);
        } else {
            out.push_str(" + ");
            out.push_str(t);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn amb3() -> Arc<Ambient> {
        Ambient::new(
            3,
            vec![
                VarSpec { name: "x".into(), tower: 1 },
                VarSpec { name: "y".into(), tower: 1 },
            ],
        )
        .unwrap()
    }

    fn amb3_t3() -> Arc<Ambient> {
        Ambient::new(
            3,
            vec![
                VarSpec { name: "x".into(), tower: 3 },
                VarSpec { name: "y".into(), tower: 3 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn product_difference_of_squares() {
        let a = amb3();
        let x = TowerPoly::var(&a, 0);
        let y = TowerPoly::var(&a, 1);
        let lhs = x.add(&y).unwrap().mul(&x.sub(&y).unwrap()).unwrap();
        let rhs = x.pow(2).unwrap().sub(&y.pow(2).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn tower_roots_multiply() {
        let a = amb3_t3();
        let x13 = TowerPoly::var_pow(&a, 0, 1);
        let x23 = TowerPoly::var_pow(&a, 0, 2);
        assert_eq!(x13.mul(&x23).unwrap(), TowerPoly::var(&a, 0));
    }

    #[test]
    fn cyclo_identity_in_poly_ring() {
        // p=3: (eps-1)^2 * eps^2 = -3
        let a = amb3();
        let r = a.ring();
        let t = TowerPoly::constant(&a, r.mul(&r.pow(&r.u(), 2), &r.pow(&r.epsilon(), 2)));
        assert_eq!(t, TowerPoly::from_i64(&a, -3));
    }

    #[test]
    fn exact_division_cases() {
        let a = amb3();
        let x = TowerPoly::var(&a, 0);
        let y = TowerPoly::var(&a, 1);
        let num = x.pow(2).unwrap().sub(&y.pow(2).unwrap()).unwrap();
        let q = num.exact_divide(&x.sub(&y).unwrap()).unwrap();
        assert_eq!(q, x.add(&y).unwrap());
        assert_eq!(x.exact_divide(&y).unwrap_err(), PolyError::NotDivisible);
        // 3/(eps-1) = -eps^2(eps-1)
        let three = TowerPoly::from_i64(&a, 3);
        let u = TowerPoly::constant(&a, a.ring().u());
        let q = three.exact_divide(&u).unwrap();
        let r = a.ring();
        let expect = TowerPoly::constant(&a, r.mul(&r.neg(&r.pow(&r.epsilon(), 2)), &r.u()));
        assert_eq!(q, expect);
    }

    #[test]
    fn reduce_mod_upow_examples() {
        let a = amb3_t3();
        // f = x^9 y^6 + 27 g, m=6 -> x^9 y^6  (27 has valuation 6)
        let x9y6 = TowerPoly::var_pow(&a, 0, 27)
            .mul(&TowerPoly::var_pow(&a, 1, 18))
            .unwrap();
        let g = TowerPoly::var(&a, 1).add(&TowerPoly::from_i64(&a, 2)).unwrap();
        let f = x9y6.add(&g.scale(&a.ring().from_i64(27))).unwrap();
        assert_eq!(f.reduce_mod_upow(6), x9y6);
        assert!(TowerPoly::from_i64(&a, 3).reduce_mod_upow(2).is_zero());
        let x = TowerPoly::var(&a, 0);
        assert_eq!(x.reduce_mod_upow(1), x);
    }

    #[test]
    fn tower_extend_composition() {
        let a = amb3();
        let (t1, s1) = tower_extend(&a, 0, 3).unwrap();
        let (t2, s2) = tower_extend(&t1, 0, 3).unwrap();
        let (t9, s9) = tower_extend(&a, 0, 9).unwrap();
        assert_eq!(t2, t9);
        let x = TowerPoly::var(&a, 0);
        let via_two = x.inject(&t1, &s1, 1).unwrap().inject(&t2, &s2, 1).unwrap();
        let via_one = x.inject(&t9, &s9, 1).unwrap();
        assert_eq!(via_two, via_one);
    }

    #[test]
    fn local_elt_denominator_guard() {
        let a = amb3();
        let x = TowerPoly::var(&a, 0);
        let u = TowerPoly::constant(&a, a.ring().u());
        assert!(LocalElt::new(x.clone(), u).is_err());
        let ok = LocalElt::new(u_times(&a), x).unwrap();
        assert_eq!(ok.ord_at(), Some(2));
    }

    fn u_times(a: &Arc<Ambient>) -> TowerPoly {
        TowerPoly::from_i64(a, 3)
    }

    #[test]
    fn parse_print_examples() {
        let a = amb3_t3();
        let f = parse_poly(&a, "x*y^4 + 27").unwrap();
        assert_eq!(print_poly(&f), "x*y^4 + 27");
        let g = parse_poly(&a, "x^(1/3)*y^(4/3)").unwrap();
        assert_eq!(
            g,
            TowerPoly::var_pow(&a, 0, 1).mul(&TowerPoly::var_pow(&a, 1, 4)).unwrap()
        );
        let h = parse_poly(&a, "(e-1)^2").unwrap();
        assert_eq!(h, TowerPoly::from_i64(&a, -3).mul(&parse_poly(&a, "e").unwrap()).unwrap());
        assert!(parse_poly(&a, "x^(1/2)").is_err());
        assert!(parse_poly(&a, "z+1").is_err());
    }

    #[test]
    fn xpoly_shift_and_divide() {
        let a = amb3();
        let h = TowerPoly::var(&a, 0);
        // (X - h)(X + h) = X^2 - h^2
        let prod = XPoly::x_minus(&h)
            .mul(&XPoly {
                coeffs: vec![h.clone(), TowerPoly::one(&a)],
            })
            .unwrap();
        let q = prod.exact_divide(&XPoly::x_minus(&h)).unwrap();
        assert_eq!(q.coeffs, vec![h.clone(), TowerPoly::one(&a)]);
        // shifting X^2 by h gives X^2 + 2hX + h^2
        let x2 = XPoly::x_monomial(&a, 2, TowerPoly::one(&a));
        let sh = x2.shift(&h).unwrap();
        assert_eq!(sh.coeffs[0], h.pow(2).unwrap());
        assert_eq!(sh.coeffs[1], h.scale(&a.ring().from_i64(2)));
    }

    fn arb_poly(a: Arc<Ambient>, max_terms: usize) -> impl Strategy<Value = TowerPoly> {
        proptest::collection::vec(
            (
                proptest::collection::vec(0u64..5, a.vars().len()),
                -20i64..20,
            ),
            0..max_terms,
        )
        .prop_map(move |terms| {
            let mut f = TowerPoly::zero(&a);
            for (m, c) in terms {
                f.insert_term(m, a.ring().from_i64(c));
            }
            f
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn divide_after_multiply(a in arb_poly(amb3(), 4), b in arb_poly(amb3(), 4)) {
            prop_assume!(!b.is_zero());
            let prod = a.mul(&b).unwrap();
            prop_assert_eq!(prod.exact_divide(&b).unwrap(), a);
        }

        #[test]
        fn reduce_is_ring_hom(a in arb_poly(amb3(), 4), b in arb_poly(amb3(), 4), m in 1u64..5) {
            let lhs = a.mul(&b).unwrap().reduce_mod_upow(m);
            let rhs = a.reduce_mod_upow(m).mul(&b.reduce_mod_upow(m)).unwrap().reduce_mod_upow(m);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn inject_is_ring_hom_and_preserves_ord(a in arb_poly(amb3(), 4), b in arb_poly(amb3(), 4)) {
            let (t, s) = tower_extend(&amb3(), 0, 3).unwrap();
            let ia = a.inject(&t, &s, 1).unwrap();
            let ib = b.inject(&t, &s, 1).unwrap();
            prop_assert_eq!(a.mul(&b).unwrap().inject(&t, &s, 1).unwrap(), ia.mul(&ib).unwrap());
            prop_assert_eq!(a.ord_at(), ia.ord_at());
        }

        #[test]
        fn parse_print_roundtrip(a in arb_poly(amb3_t3(), 5)) {
            let s = print_poly(&a);
            let back = parse_poly(&amb3_t3(), &s).unwrap();
            prop_assert_eq!(back, a);
        }
    }
}
