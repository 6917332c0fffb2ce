//! The `u`-adic approximation order of an element by `p`-th powers, with
//! checkable certificates.
//!
//! For `f` in the ambient ring, `gamma(f)` is the largest `m` (up to a
//! search cap) such that `f` is congruent to a `p`-th power modulo `u^m`,
//! where candidate roots live in the localization at `(u)`. The engine
//! decides this level by level: below the critical level `p*e` each digit of
//! the root is forced; at the critical level the obstruction is a linear
//! equation over the residue field; past it every step lifts. A separate
//! brute-force oracle re-derives small instances independently.

use crate::cyclo::CycRing;
use crate::polyring::{Ambient, LocalElt, PolyError, TowerPoly};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GammaError {
    #[error("input is zero")]
    ZeroInput,
    #[error("internal search bound exceeded")]
    SearchBoundHit,
    #[error("instance too large for the oracle")]
    InstanceTooLarge,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

// ---------------------------------------------------------------------------
// residue-field arithmetic: F_p[grid variables] and fractions thereof
// ---------------------------------------------------------------------------

/// Sparse polynomial over `F_p` in the grid generators of the ambient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FpPoly {
    pub p: u64,
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u64>, u64>,
}

impl FpPoly {
    pub fn zero(p: u64, nvars: usize) -> Self {
        FpPoly {
            p,
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(p: u64, nvars: usize, c: u64) -> Self {
        let mut f = Self::zero(p, nvars);
        f.insert(vec![0; nvars], c);
        f
    }

    pub fn one(p: u64, nvars: usize) -> Self {
        Self::constant(p, nvars, 1)
    }

    pub fn monomial(p: u64, nvars: usize, m: Vec<u64>, c: u64) -> Self {
        let mut f = Self::zero(p, nvars);
        f.insert(m, c);
        f
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, m: Vec<u64>, c: u64) {
        let c = c % self.p;
        if c == 0 {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = (*e.get() + c) % self.p;
                if s == 0 {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), *c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        FpPoly {
            p: self.p,
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), (self.p - c) % self.p))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.p, self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m: Vec<u64> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                out.insert(m, ca * cb % self.p);
            }
        }
        out
    }

    pub fn pow(&self, e: u64) -> Self {
        let mut acc = Self::one(self.p, self.nvars);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn scale(&self, c: u64) -> Self {
        let mut out = Self::zero(self.p, self.nvars);
        for (m, x) in &self.terms {
            out.insert(m.clone(), x * (c % self.p) % self.p);
        }
        out
    }

    /// Unique `p`-th root, if one exists: every internal exponent must be
    /// divisible by `p` (coefficients are fixed by Frobenius over `F_p`).
    pub fn frobenius_root(&self) -> Option<Self> {
        let mut out = Self::zero(self.p, self.nvars);
        for (m, c) in &self.terms {
            if m.iter().any(|e| e % self.p != 0) {
                return None;
            }
            out.insert(m.iter().map(|e| e / self.p).collect(), *c);
        }
        Some(out)
    }

    pub fn degrees(&self) -> Vec<u64> {
        let mut d = vec![0u64; self.nvars];
        for m in self.terms.keys() {
            for i in 0..self.nvars {
                d[i] = d[i].max(m[i]);
            }
        }
        d
    }

    pub fn lift(&self, ambient: &Arc<Ambient>) -> TowerPoly {
        let ring = ambient.ring();
        let mut out = TowerPoly::zero(ambient);
        for (m, c) in &self.terms {
            let t = TowerPoly::var_monomial(ambient, m.clone(), ring.from_i64(*c as i64));
            out = out.add(&t).expect("same ambient");
        }
        out
    }
}

/// Residue of a polynomial: coefficients taken mod `u`.
pub fn residue_of(f: &TowerPoly) -> FpPoly {
    let ring = f.ambient.ring();
    let p = ring.p();
    let mut out = FpPoly::zero(p, f.ambient.vars().len());
    for (m, c) in &f.terms {
        out.insert(m.clone(), ring.residue(c));
    }
    out
}

/// Fraction of residue polynomials (denominator nonzero).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResFrac {
    pub num: FpPoly,
    pub den: FpPoly,
}

impl ResFrac {
    pub fn from_poly(num: FpPoly) -> Self {
        let den = FpPoly::one(num.p, num.nvars);
        ResFrac { num, den }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// `p`-th root if one exists: `n/d = (r/d)^p` iff `n * d^(p-1)` has a
    /// polynomial root `r` (the residue ring is a polynomial ring, so a
    /// rational `p`-th power of a polynomial is a polynomial power).
    pub fn frobenius_root(&self) -> Option<ResFrac> {
        let p = self.num.p;
        let cleared = self.num.mul(&self.den.pow(p - 1));
        let r = cleared.frobenius_root()?;
        Some(ResFrac {
            num: r,
            den: self.den.clone(),
        })
    }

    pub fn mul(&self, other: &Self) -> Self {
        ResFrac {
            num: self.num.mul(&other.num),
            den: self.den.mul(&other.den),
        }
    }

    pub fn div(&self, other: &Self) -> Option<Self> {
        if other.num.is_zero() {
            return None;
        }
        Some(ResFrac {
            num: self.num.mul(&other.den),
            den: self.den.mul(&other.num),
        })
    }

    /// Lift to a local fraction scaled by `u^k`.
    pub fn lift_scaled(&self, ambient: &Arc<Ambient>, k: u64) -> Result<LocalElt, PolyError> {
        let num = self.num.lift(ambient).mul_upow(k);
        let den = self.den.lift(ambient);
        LocalElt::new(num, den)
    }
}

// ---------------------------------------------------------------------------
// F_p linear algebra
// ---------------------------------------------------------------------------

fn fp_inv(a: u64, p: u64) -> u64 {
    // Fermat; p is prime and a != 0 mod p
    let mut r = 1u64;
    let mut b = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// Solve `M c = rhs` over `F_p` (any solution), columns indexed 0..ncols.
pub fn solve_linear_fp(
    mut rows: Vec<Vec<u64>>,
    mut rhs: Vec<u64>,
    p: u64,
) -> Option<Vec<u64>> {
    let nrows = rows.len();
    let ncols = if nrows == 0 { 0 } else { rows[0].len() };
    let mut pivot_col_of_row = Vec::new();
    let mut r = 0usize;
    for col in 0..ncols {
        let Some(pr) = (r..nrows).find(|&i| rows[i][col] % p != 0) else {
            continue;
        };
        rows.swap(r, pr);
        rhs.swap(r, pr);
        let inv = fp_inv(rows[r][col], p);
        for x in rows[r].iter_mut() {
            *x = *x * inv % p;
        }
        rhs[r] = rhs[r] * inv % p;
        for i in 0..nrows {
            if i != r && rows[i][col] % p != 0 {
                let f = rows[i][col] % p;
                for j in 0..ncols {
                    rows[i][j] = (rows[i][j] + (p - f) * rows[r][j]) % p;
                }
                rhs[i] = (rhs[i] + (p - f) * rhs[r]) % p;
            }
        }
        pivot_col_of_row.push(col);
        r += 1;
        if r == nrows {
            break;
        }
    }
    // consistency: zero rows must have zero rhs
    for i in r..nrows {
        if rhs[i] % p != 0 {
            return None;
        }
    }
    let mut sol = vec![0u64; ncols];
    for (row, col) in pivot_col_of_row.iter().enumerate() {
        sol[*col] = rhs[row] % p;
    }
    Some(sol)
}

/// Solve `y^p + a*y = b` for a rational `y` over the residue field.
///
/// Substituting `y = z / D` with `D = den(a) * den(b)` turns this into a
/// polynomial equation `z^p + A z = B` whose rational solutions are
/// polynomial (the equation is monic and the residue ring is integrally
/// closed), with per-variable degree bounded by
/// `max(ceil(deg B / p), ceil(deg A / (p-1)))`. That leaves a finite linear
/// system over `F_p`, since `z -> z^p + A z` is additive.
pub fn artin_schreier_solve(
    a: &ResFrac,
    b: &ResFrac,
    unknown_cap: usize,
) -> Result<Option<ResFrac>, GammaError> {
    let p = a.num.p;
    let nvars = a.num.nvars;
    let d = a.den.mul(&b.den);
    // z^p + A z = B with A = aN * aD^(p-2) * bD^(p-1), B = bN * aD^p * bD^(p-1)
    let a_poly = if p >= 2 {
        a.num.mul(&a.den.pow(p - 2)).mul(&b.den.pow(p - 1))
    } else {
        unreachable!()
    };
    let b_poly = b.num.mul(&a.den.pow(p)).mul(&b.den.pow(p - 1));
    if b_poly.is_zero() {
        return Ok(Some(ResFrac::from_poly(FpPoly::zero(p, nvars))));
    }
    let da = a_poly.degrees();
    let db = b_poly.degrees();
    let bounds: Vec<u64> = (0..nvars)
        .map(|i| {
            let from_b = db[i].div_ceil(p);
            let from_a = if a_poly.is_zero() {
                0
            } else {
                da[i].div_ceil(p - 1)
            };
            from_b.max(from_a)
        })
        .collect();
    let mut count: usize = 1;
    for b in &bounds {
        count = count.saturating_mul(*b as usize + 1);
        if count > unknown_cap {
            return Err(GammaError::SearchBoundHit);
        }
    }
    // enumerate the monomial box
    let mut box_mons: Vec<Vec<u64>> = vec![vec![]];
    for b in &bounds {
        let mut next = Vec::new();
        for m in &box_mons {
            for e in 0..=*b {
                let mut m2 = m.clone();
                m2.push(e);
                next.push(m2);
            }
        }
        box_mons = next;
    }
    // image of each unit-coefficient unknown monomial under z -> z^p + A z
    let images: Vec<FpPoly> = box_mons
        .iter()
        .map(|m| {
            let zp = FpPoly::monomial(p, nvars, m.iter().map(|e| e * p).collect(), 1);
            let az = a_poly.mul(&FpPoly::monomial(p, nvars, m.clone(), 1));
            zp.add(&az)
        })
        .collect();
    let mut row_index: BTreeSet<Vec<u64>> = BTreeSet::new();
    for im in &images {
        row_index.extend(im.terms.keys().cloned());
    }
    row_index.extend(b_poly.terms.keys().cloned());
    let row_of: BTreeMap<&Vec<u64>, usize> =
        row_index.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut rows = vec![vec![0u64; box_mons.len()]; row_index.len()];
    for (col, im) in images.iter().enumerate() {
        for (m, c) in &im.terms {
            rows[row_of[m]][col] = *c;
        }
    }
    let mut rhs = vec![0u64; row_index.len()];
    for (m, c) in &b_poly.terms {
        rhs[row_of[m]] = *c;
    }
    let Some(sol) = solve_linear_fp(rows, rhs, p) else {
        return Ok(None);
    };
    let mut z = FpPoly::zero(p, nvars);
    for (m, c) in box_mons.into_iter().zip(sol) {
        z.insert(m, c);
    }
    Ok(Some(ResFrac { num: z, den: d }))
}

// ---------------------------------------------------------------------------
// the decision engine
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Level {
    /// Exact approximation order.
    Finite(u64),
    /// At least this order; the search cap was reached (or the element is an
    /// exact `p`-th power).
    AtLeast(u64),
}

impl Level {
    pub fn at_least(&self, m: u64) -> bool {
        match self {
            Level::Finite(n) | Level::AtLeast(n) => *n >= m,
        }
    }

    pub fn value(&self) -> u64 {
        match self {
            Level::Finite(n) | Level::AtLeast(n) => *n,
        }
    }
}

/// Result of the approximation-order computation, with a checkable witness.
#[derive(Clone, Debug)]
pub struct GammaCert {
    pub level: Level,
    /// Root attaining `v(f - h^p) >= level` (absent when the level is 0 or
    /// witnessed by `h = 0`).
    pub witness: Option<LocalElt>,
    /// True when `f` is exactly `witness^p`.
    pub exact_power: bool,
    pub branch_log: Vec<String>,
}

fn w_residue(ring: &CycRing) -> u64 {
    ring.residue(&ring.unit_w())
}

/// Compute the approximation order of `f` by `p`-th powers, capped at `cap`.
pub fn gamma(f: &TowerPoly, cap: u64) -> Result<GammaCert, GammaError> {
    let ambient = f.ambient.clone();
    let ring = ambient.ring().clone();
    let p = ring.p();
    let e = ring.root_index();
    let threshold = p * e; // critical level: p/(p-1) * v(p)
    let mut log = Vec::new();

    if f.is_zero() {
        return Err(GammaError::ZeroInput);
    }
    let ord = f.ord_at().expect("nonzero");
    if ord >= cap {
        log.push(format!("order {ord} already reaches the cap"));
        return Ok(GammaCert {
            level: Level::AtLeast(cap),
            witness: None,
            exact_power: false,
            branch_log: log,
        });
    }
    if ord % p != 0 {
        log.push(format!("order {ord} is prime to {p}: level is exact"));
        return Ok(GammaCert {
            level: Level::Finite(ord),
            witness: None,
            exact_power: false,
            branch_log: log,
        });
    }
    let offset = ord;
    let f1 = if ord > 0 {
        log.push(format!("split off u^{ord}; recurse on the unit part"));
        f.div_upow_exact(ord)?
    } else {
        f.clone()
    };

    // unit part
    let fbar = residue_of(&f1);
    let Some(h0) = fbar.frobenius_root() else {
        log.push("residue has no p-th root: level 0".into());
        return Ok(GammaCert {
            level: Level::Finite(offset),
            witness: witness_shift(None, &ambient, offset, p)?,
            exact_power: false,
            branch_log: log,
        });
    };
    let mut h = LocalElt::from_poly(h0.lift(&ambient));
    log.push("residue root found; matching digits".into());
    let budget = cap - offset;
    let mut last_delta: Option<u64> = None;
    loop {
        // r = f1 - h^p  as a fraction over den(h)^p
        let hp = h.pow(p)?;
        let num = f1.mul(hp.den())?.sub(hp.num())?;
        let den = hp.den().clone();
        let Some(delta) = num.ord_at() else {
            log.push("exact p-th power".into());
            return Ok(GammaCert {
                level: Level::AtLeast(cap),
                witness: witness_shift(Some(h), &ambient, offset, p)?,
                exact_power: true,
                branch_log: log,
            });
        };
        if let Some(prev) = last_delta {
            if delta <= prev {
                return Err(GammaError::SearchBoundHit);
            }
        }
        last_delta = Some(delta);
        if delta >= budget {
            log.push(format!("defect level {delta} reaches the cap"));
            return Ok(GammaCert {
                level: Level::AtLeast(cap),
                witness: witness_shift(Some(h), &ambient, offset, p)?,
                exact_power: false,
                branch_log: log,
            });
        }
        let b_num = num.div_upow_exact(delta)?;
        let bbar = ResFrac {
            num: residue_of(&b_num),
            den: residue_of(&den),
        };
        let hbar = ResFrac {
            num: residue_of(h.num()),
            den: residue_of(h.den()),
        };
        if delta < threshold {
            if delta % p != 0 {
                log.push(format!("defect level {delta} is prime to {p}: exact"));
                return Ok(GammaCert {
                    level: Level::Finite(offset + delta),
                    witness: witness_shift(Some(h), &ambient, offset, p)?,
                    exact_power: false,
                    branch_log: log,
                });
            }
            let Some(root) = bbar.frobenius_root() else {
                log.push(format!("defect residue at level {delta} has no p-th root: exact"));
                return Ok(GammaCert {
                    level: Level::Finite(offset + delta),
                    witness: witness_shift(Some(h), &ambient, offset, p)?,
                    exact_power: false,
                    branch_log: log,
                });
            };
            log.push(format!("digit forced at level {delta}"));
            h = h.add(&root.lift_scaled(&ambient, delta / p)?)?;
        } else if delta == threshold {
            // critical level: y^p + (w * hbar^(p-1)) y = bbar
            let w = w_residue(&ring);
            let a = ResFrac {
                num: hbar.num.pow(p - 1).scale(w),
                den: hbar.den.pow(p - 1),
            };
            match artin_schreier_solve(&a, &bbar, 20_000)? {
                None => {
                    log.push(format!("critical level {delta}: obstruction is nontrivial"));
                    return Ok(GammaCert {
                        level: Level::Finite(offset + delta),
                        witness: witness_shift(Some(h), &ambient, offset, p)?,
                        exact_power: false,
                        branch_log: log,
                    });
                }
                Some(gamma_corr) => {
                    log.push(format!("critical level {delta}: obstruction solved"));
                    h = h.add(&gamma_corr.lift_scaled(&ambient, e)?)?;
                }
            }
        } else {
            // past the critical level every step lifts
            let w = w_residue(&ring);
            let a = ResFrac {
                num: hbar.num.pow(p - 1).scale(w),
                den: hbar.den.pow(p - 1),
            };
            let corr = bbar.div(&a).expect("unit root has nonzero residue");
            log.push(format!("lifting step at level {delta}"));
            h = h.add(&corr.lift_scaled(&ambient, delta - e * (p - 1))?)?;
        }
    }
}

/// Re-attach the `u^(offset/p)` factor split off from a non-unit input.
fn witness_shift(
    h: Option<LocalElt>,
    ambient: &Arc<Ambient>,
    offset: u64,
    p: u64,
) -> Result<Option<LocalElt>, PolyError> {
    let Some(h) = h else {
        return Ok(if offset == 0 {
            None
        } else {
            // h = 0 witnesses level = offset; report it explicitly as zero
            Some(LocalElt::from_poly(TowerPoly::zero(ambient)))
        });
    };
    if offset == 0 {
        return Ok(Some(h));
    }
    debug_assert_eq!(offset % p, 0);
    let shift = LocalElt::from_poly(TowerPoly::one(ambient).mul_upow(offset / p));
    Ok(Some(h.mul(&shift)?))
}

/// Check a certificate against `f`: the witness must attain the claimed
/// level, and for `Finite` claims the decision is re-derived.
pub fn verify_gamma_cert(f: &TowerPoly, cert: &GammaCert, cap: u64) -> Result<bool, GammaError> {
    let claimed = cert.level.value();
    if let Some(h) = &cert.witness {
        let p = f.ambient.ring().p();
        let hp = h.pow(p)?;
        let num = f.mul(hp.den())?.sub(hp.num())?;
        let attained = num.ord_at();
        match (cert.exact_power, attained) {
            (true, Some(_)) => return Ok(false),
            (true, None) => {}
            (false, None) => {
                if let Level::Finite(_) = cert.level {
                    return Ok(false);
                }
            }
            (false, Some(v)) => {
                let ok = match cert.level {
                    Level::Finite(n) => v == n,
                    Level::AtLeast(n) => v >= n,
                };
                if !ok {
                    return Ok(false);
                }
            }
        }
    }
    let recomputed = gamma(f, cap)?;
    let ok = match (recomputed.level, cert.level) {
        (Level::Finite(a), Level::Finite(b)) => a == b,
        (Level::AtLeast(a), Level::AtLeast(b)) => a >= b,
        (Level::AtLeast(a), Level::Finite(b)) => a >= b,
        (Level::Finite(_), Level::AtLeast(_)) => false,
    };
    Ok(ok && recomputed.level.value() >= claimed.min(cap))
}

// ---------------------------------------------------------------------------
// independent oracle: pruned digit search
// ---------------------------------------------------------------------------

/// Decide by brute force whether `f = h^p mod u^m` has a polynomial root on
/// the given monomial support, searching digit by digit. The digit at level
/// zero is not searched: a `p`-th root is unique modulo `u` when it exists
/// (Frobenius is injective on the residue ring), so it is read off directly
/// and only the higher digits are enumerated.
fn oracle_poly_root_exists(
    f: &TowerPoly,
    m: u64,
    support: &[Vec<u64>],
    support_high: &[Vec<u64>],
    node_budget: &mut i64,
) -> Result<bool, GammaError> {
    let ambient = f.ambient.clone();
    let ring = ambient.ring().clone();
    let p = ring.p();
    let r = ring.degree() as u64; // valuation of p
    // digits at level >= K only move levels >= min(pK, r+K); both must reach m
    let depth = m.div_ceil(p).max(m.saturating_sub(r));

    // digits: for each level 0..depth, an assignment of 0..p-1 to each
    // support monomial; at levels whose pure p-th powers vanish modulo u^m,
    // only the linear contribution matters and the digit degree can reach
    // the full defect degree, so a wider box applies there
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        f: &TowerPoly,
        h: &TowerPoly,
        level: u64,
        depth: u64,
        m: u64,
        p: u64,
        r: u64,
        support_low: &[Vec<u64>],
        support_high: &[Vec<u64>],
        node_budget: &mut i64,
    ) -> Result<bool, GammaError> {
        let support = if p * level >= m {
            support_high
        } else {
            support_low
        };
        *node_budget -= 1;
        if *node_budget < 0 {
            return Err(GammaError::InstanceTooLarge);
        }
        let defect = f.sub(&h.pow(p)?)?;
        let v = defect.ord_at().unwrap_or(u64::MAX);
        if v >= m {
            return Ok(true);
        }
        if level >= depth {
            return Ok(false);
        }
        // digits above `level` only move levels >= min(p*level, r+level)
        let reachable = (p * level).min(r + level);
        if v < reachable {
            return Ok(false);
        }
        if level == 0 {
            // mod u the root is forced: coefficients are Frobenius-fixed, so
            // f-bar must be a p-th power monomial by monomial
            let fb = residue_of(f);
            let digit = match fb.frobenius_root() {
                Some(root) => root.lift(&f.ambient),
                None => return Ok(false),
            };
            // outside the candidate box means no root on this support
            for mon in digit.terms.keys() {
                if !support.iter().any(|s| s == mon) {
                    return Ok(false);
                }
            }
            return dfs(
                f,
                &digit,
                1,
                depth,
                m,
                p,
                r,
                support_low,
                support_high,
                node_budget,
            );
        }
        // enumerate the digit at this level over the support
        let ring = f.ambient.ring().clone();
        let uk = TowerPoly::one(&f.ambient).mul_upow(level);
        let mut assignment = vec![0u64; support.len()];
        loop {
            let mut digit = TowerPoly::zero(&f.ambient);
            for (mon, c) in support.iter().zip(&assignment) {
                if *c > 0 {
                    digit = digit
                        .add(&TowerPoly::var_monomial(
                            &f.ambient,
                            mon.clone(),
                            ring.from_i64(*c as i64),
                        ))
                        .expect("same ambient");
                }
            }
            let h2 = h.add(&digit.mul(&uk)?)?;
            if dfs(
                f,
                &h2,
                level + 1,
                depth,
                m,
                p,
                r,
                support_low,
                support_high,
                node_budget,
            )? {
                return Ok(true);
            }
            // odometer
            let mut i = 0;
            loop {
                if i == assignment.len() {
                    return Ok(false);
                }
                assignment[i] += 1;
                if assignment[i] < p {
                    break;
                }
                assignment[i] = 0;
                i += 1;
            }
        }
    }

    dfs(
        f,
        &TowerPoly::zero(&ambient),
        0,
        depth,
        m,
        p,
        r,
        support,
        support_high,
        node_budget,
    )
}

/// Independent re-derivation of the approximation order by exhaustive digit
/// search, with a denominator sweep: the order is unchanged when `f` is
/// multiplied by the `p`-th power of a local unit, so fractional roots are
/// found as polynomial roots of `f * d^p`.
pub fn gamma_oracle(f: &TowerPoly, cap: u64) -> Result<Level, GammaError> {
    let ambient = f.ambient.clone();
    let ring = ambient.ring().clone();
    let p = ring.p();
    if f.is_zero() {
        return Err(GammaError::ZeroInput);
    }

    // candidate denominators: 1 and small monomials in the variables
    let nvars = ambient.vars().len();
    let mut dens: Vec<TowerPoly> = vec![TowerPoly::one(&ambient)];
    for i in 0..nvars {
        for e in 1..=2u64 {
            for scale in 1..p {
                let t = TowerPoly::var_monomial(
                    &ambient,
                    {
                        let mut m = vec![0; nvars];
                        m[i] = e;
                        m
                    },
                    ring.from_i64(scale as i64),
                );
                dens.push(t);
            }
        }
    }
    // also products of two distinct variables
    for i in 0..nvars {
        for j in (i + 1)..nvars {
            let mut m = vec![0; nvars];
            m[i] = 1;
            m[j] = 1;
            dens.push(TowerPoly::var_monomial(&ambient, m, ring.one()));
        }
    }

    let mut best = 0u64;
    for m in 1..=cap {
        let mut found = false;
        for d in &dens {
            // only f modulo u^m matters for a root modulo u^m, and the
            // reduced form keeps coefficients small
            let fd = f.mul(&d.pow(p)?)?.reduce_mod_upow(m);
            if fd.is_zero() {
                // f = 0 mod u^m: h = 0 attains the level
                found = true;
                break;
            }
            // support: monomials dividing the degree box of fd, scaled down
            // by p for ordinary digit levels, and at full degree for levels
            // whose pure p-th powers vanish modulo u^m
            let degs = fd.degrees();
            let low: Vec<u64> = degs.iter().map(|d| d / p + 1).collect();
            let high: Vec<u64> = degs
                .iter()
                .zip(&low)
                .map(|(d, l)| (*d).max(*l))
                .collect();
            let box_of = |bounds: &[u64]| -> Result<Vec<Vec<u64>>, GammaError> {
                let mut size: usize = 1;
                for b in bounds {
                    size = size.saturating_mul(*b as usize + 1);
                }
                if size > 64 {
                    return Err(GammaError::InstanceTooLarge);
                }
                let mut support: Vec<Vec<u64>> = vec![vec![]];
                for b in bounds {
                    let mut next = Vec::new();
                    for mon in &support {
                        for e in 0..=*b {
                            let mut m2 = mon.clone();
                            m2.push(e);
                            next.push(m2);
                        }
                    }
                    support = next;
                }
                Ok(support)
            };
            let support = box_of(&low)?;
            // the wide box is only consulted at enumerated levels >= m/p
            let depth = m
                .div_ceil(p)
                .max(m.saturating_sub(ring.degree() as u64));
            let support_high = if depth >= 1 && p * (depth - 1) >= m {
                box_of(&high)?
            } else {
                support.clone()
            };
            let mut budget: i64 = 2_000_000;
            if oracle_poly_root_exists(&fd, m, &support, &support_high, &mut budget)? {
                found = true;
                break;
            }
        }
        if !found {
            return Ok(Level::Finite(best));
        }
        best = m;
    }
    Ok(Level::AtLeast(cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::{parse_poly, VarSpec};
    use proptest::prelude::*;

    fn amb(p: u64, names: &[&str]) -> Arc<Ambient> {
        Ambient::new(
            p,
            names
                .iter()
                .map(|n| VarSpec {
                    name: n.to_string(),
                    tower: 1,
                })
                .collect(),
        )
        .unwrap()
    }

    fn amb_t(p: u64, names: &[&str], tower: u64) -> Arc<Ambient> {
        Ambient::new(
            p,
            names
                .iter()
                .map(|n| VarSpec {
                    name: n.to_string(),
                    tower,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn gamma_of_p_is_v_of_p() {
        // v(3) = 2 is prime to 3, so the level is exactly 2
        let a = amb(3, &[]);
        let f = TowerPoly::from_i64(&a, 3);
        let c = gamma(&f, 10).unwrap();
        assert_eq!(c.level, Level::Finite(2));
    }

    #[test]
    fn critical_obstruction_blocks() {
        // f = 1 + u^3 x: the critical-level equation y^3 - y = x^? has no
        // rational solution, so the level is exactly 3
        let a = amb(3, &["x"]);
        let f = parse_poly(&a, "1 + u^3*x").unwrap();
        let c = gamma(&f, 12).unwrap();
        assert_eq!(c.level, Level::Finite(3));
    }

    #[test]
    fn critical_obstruction_solvable() {
        // f = 1 + u^3*(x^3 - x): y^3 - y = -(x^3 - x)... solvable over F_3
        let a = amb(3, &["x"]);
        let f = parse_poly(&a, "1 + u^3*(x^3 - x)").unwrap();
        let c = gamma(&f, 6).unwrap();
        assert_eq!(c.level, Level::AtLeast(6));
    }

    #[test]
    fn quadratic_units() {
        // p = 2: u = -2, v(2) = 1, critical level 2
        let a = amb(2, &[]);
        for (f, expect) in [
            (3i64, Level::Finite(1)),  // 3 - 1 = 2, v = 1, prime to 2
            (5, Level::Finite(2)),     // 5 - 1 = 4: critical, y^2+y=1 unsolvable
            (17, Level::AtLeast(8)),   // 17 = 1 mod 16: lifts past the cap
            (7, Level::Finite(1)),
            (9, Level::AtLeast(8)),    // exact square
        ] {
            let fp = TowerPoly::from_i64(&a, f);
            let c = gamma(&fp, 8).unwrap();
            assert_eq!(c.level, expect, "f = {f}");
        }
        assert!(gamma(&TowerPoly::from_i64(&a, 9), 8).unwrap().exact_power);
    }

    #[test]
    fn residue_without_root_gives_zero() {
        let a = amb(3, &["x", "y"]);
        let f = parse_poly(&a, "x*y^4 + 27").unwrap();
        let c = gamma(&f, 9).unwrap();
        assert_eq!(c.level, Level::Finite(0));
    }

    #[test]
    fn cube_grid_root_lifts() {
        // same element over the cube-root grid: residue root exists and the
        // defect is 27, of order 6 > critical level 3, so every step lifts
        let a = amb_t(3, &["x", "y"], 3);
        let f = parse_poly(&a, "x*y^4 + 27").unwrap();
        let c = gamma(&f, 6).unwrap();
        assert_eq!(c.level, Level::AtLeast(6));
        let h = c.witness.unwrap();
        let hp = h.pow(3).unwrap();
        let num = f.mul(hp.den()).unwrap().sub(hp.num()).unwrap();
        assert!(num.ord_at().unwrap() >= 6);
    }

    #[test]
    fn product_with_cube_residue() {
        // f = (x y^4 + 27)(x^4 y + 27)^2 has residue x^9 y^6 = (x^3 y^2)^3
        let a = amb(3, &["x", "y"]);
        let f = parse_poly(&a, "(x*y^4 + 27) * (x^4*y + 27)^2").unwrap();
        let h0 = parse_poly(&a, "x^3*y^2").unwrap();
        let defect = f.sub(&h0.pow(3).unwrap()).unwrap();
        assert_eq!(defect.ord_at(), Some(6));
        let c = gamma(&f, 6).unwrap();
        assert_eq!(c.level, Level::AtLeast(6));
    }

    #[test]
    fn certificates_verify() {
        let a = amb(3, &["x"]);
        for s in ["1 + u^3*x", "1 + 9*x", "x^3 + 3", "(1+u*x)^3"] {
            let f = parse_poly(&a, s).unwrap();
            let c = gamma(&f, 8).unwrap();
            assert!(verify_gamma_cert(&f, &c, 8).unwrap(), "cert for {s}");
        }
    }

    #[test]
    fn oracle_matches_engine_on_integers() {
        let a = amb(3, &[]);
        for n in [2i64, 3, 5, 7, 9, 10, 26, 28, 27, 81, 17, 19, 53] {
            let f = TowerPoly::from_i64(&a, n);
            let eng = gamma(&f, 6).unwrap().level;
            let orc = gamma_oracle(&f, 6).unwrap();
            assert_eq!(eng, orc, "n = {n}");
        }
    }

    #[test]
    fn oracle_matches_engine_univariate() {
        let a = amb(3, &["x"]);
        for s in [
            "1 + u^3*x",
            "1 + 3*x",
            "x^3 + 27",
            "1 + u^4*x",
            "x^3 + 9*x",
            "(1+u*x)^3",
        ] {
            let f = parse_poly(&a, s).unwrap();
            let eng = gamma(&f, 5).unwrap().level;
            let orc = gamma_oracle(&f, 5).unwrap();
            assert_eq!(eng, orc, "f = {s}");
        }
    }

    #[test]
    fn oracle_matches_engine_quadratic() {
        let a = amb(2, &[]);
        for n in [3i64, 5, 7, 9, 11, 13, 15, 17, 21, 25, 33, 41, 49] {
            let f = TowerPoly::from_i64(&a, n);
            let eng = gamma(&f, 5).unwrap().level;
            let orc = gamma_oracle(&f, 5).unwrap();
            assert_eq!(eng, orc, "n = {n}");
        }
    }

    #[test]
    fn deep_denominator_witness() {
        // x^6 + 9x needs a cubic denominator in its root; the engine finds
        // it and the witness checks out
        let a = amb(3, &["x"]);
        let f = parse_poly(&a, "x^6 + 9*x").unwrap();
        let c = gamma(&f, 6).unwrap();
        assert_eq!(c.level, Level::AtLeast(6));
        assert!(verify_gamma_cert(&f, &c, 6).unwrap());
    }

    #[test]
    fn artin_schreier_small_cases() {
        // over F_2 with no variables: y^2 + y = 1 has no solution
        let one = ResFrac::from_poly(FpPoly::one(2, 0));
        assert_eq!(artin_schreier_solve(&one, &one, 100).unwrap(), None);
        // y^2 + y = 0 does
        let zero = ResFrac::from_poly(FpPoly::zero(2, 0));
        assert!(artin_schreier_solve(&one, &zero, 100).unwrap().is_some());
        // over F_3[x]: y^3 + 2y = x^3 + x  has solution y = x
        let a = ResFrac::from_poly(FpPoly::constant(3, 1, 2));
        let mut b = FpPoly::monomial(3, 1, vec![3], 1);
        b = b.add(&FpPoly::monomial(3, 1, vec![1], 2));
        let sol = artin_schreier_solve(&a, &ResFrac::from_poly(b), 100)
            .unwrap()
            .unwrap();
        assert_eq!(sol.num, FpPoly::monomial(3, 1, vec![1], 1));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn unit_pth_power_multiplication_invariance(c0 in 1i64..3, c1 in -2i64..3) {
            // gamma(f * v^p) = gamma(f) for a local unit v
            let a = amb(3, &["x"]);
            let f = parse_poly(&a, "1 + u^3*x + 9*x^2").unwrap();
            let v = TowerPoly::from_i64(&a, c0)
                .add(&parse_poly(&a, "x").unwrap().scale(&a.ring().from_i64(c1)))
                .unwrap();
            prop_assume!(!residue_of(&v).is_zero());
            let fv = f.mul(&v.pow(3).unwrap()).unwrap();
            let l1 = gamma(&f, 6).unwrap().level;
            let l2 = gamma(&fv, 6).unwrap().level;
            prop_assert_eq!(l1, l2);
        }

        #[test]
        fn oracle_agreement_random_quadratic(n in 1i64..200) {
            let a = amb(2, &[]);
            let f = TowerPoly::from_i64(&a, 2 * n + 1);
            let eng = gamma(&f, 5).unwrap().level;
            let orc = gamma_oracle(&f, 5).unwrap();
            prop_assert_eq!(eng, orc);
        }
    }
}
