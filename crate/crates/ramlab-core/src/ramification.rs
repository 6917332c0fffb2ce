//! Deciding how adjoining a `p`-th root of `f` ramifies over the `u`-adic
//! prime, plus the symbolic identities the cover constructions depend on.

use crate::cyclo::CycElt;
use crate::polyring::{PolyError, TowerPoly, XPoly};
use crate::valuation::{gamma, GammaCert, GammaError};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RamError {
    #[error("input is zero")]
    ZeroInput,
    #[error(transparent)]
    Gamma(#[from] GammaError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Verdict for the extension obtained by adjoining a `p`-th root of `f`.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RamClass {
    /// `f` is already a `p`-th power; the extension is trivial.
    PthPower,
    /// Unramified in codimension one over the `u`-adic prime.
    Tame,
    /// Ramified over the `u`-adic prime.
    Ramified,
    /// The search cap was reached before a decision.
    Unknown,
}

#[derive(Clone, Debug)]
pub struct ClassifyReport {
    pub class: RamClass,
    /// `p/(p-1) * v(p)`: the approximation order needed for tameness.
    pub threshold: u64,
    pub gamma: Option<GammaCert>,
    pub root: Option<TowerPoly>,
}

/// Classify the `u`-adic ramification of the degree-`p` Kummer cover of `f`.
pub fn classify(f: &TowerPoly, cap: u64) -> Result<ClassifyReport, RamError> {
    if f.is_zero() {
        return Err(RamError::ZeroInput);
    }
    let ring = f.ambient.ring();
    let p = ring.p();
    let threshold = p * ring.root_index();
    if let Some(root) = pth_root_poly(f) {
        return Ok(ClassifyReport {
            class: RamClass::PthPower,
            threshold,
            gamma: None,
            root: Some(root),
        });
    }
    // a nonunit that is not an exact power ramifies: a root of it has
    // fractional order at `u`
    if f.ord_at().map_or(false, |v| v >= 1) {
        return Ok(ClassifyReport {
            class: RamClass::Ramified,
            threshold,
            gamma: None,
            root: None,
        });
    }
    let cap = cap.max(threshold);
    match gamma(f, cap) {
        Ok(cert) => {
            let class = if cert.level.at_least(threshold) {
                RamClass::Tame
            } else {
                RamClass::Ramified
            };
            Ok(ClassifyReport {
                class,
                threshold,
                gamma: Some(cert),
                root: None,
            })
        }
        Err(GammaError::SearchBoundHit) | Err(GammaError::InstanceTooLarge) => Ok(ClassifyReport {
            class: RamClass::Unknown,
            threshold,
            gamma: None,
            root: None,
        }),
        Err(e) => Err(e.into()),
    }
}

// ---------------------------------------------------------------------------
// exact multivariate p-th roots
// ---------------------------------------------------------------------------

/// Exact `n`-th root in the polynomial ring, if one exists. The ring is
/// integrally closed, so a rational root of a polynomial is a polynomial;
/// descending coefficient recovery with exact divisions finds it.
pub fn pth_root_poly(f: &TowerPoly) -> Option<TowerPoly> {
    let ring = f.ambient.ring();
    let p = ring.p();
    nth_root_poly(f, p)
}

pub fn nth_root_poly(f: &TowerPoly, n: u64) -> Option<TowerPoly> {
    if f.is_zero() {
        return Some(f.clone());
    }
    let ambient = f.ambient.clone();
    let ring = ambient.ring();
    if f.is_constant() {
        let c = ring.nth_root(&f.constant_part(), n)?;
        return Some(TowerPoly::constant(&ambient, c));
    }
    // recurse on the last variable of positive degree
    let degs = f.degrees();
    let var = degs.iter().rposition(|d| *d > 0).expect("not constant");
    let dd = degs[var];
    if dd % n != 0 {
        return None;
    }
    let coeff_at = |g: &TowerPoly, k: u64| -> TowerPoly {
        let mut out = TowerPoly::zero(&ambient);
        for (m, c) in &g.terms {
            if m[var] == k {
                let mut m2 = m.clone();
                m2[var] = 0;
                out = out
                    .add(&TowerPoly::var_monomial(&ambient, m2, c.clone()))
                    .expect("same ambient");
            }
        }
        out
    };
    let lead = coeff_at(f, dd);
    let hl = nth_root_poly(&lead, n)?;
    let xk = TowerPoly::var_monomial(&ambient, {
        let mut m = vec![0; ambient.vars().len()];
        m[var] = dd / n;
        m
    }, ring.one());
    let mut h = hl.mul(&xk).ok()?;
    // divisor for each descending coefficient: n * hl^(n-1) * x^((n-1)d/n)
    let div = hl
        .pow(n - 1)
        .ok()?
        .scale(&ring.from_i64(n as i64))
        .mul(&TowerPoly::var_monomial(&ambient, {
            let mut m = vec![0; ambient.vars().len()];
            m[var] = (n - 1) * (dd / n);
            m
        }, ring.one()))
        .ok()?;
    let top_shift = (n - 1) * (dd / n);
    loop {
        let r = f.sub(&h.pow(n).ok()?).ok()?;
        if r.is_zero() {
            return Some(h);
        }
        let rd = r.degrees()[var];
        if rd < top_shift {
            return None;
        }
        let k = rd - top_shift;
        if k >= dd / n {
            return None;
        }
        let c = coeff_at(&r, rd);
        let hk = c.exact_divide(&coeff_at(&div, top_shift)).ok()?;
        let term = hk
            .mul(&TowerPoly::var_monomial(&ambient, {
                let mut m = vec![0; ambient.vars().len()];
                m[var] = k;
                m
            }, ring.one()))
            .ok()?;
        if term.is_zero() {
            return None;
        }
        h = h.add(&term).ok()?;
    }
}

// ---------------------------------------------------------------------------
// the correction pair for p-th power binomials
// ---------------------------------------------------------------------------

/// `c = (X^p - h^p) - (X - h)^p` together with `c1 = c / (p (X - h))`.
#[derive(Clone, Debug)]
pub struct CPrimePair {
    pub c: XPoly,
    pub cprime: XPoly,
}

/// Compute the pair; both divisions are exact for any `h`.
pub fn cprime(h: &TowerPoly) -> Result<CPrimePair, RamError> {
    let ambient = h.ambient.clone();
    let ring = ambient.ring();
    let p = ring.p();
    let xp = XPoly::x_monomial(&ambient, p as usize, TowerPoly::one(&ambient));
    let hp = XPoly::constant(h.pow(p)?);
    let xmh = XPoly::x_minus(h);
    let c = xp.sub(&hp)?.sub(&xmh.pow(p)?)?;
    let cprime = c
        .exact_divide(&xmh)?
        .exact_divide_scalar(&TowerPoly::from_i64(&ambient, p as i64))?;
    Ok(CPrimePair { c, cprime })
}

// ---------------------------------------------------------------------------
// shifted cyclotomic moduli are Eisenstein
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, serde::Serialize)]
pub struct EisensteinReport {
    pub p: u64,
    pub r: u32,
    pub coeffs: Vec<String>,
    pub eisenstein: bool,
}

/// Check that the degree-`phi(p^r)` cyclotomic polynomial shifted by one is
/// Eisenstein at `p`.
pub fn eisenstein_shift_check(p: u64, r: u32) -> EisensteinReport {
    // base polynomial: 1 + y + ... + y^(p-1) evaluated at y = x^(p^(r-1)),
    // then shifted x -> x + 1
    let inner = p.pow(r - 1);
    let deg = (p - 1) * inner;
    let mut coeffs = vec![BigInt::zero(); deg as usize + 1];
    // expand sum_{j<p} (x+1)^(j * inner) by repeated multiplication
    let mut pow = vec![BigInt::one()]; // (x+1)^0
    let shift_factor = {
        // (x+1)^inner
        let mut f = vec![BigInt::one()];
        for _ in 0..inner {
            let mut g = vec![BigInt::zero(); f.len() + 1];
            for (i, c) in f.iter().enumerate() {
                g[i] += c;
                g[i + 1] += c;
            }
            f = g;
        }
        f
    };
    for _ in 0..p {
        for (i, c) in pow.iter().enumerate() {
            coeffs[i] += c;
        }
        // pow *= (x+1)^inner
        let mut next = vec![BigInt::zero(); pow.len() + shift_factor.len() - 1];
        for (i, a) in pow.iter().enumerate() {
            for (j, b) in shift_factor.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        pow = next;
    }
    let pb = BigInt::from(p);
    let eisenstein = coeffs[deg as usize].is_one()
        && coeffs[..deg as usize].iter().all(|c| (c % &pb).is_zero())
        && !(&coeffs[0] % (&pb * &pb)).is_zero()
        && coeffs[0] == pb;
    EisensteinReport {
        p,
        r,
        coeffs: coeffs.iter().map(|c| c.to_string()).collect(),
        eisenstein,
    }
}

// ---------------------------------------------------------------------------
// squarefree / coprimality probes
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, serde::Serialize)]
pub struct FactorReport {
    /// Per-input squarefree verdict; `None` when the probe does not apply.
    pub squarefree: Vec<Option<bool>>,
    pub pairwise_coprime: Option<bool>,
    pub method: String,
}

/// Heuristic squarefree and pairwise-coprimality probe: inputs with plain
/// integer coefficients are specialized to univariate polynomials over `Q`
/// at several points and checked with Euclidean gcds; small constants are
/// factored directly.
pub fn squarefree_coprime_check(parts: &[TowerPoly]) -> FactorReport {
    let mut squarefree = Vec::new();
    for f in parts {
        squarefree.push(squarefree_probe(f));
    }
    let mut coprime = Some(true);
    for i in 0..parts.len() {
        for j in (i + 1)..parts.len() {
            match coprime_probe(&parts[i], &parts[j]) {
                Some(true) => {}
                Some(false) => {
                    coprime = Some(false);
                }
                None => {
                    if coprime == Some(true) {
                        coprime = None;
                    }
                }
            }
        }
    }
    FactorReport {
        squarefree,
        pairwise_coprime: if parts.len() < 2 { None } else { coprime },
        method: "integer specialization with rational gcds".into(),
    }
}

fn int_coeff(c: &CycElt) -> Option<BigInt> {
    if c.coeffs.iter().skip(1).all(|x| x.is_zero()) {
        Some(c.coeffs[0].clone())
    } else {
        None
    }
}

/// Specialize all grid generators except `keep` at the given integer values.
fn specialize(f: &TowerPoly, keep: usize, values: &[i64]) -> Option<Vec<BigRational>> {
    let degs = f.degrees();
    let mut out = vec![BigRational::zero(); degs[keep] as usize + 1];
    for (m, c) in &f.terms {
        let mut v = BigRational::from(int_coeff(c)?);
        for (i, e) in m.iter().enumerate() {
            if i != keep {
                v *= BigRational::from(BigInt::from(values[i]).pow(*e as u32));
            }
        }
        out[m[keep] as usize] += v;
    }
    Some(out)
}

fn rat_trim(mut f: Vec<BigRational>) -> Vec<BigRational> {
    while f.len() > 1 && f.last().unwrap().is_zero() {
        f.pop();
    }
    f
}

fn rat_gcd_degree(a: &[BigRational], b: &[BigRational]) -> usize {
    let mut a = rat_trim(a.to_vec());
    let mut b = rat_trim(b.to_vec());
    loop {
        if b.iter().all(|c| c.is_zero()) {
            return a.len() - 1;
        }
        if a.len() < b.len() {
            std::mem::swap(&mut a, &mut b);
            continue;
        }
        // a mod b
        let mut r = a.clone();
        let lb = b.last().unwrap().clone();
        for k in (b.len() - 1..r.len()).rev() {
            let f = &r[k] / &lb;
            if f.is_zero() {
                continue;
            }
            let shift = k + 1 - b.len();
            for (i, c) in b.iter().enumerate() {
                let v = &r[i + shift] - &f * c;
                r[i + shift] = v;
            }
        }
        a = b;
        b = rat_trim(r);
        if b.len() == 1 && b[0].is_zero() {
            return a.len() - 1;
        }
    }
}

fn rat_derivative(f: &[BigRational]) -> Vec<BigRational> {
    if f.len() <= 1 {
        return vec![BigRational::zero()];
    }
    f.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigRational::from(BigInt::from(i)))
        .collect()
}

fn squarefree_probe(f: &TowerPoly) -> Option<bool> {
    if f.is_constant() {
        let c = int_coeff(&f.constant_part())?;
        return squarefree_int(&c);
    }
    let nvars = f.ambient.vars().len();
    let degs = f.degrees();
    let keep = degs.iter().position(|d| *d > 0)?;
    // a repeated factor survives every specialization; several clean probes
    // make a repeat very unlikely
    let probes: &[&[i64]] = &[&[1, 2, 3, 5, 7, 11][..nvars.max(1)], &[2, 3, 5, 7, 11, 13][..nvars.max(1)]];
    let mut saw_clean = false;
    for vals in probes {
        let Some(sp) = specialize(f, keep, vals) else {
            return None;
        };
        let sp = rat_trim(sp);
        if sp.len() <= 1 {
            continue;
        }
        let d = rat_derivative(&sp);
        if rat_gcd_degree(&sp, &d) == 0 {
            saw_clean = true;
        }
    }
    if saw_clean {
        Some(true)
    } else {
        None
    }
}

fn coprime_probe(a: &TowerPoly, b: &TowerPoly) -> Option<bool> {
    if a.is_constant() && b.is_constant() {
        let x = int_coeff(&a.constant_part())?;
        let y = int_coeff(&b.constant_part())?;
        return Some(num_integer::gcd(x.abs(), y.abs()).is_one());
    }
    let nvars = a.ambient.vars().len();
    let da = a.degrees();
    let db = b.degrees();
    let keep = (0..nvars).find(|i| da[*i] > 0 && db[*i] > 0)?;
    for vals in [&[1i64, 2, 3, 5, 7, 11][..nvars], &[3, 5, 2, 7, 11, 13][..nvars]] {
        let sa = rat_trim(specialize(a, keep, vals)?);
        let sb = rat_trim(specialize(b, keep, vals)?);
        if sa.len() <= 1 || sb.len() <= 1 {
            continue;
        }
        if rat_gcd_degree(&sa, &sb) == 0 {
            return Some(true);
        }
    }
    None
}

fn squarefree_int(n: &BigInt) -> Option<bool> {
    use num_traits::ToPrimitive;
    let n = n.abs().to_u64()?;
    if n == 0 {
        return Some(false);
    }
    let mut n = n;
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            n /= d;
            if n % d == 0 {
                return Some(false);
            }
        }
        d += 1;
    }
    Some(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::{parse_poly, Ambient, VarSpec};
    use std::sync::Arc;

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

    #[test]
    fn pth_root_detection() {
        let a = amb(3, &["x", "y"]);
        let h = parse_poly(&a, "x^2*y + 3*x - u").unwrap();
        let f = h.pow(3).unwrap();
        assert_eq!(pth_root_poly(&f), Some(h));
        let g = parse_poly(&a, "x^3 + 1").unwrap();
        assert_eq!(pth_root_poly(&g), None);
        assert_eq!(
            pth_root_poly(&TowerPoly::from_i64(&a, 27)),
            Some(TowerPoly::from_i64(&a, 3))
        );
    }

    #[test]
    fn classify_trichotomy() {
        let a = amb(3, &["x"]);
        let f = parse_poly(&a, "(x+1)^3").unwrap();
        assert_eq!(classify(&f, 8).unwrap().class, RamClass::PthPower);
        let f = parse_poly(&a, "1 + 9*x").unwrap(); // defect order 4 > 3
        assert_eq!(classify(&f, 8).unwrap().class, RamClass::Tame);
        let f = parse_poly(&a, "x").unwrap(); // residue x has no cube root
        assert_eq!(classify(&f, 8).unwrap().class, RamClass::Ramified);
        let f = parse_poly(&a, "1 + u^3*x").unwrap(); // level exactly 3
        assert_eq!(classify(&f, 8).unwrap().class, RamClass::Tame);
        let f = parse_poly(&a, "1 + 3*x").unwrap(); // level exactly 2 < 3
        assert_eq!(classify(&f, 8).unwrap().class, RamClass::Ramified);
    }

    #[test]
    fn classify_quadratic_integers() {
        let a = amb(2, &[]);
        let class_of = |n: i64| classify(&TowerPoly::from_i64(&a, n), 8).unwrap().class;
        assert_eq!(class_of(17), RamClass::Tame); // 1 mod 4
        assert_eq!(class_of(5), RamClass::Tame); // 1 mod 4, level exactly 2
        assert_eq!(class_of(3), RamClass::Ramified); // 3 mod 4
        assert_eq!(class_of(7), RamClass::Ramified);
        assert_eq!(class_of(9), RamClass::PthPower);
    }

    #[test]
    fn cprime_identities() {
        for p in [3u64, 5, 7] {
            let a = amb(p, &["x"]);
            let h = parse_poly(&a, "x + 2").unwrap();
            let pair = cprime(&h).unwrap();
            // c = p * c1 * (X - h)
            let back = pair
                .cprime
                .mul(&XPoly::x_minus(&h))
                .unwrap()
                .scale(&TowerPoly::from_i64(&a, p as i64))
                .unwrap();
            assert_eq!(back, pair.c);
            // (X-h)^(p-1) + p*c1 = sum_i X^i h^(p-1-i)
            let lhs = XPoly::x_minus(&h)
                .pow(p - 1)
                .unwrap()
                .add(&pair.cprime.scale(&TowerPoly::from_i64(&a, p as i64)).unwrap())
                .unwrap();
            let mut rhs = XPoly::zero(&a);
            for i in 0..p {
                rhs = rhs
                    .add(&XPoly::x_monomial(
                        &a,
                        i as usize,
                        h.pow(p - 1 - i).unwrap(),
                    ))
                    .unwrap();
            }
            assert_eq!(lhs, rhs);
            // c1 evaluated at X = h is h^(p-1) modulo p
            let at_h = pair.cprime.eval(&h).unwrap();
            let diff = at_h.sub(&h.pow(p - 1).unwrap()).unwrap();
            let ring = a.ring();
            for c in diff.terms.values() {
                assert_eq!(ring.residue(c), 0);
                // divisible by p, not just by u
                assert!(ring.u_valuation(c).map_or(true, |v| v >= p - 1));
            }
        }
    }

    #[test]
    fn cprime_matches_cyclotomic_constant() {
        // evaluating the pair at X = eps, h = 1 recovers -u^(p-1)/p
        for p in [3u64, 5] {
            let a = amb(p, &[]);
            let ring = a.ring();
            let one = TowerPoly::one(&a);
            let pair = cprime(&one).unwrap();
            let at_eps = pair.cprime.eval(&TowerPoly::constant(&a, ring.epsilon())).unwrap();
            assert_eq!(at_eps.constant_part(), ring.c_prime_eps());
        }
    }

    #[test]
    fn eisenstein_shifts() {
        for (p, r) in [(3u64, 1u32), (2, 2), (5, 1), (2, 3), (3, 2)] {
            let rep = eisenstein_shift_check(p, r);
            assert!(rep.eisenstein, "p={p} r={r}");
        }
    }

    #[test]
    fn squarefree_coprime_probes() {
        let a = amb(3, &["x", "y"]);
        let f = parse_poly(&a, "x*y^4 + 27").unwrap();
        let g = parse_poly(&a, "x^4*y + 27").unwrap();
        let rep = squarefree_coprime_check(&[f.clone(), g.clone()]);
        assert_eq!(rep.squarefree, vec![Some(true), Some(true)]);
        assert_eq!(rep.pairwise_coprime, Some(true));
        let sq = f.pow(2).unwrap();
        let rep = squarefree_coprime_check(&[sq]);
        assert_eq!(rep.squarefree, vec![None]); // never reports a repeat as clean
        let rep = squarefree_coprime_check(&[
            TowerPoly::from_i64(&a, 12),
            TowerPoly::from_i64(&a, 35),
        ]);
        assert_eq!(rep.squarefree, vec![Some(false), Some(true)]);
        assert_eq!(rep.pairwise_coprime, Some(true));
    }
}
