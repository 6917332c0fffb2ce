//! End-to-end acceptance gate. Each test covers one release criterion and
//! prints a single `PASS`/`FAIL` line (visible with `--nocapture` or on
//! failure).

use num_bigint::BigInt;
use ramlab_core::algebra::{hb_check, hb_matrices, p_ramified_build, verify_algebra};
use ramlab_core::cyclo::cyclo_ring;
use ramlab_core::polyring::{parse_poly, Ambient, VarSpec};
use ramlab_core::ramification::eisenstein_shift_check;
use ramlab_core::scenarios::{battery, koh_scenario, quadratic_scenario, BatteryProfile};
use std::time::Instant;

fn report(name: &str, ok: bool) {
    println!("acceptance {name}: {}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "acceptance criterion failed: {name}");
}

/// Criterion 1: the full two-factor grid-cover reproduction runs end to end
/// in under a minute with every check green.
#[test]
fn two_factor_grid_cover_end_to_end() {
    let start = Instant::now();
    let rep = koh_scenario(0).expect("scenario must run");
    let elapsed = start.elapsed();
    let ok = rep.all_pass() && elapsed.as_secs() < 60;
    for c in &rep.checks {
        println!("  [{}] {}: {}", if c.pass { "ok" } else { "FAIL" }, c.name, c.detail);
    }
    println!("  elapsed {:?}", elapsed);
    report("two-factor-grid-cover-under-60s", ok);
}

/// Criterion 2: the approximation-order engine agrees with the brute-force
/// digit-search oracle on at least 100 random instances, within five minutes.
#[test]
fn order_oracle_agreement_randomized() {
    let start = Instant::now();
    let p3 = BatteryProfile::default();
    let p2 = BatteryProfile {
        p: 2,
        nvars: 1,
        max_degree: 3,
        coeff_height: 9,
    };
    let r3 = battery(11, 60, &p3).expect("battery must run");
    let r2 = battery(13, 40, &p2).expect("battery must run");
    let agree = |r: &ramlab_core::scenarios::ScenarioReport| {
        r.checks
            .iter()
            .find(|c| c.name == "oracle-agreement")
            .map_or(false, |c| c.pass)
    };
    let elapsed = start.elapsed();
    let ok = agree(&r3) && agree(&r2) && elapsed.as_secs() < 300;
    println!("  100 instances (60 at p=3, 40 at p=2) in {:?}", elapsed);
    report("order-oracle-agreement-100-instances", ok);
}

/// Criterion 3: the cyclotomic unit identities hold at p = 3, 5, 7:
/// p = w u^(p-1) with w a unit, and c'_eps * p = -(eps-1)^(p-1).
#[test]
fn cyclotomic_unit_identities() {
    let mut ok = true;
    for p in [3u64, 5, 7] {
        let (ring, _desc) = cyclo_ring(p).expect("ring must build");
        let u_pow = ring.pow(&ring.u(), p - 1);
        let wu = ring.mul(&ring.unit_w(), &u_pow);
        let p_elt = ring.from_i64(p as i64);
        let id1 = ring.sub(&p_elt, &wu).is_zero();
        // c'_eps * p + (eps-1)^(p-1) = 0
        let lhs = ring.scale(&ring.c_prime_eps(), &BigInt::from(p));
        let rhs = ring.pow(&ring.eps_minus_one(), p - 1);
        let id2 = ring.add(&lhs, &rhs).is_zero();
        // w is a unit: it has an exact inverse
        let id3 = ring.divide_exact(&ring.one(), &ring.unit_w()).is_ok();
        println!("  p = {p}: uniformizer identity {id1}, derivative identity {id2}, unit {id3}");
        ok &= id1 && id2 && id3;
    }
    report("cyclotomic-unit-identities-p-3-5-7", ok);
}

/// Criterion 4: the bidiagonal matrix pair satisfies its minor and cofactor
/// identities at p = 3 (base and cube-root grid) and p = 5.
#[test]
fn matrix_pair_identities() {
    let mut ok = true;

    // p = 3, base ring, product of the two factors with monomial witness
    let amb3 = Ambient::new(3, vec![VarSpec { name: "x".into(), tower: 1 }, VarSpec { name: "y".into(), tower: 1 }]).unwrap();
    let f3 = parse_poly(&amb3, "(x*y^4 + 27)*(x^4*y + 27)^2").unwrap();
    let h3 = parse_poly(&amb3, "x^3*y^2").unwrap();
    let pair = hb_matrices(&f3, &h3, 1).unwrap();
    let c1 = hb_check(&f3, &h3, &pair).unwrap();
    println!("  p = 3 base, n = 1: {c1}");
    ok &= c1;

    // p = 3, cube-root grid, single factor with fractional witness, n = 2
    let grid = Ambient::with_u_root(3, 3, vec![VarSpec { name: "x".into(), tower: 3 }, VarSpec { name: "y".into(), tower: 3 }]).unwrap();
    let fa = parse_poly(&grid, "x*y^4 + 27").unwrap();
    let ha = parse_poly(&grid, "x^(1/3)*y^(4/3)").unwrap();
    let pair = hb_matrices(&fa, &ha, 2).unwrap();
    let c2 = hb_check(&fa, &ha, &pair).unwrap();
    println!("  p = 3 grid, n = 2: {c2}");
    ok &= c2;

    // p = 5 with a linear defect
    let amb5 = Ambient::new(5, vec![VarSpec { name: "x".into(), tower: 1 }]).unwrap();
    let f5 = parse_poly(&amb5, "x^5 + 5*x").unwrap();
    let h5 = parse_poly(&amb5, "x").unwrap();
    let pair = hb_matrices(&f5, &h5, 1).unwrap();
    let c3 = hb_check(&f5, &h5, &pair).unwrap();
    println!("  p = 5, n = 1: {c3}");
    ok &= c3;

    report("matrix-pair-minor-cofactor-identities", ok);
}

/// Criterion 5: thirty squarefree odd integers below 1000 get the right
/// quadratic-order verdict and an exactly matching discriminant.
#[test]
fn quadratic_orders_residue_rule() {
    fn squarefree(mut n: i64) -> bool {
        n = n.abs();
        let mut d = 2;
        while d * d <= n {
            if n % (d * d) == 0 {
                return false;
            }
            d += 1;
        }
        true
    }
    let mut count = 0usize;
    let mut ok = true;
    let mut f = 3i64;
    let mut sign = 1i64;
    while count < 30 {
        let cand = sign * f;
        sign = -sign;
        if sign > 0 {
            f += 2;
        }
        if f >= 1000 {
            break;
        }
        if !squarefree(cand) {
            continue;
        }
        let rep = quadratic_scenario(cand).expect("scenario must run");
        if !rep.all_pass() {
            println!("  FAIL at f = {cand}");
            ok = false;
        }
        count += 1;
    }
    println!("  checked {count} squarefree odd integers");
    report("quadratic-orders-30-integers", ok && count == 30);
}

/// Criterion 6: the wildly ramified rank-p covers build and verify for both
/// exponent profiles, with zero residual and the dimension-3 rank bound 4374.
#[test]
fn wild_cover_construction() {
    let mut ok = true;
    for (t, l, q) in [(1u64, 1u64, 2u64), (2, 2, 5)] {
        let cover = p_ramified_build(3, t, l, 3).expect("cover must build");
        let verified = verify_algebra(&cover.alg).map_or(false, |c| c.all_ok());
        let good = cover.q == q
            && cover.residual_ok
            && verified
            && cover.rank_bound == BigInt::from(4374u64)
            && cover.alg.rank() == 3;
        println!(
            "  t = {t}, l = {l}: q = {} (want {q}), residual zero {}, verified {verified}",
            cover.q, cover.residual_ok
        );
        ok &= good;
    }
    report("wild-covers-q-2-and-5-bound-4374", ok);
}

/// Criterion 7: the shifted cyclotomic modulus is Eisenstein for the prime
/// powers 3, 4, 5, 8, 9.
#[test]
fn eisenstein_prime_power_shifts() {
    let mut ok = true;
    for (p, r) in [(3u64, 1u32), (2, 2), (5, 1), (2, 3), (3, 2)] {
        let rep = eisenstein_shift_check(p, r);
        println!("  p^r = {}: Eisenstein {}", p.pow(r), rep.eisenstein);
        ok &= rep.eisenstein;
    }
    report("eisenstein-shifts-prime-powers", ok);
}

/// Criterion 8: the structural invariants hold across randomized batteries:
/// classification is invariant under multiplying by a p-th power of a unit,
/// agrees across prime-to-p powers, and every tame verdict yields a verified
/// rank-p cover.
#[test]
fn classification_invariance_properties() {
    let names = [
        "unit-power-invariance",
        "coset-power-agreement",
        "tame-covers-verified",
    ];
    let mut ok = true;
    for (seed, profile) in [
        (21u64, BatteryProfile::default()),
        (
            23,
            BatteryProfile {
                p: 2,
                nvars: 1,
                max_degree: 3,
                coeff_height: 9,
            },
        ),
    ] {
        let rep = battery(seed, 40, &profile).expect("battery must run");
        for n in names {
            let pass = rep
                .checks
                .iter()
                .find(|c| c.name == n)
                .map_or(false, |c| c.pass);
            println!("  p = {}, seed {seed}: {n} {pass}", profile.p);
            ok &= pass;
        }
    }
    report("classification-invariance-properties", ok);
}
