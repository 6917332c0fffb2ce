//! `ramlab`: classify ramification of Kummer elements, compute approximation
//! orders with certificates, build verified free covers, and re-check any
//! emitted certificate.
//!
//! Exit codes: 0 success, 1 ramified verdict or failed verification,
//! 2 undecided (search cap reached), 64 usage error.

mod manifest;

use clap::{Parser, Subcommand};
use manifest::{
    algebra_cert_value, algebra_from_value, ambient_from_value, classify_cert_value, err,
    gamma_cert_from_value, gamma_cert_value, hb_cert_value, hb_pair_from_value, CliError,
    Manifest, SCHEMA,
};
use ramlab_core::algebra::{
    hb_check, hb_matrices, normalize_degree_p, p_ramified_build, roberts_build, tensor_compose,
    verify_algebra,
};
use ramlab_core::polyring::{parse_poly, print_poly, LocalElt, TowerPoly, XPoly};
use ramlab_core::ramification::{classify, pth_root_poly, RamClass};
use ramlab_core::scenarios::{battery, koh_scenario, quadratic_scenario, BatteryProfile, ScenarioReport};
use ramlab_core::valuation::{gamma, verify_gamma_cert, Level};
use serde_json::{json, Value};

const EXIT_OK: i32 = 0;
const EXIT_FAIL: i32 = 1;
const EXIT_UNDECIDED: i32 = 2;
const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(
    name = "ramlab",
    about = "exact p-ramification classifier and verified free-cover builder",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify the degree-p Kummer cover of the manifest element `f`
    Classify {
        #[arg(long)]
        manifest: String,
        /// search cap on the approximation order
        #[arg(long)]
        depth: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Compute the approximation order of `f` by p-th powers, with witness
    Gamma {
        #[arg(long)]
        manifest: String,
        #[arg(long)]
        depth: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Build the rank-p free cover of `f` in normal form
    Normalize {
        #[arg(long)]
        manifest: String,
        #[arg(long)]
        depth: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Build the bidiagonal matrix pair for `f` with witness `h`
    Hb {
        #[arg(long)]
        manifest: String,
        /// uniformizer exponent of the subdiagonal
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Tensor the covers of manifest elements `a` and `b`
    Tensor {
        #[arg(long)]
        manifest: String,
        #[arg(long)]
        depth: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Adjoin t-th roots of all manifest elements (t prime to p)
    Roberts {
        #[arg(long)]
        manifest: String,
        #[arg(long)]
        t: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Build the wildly ramified rank-p cover for parameters (p, t, l)
    #[command(name = "p-ramified")]
    PRamified {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        t: u64,
        #[arg(long)]
        l: u64,
        /// dimension entering the reported rank bound
        #[arg(long, default_value_t = 3)]
        dim: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run the full two-factor grid-cover reproduction
    Koh {
        #[arg(long, default_value_t = 0)]
        extra_vars: usize,
        #[arg(long)]
        out: Option<String>,
    },
    /// Quadratic-order sanity check at p = 2 for a squarefree odd integer
    Quad {
        #[arg(long)]
        f: i64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Randomized consistency battery
    Battery {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        p: u64,
        #[arg(long)]
        nvars: Option<usize>,
        #[arg(long)]
        degree: Option<u64>,
        #[arg(long)]
        height: Option<i64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Re-check an emitted certificate
    Verify {
        #[arg(long)]
        cert: String,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help and version requests are not usage errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli.cmd) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_USAGE);
        }
    }
}

fn write_out(out: &Option<String>, doc: &Value) -> Result<(), CliError> {
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(doc).map_err(err)?;
        std::fs::write(path, text + "\n")
            .map_err(|e| CliError::new(format!("cannot write {path}: {e}")))?;
    }
    Ok(())
}

fn level_human(l: &Level) -> String {
    match l {
        Level::Finite(n) => format!("exactly {n}"),
        Level::AtLeast(n) => format!("at least {n}"),
    }
}

fn default_cap(m: &Manifest) -> u64 {
    2 * m.ambient.p() * m.ambient.u_root_index()
}

fn run(cmd: Cmd) -> Result<i32, CliError> {
    match cmd {
        Cmd::Classify {
            manifest,
            depth,
            out,
        } => {
            let m = Manifest::load(&manifest)?;
            let f = m.element("f")?;
            let cap = depth.unwrap_or_else(|| default_cap(&m));
            let rep = classify(f, cap).map_err(err)?;
            println!(
                "classify {}: {:?} (threshold {})",
                print_poly(f),
                rep.class,
                rep.threshold
            );
            if let Some(c) = &rep.gamma {
                println!("  approximation order {}", level_human(&c.level));
            }
            write_out(&out, &classify_cert_value(f, cap, &rep))?;
            Ok(match rep.class {
                RamClass::Tame | RamClass::PthPower => EXIT_OK,
                RamClass::Ramified => EXIT_FAIL,
                RamClass::Unknown => EXIT_UNDECIDED,
            })
        }
        Cmd::Gamma {
            manifest,
            depth,
            out,
        } => {
            let m = Manifest::load(&manifest)?;
            let f = m.element("f")?;
            let cap = depth.unwrap_or_else(|| default_cap(&m));
            match gamma(f, cap) {
                Ok(cert) => {
                    println!(
                        "gamma {}: {} (cap {cap})",
                        print_poly(f),
                        level_human(&cert.level)
                    );
                    if let Some(w) = &cert.witness {
                        println!("  witness ({}) / ({})", print_poly(w.num()), print_poly(w.den()));
                    }
                    write_out(&out, &gamma_cert_value(f, cap, &cert))?;
                    Ok(EXIT_OK)
                }
                Err(e) => {
                    println!("gamma {}: undecided ({e})", print_poly(f));
                    Ok(EXIT_UNDECIDED)
                }
            }
        }
        Cmd::Normalize {
            manifest,
            depth,
            out,
        } => {
            let m = Manifest::load(&manifest)?;
            let f = m.element("f")?;
            let h = witness_for(&m, f, depth)?;
            let alg = match normalize_degree_p(f, &h) {
                Ok(a) => a,
                Err(e) => {
                    println!("normalize {}: {e}", print_poly(f));
                    return Ok(EXIT_FAIL);
                }
            };
            let ck = verify_algebra(&alg).map_err(err)?;
            println!(
                "normalize {}: rank {}, axioms verified: {}",
                print_poly(f),
                alg.rank(),
                ck.all_ok()
            );
            write_out(
                &out,
                &algebra_cert_value(
                    &alg,
                    json!({ "f": print_poly(f), "witness": manifest::local_value(&h) }),
                ),
            )?;
            Ok(if ck.all_ok() { EXIT_OK } else { EXIT_FAIL })
        }
        Cmd::Hb { manifest, n, out } => {
            let m = Manifest::load(&manifest)?;
            let f = m.element("f")?;
            let h = m.element("h")?;
            let n = n
                .or_else(|| m.params.get("n").and_then(Value::as_u64))
                .unwrap_or(1);
            let pair = hb_matrices(f, h, n).map_err(err)?;
            let ok = hb_check(f, h, &pair).map_err(err)?;
            println!(
                "hb {} (h = {}, n = {n}): minor and cofactor identities: {ok}",
                print_poly(f),
                print_poly(h)
            );
            write_out(&out, &hb_cert_value(f, h, &pair))?;
            Ok(if ok { EXIT_OK } else { EXIT_FAIL })
        }
        Cmd::Tensor {
            manifest,
            depth,
            out,
        } => {
            let m = Manifest::load(&manifest)?;
            let a = m.element("a")?;
            let b = m.element("b")?;
            let ha = witness_for(&m, a, depth)?;
            let hb = witness_for(&m, b, depth)?;
            let ca = normalize_degree_p(a, &ha).map_err(err)?;
            let cb = normalize_degree_p(b, &hb).map_err(err)?;
            let t = tensor_compose(&ca, &cb).map_err(err)?;
            let ck = verify_algebra(&t).map_err(err)?;
            println!(
                "tensor cover({}) (x) cover({}): rank {}, axioms verified: {}",
                print_poly(a),
                print_poly(b),
                t.rank(),
                ck.all_ok()
            );
            write_out(
                &out,
                &algebra_cert_value(
                    &t,
                    json!({ "a": print_poly(a), "b": print_poly(b) }),
                ),
            )?;
            Ok(if ck.all_ok() { EXIT_OK } else { EXIT_FAIL })
        }
        Cmd::Roberts { manifest, t, out } => {
            let m = Manifest::load(&manifest)?;
            let elems: Vec<TowerPoly> = m.elements.values().cloned().collect();
            let alg = roberts_build(t, &elems).map_err(err)?;
            let ck = verify_algebra(&alg).map_err(err)?;
            println!(
                "roberts t = {t} on {} elements: rank {}, axioms verified: {}",
                elems.len(),
                alg.rank(),
                ck.all_ok()
            );
            write_out(
                &out,
                &algebra_cert_value(
                    &alg,
                    json!({
                        "t": t,
                        "elements": elems.iter().map(print_poly).collect::<Vec<_>>(),
                    }),
                ),
            )?;
            Ok(if ck.all_ok() { EXIT_OK } else { EXIT_FAIL })
        }
        Cmd::PRamified { p, t, l, dim, out } => {
            let cover = p_ramified_build(p, t, l, dim).map_err(err)?;
            let ck = verify_algebra(&cover.alg).map_err(err)?;
            let ok = ck.all_ok() && cover.residual_ok;
            println!(
                "p-ramified (p = {p}, t = {t}, l = {l}): q = {}, rank {}, residual zero: {}, \
                 axioms verified: {}, rank bound for dimension {dim}: {}",
                cover.q,
                cover.alg.rank(),
                cover.residual_ok,
                ck.all_ok(),
                cover.rank_bound
            );
            write_out(
                &out,
                &json!({
                    "schema": SCHEMA,
                    "kind": "wild",
                    "ring": manifest::ring_value(&cover.alg.ambient),
                    "params": { "p": p, "t": t, "l": l, "dim": dim },
                    "q": cover.q,
                    "rank_bound": cover.rank_bound.to_string(),
                    "residual_ok": cover.residual_ok,
                    "algebra": manifest::algebra_value(&cover.alg),
                }),
            )?;
            Ok(if ok { EXIT_OK } else { EXIT_FAIL })
        }
        Cmd::Koh { extra_vars, out } => {
            let rep = koh_scenario(extra_vars).map_err(err)?;
            finish_scenario(rep, &out)
        }
        Cmd::Quad { f, out } => {
            let rep = quadratic_scenario(f).map_err(err)?;
            finish_scenario(rep, &out)
        }
        Cmd::Battery {
            seed,
            count,
            p,
            nvars,
            degree,
            height,
            out,
        } => {
            let mut profile = BatteryProfile { p, ..BatteryProfile::default() };
            if p == 2 {
                profile.nvars = 1;
                profile.coeff_height = 9;
            }
            if let Some(n) = nvars {
                profile.nvars = n;
            }
            if let Some(d) = degree {
                profile.max_degree = d;
            }
            if let Some(h) = height {
                profile.coeff_height = h;
            }
            let rep = battery(seed, count, &profile).map_err(err)?;
            finish_scenario(rep, &out)
        }
        Cmd::Verify { cert } => cmd_verify(&cert),
    }
}

/// Witness for a rank-p cover: the manifest element `h` (with optional
/// denominator `h_den`) when present, otherwise the certificate witness of
/// the approximation-order computation.
fn witness_for(
    m: &Manifest,
    f: &TowerPoly,
    depth: Option<u64>,
) -> Result<LocalElt, CliError> {
    if let Ok(h) = m.element("h") {
        let den = match m.elements.get("h_den") {
            Some(d) => d.clone(),
            None => TowerPoly::one(&m.ambient),
        };
        return LocalElt::new(h.clone(), den).map_err(err);
    }
    let cap = depth.unwrap_or_else(|| default_cap(m));
    let cert = gamma(f, cap).map_err(err)?;
    cert.witness
        .ok_or_else(|| CliError::new("no approximation witness found; supply element \"h\""))
}

fn finish_scenario(rep: ScenarioReport, out: &Option<String>) -> Result<i32, CliError> {
    for c in &rep.checks {
        println!(
            "[{}] {} {}: {}",
            rep.scenario,
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    for note in &rep.notes {
        println!("[{}] note: {note}", rep.scenario);
    }
    let doc = json!({
        "schema": SCHEMA,
        "kind": "scenario",
        "report": serde_json::to_value(&rep).map_err(err)?,
    });
    write_out(out, &doc)?;
    Ok(if rep.all_pass() { EXIT_OK } else { EXIT_FAIL })
}

// ---------------------------------------------------------------------------
// the standalone re-verifier
// ---------------------------------------------------------------------------

fn cmd_verify(path: &str) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(format!("cannot read {path}: {e}")))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::new(format!("bad JSON in {path}: {e}")))?;
    if doc.get("schema").and_then(Value::as_u64) != Some(SCHEMA) {
        return Err(CliError::new("certificate must carry \"schema\": 1"));
    }
    let kind = doc
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::new("certificate missing \"kind\""))?;
    let ok = match kind {
        "gamma" => verify_gamma_doc(&doc)?,
        "classify" => verify_classify_doc(&doc)?,
        "algebra" => verify_algebra_doc(&doc)?,
        "hb" => verify_hb_doc(&doc)?,
        "wild" => verify_wild_doc(&doc)?,
        "scenario" => verify_scenario_doc(&doc)?,
        other => return Err(CliError::new(format!("unknown certificate kind \"{other}\""))),
    };
    println!("verify {path}: {}", if ok { "PASS" } else { "FAIL" });
    Ok(if ok { EXIT_OK } else { EXIT_FAIL })
}

fn doc_ambient(doc: &Value) -> Result<std::sync::Arc<ramlab_core::polyring::Ambient>, CliError> {
    ambient_from_value(
        doc.get("ring")
            .ok_or_else(|| CliError::new("certificate missing \"ring\""))?,
    )
}

fn verify_gamma_doc(doc: &Value) -> Result<bool, CliError> {
    let ambient = doc_ambient(doc)?;
    let f = parse_poly(
        &ambient,
        doc.get("f")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::new("certificate missing \"f\""))?,
    )
    .map_err(err)?;
    let cap = doc
        .get("cap")
        .and_then(Value::as_u64)
        .ok_or_else(|| CliError::new("certificate missing \"cap\""))?;
    let cert = gamma_cert_from_value(&ambient, doc)?;
    verify_gamma_cert(&f, &cert, cap).map_err(err)
}

fn verify_classify_doc(doc: &Value) -> Result<bool, CliError> {
    let ambient = doc_ambient(doc)?;
    let f = parse_poly(
        &ambient,
        doc.get("f")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::new("certificate missing \"f\""))?,
    )
    .map_err(err)?;
    let cap = doc
        .get("cap")
        .and_then(Value::as_u64)
        .ok_or_else(|| CliError::new("certificate missing \"cap\""))?;
    let threshold = ambient.p() * ambient.u_root_index() * {
        // v(p) = e(p-1), threshold p/(p-1) v(p) = p e with e the root index
        1
    };
    if doc.get("threshold").and_then(Value::as_u64) != Some(threshold) {
        return Ok(false);
    }
    let class = doc
        .get("class")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::new("certificate missing \"class\""))?;
    match class {
        "PthPower" => {
            let root = parse_poly(
                &ambient,
                doc.get("root")
                    .and_then(Value::as_str)
                    .ok_or_else(|| CliError::new("p-th power verdict needs a root"))?,
            )
            .map_err(err)?;
            let diff = root
                .pow(ambient.p())
                .map_err(err)?
                .sub(&f)
                .map_err(err)?;
            Ok(diff.is_zero())
        }
        "Unknown" => Ok(true),
        "Tame" | "Ramified" => {
            let nonunit = f.ord_at().map_or(false, |v| v >= 1);
            if class == "Ramified" && nonunit && pth_root_poly(&f).is_none() {
                return Ok(true);
            }
            let gdoc = doc
                .get("gamma")
                .filter(|g| !g.is_null())
                .ok_or_else(|| CliError::new("verdict needs an order certificate"))?;
            let cert = gamma_cert_from_value(&ambient, gdoc)?;
            if !verify_gamma_cert(&f, &cert, cap).map_err(err)? {
                return Ok(false);
            }
            Ok(match class {
                "Tame" => cert.level.at_least(threshold),
                _ => !cert.level.at_least(threshold) && matches!(cert.level, Level::Finite(_)),
            })
        }
        _ => Err(CliError::new(format!("unknown class \"{class}\""))),
    }
}

fn verify_algebra_doc(doc: &Value) -> Result<bool, CliError> {
    let ambient = doc_ambient(doc)?;
    let alg = algebra_from_value(
        &ambient,
        doc.get("algebra")
            .ok_or_else(|| CliError::new("certificate missing \"algebra\""))?,
    )?;
    Ok(verify_algebra(&alg).map_err(err)?.all_ok())
}

fn verify_hb_doc(doc: &Value) -> Result<bool, CliError> {
    let ambient = doc_ambient(doc)?;
    let get = |k: &str| -> Result<&str, CliError> {
        doc.get(k)
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::new(format!("certificate missing \"{k}\"")))
    };
    let f = parse_poly(&ambient, get("f")?).map_err(err)?;
    let h = parse_poly(&ambient, get("h")?).map_err(err)?;
    let pair = hb_pair_from_value(&ambient, doc)?;
    // defining identity: X^p - f = (X - h)^p + u^(n(p-1)) gamma
    let p = ambient.p();
    let xp = XPoly::x_monomial(&ambient, p as usize, TowerPoly::one(&ambient));
    let lhs = xp.sub(&XPoly::constant(f.clone())).map_err(err)?;
    let shift = pair.n * (p - 1);
    let scaled = XPoly {
        coeffs: pair.gamma.coeffs.iter().map(|c| c.mul_upow(shift)).collect(),
    };
    let rhs = XPoly::x_minus(&h)
        .pow(p)
        .map_err(err)?
        .add(&scaled)
        .map_err(err)?;
    if !lhs.sub(&rhs).map_err(err)?.is_zero() {
        return Ok(false);
    }
    hb_check(&f, &h, &pair).map_err(err)
}

fn verify_wild_doc(doc: &Value) -> Result<bool, CliError> {
    let ambient = doc_ambient(doc)?;
    let alg = algebra_from_value(
        &ambient,
        doc.get("algebra")
            .ok_or_else(|| CliError::new("certificate missing \"algebra\""))?,
    )?;
    let params = doc
        .get("params")
        .ok_or_else(|| CliError::new("certificate missing \"params\""))?;
    let getp = |k: &str| -> Result<u64, CliError> {
        params
            .get(k)
            .and_then(Value::as_u64)
            .ok_or_else(|| CliError::new(format!("params missing \"{k}\"")))
    };
    let (p, t, l, dim) = (getp("p")?, getp("t")?, getp("l")?, getp("dim")?);
    let q = doc
        .get("q")
        .and_then(Value::as_u64)
        .ok_or_else(|| CliError::new("certificate missing \"q\""))?;
    // the exponent arithmetic: lp(p-1) + tl = pq + 1 with q < lp
    if (l * t) % p != 1 || l * p * (p - 1) + t * l != p * q + 1 || q >= l * p {
        return Ok(false);
    }
    let bound = num_bigint::BigInt::from(p - 1)
        * num_bigint::BigInt::from(p).pow((p * (dim - 1) + 1) as u32);
    if doc.get("rank_bound").and_then(Value::as_str) != Some(bound.to_string().as_str()) {
        return Ok(false);
    }
    if doc.get("residual_ok").and_then(Value::as_bool) != Some(true) {
        return Ok(false);
    }
    Ok(alg.rank() as u64 == p && verify_algebra(&alg).map_err(err)?.all_ok())
}

fn verify_scenario_doc(doc: &Value) -> Result<bool, CliError> {
    let report = doc
        .get("report")
        .ok_or_else(|| CliError::new("certificate missing \"report\""))?;
    let scenario = report
        .get("scenario")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::new("report missing \"scenario\""))?;
    let inputs = report
        .get("inputs")
        .ok_or_else(|| CliError::new("report missing \"inputs\""))?;
    let fresh = match scenario {
        "koh" => koh_scenario(
            inputs
                .get("num_extra_vars")
                .and_then(Value::as_u64)
                .unwrap_or(0) as usize,
        )
        .map_err(err)?,
        "quad" => quadratic_scenario(
            inputs
                .get("f")
                .and_then(Value::as_i64)
                .ok_or_else(|| CliError::new("quad inputs missing \"f\""))?,
        )
        .map_err(err)?,
        "battery" => {
            let profile = inputs
                .get("profile")
                .ok_or_else(|| CliError::new("battery inputs missing \"profile\""))?;
            let prof = BatteryProfile {
                p: profile.get("p").and_then(Value::as_u64).unwrap_or(3),
                nvars: profile.get("nvars").and_then(Value::as_u64).unwrap_or(2) as usize,
                max_degree: profile.get("max_degree").and_then(Value::as_u64).unwrap_or(4),
                coeff_height: profile
                    .get("coeff_height")
                    .and_then(Value::as_i64)
                    .unwrap_or(27),
            };
            battery(
                inputs.get("seed").and_then(Value::as_u64).unwrap_or(0),
                inputs.get("count").and_then(Value::as_u64).unwrap_or(0) as usize,
                &prof,
            )
            .map_err(err)?
        }
        other => return Err(CliError::new(format!("unknown scenario \"{other}\""))),
    };
    // replay: the stored checks must match a fresh deterministic run
    let stored = report
        .get("checks")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::new("report missing \"checks\""))?;
    if stored.len() != fresh.checks.len() {
        return Ok(false);
    }
    for (s, c) in stored.iter().zip(&fresh.checks) {
        if s.get("name").and_then(Value::as_str) != Some(c.name.as_str())
            || s.get("pass").and_then(Value::as_bool) != Some(c.pass)
        {
            return Ok(false);
        }
    }
    Ok(fresh.all_pass())
}
