//! Python bindings: each function performs one exact computation and returns
//! a JSON string so results stay faithful to the arbitrary-precision core.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use ramlab_core::algebra::{normalize_degree_p, p_ramified_build, verify_algebra};
use ramlab_core::cyclo::cyclo_ring;
use ramlab_core::polyring::{parse_poly, print_poly, Ambient, LocalElt, TowerPoly, VarSpec};
use ramlab_core::ramification::{classify as classify_core, eisenstein_shift_check};
use ramlab_core::scenarios::{battery as battery_core, koh_scenario, quadratic_scenario, BatteryProfile};
use ramlab_core::valuation::{gamma as gamma_core, Level};
use serde_json::json;
use std::sync::Arc;

fn bad<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn build_ambient(
    p: u64,
    vars: Vec<(String, u64)>,
    u_root_index: u64,
) -> PyResult<Arc<Ambient>> {
    let specs = vars
        .into_iter()
        .map(|(name, tower)| VarSpec { name, tower })
        .collect();
    Ambient::with_u_root(p, u_root_index, specs).map_err(bad)
}

fn level_json(l: &Level) -> serde_json::Value {
    match l {
        Level::Finite(n) => json!({ "finite": n }),
        Level::AtLeast(n) => json!({ "at_least": n }),
    }
}

fn local_json(w: &LocalElt) -> serde_json::Value {
    json!({ "num": print_poly(w.num()), "den": print_poly(w.den()) })
}

fn parse_in(ambient: &Arc<Ambient>, f: &str) -> PyResult<TowerPoly> {
    parse_poly(ambient, f).map_err(bad)
}

/// Classify the degree-p Kummer cover of `f`; returns a JSON report with the
/// verdict, the tameness threshold, and the order certificate when computed.
#[pyfunction]
#[pyo3(signature = (p, vars, f, depth=None, u_root_index=1))]
fn classify(
    p: u64,
    vars: Vec<(String, u64)>,
    f: &str,
    depth: Option<u64>,
    u_root_index: u64,
) -> PyResult<String> {
    let ambient = build_ambient(p, vars, u_root_index)?;
    let f = parse_in(&ambient, f)?;
    let cap = depth.unwrap_or(2 * p * u_root_index);
    let rep = classify_core(&f, cap).map_err(bad)?;
    let doc = json!({
        "class": format!("{:?}", rep.class),
        "threshold": rep.threshold,
        "gamma": rep.gamma.as_ref().map(|c| json!({
            "level": level_json(&c.level),
            "witness": c.witness.as_ref().map(local_json),
        })),
        "root": rep.root.as_ref().map(print_poly),
    });
    Ok(doc.to_string())
}

/// Compute the approximation order of `f` by p-th powers up to `depth`,
/// with the approximating witness.
#[pyfunction]
#[pyo3(signature = (p, vars, f, depth, u_root_index=1))]
fn gamma(
    p: u64,
    vars: Vec<(String, u64)>,
    f: &str,
    depth: u64,
    u_root_index: u64,
) -> PyResult<String> {
    let ambient = build_ambient(p, vars, u_root_index)?;
    let f = parse_in(&ambient, f)?;
    let cert = gamma_core(&f, depth).map_err(bad)?;
    let doc = json!({
        "level": level_json(&cert.level),
        "witness": cert.witness.as_ref().map(local_json),
        "exact_power": cert.exact_power,
    });
    Ok(doc.to_string())
}

/// Build and verify the rank-p free cover of `f` for the witness `h`;
/// returns the basis and full multiplication table.
#[pyfunction]
#[pyo3(signature = (p, vars, f, h, u_root_index=1))]
fn normalize(
    p: u64,
    vars: Vec<(String, u64)>,
    f: &str,
    h: &str,
    u_root_index: u64,
) -> PyResult<String> {
    let ambient = build_ambient(p, vars, u_root_index)?;
    let f = parse_in(&ambient, f)?;
    let h = parse_in(&ambient, h)?;
    let h = LocalElt::new(h, TowerPoly::one(&ambient)).map_err(bad)?;
    let alg = normalize_degree_p(&f, &h).map_err(bad)?;
    let check = verify_algebra(&alg).map_err(bad)?;
    let table: Vec<Vec<Vec<serde_json::Value>>> = alg
        .table
        .iter()
        .map(|row| {
            row.iter()
                .map(|cell| cell.iter().map(local_json).collect())
                .collect()
        })
        .collect();
    let doc = json!({
        "basis": alg.basis,
        "table": table,
        "verified": check.all_ok(),
    });
    Ok(doc.to_string())
}

/// Build the wildly ramified rank-p cover for parameters (p, t, l).
#[pyfunction]
#[pyo3(signature = (p, t, l, dim=3))]
fn wild_cover(p: u64, t: u64, l: u64, dim: u64) -> PyResult<String> {
    let cover = p_ramified_build(p, t, l, dim).map_err(bad)?;
    let check = verify_algebra(&cover.alg).map_err(bad)?;
    let doc = json!({
        "q": cover.q,
        "rank": cover.alg.rank(),
        "rank_bound": cover.rank_bound.to_string(),
        "residual_ok": cover.residual_ok,
        "verified": check.all_ok(),
    });
    Ok(doc.to_string())
}

/// Run the full two-factor grid-cover reproduction; returns the check list.
#[pyfunction]
#[pyo3(signature = (extra_vars=0))]
fn koh(extra_vars: usize) -> PyResult<String> {
    let rep = koh_scenario(extra_vars).map_err(bad)?;
    serde_json::to_string(&rep).map_err(bad)
}

/// Quadratic-order check at p = 2 for a squarefree odd integer.
#[pyfunction]
fn quad(f: i64) -> PyResult<String> {
    let rep = quadratic_scenario(f).map_err(bad)?;
    serde_json::to_string(&rep).map_err(bad)
}

/// Randomized consistency battery at the given prime.
#[pyfunction]
#[pyo3(signature = (seed, count, p=3))]
fn battery(seed: u64, count: usize, p: u64) -> PyResult<String> {
    let profile = if p == 2 {
        BatteryProfile {
            p,
            nvars: 1,
            max_degree: 3,
            coeff_height: 9,
        }
    } else {
        BatteryProfile { p, ..BatteryProfile::default() }
    };
    let rep = battery_core(seed, count, &profile).map_err(bad)?;
    serde_json::to_string(&rep).map_err(bad)
}

/// Check that the shifted cyclotomic modulus for p^r is Eisenstein at p.
#[pyfunction]
fn eisenstein(p: u64, r: u32) -> PyResult<String> {
    let rep = eisenstein_shift_check(p, r);
    serde_json::to_string(&rep).map_err(bad)
}

/// Describe the cyclotomic coefficient ring at p: modulus, the unit `w`
/// with p = w u^(p-1), and the derivative constant.
#[pyfunction]
fn ring(p: u64) -> PyResult<String> {
    let (_ring, desc) = cyclo_ring(p).map_err(bad)?;
    serde_json::to_string(&desc).map_err(bad)
}

#[pymodule]
fn ramlab_py(_py: Python<'_>, m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(wild_cover, m)?)?;
    m.add_function(wrap_pyfunction!(koh, m)?)?;
    m.add_function(wrap_pyfunction!(quad, m)?)?;
    m.add_function(wrap_pyfunction!(battery, m)?)?;
    m.add_function(wrap_pyfunction!(eisenstein, m)?)?;
    m.add_function(wrap_pyfunction!(ring, m)?)?;
    Ok(())
}
