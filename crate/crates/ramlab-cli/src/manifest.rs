//! Manifest and certificate file formats.
//!
//! A manifest describes an ambient ring and named polynomials in the
//! documented grammar; a certificate is the JSON artifact a subcommand
//! emits, re-checkable by `ramlab verify` through an arithmetic route that
//! does not depend on how the artifact was built. All files carry
//! `"schema": 1`.

use ramlab_core::algebra::{HBPair, KummerAlg};
use ramlab_core::polyring::{
    parse_poly, print_poly, Ambient, LocalElt, TowerPoly, VarSpec, XPoly,
};
use ramlab_core::ramification::ClassifyReport;
use ramlab_core::valuation::{GammaCert, Level};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::sync::Arc;

pub const SCHEMA: u64 = 1;

#[derive(Debug)]
pub struct CliError(pub String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn new(msg: impl Into<String>) -> Self {
        CliError(msg.into())
    }
}

pub fn err<E: std::fmt::Display>(e: E) -> CliError {
    CliError(e.to_string())
}

/// Parsed manifest: the ambient ring plus named elements.
pub struct Manifest {
    pub ambient: Arc<Ambient>,
    pub elements: BTreeMap<String, TowerPoly>,
    pub params: Value,
}

impl Manifest {
    pub fn from_value(doc: &Value) -> Result<Self, CliError> {
        if doc.get("schema").and_then(Value::as_u64) != Some(SCHEMA) {
            return Err(CliError::new("manifest must carry \"schema\": 1"));
        }
        let p = doc
            .get("p")
            .and_then(Value::as_u64)
            .ok_or_else(|| CliError::new("manifest missing \"p\""))?;
        let u_root = doc.get("u_root_index").and_then(Value::as_u64).unwrap_or(1);
        let vars: Vec<VarSpec> = match doc.get("vars") {
            None => Vec::new(),
            Some(v) => v
                .as_array()
                .ok_or_else(|| CliError::new("\"vars\" must be an array"))?
                .iter()
                .map(|e| {
                    let name = e
                        .get("name")
                        .and_then(Value::as_str)
                        .ok_or_else(|| CliError::new("variable missing \"name\""))?;
                    let tower = e.get("tower").and_then(Value::as_u64).unwrap_or(1);
                    Ok(VarSpec {
                        name: name.to_string(),
                        tower,
                    })
                })
                .collect::<Result<_, CliError>>()?,
        };
        let ambient = Ambient::with_u_root(p, u_root, vars).map_err(err)?;
        let mut elements = BTreeMap::new();
        if let Some(map) = doc.get("elements") {
            let map = map
                .as_object()
                .ok_or_else(|| CliError::new("\"elements\" must be an object"))?;
            for (k, v) in map {
                let s = v
                    .as_str()
                    .ok_or_else(|| CliError::new(format!("element {k} must be a string")))?;
                elements.insert(k.clone(), parse_poly(&ambient, s).map_err(err)?);
            }
        }
        Ok(Manifest {
            ambient,
            elements,
            params: doc.get("params").cloned().unwrap_or(Value::Null),
        })
    }

    pub fn load(path: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::new(format!("cannot read {path}: {e}")))?;
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::new(format!("bad JSON in {path}: {e}")))?;
        Self::from_value(&doc)
    }

    pub fn element(&self, name: &str) -> Result<&TowerPoly, CliError> {
        self.elements
            .get(name)
            .ok_or_else(|| CliError::new(format!("manifest has no element \"{name}\"")))
    }
}

// ---------------------------------------------------------------------------
// serialization of ring data and certificates
// ---------------------------------------------------------------------------

pub fn ring_value(ambient: &Arc<Ambient>) -> Value {
    json!({
        "p": ambient.p(),
        "u_root_index": ambient.u_root_index(),
        "vars": ambient
            .vars()
            .iter()
            .map(|v| json!({ "name": v.name, "tower": v.tower }))
            .collect::<Vec<_>>(),
    })
}

pub fn ambient_from_value(ring: &Value) -> Result<Arc<Ambient>, CliError> {
    let p = ring
        .get("p")
        .and_then(Value::as_u64)
        .ok_or_else(|| CliError::new("certificate ring missing \"p\""))?;
    let u_root = ring.get("u_root_index").and_then(Value::as_u64).unwrap_or(1);
    let vars = ring
        .get("vars")
        .and_then(Value::as_array)
        .map(|a| {
            a.iter()
                .map(|e| {
                    Ok(VarSpec {
                        name: e
                            .get("name")
                            .and_then(Value::as_str)
                            .ok_or_else(|| CliError::new("ring variable missing name"))?
                            .to_string(),
                        tower: e.get("tower").and_then(Value::as_u64).unwrap_or(1),
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .transpose()?
        .unwrap_or_default();
    Ambient::with_u_root(p, u_root, vars).map_err(err)
}

pub fn local_value(c: &LocalElt) -> Value {
    json!({ "num": print_poly(c.num()), "den": print_poly(c.den()) })
}

pub fn local_from_value(ambient: &Arc<Ambient>, v: &Value) -> Result<LocalElt, CliError> {
    let num = v
        .get("num")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::new("fraction missing \"num\""))?;
    let den = v.get("den").and_then(Value::as_str).unwrap_or("1");
    LocalElt::new(
        parse_poly(ambient, num).map_err(err)?,
        parse_poly(ambient, den).map_err(err)?,
    )
    .map_err(err)
}

pub fn level_value(l: &Level) -> Value {
    match l {
        Level::Finite(n) => json!({ "finite": n }),
        Level::AtLeast(n) => json!({ "at_least": n }),
    }
}

pub fn level_from_value(v: &Value) -> Result<Level, CliError> {
    if let Some(n) = v.get("finite").and_then(Value::as_u64) {
        Ok(Level::Finite(n))
    } else if let Some(n) = v.get("at_least").and_then(Value::as_u64) {
        Ok(Level::AtLeast(n))
    } else {
        Err(CliError::new("level must carry \"finite\" or \"at_least\""))
    }
}

pub fn gamma_cert_value(f: &TowerPoly, cap: u64, cert: &GammaCert) -> Value {
    json!({
        "schema": SCHEMA,
        "kind": "gamma",
        "ring": ring_value(&f.ambient),
        "f": print_poly(f),
        "cap": cap,
        "level": level_value(&cert.level),
        "witness": cert.witness.as_ref().map(local_value),
        "exact_power": cert.exact_power,
        "branch_log": cert.branch_log,
    })
}

pub fn gamma_cert_from_value(
    ambient: &Arc<Ambient>,
    doc: &Value,
) -> Result<GammaCert, CliError> {
    let level = level_from_value(
        doc.get("level")
            .ok_or_else(|| CliError::new("certificate missing \"level\""))?,
    )?;
    let witness = match doc.get("witness") {
        None | Some(Value::Null) => None,
        Some(v) => Some(local_from_value(ambient, v)?),
    };
    Ok(GammaCert {
        level,
        witness,
        exact_power: doc
            .get("exact_power")
            .and_then(Value::as_bool)
            .unwrap_or(false),
        branch_log: Vec::new(),
    })
}

pub fn classify_cert_value(f: &TowerPoly, cap: u64, rep: &ClassifyReport) -> Value {
    json!({
        "schema": SCHEMA,
        "kind": "classify",
        "ring": ring_value(&f.ambient),
        "f": print_poly(f),
        "cap": cap,
        "class": rep.class,
        "threshold": rep.threshold,
        "gamma": rep.gamma.as_ref().map(|c| json!({
            "level": level_value(&c.level),
            "witness": c.witness.as_ref().map(local_value),
            "exact_power": c.exact_power,
        })),
        "root": rep.root.as_ref().map(print_poly),
    })
}

pub fn algebra_value(alg: &KummerAlg) -> Value {
    json!({
        "basis": alg.basis,
        "table": alg
            .table
            .iter()
            .map(|row| {
                row.iter()
                    .map(|cell| cell.iter().map(local_value).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>(),
    })
}

pub fn algebra_cert_value(alg: &KummerAlg, inputs: Value) -> Value {
    json!({
        "schema": SCHEMA,
        "kind": "algebra",
        "ring": ring_value(&alg.ambient),
        "inputs": inputs,
        "algebra": algebra_value(alg),
    })
}

pub fn algebra_from_value(ambient: &Arc<Ambient>, v: &Value) -> Result<KummerAlg, CliError> {
    let basis: Vec<String> = v
        .get("basis")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::new("algebra missing \"basis\""))?
        .iter()
        .map(|e| {
            e.as_str()
                .map(str::to_string)
                .ok_or_else(|| CliError::new("basis labels must be strings"))
        })
        .collect::<Result<_, _>>()?;
    let n = basis.len();
    let rows = v
        .get("table")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::new("algebra missing \"table\""))?;
    if rows.len() != n {
        return Err(CliError::new("table size does not match basis"));
    }
    let mut table = Vec::with_capacity(n);
    for row in rows {
        let row = row
            .as_array()
            .filter(|r| r.len() == n)
            .ok_or_else(|| CliError::new("table row size does not match basis"))?;
        let mut out_row = Vec::with_capacity(n);
        for cell in row {
            let cell = cell
                .as_array()
                .filter(|c| c.len() == n)
                .ok_or_else(|| CliError::new("table cell size does not match basis"))?;
            out_row.push(
                cell.iter()
                    .map(|c| local_from_value(ambient, c))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        table.push(out_row);
    }
    Ok(KummerAlg {
        ambient: ambient.clone(),
        basis,
        table,
    })
}

pub fn xpoly_value(f: &XPoly) -> Value {
    Value::Array(f.coeffs.iter().map(|c| json!(print_poly(c))).collect())
}

pub fn xpoly_from_value(ambient: &Arc<Ambient>, v: &Value) -> Result<XPoly, CliError> {
    let coeffs = v
        .as_array()
        .ok_or_else(|| CliError::new("polynomial in X must be a coefficient array"))?
        .iter()
        .map(|c| {
            c.as_str()
                .ok_or_else(|| CliError::new("coefficients must be strings"))
                .and_then(|s| parse_poly(ambient, s).map_err(err))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(XPoly { coeffs })
}

pub fn hb_cert_value(f: &TowerPoly, h: &TowerPoly, pair: &HBPair) -> Value {
    let mat = |m: &[Vec<XPoly>]| -> Value {
        Value::Array(
            m.iter()
                .map(|row| Value::Array(row.iter().map(xpoly_value).collect()))
                .collect(),
        )
    };
    json!({
        "schema": SCHEMA,
        "kind": "hb",
        "ring": ring_value(&f.ambient),
        "f": print_poly(f),
        "h": print_poly(h),
        "n": pair.n,
        "gamma": xpoly_value(&pair.gamma),
        "phi": mat(&pair.phi),
        "psi": mat(&pair.psi),
        "minors": Value::Array(pair.minors.iter().map(xpoly_value).collect()),
    })
}

pub fn hb_pair_from_value(ambient: &Arc<Ambient>, doc: &Value) -> Result<HBPair, CliError> {
    let mat = |v: &Value| -> Result<Vec<Vec<XPoly>>, CliError> {
        v.as_array()
            .ok_or_else(|| CliError::new("matrix must be an array"))?
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| CliError::new("matrix row must be an array"))?
                    .iter()
                    .map(|e| xpoly_from_value(ambient, e))
                    .collect()
            })
            .collect()
    };
    Ok(HBPair {
        phi: mat(
            doc.get("phi")
                .ok_or_else(|| CliError::new("certificate missing \"phi\""))?,
        )?,
        psi: mat(
            doc.get("psi")
                .ok_or_else(|| CliError::new("certificate missing \"psi\""))?,
        )?,
        gamma: xpoly_from_value(
            ambient,
            doc.get("gamma")
                .ok_or_else(|| CliError::new("certificate missing \"gamma\""))?,
        )?,
        minors: doc
            .get("minors")
            .and_then(Value::as_array)
            .ok_or_else(|| CliError::new("certificate missing \"minors\""))?
            .iter()
            .map(|e| xpoly_from_value(ambient, e))
            .collect::<Result<_, _>>()?,
        n: doc
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| CliError::new("certificate missing \"n\""))?,
    })
}
