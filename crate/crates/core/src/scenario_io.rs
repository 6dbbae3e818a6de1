//! Scenario documents.
//!
//! A scenario is a small TOML document with flat keys:
//!
//! ```toml
//! delta = 0.9
//! policy = "myopic"        # or "optimal"
//! muA = 0.6666666666666666
//! muB = 0.3333333333333333
//! pool = ["A:0:0", "B:0:0"] # optional; "A:n1:n0", append ":retired" to freeze
//!
//! [A]
//! p0 = 0.8
//! v = 1.5
//! qH = 0.6
//! qL = 1.0
//! Pbar = 0.9
//!
//! [B]
//! p0 = 0.7
//! v = 1.0
//! qH = 1.0
//! qL = 1.0
//! Pbar = 0.95
//!
//! [tolerances]              # optional
//! index_tol = 1e-9
//! horizon_cap = 200
//! prob_tol = 1e-9
//! ```
//!
//! Dotted keys (`A.qH = 0.6`) are equivalent to the table form. Unknown
//! keys are rejected.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::experiments;
use crate::model::{CandidateState, Category, CategoryParams, NumericalConfig, Policy, Scenario};

const CAT_FIELDS: [&str; 5] = ["p0", "v", "qH", "qL", "Pbar"];
const TOL_FIELDS: [&str; 3] = ["index_tol", "horizon_cap", "prob_tol"];

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Num(f64),
    Text(String),
    List(Vec<String>),
}

fn is_known(key: &str) -> bool {
    match key {
        "delta" | "policy" | "muA" | "muB" | "pool" => true,
        _ => match key.split_once('.') {
            Some(("A" | "B", f)) => CAT_FIELDS.contains(&f),
            Some(("tolerances", f)) => TOL_FIELDS.contains(&f),
            _ => false,
        },
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        let value = match v {
            toml::Value::Table(t) => {
                flatten(&key, t, out)?;
                continue;
            }
            toml::Value::Float(x) => Value::Num(*x),
            toml::Value::Integer(i) => Value::Num(*i as f64),
            toml::Value::String(s) => Value::Text(s.clone()),
            toml::Value::Array(items) => {
                let mut list = Vec::with_capacity(items.len());
                for it in items {
                    match it {
                        toml::Value::String(s) => list.push(s.clone()),
                        _ => return Err(Error::Parse(format!("{key}: expected a list of strings"))),
                    }
                }
                Value::List(list)
            }
            _ => return Err(Error::Parse(format!("{key}: unsupported value type"))),
        };
        if !is_known(&key) {
            return Err(Error::Parse(format!("unknown key `{key}`")));
        }
        out.insert(key, value);
    }
    Ok(())
}

/// Parses a scenario document.
pub fn parse_scenario(doc: &str) -> Result<Scenario> {
    parse_with_overrides(doc, &[])
}

/// Parses a document, applies `key=value` overrides, then builds the
/// scenario. Overrides go through the same key and range checks.
pub fn parse_with_overrides(doc: &str, overrides: &[(String, String)]) -> Result<Scenario> {
    let table: toml::Table = doc
        .parse()
        .map_err(|e: toml::de::Error| Error::Parse(format!("malformed scenario: {}", e.message())))?;
    let mut map = BTreeMap::new();
    flatten("", &table, &mut map)?;
    apply_overrides(&mut map, overrides)?;
    build(&map)
}

fn apply_overrides(map: &mut BTreeMap<String, Value>, overrides: &[(String, String)]) -> Result<()> {
    for (k, v) in overrides {
        if !is_known(k) {
            return Err(Error::Parse(format!("unknown key `{k}`")));
        }
        let value = match k.as_str() {
            "policy" => Value::Text(v.clone()),
            "pool" => Value::List(v.split(',').map(|s| s.trim().to_string()).collect()),
            _ => Value::Num(
                v.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("{k}: `{v}` is not a number")))?,
            ),
        };
        map.insert(k.clone(), value);
    }
    Ok(())
}

/// Applies overrides to an existing scenario.
pub fn with_overrides(scenario: &Scenario, overrides: &[(String, String)]) -> Result<Scenario> {
    if overrides.is_empty() {
        return Ok(scenario.clone());
    }
    parse_with_overrides(&serialize_scenario(scenario), overrides)
}

/// Splits `key=value`.
pub fn parse_assignment(s: &str) -> Result<(String, String)> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(Error::Parse(format!("expected key=value, got `{s}`"))),
    }
}

fn num(map: &BTreeMap<String, Value>, key: &str) -> Result<Option<f64>> {
    match map.get(key) {
        None => Ok(None),
        Some(Value::Num(x)) => Ok(Some(*x)),
        Some(_) => Err(Error::Parse(format!("{key}: expected a number"))),
    }
}

fn required(map: &BTreeMap<String, Value>, key: &str) -> Result<f64> {
    num(map, key)?.ok_or_else(|| Error::Parse(format!("missing key {key}")))
}

fn in_range(key: &str, x: f64, lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Result<f64> {
    let ok_lo = if lo_open { x > lo } else { x >= lo };
    let ok_hi = if hi_open { x < hi } else { x <= hi };
    if ok_lo && ok_hi && x.is_finite() {
        Ok(x)
    } else {
        let l = if lo_open { '(' } else { '[' };
        let r = if hi_open { ')' } else { ']' };
        Err(Error::Parse(format!("{key} out of {l}{lo},{hi}{r}")))
    }
}

fn category(map: &BTreeMap<String, Value>, c: Category) -> Result<CategoryParams> {
    let prefix = c.to_string();
    if !map.keys().any(|k| k.starts_with(&format!("{prefix}."))) {
        return Err(Error::Parse(format!("missing category {prefix}")));
    }
    let get = |f: &str| required(map, &format!("{prefix}.{f}"));
    let key = |f: &str| format!("{prefix}.{f}");
    let p0 = in_range(&key("p0"), get("p0")?, 0.0, 1.0, true, true)?;
    let v = get("v")?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Parse(format!("{} must be positive", key("v"))));
    }
    let q_h = in_range(&key("qH"), get("qH")?, 0.0, 1.0, false, false)?;
    let q_l = in_range(&key("qL"), get("qL")?, 0.0, 1.0, false, false)?;
    let pbar = in_range(&key("Pbar"), get("Pbar")?, 0.0, 1.0, true, false)?;
    Ok(CategoryParams::new(c, p0, v, q_h, q_l, pbar))
}

fn parse_pool_entry(s: &str) -> Result<CandidateState> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let bad = || Error::Parse(format!("pool: bad entry `{s}`, expected A:n1:n0"));
    let (cat, n1, n0, retired) = match parts.as_slice() {
        [c, a, b] => (*c, *a, *b, false),
        [c, a, b, "retired"] => (*c, *a, *b, true),
        _ => return Err(bad()),
    };
    let category = match cat {
        "A" => Category::A,
        "B" => Category::B,
        _ => return Err(bad()),
    };
    Ok(CandidateState {
        category,
        n1: n1.parse().map_err(|_| bad())?,
        n0: n0.parse().map_err(|_| bad())?,
        retired,
    })
}

fn build(map: &BTreeMap<String, Value>) -> Result<Scenario> {
    let delta = in_range("delta", required(map, "delta")?, 0.0, 1.0, true, true)?;
    let policy = match map.get("policy") {
        None => return Err(Error::Parse("missing key policy".into())),
        Some(Value::Text(s)) => Policy::from_name(s)
            .ok_or_else(|| Error::Parse(format!("policy: unknown policy `{s}` (myopic, optimal)")))?,
        Some(_) => return Err(Error::Parse("policy: expected a string".into())),
    };
    let mu_a = in_range("muA", num(map, "muA")?.unwrap_or(0.0), 0.0, 1.0, false, false)?;
    let mu_b = in_range("muB", num(map, "muB")?.unwrap_or(0.0), 0.0, 1.0, false, false)?;
    let cat_a = category(map, Category::A)?;
    let cat_b = category(map, Category::B)?;
    let mut tol = NumericalConfig::default();
    if let Some(x) = num(map, "tolerances.index_tol")? {
        tol.index_tol = in_range("tolerances.index_tol", x, 0.0, 1.0, true, false)?;
    }
    if let Some(x) = num(map, "tolerances.prob_tol")? {
        tol.prob_tol = in_range("tolerances.prob_tol", x, 0.0, 1.0, true, false)?;
    }
    if let Some(x) = num(map, "tolerances.horizon_cap")? {
        if x.fract() != 0.0 || !(1.0..=100_000.0).contains(&x) {
            return Err(Error::Parse(
                "tolerances.horizon_cap must be an integer in [1,100000]".into(),
            ));
        }
        tol.horizon_cap = x as u32;
    }
    let mut scenario = Scenario::new(delta, cat_a, cat_b, mu_a, mu_b, policy);
    scenario.tolerances = tol;
    match map.get("pool") {
        None => {}
        Some(Value::List(items)) => {
            scenario.initial_pool = items.iter().map(|s| parse_pool_entry(s)).collect::<Result<_>>()?;
        }
        Some(_) => return Err(Error::Parse("pool: expected a list of strings".into())),
    }
    Ok(scenario)
}

/// Writes the scenario in the documented schema. Floats use the shortest
/// representation that parses back to the same value.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    out.push_str(&format!("delta = {:?}\n", s.delta));
    out.push_str(&format!("policy = \"{}\"\n", s.policy.name()));
    out.push_str(&format!("muA = {:?}\n", s.mu_a));
    out.push_str(&format!("muB = {:?}\n", s.mu_b));
    let pool: Vec<String> = s
        .initial_pool
        .iter()
        .map(|c| {
            let tail = if c.retired { ":retired" } else { "" };
            format!("\"{}:{}:{}{}\"", c.category, c.n1, c.n0, tail)
        })
        .collect();
    out.push_str(&format!("pool = [{}]\n", pool.join(", ")));
    for c in Category::ALL {
        let p = s.cat(c);
        out.push_str(&format!(
            "\n[{c}]\np0 = {:?}\nv = {:?}\nqH = {:?}\nqL = {:?}\nPbar = {:?}\n",
            p.p0, p.v, p.q_h, p.q_l, p.pbar
        ));
    }
    let t = &s.tolerances;
    out.push_str(&format!(
        "\n[tolerances]\nindex_tol = {:?}\nhorizon_cap = {}\nprob_tol = {:?}\n",
        t.index_tol, t.horizon_cap, t.prob_tol
    ));
    out
}

/// Reads one numeric parameter by its document key.
pub fn get_param(s: &Scenario, key: &str) -> Result<f64> {
    Ok(match key {
        "delta" => s.delta,
        "muA" => s.mu_a,
        "muB" => s.mu_b,
        "tolerances.index_tol" => s.tolerances.index_tol,
        "tolerances.horizon_cap" => s.tolerances.horizon_cap as f64,
        "tolerances.prob_tol" => s.tolerances.prob_tol,
        _ => {
            let (c, f) = cat_key(key)?;
            let p = s.cat(c);
            match f {
                "p0" => p.p0,
                "v" => p.v,
                "qH" => p.q_h,
                "qL" => p.q_l,
                _ => p.pbar,
            }
        }
    })
}

/// Sets one numeric parameter by its document key, without validation.
pub fn set_param(s: &mut Scenario, key: &str, x: f64) -> Result<()> {
    match key {
        "delta" => s.delta = x,
        "muA" => s.mu_a = x,
        "muB" => s.mu_b = x,
        "tolerances.index_tol" => s.tolerances.index_tol = x,
        "tolerances.horizon_cap" => s.tolerances.horizon_cap = x as u32,
        "tolerances.prob_tol" => s.tolerances.prob_tol = x,
        _ => {
            let (c, f) = cat_key(key)?;
            let p = s.cat_mut(c);
            match f {
                "p0" => p.p0 = x,
                "v" => p.v = x,
                "qH" => p.q_h = x,
                "qL" => p.q_l = x,
                _ => p.pbar = x,
            }
        }
    }
    Ok(())
}

fn cat_key(key: &str) -> Result<(Category, &str)> {
    match key.split_once('.') {
        Some(("A", f)) if CAT_FIELDS.contains(&f) => Ok((Category::A, f)),
        Some(("B", f)) if CAT_FIELDS.contains(&f) => Ok((Category::B, f)),
        _ => Err(Error::Parse(format!("unknown key `{key}`"))),
    }
}

/// Resolves a builtin id such as `P3` (the shifted scenario), `P3.before`
/// or `P3.after`.
pub fn builtin_scenario(id: &str) -> Option<Scenario> {
    let (case_id, side) = match id.split_once('.') {
        Some((c, s)) => (c, s),
        None => (id, "after"),
    };
    let case = experiments::builtin_cases()
        .into_iter()
        .find(|c| c.id.name().eq_ignore_ascii_case(case_id))?;
    match side {
        "before" => Some(case.before),
        "after" => Some(case.after),
        _ => None,
    }
}

/// Loads a scenario from a builtin id or a file path.
pub fn load_scenario(spec: &str, overrides: &[(String, String)]) -> Result<Scenario> {
    if let Some(s) = builtin_scenario(spec) {
        return with_overrides(&s, overrides);
    }
    let doc = std::fs::read_to_string(spec)
        .map_err(|e| Error::Parse(format!("cannot read scenario `{spec}`: {e}")))?;
    parse_with_overrides(&doc, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"
delta = 0.9
policy = "myopic"
muA = 0.5
muB = 0.5

[A]
p0 = 0.8
v = 1.5
qH = 0.6
qL = 1
Pbar = 0.9

[B]
p0 = 0.7
v = 1
qH = 1
qL = 1
Pbar = 0.95
"#;

    #[test]
    fn parses_tables_and_integers() {
        let s = parse_scenario(DOC).unwrap();
        assert_eq!(s.cat_a.q_l, 1.0);
        assert_eq!(s.cat_b.v, 1.0);
        assert_eq!(s.tolerances, NumericalConfig::default());
        assert_eq!(s.initial_pool.len(), 2);
    }

    #[test]
    fn dotted_keys_are_equivalent() {
        let doc = "delta = 0.9\npolicy = \"optimal\"\nA.p0 = 0.8\nA.v = 1.5\nA.qH = 0.6\nA.qL = 1\nA.Pbar = 0.9\nB.p0 = 0.7\nB.v = 1\nB.qH = 1\nB.qL = 1\nB.Pbar = 0.95\n";
        let s = parse_scenario(doc).unwrap();
        assert_eq!(s.policy, Policy::OptimalIndex);
        assert_eq!(s.mu_a, 0.0);
    }

    #[test]
    fn out_of_range_is_named() {
        let doc = DOC.replace("qH = 0.6", "qH = 1.2");
        let e = parse_scenario(&doc).unwrap_err().to_string();
        assert!(e.contains("A.qH out of [0,1]"), "{e}");
    }

    #[test]
    fn missing_category() {
        let doc = DOC.split("[B]").next().unwrap();
        let e = parse_scenario(doc).unwrap_err().to_string();
        assert!(e.contains("missing category B"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let doc = DOC.replace("muB = 0.5", "muB = 0.5\nmu_b = 0.5");
        let e = parse_scenario(&doc).unwrap_err().to_string();
        assert!(e.contains("unknown key `mu_b`"), "{e}");
        let doc = DOC.replace("qL = 1\nPbar = 0.9", "qL = 1\nPbar = 0.9\nqh = 0.3");
        assert!(parse_scenario(&doc).is_err());
    }

    #[test]
    fn overrides_apply_before_checks() {
        let o = vec![("A.qH".to_string(), "0.95".to_string())];
        let s = parse_with_overrides(DOC, &o).unwrap();
        assert_eq!(s.cat_a.q_h, 0.95);
        let o = vec![("A.qH".to_string(), "2".to_string())];
        assert!(parse_with_overrides(DOC, &o).is_err());
    }

    #[test]
    fn pool_entries() {
        let doc = DOC.replace("muB = 0.5", "muB = 0.5\npool = [\"A:0:1\", \"B:0:0:retired\"]");
        let s = parse_scenario(&doc).unwrap();
        assert_eq!(s.initial_pool[0], CandidateState::with_history(Category::A, 0, 1));
        assert!(s.initial_pool[1].retired);
    }

    #[test]
    fn builtins_round_trip() {
        for case in experiments::builtin_cases() {
            for s in [&case.before, &case.after] {
                let back = parse_scenario(&serialize_scenario(s)).unwrap();
                assert_eq!(&back, s);
            }
        }
    }

    #[test]
    fn builtin_ids() {
        assert_eq!(builtin_scenario("P1").unwrap().mu_a, 2.0 / 3.0);
        assert_eq!(builtin_scenario("P1.before").unwrap().mu_a, 0.0);
        assert!(builtin_scenario("P9").is_none());
        assert!(builtin_scenario("P1.middle").is_none());
    }
}
