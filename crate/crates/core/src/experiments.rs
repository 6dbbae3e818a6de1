//! Reference cases where search tilted toward category A lowers A's hiring
//! probability, the inequality conditions behind them, and parameter sweeps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluator::{self, Comparison, Verdict};
use crate::indices::{self, one_step_hire_prob};
use crate::model::{self, Category, CategoryParams, NumericalConfig, Policy, Scenario};
use crate::scenario_io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseId {
    P1,
    P2,
    P3,
    P4,
}

impl CaseId {
    pub fn name(self) -> &'static str {
        match self {
            CaseId::P1 => "P1",
            CaseId::P2 => "P2",
            CaseId::P3 => "P3",
            CaseId::P4 => "P4",
        }
    }
}

/// A change in arrival probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SaaShift {
    /// From no arrivals at all to the base `(muA, muB)`.
    Expansion,
    /// From the base `(muA, muB)` to `(muA + zeta, muB - zeta)`.
    Reallocation { zeta: f64 },
}

impl SaaShift {
    pub fn name(&self) -> &'static str {
        match self {
            SaaShift::Expansion => "expansion",
            SaaShift::Reallocation { .. } => "reallocation",
        }
    }

    /// `(before, after)` around a base scenario.
    pub fn apply(&self, base: &Scenario) -> (Scenario, Scenario) {
        match *self {
            SaaShift::Expansion => (base.with_mu(0.0, 0.0), base.clone()),
            SaaShift::Reallocation { zeta } => {
                (base.clone(), base.with_mu(base.mu_a + zeta, base.mu_b - zeta))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropositionCase {
    pub id: CaseId,
    pub before: Scenario,
    pub after: Scenario,
    pub shift: SaaShift,
    pub expected_direction: Verdict,
}

impl PropositionCase {
    /// The scenario carrying the case's base arrival probabilities.
    pub fn base(&self) -> &Scenario {
        match self.shift {
            SaaShift::Expansion => &self.after,
            SaaShift::Reallocation { .. } => &self.before,
        }
    }

    fn from_base(id: CaseId, base: Scenario, shift: SaaShift) -> Self {
        let (before, after) = shift.apply(&base);
        PropositionCase {
            id,
            before,
            after,
            shift,
            expected_direction: Verdict::Backfires,
        }
    }
}

fn case(
    id: CaseId,
    policy: Policy,
    a: (f64, f64, f64),
    b: (f64, f64, f64),
    mu_a: f64,
    shift: SaaShift,
) -> PropositionCase {
    let base = Scenario::new(
        0.9,
        CategoryParams::new(Category::A, a.0, a.1, a.2, 1.0, 0.90),
        CategoryParams::new(Category::B, b.0, b.1, b.2, 1.0, 0.95),
        mu_a,
        1.0 - mu_a,
        policy,
    );
    PropositionCase::from_base(id, base, shift)
}

/// The four reference cases. Category tuples are `(p0, v, qH)`; every
/// technology has `qL = 1`, thresholds are 0.90 for A and 0.95 for B.
pub fn builtin_cases() -> Vec<PropositionCase> {
    vec![
        case(
            CaseId::P1,
            Policy::Myopic,
            (0.8, 1.5, 0.6),
            (0.7, 1.0, 1.0),
            2.0 / 3.0,
            SaaShift::Expansion,
        ),
        case(
            CaseId::P2,
            Policy::Myopic,
            (0.8, 1.5, 0.2),
            (0.64, 1.0, 0.75),
            0.9,
            SaaShift::Reallocation { zeta: 0.04 },
        ),
        case(
            CaseId::P3,
            Policy::OptimalIndex,
            (0.75, 1.2, 0.19),
            (0.7, 1.0, 1.0),
            0.52,
            SaaShift::Expansion,
        ),
        case(
            CaseId::P4,
            Policy::OptimalIndex,
            (0.69, 1.01, 0.4),
            (0.68, 1.0, 0.8),
            0.15,
            SaaShift::Reallocation { zeta: 0.01 },
        ),
    ]
}

/// One strict inequality `lhs > rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub id: &'static str,
    pub description: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl Condition {
    fn new(id: &'static str, description: &'static str, lhs: f64, rhs: f64) -> Self {
        Condition {
            id,
            description,
            lhs,
            rhs,
        }
    }

    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn holds(&self) -> bool {
        self.lhs > self.rhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub conditions: Vec<Condition>,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(Condition::holds)
    }

    /// The tightest condition.
    pub fn min_margin(&self) -> Option<&Condition> {
        self.conditions
            .iter()
            .min_by(|a, b| a.margin().total_cmp(&b.margin()))
    }
}

pub fn check_conditions(case: &PropositionCase) -> Result<ConditionReport> {
    conditions_for(&case.before, &case.after, case.shift)
}

/// The ordering and direction conditions for a shift under the before
/// scenario's policy, evaluated numerically.
pub fn conditions_for(before: &Scenario, after: &Scenario, shift: SaaShift) -> Result<ConditionReport> {
    let conditions = match (before.policy, shift) {
        (Policy::Myopic, SaaShift::Expansion) => myopic_expansion(after)?,
        (Policy::Myopic, SaaShift::Reallocation { .. }) => myopic_reallocation(before, after)?,
        (Policy::OptimalIndex, SaaShift::Expansion) => optimal_expansion(after)?,
        (Policy::OptimalIndex, SaaShift::Reallocation { .. }) => optimal_reallocation(before, after)?,
    };
    Ok(ConditionReport { conditions })
}

struct Lambdas {
    a: f64,
    b: f64,
    b0: f64,
}

fn lambdas(s: &Scenario) -> Result<Lambdas> {
    Ok(Lambdas {
        a: one_step_hire_prob(&s.cat_a, 0, 0)?,
        b: one_step_hire_prob(&s.cat_b, 0, 0)?,
        b0: one_step_hire_prob(&s.cat_b, 0, 1)?,
    })
}

fn expansion_direction(s: &Scenario) -> Condition {
    let (a, b) = (&s.cat_a, &s.cat_b);
    Condition::new(
        "search-lowers-a",
        "muB p0B (1 - qHA) > muA (1 - p0A) qHA",
        s.mu_b * b.p0 * (1.0 - a.q_h),
        s.mu_a * (1.0 - a.p0) * a.q_h,
    )
}

fn reallocation_direction(before: &Scenario, after: &Scenario) -> Result<Condition> {
    let l = lambdas(before)?;
    let (mu_a, mu_b) = (before.mu_a, before.mu_b);
    let (za, zb) = (after.mu_a, after.mu_b);
    Ok(Condition::new(
        "shift-lowers-a",
        "muA / (muA lA + muB lB) > (1 - lB(0)) muA' / (muA' lA + muB' (lB + lB(0) (1 - lB)))",
        mu_a / (mu_a * l.a + mu_b * l.b),
        (1.0 - l.b0) * za / (za * l.a + zb * (l.b + l.b0 * (1.0 - l.b))),
    ))
}

fn myopic_expansion(after: &Scenario) -> Result<Vec<Condition>> {
    let ua = indices::myopic_value(&after.cat_a, 0, 0)?;
    let ub = indices::myopic_value(&after.cat_b, 0, 0)?;
    let ua0 = indices::myopic_value(&after.cat_a, 0, 1)?;
    let us = indices::myopic_search_value(after)?;
    Ok(vec![
        Condition::new("a-before-b", "uA(blank) > uB(blank)", ua, ub),
        Condition::new("a-over-search", "uA(blank) > uS", ua, us),
        Condition::new("b-over-search", "uB(blank) > uS", ub, us),
        Condition::new("search-over-a-after-failure", "uS > uA(0)", us, ua0),
        expansion_direction(after),
    ])
}

fn myopic_reallocation(before: &Scenario, after: &Scenario) -> Result<Vec<Condition>> {
    let ua = indices::myopic_value(&before.cat_a, 0, 0)?;
    let ub = indices::myopic_value(&before.cat_b, 0, 0)?;
    let ua0 = indices::myopic_value(&before.cat_a, 0, 1)?;
    let ub0 = indices::myopic_value(&before.cat_b, 0, 1)?;
    let us = indices::myopic_search_value(before)?;
    let usz = indices::myopic_search_value(after)?;
    Ok(vec![
        Condition::new("b-before-a", "uB(blank) > uA(blank)", ub, ua),
        Condition::new("a-over-search", "uA(blank) > uS", ua, us),
        Condition::new("search-over-a-after-failure", "uS > uA(0)", us, ua0),
        Condition::new("search-over-b-after-failure", "uS > uB(0)", us, ub0),
        Condition::new(
            "b-after-failure-over-shifted-search",
            "uB(0) > uS'",
            ub0,
            usz,
        ),
        Condition::new(
            "shifted-search-over-a-after-failure",
            "uS' > uA(0)",
            usz,
            ua0,
        ),
        reallocation_direction(before, after)?,
    ])
}

struct Indices {
    a: f64,
    a0: f64,
    b: f64,
    b0: f64,
    b00: f64,
}

fn candidate_indices(s: &Scenario) -> Result<Indices> {
    let cfg = &s.tolerances;
    let g = |c: &CategoryParams, n0| -> Result<f64> {
        Ok(indices::gittins_index(c, 0, n0, s.delta, cfg)?.value)
    };
    Ok(Indices {
        a: g(&s.cat_a, 0)?,
        a0: g(&s.cat_a, 1)?,
        b: g(&s.cat_b, 0)?,
        b0: g(&s.cat_b, 1)?,
        b00: g(&s.cat_b, 2)?,
    })
}

fn optimal_expansion(after: &Scenario) -> Result<Vec<Condition>> {
    let v = candidate_indices(after)?;
    let vs = indices::search_index(after, &after.tolerances)?.value;
    Ok(vec![
        Condition::new("b-before-a", "VB(blank) > VA(blank)", v.b, v.a),
        Condition::new("a-over-search", "VA(blank) > VS", v.a, vs),
        Condition::new("b-over-search", "VB(blank) > VS", v.b, vs),
        Condition::new("search-over-a-after-failure", "VS > VA(0)", vs, v.a0),
        expansion_direction(after),
    ])
}

fn optimal_reallocation(before: &Scenario, after: &Scenario) -> Result<Vec<Condition>> {
    let v = candidate_indices(before)?;
    let vs = indices::search_index(before, &before.tolerances)?.value;
    let vsz = indices::search_index(after, &after.tolerances)?.value;
    Ok(vec![
        Condition::new("b-before-a", "VB(blank) > VA(blank)", v.b, v.a),
        Condition::new("a-over-search", "VA(blank) > VS", v.a, vs),
        Condition::new("b-over-search", "VB(blank) > VS", v.b, vs),
        Condition::new("search-over-a-after-failure", "VS > VA(0)", vs, v.a0),
        Condition::new("search-over-b-after-failure", "VS > VB(0)", vs, v.b0),
        Condition::new("a-over-shifted-search", "VA(blank) > VS'", v.a, vsz),
        Condition::new(
            "b-after-failure-over-shifted-search",
            "VB(0) > VS'",
            v.b0,
            vsz,
        ),
        Condition::new(
            "shifted-search-over-a-after-failure",
            "VS' > VA(0)",
            vsz,
            v.a0,
        ),
        Condition::new(
            "shifted-search-over-b-after-two-failures",
            "VS' > VB(0,0)",
            vsz,
            v.b00,
        ),
        reallocation_direction(before, after)?,
    ])
}

/// Exact comparison of a case's before and after scenarios.
pub fn reproduce(case: &PropositionCase, cfg: &NumericalConfig) -> Result<Comparison> {
    evaluator::compare(&case.before, &case.after, cfg)
}

/// Document keys of the parameters listed in a case's example; the
/// technology constants fixed by the case's restrictions are excluded.
pub fn example_parameters(case: &PropositionCase) -> Vec<&'static str> {
    let mut keys = vec!["delta", "A.p0", "B.p0", "A.v", "B.v", "A.qH"];
    if case.base().cat_b.q_h < 1.0 {
        keys.push("B.qH");
    }
    keys.push("muA");
    if matches!(case.shift, SaaShift::Reallocation { .. }) {
        keys.push("zeta");
    }
    keys
}

/// A copy of the case with one example parameter moved by `eps`; `muB`
/// follows `1 - muA`. `None` if the move leaves the parameter's range.
pub fn perturbed(case: &PropositionCase, key: &str, eps: f64) -> Option<PropositionCase> {
    let mut base = case.base().clone();
    let mut shift = case.shift;
    if key == "zeta" {
        let SaaShift::Reallocation { zeta } = shift else {
            return None;
        };
        shift = SaaShift::Reallocation { zeta: zeta + eps };
    } else {
        let x = scenario_io::get_param(&base, key).ok()? + eps;
        scenario_io::set_param(&mut base, key, x).ok()?;
        if key == "muA" {
            base.mu_b = 1.0 - base.mu_a;
        }
    }
    let out = PropositionCase::from_base(case.id, base, shift);
    let ok = [&out.before, &out.after]
        .iter()
        .all(|s| model::invariant_violations(s).is_empty() && s.mu_b >= 0.0);
    ok.then_some(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationOutcome {
    pub key: &'static str,
    pub eps: f64,
    pub conditions_hold: bool,
    pub verdict: Option<Verdict>,
    /// Why the perturbation was not counted, if it was not.
    pub skipped: Option<String>,
}

impl PerturbationOutcome {
    pub fn preserved(&self) -> bool {
        self.skipped.is_some() || (self.conditions_hold && self.verdict == Some(Verdict::Backfires))
    }
}

/// Moves each example parameter by `+eps` and `-eps` and re-checks the
/// conditions and the direction. A perturbation whose failing condition
/// already had a base margin below `eps` is reported as skipped.
pub fn robustness(case: &PropositionCase, eps: f64, cfg: &NumericalConfig) -> Result<Vec<PerturbationOutcome>> {
    let base_report = check_conditions(case)?;
    let mut out = Vec::new();
    for key in example_parameters(case) {
        for e in [eps, -eps] {
            let Some(p) = perturbed(case, key, e) else {
                out.push(PerturbationOutcome {
                    key,
                    eps: e,
                    conditions_hold: false,
                    verdict: None,
                    skipped: Some("leaves the parameter's range".into()),
                });
                continue;
            };
            let report = check_conditions(&p)?;
            let verdict = reproduce(&p, cfg)?.verdict;
            let thin: Vec<&str> = report
                .conditions
                .iter()
                .zip(&base_report.conditions)
                .filter(|(now, was)| !now.holds() && was.margin() < eps)
                .map(|(now, _)| now.id)
                .collect();
            out.push(PerturbationOutcome {
                key,
                eps: e,
                conditions_hold: report.all_hold(),
                verdict: Some(verdict),
                skipped: (!thin.is_empty()).then(|| format!("base margin below {eps}: {}", thin.join(", "))),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Document keys (or `zeta`) and their grids; the first key varies slowest.
    pub varying: Vec<(String, Vec<f64>)>,
    pub fixed: Scenario,
    pub shift: SaaShift,
    pub policy: Policy,
    /// Largest accepted number of grid points.
    pub cap: usize,
}

impl SweepSpec {
    pub const DEFAULT_CAP: usize = 10_000;

    pub fn points(&self) -> usize {
        self.varying.iter().map(|(_, g)| g.len()).product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub params: Vec<f64>,
    pub comparison: Option<Comparison>,
    pub conditions: Vec<Condition>,
    pub error: Option<String>,
}

fn grid(varying: &[(String, Vec<f64>)]) -> Vec<Vec<f64>> {
    let mut rows = vec![Vec::new()];
    for (_, values) in varying {
        rows = rows
            .into_iter()
            .flat_map(|r| {
                values.iter().map(move |&x| {
                    let mut r = r.clone();
                    r.push(x);
                    r
                })
            })
            .collect();
    }
    rows
}

fn sweep_point(spec: &SweepSpec, params: &[f64]) -> Result<(Scenario, Scenario, SaaShift)> {
    let mut base = spec.fixed.clone();
    base.policy = spec.policy;
    let mut shift = spec.shift;
    for ((key, _), &x) in spec.varying.iter().zip(params) {
        if key == "zeta" {
            match shift {
                SaaShift::Reallocation { .. } => shift = SaaShift::Reallocation { zeta: x },
                SaaShift::Expansion => {
                    return Err(Error::InvalidArgument("zeta only applies to reallocation".into()))
                }
            }
        } else {
            scenario_io::set_param(&mut base, key, x)?;
        }
    }
    let (before, after) = shift.apply(&base);
    Ok((before, after, shift))
}

/// Evaluates the shift at every grid point, in grid order. Points that
/// fail carry an error message instead of results.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let points = spec.points();
    if points > spec.cap {
        return Err(Error::SweepTooLarge {
            points,
            cap: spec.cap,
        });
    }
    for (key, _) in &spec.varying {
        if key != "zeta" {
            scenario_io::get_param(&spec.fixed, key)?;
        } else if matches!(spec.shift, SaaShift::Expansion) {
            return Err(Error::InvalidArgument("zeta only applies to reallocation".into()));
        }
    }
    let rows = grid(&spec.varying)
        .into_par_iter()
        .map(|params| {
            let mut row = SweepRow {
                params: params.clone(),
                comparison: None,
                conditions: Vec::new(),
                error: None,
            };
            let run = || -> Result<(Comparison, Vec<Condition>)> {
                let (before, after, shift) = sweep_point(spec, &params)?;
                let cmp = evaluator::compare(&before, &after, &before.tolerances)?;
                let conds = conditions_for(&before, &after, shift)
                    .map(|r| r.conditions)
                    .unwrap_or_default();
                Ok((cmp, conds))
            };
            match run() {
                Ok((cmp, conds)) => {
                    row.comparison = Some(cmp);
                    row.conditions = conds;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    Ok(rows)
}
