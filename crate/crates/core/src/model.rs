//! Domain types and the Bayesian arithmetic of candidate evaluation.
//!
//! A candidate's signal history enters only through its sufficient
//! statistic `(n1, n0)`: the number of positive and negative signals
//! observed so far. Signals are conditionally iid given the candidate's
//! latent qualification, so every ordering of the same counts yields the
//! same posterior.

use std::fmt;

use crate::error::{Error, Result};
use crate::indices;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    A,
    B,
}

impl Category {
    pub const ALL: [Category; 2] = [Category::A, Category::B];

    pub fn index(self) -> usize {
        match self {
            Category::A => 0,
            Category::B => 1,
        }
    }

    pub fn other(self) -> Category {
        match self {
            Category::A => Category::B,
            Category::B => Category::A,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::A => "A",
            Category::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Signal {
    Zero,
    One,
}

impl Signal {
    pub const BOTH: [Signal; 2] = [Signal::One, Signal::Zero];
}

/// Per-category primitives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryParams {
    pub label: Category,
    /// Prior probability that a candidate is qualified.
    pub p0: f64,
    /// Value of hiring a qualified candidate.
    pub v: f64,
    /// Pr(s = 1 | qualified).
    pub q_h: f64,
    /// Pr(s = 0 | not qualified).
    pub q_l: f64,
    /// Acceptance threshold on the posterior.
    pub pbar: f64,
}

impl CategoryParams {
    pub fn new(label: Category, p0: f64, v: f64, q_h: f64, q_l: f64, pbar: f64) -> Self {
        CategoryParams {
            label,
            p0,
            v,
            q_h,
            q_l,
            pbar,
        }
    }

    pub fn posterior(&self, n1: u32, n0: u32) -> Result<f64> {
        posterior(self, n1, n0)
    }

    pub fn signal_prob(&self, n1: u32, n0: u32, s: Signal) -> Result<f64> {
        signal_prob(self, n1, n0, s)
    }

    pub fn is_acceptable(&self, n1: u32, n0: u32) -> Result<bool> {
        is_acceptable(self, n1, n0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Myopic,
    OptimalIndex,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Myopic => "myopic",
            Policy::OptimalIndex => "optimal",
        }
    }

    pub fn from_name(s: &str) -> Option<Policy> {
        match s {
            "myopic" => Some(Policy::Myopic),
            "optimal" | "optimal-index" | "index" => Some(Policy::OptimalIndex),
            _ => None,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericalConfig {
    /// Bisection tolerance for indices.
    pub index_tol: f64,
    /// Truncation depth of the stopping DP and of the exact evaluator.
    pub horizon_cap: u32,
    /// Largest acceptable unresolved probability in an exact evaluation.
    pub prob_tol: f64,
}

impl Default for NumericalConfig {
    fn default() -> Self {
        NumericalConfig {
            index_tol: 1e-9,
            horizon_cap: 200,
            prob_tol: 1e-9,
        }
    }
}

/// A pool member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CandidateState {
    pub category: Category,
    pub n1: u32,
    pub n0: u32,
    pub retired: bool,
}

impl CandidateState {
    pub fn blank(category: Category) -> Self {
        CandidateState {
            category,
            n1: 0,
            n0: 0,
            retired: false,
        }
    }

    pub fn with_history(category: Category, n1: u32, n0: u32) -> Self {
        CandidateState {
            category,
            n1,
            n0,
            retired: false,
        }
    }

    pub fn observe(&mut self, s: Signal) {
        match s {
            Signal::One => self.n1 += 1,
            Signal::Zero => self.n0 += 1,
        }
    }

    /// Sets the retirement flag; it is never cleared.
    pub fn retire(&mut self) {
        self.retired = true;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub delta: f64,
    pub cat_a: CategoryParams,
    pub cat_b: CategoryParams,
    pub mu_a: f64,
    pub mu_b: f64,
    pub initial_pool: Vec<CandidateState>,
    pub policy: Policy,
    pub tolerances: NumericalConfig,
}

impl Scenario {
    /// A scenario with the default pool (one blank-slate candidate per
    /// category, A first) and default tolerances.
    pub fn new(
        delta: f64,
        cat_a: CategoryParams,
        cat_b: CategoryParams,
        mu_a: f64,
        mu_b: f64,
        policy: Policy,
    ) -> Self {
        Scenario {
            delta,
            cat_a,
            cat_b,
            mu_a,
            mu_b,
            initial_pool: default_pool(),
            policy,
            tolerances: NumericalConfig::default(),
        }
    }

    pub fn cat(&self, c: Category) -> &CategoryParams {
        match c {
            Category::A => &self.cat_a,
            Category::B => &self.cat_b,
        }
    }

    pub fn cat_mut(&mut self, c: Category) -> &mut CategoryParams {
        match c {
            Category::A => &mut self.cat_a,
            Category::B => &mut self.cat_b,
        }
    }

    pub fn mu(&self, c: Category) -> f64 {
        match c {
            Category::A => self.mu_a,
            Category::B => self.mu_b,
        }
    }

    pub fn mu_total(&self) -> f64 {
        self.mu_a + self.mu_b
    }

    pub fn with_mu(&self, mu_a: f64, mu_b: f64) -> Scenario {
        Scenario {
            mu_a,
            mu_b,
            ..self.clone()
        }
    }

    pub fn with_policy(&self, policy: Policy) -> Scenario {
        Scenario {
            policy,
            ..self.clone()
        }
    }
}

pub fn default_pool() -> Vec<CandidateState> {
    vec![
        CandidateState::blank(Category::A),
        CandidateState::blank(Category::B),
    ]
}

fn ln_pow(base: f64, n: u32) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * base.ln()
    }
}

/// Posterior probability of qualification after `n1` positive and `n0`
/// negative signals.
///
/// Evaluated in log space so long histories underflow gracefully instead of
/// collapsing into a spurious 0/0.
pub fn posterior(cat: &CategoryParams, n1: u32, n0: u32) -> Result<f64> {
    let ll_h = cat.p0.ln() + ln_pow(cat.q_h, n1) + ln_pow(1.0 - cat.q_h, n0);
    let ll_l = (1.0 - cat.p0).ln() + ln_pow(1.0 - cat.q_l, n1) + ln_pow(cat.q_l, n0);
    match (ll_h == f64::NEG_INFINITY, ll_l == f64::NEG_INFINITY) {
        (true, true) => Err(Error::ImpossibleHistory {
            category: cat.label,
            n1,
            n0,
        }),
        (true, false) => Ok(0.0),
        (false, true) => Ok(1.0),
        (false, false) => Ok(1.0 / (1.0 + (ll_l - ll_h).exp())),
    }
}

/// Predictive probability of the next signal given the history.
pub fn signal_prob(cat: &CategoryParams, n1: u32, n0: u32, s: Signal) -> Result<f64> {
    let p = posterior(cat, n1, n0)?;
    Ok(predictive(cat, p, s))
}

pub(crate) fn predictive(cat: &CategoryParams, p: f64, s: Signal) -> f64 {
    match s {
        Signal::One => p * cat.q_h + (1.0 - p) * (1.0 - cat.q_l),
        Signal::Zero => p * (1.0 - cat.q_h) + (1.0 - p) * cat.q_l,
    }
}

/// Single-step Bayes update of a posterior.
pub fn bayes_update(cat: &CategoryParams, p: f64, s: Signal) -> f64 {
    let (lh, ll) = match s {
        Signal::One => (cat.q_h, 1.0 - cat.q_l),
        Signal::Zero => (1.0 - cat.q_h, cat.q_l),
    };
    p * lh / (p * lh + (1.0 - p) * ll)
}

pub fn is_acceptable(cat: &CategoryParams, n1: u32, n0: u32) -> Result<bool> {
    Ok(posterior(cat, n1, n0)? >= cat.pbar)
}

/// The category whose evaluation is Blackwell less informative, if the two
/// technologies are ranked.
pub fn minority_category(scenario: &Scenario) -> Option<Category> {
    let (a, b) = (&scenario.cat_a, &scenario.cat_b);
    let dominates = |hi: &CategoryParams, lo: &CategoryParams| {
        hi.q_h >= lo.q_h && hi.q_l >= lo.q_l && (hi.q_h > lo.q_h || hi.q_l > lo.q_l)
    };
    if dominates(b, a) {
        Some(Category::A)
    } else if dominates(a, b) {
        Some(Category::B)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// A type invariant; nothing downstream can run.
    Invariant,
    /// A modelling assumption the engine does not need but the results
    /// are usually read under.
    Assumption,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
}

impl Violation {
    fn invariant(code: &'static str, message: impl Into<String>) -> Self {
        Violation {
            severity: Severity::Invariant,
            code,
            message: message.into(),
        }
    }

    fn assumption(code: &'static str, message: impl Into<String>) -> Self {
        Violation {
            severity: Severity::Assumption,
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Invariant => "invariant",
            Severity::Assumption => "assumption",
        };
        write!(f, "[{sev}] {}: {}", self.code, self.message)
    }
}

const MU_SLACK: f64 = 1e-12;

/// All violated invariants and standing assumptions, one entry per failed
/// condition. Empty means the scenario is fully valid.
pub fn validate(scenario: &Scenario) -> Vec<Violation> {
    let mut out = invariant_violations(scenario);
    if out.is_empty() {
        out.extend(assumption_violations(scenario));
    }
    out
}

/// Only the hard invariants; evaluation refuses scenarios that fail these.
pub fn invariant_violations(scenario: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(scenario.delta > 0.0 && scenario.delta < 1.0) {
        out.push(Violation::invariant(
            "delta",
            format!("discount factor {} outside (0,1)", scenario.delta),
        ));
    }
    for c in Category::ALL {
        let p = scenario.cat(c);
        if !(p.p0 > 0.0 && p.p0 < 1.0) {
            out.push(Violation::invariant("p0", format!("{c}.p0 = {} outside (0,1)", p.p0)));
        }
        if !(p.v > 0.0 && p.v.is_finite()) {
            out.push(Violation::invariant("v", format!("{c}.v = {} not positive", p.v)));
        }
        for (name, q) in [("qH", p.q_h), ("qL", p.q_l)] {
            if !(0.0..=1.0).contains(&q) {
                out.push(Violation::invariant("q", format!("{c}.{name} = {q} outside [0,1]")));
            }
        }
        if !(p.pbar > 0.0 && p.pbar <= 1.0) {
            out.push(Violation::invariant(
                "pbar",
                format!("{c}.Pbar = {} outside (0,1]", p.pbar),
            ));
        }
        if p.p0 >= p.pbar {
            out.push(Violation::invariant(
                "prior-threshold",
                format!("{c}: prior not below threshold ({} >= {})", p.p0, p.pbar),
            ));
        }
        if p.q_h < 1.0 - p.q_l {
            out.push(Violation::invariant(
                "signal-direction",
                format!("{c}: qH < 1 - qL, a positive signal would lower the posterior"),
            ));
        }
    }
    if scenario.mu_a < 0.0 || scenario.mu_b < 0.0 {
        out.push(Violation::invariant(
            "mu-negative",
            "search probabilities must be nonnegative",
        ));
    }
    if scenario.mu_total() > 1.0 + MU_SLACK {
        out.push(Violation::invariant(
            "mu-sum",
            format!("search probabilities exceed 1 ({})", scenario.mu_total()),
        ));
    }
    let t = &scenario.tolerances;
    if !(t.index_tol > 0.0) || !(t.prob_tol > 0.0) || t.horizon_cap < 1 {
        out.push(Violation::invariant(
            "tolerances",
            "index_tol and prob_tol must be positive and horizon_cap at least 1",
        ));
    }
    if !out.is_empty() {
        return out;
    }
    for (i, c) in scenario.initial_pool.iter().enumerate() {
        match is_acceptable(scenario.cat(c.category), c.n1, c.n0) {
            Ok(true) => out.push(Violation::invariant(
                "pool",
                format!("pool candidate {i} is already acceptable"),
            )),
            Ok(false) => {}
            Err(e) => out.push(Violation::invariant("pool", format!("pool candidate {i}: {e}"))),
        }
    }
    out
}

fn assumption_violations(scenario: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let horizon = scenario.tolerances.horizon_cap;
    for c in Category::ALL {
        let p = scenario.cat(c);
        let reachable = (1..=horizon).any(|n1| matches!(is_acceptable(p, n1, 0), Ok(true)));
        if !reachable {
            out.push(Violation::assumption(
                "threshold-unreachable",
                format!("{c}: threshold not reachable within {horizon} evaluations"),
            ));
        }
    }
    if scenario.policy == Policy::Myopic {
        if let Ok(mv) = indices::myopic_values(scenario) {
            for c in Category::ALL {
                let u = mv.blank(c);
                if !(u > mv.u_search) {
                    out.push(Violation::assumption(
                        "blank-below-search",
                        format!(
                            "{c}: blank-slate myopic value {u} does not exceed search value {}",
                            mv.u_search
                        ),
                    ));
                }
            }
        }
    }
    out
}
