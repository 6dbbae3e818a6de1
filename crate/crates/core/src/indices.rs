//! Candidate indices, the search index and myopic values.
//!
//! Indices are computed by calibration: for a trial retirement value `M`,
//! backward induction on the `(n1, n0)` lattice gives the value of
//! evaluating the candidate under the best retirement rule, and the index is
//! the `M` at which continuing from the root is exactly as good as retiring.
//! A candidate whose posterior reaches its threshold is hired, which in the
//! calibration problem is an absorbing arm paying `p * v` for good.
//!
//! The lattice is truncated at `horizon_cap` evaluations. Each index is
//! bracketed by solving twice: once with leaves worth `M` (retire at the
//! cutoff) and once with leaves worth `min(M + p v, max(M, v))`, an upper
//! bound on any continuation because the posterior is a martingale.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{self, Category, CategoryParams, NumericalConfig, Scenario, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopRule {
    Continue,
    Stop,
    /// The threshold has been reached; the candidate is hired.
    Absorbed,
}

pub type StoppingProfile = BTreeMap<(Category, u32, u32), StopRule>;

#[derive(Debug, Clone, PartialEq)]
pub struct IndexResult {
    pub value: f64,
    pub achieved_tol: f64,
    pub stopping_profile: StoppingProfile,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MyopicValues {
    pub ua_blank: f64,
    pub ub_blank: f64,
    pub u_search: f64,
}

impl MyopicValues {
    pub fn blank(&self, c: Category) -> f64 {
        match c {
            Category::A => self.ua_blank,
            Category::B => self.ub_blank,
        }
    }
}

/// Probability that one more evaluation makes the candidate acceptable.
pub fn one_step_hire_prob(cat: &CategoryParams, n1: u32, n0: u32) -> Result<f64> {
    let mut lambda = 0.0;
    for (s, c1, c0) in [(Signal::One, n1 + 1, n0), (Signal::Zero, n1, n0 + 1)] {
        let ps = model::signal_prob(cat, n1, n0, s)?;
        if ps > 0.0 && model::is_acceptable(cat, c1, c0)? {
            lambda += ps;
        }
    }
    Ok(lambda)
}

pub fn myopic_value(cat: &CategoryParams, n1: u32, n0: u32) -> Result<f64> {
    Ok(one_step_hire_prob(cat, n1, n0)? * cat.v)
}

pub fn myopic_search_value(scenario: &Scenario) -> Result<f64> {
    Ok(myopic_values(scenario)?.u_search)
}

pub fn myopic_values(scenario: &Scenario) -> Result<MyopicValues> {
    let ua = myopic_value(&scenario.cat_a, 0, 0)?;
    let ub = myopic_value(&scenario.cat_b, 0, 0)?;
    Ok(MyopicValues {
        ua_blank: ua,
        ub_blank: ub,
        u_search: scenario.delta * (scenario.mu_a * ua + scenario.mu_b * ub),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Unreached,
    Absorbed,
    Interior,
    Leaf,
}

fn tri(d: u32) -> usize {
    let d = d as usize;
    d * (d + 1) / 2
}

/// Reachable part of the signal lattice below a root state.
///
/// Node `(i, j)` (i more ones, j more zeros than the root) lives at
/// `tri(i + j) + j`; its one-child is `tri(i + j + 1) + j` and its
/// zero-child the slot after that.
#[derive(Debug, Clone)]
pub(crate) struct Lattice {
    pub(crate) label: Category,
    pub(crate) root: (u32, u32),
    pub(crate) depth: u32,
    v: f64,
    informative: bool,
    post: Vec<f64>,
    kind: Vec<Node>,
    // continuation at a node is a + k1 * W(one-child) + k0 * W(zero-child)
    a: Vec<f64>,
    k1: Vec<f64>,
    k0: Vec<f64>,
}

impl Lattice {
    pub(crate) fn build(
        cat: &CategoryParams,
        delta: f64,
        n1: u32,
        n0: u32,
        depth: u32,
    ) -> Result<Lattice> {
        let size = tri(depth + 1);
        let mut post = vec![0.0; size];
        let mut kind = vec![Node::Unreached; size];
        let mut a = vec![0.0; size];
        let mut k1 = vec![0.0; size];
        let mut k0 = vec![0.0; size];
        post[0] = model::posterior(cat, n1, n0)?;
        kind[0] = if post[0] >= cat.pbar {
            Node::Absorbed
        } else if depth == 0 {
            Node::Leaf
        } else {
            Node::Interior
        };
        for d in 0..depth {
            let base = tri(d);
            let next = tri(d + 1);
            for j in 0..=d as usize {
                let n = base + j;
                if kind[n] != Node::Interior {
                    continue;
                }
                let p = post[n];
                for (s, child) in [(Signal::One, next + j), (Signal::Zero, next + j + 1)] {
                    let ps = model::predictive(cat, p, s);
                    if ps <= 0.0 {
                        continue;
                    }
                    let pc = model::bayes_update(cat, p, s);
                    if kind[child] == Node::Unreached {
                        let i = (d as usize - j) as u32 + n1 + u32::from(s == Signal::One);
                        let z = j as u32 + n0 + u32::from(s == Signal::Zero);
                        // recompute from counts so every node matches `posterior`
                        let exact = model::posterior(cat, i, z).unwrap_or(pc);
                        post[child] = exact;
                        kind[child] = if exact >= cat.pbar {
                            Node::Absorbed
                        } else if d + 1 == depth {
                            Node::Leaf
                        } else {
                            Node::Interior
                        };
                    }
                    let (ks, value) = if kind[child] == Node::Absorbed {
                        (0.0, ps * post[child] * cat.v)
                    } else {
                        (ps * delta, 0.0)
                    };
                    a[n] += value;
                    match s {
                        Signal::One => k1[n] = ks,
                        Signal::Zero => k0[n] = ks,
                    }
                }
            }
        }
        Ok(Lattice {
            label: cat.label,
            root: (n1, n0),
            depth,
            v: cat.v,
            informative: cat.q_h + cat.q_l > 1.0,
            post,
            kind,
            a,
            k1,
            k0,
        })
    }

    pub(crate) fn root_absorbed(&self) -> bool {
        self.kind[0] == Node::Absorbed
    }

    pub(crate) fn root_posterior(&self) -> f64 {
        self.post[0]
    }

    /// Continuation value at the root when the outside option is `m`;
    /// `w` is scratch space. The root itself is never retired.
    pub(crate) fn continuation(&self, m: f64, upper: bool, w: &mut Vec<f64>) -> f64 {
        w.resize(self.kind.len(), 0.0);
        let hi_cap = m.max(self.v);
        for d in (0..=self.depth).rev() {
            let base = tri(d);
            let next = tri(d + 1);
            for j in 0..=d as usize {
                let n = base + j;
                w[n] = match self.kind[n] {
                    Node::Leaf => {
                        if upper && self.informative {
                            (m + self.post[n] * self.v).min(hi_cap)
                        } else {
                            m
                        }
                    }
                    Node::Interior => {
                        let c = self.a[n] + self.k1[n] * w[next + j] + self.k0[n] * w[next + j + 1];
                        if d == 0 {
                            c
                        } else {
                            c.max(m)
                        }
                    }
                    _ => 0.0,
                };
            }
        }
        w[0]
    }

    /// For every node, whether retiring at outside value `m` is optimal
    /// (continuation weakly below `m`), using retire-at-leaf truncation.
    /// The root is included.
    pub(crate) fn stop_flags(&self, m: f64) -> Vec<bool> {
        let mut w = vec![0.0; self.kind.len()];
        let mut stop = vec![false; self.kind.len()];
        for d in (0..=self.depth).rev() {
            let base = tri(d);
            let next = tri(d + 1);
            for j in 0..=d as usize {
                let n = base + j;
                match self.kind[n] {
                    Node::Leaf => {
                        w[n] = m;
                        stop[n] = true;
                    }
                    Node::Interior => {
                        let c = self.a[n] + self.k1[n] * w[next + j] + self.k0[n] * w[next + j + 1];
                        stop[n] = c <= m;
                        w[n] = c.max(m);
                    }
                    _ => {}
                }
            }
        }
        stop
    }

    /// Expected discounted hire payoff and expected discount at retirement
    /// under a given stop set. Leaves always retire.
    pub(crate) fn payoff_and_discount(
        &self,
        stop: impl Fn(u32, u32) -> bool,
        force_root: bool,
    ) -> (f64, f64) {
        let mut nv = vec![0.0; self.kind.len()];
        let mut dv = vec![0.0; self.kind.len()];
        for d in (0..=self.depth).rev() {
            let base = tri(d);
            let next = tri(d + 1);
            for j in 0..=d as usize {
                let n = base + j;
                match self.kind[n] {
                    Node::Leaf => dv[n] = 1.0,
                    Node::Interior => {
                        let (i1, i0) = self.counts(d, j);
                        if stop(i1, i0) && !(force_root && d == 0) {
                            dv[n] = 1.0;
                        } else {
                            nv[n] =
                                self.a[n] + self.k1[n] * nv[next + j] + self.k0[n] * nv[next + j + 1];
                            dv[n] = self.k1[n] * dv[next + j] + self.k0[n] * dv[next + j + 1];
                        }
                    }
                    _ => {}
                }
            }
        }
        (nv[0], dv[0])
    }

    /// Slot of absolute state `(n1, n0)`, if it is in the lattice.
    pub(crate) fn slot(&self, n1: u32, n0: u32) -> Option<usize> {
        let i = n1.checked_sub(self.root.0)?;
        let j = n0.checked_sub(self.root.1)?;
        let d = i.checked_add(j)?;
        if d > self.depth {
            return None;
        }
        let n = tri(d) + j as usize;
        (self.kind[n] != Node::Unreached).then_some(n)
    }

    fn counts(&self, d: u32, j: usize) -> (u32, u32) {
        (self.root.0 + d - j as u32, self.root.1 + j as u32)
    }

    /// Absolute `(n1, n0)` of each non-unreached node with its flag.
    pub(crate) fn nodes(&self) -> impl Iterator<Item = (u32, u32, usize)> + '_ {
        (0..=self.depth).flat_map(move |d| {
            (0..=d as usize).filter_map(move |j| {
                let n = tri(d) + j;
                (self.kind[n] != Node::Unreached).then(|| {
                    let (i1, i0) = self.counts(d, j);
                    (i1, i0, n)
                })
            })
        })
    }

    fn profile(&self, m: f64, root_free: bool, into: &mut StoppingProfile) {
        let stop = self.stop_flags(m);
        for (i1, i0, n) in self.nodes() {
            let rule = match self.kind[n] {
                Node::Absorbed => StopRule::Absorbed,
                _ if n == 0 && !root_free => StopRule::Continue,
                _ if stop[n] => StopRule::Stop,
                _ => StopRule::Continue,
            };
            into.insert((self.label, i1, i0), rule);
        }
    }
}

/// Bisection on a decreasing function over `[lo, hi]` with `f(lo) >= 0`.
/// Returns a bracket of the last sign change no wider than `width`.
fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> (f64, f64) {
    if f(hi) >= 0.0 {
        return (hi, hi);
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Brackets the root of a calibration gap: `lower` and `upper` are the gap
/// under the two leaf conventions. Returns (midpoint, half-width).
fn certified_root(
    mut lower: impl FnMut(f64) -> f64,
    mut upper: impl FnMut(f64) -> f64,
    top: f64,
    tol: f64,
    depth: u32,
) -> Result<(f64, f64)> {
    let step = tol / 8.0;
    let (a_lo, a_hi) = bisect(&mut lower, 0.0, top, step);
    let probe = (a_hi + step).min(top);
    let b_hi = if upper(probe) <= 0.0 {
        probe
    } else {
        bisect(&mut upper, a_hi, top, step).1
    };
    let half = 0.5 * (b_hi - a_lo);
    if half > tol {
        return Err(Error::HorizonInsufficient {
            bound: half,
            tol,
            depth,
        });
    }
    Ok((0.5 * (a_lo + b_hi), half))
}

/// Index value and achieved tolerance, without the stopping profile.
pub(crate) fn gittins_value(
    cat: &CategoryParams,
    n1: u32,
    n0: u32,
    delta: f64,
    cfg: &NumericalConfig,
) -> Result<(f64, f64)> {
    let lat = Lattice::build(cat, delta, n1, n0, cfg.horizon_cap)?;
    gittins_on(&lat, cfg)
}

fn gittins_on(lat: &Lattice, cfg: &NumericalConfig) -> Result<(f64, f64)> {
    if lat.root_absorbed() {
        return Ok((lat.root_posterior() * lat.v, 0.0));
    }
    let mut w = Vec::new();
    let mut w2 = Vec::new();
    certified_root(
        |m| lat.continuation(m, false, &mut w) - m,
        |m| lat.continuation(m, true, &mut w2) - m,
        lat.v,
        cfg.index_tol,
        cfg.horizon_cap,
    )
}

/// Candidate index of a category-`cat` candidate with history `(n1, n0)`.
pub fn gittins_index(
    cat: &CategoryParams,
    n1: u32,
    n0: u32,
    delta: f64,
    cfg: &NumericalConfig,
) -> Result<IndexResult> {
    check_delta(delta)?;
    let lat = Lattice::build(cat, delta, n1, n0, cfg.horizon_cap)?;
    let (value, achieved_tol) = gittins_on(&lat, cfg)?;
    let mut stopping_profile = StoppingProfile::new();
    lat.profile(value, false, &mut stopping_profile);
    Ok(IndexResult {
        value,
        achieved_tol,
        stopping_profile,
    })
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("delta = {delta} outside (0,1)")))
    }
}

/// Payoff, discount and ratio of the candidate-index objective under a
/// fixed retirement rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexObjective {
    /// Expected discounted payoff collected before retirement.
    pub payoff: f64,
    /// Expected discount factor at retirement.
    pub retire_discount: f64,
    /// `payoff / (1 - retire_discount)`.
    pub ratio: f64,
}

/// Evaluates the index objective at `(n1, n0)` when the candidate is
/// retired at every state where `stop` holds. The root is always evaluated
/// at least once.
pub fn index_objective(
    cat: &CategoryParams,
    n1: u32,
    n0: u32,
    delta: f64,
    cfg: &NumericalConfig,
    stop: impl Fn(u32, u32) -> bool,
) -> Result<IndexObjective> {
    check_delta(delta)?;
    let lat = Lattice::build(cat, delta, n1, n0, cfg.horizon_cap)?;
    if lat.root_absorbed() {
        let v = lat.root_posterior() * cat.v;
        return Ok(IndexObjective {
            payoff: v,
            retire_discount: 0.0,
            ratio: v,
        });
    }
    let (payoff, retire_discount) = lat.payoff_and_discount(stop, true);
    Ok(IndexObjective {
        payoff,
        retire_discount,
        ratio: payoff / (1.0 - retire_discount),
    })
}

/// Index of `cat` at `n0` failures and no successes, for technologies in
/// which a qualified candidate is revealed by its first success.
pub fn gittins_closed_form_ql1(cat: &CategoryParams, n0: u32, delta: f64) -> Result<f64> {
    if cat.q_l != 1.0 {
        return Err(Error::OracleInapplicable(format!(
            "closed-form index needs qL = 1, got {}",
            cat.q_l
        )));
    }
    let lambda = model::posterior(cat, 0, n0)? * cat.q_h;
    Ok(closed_form_ratio(lambda, cat.v, delta))
}

fn closed_form_ratio(lambda: f64, v: f64, delta: f64) -> f64 {
    lambda * v / (1.0 - delta * (1.0 - lambda))
}

struct SearchLattices {
    lat: [Lattice; 2],
    mu: [f64; 2],
    delta: f64,
    idle: f64,
}

impl SearchLattices {
    fn build(scenario: &Scenario, cfg: &NumericalConfig) -> Result<SearchLattices> {
        let depth = cfg.horizon_cap;
        Ok(SearchLattices {
            lat: [
                Lattice::build(&scenario.cat_a, scenario.delta, 0, 0, depth)?,
                Lattice::build(&scenario.cat_b, scenario.delta, 0, 0, depth)?,
            ],
            mu: [scenario.mu_a, scenario.mu_b],
            delta: scenario.delta,
            idle: (1.0 - scenario.mu_total()).max(0.0),
        })
    }

    /// Value of one search followed by optimal play of the arrival against
    /// outside value `m`, minus `m`.
    fn gap(&self, m: f64, upper: bool, w: &mut Vec<f64>) -> f64 {
        let mut s = self.idle * m;
        for (lat, mu) in self.lat.iter().zip(self.mu) {
            if mu > 0.0 {
                let arrival = if lat.root_absorbed() {
                    lat.root_posterior() * lat.v
                } else {
                    lat.continuation(m, upper, w).max(m)
                };
                s += mu * arrival;
            }
        }
        self.delta * s - m
    }
}

/// Index of the search action.
pub fn search_index(scenario: &Scenario, cfg: &NumericalConfig) -> Result<IndexResult> {
    check_delta(scenario.delta)?;
    let sl = SearchLattices::build(scenario, cfg)?;
    let mut stopping_profile = StoppingProfile::new();
    if scenario.mu_total() <= 0.0 {
        for lat in &sl.lat {
            lat.profile(0.0, true, &mut stopping_profile);
        }
        return Ok(IndexResult {
            value: 0.0,
            achieved_tol: 0.0,
            stopping_profile,
        });
    }
    let top = scenario.cat_a.v.max(scenario.cat_b.v);
    let mut w = Vec::new();
    let mut w2 = Vec::new();
    let (value, achieved_tol) = certified_root(
        |m| sl.gap(m, false, &mut w),
        |m| sl.gap(m, true, &mut w2),
        top,
        cfg.index_tol,
        cfg.horizon_cap,
    )?;
    for lat in &sl.lat {
        lat.profile(value, true, &mut stopping_profile);
    }
    Ok(IndexResult {
        value,
        achieved_tol,
        stopping_profile,
    })
}

/// The search-index ratio when every arrival is retired at the states where
/// `stop` holds (the arrival's blank state included).
pub fn search_objective(
    scenario: &Scenario,
    cfg: &NumericalConfig,
    stop: impl Fn(Category, u32, u32) -> bool,
) -> Result<f64> {
    check_delta(scenario.delta)?;
    let sl = SearchLattices::build(scenario, cfg)?;
    let mut num = 0.0;
    let mut den = 1.0 - sl.delta * sl.idle;
    for (lat, mu) in sl.lat.iter().zip(sl.mu) {
        let c = lat.label;
        let (n, d) = if lat.root_absorbed() {
            (lat.root_posterior() * lat.v, 0.0)
        } else {
            lat.payoff_and_discount(|i, j| stop(c, i, j), false)
        };
        num += mu * n;
        den -= sl.delta * mu * d;
    }
    if num == 0.0 {
        return Ok(0.0);
    }
    Ok(sl.delta * num / den)
}

/// Convenience: the search-index ratio under the retirement rule recorded
/// in a stopping profile. States outside the profile count as retired.
pub fn search_objective_for_profile(
    scenario: &Scenario,
    cfg: &NumericalConfig,
    profile: &StoppingProfile,
) -> Result<f64> {
    search_objective(scenario, cfg, |c, i, j| {
        !matches!(profile.get(&(c, i, j)), Some(StopRule::Continue))
    })
}

/// Which retirement structure a closed-form search index assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStructure {
    /// Every arrival is retired after its first failure.
    OneFailureEach,
    /// A-arrivals retire after one failure, B-arrivals after two.
    OneForATwoForB,
    /// Arrivals of each category are retired after the given number of
    /// failures (zero: retired on arrival).
    Failures { a: u32, b: u32 },
}

/// Per-arrival totals when an arrival is evaluated until its `k`-th
/// failure: `hire[k]` is the discounted hire payoff and `back[k]` the
/// discount on the next search period.
struct Budgets {
    hire: Vec<f64>,
    back: Vec<f64>,
}

impl Budgets {
    const MAX: usize = 100_000;

    fn new(c: &CategoryParams, delta: f64) -> Result<Self> {
        let (mut hire, mut back) = (vec![0.0], vec![1.0]);
        for k in 0..Self::MAX {
            let l = model::posterior(c, 0, k as u32)? * c.q_h;
            hire.push(hire[k] + back[k] * l * c.v);
            back.push(back[k] * delta * (1.0 - l));
            if back[k + 1] < 1e-300 {
                break;
            }
        }
        Ok(Budgets { hire, back })
    }

    fn best(&self, m: f64) -> usize {
        (0..self.hire.len())
            .max_by(|&i, &j| (self.hire[i] + m * self.back[i]).total_cmp(&(self.hire[j] + m * self.back[j])))
            .unwrap_or(0)
    }
}

/// Closed-form search index for `qL = 1` technologies, with the structure
/// attaining it: the best renewal ratio over per-category failure budgets.
pub fn search_index_closed_form_ql1_detailed(scenario: &Scenario) -> Result<(f64, SearchStructure)> {
    for c in Category::ALL {
        if scenario.cat(c).q_l != 1.0 {
            return Err(Error::OracleInapplicable(format!(
                "closed-form search index needs qL = 1 for both categories ({c}.qL = {})",
                scenario.cat(c).q_l
            )));
        }
    }
    let d = scenario.delta;
    let (mu_a, mu_b) = (scenario.mu_a, scenario.mu_b);
    let idle = 1.0 - scenario.mu_total();
    let a = Budgets::new(&scenario.cat_a, d)?;
    let b = Budgets::new(&scenario.cat_b, d)?;
    let ratio = |ka: usize, kb: usize| {
        let num = d * (mu_a * a.hire[ka] + mu_b * b.hire[kb]);
        let den = 1.0 - d * idle - d * (mu_a * a.back[ka] + mu_b * b.back[kb]);
        num / den
    };
    // Dinkelbach iteration: budgets best against the current ratio
    let (mut ka, mut kb) = (0, 0);
    let mut vs = ratio(ka, kb);
    for _ in 0..1000 {
        let (na, nb) = (a.best(vs), b.best(vs));
        let next = ratio(na, nb);
        if next <= vs {
            break;
        }
        (ka, kb, vs) = (na, nb, next);
    }
    let structure = match (ka, kb) {
        (1, 1) => SearchStructure::OneFailureEach,
        (1, 2) => SearchStructure::OneForATwoForB,
        _ => SearchStructure::Failures {
            a: ka as u32,
            b: kb as u32,
        },
    };
    Ok((vs, structure))
}

pub fn search_index_closed_form_ql1(scenario: &Scenario) -> Result<f64> {
    search_index_closed_form_ql1_detailed(scenario).map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Policy;
    use approx::assert_abs_diff_eq;

    fn p3() -> Scenario {
        Scenario::new(
            0.9,
            CategoryParams::new(Category::A, 0.75, 1.2, 0.19, 1.0, 0.9),
            CategoryParams::new(Category::B, 0.7, 1.0, 1.0, 1.0, 0.95),
            0.52,
            0.48,
            Policy::OptimalIndex,
        )
    }

    fn p1() -> Scenario {
        Scenario::new(
            0.9,
            CategoryParams::new(Category::A, 0.8, 1.5, 0.6, 1.0, 0.9),
            CategoryParams::new(Category::B, 0.7, 1.0, 1.0, 1.0, 0.95),
            2.0 / 3.0,
            1.0 / 3.0,
            Policy::Myopic,
        )
    }

    fn p4() -> Scenario {
        Scenario::new(
            0.9,
            CategoryParams::new(Category::A, 0.69, 1.01, 0.4, 1.0, 0.9),
            CategoryParams::new(Category::B, 0.68, 1.0, 0.8, 1.0, 0.95),
            0.15,
            0.85,
            Policy::OptimalIndex,
        )
    }

    #[test]
    fn myopic_examples() {
        let s = p1();
        assert_abs_diff_eq!(myopic_value(&s.cat_a, 0, 0).unwrap(), 0.72, epsilon = 1e-12);
        assert_abs_diff_eq!(myopic_value(&s.cat_b, 0, 0).unwrap(), 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(myopic_search_value(&s).unwrap(), 0.642, epsilon = 1e-12);
        assert_eq!(myopic_search_value(&s.with_mu(0.0, 0.0)).unwrap(), 0.0);
        // B after a failure can never be accepted next period
        assert_eq!(myopic_value(&s.cat_b, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn blank_indices_match_closed_forms() {
        let s = p3();
        let cfg = NumericalConfig::default();
        let vb = gittins_index(&s.cat_b, 0, 0, 0.9, &cfg).unwrap();
        assert_abs_diff_eq!(vb.value, 0.7 / (1.0 - 0.9 * 0.3), epsilon = 1e-9);
        let va = gittins_index(&s.cat_a, 0, 0, 0.9, &cfg).unwrap();
        assert_abs_diff_eq!(va.value, 0.1425 * 1.2 / (1.0 - 0.9 * 0.8575), epsilon = 1e-9);
        assert!(va.achieved_tol <= cfg.index_tol);
        assert_eq!(va.stopping_profile[&(Category::A, 0, 0)], StopRule::Continue);
        assert_eq!(va.stopping_profile[&(Category::A, 0, 1)], StopRule::Stop);
        assert_eq!(va.stopping_profile[&(Category::A, 1, 0)], StopRule::Absorbed);
    }

    #[test]
    fn acceptable_state_index_is_p_times_v() {
        let s = p3();
        let r = gittins_index(&s.cat_a, 1, 0, 0.9, &NumericalConfig::default()).unwrap();
        assert_eq!(r.value, 1.2);
        assert_eq!(r.achieved_tol, 0.0);
    }

    #[test]
    fn closed_form_examples() {
        let s = p3();
        assert_abs_diff_eq!(gittins_closed_form_ql1(&s.cat_a, 0, 0.9).unwrap(), 0.749178, epsilon = 1e-6);
        assert_abs_diff_eq!(gittins_closed_form_ql1(&s.cat_a, 1, 0.9).unwrap(), 0.730413, epsilon = 1e-6);
        assert_eq!(gittins_closed_form_ql1(&s.cat_b, 3, 0.9).unwrap(), 0.0);
        let mut c = s.cat_a;
        c.q_l = 0.9;
        assert!(matches!(
            gittins_closed_form_ql1(&c, 0, 0.9),
            Err(Error::OracleInapplicable(_))
        ));
    }

    #[test]
    fn search_index_p3() {
        let s = p3();
        let cfg = NumericalConfig::default();
        let r = search_index(&s, &cfg).unwrap();
        assert_abs_diff_eq!(r.value, 0.382428 / 0.522181, epsilon = 1e-6);
        assert_abs_diff_eq!(r.value, search_index_closed_form_ql1(&s).unwrap(), epsilon = 1e-9);
        let phi = search_objective_for_profile(&s, &cfg, &r.stopping_profile).unwrap();
        assert_abs_diff_eq!(phi, r.value, epsilon = 1e-9);
    }

    #[test]
    fn search_index_p4_structures() {
        let s = p4();
        let (v0, st0) = search_index_closed_form_ql1_detailed(&s).unwrap();
        assert_eq!(st0, SearchStructure::OneFailureEach);
        assert_abs_diff_eq!(v0, 0.758752, epsilon = 1e-6);
        let z = s.with_mu(0.16, 0.84);
        let (v1, st1) = search_index_closed_form_ql1_detailed(&z).unwrap();
        assert_eq!(st1, SearchStructure::OneForATwoForB);
        let cfg = NumericalConfig::default();
        assert_abs_diff_eq!(search_index(&z, &cfg).unwrap().value, v1, epsilon = 1e-9);
        assert_abs_diff_eq!(search_index(&s, &cfg).unwrap().value, v0, epsilon = 1e-9);
    }

    #[test]
    fn search_index_without_arrivals_is_zero() {
        let s = p3().with_mu(0.0, 0.0);
        assert_eq!(search_index(&s, &NumericalConfig::default()).unwrap().value, 0.0);
    }

    #[test]
    fn search_index_with_unreachable_payoff_is_zero() {
        // uninformative signals: no evaluation can ever cross the threshold
        let mut s = p3();
        s.cat_a = CategoryParams::new(Category::A, 0.5, 1.0, 0.6, 0.4, 0.99);
        s.cat_b = CategoryParams::new(Category::B, 0.5, 1.0, 0.6, 0.4, 0.99);
        let cfg = NumericalConfig {
            horizon_cap: 1,
            ..NumericalConfig::default()
        };
        let r = search_index(&s, &cfg).unwrap();
        assert!(r.value <= cfg.index_tol);

        // informative signals at the same depth cannot be certified
        s.cat_a.q_l = 0.6;
        s.cat_b.q_l = 0.6;
        assert!(matches!(
            search_index(&s, &cfg),
            Err(Error::HorizonInsufficient { .. })
        ));
    }

    #[test]
    fn forced_single_evaluation_earns_myopic_value() {
        let s = p1();
        let cfg = NumericalConfig::default();
        let obj = index_objective(&s.cat_a, 0, 0, 0.9, &cfg, |_, _| true).unwrap();
        assert_abs_diff_eq!(obj.payoff, myopic_value(&s.cat_a, 0, 0).unwrap(), epsilon = 1e-15);
        assert_abs_diff_eq!(obj.retire_discount, 0.9 * (1.0 - 0.48), epsilon = 1e-15);
    }

    #[test]
    fn short_horizon_is_reported() {
        let mut c = CategoryParams::new(Category::A, 0.3, 1.0, 0.7, 0.7, 0.999);
        c.label = Category::A;
        let cfg = NumericalConfig {
            horizon_cap: 5,
            ..NumericalConfig::default()
        };
        assert!(matches!(
            gittins_index(&c, 0, 0, 0.95, &cfg),
            Err(Error::HorizonInsufficient { .. })
        ));
    }
}
