//! Ex-ante hiring probabilities: exact with certified bounds, and by
//! seeded simulation.
//!
//! Once search is first chosen every pool candidate is retired, so the
//! post-search process is a renewal: each arrival is evaluated in one block
//! that ends in a hire, a retirement (and another search), or runs past
//! the truncation depth. The exact evaluator enumerates the pre-search pool
//! game jointly and a single fresh arrival of each category, then closes
//! the renewal in closed form.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{self, CandidateState, Category, NumericalConfig, Scenario};
use crate::policies::{run_trajectory, Action, Recruiter};

/// Interval-valued outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDistribution {
    pub pa_lo: f64,
    pub pa_hi: f64,
    pub pb_lo: f64,
    pub pb_hi: f64,
    pub pnone_lo: f64,
    pub pnone_hi: f64,
    /// Widest of the three intervals.
    pub truncation_mass: f64,
}

impl OutcomeDistribution {
    pub fn category(&self, c: Category) -> (f64, f64) {
        match c {
            Category::A => (self.pa_lo, self.pa_hi),
            Category::B => (self.pb_lo, self.pb_hi),
        }
    }

    pub fn none(&self) -> (f64, f64) {
        (self.pnone_lo, self.pnone_hi)
    }

    pub fn mid(&self, c: Category) -> f64 {
        let (lo, hi) = self.category(c);
        0.5 * (lo + hi)
    }

    pub fn none_mid(&self) -> f64 {
        0.5 * (self.pnone_lo + self.pnone_hi)
    }
}

/// Outcome of one fresh arrival's evaluation block.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Block {
    hire: f64,
    censored: f64,
    // sum over censored states of mass * min(1, p / Pbar)
    potential: f64,
}

/// Post-search hiring probabilities as intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Renewal {
    a: (f64, f64),
    b: (f64, f64),
    none: (f64, f64),
    // upper bound on the total hire probability after search
    any_hi: f64,
}

fn block(rec: &Recruiter, scenario: &Scenario, c: Category, depth: u32) -> Result<Block> {
    let cat = scenario.cat(c);
    let mut out = Block::default();
    let mut cur = vec![1.0];
    for d in 0..=depth {
        let mut next = vec![0.0; d as usize + 2];
        for (j, &m) in cur.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let (n1, n0) = (d - j as u32, j as u32);
            let info = rec.info(c, n1, n0)?;
            if !info.eligible {
                continue;
            }
            if d == depth {
                out.censored += m;
                out.potential += m * (info.posterior / cat.pbar).min(1.0);
                continue;
            }
            for (ps, c1, c0, slot) in [
                (info.p_one, n1 + 1, n0, j),
                (1.0 - info.p_one, n1, n0 + 1, j + 1),
            ] {
                if ps <= 0.0 {
                    continue;
                }
                if model::is_acceptable(cat, c1, c0)? {
                    out.hire += m * ps;
                } else {
                    next[slot] += m * ps;
                }
            }
        }
        cur = next;
    }
    Ok(out)
}

fn renewal(rec: &Recruiter, scenario: &Scenario, depth: u32) -> Result<Renewal> {
    let (mu_a, mu_b) = (scenario.mu_a, scenario.mu_b);
    let blk = |c: Category, mu: f64| -> Result<Block> {
        if mu > 0.0 {
            block(rec, scenario, c, depth)
        } else {
            Ok(Block::default())
        }
    };
    let ba = blk(Category::A, mu_a)?;
    let bb = blk(Category::B, mu_b)?;
    Ok(renewal_from_blocks(mu_a, mu_b, ba, bb))
}

/// Solves the renewal equation. Censored block mass may end in anything:
/// the lower bounds let it run forever, the upper bounds let it hire up
/// to its potential and otherwise retire.
fn renewal_from_blocks(mu_a: f64, mu_b: f64, ba: Block, bb: Block) -> Renewal {
    let zero = Renewal {
        a: (0.0, 0.0),
        b: (0.0, 0.0),
        none: (1.0, 1.0),
        any_hi: 0.0,
    };
    let (ha, hb) = (mu_a * ba.hire, mu_b * bb.hire);
    let (ca, cb) = (mu_a * ba.censored, mu_b * bb.censored);
    let (pa, pb) = (mu_a * ba.potential, mu_b * bb.potential);
    let den_lo = ha + ca + hb + cb;
    if den_lo <= 0.0 {
        return zero;
    }
    let ratio = |num: f64, den: f64| if den > 0.0 { (num / den).min(1.0) } else { 0.0 };
    let a = (ha / den_lo, ratio(ha + pa, ha + pa + hb));
    let b = (hb / den_lo, ratio(hb + pb, hb + pb + ha));
    let any_lo = (ha + hb) / den_lo;
    let any_hi: f64 = if ha + hb + pa + pb > 0.0 { 1.0 } else { 0.0 };
    Renewal {
        a,
        b,
        none: ((1.0 - any_hi).max(0.0), (1.0 - any_lo).max(0.0)),
        any_hi,
    }
}

fn refuse_invalid(scenario: &Scenario) -> Result<()> {
    let inv = model::invariant_violations(scenario);
    if inv.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidScenario(inv))
    }
}

/// Exact ex-ante outcome probabilities of the scenario's policy, with
/// bounds on the effect of truncating at `cfg.horizon_cap` evaluations.
pub fn exact_outcome(scenario: &Scenario, cfg: &NumericalConfig) -> Result<OutcomeDistribution> {
    refuse_invalid(scenario)?;
    let mut sc = scenario.clone();
    sc.tolerances = *cfg;
    let rec = Recruiter::new(&sc)?;
    exact_with(&rec, &sc)
}

pub(crate) fn exact_with(rec: &Recruiter, sc: &Scenario) -> Result<OutcomeDistribution> {
    let depth = sc.tolerances.horizon_cap;
    let ren = renewal(rec, sc, depth)?;

    let template: Vec<CandidateState> = sc.initial_pool.clone();
    let mut layer: BTreeMap<Vec<(u32, u32)>, f64> = BTreeMap::new();
    layer.insert(template.iter().map(|c| (c.n1, c.n0)).collect(), 1.0);

    let mut hired = [0.0f64; 2];
    let mut searched = 0.0;
    let mut cens_a_hi = 0.0;
    let mut cens_b_hi = 0.0;
    let mut cens_none_lo = 0.0;
    let mut cens_none_hi = 0.0;
    let mut pool = template.clone();

    for d in 0..=depth {
        let mut next: BTreeMap<Vec<(u32, u32)>, f64> = BTreeMap::new();
        for (key, &m) in &layer {
            for (c, &(n1, n0)) in pool.iter_mut().zip(key) {
                c.n1 = n1;
                c.n0 = n0;
            }
            let decision = rec.decide(&pool)?;
            let i = match decision.action {
                Action::Search => {
                    searched += m;
                    continue;
                }
                Action::Evaluate(i) => i,
            };
            if d == depth {
                let mut pot = [0.0f64; 2];
                for (k, c) in pool.iter().enumerate() {
                    if c.retired || decision.retire.contains(&k) {
                        continue;
                    }
                    let info = rec.info(c.category, c.n1, c.n0)?;
                    pot[c.category.index()] += info.posterior / sc.cat(c.category).pbar;
                }
                cens_a_hi += m * (pot[0] + ren.a.1).min(1.0);
                cens_b_hi += m * (pot[1] + ren.b.1).min(1.0);
                cens_none_lo += m * (1.0 - (pot[0] + pot[1] + ren.any_hi).min(1.0));
                cens_none_hi += m;
                continue;
            }
            let c = pool[i];
            let cat = sc.cat(c.category);
            let info = rec.info(c.category, c.n1, c.n0)?;
            for (ps, c1, c0) in [
                (info.p_one, c.n1 + 1, c.n0),
                (1.0 - info.p_one, c.n1, c.n0 + 1),
            ] {
                if ps <= 0.0 {
                    continue;
                }
                if model::is_acceptable(cat, c1, c0)? {
                    hired[c.category.index()] += m * ps;
                } else {
                    let mut k = key.clone();
                    k[i] = (c1, c0);
                    *next.entry(k).or_insert(0.0) += m * ps;
                }
            }
        }
        layer = next;
        if layer.is_empty() {
            break;
        }
    }

    let pa_lo = hired[0] + searched * ren.a.0;
    let pa_hi = hired[0] + searched * ren.a.1 + cens_a_hi;
    let pb_lo = hired[1] + searched * ren.b.0;
    let pb_hi = hired[1] + searched * ren.b.1 + cens_b_hi;
    let pnone_lo = searched * ren.none.0 + cens_none_lo;
    let pnone_hi = searched * ren.none.1 + cens_none_hi;
    let truncation_mass = (pa_hi - pa_lo).max(pb_hi - pb_lo).max(pnone_hi - pnone_lo);
    let out = OutcomeDistribution {
        pa_lo,
        pa_hi: pa_hi.min(1.0),
        pb_lo,
        pb_hi: pb_hi.min(1.0),
        pnone_lo,
        pnone_hi: pnone_hi.min(1.0),
        truncation_mass,
    };
    if truncation_mass > sc.tolerances.prob_tol {
        return Err(Error::InsufficientHorizon {
            achieved: Box::new(out),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub pa: f64,
    pub pb: f64,
    pub pnone: f64,
    pub stderr_a: f64,
    pub stderr_b: f64,
    pub stderr_none: f64,
    pub n: u64,
    pub seed: u64,
    /// Trials still undecided after `trial_horizon` periods; counted in `pnone`.
    pub censored: u64,
    pub trial_horizon: u64,
}

const CHUNK: u64 = 1 << 13;

/// Simulates `n` trajectories. Trial `t` draws from a ChaCha8 stream
/// keyed by `(seed, t)`, so the estimate does not depend on the number of
/// worker threads.
pub fn monte_carlo(scenario: &Scenario, n: u64, seed: u64, trial_horizon: u64) -> Result<McEstimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("trial count must be at least 1".into()));
    }
    refuse_invalid(scenario)?;
    let rec = Recruiter::new(scenario)?;
    monte_carlo_with(&rec, scenario, n, seed, trial_horizon)
}

pub(crate) fn monte_carlo_with(
    rec: &Recruiter,
    scenario: &Scenario,
    n: u64,
    seed: u64,
    trial_horizon: u64,
) -> Result<McEstimate> {
    let chunks = n.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|k| -> Result<[u64; 3]> {
            let mut tally = [0u64; 3];
            for t in k * CHUNK..((k + 1) * CHUNK).min(n) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t);
                let end = run_trajectory(
                    rec,
                    scenario,
                    &scenario.initial_pool,
                    &mut rng,
                    trial_horizon,
                    |_| {},
                )?;
                match end.hire {
                    Some(h) => tally[h.category.index()] += 1,
                    None if end.periods >= trial_horizon => tally[2] += 1,
                    None => unreachable!("trajectory ended without hire before its horizon"),
                }
            }
            Ok(tally)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tally = [0u64; 3];
    for c in counts {
        for (t, x) in tally.iter_mut().zip(c) {
            *t += x;
        }
    }
    let nf = n as f64;
    let pa = tally[0] as f64 / nf;
    let pb = tally[1] as f64 / nf;
    let pnone = tally[2] as f64 / nf;
    let se = |p: f64| (p * (1.0 - p) / nf).sqrt();
    Ok(McEstimate {
        pa,
        pb,
        pnone,
        stderr_a: se(pa),
        stderr_b: se(pb),
        stderr_none: se(pnone),
        n,
        seed,
        censored: tally[2],
        trial_horizon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Backfires,
    Helps,
    Indeterminate,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Backfires => "Backfires",
            Verdict::Helps => "Helps",
            Verdict::Indeterminate => "Indeterminate",
        }
    }

    /// Reads the sign of a difference interval `[lo, hi]`.
    pub fn from_interval(lo: f64, hi: f64) -> Verdict {
        if hi < 0.0 {
            Verdict::Backfires
        } else if lo > 0.0 {
            Verdict::Helps
        } else {
            Verdict::Indeterminate
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub before: OutcomeDistribution,
    pub after: OutcomeDistribution,
    /// Enclosure of `after - before` for each outcome.
    pub diff_a: (f64, f64),
    pub diff_b: (f64, f64),
    pub diff_none: (f64, f64),
    /// Read off the A difference.
    pub verdict: Verdict,
}

fn diff(after: (f64, f64), before: (f64, f64)) -> (f64, f64) {
    (after.0 - before.1, after.1 - before.0)
}

/// Exact outcomes before and after a change in arrival probabilities.
pub fn compare(before: &Scenario, after: &Scenario, cfg: &NumericalConfig) -> Result<Comparison> {
    if before.with_mu(0.0, 0.0) != after.with_mu(0.0, 0.0) {
        return Err(Error::InvalidArgument(
            "compared scenarios must differ only in muA and muB".into(),
        ));
    }
    let b = exact_outcome(before, cfg)?;
    let a = exact_outcome(after, cfg)?;
    Ok(comparison(b, a))
}

pub(crate) fn comparison(before: OutcomeDistribution, after: OutcomeDistribution) -> Comparison {
    let diff_a = diff(after.category(Category::A), before.category(Category::A));
    Comparison {
        before,
        after,
        diff_a,
        diff_b: diff(after.category(Category::B), before.category(Category::B)),
        diff_none: diff(after.none(), before.none()),
        verdict: Verdict::from_interval(diff_a.0, diff_a.1),
    }
}
