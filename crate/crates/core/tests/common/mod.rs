#![allow(dead_code)]

//! Reference computations written independently of the library's lattice
//! and evaluator code.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use recruit::experiments::{builtin_cases, CaseId, PropositionCase};
use recruit::model::is_acceptable;
use recruit::policies::{apply, run_trajectory, Action, Draw, PoolState, Recruiter, StepKind, TraceStep};
use recruit::{CandidateState, Category, CategoryParams, Scenario, Signal};

pub fn case(id: CaseId) -> PropositionCase {
    builtin_cases().into_iter().find(|c| c.id == id).unwrap()
}

/// Posterior by direct Bayes' rule on counts.
pub fn post(c: &CategoryParams, n1: u32, n0: u32) -> f64 {
    let h = c.p0 * c.q_h.powi(n1 as i32) * (1.0 - c.q_h).powi(n0 as i32);
    let l = (1.0 - c.p0) * (1.0 - c.q_l).powi(n1 as i32) * c.q_l.powi(n0 as i32);
    h / (h + l)
}

/// Probability that the next evaluation of a qL = 1 candidate with `n0`
/// failures produces a hire.
pub fn lam(c: &CategoryParams, n0: u32) -> f64 {
    post(c, 0, n0) * c.q_h
}

/// qL = 1 index: the best "evaluate at most m more times" plan.
pub fn index_ql1(c: &CategoryParams, n0: u32, delta: f64) -> f64 {
    let mut best = 0.0f64;
    let (mut payoff, mut reach) = (0.0, 1.0);
    for k in 0..2000u32 {
        let l = lam(c, n0 + k);
        payoff += reach * l * c.v;
        reach *= delta * (1.0 - l);
        best = best.max(payoff / (1.0 - reach));
        if reach < 1e-300 {
            break;
        }
    }
    best
}

/// Continuation value of evaluating once more from `(n1, n0)` against
/// retirement value `m`, by memoised recursion to `depth` further signals.
pub fn continuation(c: &CategoryParams, n1: u32, n0: u32, delta: f64, m: f64, depth: u32) -> f64 {
    fn w(
        c: &CategoryParams,
        n1: u32,
        n0: u32,
        delta: f64,
        m: f64,
        left: u32,
        root: bool,
        memo: &mut HashMap<(u32, u32), f64>,
    ) -> f64 {
        if !root {
            if let Some(&x) = memo.get(&(n1, n0)) {
                return x;
            }
        }
        let p = post(c, n1, n0);
        let mut cont = 0.0;
        if left > 0 {
            let p1 = p * c.q_h + (1.0 - p) * (1.0 - c.q_l);
            for (ps, a, b) in [(p1, n1 + 1, n0), (1.0 - p1, n1, n0 + 1)] {
                if ps <= 0.0 {
                    continue;
                }
                let pc = post(c, a, b);
                cont += if pc >= c.pbar {
                    ps * pc * c.v
                } else {
                    ps * delta * w(c, a, b, delta, m, left - 1, false, memo)
                };
            }
        }
        let out = if root {
            cont
        } else if left == 0 {
            m
        } else {
            cont.max(m)
        };
        if !root {
            memo.insert((n1, n0), out);
        }
        out
    }
    w(c, n1, n0, delta, m, depth, true, &mut HashMap::new())
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Index of a non-acceptable state: the retirement value at which one more
/// evaluation and retiring break even.
pub fn index_general(c: &CategoryParams, n1: u32, n0: u32, delta: f64, depth: u32) -> f64 {
    let p = post(c, n1, n0);
    if p >= c.pbar {
        return p * c.v;
    }
    bisect(0.0, c.v, |m| continuation(c, n1, n0, delta, m, depth) - m)
}

/// Search index: the retirement value equal to the value of searching once
/// and then continuing optimally with the arrival.
pub fn search_index(s: &Scenario, depth: u32) -> f64 {
    let vmax = s.cat_a.v.max(s.cat_b.v);
    bisect(0.0, vmax, |m| {
        let mut total = (1.0 - s.mu_total()) * m;
        for c in Category::ALL {
            let cat = s.cat(c);
            total += s.mu(c) * m.max(continuation(cat, 0, 0, s.delta, m, depth));
        }
        s.delta * total - m
    })
}

/// Hiring probability of A for the eight reference scenarios, from the
/// evaluation orders the conditions imply.
pub fn golden_gamma_a(id: CaseId, after: bool) -> f64 {
    let c = case(id);
    let s = if after { &c.after } else { &c.before };
    let (a, b) = (&s.cat_a, &s.cat_b);
    let (la, lb, lb0) = (lam(a, 0), lam(b, 0), lam(b, 1));
    let (ma, mb) = (s.mu_a, s.mu_b);
    match (id, after) {
        // A first, then B; without search A is evaluated until it succeeds
        (CaseId::P1, false) => la + (1.0 - la) * (1.0 - lb) * post(a, 0, 1),
        (CaseId::P1, true) => la + (1.0 - la) * (1.0 - lb) * ma * la / (ma * la + mb * lb),
        // B first; without search B retires after one failure and A after one
        (CaseId::P2, false) | (CaseId::P4, false) => {
            (1.0 - lb) * (la + (1.0 - la) * ma * la / (ma * la + mb * lb))
        }
        // B gets a second evaluation, after A
        (CaseId::P2, true) | (CaseId::P4, true) => {
            let gs = ma * la / (ma * la + mb * (lb + (1.0 - lb) * lb0));
            (1.0 - lb) * (la + (1.0 - la) * (1.0 - lb0) * gs)
        }
        // B's blank succeeds for sure when qualified
        (CaseId::P3, false) => (1.0 - lb) * a.p0,
        (CaseId::P3, true) => (1.0 - lb) * (la + (1.0 - la) * ma * la / (ma * la + mb * lb)),
    }
}

/// Every (case, side) pair of the reference set.
pub fn golden_pairs() -> Vec<(CaseId, bool, Scenario)> {
    builtin_cases()
        .into_iter()
        .flat_map(|c| [(c.id, false, c.before.clone()), (c.id, true, c.after.clone())])
        .collect()
}

/// Simulates one trajectory and replays it through `apply`, checking that
/// decisions are reproducible, retired candidates are never evaluated,
/// search only happens once every pool candidate is retired, and a hire is
/// reported exactly when the evaluated candidate becomes acceptable.
pub fn check_trajectory(rec: &Recruiter, s: &Scenario, seed: u64, horizon: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps: Vec<TraceStep> = Vec::new();
    let end = run_trajectory(rec, s, &s.initial_pool, &mut rng, horizon, |st| steps.push(st.clone()))
        .map_err(|e| e.to_string())?;
    let acceptable = |c: &CandidateState| is_acceptable(s.cat(c.category), c.n1, c.n0).unwrap();
    let mut pool = PoolState::initial(s);
    for (k, st) in steps.iter().enumerate() {
        let fail = |what: &str| Err(format!("step {k}: {what}"));
        if rec.decide(&pool.candidates).map_err(|e| e.to_string())? != st.decision {
            return fail("decision not reproducible");
        }
        if st.decision.retire.iter().any(|&i| pool.candidates[i].retired) {
            return fail("retired twice");
        }
        pool.commit(&st.decision);
        if pool.candidates.iter().any(acceptable) {
            return fail("acceptable candidate left in the pool");
        }
        let draw = match st.kind {
            StepKind::Signal(x) => Draw::Signal(x),
            StepKind::Hired(..) => Draw::Signal(Signal::One),
            StepKind::Arrival(c) => Draw::Arrival(Some(c)),
            StepKind::NoArrival => Draw::Arrival(None),
        };
        match st.decision.action {
            Action::Evaluate(i) if pool.candidates[i].retired => return fail("evaluated a retired candidate"),
            Action::Search if pool.candidates.iter().any(|c| !c.retired) => {
                return fail("searched with a live candidate")
            }
            _ => {}
        }
        let out = apply(&pool, st.decision.action, draw, s).map_err(|e| e.to_string())?;
        if out.kind != st.kind {
            return fail("replay disagrees");
        }
        if let Action::Evaluate(i) = st.decision.action {
            let hired = matches!(out.kind, StepKind::Hired(c, j) if c == out.next.candidates[i].category && j == i);
            if hired != acceptable(&out.next.candidates[i]) || hired != out.next.terminated.is_some() {
                return fail("hire flag disagrees with acceptability");
            }
        }
        pool = out.next;
    }
    if end.periods as usize != steps.len() || end.hire.is_some() != pool.terminated.is_some() {
        return Err("trajectory summary disagrees with its steps".into());
    }
    Ok(())
}
